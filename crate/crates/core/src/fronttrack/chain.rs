//! Marker-chain geometry: tangents, outward normals, curvature, and
//! resampling.
//!
//! Chains are oriented with the solid on the left, so the liquid-facing
//! normal is the tangent rotated by -90°. Curvature is the signed Menger
//! (circumscribed-circle) curvature of a Gaussian-smoothed ghost chain:
//! the raw marker positions inherit O(h) jitter from the sub-cell
//! interface reconstruction, which a three-point estimator would amplify
//! by 1/spacing². Positive curvature decelerates the front (a growing
//! convex solid), negative accelerates it (a shrinking liquid hole).

/// One Lagrangian sample of the front.
#[derive(Clone, Debug)]
pub struct Marker {
    pub pos: [f64; 2],
    /// Normal speed V ≥ 0 (= 1/|∇w| on the front).
    pub v: f64,
    pub curvature: f64,
    pub alive: bool,
    pub arrest_time: Option<f64>,
}

impl Marker {
    pub fn new(pos: [f64; 2], v: f64) -> Self {
        Marker { pos, v, curvature: 0.0, alive: true, arrest_time: None }
    }
}

/// Ordered marker chain; closed chains wrap around.
#[derive(Clone, Debug)]
pub struct MarkerLoop {
    pub markers: Vec<Marker>,
    pub closed: bool,
}

impl MarkerLoop {
    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn alive_count(&self) -> usize {
        self.markers.iter().filter(|m| m.alive).count()
    }

    fn prev_idx(&self, i: usize) -> usize {
        if i == 0 {
            if self.closed {
                self.len() - 1
            } else {
                0
            }
        } else {
            i - 1
        }
    }

    fn next_idx(&self, i: usize) -> usize {
        if i + 1 == self.len() {
            if self.closed {
                0
            } else {
                i
            }
        } else {
            i + 1
        }
    }

    /// Arc weight of marker i: half the distance to each neighbour.
    pub fn weight(&self, i: usize) -> f64 {
        let p = self.markers[i].pos;
        let a = self.markers[self.prev_idx(i)].pos;
        let b = self.markers[self.next_idx(i)].pos;
        let da = ((p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2)).sqrt();
        let db = ((p[0] - b[0]).powi(2) + (p[1] - b[1]).powi(2)).sqrt();
        0.5 * (da + db)
    }

    pub fn total_length(&self) -> f64 {
        let n = self.len();
        let m = if self.closed { n } else { n - 1 };
        (0..m)
            .map(|k| {
                let a = self.markers[k].pos;
                let b = self.markers[(k + 1) % n].pos;
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            })
            .sum()
    }

    /// Gaussian-smoothed copy of the marker positions (arc-length kernel
    /// of width sigma, approximated by index distance).
    pub fn ghost(&self, sigma: f64) -> Vec<[f64; 2]> {
        let n = self.len();
        let spacing = (self.total_length() / n as f64).max(1e-12);
        let reach = ((3.0 * sigma / spacing).ceil() as i64).max(1);
        let weights: Vec<f64> = (-reach..=reach)
            .map(|d| (-0.5 * (d as f64 * spacing / sigma).powi(2)).exp())
            .collect();
        (0..n)
            .map(|i| {
                let mut acc = [0.0, 0.0];
                let mut wsum = 0.0;
                for (kw, d) in (-reach..=reach).enumerate() {
                    let idx = i as i64 + d;
                    let idx = if self.closed {
                        idx.rem_euclid(n as i64) as usize
                    } else if idx < 0 || idx >= n as i64 {
                        continue;
                    } else {
                        idx as usize
                    };
                    let wgt = weights[kw];
                    acc[0] += wgt * self.markers[idx].pos[0];
                    acc[1] += wgt * self.markers[idx].pos[1];
                    wsum += wgt;
                }
                [acc[0] / wsum, acc[1] / wsum]
            })
            .collect()
    }

    /// Liquid-facing unit normal at marker i (tangent rotated by -90°),
    /// from raw neighbour positions.
    pub fn normal(&self, i: usize) -> [f64; 2] {
        let a = self.markers[self.prev_idx(i)].pos;
        let b = self.markers[self.next_idx(i)].pos;
        let t = [b[0] - a[0], b[1] - a[1]];
        let n = (t[0] * t[0] + t[1] * t[1]).sqrt();
        if n < 1e-30 {
            return [0.0, 0.0];
        }
        [t[1] / n, -t[0] / n]
    }

    /// Normals and signed Menger curvatures evaluated on the ghost chain.
    /// Smoothed tangents keep the marker motion free of the grid-scale
    /// zigzag feedback; smoothed triples keep the curvature usable.
    pub fn geometry(&self, sigma: f64) -> (Vec<[f64; 2]>, Vec<f64>) {
        let n = self.len();
        if n < 3 {
            let normals = (0..n).map(|i| self.normal(i)).collect();
            return (normals, vec![0.0; n]);
        }
        let ghost = self.ghost(sigma);
        let mut normals = Vec::with_capacity(n);
        let mut curv = Vec::with_capacity(n);
        for i in 0..n {
            let a = ghost[self.prev_idx(i)];
            let b = ghost[i];
            let c = ghost[self.next_idx(i)];
            let t = [c[0] - a[0], c[1] - a[1]];
            let tn = (t[0] * t[0] + t[1] * t[1]).sqrt();
            normals.push(if tn < 1e-30 {
                self.normal(i)
            } else {
                [t[1] / tn, -t[0] / tn]
            });
            if !self.closed && (i == 0 || i + 1 == n) {
                curv.push(0.0);
            } else {
                // the Gaussian ghost of a circle has radius r - σ²/(2r);
                // invert that bias to leading order
                let m = menger(a, b, c);
                curv.push(m / (1.0 + 0.5 * (sigma * m).powi(2)));
            }
        }
        (normals, curv)
    }

    /// Signed curvature of every marker on the sigma-ghost chain.
    pub fn curvatures(&self, sigma: f64) -> Vec<f64> {
        self.geometry(sigma).1
    }

    /// Rebuild alive runs at roughly `spacing`, keeping dead markers and
    /// run endpoints in place; speeds are interpolated along arc length.
    pub fn resample_alive_runs(&mut self, spacing: f64) {
        let n = self.len();
        if n < 3 {
            return;
        }
        if self.closed && self.alive_count() == n {
            // fully alive ring: uniform resampling of the whole loop
            let pts: Vec<[f64; 2]> = self.markers.iter().map(|m| m.pos).collect();
            let vs: Vec<f64> = self.markers.iter().map(|m| m.v).collect();
            let resampled = resample_ring(&pts, &vs, spacing);
            self.markers = resampled
                .into_iter()
                .map(|(p, v)| Marker::new(p, v))
                .collect();
            return;
        }
        // general case: rebuild each maximal alive run between anchors
        let mut out: Vec<Marker> = Vec::with_capacity(n + 8);
        let start = if self.closed {
            // rotate so index 0 is dead (there is at least one)
            self.markers.iter().position(|m| !m.alive).unwrap_or(0)
        } else {
            0
        };
        let mut k = 0usize;
        while k < n {
            let i = (start + k) % n;
            if !self.markers[i].alive {
                out.push(self.markers[i].clone());
                k += 1;
                continue;
            }
            // collect the alive run [i .. j)
            let mut run = Vec::new();
            while k < n {
                let j = (start + k) % n;
                if !self.markers[j].alive {
                    break;
                }
                run.push(self.markers[j].clone());
                k += 1;
            }
            if run.len() < 3 {
                out.extend(run);
                continue;
            }
            let pts: Vec<[f64; 2]> = run.iter().map(|m| m.pos).collect();
            let vs: Vec<f64> = run.iter().map(|m| m.v).collect();
            for (p, v) in resample_open(&pts, &vs, spacing) {
                out.push(Marker::new(p, v));
            }
        }
        self.markers = out;
    }

    /// Largest and smallest alive-segment spacings.
    pub fn spacing_range(&self) -> (f64, f64) {
        let n = self.len();
        let m = if self.closed { n } else { n - 1 };
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for k in 0..m {
            let a = &self.markers[k];
            let b = &self.markers[(k + 1) % n];
            if !(a.alive && b.alive) {
                continue;
            }
            let d = ((b.pos[0] - a.pos[0]).powi(2) + (b.pos[1] - a.pos[1]).powi(2)).sqrt();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }
}

fn menger(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let bc = [c[0] - b[0], c[1] - b[1]];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let cross = ab[0] * bc[1] - ab[1] * bc[0];
    let d = (ab[0].powi(2) + ab[1].powi(2)).sqrt()
        * (bc[0].powi(2) + bc[1].powi(2)).sqrt()
        * (ac[0].powi(2) + ac[1].powi(2)).sqrt();
    if d < 1e-30 {
        0.0
    } else {
        2.0 * cross / d
    }
}

fn resample_ring(pts: &[[f64; 2]], vs: &[f64], spacing: f64) -> Vec<([f64; 2], f64)> {
    let n = pts.len();
    let mut cum = vec![0.0];
    for k in 0..n {
        let a = pts[k];
        let b = pts[(k + 1) % n];
        cum.push(cum[k] + ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt());
    }
    let total = *cum.last().unwrap();
    let count = ((total / spacing).round() as usize).max(4);
    let step = total / count as f64;
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    for c in 0..count {
        let s = c as f64 * step;
        while k + 1 < cum.len() && cum[k + 1] < s {
            k += 1;
        }
        let seg = cum[k + 1] - cum[k];
        let t = if seg > 0.0 { (s - cum[k]) / seg } else { 0.0 };
        let a = pts[k];
        let b = pts[(k + 1) % n];
        out.push((
            [a[0] * (1.0 - t) + b[0] * t, a[1] * (1.0 - t) + b[1] * t],
            vs[k] * (1.0 - t) + vs[(k + 1) % n] * t,
        ));
    }
    out
}

fn resample_open(pts: &[[f64; 2]], vs: &[f64], spacing: f64) -> Vec<([f64; 2], f64)> {
    let n = pts.len();
    let mut cum = vec![0.0];
    for k in 0..n - 1 {
        let a = pts[k];
        let b = pts[k + 1];
        cum.push(cum[k] + ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt());
    }
    let total = *cum.last().unwrap();
    let count = ((total / spacing).round() as usize).max(1) + 1;
    let step = total / (count - 1) as f64;
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    for c in 0..count {
        let s = (c as f64 * step).min(total);
        while k + 2 < cum.len() && cum[k + 1] < s {
            k += 1;
        }
        let seg = cum[k + 1] - cum[k];
        let t = if seg > 0.0 { ((s - cum[k]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        let a = pts[k];
        let b = pts[k + 1];
        out.push((
            [a[0] * (1.0 - t) + b[0] * t, a[1] * (1.0 - t) + b[1] * t],
            vs[k] * (1.0 - t) + vs[k + 1] * t,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_loop(r: f64, n: usize) -> MarkerLoop {
        // counterclockwise = solid inside on the left
        let markers = (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                Marker::new([r * a.cos(), r * a.sin()], 1.0)
            })
            .collect();
        MarkerLoop { markers, closed: true }
    }

    #[test]
    fn circle_normals_point_outward() {
        let lp = circle_loop(1.0, 64);
        for i in 0..lp.len() {
            let n = lp.normal(i);
            let p = lp.markers[i].pos;
            let dot = n[0] * p[0] + n[1] * p[1];
            assert!(dot > 0.99, "normal not outward: {dot}");
        }
    }

    #[test]
    fn circle_curvature_positive_one_over_r() {
        for r in [0.5, 2.0] {
            let lp = circle_loop(r, 200);
            let hs = lp.curvatures(0.05);
            for h in hs {
                assert!((h - 1.0 / r).abs() < 0.02 / r, "H = {h} vs {}", 1.0 / r);
            }
        }
    }

    #[test]
    fn hole_curvature_negative() {
        // clockwise ring = liquid inside: normals point inward,
        // curvature -1/r
        let mut lp = circle_loop(1.0, 128);
        lp.markers.reverse();
        let hs = lp.curvatures(0.05);
        for h in hs {
            assert!((h + 1.0).abs() < 0.03, "H = {h}");
        }
        let n = lp.normal(0);
        let p = lp.markers[0].pos;
        assert!(n[0] * p[0] + n[1] * p[1] < -0.99);
    }

    #[test]
    fn resample_preserves_length() {
        let mut lp = circle_loop(1.0, 173);
        let before = lp.total_length();
        lp.resample_alive_runs(0.05);
        let after = lp.total_length();
        assert!((before - after).abs() < 0.01 * before);
        let (lo, hi) = lp.spacing_range();
        assert!(lo > 0.03 && hi < 0.07, "spacing range {lo}..{hi}");
    }

    #[test]
    fn resample_keeps_dead_anchors() {
        let mut lp = circle_loop(1.0, 100);
        for i in 40..60 {
            lp.markers[i].alive = false;
        }
        let dead_pos: Vec<[f64; 2]> = (40..60).map(|i| lp.markers[i].pos).collect();
        lp.resample_alive_runs(0.02);
        let still: Vec<&Marker> = lp.markers.iter().filter(|m| !m.alive).collect();
        assert_eq!(still.len(), dead_pos.len());
        for m in still {
            assert!(dead_pos
                .iter()
                .any(|p| (p[0] - m.pos[0]).abs() + (p[1] - m.pos[1]).abs() < 1e-12));
        }
    }
}
