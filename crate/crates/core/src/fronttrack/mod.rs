//! General 2D minimal-solution solver by Lagrangian marker tracking of the
//! cascade front.
//!
//! Markers carry position and normal speed and obey
//!
//! dx/dt = V n,   dV/dt = -V ( (1 + u(x)) + H (V + γ) ),
//!
//! the acceleration form of the arrival-time equation. Markers arrest when
//! V falls to the floor, collide when they enter territory already swept
//! by another front, and either way their remaining boundary energy
//! (V + γ) · length is locked into the ledger. The swept cells receive the
//! first-touch time, which assembles the arrival field w; cells never
//! swept keep the +∞ sentinel.

mod chain;

pub use chain::{Marker, MarkerLoop};

use crate::domain::{
    contour_chains, rasterize, Grid2, RegionMask, ScalarField2, ScenarioSpec, INF,
};
use crate::{Error, Result};

/// Grid sampling of the arrival time w (+∞ where never swept).
#[derive(Clone, Debug)]
pub struct ArrivalField {
    pub w: ScalarField2,
    /// Physical time at which the run ended (cap T or arrest of the last
    /// marker).
    pub cap: f64,
}

impl ArrivalField {
    /// Sublevel aggregate D_t = {w <= t} as a mask.
    pub fn sublevel(&self, t: f64) -> RegionMask {
        RegionMask {
            grid: self.w.grid.clone(),
            inside: self.w.values.iter().map(|v| *v <= t).collect(),
        }
    }

    /// The post-jump aggregate {w < ∞}.
    pub fn finite_set(&self) -> RegionMask {
        RegionMask {
            grid: self.w.grid.clone(),
            inside: self.w.values.iter().map(|v| v.is_finite()).collect(),
        }
    }

    /// Lattice total variation of w ∧ T: Σ |Δw| · h over both axes.
    pub fn total_variation(&self, cap: f64) -> f64 {
        let g = &self.w.grid;
        let mut tv = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = self.w.get(i, j).min(cap);
                if i + 1 < g.nx {
                    tv += (self.w.get(i + 1, j).min(cap) - c).abs();
                }
                if j + 1 < g.ny {
                    tv += (self.w.get(i, j + 1).min(cap) - c).abs();
                }
            }
        }
        tv * g.h
    }
}

/// One energy-locking event (arrest, collision, or loop close-out).
#[derive(Clone, Debug)]
pub struct LockEvent {
    pub t: f64,
    pub pos: [f64; 2],
    pub energy: f64,
}

/// Time series of the boundary-energy balance
/// B(0) = B(t) + ∫_swept (1+u) + locked + E(t).
#[derive(Clone, Debug, Default)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub boundary_energy: Vec<f64>,
    pub volumetric: Vec<f64>,
    /// Cumulative excess E(t) = B(0) - B(t) - volumetric(t).
    pub excess: Vec<f64>,
    pub locked: Vec<f64>,
    pub lock_events: Vec<LockEvent>,
    pub b0: f64,
}

impl EnergyLedger {
    fn record(&mut self, t: f64, b: f64, vol: f64, locked: f64) {
        self.times.push(t);
        self.boundary_energy.push(b);
        self.volumetric.push(vol);
        self.excess.push(self.b0 - b - vol);
        self.locked.push(locked);
    }

    pub fn final_excess(&self) -> f64 {
        self.excess.last().copied().unwrap_or(0.0)
    }

    /// Worst violation of B(0) = B + vol + locked, relative to B(0).
    pub fn balance_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.times.len() {
            let lhs = self.b0
                - self.boundary_energy[k]
                - self.volumetric[k]
                - self.locked[k];
            worst = worst.max(lhs.abs() / self.b0.max(1e-300));
        }
        worst
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "b0": self.b0,
            "t": self.times,
            "boundary_energy": self.boundary_energy,
            "volumetric": self.volumetric,
            "excess": self.excess,
            "locked": self.locked,
            "lock_events": self.lock_events.iter().map(|e| {
                serde_json::json!({"t": e.t, "x": e.pos[0], "y": e.pos[1], "energy": e.energy})
            }).collect::<Vec<_>>(),
        })
    }
}

/// The evolving front state.
pub struct Front {
    pub loops: Vec<MarkerLoop>,
    pub t: f64,
    pub w: ScalarField2,
    pub initial_mask: RegionMask,
    pub volumetric: f64,
    pub locked: f64,
    pub lock_events: Vec<LockEvent>,
    pub b0: f64,
    gamma: f64,
    v_floor: f64,
}

const CFL: f64 = 0.4;
const SEED_SPACING: f64 = 1.5;
const RESAMPLE_LO: f64 = 0.75;
const RESAMPLE_HI: f64 = 3.0;
const COLLIDE_RADIUS: f64 = 1.2;
const SELF_COLLIDE_GAP: usize = 6;

/// Marker spacing target: 1.5h generally, refined on small closed loops
/// so the ring stays a good polygon while it collapses.
fn target_spacing(lp: &MarkerLoop, h: f64) -> f64 {
    let base = SEED_SPACING * h;
    if lp.closed {
        base.min(lp.total_length() / 32.0).max(0.05 * h)
    } else {
        base
    }
}

/// Ghost-kernel width for the evolving chain: light smoothing, capped by
/// the loop size so small loops keep their curvature.
fn evolve_sigma(lp: &MarkerLoop, h: f64) -> f64 {
    let len = lp.total_length();
    let frac = if lp.closed { len / 24.0 } else { len / 8.0 };
    frac.clamp(1.2 * h, 3.0 * h)
}

/// Heavier kernel used once at seeding, to scrub the O(h) jitter of the
/// reconstructed interface before it enters the dynamics.
fn seed_sigma(lp: &MarkerLoop, h: f64) -> f64 {
    let len = lp.total_length();
    let frac = if lp.closed { len / 16.0 } else { len / 8.0 };
    frac.clamp(1.2 * h, 12.0 * h)
}

/// Seed markers on the reconstructed interface of the initial region.
pub fn initialize_front(spec: &ScenarioSpec, grid: &Grid2, eps: f64) -> Result<Front> {
    spec.validate()?;
    if !(eps > 0.0) {
        return Err(Error::OpenConstraint);
    }
    let mask = rasterize(&spec.initial_region, grid)?;
    let chains = contour_chains(&mask);
    if chains.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut loops = Vec::with_capacity(chains.len());
    for c in &chains {
        let pts = c.resample(SEED_SPACING * grid.h);
        if pts.len() < 2 {
            continue;
        }
        let markers = pts.into_iter().map(|p| Marker::new(p, 0.0)).collect();
        let mut lp = MarkerLoop { markers, closed: c.closed };
        // scrub reconstruction jitter; the Gaussian pulls a curved chain
        // inward by σ²H/2, which the normal push-back restores
        let sigma = seed_sigma(&lp, grid.h);
        let ghost = lp.ghost(sigma);
        for (m, p) in lp.markers.iter_mut().zip(ghost) {
            m.pos = p;
        }
        let (normals, hs) = lp.geometry(sigma);
        for (i, m) in lp.markers.iter_mut().enumerate() {
            let push = 0.5 * sigma * sigma * hs[i];
            m.pos[0] += push * normals[i][0];
            m.pos[1] += push * normals[i][1];
            m.v = spec.v0_at(m.pos) + eps;
        }
        if !lp.closed {
            // open chains end on the outermost cell-centre rows; extend
            // them to the box faces so boundary energy and swept volume
            // measure the same transect
            extend_chain_to_box(&mut lp, grid);
        }
        let hs = lp.curvatures(evolve_sigma(&lp, grid.h));
        for (m, h) in lp.markers.iter_mut().zip(hs) {
            m.curvature = h;
        }
        loops.push(lp);
    }
    if loops.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut w = ScalarField2::constant(grid.clone(), INF);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if mask.get(i, j) {
                w.set(i, j, 0.0);
            }
        }
    }
    let gamma = spec.gamma;
    let b0 = loops
        .iter()
        .map(|lp| {
            (0..lp.len())
                .filter(|&i| lp.markers[i].alive)
                .map(|i| (lp.markers[i].v + gamma) * lp.weight(i))
                .sum::<f64>()
        })
        .sum();
    let v_floor = 1e-4 * (spec.v0.max() + eps);
    Ok(Front {
        loops,
        t: 0.0,
        w,
        initial_mask: mask,
        volumetric: 0.0,
        locked: 0.0,
        lock_events: Vec::new(),
        b0,
        gamma,
        v_floor,
    })
}

/// Stretch the two end markers of an open chain along the end tangents
/// until they reach the box boundary (kept a hair inside it).
fn extend_chain_to_box(lp: &mut MarkerLoop, grid: &Grid2) {
    if lp.len() < 2 {
        return;
    }
    let lo = [grid.origin[0], grid.origin[1]];
    let hi = [
        grid.origin[0] + grid.nx as f64 * grid.h,
        grid.origin[1] + grid.ny as f64 * grid.h,
    ];
    let margin = 1e-9 * grid.h;
    let mut stretch = |end: usize, inner: usize, lp: &mut MarkerLoop| {
        let p = lp.markers[end].pos;
        let q = lp.markers[inner].pos;
        let t = [p[0] - q[0], p[1] - q[1]];
        let norm = (t[0] * t[0] + t[1] * t[1]).sqrt();
        if norm < 1e-30 {
            return;
        }
        let t = [t[0] / norm, t[1] / norm];
        // smallest positive s with p + s t on a box face
        let mut s = f64::INFINITY;
        for axis in 0..2 {
            if t[axis] > 1e-12 {
                s = s.min((hi[axis] - margin - p[axis]) / t[axis]);
            } else if t[axis] < -1e-12 {
                s = s.min((lo[axis] + margin - p[axis]) / t[axis]);
            }
        }
        if s.is_finite() && s > 0.0 {
            let m = &mut lp.markers[end];
            m.pos = [p[0] + s * t[0], p[1] + s * t[1]];
        }
    };
    let last = lp.len() - 1;
    stretch(0, 1, lp);
    stretch(last, last - 1, lp);
}

struct Forces {
    dx: Vec<Vec<[f64; 2]>>,
    dv: Vec<Vec<f64>>,
    curvature: Vec<Vec<f64>>,
}

fn forces(loops: &[MarkerLoop], spec: &ScenarioSpec, gamma: f64, h: f64) -> Forces {
    let mut dx = Vec::with_capacity(loops.len());
    let mut dv = Vec::with_capacity(loops.len());
    let mut curvature = Vec::with_capacity(loops.len());
    for lp in loops {
        let (normals, hs) = lp.geometry(evolve_sigma(lp, h));
        let mut lx = Vec::with_capacity(lp.len());
        let mut lv = Vec::with_capacity(lp.len());
        for i in 0..lp.len() {
            let m = &lp.markers[i];
            if !m.alive {
                lx.push([0.0, 0.0]);
                lv.push(0.0);
                continue;
            }
            let n = normals[i];
            let u = spec.u.eval(m.pos);
            lx.push([m.v * n[0], m.v * n[1]]);
            lv.push(-m.v * ((1.0 + u) + hs[i] * (m.v + gamma)));
        }
        dx.push(lx);
        dv.push(lv);
        curvature.push(hs);
    }
    Forces { dx, dv, curvature }
}

impl Front {
    pub fn alive_count(&self) -> usize {
        self.loops.iter().map(|l| l.alive_count()).sum()
    }

    pub fn boundary_energy(&self) -> f64 {
        self.loops
            .iter()
            .map(|lp| {
                (0..lp.len())
                    .filter(|&i| lp.markers[i].alive)
                    .map(|i| (lp.markers[i].v + self.gamma) * lp.weight(i))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Stability bound for the explicit step: transport CFL, the
    /// speed-equation rate, and the transverse front-wave speed
    /// c = sqrt(V (V + γ)) resolved at marker spacing.
    pub fn cfl_bound(&self, spec: &ScenarioSpec) -> f64 {
        let h = self.w.grid.h;
        let mut vmax = 0.0f64;
        let mut rate = 0.0f64;
        for lp in &self.loops {
            for m in &lp.markers {
                if !m.alive {
                    continue;
                }
                vmax = vmax.max(m.v);
                let u = spec.u.eval(m.pos);
                rate = rate.max(((1.0 + u) + m.curvature * (m.v + self.gamma)).abs());
            }
        }
        if vmax == 0.0 && rate == 0.0 {
            return INF;
        }
        let transport = if vmax > 0.0 { h / vmax } else { INF };
        let stiffness = if rate > 0.0 { 1.0 / rate } else { INF };
        let cwave = (vmax * (vmax + self.gamma)).sqrt();
        let wave = if cwave > 0.0 { SEED_SPACING * h / cwave } else { INF };
        CFL * transport.min(stiffness).min(wave)
    }

    fn lock_marker(&mut self, li: usize, i: usize, t: f64, arrest: bool) {
        let weight = self.loops[li].weight(i);
        let m = &mut self.loops[li].markers[i];
        if !m.alive {
            return;
        }
        m.alive = false;
        if arrest {
            m.arrest_time = Some(t);
        }
        let energy = (m.v + self.gamma) * weight;
        self.locked += energy;
        self.lock_events.push(LockEvent { t, pos: m.pos, energy });
    }

    fn stamp_cell(&mut self, i: usize, j: usize, time: f64, u_spec: &ScenarioSpec) {
        let k = self.w.grid.idx(i, j);
        if self.w.values[k].is_finite() {
            return;
        }
        self.w.values[k] = time;
        let h = self.w.grid.h;
        let c = self.w.grid.center(i, j);
        self.volumetric += (1.0 + u_spec.u.eval(c)) * h * h;
    }

    /// Advance by one explicit Heun step. `dt` must respect
    /// [`Front::cfl_bound`].
    pub fn step(&mut self, spec: &ScenarioSpec, dt: f64) -> Result<()> {
        let bound = self.cfl_bound(spec);
        if dt > bound * (1.0 + 1e-9) {
            return Err(Error::CflViolation { dt, bound });
        }
        let g = self.w.grid.clone();
        let h = g.h;
        let gamma = self.gamma;
        let t_new = self.t + dt;

        // Heun: forces at the current state, then at the Euler predictor
        let f1 = forces(&self.loops, spec, gamma, h);
        let mut predictor = self.loops.clone();
        for (li, lp) in predictor.iter_mut().enumerate() {
            for (i, m) in lp.markers.iter_mut().enumerate() {
                if !m.alive {
                    continue;
                }
                m.pos[0] += dt * f1.dx[li][i][0];
                m.pos[1] += dt * f1.dx[li][i][1];
                m.v = (m.v + dt * f1.dv[li][i]).max(0.0);
            }
        }
        let f2 = forces(&predictor, spec, gamma, h);

        let old_pos: Vec<Vec<[f64; 2]>> = self
            .loops
            .iter()
            .map(|lp| lp.markers.iter().map(|m| m.pos).collect())
            .collect();
        for (li, lp) in self.loops.iter_mut().enumerate() {
            for (i, m) in lp.markers.iter_mut().enumerate() {
                m.curvature = f1.curvature[li][i];
                if !m.alive {
                    continue;
                }
                m.pos[0] += 0.5 * dt * (f1.dx[li][i][0] + f2.dx[li][i][0]);
                m.pos[1] += 0.5 * dt * (f1.dx[li][i][1] + f2.dx[li][i][1]);
                m.v = (m.v + 0.5 * dt * (f1.dv[li][i] + f2.dv[li][i])).max(0.0);
            }
        }

        // light Laplacian repositioning keeps the transverse front waves
        // (the marker law is hyperbolic) from accumulating roughness; the
        // systematic inward pull it exerts on a curved chain,
        // λ |b-a|² H / 8 for a circle, is pushed back out so the smoothing
        // acts on roughness only
        const SMOOTH: f64 = 0.1;
        for lp in &mut self.loops {
            let n = lp.len();
            if n < 3 {
                continue;
            }
            let pos: Vec<[f64; 2]> = lp.markers.iter().map(|m| m.pos).collect();
            let vel: Vec<f64> = lp.markers.iter().map(|m| m.v).collect();
            let alive: Vec<bool> = lp.markers.iter().map(|m| m.alive).collect();
            let (normals, _) = lp.geometry(evolve_sigma(lp, h));
            for i in 0..n {
                if !alive[i] {
                    continue;
                }
                if !lp.closed && (i == 0 || i + 1 == n) {
                    continue;
                }
                let ip = if i == 0 { n - 1 } else { i - 1 };
                let iq = if i + 1 == n { 0 } else { i + 1 };
                let (a, b) = (pos[ip], pos[iq]);
                let chord2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
                let m = &mut lp.markers[i];
                let push = SMOOTH * chord2 * m.curvature / 8.0;
                m.pos[0] += SMOOTH * (0.5 * (a[0] + b[0]) - m.pos[0]) + push * normals[i][0];
                m.pos[1] += SMOOTH * (0.5 * (a[1] + b[1]) - m.pos[1]) + push * normals[i][1];
                // the same roughness damping in the speed channel; this is
                // what drains the transverse wave energy
                if alive[ip] && alive[iq] {
                    m.v += SMOOTH * (0.5 * (vel[ip] + vel[iq]) - m.v);
                }
            }
        }

        // keep boundary-hugging markers inside the box; a marker more than
        // half a cell out means the box genuinely does not contain the
        // dynamics
        let lo = [g.origin[0], g.origin[1]];
        let hi = [
            g.origin[0] + g.nx as f64 * g.h,
            g.origin[1] + g.ny as f64 * g.h,
        ];
        let margin = 1e-6 * h;
        for lp in &mut self.loops {
            for m in &mut lp.markers {
                if !m.alive {
                    continue;
                }
                for a in 0..2 {
                    if m.pos[a] <= lo[a] {
                        if m.pos[a] < lo[a] - 0.5 * h {
                            return Err(Error::DomainExit);
                        }
                        m.pos[a] = lo[a] + margin;
                    } else if m.pos[a] >= hi[a] {
                        if m.pos[a] > hi[a] + 0.5 * h {
                            return Err(Error::DomainExit);
                        }
                        m.pos[a] = hi[a] - margin;
                    }
                }
            }
        }

        // arrests
        for li in 0..self.loops.len() {
            for i in 0..self.loops[li].len() {
                let m = &self.loops[li].markers[i];
                if m.alive && m.v <= self.v_floor {
                    self.lock_marker(li, i, t_new, true);
                }
            }
        }

        // collisions: proximity between different loops or distant arcs of
        // the same loop, plus entry into long-swept cells
        self.detect_collisions(t_new, dt);

        // sweep the quads between old and new edges with first-touch times
        let mut quads: Vec<[[f64; 2]; 4]> = Vec::new();
        for (li, lp) in self.loops.iter().enumerate() {
            let n = lp.len();
            let mseg = if lp.closed { n } else { n - 1 };
            for k in 0..mseg {
                let k2 = (k + 1) % n;
                let a0 = old_pos[li][k];
                let b0 = old_pos[li][k2];
                let a1 = lp.markers[k].pos;
                let b1 = lp.markers[k2].pos;
                let moved = (a1[0] - a0[0]).abs()
                    + (a1[1] - a0[1]).abs()
                    + (b1[0] - b0[0]).abs()
                    + (b1[1] - b0[1]).abs();
                if moved >= 1e-15 {
                    quads.push([a0, b0, b1, a1]);
                }
            }
        }
        for [a0, b0, b1, a1] in quads {
            self.stamp_quad(a0, b0, b1, a1, dt, t_new, spec);
        }

        // close out vanishing loops, stamping their interior
        self.close_tiny_loops(t_new, spec);

        // keep marker spacing near the target (1.5h, finer on tiny loops
        // so a shrinking ring never degenerates to a coarse polygon)
        for lp in &mut self.loops {
            if lp.alive_count() == 0 {
                continue;
            }
            let target = target_spacing(lp, h);
            let (lo, hi) = lp.spacing_range();
            if hi > (RESAMPLE_HI / SEED_SPACING) * target || lo < (RESAMPLE_LO / SEED_SPACING) * target
            {
                lp.resample_alive_runs(target);
            }
        }

        self.t = t_new;
        Ok(())
    }

    fn stamp_quad(
        &mut self,
        a0: [f64; 2],
        b0: [f64; 2],
        b1: [f64; 2],
        a1: [f64; 2],
        dt: f64,
        t_new: f64,
        spec: &ScenarioSpec,
    ) {
        let g = self.w.grid.clone();
        let h = g.h;
        let xmin = a0[0].min(b0[0]).min(b1[0]).min(a1[0]) - 1e-12;
        let xmax = a0[0].max(b0[0]).max(b1[0]).max(a1[0]) + 1e-12;
        let ymin = a0[1].min(b0[1]).min(b1[1]).min(a1[1]) - 1e-12;
        let ymax = a0[1].max(b0[1]).max(b1[1]).max(a1[1]) + 1e-12;
        let i_lo = (((xmin - g.origin[0]) / h - 0.5).ceil().max(0.0)) as usize;
        let i_hi = (((xmax - g.origin[0]) / h - 0.5).floor()).min(g.nx as f64 - 1.0);
        let j_lo = (((ymin - g.origin[1]) / h - 0.5).ceil().max(0.0)) as usize;
        let j_hi = (((ymax - g.origin[1]) / h - 0.5).floor()).min(g.ny as f64 - 1.0);
        if i_hi < 0.0 || j_hi < 0.0 {
            return;
        }
        let (i_hi, j_hi) = (i_hi as usize, j_hi as usize);
        let mid0 = [0.5 * (a0[0] + b0[0]), 0.5 * (a0[1] + b0[1])];
        let mid1 = [0.5 * (a1[0] + b1[0]), 0.5 * (a1[1] + b1[1])];
        let d = [mid1[0] - mid0[0], mid1[1] - mid0[1]];
        let d2 = d[0] * d[0] + d[1] * d[1];
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let c = g.center(i, j);
                if in_tri(c, a0, b0, b1) || in_tri(c, a0, b1, a1) {
                    // first-touch time interpolated across the step band
                    let frac = if d2 > 1e-30 {
                        (((c[0] - mid0[0]) * d[0] + (c[1] - mid0[1]) * d[1]) / d2)
                            .clamp(0.0, 1.0)
                    } else {
                        1.0
                    };
                    self.stamp_cell(i, j, t_new - dt + frac * dt, spec);
                }
            }
        }
    }

    fn detect_collisions(&mut self, t_new: f64, dt: f64) {
        let h = self.w.grid.h;
        let radius = COLLIDE_RADIUS * h;
        // spatial hash over all markers
        let cell = 2.0 * h;
        let mut hash: std::collections::HashMap<(i64, i64), Vec<(usize, usize)>> =
            std::collections::HashMap::new();
        for (li, lp) in self.loops.iter().enumerate() {
            for (i, m) in lp.markers.iter().enumerate() {
                let key = ((m.pos[0] / cell).floor() as i64, (m.pos[1] / cell).floor() as i64);
                hash.entry(key).or_default().push((li, i));
            }
        }
        let mut to_kill: Vec<(usize, usize)> = Vec::new();
        for (li, lp) in self.loops.iter().enumerate() {
            let n = lp.len();
            for (i, m) in lp.markers.iter().enumerate() {
                if !m.alive {
                    continue;
                }
                let key = ((m.pos[0] / cell).floor() as i64, (m.pos[1] / cell).floor() as i64);
                'search: for dj in -1..=1 {
                    for di in -1..=1 {
                        let Some(bucket) = hash.get(&(key.0 + di, key.1 + dj)) else {
                            continue;
                        };
                        for &(lj, k) in bucket {
                            if lj == li {
                                let gap = {
                                    let raw = if i > k { i - k } else { k - i };
                                    if lp.closed {
                                        raw.min(n - raw)
                                    } else {
                                        raw
                                    }
                                };
                                if gap <= SELF_COLLIDE_GAP {
                                    continue;
                                }
                            }
                            let q = self.loops[lj].markers[k].pos;
                            let dist = ((m.pos[0] - q[0]).powi(2) + (m.pos[1] - q[1]).powi(2))
                                .sqrt();
                            if dist < radius {
                                to_kill.push((li, i));
                                if self.loops[lj].markers[k].alive {
                                    to_kill.push((lj, k));
                                }
                                break 'search;
                            }
                        }
                    }
                }
                // entering territory swept well before this marker could
                // have swept it itself means another front owns it; the
                // own-wake age scale is the cell-crossing time h/V
                if let Some((ci, cj)) = self.w.grid.locate(m.pos) {
                    let wv = self.w.get(ci, cj);
                    let own_wake = (3.0 * h / m.v.max(1e-12)).max(5.0 * dt);
                    if wv.is_finite() && wv < t_new - own_wake {
                        to_kill.push((li, i));
                    }
                }
            }
        }
        for (li, i) in to_kill {
            self.lock_marker(li, i, t_new, false);
        }
    }

    fn close_tiny_loops(&mut self, t_new: f64, spec: &ScenarioSpec) {
        let h = self.w.grid.h;
        for li in 0..self.loops.len() {
            let lp = &self.loops[li];
            if !lp.closed || lp.alive_count() == 0 {
                continue;
            }
            let (mut xmin, mut xmax) = (INF, -INF);
            let (mut ymin, mut ymax) = (INF, -INF);
            for m in &lp.markers {
                xmin = xmin.min(m.pos[0]);
                xmax = xmax.max(m.pos[0]);
                ymin = ymin.min(m.pos[1]);
                ymax = ymax.max(m.pos[1]);
            }
            let diag = ((xmax - xmin).powi(2) + (ymax - ymin).powi(2)).sqrt();
            if lp.alive_count() > 4 && diag > 8.0 * h {
                continue;
            }
            // stamp the remaining interior and lock every marker
            let poly: Vec<[f64; 2]> = lp.markers.iter().map(|m| m.pos).collect();
            let g = self.w.grid.clone();
            let i_lo = (((xmin - g.origin[0]) / h - 1.5).floor().max(0.0)) as usize;
            let i_hi = ((((xmax - g.origin[0]) / h + 0.5).ceil()).min(g.nx as f64 - 1.0)) as usize;
            let j_lo = (((ymin - g.origin[1]) / h - 1.5).floor().max(0.0)) as usize;
            let j_hi = ((((ymax - g.origin[1]) / h + 0.5).ceil()).min(g.ny as f64 - 1.0)) as usize;
            for j in j_lo..=j_hi {
                for i in i_lo..=i_hi {
                    let c = g.center(i, j);
                    if point_in_polygon(c, &poly) {
                        self.stamp_cell(i, j, t_new, spec);
                    }
                }
            }
            for i in 0..self.loops[li].len() {
                self.lock_marker(li, i, t_new, false);
            }
        }
    }
}

fn in_tri(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    let s = |p1: [f64; 2], p2: [f64; 2], p3: [f64; 2]| {
        (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p2[1] - p1[1]) * (p3[0] - p1[0])
    };
    let d1 = s(p, a, b);
    let d2 = s(p, b, c);
    let d3 = s(p, c, a);
    let tol = 1e-14;
    let neg = d1 < -tol || d2 < -tol || d3 < -tol;
    let pos = d1 > tol || d2 > tol || d3 > tol;
    !(neg && pos)
}

fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// D_t snapshot.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub mask: RegionMask,
}

/// Output of a full front-tracking run.
pub struct RunResult {
    pub field: ArrivalField,
    pub ledger: EnergyLedger,
    pub snapshots: Vec<Snapshot>,
    pub initial_mask: RegionMask,
    /// True when every marker arrested or merged before the cap.
    pub completed: bool,
    pub eps: f64,
}

const MAX_STEPS: usize = 2_000_000;

/// Integrate until every marker is dead or t reaches the cap.
pub fn run(spec: &ScenarioSpec, grid: &Grid2, eps: f64) -> Result<RunResult> {
    let cap = spec.cap.unwrap_or(INF);
    let mut front = initialize_front(spec, grid, eps)?;
    let mut ledger = EnergyLedger { b0: front.b0, ..Default::default() };
    ledger.record(0.0, front.b0, 0.0, 0.0);

    let mut completed = false;
    if cap > 0.0 {
        for step_count in 0..=MAX_STEPS {
            if step_count == MAX_STEPS {
                return Err(Error::InconsistentField("step budget exceeded".into()));
            }
            if front.alive_count() == 0 {
                completed = true;
                break;
            }
            if front.t >= cap {
                break;
            }
            let mut dt = front.cfl_bound(spec);
            if !dt.is_finite() {
                completed = true;
                break;
            }
            if cap.is_finite() {
                dt = dt.min(cap - front.t);
            }
            front.step(spec, dt)?;
            ledger.record(front.t, front.boundary_energy(), front.volumetric, front.locked);
        }
    } else {
        completed = front.alive_count() == 0;
    }
    ledger.lock_events = front.lock_events.clone();

    let t_end = if cap.is_finite() { cap.min(front.t.max(0.0)) } else { front.t };
    let field = ArrivalField { w: front.w.clone(), cap: t_end };
    let snapshots = (1..=10)
        .map(|k| {
            let t = t_end * k as f64 / 10.0;
            Snapshot { t, mask: field.sublevel(t) }
        })
        .collect();
    Ok(RunResult {
        field,
        ledger,
        snapshots,
        initial_mask: front.initial_mask,
        completed,
        eps,
    })
}

/// ε-continuation: run over a decreasing ladder and report the cell-sum L¹
/// distances between consecutive capped fields.
pub struct ContinuationResult {
    pub runs: Vec<RunResult>,
    pub distances: Vec<f64>,
    pub cauchy: bool,
}

pub fn continuation_run(
    spec: &ScenarioSpec,
    grid: &Grid2,
    eps_ladder: &[f64],
) -> Result<ContinuationResult> {
    if eps_ladder.is_empty() {
        return Err(Error::InvalidScenario("empty eps ladder".into()));
    }
    // independent runs, one thread each
    let runs: Vec<Result<RunResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = eps_ladder
            .iter()
            .map(|&eps| scope.spawn(move || run(spec, grid, eps)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("run panicked")).collect()
    });
    let mut results = Vec::with_capacity(runs.len());
    for r in runs {
        results.push(r?);
    }
    let cap = spec
        .cap
        .unwrap_or_else(|| results.iter().map(|r| r.field.cap).fold(0.0, f64::max));
    let mut distances = Vec::new();
    for k in 1..results.len() {
        distances.push(results[k - 1].field.w.l1_distance(&results[k].field.w, cap));
    }
    let cauchy = distances.windows(2).all(|w| w[1] <= 1.5 * w[0] + 1e-12);
    Ok(ContinuationResult { runs: results, distances, cauchy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{RegionSpec, SpeedSpec, Supercooling};

    fn uconst(v: f64) -> Supercooling {
        Supercooling::Constant { value: v }
    }

    fn disk_spec(u: f64, v0: f64) -> ScenarioSpec {
        ScenarioSpec {
            gamma: 1.0,
            dimension: 2,
            u: uconst(u),
            initial_region: RegionSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 },
            v0: SpeedSpec::Constant { value: v0 },
            cap: None,
        }
    }

    fn strip_spec(u: f64, v0: f64) -> ScenarioSpec {
        ScenarioSpec {
            gamma: 1.0,
            dimension: 2,
            u: uconst(u),
            initial_region: RegionSpec::HalfLine { threshold: 0.0 },
            v0: SpeedSpec::Constant { value: v0 },
            cap: None,
        }
    }

    #[test]
    fn init_disk_markers() {
        let g = Grid2::covering([-1.3, -1.3, 1.3, 1.3], 0.01).unwrap();
        let f = initialize_front(&disk_spec(-1.0, 1.0), &g, 1e-3).unwrap();
        assert_eq!(f.loops.len(), 1);
        let lp = &f.loops[0];
        assert!(lp.closed);
        assert!(lp.len() > 300 && lp.len() < 1100, "{} markers", lp.len());
        for m in &lp.markers {
            assert!((m.v - 1.001).abs() < 1e-12);
            assert!((m.curvature - 1.0).abs() < 5e-2, "H = {}", m.curvature);
        }
        // B(0) ≈ (V0 + eps + γ) 2π
        let expect = 2.001 * std::f64::consts::TAU;
        assert!((f.b0 - expect).abs() / expect < 0.01, "B0 = {}", f.b0);
    }

    #[test]
    fn init_strip_flat() {
        let g = Grid2::covering([-0.1, 0.0, 1.0, 0.1], 0.005).unwrap();
        let f = initialize_front(&strip_spec(0.0, 1.0), &g, 1e-3).unwrap();
        assert_eq!(f.loops.len(), 1);
        assert!(!f.loops[0].closed);
        for m in &f.loops[0].markers {
            assert!(m.curvature.abs() <= 1e-3, "H = {}", m.curvature);
            assert!(m.pos[0].abs() < 1e-9);
        }
    }

    #[test]
    fn init_requires_interface() {
        let g = Grid2::covering([-1.0, -1.0, 1.0, 1.0], 0.1).unwrap();
        // nothing inside
        let far = ScenarioSpec {
            initial_region: RegionSpec::Ball { center: vec![9.0, 9.0], radius: 0.5 },
            ..disk_spec(0.0, 1.0)
        };
        assert!(initialize_front(&far, &g, 1e-3).is_err());
        // everything inside: no boundary on the grid
        let covered = ScenarioSpec {
            initial_region: RegionSpec::Ball { center: vec![0.0, 0.0], radius: 50.0 },
            ..disk_spec(0.0, 1.0)
        };
        assert!(matches!(
            initialize_front(&covered, &g, 1e-3),
            Err(Error::EmptyBoundary)
        ));
    }

    #[test]
    fn init_rejects_zero_eps() {
        let g = Grid2::covering([-1.3, -1.3, 1.3, 1.3], 0.05).unwrap();
        assert!(matches!(
            initialize_front(&disk_spec(0.0, 1.0), &g, 0.0),
            Err(Error::OpenConstraint)
        ));
    }

    #[test]
    fn flat_front_exact_translation() {
        // u ≡ -1: the V equation has zero right-hand side; positions
        // advance by exactly V dt
        let g = Grid2::covering([-0.05, 0.0, 0.5, 0.06], 0.005).unwrap();
        let spec = strip_spec(-1.0, 1.0);
        let mut f = initialize_front(&spec, &g, 1e-3).unwrap();
        let v = 1.0 + 1e-3;
        let x0: Vec<f64> = f.loops[0].markers.iter().map(|m| m.pos[0]).collect();
        let dt = f.cfl_bound(&spec);
        f.step(&spec, dt).unwrap();
        for (m, x) in f.loops[0].markers.iter().zip(&x0) {
            assert!((m.pos[0] - (x + v * dt)).abs() < 1e-13);
            assert!((m.v - v).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_front_speed_law() {
        // u ≡ 0, V0 = 1: V(x) = V0 + eps - x, arrest at x ≈ 1;
        // reconstructed V within 1e-3 of the law at h = 1e-3
        let h = 1e-3;
        let eps = 1e-3;
        let g = Grid2::covering([-0.01, 0.0, 1.05, 20.0 * h], h).unwrap();
        let spec = strip_spec(0.0, 1.0);
        let mut f = initialize_front(&spec, &g, eps).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..40000 {
            if f.alive_count() == 0 {
                break;
            }
            let dt = f.cfl_bound(&spec);
            f.step(&spec, dt).unwrap();
            let lp = &f.loops[0];
            let mid = lp.len() / 2;
            if lp.markers[mid].alive {
                let expect = (1.0 + eps - lp.markers[mid].pos[0]).max(0.0);
                worst = worst.max((lp.markers[mid].v - expect).abs());
            }
        }
        assert_eq!(f.alive_count(), 0, "front should arrest");
        assert!(worst < 1e-3, "speed law defect {worst}");
        // arrest position ≈ 1 + eps
        let lp = &f.loops[0];
        let xa = lp.markers[lp.len() / 2].pos[0];
        assert!((xa - (1.0 + eps)).abs() < 5.0 * h, "arrest at {xa}");
    }

    #[test]
    fn cfl_violation_detected() {
        let g = Grid2::covering([-1.3, -1.3, 1.3, 1.3], 0.05).unwrap();
        let spec = disk_spec(0.0, 1.0);
        let mut f = initialize_front(&spec, &g, 1e-3).unwrap();
        let bound = f.cfl_bound(&spec);
        assert!(matches!(
            f.step(&spec, 10.0 * bound),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn growing_disk_arrests_at_double_radius() {
        // u ≡ -1, γ = V0 = R0 = 1: closed-form arrest radius R* = 2
        let h = 0.01;
        let g = Grid2::covering([-2.2, -2.2, 2.2, 2.2], h).unwrap();
        let spec = disk_spec(-1.0, 1.0);
        let r = run(&spec, &g, 1e-3).unwrap();
        assert!(r.completed);
        let mean_r: f64 = {
            let evs = &r.ledger.lock_events;
            evs.iter()
                .map(|e| (e.pos[0].powi(2) + e.pos[1].powi(2)).sqrt())
                .sum::<f64>()
                / evs.len() as f64
        };
        assert!((mean_r - 2.0).abs() < 0.02, "arrest radius {mean_r}");
        // w at an interior probe ring vs closed form
        let cf = crate::closedform::solve_radial(&spec).unwrap();
        let expect = cf.w(1.5);
        let mut acc = 0.0;
        let mut cnt = 0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.center(i, j);
                let rr = (c[0] * c[0] + c[1] * c[1]).sqrt();
                if (rr - 1.5).abs() < h && r.field.w.get(i, j).is_finite() {
                    acc += r.field.w.get(i, j);
                    cnt += 1;
                }
            }
        }
        let mean_w = acc / cnt as f64;
        assert!(
            (mean_w - expect).abs() / expect < 0.02,
            "w(1.5): {mean_w} vs {expect}"
        );
        // energy balance within 2%
        assert!(r.ledger.balance_defect() < 0.02, "defect {}", r.ledger.balance_defect());
    }

    #[test]
    fn two_interface_strip_lock_in() {
        // u ≡ 0, V0 = 0.6 both sides, γ = 1: locked energy 2.2 per unit
        // width (plus 2 eps from the regularization)
        let h = 2e-3;
        let eps = 2e-3;
        let g = Grid2::covering([-0.05, 0.0, 1.05, 24.0 * h], h).unwrap();
        let spec = ScenarioSpec {
            gamma: 1.0,
            dimension: 2,
            u: uconst(0.0),
            initial_region: RegionSpec::IntervalComplement { a: 0.0, b: 1.0 },
            v0: SpeedSpec::Endpoints { left: 0.6, right: 0.6 },
            cap: None,
        };
        let r = run(&spec, &g, eps).unwrap();
        assert!(r.completed);
        // widths measured from the seeded boundary energy:
        // B0 = (2γ + V0(0) + V0(1) + 2 eps) W
        let width = r.ledger.b0 / (2.0 + 1.2 + 2.0 * eps);
        let excess_per_width = r.ledger.final_excess() / width;
        let expect = 2.2 + 2.0 * eps;
        assert!(
            (excess_per_width - expect).abs() / expect < 0.02,
            "lock-in {excess_per_width} vs {expect}"
        );
        assert!(r.ledger.balance_defect() < 0.02);
        // collision time vs closed form
        let cf = crate::closedform::solve_two_interface(&spec).unwrap();
        let t_end = *r.ledger.times.last().unwrap();
        assert!((t_end - cf.t_star).abs() / cf.t_star < 0.05, "{t_end} vs {}", cf.t_star);
    }

    #[test]
    fn shrinking_disk_vanishes() {
        // u ≡ -1, γ = V0 = R0 = 1: t_vanish = 2 ln 2 - 1,
        // locked energy 2 per radian (4π total)
        let h = 0.01;
        let g = Grid2::covering([-1.2, -1.2, 1.2, 1.2], h).unwrap();
        let spec = ScenarioSpec {
            gamma: 1.0,
            dimension: 2,
            u: uconst(-1.0),
            initial_region: RegionSpec::BallComplement { center: vec![0.0, 0.0], radius: 1.0 },
            v0: SpeedSpec::Constant { value: 1.0 },
            cap: None,
        };
        let eps = 1e-3;
        let r = run(&spec, &g, eps).unwrap();
        assert!(r.completed);
        let t_end = *r.ledger.times.last().unwrap();
        let expect_t = 2.0 * std::f64::consts::LN_2 - 1.0;
        assert!((t_end - expect_t).abs() / expect_t < 0.02, "t_vanish {t_end}");
        let locked_per_radian = r.ledger.final_excess() / std::f64::consts::TAU;
        assert!(
            (locked_per_radian - 2.0).abs() / 2.0 < 0.02,
            "locked {locked_per_radian}"
        );
        assert!(r.ledger.balance_defect() < 0.02);
    }

    #[test]
    fn zero_cap_is_no_motion() {
        let g = Grid2::covering([-1.3, -1.3, 1.3, 1.3], 0.02).unwrap();
        let spec = ScenarioSpec { cap: Some(0.0), ..disk_spec(0.0, 1.0) };
        let r = run(&spec, &g, 1e-2).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let w = r.field.w.get(i, j);
                if r.initial_mask.get(i, j) {
                    assert_eq!(w, 0.0);
                } else {
                    assert!(w.is_infinite());
                }
            }
        }
        assert_eq!(r.ledger.final_excess(), 0.0);
    }

    #[test]
    fn sublevel_sets_nested() {
        let g = Grid2::covering([-2.2, -2.2, 2.2, 2.2], 0.02).unwrap();
        let spec = disk_spec(-1.0, 1.0);
        let r = run(&spec, &g, 1e-2).unwrap();
        for pair in r.snapshots.windows(2) {
            for k in 0..pair[0].mask.inside.len() {
                assert!(!pair[0].mask.inside[k] || pair[1].mask.inside[k]);
            }
        }
    }

    #[test]
    fn continuation_eps_shift_only() {
        // u ≡ -1: eps only shifts V uniformly; capped fields nearly
        // coincide (distance O(eps · T · area))
        let g = Grid2::covering([-1.6, -1.6, 1.6, 1.6], 0.02).unwrap();
        let spec = ScenarioSpec { cap: Some(0.4), ..disk_spec(-1.0, 1.0) };
        let c = continuation_run(&spec, &g, &[3e-2, 1e-2]).unwrap();
        assert!(c.cauchy);
        let area = (
            c.runs[0].field.sublevel(0.4).count_inside() as f64
        ) * 0.02 * 0.02;
        let bound = 5.0 * 3e-2 * 0.4 * area;
        assert!(c.distances[0] <= bound, "{} > {bound}", c.distances[0]);
    }

    #[test]
    fn continuation_zero_speed_shrinks_to_initial() {
        // u ≡ 0, V0 = 0: {w < ∞} collapses to Γ as eps ↓ 0
        let g = Grid2::covering([-0.02, 0.0, 0.3, 0.04], 2e-3).unwrap();
        let spec = strip_spec(0.0, 0.0);
        let c = continuation_run(&spec, &g, &[1e-1, 3e-2, 1e-2]).unwrap();
        let areas: Vec<f64> = c
            .runs
            .iter()
            .map(|r| r.field.finite_set().area() - r.initial_mask.area())
            .collect();
        assert!(areas[0] > areas[1] && areas[1] > areas[2], "{areas:?}");
        // swept strip width ≈ eps
        let w2 = areas[2] / 0.038; // measured band height (ny-1) h
        assert!(w2 < 3.0 * 1e-2, "residual width {w2}");
    }
}
