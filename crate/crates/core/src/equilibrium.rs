//! Discrete verification of the mean-field-game equilibrium behind a
//! computed arrival field.
//!
//! A solution w is turned into a weighted particle ensemble: births are
//! placed with density (1+u)⁺ in the swept region, at the energy-lock
//! atoms, and on the cap front; every particle descends the gradient of w
//! at unit speed to the initial region, dying on the way with density
//! (1+u)⁻ or on arrival. The occupation density q of the ensemble must
//! reproduce the cost through
//!
//! L = 1 / (κ q - γ)   on {q > 0},     κ = ∫ (1+u)⁻ + ∫_∂Γ (γ + V0 + ε),
//!
//! and the birth/death imbalance must match the distributional form of
//! the arrival-time equation. All ensemble masses are stored κ-scaled
//! (energy units), so q here is κ·(occupation density).

use crate::domain::{
    boundary_integral, contour_chains, RegionMask, ScalarField2, ScenarioSpec, INF,
};
use crate::eikonal::{CostField, GradientField};
use crate::fronttrack::{ArrivalField, LockEvent};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How the solution terminated, for source bookkeeping.
pub struct SolutionSources<'a> {
    pub lock_events: &'a [LockEvent],
    /// True when the run was stopped at the cap with live boundary left.
    pub capped: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { n_paths: 10_000, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BirthKind {
    /// Born with density (1+u)⁺ inside the swept region.
    Density,
    /// Born at a locked-energy atom (arrest or collision).
    Lock,
    /// Born on the cap front {w = T}.
    Cap,
}

/// Weighted point mass of the birth measure κμ or death measure κν.
#[derive(Clone, Debug)]
pub struct PointMass {
    pub pos: [f64; 2],
    pub mass: f64,
}

/// Discrete equilibrium state built from an arrival field.
pub struct EquilibriumState {
    pub kappa: f64,
    pub gamma: f64,
    pub eps: f64,
    /// κ-scaled occupation density κq on the grid.
    pub q: ScalarField2,
    /// Cost reconstructed from the field: |∇w| on the finite set, -1/γ
    /// outside.
    pub cost: CostField,
    /// Births (κμ), tagged by origin.
    pub mu: Vec<(PointMass, BirthKind)>,
    /// Interior deaths (κν restricted off the initial boundary).
    pub nu_interior: Vec<PointMass>,
    /// Arrival masses binned over the initial boundary, with arc lengths.
    pub pi_bins: Vec<(f64, f64)>,
    /// Total κ-mass of the ensemble.
    pub total_mass: f64,
    /// κ-mass of paths whose descent stalled.
    pub trapped_mass: f64,
    /// Worst relative telescoping error |w(y₀) - ∫ L⁺ ds| / w(y₀) over a
    /// path sample.
    pub telescope_err: f64,
}

const PI_BINS: usize = 32;
const TRAPPED_LIMIT: f64 = 0.05;

/// Build the particle ensemble attached to a computed solution.
pub fn build_from_solution(
    field: &ArrivalField,
    spec: &ScenarioSpec,
    eps: f64,
    sources: &SolutionSources,
    opts: &BuildOptions,
) -> Result<EquilibriumState> {
    if !(eps > 0.0) {
        return Err(Error::OpenConstraint);
    }
    let g = field.w.grid.clone();
    let h = g.h;
    let h2 = h * h;
    let initial = RegionMask {
        grid: g.clone(),
        inside: field.w.values.iter().map(|v| *v == 0.0).collect(),
    };
    if initial.count_inside() == 0 {
        return Err(Error::InconsistentField("field has no initial region".into()));
    }

    // κ = ∫_{0<w<∞} (1+u)⁻ + ∫_∂Γ (γ + V0 + ε)
    let mut neg_mass = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = field.w.get(i, j);
            if w > 0.0 && w.is_finite() {
                neg_mass += (-(1.0 + spec.u.eval(g.center(i, j)))).max(0.0) * h2;
            }
        }
    }
    let kappa = neg_mass
        + boundary_integral(&initial, |p| spec.gamma + spec.v0_at(p) + eps);

    // ---- birth strata, in a fixed deterministic order ----
    enum Stratum {
        Cell(usize, usize),
        Atom([f64; 2]),
        Segment([f64; 2], [f64; 2], [f64; 2]), // a, b, tangent
    }
    let mut strata: Vec<(Stratum, f64, BirthKind)> = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = field.w.get(i, j);
            if w > 0.0 && w.is_finite() {
                let m = (1.0 + spec.u.eval(g.center(i, j))).max(0.0) * h2;
                if m > 0.0 {
                    strata.push((Stratum::Cell(i, j), m, BirthKind::Density));
                }
            }
        }
    }
    for ev in sources.lock_events {
        if ev.energy > 0.0 {
            strata.push((Stratum::Atom(ev.pos), ev.energy, BirthKind::Lock));
        }
    }
    if sources.capped {
        // cap front: the interface of {w <= T} carries (1/|∇w| + γ) dH
        let grad = GradientField::of(&field.w);
        let cap_mask = field.finite_set();
        for chain in contour_chains(&cap_mask) {
            for (k, (mid, len)) in chain.weighted_midpoints().iter().enumerate() {
                // skip pieces lying on the initial boundary
                if let Some((ci, cj)) = g.locate(*mid) {
                    let wv = field.w.get(ci, cj);
                    if wv < 0.5 * field.cap {
                        continue;
                    }
                }
                let speed = match grad.at(*mid) {
                    Some(gv) => {
                        let norm = (gv[0] * gv[0] + gv[1] * gv[1]).sqrt();
                        if norm > 1e-12 {
                            1.0 / norm
                        } else {
                            0.0
                        }
                    }
                    None => 0.0,
                };
                let n = chain.pts.len();
                let a = chain.pts[k];
                let b = chain.pts[(k + 1) % n];
                let t = [b[0] - a[0], b[1] - a[1]];
                strata.push((
                    Stratum::Segment(a, b, t),
                    (speed + spec.gamma) * len,
                    BirthKind::Cap,
                ));
            }
        }
    }
    let total_mass: f64 = strata.iter().map(|(_, m, _)| *m).sum();
    if total_mass <= 0.0 {
        return Err(Error::InconsistentField("no birth mass".into()));
    }

    // ---- systematic resampling: n equal-mass paths ----
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_paths = opts.n_paths.max(16);
    let stride = total_mass / n_paths as f64;
    let jitter: f64 = rng.gen::<f64>();
    let mut births: Vec<([f64; 2], BirthKind)> = Vec::with_capacity(n_paths);
    {
        let mut acc = 0.0;
        let mut k = 0usize;
        for (s, m, kind) in &strata {
            let hi = acc + m;
            while k < n_paths {
                let target = (k as f64 + jitter) * stride;
                if target >= hi {
                    break;
                }
                let frac = (target - acc) / m;
                let pos = match s {
                    Stratum::Cell(i, j) => {
                        let c = g.center(*i, *j);
                        [
                            c[0] + (rng.gen::<f64>() - 0.5) * h,
                            c[1] + (rng.gen::<f64>() - 0.5) * h,
                        ]
                    }
                    Stratum::Atom(p) => *p,
                    Stratum::Segment(a, _b, t) => [a[0] + frac * t[0], a[1] + frac * t[1]],
                };
                births.push((pos, *kind));
                k += 1;
            }
            acc = hi;
        }
    }

    // ---- kill demand per cell: (1+u)⁻ dx ----
    let mut demand = vec![0.0f64; g.ncells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = field.w.get(i, j);
            if w > 0.0 && w.is_finite() {
                demand[g.idx(i, j)] = (-(1.0 + spec.u.eval(g.center(i, j)))).max(0.0) * h2;
            }
        }
    }

    // ---- trace every path, depositing occupation by cloud-in-cell ----
    let grad = GradientField::of(&field.w);
    let boundary_chains = contour_chains(&initial);
    // arc bins over the initial boundary
    let mut bin_len = vec![0.0f64; PI_BINS];
    let mut seg_bins: Vec<([f64; 2], usize)> = Vec::new();
    {
        let total_len: f64 = boundary_chains.iter().map(|c| c.projected_length()).sum();
        let mut acc = 0.0;
        for c in &boundary_chains {
            for (mid, len) in c.weighted_midpoints() {
                let b = (((acc + 0.5 * len) / total_len) * PI_BINS as f64) as usize;
                let b = b.min(PI_BINS - 1);
                seg_bins.push((mid, b));
                bin_len[b] += len;
                acc += len;
            }
        }
    }
    let nearest_bin = |p: [f64; 2]| -> usize {
        let mut best = (INF, 0usize);
        for (mid, b) in &seg_bins {
            let d = (p[0] - mid[0]).powi(2) + (p[1] - mid[1]).powi(2);
            if d < best.0 {
                best = (d, *b);
            }
        }
        best.1
    };

    let mut q = ScalarField2::constant(g.clone(), 0.0);
    let mut mu = Vec::with_capacity(births.len());
    let mut nu_interior: Vec<PointMass> = Vec::new();
    let mut pi_mass = vec![0.0f64; PI_BINS];
    let mut trapped_mass = 0.0;
    let mut telescope_err = 0.0f64;
    let step = 0.5 * h;
    let max_steps = 16 * (g.nx + g.ny);

    let splat = |q: &mut ScalarField2, p: [f64; 2], amount: f64| {
        // cloud-in-cell deposit over the four surrounding centres
        let fx = (p[0] - g.origin[0]) / h - 0.5;
        let fy = (p[1] - g.origin[1]) / h - 0.5;
        let i0 = (fx.floor().max(0.0) as usize).min(g.nx - 2);
        let j0 = (fy.floor().max(0.0) as usize).min(g.ny - 2);
        let tx = (fx - i0 as f64).clamp(0.0, 1.0);
        let ty = (fy - j0 as f64).clamp(0.0, 1.0);
        for (di, dj, wgt) in [
            (0, 0, (1.0 - tx) * (1.0 - ty)),
            (1, 0, tx * (1.0 - ty)),
            (0, 1, (1.0 - tx) * ty),
            (1, 1, tx * ty),
        ] {
            let k = g.idx(i0 + di, j0 + dj);
            q.values[k] += amount * wgt;
        }
    };

    for (start, kind) in &births {
        let mass0 = stride;
        mu.push((PointMass { pos: *start, mass: mass0 }, *kind));
        let mut mass = mass0;
        let mut p = *start;
        let mut cost_acc = 0.0;
        let w_start = bilinear_finite(&field.w, p);
        let mut last_cell = g.locate(p);
        let mut ok = false;
        for step_no in 0..max_steps {
            if let Some((ci, cj)) = g.locate(p) {
                if initial.get(ci, cj) {
                    ok = true;
                    break;
                }
            }
            let dir = match descend_dir(&grad, p, h, step_no == 0) {
                Some(d) => d,
                None => break,
            };
            let mid = [p[0] + 0.5 * step * dir[0], p[1] + 0.5 * step * dir[1]];
            p = [p[0] + step * dir[0], p[1] + step * dir[1]];
            // occupation: unit speed, time spent = arc length
            splat(&mut q, mid, mass * step);
            if let Some(gv) = grad.at(mid) {
                cost_acc += step * (gv[0] * gv[0] + gv[1] * gv[1]).sqrt();
            }
            // interior kills when entering a cell with unmet demand
            let cell = g.locate(p);
            if cell != last_cell {
                if let Some((ci, cj)) = cell {
                    let k = g.idx(ci, cj);
                    if demand[k] > 0.0 && !initial.get(ci, cj) {
                        let kill = demand[k].min(mass);
                        if kill > 0.0 {
                            demand[k] -= kill;
                            mass -= kill;
                            nu_interior.push(PointMass { pos: p, mass: kill });
                            if mass <= 1e-14 * stride {
                                ok = true;
                                break;
                            }
                        }
                    }
                }
                last_cell = cell;
            }
        }
        if ok {
            if mass > 1e-14 * stride {
                pi_mass[nearest_bin(p)] += mass;
            }
            if w_start.is_finite() && w_start > 10.0 * h {
                let rel = (cost_acc - w_start).abs() / w_start;
                telescope_err = telescope_err.max(rel);
            }
        } else {
            trapped_mass += mass;
        }
    }
    // area-normalize the occupation density
    for v in &mut q.values {
        *v /= h2;
    }

    if trapped_mass > TRAPPED_LIMIT * total_mass {
        return Err(Error::InconsistentField(format!(
            "trapped characteristics carry {:.1}% of the ensemble",
            100.0 * trapped_mass / total_mass
        )));
    }

    // cost reconstructed from the field
    let mut cost = ScalarField2::constant(g.clone(), -1.0 / spec.gamma);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            if field.w.values[k].is_finite() && grad.valid[k] {
                let norm = (grad.gx[k].powi(2) + grad.gy[k].powi(2)).sqrt();
                if norm > 0.0 {
                    cost.values[k] = norm;
                }
            }
        }
    }

    Ok(EquilibriumState {
        kappa,
        gamma: spec.gamma,
        eps,
        q,
        cost: CostField { field: cost },
        mu,
        nu_interior,
        pi_bins: bin_len.into_iter().zip(pi_mass).map(|(l, m)| (l, m)).collect(),
        total_mass,
        trapped_mass,
        telescope_err,
    })
}

fn bilinear_finite(w: &ScalarField2, p: [f64; 2]) -> f64 {
    let g = &w.grid;
    let fx = (p[0] - g.origin[0]) / g.h - 0.5;
    let fy = (p[1] - g.origin[1]) / g.h - 0.5;
    let i0 = (fx.floor().max(0.0) as usize).min(g.nx - 2);
    let j0 = (fy.floor().max(0.0) as usize).min(g.ny - 2);
    let tx = (fx - i0 as f64).clamp(0.0, 1.0);
    let ty = (fy - j0 as f64).clamp(0.0, 1.0);
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (di, dj, wgt) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        let v = w.get(i0 + di, j0 + dj);
        if v.is_finite() {
            acc += wgt * v;
            wsum += wgt;
        }
    }
    if wsum > 0.0 {
        acc / wsum
    } else {
        INF
    }
}

/// Descent direction with a ridge nudge: births sitting exactly on a lock
/// ridge see a vanishing interpolated gradient, so the first step probes
/// nearby offsets for the steepest way down.
fn descend_dir(grad: &GradientField, p: [f64; 2], h: f64, allow_probe: bool) -> Option<[f64; 2]> {
    if let Some(gv) = grad.at(p) {
        let norm = (gv[0] * gv[0] + gv[1] * gv[1]).sqrt();
        if norm > 1e-9 {
            return Some([-gv[0] / norm, -gv[1] / norm]);
        }
    }
    if !allow_probe {
        return None;
    }
    let mut best: Option<([f64; 2], f64)> = None;
    for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        let q = [p[0] + 0.5 * h * dx, p[1] + 0.5 * h * dy];
        if let Some(gv) = grad.at(q) {
            let norm = (gv[0] * gv[0] + gv[1] * gv[1]).sqrt();
            if norm > 1e-9 && best.map_or(true, |(_, b)| norm > b) {
                best = Some(([-gv[0] / norm, -gv[1] / norm], norm));
            }
        }
    }
    best.map(|(d, _)| d)
}

/// Worst relative defect of L = 1/(κq - γ) over cells safely inside the
/// occupied set (κq > γ(1 + 0.05)), normalized by |L| + 1.
pub fn fixed_point_residual(state: &EquilibriumState) -> f64 {
    let g = &state.q.grid;
    let margin = state.gamma * 1.05;
    let mut worst = 0.0f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.idx(i, j);
            let kq = state.q.values[k];
            if kq <= margin {
                continue;
            }
            let l = state.cost.field.values[k];
            if l <= 0.0 {
                continue;
            }
            let fit = 1.0 / (kq - state.gamma);
            let r = (l - fit).abs() / (l.abs() + 1.0);
            worst = worst.max(r);
        }
    }
    worst
}

/// The excess-energy measure of the ensemble: per-cell density
/// κμ - κν - (1+u) dx on the swept region, plus the locked atoms, with
/// the cumulative E(t) = e({w <= t}) on a uniform time ladder.
pub struct ExcessMeasure {
    pub cell: ScalarField2,
    pub atoms: Vec<PointMass>,
    pub ladder: Vec<(f64, f64)>,
}

pub fn excess_measure(
    state: &EquilibriumState,
    field: &ArrivalField,
    spec: &ScenarioSpec,
) -> ExcessMeasure {
    let g = &field.w.grid;
    let h2 = g.h * g.h;
    let mut cell = ScalarField2::constant(g.clone(), 0.0);
    let mut atoms = Vec::new();
    for (pm, kind) in &state.mu {
        match kind {
            BirthKind::Cap => {} // stopping at the cap is not an excess
            BirthKind::Lock => atoms.push(pm.clone()),
            BirthKind::Density => {
                if let Some((i, j)) = g.locate(pm.pos) {
                    let k = g.idx(i, j);
                    cell.values[k] += pm.mass;
                }
            }
        }
    }
    for pm in &state.nu_interior {
        if let Some((i, j)) = g.locate(pm.pos) {
            cell.values[i + j * g.nx] -= pm.mass;
        }
    }
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = field.w.get(i, j);
            if w > 0.0 && w.is_finite() {
                let k = g.idx(i, j);
                cell.values[k] -= (1.0 + spec.u.eval(g.center(i, j))) * h2;
            }
        }
    }
    // cumulative excess on a 20-point ladder below the cap
    let t_max = field.cap * (1.0 - 1e-9);
    let mut ladder = Vec::new();
    for s in 1..=20 {
        let t = t_max * s as f64 / 20.0;
        let mut e = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let w = field.w.get(i, j);
                if w > 0.0 && w <= t {
                    e += cell.values[g.idx(i, j)];
                }
            }
        }
        for a in &atoms {
            if let Some((i, j)) = g.locate(a.pos) {
                if field.w.get(i, j) <= t {
                    e += a.mass;
                }
            }
        }
        ladder.push((t, e));
    }
    ExcessMeasure { cell, atoms, ladder }
}

/// Comparison of the boundary arrival measure π against
/// (γ + V0 + ε) · length per arc bin.
pub struct BoundaryReport {
    pub bins: Vec<(f64, f64, f64)>,
    pub sup_rel: f64,
}

pub fn check_boundary_condition(
    state: &EquilibriumState,
    spec: &ScenarioSpec,
    eps: f64,
) -> Result<BoundaryReport> {
    if !(eps > 0.0) {
        return Err(Error::OpenConstraint);
    }
    // expected density is constant per arc for constant v0; for endpoint
    // speeds each bin sits on one side, so evaluating at any bin segment
    // is exact
    let mut bins = Vec::new();
    let mut sup = 0.0f64;
    for (len, mass) in &state.pi_bins {
        if *len <= 0.0 {
            continue;
        }
        // representative V0 of the bin: measured mass density vs γ+V0+ε
        // needs a position; bins are thin, use density ratio directly
        let measured = mass / len;
        bins.push((*len, *mass, measured));
    }
    // compare against the expected density per bin by re-deriving the
    // expectation from the total: for constant v0 this is uniform
    let expected = |p: [f64; 2]| spec.gamma + spec.v0_at(p) + eps;
    // recompute with positions: use bins against the global mean when v0
    // is constant
    match spec.v0 {
        crate::domain::SpeedSpec::Constant { value } => {
            let dens = spec.gamma + value + eps;
            for (len, mass, _) in &bins {
                let rel = ((mass / len) - dens).abs() / dens;
                sup = sup.max(rel);
            }
        }
        crate::domain::SpeedSpec::Endpoints { .. } => {
            // bins on each side have uniform density; compare against the
            // closer of the two
            let lo = expected([-1e9, 0.0]);
            let hi = expected([1e9, 0.0]);
            for (len, mass, _) in &bins {
                let d = mass / len;
                let rel = ((d - lo).abs().min((d - hi).abs())) / d.max(lo.min(hi));
                sup = sup.max(rel);
            }
        }
    }
    Ok(BoundaryReport { bins, sup_rel: sup })
}

/// Residuals of the distributional identity
/// ∫ ∇φ · ( ∇w/|∇w|² + γ ∇w/|∇w| ) dx = κ∫φ dμ - κ∫φ dν
/// for random smooth bumps φ supported in the interior of the occupied
/// set. Each residual is normalized by the largest of the three terms.
pub fn distributional_residual(
    state: &EquilibriumState,
    field: &ArrivalField,
    n_bumps: usize,
    seed: u64,
    support_box: [f64; 4],
    radius_range: [f64; 2],
) -> Vec<f64> {
    let g = &field.w.grid;
    let h2 = g.h * g.h;
    let grad = GradientField::of(&field.w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_bumps);
    for _ in 0..n_bumps {
        let cx = support_box[0] + rng.gen::<f64>() * (support_box[2] - support_box[0]);
        let cy = support_box[1] + rng.gen::<f64>() * (support_box[3] - support_box[1]);
        let rho = radius_range[0] + rng.gen::<f64>() * (radius_range[1] - radius_range[0]);
        let phi = |p: [f64; 2]| -> f64 {
            let s2 = ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)) / (rho * rho);
            if s2 >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - s2)).exp()
            }
        };
        let grad_phi = |p: [f64; 2]| -> [f64; 2] {
            let dx = p[0] - cx;
            let dy = p[1] - cy;
            let s2 = (dx * dx + dy * dy) / (rho * rho);
            if s2 >= 1.0 - 1e-12 {
                return [0.0, 0.0];
            }
            let f = (1.0 - 1.0 / (1.0 - s2)).exp();
            let d = -f * 2.0 / ((1.0 - s2) * (1.0 - s2) * rho * rho);
            [d * dx, d * dy]
        };
        let mut lhs = 0.0;
        let mut lhs_abs = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                if !grad.valid[k] || !field.w.values[k].is_finite() || field.w.values[k] == 0.0 {
                    continue;
                }
                let c = g.center(i, j);
                let gp = grad_phi(c);
                if gp[0] == 0.0 && gp[1] == 0.0 {
                    continue;
                }
                let norm2 = grad.gx[k].powi(2) + grad.gy[k].powi(2);
                if norm2 < 1e-24 {
                    continue;
                }
                let norm = norm2.sqrt();
                let fx = grad.gx[k] / norm2 + state.gamma * grad.gx[k] / norm;
                let fy = grad.gy[k] / norm2 + state.gamma * grad.gy[k] / norm;
                let term = (gp[0] * fx + gp[1] * fy) * h2;
                lhs += term;
                lhs_abs += term.abs();
            }
        }
        let mut mu_term = 0.0;
        for (pm, _) in &state.mu {
            mu_term += pm.mass * phi(pm.pos);
        }
        let mut nu_term = 0.0;
        for pm in &state.nu_interior {
            nu_term += pm.mass * phi(pm.pos);
        }
        let denom = mu_term.abs().max(nu_term.abs()).max(lhs_abs).max(1e-12);
        out.push((lhs - (mu_term - nu_term)).abs() / denom);
    }
    out
}

/// Summary JSON for reports.
pub fn summary(state: &EquilibriumState) -> serde_json::Value {
    serde_json::json!({
        "kappa": state.kappa,
        "total_mass": state.total_mass,
        "trapped_mass": state.trapped_mass,
        "fixed_point_residual": fixed_point_residual(state),
        "telescope_err": state.telescope_err,
        "paths": state.mu.len(),
    })
}
