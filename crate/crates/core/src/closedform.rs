//! Exact minimal solutions in the four symmetric geometries: half-line,
//! interval complement, growing ball, shrinking complement-of-ball.
//!
//! On a half line the arrival time is
//!
//! w(x) = ∫_0^x dz / ( V0 - ∫_0^z (1+u) ),   x* = inf{ x : ∫_0^x (1+u) > V0 },
//!
//! and the radial solutions replace the denominator by
//! (γ+V0) R0^{d-1} - ∫ (1+u) z^{d-1} dz - γ r^{d-1}. These closed forms are
//! the oracles every other solver is checked against.

use crate::domain::{RegionSpec, ScenarioSpec, SpeedSpec, Supercooling, INF};
use crate::num::{adaptive_simpson, first_downcrossing};
use crate::{Error, Result};

/// Geometric-ladder horizon for root scans (in units of the domain scale).
pub const DEFAULT_HORIZON: f64 = 1e6;
/// Blow-up guard: w is evaluated only up to x* - DELTA_FRAC * scale.
const DELTA_FRAC: f64 = 1e-8;
const ROOT_TOL: f64 = 1e-10;
const QUAD_TOL: f64 = 1e-9;

/// Result of the 1D jump-size law.
#[derive(Clone, Copy, Debug)]
pub struct JumpSize {
    pub value: f64,
    /// Set when the geometric scan hit the horizon without a decision; the
    /// returned value is then +∞ by convention.
    pub horizon_limited: bool,
}

/// Jump of a flat interface: inf{ z > 0 : -∫_0^z ū < z }, which for
/// integrable ū is inf{ z > 0 : ∫_0^z (1 + ū) > 0 }.
pub fn jump_size_1d(u_bar: &Supercooling) -> Result<JumpSize> {
    if !u_bar.is_profile_1d() {
        return Err(Error::InvalidScenario("jump size needs a 1D profile".into()));
    }
    let g = |z: f64| -u_bar.integral_1plus_line(0.0, z).unwrap();
    match first_downcrossing(g, 1e-9, DEFAULT_HORIZON, ROOT_TOL) {
        Some(z) => Ok(JumpSize { value: z.max(0.0), horizon_limited: false }),
        None => Ok(JumpSize { value: INF, horizon_limited: true }),
    }
}

/// One propagating interface starting at `origin`, moving in direction
/// `dir` (+1 rightward, -1 leftward) with initial speed `v0`.
#[derive(Clone, Debug)]
pub struct OneInterfaceSolution {
    pub origin: f64,
    pub dir: f64,
    pub v0: f64,
    /// Coordinate of the jump extent (origin + dir * travel); ±∞ when the
    /// interface never stops.
    pub x_star: f64,
    pub horizon_limited: bool,
    u: Supercooling,
}

impl OneInterfaceSolution {
    /// Travelled distance at coordinate x (nonnegative inside the domain).
    fn s(&self, x: f64) -> f64 {
        (x - self.origin) * self.dir
    }

    fn travel_limit(&self) -> f64 {
        self.s(self.x_star)
    }

    /// Speed V(x) = V0 - ∫ (1+u) along the propagation direction.
    pub fn v(&self, x: f64) -> f64 {
        self.v0 - self.u.integral_1plus_line(self.origin, x).unwrap() * self.dir
    }

    /// Arrival time; +∞ at and beyond the extent, and everywhere (except
    /// the origin side) when V0 = 0.
    pub fn w(&self, x: f64) -> f64 {
        let s = self.s(x);
        if s <= 0.0 {
            return 0.0;
        }
        if self.v0 == 0.0 || s >= self.travel_limit() {
            return INF;
        }
        let delta = DELTA_FRAC * self.travel_limit().min(1e6).max(1.0);
        let s_end = s.min(self.travel_limit() - delta);
        if s_end <= 0.0 {
            return 0.0;
        }
        let f = |t: f64| 1.0 / self.v(self.origin + self.dir * t);
        adaptive_simpson(&f, 0.0, s_end, QUAD_TOL)
    }

    /// Inverse arrival time: travelled distance with w = t, by bisection.
    pub fn front_travel(&self, t: f64) -> f64 {
        if t <= 0.0 || self.v0 == 0.0 {
            return 0.0;
        }
        let lim = self.travel_limit();
        let mut lo = 0.0;
        let mut hi = if lim.is_finite() { lim } else { 1.0 };
        if !lim.is_finite() {
            while self.w(self.origin + self.dir * hi) < t && hi < 1e9 {
                hi *= 2.0;
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if self.w(self.origin + self.dir * m) < t {
                lo = m;
            } else {
                hi = m;
            }
            if hi - lo < 1e-12 * hi.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// CSV rows `coordinate,w,v` on `n` samples of the finite domain.
    pub fn to_csv(&self, n: usize) -> String {
        let lim = self.travel_limit();
        let reach = if lim.is_finite() { lim } else { 10.0 * self.v0.max(1.0) };
        let mut s = String::from("coordinate,w,v\n");
        for k in 0..=n {
            let t = reach * k as f64 / n as f64;
            let x = self.origin + self.dir * t;
            let w = self.w(x);
            let wtxt = if w.is_finite() { format!("{w}") } else { "inf".into() };
            s.push_str(&format!("{},{},{}\n", x, wtxt, self.v(x).max(0.0)));
        }
        s
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "one_interface",
            "x_star": json_num(self.x_star),
            "v0": self.v0,
            "horizon_limited": self.horizon_limited,
        })
    }
}

fn json_num(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::json!("inf")
    }
}

fn scalar_v0(spec: &ScenarioSpec) -> Result<f64> {
    match spec.v0 {
        SpeedSpec::Constant { value } => Ok(value),
        _ => Err(Error::InvalidScenario("this geometry takes a constant v0".into())),
    }
}

/// Minimal solution for Γ = (-∞, threshold].
pub fn solve_one_interface(spec: &ScenarioSpec) -> Result<OneInterfaceSolution> {
    spec.validate()?;
    let origin = match spec.initial_region {
        RegionSpec::HalfLine { threshold } => threshold,
        _ => return Err(Error::InvalidScenario("one-interface solver needs a half line".into())),
    };
    if !spec.u.is_profile_1d() {
        return Err(Error::InvalidScenario("one-interface solver needs a 1D profile".into()));
    }
    let v0 = scalar_v0(spec)?;
    Ok(branch(&spec.u, origin, 1.0, v0, INF))
}

/// Build one directed branch; `travel_cap` bounds the scan (used by the
/// two-interface geometry where a branch cannot travel past the far end).
fn branch(u: &Supercooling, origin: f64, dir: f64, v0: f64, travel_cap: f64) -> OneInterfaceSolution {
    if v0 == 0.0 {
        return OneInterfaceSolution {
            origin,
            dir,
            v0,
            x_star: origin,
            horizon_limited: false,
            u: u.clone(),
        };
    }
    let f = |s: f64| v0 - u.integral_1plus_line(origin, origin + dir * s).unwrap() * dir;
    let horizon = DEFAULT_HORIZON.min(travel_cap * 2.0);
    let (travel, limited) = match first_downcrossing(f, 1e-9, horizon, ROOT_TOL) {
        Some(s) => (s, false),
        None => (INF, travel_cap.is_infinite()),
    };
    let travel = travel.min(travel_cap);
    OneInterfaceSolution {
        origin,
        dir,
        v0,
        x_star: origin + dir * travel,
        horizon_limited: limited,
        u: u.clone(),
    }
}

/// Two interfaces closing the gap (a, b): w = w0 ∧ w1.
#[derive(Clone, Debug)]
pub struct TwoInterfaceSolution {
    pub left: OneInterfaceSolution,
    pub right: OneInterfaceSolution,
    pub a: f64,
    pub b: f64,
    /// sup of w over [a, b]; finite exactly when the branch extents
    /// overlap and the gap freezes completely.
    pub t_star: f64,
    /// Meeting coordinate when t_star < ∞.
    pub x_meet: Option<f64>,
    /// 2γ + V0(a) + V0(b) - ∫_a^b (1+u), recorded when the gap locks.
    pub locked_energy: Option<f64>,
    pub gamma: f64,
}

impl TwoInterfaceSolution {
    pub fn x0_star(&self) -> f64 {
        self.left.x_star
    }

    pub fn x1_star(&self) -> f64 {
        self.right.x_star
    }

    pub fn w(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        self.left.w(x).min(self.right.w(x))
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "two_interface",
            "x0_star": json_num(self.x0_star()),
            "x1_star": json_num(self.x1_star()),
            "t_star": json_num(self.t_star),
            "locked_energy": self.locked_energy,
        })
    }

    pub fn to_csv(&self, n: usize) -> String {
        let mut s = String::from("coordinate,w,v\n");
        for k in 0..=n {
            let x = self.a + (self.b - self.a) * k as f64 / n as f64;
            let w = self.w(x);
            let v = if self.left.w(x) <= self.right.w(x) {
                self.left.v(x)
            } else {
                self.right.v(x)
            };
            let wtxt = if w.is_finite() { format!("{w}") } else { "inf".into() };
            s.push_str(&format!("{},{},{}\n", x, wtxt, v.max(0.0)));
        }
        s
    }
}

/// Minimal solution for Γ = (-∞, a] ∪ [b, ∞).
pub fn solve_two_interface(spec: &ScenarioSpec) -> Result<TwoInterfaceSolution> {
    spec.validate()?;
    let (a, b) = match spec.initial_region {
        RegionSpec::IntervalComplement { a, b } => (a, b),
        _ => {
            return Err(Error::InvalidScenario(
                "two-interface solver needs an interval complement".into(),
            ))
        }
    };
    if !spec.u.is_profile_1d() {
        return Err(Error::InvalidScenario("two-interface solver needs a 1D profile".into()));
    }
    let (v0a, v0b) = match spec.v0 {
        SpeedSpec::Constant { value } => (value, value),
        SpeedSpec::Endpoints { left, right } => (left, right),
    };
    let width = b - a;
    let left = branch(&spec.u, a, 1.0, v0a, width);
    let right = branch(&spec.u, b, -1.0, v0b, width);
    let x0 = left.x_star;
    let x1 = right.x_star;

    let mut t_star = INF;
    let mut x_meet = None;
    let mut locked = None;
    if x0 > x1 {
        // overlapping branches: the gap freezes where w0 crosses w1
        let mut lo = x1.max(a);
        let mut hi = x0.min(b);
        let diff = |x: f64| right.w(x) - left.w(x);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if diff(m) > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
            if hi - lo < 1e-13 * width.max(1.0) {
                break;
            }
        }
        let xm = 0.5 * (lo + hi);
        t_star = left.w(xm).min(right.w(xm));
        x_meet = Some(xm);
        locked = Some(2.0 * spec.gamma + v0a + v0b - spec.u.integral_1plus_line(a, b)?);
    }
    Ok(TwoInterfaceSolution {
        left,
        right,
        a,
        b,
        t_star,
        x_meet,
        locked_energy: locked,
        gamma: spec.gamma,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadialDirection {
    Growing,
    Shrinking,
}

/// Radially symmetric minimal solution in dimension d.
#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub direction: RadialDirection,
    pub d: u32,
    pub r0: f64,
    pub gamma: f64,
    pub v0: f64,
    pub center: [f64; 2],
    /// Critical radius: arrest radius R* (growing) or inner extent R_*
    /// (shrinking).
    pub r_star: f64,
    /// (γ+V0) R0^{d-1} - ∫_0^{R0} (1+u) z^{d-1} dz when the liquid ball
    /// vanishes in finite time.
    pub locked_energy: Option<f64>,
    /// False when the shrinking formula is returned without the divergence
    /// proviso holding at R_* > 0 (degenerate zero of the denominator).
    pub minimality_certified: bool,
    u: Supercooling,
}

impl RadialSolution {
    /// Denominator (γ+V0) R0^{d-1} - ∫ (1+u) z^{d-1} dz - γ r^{d-1}: the
    /// boundary-energy budget at radius r; the speed is denom / r^{d-1}.
    pub fn denom(&self, r: f64) -> f64 {
        let pow = |x: f64| x.powi(self.d as i32 - 1);
        let moment = match self.direction {
            RadialDirection::Growing => {
                self.u.integral_1plus_radial_moment(self.r0, r, self.d).unwrap()
            }
            RadialDirection::Shrinking => {
                self.u.integral_1plus_radial_moment(r, self.r0, self.d).unwrap()
            }
        };
        (self.gamma + self.v0) * pow(self.r0) - moment - self.gamma * pow(r)
    }

    pub fn speed(&self, r: f64) -> f64 {
        self.denom(r) / r.powi(self.d as i32 - 1)
    }

    /// Arrival time at radius r.
    pub fn w(&self, r: f64) -> f64 {
        let pow = |x: f64| x.powi(self.d as i32 - 1);
        let integrand = |z: f64| pow(z) / self.denom(z);
        match self.direction {
            RadialDirection::Growing => {
                if r <= self.r0 {
                    return 0.0;
                }
                if self.v0 == 0.0 || r >= self.r_star {
                    return INF;
                }
                let delta = DELTA_FRAC * self.r_star.min(1e6).max(1.0);
                adaptive_simpson(&integrand, self.r0, r.min(self.r_star - delta), QUAD_TOL)
            }
            RadialDirection::Shrinking => {
                if r >= self.r0 {
                    return 0.0;
                }
                if self.v0 == 0.0 {
                    return INF;
                }
                if self.r_star > 0.0 {
                    if r <= self.r_star {
                        return INF;
                    }
                    let delta = DELTA_FRAC * self.r0;
                    return adaptive_simpson(
                        &integrand,
                        r.max(self.r_star + delta),
                        self.r0,
                        QUAD_TOL,
                    );
                }
                if r == 0.0 && self.locked_energy.is_none() {
                    return INF;
                }
                adaptive_simpson(&integrand, r, self.r0, QUAD_TOL)
            }
        }
    }

    /// Time at which the liquid ball vanishes (shrinking with lock-in).
    pub fn t_vanish(&self) -> Option<f64> {
        match (self.direction, self.locked_energy) {
            (RadialDirection::Shrinking, Some(_)) => Some(self.w(0.0)),
            _ => None,
        }
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": match self.direction {
                RadialDirection::Growing => "radial_growing",
                RadialDirection::Shrinking => "radial_shrinking",
            },
            "d": self.d,
            "r0": self.r0,
            "r_star": json_num(self.r_star),
            "t_vanish": self.t_vanish(),
            "locked_energy": self.locked_energy,
            "minimality_certified": self.minimality_certified,
        })
    }

    pub fn to_csv(&self, n: usize) -> String {
        let (lo, hi) = match self.direction {
            RadialDirection::Growing => (
                self.r0,
                if self.r_star.is_finite() { self.r_star } else { 4.0 * self.r0 },
            ),
            RadialDirection::Shrinking => (self.r_star.max(0.0), self.r0),
        };
        let mut s = String::from("coordinate,w,v\n");
        for k in 0..=n {
            let r = lo + (hi - lo) * k as f64 / n as f64;
            let w = self.w(r);
            let wtxt = if w.is_finite() { format!("{w}") } else { "inf".into() };
            s.push_str(&format!("{},{},{}\n", r, wtxt, self.speed(r.max(1e-12)).max(0.0)));
        }
        s
    }
}

/// Minimal solution for a ball (growing) or ball complement (shrinking).
pub fn solve_radial(spec: &ScenarioSpec) -> Result<RadialSolution> {
    spec.validate()?;
    let (center, r0, direction) = match &spec.initial_region {
        RegionSpec::Ball { center, radius } => {
            let c = [center[0], center.get(1).copied().unwrap_or(0.0)];
            (c, *radius, RadialDirection::Growing)
        }
        RegionSpec::BallComplement { center, radius } => {
            let c = [center[0], center.get(1).copied().unwrap_or(0.0)];
            (c, *radius, RadialDirection::Shrinking)
        }
        _ => return Err(Error::InvalidScenario("radial solver needs a ball geometry".into())),
    };
    if !spec.u.is_radial_about(center) {
        return Err(Error::InvalidScenario("radial solver needs a radial u".into()));
    }
    // profiles are stored as functions of r: recentre
    let u = match &spec.u {
        Supercooling::RadialPiecewise { breaks, values, .. } => Supercooling::RadialPiecewise {
            center: [0.0, 0.0],
            breaks: breaks.clone(),
            values: values.clone(),
        },
        other => other.clone(),
    };
    let d = spec.dimension;
    let v0 = scalar_v0(spec)?;
    let gamma = spec.gamma;
    let pow = |x: f64| x.powi(d as i32 - 1);

    let mut sol = RadialSolution {
        direction,
        d,
        r0,
        gamma,
        v0,
        center,
        r_star: r0,
        locked_energy: None,
        minimality_certified: true,
        u,
    };
    if v0 == 0.0 {
        return Ok(sol);
    }
    match direction {
        RadialDirection::Growing => {
            let f = |s: f64| sol.denom(r0 + s);
            sol.r_star =
                match first_downcrossing(f, 1e-9 * r0.max(1.0), DEFAULT_HORIZON, ROOT_TOL) {
                    Some(s) => r0 + s,
                    None => INF,
                };
        }
        RadialDirection::Shrinking => {
            let f = |s: f64| sol.denom(r0 - s);
            // scan inward; no crossing before the centre means R_* = 0
            sol.r_star = match first_downcrossing(f, 1e-9 * r0, r0 * (1.0 - 1e-12), ROOT_TOL) {
                Some(s) if s < r0 => r0 - s,
                _ => 0.0,
            };
            if sol.r_star > 0.0 {
                // divergence proviso: transversal zero of the denominator
                let r = sol.r_star;
                let dprime = (1.0 + sol.u.eval([r, 0.0])) * pow(r)
                    - gamma * (d as f64 - 1.0) * r.powi(d as i32 - 2);
                sol.minimality_certified =
                    dprime.abs() > 1e-8 * (gamma + v0) * pow(r0).max(1.0);
            } else {
                let e = sol.denom(0.0);
                if e > 1e-12 * (gamma + v0) * pow(r0).max(1.0) {
                    sol.locked_energy = Some(e);
                }
            }
        }
    }
    Ok(sol)
}
