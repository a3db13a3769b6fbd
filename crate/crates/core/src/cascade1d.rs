//! Fast-time-scale solvers for the 1D cascade.
//!
//! The flat jump can be run dynamically as
//!
//! x₁'(t) = -∫_{Λ}^{x₁(t)} (1 + ū(z)) dz,   x₁(0) = Λ + ε,
//!
//! whose t → ∞ limit is the post-jump interface position, or through the
//! arrival-time ODE w'' = (1 + ū) (w')², integrated here as
//! dw/dx = 1 / V(x) with V(x) = V0 - ∫ (1 + ū). The exact initial
//! condition x₁(0) = Λ is a fixed point, so the dynamic route always
//! starts ε ahead and the ε ladder plays the role of the vanishing
//! initial-speed sequence in the minimal-solution selection.

use crate::domain::{Supercooling, INF};
use crate::num::first_downcrossing;
use crate::{Error, Result};

const LOCAL_TOL: f64 = 1e-10;
const SPEED_FLOOR: f64 = 1e-12;
const BLOWUP_HORIZON: f64 = 1e6;

/// Dynamic trace of the fast-scale interface.
#[derive(Clone, Debug)]
pub struct FastOdeTrace {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// t → ∞ interface position; +∞ on blow-up.
    pub limit: f64,
    /// False when integration stopped at t_end without |x₁'| reaching the
    /// convergence floor.
    pub converged: bool,
    /// Crossing times of the requested probe positions (+∞ if never
    /// crossed), resolved inside steps by bisection.
    pub probe_times: Vec<f64>,
}

impl FastOdeTrace {
    /// inf{ t : x₁(t) >= x } by linear interpolation of the stored trace.
    pub fn arrival_time(&self, x: f64) -> f64 {
        if self.positions.first().map_or(true, |p| *p >= x) {
            return 0.0;
        }
        for k in 1..self.positions.len() {
            if self.positions[k] >= x {
                let (x0, x1) = (self.positions[k - 1], self.positions[k]);
                let (t0, t1) = (self.times[k - 1], self.times[k]);
                let f = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
                return t0 + f * (t1 - t0);
            }
        }
        INF
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x1\n");
        for (t, x) in self.times.iter().zip(&self.positions) {
            s.push_str(&format!("{t},{x}\n"));
        }
        s
    }
}

fn rk4<F: Fn(f64) -> f64>(rhs: &F, x: f64, dt: f64) -> f64 {
    let k1 = rhs(x);
    let k2 = rhs(x + 0.5 * dt * k1);
    let k3 = rhs(x + 0.5 * dt * k2);
    let k4 = rhs(x + dt * k3);
    x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrate the fast-scale ODE from Λ + ε.
///
/// `probes` are positions whose first crossing times are wanted; they must
/// be sorted increasing.
pub fn integrate_fast_ode(
    u_bar: &Supercooling,
    lambda0: f64,
    eps: f64,
    t_end: f64,
    probes: &[f64],
) -> Result<FastOdeTrace> {
    if !(eps > 0.0) {
        return Err(Error::InvalidScenario("fast ODE needs eps > 0".into()));
    }
    if !u_bar.is_profile_1d() {
        return Err(Error::InvalidScenario("fast ODE needs a 1D profile".into()));
    }
    let rhs = |x: f64| -u_bar.integral_1plus_line(lambda0, x).unwrap();
    let scale = eps.max(1.0);
    let horizon = lambda0 + BLOWUP_HORIZON * scale;

    let mut t = 0.0;
    let mut x = lambda0 + eps;
    let mut dt = 1e-3;
    let mut times = vec![t];
    let mut positions = vec![x];
    let mut probe_times = vec![INF; probes.len()];
    let mut next_probe = probes.partition_point(|p| *p <= x);
    for (k, p) in probes.iter().enumerate().take(next_probe) {
        let _ = p;
        probe_times[k] = 0.0;
    }

    let mut limit = x;
    let mut converged = false;
    while t < t_end {
        // step-doubling error control on classic RK4
        let (x_new, dt_used, dt_next) = loop {
            let full = rk4(&rhs, x, dt);
            let half = rk4(&rhs, rk4(&rhs, x, 0.5 * dt), 0.5 * dt);
            let err = (full - half).abs() / 15.0;
            let tol = LOCAL_TOL * x.abs().max(scale);
            if err <= tol || dt <= 1e-12 {
                let grow = if err == 0.0 {
                    2.0
                } else {
                    (tol / err).powf(0.2).clamp(0.3, 2.0)
                };
                break (half + (half - full) / 15.0, dt, (dt * 0.9 * grow).min(0.05 * t_end));
            }
            dt *= 0.5;
        };

        // resolve probe crossings inside the step by bisecting the substep
        while next_probe < probes.len() && x_new >= probes[next_probe] {
            let target = probes[next_probe];
            let mut lo = 0.0;
            let mut hi = dt_used;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if rk4(&rhs, x, mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            probe_times[next_probe] = t + 0.5 * (lo + hi);
            next_probe += 1;
        }

        t += dt_used;
        x = x_new;
        dt = dt_next.max(1e-12);
        times.push(t);
        positions.push(x);
        limit = x;
        if rhs(x).abs() < SPEED_FLOOR {
            converged = true;
            break;
        }
        if x > horizon {
            limit = INF;
            converged = true;
            break;
        }
    }
    Ok(FastOdeTrace { times, positions, limit, converged, probe_times })
}

/// Fast-ODE limits over a decreasing ε ladder (the numerical counterpart
/// of the vanishing-initial-speed selection).
pub fn fast_jump_ladder(
    u_bar: &Supercooling,
    lambda0: f64,
    eps_ladder: &[f64],
    t_end: f64,
) -> Result<Vec<f64>> {
    eps_ladder
        .iter()
        .map(|&e| Ok(integrate_fast_ode(u_bar, lambda0, e, t_end, &[])?.limit))
        .collect()
}

/// Arrival-time profile obtained by integrating dw/dx = 1/V(x) as an ODE
/// (adaptive RK4 in x), with V(x) = V0 - ∫_0^x (1 + u) taken from the
/// first integral of w'' = (1 + u)(w')².
#[derive(Clone, Debug)]
pub struct ArrivalOdeProfile {
    pub v0: f64,
    pub x_star: f64,
    u: Supercooling,
}

impl ArrivalOdeProfile {
    pub fn v(&self, x: f64) -> f64 {
        self.v0 - self.u.integral_1plus_line(0.0, x).unwrap()
    }

    /// w(x) by adaptive RK4 on dw/dx = 1/V; +∞ at and beyond the extent.
    pub fn w(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.x_star {
            return INF;
        }
        let end = x.min(self.x_star - 1e-8 * self.x_star.min(1e6).max(1.0));
        let mut pos = 0.0;
        let mut w = 0.0f64;
        let mut dx = end / 16.0;
        while pos < end {
            dx = dx.min(end - pos);
            let (w_new, dx_used, dx_next) = loop {
                let step = |p: f64, d: f64| {
                    // RK4 for w' = f(p) with f independent of w
                    let k1 = 1.0 / self.v(p);
                    let k2 = 1.0 / self.v(p + 0.5 * d);
                    let k3 = k2;
                    let k4 = 1.0 / self.v(p + d);
                    d / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                };
                let full = step(pos, dx);
                let half = step(pos, 0.5 * dx) + step(pos + 0.5 * dx, 0.5 * dx);
                let err = (full - half).abs() / 15.0;
                let tol = 1e-11 * w.abs().max(1.0);
                if err <= tol || dx <= 1e-13 {
                    let grow = if err == 0.0 {
                        2.0
                    } else {
                        (tol / err).powf(0.2).clamp(0.3, 2.0)
                    };
                    break (w + half + (half - full) / 15.0, dx, dx * 0.9 * grow);
                }
                dx *= 0.5;
            };
            pos += dx_used;
            w = w_new;
            dx = dx_next.max(1e-13);
        }
        w
    }
}

/// Solve the 1D arrival ODE on [0, ∞) with w(0) = 0, w'(0) = 1/V0.
pub fn solve_arrival_ode(u: &Supercooling, v0: f64) -> Result<ArrivalOdeProfile> {
    if !(v0 > 0.0) {
        return Err(Error::InvalidScenario("arrival ODE needs v0 > 0".into()));
    }
    if !u.is_profile_1d() {
        return Err(Error::InvalidScenario("arrival ODE needs a 1D profile".into()));
    }
    let f = |x: f64| v0 - u.integral_1plus_line(0.0, x).unwrap();
    let x_star = match first_downcrossing(f, 1e-9, 1e6, 1e-10) {
        Some(x) => x,
        None => INF,
    };
    Ok(ArrivalOdeProfile { v0, x_star, u: u.clone() })
}
