//! Small numerical kernels shared by the solvers: bracketed bisection,
//! adaptive Simpson quadrature, and an adaptive RK4 step driver.

/// Earliest sign change of `f` on a geometric ladder, refined by bisection.
///
/// Scans x = x0·2^k for k = 0.. until `f` goes negative (f(x) >= 0 is the
/// "not yet" state), subdivides the bracketing interval linearly to locate
/// the first crossing, then bisects to `tol`. Returns `None` if `f` stays
/// nonnegative up to `horizon`.
pub fn first_downcrossing<F: Fn(f64) -> f64>(f: F, x0: f64, horizon: f64, tol: f64) -> Option<f64> {
    assert!(x0 > 0.0 && horizon > x0);
    if f(x0) < 0.0 {
        // Negative already at the smallest probe: crossing is below x0.
        return Some(bisect(&f, 0.0, x0, tol));
    }
    let mut lo = x0;
    let mut hi = x0 * 2.0;
    while hi <= horizon * 2.0 {
        if f(hi) < 0.0 {
            // Subdivide [lo, hi] to find the earliest crossing inside.
            let n = 64;
            let mut a = lo;
            for k in 1..=n {
                let b = lo + (hi - lo) * k as f64 / n as f64;
                if f(b) < 0.0 {
                    return Some(bisect(&f, a, b, tol));
                }
                a = b;
            }
            return Some(bisect(&f, lo, hi, tol));
        }
        lo = hi;
        hi *= 2.0;
    }
    None
}

/// Plain bisection on [a, b] assuming f(a) >= 0 > f(b); returns the
/// boundary point of {f < 0} to absolute tolerance `tol`, from the
/// f >= 0 side (the result never overshoots the crossing).
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    a
}

/// Adaptive Simpson quadrature of `f` on [a, b] with relative tolerance
/// `rel_tol` (floored by a tiny absolute tolerance).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let eps = rel_tol * whole.abs().max(1e-300) + 1e-14;
    simpson_rec(f, a, b, fa, fm, fb, whole, eps, 52)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

/// One adaptive RK4 step of x' = rhs(x) from `x` with proposed step `dt`.
///
/// Uses step doubling for the local error estimate; returns the accepted
/// (dt_used, x_new, dt_next). Scalar autonomous form is all the 1D solvers
/// need.
pub fn rk4_adaptive_step<F: Fn(f64) -> f64>(
    rhs: &F,
    x: f64,
    dt: f64,
    local_tol: f64,
) -> (f64, f64, f64) {
    let mut dt = dt;
    loop {
        let full = rk4_step(rhs, x, dt);
        let half = rk4_step(rhs, rk4_step(rhs, x, 0.5 * dt), 0.5 * dt);
        let err = (full - half).abs() / 15.0;
        let scale = x.abs().max(1.0);
        if err <= local_tol * scale || dt <= 1e-14 {
            // Richardson-extrapolated accepted value.
            let x_new = half + (half - full) / 15.0;
            let grow = if err == 0.0 {
                2.0
            } else {
                (local_tol * scale / err).powf(0.2).clamp(0.3, 2.0)
            };
            return (dt, x_new, dt * 0.9 * grow);
        }
        dt *= 0.5;
    }
}

fn rk4_step<F: Fn(f64) -> f64>(rhs: &F, x: f64, dt: f64) -> f64 {
    let k1 = rhs(x);
    let k2 = rhs(x + 0.5 * dt * k1);
    let k3 = rhs(x + 0.5 * dt * k2);
    let k4 = rhs(x + dt * k3);
    x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_matches_analytic_log() {
        let v = adaptive_simpson(&|x: f64| 1.0 / (1.0 - x), 0.0, 0.5, 1e-10);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn downcrossing_finds_first_root() {
        // f = 0.6 - x: crossing at 0.6
        let r = first_downcrossing(|x| 0.6 - x, 1e-6, 1e6, 1e-12).unwrap();
        assert!((r - 0.6).abs() < 1e-10);
        // never negative
        assert!(first_downcrossing(|_| 1.0, 1e-6, 1e3, 1e-12).is_none());
    }

    #[test]
    fn rk4_decays_exponential() {
        let rhs = |x: f64| -x;
        let mut x = 1.0;
        let mut t = 0.0;
        let mut dt = 0.1f64;
        while t < 2.0 {
            let (used, xn, next) = rk4_adaptive_step(&rhs, x, dt.min(2.0 - t), 1e-10);
            x = xn;
            t += used;
            dt = next;
        }
        assert!((x - (-2.0f64).exp()).abs() < 1e-8);
    }
}
