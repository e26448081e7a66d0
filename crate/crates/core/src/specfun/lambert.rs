use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_ITER: usize = 100;

/// Principal branch `W₀(x)` of the Lambert W function, `x ≥ −1/e`.
///
/// Halley iteration started from the branch-point series near `−1/e` and from
/// the asymptotic `ln x − ln ln x` expansion for large arguments.
pub fn lambert_w0<T: Real>(x: T) -> Result<T> {
    let e = T::E();
    let branch = -T::one() / e;
    if !(x >= branch) || x.is_nan() {
        if x > branch - T::lit(4.0) * T::epsilon() {
            return Ok(-T::one());
        }
        return Err(Error::Domain {
            function: "lambert_w0",
            value: x.as_f64(),
            expected: "x >= -1/e",
        });
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x.is_infinite() {
        return Ok(x);
    }
    let w0 = if x < T::lit(-0.32) {
        branch_point_guess(x, T::one())
    } else if x < T::lit(3.0) {
        x.ln_1p() * (T::one() - T::lit(0.15) * x.ln_1p() / (T::one() + x.ln_1p()))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    halley(x, w0, "lambert_w0")
}

/// Lower branch `W₋₁(x)` for `x ∈ [−1/e, 0)`.
pub fn lambert_wm1<T: Real>(x: T) -> Result<T> {
    let e = T::E();
    let branch = -T::one() / e;
    if !(x >= branch - T::lit(4.0) * T::epsilon()) || !(x < T::zero()) {
        return Err(Error::Domain {
            function: "lambert_wm1",
            value: x.as_f64(),
            expected: "-1/e <= x < 0",
        });
    }
    if x <= branch {
        return Ok(-T::one());
    }
    let w0 = if x < T::lit(-0.25) {
        branch_point_guess(x, -T::one())
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    halley(x, w0, "lambert_wm1")
}

/// `W₀(eˡ)` for a log-domain argument, usable when `eˡ` overflows.
pub fn lambert_w0_from_log<T: Real>(ln_x: T) -> Result<T> {
    if ln_x < T::lit(300.0) {
        return lambert_w0(ln_x.exp());
    }
    // w + ln w = ln_x, Newton from the asymptotic guess
    let mut w = ln_x - ln_x.ln();
    for _ in 0..MAX_ITER {
        let f = w + w.ln() - ln_x;
        let step = f / (T::one() + T::one() / w);
        w = w - step;
        if step.abs() <= T::lit(4.0) * T::epsilon() * w.abs() {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence {
        routine: "lambert_w0_from_log",
        iterations: MAX_ITER,
    })
}

/// `W₋₁(−eˡ)` for a log-domain magnitude `l ≤ −1`, usable when `eˡ` underflows.
pub fn lambert_wm1_from_log<T: Real>(ln_neg_x: T) -> Result<T> {
    if ln_neg_x > -T::one() + T::lit(4.0) * T::epsilon() || ln_neg_x.is_nan() {
        return Err(Error::Domain {
            function: "lambert_wm1_from_log",
            value: ln_neg_x.as_f64(),
            expected: "ln(-x) <= -1",
        });
    }
    if ln_neg_x > T::lit(-600.0) {
        return lambert_wm1(-ln_neg_x.exp());
    }
    // w + ln(−w) = l on the lower branch
    let mut w = ln_neg_x - (-ln_neg_x).ln();
    for _ in 0..MAX_ITER {
        let f = w + (-w).ln() - ln_neg_x;
        let step = f / (T::one() + T::one() / w);
        w = w - step;
        if step.abs() <= T::lit(4.0) * T::epsilon() * w.abs() {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence {
        routine: "lambert_wm1_from_log",
        iterations: MAX_ITER,
    })
}

// W ≈ −1 + p − p²/3 + 11p³/72 with p = ±√(2(ex + 1)), sign picks the branch
fn branch_point_guess<T: Real>(x: T, sign: T) -> T {
    let p = sign * (T::two() * (T::E() * x + T::one())).max(T::zero()).sqrt();
    -T::one() + p - p * p / T::lit(3.0) + T::lit(11.0 / 72.0) * p * p * p
}

fn halley<T: Real>(x: T, mut w: T, routine: &'static str) -> Result<T> {
    let tol = T::lit(4.0) * T::epsilon();
    let mut last_step = T::infinity();
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + T::one();
        if wp1.abs() <= tol {
            return Ok(w);
        }
        let denom = ew * wp1 - (w + T::two()) * f / (T::two() * wp1);
        let step = f / denom;
        w = w - step;
        if step.abs() <= tol * (T::one() + w.abs()) {
            return Ok(w);
        }
        // near the branch point rounding in f limits the attainable step size
        if step.abs() >= last_step && step.abs() <= T::epsilon().sqrt() * (T::one() + w.abs()) {
            return Ok(w);
        }
        last_step = step.abs();
    }
    Err(Error::NoConvergence {
        routine,
        iterations: MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn newton_oracle(x: f64) -> f64 {
        // plain Newton on w e^w − x, independent of the Halley path above
        let mut w = if x > 1.0 { x.ln() } else { 0.5 };
        for _ in 0..200 {
            let f = w * w.exp() - x;
            w -= f / ((w + 1.0) * w.exp());
        }
        w
    }

    #[test]
    fn trivial_points() {
        assert_eq!(lambert_w0(0.0_f64).unwrap(), 0.0);
        assert_relative_eq!(lambert_w0(std::f64::consts::E).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(lambert_w0(-(-1.0_f64).exp()).unwrap(), -1.0, epsilon = 1e-7);
    }

    #[test]
    fn omega_constant() {
        let expected = newton_oracle(1.0);
        assert_relative_eq!(expected, 0.567_143_290_409_783_8, max_relative = 1e-13);
        assert_relative_eq!(lambert_w0(1.0_f64).unwrap(), expected, max_relative = 1e-13);
    }

    #[test]
    fn rejects_below_branch_point() {
        assert!(lambert_w0(-0.5_f64).is_err());
        assert!(lambert_wm1(0.1_f64).is_err());
        assert!(lambert_wm1(-0.4_f64).is_err());
    }

    #[test]
    fn lower_branch_residuals() {
        for i in 1..2000 {
            let x = -(-1.0_f64).exp() * (i as f64 / 2000.0);
            let w = lambert_wm1(x).unwrap();
            assert!(w <= -1.0);
            assert!((w * w.exp() - x).abs() <= 1e-13, "x={x} w={w}");
        }
    }

    #[test]
    fn principal_branch_residual_sweep() {
        let lo = -(-1.0_f64).exp() + 1e-6;
        let n = 10_000;
        for i in 0..n {
            // log-spaced offsets from the branch point cover [lo, 1e6]
            let t = i as f64 / (n - 1) as f64;
            let x = lo + (1e-6_f64.ln() * (1.0 - t) + (1e6_f64 - lo).ln() * t).exp() - 1e-6;
            let w = lambert_w0(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1.0), "x={x} w={w}");
        }
    }

    #[test]
    fn log_domain_matches_direct() {
        for &l in &[1.0, 10.0, 100.0, 299.0] {
            let direct = lambert_w0(f64::exp(l)).unwrap();
            let via_log = lambert_w0_from_log(l).unwrap();
            assert_relative_eq!(direct, via_log, max_relative = 1e-13);
        }
        let w = lambert_w0_from_log(5000.0_f64).unwrap();
        assert!((w + w.ln() - 5000.0).abs() < 1e-10);
        for &l in &[-1.5, -10.0, -100.0, -599.0] {
            assert_relative_eq!(
                lambert_wm1_from_log(l).unwrap(),
                lambert_wm1(-f64::exp(l)).unwrap(),
                max_relative = 1e-13
            );
        }
        let w = lambert_wm1_from_log(-5000.0_f64).unwrap();
        assert!(w < -1.0 && (w + (-w).ln() + 5000.0).abs() < 1e-10);
        assert!(lambert_wm1_from_log(-0.5_f64).is_err());
    }
}
