//! Detection error probability at the warden for both transmission phases.
//!
//! Phase one uses the exact radiometer statistics. Phase two fits a Gamma
//! distribution to the sum of the two received energy components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PowerAllocation, SystemParams};
use crate::scalar::Real;
use crate::specfun::{lambert_w0_from_log, lambert_wm1_from_log, ln_gamma, reg_gamma_pair, reg_gamma_upper};

/// Monotonicity grid used before every region bisection.
pub const REGION_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepReport<T> {
    pub p_miss: T,
    pub p_false_alarm: T,
    pub p_dep: T,
    pub omega_used: T,
}

impl<T: Real> DepReport<T> {
    fn new(p_miss: T, p_false_alarm: T, omega_used: T) -> Self {
        Self {
            p_miss,
            p_false_alarm,
            p_dep: p_miss + p_false_alarm,
            omega_used,
        }
    }

    fn below_noise(omega_used: T) -> Self {
        Self::new(T::one(), T::zero(), omega_used)
    }
}

/// Shape and scale of the Gamma law matched to `χ(x) = P_s τ_SE + x P_r τ_RE`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit<T> {
    pub kappa: T,
    pub theta: T,
}

fn check_coefficient<T: Real>(name: &'static str, x: T) -> Result<()> {
    if x > T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            function: name,
            value: x.as_f64(),
            expected: "coefficient in (0, 1]",
        })
    }
}

/// `ln(1/α)/(1 − α)` with its limit 1 at `α = 1`.
fn log_ratio<T: Real>(alpha: T) -> T {
    let gap = T::one() - alpha;
    if gap == T::zero() {
        T::one()
    } else {
        -(-gap).ln_1p() / gap
    }
}

/// Phase-one DEP `Q(N, u) + 1 − Q(N, v)` at threshold `ω₁`.
pub fn dep_phase1<T: Real>(params: &SystemParams<T>, alloc: &PowerAllocation<T>, omega1: T) -> Result<DepReport<T>> {
    check_coefficient("dep_phase1", alloc.alpha_w)?;
    if omega1 <= params.sigma2 {
        return Ok(DepReport::below_noise(omega1));
    }
    let n = params.n();
    let y = n * (omega1 - params.sigma2);
    let scale = params.p_s * params.lambda.se;
    let (_, q_u) = reg_gamma_pair(n, y / (alloc.alpha_w * scale))?;
    let (p_v, _) = reg_gamma_pair(n, y / scale)?;
    Ok(DepReport::new(q_u, p_v, omega1))
}

/// Threshold minimizing the phase-one DEP.
pub fn omega1_star<T: Real>(params: &SystemParams<T>, alloc: &PowerAllocation<T>) -> Result<T> {
    check_coefficient("omega1_star", alloc.alpha_w)?;
    Ok(alloc.alpha_w * log_ratio(alloc.alpha_w) * params.lambda.se * params.p_s + params.sigma2)
}

/// Minimum phase-one DEP for `N` samples and coefficient `α_W`.
pub fn min_dep_phase1_at<T: Real>(n_samples: u32, alpha_w: T) -> Result<T> {
    check_coefficient("min_dep_phase1", alpha_w)?;
    if alpha_w == T::one() {
        return Ok(T::one());
    }
    let n = T::lit(f64::from(n_samples));
    let l = log_ratio(alpha_w);
    let hi = reg_gamma_upper(n, n * alpha_w * l)?;
    let lo = reg_gamma_upper(n, n * l)?;
    Ok(T::one() - (hi - lo))
}

pub fn min_dep_phase1<T: Real>(params: &SystemParams<T>, alloc: &PowerAllocation<T>) -> Result<T> {
    min_dep_phase1_at(params.n_samples, alloc.alpha_w)
}

/// Gamma fit of `χ(x)` with the relay power given explicitly.
pub fn gamma_fit_chi_with<T: Real>(x: T, params: &SystemParams<T>, p_r: T) -> GammaFit<T> {
    let a = params.p_s * params.lambda.se;
    let b = x * p_r * params.lambda.re;
    let sq = a * a + b * b;
    GammaFit {
        kappa: params.n() * (a + b) * (a + b) / sq,
        theta: sq / (a + b),
    }
}

pub fn gamma_fit_chi<T: Real>(x: T, params: &SystemParams<T>) -> Result<GammaFit<T>> {
    Ok(gamma_fit_chi_with(x, params, params.relay_power_static()?))
}

/// Phase-two DEP under the Gamma approximation with the relay power given explicitly.
pub fn dep_phase2_with<T: Real>(
    params: &SystemParams<T>,
    p_r: T,
    alloc: &PowerAllocation<T>,
    omega2: T,
) -> Result<DepReport<T>> {
    check_coefficient("dep_phase2", alloc.beta_t)?;
    if omega2 <= params.sigma2 {
        return Ok(DepReport::below_noise(omega2));
    }
    let y = params.n() * (omega2 - params.sigma2);
    let h0 = gamma_fit_chi_with(alloc.beta_t, params, p_r);
    let h1 = gamma_fit_chi_with(T::one(), params, p_r);
    let (_, p_miss) = reg_gamma_pair(h0.kappa, y / h0.theta)?;
    let (p_fa, _) = reg_gamma_pair(h1.kappa, y / h1.theta)?;
    Ok(DepReport::new(p_miss, p_fa, omega2))
}

pub fn dep_phase2<T: Real>(params: &SystemParams<T>, alloc: &PowerAllocation<T>, omega2: T) -> Result<DepReport<T>> {
    dep_phase2_with(params, params.relay_power_static()?, alloc, omega2)
}

/// Threshold minimizing the approximate phase-two DEP, with the relay power given explicitly.
///
/// The stationarity condition of the two Gamma densities is solved through the
/// Lambert W function in the log domain. When its argument is negative both real
/// branches are stationary points and the one with the smaller DEP is returned.
pub fn omega2_star_with<T: Real>(params: &SystemParams<T>, p_r: T, alloc: &PowerAllocation<T>) -> Result<T> {
    check_coefficient("omega2_star", alloc.beta_t)?;
    let tiny = T::lit(1e-12);
    let h0 = gamma_fit_chi_with(alloc.beta_t, params, p_r);
    let h1 = gamma_fit_chi_with(T::one(), params, p_r);
    let d_kappa = h1.kappa - h0.kappa;
    let d_theta = h1.theta - h0.theta;
    if d_kappa.abs() < tiny && d_theta.abs() < tiny {
        return Err(Error::Degenerate(format!(
            "phase-two hypotheses indistinguishable (beta_t = {}, p_r = {p_r})",
            alloc.beta_t
        )));
    }
    let rate = T::one() / h0.theta - T::one() / h1.theta;
    let ln_c = ln_gamma(h1.kappa) + h1.kappa * h1.theta.ln() - ln_gamma(h0.kappa) - h0.kappa * h0.theta.ln();

    let mut roots: Vec<T> = Vec::with_capacity(2);
    if rate == T::zero() {
        roots.push((ln_c / d_kappa).exp());
    } else if d_kappa == T::zero() {
        roots.push(ln_c / rate);
    } else {
        let s = rate / d_kappa;
        let ln_arg = s.abs().ln() + ln_c / d_kappa;
        if s > T::zero() {
            roots.push(lambert_w0_from_log(ln_arg)? / s);
        } else {
            let branch = -T::one();
            if ln_arg > branch + T::lit(1e-12) {
                return Err(Error::Degenerate(format!(
                    "no stationary phase-two threshold (beta_t = {})",
                    alloc.beta_t
                )));
            }
            let ln_arg = ln_arg.min(branch);
            let w0 = if ln_arg > T::lit(-700.0) {
                crate::specfun::lambert_w0(-ln_arg.exp())?
            } else {
                -ln_arg.exp()
            };
            roots.push(w0 / s);
            roots.push(lambert_wm1_from_log(ln_arg)? / s);
        }
    }

    let mut best: Option<(T, T)> = None;
    for y in roots.into_iter().filter(|y| *y > T::zero() && y.is_finite()) {
        let omega = y / params.n() + params.sigma2;
        let dep = dep_phase2_with(params, p_r, alloc, omega)?.p_dep;
        if best.is_none_or(|(_, d)| dep < d) {
            best = Some((omega, dep));
        }
    }
    best.map(|(omega, _)| omega)
        .ok_or_else(|| Error::Degenerate(format!("no positive phase-two threshold (beta_t = {})", alloc.beta_t)))
}

pub fn omega2_star<T: Real>(params: &SystemParams<T>, alloc: &PowerAllocation<T>) -> Result<T> {
    omega2_star_with(params, params.relay_power_static()?, alloc)
}

/// Minimum approximate phase-two DEP `p*_dep[2]` at `β_T`; indistinguishable hypotheses give 1.
pub fn min_dep_phase2_with<T: Real>(params: &SystemParams<T>, p_r: T, beta_t: T) -> Result<T> {
    check_coefficient("min_dep_phase2", beta_t)?;
    if beta_t == T::one() || p_r == T::zero() {
        return Ok(T::one());
    }
    let alloc = PowerAllocation::tight(T::half(), beta_t);
    match omega2_star_with(params, p_r, &alloc) {
        Ok(omega) => Ok(dep_phase2_with(params, p_r, &alloc, omega)?.p_dep),
        Err(Error::Degenerate(_)) => Ok(T::one()),
        Err(e) => Err(e),
    }
}

pub fn min_dep_phase2<T: Real>(params: &SystemParams<T>, beta_t: T) -> Result<T> {
    min_dep_phase2_with(params, params.relay_power_static()?, beta_t)
}

/// Smallest `x ∈ [0.5, 1]` with `f(x) ≥ target` for a nondecreasing `f`.
///
/// Monotonicity is checked on a [`REGION_GRID`]-point grid first.
fn region_root<T: Real, F: Fn(T) -> Result<T>>(name: &str, f: F, target: T) -> Result<T> {
    let lo0 = T::half();
    let hi0 = T::one();
    if target >= T::one() {
        return Ok(hi0);
    }
    let slack = T::lit(1e-12);
    let mut prev = f(lo0)?;
    let first = prev;
    for i in 1..=REGION_GRID {
        let x = lo0 + (hi0 - lo0) * T::lit(i as f64 / REGION_GRID as f64);
        let v = f(x)?;
        if v < prev - slack {
            return Err(Error::NotMonotone(format!(
                "{name} decreases near x = {x} ({prev} -> {v})"
            )));
        }
        prev = v;
    }
    if target <= first {
        return Ok(lo0);
    }
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        if hi - lo <= T::lit(1e-13) {
            break;
        }
        let mid = (lo + hi) * T::half();
        if f(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `α_W ∈ [0.5, 1]` whose minimum phase-one DEP reaches `p_dep_th`.
pub fn alpha_region_root<T: Real>(params: &SystemParams<T>, p_dep_th: T) -> Result<T> {
    let n = params.n_samples;
    region_root("min_dep_phase1", |a| min_dep_phase1_at(n, a), p_dep_th)
}

/// Smallest `β_T ∈ [0.5, 1]` whose minimum phase-two DEP reaches `p_dep_th`, relay power given.
pub fn beta_region_root_with<T: Real>(params: &SystemParams<T>, p_r: T, p_dep_th: T) -> Result<T> {
    region_root("min_dep_phase2", |b| min_dep_phase2_with(params, p_r, b), p_dep_th)
}

pub fn beta_region_root<T: Real>(params: &SystemParams<T>, p_dep_th: T) -> Result<T> {
    beta_region_root_with(params, params.relay_power_static()?, p_dep_th)
}
