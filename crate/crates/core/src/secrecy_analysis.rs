//! Secrecy outage analysis: eavesdropper SINR laws, the legitimate min-SINR
//! law and the quadrature outage probability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{threshold_sinr, Combining, PowerAllocation, SystemParams};
use crate::scalar::Real;
use crate::specfun::{chebyshev_rule, integrate_adaptive, ln_gamma, reg_gamma_lower};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SopConfig {
    pub mode: Combining,
    pub quadrature_order: usize,
    pub mrc_series_max_terms: usize,
    pub mrc_series_rel_tol: f64,
    /// Applies the Chebyshev rule separately on each piece between density jumps of `U`.
    #[serde(default)]
    pub split_at_kinks: bool,
}

impl SopConfig {
    pub fn new(mode: Combining) -> Self {
        Self {
            mode,
            quadrature_order: 200,
            mrc_series_max_terms: 50,
            mrc_series_rel_tol: 1e-12,
            split_at_kinks: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quadrature_order == 0 || self.mrc_series_max_terms == 0 || !(self.mrc_series_rel_tol > 0.0) {
            return Err(Error::InvalidParams(format!("invalid SOP configuration {self:?}")));
        }
        Ok(())
    }
}

/// Truncated-series value of the MRC eavesdropper CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue<T> {
    pub value: T,
    pub terms: usize,
    pub converged: bool,
}

/// Distribution constants for one parameter set and allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyModel<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub alloc: PowerAllocation<T>,
    /// `Θ = min(α_W/α_B, β_T/β_B)`, the ceiling of the legitimate min-SINR.
    pub theta_cap: T,
}

impl<T: Real> SecrecyModel<T> {
    /// Builds the model with an explicit relay power.
    pub fn with_relay_power(params: &SystemParams<T>, p_r: T, alloc: &PowerAllocation<T>) -> Result<Self> {
        if !(alloc.alpha_b > T::zero() && alloc.beta_b > T::zero()) {
            return Err(Error::InvalidParams("alpha_b and beta_b must be positive".into()));
        }
        if !(p_r > T::zero()) {
            return Err(Error::InvalidParams(format!("relay power must be positive, got {p_r}")));
        }
        let s2 = params.sigma2;
        let lam = &params.lambda;
        Ok(Self {
            a: s2 / (params.p_s * lam.se),
            b: s2 / (p_r * lam.re),
            c: s2 / (params.p_s * lam.sr),
            d: s2 / (p_r * lam.rb),
            alloc: *alloc,
            theta_cap: (alloc.alpha_w / alloc.alpha_b).min(alloc.beta_t / alloc.beta_b),
        })
    }

    pub fn new(params: &SystemParams<T>, alloc: &PowerAllocation<T>) -> Result<Self> {
        Self::with_relay_power(params, params.relay_power_static()?, alloc)
    }

    /// CDF of the selection-combined eavesdropper SINR.
    pub fn cdf_v_sc(&self, v: T) -> T {
        if v <= T::zero() {
            return T::zero();
        }
        let (a, b) = (self.a, self.b);
        let (ab, bb) = (self.alloc.alpha_b, self.alloc.beta_b);
        let k = bb * a / (b * v + bb * a);
        let e1 = (-a * v / ab).exp();
        let e2 = (-b * v / bb).exp();
        let joint = (-b * v * v / (ab * bb) - a * v / ab - b * v / bb).exp();
        clamp01(T::one() - e1 - k * e2 + k * joint)
    }

    /// `μ = a + b(v − α_B)/β_B`, `k = bα_B/β_B` and `L = v/α_B` of the MRC integral.
    fn mrc_shape(&self, v: T) -> (T, T, T) {
        let (ab, bb) = (self.alloc.alpha_b, self.alloc.beta_b);
        (self.a + self.b * (v - ab) / bb, self.b * ab / bb, v / ab)
    }

    /// CDF of the maximal-ratio-combined eavesdropper SINR by its power series.
    pub fn cdf_v_mrc_series(&self, v: T, max_terms: usize, rel_tol: T) -> SeriesValue<T> {
        if v <= T::zero() {
            return SeriesValue {
                value: T::zero(),
                terms: 0,
                converged: true,
            };
        }
        let (mu, k, l) = self.mrc_shape(v);
        let ln_front = -self.b * v / self.alloc.beta_b + self.a.ln();
        let peak = k * l * l;
        let mut sum = T::zero();
        let mut terms = 0;
        let mut converged = false;
        for m in 0..max_terms {
            let ln_t = ln_power_moment(m, mu, l);
            let mf = T::lit(m as f64);
            let term = (ln_front + mf * k.ln() - ln_gamma(mf + T::one()) + ln_t).exp();
            sum = sum + term;
            terms = m + 1;
            if term <= rel_tol * sum && mf + T::one() > peak {
                converged = true;
                break;
            }
        }
        SeriesValue {
            value: clamp01(T::one() - (-self.a * v / self.alloc.alpha_b).exp() - sum),
            terms,
            converged,
        }
    }

    /// CDF of the maximal-ratio-combined eavesdropper SINR by direct quadrature.
    pub fn cdf_v_mrc_quadrature(&self, v: T) -> Result<T> {
        if v <= T::zero() {
            return Ok(T::zero());
        }
        let (mu, k, l) = self.mrc_shape(v);
        let front = -self.b * v / self.alloc.beta_b;
        let a = self.a;
        let integral = integrate_adaptive(
            |z: T| a * (front - mu * z + k * z * z).exp(),
            &[T::zero(), l],
            T::lit(1e-14),
            T::lit(1e-12),
        )?;
        Ok(clamp01(T::one() - (-self.a * v / self.alloc.alpha_b).exp() - integral))
    }

    /// MRC eavesdropper CDF: the series, with quadrature if it has not converged.
    pub fn cdf_v_mrc(&self, v: T, cfg: &SopConfig) -> Result<T> {
        let s = self.cdf_v_mrc_series(v, cfg.mrc_series_max_terms, T::lit(cfg.mrc_series_rel_tol));
        if s.converged {
            Ok(s.value)
        } else {
            self.cdf_v_mrc_quadrature(v)
        }
    }

    pub fn cdf_v(&self, v: T, cfg: &SopConfig) -> Result<T> {
        match cfg.mode {
            Combining::Sc => Ok(self.cdf_v_sc(v)),
            Combining::Mrc => self.cdf_v_mrc(v, cfg),
        }
    }

    /// Hop exponents `g(u) = c·u/min(α_W − uα_B, α_B)` and their derivatives.
    fn hop(scale: T, hi: T, lo: T, u: T) -> (T, T) {
        let gap = hi - u * lo;
        if gap >= lo {
            (scale * u / lo, scale / lo)
        } else {
            (scale * u / gap, scale * hi / (gap * gap))
        }
    }

    /// CDF of `U = min(γ_R, γ_B)`.
    pub fn cdf_u(&self, u: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        if u >= self.theta_cap {
            return T::one();
        }
        let al = &self.alloc;
        let (g1, _) = Self::hop(self.c, al.alpha_w, al.alpha_b, u);
        let (g2, _) = Self::hop(self.d, al.beta_t, al.beta_b, u);
        clamp01(-(-(g1 + g2)).exp_m1())
    }

    /// Density of `U`; jumps where either hop switches regime.
    pub fn pdf_u(&self, u: T) -> T {
        if u < T::zero() || u >= self.theta_cap {
            return T::zero();
        }
        let al = &self.alloc;
        let (g1, d1) = Self::hop(self.c, al.alpha_w, al.alpha_b, u);
        let (g2, d2) = Self::hop(self.d, al.beta_t, al.beta_b, u);
        (d1 + d2) * (-(g1 + g2)).exp()
    }

    /// Points in `(0, Θ)` where the density of `U` jumps.
    pub fn pdf_u_kinks(&self) -> Vec<T> {
        let al = &self.alloc;
        let mut k: Vec<T> = [al.alpha_w / al.alpha_b - T::one(), al.beta_t / al.beta_b - T::one()]
            .into_iter()
            .filter(|&x| x > T::zero() && x < self.theta_cap)
            .collect();
        k.sort_by(|a, b| a.partial_cmp(b).expect("finite kinks"));
        k
    }

    /// Integrand `f_U(u)·F_V((u − γ̄)/(1 + γ̄))` of the outage complement.
    fn sop_integrand(&self, u: T, gamma_bar: T, cfg: &SopConfig) -> Result<T> {
        Ok(self.pdf_u(u) * self.cdf_v((u - gamma_bar) / (T::one() + gamma_bar), cfg)?)
    }

    /// Secrecy outage probability by Gauss–Chebyshev quadrature.
    pub fn sop(&self, r_b: T, cfg: &SopConfig) -> Result<T> {
        cfg.validate()?;
        if r_b < T::zero() {
            return Err(Error::InvalidParams(format!(
                "target rate must be nonnegative, got {r_b}"
            )));
        }
        let gamma_bar = threshold_sinr(r_b);
        if gamma_bar >= self.theta_cap {
            return Ok(T::one());
        }
        let rule = chebyshev_rule::<T>(cfg.quadrature_order)?;
        let mut pts = vec![gamma_bar];
        if cfg.split_at_kinks {
            pts.extend(self.pdf_u_kinks().into_iter().filter(|&k| k > gamma_bar));
        }
        pts.push(self.theta_cap);
        let mut err = None;
        let mut covered = T::zero();
        for w in pts.windows(2) {
            covered = covered
                + rule.integrate(w[0], w[1], |u| {
                    self.sop_integrand(u, gamma_bar, cfg).unwrap_or_else(|e| {
                        err = Some(e);
                        T::zero()
                    })
                });
        }
        if let Some(e) = err {
            return Err(e);
        }
        Ok(clamp01(T::one() - covered))
    }

    /// Secrecy outage probability by adaptive quadrature split at the density jumps.
    pub fn sop_adaptive(&self, r_b: T, cfg: &SopConfig) -> Result<T> {
        let gamma_bar = threshold_sinr(r_b);
        if gamma_bar >= self.theta_cap {
            return Ok(T::one());
        }
        let mut pts = vec![gamma_bar];
        pts.extend(self.pdf_u_kinks().into_iter().filter(|&k| k > gamma_bar));
        pts.push(self.theta_cap);
        let mut err = None;
        let covered = integrate_adaptive(
            |u| {
                self.sop_integrand(u, gamma_bar, cfg).unwrap_or_else(|e| {
                    err = Some(e);
                    T::zero()
                })
            },
            &pts,
            T::lit(1e-13),
            T::lit(1e-12),
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(clamp01(T::one() - covered))
    }
}

fn clamp01<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// `ln ∫₀ᴸ z^{2m} e^{−μz} dz` for any real `μ`.
fn ln_power_moment<T: Real>(m: usize, mu: T, l: T) -> T {
    let order = T::lit((2 * m + 1) as f64);
    let x = mu * l;
    if mu > T::zero() && x > order {
        // regularized lower gamma is far from underflow here
        return ln_gamma(order) + reg_gamma_lower(order, x).expect("positive shape").ln() - order * mu.ln();
    }
    let tol = T::epsilon();
    if mu >= T::zero() {
        // L^{2m+1} e^{−μL} Σ_j (μL)^j / Π_{i=1..j+1} (2m + i)
        let mut term = T::one() / order;
        let mut sum = term;
        let mut j = 1.0;
        while term > tol * sum {
            term = term * x / (order + T::lit(j));
            sum = sum + term;
            j += 1.0;
        }
        order * l.ln() - x + sum.ln()
    } else {
        // L^{2m+1} Σ_j (|μ|L)^j / (j! (2m + 1 + j))
        let y = -x;
        let mut pow = T::one();
        let mut sum = T::one() / order;
        let mut j = 1.0;
        loop {
            pow = pow * y / T::lit(j);
            let term = pow / (order + T::lit(j));
            sum = sum + term;
            if term <= tol * sum && T::lit(j) > y {
                break;
            }
            j += 1.0;
        }
        order * l.ln() + sum.ln()
    }
}

pub fn cdf_v_sc<T: Real>(v: T, params: &SystemParams<T>, alloc: &PowerAllocation<T>) -> Result<T> {
    Ok(SecrecyModel::new(params, alloc)?.cdf_v_sc(v))
}

pub fn cdf_v_mrc<T: Real>(
    v: T,
    params: &SystemParams<T>,
    alloc: &PowerAllocation<T>,
    cfg: &SopConfig,
) -> Result<SeriesValue<T>> {
    Ok(SecrecyModel::new(params, alloc)?.cdf_v_mrc_series(v, cfg.mrc_series_max_terms, T::lit(cfg.mrc_series_rel_tol)))
}

pub fn cdf_u<T: Real>(u: T, params: &SystemParams<T>, alloc: &PowerAllocation<T>) -> Result<T> {
    Ok(SecrecyModel::new(params, alloc)?.cdf_u(u))
}

pub fn pdf_u<T: Real>(u: T, params: &SystemParams<T>, alloc: &PowerAllocation<T>) -> Result<T> {
    Ok(SecrecyModel::new(params, alloc)?.pdf_u(u))
}

pub fn sop<T: Real>(params: &SystemParams<T>, alloc: &PowerAllocation<T>, r_b: T, cfg: &SopConfig) -> Result<T> {
    SecrecyModel::new(params, alloc)?.sop(r_b, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(aw: f64, bt: f64) -> SecrecyModel<f64> {
        SecrecyModel::new(&SystemParams::reference(), &PowerAllocation::tight(aw, bt)).unwrap()
    }

    #[test]
    fn eve_cdf_limits() {
        let m = model(0.8, 0.8);
        assert_eq!(m.cdf_v_sc(0.0), 0.0);
        assert!((m.cdf_v_sc(1e9) - 1.0).abs() < 1e-9);
        let cfg = SopConfig::new(Combining::Mrc);
        assert_eq!(m.cdf_v_mrc(0.0, &cfg).unwrap(), 0.0);
        assert!((m.cdf_v_mrc(1e4, &cfg).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mrc_series_matches_quadrature() {
        for &(aw, bt) in &[(0.6, 0.6), (0.8, 0.8), (0.8, 0.6), (0.95, 0.7)] {
            let m = model(aw, bt);
            for i in 1..40 {
                let v = 0.05 * i as f64;
                let s = m.cdf_v_mrc_series(v, 400, 1e-14);
                assert!(s.converged);
                let q = m.cdf_v_mrc_quadrature(v).unwrap();
                assert!((s.value - q).abs() < 1e-11, "v={v} series={} quad={q}", s.value);
            }
        }
    }

    #[test]
    fn power_moment_against_quadrature() {
        for &m in &[0usize, 1, 3, 10, 40] {
            for &mu in &[-3.0, -0.2, 0.0, 0.4, 2.0, 30.0] {
                for &l in &[0.01, 0.7, 4.0] {
                    let direct =
                        integrate_adaptive(|z: f64| z.powi(2 * m as i32) * (-mu * z).exp(), &[0.0, l], 0.0, 1e-13)
                            .unwrap();
                    assert_relative_eq!(ln_power_moment(m, mu, l), direct.ln(), epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn mrc_dominates_sc() {
        let m = model(0.7, 0.7);
        let cfg = SopConfig::new(Combining::Mrc);
        for i in 0..50 {
            let v = 0.1 * i as f64;
            assert!(m.cdf_v_mrc(v, &cfg).unwrap() <= m.cdf_v_sc(v) + 1e-12);
        }
    }

    #[test]
    fn u_law_edges() {
        let m = model(0.8, 0.6);
        assert_eq!(m.cdf_u(0.0), 0.0);
        assert_eq!(m.cdf_u(m.theta_cap), 1.0);
        assert_eq!(m.pdf_u(m.theta_cap), 0.0);
        assert_eq!(m.pdf_u(m.theta_cap + 1.0), 0.0);
    }

    #[test]
    fn u_density_integrates_to_one() {
        for &(aw, bt) in &[(0.6, 0.6), (0.8, 0.6), (0.9, 0.75)] {
            let m = model(aw, bt);
            let mut pts = vec![0.0];
            pts.extend(m.pdf_u_kinks());
            pts.push(m.theta_cap);
            let total = integrate_adaptive(|u| m.pdf_u(u), &pts, 1e-14, 1e-13).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "total={total}");
        }
    }

    #[test]
    fn sop_trivial_and_self_convergent() {
        let m = model(0.6, 0.6);
        let sc = SopConfig::new(Combining::Sc);
        assert_eq!(m.sop(2.0, &sc).unwrap(), 1.0);
        let mut lo = sc;
        lo.quadrature_order = 100;
        let mut hi = sc;
        hi.quadrature_order = 400;
        let a = m.sop(0.2, &lo).unwrap();
        let b = m.sop(0.2, &hi).unwrap();
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }

    #[test]
    fn chebyshev_matches_adaptive() {
        for mode in [Combining::Sc, Combining::Mrc] {
            let mut cfg = SopConfig::new(mode);
            cfg.quadrature_order = 400;
            let smooth = model(0.55, 0.55);
            assert!(smooth.pdf_u_kinks().iter().all(|&k| k < threshold_sinr(0.2)));
            let reference = smooth.sop_adaptive(0.2, &cfg).unwrap();
            assert!((smooth.sop(0.2, &cfg).unwrap() - reference).abs() < 1e-6);
            cfg.split_at_kinks = true;
            for &(aw, bt) in &[(0.55, 0.55), (0.8, 0.8), (0.8, 0.6), (0.95, 0.7)] {
                let m = model(aw, bt);
                for &r in &[0.05, 0.2, 0.5] {
                    let (a, b) = (m.sop(r, &cfg).unwrap(), m.sop_adaptive(r, &cfg).unwrap());
                    assert!((a - b).abs() < 1e-6, "{mode} ({aw},{bt}) r={r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut c = SopConfig::new(Combining::Sc);
        c.quadrature_order = 0;
        assert!(c.validate().is_err());
        assert!(model(0.6, 0.6).sop(0.2, &c).is_err());
    }
}
