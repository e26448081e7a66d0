//! System parameters, channel draws, SINRs and achievable rates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

/// The seven point-to-point links of the two-phase network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Link {
    SR,
    RB,
    SW,
    SE,
    RT,
    RE,
    RW,
}

impl Link {
    pub const ALL: [Link; 7] = [Link::SR, Link::RB, Link::SW, Link::SE, Link::RT, Link::RE, Link::RW];
}

/// One value per link: average gains `λ_XY` or realized gains `|h_XY|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGains<T> {
    pub sr: T,
    pub rb: T,
    pub sw: T,
    pub se: T,
    pub rt: T,
    pub re: T,
    pub rw: T,
}

impl<T: Copy> LinkGains<T> {
    pub fn uniform(v: T) -> Self {
        Self {
            sr: v,
            rb: v,
            sw: v,
            se: v,
            rt: v,
            re: v,
            rw: v,
        }
    }

    pub fn get(&self, link: Link) -> T {
        match link {
            Link::SR => self.sr,
            Link::RB => self.rb,
            Link::SW => self.sw,
            Link::SE => self.se,
            Link::RT => self.rt,
            Link::RE => self.re,
            Link::RW => self.rw,
        }
    }

    pub fn set(&mut self, link: Link, v: T) {
        match link {
            Link::SR => self.sr = v,
            Link::RB => self.rb = v,
            Link::SW => self.sw = v,
            Link::SE => self.se = v,
            Link::RT => self.rt = v,
            Link::RE => self.re = v,
            Link::RW => self.rw = v,
        }
    }
}

/// How the relay transmit power `P_r` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum RelayPower<T> {
    /// Fixed linear power in mW.
    Fixed(T),
    /// `P_r = ratio · P_s`.
    RatioOfSource(T),
    /// Largest `P_r` that keeps Willie's second-phase rate at `r̂_W` for the realized channel.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    pub p_s: T,
    pub p_r: RelayPower<T>,
    pub sigma2: T,
    pub lambda: LinkGains<T>,
    pub n_samples: u32,
    pub r_w: T,
    pub r_t: T,
    pub r_w_hat: T,
    pub r_b: T,
    pub p_dep_th: T,
}

impl<T: Real> SystemParams<T> {
    /// Default simulation setting: `P_s = 10 dBm`, `σ² = 1`, `λ_SR = λ_RB = 1`,
    /// remaining links 0.5, `N = 15`, rates 0.25 (secrecy target 0.2),
    /// covertness target 0.8 and `P_r = 0.5 P_s`.
    pub fn reference() -> Self {
        let mut lambda = LinkGains::uniform(T::lit(0.5));
        lambda.sr = T::one();
        lambda.rb = T::one();
        Self {
            p_s: T::lit(10.0),
            p_r: RelayPower::RatioOfSource(T::half()),
            sigma2: T::one(),
            lambda,
            n_samples: 15,
            r_w: T::lit(0.25),
            r_t: T::lit(0.25),
            r_w_hat: T::lit(0.25),
            r_b: T::lit(0.2),
            p_dep_th: T::lit(0.8),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
            }
        };
        let nonneg = |name: &str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be nonnegative, got {v}")))
            }
        };
        pos("p_s", self.p_s)?;
        pos("sigma2", self.sigma2)?;
        for link in Link::ALL {
            pos(&format!("lambda_{link:?}"), self.lambda.get(link))?;
        }
        match self.p_r {
            RelayPower::Fixed(v) | RelayPower::RatioOfSource(v) => nonneg("p_r", v)?,
            RelayPower::Adaptive => {}
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParams("n_samples must be at least 1".into()));
        }
        nonneg("r_w", self.r_w)?;
        nonneg("r_t", self.r_t)?;
        nonneg("r_w_hat", self.r_w_hat)?;
        nonneg("r_b", self.r_b)?;
        if !(self.p_dep_th >= T::zero() && self.p_dep_th <= T::one()) {
            return Err(Error::InvalidParams(format!(
                "p_dep_th must lie in [0, 1], got {}",
                self.p_dep_th
            )));
        }
        Ok(())
    }

    /// Relay power for a channel-independent analysis; the adaptive policy needs a realization.
    pub fn relay_power_static(&self) -> Result<T> {
        match self.p_r {
            RelayPower::Fixed(v) => Ok(v),
            RelayPower::RatioOfSource(r) => Ok(r * self.p_s),
            RelayPower::Adaptive => Err(Error::InvalidParams(
                "adaptive relay power requires a channel realization".into(),
            )),
        }
    }

    /// Relay power under the configured policy for the realization `ch`.
    pub fn relay_power(&self, ch: &ChannelRealization<T>) -> T {
        match self.p_r {
            RelayPower::Fixed(v) => v,
            RelayPower::RatioOfSource(r) => r * self.p_s,
            RelayPower::Adaptive => adaptive_relay_power(self.p_s, self.sigma2, ch, self.r_w_hat),
        }
    }

    pub fn n(&self) -> T {
        T::lit(f64::from(self.n_samples))
    }
}

/// `max(0, (P_s|h_SW|²/(2^{2r̂_W} − 1) − σ²)/|h_RW|²)`.
pub fn adaptive_relay_power<T: Real>(p_s: T, sigma2: T, ch: &ChannelRealization<T>, r_w_hat: T) -> T {
    let gbar = threshold_sinr(r_w_hat);
    let cap = (p_s * ch.g.sw / gbar - sigma2) / ch.g.rw;
    if cap > T::zero() {
        cap
    } else {
        T::zero()
    }
}

/// SINR needed for a rate of `rate` bps/Hz over half a slot, `2^{2·rate} − 1`.
pub fn threshold_sinr<T: Real>(rate: T) -> T {
    (T::two() * rate * T::LN_2()).exp_m1()
}

/// Half-slot rate `0.5·log₂(1 + γ)`.
pub fn half_rate<T: Real>(gamma: T) -> T {
    T::half() * gamma.ln_1p() / T::LN_2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation<T> {
    pub alpha_w: T,
    pub alpha_b: T,
    pub beta_t: T,
    pub beta_b: T,
}

impl<T: Real> PowerAllocation<T> {
    pub fn new(alpha_w: T, alpha_b: T, beta_t: T, beta_b: T) -> Self {
        Self {
            alpha_w,
            alpha_b,
            beta_t,
            beta_b,
        }
    }

    /// Full-budget allocation `(α_W, 1 − α_W, β_T, 1 − β_T)`.
    pub fn tight(alpha_w: T, beta_t: T) -> Self {
        Self::new(alpha_w, T::one() - alpha_w, beta_t, T::one() - beta_t)
    }

    /// Checks the coefficient ranges, NOMA ordering and power budgets.
    pub fn validate(&self, tol: T) -> Result<()> {
        let c = [self.alpha_w, self.alpha_b, self.beta_t, self.beta_b];
        if c.iter().any(|&x| !(x >= -tol && x <= T::one() + tol)) {
            return Err(Error::InvalidParams(format!("coefficients outside [0, 1]: {self:?}")));
        }
        if self.alpha_w <= self.alpha_b || self.beta_t <= self.beta_b {
            return Err(Error::InvalidParams(format!("NOMA ordering violated: {self:?}")));
        }
        if self.alpha_w + self.alpha_b > T::one() + tol || self.beta_t + self.beta_b > T::one() + tol {
            return Err(Error::InvalidParams(format!("power budget exceeded: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization<T> {
    pub g: LinkGains<T>,
    pub tau_se: T,
    pub tau_re: T,
}

/// Draws every link gain and the `N`-sample warden aggregates from `rng`.
pub fn draw_channels<R: Rng + ?Sized>(params: &SystemParams<f64>, rng: &mut R) -> ChannelRealization<f64> {
    let mut g = LinkGains::uniform(0.0);
    for link in Link::ALL {
        g.set(link, rng::exponential(rng, params.lambda.get(link)));
    }
    let tau_se = rng::gamma_sum(rng, params.n_samples, params.lambda.se);
    let tau_re = rng::gamma_sum(rng, params.n_samples, params.lambda.re);
    ChannelRealization { g, tau_se, tau_re }
}

/// One realization from stream 0 of `seed`.
pub fn sample_channels(params: &SystemParams<f64>, seed: u64) -> ChannelRealization<f64> {
    draw_channels(params, &mut rng::stream(seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrSet<T> {
    pub gamma_r_sw: T,
    pub gamma_r_cb: T,
    pub gamma_w_sw: T,
    pub gamma_b_st: T,
    pub gamma_b_cb: T,
    pub gamma_t_st: T,
    pub gamma_w_sw_hat: T,
    pub gamma_e_cb_1: T,
    pub gamma_e_cb_2: T,
}

/// SINRs of both phases with the relay power given explicitly.
pub fn compute_sinrs_with<T: Real>(
    params: &SystemParams<T>,
    p_r: T,
    alloc: &PowerAllocation<T>,
    ch: &ChannelRealization<T>,
) -> SinrSet<T> {
    let s2 = params.sigma2;
    let ps = params.p_s;
    let g = &ch.g;
    let superposed = |own: T, other: T, p: T, h: T| own * p * h / (other * p * h + s2);
    SinrSet {
        gamma_r_sw: superposed(alloc.alpha_w, alloc.alpha_b, ps, g.sr),
        gamma_r_cb: alloc.alpha_b * ps * g.sr / s2,
        gamma_w_sw: superposed(alloc.alpha_w, alloc.alpha_b, ps, g.sw),
        gamma_b_st: superposed(alloc.beta_t, alloc.beta_b, p_r, g.rb),
        gamma_b_cb: alloc.beta_b * p_r * g.rb / s2,
        gamma_t_st: superposed(alloc.beta_t, alloc.beta_b, p_r, g.rt),
        gamma_w_sw_hat: ps * g.sw / (p_r * g.rw + s2),
        gamma_e_cb_1: alloc.alpha_b * ps * g.se / s2,
        gamma_e_cb_2: alloc.beta_b * p_r * g.re / (ps * g.se + s2),
    }
}

pub fn compute_sinrs<T: Real>(
    params: &SystemParams<T>,
    alloc: &PowerAllocation<T>,
    ch: &ChannelRealization<T>,
) -> SinrSet<T> {
    compute_sinrs_with(params, params.relay_power(ch), alloc, ch)
}

/// Eavesdropper combining across the two phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combining {
    Sc,
    Mrc,
}

impl std::fmt::Display for Combining {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Combining::Sc => "sc",
            Combining::Mrc => "mrc",
        })
    }
}

pub fn eve_combined<T: Real>(mode: Combining, s: &SinrSet<T>) -> T {
    match mode {
        Combining::Sc => s.gamma_e_cb_1.max(s.gamma_e_cb_2),
        Combining::Mrc => s.gamma_e_cb_1 + s.gamma_e_cb_2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet<T> {
    /// First-phase effective rate of `c_B` at Roy.
    pub r_r: T,
    /// Second-phase effective rate of `c_B` at Bob.
    pub r_b_phase2: T,
    /// End-to-end rate of `c_B` at Bob.
    pub r_b: T,
    pub r_e: T,
    pub r_w_sw: T,
    pub r_w_sw_hat: T,
    pub r_t_st: T,
    pub r_b_st: T,
    pub r_r_sw: T,
    pub r_r_cb: T,
    pub r_b_cb: T,
    /// Secrecy capacity `[R_B − R_E]⁺`.
    pub sec: T,
}

pub fn rates_from_sinrs<T: Real>(s: &SinrSet<T>, mode: Combining) -> RateSet<T> {
    let gamma_r = s.gamma_r_sw.min(s.gamma_r_cb);
    let gamma_b = s.gamma_b_st.min(s.gamma_b_cb);
    let r_b = half_rate(gamma_r.min(gamma_b));
    let r_e = half_rate(eve_combined(mode, s));
    RateSet {
        r_r: half_rate(gamma_r),
        r_b_phase2: half_rate(gamma_b),
        r_b,
        r_e,
        r_w_sw: half_rate(s.gamma_w_sw),
        r_w_sw_hat: half_rate(s.gamma_w_sw_hat),
        r_t_st: half_rate(s.gamma_t_st),
        r_b_st: half_rate(s.gamma_b_st),
        r_r_sw: half_rate(s.gamma_r_sw),
        r_r_cb: half_rate(s.gamma_r_cb),
        r_b_cb: half_rate(s.gamma_b_cb),
        sec: (r_b - r_e).max(T::zero()),
    }
}

pub fn achievable_rates<T: Real>(
    params: &SystemParams<T>,
    alloc: &PowerAllocation<T>,
    ch: &ChannelRealization<T>,
    mode: Combining,
) -> RateSet<T> {
    rates_from_sinrs(&compute_sinrs(params, alloc, ch), mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConstants<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub theta_cap: T,
    pub gamma_bar_b: T,
    pub gamma_bar_w: T,
    pub gamma_bar_t: T,
    pub l1: T,
    pub l2: T,
}

/// Distribution constants for a given relay power; `l1`, `l2` come from `ch`.
pub fn derive_constants_with<T: Real>(
    params: &SystemParams<T>,
    p_r: T,
    alloc: &PowerAllocation<T>,
    ch: &ChannelRealization<T>,
) -> Result<AnalysisConstants<T>> {
    if !(alloc.alpha_b > T::zero()) || !(alloc.beta_b > T::zero()) {
        return Err(Error::InvalidParams(
            "alpha_b and beta_b must be positive for the SINR ceiling".into(),
        ));
    }
    let s2 = params.sigma2;
    let lam = &params.lambda;
    Ok(AnalysisConstants {
        a: s2 / (params.p_s * lam.se),
        b: s2 / (p_r * lam.re),
        c: s2 / (params.p_s * lam.sr),
        d: s2 / (p_r * lam.rb),
        theta_cap: (alloc.alpha_w / alloc.alpha_b).min(alloc.beta_t / alloc.beta_b),
        gamma_bar_b: threshold_sinr(params.r_b),
        gamma_bar_w: threshold_sinr(params.r_w),
        gamma_bar_t: threshold_sinr(params.r_t),
        l1: ch.g.sr.min(ch.g.sw),
        l2: ch.g.rt.min(ch.g.rb),
    })
}

pub fn derive_constants<T: Real>(
    params: &SystemParams<T>,
    alloc: &PowerAllocation<T>,
    ch: &ChannelRealization<T>,
) -> Result<AnalysisConstants<T>> {
    derive_constants_with(params, params.relay_power(ch), alloc, ch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_channel() -> ChannelRealization<f64> {
        ChannelRealization {
            g: LinkGains::uniform(1.0),
            tau_se: 15.0,
            tau_re: 15.0,
        }
    }

    #[test]
    fn roy_sinrs_by_substitution() {
        let p = SystemParams::<f64>::reference();
        let s = compute_sinrs(&p, &PowerAllocation::new(0.8, 0.2, 0.6, 0.4), &unit_channel());
        assert_relative_eq!(s.gamma_r_sw, 8.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(s.gamma_r_cb, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_covert_power() {
        let p = SystemParams::<f64>::reference();
        let s = compute_sinrs(&p, &PowerAllocation::new(1.0, 0.0, 0.6, 0.4), &unit_channel());
        assert_eq!(s.gamma_r_cb, 0.0);
        assert_eq!(s.gamma_e_cb_1, 0.0);
    }

    #[test]
    fn eve_second_phase_substitution() {
        let mut p = SystemParams::<f64>::reference();
        p.p_r = RelayPower::Fixed(5.0);
        let mut ch = unit_channel();
        ch.g.re = 0.4;
        ch.g.se = 0.1;
        let s = compute_sinrs(&p, &PowerAllocation::new(0.7, 0.3, 0.7, 0.3), &ch);
        assert_relative_eq!(s.gamma_e_cb_2, 0.3, max_relative = 1e-15);
    }

    #[test]
    fn combining() {
        let mut s = compute_sinrs(
            &SystemParams::<f64>::reference(),
            &PowerAllocation::new(0.8, 0.2, 0.8, 0.2),
            &unit_channel(),
        );
        s.gamma_e_cb_1 = 1.0;
        s.gamma_e_cb_2 = 0.3;
        assert_eq!(eve_combined(Combining::Sc, &s), 1.0);
        assert_relative_eq!(eve_combined(Combining::Mrc, &s), 1.3);
        s.gamma_e_cb_1 = 0.0;
        s.gamma_e_cb_2 = 0.0;
        assert_eq!(eve_combined(Combining::Sc, &s), 0.0);
        assert_eq!(eve_combined(Combining::Mrc, &s), 0.0);
    }

    #[test]
    fn rates_and_secrecy() {
        let s = SinrSet {
            gamma_r_sw: 3.0,
            gamma_r_cb: 5.0,
            gamma_w_sw: 1.0,
            gamma_b_st: 4.0,
            gamma_b_cb: 3.0,
            gamma_t_st: 1.0,
            gamma_w_sw_hat: 1.0,
            gamma_e_cb_1: 3.0,
            gamma_e_cb_2: 0.0,
        };
        let r = rates_from_sinrs(&s, Combining::Sc);
        assert_relative_eq!(r.r_b, 1.0, max_relative = 1e-15);
        assert_relative_eq!(r.r_e, 1.0, max_relative = 1e-15);
        assert_eq!(r.sec, 0.0);
    }

    #[test]
    fn constants_by_substitution() {
        let p = SystemParams::<f64>::reference();
        let k = derive_constants(&p, &PowerAllocation::new(0.8, 0.2, 0.6, 0.4), &unit_channel()).unwrap();
        assert_relative_eq!(k.a, 0.2, max_relative = 1e-15);
        assert_relative_eq!(k.theta_cap, 1.5, max_relative = 1e-15);
        assert_relative_eq!(k.gamma_bar_b, 0.319_507_910_772_894_3, max_relative = 1e-12);
        assert!(derive_constants(&p, &PowerAllocation::new(1.0, 0.0, 0.6, 0.4), &unit_channel()).is_err());
    }

    #[test]
    fn adaptive_relay_by_substitution() {
        let mut ch = unit_channel();
        ch.g.rw = 0.5;
        let pr = adaptive_relay_power(10.0, 1.0, &ch, 0.25);
        assert_relative_eq!(pr, (10.0 / (2f64.sqrt() - 1.0) - 1.0) / 0.5, max_relative = 1e-13);
        assert_relative_eq!(pr, 46.2843, max_relative = 1e-5);
        ch.g.sw = 0.01;
        assert_eq!(adaptive_relay_power(10.0, 1.0, &ch, 0.25), 0.0);
    }

    #[test]
    fn sampling_is_deterministic_with_expected_means() {
        let p = SystemParams::<f64>::reference();
        assert_eq!(sample_channels(&p, 9), sample_channels(&p, 9));
        let mut r = rng::stream(11, 0);
        let n = 1_000_000;
        let (mut sr, mut tau) = (0.0, 0.0);
        for _ in 0..n {
            let ch = draw_channels(&p, &mut r);
            sr += ch.g.sr;
            tau += ch.tau_se;
        }
        assert!((sr / n as f64 - 1.0).abs() < 0.01);
        assert!((tau / n as f64 - 7.5).abs() < 0.03);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut p = SystemParams::<f64>::reference();
        assert!(p.validate().is_ok());
        p.n_samples = 0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::<f64>::reference();
        p.p_dep_th = 1.5;
        assert!(p.validate().is_err());
        assert!(PowerAllocation::new(0.4, 0.6, 0.8, 0.2).validate(1e-12).is_err());
        assert!(PowerAllocation::new(0.8, 0.3, 0.8, 0.2).validate(1e-12).is_err());
        assert!(PowerAllocation::tight(0.8, 0.7).validate(1e-12).is_ok());
    }
}
