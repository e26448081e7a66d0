//! Monte Carlo estimators for detection error, outage and distribution values.
//!
//! Trials run in fixed-size chunks, each on its own stream of the master seed,
//! and chunk sums are reduced in chunk order, so results do not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    compute_sinrs, draw_channels, eve_combined, rates_from_sinrs, Combining, PowerAllocation, SystemParams,
};
use crate::rng;

pub const CHUNK: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors, with the error floored at `1/trials`.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.std_error.max(1.0 / self.trials as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepPhase {
    One,
    Two,
}

/// Quantities whose empirical CDF can be estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CdfQuantity {
    VSc,
    VMrc,
    U,
}

#[derive(Clone)]
struct Moments(Vec<(f64, f64)>);

impl Moments {
    fn new(k: usize) -> Self {
        Self(vec![(0.0, 0.0); k])
    }

    #[inline]
    fn push(&mut self, i: usize, x: f64) {
        self.0[i].0 += x;
        self.0[i].1 += x * x;
    }

    fn merge(mut self, other: &Moments) -> Self {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self
    }

    fn estimates(&self, trials: u64, seed: u64) -> Vec<McEstimate> {
        let n = trials as f64;
        self.0
            .iter()
            .map(|&(s, ss)| {
                let mean = s / n;
                let var = if trials > 1 {
                    ((ss - s * mean) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                McEstimate {
                    mean,
                    std_error: (var / n).sqrt(),
                    trials,
                    seed,
                }
            })
            .collect()
    }
}

/// Runs `trial` `trials` times, accumulating `outputs` values per trial.
fn run<F>(trials: u64, seed: u64, outputs: usize, trial: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut Moments) + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c);
            let mut acc = Moments::new(outputs);
            let count = CHUNK.min(trials - c * CHUNK);
            for _ in 0..count {
                trial(&mut rng, &mut acc);
            }
            acc
        })
        .collect();
    let total = partial.iter().fold(Moments::new(outputs), |acc, m| acc.merge(m));
    Ok(total.estimates(trials, seed))
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// DEP estimates at every threshold in `omegas`, sharing one set of warden draws.
pub fn mc_dep_sweep(
    params: &SystemParams<f64>,
    alloc: &PowerAllocation<f64>,
    omegas: &[f64],
    phase: DepPhase,
    trials: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    params.validate()?;
    let n = params.n();
    let ys: Vec<f64> = omegas.iter().map(|w| n * (w - params.sigma2)).collect();
    let p_s = params.p_s;
    let p_r = match phase {
        DepPhase::One => 0.0,
        DepPhase::Two => params.relay_power_static()?,
    };
    let (lam_se, lam_re, shape) = (params.lambda.se, params.lambda.re, params.n_samples);
    let (aw, bt) = (alloc.alpha_w, alloc.beta_t);
    run(trials, seed, ys.len(), |rng, acc| {
        let tau_se = rng::gamma_sum(rng, shape, lam_se);
        let (h0, h1) = match phase {
            DepPhase::One => (aw * p_s * tau_se, p_s * tau_se),
            DepPhase::Two => {
                let tau_re = rng::gamma_sum(rng, shape, lam_re);
                (p_s * tau_se + bt * p_r * tau_re, p_s * tau_se + p_r * tau_re)
            }
        };
        for (i, &y) in ys.iter().enumerate() {
            acc.push(i, indicator(h0 > y) + indicator(h1 < y));
        }
    })
}

/// DEP estimate `p_m + p_f` of the radiometer at threshold `omega`.
pub fn mc_dep(
    params: &SystemParams<f64>,
    alloc: &PowerAllocation<f64>,
    omega: f64,
    phase: DepPhase,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mc_dep_sweep(params, alloc, &[omega], phase, trials, seed)?[0])
}

/// Outage estimates for several `(combining, target rate)` cases on shared draws.
pub fn mc_sop_many(
    params: &SystemParams<f64>,
    alloc: &PowerAllocation<f64>,
    cases: &[(Combining, f64)],
    trials: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    params.validate()?;
    run(trials, seed, cases.len(), |rng, acc| {
        let ch = draw_channels(params, rng);
        let s = compute_sinrs(params, alloc, &ch);
        let sc = rates_from_sinrs(&s, Combining::Sc);
        let mrc = rates_from_sinrs(&s, Combining::Mrc);
        for (i, &(mode, r_b)) in cases.iter().enumerate() {
            let r = if mode == Combining::Sc { &sc } else { &mrc };
            acc.push(i, indicator(r.r_b - r.r_e <= r_b));
        }
    })
}

/// Estimate of `Pr(R_B − R_E ≤ r_b)`.
pub fn mc_sop(
    params: &SystemParams<f64>,
    alloc: &PowerAllocation<f64>,
    r_b: f64,
    mode: Combining,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mc_sop_many(params, alloc, &[(mode, r_b)], trials, seed)?[0])
}

/// Empirical CDF of `quantity` at each point of `grid`.
pub fn mc_empirical_cdf(
    quantity: CdfQuantity,
    grid: &[f64],
    params: &SystemParams<f64>,
    alloc: &PowerAllocation<f64>,
    trials: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    params.validate()?;
    run(trials, seed, grid.len(), |rng, acc| {
        let ch = draw_channels(params, rng);
        let s = compute_sinrs(params, alloc, &ch);
        let x = match quantity {
            CdfQuantity::VSc => eve_combined(Combining::Sc, &s),
            CdfQuantity::VMrc => eve_combined(Combining::Mrc, &s),
            CdfQuantity::U => s.gamma_r_sw.min(s.gamma_r_cb).min(s.gamma_b_st.min(s.gamma_b_cb)),
        };
        for (i, &g) in grid.iter().enumerate() {
            acc.push(i, indicator(x <= g));
        }
    })
}

/// Mean of an arbitrary per-realization statistic.
pub fn mc_mean<F>(params: &SystemParams<f64>, trials: u64, seed: u64, stat: F) -> Result<McEstimate>
where
    F: Fn(&crate::model::ChannelRealization<f64>) -> f64 + Sync,
{
    params.validate()?;
    Ok(run(trials, seed, 1, |rng, acc| {
        let ch = draw_channels(params, rng);
        acc.push(0, stat(&ch));
    })?[0])
}

/// Draws `count` channel realizations, realization `i` from stream `i` of `seed`.
pub fn realizations(params: &SystemParams<f64>, count: usize, seed: u64) -> Vec<crate::model::ChannelRealization<f64>> {
    (0..count as u64)
        .map(|i| draw_channels(params, &mut rng::stream(seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RelayPower;

    fn reference() -> SystemParams<f64> {
        SystemParams::reference()
    }

    #[test]
    fn dep_trivial_cases() {
        let p = reference();
        let a = PowerAllocation::tight(0.8, 0.8);
        assert_eq!(mc_dep(&p, &a, 1.0, DepPhase::One, 10_000, 1).unwrap().mean, 1.0);
        assert_eq!(mc_dep(&p, &a, 1.0, DepPhase::Two, 10_000, 1).unwrap().mean, 1.0);
        let one = PowerAllocation::tight(1.0, 0.8);
        let e = mc_dep(&p, &one, 4.0, DepPhase::One, 10_000, 1).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let p = reference();
        let a = PowerAllocation::tight(0.7, 0.7);
        let trials = 3 * CHUNK + 17;
        let x = mc_sop(&p, &a, 0.2, Combining::Mrc, trials, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let y = pool.install(|| mc_sop(&p, &a, 0.2, Combining::Mrc, trials, 5).unwrap());
        assert_eq!(x, y);
        assert_eq!(x.mean.to_bits(), y.mean.to_bits());
    }

    #[test]
    fn std_error_shrinks_with_trials() {
        let p = reference();
        let a = PowerAllocation::tight(0.8, 0.8);
        let small = mc_dep(&p, &a, 4.0, DepPhase::One, 200_000, 3).unwrap();
        let large = mc_dep(&p, &a, 4.0, DepPhase::One, 400_000, 4).unwrap();
        let ratio = large.std_error / small.std_error;
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.2 * std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn cdf_edges() {
        let p = reference();
        let a = PowerAllocation::tight(0.8, 0.6);
        for q in [CdfQuantity::VSc, CdfQuantity::VMrc, CdfQuantity::U] {
            assert_eq!(mc_empirical_cdf(q, &[0.0], &p, &a, 20_000, 2).unwrap()[0].mean, 0.0);
        }
        let theta = (0.8f64 / 0.2).min(0.6 / 0.4);
        assert_eq!(
            mc_empirical_cdf(CdfQuantity::U, &[theta], &p, &a, 20_000, 2).unwrap()[0].mean,
            1.0
        );
    }

    #[test]
    fn sop_limits() {
        let mut p = reference();
        let a = PowerAllocation::tight(0.6, 0.6);
        p.lambda.se = 1e-9;
        p.lambda.re = 1e-9;
        assert!(mc_sop(&p, &a, 0.0, Combining::Sc, 100_000, 1).unwrap().mean < 1e-3);
        p.lambda.se = 1e6;
        p.lambda.re = 1e6;
        p.p_r = RelayPower::RatioOfSource(0.5);
        assert!(mc_sop(&p, &a, 0.2, Combining::Sc, 100_000, 1).unwrap().mean > 0.999);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(mc_sop(
            &reference(),
            &PowerAllocation::tight(0.6, 0.6),
            0.2,
            Combining::Sc,
            0,
            1
        )
        .is_err());
    }
}
