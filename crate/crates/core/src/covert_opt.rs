//! Closed-form max-min covert-rate power allocation.

use serde::{Deserialize, Serialize};

use crate::covertness::{alpha_region_root, beta_region_root_with};
use crate::error::{Error, Result};
use crate::model::{
    adaptive_relay_power, compute_sinrs_with, half_rate, threshold_sinr, ChannelRealization, PowerAllocation,
    SystemParams,
};

/// Which link gains enter the fairness coupling between `α_W` and `β_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessForm {
    /// Source–relay and relay–Bob gains, which equalize the two covert SINRs.
    #[default]
    SinrConsistent,
    /// Warden gains `|h_RE|²`, `|h_SE|²` in place of the legitimate ones.
    Printed,
}

/// Constraint that determines `β_T*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    /// Phase-two covertness region.
    DepRegion,
    /// Willie's first-phase rate, reached through the fairness coupling.
    QosWillie,
    /// Tom's second-phase rate.
    QosTom,
    /// Phase-one covertness region, reached through the fairness coupling.
    Fairness,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovertSolution {
    pub alloc: PowerAllocation<f64>,
    pub covert_rate: f64,
    pub binding_constraint: Binding,
    pub feasible: bool,
    pub p_r: f64,
    pub alpha_root: f64,
    pub beta_root: f64,
}

/// Largest relay power meeting Willie's second-phase rate `r̂_W`.
pub fn relay_power_cap(params: &SystemParams<f64>, ch: &ChannelRealization<f64>, r_w_hat: f64) -> Result<f64> {
    if !(r_w_hat > 0.0) {
        return Err(Error::InvalidParams(format!("r_w_hat must be positive, got {r_w_hat}")));
    }
    Ok(adaptive_relay_power(params.p_s, params.sigma2, ch, r_w_hat))
}

/// QoS lower bounds `(lb_α, lb_β)` on `α_W` and `β_T` under full budgets.
pub fn qos_lower_bounds_with(params: &SystemParams<f64>, p_r: f64, ch: &ChannelRealization<f64>) -> Result<(f64, f64)> {
    let l1 = ch.g.sr.min(ch.g.sw);
    let l2 = ch.g.rt.min(ch.g.rb);
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::InvalidParams("l1 and l2 must be positive".into()));
    }
    let bound = |gbar: f64, p: f64, l: f64| gbar * (p + params.sigma2 / l) / ((1.0 + gbar) * p);
    Ok((
        bound(threshold_sinr(params.r_w), params.p_s, l1),
        bound(threshold_sinr(params.r_t), p_r, l2),
    ))
}

pub fn qos_lower_bounds(params: &SystemParams<f64>, ch: &ChannelRealization<f64>) -> Result<(f64, f64)> {
    qos_lower_bounds_with(params, params.relay_power(ch), ch)
}

/// Ratio `ρ` with `α_W = 1 − (1 − β_T)ρ`.
fn fairness_ratio(params: &SystemParams<f64>, p_r: f64, ch: &ChannelRealization<f64>, form: FairnessForm) -> f64 {
    match form {
        FairnessForm::SinrConsistent => p_r * ch.g.rb / (params.p_s * ch.g.sr),
        FairnessForm::Printed => p_r * ch.g.re / (params.p_s * ch.g.se),
    }
}

/// `α_W` that equalizes the covert SINRs at Roy and Bob under full budgets.
pub fn fairness_alpha_with(
    beta_t: f64,
    params: &SystemParams<f64>,
    p_r: f64,
    ch: &ChannelRealization<f64>,
    form: FairnessForm,
) -> f64 {
    1.0 - (1.0 - beta_t) * fairness_ratio(params, p_r, ch, form)
}

pub fn fairness_alpha(beta_t: f64, params: &SystemParams<f64>, ch: &ChannelRealization<f64>) -> f64 {
    fairness_alpha_with(beta_t, params, params.relay_power(ch), ch, FairnessForm::SinrConsistent)
}

/// `min{R_R^{c_B}, R_B^{c_B}}` at an allocation.
pub fn covert_rate_at(
    params: &SystemParams<f64>,
    p_r: f64,
    alloc: &PowerAllocation<f64>,
    ch: &ChannelRealization<f64>,
) -> f64 {
    let s = compute_sinrs_with(params, p_r, alloc, ch);
    half_rate(s.gamma_r_cb.min(s.gamma_b_cb))
}

/// Max-min covert-rate allocation for one realization.
pub fn maxmin_covert_pa_with(
    params: &SystemParams<f64>,
    ch: &ChannelRealization<f64>,
    p_dep_th: f64,
    form: FairnessForm,
) -> Result<CovertSolution> {
    params.validate()?;
    let p_r = params.relay_power(ch);
    let alpha_root = alpha_region_root(params, p_dep_th)?;
    if !(p_r > 0.0) {
        return Ok(CovertSolution {
            alloc: PowerAllocation::tight(1.0, 1.0),
            covert_rate: 0.0,
            binding_constraint: Binding::QosTom,
            feasible: false,
            p_r,
            alpha_root,
            beta_root: 1.0,
        });
    }
    let beta_root = beta_region_root_with(params, p_r, p_dep_th)?;
    let (lb_alpha, lb_beta) = qos_lower_bounds_with(params, p_r, ch)?;
    let alpha_floor = alpha_root.max(lb_alpha);
    let rho = fairness_ratio(params, p_r, ch, form);
    let coupled = 1.0 - (1.0 - alpha_floor) / rho;

    let mut beta_t = beta_root;
    let mut binding = Binding::DepRegion;
    if lb_beta > beta_t {
        beta_t = lb_beta;
        binding = Binding::QosTom;
    }
    if coupled > beta_t {
        beta_t = coupled;
        binding = if lb_alpha > alpha_root {
            Binding::QosWillie
        } else {
            Binding::Fairness
        };
    }
    let feasible = beta_t <= 1.0 && alpha_floor <= 1.0;
    let beta_t = beta_t.min(1.0);
    let alpha_w = fairness_alpha_with(beta_t, params, p_r, ch, form);
    let alloc = PowerAllocation::tight(alpha_w, beta_t);
    let covert_rate = if feasible {
        covert_rate_at(params, p_r, &alloc, ch)
    } else {
        0.0
    };
    Ok(CovertSolution {
        alloc,
        covert_rate,
        binding_constraint: binding,
        feasible,
        p_r,
        alpha_root,
        beta_root,
    })
}

pub fn maxmin_covert_pa(
    params: &SystemParams<f64>,
    ch: &ChannelRealization<f64>,
    p_dep_th: f64,
) -> Result<CovertSolution> {
    maxmin_covert_pa_with(params, ch, p_dep_th, FairnessForm::SinrConsistent)
}

/// Exhaustive `res × res` search over `(α_W, β_T) ∈ [0.5, 1]²` with full budgets.
///
/// QoS is checked on the exact rates and covertness on the minimum DEPs of
/// each grid coordinate. Returns the best covert rate and its allocation.
pub fn grid_oracle_covert(
    params: &SystemParams<f64>,
    ch: &ChannelRealization<f64>,
    p_dep_th: f64,
    res: usize,
) -> Result<Option<(f64, PowerAllocation<f64>)>> {
    use crate::covertness::{min_dep_phase1_at, min_dep_phase2_with};
    use crate::model::{rates_from_sinrs, Combining};
    if res < 2 {
        return Err(Error::InvalidParams("grid resolution must be at least 2".into()));
    }
    let p_r = params.relay_power(ch);
    if !(p_r > 0.0) {
        return Ok(None);
    }
    let axis: Vec<f64> = (0..res).map(|i| 0.5 + 0.5 * i as f64 / (res - 1) as f64).collect();
    let mut alpha_ok = Vec::with_capacity(res);
    let mut beta_ok = Vec::with_capacity(res);
    for &x in &axis {
        alpha_ok.push(min_dep_phase1_at(params.n_samples, x)? >= p_dep_th);
        beta_ok.push(min_dep_phase2_with(params, p_r, x)? >= p_dep_th);
    }
    let tol = 1e-12;
    let mut best: Option<(f64, PowerAllocation<f64>)> = None;
    for (i, &aw) in axis.iter().enumerate() {
        if !alpha_ok[i] {
            continue;
        }
        for (j, &bt) in axis.iter().enumerate() {
            if !beta_ok[j] {
                continue;
            }
            let alloc = PowerAllocation::tight(aw, bt);
            let r = rates_from_sinrs(&compute_sinrs_with(params, p_r, &alloc, ch), Combining::Sc);
            if r.r_r_sw.min(r.r_w_sw) < params.r_w - tol || r.r_b_st.min(r.r_t_st) < params.r_t - tol {
                continue;
            }
            let v = r.r_r_cb.min(r.r_b_cb);
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, alloc));
            }
        }
    }
    Ok(best)
}
