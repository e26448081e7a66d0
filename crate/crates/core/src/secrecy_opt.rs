//! Secrecy-rate maximization by successive convex approximation.
//!
//! Each round replaces the nonconvex secrecy constraints by convex bounds that
//! are tight at the previous iterate and solves the resulting nine-variable
//! problem with a logarithmic barrier method.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::covert_opt::qos_lower_bounds_with;
use crate::error::{Error, Result};
use crate::model::{
    achievable_rates, compute_sinrs_with, rates_from_sinrs, ChannelRealization, Combining, PowerAllocation,
    SystemParams,
};

pub const NVAR: usize = 9;
type Vec9 = SVector<f64, NVAR>;
type Mat9 = SMatrix<f64, NVAR, NVAR>;

/// Positions of the decision variables.
pub mod var {
    pub const ALPHA_W: usize = 0;
    pub const ALPHA_B: usize = 1;
    pub const BETA_T: usize = 2;
    pub const BETA_B: usize = 3;
    pub const PHI: usize = 4;
    pub const T_B: usize = 5;
    pub const T_E: usize = 6;
    pub const Q: usize = 7;
    pub const P: usize = 8;
}
use var::*;

const LOG2_SCALE: f64 = 1.0 / (2.0 * std::f64::consts::LN_2);

/// Lower bound of `ln(1 + x)` tight at `x̂`.
pub fn log_bound_shifted(x: f64, x_hat: f64) -> Result<f64> {
    if !(x > 0.0 && x_hat > 0.0) {
        return Err(Error::Domain {
            function: "log_bound_shifted",
            value: x.min(x_hat),
            expected: "x, x_hat > 0",
        });
    }
    Ok(x_hat.ln_1p() + x_hat * x_hat / (x_hat + 1.0) * (1.0 / x_hat - 1.0 / x))
}

/// Lower bound of `ln x` tight at `x̂`.
pub fn log_bound_plain(x: f64, x_hat: f64) -> Result<f64> {
    if !(x > 0.0 && x_hat > 0.0) {
        return Err(Error::Domain {
            function: "log_bound_plain",
            value: x.min(x_hat),
            expected: "x, x_hat > 0",
        });
    }
    Ok(x_hat.ln() + x_hat * (1.0 / x_hat - 1.0 / x))
}

/// Upper bound `½(ŷ/x̂)x² + ½(x̂/ŷ)y²` of `x·y`, tight at `(x̂, ŷ)`.
pub fn bilinear_upper(x: f64, y: f64, x_hat: f64, y_hat: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0 && x_hat > 0.0 && y_hat > 0.0) {
        return Err(Error::Domain {
            function: "bilinear_upper",
            value: x.min(y).min(x_hat).min(y_hat),
            expected: "all arguments > 0",
        });
    }
    Ok(0.5 * y_hat / x_hat * x * x + 0.5 * x_hat / y_hat * y * y)
}

/// Direction of the eavesdropper SINR constraints on `t_E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveDirection {
    /// `t_E` bounds the eavesdropper SINR from above, making `φ` a secrecy lower bound.
    #[default]
    AtLeast,
    /// `t_E` bounded above by the eavesdropper SINR.
    AtMost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaConfig {
    pub mode: Combining,
    pub eps: f64,
    pub max_iter: usize,
    pub eve_direction: EveDirection,
    pub solver_tol: f64,
    /// Lower limit on `|φ|` in the relative-change stopping test.
    pub phi_floor: f64,
}

impl ScaConfig {
    pub fn new(mode: Combining) -> Self {
        Self {
            mode,
            eps: 1e-2,
            max_iter: 50,
            eve_direction: EveDirection::AtLeast,
            solver_tol: 1e-8,
            phi_floor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaState {
    pub alloc: PowerAllocation<f64>,
    pub t_b: f64,
    pub t_e: f64,
    pub q: f64,
    pub p: f64,
    pub phi: f64,
    pub iteration: usize,
    /// Exact secrecy rate at `alloc`.
    pub exact_secrecy: f64,
}

impl ScaState {
    fn to_vec(self) -> Vec9 {
        let a = self.alloc;
        Vec9::from([
            a.alpha_w, a.alpha_b, a.beta_t, a.beta_b, self.phi, self.t_b, self.t_e, self.q, self.p,
        ])
    }

    fn from_vec(x: &Vec9, iteration: usize, exact_secrecy: f64) -> Self {
        Self {
            alloc: PowerAllocation::new(x[ALPHA_W], x[ALPHA_B], x[BETA_T], x[BETA_B]),
            t_b: x[T_B],
            t_e: x[T_E],
            q: x[Q],
            p: x[P],
            phi: x[PHI],
            iteration,
            exact_secrecy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaTrace {
    pub states: Vec<ScaState>,
    pub converged: bool,
    pub p_r: f64,
}

/// Kind tag used to enumerate the constraints of a subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Nonlinear,
    Linear,
    Box,
}

/// One constraint `g(x) ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    /// `a·x − b ≤ 0`.
    Linear { a: Vec9, b: f64, is_box: bool },
    /// `φ ≤ s[ln(1+t̂_B) + t̂_B/(t̂_B+1) − c_b/t_B − p + 2 + ln q̂ − q̂/q]`.
    PhiBound { t_b_hat: f64, q_hat: f64 },
    /// `½·k_q q² + ½·k_e (1 + t_E)² − p ≤ 0`.
    QuadraticP { k_q: f64, k_e: f64 },
    /// `x[½ r t_B² + ½ c²/r] + t_B − x·w ≤ 0` with `c`, `w` the covert and public coefficients.
    SicCap {
        gain: f64,
        ratio: f64,
        covert: usize,
        public: usize,
    },
}

impl Constraint {
    fn linear(pairs: &[(usize, f64)], b: f64) -> Self {
        let mut a = Vec9::zeros();
        for &(i, v) in pairs {
            a[i] += v;
        }
        Constraint::Linear { a, b, is_box: false }
    }

    fn positive(i: usize) -> Self {
        let mut a = Vec9::zeros();
        a[i] = -1.0;
        Constraint::Linear {
            a,
            b: 0.0,
            is_box: true,
        }
    }

    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Linear { is_box: true, .. } => ConstraintKind::Box,
            Constraint::Linear { .. } => ConstraintKind::Linear,
            _ => ConstraintKind::Nonlinear,
        }
    }

    pub fn value(&self, x: &Vec9) -> f64 {
        match *self {
            Constraint::Linear { ref a, b, .. } => a.dot(x) - b,
            Constraint::PhiBound { t_b_hat, q_hat } => {
                let c_b = t_b_hat * t_b_hat / (t_b_hat + 1.0);
                let rhs =
                    t_b_hat.ln_1p() + t_b_hat / (t_b_hat + 1.0) - c_b / x[T_B] - x[P] + 2.0 + q_hat.ln() - q_hat / x[Q];
                x[PHI] - LOG2_SCALE * rhs
            }
            Constraint::QuadraticP { k_q, k_e } => 0.5 * k_q * x[Q] * x[Q] + 0.5 * k_e * (1.0 + x[T_E]).powi(2) - x[P],
            Constraint::SicCap {
                gain,
                ratio,
                covert,
                public,
            } => {
                gain * (0.5 * ratio * x[T_B] * x[T_B] + 0.5 / ratio * x[covert] * x[covert]) + x[T_B] - gain * x[public]
            }
        }
    }

    pub fn gradient(&self, x: &Vec9) -> Vec9 {
        let mut g = Vec9::zeros();
        match *self {
            Constraint::Linear { ref a, .. } => g = *a,
            Constraint::PhiBound { t_b_hat, q_hat } => {
                let c_b = t_b_hat * t_b_hat / (t_b_hat + 1.0);
                g[PHI] = 1.0;
                g[T_B] = -LOG2_SCALE * c_b / (x[T_B] * x[T_B]);
                g[P] = LOG2_SCALE;
                g[Q] = -LOG2_SCALE * q_hat / (x[Q] * x[Q]);
            }
            Constraint::QuadraticP { k_q, k_e } => {
                g[Q] = k_q * x[Q];
                g[T_E] = k_e * (1.0 + x[T_E]);
                g[P] = -1.0;
            }
            Constraint::SicCap {
                gain,
                ratio,
                covert,
                public,
            } => {
                g[T_B] = gain * ratio * x[T_B] + 1.0;
                g[covert] = gain * x[covert] / ratio;
                g[public] = -gain;
            }
        }
        g
    }

    pub fn hessian(&self, x: &Vec9) -> Mat9 {
        let mut h = Mat9::zeros();
        match *self {
            Constraint::Linear { .. } => {}
            Constraint::PhiBound { t_b_hat, q_hat } => {
                let c_b = t_b_hat * t_b_hat / (t_b_hat + 1.0);
                h[(T_B, T_B)] = 2.0 * LOG2_SCALE * c_b / x[T_B].powi(3);
                h[(Q, Q)] = 2.0 * LOG2_SCALE * q_hat / x[Q].powi(3);
            }
            Constraint::QuadraticP { k_q, k_e } => {
                h[(Q, Q)] = k_q;
                h[(T_E, T_E)] = k_e;
            }
            Constraint::SicCap {
                gain, ratio, covert, ..
            } => {
                h[(T_B, T_B)] = gain * ratio;
                h[(covert, covert)] = gain / ratio;
            }
        }
        h
    }
}

/// Channel-dependent constants shared by every subproblem of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Gains {
    /// `P_s|h_SR|²/σ²`.
    x_sr: f64,
    /// `P_r|h_RB|²/σ²`.
    x_rb: f64,
    /// `P_s|h_SE|²/σ²`.
    e1: f64,
    /// `P_r|h_RE|²/(P_s|h_SE|² + σ²)`.
    e2: f64,
    lb_alpha: f64,
    lb_beta: f64,
}

/// Convex subproblem `max φ s.t. g_i(x) ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSubproblem {
    pub constraints: Vec<Constraint>,
}

impl ConvexSubproblem {
    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind() == kind).count()
    }

    pub fn max_violation(&self, x: &Vec9) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn strictly_feasible(&self, x: &Vec9) -> bool {
        x.iter().all(|v| v.is_finite()) && self.constraints.iter().all(|c| c.value(x) < 0.0)
    }

    fn barrier(&self, x: &Vec9, t: f64) -> f64 {
        -t * x[PHI] - self.constraints.iter().map(|c| (-c.value(x)).ln()).sum::<f64>()
    }
}

fn gains(params: &SystemParams<f64>, p_r: f64, ch: &ChannelRealization<f64>) -> Result<Gains> {
    let (lb_alpha, lb_beta) = qos_lower_bounds_with(params, p_r, ch)?;
    let s2 = params.sigma2;
    Ok(Gains {
        x_sr: params.p_s * ch.g.sr / s2,
        x_rb: p_r * ch.g.rb / s2,
        e1: params.p_s * ch.g.se / s2,
        e2: p_r * ch.g.re / (params.p_s * ch.g.se + s2),
        lb_alpha,
        lb_beta,
    })
}

fn assemble(state: &ScaState, g: &Gains, cfg: &ScaConfig) -> Result<ConvexSubproblem> {
    let (tb, te, q, ab, bb) = (state.t_b, state.t_e, state.q, state.alloc.alpha_b, state.alloc.beta_b);
    if !(tb > 0.0 && te >= 0.0 && q > 0.0 && ab > 0.0 && bb > 0.0) {
        return Err(Error::Infeasible(format!("local point outside the domain: {state:?}")));
    }
    let mut c = vec![
        Constraint::PhiBound { t_b_hat: tb, q_hat: q },
        Constraint::QuadraticP {
            k_q: (1.0 + te) / q,
            k_e: q / (1.0 + te),
        },
        Constraint::SicCap {
            gain: g.x_sr,
            ratio: ab / tb,
            covert: ALPHA_B,
            public: ALPHA_W,
        },
        Constraint::SicCap {
            gain: g.x_rb,
            ratio: bb / tb,
            covert: BETA_B,
            public: BETA_T,
        },
        Constraint::linear(&[(T_B, 1.0), (ALPHA_B, -g.x_sr)], 0.0),
        Constraint::linear(&[(T_B, 1.0), (BETA_B, -g.x_rb)], 0.0),
    ];
    let sign = match cfg.eve_direction {
        EveDirection::AtLeast => -1.0,
        EveDirection::AtMost => 1.0,
    };
    match cfg.mode {
        Combining::Sc => {
            c.push(Constraint::linear(&[(T_E, sign), (ALPHA_B, -sign * g.e1)], 0.0));
            c.push(Constraint::linear(&[(T_E, sign), (BETA_B, -sign * g.e2)], 0.0));
        }
        Combining::Mrc => {
            c.push(Constraint::linear(
                &[(T_E, sign), (ALPHA_B, -sign * g.e1), (BETA_B, -sign * g.e2)],
                0.0,
            ));
        }
    }
    c.push(Constraint::linear(&[(ALPHA_W, -1.0)], -g.lb_alpha));
    c.push(Constraint::linear(&[(BETA_T, -1.0)], -g.lb_beta));
    c.push(Constraint::linear(&[(ALPHA_W, 1.0), (ALPHA_B, 1.0)], 1.0));
    c.push(Constraint::linear(&[(BETA_T, 1.0), (BETA_B, 1.0)], 1.0));
    for i in [T_B, T_E, Q, P] {
        c.push(Constraint::positive(i));
    }
    Ok(ConvexSubproblem { constraints: c })
}

/// Builds the convex subproblem around `state`.
pub fn assemble_subproblem(
    state: &ScaState,
    params: &SystemParams<f64>,
    ch: &ChannelRealization<f64>,
    cfg: &ScaConfig,
) -> Result<ConvexSubproblem> {
    assemble(state, &gains(params, params.relay_power(ch), ch)?, cfg)
}

/// Result of one barrier solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vec9,
    pub duality_gap: f64,
    pub newton_steps: usize,
}

/// Maximizes `φ` over the subproblem from a strictly feasible `x0`.
pub fn solve_subproblem(sp: &ConvexSubproblem, x0: &Vec9, tol: f64) -> Result<SubproblemSolution> {
    const MU: f64 = 10.0;
    const MAX_NEWTON: usize = 200;
    const ALPHA: f64 = 0.01;
    const BETA: f64 = 0.5;
    if !sp.strictly_feasible(x0) {
        return Err(Error::Infeasible(format!(
            "start point not strictly feasible (max violation {:.3e})",
            sp.max_violation(x0)
        )));
    }
    let m = sp.constraints.len() as f64;
    let mut x = *x0;
    let mut t = 1.0;
    let mut steps = 0;
    loop {
        for _ in 0..MAX_NEWTON {
            let mut grad = Vec9::zeros();
            grad[PHI] = -t;
            let mut hess = Mat9::zeros();
            for c in &sp.constraints {
                let v = -c.value(&x);
                let gi = c.gradient(&x);
                grad += gi / v;
                hess += gi * gi.transpose() / (v * v) + c.hessian(&x) / v;
            }
            let step = match hess.cholesky() {
                Some(ch) => ch.solve(&(-grad)),
                None => {
                    let reg = hess + Mat9::identity() * (1e-12 * hess.norm().max(1.0));
                    reg.cholesky()
                        .ok_or_else(|| Error::Degenerate("singular barrier Hessian".into()))?
                        .solve(&(-grad))
                }
            };
            let decrement = -grad.dot(&step);
            if decrement / 2.0 <= 1e-12 {
                break;
            }
            let f0 = sp.barrier(&x, t);
            let mut s = 1.0;
            loop {
                let cand = x + step * s;
                if sp.strictly_feasible(&cand) && sp.barrier(&cand, t) <= f0 - ALPHA * s * decrement {
                    x = cand;
                    break;
                }
                s *= BETA;
                if s < 1e-20 {
                    break;
                }
            }
            steps += 1;
            if s < 1e-20 {
                break;
            }
        }
        if m / t < tol {
            return Ok(SubproblemSolution {
                x,
                duality_gap: m / t,
                newton_steps: steps,
            });
        }
        t *= MU;
    }
}

/// Exact secrecy rate and QoS status at an allocation.
fn exact_secrecy(
    params: &SystemParams<f64>,
    p_r: f64,
    alloc: &PowerAllocation<f64>,
    ch: &ChannelRealization<f64>,
    mode: Combining,
) -> f64 {
    rates_from_sinrs(&compute_sinrs_with(params, p_r, alloc, ch), mode).sec
}

const INIT_ETA: f64 = 1e-3;

/// Strictly feasible point with the given allocation and auxiliaries just inside their bounds.
fn start_at(
    alloc: PowerAllocation<f64>,
    g: &Gains,
    cfg: &ScaConfig,
    params: &SystemParams<f64>,
    p_r: f64,
    ch: &ChannelRealization<f64>,
) -> Result<Option<ScaState>> {
    let eta = INIT_ETA;
    let s = compute_sinrs_with(params, p_r, &alloc, ch);
    let t_b = (1.0 - eta) * s.gamma_r_sw.min(s.gamma_r_cb).min(s.gamma_b_st).min(s.gamma_b_cb);
    let t_e = match (cfg.mode, cfg.eve_direction) {
        (Combining::Sc, EveDirection::AtLeast) => s.gamma_e_cb_1.max(s.gamma_e_cb_2) * (1.0 + eta) + eta,
        (Combining::Mrc, EveDirection::AtLeast) => (s.gamma_e_cb_1 + s.gamma_e_cb_2) * (1.0 + eta) + eta,
        (Combining::Sc, EveDirection::AtMost) => s.gamma_e_cb_1.min(s.gamma_e_cb_2) * (1.0 - eta),
        (Combining::Mrc, EveDirection::AtMost) => (s.gamma_e_cb_1 + s.gamma_e_cb_2) * (1.0 - eta),
    };
    if !(t_b > 0.0 && t_e > 0.0) {
        return Ok(None);
    }
    let q = 1.0 / (1.0 + t_e);
    let p = (1.0 + eta) * q * (1.0 + t_e) + eta;
    let rhs = LOG2_SCALE * (t_b.ln_1p() + q.ln() - p + 1.0);
    let state = ScaState {
        alloc,
        t_b,
        t_e,
        q,
        p,
        phi: rhs - eta * (1.0 + rhs.abs()),
        iteration: 0,
        exact_secrecy: exact_secrecy(params, p_r, &alloc, ch, cfg.mode),
    };
    Ok(assemble(&state, g, cfg)?
        .strictly_feasible(&state.to_vec())
        .then_some(state))
}

/// Strictly feasible start with the covert messages taking almost all of the remaining budget.
fn initial_state(
    g: &Gains,
    cfg: &ScaConfig,
    params: &SystemParams<f64>,
    p_r: f64,
    ch: &ChannelRealization<f64>,
) -> Result<ScaState> {
    let mut margin = 0.01;
    while margin > 1e-6 {
        let aw = g.lb_alpha.max(0.5) + margin;
        let bt = g.lb_beta.max(0.5) + margin;
        if aw < 1.0 && bt < 1.0 {
            let alloc = PowerAllocation::new(aw, (1.0 - aw) * (1.0 - INIT_ETA), bt, (1.0 - bt) * (1.0 - INIT_ETA));
            if let Some(s) = start_at(alloc, g, cfg, params, p_r, ch)? {
                return Ok(s);
            }
        }
        margin *= 0.5;
    }
    Err(Error::Infeasible(format!(
        "no strictly feasible start (lb_alpha = {:.4}, lb_beta = {:.4})",
        g.lb_alpha, g.lb_beta
    )))
}

/// Runs the SCA iteration until the relative change of `φ` falls below `cfg.eps`.
pub fn sca_maximize_secrecy(
    params: &SystemParams<f64>,
    ch: &ChannelRealization<f64>,
    cfg: &ScaConfig,
) -> Result<(ScaTrace, f64)> {
    params.validate()?;
    let p_r = params.relay_power(ch);
    if !(p_r > 0.0) {
        return Err(Error::Infeasible("relay power cap is zero".into()));
    }
    let g = gains(params, p_r, ch)?;
    let mut state = initial_state(&g, cfg, params, p_r, ch)?;
    let mut states = vec![state];
    let mut converged = false;
    for k in 1..=cfg.max_iter {
        let sp = assemble(&state, &g, cfg)?;
        let x0 = state.to_vec();
        let sol = solve_subproblem(&sp, &x0, cfg.solver_tol)?;
        let x = if sol.x[PHI] >= x0[PHI] { sol.x } else { x0 };
        let alloc = PowerAllocation::new(x[ALPHA_W], x[ALPHA_B], x[BETA_T], x[BETA_B]);
        let next = ScaState::from_vec(&x, k, exact_secrecy(params, p_r, &alloc, ch, cfg.mode));
        let change = (next.phi - state.phi).abs() / state.phi.abs().max(cfg.phi_floor);
        states.push(next);
        state = next;
        if change <= cfg.eps {
            converged = true;
            break;
        }
    }
    let final_rate = achievable_rates(&with_relay(params, p_r), &state.alloc, ch, cfg.mode).sec;
    Ok((ScaTrace { states, converged, p_r }, final_rate))
}

fn with_relay(params: &SystemParams<f64>, p_r: f64) -> SystemParams<f64> {
    let mut p = *params;
    p.p_r = crate::model::RelayPower::Fixed(p_r);
    p
}

/// Exhaustive search over `(α_B, β_B)` on a `res × res` grid with full budgets.
///
/// Returns the best exact secrecy rate and its allocation among grid points
/// meeting both QoS rate targets, or `None` if no point does.
pub fn grid_oracle_secrecy(
    params: &SystemParams<f64>,
    ch: &ChannelRealization<f64>,
    mode: Combining,
    res: usize,
) -> Result<Option<(f64, PowerAllocation<f64>)>> {
    if res < 2 {
        return Err(Error::InvalidParams("grid resolution must be at least 2".into()));
    }
    let p_r = params.relay_power(ch);
    let tol = 1e-12;
    let mut best: Option<(f64, PowerAllocation<f64>)> = None;
    for i in 0..res {
        let ab = i as f64 / (res - 1) as f64;
        for j in 0..res {
            let bb = j as f64 / (res - 1) as f64;
            let alloc = PowerAllocation::new(1.0 - ab, ab, 1.0 - bb, bb);
            let r = rates_from_sinrs(&compute_sinrs_with(params, p_r, &alloc, ch), mode);
            if r.r_r_sw.min(r.r_w_sw) < params.r_w - tol || r.r_b_st.min(r.r_t_st) < params.r_t - tol {
                continue;
            }
            if best.is_none_or(|(b, _)| r.sec > b) {
                best = Some((r.sec, alloc));
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_channels, RelayPower};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn fig5(p_s: f64) -> SystemParams<f64> {
        let mut p = SystemParams::reference();
        p.p_s = p_s;
        p.p_r = RelayPower::Adaptive;
        p
    }

    #[test]
    fn lemma_bounds_examples() {
        assert_relative_eq!(log_bound_shifted(2.0, 2.0).unwrap(), 3f64.ln(), max_relative = 1e-15);
        assert!(log_bound_shifted(5.0, 1.0).unwrap() <= 6f64.ln());
        assert_relative_eq!(log_bound_plain(1.7, 1.7).unwrap(), 1.7f64.ln(), max_relative = 1e-15);
        let e = std::f64::consts::E;
        assert_relative_eq!(log_bound_plain(e, 1.0).unwrap(), 1.0 - 1.0 / e, max_relative = 1e-15);
        assert_relative_eq!(bilinear_upper(2.0, 3.0, 1.0, 1.0).unwrap(), 6.5);
        assert_relative_eq!(bilinear_upper(2.0, 3.0, 2.0, 3.0).unwrap(), 6.0, max_relative = 1e-15);
        assert!(log_bound_shifted(0.0, 1.0).is_err());
        assert!(bilinear_upper(1.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lemma_bounds_hold_on_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let draw = |r: &mut rand_chacha::ChaCha8Rng| 10f64.powf(r.random_range(-3.0..3.0));
        for _ in 0..10_000 {
            let (x, xh, y, yh) = (draw(&mut rng), draw(&mut rng), draw(&mut rng), draw(&mut rng));
            assert!(log_bound_shifted(x, xh).unwrap() <= x.ln_1p() + 1e-12);
            assert!(log_bound_plain(x, xh).unwrap() <= x.ln() + 1e-12);
            assert!(bilinear_upper(x, y, xh, yh).unwrap() >= x * y * (1.0 - 1e-12));
        }
    }

    fn any_state(params: &SystemParams<f64>, ch: &ChannelRealization<f64>, mode: Combining) -> ScaState {
        let cfg = ScaConfig::new(mode);
        let p_r = params.relay_power(ch);
        initial_state(&gains(params, p_r, ch).unwrap(), &cfg, params, p_r, ch).unwrap()
    }

    #[test]
    fn constraint_counts() {
        let p = fig5(100.0);
        let ch = sample_channels(&p, 1);
        for (mode, linear) in [(Combining::Sc, 8), (Combining::Mrc, 7)] {
            let s = any_state(&p, &ch, mode);
            let sp = assemble_subproblem(&s, &p, &ch, &ScaConfig::new(mode)).unwrap();
            assert_eq!(sp.count(ConstraintKind::Nonlinear), 4);
            assert_eq!(sp.count(ConstraintKind::Linear), linear);
            assert_eq!(sp.count(ConstraintKind::Box), 4);
            assert!(sp.strictly_feasible(&s.to_vec()));
        }
    }

    #[test]
    fn bounds_tight_at_local_point() {
        let p = fig5(100.0);
        let ch = sample_channels(&p, 2);
        let s = any_state(&p, &ch, Combining::Sc);
        let sp = assemble_subproblem(&s, &p, &ch, &ScaConfig::new(Combining::Sc)).unwrap();
        let x = s.to_vec();
        let phi_rhs = LOG2_SCALE * (s.t_b.ln_1p() + s.q.ln() - s.p + 1.0);
        assert_relative_eq!(sp.constraints[0].value(&x), s.phi - phi_rhs, epsilon = 1e-12);
        assert_relative_eq!(sp.constraints[1].value(&x), s.q * (1.0 + s.t_e) - s.p, epsilon = 1e-12);
        let g = gains(&p, p.relay_power(&ch), &ch).unwrap();
        let exact = s.t_b * (s.alloc.alpha_b * g.x_sr + 1.0) - s.alloc.alpha_w * g.x_sr;
        assert_relative_eq!(sp.constraints[2].value(&x), exact, epsilon = 1e-9 * g.x_sr);
    }

    #[test]
    fn nonlinear_constraints_are_convex() {
        let p = fig5(100.0);
        let ch = sample_channels(&p, 3);
        let s = any_state(&p, &ch, Combining::Mrc);
        let sp = assemble_subproblem(&s, &p, &ch, &ScaConfig::new(Combining::Mrc)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let x = Vec9::from_fn(|_, _| rng.random_range(0.05..3.0));
            let y = Vec9::from_fn(|_, _| rng.random_range(0.05..3.0));
            let mid = (x + y) * 0.5;
            for c in sp.constraints.iter().filter(|c| c.kind() == ConstraintKind::Nonlinear) {
                assert!(c.value(&mid) <= 0.5 * (c.value(&x) + c.value(&y)) + 1e-9);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = fig5(100.0);
        let ch = sample_channels(&p, 4);
        let s = any_state(&p, &ch, Combining::Sc);
        let sp = assemble_subproblem(&s, &p, &ch, &ScaConfig::new(Combining::Sc)).unwrap();
        let x = s.to_vec();
        let h = 1e-6;
        for c in &sp.constraints {
            let g = c.gradient(&x);
            let hs = c.hessian(&x);
            for i in 0..NVAR {
                let mut e = Vec9::zeros();
                e[i] = h;
                let fd = (c.value(&(x + e)) - c.value(&(x - e))) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()), "grad {i}");
                let gd = (c.gradient(&(x + e)) - c.gradient(&(x - e))) / (2.0 * h);
                for j in 0..NVAR {
                    assert!(
                        (gd[j] - hs[(j, i)]).abs() <= 1e-4 * (1.0 + hs[(j, i)].abs()),
                        "hess {i},{j}"
                    );
                }
            }
        }
    }

    #[test]
    fn no_eavesdropper_subproblem() {
        let p = fig5(100.0);
        let mut ch = sample_channels(&p, 5);
        ch.g.se = 0.0;
        ch.g.re = 0.0;
        let cfg = ScaConfig::new(Combining::Sc);
        let s = any_state(&p, &ch, Combining::Sc);
        let local = ScaState { q: 1.0, t_e: 0.0, ..s };
        let sp = assemble_subproblem(&local, &p, &ch, &cfg).unwrap();
        let sol = solve_subproblem(&sp, &s.to_vec(), 1e-9).unwrap();
        assert!(sol.x[T_E] < 1e-6);
        assert!((sol.x[P] - sol.x[Q]).abs() < 1e-4);
        assert!((sol.x[Q] - 1.0).abs() < 1e-3);
        let (trace, rate) = sca_maximize_secrecy(&p, &ch, &cfg).unwrap();
        let last = trace.states.last().unwrap();
        let r = achievable_rates(&with_relay(&p, trace.p_r), &last.alloc, &ch, Combining::Sc);
        assert_relative_eq!(rate, r.r_b, max_relative = 1e-12);
    }

    /// Maximum of the subproblem objective for fixed `(α_B, β_B)` with every auxiliary tight.
    fn reduced_objective(
        sp: &ConvexSubproblem,
        g: &Gains,
        s: &ScaState,
        mode: Combining,
        ab: f64,
        bb: f64,
    ) -> Option<f64> {
        let (aw, bt) = (1.0 - ab, 1.0 - bb);
        if aw < g.lb_alpha || bt < g.lb_beta || ab <= 0.0 || bb <= 0.0 {
            return None;
        }
        let sic = |gain: f64, ratio: f64, c: f64, w: f64| {
            let (qa, qb, qc) = (0.5 * gain * ratio, 1.0, 0.5 * gain * c * c / ratio - gain * w);
            let disc = qb * qb - 4.0 * qa * qc;
            (disc >= 0.0).then(|| (-qb + disc.sqrt()) / (2.0 * qa))
        };
        let t_b = (ab * g.x_sr)
            .min(bb * g.x_rb)
            .min(sic(g.x_sr, s.alloc.alpha_b / s.t_b, ab, aw)?)
            .min(sic(g.x_rb, s.alloc.beta_b / s.t_b, bb, bt)?);
        if !(t_b > 0.0) {
            return None;
        }
        let t_e = match mode {
            Combining::Sc => (ab * g.e1).max(bb * g.e2),
            Combining::Mrc => ab * g.e1 + bb * g.e2,
        };
        let (k_q, k_e) = match sp.constraints[1] {
            Constraint::QuadraticP { k_q, k_e } => (k_q, k_e),
            _ => unreachable!(),
        };
        let q = (s.q / k_q).cbrt();
        let p = 0.5 * k_q * q * q + 0.5 * k_e * (1.0 + t_e).powi(2);
        let mut x = Vec9::from([aw, ab, bt, bb, 0.0, t_b, t_e, q, p]);
        x[PHI] = 0.0;
        Some(-sp.constraints[0].value(&x))
    }

    #[test]
    fn subproblem_matches_reduction_oracle() {
        let p = fig5(100.0);
        for seed in 0..4 {
            let ch = sample_channels(&p, 20 + seed);
            for mode in [Combining::Sc, Combining::Mrc] {
                let s = any_state(&p, &ch, mode);
                let g = gains(&p, p.relay_power(&ch), &ch).unwrap();
                let sp = assemble(&s, &g, &ScaConfig::new(mode)).unwrap();
                let sol = solve_subproblem(&sp, &s.to_vec(), 1e-9).unwrap();
                assert!(sp.max_violation(&sol.x) <= 1e-8);
                let eval = |ab: f64, bb: f64| reduced_objective(&sp, &g, &s, mode, ab, bb).unwrap_or(f64::NEG_INFINITY);
                let (mut lo_a, mut hi_a, mut lo_b, mut hi_b) = (0.0, 1.0, 0.0, 1.0);
                let mut best = f64::NEG_INFINITY;
                let n = 400;
                for _ in 0..6 {
                    let (ha, hb) = ((hi_a - lo_a) / n as f64, (hi_b - lo_b) / n as f64);
                    let mut arg = (lo_a, lo_b);
                    for i in 0..=n {
                        for j in 0..=n {
                            let (ab, bb) = (lo_a + i as f64 * ha, lo_b + j as f64 * hb);
                            let v = eval(ab, bb);
                            if v > best {
                                best = v;
                                arg = (ab, bb);
                            }
                        }
                    }
                    (lo_a, hi_a) = ((arg.0 - 4.0 * ha).max(0.0), (arg.0 + 4.0 * ha).min(1.0));
                    (lo_b, hi_b) = ((arg.1 - 4.0 * hb).max(0.0), (arg.1 + 4.0 * hb).min(1.0));
                }
                assert!(
                    sol.x[PHI] >= best - 1e-6,
                    "seed={seed} {mode}: solver {} grid {best}",
                    sol.x[PHI]
                );
                assert!(
                    sol.x[PHI] <= best + 1e-4,
                    "seed={seed} {mode}: solver {} grid {best}",
                    sol.x[PHI]
                );
            }
        }
    }

    #[test]
    fn sca_is_monotone_and_terminates() {
        let p = fig5(100.0);
        for seed in 0..10 {
            let ch = sample_channels(&p, 40 + seed);
            for mode in [Combining::Sc, Combining::Mrc] {
                let Ok((trace, rate)) = sca_maximize_secrecy(&p, &ch, &ScaConfig::new(mode)) else {
                    continue;
                };
                assert!(trace.converged);
                for w in trace.states.windows(2) {
                    assert!(w[1].phi >= w[0].phi);
                }
                assert!(rate >= trace.states.last().unwrap().phi - 1e-9);
            }
        }
    }

    #[test]
    fn oracle_corner_grid() {
        let p = fig5(100.0);
        let ch = sample_channels(&p, 6);
        let corners = grid_oracle_secrecy(&p, &ch, Combining::Sc, 2).unwrap();
        if let Some((v, a)) = corners {
            assert!([0.0, 1.0].contains(&a.alpha_b) && [0.0, 1.0].contains(&a.beta_b));
            assert!(v >= 0.0);
        }
        assert!(grid_oracle_secrecy(&p, &ch, Combining::Sc, 1).is_err());
    }
}
