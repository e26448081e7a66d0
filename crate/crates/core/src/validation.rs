//! Analytic-versus-oracle checks, one function per acceptance criterion.
//!
//! Every function returns a [`CriterionReport`] holding the individual checks
//! with their measured values, so callers can print or tabulate them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covert_opt::{covert_rate_at, grid_oracle_covert, maxmin_covert_pa};
use crate::covertness::{
    alpha_region_root, beta_region_root_with, dep_phase1, dep_phase2, gamma_fit_chi, min_dep_phase1, min_dep_phase1_at,
    min_dep_phase2_with, omega1_star, omega2_star, REGION_GRID,
};
use crate::error::Result;
use crate::model::{
    compute_sinrs_with, rates_from_sinrs, ChannelRealization, Combining, PowerAllocation, RelayPower, SystemParams,
};
use crate::montecarlo::{mc_dep_sweep, mc_empirical_cdf, mc_sop_many, realizations, CdfQuantity, DepPhase};
use crate::rng;
use crate::secrecy_analysis::{SecrecyModel, SopConfig};
use crate::secrecy_opt::{grid_oracle_secrecy, sca_maximize_secrecy, ScaConfig};
use crate::specfun::integrate_adaptive;

/// Trial budgets and seed for a validation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Monte Carlo trials for DEP, CDF and SOP comparisons.
    pub mc_trials: u64,
    /// Monte Carlo trials for the phase-two Gamma approximation check.
    pub phase2_trials: u64,
    /// Channel realizations for the covert-rate optimizer.
    pub covert_realizations: usize,
    /// Channel realizations for the secrecy optimizer.
    pub secrecy_realizations: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 20_250_101,
            mc_trials: 1_000_000,
            phase2_trials: 10_000_000,
            covert_realizations: 10,
            secrecy_realizations: 100,
        }
    }
}

/// One measured check inside a criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn new(id: u8, title: &str) -> Self {
        Self {
            id,
            title: title.to_string(),
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, label: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            label: label.to_string(),
            passed,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One-line summary listing failing checks.
    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let failing: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.label.as_str())
            .collect();
        if failing.is_empty() {
            format!("[{status}] {}. {}", self.id, self.title)
        } else {
            format!(
                "[{status}] {}. {} (failing: {})",
                self.id,
                self.title,
                failing.join(", ")
            )
        }
    }
}

pub const CRITERIA: [u8; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

/// Runs criterion `id` (1 to 8).
pub fn run_criterion(id: u8, cfg: &ValidationConfig) -> Result<CriterionReport> {
    match id {
        1 => dep_phase1_vs_mc(cfg),
        2 => optimal_threshold_identities(cfg),
        3 => dep_phase2_approximation(cfg),
        4 => effective_regions(cfg),
        5 => eavesdropper_distributions(cfg),
        6 => sop_vs_mc(cfg),
        7 => covert_optimizer(cfg),
        8 => secrecy_optimizer(cfg),
        _ => Err(crate::error::Error::Config(format!("no criterion {id}"))),
    }
}

/// Linear value of a dB (or dBm, giving mW) quantity.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

fn worst(acc: &mut f64, v: f64) {
    *acc = acc.max(v);
}

/// Covertness setting with `α_B = β_B = 0.2` and `P_r = 0.5 P_s`.
fn dep_setting(p_s: f64) -> (SystemParams<f64>, PowerAllocation<f64>) {
    let mut p = SystemParams::reference();
    p.p_s = p_s;
    (p, PowerAllocation::tight(0.8, 0.8))
}

/// Phase-one closed-form DEP within 3 standard errors of Monte Carlo on a 5×5 grid.
pub fn dep_phase1_vs_mc(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(1, "phase-one DEP closed form vs Monte Carlo");
    let omegas_db = [1.0, 3.0, 5.0, 7.0, 9.0];
    let omegas: Vec<f64> = omegas_db.iter().map(|&d| from_db(d)).collect();
    let (mut max_z, mut cells, mut bad) = (0.0f64, 0, 0);
    for (k, &ps_dbm) in [-10.0, 0.0, 10.0, 20.0, 30.0].iter().enumerate() {
        let (p, a) = dep_setting(from_db(ps_dbm));
        let mc = mc_dep_sweep(
            &p,
            &a,
            &omegas,
            DepPhase::One,
            cfg.mc_trials,
            rng::derive_seed(cfg.seed, k as u64),
        )?;
        for (est, &w) in mc.iter().zip(&omegas) {
            let analytic = dep_phase1(&p, &a, w)?.p_dep;
            let z = (analytic - est.mean).abs() / est.std_error.max(1.0 / est.trials as f64);
            worst(&mut max_z, z);
            cells += 1;
            if !est.agrees_with(analytic, 3.0) {
                bad += 1;
            }
        }
    }
    r.check(
        "grid within 3 sigma",
        bad == 0,
        format!("{cells} cells, {bad} outside, worst |z| = {max_z:.3}"),
    );
    Ok(r)
}

/// Index of the smallest value, first on ties.
fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
        )
        .0
}

/// Closed-form optimal thresholds against grid argmins and invariance of the minimum DEP in `P_s`.
pub fn optimal_threshold_identities(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(2, "optimal-threshold identities");
    let grid = 10_000;
    let mut draws = rng::stream(cfg.seed, 2);
    let (mut worst_steps, mut bad) = (0.0f64, 0);
    for _ in 0..10 {
        let n = draws.random_range(1..=30u32);
        let alpha_w = draws.random_range(0.5..0.99);
        let (mut p, a) = dep_setting(10.0);
        p.n_samples = n;
        let a = PowerAllocation::tight(alpha_w, a.beta_t);
        let hi = p.sigma2 + 2.0 * p.p_s * p.lambda.se;
        let step = (hi - p.sigma2) / grid as f64;
        let omegas: Vec<f64> = (1..=grid).map(|i| p.sigma2 + step * i as f64).collect();
        let deps = omegas
            .iter()
            .map(|&w| Ok(dep_phase1(&p, &a, w)?.p_dep))
            .collect::<Result<Vec<f64>>>()?;
        let star = omega1_star(&p, &a)?;
        let steps = (star - omegas[argmin(&deps)]).abs() / step;
        worst(&mut worst_steps, steps);
        if steps > 1.0 {
            bad += 1;
        }
    }
    r.check(
        "omega1_star within one grid step",
        bad == 0,
        format!("10 random (N, alpha_W), worst offset {worst_steps:.3} steps"),
    );

    let (p0, a) = dep_setting(1.0);
    let base = min_dep_phase1(&p0, &a)?;
    let (mut spread, mut via_threshold) = (0.0f64, 0.0f64);
    for i in 0..=40 {
        let (p, a) = dep_setting(from_db(-10.0 + i as f64));
        worst(&mut spread, (min_dep_phase1(&p, &a)? - base).abs());
        worst(
            &mut via_threshold,
            (dep_phase1(&p, &a, omega1_star(&p, &a)?)?.p_dep - base).abs(),
        );
    }
    r.check(
        "min DEP constant in P_s",
        spread <= 1e-12 && via_threshold <= 1e-12,
        format!("max deviation {spread:.2e} (closed form), {via_threshold:.2e} (DEP at omega1_star)"),
    );
    Ok(r)
}

/// Phase-two Gamma approximation against Monte Carlo and its closed-form threshold.
pub fn dep_phase2_approximation(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(3, "phase-two Gamma approximation");
    let (p, a) = dep_setting(10.0);
    let omegas: Vec<f64> = (0..=28).map(|i| from_db(1.0 + 0.5 * i as f64)).collect();
    let mc = mc_dep_sweep(
        &p,
        &a,
        &omegas,
        DepPhase::Two,
        cfg.phase2_trials,
        rng::derive_seed(cfg.seed, 3),
    )?;
    let mut max_err = 0.0f64;
    for (est, &w) in mc.iter().zip(&omegas) {
        worst(&mut max_err, (dep_phase2(&p, &a, w)?.p_dep - est.mean).abs());
    }
    r.check(
        "approximation within 0.03",
        max_err <= 0.03,
        format!("29 thresholds in [1, 15] dB, worst |error| = {max_err:.4}"),
    );

    let grid = 10_000;
    let (mut worst_steps, mut bad) = (0.0f64, 0);
    for &(n, beta_t) in &[(15u32, 0.8), (3, 0.6), (30, 0.95), (1, 0.7)] {
        let mut q = p;
        q.n_samples = n;
        let a = PowerAllocation::tight(0.8, beta_t);
        let fit = gamma_fit_chi(1.0, &q)?;
        let hi = q.sigma2 + 2.0 * fit.kappa * fit.theta / q.n();
        let step = (hi - q.sigma2) / grid as f64;
        let ws: Vec<f64> = (1..=grid).map(|i| q.sigma2 + step * i as f64).collect();
        let deps = ws
            .iter()
            .map(|&w| Ok(dep_phase2(&q, &a, w)?.p_dep))
            .collect::<Result<Vec<f64>>>()?;
        let steps = (omega2_star(&q, &a)? - ws[argmin(&deps)]).abs() / step;
        worst(&mut worst_steps, steps);
        if steps > 1.0 {
            bad += 1;
        }
    }
    r.check(
        "omega2_star within one grid step",
        bad == 0,
        format!("4 settings, worst offset {worst_steps:.3} steps"),
    );
    Ok(r)
}

/// Region roots meet the covertness target and the minimum DEPs are monotone.
pub fn effective_regions(_cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(4, "effective-region roots");
    let mut short_window = SystemParams::reference();
    short_window.n_samples = 3;
    short_window.p_s = 100.0;
    for (name, p) in [("N=15", SystemParams::reference()), ("N=3", short_window)] {
        let p_r = p.relay_power_static()?;
        let alpha_curve = |x: f64| min_dep_phase1_at(p.n_samples, x);
        let beta_curve = |x: f64| min_dep_phase2_with(&p, p_r, x);
        for (which, curve) in [
            ("alpha", &alpha_curve as &dyn Fn(f64) -> Result<f64>),
            ("beta", &beta_curve),
        ] {
            let mut decreases = 0;
            let mut prev = curve(0.5)?;
            for i in 1..=REGION_GRID {
                let v = curve(0.5 + 0.5 * i as f64 / REGION_GRID as f64)?;
                if v < prev - 1e-12 {
                    decreases += 1;
                }
                prev = v;
            }
            r.check(
                &format!("{which} monotone ({name})"),
                decreases == 0,
                format!("{decreases} decreases on {REGION_GRID} points"),
            );
            for th in [0.7, 0.8, 0.9] {
                let root = match which {
                    "alpha" => alpha_region_root(&p, th)?,
                    _ => beta_region_root_with(&p, p_r, th)?,
                };
                let at_root = curve(root)?;
                let interior = root > 0.5 && root < 1.0;
                let ok = if interior {
                    (at_root - th).abs() <= 1e-8
                } else {
                    (root == 0.5 && at_root >= th) || (root == 1.0 && curve(1.0 - 1e-9)? < th)
                };
                r.check(
                    &format!("{which} root ({name}, p_th={th})"),
                    ok,
                    format!("root {root:.10}, min DEP {at_root:.12}, residual {:.2e}", at_root - th),
                );
            }
        }
    }
    Ok(r)
}

/// Eavesdropper and legitimate-link distributions against empirical CDFs.
pub fn eavesdropper_distributions(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(5, "eavesdropper and end-to-end SINR distributions");
    let p = SystemParams::reference();
    let grid: Vec<f64> = (1..=20).map(|i| 0.15 * i as f64).collect();
    let sop_cfg = SopConfig::new(Combining::Mrc);
    for (k, &(aw, bt)) in [(0.8, 0.8), (0.6, 0.6)].iter().enumerate() {
        let alloc = PowerAllocation::tight(aw, bt);
        let m = SecrecyModel::new(&p, &alloc)?;
        for (j, q) in [CdfQuantity::VSc, CdfQuantity::VMrc, CdfQuantity::U]
            .into_iter()
            .enumerate()
        {
            let mc = mc_empirical_cdf(
                q,
                &grid,
                &p,
                &alloc,
                cfg.mc_trials,
                rng::derive_seed(cfg.seed, 50 + 3 * k as u64 + j as u64),
            )?;
            let (mut max_z, mut bad) = (0.0f64, 0);
            for (est, &x) in mc.iter().zip(&grid) {
                let analytic = match q {
                    CdfQuantity::VSc => m.cdf_v_sc(x),
                    CdfQuantity::VMrc => m.cdf_v_mrc(x, &sop_cfg)?,
                    CdfQuantity::U => m.cdf_u(x),
                };
                worst(
                    &mut max_z,
                    (analytic - est.mean).abs() / est.std_error.max(1.0 / est.trials as f64),
                );
                if !est.agrees_with(analytic, 3.0) {
                    bad += 1;
                }
            }
            r.check(
                &format!("{q:?} CDF ({aw}, {bt})"),
                bad == 0,
                format!("20 points, {bad} outside 3 sigma, worst |z| = {max_z:.3}"),
            );
        }

        let mut pts = vec![0.0];
        pts.extend(m.pdf_u_kinks());
        pts.push(m.theta_cap);
        let total = integrate_adaptive(|u| m.pdf_u(u), &pts, 1e-14, 1e-13)?;
        r.check(
            &format!("pdf_u normalized ({aw}, {bt})"),
            (total - 1.0).abs() <= 1e-6,
            format!("integral {total:.12}"),
        );

        let kinks = m.pdf_u_kinks();
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        for &u in grid
            .iter()
            .filter(|&&u| u + h < m.theta_cap && kinks.iter().all(|k| (u - k).abs() > 10.0 * h))
        {
            let fd = (m.cdf_u(u + h) - m.cdf_u(u - h)) / (2.0 * h);
            let pdf = m.pdf_u(u);
            worst(&mut max_rel, (fd - pdf).abs() / pdf.abs().max(1e-300));
        }
        r.check(
            &format!("pdf_u matches cdf_u differences ({aw}, {bt})"),
            max_rel <= 1e-5,
            format!("worst relative gap {max_rel:.2e}"),
        );

        let mut max_gap = 0.0f64;
        let mut at_table_point = 0.0;
        for &v in grid.iter().chain(std::iter::once(&0.8)) {
            let five = m.cdf_v_mrc_series(v, 5, 0.0).value;
            let fifty = m.cdf_v_mrc_series(v, 50, 0.0).value;
            let gap = (five - fifty).abs() / fifty.abs().max(1e-300);
            worst(&mut max_gap, gap);
            if v == 0.8 {
                at_table_point = gap;
            }
        }
        r.check(
            &format!("MRC series five terms ({aw}, {bt})"),
            max_gap < 1e-6,
            format!("relative gap {at_table_point:.2e} at v = 0.8, worst {max_gap:.2e} on the grid"),
        );
    }
    Ok(r)
}

/// Secrecy outage quadrature against Monte Carlo, ordering and monotonicity.
pub fn sop_vs_mc(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(6, "secrecy outage probability");
    let rates = [0.2, 0.4];
    let (mut cells, mut bad, mut order_bad, mut mono_bad) = (0, 0, 0, 0);
    let mut worst_ratio = 0.0f64;
    let mut k = 0u64;
    for &aw in &[0.6, 0.8] {
        for &ps_dbm in &[0.0, 10.0, 20.0] {
            let mut p = SystemParams::reference();
            p.p_s = from_db(ps_dbm);
            let alloc = PowerAllocation::tight(aw, aw);
            let m = SecrecyModel::new(&p, &alloc)?;
            let cases: Vec<(Combining, f64)> = [Combining::Sc, Combining::Mrc]
                .iter()
                .flat_map(|&mode| rates.iter().map(move |&rb| (mode, rb)))
                .collect();
            let mc = mc_sop_many(&p, &alloc, &cases, cfg.mc_trials, rng::derive_seed(cfg.seed, 600 + k))?;
            k += 1;
            let mut analytic = Vec::new();
            for (&(mode, rb), est) in cases.iter().zip(&mc) {
                let a = m.sop(rb, &SopConfig::new(mode))?;
                let tol = (3.0 * est.std_error).max(1e-3);
                worst(&mut worst_ratio, (a - est.mean).abs() / tol);
                cells += 1;
                if (a - est.mean).abs() > tol {
                    bad += 1;
                }
                analytic.push(a);
            }
            for i in 0..rates.len() {
                if analytic[rates.len() + i] < analytic[i] - 1e-12 {
                    order_bad += 1;
                }
            }
            for mode in [Combining::Sc, Combining::Mrc] {
                let sc = SopConfig::new(mode);
                let mut prev = m.sop(0.0, &sc)?;
                for i in 1..=40 {
                    let v = m.sop(0.01 * i as f64, &sc)?;
                    if v < prev - 1e-12 {
                        mono_bad += 1;
                    }
                    prev = v;
                }
            }
        }
    }
    r.check(
        "quadrature vs Monte Carlo",
        bad == 0,
        format!("{cells} cells, {bad} outside max(3 sigma, 1e-3), worst ratio {worst_ratio:.3}"),
    );
    r.check(
        "MRC outage >= SC outage",
        order_bad == 0,
        format!("{order_bad} violations"),
    );
    r.check(
        "nondecreasing in R_B",
        mono_bad == 0,
        format!("{mono_bad} decreases over R_B in [0, 0.4]"),
    );
    Ok(r)
}

/// Covert-rate setting: `N = 3`, `P_s = 20 dBm`, `r_T = 0.5`, `r̂_W = 0.5`, adaptive relay power.
pub fn covert_setting() -> SystemParams<f64> {
    let mut p = SystemParams::reference();
    p.n_samples = 3;
    p.p_s = 100.0;
    p.r_t = 0.5;
    p.r_w_hat = 0.5;
    p.p_r = RelayPower::Adaptive;
    p
}

/// Closed-form covert allocation against exhaustive search and trend checks.
pub fn covert_optimizer(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(7, "covert-rate optimizer");
    let p = covert_setting();
    let chs = realizations(&p, cfg.covert_realizations, rng::derive_seed(cfg.seed, 7));
    let res = 2000;
    let h = 0.5 / (res - 1) as f64;
    let outcomes = chs
        .par_iter()
        .map(|ch| {
            let sol = maxmin_covert_pa(&p, ch, p.p_dep_th)?;
            let grid = grid_oracle_covert(&p, ch, p.p_dep_th, res)?;
            Ok((sol, grid))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut fair_worst, mut grid_bad, mut feasible) = (0.0f64, 0, 0);
    let mut grid_detail = Vec::new();
    for ((sol, grid), ch) in outcomes.iter().zip(&chs) {
        if !sol.feasible {
            if grid.is_some() {
                grid_bad += 1;
                grid_detail.push("infeasible but grid found a point".to_string());
            }
            continue;
        }
        feasible += 1;
        let s = compute_sinrs_with(&p, sol.p_r, &sol.alloc, ch);
        worst(
            &mut fair_worst,
            (s.gamma_r_cb - s.gamma_b_cb).abs() / s.gamma_r_cb.max(s.gamma_b_cb),
        );
        let up = PowerAllocation::tight(sol.alloc.alpha_w + h, sol.alloc.beta_t + h);
        let step_change = sol.covert_rate - covert_rate_at(&p, sol.p_r, &up, ch);
        match grid {
            Some((g, _)) => {
                let gap = sol.covert_rate - g;
                if !(gap >= -1e-12 && gap <= step_change + 1e-12) {
                    grid_bad += 1;
                }
                grid_detail.push(format!("{gap:.2e}/{step_change:.2e}"));
            }
            None => {
                let edge = sol.alloc.alpha_w > 1.0 - h || sol.alloc.beta_t > 1.0 - h;
                if !edge {
                    grid_bad += 1;
                }
                grid_detail.push("grid empty".to_string());
            }
        }
    }
    r.check(
        "fairness equality",
        fair_worst <= 1e-10,
        format!(
            "{feasible} feasible of {}, worst relative gap {fair_worst:.2e}",
            chs.len()
        ),
    );
    r.check(
        "within one grid step of 2000x2000 search",
        grid_bad == 0,
        format!("gap/one-step change: {}", grid_detail.join(" ")),
    );

    let rate_or_zero = |q: &SystemParams<f64>, ch: &ChannelRealization<f64>, th: f64| -> Result<f64> {
        let s = maxmin_covert_pa(q, ch, th)?;
        Ok(if s.feasible { s.covert_rate } else { 0.0 })
    };
    let mut th_bad = 0;
    let mut rt_bad = 0;
    for ch in &chs {
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let v = rate_or_zero(&p, ch, 0.7 + 0.01 * i as f64)?;
            if v > prev + 1e-12 {
                th_bad += 1;
            }
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for i in 0..=27 {
            let mut q = p;
            q.r_t = 0.1 + 0.1 * i as f64;
            let v = rate_or_zero(&q, ch, p.p_dep_th)?;
            if v > prev + 1e-12 {
                rt_bad += 1;
            }
            prev = v;
        }
    }
    r.check(
        "nonincreasing in p_dep_th",
        th_bad == 0,
        format!("{th_bad} increases over p_dep_th in [0.7, 0.9]"),
    );
    r.check(
        "nonincreasing in r_T",
        rt_bad == 0,
        format!("{rt_bad} increases over r_T in [0.1, 2.8]"),
    );
    Ok(r)
}

/// Secrecy setting: `r_T = r̂_W = r_W = 0.25` with adaptive relay power.
pub fn secrecy_setting(p_s: f64) -> SystemParams<f64> {
    let mut p = SystemParams::reference();
    p.p_s = p_s;
    p.p_r = RelayPower::Adaptive;
    p
}

/// Largest violation of the QoS and budget constraints at an allocation.
pub fn secrecy_constraint_violation(
    p: &SystemParams<f64>,
    ch: &ChannelRealization<f64>,
    a: &PowerAllocation<f64>,
) -> f64 {
    let rates = rates_from_sinrs(&compute_sinrs_with(p, p.relay_power(ch), a, ch), Combining::Sc);
    [
        p.r_w - rates.r_r_sw.min(rates.r_w_sw),
        p.r_t - rates.r_b_st.min(rates.r_t_st),
        a.alpha_w + a.alpha_b - 1.0,
        a.beta_t + a.beta_b - 1.0,
        -a.alpha_w.min(a.alpha_b).min(a.beta_t).min(a.beta_b),
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}

struct ScaOutcome {
    secrecy: Option<f64>,
    iterations: usize,
    monotone: bool,
    converged: bool,
    violation: f64,
}

fn run_sca(p: &SystemParams<f64>, ch: &ChannelRealization<f64>, mode: Combining) -> Result<ScaOutcome> {
    match sca_maximize_secrecy(p, ch, &ScaConfig::new(mode)) {
        Ok((trace, rate)) => {
            let last = trace.states.last().expect("trace holds the start point");
            Ok(ScaOutcome {
                secrecy: Some(rate),
                iterations: trace.states.len() - 1,
                monotone: trace.states.windows(2).all(|w| w[1].phi >= w[0].phi),
                converged: trace.converged,
                violation: secrecy_constraint_violation(p, ch, &last.alloc),
            })
        }
        Err(crate::error::Error::Infeasible(_)) => Ok(ScaOutcome {
            secrecy: None,
            iterations: 0,
            monotone: true,
            converged: true,
            violation: 0.0,
        }),
        Err(e) => Err(e),
    }
}

/// SCA secrecy maximization: monotonicity, termination, oracle agreement and trends.
pub fn secrecy_optimizer(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(8, "SCA secrecy optimizer");
    let p = secrecy_setting(100.0);
    let chs = realizations(&p, cfg.secrecy_realizations, rng::derive_seed(cfg.seed, 8));
    let rows = chs
        .par_iter()
        .map(|ch| {
            let mut out = Vec::new();
            for mode in [Combining::Sc, Combining::Mrc] {
                let sca = run_sca(&p, ch, mode)?;
                let oracle = grid_oracle_secrecy(&p, ch, mode, 200)?.map(|(v, _)| v);
                out.push((sca, oracle));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut non_monotone, mut max_iter, mut unconverged) = (0, 0, 0);
    let (mut below, mut above, mut mismatch, mut worst_violation) = (0, 0, 0, f64::NEG_INFINITY);
    let (mut runs, mut oracle_order_bad) = (0, 0);
    for row in &rows {
        for (sca, oracle) in row {
            non_monotone += usize::from(!sca.monotone);
            unconverged += usize::from(!sca.converged);
            max_iter = max_iter.max(sca.iterations);
            match (sca.secrecy, oracle) {
                (Some(s), Some(o)) => {
                    runs += 1;
                    let tol = (0.05 * o).max(0.01);
                    if s < o - tol {
                        below += 1;
                    }
                    if s > o + tol {
                        above += 1;
                    }
                    worst(&mut worst_violation, sca.violation);
                }
                (None, None) => {}
                _ => mismatch += 1,
            }
        }
        let sc = row[0].1.unwrap_or(0.0);
        let mrc = row[1].1.unwrap_or(0.0);
        if sc < mrc - 1e-12 {
            oracle_order_bad += 1;
        }
    }
    r.check(
        "phi nondecreasing",
        non_monotone == 0,
        format!("{non_monotone} runs with a decrease"),
    );
    r.check(
        "terminates within 30 iterations",
        unconverged == 0 && max_iter <= 30,
        format!("{unconverged} unconverged, max {max_iter} iterations"),
    );
    r.check(
        "not below 200x200 oracle by more than max(5%, 0.01)",
        below == 0 && mismatch == 0,
        format!("{runs} feasible runs, {below} below, {above} above the oracle, {mismatch} feasibility mismatches"),
    );
    r.check(
        "solution satisfies constraints",
        worst_violation <= 1e-6,
        format!("worst violation {worst_violation:.2e}"),
    );
    r.check(
        "oracle SC >= MRC per realization",
        oracle_order_bad == 0,
        format!("{oracle_order_bad} realizations with SC < MRC"),
    );

    let mut trend = Vec::new();
    let mut trend_ok = true;
    for ps_dbm in [0.0, 5.0, 10.0, 15.0, 20.0] {
        let q = secrecy_setting(from_db(ps_dbm));
        let sums = chs
            .par_iter()
            .map(|ch| {
                let sc = run_sca(&q, ch, Combining::Sc)?.secrecy.unwrap_or(0.0);
                let mrc = run_sca(&q, ch, Combining::Mrc)?.secrecy.unwrap_or(0.0);
                Ok((sc, mrc))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = sums.len() as f64;
        let sc = sums.iter().map(|s| s.0).sum::<f64>() / n;
        let mrc = sums.iter().map(|s| s.1).sum::<f64>() / n;
        trend_ok &= sc >= mrc;
        trend.push(format!("{ps_dbm} dBm: {sc:.4}/{mrc:.4}"));
    }
    r.check("mean SC >= MRC for P_s <= 20 dBm", trend_ok, trend.join(", "));
    Ok(r)
}
