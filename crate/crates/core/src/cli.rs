//! Experiment runner behind the `covert-noma` binary.
//!
//! A run resolves an [`ExperimentConfig`] from built-in defaults, an optional
//! JSON file and `key=value` overrides, evaluates the sweep and writes a CSV
//! table plus a JSON sidecar holding the resolved configuration.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::covert_opt::maxmin_covert_pa;
use crate::covertness::{
    dep_phase1, dep_phase2_with, min_dep_phase1, min_dep_phase2_with, omega1_star, omega2_star_with,
};
use crate::error::{Error, Result};
use crate::model::{compute_sinrs_with, rates_from_sinrs, Combining, PowerAllocation, RelayPower, SystemParams};
use crate::montecarlo::{mc_dep_sweep, mc_sop_many, realizations, DepPhase};
use crate::rng::derive_seed;
use crate::secrecy_analysis::{SecrecyModel, SopConfig};
use crate::secrecy_opt::{sca_maximize_secrecy, ScaConfig};
pub use crate::validation::{from_db, to_db};
use crate::validation::{run_criterion, CriterionReport, ValidationConfig};

/// Version of the sidecar layout.
pub const SPEC_VERSION: &str = "1.0";

pub const CSV_HEADER: [&str; 7] = [
    "sweep_var",
    "value",
    "metric",
    "analytic",
    "mc_mean",
    "mc_stderr",
    "extra",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DepPhase1,
    DepPhase2,
    DepVsN,
    Sop,
    CovertRate,
    Secrecy,
    Validate,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::DepPhase1,
        Experiment::DepPhase2,
        Experiment::DepVsN,
        Experiment::Sop,
        Experiment::CovertRate,
        Experiment::Secrecy,
        Experiment::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DepPhase1 => "dep-phase1",
            Experiment::DepPhase2 => "dep-phase2",
            Experiment::DepVsN => "dep-vs-n",
            Experiment::Sop => "sop",
            Experiment::CovertRate => "covert-rate",
            Experiment::Secrecy => "secrecy",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Values in dB (dBm for powers), converted by `10^(x/10)`.
    Db,
    Linear,
}

/// Swept variable and its grid, in the declared unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// One of `p_s`, `omega`, `n_samples`, `r_t`, `r_w`, `r_w_hat`, `r_b`, `p_dep_th`, `alpha_w`, `beta_t`.
    pub var: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub unit: Unit,
}

impl Sweep {
    fn new(var: &str, start: f64, stop: f64, steps: usize, unit: Unit) -> Self {
        Self {
            var: var.to_string(),
            start,
            stop,
            steps,
            unit,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.steps < 2 {
            return Err(Error::Config(format!(
                "sweep needs finite bounds and at least 2 steps, got {self:?}"
            )));
        }
        let db_ok = matches!(self.var.as_str(), "p_s" | "omega");
        if self.unit == Unit::Db && !db_ok {
            return Err(Error::Config(format!("sweep variable {} has no dB form", self.var)));
        }
        Ok(())
    }
}

/// Fully resolved experiment description; all powers and thresholds are linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: SystemParams<f64>,
    pub sweep: Sweep,
    /// Public-signal coefficients of the fixed allocation used by the analysis experiments.
    pub alpha_w: f64,
    pub beta_t: f64,
    /// Radiometer thresholds of the two phases.
    pub omega1: f64,
    pub omega2: f64,
    /// SOP quadrature order.
    pub quadrature_order: usize,
    /// Channel realizations per sweep point for the optimizers.
    pub realizations: usize,
    pub mc_trials: u64,
    pub seed: u64,
    /// Criteria run by `validate`.
    pub criteria: Vec<u8>,
    pub output_path: String,
}

impl ExperimentConfig {
    /// Defaults reproducing the reference setting of each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut params = SystemParams::reference();
        let mut sweep = Sweep::new("p_s", -10.0, 30.0, 41, Unit::Db);
        let mut realizations = 100;
        match experiment {
            Experiment::DepPhase1 | Experiment::DepPhase2 | Experiment::Sop | Experiment::Validate => {}
            Experiment::DepVsN => sweep = Sweep::new("n_samples", 1.0, 30.0, 30, Unit::Linear),
            Experiment::CovertRate => {
                params.n_samples = 3;
                params.r_w_hat = 0.5;
                params.p_r = RelayPower::Adaptive;
                sweep.steps = 9;
            }
            Experiment::Secrecy => {
                params.p_r = RelayPower::Adaptive;
                sweep.steps = 9;
                realizations = 50;
            }
        }
        let (omega1, omega2) = match experiment {
            Experiment::DepVsN => (from_db(7.0), from_db(9.0)),
            _ => (from_db(5.0), from_db(5.0)),
        };
        Self {
            experiment,
            params,
            sweep,
            alpha_w: 0.8,
            beta_t: 0.8,
            omega1,
            omega2,
            quadrature_order: 200,
            realizations,
            mc_trials: 1_000_000,
            seed: 1,
            criteria: crate::validation::CRITERIA.to_vec(),
            output_path: format!("{}.csv", experiment.name()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.sweep.validate()?;
        if self.mc_trials == 0 || self.realizations == 0 {
            return Err(Error::Config("mc_trials and realizations must be positive".into()));
        }
        if self.quadrature_order == 0 {
            return Err(Error::Config("quadrature_order must be positive".into()));
        }
        PowerAllocation::tight(self.alpha_w, self.beta_t).validate(1e-12)?;
        Ok(())
    }

    /// Copy with the sweep variable set to `value` (in the sweep unit).
    pub fn at(&self, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let lin = match self.sweep.unit {
            Unit::Db => from_db(value),
            Unit::Linear => value,
        };
        match self.sweep.var.as_str() {
            "p_s" => c.params.p_s = lin,
            "omega" => {
                c.omega1 = lin;
                c.omega2 = lin;
            }
            "n_samples" => {
                if lin < 1.0 || lin.fract() != 0.0 {
                    return Err(Error::Config(format!(
                        "n_samples must be a positive integer, got {lin}"
                    )));
                }
                c.params.n_samples = lin as u32;
            }
            "r_t" => c.params.r_t = lin,
            "r_w" => c.params.r_w = lin,
            "r_w_hat" => c.params.r_w_hat = lin,
            "r_b" => c.params.r_b = lin,
            "p_dep_th" => c.params.p_dep_th = lin,
            "alpha_w" => c.alpha_w = lin,
            "beta_t" => c.beta_t = lin,
            other => return Err(Error::Config(format!("unknown sweep variable {other}"))),
        }
        c.validate()?;
        Ok(c)
    }
}

/// Command-line overrides applied on top of the defaults and the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config_file: Option<PathBuf>,
    pub sets: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
}

/// Merges `patch` into `base`, rejecting keys absent from `base`.
///
/// Tagged values (objects with a `policy` key) are replaced as a whole.
fn merge(base: &mut Value, patch: &Value, path: &str) -> Result<()> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) if !b.contains_key("policy") => {
            for (k, v) in p {
                let here = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                let slot = b
                    .get_mut(k)
                    .ok_or_else(|| Error::Config(format!("unknown configuration key {here}")))?;
                merge(slot, v, &here)?;
            }
            Ok(())
        }
        (b, p) => {
            *b = p.clone();
            Ok(())
        }
    }
}

/// Parses `key.path=value` into a nested JSON patch; values that are not JSON become strings.
fn set_patch(assignment: &str) -> Result<Value> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment}")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(key.split('.').rev().fold(value, |acc, k| {
        Value::Object([(k.to_string(), acc)].into_iter().collect())
    }))
}

/// Defaults, then config file, then `--set` assignments, then dedicated flags.
pub fn resolve(experiment: Experiment, ov: &Overrides) -> Result<ExperimentConfig> {
    let mut v =
        serde_json::to_value(ExperimentConfig::defaults(experiment)).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(path) = &ov.config_file {
        let text = std::fs::read_to_string(path)?;
        let mut file: Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Value::Object(m) = &mut file {
            m.remove("experiment");
        }
        merge(&mut v, &file, "")?;
    }
    for s in &ov.sets {
        merge(&mut v, &set_patch(s)?, "")?;
    }
    let mut cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
    cfg.experiment = experiment;
    if let Some(out) = &ov.out {
        cfg.output_path = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = ov.trials {
        cfg.mc_trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub sweep_var: String,
    pub value: f64,
    pub metric: String,
    pub analytic: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub extra: String,
}

impl Row {
    fn new(sweep: &Sweep, value: f64, metric: &str) -> Self {
        Self {
            sweep_var: sweep.var.clone(),
            value,
            metric: metric.to_string(),
            analytic: None,
            mc_mean: None,
            mc_stderr: None,
            extra: String::new(),
        }
    }

    fn analytic(mut self, v: f64) -> Self {
        self.analytic = Some(v);
        self
    }

    fn mc(mut self, mean: f64, stderr: f64) -> Self {
        self.mc_mean = Some(mean);
        self.mc_stderr = Some(stderr);
        self
    }

    fn extra(mut self, s: String) -> Self {
        self.extra = s;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Sidecar<'a> {
    spec_version: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
}

/// Rendered CSV and sidecar of one run, plus validation reports when applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub sidecar: String,
    pub reports: Vec<CriterionReport>,
}

fn render_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn dep_rows(cfg: &ExperimentConfig, x: f64, seed: u64, phase: DepPhase) -> Result<Row> {
    let p = &cfg.params;
    let alloc = PowerAllocation::tight(cfg.alpha_w, cfg.beta_t);
    let mc = |omega: f64| Ok::<_, Error>(mc_dep_sweep(p, &alloc, &[omega], phase, cfg.mc_trials, seed)?[0]);
    match phase {
        DepPhase::One => {
            let est = mc(cfg.omega1)?;
            Ok(Row::new(&cfg.sweep, x, "dep_phase1")
                .analytic(dep_phase1(p, &alloc, cfg.omega1)?.p_dep)
                .mc(est.mean, est.std_error)
                .extra(format!(
                    "omega={};min_dep={};omega_star={}",
                    cfg.omega1,
                    min_dep_phase1(p, &alloc)?,
                    omega1_star(p, &alloc)?
                )))
        }
        DepPhase::Two => {
            let p_r = p.relay_power_static()?;
            let est = mc(cfg.omega2)?;
            Ok(Row::new(&cfg.sweep, x, "dep_phase2")
                .analytic(dep_phase2_with(p, p_r, &alloc, cfg.omega2)?.p_dep)
                .mc(est.mean, est.std_error)
                .extra(format!(
                    "omega={};min_dep={};omega_star={}",
                    cfg.omega2,
                    min_dep_phase2_with(p, p_r, cfg.beta_t)?,
                    omega2_star_with(p, p_r, &alloc)?
                )))
        }
    }
}

fn sop_rows(cfg: &ExperimentConfig, x: f64, seed: u64) -> Result<Vec<Row>> {
    let p = &cfg.params;
    let alloc = PowerAllocation::tight(cfg.alpha_w, cfg.beta_t);
    let model = SecrecyModel::new(p, &alloc)?;
    let cases = [(Combining::Sc, p.r_b), (Combining::Mrc, p.r_b)];
    let mc = mc_sop_many(p, &alloc, &cases, cfg.mc_trials, seed)?;
    cases
        .iter()
        .zip(&mc)
        .map(|(&(mode, r_b), est)| {
            let mut sc = SopConfig::new(mode);
            sc.quadrature_order = cfg.quadrature_order;
            Ok(Row::new(&cfg.sweep, x, &format!("sop_{mode}"))
                .analytic(model.sop(r_b, &sc)?)
                .mc(est.mean, est.std_error)
                .extra(format!("r_b={r_b}")))
        })
        .collect()
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

fn covert_rows(cfg: &ExperimentConfig, x: f64, seed: u64) -> Result<Vec<Row>> {
    let p = &cfg.params;
    let mut rows = Vec::new();
    let mut rates = Vec::new();
    for (i, ch) in realizations(p, cfg.realizations, seed).iter().enumerate() {
        let sol = maxmin_covert_pa(p, ch, p.p_dep_th)?;
        rates.push(sol.covert_rate);
        rows.push(
            Row::new(&cfg.sweep, x, "covert_rate")
                .analytic(sol.covert_rate)
                .extra(format!(
                    "realization={i};feasible={};binding={};alpha_w={};beta_t={};p_r={}",
                    sol.feasible,
                    serde_json::to_value(sol.binding_constraint)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    sol.alloc.alpha_w,
                    sol.alloc.beta_t,
                    sol.p_r
                )),
        );
    }
    let (m, se) = mean_and_stderr(&rates);
    rows.push(
        Row::new(&cfg.sweep, x, "covert_rate_mean")
            .mc(m, se)
            .extra(format!("realizations={}", rates.len())),
    );
    Ok(rows)
}

fn secrecy_rows(cfg: &ExperimentConfig, x: f64, seed: u64) -> Result<Vec<Row>> {
    let p = &cfg.params;
    let chs = realizations(p, cfg.realizations, seed);
    let mut rows = Vec::new();
    for mode in [Combining::Sc, Combining::Mrc] {
        let mut values = Vec::new();
        for (i, ch) in chs.iter().enumerate() {
            let metric = format!("secrecy_{mode}");
            match sca_maximize_secrecy(p, ch, &ScaConfig::new(mode)) {
                Ok((trace, rate)) => {
                    let last = trace.states.last().expect("trace holds the start point");
                    let r = rates_from_sinrs(&compute_sinrs_with(p, trace.p_r, &last.alloc, ch), mode);
                    values.push(rate);
                    rows.push(Row::new(&cfg.sweep, x, &metric).analytic(rate).extra(format!(
                        "realization={i};feasible=true;iterations={};converged={};phi={};alpha_b={};beta_b={};r_b={};r_e={};r_t_st={};r_b_st={}",
                        trace.states.len() - 1,
                        trace.converged,
                        last.phi,
                        last.alloc.alpha_b,
                        last.alloc.beta_b,
                        r.r_b,
                        r.r_e,
                        r.r_t_st,
                        r.r_b_st
                    )));
                }
                Err(Error::Infeasible(why)) => {
                    values.push(0.0);
                    rows.push(
                        Row::new(&cfg.sweep, x, &metric)
                            .analytic(0.0)
                            .extra(format!("realization={i};feasible=false;reason={why}")),
                    );
                }
                Err(e) => return Err(e),
            }
        }
        let (m, se) = mean_and_stderr(&values);
        rows.push(
            Row::new(&cfg.sweep, x, &format!("secrecy_{mode}_mean"))
                .mc(m, se)
                .extra(format!("realizations={}", values.len())),
        );
    }
    Ok(rows)
}

fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let points = cfg.sweep.values();
    let per_point = points
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cfg.at(x)?;
            let seed = derive_seed(cfg.seed, i as u64);
            match cfg.experiment {
                Experiment::DepPhase1 => Ok(vec![dep_rows(&c, x, seed, DepPhase::One)?]),
                Experiment::DepPhase2 => Ok(vec![dep_rows(&c, x, seed, DepPhase::Two)?]),
                Experiment::DepVsN => Ok(vec![
                    dep_rows(&c, x, seed, DepPhase::One)?,
                    dep_rows(&c, x, derive_seed(seed, 1), DepPhase::Two)?,
                ]),
                Experiment::Sop => sop_rows(&c, x, seed),
                Experiment::CovertRate => covert_rows(&c, x, seed),
                Experiment::Secrecy => secrecy_rows(&c, x, seed),
                Experiment::Validate => unreachable!("validate has no sweep"),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

fn validation_rows(cfg: &ExperimentConfig) -> Result<(Vec<Row>, Vec<CriterionReport>)> {
    let vc = ValidationConfig {
        seed: cfg.seed,
        mc_trials: cfg.mc_trials,
        phase2_trials: cfg.mc_trials.saturating_mul(10),
        secrecy_realizations: cfg.realizations,
        ..ValidationConfig::default()
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &id in &cfg.criteria {
        let report = run_criterion(id, &vc)?;
        for c in &report.checks {
            let mut row = Row::new(&cfg.sweep, f64::from(id), &c.label).extra(c.detail.clone());
            row.sweep_var = "criterion".to_string();
            rows.push(row.analytic(if c.passed { 1.0 } else { 0.0 }));
        }
        reports.push(report);
    }
    Ok((rows, reports))
}

/// Evaluates the experiment without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (rows, reports) = match cfg.experiment {
        Experiment::Validate => validation_rows(cfg)?,
        _ => (sweep_rows(cfg)?, Vec::new()),
    };
    let sidecar = Sidecar {
        spec_version: SPEC_VERSION,
        seed: cfg.seed,
        config: cfg,
    };
    Ok(RunOutput {
        csv: render_csv(&rows)?,
        sidecar: serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Io(e.to_string()))? + "\n",
        reports,
    })
}

/// Sidecar path next to the CSV output.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Executes the experiment and writes the CSV and its sidecar.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let out = execute(cfg)?;
    let path = Path::new(&cfg.output_path);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, &out.csv)?;
    std::fs::write(sidecar_path(path), &out.sidecar)?;
    Ok(out)
}

/// Small configuration of `experiment` for repeated-run checks.
pub fn quick_config(experiment: Experiment, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(experiment);
    c.seed = seed;
    c.mc_trials = 20_000;
    c.realizations = 4;
    c.sweep.steps = c.sweep.steps.min(5);
    if c.sweep.var == "n_samples" {
        c.sweep.stop = c.sweep.start + (c.sweep.steps - 1) as f64;
    }
    if experiment == Experiment::Validate {
        c.criteria = vec![1, 2, 4, 6];
    }
    c
}

/// Runs every experiment twice with the same configuration and compares the CSV bytes.
pub fn determinism_report(seed: u64) -> Result<CriterionReport> {
    let mut r = CriterionReport::new(9, "byte-identical reruns");
    for e in Experiment::ALL {
        let c = quick_config(e, seed);
        let a = execute(&c)?;
        let b = execute(&c)?;
        let same = a.csv == b.csv && a.sidecar == b.sidecar;
        r.check(
            e.name(),
            same,
            format!("{} bytes, {} rows", a.csv.len(), a.csv.lines().count() - 1),
        );
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        for i in -400..=400 {
            let x = 10f64.powf(i as f64 / 40.0);
            let back = from_db(to_db(x));
            assert!((back - x).abs() <= 1e-12 * x, "{x} -> {back}");
        }
        assert_eq!(from_db(0.0), 1.0);
        assert!((from_db(20.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_grid_and_validation() {
        let s = Sweep::new("p_s", -10.0, 30.0, 41, Unit::Db);
        let v = s.values();
        assert_eq!(v.len(), 41);
        assert_eq!(v[0], -10.0);
        assert_eq!(v[40], 30.0);
        assert!(Sweep::new("p_s", 0.0, 1.0, 1, Unit::Db).validate().is_err());
        assert!(Sweep::new("r_t", 0.0, 1.0, 3, Unit::Db).validate().is_err());
        assert!(Sweep::new("p_s", f64::NAN, 1.0, 3, Unit::Db).validate().is_err());
    }

    #[test]
    fn overrides_layer_in_order() {
        let dir = std::env::temp_dir().join(format!("covert-noma-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("c.json");
        std::fs::write(
            &file,
            r#"{"seed": 5, "params": {"n_samples": 7, "lambda": {"se": 0.25}}}"#,
        )
        .unwrap();
        let ov = Overrides {
            config_file: Some(file),
            sets: vec!["params.n_samples=9".into(), "sweep.var=omega".into()],
            seed: Some(11),
            ..Overrides::default()
        };
        let c = resolve(Experiment::DepPhase1, &ov).unwrap();
        assert_eq!(c.params.n_samples, 9);
        assert_eq!(c.params.lambda.se, 0.25);
        assert_eq!(c.sweep.var, "omega");
        assert_eq!(c.seed, 11);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn relay_policy_replaced_whole() {
        let ov = Overrides {
            sets: vec![r#"params.p_r={"policy":"adaptive"}"#.into()],
            ..Overrides::default()
        };
        assert_eq!(resolve(Experiment::Sop, &ov).unwrap().params.p_r, RelayPower::Adaptive);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let bad = |s: &str| {
            resolve(
                Experiment::Sop,
                &Overrides {
                    sets: vec![s.into()],
                    ..Overrides::default()
                },
            )
            .is_err()
        };
        assert!(bad("params.nope=1"));
        assert!(bad("no_equals_sign"));
        assert!(bad("params.sigma2=-1"));
        assert!(bad("sweep.steps=1"));
        assert!(bad("alpha_w=0.3"));
    }

    #[test]
    fn dep_phase1_table_has_constant_minimum() {
        let mut c = ExperimentConfig::defaults(Experiment::DepPhase1);
        c.mc_trials = 2000;
        let out = execute(&c).unwrap();
        let mut rdr = csv::Reader::from_reader(out.csv.as_bytes());
        assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
        let extras: Vec<String> = rdr.records().map(|r| r.unwrap()[6].to_string()).collect();
        assert_eq!(extras.len(), 41);
        let min_dep = |e: &str| {
            e.split(';')
                .find_map(|kv| kv.strip_prefix("min_dep="))
                .unwrap()
                .to_string()
        };
        assert!(extras.iter().all(|e| min_dep(e) == min_dep(&extras[0])));
        let side: Value = serde_json::from_str(&out.sidecar).unwrap();
        assert_eq!(side["spec_version"], SPEC_VERSION);
        assert_eq!(side["seed"], 1);
        let back: ExperimentConfig = serde_json::from_value(side["config"].clone()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn determinism_report_covers_every_experiment() {
        let r = determinism_report(4).unwrap();
        assert_eq!(r.checks.len(), Experiment::ALL.len());
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn infeasible_instances_become_rows() {
        let mut c = quick_config(Experiment::Secrecy, 3);
        c.params.r_t = 2.8;
        let out = execute(&c).unwrap();
        assert!(out.csv.contains("feasible=false"));
    }
}
