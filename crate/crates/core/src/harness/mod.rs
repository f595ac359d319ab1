//! Capacity sweeps: seeded independent runs per grid point, pooled outage
//! estimates with Wilson intervals, and analytic overlays.
//!
//! Every grid point reuses the same run seeds (`derive_run_seed(base, i)`),
//! so curves that differ only in lookahead or policy see identical arrival
//! counts. Runs may execute on any number of threads; aggregation always
//! walks them in run-index order.

mod csv;
mod seed;
mod stats;

pub use csv::{export_csv, parse_csv, write_csv, CSV_HEADER};
pub use seed::{derive_run_seed, splitmix64};
pub use stats::{confidence_interval, standard_error, Z_95};

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{
    self, chernoff_upper_bound, error_model_lower_bound, exact_nonpredictive_outage,
    exact_secondary_outage, factorial_lower_bound, lookahead_bounds, secondary_outage_bounds,
    AnalysisError,
};
use crate::scheduler::{run_process, ArrivalProcess, Horizon, OutageStats};
use crate::stream;
use crate::traffic::{
    ErrorModelConfig, ErrorModelTraffic, LookaheadModel, PredictiveTraffic, ScalingConfig,
    ScriptedTraffic, TrafficError,
};
use crate::twoclass::{run_two_class, PolicyConfig, TwoClassConfig, TwoClassError};

pub const DEFAULT_SLOTS_PER_RUN: u64 = 1000;
pub const DEFAULT_RUNS: u64 = 100;
/// Default seed when a configuration gives none.
pub const DEFAULT_SEED: u64 = 1;
/// Truncation tolerance used for the secondary-class overlay.
pub const SECONDARY_TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
    #[error("capacity {capacity}: {message}")]
    Setup { capacity: u64, message: String },
    #[error("capacity {capacity}, run {run_index}: {message}")]
    Run { capacity: u64, run_index: u64, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    SingleClass {
        gamma: f64,
        lookahead: LookaheadModel,
    },
    ErrorModel {
        gamma: f64,
        alpha_prime: f64,
        alpha_double_prime: f64,
        lookahead: u32,
    },
    TwoClass {
        gamma_p: f64,
        gamma_s: f64,
        lookahead: u32,
        policy: PolicyConfig,
    },
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Self::SingleClass { .. } => "single-class",
            Self::ErrorModel { .. } => "error-model",
            Self::TwoClass { .. } => "two-class",
        }
    }

    pub fn max_lookahead(&self) -> u32 {
        match self {
            Self::SingleClass { lookahead, .. } => lookahead.max_lookahead(),
            Self::ErrorModel { lookahead, .. } | Self::TwoClass { lookahead, .. } => *lookahead,
        }
    }

    fn lookahead_label(&self) -> String {
        match self {
            Self::SingleClass { lookahead, .. } => lookahead.to_string(),
            Self::ErrorModel { alpha_prime, alpha_double_prime, lookahead, .. } => {
                format!("error:{alpha_prime}:{alpha_double_prime}:{lookahead}")
            }
            Self::TwoClass { lookahead, .. } => LookaheadModel::Deterministic(*lookahead).to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub capacity_grid: Vec<u64>,
    pub slots_per_run: u64,
    pub runs: u64,
    /// `None` means four times the largest lookahead.
    pub warmup: Option<u64>,
    pub base_seed: u64,
    /// Per-slot arrival counts replacing the Poisson stream (single-class only).
    pub scripted_arrivals: Option<Vec<u64>>,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, capacity_grid: Vec<u64>) -> Self {
        Self {
            scenario,
            capacity_grid,
            slots_per_run: DEFAULT_SLOTS_PER_RUN,
            runs: DEFAULT_RUNS,
            warmup: None,
            base_seed: DEFAULT_SEED,
            scripted_arrivals: None,
        }
    }

    pub fn warmup(&self) -> u64 {
        self.warmup
            .unwrap_or_else(|| crate::scheduler::default_warmup(self.scenario.max_lookahead()))
    }

    pub fn horizon(&self) -> Result<Horizon, HarnessError> {
        Horizon::new(self.slots_per_run, self.warmup())
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.capacity_grid.is_empty() {
            return invalid("capacity grid is empty".into());
        }
        if self.capacity_grid.contains(&0) {
            return invalid("capacities must be positive".into());
        }
        if self.capacity_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("capacity grid must be strictly increasing".into());
        }
        if self.runs == 0 {
            return invalid("runs must be at least 1".into());
        }
        self.horizon()?;
        if self.scripted_arrivals.is_some() && !matches!(self.scenario, Scenario::SingleClass { .. }) {
            return invalid("scripted arrivals are only supported for single-class scenarios".into());
        }
        match &self.scenario {
            Scenario::SingleClass { gamma, lookahead } => {
                ScalingConfig::new(1, *gamma).map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
                lookahead.validate().map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            }
            Scenario::ErrorModel { gamma, .. } => {
                ScalingConfig::new(1, *gamma).map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            }
            Scenario::TwoClass { gamma_p, gamma_s, lookahead, policy } => {
                TwoClassConfig::new(1, *gamma_p, *gamma_s, *lookahead, *policy)
                    .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            }
        }
        Ok(())
    }
}

/// Pooled outage estimate for one class at one capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassEstimate {
    pub outage_slots: u64,
    pub measured_slots: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ClassEstimate {
    pub fn from_counts(outage_slots: u64, measured_slots: u64) -> Self {
        let (ci_low, ci_high) = confidence_interval(outage_slots, measured_slots);
        let p_hat = if measured_slots == 0 { 0.0 } else { outage_slots as f64 / measured_slots as f64 };
        Self { outage_slots, measured_slots, p_hat, ci_low, ci_high }
    }

    pub fn from_stats(stats: &OutageStats) -> Self {
        Self::from_counts(stats.outage_slots, stats.slots_simulated)
    }

    pub fn standard_error(&self) -> f64 {
        standard_error(self.p_hat, self.measured_slots)
    }
}

/// Closed-form values attached to a row. For two-class rows these describe
/// the secondary class.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnalyticOverlay {
    pub exact: Option<f64>,
    pub log_lower: Option<f64>,
    pub log_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub capacity: u64,
    pub gamma_p: f64,
    pub gamma_s: Option<f64>,
    pub policy: Option<String>,
    pub lookahead: String,
    pub runs: u64,
    pub slots_per_run: u64,
    pub primary: Option<ClassEstimate>,
    pub secondary: Option<ClassEstimate>,
    pub analytic: AnalyticOverlay,
    /// `-ln p_hat / (C ln C)` for the class the overlay describes.
    pub empirical_diversity: Option<f64>,
}

impl SweepRow {
    pub fn c_log_c(&self) -> f64 {
        let c = self.capacity as f64;
        c * c.ln()
    }

    pub fn measured_slots(&self) -> Option<u64> {
        self.primary.map(|p| p.measured_slots)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

enum Prepared {
    Single { process: ArrivalProcess, capacity: u64 },
    TwoClass(TwoClassConfig),
}

fn prepare(cfg: &ExperimentConfig, capacity: u64) -> Result<Prepared, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    match &cfg.scenario {
        Scenario::SingleClass { gamma, lookahead } => {
            let scaling = ScalingConfig::new(capacity, *gamma).map_err(|e| err(&e))?;
            let process = match &cfg.scripted_arrivals {
                Some(counts) => ArrivalProcess::Scripted(
                    ScriptedTraffic::new(counts.clone(), lookahead, capacity).map_err(|e| err(&e))?,
                ),
                None => ArrivalProcess::Predictive(
                    PredictiveTraffic::new(&scaling, lookahead).map_err(|e| err(&e))?,
                ),
            };
            Ok(Prepared::Single { process, capacity })
        }
        Scenario::ErrorModel { gamma, alpha_prime, alpha_double_prime, lookahead } => {
            let model = ErrorModelConfig {
                gamma: *gamma,
                alpha_prime: *alpha_prime,
                alpha_double_prime: *alpha_double_prime,
                lookahead: *lookahead,
            };
            let traffic = ErrorModelTraffic::new(&model, capacity).map_err(|e| err(&e))?;
            Ok(Prepared::Single { process: ArrivalProcess::ErrorModel(traffic), capacity })
        }
        Scenario::TwoClass { gamma_p, gamma_s, lookahead, policy } => {
            let two = TwoClassConfig::new(capacity, *gamma_p, *gamma_s, *lookahead, *policy)
                .map_err(|e| err(&e))?;
            Ok(Prepared::TwoClass(two))
        }
    }
}

type RunOutcome = (OutageStats, Option<OutageStats>);

fn execute(prepared: &Prepared, horizon: Horizon, seed: u64) -> Result<RunOutcome, String> {
    match prepared {
        Prepared::Single { process, capacity } => {
            let mut rng = stream::stream(seed, 0);
            Ok((run_process(process, *capacity, horizon, &mut rng), None))
        }
        Prepared::TwoClass(two) => run_two_class(two, horizon, seed)
            .map(|(p, s)| (p, Some(s)))
            .map_err(|e: TwoClassError| e.to_string()),
    }
}

/// Runs the sweep on rayon's current pool.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    run_sweep_with(cfg, Execution::Parallel)
}

pub fn run_sweep_with(cfg: &ExperimentConfig, execution: Execution) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let horizon = cfg.horizon()?;
    let prepared: Vec<Prepared> = cfg
        .capacity_grid
        .iter()
        .map(|&c| prepare(cfg, c).map_err(|message| HarnessError::Setup { capacity: c, message }))
        .collect::<Result<_, _>>()?;
    let seeds: Vec<u64> = (0..cfg.runs).map(|i| derive_run_seed(cfg.base_seed, i)).collect();
    let jobs: Vec<(usize, u64)> = (0..prepared.len())
        .flat_map(|g| (0..cfg.runs).map(move |r| (g, r)))
        .collect();
    let work = |&(g, r): &(usize, u64)| execute(&prepared[g], horizon, seeds[r as usize]);
    let outcomes: Vec<Result<RunOutcome, String>> = match execution {
        Execution::Serial => jobs.iter().map(work).collect(),
        Execution::Parallel => jobs.par_iter().map(work).collect(),
    };

    let mut rows = Vec::with_capacity(prepared.len());
    let mut outcomes = outcomes.into_iter();
    for &capacity in &cfg.capacity_grid {
        let mut primary = OutageStats::default();
        let mut secondary: Option<OutageStats> = None;
        for run_index in 0..cfg.runs {
            let (p, s) = outcomes
                .next()
                .expect("one outcome per job")
                .map_err(|message| HarnessError::Run { capacity, run_index, message })?;
            primary.merge(&p);
            if let Some(s) = s {
                secondary.get_or_insert_with(OutageStats::default).merge(&s);
            }
        }
        let primary = ClassEstimate::from_stats(&primary);
        let secondary = secondary.as_ref().map(ClassEstimate::from_stats);
        rows.push(build_row(cfg, capacity, Some(primary), secondary)?);
    }
    Ok(SweepResult { rows })
}

/// Analytic columns only, no simulation; independent of the seed.
pub fn analytic_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let rows = cfg
        .capacity_grid
        .iter()
        .map(|&c| build_row(cfg, c, None, None))
        .collect::<Result<_, _>>()?;
    Ok(SweepResult { rows })
}

fn build_row(
    cfg: &ExperimentConfig,
    capacity: u64,
    primary: Option<ClassEstimate>,
    secondary: Option<ClassEstimate>,
) -> Result<SweepRow, HarnessError> {
    let setup = |e: &dyn std::fmt::Display| HarnessError::Setup { capacity, message: e.to_string() };
    let analytic = overlay(cfg, capacity).map_err(|e| setup(&e))?;
    let (gamma_p, gamma_s, policy) = match &cfg.scenario {
        Scenario::SingleClass { gamma, .. } | Scenario::ErrorModel { gamma, .. } => (*gamma, None, None),
        Scenario::TwoClass { gamma_p, gamma_s, policy, .. } => {
            (*gamma_p, Some(*gamma_s), Some(policy.to_string()))
        }
    };
    let described = if matches!(cfg.scenario, Scenario::TwoClass { .. }) { secondary } else { primary };
    let empirical_diversity = described.and_then(|e| analysis::empirical_diversity(e.p_hat, capacity).ok());
    Ok(SweepRow {
        scenario: cfg.scenario.label().to_string(),
        capacity,
        gamma_p,
        gamma_s,
        policy,
        lookahead: cfg.scenario.lookahead_label(),
        runs: cfg.runs,
        slots_per_run: cfg.slots_per_run,
        primary,
        secondary,
        analytic,
        empirical_diversity,
    })
}

fn overlay(cfg: &ExperimentConfig, capacity: u64) -> Result<AnalyticOverlay, AnalysisError> {
    if cfg.scripted_arrivals.is_some() {
        return Ok(AnalyticOverlay::default());
    }
    let scaling = |gamma: f64| {
        ScalingConfig::new(capacity, gamma)
            .map_err(|e: TrafficError| AnalysisError::InvalidArgument(e.to_string()))
    };
    Ok(match &cfg.scenario {
        Scenario::SingleClass { gamma, lookahead: LookaheadModel::Deterministic(0) } => {
            let s = scaling(*gamma)?;
            AnalyticOverlay {
                exact: Some(exact_nonpredictive_outage(&s).value()),
                log_lower: Some(factorial_lower_bound(&s).ln()),
                log_upper: chernoff_upper_bound(&s).ok().map(|b| b.ln()),
            }
        }
        Scenario::SingleClass { gamma, lookahead } => {
            let b = lookahead_bounds(&scaling(*gamma)?, lookahead)?;
            AnalyticOverlay { exact: None, log_lower: Some(b.log_lower), log_upper: Some(b.log_upper) }
        }
        Scenario::ErrorModel { gamma, alpha_prime, alpha_double_prime, lookahead } => {
            let model = ErrorModelConfig {
                gamma: *gamma,
                alpha_prime: *alpha_prime,
                alpha_double_prime: *alpha_double_prime,
                lookahead: *lookahead,
            };
            AnalyticOverlay {
                exact: None,
                log_lower: Some(error_model_lower_bound(&model, capacity).ln()),
                log_upper: None,
            }
        }
        Scenario::TwoClass { gamma_p, gamma_s, lookahead: 0, policy: PolicyConfig::Sp1 } => {
            let exact = exact_secondary_outage(capacity, *gamma_p, *gamma_s, SECONDARY_TAIL_TOLERANCE)?;
            let b = secondary_outage_bounds(capacity, *gamma_p, *gamma_s)?;
            AnalyticOverlay {
                exact: Some(exact.probability.value()),
                log_lower: Some(b.log_lower),
                log_upper: Some(b.log_upper),
            }
        }
        Scenario::TwoClass { .. } => AnalyticOverlay::default(),
    })
}

/// Asymptotic quantities for a configuration, independent of capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReport {
    pub entries: Vec<(String, String)>,
}

fn fmt_value(x: f64) -> String {
    format!("{:?}", (x * 1e12).round() / 1e12)
}

pub fn analytic_report(cfg: &ExperimentConfig) -> AnalyticReport {
    let mut entries: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| entries.push((k.to_string(), v));
    push("scenario", cfg.scenario.label().to_string());
    match &cfg.scenario {
        Scenario::SingleClass { gamma, lookahead } => {
            push("gamma", fmt_value(*gamma));
            push("lookahead", lookahead.to_string());
            match analysis::diversity_random_t(*gamma, lookahead) {
                Ok(d) => {
                    push("diversity", fmt_value(d.value));
                    push("regime", d.regime.to_string());
                }
                Err(e) => push("diversity", format!("unavailable ({e})")),
            }
            push("non_predictive_diversity", fmt_value(1.0 - gamma));
        }
        Scenario::ErrorModel { gamma, alpha_prime, alpha_double_prime, lookahead } => {
            push("gamma", fmt_value(*gamma));
            let t = f64::from(*lookahead);
            match analysis::diversity_with_errors(*gamma, *alpha_prime, *alpha_double_prime, t) {
                Ok(d) => {
                    push("diversity", fmt_value(d.value));
                    push("regime", d.regime.to_string());
                    push("strictly_improves", (d.value > 1.0 - gamma).to_string());
                }
                Err(e) => push("diversity", format!("unavailable ({e})")),
            }
            match analysis::optimal_lookahead(*gamma, *alpha_prime, *alpha_double_prime) {
                Ok(opt) => {
                    push("optimal_lookahead", fmt_value(opt.t_star));
                    push("optimal_lookahead_feasible", opt.feasible.to_string());
                }
                Err(e) => push("optimal_lookahead", format!("unavailable ({e})")),
            }
            push("non_predictive_diversity", fmt_value(1.0 - gamma));
        }
        Scenario::TwoClass { gamma_p, gamma_s, lookahead, policy } => {
            push("gamma_p", fmt_value(*gamma_p));
            push("gamma_s", fmt_value(*gamma_s));
            push("policy", policy.to_string());
            match policy {
                PolicyConfig::Sp1 | PolicyConfig::Sp2 { .. } => {
                    let d = analysis::diversity_deterministic(*gamma_p, *lookahead);
                    push("diversity", fmt_value(d.value));
                }
                PolicyConfig::Sp3 { .. } => push("diversity", "unavailable (no closed form for sp3)".into()),
            }
            if *lookahead == 0 && matches!(policy, PolicyConfig::Sp1) {
                let d = analysis::diversity_secondary_nonpredictive(*gamma_p);
                push("secondary_diversity", fmt_value(d.value));
            }
        }
    }
    AnalyticReport { entries }
}
