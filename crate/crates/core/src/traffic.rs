//! Per-slot request generation.
//!
//! Every generator draws from an explicit random stream. The number of
//! uniforms consumed per request is fixed (one per lookahead draw, whatever
//! the model), so two runs that share a seed and an arrival rate see the same
//! per-slot counts even when their lookahead models differ.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::special::{ln_binomial, ln_factorial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrafficError {
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("gamma must lie in [0, 1], got {0}")]
    GammaOutOfRange(f64),
    #[error("Poisson rate must be finite and nonnegative, got {0}")]
    InvalidRate(f64),
    #[error("invalid lookahead model: {0}")]
    InvalidLookahead(String),
    #[error(transparent)]
    ErrorModel(#[from] ViolationReport),
}

/// Capacity `C` together with the arrival exponent `gamma`, so that the mean
/// number of arrivals per slot is `C^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConfig {
    capacity: u64,
    gamma: f64,
}

impl ScalingConfig {
    pub fn new(capacity: u64, gamma: f64) -> Result<Self, TrafficError> {
        if capacity == 0 {
            return Err(TrafficError::ZeroCapacity);
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(TrafficError::GammaOutOfRange(gamma));
        }
        Ok(Self { capacity, gamma })
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn arrival_rate(&self) -> f64 {
        (self.capacity as f64).powf(self.gamma)
    }
}

/// Mean arrivals per slot, `C^gamma`.
pub fn arrival_rate(cfg: &ScalingConfig) -> f64 {
    cfg.arrival_rate()
}

/// Distribution of the per-request prediction horizon `T`.
#[derive(Debug, Clone, PartialEq)]
pub enum LookaheadModel {
    Deterministic(u32),
    /// Probabilities for the contiguous support `min..=min + probs.len() - 1`.
    Tabulated { min: u32, probs: Vec<f64> },
    Binomial { max: u32, p: f64 },
    Uniform { min: u32, max: u32 },
    /// `T = 0` with probability `C^-alpha`, otherwise `T = fallback`.
    CapacityScaled { alpha: f64, fallback: u32 },
}

/// A probability mass function on `min..=min + probs.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    pub min: u32,
    pub probs: Vec<f64>,
}

impl Pmf {
    pub fn max(&self) -> u32 {
        self.min + self.probs.len() as u32 - 1
    }

    pub fn prob(&self, t: u32) -> f64 {
        t.checked_sub(self.min)
            .and_then(|i| self.probs.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// Smallest support point carrying positive mass.
    pub fn min_positive(&self) -> Option<u32> {
        self.probs
            .iter()
            .position(|&p| p > 0.0)
            .map(|i| self.min + i as u32)
    }
}

impl LookaheadModel {
    pub fn tabulated(min: u32, max: u32, probs: Vec<f64>) -> Result<Self, TrafficError> {
        if max < min {
            return Err(TrafficError::InvalidLookahead(format!(
                "tabulated support {min}..{max} is empty"
            )));
        }
        if probs.len() != (max - min + 1) as usize {
            return Err(TrafficError::InvalidLookahead(format!(
                "tabulated support {min}..{max} has {} points but {} probabilities were given",
                max - min + 1,
                probs.len()
            )));
        }
        let model = Self::Tabulated { min, probs };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |msg: String| Err(TrafficError::InvalidLookahead(msg));
        match self {
            Self::Deterministic(_) => Ok(()),
            Self::Tabulated { probs, .. } => {
                if probs.is_empty() {
                    return bad("tabulated model has no support".into());
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return bad("tabulated probabilities must be finite and nonnegative".into());
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("tabulated probabilities sum to {total}, not 1"));
                }
                Ok(())
            }
            Self::Binomial { p, .. } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("binomial p must lie in [0, 1], got {p}"));
                }
                Ok(())
            }
            Self::Uniform { min, max } => {
                if max < min {
                    return bad(format!("uniform support {min}..{max} is empty"));
                }
                Ok(())
            }
            Self::CapacityScaled { alpha, fallback } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad(format!("scaled alpha must be positive, got {alpha}"));
                }
                if *fallback == 0 {
                    return bad("scaled fallback horizon must be at least 1".into());
                }
                Ok(())
            }
        }
    }

    /// The PMF of `T` at capacity `capacity` (only `CapacityScaled` depends on it).
    pub fn pmf(&self, capacity: u64) -> Pmf {
        match self {
            Self::Deterministic(t) => Pmf { min: *t, probs: vec![1.0] },
            Self::Tabulated { min, probs } => Pmf { min: *min, probs: probs.clone() },
            Self::Binomial { max, p } => {
                let n = u64::from(*max);
                let probs = (0..=n)
                    .map(|t| {
                        ln_binomial(n, t).exp() * p.powi(t as i32) * (1.0 - p).powi((n - t) as i32)
                    })
                    .collect();
                Pmf { min: 0, probs }
            }
            Self::Uniform { min, max } => {
                let width = (max - min + 1) as usize;
                Pmf { min: *min, probs: vec![1.0 / width as f64; width] }
            }
            Self::CapacityScaled { alpha, fallback } => {
                let p0 = scaled_zero_probability(*alpha, capacity);
                let mut probs = vec![0.0; *fallback as usize + 1];
                probs[0] = p0;
                probs[*fallback as usize] = 1.0 - p0;
                Pmf { min: 0, probs }
            }
        }
    }

    /// Largest `T` the model can produce.
    pub fn max_lookahead(&self) -> u32 {
        match self {
            Self::Deterministic(t) => *t,
            Self::Tabulated { min, probs } => min + probs.len().saturating_sub(1) as u32,
            Self::Binomial { max, .. } => *max,
            Self::Uniform { max, .. } => *max,
            Self::CapacityScaled { fallback, .. } => *fallback,
        }
    }
}

/// `C^-alpha` clamped to `[0, 1]`.
pub fn scaled_zero_probability(alpha: f64, capacity: u64) -> f64 {
    (capacity as f64).powf(-alpha).clamp(0.0, 1.0)
}

impl fmt::Display for LookaheadModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Deterministic(t) => write!(f, "deterministic:{t}"),
            Self::Tabulated { min, probs } => {
                write!(f, "tabulated:{min}")?;
                for p in probs {
                    write!(f, ":{p}")?;
                }
                Ok(())
            }
            Self::Binomial { max, p } => write!(f, "binomial:{max}:{p}"),
            Self::Uniform { min, max } => write!(f, "uniform:{min}:{max}"),
            Self::CapacityScaled { alpha, fallback } => write!(f, "scaled:{alpha}:{fallback}"),
        }
    }
}

impl FromStr for LookaheadModel {
    type Err = TrafficError;

    /// Parses `deterministic:T`, `binomial:TMAX:P`, `uniform:TMIN:TMAX`,
    /// `tabulated:TMIN:P0:P1:...` and `scaled:ALPHA:FALLBACK`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| TrafficError::InvalidLookahead(format!("{msg} in `{s}`"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let int = |v: &str| v.trim().parse::<u32>().map_err(|_| bad("expected an integer"));
        let real = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(&format!("expected {n} parameters")))
            }
        };
        let model = match kind {
            "deterministic" => {
                arity(1)?;
                Self::Deterministic(int(args[0])?)
            }
            "binomial" => {
                arity(2)?;
                Self::Binomial { max: int(args[0])?, p: real(args[1])? }
            }
            "uniform" => {
                arity(2)?;
                Self::Uniform { min: int(args[0])?, max: int(args[1])? }
            }
            "scaled" => {
                arity(2)?;
                Self::CapacityScaled { alpha: real(args[0])?, fallback: int(args[1])? }
            }
            "tabulated" => {
                if args.len() < 2 {
                    return Err(bad("expected a minimum and at least one probability"));
                }
                let min = int(args[0])?;
                let probs = args[1..].iter().map(|v| real(v)).collect::<Result<Vec<_>, _>>()?;
                let max = min + probs.len() as u32 - 1;
                return Self::tabulated(min, max, probs);
            }
            _ => return Err(bad("unknown lookahead kind")),
        };
        model.validate()?;
        Ok(model)
    }
}

/// Inversion sampler for a lookahead PMF; one uniform per draw.
#[derive(Debug, Clone)]
pub struct LookaheadSampler {
    min: u32,
    cdf: Vec<f64>,
}

impl LookaheadSampler {
    pub fn new(model: &LookaheadModel, capacity: u64) -> Result<Self, TrafficError> {
        model.validate()?;
        let pmf = model.pmf(capacity);
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Draws beyond the rounded total land on the last positive-mass point.
        if let Some(last) = pmf.probs.iter().rposition(|&p| p > 0.0) {
            cdf.truncate(last + 1);
            cdf[last] = 1.0;
        }
        Ok(Self { min: pmf.min, cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        self.min + idx as u32
    }
}

/// Draws `T` from `model` at capacity `capacity`.
pub fn sample_lookahead<R: Rng + ?Sized>(
    model: &LookaheadModel,
    capacity: u64,
    rng: &mut R,
) -> Result<u32, TrafficError> {
    Ok(LookaheadSampler::new(model, capacity)?.sample(rng))
}

const INVERSION_LIMIT: f64 = 10.0;

/// Exact Poisson sampler.
///
/// Means below 10 use sequential CDF inversion from a single uniform. Larger
/// means use Hörmann's PTRS transformed rejection with the exact log-PMF
/// acceptance test, which stays exact for any mean (tested up to 10^6).
#[derive(Debug, Clone, Copy)]
pub struct Poisson {
    rate: f64,
    method: Method,
}

#[derive(Debug, Clone, Copy)]
enum Method {
    Zero,
    Inversion { exp_neg_rate: f64 },
    Ptrs(Ptrs),
}

#[derive(Debug, Clone, Copy)]
struct Ptrs {
    ln_rate: f64,
    a: f64,
    b: f64,
    ln_inv_alpha: f64,
    v_r: f64,
}

impl Poisson {
    pub fn new(rate: f64) -> Result<Self, TrafficError> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(TrafficError::InvalidRate(rate));
        }
        let method = if rate == 0.0 {
            Method::Zero
        } else if rate < INVERSION_LIMIT {
            Method::Inversion { exp_neg_rate: (-rate).exp() }
        } else {
            let b = 0.931 + 2.53 * rate.sqrt();
            Method::Ptrs(Ptrs {
                ln_rate: rate.ln(),
                a: -0.059 + 0.02483 * b,
                b,
                ln_inv_alpha: (1.1239 + 1.1328 / (b - 3.4)).ln(),
                v_r: 0.9277 - 3.6224 / (b - 2.0),
            })
        };
        Ok(Self { rate, method })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.method {
            Method::Zero => 0,
            Method::Inversion { exp_neg_rate } => {
                let u: f64 = rng.random();
                let mut k = 0u64;
                let mut term = exp_neg_rate;
                let mut cdf = term;
                // Stops once the terms underflow, which only matters for u
                // within a few ulps of 1.
                while u >= cdf && term > 0.0 {
                    k += 1;
                    term *= self.rate / k as f64;
                    cdf += term;
                }
                k
            }
            Method::Ptrs(p) => loop {
                let u = rng.random::<f64>() - 0.5;
                let v: f64 = rng.random();
                let us = 0.5 - u.abs();
                if us <= 0.0 {
                    continue;
                }
                let k = ((2.0 * p.a / us + p.b) * u + self.rate + 0.43).floor();
                if us >= 0.07 && v <= p.v_r {
                    return k as u64;
                }
                if k < 0.0 || (us < 0.013 && v > us) {
                    continue;
                }
                let lhs = v.ln() + p.ln_inv_alpha - (p.a / (us * us) + p.b).ln();
                let rhs = -self.rate + k * p.ln_rate - ln_factorial(k as u64);
                if lhs <= rhs {
                    return k as u64;
                }
            },
        }
    }
}

/// One Poisson draw with mean `rate`.
pub fn sample_poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u64, TrafficError> {
    Ok(Poisson::new(rate)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServiceClass {
    Primary,
    Secondary,
}

/// One unit-size demand. Served in any slot `arrival_slot..=deadline_slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub id: u64,
    pub class: ServiceClass,
    pub arrival_slot: u64,
    pub deadline_slot: u64,
}

impl Request {
    pub fn lookahead(&self) -> u64 {
        self.deadline_slot - self.arrival_slot
    }
}

/// Run-wide id sequence; ids increase in generation order.
#[derive(Debug, Clone, Default)]
pub struct RequestIds {
    next: u64,
}

impl RequestIds {
    pub fn new() -> Self {
        Self::default()
    }

    fn take(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }
}

/// Poisson arrivals whose deadlines come from a lookahead model.
#[derive(Debug, Clone)]
pub struct PredictiveTraffic {
    arrivals: Poisson,
    lookahead: LookaheadSampler,
    class: ServiceClass,
}

impl PredictiveTraffic {
    pub fn new(scaling: &ScalingConfig, model: &LookaheadModel) -> Result<Self, TrafficError> {
        Self::with_rate(scaling.arrival_rate(), model, scaling.capacity())
    }

    /// Same as [`PredictiveTraffic::new`] with an explicit arrival rate.
    pub fn with_rate(
        rate: f64,
        model: &LookaheadModel,
        capacity: u64,
    ) -> Result<Self, TrafficError> {
        Ok(Self {
            arrivals: Poisson::new(rate)?,
            lookahead: LookaheadSampler::new(model, capacity)?,
            class: ServiceClass::Primary,
        })
    }

    pub fn with_class(mut self, class: ServiceClass) -> Self {
        self.class = class;
        self
    }

    pub fn generate_slot<R: Rng + ?Sized>(
        &self,
        slot: u64,
        ids: &mut RequestIds,
        rng: &mut R,
        out: &mut Vec<Request>,
    ) {
        let count = self.arrivals.sample(rng);
        emit(count, &self.lookahead, self.class, slot, ids, rng, out);
    }
}

fn emit<R: Rng + ?Sized>(
    count: u64,
    lookahead: &LookaheadSampler,
    class: ServiceClass,
    slot: u64,
    ids: &mut RequestIds,
    rng: &mut R,
    out: &mut Vec<Request>,
) {
    out.reserve(count as usize);
    for _ in 0..count {
        let t = lookahead.sample(rng);
        out.push(Request {
            id: ids.take(),
            class,
            arrival_slot: slot,
            deadline_slot: slot + u64::from(t),
        });
    }
}

/// Scripted per-slot arrival counts; slots past the end of the script are empty.
#[derive(Debug, Clone)]
pub struct ScriptedTraffic {
    counts: Vec<u64>,
    lookahead: LookaheadSampler,
}

impl ScriptedTraffic {
    pub fn new(
        counts: Vec<u64>,
        model: &LookaheadModel,
        capacity: u64,
    ) -> Result<Self, TrafficError> {
        Ok(Self { counts, lookahead: LookaheadSampler::new(model, capacity)? })
    }

    pub fn generate_slot<R: Rng + ?Sized>(
        &self,
        slot: u64,
        ids: &mut RequestIds,
        rng: &mut R,
        out: &mut Vec<Request>,
    ) {
        let count = usize::try_from(slot)
            .ok()
            .and_then(|s| self.counts.get(s))
            .copied()
            .unwrap_or(0);
        emit(count, &self.lookahead, ServiceClass::Primary, slot, ids, rng, out);
    }
}

/// Imperfect prediction: a predicted stream `Q'` with rate `C^(alpha' gamma)`
/// and deadline `n + T`, superposed with an independent urgent stream `Q''`
/// with rate `C^(alpha'' gamma)` and deadline `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModelConfig {
    pub gamma: f64,
    pub alpha_prime: f64,
    pub alpha_double_prime: f64,
    pub lookahead: u32,
}

impl ErrorModelConfig {
    pub fn gamma_prime(&self) -> f64 {
        self.alpha_prime * self.gamma
    }

    pub fn gamma_double_prime(&self) -> f64 {
        self.alpha_double_prime * self.gamma
    }

    pub fn predicted_rate(&self, capacity: u64) -> f64 {
        (capacity as f64).powf(self.gamma_prime())
    }

    pub fn urgent_rate(&self, capacity: u64) -> f64 {
        (capacity as f64).powf(self.gamma_double_prime())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintViolation {
    /// `gamma'' > gamma`.
    UrgentExceedsBaseline { gamma_double_prime: f64, gamma: f64 },
    /// `C^gamma' + C^gamma'' < C^gamma`.
    RateDeficit { predicted_plus_urgent: f64, baseline: f64 },
    /// Parameters that are not finite numbers.
    NotFinite,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UrgentExceedsBaseline { gamma_double_prime, gamma } => write!(
                f,
                "urgent exponent gamma'' = {gamma_double_prime} exceeds gamma = {gamma} (need gamma'' <= gamma)"
            ),
            Self::RateDeficit { predicted_plus_urgent, baseline } => write!(
                f,
                "C^gamma' + C^gamma'' = {predicted_plus_urgent} is below C^gamma = {baseline} (need C^gamma' + C^gamma'' >= C^gamma)"
            ),
            Self::NotFinite => write!(f, "error-model parameters must be finite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("infeasible error model: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ViolationReport {
    pub violations: Vec<ConstraintViolation>,
}

/// Checks `gamma'' <= gamma` and `C^gamma' + C^gamma'' >= C^gamma`.
pub fn validate_error_config(cfg: &ErrorModelConfig, capacity: u64) -> Result<(), ViolationReport> {
    let finite = [cfg.gamma, cfg.alpha_prime, cfg.alpha_double_prime]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(ViolationReport { violations: vec![ConstraintViolation::NotFinite] });
    }
    let mut violations = Vec::new();
    let gamma_urgent = cfg.gamma_double_prime();
    if gamma_urgent > cfg.gamma + 1e-12 {
        violations.push(ConstraintViolation::UrgentExceedsBaseline {
            gamma_double_prime: gamma_urgent,
            gamma: cfg.gamma,
        });
    }
    let total = cfg.predicted_rate(capacity) + cfg.urgent_rate(capacity);
    let baseline = (capacity as f64).powf(cfg.gamma);
    if total < baseline * (1.0 - 1e-12) {
        violations.push(ConstraintViolation::RateDeficit { predicted_plus_urgent: total, baseline });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ViolationReport { violations })
    }
}

/// Sampler for the two-stream error model at a fixed capacity.
#[derive(Debug, Clone)]
pub struct ErrorModelTraffic {
    predicted: Poisson,
    urgent: Poisson,
    lookahead: u32,
}

impl ErrorModelTraffic {
    pub fn new(cfg: &ErrorModelConfig, capacity: u64) -> Result<Self, TrafficError> {
        validate_error_config(cfg, capacity)?;
        Ok(Self {
            predicted: Poisson::new(cfg.predicted_rate(capacity))?,
            urgent: Poisson::new(cfg.urgent_rate(capacity))?,
            lookahead: cfg.lookahead,
        })
    }

    pub fn predicted_rate(&self) -> f64 {
        self.predicted.rate()
    }

    pub fn urgent_rate(&self) -> f64 {
        self.urgent.rate()
    }

    /// Predicted requests first, then urgent ones.
    pub fn generate_slot<R: Rng + ?Sized>(
        &self,
        slot: u64,
        ids: &mut RequestIds,
        rng: &mut R,
        out: &mut Vec<Request>,
    ) {
        let predicted = self.predicted.sample(rng);
        let urgent = self.urgent.sample(rng);
        let mut push = |count: u64, t: u32| {
            for _ in 0..count {
                out.push(Request {
                    id: ids.take(),
                    class: ServiceClass::Primary,
                    arrival_slot: slot,
                    deadline_slot: slot + u64::from(t),
                });
            }
        };
        push(predicted, self.lookahead);
        push(urgent, 0);
    }
}

/// One slot of single-stream predictive arrivals.
pub fn generate_slot<R: Rng + ?Sized>(
    cfg: &ScalingConfig,
    model: &LookaheadModel,
    slot: u64,
    ids: &mut RequestIds,
    rng: &mut R,
) -> Result<Vec<Request>, TrafficError> {
    let mut out = Vec::new();
    PredictiveTraffic::new(cfg, model)?.generate_slot(slot, ids, rng, &mut out);
    Ok(out)
}

/// One slot of the two-stream error model.
pub fn generate_error_model_slot<R: Rng + ?Sized>(
    cfg: &ErrorModelConfig,
    capacity: u64,
    slot: u64,
    ids: &mut RequestIds,
    rng: &mut R,
) -> Result<Vec<Request>, TrafficError> {
    let mut out = Vec::new();
    ErrorModelTraffic::new(cfg, capacity)?.generate_slot(slot, ids, rng, &mut out);
    Ok(out)
}
