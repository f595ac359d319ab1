//! Primary/secondary sharing of one per-slot capacity.
//!
//! Primary requests may be predicted `T` slots ahead and are served by EDF
//! up to an allocation chosen by the service policy. Secondary requests are
//! never predicted (deadline = arrival slot) and get whatever capacity the
//! primary class did not actually use in the slot.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::scheduler::{Horizon, OutageStats, RequestQueue};
use crate::stream;
use crate::traffic::{LookaheadModel, Poisson, PredictiveTraffic, RequestIds, TrafficError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoClassError {
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("{name} must lie in [0, 1], got {value}")]
    GammaOutOfRange { name: &'static str, value: f64 },
    #[error("primary arrivals must dominate: need gamma_p > gamma_s, got {gamma_p} <= {gamma_s}")]
    PrimaryNotDominant { gamma_p: f64, gamma_s: f64 },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
}

/// How SP3 turns `f * (pending - due)` into whole capacity units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Rounding {
    #[default]
    Floor,
    Nearest,
    Ceil,
}

impl Rounding {
    fn apply(self, x: f64) -> u64 {
        let v = match self {
            Self::Floor => x.floor(),
            Self::Nearest => x.round(),
            Self::Ceil => x.ceil(),
        };
        v.max(0.0) as u64
    }
}

/// Primary-side service policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyConfig {
    /// All capacity goes to primary EDF.
    Sp1,
    /// Primary is capped at `C - floor(C^beta)`.
    Sp2 { beta: f64 },
    /// Primary gets `min(C, due + f * (pending - due))`.
    Sp3 { f: f64, rounding: Rounding },
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), TwoClassError> {
        match *self {
            Self::Sp1 => Ok(()),
            Self::Sp2 { beta } if beta > 0.0 && beta < 1.0 => Ok(()),
            Self::Sp2 { beta } => {
                Err(TwoClassError::InvalidPolicy(format!("sp2 beta must lie in (0, 1), got {beta}")))
            }
            Self::Sp3 { f, .. } if (0.0..=1.0).contains(&f) => Ok(()),
            Self::Sp3 { f, .. } => {
                Err(TwoClassError::InvalidPolicy(format!("sp3 f must lie in [0, 1], got {f}")))
            }
        }
    }

    /// Capacity SP2 holds back for secondary traffic, `floor(C^beta)`.
    pub fn sp2_reserve(beta: f64, capacity: u64) -> u64 {
        ((capacity as f64).powf(beta).floor() as u64).min(capacity)
    }
}

impl fmt::Display for PolicyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Sp1 => write!(f, "sp1"),
            Self::Sp2 { beta } => write!(f, "sp2:{beta}"),
            Self::Sp3 { f: frac, rounding } => {
                write!(f, "sp3:{frac}")?;
                match rounding {
                    Rounding::Floor => Ok(()),
                    Rounding::Nearest => write!(f, ":round"),
                    Rounding::Ceil => write!(f, ":ceil"),
                }
            }
        }
    }
}

impl FromStr for PolicyConfig {
    type Err = TwoClassError;

    /// `sp1`, `sp2:BETA`, `sp3:F` or `sp3:F:{floor|round|ceil}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TwoClassError::InvalidPolicy(format!("cannot parse `{s}`"));
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let policy = match parts.as_slice() {
            ["sp1"] => Self::Sp1,
            ["sp2", beta] => Self::Sp2 { beta: num(beta)? },
            ["sp3", f] => Self::Sp3 { f: num(f)?, rounding: Rounding::Floor },
            ["sp3", f, mode] => {
                let rounding = match *mode {
                    "floor" => Rounding::Floor,
                    "round" => Rounding::Nearest,
                    "ceil" => Rounding::Ceil,
                    _ => return Err(bad()),
                };
                Self::Sp3 { f: num(f)?, rounding }
            }
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// Capacity the policy grants the primary class this slot.
///
/// `pending` counts primary requests in the system after this slot's
/// arrivals; `due` counts those with deadline equal to this slot.
pub fn primary_allocation(policy: &PolicyConfig, capacity: u64, pending: u64, due: u64) -> u64 {
    debug_assert!(due <= pending);
    match *policy {
        PolicyConfig::Sp1 => capacity,
        PolicyConfig::Sp2 { beta } => capacity - PolicyConfig::sp2_reserve(beta, capacity),
        PolicyConfig::Sp3 { f, rounding } => {
            let extra = rounding.apply(f * (pending - due) as f64);
            capacity.min(due + extra)
        }
    }
}

/// Outcome of one shared slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoClassSlot {
    pub primary_served: u64,
    pub primary_expired: u64,
    pub primary_outage: bool,
    pub secondary_served: u64,
    pub secondary_outage: bool,
}

/// Serves primary by EDF up to the policy allocation, then gives secondary
/// everything primary left unused.
pub fn serve_two_class_slot(
    primary: &mut RequestQueue,
    secondary_count: u64,
    policy: &PolicyConfig,
    capacity: u64,
    slot: u64,
) -> TwoClassSlot {
    let pending = primary.len() as u64;
    let due = primary.due_count(slot) as u64;
    let allocation = primary_allocation(policy, capacity, pending, due);
    let primary_served = primary.serve(allocation);
    let primary_expired = primary.expire(slot);
    let secondary_capacity = capacity - primary_served;
    let secondary_served = secondary_count.min(secondary_capacity);
    TwoClassSlot {
        primary_served,
        primary_expired,
        primary_outage: primary_expired > 0,
        secondary_served,
        secondary_outage: secondary_count > 0 && secondary_count > secondary_capacity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoClassConfig {
    capacity: u64,
    gamma_p: f64,
    gamma_s: f64,
    primary_lookahead: u32,
    policy: PolicyConfig,
    secondary_rate_override: Option<f64>,
}

impl TwoClassConfig {
    pub fn new(
        capacity: u64,
        gamma_p: f64,
        gamma_s: f64,
        primary_lookahead: u32,
        policy: PolicyConfig,
    ) -> Result<Self, TwoClassError> {
        if capacity == 0 {
            return Err(TwoClassError::ZeroCapacity);
        }
        for (name, value) in [("gamma_p", gamma_p), ("gamma_s", gamma_s)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(TwoClassError::GammaOutOfRange { name, value });
            }
        }
        if gamma_p <= gamma_s {
            return Err(TwoClassError::PrimaryNotDominant { gamma_p, gamma_s });
        }
        policy.validate()?;
        Ok(Self { capacity, gamma_p, gamma_s, primary_lookahead, policy, secondary_rate_override: None })
    }

    /// Replaces the secondary rate `C^gamma_s` (for instance with 0).
    pub fn with_secondary_rate(mut self, rate: f64) -> Self {
        self.secondary_rate_override = Some(rate);
        self
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    pub fn gamma_s(&self) -> f64 {
        self.gamma_s
    }

    pub fn primary_lookahead(&self) -> u32 {
        self.primary_lookahead
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy
    }

    pub fn primary_rate(&self) -> f64 {
        (self.capacity as f64).powf(self.gamma_p)
    }

    pub fn secondary_rate(&self) -> f64 {
        self.secondary_rate_override
            .unwrap_or_else(|| (self.capacity as f64).powf(self.gamma_s))
    }
}

/// One two-class run with explicit primary and secondary streams.
pub fn run_two_class_with<P: Rng + ?Sized, S: Rng + ?Sized>(
    cfg: &TwoClassConfig,
    horizon: Horizon,
    primary_rng: &mut P,
    secondary_rng: &mut S,
) -> Result<(OutageStats, OutageStats), TwoClassError> {
    let primary_traffic = PredictiveTraffic::with_rate(
        cfg.primary_rate(),
        &LookaheadModel::Deterministic(cfg.primary_lookahead),
        cfg.capacity,
    )?;
    let secondary_traffic = Poisson::new(cfg.secondary_rate())?;
    let mut queue = RequestQueue::new();
    let mut ids = RequestIds::new();
    let mut batch = Vec::new();
    let mut primary = OutageStats::default();
    let mut secondary = OutageStats::default();
    for slot in 0..horizon.slots() {
        batch.clear();
        primary_traffic.generate_slot(slot, &mut ids, primary_rng, &mut batch);
        primary.requests_arrived += batch.len() as u64;
        queue
            .enqueue_batch(batch.drain(..))
            .expect("generated requests never have deadline < arrival");
        let arrivals = secondary_traffic.sample(secondary_rng);
        secondary.requests_arrived += arrivals;

        let out = serve_two_class_slot(&mut queue, arrivals, &cfg.policy, cfg.capacity, slot);
        primary.requests_served += out.primary_served;
        primary.requests_expired += out.primary_expired;
        secondary.requests_served += out.secondary_served;
        secondary.requests_expired += arrivals - out.secondary_served;
        if horizon.is_measured(slot) {
            primary.slots_simulated += 1;
            secondary.slots_simulated += 1;
            primary.outage_slots += u64::from(out.primary_outage);
            secondary.outage_slots += u64::from(out.secondary_outage);
        }
    }
    primary.pending_at_end = queue.len() as u64;
    Ok((primary, secondary))
}

/// One two-class run seeded by `seed`. Primary arrivals use the same stream
/// as a single-class run with that seed, so they match it exactly.
pub fn run_two_class(
    cfg: &TwoClassConfig,
    horizon: Horizon,
    seed: u64,
) -> Result<(OutageStats, OutageStats), TwoClassError> {
    let mut primary_rng = stream::stream(seed, 0);
    let mut secondary_rng = stream::stream(seed, 1);
    run_two_class_with(cfg, horizon, &mut primary_rng, &mut secondary_rng)
}
