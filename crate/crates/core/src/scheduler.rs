//! Single-class slotted EDF service with slot-level outage detection.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::traffic::{
    ErrorModelConfig, ErrorModelTraffic, LookaheadModel, PredictiveTraffic, Request, RequestIds,
    ScalingConfig, ScriptedTraffic, TrafficError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("request {id} has deadline {deadline} before its arrival slot {arrival}")]
    DeadlineBeforeArrival { id: u64, arrival: u64, deadline: u64 },
    #[error("horizon needs slots > warmup, got slots = {slots}, warmup = {warmup}")]
    EmptyHorizon { slots: u64, warmup: u64 },
    #[error(transparent)]
    Traffic(#[from] TrafficError),
}

/// Pending requests in EDF order: by deadline, then by id.
#[derive(Debug, Clone, Default)]
pub struct RequestQueue {
    pending: BTreeMap<(u64, u64), Request>,
}

impl RequestQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn head(&self) -> Option<&Request> {
        self.pending.values().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Request> {
        self.pending.values()
    }

    /// Number of pending requests whose deadline is `slot` or earlier.
    pub fn due_count(&self, slot: u64) -> usize {
        self.pending.range(..(slot + 1, 0)).count()
    }

    /// Adds a batch. The whole batch is rejected if any request has
    /// `deadline < arrival`.
    pub fn enqueue_batch<I>(&mut self, requests: I) -> Result<(), SchedulerError>
    where
        I: IntoIterator<Item = Request>,
    {
        let batch: Vec<Request> = requests.into_iter().collect();
        if let Some(bad) = batch.iter().find(|q| q.deadline_slot < q.arrival_slot) {
            return Err(SchedulerError::DeadlineBeforeArrival {
                id: bad.id,
                arrival: bad.arrival_slot,
                deadline: bad.deadline_slot,
            });
        }
        self.pending
            .extend(batch.into_iter().map(|q| ((q.deadline_slot, q.id), q)));
        Ok(())
    }

    /// Serves up to `count` requests from the head; returns how many were served.
    pub fn serve(&mut self, count: u64) -> u64 {
        let mut served = 0;
        while served < count && self.pending.pop_first().is_some() {
            served += 1;
        }
        served
    }

    /// Drops every request whose deadline is `slot` or earlier.
    pub fn expire(&mut self, slot: u64) -> u64 {
        let mut expired = 0;
        while let Some(entry) = self.pending.first_entry() {
            if entry.key().0 > slot {
                break;
            }
            entry.remove();
            expired += 1;
        }
        expired
    }
}

/// Result of one slot of service.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOutcome {
    pub served: u64,
    pub expired: u64,
    pub outage: bool,
}

/// Serves up to `capacity` requests in EDF order, then drops whatever is
/// due at `slot`. Outage means at least one request expired.
pub fn serve_slot(queue: &mut RequestQueue, capacity: u64, slot: u64) -> SlotOutcome {
    let served = queue.serve(capacity);
    let expired = queue.expire(slot);
    SlotOutcome { served, expired, outage: expired > 0 }
}

/// Counters for one run (or an aggregate of runs).
///
/// `slots_simulated` and `outage_slots` cover only the measurement window
/// (slots at or after the warmup). The request counters cover the whole run
/// so that `requests_arrived = requests_served + requests_expired + pending_at_end`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutageStats {
    pub slots_simulated: u64,
    pub outage_slots: u64,
    pub requests_arrived: u64,
    pub requests_served: u64,
    pub requests_expired: u64,
    pub pending_at_end: u64,
}

impl OutageStats {
    pub fn outage_fraction(&self) -> f64 {
        if self.slots_simulated == 0 {
            0.0
        } else {
            self.outage_slots as f64 / self.slots_simulated as f64
        }
    }

    pub fn is_balanced(&self) -> bool {
        self.requests_arrived == self.requests_served + self.requests_expired + self.pending_at_end
            && self.outage_slots <= self.slots_simulated
    }

    pub fn merge(&mut self, other: &OutageStats) {
        self.slots_simulated += other.slots_simulated;
        self.outage_slots += other.outage_slots;
        self.requests_arrived += other.requests_arrived;
        self.requests_served += other.requests_served;
        self.requests_expired += other.requests_expired;
        self.pending_at_end += other.pending_at_end;
    }
}

/// Total slots and the number of leading slots excluded from measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon {
    slots: u64,
    warmup: u64,
}

impl Horizon {
    pub fn new(slots: u64, warmup: u64) -> Result<Self, SchedulerError> {
        if slots <= warmup {
            return Err(SchedulerError::EmptyHorizon { slots, warmup });
        }
        Ok(Self { slots, warmup })
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }

    pub fn warmup(&self) -> u64 {
        self.warmup
    }

    pub fn is_measured(&self, slot: u64) -> bool {
        slot >= self.warmup
    }
}

/// Warmup length used when none is configured: four times the largest horizon.
pub fn default_warmup(max_lookahead: u32) -> u64 {
    4 * u64::from(max_lookahead)
}

/// What a single-class run feeds into the queue.
#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    Predictive(LookaheadModel),
    ErrorModel(ErrorModelConfig),
}

/// A ready-to-run arrival process.
#[derive(Debug, Clone)]
pub enum ArrivalProcess {
    Predictive(PredictiveTraffic),
    ErrorModel(ErrorModelTraffic),
    Scripted(ScriptedTraffic),
}

impl ArrivalProcess {
    pub fn from_workload(
        scaling: &ScalingConfig,
        workload: &Workload,
    ) -> Result<Self, TrafficError> {
        Ok(match workload {
            Workload::Predictive(model) => Self::Predictive(PredictiveTraffic::new(scaling, model)?),
            Workload::ErrorModel(cfg) => {
                Self::ErrorModel(ErrorModelTraffic::new(cfg, scaling.capacity())?)
            }
        })
    }

    pub fn generate_slot<R: Rng + ?Sized>(
        &self,
        slot: u64,
        ids: &mut RequestIds,
        rng: &mut R,
        out: &mut Vec<Request>,
    ) {
        match self {
            Self::Predictive(t) => t.generate_slot(slot, ids, rng, out),
            Self::ErrorModel(t) => t.generate_slot(slot, ids, rng, out),
            Self::Scripted(t) => t.generate_slot(slot, ids, rng, out),
        }
    }
}

/// Slot loop `{generate, enqueue, serve}` over an arbitrary arrival process.
pub fn run_process<R: Rng + ?Sized>(
    process: &ArrivalProcess,
    capacity: u64,
    horizon: Horizon,
    rng: &mut R,
) -> OutageStats {
    let mut queue = RequestQueue::new();
    let mut ids = RequestIds::new();
    let mut stats = OutageStats::default();
    let mut batch = Vec::new();
    for slot in 0..horizon.slots() {
        batch.clear();
        process.generate_slot(slot, &mut ids, rng, &mut batch);
        stats.requests_arrived += batch.len() as u64;
        queue
            .enqueue_batch(batch.drain(..))
            .expect("generated requests never have deadline < arrival");
        let outcome = serve_slot(&mut queue, capacity, slot);
        stats.requests_served += outcome.served;
        stats.requests_expired += outcome.expired;
        if horizon.is_measured(slot) {
            stats.slots_simulated += 1;
            stats.outage_slots += u64::from(outcome.outage);
        }
    }
    stats.pending_at_end = queue.len() as u64;
    stats
}

/// One single-class EDF run at `scaling`.
pub fn run_single_class<R: Rng + ?Sized>(
    scaling: &ScalingConfig,
    workload: &Workload,
    horizon: Horizon,
    rng: &mut R,
) -> Result<OutageStats, SchedulerError> {
    let process = ArrivalProcess::from_workload(scaling, workload)?;
    Ok(run_process(&process, scaling.capacity(), horizon, rng))
}
