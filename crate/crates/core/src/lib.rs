//! Slotted-time simulation and closed-form analysis of outage under
//! prediction-based (proactive) resource allocation.
//!
//! Requests arrive as a Poisson stream with rate `C^gamma` against a
//! per-slot capacity `C`, each with a prediction lookahead `T`, and are
//! served earliest-deadline-first. [`analysis`] holds the exact tails,
//! bounds and diversity exponents; [`harness`] runs seeded capacity sweeps.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod harness;
pub mod scheduler;
pub mod special;
pub mod stream;
pub mod traffic;
pub mod twoclass;
