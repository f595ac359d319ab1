//! Secondary-class outage next to a non-predictive primary under SP1.
//!
//! With `Y = Q^p + Q^s` and `U = Q^s`, the secondary class is in outage
//! exactly when `Y > C` and `U > 0`.

use super::{poisson_tail_log, AnalysisError, LogProb, SandwichBounds};
use crate::special::{ln_factorial, log_add_exp, log_sum_exp};

/// Upper limit on outer-sum terms before reporting non-convergence.
pub const OUTER_TERM_BUDGET: u64 = 1_000_000;

/// Value of the double sum with its truncation certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondaryOutage {
    pub probability: LogProb,
    /// Outer terms `y = C+1 .. C+outer_terms` that were summed.
    pub outer_terms: u64,
    /// `ln` of the geometric majorant on the discarded tail.
    pub log_residual_bound: f64,
}

fn rates(capacity: u64, gamma_p: f64, gamma_s: f64) -> Result<(f64, f64), AnalysisError> {
    if capacity == 0 {
        return Err(AnalysisError::InvalidArgument("capacity must be at least 1".into()));
    }
    if !(gamma_p > gamma_s) {
        return Err(AnalysisError::InvalidArgument(format!(
            "need gamma_p > gamma_s, got {gamma_p} and {gamma_s}"
        )));
    }
    let c = capacity as f64;
    Ok((c.powf(gamma_p), c.powf(gamma_s)))
}

/// `Pr(Y > C, U > 0)` as the double sum over `y > C`, `1 <= u <= y` of
/// `C^(gamma_p (y-u) + gamma_s u) / ((y-u)! u!) e^-(C^gamma_p + C^gamma_s)`.
///
/// The outer term for `y` is at most `Pr(Y = y)`, and for `y + 2 > Lambda`
/// the tail `sum_{y' > y} Pr(Y = y')` is at most
/// `Pr(Y = y + 1) / (1 - Lambda / (y + 2))`. Summation stops once that
/// majorant falls below `tail_tolerance` times the running sum.
pub fn exact_secondary_outage(
    capacity: u64,
    gamma_p: f64,
    gamma_s: f64,
    tail_tolerance: f64,
) -> Result<SecondaryOutage, AnalysisError> {
    let (rate_p, rate_s) = rates(capacity, gamma_p, gamma_s)?;
    if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "tail tolerance must lie in (0, 1), got {tail_tolerance}"
        )));
    }
    let ln_c = (capacity as f64).ln();
    let total_rate = rate_p + rate_s;
    let ln_total = total_rate.ln();
    let log_tol = tail_tolerance.ln();

    let mut log_sum = f64::NEG_INFINITY;
    let mut inner = Vec::new();
    for n in 1..=OUTER_TERM_BUDGET {
        let y = capacity + n;
        inner.clear();
        inner.extend((1..=y).map(|u| {
            ln_c * (gamma_p * (y - u) as f64 + gamma_s * u as f64)
                - ln_factorial(y - u)
                - ln_factorial(u)
        }));
        let log_term = log_sum_exp(&inner) - total_rate;
        log_sum = log_add_exp(log_sum, log_term);

        let ratio = total_rate / (y + 2) as f64;
        if ratio < 1.0 {
            let next = y + 1;
            let log_next_pmf = next as f64 * ln_total - total_rate - ln_factorial(next);
            let log_residual = log_next_pmf - (1.0 - ratio).ln();
            if log_residual < log_tol + log_sum {
                return Ok(SecondaryOutage {
                    probability: LogProb::from_ln(log_sum),
                    outer_terms: n,
                    log_residual_bound: log_residual,
                });
            }
        }
    }
    Err(AnalysisError::NonConvergent { terms: OUTER_TERM_BUDGET })
}

/// `Pr(Q^p + Q^s > C)`, dropping the `U > 0` condition.
pub fn secondary_upper_bound(
    capacity: u64,
    gamma_p: f64,
    gamma_s: f64,
) -> Result<LogProb, AnalysisError> {
    let (rate_p, rate_s) = rates(capacity, gamma_p, gamma_s)?;
    Ok(LogProb::from_ln(poisson_tail_log(rate_p + rate_s, capacity)))
}

/// `Pr(Q^p > C) (1 - C^-gamma_s)`.
///
/// `1 - C^-gamma_s` is at most `Pr(Q^s > 0) = 1 - e^-C^gamma_s`, so this
/// stays below `Pr(Q^p > C, Q^s > 0)`.
pub fn secondary_lower_bound(
    capacity: u64,
    gamma_p: f64,
    gamma_s: f64,
) -> Result<LogProb, AnalysisError> {
    let (rate_p, _) = rates(capacity, gamma_p, gamma_s)?;
    let factor = 1.0 - (capacity as f64).powf(-gamma_s);
    Ok(LogProb::from_ln(poisson_tail_log(rate_p, capacity) + factor.ln()))
}

pub fn secondary_outage_bounds(
    capacity: u64,
    gamma_p: f64,
    gamma_s: f64,
) -> Result<SandwichBounds, AnalysisError> {
    Ok(SandwichBounds {
        log_lower: secondary_lower_bound(capacity, gamma_p, gamma_s)?.ln(),
        log_upper: secondary_upper_bound(capacity, gamma_p, gamma_s)?.ln(),
    })
}
