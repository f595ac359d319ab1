//! Closed-form outage probabilities, bounds and diversity gains.
//!
//! Probabilities are carried as natural logarithms. [`LogProb::value`]
//! converts back to a linear probability and flushes anything below
//! `e^-700` to zero.

mod bounds;
mod diversity;
mod secondary;

pub use bounds::{
    chernoff_upper_bound, error_model_lower_bound, exact_nonpredictive_outage,
    factorial_lower_bound, lookahead_bounds, predictive_outage_bounds,
};
pub use diversity::{
    diversity_deterministic, diversity_random_t, diversity_secondary_nonpredictive,
    diversity_with_errors, empirical_diversity, improves_over_non_predictive, optimal_lookahead,
    DiversityResult, OptimalLookahead, Regime,
};
pub use secondary::{
    exact_secondary_outage, secondary_lower_bound, secondary_outage_bounds,
    secondary_upper_bound, SecondaryOutage, OUTER_TERM_BUDGET,
};

use thiserror::Error;

use crate::special::{ln_one_minus_exp, poisson_ln_pmf};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("Chernoff bound needs C > C^gamma (got C = {capacity}, gamma = {gamma})")]
    ChernoffNotApplicable { capacity: u64, gamma: f64 },
    #[error("lookahead model has no support point with positive probability")]
    EmptySupport,
    #[error("infeasible error model: {0}")]
    Infeasible(String),
    #[error("only alpha' >= alpha'' is modeled (got alpha' = {alpha_prime}, alpha'' = {alpha_double_prime})")]
    DegenerateOrdering { alpha_prime: f64, alpha_double_prime: f64 },
    #[error("alpha' * gamma = 1: no finite balancing lookahead")]
    Singular,
    #[error("outage probability 0 gives an unmeasurable (infinite) diversity estimate")]
    Unmeasurable,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("series did not converge within {terms} outer terms")]
    NonConvergent { terms: u64 },
}

/// Linear values below this log-probability are reported as 0.
pub const LINEAR_FLUSH_LOG: f64 = -700.0;

/// A probability stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        Self(ln.min(0.0))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        if self.0 < LINEAR_FLUSH_LOG {
            0.0
        } else {
            self.0.exp()
        }
    }
}

/// Natural-log bounds bracketing an outage probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichBounds {
    pub log_lower: f64,
    pub log_upper: f64,
}

impl SandwichBounds {
    pub fn lower(&self) -> f64 {
        LogProb::from_ln(self.log_lower).value()
    }

    pub fn upper(&self) -> f64 {
        LogProb::from_ln(self.log_upper).value()
    }
}

const SERIES_REL_EPS: f64 = 1e-17;

/// `ln Pr(Q > threshold)` for `Q ~ Poisson(rate)`.
///
/// Sums whichever side of the distribution lies away from the mode,
/// starting from its largest term and scaling the remaining terms relative
/// to it. The upper-tail sum stops once the geometric majorant
/// `term * r / (1 - r)`, with `r = rate / (k + 1)`, is below 1e-17 of the
/// partial sum.
pub fn poisson_tail_log(rate: f64, threshold: u64) -> f64 {
    assert!(rate.is_finite() && rate >= 0.0, "rate must be finite and nonnegative");
    if rate == 0.0 {
        return f64::NEG_INFINITY;
    }
    if threshold as f64 >= rate {
        let first = threshold + 1;
        let mut sum = 1.0f64;
        let mut term = 1.0f64;
        let mut k = first;
        loop {
            k += 1;
            term *= rate / k as f64;
            sum += term;
            let r = rate / (k + 1) as f64;
            if term * r / (1.0 - r) < SERIES_REL_EPS * sum || term == 0.0 {
                break;
            }
        }
        poisson_ln_pmf(rate, first) + sum.ln()
    } else {
        // Lower side: every term decreases going down from `threshold` since
        // threshold < rate.
        let mut sum = 1.0f64;
        let mut term = 1.0f64;
        let mut k = threshold;
        while k > 0 {
            term *= k as f64 / rate;
            sum += term;
            k -= 1;
            let r = k as f64 / rate;
            if term * r / (1.0 - r) < SERIES_REL_EPS * sum || term == 0.0 {
                break;
            }
        }
        let log_cdf = poisson_ln_pmf(rate, threshold) + sum.ln();
        ln_one_minus_exp(log_cdf.min(-f64::MIN_POSITIVE))
    }
}
