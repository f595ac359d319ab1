use std::fmt;

use super::AnalysisError;
use crate::traffic::LookaheadModel;

/// Which branch of a diversity formula produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `(1 + T)(1 - gamma)` with a fixed horizon.
    Deterministic { lookahead: u32 },
    /// Fixed PMF: the smallest horizon dominates.
    MinimumLookahead { t_min: u32 },
    /// Capacity-scaled PMF limited by the vanishing `T = 0` fraction.
    AlphaLimited,
    /// Capacity-scaled PMF limited by the fallback horizon.
    LookaheadLimited { fallback: u32 },
    /// Error model limited by the predicted stream.
    PredictedStreamLimited,
    /// Error model limited by the urgent stream.
    UrgentStreamLimited,
    /// Error model with both branches equal.
    Balanced,
    /// Secondary class next to a non-predictive primary.
    SecondaryNonPredictive,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Deterministic { lookahead } => write!(f, "deterministic T={lookahead}"),
            Self::MinimumLookahead { t_min } => write!(f, "Tmin={t_min}-limited"),
            Self::AlphaLimited => write!(f, "alpha-limited"),
            Self::LookaheadLimited { fallback } => write!(f, "T={fallback}-limited"),
            Self::PredictedStreamLimited => write!(f, "predicted-stream-limited"),
            Self::UrgentStreamLimited => write!(f, "urgent-stream-limited"),
            Self::Balanced => write!(f, "balanced"),
            Self::SecondaryNonPredictive => write!(f, "secondary, non-predictive primary"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityResult {
    pub value: f64,
    pub regime: Regime,
}

fn check_gamma(gamma: f64) -> Result<(), AnalysisError> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(AnalysisError::InvalidArgument(format!("gamma must lie in [0, 1], got {gamma}")))
    }
}

/// `(1 + T)(1 - gamma)`.
pub fn diversity_deterministic(gamma: f64, lookahead: u32) -> DiversityResult {
    debug_assert!((0.0..=1.0).contains(&gamma));
    DiversityResult {
        value: (1.0 + f64::from(lookahead)) * (1.0 - gamma),
        regime: Regime::Deterministic { lookahead },
    }
}

/// Diversity with a random horizon.
///
/// A fixed PMF gives `(1 + Tmin)(1 - gamma)`. The capacity-scaled model,
/// with `Pr(T = 0) = C^-alpha` and horizon `F` otherwise, gives
/// `min{1 + alpha - gamma, (1 + F)(1 - gamma)}`; for `F = 1` the first
/// branch is active exactly when `alpha <= 1 - gamma`.
pub fn diversity_random_t(
    gamma: f64,
    model: &LookaheadModel,
) -> Result<DiversityResult, AnalysisError> {
    check_gamma(gamma)?;
    model
        .validate()
        .map_err(|e| AnalysisError::InvalidArgument(e.to_string()))?;
    match *model {
        LookaheadModel::Deterministic(t) => Ok(diversity_deterministic(gamma, t)),
        LookaheadModel::CapacityScaled { alpha, fallback } => {
            let alpha_branch = 1.0 + alpha - gamma;
            let lookahead_branch = (1.0 + f64::from(fallback)) * (1.0 - gamma);
            Ok(if alpha_branch <= lookahead_branch {
                DiversityResult { value: alpha_branch, regime: Regime::AlphaLimited }
            } else {
                DiversityResult { value: lookahead_branch, regime: Regime::LookaheadLimited { fallback } }
            })
        }
        _ => {
            // These PMFs do not depend on C.
            let t_min = model.pmf(1).min_positive().ok_or(AnalysisError::EmptySupport)?;
            Ok(DiversityResult {
                value: (1.0 + f64::from(t_min)) * (1.0 - gamma),
                regime: Regime::MinimumLookahead { t_min },
            })
        }
    }
}

fn check_error_model(
    gamma: f64,
    alpha_prime: f64,
    alpha_double_prime: f64,
) -> Result<(), AnalysisError> {
    check_gamma(gamma)?;
    if !(alpha_prime.is_finite() && alpha_double_prime.is_finite()) {
        return Err(AnalysisError::InvalidArgument("alpha', alpha'' must be finite".into()));
    }
    if alpha_double_prime > 1.0 {
        return Err(AnalysisError::Infeasible(format!(
            "alpha'' = {alpha_double_prime} > 1 lets urgent traffic exceed the error-free rate"
        )));
    }
    if alpha_prime.max(alpha_double_prime) < 1.0 {
        return Err(AnalysisError::Infeasible(format!(
            "max(alpha', alpha'') = {} < 1 violates C^gamma' + C^gamma'' >= C^gamma for large C",
            alpha_prime.max(alpha_double_prime)
        )));
    }
    if alpha_prime < alpha_double_prime {
        return Err(AnalysisError::DegenerateOrdering { alpha_prime, alpha_double_prime });
    }
    Ok(())
}

/// `min{(1 + T)(1 - alpha' gamma), 1 - alpha'' gamma}` for `alpha' >= alpha''`.
///
/// `lookahead` is real so the balancing horizon from [`optimal_lookahead`]
/// can be plugged in directly. Branches are clamped at 0.
pub fn diversity_with_errors(
    gamma: f64,
    alpha_prime: f64,
    alpha_double_prime: f64,
    lookahead: f64,
) -> Result<DiversityResult, AnalysisError> {
    check_error_model(gamma, alpha_prime, alpha_double_prime)?;
    if !(lookahead.is_finite() && lookahead >= 0.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "lookahead must be finite and nonnegative, got {lookahead}"
        )));
    }
    let predicted = ((1.0 + lookahead) * (1.0 - alpha_prime * gamma)).max(0.0);
    let urgent = (1.0 - alpha_double_prime * gamma).max(0.0);
    let scale = predicted.abs().max(urgent.abs()).max(1.0);
    let regime = if (predicted - urgent).abs() <= 1e-12 * scale {
        Regime::Balanced
    } else if predicted < urgent {
        Regime::PredictedStreamLimited
    } else {
        Regime::UrgentStreamLimited
    };
    Ok(DiversityResult { value: predicted.min(urgent), regime })
}

/// Whether the error-model diversity strictly beats the non-predictive `1 - gamma`.
pub fn improves_over_non_predictive(
    gamma: f64,
    alpha_prime: f64,
    alpha_double_prime: f64,
    lookahead: f64,
) -> Result<bool, AnalysisError> {
    let d = diversity_with_errors(gamma, alpha_prime, alpha_double_prime, lookahead)?;
    Ok(d.value > 1.0 - gamma)
}

/// The horizon that balances the two error-model branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalLookahead {
    /// `(alpha' - alpha'') gamma / (1 - alpha' gamma)`, not rounded.
    pub t_star: f64,
    /// `1 <= alpha' <= 1/gamma` and `alpha'' < 1`.
    pub feasible: bool,
}

pub fn optimal_lookahead(
    gamma: f64,
    alpha_prime: f64,
    alpha_double_prime: f64,
) -> Result<OptimalLookahead, AnalysisError> {
    check_gamma(gamma)?;
    let denom = 1.0 - alpha_prime * gamma;
    if denom.abs() <= 1e-12 {
        return Err(AnalysisError::Singular);
    }
    let t_star = (alpha_prime - alpha_double_prime) * gamma / denom;
    let feasible = alpha_prime >= 1.0 && alpha_prime * gamma <= 1.0 && alpha_double_prime < 1.0;
    Ok(OptimalLookahead { t_star, feasible })
}

/// `1 - gamma_p`: the secondary class inherits the primary diversity.
pub fn diversity_secondary_nonpredictive(gamma_p: f64) -> DiversityResult {
    debug_assert!((0.0..=1.0).contains(&gamma_p));
    DiversityResult { value: 1.0 - gamma_p, regime: Regime::SecondaryNonPredictive }
}

/// Finite-C diversity estimate `-ln P / (C ln C)`.
pub fn empirical_diversity(outage: f64, capacity: u64) -> Result<f64, AnalysisError> {
    if outage.is_nan() || outage > 1.0 || outage < 0.0 {
        return Err(AnalysisError::InvalidArgument(format!(
            "outage probability must lie in (0, 1], got {outage}"
        )));
    }
    if outage == 0.0 {
        return Err(AnalysisError::Unmeasurable);
    }
    if capacity < 2 {
        return Err(AnalysisError::InvalidArgument("need C >= 2 so that C ln C > 0".into()));
    }
    let c = capacity as f64;
    Ok((-outage.ln() / (c * c.ln())).max(0.0))
}
