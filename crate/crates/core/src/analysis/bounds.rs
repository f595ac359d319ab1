use super::{poisson_tail_log, AnalysisError, LogProb, SandwichBounds};
use crate::special::ln_factorial;
use crate::traffic::{ErrorModelConfig, LookaheadModel, ScalingConfig};

/// `Pr(Q > C)` for `Q ~ Poisson(C^gamma)`: the non-predictive outage.
pub fn exact_nonpredictive_outage(cfg: &ScalingConfig) -> LogProb {
    LogProb::from_ln(poisson_tail_log(cfg.arrival_rate(), cfg.capacity()))
}

/// Chernoff exponent `C - C^gamma - (1 - gamma) C ln C`.
///
/// Only meaningful when the threshold `C` exceeds the mean `C^gamma`.
pub fn chernoff_upper_bound(cfg: &ScalingConfig) -> Result<LogProb, AnalysisError> {
    let c = cfg.capacity() as f64;
    let rate = cfg.arrival_rate();
    if !(c > rate) {
        return Err(AnalysisError::ChernoffNotApplicable {
            capacity: cfg.capacity(),
            gamma: cfg.gamma(),
        });
    }
    Ok(LogProb::from_ln(c - rate - (1.0 - cfg.gamma()) * c * c.ln()))
}

/// `ln[C^(gamma (C+1)) / (C+1)! e^-C^gamma]`, the first term of the tail sum.
pub fn factorial_lower_bound(cfg: &ScalingConfig) -> LogProb {
    let c = cfg.capacity();
    let ln = cfg.gamma() * (c + 1) as f64 * (c as f64).ln() - ln_factorial(c + 1) - cfg.arrival_rate();
    LogProb::from_ln(ln)
}

/// Bounds on the EDF outage with deterministic lookahead `T >= 1`:
/// `Pr(Poisson(C^gamma) > C(T+1))` below and `Pr(Poisson((T+1) C^gamma) > C(T+1))`
/// above (one batch versus the sum of `T + 1` batches).
pub fn predictive_outage_bounds(
    cfg: &ScalingConfig,
    lookahead: u32,
) -> Result<SandwichBounds, AnalysisError> {
    if lookahead == 0 {
        return Err(AnalysisError::InvalidArgument(
            "predictive bounds need lookahead T >= 1".into(),
        ));
    }
    let window = u64::from(lookahead) + 1;
    let threshold = cfg.capacity() * window;
    let rate = cfg.arrival_rate();
    Ok(SandwichBounds {
        log_lower: poisson_tail_log(rate, threshold),
        log_upper: poisson_tail_log(window as f64 * rate, threshold),
    })
}

/// Bounds for any lookahead model, driven by its smallest horizon `Tmin`.
///
/// Lower: the `Tmin` requests alone (a thinned stream with rate
/// `p_Tmin C^gamma`) overflow their `Tmin + 1` slots. Upper: every request
/// shortened to `Tmin`. With `Tmin = 0` the upper bound is the exact
/// non-predictive outage.
pub fn lookahead_bounds(
    cfg: &ScalingConfig,
    model: &LookaheadModel,
) -> Result<SandwichBounds, AnalysisError> {
    let pmf = model.pmf(cfg.capacity());
    let t_min = pmf.min_positive().ok_or(AnalysisError::EmptySupport)?;
    let p_min = pmf.prob(t_min);
    let window = u64::from(t_min) + 1;
    let threshold = cfg.capacity() * window;
    let log_lower = poisson_tail_log(p_min * cfg.arrival_rate(), threshold);
    let log_upper = if t_min == 0 {
        exact_nonpredictive_outage(cfg).ln()
    } else {
        predictive_outage_bounds(cfg, t_min)?.log_upper
    };
    Ok(SandwichBounds { log_lower, log_upper })
}

/// Lower bound for the error model: the urgent stream alone exceeds `C`.
pub fn error_model_lower_bound(cfg: &ErrorModelConfig, capacity: u64) -> LogProb {
    LogProb::from_ln(poisson_tail_log(cfg.urgent_rate(capacity), capacity))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(c: u64, gamma: f64) -> ScalingConfig {
        ScalingConfig::new(c, gamma).unwrap()
    }

    /// Linear-domain summation of the tail, fine for moderate probabilities.
    fn summed_tail(rate: f64, threshold: u64) -> f64 {
        let mut term = (-rate).exp();
        let mut cdf = term;
        for k in 1..=threshold {
            term *= rate / k as f64;
            cdf += term;
        }
        1.0 - cdf
    }

    /// Tail summed upward from the threshold, valid far into the tail.
    fn upward_tail(rate: f64, threshold: u64) -> f64 {
        (threshold + 1..threshold + 400)
            .map(|k| (k as f64 * rate.ln() - rate - ln_factorial(k)).exp())
            .sum()
    }

    #[test]
    fn exact_examples() {
        let p = exact_nonpredictive_outage(&cfg(1, 0.0)).value();
        assert!((p - 0.264_241_117_657_115_4).abs() < 1e-12);
        let p = exact_nonpredictive_outage(&cfg(10, 0.0)).value();
        let oracle = upward_tail(1.0, 10);
        assert!((p - oracle).abs() < 1e-10 * oracle);
        assert!((p - 1.0e-8).abs() < 0.02e-8, "{p}");
    }

    #[test]
    fn exact_decreases_in_capacity() {
        // Not true for every gamma: at 0.95 the tail rises from C = 2 to C = 4.
        for gamma in [0.0, 0.1, 0.3, 0.5, 0.7, 0.8, 0.9] {
            let mut prev = f64::INFINITY;
            for c in 2..=50 {
                let p = exact_nonpredictive_outage(&cfg(c, gamma)).ln();
                assert!(p < prev, "gamma {gamma}, C {c}");
                prev = p;
            }
        }
    }

    #[test]
    fn chernoff_examples() {
        let b = chernoff_upper_bound(&cfg(10, 0.5)).unwrap();
        let exponent = 10.0 - 10f64.sqrt() - 5.0 * 10f64.ln();
        assert!((b.ln() - exponent).abs() < 1e-12);
        assert!((b.ln() - (-4.675_203_125_138_61)).abs() < 1e-12);
        assert!((b.value() - 9.33e-3).abs() < 0.01e-3);
        assert!(matches!(
            chernoff_upper_bound(&cfg(10, 1.0)),
            Err(AnalysisError::ChernoffNotApplicable { .. })
        ));
        assert!(chernoff_upper_bound(&cfg(1, 0.5)).is_err());
    }

    #[test]
    fn bound_chain_against_summed_oracle() {
        for c in 2..=100u64 {
            for g in 1..=9 {
                let config = cfg(c, g as f64 / 10.0);
                let oracle = upward_tail(config.arrival_rate(), c).ln();
                let upper = chernoff_upper_bound(&config).unwrap().ln();
                let lower = factorial_lower_bound(&config).ln();
                assert!(upper >= oracle - 1e-9 * oracle.abs(), "C {c} gamma {g}");
                assert!(lower <= oracle + 1e-9 * oracle.abs(), "C {c} gamma {g}");
            }
        }
    }

    #[test]
    fn factorial_lower_examples() {
        let b = factorial_lower_bound(&cfg(1, 0.0));
        assert!((b.value() - (-1.0f64).exp() / 2.0).abs() < 1e-15);
        assert!((b.value() - 0.183_94).abs() < 1e-5);
        for c in 1..=100 {
            let config = cfg(c, 0.6);
            assert!(factorial_lower_bound(&config).ln() <= exact_nonpredictive_outage(&config).ln());
        }
    }

    #[test]
    fn predictive_bounds_example() {
        let b = predictive_outage_bounds(&cfg(2, 0.5), 1).unwrap();
        let s2 = 2f64.sqrt();
        assert!((b.lower() - summed_tail(s2, 4)).abs() < 1e-12);
        assert!((b.upper() - summed_tail(2.0 * s2, 4)).abs() < 1e-12);
        assert!(predictive_outage_bounds(&cfg(2, 0.5), 0).is_err());
    }

    #[test]
    fn predictive_bounds_ordered() {
        for c in 2..=64 {
            for t in 1..=4 {
                for gamma in [0.2, 0.6, 0.9] {
                    let b = predictive_outage_bounds(&cfg(c, gamma), t).unwrap();
                    assert!(b.log_lower <= b.log_upper && b.log_upper <= 0.0);
                }
            }
        }
    }

    #[test]
    fn predictive_upper_decays_about_twice_as_fast() {
        // ln Pr(U_1) / ln P_N at gamma = 0.5 approaches 2 from below;
        // reference ratios from 50-digit summation of both tails.
        let ratio = |c: u64| {
            let config = cfg(c, 0.5);
            predictive_outage_bounds(&config, 1).unwrap().log_upper
                / exact_nonpredictive_outage(&config).ln()
        };
        for (c, oracle) in [(50, 1.926_581_666_180_72), (200, 1.983_415_532_893_51), (800, 1.996_217_647_634_95)] {
            let r = ratio(c);
            assert!((r - oracle).abs() < 1e-9, "C {c}: {r}");
        }
    }

    #[test]
    fn lookahead_bounds_reduce_to_known_cases() {
        let config = cfg(8, 0.8);
        let det = lookahead_bounds(&config, &LookaheadModel::Deterministic(2)).unwrap();
        assert_eq!(det, predictive_outage_bounds(&config, 2).unwrap());
        let zero = lookahead_bounds(&config, &LookaheadModel::Deterministic(0)).unwrap();
        assert_eq!(zero.log_lower, zero.log_upper);
        let binom = lookahead_bounds(&config, &LookaheadModel::Binomial { max: 5, p: 0.5 }).unwrap();
        assert!(binom.log_lower < binom.log_upper);
        assert_eq!(binom.log_upper, exact_nonpredictive_outage(&config).ln());
        let uniform = lookahead_bounds(&config, &LookaheadModel::Uniform { min: 2, max: 5 }).unwrap();
        assert_eq!(uniform.log_upper, predictive_outage_bounds(&config, 2).unwrap().log_upper);
    }
}
