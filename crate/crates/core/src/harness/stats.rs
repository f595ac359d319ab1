/// Two-sided 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `successes` out of `trials`.
///
/// The interval always contains the point estimate; `trials = 0` gives `(0, 1)`.
pub fn confidence_interval(successes: u64, trials: u64) -> (f64, f64) {
    debug_assert!(successes <= trials);
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { ((centre - half) / denom).clamp(0.0, p) };
    let high = if successes == trials { 1.0 } else { ((centre + half) / denom).clamp(p, 1.0) };
    (low, high)
}

/// Binomial standard error `sqrt(p (1 - p) / n)`.
pub fn standard_error(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_ends() {
        let (low, high) = confidence_interval(0, 1000);
        assert_eq!(low, 0.0);
        assert!(high > 0.0 && high < 0.01);
        let (low, high) = confidence_interval(1000, 1000);
        assert_eq!(high, 1.0);
        assert!(low > 0.99);
    }

    #[test]
    fn rare_event_width() {
        // Wilson formula evaluated separately: centre 5.19187e-4, half-width 1.39875e-4.
        let (low, high) = confidence_interval(50, 100_000);
        assert!(low < 5e-4 && 5e-4 < high);
        assert!(((high - low) - 2.79751e-4).abs() < 0.0001e-4, "{}", high - low);
        assert!(((high - low) - 2.8e-4).abs() < 0.1e-4);
    }

    #[test]
    fn contains_point_estimate() {
        for n in [1u64, 2, 7, 100, 12345] {
            for k in 0..=n.min(200) {
                let (low, high) = confidence_interval(k, n);
                let p = k as f64 / n as f64;
                assert!(low <= p && p <= high);
            }
        }
    }
}
