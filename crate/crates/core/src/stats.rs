//! Small order-statistics and interval helpers shared by the run
//! aggregators.

/// Linear-interpolation quantile (type 7) of a sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Median and quartiles; sorts the buffer in place.
pub fn median_iqr(values: &mut [f64]) -> (f64, f64, f64) {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    (
        quantile_sorted(values, 0.5),
        quantile_sorted(values, 0.25),
        quantile_sorted(values, 0.75),
    )
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(p_hat: f64, n: usize) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = Z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
