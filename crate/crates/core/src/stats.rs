//! Binomial confidence intervals.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let t = trials as f64;
    let phat = hits as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let centre = (phat + z2 / (2.0 * t)) / denom;
    let half = z * (phat * (1.0 - phat) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    // Clamp so the interval always contains the point estimate.
    ((centre - half).max(0.0).min(phat), (centre + half).min(1.0).max(phat))
}

/// Standard deviation of a Wilson-style proportion estimate, for "within k
/// sigma" comparisons against an exact value `p`.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
