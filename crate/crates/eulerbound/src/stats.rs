//! Binomial confidence limits and histogram helpers.

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

/// Upper Wilson score limit for `k` successes in `n` trials.
pub fn wilson_upper(k: u64, n: u64, z: f64) -> f64 {
    wilson(k, n, z).1
}

/// Lower Wilson score limit for `k` successes in `n` trials.
pub fn wilson_lower(k: u64, n: u64, z: f64) -> f64 {
    wilson(k, n, z).0
}

fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 ≤ k ≤ n and n > 0");
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let denom = 1.0 + z2 / n;
    (((centre - spread) / denom).max(0.0), ((centre + spread) / denom).min(1.0))
}

/// Scott's rule bin width `3.49·s·n^{−1/(2+d)}`.
pub fn scott_width(sd: f64, n: usize, d: usize) -> f64 {
    3.49 * sd * (n as f64).powf(-1.0 / (2.0 + d as f64))
}
