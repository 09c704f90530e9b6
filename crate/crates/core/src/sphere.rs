//! Deterministic direction sets on the unit sphere `S^{d−1}`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

const PRIMES: [u32; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Surface measure of `S^{d−1}`: `2π^{d/2}/Γ(d/2)`. For `d = 1` this is 2
/// (the counting measure of `{−1, 1}`).
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    // Γ(d/2) by the half-integer recursion.
    let mut gamma = if d.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut k = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while k + 1.0 <= d as f64 / 2.0 {
        gamma *= k;
        k += 1.0;
    }
    2.0 * PI.powf(d as f64 / 2.0) / gamma
}

/// At least `count` unit vectors covering `S^{d−1}` evenly.
///
/// `d = 1` gives `{−1, 1}`, `d = 2` equally spaced angles, and `d ≥ 3` a
/// Halton sequence pushed through Box–Muller and normalized.
pub fn directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(d >= 1, "dimension must be positive");
    match d {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..count.max(1))
            .map(|k| {
                let th = 2.0 * PI * k as f64 / count.max(1) as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let pairs = d.div_ceil(2);
            assert!(2 * pairs <= PRIMES.len(), "dimension {d} too large for the Halton direction set");
            let mut out = Vec::with_capacity(count);
            let mut i = 1u64;
            while out.len() < count {
                let mut v = Vec::with_capacity(2 * pairs);
                for p in 0..pairs {
                    let u1 = radical_inverse(i, PRIMES[2 * p]);
                    let u2 = radical_inverse(i, PRIMES[2 * p + 1]);
                    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
                    let th = 2.0 * PI * u2;
                    v.push(r * th.cos());
                    v.push(r * th.sin());
                }
                v.truncate(d);
                let n = crate::linalg::norm(&v);
                i += 1;
                if n > 1e-12 {
                    v.iter_mut().for_each(|c| *c /= n);
                    out.push(v);
                }
            }
            out
        }
    }
}
