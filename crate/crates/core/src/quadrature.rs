//! Adaptive Gauss–Kronrod quadrature (G7/K15 pair, global bisection) and the
//! trapezoidal weights used on uniform grids.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 4096 }
    }
}

impl QuadratureOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

/// Integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment { a, b, value, error }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, opts: QuadratureOptions) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        bail!(InvalidArgument, "integration bounds must be finite, got [{a}, {b}]");
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut segments = vec![kronrod15(&mut f, a, b)];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            bail!(Tolerance, "integrand produced a non-finite value on [{a}, {b}]");
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(Estimate { value, error });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::Tolerance(alloc::format!(
                "{} subintervals on [{a}, {b}] left error {error:e} above tolerance",
                segments.len()
            )));
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("segments is never empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            bail!(Tolerance, "subinterval [{}, {}] can no longer be bisected", seg.a, seg.b);
        }
        segments.push(kronrod15(&mut f, seg.a, mid));
        segments.push(kronrod15(&mut f, mid, seg.b));
    }
}

/// Iterated integral `∫_a^b ∫_{lo(x)}^{hi(x)} f(x, y) dy dx`.
///
/// The inner integrals use a tolerance ten times tighter than `opts`; their
/// worst error, scaled by the outer width, is added to the reported error.
pub fn integrate_2d(
    f: impl Fn(f64, f64) -> f64,
    (a, b): (f64, f64),
    inner: impl Fn(f64) -> (f64, f64),
    opts: QuadratureOptions,
) -> Result<Estimate> {
    let inner_opts = QuadratureOptions {
        abs_tol: opts.abs_tol / 10.0,
        rel_tol: opts.rel_tol / 10.0,
        max_intervals: opts.max_intervals,
    };
    let mut failure: Option<Error> = None;
    let mut worst_inner = 0.0f64;
    let outer = integrate(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            let (lo, hi) = inner(x);
            match integrate(|y| f(x, y), lo, hi, inner_opts) {
                Ok(est) => {
                    worst_inner = worst_inner.max(est.error);
                    est.value
                }
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        a,
        b,
        opts,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    Ok(Estimate { value: outer.value, error: outer.error + worst_inner * (b - a).abs() })
}

/// Composite trapezoidal weights for `n ≥ 2` uniformly spaced nodes.
pub fn trapezoid_weights(n: usize, spacing: f64) -> Vec<f64> {
    let mut w = vec![spacing; n];
    if n >= 1 {
        w[0] = 0.5 * spacing;
        w[n - 1] = 0.5 * spacing;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| 3.0 * x * x - x + 1.0, -1.0, 2.0, QuadratureOptions::default()).unwrap();
        assert_relative_eq!(est.value, 9.0 - 1.5 + 3.0, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_mass() {
        let est = integrate(|x| (-0.5 * x * x).exp(), -12.0, 12.0, QuadratureOptions::default()).unwrap();
        assert_relative_eq!(est.value, (2.0 * PI).sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn peaked_integrand_needs_refinement() {
        let est = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadratureOptions::with_tol(1e-10, 1e-10)).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_relative_eq!(est.value, exact, max_relative = 1e-9);
    }

    #[test]
    fn two_dimensional_disc_area() {
        let est = integrate_2d(
            |_, _| 1.0,
            (-1.0, 1.0),
            |x| {
                let h = (1.0 - x * x).max(0.0).sqrt();
                (-h, h)
            },
            QuadratureOptions::with_tol(1e-9, 1e-9),
        )
        .unwrap();
        assert_relative_eq!(est.value, PI, max_relative = 1e-8);
    }

    #[test]
    fn nan_integrand_is_reported() {
        let r = integrate(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, QuadratureOptions::default());
        assert!(matches!(r, Err(Error::Tolerance(_))));
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let w = trapezoid_weights(11, 0.1);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, max_relative = 1e-14);
    }
}
