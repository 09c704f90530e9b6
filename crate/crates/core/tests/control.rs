use approx::assert_relative_eq;
use eulerbound_core::control::{
    energy, energy_closed_form, geodesic, gram, gram_inverse, optimal_control, optimal_control_gram, resolvent,
    ControlProblem,
};
use eulerbound_core::gaussianref::kinetic_metric;
use eulerbound_core::linalg::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, dp: usize) -> ControlProblem {
    let t = 10f64.powf(rng.random_range(-1.0..1.0));
    let x = (0..2 * dp).map(|_| rng.random_range(-3.0..3.0)).collect();
    let xp = (0..2 * dp).map(|_| rng.random_range(-3.0..3.0)).collect();
    ControlProblem::new(t, x, xp).unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn resolvent_examples_and_composition() {
    assert_eq!(resolvent(0.4, 0.4, 3), Matrix::identity(6));
    assert_eq!(resolvent(1.0, 0.0, 1)[(1, 0)], 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let (t, s, u) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let lhs = resolvent(t, s, 2).matmul(&resolvent(s, u, 2));
        assert!(lhs.max_abs_diff(&resolvent(t, u, 2)) < 1e-14);
    }
    // ∂_t R = A R with A = [[0, 0], [I, 0]].
    let (t, t0, h) = (1.3, 0.2, 1e-6);
    let fd = (resolvent(t + h, t0, 1)[(1, 0)] - resolvent(t - h, t0, 1)[(1, 0)]) / (2.0 * h);
    assert_relative_eq!(fd, 1.0, max_relative = 1e-8);
}

#[test]
fn gram_examples() {
    assert_eq!(gram(1.0, 1).as_slice(), &[1.0, 0.5, 0.5, 1.0 / 3.0]);
    for t in [0.1, 1.0, 4.0] {
        let g = gram(t, 1);
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        assert_relative_eq!(det, t.powi(4) / 12.0, max_relative = 1e-14);
    }
}

#[test]
fn gram_matches_quadrature_of_the_resolvent() {
    for t in [0.3, 1.0, 2.7] {
        for dp in [1usize, 2] {
            let g = gram(t, dp);
            let n = 2 * dp;
            for i in 0..n {
                for j in 0..n {
                    // R(t, s)B has rows e_k for k < d′ and (t − s)e_k for k ≥ d′.
                    let entry = |s: f64| {
                        let rb = |r: usize| -> Vec<f64> {
                            let mut v = vec![0.0; dp];
                            v[r % dp] = if r < dp { 1.0 } else { t - s };
                            v
                        };
                        rb(i).iter().zip(rb(j)).map(|(a, b)| a * b).sum::<f64>()
                    };
                    let q = simpson(entry, 0.0, t, 200);
                    assert!((q - g[(i, j)]).abs() < 1e-10, "t = {t}, ({i},{j}): {q} vs {}", g[(i, j)]);
                }
            }
        }
    }
}

#[test]
fn gram_inverse_is_pd_and_solves_preconditioned_systems() {
    for k in 0..=12 {
        let t = 10f64.powf(-3.0 + 0.5 * k as f64);
        let (q, qi) = (gram(t, 1), gram_inverse(t, 1));
        assert_eq!(qi[(0, 1)], qi[(1, 0)]);
        assert!(qi[(0, 0)] > 0.0 && qi[(0, 0)] * qi[(1, 1)] - qi[(0, 1)] * qi[(1, 0)] > 0.0);
        // Scale by D = diag(√t, √t³): D⁻¹QD⁻¹ = [[1, 1/2], [1/2, 1/3]].
        let d = [t.sqrt(), t.powf(1.5)];
        let y = [0.7, -1.3];
        let rhs = q.mul_vec(&y);
        let sol = qi.mul_vec(&rhs);
        let back = q.mul_vec(&sol);
        let res = ((back[0] - rhs[0]) / d[0]).hypot((back[1] - rhs[1]) / d[1]);
        let scale = (rhs[0] / d[0]).hypot(rhs[1] / d[1]);
        assert!(res <= 1e-10 * scale, "t = {t}: residual {res}");
        let err = ((sol[0] - y[0]) * d[0]).hypot((sol[1] - y[1]) * d[1]);
        assert!(err <= 1e-10 * (y[0] * d[0]).hypot(y[1] * d[1]), "t = {t}: solution error {err}");
    }
}

#[test]
fn control_examples() {
    let p = ControlProblem::new(1.3, vec![0.0; 4], vec![0.0; 4]).unwrap();
    assert!(optimal_control(&p, 0.5).iter().all(|v| *v == 0.0));
    let z = 0.9;
    let p = ControlProblem::new(1.0, vec![0.0, 0.0], vec![0.0, z]).unwrap();
    for s in [0.0, 0.1, 0.5, 0.77, 1.0] {
        assert_relative_eq!(optimal_control(&p, s)[0], 6.0 * z * (1.0 - 2.0 * s), epsilon = 1e-14);
    }
}

#[test]
fn closed_form_control_matches_gram_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let dp = rng.random_range(1..4);
        let p = random_problem(&mut rng, dp);
        let s = rng.random_range(0.0..=p.t);
        let a = optimal_control(&p, s);
        let b = optimal_control_gram(&p, s);
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-10 * scale, "{u} vs {v}");
        }
    }
}

#[test]
fn energy_examples() {
    let p = ControlProblem::new(1.0, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
    assert_eq!(energy(&p).unwrap(), 0.0);
    for z in [0.5, 1.0, -2.0] {
        let p = ControlProblem::new(1.0, vec![0.0, 0.0], vec![0.0, z]).unwrap();
        assert_relative_eq!(energy(&p).unwrap(), 12.0 * z * z, max_relative = 1e-12);
    }
}

#[test]
fn energy_is_twice_the_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let dp = rng.random_range(1..4);
        let p = random_problem(&mut rng, dp);
        let two_d2 = 2.0 * kinetic_metric(p.t, &p.x, &p.x_prime, dp);
        let e = energy(&p).unwrap();
        assert!((e - two_d2).abs() <= 1e-9 * two_d2.max(1.0), "{e} vs {two_d2}");
        assert_relative_eq!(energy_closed_form(&p), two_d2, max_relative = 1e-12);
    }
}

#[test]
fn geodesic_reaches_random_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let p = random_problem(&mut rng, 2);
        let g = geodesic(&p, 200).unwrap();
        let scale = 1.0 + p.x_prime.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(g.endpoint_error < 1e-6 * scale);
        assert_eq!(g.times.len(), 201);
        assert_eq!(*g.times.last().unwrap(), p.t);
        assert_eq!(g.states[0], p.x);
    }
}

#[test]
fn geodesic_midpoint_and_profile() {
    let z = 1.7;
    let p = ControlProblem::new(1.0, vec![0.0, 0.0], vec![0.0, z]).unwrap();
    let g = geodesic(&p, 100).unwrap();
    assert_relative_eq!(g.states[50][1], z / 2.0, epsilon = 1e-12);
    // Position z s²(3 − 2s), velocity 6z s(1 − s).
    for (s, st) in g.times.iter().zip(&g.states) {
        assert!((st[1] - z * s * s * (3.0 - 2.0 * s)).abs() < 1e-12);
        assert!((st[0] - 6.0 * z * s * (1.0 - s)).abs() < 1e-12);
    }
    let rest = ControlProblem::new(2.0, vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    assert!(geodesic(&rest, 10).unwrap().states.iter().all(|s| s == &vec![0.0, 1.0]));
}

proptest! {
    #[test]
    fn energy_scales_quadratically(
        t in 0.1f64..10.0,
        s in 0.01f64..100.0,
        x in proptest::collection::vec(-3.0f64..3.0, 4),
        xp in proptest::collection::vec(-3.0f64..3.0, 4),
    ) {
        let p = ControlProblem::new(t, x.clone(), xp.clone()).unwrap();
        let q = ControlProblem::new(t, x.iter().map(|v| s * v).collect(), xp.iter().map(|v| s * v).collect()).unwrap();
        let (e1, e2) = (energy(&p).unwrap(), energy(&q).unwrap());
        prop_assert!((e2 - s * s * e1).abs() <= 1e-9 * (s * s * e1).max(1.0));
    }
}
