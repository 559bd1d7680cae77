use dfo_core::ellipsoid::{bfgs_update, build_map, filter_hessian, AffineMap, HessianEstimate};
use dfo_core::solver::subproblem::{solve_subproblem, SmoothModel};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> DMatrix<f64> {
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let d = DVector::from_fn(n, |_, _| spread.powf(rng.random_range(-1.0..1.0)));
    &q * DMatrix::from_diagonal(&d) * q.transpose()
}

struct Quadratic {
    g: DVector<f64>,
    h: DMatrix<f64>,
}

impl SmoothModel for Quadratic {
    fn dim(&self) -> usize {
        self.g.len()
    }

    fn value(&self, u: &DVector<f64>) -> f64 {
        self.g.dot(u) + 0.5 * u.dot(&(&self.h * u))
    }

    fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.g + &self.h * u
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_is_isovolumetric_and_normalises_curvature(
        n in 1usize..=6,
        seed in any::<u64>(),
        delta in 0.01f64..5.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_spd(&mut rng, n, 100.0);
        let x = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let map = build_map(&HessianEstimate { b: b.clone(), filter_weight: 0.95 }, &x, delta).unwrap();
        let a = map.matrix();
        let det = a.determinant().abs();
        prop_assert!((det / delta.powi(n as i32) - 1.0).abs() < 1e-6);
        let lam2 = map.lambda().powi(2);
        let normalised = a.transpose() * &b * a;
        prop_assert!((normalised - DMatrix::identity(n, n) * lam2).amax() <= 1e-8 * lam2);
        let u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        prop_assert!((map.to_auxiliary(&map.from_auxiliary(&u)) - &u).amax() < 1e-9);
    }

    #[test]
    fn hessian_back_transform_is_chain_rule(n in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_spd(&mut rng, n, 10.0);
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let map = build_map(&HessianEstimate { b, filter_weight: 0.5 }, &x0, 0.7).unwrap();
        // f(x) = ½ xᵀ H x has auxiliary Hessian Aᵀ H A
        let h = random_spd(&mut rng, n, 5.0);
        let h_u = map.matrix().transpose() * &h * map.matrix();
        prop_assert!((map.hessian_to_original(&h_u) - &h).amax() <= 1e-9 * h.amax());
        let g = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let g_u = map.matrix().transpose() * &g;
        prop_assert!((map.gradient_to_original(&g_u) - g).amax() <= 1e-9);
    }

    #[test]
    fn unit_filter_weight_freezes_estimate(n in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prev = HessianEstimate { b: random_spd(&mut rng, n, 10.0), filter_weight: 1.0 };
        let noise = DMatrix::from_fn(n, n, |_, _| rng.random_range(-50.0..50.0));
        let out = filter_hessian(&prev, &noise);
        prop_assert_eq!(out.estimate.b, prev.b);
    }

    #[test]
    fn filtered_estimate_stays_positive_definite(n in 1usize..=5, seed in any::<u64>(), mu in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prev = HessianEstimate { b: random_spd(&mut rng, n, 10.0), filter_weight: mu };
        let noise = DMatrix::from_fn(n, n, |_, _| rng.random_range(-50.0..50.0));
        let out = filter_hessian(&prev, &noise);
        let eig = out.estimate.b.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|l| *l > 0.0));
        prop_assert!(build_map(&out.estimate, &DVector::zeros(n), 1.0).is_ok());
    }

    #[test]
    fn bfgs_satisfies_secant_equation(n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_spd(&mut rng, n, 10.0);
        let h = random_spd(&mut rng, n, 10.0);
        let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let y = &h * &s;
        let (b1, updated) = bfgs_update(&b, &s, &y);
        prop_assert!(updated);
        prop_assert!((&b1 * &s - &y).amax() <= 1e-8 * y.amax().max(1.0));
        let (same, rejected) = bfgs_update(&b, &s, &(-y));
        prop_assert!(!rejected);
        prop_assert_eq!(same, b);
    }
}

#[test]
fn spherical_map_is_scaled_identity() {
    let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let map = AffineMap::spherical(&c, 0.25);
    assert!((map.matrix() - DMatrix::identity(3, 3) * 0.25).amax() < 1e-15);
    assert_eq!(map.lambda(), 0.25);
}

/// Minimum of the model over a dense sample of the ball: a radial grid on
/// circles for n = 2 and uniform random draws otherwise.
fn dense_minimum(model: &Quadratic, radius: f64, rng: &mut ChaCha8Rng) -> f64 {
    let n = model.dim();
    let mut best = model.value(&DVector::zeros(n));
    if n == 2 {
        for i in 1..=200 {
            let r = radius * i as f64 / 200.0;
            for k in 0..720 {
                let t = k as f64 * std::f64::consts::TAU / 720.0;
                best = best.min(model.value(&DVector::from_vec(vec![r * t.cos(), r * t.sin()])));
            }
        }
    } else {
        for _ in 0..200_000 {
            let u = DVector::from_fn(n, |_, _| rng.random_range(-radius..radius));
            if u.norm() <= radius {
                best = best.min(model.value(&u));
            }
        }
    }
    best
}

#[test]
fn subproblem_beats_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..40 {
        let n = 2 + trial % 3;
        let h = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
        let model = Quadratic {
            g: DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
            h: (&h + h.transpose()) * 0.5,
        };
        let radius = rng.random_range(0.2..2.0);
        let u = solve_subproblem(&model, radius, trial as u64);
        assert!(u.norm() <= radius * (1.0 + 1e-12));
        let sampled = dense_minimum(&model, radius, &mut rng);
        let scale = 1.0 + sampled.abs();
        assert!(model.value(&u) <= sampled + 1e-6 * scale, "trial {trial}: {} > {sampled}", model.value(&u));
    }
}
