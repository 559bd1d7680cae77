use dfo_core::geometry::PointSet;
use dfo_core::surrogate::{likelihood_criterion, tune_hyperparameters, AnisotropicMetric, RbfKind, SurrogateModel};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `q` points of the cube `[-1, 1]ⁿ` with pairwise distance at least 0.1.
fn random_points(rng: &mut ChaCha8Rng, n: usize, q: usize) -> PointSet {
    let mut pts: Vec<DVector<f64>> = Vec::with_capacity(q);
    while pts.len() < q {
        let p = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if pts.iter().all(|z| (z - &p).norm() >= 0.1) {
            pts.push(p);
        }
    }
    PointSet::from_points(n, pts).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng, kind: RbfKind, n: usize) -> SurrogateModel {
    let q = n + 2 + rng.random_range(0..4);
    loop {
        let centers = random_points(rng, n, q);
        let values: Vec<f64> = (0..q).map(|_| rng.random_range(-2.0..2.0)).collect();
        let metric = AnisotropicMetric::new(DVector::from_fn(n, |_, _| rng.random_range(0.3..3.0))).unwrap();
        if let Ok((m, diag)) = SurrogateModel::fit(&centers, &values, kind, &metric) {
            if diag.condition_estimate < 1e8 {
                return m;
            }
        }
    }
}

/// A probe point whose metric distance to every centre stays away from the
/// kinks of the kernels (0 for all, 1 for the compactly supported one).
fn smooth_probe(rng: &mut ChaCha8Rng, model: &SurrogateModel) -> DVector<f64> {
    let n = model.dim();
    loop {
        let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let ok = model.centers().iter().all(|z| {
            let r = model.metric().distance(&(&x - z));
            r > 0.05 && (r - 1.0).abs() > 0.05
        });
        if ok {
            return x;
        }
    }
}

/// Five-point central difference of `f` along `e_i`.
fn stencil<T, F>(x: &DVector<f64>, i: usize, h: f64, f: F) -> T
where
    F: Fn(&DVector<f64>) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let at = |k: f64| {
        let mut p = x.clone();
        p[i] += k * h;
        f(&p)
    };
    (at(-2.0) - at(2.0) + (at(1.0) - at(-1.0)) * 8.0) * (1.0 / (12.0 * h))
}

fn fd_gradient(model: &SurrogateModel, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| stencil(x, i, h, |p| model.predict(p)))
}

fn fd_hessian(model: &SurrogateModel, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        hess.set_column(j, &stencil(x, j, h, |p| model.gradient(p)));
    }
    hess
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in RbfKind::all() {
        for _ in 0..100 {
            let n = rng.random_range(1..=5);
            let model = random_model(&mut rng, kind, n);
            let x = smooth_probe(&mut rng, &model);
            let g = model.gradient(&x);
            let g_fd = fd_gradient(&model, &x, 1e-3);
            assert!((&g - &g_fd).norm() <= 1e-5 * g.norm().max(1.0), "{kind:?} {} {}", (&g - &g_fd).norm(), g.norm());
            let h = model.hessian(&x);
            let h_fd = fd_hessian(&model, &x, 1e-3);
            assert!((&h - &h_fd).norm() <= 1e-4 * h.norm().max(1.0), "{kind:?} {} {}", (&h - &h_fd).norm(), h.norm());
        }
    }
}

#[test]
fn tuned_likelihood_is_no_worse_than_isotropic_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (lower, upper) = (1e-2, 1e-1);
    for kind in [RbfKind::gaussian(), RbfKind::Multiquadric, RbfKind::Cubic] {
        for _ in 0..10 {
            let n = rng.random_range(2..=3);
            let centers = random_points(&mut rng, n, 2 * n + 3);
            let values: Vec<f64> = centers
                .iter()
                .map(|p| p.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum::<f64>() + p[0])
                .collect();
            let tuned = tune_hyperparameters(&centers, &values, kind, lower, upper).unwrap();
            assert!(tuned.within(lower, upper));
            let best_tuned = likelihood_criterion(&centers, &values, kind, &tuned).unwrap();
            let grid_best = (0..=400)
                .filter_map(|k| {
                    let w = lower * (upper / lower).powf(k as f64 / 400.0);
                    likelihood_criterion(&centers, &values, kind, &AnisotropicMetric::isotropic(n, w))
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best_tuned <= grid_best + 1e-6 * grid_best.abs().max(1.0), "{kind:?}: {best_tuned} > {grid_best}");
        }
    }
}

fn fit_strategy() -> impl Strategy<Value = (usize, u64, usize)> {
    (1usize..=5, any::<u64>(), 0usize..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_interpolates_and_tail_is_orthogonal((n, seed, kind_idx) in fit_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, RbfKind::all()[kind_idx], n);
        let scale = model.values().amax().max(1.0);
        for (z, f) in model.centers().iter().zip(model.values().iter()) {
            prop_assert!((model.predict(z) - f).abs() <= 1e-8 * scale);
        }
        let alpha_scale = model.alpha().amax().max(1.0);
        prop_assert!(model.tail_orthogonality().amax() <= 1e-8 * alpha_scale);
    }

    #[test]
    fn kriging_form_agrees_with_coefficient_form((n, seed, kind_idx) in fit_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, RbfKind::all()[kind_idx], n);
        let x = DVector::from_fn(n, |_, _| rng.random_range(-1.5..1.5));
        let direct = model.predict(&x);
        let kriging = model.predict_kriging(&x).unwrap();
        prop_assert!((direct - kriging).abs() <= 1e-8 * direct.abs().max(1.0));
    }

    #[test]
    fn affine_data_is_reproduced_exactly((n, seed, kind_idx) in fit_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = RbfKind::all()[kind_idx];
        let q = n + 2 + rng.random_range(0..4);
        let centers = random_points(&mut rng, n, q);
        let slope = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let offset = rng.random_range(-3.0..3.0);
        let values: Vec<f64> = centers.iter().map(|p| slope.dot(p) + offset).collect();
        let (model, _) = SurrogateModel::fit(&centers, &values, kind, &AnisotropicMetric::isotropic(n, 1.0)).unwrap();
        prop_assert!(model.alpha().amax() <= 1e-8);
        let x = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        prop_assert!((model.predict(&x) - slope.dot(&x) - offset).abs() <= 1e-8 * (1.0 + offset.abs() + slope.norm()));
    }

    #[test]
    fn metric_distance_scales_with_weights(n in 1usize..6, seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DVector::from_fn(n, |_, _| rng.random_range(0.1..5.0));
        let d = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let m = AnisotropicMetric::new(w.clone()).unwrap();
        let scaled = AnisotropicMetric::new(w * c).unwrap();
        prop_assert!((scaled.distance(&d) - c.sqrt() * m.distance(&d)).abs() <= 1e-12 * (1.0 + m.distance(&d)));
    }
}
