use dfo_core::geometry::{
    circum_radius, inscribed_edge_length, mean_distance, optimal_volume, regsim, regular_simplex_volume,
    simplex_volume, sub_simplex_factors, theta_star, PointSet,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// Volume from the Cayley-Menger determinant of pairwise squared distances.
fn cayley_menger_volume(points: &PointSet) -> f64 {
    let p = points.points();
    let k = p.len();
    let n = k - 1;
    let mut cm = DMatrix::zeros(k + 1, k + 1);
    for i in 1..=k {
        cm[(0, i)] = 1.0;
        cm[(i, 0)] = 1.0;
        for j in 1..=k {
            cm[(i, j)] = (&p[i - 1] - &p[j - 1]).norm_squared();
        }
    }
    let sign = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let v2 = sign * cm.determinant() / (2f64.powi(n as i32) * factorial(n).powi(2));
    v2.max(0.0).sqrt()
}

fn point_set(n: usize, coords: &[f64]) -> PointSet {
    let pts = coords.chunks(n).map(DVector::from_column_slice).collect();
    PointSet::from_points(n, pts).unwrap()
}

fn simplex_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|n| (Just(n), prop::collection::vec(-2.0f64..2.0, n * (n + 1))))
}

proptest! {
    #[test]
    fn volume_matches_cayley_menger((n, coords) in simplex_strategy()) {
        let s = point_set(n, &coords);
        let v = simplex_volume(&s).unwrap();
        let oracle = cayley_menger_volume(&s);
        prop_assume!(v > 1e-3);
        prop_assert!(((v - oracle) / v).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn volume_is_invariant_under_translation_and_scales_as_power(
        (n, coords) in simplex_strategy(),
        shift in -3.0f64..3.0,
        scale in 0.1f64..3.0,
    ) {
        let s = point_set(n, &coords);
        let v = simplex_volume(&s).unwrap();
        let moved = PointSet::from_points(n, s.iter().map(|p| p.add_scalar(shift)).collect()).unwrap();
        prop_assert!((simplex_volume(&moved).unwrap() - v).abs() <= 1e-9 * v.max(1.0));
        let scaled = simplex_volume(&s.scaled(scale)).unwrap();
        prop_assert!((scaled - v * scale.powi(n as i32)).abs() <= 1e-9 * scaled.max(1.0));
    }

    #[test]
    fn regsim_is_regular_and_centred(n in 1usize..9, m_frac in 0.0f64..1.0) {
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let s = regsim(n, m).unwrap();
        prop_assert_eq!(s.len(), m + 1);
        let l = inscribed_edge_length(m, 1.0);
        for i in 0..s.len() {
            prop_assert!((s.points()[i].norm() - 1.0).abs() < 1e-12);
            for j in 0..i {
                prop_assert!(((&s.points()[i] - &s.points()[j]).norm() - l).abs() < 1e-12);
            }
        }
        prop_assert!(s.centroid().unwrap().norm() < 1e-13);
    }

    #[test]
    fn sub_simplex_offset_and_radius_are_pythagorean(n in 1usize..=8, m_frac in 0.0f64..1.0, delta in 0.01f64..10.0) {
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let f = sub_simplex_factors(n, m, delta).unwrap();
        let lhs = f.offset.powi(2) + f.circum_radius.powi(2);
        prop_assert!((lhs - delta * delta).abs() <= 1e-12 * delta * delta);
    }

    #[test]
    fn circum_radius_inverts_edge_length(n in 1usize..10, delta in 0.01f64..10.0) {
        let l = inscribed_edge_length(n, delta);
        prop_assert!((circum_radius(n, l) - delta).abs() <= 1e-12 * delta);
    }
}

#[test]
fn regsim_volume_matches_closed_form() {
    for n in 1..=8 {
        let v = simplex_volume(&regsim(n, n).unwrap()).unwrap();
        let expected = regular_simplex_volume(n, inscribed_edge_length(n, 1.0));
        assert!(((v - expected) / expected).abs() < 1e-9, "n={n}");
        assert!(((optimal_volume(n) - cayley_menger_volume(&regsim(n, n).unwrap())) / v).abs() < 1e-9);
    }
}

/// Maximum of the mean distance over a fine angular grid of the unit circle.
fn circle_max(points: &PointSet) -> f64 {
    (0..200_000)
        .map(|k| {
            let t = k as f64 * std::f64::consts::TAU / 200_000.0;
            mean_distance(&DVector::from_vec(vec![t.cos(), t.sin()]), points)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn theta_star_matches_dense_circle_sampling() {
    let configs = [
        regsim(2, 2).unwrap(),
        PointSet::from_slices(2, &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap(),
        PointSet::from_slices(2, &[&[0.3, -0.2], &[0.9, 0.1], &[-0.5, 0.5], &[0.0, 0.0]]).unwrap(),
    ];
    for z in configs {
        let t = theta_star(&z, 1.0).unwrap();
        let grid = circle_max(&z);
        assert!((t - grid).abs() < 1e-8, "{t} vs {grid}");
    }
}

#[test]
fn theta_star_dominates_random_ball_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for n in 3..=5 {
        let mut z = regsim(n, n).unwrap();
        z.push(DVector::zeros(n)).unwrap();
        let t = theta_star(&z, 1.0).unwrap();
        for _ in 0..20_000 {
            let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            if v.norm() <= 1.0 {
                assert!(mean_distance(&v, &z) <= t + 1e-12);
            }
        }
    }
}
