//! Minimisation of a smooth model over a ball centred at the origin.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::random_on_sphere;
use crate::surrogate::SurrogateModel;
use rand::Rng;

/// Smooth function with an analytic gradient.
pub trait SmoothModel {
    fn dim(&self) -> usize;
    fn value(&self, u: &DVector<f64>) -> f64;
    fn gradient(&self, u: &DVector<f64>) -> DVector<f64>;
}

impl SmoothModel for SurrogateModel {
    fn dim(&self) -> usize {
        SurrogateModel::dim(self)
    }

    fn value(&self, u: &DVector<f64>) -> f64 {
        self.predict(u)
    }

    fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        SurrogateModel::gradient(self, u)
    }
}

const RANDOM_STARTS: usize = 6;
const MAX_ITERATIONS: usize = 500;
const STEP_TOL: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;

fn project(u: DVector<f64>, radius: f64) -> DVector<f64> {
    let norm = u.norm();
    if norm > radius {
        u * (radius / norm)
    } else {
        u
    }
}

/// Projected gradient descent with Barzilai-Borwein steps and Armijo
/// backtracking along the projection arc.
fn descend<M: SmoothModel + ?Sized>(model: &M, start: DVector<f64>, radius: f64) -> (DVector<f64>, f64) {
    let mut x = project(start, radius);
    let mut fx = model.value(&x);
    let mut g = model.gradient(&x);
    let mut alpha = 1.0 / g.amax().max(1.0);
    for _ in 0..MAX_ITERATIONS {
        if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut step_taken = None;
        let mut a = alpha;
        for _ in 0..60 {
            let trial = project(&x - &g * a, radius);
            let d = &trial - &x;
            if d.norm() <= STEP_TOL * radius {
                break;
            }
            let ft = model.value(&trial);
            if ft <= fx + ARMIJO * g.dot(&d) {
                step_taken = Some((trial, ft));
                break;
            }
            a *= 0.5;
        }
        let Some((next, fnext)) = step_taken else {
            break;
        };
        let gnext = model.gradient(&next);
        let s = &next - &x;
        let y = &gnext - &g;
        let sy = s.dot(&y);
        alpha = if sy > 0.0 {
            (s.norm_squared() / sy).clamp(1e-12, 1e12)
        } else {
            (2.0 * a).min(1e12)
        };
        let moved = s.norm();
        x = next;
        fx = fnext;
        g = gnext;
        if moved <= STEP_TOL * radius {
            break;
        }
    }
    (x, fx)
}

/// Approximate minimiser of `model` over `‖u‖ ≤ radius`.
///
/// Starts from the origin, the boundary point along `−∇m(0)` and six seeded
/// random points of the ball; the best end point is returned, or the origin
/// if nothing improves on it.
pub fn solve_subproblem<M: SmoothModel + ?Sized>(model: &M, radius: f64, seed: u64) -> DVector<f64> {
    let n = model.dim();
    let origin = DVector::zeros(n);
    let f0 = model.value(&origin);
    let g0 = model.gradient(&origin);

    let mut starts = vec![origin.clone()];
    let gnorm = g0.norm();
    if gnorm > 0.0 && gnorm.is_finite() {
        starts.push(&g0 * (-radius / gnorm));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_STARTS {
        let dir = random_on_sphere(&mut rng, n);
        let r: f64 = rng.random_range(0.0..1.0);
        starts.push(dir * (radius * r.powf(1.0 / n as f64)));
    }

    let mut best = origin;
    let mut best_value = f0;
    for start in starts {
        let (x, fx) = descend(model, start, radius);
        if fx < best_value {
            best_value = fx;
            best = x;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    struct Quadratic {
        h: DMatrix<f64>,
        g: DVector<f64>,
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

    #[test]
    fn interior_minimiser() {
        let q = Quadratic {
            h: DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]),
            g: DVector::from_vec(vec![-1.0, 0.5]),
        };
        let exact = q.h.clone().lu().solve(&(-&q.g)).unwrap();
        assert!(exact.norm() < 1.0);
        let s = solve_subproblem(&q, 1.0, 7);
        assert!((s - exact).norm() < 1e-6);
    }

    #[test]
    fn linear_model_hits_boundary() {
        let q = Quadratic {
            h: DMatrix::zeros(3, 3),
            g: DVector::from_vec(vec![1.0, -2.0, 2.0]),
        };
        let s = solve_subproblem(&q, 1.0, 1);
        assert!((s + &q.g / 3.0).norm() < 1e-6);
    }

    #[test]
    fn flat_model_returns_origin() {
        let q = Quadratic {
            h: DMatrix::zeros(2, 2),
            g: DVector::zeros(2),
        };
        assert_eq!(solve_subproblem(&q, 1.0, 3), DVector::zeros(2));
    }
}
