//! Ellipsoidal trust-region frame.
//!
//! A positive-definite curvature estimate `B = U Λ Uᵀ` defines the affine map
//! `x(u) = A u + x_k` with `A = λ U Λ^{-1/2}`. The unit ball in `u` becomes an
//! ellipsoid whose axes follow the inverse curvature, and the isovolumetric
//! scale `λ = Δ ∏ σ_i^{1/(2n)}` keeps `|det A| = Δⁿ`, the volume of the
//! spherical region of radius `Δ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor keeping the filtered estimate positive definite.
pub const EIGEN_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    singular_values: DVector<f64>,
    rotation: DMatrix<f64>,
}

impl AffineMap {
    fn from_factors(
        rotation: DMatrix<f64>,
        singular_values: DVector<f64>,
        center: &DVector<f64>,
        delta: f64,
    ) -> AffineMap {
        let n = center.len();
        let log_sum: f64 = singular_values.iter().map(|s| s.ln()).sum();
        let lambda = delta * (log_sum / (2.0 * n as f64)).exp();
        let mut a = rotation.clone();
        let mut a_inv = rotation.transpose();
        for j in 0..n {
            let root = singular_values[j].sqrt();
            a.column_mut(j).scale_mut(lambda / root);
            a_inv.row_mut(j).scale_mut(root / lambda);
        }
        AffineMap {
            a,
            a_inv,
            b: center.clone(),
            lambda,
            singular_values,
            rotation,
        }
    }

    /// The spherical frame `x = Δ u + x_k`.
    pub fn spherical(center: &DVector<f64>, delta: f64) -> AffineMap {
        let n = center.len();
        Self::from_factors(
            DMatrix::identity(n, n),
            DVector::from_element(n, 1.0),
            center,
            delta,
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn to_auxiliary(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a_inv * (x - &self.b)
    }

    pub fn from_auxiliary(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.a * u + &self.b
    }

    /// Maps a Hessian taken with respect to `u` to original coordinates,
    /// `A⁻ᵀ H_u A⁻¹`.
    pub fn hessian_to_original(&self, h_u: &DMatrix<f64>) -> DMatrix<f64> {
        self.a_inv.transpose() * h_u * &self.a_inv
    }

    /// Maps a gradient taken with respect to `u` to original coordinates.
    pub fn gradient_to_original(&self, g_u: &DVector<f64>) -> DVector<f64> {
        self.a_inv.transpose() * g_u
    }
}

/// Low-pass filtered curvature estimate `B_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianEstimate {
    pub b: DMatrix<f64>,
    pub filter_weight: f64,
}

impl HessianEstimate {
    /// `B₀ = I`.
    pub fn identity(n: usize, filter_weight: f64) -> Self {
        Self {
            b: DMatrix::identity(n, n),
            filter_weight,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub estimate: HessianEstimate,
    /// Set when the model Hessian was non-finite and the update was skipped.
    pub skipped: bool,
    /// Set when eigenvalues were raised to the positive-definite floor.
    pub floored: bool,
}

/// `B ← μ₂ B + (1 − μ₂) sym(B̂)`, then eigenvalues floored at
/// `1e-8 · max(1, λ_max)`.
pub fn filter_hessian(prev: &HessianEstimate, model_hessian: &DMatrix<f64>) -> FilterOutcome {
    if model_hessian.iter().any(|v| !v.is_finite()) || model_hessian.shape() != prev.b.shape() {
        return FilterOutcome {
            estimate: prev.clone(),
            skipped: true,
            floored: false,
        };
    }
    let mu = prev.filter_weight;
    let sym = (model_hessian + model_hessian.transpose()) * 0.5;
    let b = &prev.b * mu + sym * (1.0 - mu);
    let (b, floored) = floor_eigenvalues(b);
    FilterOutcome {
        estimate: HessianEstimate {
            b,
            filter_weight: mu,
        },
        skipped: false,
        floored,
    }
}

fn floor_eigenvalues(b: DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let eig = SymmetricEigen::new(b.clone());
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = EIGEN_FLOOR * max.max(1.0);
    if eig.eigenvalues.iter().all(|l| *l >= floor) {
        return (b, false);
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    ((&rebuilt + rebuilt.transpose()) * 0.5, true)
}

fn is_diagonal(b: &DMatrix<f64>) -> bool {
    let n = b.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || b[(i, j)] == 0.0))
}

/// Error-free `a + b` as `(sum, error)`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Dot product in double-word arithmetic, returned as `(hi, lo)`.
fn dot2(x: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let (mut hi, mut lo) = (0.0, 0.0);
    for (a, b) in x {
        let p = a * b;
        let e = a.mul_add(b, -p);
        let (s, t) = two_sum(hi, p);
        hi = s;
        lo += t + e;
    }
    two_sum(hi, lo)
}

/// Polishes an eigenbasis of `b` with Jacobi sweeps on `Uᵀ B U` formed in
/// double-word arithmetic. A backward-stable solver leaves off-diagonal
/// residuals of order `ε ‖B‖`, which on the smallest eigenvalues spoil
/// `AᵀBA = λ² I` by a relative `ε κ(B)`; the polished basis brings that
/// back to rounding level.
fn refine_eigen(b: &DMatrix<f64>, mut u: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = b.nrows();
    let mut bu_hi = DMatrix::zeros(n, n);
    let mut bu_lo = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let (hi, lo) = dot2((0..n).map(|l| (b[(k, l)], u[(l, j)])));
            bu_hi[(k, j)] = hi;
            bu_lo[(k, j)] = lo;
        }
    }
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (hi, lo) = dot2(
                (0..n)
                    .map(|k| (u[(k, i)], bu_hi[(k, j)]))
                    .chain((0..n).map(|k| (u[(k, i)], bu_lo[(k, j)]))),
            );
            c[(i, j)] = hi + lo;
        }
    }
    let c_sym = (&c + c.transpose()) * 0.5;
    let mut c = c_sym;
    for _ in 0..3 {
        for p in 0..n {
            for q in p + 1..n {
                let apq = c[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (c[(q, q)] - c[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for r in 0..n {
                    let (crp, crq) = (c[(r, p)], c[(r, q)]);
                    c[(r, p)] = cs * crp - sn * crq;
                    c[(r, q)] = sn * crp + cs * crq;
                }
                for r in 0..n {
                    let (cpr, cqr) = (c[(p, r)], c[(q, r)]);
                    c[(p, r)] = cs * cpr - sn * cqr;
                    c[(q, r)] = sn * cpr + cs * cqr;
                }
                c[(p, q)] = 0.0;
                c[(q, p)] = 0.0;
                for r in 0..n {
                    let (urp, urq) = (u[(r, p)], u[(r, q)]);
                    u[(r, p)] = cs * urp - sn * urq;
                    u[(r, q)] = sn * urp + cs * urq;
                }
            }
        }
    }
    (u, c.diagonal())
}

/// Curvature-normalising map centred at `x_k` for radius `delta`.
pub fn build_map(estimate: &HessianEstimate, x_k: &DVector<f64>, delta: f64) -> Result<AffineMap> {
    let n = x_k.len();
    if estimate.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: estimate.dim(),
        });
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {delta}")));
    }
    let b = &estimate.b;
    let (rotation, values) = if is_diagonal(b) {
        (DMatrix::identity(n, n), b.diagonal())
    } else {
        let eig = SymmetricEigen::new(b.clone());
        refine_eigen(b, eig.eigenvectors)
    };
    if values.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Domain("curvature estimate is not positive definite".into()));
    }
    Ok(AffineMap::from_factors(rotation, values, x_k, delta))
}

/// BFGS rank-two update; returns `B` unchanged and `false` when the
/// curvature condition `yᵀs > 0` fails.
pub fn bfgs_update(b: &DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) -> (DMatrix<f64>, bool) {
    let ys = y.dot(s);
    if !(ys > 1e-12 * s.norm() * y.norm()) || ys <= 0.0 {
        return (b.clone(), false);
    }
    let bs = b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 0.0) {
        return (b.clone(), false);
    }
    let updated = b - &bs * bs.transpose() / sbs + y * y.transpose() / ys;
    ((&updated + updated.transpose()) * 0.5, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_scaled_identity_map() {
        let est = HessianEstimate::identity(3, 0.95);
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let map = build_map(&est, &x, 0.3).unwrap();
        assert_eq!(map.lambda(), 0.3);
        assert_eq!(map.matrix(), &(DMatrix::identity(3, 3) * 0.3));
        assert_eq!(map.to_auxiliary(&x), DVector::zeros(3));
        assert_eq!(map, AffineMap::spherical(&x, 0.3));
    }

    #[test]
    fn diagonal_example() {
        let est = HessianEstimate {
            b: DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])),
            filter_weight: 0.95,
        };
        let map = build_map(&est, &DVector::zeros(2), 1.0).unwrap();
        assert!((map.lambda() - 2f64.sqrt()).abs() < 1e-14);
        let axes: Vec<f64> = map.matrix().column_iter().map(|c| c.norm()).collect();
        assert!((axes[0] - 2f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((axes[1] - 2f64.sqrt()).abs() < 1e-14);
        assert!((map.matrix().determinant().abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn filter_examples() {
        let prev = HessianEstimate::identity(2, 0.95);
        let bhat = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let out = filter_hessian(&prev, &bhat);
        assert!((out.estimate.b[(0, 0)] - 1.15).abs() < 1e-14);
        assert!((out.estimate.b[(1, 1)] - 1.0).abs() < 1e-14);

        let frozen = filter_hessian(&HessianEstimate::identity(2, 1.0), &bhat);
        assert_eq!(frozen.estimate.b, DMatrix::identity(2, 2));

        let replace = filter_hessian(&HessianEstimate::identity(2, 0.0), &bhat);
        assert_eq!(replace.estimate.b, bhat);

        let mut bad = bhat.clone();
        bad[(0, 1)] = f64::NAN;
        let skipped = filter_hessian(&prev, &bad);
        assert!(skipped.skipped);
        assert_eq!(skipped.estimate, prev);
    }

    #[test]
    fn indefinite_input_is_floored() {
        let prev = HessianEstimate::identity(2, 0.0);
        let bhat = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -3.0]);
        let out = filter_hessian(&prev, &bhat);
        assert!(out.floored);
        let eig = SymmetricEigen::new(out.estimate.b.clone());
        assert!(eig.eigenvalues.iter().all(|l| *l >= EIGEN_FLOOR * 0.999));
    }

    #[test]
    fn bfgs_fixed_point_and_guard() {
        let b = DMatrix::identity(2, 2);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let (same, updated) = bfgs_update(&b, &e1, &e1);
        assert!(updated);
        assert!((same - &b).amax() < 1e-15);
        let (_, updated) = bfgs_update(&b, &e1, &DVector::from_vec(vec![0.0, 1.0]));
        assert!(!updated);
    }
}
