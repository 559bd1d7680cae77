//! Radial basis function interpolant with a linear tail, fitted through the
//! Universal Kriging saddle system
//!
//! ```text
//! [ Φ   Π ] [α]   [f]
//! [ Πᵀ  0 ] [β] = [0]
//! ```
//!
//! with `Φ_ik = φ(‖z_i − z_k‖_γ)` and `Π_ij = π_j(z_i)`, `π(x) = [x; 1]`.
//! Distances are measured in the anisotropic metric `‖d‖²_γ = Σ γ_i d_i²`,
//! whose weights are tuned by maximising the concentrated likelihood.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;

/// Saddle systems with a condition estimate above this are flagged.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Radial function family.
///
/// The scalar shape parameter of the linear-decay and multiquadric kernels is
/// carried by the (isotropic) metric, so every kind is evaluated on the
/// metric distance `r` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbfKind {
    /// `r³`
    Cubic,
    /// `r² log r`
    ThinPlateSpline,
    /// `max(0, 1 − r)`
    LinearDecay,
    /// `sqrt(r² + 1)`
    Multiquadric,
    /// `exp(−r^exponent)`
    Gaussian { exponent: f64 },
}

impl Default for RbfKind {
    fn default() -> Self {
        RbfKind::gaussian()
    }
}

impl RbfKind {
    pub const fn gaussian() -> Self {
        RbfKind::Gaussian { exponent: 2.0 }
    }

    /// Every kind paired with its exponent-2 Gaussian, in catalogue order.
    pub fn all() -> [RbfKind; 5] {
        [
            RbfKind::Cubic,
            RbfKind::ThinPlateSpline,
            RbfKind::LinearDecay,
            RbfKind::Multiquadric,
            RbfKind::gaussian(),
        ]
    }

    /// Minimal polynomial tail degree for conditional positive definiteness.
    pub fn min_tail_degree(&self) -> i32 {
        match self {
            RbfKind::Cubic | RbfKind::ThinPlateSpline => 1,
            RbfKind::LinearDecay | RbfKind::Multiquadric => 0,
            RbfKind::Gaussian { .. } => -1,
        }
    }

    /// Kinds whose only shape parameter is a scalar; tuned isotropically.
    pub fn has_scalar_shape(&self) -> bool {
        matches!(self, RbfKind::LinearDecay | RbfKind::Multiquadric)
    }

    pub fn phi(&self, r: f64) -> f64 {
        match *self {
            RbfKind::Cubic => r * r * r,
            RbfKind::ThinPlateSpline => {
                if r > 0.0 {
                    r * r * r.ln()
                } else {
                    0.0
                }
            }
            RbfKind::LinearDecay => (1.0 - r).max(0.0),
            RbfKind::Multiquadric => (r * r + 1.0).sqrt(),
            RbfKind::Gaussian { exponent } => {
                if exponent == 2.0 {
                    (-r * r).exp()
                } else {
                    (-r.powf(exponent)).exp()
                }
            }
        }
    }

    /// `(φ'(r)/r, (φ''(r) − φ'(r)/r)/r²)`.
    ///
    /// With `G = diag(γ)` and `d = x − z`, the gradient of `φ(‖d‖_γ)` is
    /// `ψ₁ G d` and its Hessian `ψ₁ G + ψ₂ (G d)(G d)ᵀ`. At `r = 0` the
    /// singular factors of the non-smooth kinds are taken as 0, which gives
    /// the one-sided radial derivative 0 at a centre.
    fn radial_factors(&self, r: f64) -> (f64, f64) {
        match *self {
            RbfKind::Cubic => (3.0 * r, if r > 0.0 { 3.0 / r } else { 0.0 }),
            RbfKind::ThinPlateSpline => {
                if r > 0.0 {
                    (2.0 * r.ln() + 1.0, 2.0 / (r * r))
                } else {
                    (0.0, 0.0)
                }
            }
            RbfKind::LinearDecay => {
                if r > 0.0 && r < 1.0 {
                    (-1.0 / r, 1.0 / (r * r * r))
                } else {
                    (0.0, 0.0)
                }
            }
            RbfKind::Multiquadric => {
                let s = (r * r + 1.0).sqrt();
                (1.0 / s, -1.0 / (s * s * s))
            }
            RbfKind::Gaussian { exponent } => {
                if exponent == 2.0 {
                    let p = (-r * r).exp();
                    (-2.0 * p, 4.0 * p)
                } else if r > 0.0 {
                    let b = exponent;
                    let p = (-r.powf(b)).exp();
                    (
                        -b * r.powf(b - 2.0) * p,
                        (b * (2.0 - b) * r.powf(b - 4.0) + b * b * r.powf(2.0 * b - 4.0)) * p,
                    )
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }
}

/// Per-coordinate weights `γ` of `‖d‖²_γ = Σ γ_i d_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropicMetric {
    weights: DVector<f64>,
}

impl AnisotropicMetric {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain("metric weights must be positive".into()));
        }
        Ok(Self { weights })
    }

    pub fn isotropic(dim: usize, weight: f64) -> Self {
        Self {
            weights: DVector::from_element(dim, weight),
        }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn distance(&self, d: &DVector<f64>) -> f64 {
        d.iter()
            .zip(self.weights.iter())
            .map(|(x, g)| g * x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn within(&self, lower: f64, upper: f64) -> bool {
        self.weights
            .iter()
            .all(|w| *w >= lower * (1.0 - 1e-12) && *w <= upper * (1.0 + 1e-12))
    }
}

/// Numerical by-products of a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    /// 1-norm condition estimate of the saddle matrix.
    pub condition_estimate: f64,
    /// Maximum-likelihood process variance `σ̂²`.
    pub process_variance: f64,
    /// Concentrated log-likelihood `−½ (q ln σ̂² + ln |det Φ|)`.
    pub log_likelihood: f64,
    pub ill_conditioned: bool,
}

/// Fitted RBF + linear-tail interpolant.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    centers: PointSet,
    values: DVector<f64>,
    alpha: DVector<f64>,
    /// `[linear part; constant]`
    beta: DVector<f64>,
    metric: AnisotropicMetric,
    kind: RbfKind,
    saddle: LU<f64, Dyn, Dyn>,
}

fn tail_matrix(centers: &PointSet) -> DMatrix<f64> {
    let n = centers.dim();
    DMatrix::from_fn(centers.len(), n + 1, |i, j| {
        if j < n {
            centers.points()[i][j]
        } else {
            1.0
        }
    })
}

fn kernel_matrix(centers: &PointSet, kind: RbfKind, metric: &AnisotropicMetric) -> DMatrix<f64> {
    let q = centers.len();
    let pts = centers.points();
    let mut phi = DMatrix::zeros(q, q);
    for i in 0..q {
        phi[(i, i)] = kind.phi(0.0);
        for k in i + 1..q {
            let v = kind.phi(metric.distance(&(&pts[i] - &pts[k])));
            phi[(i, k)] = v;
            phi[(k, i)] = v;
        }
    }
    phi
}

fn check_inputs(centers: &PointSet, values: &[f64], metric: &AnisotropicMetric) -> Result<()> {
    let n = centers.dim();
    if values.len() != centers.len() {
        return Err(Error::DimensionMismatch {
            expected: centers.len(),
            got: values.len(),
        });
    }
    if metric.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: metric.dim(),
        });
    }
    if centers.len() < n + 2 {
        return Err(Error::InsufficientPoints {
            needed: n + 2,
            got: centers.len(),
        });
    }
    Ok(())
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-10 * largest.max(f64::MIN_POSITIVE);
    sv.iter().filter(|s| **s > tol).count()
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn log_abs_det(lu: &LU<f64, Dyn, Dyn>) -> f64 {
    lu.u().diagonal().iter().map(|d| d.abs().ln()).sum()
}

impl SurrogateModel {
    /// Solves the saddle system for the interpolant through `(centers, values)`.
    pub fn fit(
        centers: &PointSet,
        values: &[f64],
        kind: RbfKind,
        metric: &AnisotropicMetric,
    ) -> Result<(SurrogateModel, FitDiagnostics)> {
        check_inputs(centers, values, metric)?;
        let n = centers.dim();
        let q = centers.len();
        let pi = tail_matrix(centers);
        let rank = numerical_rank(&pi);
        if rank < n + 1 {
            return Err(Error::IllPoised {
                rank,
                needed: n + 1,
            });
        }
        let phi = kernel_matrix(centers, kind, metric);
        let size = q + n + 1;
        let mut saddle = DMatrix::zeros(size, size);
        saddle.view_mut((0, 0), (q, q)).copy_from(&phi);
        saddle.view_mut((0, q), (q, n + 1)).copy_from(&pi);
        saddle.view_mut((q, 0), (n + 1, q)).copy_from(&pi.transpose());

        let lu = saddle.clone().lu();
        let inverse = lu.try_inverse().ok_or(Error::Singular)?;
        let condition_estimate = (one_norm(&saddle) * one_norm(&inverse)).max(1.0);

        let f = DVector::from_column_slice(values);
        let mut rhs = DVector::zeros(size);
        rhs.rows_mut(0, q).copy_from(&f);
        let sol = lu.solve(&rhs).ok_or(Error::Singular)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular);
        }
        let alpha = sol.rows(0, q).into_owned();
        let beta = sol.rows(q, n + 1).into_owned();

        // (f − Πβ)ᵀ Φ⁻¹ (f − Πβ) = (f − Πβ)ᵀ α
        let residual = &f - &pi * &beta;
        let process_variance = (residual.dot(&alpha) / q as f64).abs();
        let phi_lu = phi.lu();
        let logdet = if phi_lu.is_invertible() {
            log_abs_det(&phi_lu)
        } else {
            f64::NEG_INFINITY
        };
        let log_likelihood = if process_variance > 0.0 && logdet.is_finite() {
            -0.5 * (q as f64 * process_variance.ln() + logdet)
        } else {
            f64::NEG_INFINITY
        };

        let model = SurrogateModel {
            centers: centers.clone(),
            values: f,
            alpha,
            beta,
            metric: metric.clone(),
            kind,
            saddle: lu,
        };
        let diagnostics = FitDiagnostics {
            condition_estimate,
            process_variance,
            log_likelihood,
            ill_conditioned: condition_estimate > ILL_CONDITIONED,
        };
        Ok((model, diagnostics))
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn metric(&self) -> &AnisotropicMetric {
        &self.metric
    }

    pub fn kind(&self) -> RbfKind {
        self.kind
    }

    /// Kernel vector `φ(x)` with entries `φ(‖x − z_i‖_γ)`.
    pub fn kernel_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.centers.len(),
            self.centers
                .iter()
                .map(|z| self.kind.phi(self.metric.distance(&(x - z)))),
        )
    }

    fn linear_part(&self) -> nalgebra::DVectorView<'_, f64> {
        self.beta.rows(0, self.dim())
    }

    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        let n = self.dim();
        self.kernel_vector(x).dot(&self.alpha) + self.linear_part().dot(x) + self.beta[n]
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let gamma = self.metric.weights();
        let mut g = self.linear_part().into_owned();
        for (z, a) in self.centers.iter().zip(self.alpha.iter()) {
            let d = x - z;
            let (psi1, _) = self.kind.radial_factors(self.metric.distance(&d));
            g += d.component_mul(gamma) * (a * psi1);
        }
        g
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let gamma = self.metric.weights();
        let mut h = DMatrix::zeros(n, n);
        for (z, a) in self.centers.iter().zip(self.alpha.iter()) {
            let d = x - z;
            let (psi1, psi2) = self.kind.radial_factors(self.metric.distance(&d));
            let gd = d.component_mul(gamma);
            for i in 0..n {
                h[(i, i)] += a * psi1 * gamma[i];
                for j in 0..n {
                    h[(i, j)] += a * psi2 * gd[i] * gd[j];
                }
            }
        }
        // exact symmetry regardless of summation order
        let ht = h.transpose();
        (h + ht) * 0.5
    }

    /// Best linear unbiased predictor weights `η(x)` of the Kriging system
    /// `[Φ Π; Πᵀ 0][η; ξ] = [φ(x); π(x)]`; the prediction is `η(x)ᵀ f`.
    pub fn kriging_weights(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let q = self.centers.len();
        let n = self.dim();
        let mut rhs = DVector::zeros(q + n + 1);
        rhs.rows_mut(0, q).copy_from(&self.kernel_vector(x));
        rhs.rows_mut(q, n).copy_from(x);
        rhs[q + n] = 1.0;
        let sol = self.saddle.solve(&rhs).ok_or(Error::Singular)?;
        Ok(sol.rows(0, q).into_owned())
    }

    pub fn predict_kriging(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.kriging_weights(x)?.dot(&self.values))
    }

    /// `Πᵀ α`, which vanishes for a solved saddle system.
    pub fn tail_orthogonality(&self) -> DVector<f64> {
        tail_matrix(&self.centers).transpose() * &self.alpha
    }
}

/// Concentrated negative log-likelihood criterion `(1/q) ln|det Φ| + ln σ̂²`
/// (the logarithm of `det(Φ)^{1/q} σ̂²`), with `β` from generalised least
/// squares. `None` when `Φ` or the reduced tail system is singular.
pub fn likelihood_criterion(
    centers: &PointSet,
    values: &[f64],
    kind: RbfKind,
    metric: &AnisotropicMetric,
) -> Option<f64> {
    let n = centers.dim();
    let q = centers.len();
    let phi = kernel_matrix(centers, kind, metric);
    let lu = phi.lu();
    if !lu.is_invertible() {
        return None;
    }
    let pi = tail_matrix(centers);
    let f = DVector::from_column_slice(values);
    let phi_inv_pi = lu.solve(&pi)?;
    let phi_inv_f = lu.solve(&f)?;
    let reduced = pi.transpose() * &phi_inv_pi;
    let beta = reduced.lu().solve(&(pi.transpose() * &phi_inv_f))?;
    let alpha = &phi_inv_f - &phi_inv_pi * &beta;
    let residual = &f - &pi * &beta;
    let sigma2 = residual.dot(&alpha).abs() / q as f64;
    let logdet = log_abs_det(&lu);
    let value = logdet / q as f64 + sigma2.ln();
    let _ = n;
    if value.is_finite() {
        Some(value)
    } else {
        None
    }
}

const TUNE_SWEEPS: usize = 3;
const TUNE_LEVELS: usize = 7;

/// Maximum-likelihood metric weights within `[lower, upper]`.
///
/// Deterministic pattern search in `ln γ`: three sweeps of seven levels over
/// a common (isotropic) weight, then, for kinds with per-axis freedom, three
/// coordinate-wise sweeps. Each sweep narrows the bracket threefold around
/// the incumbent. Candidates with singular `Φ` are rejected.
pub fn tune_hyperparameters(
    centers: &PointSet,
    values: &[f64],
    kind: RbfKind,
    lower: f64,
    upper: f64,
) -> Result<AnisotropicMetric> {
    let n = centers.dim();
    if !(lower > 0.0 && lower <= upper) {
        return Err(Error::Domain(format!(
            "hyperparameter bounds must satisfy 0 < lower <= upper, got [{lower}, {upper}]"
        )));
    }
    check_inputs(centers, values, &AnisotropicMetric::isotropic(n, lower))?;
    if lower == upper {
        return Ok(AnisotropicMetric::isotropic(n, lower));
    }
    let (lo, hi) = (lower.ln(), upper.ln());
    let objective = |logs: &[f64]| -> f64 {
        let metric = AnisotropicMetric {
            weights: DVector::from_iterator(n, logs.iter().map(|l| l.exp())),
        };
        likelihood_criterion(centers, values, kind, &metric).unwrap_or(f64::INFINITY)
    };

    let mut logs = vec![0.5 * (lo + hi); n];
    let mut best = objective(&logs);

    let mut width = hi - lo;
    let mut centre = logs[0];
    for _ in 0..TUNE_SWEEPS {
        let (a, b) = bracket(centre, width, lo, hi);
        for level in levels(a, b) {
            let trial = vec![level; n];
            let value = objective(&trial);
            if value < best {
                best = value;
                logs = trial;
            }
        }
        centre = logs[0];
        width /= 3.0;
    }

    if !kind.has_scalar_shape() && n > 1 {
        let mut widths = vec![(hi - lo) / 3.0; n];
        for _ in 0..TUNE_SWEEPS {
            for i in 0..n {
                let (a, b) = bracket(logs[i], widths[i], lo, hi);
                for level in levels(a, b) {
                    let mut trial = logs.clone();
                    trial[i] = level;
                    let value = objective(&trial);
                    if value < best - 1e-10 * best.abs().max(1.0) {
                        best = value;
                        logs = trial;
                    }
                }
                widths[i] /= 3.0;
            }
        }
    }

    Ok(AnisotropicMetric {
        weights: DVector::from_iterator(n, logs.iter().map(|l| l.exp().clamp(lower, upper))),
    })
}

fn bracket(centre: f64, width: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = (centre - 0.5 * width).max(lo);
    let b = (centre + 0.5 * width).min(hi);
    (a, b)
}

fn levels(a: f64, b: f64) -> impl Iterator<Item = f64> {
    (0..TUNE_LEVELS).map(move |i| a + (b - a) * i as f64 / (TUNE_LEVELS - 1) as f64)
}
