//! Closed-form regular-simplex geometry and set-quality metrics.
//!
//! All routines work on vertex sets in a (trust-region scaled) coordinate
//! frame where the nominal region is the unit ball. The quantities follow
//! the classical relations between a regular `n`-simplex of edge `l`, its
//! circumscribed sphere and its regular sub-simplices:
//!
//! * `V_n(l) = sqrt(n+1)/n! * l^n / sqrt(2^n)`
//! * `l_n(Δ) = sqrt(2) sqrt(n+1)/sqrt(n) * Δ` for a simplex inscribed in a sphere of radius `Δ`
//! * for an `m`-face of that simplex: circumradius `r = sqrt(m(n+1)/((m+1)n)) Δ`,
//!   offset of the face centroid from the sphere centre `d = sqrt((n-m)/((m+1)n)) Δ`,
//!   so that `d² + r² = Δ²`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Ordered collection of points sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    points: Vec<DVector<f64>>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
        }
    }

    pub fn from_points(dim: usize, points: Vec<DVector<f64>>) -> Result<Self> {
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
        }
        Ok(Self { dim, points })
    }

    /// Builds a set from plain coordinate slices.
    pub fn from_slices(dim: usize, rows: &[&[f64]]) -> Result<Self> {
        let points = rows
            .iter()
            .map(|r| DVector::from_column_slice(r))
            .collect();
        Self::from_points(dim, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DVector<f64>> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<DVector<f64>> {
        self.points
    }

    pub fn push(&mut self, p: DVector<f64>) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        self.points.push(p);
        Ok(())
    }

    /// Removes the point at `index`, keeping the order of the survivors.
    pub fn remove(&mut self, index: usize) -> DVector<f64> {
        self.points.remove(index)
    }

    /// Concatenation `self ∪ other`, `self` first.
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Ok(PointSet {
            dim: self.dim,
            points,
        })
    }

    pub fn scaled(&self, factor: f64) -> PointSet {
        PointSet {
            dim: self.dim,
            points: self.points.iter().map(|p| p * factor).collect(),
        }
    }

    pub fn centroid(&self) -> Option<DVector<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let mut c = DVector::zeros(self.dim);
        for p in &self.points {
            c += p;
        }
        Some(c / self.points.len() as f64)
    }

    /// Points as the columns of an `dim × len` matrix.
    pub fn to_columns(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.points.len(), |i, j| self.points[j][i])
    }

    /// Spanning vectors `[z_1 - z_0, ..., z_k - z_0]` as columns.
    pub fn spanning_vectors(&self) -> DMatrix<f64> {
        if self.points.is_empty() {
            return DMatrix::zeros(self.dim, 0);
        }
        let z0 = &self.points[0];
        DMatrix::from_fn(self.dim, self.points.len() - 1, |i, j| {
            self.points[j + 1][i] - z0[i]
        })
    }
}

/// Closed-form factors of a regular `m`-face of a regular `n`-simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexFactors {
    pub n: usize,
    pub m: usize,
    pub edge_length: f64,
    pub circum_radius: f64,
    pub offset: f64,
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Hypervolume `|det([z_1 - z_0 ... z_n - z_0])| / n!` of an `n`-simplex.
pub fn simplex_volume(points: &PointSet) -> Result<f64> {
    let n = points.dim();
    if points.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: points.len(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let det = points.spanning_vectors().lu().determinant();
    Ok(det.abs() / factorial(n))
}

/// Volume of a regular `n`-simplex with edge length `l`.
pub fn regular_simplex_volume(n: usize, l: f64) -> f64 {
    let n_f = n as f64;
    (n_f + 1.0).sqrt() / factorial(n) * l.powi(n as i32) / 2f64.powf(n_f / 2.0)
}

/// Edge length of a regular `n`-simplex inscribed in a sphere of radius `delta`.
pub fn inscribed_edge_length(n: usize, delta: f64) -> f64 {
    let n_f = n as f64;
    std::f64::consts::SQRT_2 * (n_f + 1.0).sqrt() / n_f.sqrt() * delta
}

/// Circumradius of a regular `n`-simplex with edge length `l`.
pub fn circum_radius(n: usize, l: f64) -> f64 {
    let n_f = n as f64;
    n_f.sqrt() / (n_f + 1.0).sqrt() * l / std::f64::consts::SQRT_2
}

/// Target volume `V*` of the regular simplex inscribed in the unit sphere.
pub fn optimal_volume(n: usize) -> f64 {
    regular_simplex_volume(n, inscribed_edge_length(n, 1.0))
}

pub fn sub_simplex_factors(n: usize, m: usize, delta: f64) -> Result<SimplexFactors> {
    if n == 0 {
        return Err(Error::Domain("ambient dimension must be positive".into()));
    }
    if m > n {
        return Err(Error::Domain(format!(
            "sub-simplex dimension {m} exceeds ambient dimension {n}"
        )));
    }
    let (n_f, m_f) = (n as f64, m as f64);
    Ok(SimplexFactors {
        n,
        m,
        edge_length: inscribed_edge_length(n, delta),
        circum_radius: (m_f * (n_f + 1.0) / ((m_f + 1.0) * n_f)).sqrt() * delta,
        offset: ((n_f - m_f) / ((m_f + 1.0) * n_f)).sqrt() * delta,
    })
}

/// Vertices of a regular `m`-simplex inscribed in the unit sphere of `R^n`.
///
/// The vertices are the standard basis of `R^{m+1}` centred on their
/// centroid, expressed in the Helmert basis of the sum-zero hyperplane and
/// normalised to unit length. They occupy the first `m` coordinates and
/// their centroid is the origin.
pub fn regsim(n: usize, m: usize) -> Result<PointSet> {
    if m > n {
        return Err(Error::Domain(format!(
            "simplex dimension {m} exceeds ambient dimension {n}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("ambient dimension must be positive".into()));
    }
    if m == 0 {
        let mut p = DVector::zeros(n);
        p[0] = 1.0;
        return PointSet::from_points(n, vec![p]);
    }
    let norm = (m as f64 / (m as f64 + 1.0)).sqrt();
    let points = (0..=m)
        .map(|i| {
            let mut p = DVector::zeros(n);
            for k in 1..=m {
                let scale = ((k * (k + 1)) as f64).sqrt();
                let c = if i < k {
                    1.0 / scale
                } else if i == k {
                    -(k as f64) / scale
                } else {
                    0.0
                };
                p[k - 1] = c / norm;
            }
            p
        })
        .collect();
    PointSet::from_points(n, points)
}

/// Mean distance from `x` to the members of `points`.
pub fn mean_distance(x: &DVector<f64>, points: &PointSet) -> f64 {
    points.iter().map(|z| (x - z).norm()).sum::<f64>() / points.len() as f64
}

const THETA_SEED: u64 = 0x7e7a_57a2;
const ASCENT_ITERATIONS: usize = 500;

/// Worst-case mean distance from a point of the ball `B(0, delta)` to the set.
///
/// The mean distance is convex in `x`, so its maximum over the ball lies on
/// the sphere. It is found by projected ascent on the sphere from `64 n`
/// seeded random starts.
pub fn theta_star(points: &PointSet, delta: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Domain("theta_star needs a non-empty set".into()));
    }
    let n = points.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(THETA_SEED);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..64 * n {
        let mut x = random_on_sphere(&mut rng, n) * delta;
        let mut value = mean_distance(&x, points);
        let mut step = delta;
        for _ in 0..ASCENT_ITERATIONS {
            if step <= 1e-12 * delta {
                break;
            }
            let grad = mean_distance_gradient(&x, points);
            let tangential = &grad - &x * (grad.dot(&x) / (delta * delta));
            if tangential.norm() < 1e-14 {
                break;
            }
            let trial = project_to_sphere(&x + &tangential * step, delta);
            let trial_value = mean_distance(&trial, points);
            if trial_value > value {
                let gain = trial_value - value;
                x = trial;
                value = trial_value;
                step = (2.0 * step).min(2.0 * delta);
                if gain < 1e-15 * value.abs().max(1.0) {
                    break;
                }
            } else {
                step *= 0.5;
            }
        }
        best = best.max(value);
    }
    Ok(best)
}

fn mean_distance_gradient(x: &DVector<f64>, points: &PointSet) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for z in points.iter() {
        let d = x - z;
        let r = d.norm();
        if r > 1e-14 {
            g += d / r;
        }
    }
    g / points.len() as f64
}

fn project_to_sphere(x: DVector<f64>, radius: f64) -> DVector<f64> {
    let norm = x.norm();
    x * (radius / norm)
}

pub(crate) fn random_on_sphere<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 && norm <= 1.0 {
            return v / norm;
        }
    }
}

/// Orthonormal bases of the column space of `a` and of its orthogonal
/// complement. Together they form an orthonormal basis of `R^rows`.
pub fn orthonormal_bases(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let scale = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut span: Vec<DVector<f64>> = Vec::new();
    for col in a.column_iter() {
        if let Some(q) = orthogonalize(col.into_owned(), &span, tol) {
            span.push(q);
        }
    }
    let mut full = span.clone();
    for i in 0..n {
        if full.len() == n {
            break;
        }
        let e = DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
        if let Some(q) = orthogonalize(e, &full, 1e-8) {
            full.push(q);
        }
    }
    let kernel = &full[span.len()..];
    (columns(n, &span), columns(n, kernel))
}

/// Two-pass Gram-Schmidt of `v` against `basis`; `None` if the residual is below `tol`.
fn orthogonalize(mut v: DVector<f64>, basis: &[DVector<f64>], tol: f64) -> Option<DVector<f64>> {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
    }
    let norm = v.norm();
    if norm <= tol {
        None
    } else {
        Some(v / norm)
    }
}

pub(crate) fn columns(n: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}
