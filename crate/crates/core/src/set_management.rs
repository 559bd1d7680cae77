//! Interpolation-set maintenance in trust-scaled coordinates.
//!
//! The affine subset is kept close to a regular simplex inscribed in the
//! unit sphere, whose volume `V*` is the reference for poisedness. Missing
//! vertices are generated by rotating and translating a lower-order regular
//! simplex so that it completes the points already available.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{optimal_volume, orthonormal_bases, regsim, simplex_volume, PointSet};
use crate::surrogate::{AnisotropicMetric, RbfKind, SurrogateModel, ILL_CONDITIONED};

/// Members closer than this (scaled coordinates) are treated as coincident.
pub const MIN_SEPARATION: f64 = 1e-10;
/// Ledger lookups closer than this (original coordinates) reuse the cached value.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;
/// Relative slack of the volume test `V ≥ μ₁ V*`.
pub const VOLUME_SLACK: f64 = 1e-9;
/// Exhaustive subset search is used below this many combinations.
const EXHAUSTIVE_LIMIT: usize = 5000;
const SIGMA_GRID: usize = 64;
const SIGMA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Recycled,
    Fresh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub point: DVector<f64>,
    pub value: f64,
    pub provenance: Provenance,
}

/// Origin (current iterate) plus evaluated members, in scaled coordinates.
///
/// The first `n + 1` members form the affine subset; later members are
/// recycled extras.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationSet {
    dim: usize,
    origin_value: f64,
    members: Vec<Member>,
}

impl InterpolationSet {
    pub fn new(dim: usize, origin_value: f64) -> Self {
        Self {
            dim,
            origin_value,
            members: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin_value(&self) -> f64 {
        self.origin_value
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    /// Set size `q`, counting the origin.
    pub fn len(&self) -> usize {
        self.members.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether `p` keeps the minimum separation from the origin and all members.
    pub fn admits(&self, p: &DVector<f64>) -> bool {
        p.norm() > MIN_SEPARATION
            && self
                .members
                .iter()
                .all(|m| (&m.point - p).norm() > MIN_SEPARATION)
    }

    /// Adds a member; returns `false` (and leaves the set unchanged) if it
    /// would violate the separation invariant.
    pub fn push(&mut self, point: DVector<f64>, value: f64, provenance: Provenance) -> Result<bool> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        if !self.admits(&point) {
            return Ok(false);
        }
        self.members.push(Member {
            point,
            value,
            provenance,
        });
        Ok(true)
    }

    /// Non-origin member points.
    pub fn points(&self) -> PointSet {
        PointSet::from_points(self.dim, self.members.iter().map(|m| m.point.clone()).collect())
            .expect("members share the set dimension")
    }

    /// The first `n + 1` non-origin members.
    pub fn affine_subset(&self) -> PointSet {
        let k = self.members.len().min(self.dim + 1);
        PointSet::from_points(
            self.dim,
            self.members[..k].iter().map(|m| m.point.clone()).collect(),
        )
        .expect("members share the set dimension")
    }

    /// All points with the origin first, and their values.
    pub fn with_origin(&self) -> (PointSet, Vec<f64>) {
        let mut points = vec![DVector::zeros(self.dim)];
        let mut values = vec![self.origin_value];
        for m in &self.members {
            points.push(m.point.clone());
            values.push(m.value);
        }
        (
            PointSet::from_points(self.dim, points).expect("members share the set dimension"),
            values,
        )
    }

    pub fn fresh_count(&self) -> usize {
        self.members
            .iter()
            .filter(|m| m.provenance == Provenance::Fresh)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub point: DVector<f64>,
    pub value: f64,
    pub iteration: usize,
}

/// Append-only record of every objective evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationLedger {
    records: Vec<EvaluationRecord>,
}

impl EvaluationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lookup(&self, x: &DVector<f64>) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.point.len() == x.len() && (&r.point - x).norm() <= DUPLICATE_TOLERANCE)
            .map(|r| r.value)
    }

    /// Returns the cached value of `x` or evaluates and records it. The flag
    /// is `true` when `objective` was called.
    pub fn evaluate<F>(&mut self, x: &DVector<f64>, iteration: usize, objective: &mut F) -> (f64, bool)
    where
        F: FnMut(&DVector<f64>) -> f64,
    {
        if let Some(v) = self.lookup(x) {
            return (v, false);
        }
        let value = objective(x);
        self.records.push(EvaluationRecord {
            point: x.clone(),
            value,
            iteration,
        });
        (value, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoisednessReport {
    pub volume: f64,
    pub target: f64,
    pub ratio: f64,
    /// Smallest singular value of `Z = [z_1 … z_{n+1}]`.
    pub min_singular_value: f64,
}

pub fn poisedness_report(set: &InterpolationSet) -> PoisednessReport {
    report_for(&set.affine_subset())
}

pub(crate) fn report_for(subset: &PointSet) -> PoisednessReport {
    let n = subset.dim();
    let target = optimal_volume(n);
    let volume = if subset.len() == n + 1 {
        simplex_volume(subset).unwrap_or(0.0)
    } else {
        0.0
    };
    let min_singular_value = if subset.is_empty() {
        0.0
    } else {
        let sv = subset.to_columns().svd(false, false).singular_values;
        if subset.len() < n {
            0.0
        } else {
            sv.iter().cloned().fold(f64::INFINITY, f64::min)
        }
    };
    PoisednessReport {
        volume,
        target,
        ratio: volume / target,
        min_singular_value,
    }
}

pub(crate) fn meets_volume(volume: f64, n: usize, mu1: f64) -> bool {
    volume >= mu1 * optimal_volume(n) * (1.0 - VOLUME_SLACK)
}

fn union_volume(z1: &PointSet, z2: &[DVector<f64>]) -> f64 {
    let mut pts = z1.points().to_vec();
    pts.extend(z2.iter().cloned());
    if pts.len() != z1.dim() + 1 {
        return 0.0;
    }
    simplex_volume(&PointSet::from_points(z1.dim(), pts).expect("same dimension")).unwrap_or(0.0)
}

/// Completes `z1` with `(n + 1) − |z1|` unit-norm points forming a regular
/// simplex placed orthogonally to `span(z1)`, offset along the direction
/// from the origin to the affine hull of `z1`. The offset `σ` maximises the
/// volume of the union.
pub fn simexpand(z1: &PointSet) -> Result<PointSet> {
    let n = z1.dim();
    let m = z1.len();
    if m > n + 1 {
        return Err(Error::Domain(format!(
            "cannot expand {m} points in dimension {n}"
        )));
    }
    if m == n + 1 {
        return Ok(PointSet::new(n));
    }
    if m == 0 {
        return regsim(n, n);
    }
    let k = n + 1 - m;

    let (span_affine, _) = orthonormal_bases(&z1.spanning_vectors());
    let (span_linear, kernel_linear) = orthonormal_bases(&z1.to_columns());
    let z0 = &z1.points()[0];
    let foot = z0 - &span_affine * (span_affine.transpose() * z0);
    let e = if foot.norm() > 1e-10 * z0.norm().max(1.0) {
        foot.normalize()
    } else if kernel_linear.ncols() > 0 {
        kernel_linear.column(0).into_owned()
    } else {
        let (_, k_aff) = orthonormal_bases(&z1.spanning_vectors());
        k_aff.column(0).into_owned()
    };
    let mut spanned = span_linear.clone().insert_column(span_linear.ncols(), 0.0);
    spanned.set_column(span_linear.ncols(), &e);
    let (_, kernel) = orthonormal_bases(&spanned);
    let rotation = kernel.columns(0, (k - 1).min(kernel.ncols())).into_owned();

    let template: Vec<DVector<f64>> = if k == 1 {
        vec![DVector::zeros(0)]
    } else {
        regsim(k - 1, k - 1)?.into_points()
    };
    let place = |sigma: f64| -> Vec<DVector<f64>> {
        let c = (1.0 - sigma * sigma).max(0.0).sqrt();
        template
            .iter()
            .map(|x| {
                let mut p = &e * sigma;
                if x.len() > 0 {
                    p += (&rotation * x) * c;
                }
                p
            })
            .collect()
    };

    let sigma = if k == 1 {
        let plus = union_volume(z1, &place(1.0));
        let minus = union_volume(z1, &place(-1.0));
        if minus > plus {
            -1.0
        } else {
            1.0
        }
    } else {
        maximize_on_interval(|s| union_volume(z1, &place(s)))
    };
    PointSet::from_points(n, place(sigma))
}

/// Grid scan of `(−1, 1)` followed by golden-section refinement.
fn maximize_on_interval<F: Fn(f64) -> f64>(f: F) -> f64 {
    let h = 2.0 / SIGMA_GRID as f64;
    let grid: Vec<f64> = (0..SIGMA_GRID).map(|i| -1.0 + h * (i as f64 + 0.5)).collect();
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, s) in grid.iter().enumerate() {
        let v = f(*s);
        if v > best_value {
            best_value = v;
            best = i;
        }
    }
    let mut a = (grid[best] - h).max(-1.0);
    let mut b = (grid[best] + h).min(1.0);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > SIGMA_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let refined = 0.5 * (a + b);
    if f(refined) >= best_value {
        refined
    } else {
        grid[best]
    }
}

/// Result of [`expand2volume`].
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    /// `n + 1` points; retained candidates first, then generated ones.
    pub affine_subset: PointSet,
    /// Generated points that still need an objective evaluation.
    pub fresh_points: PointSet,
}

fn expansion(affine: &PointSet, fresh: &PointSet) -> Expansion {
    Expansion {
        affine_subset: affine.clone(),
        fresh_points: fresh.clone(),
    }
}

/// Builds an affine subset of `n + 1` points with `V ≥ μ₁ V*`, reusing as
/// many candidates as possible.
pub fn expand2volume(candidates: &PointSet, theta1: f64, mu1: f64) -> Result<Expansion> {
    let n = candidates.dim();
    if n == 0 {
        return Err(Error::Domain("ambient dimension must be positive".into()));
    }
    if !(theta1 >= 1.0) {
        return Err(Error::Domain(format!("periphery θ1 must be ≥ 1, got {theta1}")));
    }
    if !(mu1 > 0.0 && mu1 <= 1.0) {
        return Err(Error::Domain(format!("μ1 must lie in (0, 1], got {mu1}")));
    }

    let mut pool: Vec<DVector<f64>> = Vec::new();
    for z in candidates.iter() {
        let r = z.norm();
        if r.is_finite()
            && r > MIN_SEPARATION
            && r <= theta1
            && pool.iter().all(|p| (p - z).norm() > MIN_SEPARATION)
        {
            pool.push(z.clone());
        }
    }

    let mut z1 = if pool.len() > n + 1 {
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| {
            let da = (1.0 - pool[a].norm()).abs();
            let db = (1.0 - pool[b].norm()).abs();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut keep: Vec<usize> = order[..n + 1].to_vec();
        keep.sort_unstable();
        let chosen = PointSet::from_points(n, keep.iter().map(|&i| pool[i].clone()).collect())?;
        if meets_volume(simplex_volume(&chosen)?, n, mu1) {
            return Ok(expansion(&chosen, &PointSet::new(n)));
        }
        if let Some(found) = search_qualifying_subset(&pool, n, mu1) {
            let subset = PointSet::from_points(n, found.iter().map(|&i| pool[i].clone()).collect())?;
            return Ok(expansion(&subset, &PointSet::new(n)));
        }
        chosen
    } else {
        PointSet::from_points(n, pool)?
    };

    let mut z2 = simexpand(&z1)?;
    let mut volume = union_volume(&z1, z2.points());
    if meets_volume(volume, n, mu1) {
        return Ok(expansion(&z1.union(&z2)?, &z2));
    }

    if !z1.is_empty() {
        let anchor = z1
            .iter()
            .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty")
            .clone();
        let mut memory: Vec<DVector<f64>> = Vec::new();
        while !meets_volume(volume, n, mu1) && !z1.is_empty() {
            let mut nearest = 0;
            let mut nearest_distance = f64::INFINITY;
            for (i, z) in z1.iter().enumerate() {
                let d = (z - &anchor).norm();
                if d < nearest_distance {
                    nearest_distance = d;
                    nearest = i;
                }
            }
            let removed = z1.remove(nearest);
            memory.push(removed.clone());
            let mean = memory.iter().fold(DVector::zeros(n), |acc, p| acc + p) / memory.len() as f64;
            let complement = if mean.norm() > 1e-8 {
                mean.normalize()
            } else {
                removed.normalize()
            };
            let mut seeded = z1.clone();
            seeded.push(complement.clone())?;
            let mut generated = PointSet::from_points(n, vec![complement])?;
            generated = generated.union(&simexpand(&seeded)?)?;
            z2 = generated;
            volume = union_volume(&z1, z2.points());
        }
    }

    if !meets_volume(volume, n, mu1) {
        z1 = PointSet::new(n);
        z2 = regsim(n, n)?;
    }
    Ok(expansion(&z1.union(&z2)?, &z2))
}

/// Indices (ascending) of `n + 1` pool points meeting the volume test, if any
/// can be found. Exhaustive for small pools, greedy exchange otherwise.
fn search_qualifying_subset(pool: &[DVector<f64>], n: usize, mu1: f64) -> Option<Vec<usize>> {
    let size = n + 1;
    let volume_of = |idx: &[usize]| -> f64 {
        let pts = PointSet::from_points(n, idx.iter().map(|&i| pool[i].clone()).collect())
            .expect("same dimension");
        simplex_volume(&pts).unwrap_or(0.0)
    };
    if binomial(pool.len(), size) <= EXHAUSTIVE_LIMIT {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            if meets_volume(volume_of(&idx), n, mu1) {
                return Some(idx);
            }
            if !next_combination(&mut idx, pool.len()) {
                return None;
            }
        }
    }
    let mut idx: Vec<usize> = (0..size).collect();
    let mut current = volume_of(&idx);
    loop {
        if meets_volume(current, n, mu1) {
            idx.sort_unstable();
            return Some(idx);
        }
        let mut improved = false;
        for slot in 0..size {
            for candidate in 0..pool.len() {
                if idx.contains(&candidate) {
                    continue;
                }
                let mut trial = idx.clone();
                trial[slot] = candidate;
                let v = volume_of(&trial);
                if v > current * (1.0 + 1e-12) {
                    idx = trial;
                    current = v;
                    improved = true;
                }
            }
        }
        if !improved {
            return None;
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > EXHAUSTIVE_LIMIT * 1000 {
            return usize::MAX;
        }
    }
    acc
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Condition estimate of the saddle system on `set` (origin included).
pub fn saddle_condition(set: &InterpolationSet, kind: RbfKind, metric: &AnisotropicMetric) -> f64 {
    let (points, values) = set.with_origin();
    match SurrogateModel::fit(&points, &values, kind, metric) {
        Ok((_, diag)) => diag.condition_estimate,
        Err(_) => f64::INFINITY,
    }
}

/// Saddle matrix `[[0, Πᵀ], [Π, Φ]]` with its inverse, grown one point at a
/// time by bordering. This is a symmetric permutation of the layout used by
/// [`SurrogateModel::fit`], so both give the same 1-norm condition number.
struct SaddleTracker {
    points: Vec<DVector<f64>>,
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    kind: RbfKind,
    metric: AnisotropicMetric,
}

impl SaddleTracker {
    fn new(set: &InterpolationSet, kind: RbfKind, metric: &AnisotropicMetric) -> Option<Self> {
        let (points, _) = set.with_origin();
        let points = points.into_points();
        let mut tracker = SaddleTracker {
            matrix: DMatrix::zeros(0, 0),
            inverse: DMatrix::zeros(0, 0),
            points: Vec::new(),
            kind,
            metric: metric.clone(),
        };
        let n = set.dim();
        let size = n + 1 + points.len();
        let mut matrix = DMatrix::zeros(size, size);
        for (i, p) in points.iter().enumerate() {
            let border = tracker.border(p, &points[..i]);
            let row = n + 1 + i;
            for j in 0..row {
                matrix[(row, j)] = border[j];
                matrix[(j, row)] = border[j];
            }
            matrix[(row, row)] = kind.phi(0.0);
        }
        tracker.points = points;
        tracker.matrix = matrix;
        tracker.refresh_inverse().then_some(tracker)
    }

    /// `[π(z); φ(‖z − zᵢ‖)]` for the given earlier points.
    fn border(&self, z: &DVector<f64>, earlier: &[DVector<f64>]) -> DVector<f64> {
        let n = z.len();
        let mut b = DVector::zeros(n + 1 + earlier.len());
        b.rows_mut(0, n).copy_from(z);
        b[n] = 1.0;
        for (i, p) in earlier.iter().enumerate() {
            b[n + 1 + i] = self.kind.phi(self.metric.distance(&(z - p)));
        }
        b
    }

    fn refresh_inverse(&mut self) -> bool {
        match self.matrix.clone().lu().try_inverse() {
            Some(inv) if inv.iter().all(|v| v.is_finite()) => {
                self.inverse = inv;
                true
            }
            _ => false,
        }
    }

    fn condition(&self) -> f64 {
        (one_norm(&self.matrix) * one_norm(&self.inverse)).max(1.0)
    }

    /// Condition estimate of the saddle matrix with `z` appended.
    fn condition_with(&self, z: &DVector<f64>) -> f64 {
        let b = self.border(z, &self.points);
        let c = self.kind.phi(0.0);
        let w = &self.inverse * &b;
        let schur = c - b.dot(&w);
        if !(schur.abs() > 0.0) || !schur.is_finite() {
            return f64::INFINITY;
        }
        let size = b.len();
        let mut norm = b.iter().map(|v| v.abs()).sum::<f64>() + c.abs();
        for j in 0..size {
            let col = self.matrix.column(j).iter().map(|v| v.abs()).sum::<f64>() + b[j].abs();
            norm = norm.max(col);
        }
        let mut inv_norm = w.iter().map(|v| v.abs()).sum::<f64>() / schur.abs() + 1.0 / schur.abs();
        for j in 0..size {
            let col = (0..size)
                .map(|i| (self.inverse[(i, j)] + w[i] * w[j] / schur).abs())
                .sum::<f64>()
                + (w[j] / schur).abs();
            inv_norm = inv_norm.max(col);
        }
        (norm * inv_norm).max(1.0)
    }

    fn push(&mut self, z: DVector<f64>) -> bool {
        let b = self.border(&z, &self.points);
        let size = b.len();
        let mut grown = DMatrix::zeros(size + 1, size + 1);
        grown.view_mut((0, 0), (size, size)).copy_from(&self.matrix);
        for j in 0..size {
            grown[(size, j)] = b[j];
            grown[(j, size)] = b[j];
        }
        grown[(size, size)] = self.kind.phi(0.0);
        let previous = std::mem::replace(&mut self.matrix, grown);
        if self.refresh_inverse() {
            self.points.push(z);
            true
        } else {
            self.matrix = previous;
            false
        }
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Adds previously evaluated points (scaled coordinates, nearest to the
/// origin first, norm at most `periphery`) while the saddle system stays
/// well conditioned and the set size stays within `q_max` (origin included).
pub fn recycle_extra_points(
    affine_subset: &InterpolationSet,
    candidates: &[(DVector<f64>, f64)],
    periphery: f64,
    q_max: usize,
    kind: RbfKind,
    metric: &AnisotropicMetric,
) -> InterpolationSet {
    let mut set = affine_subset.clone();
    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| {
            let (p, v) = &candidates[i];
            p.len() == set.dim() && v.is_finite() && p.norm() <= periphery
        })
        .collect();
    order.sort_by(|&a, &b| candidates[a].0.norm().total_cmp(&candidates[b].0.norm()));

    let mut tracker = None;
    for i in order {
        if set.len() >= q_max {
            break;
        }
        let (p, v) = &candidates[i];
        if !set.admits(p) {
            continue;
        }
        let member = Member {
            point: p.clone(),
            value: *v,
            provenance: Provenance::Recycled,
        };
        if set.len() + 1 < set.dim() + 2 {
            set.members.push(member);
            continue;
        }
        if tracker.is_none() {
            tracker = match SaddleTracker::new(&set, kind, metric) {
                Some(t) => Some(t),
                None => break,
            };
        }
        let t = tracker.as_mut().expect("initialised above");
        if t.condition_with(p) > ILL_CONDITIONED || !t.push(p.clone()) {
            continue;
        }
        if t.condition() <= ILL_CONDITIONED {
            set.members.push(member);
        } else {
            // The exact refresh disagreed with the bordered estimate.
            tracker = None;
        }
    }
    set
}
