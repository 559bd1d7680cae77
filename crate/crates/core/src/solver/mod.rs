//! Trust-region driver with RBF surrogates.
//!
//! Each iteration maps the ledger into the auxiliary frame of the current
//! trust region, completes a well-poised affine subset (evaluating any
//! generated points), recycles extra points, fits the surrogate, and takes
//! the model minimiser over the unit ball as the trial step.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ellipsoid::{bfgs_update, build_map, filter_hessian, AffineMap, HessianEstimate};
use crate::error::{Error, Result};
use crate::geometry::{simplex_volume, PointSet};
use crate::set_management::{
    expand2volume, meets_volume, poisedness_report, recycle_extra_points, EvaluationLedger,
    InterpolationSet, PoisednessReport, Provenance, DUPLICATE_TOLERANCE,
};
use crate::surrogate::{tune_hyperparameters, AnisotropicMetric, RbfKind, SurrogateModel};

pub mod subproblem;

pub use subproblem::{solve_subproblem, SmoothModel};

/// Radius used in place of a zero lower bound.
pub const RADIUS_FLOOR: f64 = 1e-14;
/// Predicted decreases below this give `ρ = −1`.
pub const PREDICTION_GUARD: f64 = 1e-14;
/// Volume fraction demanded by the generic (geometry-agnostic) mode.
const GENERIC_MU1: f64 = 1e-6;

/// Preset `(μ₁, μ₂)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    V1,
    V2,
    V3,
    V4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::V1, Variant::V2, Variant::V3, Variant::V4];

    pub fn mu1(self) -> f64 {
        match self {
            Variant::V1 | Variant::V2 => 0.5,
            Variant::V3 => 0.75,
            Variant::V4 => 1.0,
        }
    }

    pub fn mu2(self) -> f64 {
        match self {
            Variant::V1 => 1.0,
            _ => 0.95,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::V1 => "V1",
            Variant::V2 => "V2",
            Variant::V3 => "V3",
            Variant::V4 => "V4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// Curvature-normalised ellipsoid driven by the filtered Hessian.
    Ellipsoidal,
    /// Plain ball `x = Δ u + x_k`; the curvature estimate is never updated.
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianSource {
    /// Filtered model Hessian at the accepted point.
    Model,
    /// BFGS update from model gradients.
    Bfgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Volume-guaranteed sets plus the criticality test.
    FullyLinear,
    /// Plain trust-region loop: no criticality test and only non-degenerate sets.
    Generic,
}

/// Stop once `f − f_star < tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub f_star: f64,
    pub tolerance: f64,
}

impl Target {
    pub fn reached(&self, f: f64) -> bool {
        f - self.f_star < self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub theta1: f64,
    /// Radius, in units of Δ, within which stored points are recycled into
    /// the model beyond the affine subset.
    pub recycle_periphery: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Lower bound of the metric weights.
    pub beta1: f64,
    /// Upper bound of the metric weights.
    pub beta2: f64,
    /// `0` means no floor beyond [`RADIUS_FLOOR`].
    pub delta_min: f64,
    /// `None` means `3 Δ₀`.
    pub delta_max: Option<f64>,
    pub q_max: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub delta0: f64,
    pub eps_g: f64,
    pub kappa_g: f64,
    pub eval_budget: usize,
    pub rng_seed: u64,
    pub kernel: RbfKind,
    pub frame: FrameMode,
    pub hessian_source: HessianSource,
    pub algorithm: Algorithm,
    pub target: Option<Target>,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta1: 1.25,
            recycle_periphery: 10.0,
            eta1: 0.0,
            eta2: 0.6,
            gamma1: 0.5,
            gamma2: 2.0,
            beta1: 1e-2,
            beta2: 1e-1,
            delta_min: 0.0,
            delta_max: None,
            q_max: 100,
            mu1: Variant::V1.mu1(),
            mu2: Variant::V1.mu2(),
            delta0: 1.0,
            eps_g: 0.0,
            kappa_g: 1.0,
            eval_budget: 1000,
            rng_seed: 1,
            kernel: RbfKind::gaussian(),
            frame: FrameMode::Ellipsoidal,
            hessian_source: HessianSource::Model,
            algorithm: Algorithm::FullyLinear,
            target: None,
            max_iterations: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn variant(v: Variant) -> Self {
        Self {
            mu1: v.mu1(),
            mu2: v.mu2(),
            ..Self::default()
        }
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max.unwrap_or(3.0 * self.delta0)
    }

    pub fn delta_floor(&self) -> f64 {
        self.delta_min.max(RADIUS_FLOOR)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(0.0 <= self.eta1 && self.eta1 < self.eta2 && self.eta2 < 1.0) {
            return fail(format!("need 0 <= eta1 < eta2 < 1, got {} and {}", self.eta1, self.eta2));
        }
        if !(0.0 < self.gamma1 && self.gamma1 < 1.0 && 1.0 < self.gamma2) {
            return fail(format!(
                "need 0 < gamma1 < 1 < gamma2, got {} and {}",
                self.gamma1, self.gamma2
            ));
        }
        if !(self.delta_min >= 0.0 && self.delta_min <= self.delta0 && self.delta0 <= self.delta_max())
            || !(self.delta0 > 0.0)
        {
            return fail(format!(
                "need 0 <= delta_min <= delta0 <= delta_max with delta0 > 0, got {}, {}, {}",
                self.delta_min,
                self.delta0,
                self.delta_max()
            ));
        }
        if !(self.theta1 >= 1.0) {
            return fail(format!("theta1 must be >= 1, got {}", self.theta1));
        }
        if !(self.recycle_periphery >= self.theta1) {
            return fail(format!(
                "recycle_periphery must be >= theta1, got {}",
                self.recycle_periphery
            ));
        }
        if !(self.mu1 > 0.0 && self.mu1 <= 1.0) {
            return fail(format!("mu1 must lie in (0, 1], got {}", self.mu1));
        }
        if !(0.0..=1.0).contains(&self.mu2) {
            return fail(format!("mu2 must lie in [0, 1], got {}", self.mu2));
        }
        if !(self.beta1 > 0.0 && self.beta1 <= self.beta2) {
            return fail(format!(
                "need 0 < beta1 <= beta2, got {} and {}",
                self.beta1, self.beta2
            ));
        }
        if !(self.eps_g >= 0.0 && self.kappa_g > 0.0) {
            return fail("need eps_g >= 0 and kappa_g > 0".into());
        }
        if let Some(t) = self.target {
            if !(t.tolerance > 0.0) {
                return fail(format!("target tolerance must be positive, got {}", t.tolerance));
            }
        }
        Ok(())
    }
}

/// Axis-aligned feasible box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl Bounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::Domain("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn clip(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(v, (l, u))| v.clamp(*l, *u)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    GradientConverged,
    BudgetExhausted,
    TargetReached,
    /// No further progress possible: radius at its floor without new
    /// evaluations, or the iteration cap was hit.
    Stalled,
}

impl TerminalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalStatus::GradientConverged => "gradient_converged",
            TerminalStatus::BudgetExhausted => "budget_exhausted",
            TerminalStatus::TargetReached => "target_reached",
            TerminalStatus::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub k: usize,
    pub evals_used: usize,
    pub f_best: f64,
    pub delta: f64,
    pub rho: f64,
    pub q: usize,
    pub fresh_count: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<IterationRow>,
    pub status: TerminalStatus,
    pub evals_used: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x_best: DVector<f64>,
    pub f_best: f64,
    /// Final trust-region centre.
    pub x_final: DVector<f64>,
    pub record: RunRecord,
    pub ledger: EvaluationLedger,
}

/// Snapshot handed to the per-iteration observer.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub row: &'a IterationRow,
    /// Centre of the trust region at the start of the iteration.
    pub center: &'a DVector<f64>,
    pub map: &'a AffineMap,
    /// Curvature estimate the map was built from.
    pub hessian: &'a HessianEstimate,
    pub poisedness: Option<PoisednessReport>,
    pub model_gradient_norm: Option<f64>,
    pub accepted: bool,
}

/// Mutable state of a run.
#[derive(Debug, Clone)]
pub struct TrustRegionState {
    pub x_k: DVector<f64>,
    pub f_k: f64,
    pub delta: f64,
    pub hessian: HessianEstimate,
    pub map: AffineMap,
    pub ledger: EvaluationLedger,
    pub k: usize,
}

impl TrustRegionState {
    pub fn evals_used(&self) -> usize {
        self.ledger.len()
    }
}

/// Three-branch radius update with clamps to `[Δ_floor, Δ_M]`.
pub fn update_radius(delta: f64, rho: f64, cfg: &SolverConfig) -> f64 {
    let next = if rho.is_nan() || rho <= cfg.eta1 {
        (cfg.gamma1 * delta).max(cfg.delta_min)
    } else if rho <= cfg.eta2 {
        delta
    } else {
        (cfg.gamma2 * delta).min(cfg.delta_max())
    };
    next.clamp(cfg.delta_floor(), cfg.delta_max().max(cfg.delta_floor()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullyLinearReport {
    pub passed: bool,
    pub volume_ratio: f64,
    /// Largest point norm after rescaling.
    pub max_norm: f64,
    /// Spectral norm of `Z` after rescaling.
    pub z_norm: f64,
    /// `1 / σ_min(Z)` after rescaling.
    pub lambda_z: f64,
    /// Geometric factor `(5/2) Λ_Z sqrt(q − 1)` of the error bounds.
    pub error_factor: f64,
}

/// Volume test of `affine_subset` (coordinates scaled by the current radius)
/// on the smaller ball of relative radius `scale`.
pub fn check_fully_linear(affine_subset: &PointSet, scale: f64, mu1: f64, theta1: f64) -> FullyLinearReport {
    let n = affine_subset.dim();
    let failed = FullyLinearReport {
        passed: false,
        volume_ratio: 0.0,
        max_norm: f64::INFINITY,
        z_norm: f64::INFINITY,
        lambda_z: f64::INFINITY,
        error_factor: f64::INFINITY,
    };
    if !(scale > 0.0 && scale.is_finite()) || affine_subset.len() != n + 1 {
        return failed;
    }
    let scaled = affine_subset.scaled(1.0 / scale);
    let volume = simplex_volume(&scaled).unwrap_or(0.0);
    let report = crate::set_management::report_for(&scaled);
    let sv = scaled.to_columns().svd(false, false).singular_values;
    let z_norm = sv.iter().cloned().fold(0.0, f64::max);
    let lambda_z = if report.min_singular_value > 0.0 {
        1.0 / report.min_singular_value
    } else {
        f64::INFINITY
    };
    let max_norm = scaled.iter().map(|p| p.norm()).fold(0.0, f64::max);
    FullyLinearReport {
        passed: max_norm <= theta1 && meets_volume(volume, n, mu1),
        volume_ratio: report.ratio,
        max_norm,
        z_norm,
        lambda_z,
        error_factor: 2.5 * lambda_z * ((n + 1) as f64).sqrt(),
    }
}

fn frame_map(cfg: &SolverConfig, hessian: &HessianEstimate, x: &DVector<f64>, delta: f64) -> Result<AffineMap> {
    match cfg.frame {
        FrameMode::Ellipsoidal => build_map(hessian, x, delta),
        FrameMode::Spherical => Ok(AffineMap::spherical(x, delta)),
    }
}

pub fn solve<F>(objective: F, x0: &DVector<f64>, bounds: &Bounds, cfg: &SolverConfig) -> Result<SolveOutcome>
where
    F: FnMut(&DVector<f64>) -> f64,
{
    solve_observed(objective, x0, bounds, cfg, |_: &IterationView| {})
}

/// [`solve`] with a callback invoked after every iteration.
pub fn solve_observed<F, O>(
    mut objective: F,
    x0: &DVector<f64>,
    bounds: &Bounds,
    cfg: &SolverConfig,
    mut observer: O,
) -> Result<SolveOutcome>
where
    F: FnMut(&DVector<f64>) -> f64,
    O: FnMut(&IterationView),
{
    cfg.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::Domain("empty starting point".into()));
    }
    if bounds.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bounds.dim(),
        });
    }
    if !bounds.contains(x0) {
        return Err(Error::Domain("starting point lies outside the box".into()));
    }

    let mut ledger = EvaluationLedger::new();
    if cfg.eval_budget == 0 {
        return Ok(SolveOutcome {
            x_best: x0.clone(),
            f_best: f64::INFINITY,
            x_final: x0.clone(),
            record: RunRecord {
                rows: Vec::new(),
                status: TerminalStatus::BudgetExhausted,
                evals_used: 0,
            },
            ledger,
        });
    }
    let (f0, _) = ledger.evaluate(x0, 0, &mut objective);
    if !f0.is_finite() {
        return Err(Error::Domain("objective is not finite at the starting point".into()));
    }
    let reached = |f: f64| cfg.target.is_some_and(|t| t.reached(f));
    let hessian = HessianEstimate::identity(n, cfg.mu2);
    let map = frame_map(cfg, &hessian, x0, cfg.delta0)?;
    let mut state = TrustRegionState {
        x_k: x0.clone(),
        f_k: f0,
        delta: cfg.delta0,
        hessian,
        map,
        ledger,
        k: 0,
    };
    let mut best = (x0.clone(), f0);
    let mut rows: Vec<IterationRow> = Vec::new();
    let mut metric = AnisotropicMetric::isotropic(n, (cfg.beta1 * cfg.beta2).sqrt());
    let mu1 = match cfg.algorithm {
        Algorithm::FullyLinear => cfg.mu1,
        Algorithm::Generic => GENERIC_MU1,
    };

    let status = if reached(f0) {
        TerminalStatus::TargetReached
    } else {
        loop {
            if state.k >= cfg.max_iterations {
                break TerminalStatus::Stalled;
            }
            if state.ledger.len() >= cfg.eval_budget {
                break TerminalStatus::BudgetExhausted;
            }
            let evals_at_start = state.ledger.len();
            let center = state.x_k.clone();
            let hessian_used = state.hessian.clone();
            state.map = frame_map(cfg, &state.hessian, &state.x_k, state.delta)?;
            let map = state.map.clone();
            let lambda = map.lambda();
            let k = state.k;

            let mut row = IterationRow {
                k,
                evals_used: 0,
                f_best: best.1,
                delta: state.delta,
                rho: f64::NAN,
                q: 0,
                fresh_count: 0,
                lambda,
            };
            let mut poisedness = None;
            let mut gradient_norm = None;
            let mut accepted = false;
            let mut stop: Option<TerminalStatus> = None;

            let mut candidates = PointSet::new(n);
            let mut candidate_values = Vec::new();
            for r in state.ledger.records() {
                if r.value.is_finite() && (&r.point - &state.x_k).norm() > DUPLICATE_TOLERANCE {
                    candidates.push(map.to_auxiliary(&r.point))?;
                    candidate_values.push(r.value);
                }
            }
            let expansion = expand2volume(&candidates, cfg.theta1, mu1)?;

            let mut set = InterpolationSet::new(n, state.f_k);
            for u in expansion.affine_subset.iter() {
                if let Some(i) = candidates.iter().position(|c| c == u) {
                    set.push(u.clone(), candidate_values[i], Provenance::Recycled)?;
                    continue;
                }
                if state.ledger.len() >= cfg.eval_budget {
                    stop = Some(TerminalStatus::BudgetExhausted);
                    break;
                }
                let raw = map.from_auxiliary(u);
                let x = bounds.clip(&raw);
                let u_eval = if x == raw { u.clone() } else { map.to_auxiliary(&x) };
                let (value, fresh) = state.ledger.evaluate(&x, k, &mut objective);
                if fresh {
                    row.fresh_count += 1;
                    if value < best.1 {
                        best = (x.clone(), value);
                    }
                }
                if value.is_finite() {
                    set.push(u_eval, value, Provenance::Fresh)?;
                }
                if reached(best.1) {
                    stop = Some(TerminalStatus::TargetReached);
                    break;
                }
            }

            if stop.is_none() {
                let extras: Vec<(DVector<f64>, f64)> = candidates
                    .iter()
                    .cloned()
                    .zip(candidate_values.iter().cloned())
                    .collect();
                set = recycle_extra_points(
                    &set,
                    &extras,
                    cfg.recycle_periphery,
                    cfg.q_max,
                    cfg.kernel,
                    &metric,
                );
                row.q = set.len();
                poisedness = Some(poisedness_report(&set));
                let model = fit_model(&set, state.f_k, cfg, &mut metric);
                match model {
                    None => {
                        row.rho = f64::NAN;
                        state.delta = update_radius(state.delta, f64::NAN, cfg);
                    }
                    Some(model) => {
                        let origin = DVector::zeros(n);
                        let g_u = model.gradient(&origin);
                        let gnorm = map.gradient_to_original(&g_u).norm();
                        gradient_norm = Some(gnorm);
                        let critical = cfg.algorithm == Algorithm::FullyLinear && gnorm <= 0.5 * cfg.eps_g;
                        if critical {
                            let radius = cfg.eps_g / (2.0 * cfg.kappa_g);
                            let check = check_fully_linear(
                                &set.affine_subset(),
                                radius / state.delta,
                                cfg.mu1,
                                cfg.theta1,
                            );
                            if check.passed {
                                stop = Some(TerminalStatus::GradientConverged);
                            } else {
                                state.delta = radius.clamp(cfg.delta_floor(), cfg.delta_max());
                            }
                        } else {
                            let seed = cfg
                                .rng_seed
                                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                                .wrapping_add(k as u64);
                            let s_u = solve_subproblem(&model, 1.0, seed);
                            let raw = map.from_auxiliary(&s_u);
                            let x_trial = bounds.clip(&raw);
                            let s_eval = if x_trial == raw { s_u } else { map.to_auxiliary(&x_trial) };
                            let predicted = model.predict(&origin) - model.predict(&s_eval);
                            let mut rho = -1.0;
                            if (&x_trial - &state.x_k).norm() > DUPLICATE_TOLERANCE {
                                if state.ledger.len() >= cfg.eval_budget
                                    && state.ledger.lookup(&x_trial).is_none()
                                {
                                    stop = Some(TerminalStatus::BudgetExhausted);
                                } else {
                                    let (f_trial, fresh) =
                                        state.ledger.evaluate(&x_trial, k, &mut objective);
                                    if fresh && f_trial < best.1 {
                                        best = (x_trial.clone(), f_trial);
                                    }
                                    rho = if !f_trial.is_finite() {
                                        f64::NEG_INFINITY
                                    } else if predicted.abs() < PREDICTION_GUARD {
                                        -1.0
                                    } else {
                                        (state.f_k - f_trial) / predicted
                                    };
                                    if f_trial.is_finite() && f_trial < state.f_k {
                                        accepted = true;
                                        update_curvature(&mut state, cfg, &map, &model, &s_eval, &x_trial);
                                        state.x_k = x_trial;
                                        state.f_k = f_trial;
                                    }
                                }
                            }
                            if stop.is_none() {
                                row.rho = rho;
                                state.delta = update_radius(state.delta, rho, cfg);
                            }
                        }
                    }
                }
            }

            row.evals_used = state.ledger.len();
            row.f_best = best.1;
            rows.push(row);
            observer(&IterationView {
                row: &row,
                center: &center,
                map: &map,
                hessian: &hessian_used,
                poisedness,
                model_gradient_norm: gradient_norm,
                accepted,
            });
            state.k += 1;

            if let Some(s) = stop {
                break s;
            }
            if reached(best.1) {
                break TerminalStatus::TargetReached;
            }
            if state.ledger.len() == evals_at_start && state.delta <= cfg.delta_floor() && !accepted {
                break TerminalStatus::Stalled;
            }
        }
    };

    let evals_used = state.ledger.len();
    Ok(SolveOutcome {
        x_best: best.0,
        f_best: best.1,
        x_final: state.x_k,
        record: RunRecord {
            rows,
            status,
            evals_used,
        },
        ledger: state.ledger,
    })
}

fn fit_model(
    set: &InterpolationSet,
    f_k: f64,
    cfg: &SolverConfig,
    metric: &mut AnisotropicMetric,
) -> Option<SurrogateModel> {
    let n = set.dim();
    if set.len() < n + 2 {
        return None;
    }
    let (points, values) = set.with_origin();
    let centred: Vec<f64> = values.iter().map(|v| v - f_k).collect();
    if let Ok(tuned) = tune_hyperparameters(&points, &centred, cfg.kernel, cfg.beta1, cfg.beta2) {
        *metric = tuned;
    }
    SurrogateModel::fit(&points, &centred, cfg.kernel, metric)
        .ok()
        .map(|(m, _)| m)
}

fn update_curvature(
    state: &mut TrustRegionState,
    cfg: &SolverConfig,
    map: &AffineMap,
    model: &SurrogateModel,
    s_u: &DVector<f64>,
    x_new: &DVector<f64>,
) {
    if cfg.frame == FrameMode::Spherical {
        return;
    }
    match cfg.hessian_source {
        HessianSource::Model => {
            let b_hat = map.hessian_to_original(&model.hessian(s_u));
            state.hessian = filter_hessian(&state.hessian, &b_hat).estimate;
        }
        HessianSource::Bfgs => {
            let s = x_new - &state.x_k;
            let y = map.gradient_to_original(&(model.gradient(s_u) - model.gradient(&DVector::zeros(s_u.len()))));
            let (b, _) = bfgs_update(&state.hessian.b, &s, &y);
            state.hessian.b = b;
        }
    }
}
