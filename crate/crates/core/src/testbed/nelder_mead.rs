//! Classic Nelder-Mead downhill simplex started from a regular simplex.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::regsim;
use crate::solver::{IterationRow, RunRecord, Target, TerminalStatus};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
/// Size-based stop, used only when no target is given.
const SIZE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome {
    pub x_best: DVector<f64>,
    pub f_best: f64,
    pub record: RunRecord,
}

struct Counter<'a, F> {
    objective: &'a mut F,
    evals: usize,
    budget: usize,
    best: (DVector<f64>, f64),
}

impl<F: FnMut(&DVector<f64>) -> f64> Counter<'_, F> {
    fn call(&mut self, x: &DVector<f64>) -> f64 {
        self.evals += 1;
        let v = (self.objective)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best.1 {
            self.best = (x.clone(), v);
        }
        v
    }

    fn left(&self) -> usize {
        self.budget - self.evals
    }
}

/// Minimises `objective` from a regular simplex of circumradius
/// `initial_size` centred at `x0`. With a target the size-based stop is
/// disabled and the run ends on the target or the budget.
pub fn nelder_mead<F>(
    mut objective: F,
    x0: &DVector<f64>,
    initial_size: f64,
    budget: usize,
    target: Option<Target>,
) -> Result<NelderMeadOutcome>
where
    F: FnMut(&DVector<f64>) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return Err(Error::Domain("empty starting point".into()));
    }
    if !(initial_size > 0.0) {
        return Err(Error::Domain(format!("initial size must be positive, got {initial_size}")));
    }
    let reached = |f: f64| target.is_some_and(|t| t.reached(f));
    let mut counter = Counter {
        objective: &mut objective,
        evals: 0,
        budget,
        best: (x0.clone(), f64::INFINITY),
    };
    let mut rows = Vec::new();

    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut status = None;
    for v in regsim(n, n)?.iter() {
        if counter.left() == 0 {
            status = Some(TerminalStatus::BudgetExhausted);
            break;
        }
        let x = x0 + v * initial_size;
        let f = counter.call(&x);
        simplex.push((x, f));
        if reached(counter.best.1) {
            status = Some(TerminalStatus::TargetReached);
            break;
        }
    }

    let mut k = 0;
    let status = match status {
        Some(s) => s,
        None => loop {
            if reached(counter.best.1) {
                break TerminalStatus::TargetReached;
            }
            if counter.left() < 2 {
                break TerminalStatus::BudgetExhausted;
            }
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex
                .iter()
                .skip(1)
                .map(|(x, _)| (x - &simplex[0].0).amax())
                .fold(0.0, f64::max);
            if target.is_none() && diameter <= SIZE_TOL * simplex[0].0.amax().max(1.0) {
                break TerminalStatus::Stalled;
            }
            let before = counter.evals;
            step(&mut simplex, &mut counter);
            rows.push(IterationRow {
                k,
                evals_used: counter.evals,
                f_best: counter.best.1,
                delta: diameter,
                rho: f64::NAN,
                q: n + 1,
                fresh_count: counter.evals - before,
                lambda: f64::NAN,
            });
            k += 1;
        },
    };

    let evals_used = counter.evals;
    let (x_best, f_best) = counter.best;
    Ok(NelderMeadOutcome {
        x_best,
        f_best,
        record: RunRecord {
            rows,
            status,
            evals_used,
        },
    })
}

/// One reflection/expansion/contraction/shrink step on a sorted simplex.
fn step<F: FnMut(&DVector<f64>) -> f64>(simplex: &mut [(DVector<f64>, f64)], counter: &mut Counter<'_, F>) {
    let n = simplex.len() - 1;
    let centroid = simplex[..n]
        .iter()
        .fold(DVector::zeros(simplex[0].0.len()), |acc, (x, _)| acc + x)
        / n as f64;
    let (worst, f_worst) = simplex[n].clone();
    let f_best = simplex[0].1;
    let f_second = simplex[n - 1].1;

    let reflected = &centroid + (&centroid - &worst) * REFLECT;
    let f_r = counter.call(&reflected);
    if f_r < f_best {
        if counter.left() == 0 {
            simplex[n] = (reflected, f_r);
            return;
        }
        let expanded = &centroid + (&reflected - &centroid) * EXPAND;
        let f_e = counter.call(&expanded);
        simplex[n] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
        return;
    }
    if f_r < f_second {
        simplex[n] = (reflected, f_r);
        return;
    }
    if counter.left() == 0 {
        if f_r < f_worst {
            simplex[n] = (reflected, f_r);
        }
        return;
    }
    if f_r < f_worst {
        let outside = &centroid + (&reflected - &centroid) * CONTRACT;
        let f_c = counter.call(&outside);
        if f_c <= f_r {
            simplex[n] = (outside, f_c);
            return;
        }
        simplex[n] = (reflected, f_r);
    } else {
        let inside = &centroid + (&worst - &centroid) * CONTRACT;
        let f_c = counter.call(&inside);
        if f_c < f_worst {
            simplex[n] = (inside, f_c);
            return;
        }
    }
    let best = simplex[0].0.clone();
    for vertex in simplex.iter_mut().skip(1) {
        if counter.left() == 0 {
            return;
        }
        let x = &best + (&vertex.0 - &best) * SHRINK;
        let f = counter.call(&x);
        *vertex = (x, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_of_initial_simplex_only() {
        let x0 = DVector::from_vec(vec![1.0, 2.0]);
        let out = nelder_mead(|x: &DVector<f64>| x.norm_squared(), &x0, 0.5, 4, None).unwrap();
        assert!(out.record.rows.is_empty());
        assert_eq!(out.record.evals_used, 3);
        assert_eq!(out.record.status, TerminalStatus::BudgetExhausted);
    }

    #[test]
    fn quadratic_reaches_target() {
        let x0 = DVector::from_vec(vec![1.0, -0.5]);
        let target = Target {
            f_star: 0.0,
            tolerance: 1e-6,
        };
        let out = nelder_mead(
            |x: &DVector<f64>| (x[0] - 0.2).powi(2) + 3.0 * (x[1] + 0.1).powi(2),
            &x0,
            1.0,
            200,
            Some(target),
        )
        .unwrap();
        assert_eq!(out.record.status, TerminalStatus::TargetReached);
        assert!(out.record.evals_used <= 200);
    }
}
