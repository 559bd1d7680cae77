//! Benchmark harness: runs problem × method × seed matrices of the
//! trust-region solver and the Nelder-Mead baseline, writes per-run
//! convergence histories (CSV) and a summary with medians (JSON).
//!
//! History columns: `evals_used,gap` where `gap = f_best - f_star`.
//! Summary fields are those of [`Summary`], [`RunSummary`] and [`MedianRow`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dfo_core::solver::{solve, RunRecord, SolverConfig, Target, TerminalStatus, Variant};
use dfo_core::testbed::{find_problem, nelder_mead, problem_suite, BenchmarkProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const HISTORY_HEADER: [&str; 2] = ["evals_used", "gap"];
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTORY_DIR: &str = "histories";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error at {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("run {problem}/{method}/seed {seed} failed: {source}")]
    Run {
        problem: String,
        method: Method,
        seed: u64,
        #[source]
        source: dfo_core::Error,
    },
}

pub type Result<T> = std::result::Result<T, BenchError>;

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A solver variant or the Nelder-Mead baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    V1,
    V2,
    V3,
    V4,
    #[serde(rename = "NM")]
    NelderMead,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::V1, Method::V2, Method::V3, Method::V4, Method::NelderMead];

    pub fn name(self) -> &'static str {
        match self {
            Method::V1 => "V1",
            Method::V2 => "V2",
            Method::V3 => "V3",
            Method::V4 => "V4",
            Method::NelderMead => "NM",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::V1 => Some(Variant::V1),
            Method::V2 => Some(Variant::V2),
            Method::V3 => Some(Variant::V3),
            Method::V4 => Some(Variant::V4),
            Method::NelderMead => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "V1" => Ok(Method::V1),
            "V2" => Ok(Method::V2),
            "V3" => Ok(Method::V3),
            "V4" => Ok(Method::V4),
            "NM" | "NMSMAX" | "NELDER-MEAD" => Ok(Method::NelderMead),
            _ => Err(BenchError::Config(format!(
                "unknown method {s:?}; expected one of V1, V2, V3, V4, NM"
            ))),
        }
    }
}

/// Published evaluation counts for the reference table, in the order
/// V1, V2, V3, V4, ORBIT, NMSMAX.
const REFERENCE_EVALS: [(&str, [u32; 6]); 24] = [
    ("BEALE", [28, 25, 32, 42, 419, 63]),
    ("BRANIN", [24, 25, 32, 36, 53, 56]),
    ("ROSENBROCK2", [37, 37, 33, 39, 838, 100]),
    ("SCHWEFEL36", [26, 25, 26, 32, 69, 69]),
    ("GULF", [494, 159, 165, 226, 1000, 389]),
    ("HART3", [52, 46, 49, 69, 348, 129]),
    ("HELIX", [53, 42, 48, 48, 443, 115]),
    ("ROSENBROCK3", [77, 68, 80, 88, 1000, 176]),
    ("SCHWEFEL4_3", [55, 46, 41, 67, 77, 93]),
    ("BROWNDEN", [118, 84, 112, 121, 398, 236]),
    ("HART4", [50, 42, 48, 38, 62, 122]),
    ("POWELL4", [201, 92, 104, 148, 615, 366]),
    ("ROSENBROCK4", [136, 111, 143, 144, 1000, 332]),
    ("SCHWEFEL4_4", [63, 61, 62, 74, 112, 156]),
    ("WOOD", [166, 79, 85, 109, 255, 217]),
    ("BIGGS6", [660, 294, 243, 529, 156, 1000]),
    ("HART6", [104, 116, 95, 107, 139, 179]),
    ("ROSENBROCK6", [302, 257, 264, 435, 1000, 818]),
    ("SCHWEFEL4_6", [124, 116, 111, 169, 173, 221]),
    ("TRID6", [405, 206, 205, 194, 399, 541]),
    ("WATSON6", [117, 83, 97, 119, 222, 305]),
    ("POWELL8", [168, 135, 139, 151, 225, 410]),
    ("ROSENBROCK8", [912, 648, 624, 769, 1000, 1000]),
    ("TRID8", [1000, 648, 585, 778, 1000, 1000]),
];

/// Published evaluation count for `problem` under `method`, if tabulated.
pub fn reference_evals(problem: &str, method: Method) -> Option<u32> {
    let column = match method {
        Method::V1 => 0,
        Method::V2 => 1,
        Method::V3 => 2,
        Method::V4 => 3,
        Method::NelderMead => 5,
    };
    REFERENCE_EVALS
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(problem))
        .map(|(_, row)| row[column])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Problem names; empty means the whole suite.
    pub problems: Vec<String>,
    pub methods: Vec<Method>,
    pub budget: usize,
    pub tolerance: f64,
    /// Initial radius (and Nelder-Mead simplex size) for problems without
    /// an override.
    pub default_delta0: f64,
    pub delta0: BTreeMap<String, f64>,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            problems: Vec::new(),
            methods: vec![Method::V1, Method::V2, Method::V3, Method::V4, Method::NelderMead],
            budget: 1000,
            tolerance: 1e-6,
            default_delta0: 1.0,
            delta0: BTreeMap::new(),
            seeds: (1..=5).collect(),
            output_dir: None,
        }
    }
}

impl BenchConfig {
    /// Resolves problem names against the suite, failing on unknown names,
    /// bad tolerances or budgets, and overrides naming unknown problems.
    pub fn resolve(&self) -> Result<Vec<BenchmarkProblem>> {
        if !(self.tolerance > 0.0) {
            return Err(BenchError::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.budget == 0 {
            return Err(BenchError::Config("budget must be at least 1".into()));
        }
        if self.methods.is_empty() || self.seeds.is_empty() {
            return Err(BenchError::Config("need at least one method and one seed".into()));
        }
        let all = [self.default_delta0]
            .into_iter()
            .chain(self.delta0.values().copied());
        for d in all {
            if !(d > 0.0 && d.is_finite()) {
                return Err(BenchError::Config(format!("initial radius must be positive, got {d}")));
            }
        }
        for name in self.delta0.keys() {
            if find_problem(name).is_none() {
                return Err(BenchError::Config(format!("override names unknown problem {name:?}")));
            }
        }
        if self.problems.is_empty() {
            return Ok(problem_suite());
        }
        self.problems
            .iter()
            .map(|name| {
                find_problem(name).ok_or_else(|| BenchError::Config(format!("unknown problem {name:?}")))
            })
            .collect()
    }

    pub fn delta0_for(&self, problem: &str) -> f64 {
        self.delta0
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(problem))
            .map_or(self.default_delta0, |(_, d)| *d)
    }
}

/// Reads a JSON object mapping problem names to initial radii.
pub fn load_delta0_overrides(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    serde_json::from_str(&text).map_err(|source| BenchError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub n: usize,
    pub method: Method,
    pub seed: u64,
    pub delta0: f64,
    pub evals: usize,
    pub f_best: f64,
    /// `|f_best - f_star|`.
    pub gap: f64,
    pub status: TerminalStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub problem: String,
    pub n: usize,
    pub method: Method,
    pub median_evals: f64,
    pub median_gap: f64,
    pub reached: usize,
    pub runs: usize,
    pub reference_evals: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub budget: usize,
    pub tolerance: f64,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
    pub medians: Vec<MedianRow>,
}

impl Summary {
    pub fn median(&self, problem: &str, method: Method) -> Option<&MedianRow> {
        self.medians
            .iter()
            .find(|m| m.method == method && m.problem.eq_ignore_ascii_case(problem))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub f_star: f64,
    pub record: RunRecord,
}

/// Runs one (problem, method, seed) combination.
pub fn run_single(
    problem: &BenchmarkProblem,
    method: Method,
    seed: u64,
    delta0: f64,
    budget: usize,
    tolerance: f64,
) -> Result<RunResult> {
    let target = Target {
        f_star: problem.f_star,
        tolerance,
    };
    let x0 = problem.start();
    let failed = |source| BenchError::Run {
        problem: problem.name.to_string(),
        method,
        seed,
        source,
    };
    let (f_best, record) = match method.variant() {
        Some(v) => {
            let cfg = SolverConfig {
                delta0,
                eval_budget: budget,
                rng_seed: seed,
                target: Some(target),
                ..SolverConfig::variant(v)
            };
            let out = solve(|x| problem.eval(x), &x0, &problem.bounds(), &cfg).map_err(failed)?;
            (out.f_best, out.record)
        }
        None => {
            let out = nelder_mead(|x| problem.eval(x), &x0, delta0, budget, Some(target)).map_err(failed)?;
            (out.f_best, out.record)
        }
    };
    Ok(RunResult {
        summary: RunSummary {
            problem: problem.name.to_string(),
            n: problem.n,
            method,
            seed,
            delta0,
            evals: record.evals_used,
            f_best,
            gap: (f_best - problem.f_star).abs(),
            status: record.status,
            iterations: record.rows.len(),
        },
        f_star: problem.f_star,
        record,
    })
}

/// Runs every combination in parallel and returns the results in
/// (problem, method, seed) order.
pub fn execute(cfg: &BenchConfig) -> Result<Vec<RunResult>> {
    let problems = cfg.resolve()?;
    let jobs: Vec<(&BenchmarkProblem, Method, u64)> = problems
        .iter()
        .flat_map(|p| {
            cfg.methods
                .iter()
                .flat_map(move |&m| cfg.seeds.iter().map(move |&s| (p, m, s)))
        })
        .collect();
    jobs.par_iter()
        .map(|&(p, m, s)| run_single(p, m, s, cfg.delta0_for(p.name), cfg.budget, cfg.tolerance))
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

pub fn summarize(cfg: &BenchConfig, results: &[RunResult]) -> Summary {
    let mut groups: BTreeMap<(String, usize, Method), Vec<&RunSummary>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in results {
        let key = (r.summary.problem.clone(), r.summary.n, r.summary.method);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(&r.summary);
    }
    let medians = order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let mut evals: Vec<f64> = rows.iter().map(|r| r.evals as f64).collect();
            let mut gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
            MedianRow {
                reference_evals: reference_evals(&key.0, key.2),
                problem: key.0,
                n: key.1,
                method: key.2,
                median_evals: median(&mut evals),
                median_gap: median(&mut gaps),
                reached: rows
                    .iter()
                    .filter(|r| r.status == TerminalStatus::TargetReached)
                    .count(),
                runs: rows.len(),
            }
        })
        .collect();
    Summary {
        budget: cfg.budget,
        tolerance: cfg.tolerance,
        seeds: cfg.seeds.clone(),
        runs: results.iter().map(|r| r.summary.clone()).collect(),
        medians,
    }
}

pub fn history_file_name(run: &RunSummary) -> String {
    format!("{}_{}_seed{}.csv", run.problem, run.method, run.seed)
}

/// Writes `(evals_used, f_best - f_star)` per iteration as CSV.
pub fn export_history(record: &RunRecord, f_star: f64, path: &Path) -> Result<()> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_error(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(HISTORY_HEADER).map_err(csv_err)?;
    for row in &record.rows {
        w.write_record([row.evals_used.to_string(), format!("{:e}", row.f_best - f_star)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_error(path))
}

/// Runs the matrix and, when an output directory is set, writes the
/// summary and one history per run after all runs have finished.
pub fn run_matrix(cfg: &BenchConfig) -> Result<Summary> {
    let results = execute(cfg)?;
    let summary = summarize(cfg, &results);
    if let Some(dir) = &cfg.output_dir {
        let hist = dir.join(HISTORY_DIR);
        fs::create_dir_all(&hist).map_err(io_error(&hist))?;
        for r in &results {
            export_history(&r.record, r.f_star, &hist.join(history_file_name(&r.summary)))?;
        }
        let path = dir.join(SUMMARY_FILE);
        fs::write(&path, summary.to_json()).map_err(io_error(&path))?;
    }
    Ok(summary)
}

/// Plain-text table of the medians.
pub fn format_table(summary: &Summary) -> String {
    let mut out = format!(
        "{:<14} {:>2} {:<3} {:>8} {:>10} {:>7} {:>5}\n",
        "problem", "n", "m", "evals", "gap", "reached", "ref"
    );
    for m in &summary.medians {
        let reference = m.reference_evals.map_or("-".to_string(), |r| r.to_string());
        out.push_str(&format!(
            "{:<14} {:>2} {:<3} {:>8} {:>10.2e} {:>4}/{:<2} {:>5}\n",
            m.problem, m.n, m.method, m.median_evals, m.median_gap, m.reached, m.runs, reference
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("V5".parse::<Method>().is_err());
    }

    #[test]
    fn every_suite_problem_has_reference_counts() {
        for p in problem_suite() {
            assert!(reference_evals(p.name, Method::V1).is_some(), "{}", p.name);
        }
        assert_eq!(reference_evals("rosenbrock2", Method::V1), Some(37));
        assert_eq!(reference_evals("ROSENBROCK8", Method::NelderMead), Some(1000));
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn unknown_names_rejected_before_running() {
        let cfg = BenchConfig {
            problems: vec!["ROSENBROCK2".into(), "NOPE".into()],
            ..BenchConfig::default()
        };
        assert!(matches!(cfg.resolve(), Err(BenchError::Config(_))));
        let cfg = BenchConfig {
            delta0: BTreeMap::from([("NOPE".to_string(), 1.0)]),
            ..BenchConfig::default()
        };
        assert!(matches!(cfg.resolve(), Err(BenchError::Config(_))));
    }

    #[test]
    fn invalid_budget_and_tolerance() {
        let bad = [
            BenchConfig {
                budget: 0,
                ..BenchConfig::default()
            },
            BenchConfig {
                tolerance: 0.0,
                ..BenchConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.resolve(), Err(BenchError::Config(_))));
        }
    }

    #[test]
    fn override_lookup_is_case_insensitive() {
        let cfg = BenchConfig {
            delta0: BTreeMap::from([("wood".to_string(), 0.5)]),
            ..BenchConfig::default()
        };
        assert_eq!(cfg.delta0_for("WOOD"), 0.5);
        assert_eq!(cfg.delta0_for("BEALE"), 1.0);
    }
}
