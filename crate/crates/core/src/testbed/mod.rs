//! Unconstrained test problems with known minima and their traditional
//! starting points, plus a Nelder-Mead baseline.
//!
//! Formulas follow the Moré-Garbow-Hillstrom collection and the usual
//! global-optimisation definitions (Branin, Hartmann, Trid, Schwefel).
//! Minimum values without a closed form were computed by converging a
//! Levenberg-Marquardt or quasi-Newton solver from the known basin.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::Serialize;

use crate::solver::Bounds;

pub mod nelder_mead;

pub use nelder_mead::{nelder_mead, NelderMeadOutcome};

/// A test problem; `objective` takes plain coordinates.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub name: &'static str,
    pub n: usize,
    pub objective: fn(&[f64]) -> f64,
    pub x0: Vec<f64>,
    pub f_star: f64,
    /// A global minimiser, exact or accurate to about 1e-10.
    pub minimizer: Option<Vec<f64>>,
}

impl BenchmarkProblem {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        (self.objective)(x.as_slice())
    }

    pub fn start(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x0)
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::unbounded(self.n)
    }

    pub fn info(&self) -> ProblemInfo {
        ProblemInfo {
            name: self.name.to_string(),
            n: self.n,
            x0: self.x0.clone(),
            f_star: self.f_star,
        }
    }
}

/// Machine-readable manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInfo {
    pub name: String,
    pub n: usize,
    pub x0: Vec<f64>,
    pub f_star: f64,
}

pub fn beale(x: &[f64]) -> f64 {
    let y = [1.5, 2.25, 2.625];
    (0..3)
        .map(|i| {
            let r = y[i] - x[0] * (1.0 - x[1].powi(i as i32 + 1));
            r * r
        })
        .sum()
}

pub const BRANIN_MIN: f64 = 0.397_887_357_729_738_16;

pub fn branin(x: &[f64]) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    let r = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
    r * r + 10.0 * (1.0 - t) * x[0].cos() + 10.0
}

/// Chained form `Σ 100 (x_{i+1} − x_i²)² + (1 − x_i)²`.
pub fn rosenbrock_chained(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// Extended form: independent two-dimensional blocks.
pub fn rosenbrock_extended(x: &[f64]) -> f64 {
    x.chunks(2)
        .map(|b| 100.0 * (b[1] - b[0] * b[0]).powi(2) + (1.0 - b[0]).powi(2))
        .sum()
}

pub fn schwefel36(x: &[f64]) -> f64 {
    -x[0] * x[1] * (72.0 - 2.0 * x[0] - 2.0 * x[1])
}

pub fn gulf(x: &[f64]) -> f64 {
    (1..=99)
        .map(|i| {
            let t = i as f64 / 100.0;
            let y = 25.0 + (-50.0 * t.ln()).powf(2.0 / 3.0);
            let r = (-(y - x[1]).abs().powf(x[2]) / x[0]).exp() - t;
            r * r
        })
        .sum()
}

const HART_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HART3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const HART3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];
const HART6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HART6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann(x: &[f64], a: &[&[f64]; 4], p: &[&[f64]; 4]) -> f64 {
    -(0..4)
        .map(|i| {
            let e: f64 = x
                .iter()
                .enumerate()
                .map(|(j, xj)| a[i][j] * (xj - p[i][j]).powi(2))
                .sum();
            HART_ALPHA[i] * (-e).exp()
        })
        .sum::<f64>()
}

pub fn hart3(x: &[f64]) -> f64 {
    let a = [&HART3_A[0][..], &HART3_A[1][..], &HART3_A[2][..], &HART3_A[3][..]];
    let p = [&HART3_P[0][..], &HART3_P[1][..], &HART3_P[2][..], &HART3_P[3][..]];
    hartmann(x, &a, &p)
}

/// Four-dimensional restriction of the six-dimensional Hartmann data.
pub fn hart4(x: &[f64]) -> f64 {
    let a = [&HART6_A[0][..4], &HART6_A[1][..4], &HART6_A[2][..4], &HART6_A[3][..4]];
    let p = [&HART6_P[0][..4], &HART6_P[1][..4], &HART6_P[2][..4], &HART6_P[3][..4]];
    hartmann(x, &a, &p)
}

pub fn hart6(x: &[f64]) -> f64 {
    let a = [&HART6_A[0][..], &HART6_A[1][..], &HART6_A[2][..], &HART6_A[3][..]];
    let p = [&HART6_P[0][..], &HART6_P[1][..], &HART6_P[2][..], &HART6_P[3][..]];
    hartmann(x, &a, &p)
}

pub fn helix(x: &[f64]) -> f64 {
    let mut theta = (x[1] / x[0]).atan() / (2.0 * PI);
    if x[0] < 0.0 {
        theta += 0.5;
    }
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    100.0 * ((x[2] - 10.0 * theta).powi(2) + (r - 1.0).powi(2)) + x[2] * x[2]
}

/// `Σ (x_i − 1)² + (x_1 − x_i²)²`.
pub fn schwefel4(x: &[f64]) -> f64 {
    x.iter()
        .map(|xi| (xi - 1.0).powi(2) + (x[0] - xi * xi).powi(2))
        .sum()
}

pub fn brown_dennis(x: &[f64]) -> f64 {
    (1..=20)
        .map(|i| {
            let t = i as f64 / 5.0;
            let a = x[0] + t * x[1] - t.exp();
            let b = x[2] + x[3] * t.sin() - t.cos();
            (a * a + b * b).powi(2)
        })
        .sum()
}

/// Extended Powell singular function: independent four-dimensional blocks.
pub fn powell_singular(x: &[f64]) -> f64 {
    x.chunks(4)
        .map(|b| {
            (b[0] + 10.0 * b[1]).powi(2)
                + 5.0 * (b[2] - b[3]).powi(2)
                + (b[1] - 2.0 * b[2]).powi(4)
                + 10.0 * (b[0] - b[3]).powi(4)
        })
        .sum()
}

pub fn wood(x: &[f64]) -> f64 {
    100.0 * (x[1] - x[0] * x[0]).powi(2)
        + (1.0 - x[0]).powi(2)
        + 90.0 * (x[3] - x[2] * x[2]).powi(2)
        + (1.0 - x[2]).powi(2)
        + 10.1 * ((x[1] - 1.0).powi(2) + (x[3] - 1.0).powi(2))
        + 19.8 * (x[1] - 1.0) * (x[3] - 1.0)
}

pub fn biggs_exp6(x: &[f64]) -> f64 {
    (1..=13)
        .map(|i| {
            let t = 0.1 * i as f64;
            let y = (-t).exp() - 5.0 * (-10.0 * t).exp() + 3.0 * (-4.0 * t).exp();
            let r = x[2] * (-t * x[0]).exp() - x[3] * (-t * x[1]).exp() + x[5] * (-t * x[4]).exp() - y;
            r * r
        })
        .sum()
}

pub fn trid(x: &[f64]) -> f64 {
    let a: f64 = x.iter().map(|v| (v - 1.0).powi(2)).sum();
    let b: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
    a - b
}

pub fn watson(x: &[f64]) -> f64 {
    let n = x.len();
    let mut f = 0.0;
    for i in 1..=29 {
        let t = i as f64 / 29.0;
        let mut s1 = 0.0;
        let mut tp = 1.0;
        for (j, xj) in x.iter().enumerate().skip(1) {
            s1 += j as f64 * xj * tp;
            tp *= t;
        }
        let mut s2 = 0.0;
        tp = 1.0;
        for xj in x.iter().take(n) {
            s2 += xj * tp;
            tp *= t;
        }
        let r = s1 - s2 * s2 - 1.0;
        f += r * r;
    }
    f + x[0] * x[0] + (x[1] - x[0] * x[0] - 1.0).powi(2)
}

fn repeat(pattern: &[f64], n: usize) -> Vec<f64> {
    pattern.iter().cycle().take(n).cloned().collect()
}

fn trid_problem(n: usize) -> BenchmarkProblem {
    let nf = n as f64;
    BenchmarkProblem {
        name: if n == 6 { "TRID6" } else { "TRID8" },
        n,
        objective: trid,
        x0: vec![0.0; n],
        f_star: -nf * (nf + 4.0) * (nf - 1.0) / 6.0,
        minimizer: Some((1..=n).map(|i| (i * (n + 1 - i)) as f64).collect()),
    }
}

/// The full problem list, in a fixed order.
pub fn problem_suite() -> Vec<BenchmarkProblem> {
    let rosen = |name: &'static str, n: usize| BenchmarkProblem {
        name,
        n,
        objective: rosenbrock_extended,
        x0: repeat(&[-1.2, 1.0], n),
        f_star: 0.0,
        minimizer: Some(vec![1.0; n]),
    };
    let schwefel = |name: &'static str, n: usize| BenchmarkProblem {
        name,
        n,
        objective: schwefel4,
        x0: vec![0.0; n],
        f_star: 0.0,
        minimizer: Some(vec![1.0; n]),
    };
    let powell = |name: &'static str, n: usize| BenchmarkProblem {
        name,
        n,
        objective: powell_singular,
        x0: repeat(&[3.0, -1.0, 0.0, 1.0], n),
        f_star: 0.0,
        minimizer: Some(vec![0.0; n]),
    };
    vec![
        BenchmarkProblem {
            name: "BEALE",
            n: 2,
            objective: beale,
            x0: vec![1.0, 1.0],
            f_star: 0.0,
            minimizer: Some(vec![3.0, 0.5]),
        },
        BenchmarkProblem {
            name: "BRANIN",
            n: 2,
            objective: branin,
            x0: vec![2.5, 7.5],
            f_star: BRANIN_MIN,
            minimizer: Some(vec![PI, 2.275]),
        },
        rosen("ROSENBROCK2", 2),
        BenchmarkProblem {
            name: "ROSENBROCK3",
            n: 3,
            objective: rosenbrock_chained,
            x0: vec![-1.2, 1.0, -1.2],
            f_star: 0.0,
            minimizer: Some(vec![1.0; 3]),
        },
        rosen("ROSENBROCK4", 4),
        rosen("ROSENBROCK6", 6),
        rosen("ROSENBROCK8", 8),
        BenchmarkProblem {
            name: "SCHWEFEL36",
            n: 2,
            objective: schwefel36,
            x0: vec![10.0, 10.0],
            f_star: -3456.0,
            minimizer: Some(vec![12.0, 12.0]),
        },
        BenchmarkProblem {
            name: "GULF",
            n: 3,
            objective: gulf,
            x0: vec![5.0, 2.5, 0.15],
            f_star: 0.0,
            minimizer: Some(vec![50.0, 25.0, 1.5]),
        },
        BenchmarkProblem {
            name: "HART3",
            n: 3,
            objective: hart3,
            x0: vec![0.5; 3],
            f_star: -3.862_779_787_332_663,
            minimizer: Some(vec![0.114_588_868_591_379_44, 0.555_648_894_594_768_5, 0.852_546_983_992_308_8]),
        },
        BenchmarkProblem {
            name: "HART4",
            n: 4,
            objective: hart4,
            x0: vec![0.5; 4],
            f_star: -3.729_840_584_485_593_5,
            minimizer: Some(vec![
                0.187_395_273_974_383_3,
                0.194_151_528_208_548_95,
                0.557_917_779_637_585_2,
                0.264_779_623_422_314_5,
            ]),
        },
        BenchmarkProblem {
            name: "HART6",
            n: 6,
            objective: hart6,
            x0: vec![0.5; 6],
            f_star: -3.322_368_011_415_515,
            minimizer: Some(vec![
                0.201_689_512_840_881_66,
                0.150_010_691_215_734_68,
                0.476_873_975_520_047_34,
                0.275_332_430_951_074_6,
                0.311_651_617_462_712_86,
                0.657_300_532_965_973_2,
            ]),
        },
        BenchmarkProblem {
            name: "HELIX",
            n: 3,
            objective: helix,
            x0: vec![-1.0, 0.0, 0.0],
            f_star: 0.0,
            minimizer: Some(vec![1.0, 0.0, 0.0]),
        },
        schwefel("SCHWEFEL4_3", 3),
        schwefel("SCHWEFEL4_4", 4),
        schwefel("SCHWEFEL4_6", 6),
        BenchmarkProblem {
            name: "BROWNDEN",
            n: 4,
            objective: brown_dennis,
            x0: vec![25.0, 5.0, -5.0, -1.0],
            f_star: 85_822.201_626_356_84,
            minimizer: Some(vec![
                -11.594_439_409_429_848,
                13.203_629_856_637_955,
                -0.403_439_444_470_871_8,
                0.236_779_195_000_081_1,
            ]),
        },
        powell("POWELL4", 4),
        powell("POWELL8", 8),
        BenchmarkProblem {
            name: "WOOD",
            n: 4,
            objective: wood,
            x0: vec![-3.0, -1.0, -3.0, -1.0],
            f_star: 0.0,
            minimizer: Some(vec![1.0; 4]),
        },
        BenchmarkProblem {
            name: "BIGGS6",
            n: 6,
            objective: biggs_exp6,
            x0: vec![1.0, 2.0, 1.0, 1.0, 1.0, 1.0],
            f_star: 0.0,
            minimizer: Some(vec![1.0, 10.0, 1.0, 5.0, 4.0, 3.0]),
        },
        trid_problem(6),
        trid_problem(8),
        BenchmarkProblem {
            name: "WATSON6",
            n: 6,
            objective: watson,
            x0: vec![0.0; 6],
            f_star: 2.287_670_053_552_441_5e-3,
            minimizer: Some(vec![
                -0.015_725_079_085_787_186,
                1.012_434_870_999_948_4,
                -0.232_991_631_486_734_85,
                1.260_430_118_595_767_1,
                -1.513_728_962_152_631_5,
                0.992_996_460_441_684_5,
            ]),
        },
    ]
}

/// Looks a problem up by name, case-insensitively.
pub fn find_problem(name: &str) -> Option<BenchmarkProblem> {
    problem_suite()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
}

pub fn manifest() -> Vec<ProblemInfo> {
    problem_suite().iter().map(|p| p.info()).collect()
}
