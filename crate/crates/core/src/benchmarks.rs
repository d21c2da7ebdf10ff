//! Classical benchmark functions and the random-population smuggler used to
//! evaluate them.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("expected a point of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point has a non-finite component at index {0}")]
    NonFinite(usize),
    #[error("{0} is out of scope: no closed form is available for it")]
    OutOfScope(String),
    #[error("unknown benchmark function `{0}`")]
    Unknown(String),
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionId {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F11,
    F13,
}

impl FunctionId {
    pub const ALL: [FunctionId; 10] = [
        FunctionId::F1,
        FunctionId::F2,
        FunctionId::F3,
        FunctionId::F4,
        FunctionId::F5,
        FunctionId::F6,
        FunctionId::F7,
        FunctionId::F8,
        FunctionId::F11,
        FunctionId::F13,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionId::F1 => "Sphere",
            FunctionId::F2 => "Schwefel 2.22",
            FunctionId::F3 => "Schwefel 1.2",
            FunctionId::F4 => "Generalized Rosenbrock",
            FunctionId::F5 => "Generalized Schwefel 2.26",
            FunctionId::F6 => "Generalized Rastrigin",
            FunctionId::F7 => "Ackley",
            FunctionId::F8 => "Generalized Griewank",
            FunctionId::F11 => "Six-hump Camel Back",
            FunctionId::F13 => "Goldstein-Price",
        }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for FunctionId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        if let Some(id) = FunctionId::ALL.iter().find(|id| id.to_string() == key) {
            return Ok(*id);
        }
        match key.as_str() {
            "F9" | "F10" | "F12" | "F14" | "F15" => Err(BenchError::OutOfScope(key)),
            _ => Err(BenchError::Unknown(s.trim().to_string())),
        }
    }
}

/// A benchmark with its search box and published optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkFunction {
    pub id: FunctionId,
    pub dimension: usize,
    /// Same closed interval on every coordinate.
    pub bounds: (f64, f64),
    pub known_optimum: f64,
    pub known_solutions: Vec<Vec<f64>>,
}

impl BenchmarkFunction {
    pub fn new(id: FunctionId) -> Self {
        use FunctionId::*;
        let (dimension, bounds, known_optimum, solutions): (usize, (f64, f64), f64, Vec<Vec<f64>>) =
            match id {
                F1 => (30, (-100.0, 100.0), 0.0, vec![vec![0.0; 30]]),
                F2 => (30, (-10.0, 10.0), 0.0, vec![vec![0.0; 30]]),
                F3 => (30, (-100.0, 100.0), 0.0, vec![vec![0.0; 30]]),
                F4 => (30, (-30.0, 30.0), 0.0, vec![vec![1.0; 30]]),
                F5 => (30, (-500.0, 500.0), -12569.487, vec![vec![420.9687; 30]]),
                F6 => (30, (-5.12, 5.12), 0.0, vec![vec![0.0; 30]]),
                F7 => (30, (-32.0, 32.0), 0.0, vec![vec![0.0; 30]]),
                F8 => (30, (-600.0, 600.0), 0.0, vec![vec![0.0; 30]]),
                F11 => (
                    2,
                    (-5.0, 5.0),
                    -1.0316285,
                    vec![vec![0.08983, -0.7126], vec![-0.08983, 0.7126]],
                ),
                F13 => (2, (-2.0, 2.0), 3.0, vec![vec![0.0, -1.0]]),
            };
        Self { id, dimension, bounds, known_optimum, known_solutions: solutions }
    }

    pub fn all() -> Vec<Self> {
        FunctionId::ALL.iter().map(|&id| Self::new(id)).collect()
    }

    /// Closed-form value at `x`. Points outside the bounds are still evaluated.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(BenchError::DimensionMismatch { expected: self.dimension, found: x.len() });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(BenchError::NonFinite(i));
        }
        Ok(raw_value(self.id, x))
    }
}

fn raw_value(id: FunctionId, x: &[f64]) -> f64 {
    let n = x.len() as f64;
    match id {
        FunctionId::F1 => x.iter().map(|v| v * v).sum(),
        FunctionId::F2 => {
            x.iter().map(|v| v.abs()).sum::<f64>() + x.iter().map(|v| v.abs()).product::<f64>()
        }
        FunctionId::F3 => {
            let mut prefix = 0.0;
            x.iter()
                .map(|v| {
                    prefix += v;
                    prefix * prefix
                })
                .sum()
        }
        FunctionId::F4 => x
            .windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
            .sum(),
        FunctionId::F5 => -x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>(),
        FunctionId::F6 => x
            .iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
            .sum(),
        FunctionId::F7 => {
            let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
            let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
            -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
        }
        FunctionId::F8 => {
            let sum = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
            let prod: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                .product();
            sum - prod + 1.0
        }
        FunctionId::F11 => {
            let (a, b) = (x[0], x[1]);
            4.0 * a * a - 2.1 * a.powi(4) + a.powi(6) / 3.0 + a * b - 4.0 * b * b + 4.0 * b.powi(4)
        }
        FunctionId::F13 => {
            let (a, b) = (x[0], x[1]);
            let first = 1.0
                + (a + b + 1.0).powi(2)
                    * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
            let second = 30.0
                + (2.0 * a - 3.0 * b).powi(2)
                    * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
            first * second
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Best-so-far value after each sample.
    pub trace: Vec<f64>,
}

fn draw(rng: &mut ChaCha8Rng, bounds: (f64, f64), point: &mut [f64]) {
    let (lo, hi) = bounds;
    for v in point.iter_mut() {
        *v = rng.gen_range(lo..=hi);
    }
}

/// The points [`random_search_smuggler`] evaluates for the same arguments.
pub fn sample_points(f: &BenchmarkFunction, population_size: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..population_size)
        .map(|_| {
            let mut p = vec![0.0; f.dimension];
            draw(&mut rng, f.bounds, &mut p);
            p
        })
        .collect()
}

/// Uniform random population in the search box; keeps the minimizer.
pub fn random_search_smuggler(
    f: &BenchmarkFunction,
    population_size: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if population_size == 0 {
        return Err(BenchError::ZeroCount("population_size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_point = Vec::new();
    let mut best_value = f64::INFINITY;
    let mut trace = Vec::with_capacity(population_size);
    let mut point = vec![0.0; f.dimension];
    for _ in 0..population_size {
        draw(&mut rng, f.bounds, &mut point);
        let value = raw_value(f.id, &point);
        if value < best_value || best_point.is_empty() {
            best_value = value;
            best_point.clone_from(&point);
        }
        trace.push(best_value);
    }
    Ok(SearchOutcome { best_point, best_value, trace })
}

/// Aggregate of independent smuggler runs on one function.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStatistics {
    pub function: FunctionId,
    pub runs: usize,
    pub population_size: usize,
    pub avg: f64,
    /// Population standard deviation (divides by `runs`).
    pub stddev: f64,
    pub best_overall: f64,
    pub bests: Vec<f64>,
}

/// Runs `runs` searches with seeds `base_seed + k`.
pub fn run_statistics(
    f: &BenchmarkFunction,
    runs: usize,
    population_size: usize,
    base_seed: u64,
) -> Result<RunStatistics> {
    if runs == 0 {
        return Err(BenchError::ZeroCount("runs"));
    }
    let seeds: Vec<u64> = (0..runs as u64).map(|k| base_seed.wrapping_add(k)).collect();
    run_statistics_with_seeds(f, population_size, &seeds)
}

/// Same as [`run_statistics`] with an explicit seed per run.
pub fn run_statistics_with_seeds(
    f: &BenchmarkFunction,
    population_size: usize,
    seeds: &[u64],
) -> Result<RunStatistics> {
    if seeds.is_empty() {
        return Err(BenchError::ZeroCount("runs"));
    }
    let bests = seeds
        .iter()
        .map(|&s| random_search_smuggler(f, population_size, s).map(|o| o.best_value))
        .collect::<Result<Vec<f64>>>()?;
    let n = bests.len() as f64;
    let avg = bests.iter().sum::<f64>() / n;
    let stddev = (bests.iter().map(|b| (b - avg).powi(2)).sum::<f64>() / n).sqrt();
    let best_overall = bests.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RunStatistics {
        function: f.id,
        runs: bests.len(),
        population_size,
        avg,
        stddev,
        best_overall,
        bests,
    })
}

pub fn statistics_to_csv(rows: &[RunStatistics]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["function", "runs", "population_size", "avg", "stddev", "best_overall"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.function.to_string(),
            r.runs.to_string(),
            r.population_size.to_string(),
            r.avg.to_string(),
            r.stddev.to_string(),
            r.best_overall.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// Two lines per function (`Avg` then `StdDev`), like a results table.
pub fn statistics_to_text(rows: &[RunStatistics]) -> String {
    let mut out = format!("{:<8}{:<11}{:>16}\n", "BenFun", "Statistic", "DSO");
    for r in rows {
        out.push_str(&format!("{:<8}{:<11}{:>16.4e}\n", r.function.to_string(), "Avg", r.avg));
        out.push_str(&format!("{:<8}{:<11}{:>16.4e}\n", "", "StdDev", r.stddev));
    }
    out
}
