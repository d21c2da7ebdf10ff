//! Traveling-salesman application.
//!
//! Cities are 0-based internally and 1-based in every rendered form.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TspError {
    #[error("a tour needs at least 2 cities, got {0}")]
    TooFewCities(usize),
    #[error("row {row} has {found} entries, expected {expected}")]
    NotSquare { row: usize, found: usize, expected: usize },
    #[error("cell ({row}, {col}): diagonal entry must be 0, got {value}")]
    NonZeroDiagonal { row: usize, col: usize, value: f64 },
    #[error("cell ({row}, {col}): distance must be positive and finite, got {value}")]
    InvalidDistance { row: usize, col: usize, value: f64 },
    #[error("line {line}, column {column}: `{text}` is not a number")]
    Parse { line: usize, column: usize, text: String },
    #[error("start city {0} is out of range")]
    StartOutOfRange(usize),
    #[error("brute force is limited to 12 cities, got {0}")]
    TooLarge(usize),
    #[error("invalid ACO configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, TspError>;

/// Square distance table; asymmetric entries are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(TspError::TooFewCities(n));
        }
        let mut d = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(TspError::NotSquare { row: i + 1, found: row.len(), expected: n });
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    if v != 0.0 {
                        return Err(TspError::NonZeroDiagonal { row: i + 1, col: j + 1, value: v });
                    }
                } else if !(v.is_finite() && v > 0.0) {
                    return Err(TspError::InvalidDistance { row: i + 1, col: j + 1, value: v });
                }
                d.push(v);
            }
        }
        Ok(Self { n, d })
    }

    /// `n` lines of `n` comma-separated reals. Blank and `#` lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .enumerate()
                .map(|(col, cell)| {
                    cell.trim().parse::<f64>().map_err(|_| TspError::Parse {
                        line: idx + 1,
                        column: col + 1,
                        text: cell.trim().to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    /// The five-city instance used throughout the TSP comparison.
    pub fn five_city() -> Self {
        Self::new(vec![
            vec![0.0, 10.0, 12.0, 11.0, 14.0],
            vec![10.0, 0.0, 13.0, 15.0, 8.0],
            vec![12.0, 13.0, 0.0, 9.0, 14.0],
            vec![11.0, 15.0, 9.0, 0.0, 16.0],
            vec![15.0, 8.0, 14.0, 16.0, 0.0],
        ])
        .expect("static matrix is valid")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.d[from * self.n + to]
    }

    /// Edge sum along `sequence`, left to right.
    pub fn path_weight(&self, sequence: &[usize]) -> f64 {
        sequence.windows(2).map(|w| self.get(w[0], w[1])).sum()
    }

    fn check_start(&self, start: usize) -> Result<()> {
        if start >= self.n {
            return Err(TspError::StartOutOfRange(start + 1));
        }
        Ok(())
    }
}

/// A closed tour: `sequence` starts and ends at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub start: usize,
    pub sequence: Vec<usize>,
    pub weight: f64,
}

impl Tour {
    fn closed(m: &DistanceMatrix, mut sequence: Vec<usize>) -> Self {
        let start = sequence[0];
        sequence.push(start);
        let weight = m.path_weight(&sequence);
        Self { start, sequence, weight }
    }

    /// 1-based cities joined by `-`, e.g. `1-2-5-3-4-1`.
    pub fn label(&self) -> String {
        self.cities().map(|c| c.to_string()).collect::<Vec<_>>().join("-")
    }

    /// 1-based cities.
    pub fn cities(&self) -> impl Iterator<Item = usize> + '_ {
        self.sequence.iter().map(|c| c + 1)
    }

    /// Visits every city exactly once and returns to the start.
    pub fn is_hamiltonian(&self, n: usize) -> bool {
        if self.sequence.len() != n + 1
            || self.sequence.first() != Some(&self.start)
            || self.sequence.last() != Some(&self.start)
        {
            return false;
        }
        let mut seen = vec![false; n];
        for &c in &self.sequence[..n] {
            if c >= n || seen[c] {
                return false;
            }
            seen[c] = true;
        }
        true
    }
}

impl fmt::Display for Tour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cities: Vec<String> = self.cities().map(|c| c.to_string()).collect();
        write!(f, "{} weight = {}", cities.join(" "), self.weight)
    }
}

/// CSV rows `start,sequence,weight` with a header; sequence is `-` joined.
pub fn tours_to_csv(tours: &[Tour]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["start", "sequence", "weight"]).expect("in-memory write");
    for t in tours {
        w.write_record([(t.start + 1).to_string(), t.label(), t.weight.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// Greedily extends `prefix` to a full closed tour.
fn complete_greedy(m: &DistanceMatrix, prefix: Vec<usize>) -> Tour {
    let n = m.len();
    let mut visited = vec![false; n];
    for &c in &prefix {
        visited[c] = true;
    }
    let mut sequence = prefix;
    while sequence.len() < n {
        let here = *sequence.last().expect("prefix is non-empty");
        let mut next: Option<usize> = None;
        for (c, _) in visited.iter().enumerate().filter(|(_, seen)| !**seen) {
            // strict comparison keeps the lowest index on ties
            if next.is_none_or(|best| m.get(here, c) < m.get(here, best)) {
                next = Some(c);
            }
        }
        let c = next.expect("an unvisited city remains");
        visited[c] = true;
        sequence.push(c);
    }
    Tour::closed(m, sequence)
}

/// Nearest-neighbor tour from `start` (0-based).
pub fn nearest_neighbor_tour(m: &DistanceMatrix, start: usize) -> Result<Tour> {
    m.check_start(start)?;
    Ok(complete_greedy(m, vec![start]))
}

/// Smuggler pass over every start city.
#[derive(Debug, Clone, PartialEq)]
pub struct AllStarts {
    /// One tour per start city, in city order.
    pub tours: Vec<Tour>,
    pub best_weight: f64,
    /// 0-based start cities whose tour reaches `best_weight`.
    pub best_starts: Vec<usize>,
}

pub fn smuggler_all_starts(m: &DistanceMatrix) -> AllStarts {
    let tours: Vec<Tour> = (0..m.len()).map(|s| complete_greedy(m, vec![s])).collect();
    let best_weight = tours.iter().map(|t| t.weight).fold(f64::INFINITY, f64::min);
    let best_starts = tours
        .iter()
        .filter(|t| t.weight == best_weight)
        .map(|t| t.start)
        .collect();
    AllStarts { tours, best_weight, best_starts }
}

/// One greedy tour per forced first hop, ascending by that hop.
pub fn alternate_paths(m: &DistanceMatrix, start: usize) -> Result<Vec<Tour>> {
    m.check_start(start)?;
    Ok((0..m.len())
        .filter(|&c| c != start)
        .map(|c| complete_greedy(m, vec![start, c]))
        .collect())
}

pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Exhaustive optimum over tours from city 1; ties go to the
/// lexicographically smallest sequence.
pub fn brute_force_optimum(m: &DistanceMatrix) -> Result<Tour> {
    let n = m.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(TspError::TooLarge(n));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut path = vec![0];
    let mut used = vec![false; n];
    used[0] = true;
    permute(m, &mut path, &mut used, &mut best);
    let (_, sequence) = best.expect("n >= 2 yields at least one tour");
    Ok(Tour::closed(m, sequence))
}

// Depth-first in ascending city order, so the first tour to reach a weight is
// the lexicographically smallest one.
fn permute(
    m: &DistanceMatrix,
    path: &mut Vec<usize>,
    used: &mut [bool],
    best: &mut Option<(f64, Vec<usize>)>,
) {
    let n = m.len();
    if path.len() == n {
        let w = m.path_weight(path) + m.get(path[n - 1], path[0]);
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            *best = Some((w, path.clone()));
        }
        return;
    }
    for c in 0..n {
        if used[c] {
            continue;
        }
        used[c] = true;
        path.push(c);
        permute(m, path, used, best);
        path.pop();
        used[c] = false;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcoConfig {
    pub n_ants: usize,
    pub iterations: usize,
    /// Evaporation rate, strictly between 0 and 1.
    pub rho: f64,
    pub seed: u64,
}

impl Default for AcoConfig {
    fn default() -> Self {
        Self { n_ants: 3, iterations: 100, rho: 0.5, seed: crate::DEFAULT_SEED }
    }
}

impl AcoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ants == 0 {
            return Err(TspError::InvalidConfig("n_ants must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(TspError::InvalidConfig("iterations must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(TspError::InvalidConfig(format!("rho must be in (0, 1), got {}", self.rho)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcoRun {
    pub best: Tour,
    /// Best-so-far weight after each iteration.
    pub trace: Vec<f64>,
}

/// Minimal ant colony baseline; returns the best tour observed.
pub fn aco_baseline(m: &DistanceMatrix, cfg: &AcoConfig) -> Result<Tour> {
    aco_with_trace(m, cfg).map(|run| run.best)
}

/// Ant colony run with the best-so-far trace.
///
/// Every ant starts at city 1 and picks its next city with probability
/// proportional to `pheromone * (1 / distance)` over the unvisited cities,
/// by comparing one uniform draw with the cumulative probabilities. After all
/// ants finish, each deposits `1 / length` on its edges and then every edge
/// evaporates by `(1 - rho)`.
pub fn aco_with_trace(m: &DistanceMatrix, cfg: &AcoConfig) -> Result<AcoRun> {
    cfg.validate()?;
    let n = m.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let visibility: Vec<f64> = (0..n * n)
        .map(|k| if k / n == k % n { 0.0 } else { 1.0 / m.d[k] })
        .collect();
    let mut pheromone = vec![1.0; n * n];
    let mut best: Option<Tour> = None;
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut weights = vec![0.0; n];

    for _ in 0..cfg.iterations {
        let mut tours = Vec::with_capacity(cfg.n_ants);
        for _ in 0..cfg.n_ants {
            let mut visited = vec![false; n];
            let mut sequence = Vec::with_capacity(n + 1);
            sequence.push(0);
            visited[0] = true;
            while sequence.len() < n {
                let here = *sequence.last().expect("non-empty");
                let mut total = 0.0;
                for c in 0..n {
                    weights[c] = if visited[c] {
                        0.0
                    } else {
                        pheromone[here * n + c] * visibility[here * n + c]
                    };
                    total += weights[c];
                }
                let draw: f64 = rng.gen();
                let mut cumulative = 0.0;
                let mut chosen = None;
                for c in 0..n {
                    if visited[c] {
                        continue;
                    }
                    cumulative += weights[c] / total;
                    chosen = Some(c);
                    if draw <= cumulative {
                        break;
                    }
                }
                let c = chosen.expect("an unvisited city remains");
                visited[c] = true;
                sequence.push(c);
            }
            tours.push(Tour::closed(m, sequence));
        }
        for tour in &tours {
            let deposit = 1.0 / tour.weight;
            for w in tour.sequence.windows(2) {
                pheromone[w[0] * n + w[1]] += deposit;
            }
            if best.as_ref().is_none_or(|b| tour.weight < b.weight) {
                best = Some(tour.clone());
            }
        }
        for tau in pheromone.iter_mut() {
            *tau *= 1.0 - cfg.rho;
        }
        trace.push(best.as_ref().expect("at least one ant").weight);
    }
    Ok(AcoRun { best: best.expect("at least one iteration"), trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(d: f64) -> DistanceMatrix {
        DistanceMatrix::new(vec![vec![0.0, d], vec![d, 0.0]]).unwrap()
    }

    fn unit3() -> DistanceMatrix {
        DistanceMatrix::new(vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn nearest_neighbor_five_city() {
        let m = DistanceMatrix::five_city();
        let t = nearest_neighbor_tour(&m, 0).unwrap();
        assert_eq!(t.label(), "1-2-5-3-4-1");
        assert_eq!(t.weight, 52.0);
        let t = nearest_neighbor_tour(&m, 3).unwrap();
        assert_eq!(t.label(), "4-3-1-2-5-4");
        assert_eq!(t.weight, 55.0);
        assert_eq!(t.to_string(), "4 3 1 2 5 4 weight = 55");
    }

    #[test]
    fn two_city_tours() {
        let m = pair(7.0);
        let t = nearest_neighbor_tour(&m, 0).unwrap();
        assert_eq!(t.label(), "1-2-1");
        assert_eq!(t.weight, 14.0);
        assert_eq!(alternate_paths(&m, 0).unwrap(), vec![t]);
        assert_eq!(brute_force_optimum(&m).unwrap().weight, 14.0);
    }

    #[test]
    fn equilateral_all_weight_three() {
        let m = unit3();
        let all = smuggler_all_starts(&m);
        assert!(all.tours.iter().all(|t| t.weight == 3.0));
        assert_eq!(all.best_starts, [0, 1, 2]);
        assert_eq!(brute_force_optimum(&m).unwrap().weight, 3.0);
    }

    #[test]
    fn five_city_all_starts() {
        let all = smuggler_all_starts(&DistanceMatrix::five_city());
        let weights: Vec<f64> = all.tours.iter().map(|t| t.weight).collect();
        assert_eq!(weights, [52.0, 52.0, 52.0, 55.0, 52.0]);
        assert_eq!(all.best_weight, 52.0);
        assert_eq!(all.best_starts, [0, 1, 2, 4]);
    }

    #[test]
    fn five_city_alternates() {
        let m = DistanceMatrix::five_city();
        let w = |s| alternate_paths(&m, s).unwrap().iter().map(|t| t.weight).collect::<Vec<_>>();
        assert_eq!(w(0), [52.0, 59.0, 56.0, 55.0]);
        assert_eq!(w(4), [63.0, 52.0, 52.0, 55.0]);
    }

    #[test]
    fn out_of_range_start() {
        let m = DistanceMatrix::five_city();
        assert_eq!(nearest_neighbor_tour(&m, 5), Err(TspError::StartOutOfRange(6)));
        assert_eq!(alternate_paths(&m, 9), Err(TspError::StartOutOfRange(10)));
    }

    #[test]
    fn matrix_validation() {
        assert_eq!(DistanceMatrix::new(vec![vec![0.0]]), Err(TspError::TooFewCities(1)));
        assert!(matches!(
            DistanceMatrix::new(vec![vec![0.0, 1.0], vec![1.0]]),
            Err(TspError::NotSquare { row: 2, .. })
        ));
        assert!(matches!(
            DistanceMatrix::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]]),
            Err(TspError::NonZeroDiagonal { row: 1, col: 1, .. })
        ));
        assert!(matches!(
            DistanceMatrix::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]]),
            Err(TspError::InvalidDistance { row: 1, col: 2, .. })
        ));
        assert_eq!(
            DistanceMatrix::from_csv("0, 3\n3, abc\n"),
            Err(TspError::Parse { line: 2, column: 2, text: "abc".into() })
        );
        let parsed = DistanceMatrix::from_csv("# five\n0,10,12,11,14\n10,0,13,15,8\n12,13,0,9,14\n11,15,9,0,16\n15,8,14,16,0\n").unwrap();
        assert_eq!(parsed, DistanceMatrix::five_city());
    }

    #[test]
    fn brute_force_guard() {
        let rows = (0..13)
            .map(|i| (0..13).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let m = DistanceMatrix::new(rows).unwrap();
        assert_eq!(brute_force_optimum(&m), Err(TspError::TooLarge(13)));
    }

    #[test]
    fn aco_config_checks() {
        let m = DistanceMatrix::five_city();
        let bad = AcoConfig { rho: 1.0, ..AcoConfig::default() };
        assert!(matches!(aco_baseline(&m, &bad), Err(TspError::InvalidConfig(_))));
        let bad = AcoConfig { n_ants: 0, ..AcoConfig::default() };
        assert!(aco_baseline(&m, &bad).is_err());
    }

    #[test]
    fn aco_is_seed_deterministic() {
        let m = DistanceMatrix::five_city();
        let cfg = AcoConfig { seed: 11, ..AcoConfig::default() };
        assert_eq!(aco_with_trace(&m, &cfg).unwrap(), aco_with_trace(&m, &cfg).unwrap());
    }

    #[test]
    fn csv_output() {
        let all = smuggler_all_starts(&DistanceMatrix::five_city());
        let csv = tours_to_csv(&all.tours);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("start,sequence,weight"));
        assert_eq!(lines.next(), Some("1,1-2-5-3-4-1,52"));
    }
}
