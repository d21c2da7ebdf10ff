//! Smuggler pass: parametric fitness, constant-column filtering and ranking.
//!
//! A candidate's fitness is the ratio of two "sum plus product" terms: the
//! numerator is built from parameters that should be large (`Direct`), the
//! denominator from parameters that should be small (`Inverse`).
//!
//! ```text
//!          sum(direct) + prod(direct)
//! f(x) = ------------------------------
//!         sum(inverse) + prod(inverse)
//! ```
//!
//! An empty group contributes `1` to its side.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitnessError {
    #[error("no parameters to evaluate")]
    EmptySpecList,
    #[error("population has no solutions")]
    EmptyPopulation,
    #[error("duplicate parameter name `{0}`")]
    DuplicateParameter(String),
    #[error("duplicate solution id `{0}`")]
    DuplicateSolution(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("solution `{solution}` has no value for parameter `{parameter}`")]
    MissingParameter { solution: String, parameter: String },
    #[error("solution `{solution}` has unknown parameter `{parameter}`")]
    UnexpectedParameter { solution: String, parameter: String },
    #[error("solution `{solution}` has non-finite value for `{parameter}`")]
    NonFiniteValue { solution: String, parameter: String },
    #[error("unknown solution `{0}`")]
    UnknownSolution(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("inverse parameters of `{0}` sum to a zero denominator")]
    ZeroDenominator(String),
    #[error("fitness of `{0}` is not finite")]
    NonFiniteResult(String),
    #[error("every parameter is constant across all solutions")]
    AllParametersConstant,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, FitnessError>;

/// Whether a parameter pushes fitness up or down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Larger is better; numerator.
    Direct,
    /// Smaller is better; denominator.
    Inverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Direct => f.write_str("Direct"),
            Direction::Inverse => f.write_str("Inverse"),
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Direction::Direct),
            "inverse" => Ok(Direction::Inverse),
            other => Err(format!("unknown direction `{other}` (expected Direct or Inverse)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Objective {
    #[default]
    Maximize,
    Minimize,
}

impl Objective {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Objective::Maximize => a > b,
            Objective::Minimize => a < b,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Maximize => f.write_str("Maximize"),
            Objective::Minimize => f.write_str("Minimize"),
        }
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "maximize" | "max" => Ok(Objective::Maximize),
            "minimize" | "min" => Ok(Objective::Minimize),
            other => Err(format!("unknown objective `{other}` (expected Maximize or Minimize)")),
        }
    }
}

/// A named solution attribute and the side of the fitness ratio it feeds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParameterSpec {
    name: String,
    direction: Direction,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        Self { name: name.into(), direction }
    }

    pub fn direct(name: impl Into<String>) -> Self {
        Self::new(name, Direction::Direct)
    }

    pub fn inverse(name: impl Into<String>) -> Self {
        Self::new(name, Direction::Inverse)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }
}

/// One candidate: an id plus a value per parameter, kept in spec order.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub id: String,
    pub values: IndexMap<String, f64>,
}

impl Solution {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), values: IndexMap::new() }
    }

    pub fn with(mut self, parameter: impl Into<String>, value: f64) -> Self {
        self.values.insert(parameter.into(), value);
        self
    }

    /// Zips `values` against `specs` in order.
    pub fn from_values(id: impl Into<String>, specs: &[ParameterSpec], values: &[f64]) -> Self {
        let values = specs
            .iter()
            .zip(values)
            .map(|(s, v)| (s.name.clone(), *v))
            .collect();
        Self { id: id.into(), values }
    }

    pub fn value(&self, parameter: &str) -> Option<f64> {
        self.values.get(parameter).copied()
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

/// A validated set of candidate solutions sharing one parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    specs: Vec<ParameterSpec>,
    solutions: Vec<Solution>,
    objective: Objective,
}

impl Population {
    pub fn new(
        specs: Vec<ParameterSpec>,
        solutions: Vec<Solution>,
        objective: Objective,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(FitnessError::EmptySpecList);
        }
        if solutions.is_empty() {
            return Err(FitnessError::EmptyPopulation);
        }
        for (i, spec) in specs.iter().enumerate() {
            if !is_identifier(&spec.name) {
                return Err(FitnessError::InvalidIdentifier(spec.name.clone()));
            }
            if specs[..i].iter().any(|s| s.name == spec.name) {
                return Err(FitnessError::DuplicateParameter(spec.name.clone()));
            }
        }
        let mut normalized = Vec::with_capacity(solutions.len());
        for (i, sol) in solutions.iter().enumerate() {
            if !is_identifier(&sol.id) {
                return Err(FitnessError::InvalidIdentifier(sol.id.clone()));
            }
            if solutions[..i].iter().any(|s| s.id == sol.id) {
                return Err(FitnessError::DuplicateSolution(sol.id.clone()));
            }
            if let Some(extra) = sol.values.keys().find(|k| !specs.iter().any(|s| &s.name == *k)) {
                return Err(FitnessError::UnexpectedParameter {
                    solution: sol.id.clone(),
                    parameter: extra.clone(),
                });
            }
            let mut values = IndexMap::with_capacity(specs.len());
            for spec in &specs {
                let v = sol.value(&spec.name).ok_or_else(|| FitnessError::MissingParameter {
                    solution: sol.id.clone(),
                    parameter: spec.name.clone(),
                })?;
                if !v.is_finite() {
                    return Err(FitnessError::NonFiniteValue {
                        solution: sol.id.clone(),
                        parameter: spec.name.clone(),
                    });
                }
                values.insert(spec.name.clone(), v);
            }
            normalized.push(Solution { id: sol.id.clone(), values });
        }
        Ok(Self { specs, solutions: normalized, objective })
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    pub fn solutions(&self) -> &[Solution] {
        &self.solutions
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.solutions.iter().position(|s| s.id == id)
    }

    pub fn solution(&self, id: &str) -> Option<&Solution> {
        self.solutions.iter().find(|s| s.id == id)
    }

    pub fn spec(&self, name: &str) -> Option<&ParameterSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    /// Overwrites one parameter value in place.
    pub fn set_value(&mut self, id: &str, parameter: &str, value: f64) -> Result<()> {
        if self.spec(parameter).is_none() {
            return Err(FitnessError::UnknownParameter(parameter.to_string()));
        }
        if !value.is_finite() {
            return Err(FitnessError::NonFiniteValue {
                solution: id.to_string(),
                parameter: parameter.to_string(),
            });
        }
        let sol = self
            .solutions
            .iter_mut()
            .find(|s| s.id == id)
            .ok_or_else(|| FitnessError::UnknownSolution(id.to_string()))?;
        sol.values.insert(parameter.to_string(), value);
        Ok(())
    }

    /// Parses the tabular population format.
    ///
    /// ```text
    /// # objective = Maximize
    /// id, delay:Inverse, cost:Inverse, speed:Direct
    /// X1, 70, 5186, 15
    /// ```
    ///
    /// Blank lines are skipped and `#` starts a comment. The optional
    /// `# objective = ...` directive must precede the header.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut objective = Objective::default();
        let mut specs: Option<Vec<ParameterSpec>> = None;
        let mut solutions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if specs.is_none() {
                    if let Some((key, value)) = comment.split_once('=') {
                        if key.trim().eq_ignore_ascii_case("objective") {
                            objective = value
                                .parse()
                                .map_err(|message| FitnessError::Parse { line: line_no, message })?;
                        }
                    }
                }
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            match &specs {
                None => {
                    if cells.len() < 2 {
                        return Err(FitnessError::Parse {
                            line: line_no,
                            message: "header needs an id column and at least one parameter".into(),
                        });
                    }
                    let parsed = cells[1..]
                        .iter()
                        .map(|cell| {
                            let (name, dir) = cell.split_once(':').ok_or_else(|| {
                                FitnessError::Parse {
                                    line: line_no,
                                    message: format!("header cell `{cell}` is not name:direction"),
                                }
                            })?;
                            let direction = dir
                                .parse()
                                .map_err(|message| FitnessError::Parse { line: line_no, message })?;
                            Ok(ParameterSpec::new(name.trim(), direction))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    specs = Some(parsed);
                }
                Some(specs) => {
                    if cells.len() != specs.len() + 1 {
                        return Err(FitnessError::Parse {
                            line: line_no,
                            message: format!(
                                "expected {} cells, found {}",
                                specs.len() + 1,
                                cells.len()
                            ),
                        });
                    }
                    let mut values = Vec::with_capacity(specs.len());
                    for (col, cell) in cells[1..].iter().enumerate() {
                        let v: f64 = cell.parse().map_err(|_| FitnessError::Parse {
                            line: line_no,
                            message: format!("column `{}`: `{cell}` is not a number", specs[col].name),
                        })?;
                        values.push(v);
                    }
                    solutions.push(Solution::from_values(cells[0], specs, &values));
                }
            }
        }
        let specs = specs.ok_or(FitnessError::Parse { line: 0, message: "missing header row".into() })?;
        Population::new(specs, solutions, objective)
    }
}

/// Fitness of one solution over the given parameter subset.
pub fn compute_fitness(solution: &Solution, active_specs: &[ParameterSpec]) -> Result<f64> {
    if active_specs.is_empty() {
        return Err(FitnessError::EmptySpecList);
    }
    let mut direct = Vec::new();
    let mut inverse = Vec::new();
    for spec in active_specs {
        let v = solution.value(&spec.name).ok_or_else(|| FitnessError::MissingParameter {
            solution: solution.id.clone(),
            parameter: spec.name.clone(),
        })?;
        if !v.is_finite() {
            return Err(FitnessError::NonFiniteValue {
                solution: solution.id.clone(),
                parameter: spec.name.clone(),
            });
        }
        match spec.direction {
            Direction::Direct => direct.push(v),
            Direction::Inverse => inverse.push(v),
        }
    }
    let numerator = sum_plus_product(&direct);
    let denominator = sum_plus_product(&inverse);
    if denominator == 0.0 {
        return Err(FitnessError::ZeroDenominator(solution.id.clone()));
    }
    let f = numerator / denominator;
    if !f.is_finite() {
        return Err(FitnessError::NonFiniteResult(solution.id.clone()));
    }
    Ok(f)
}

fn sum_plus_product(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    values.iter().sum::<f64>() + values.iter().product::<f64>()
}

/// Specs whose value differs between at least two solutions.
pub fn filter_constant_parameters(population: &Population) -> Result<Vec<ParameterSpec>> {
    if population.len() == 1 {
        return Ok(population.specs.clone());
    }
    let first = &population.solutions[0];
    let active: Vec<ParameterSpec> = population
        .specs
        .iter()
        .filter(|spec| {
            let v0 = first.values[&spec.name];
            population.solutions[1..].iter().any(|s| s.values[&spec.name] != v0)
        })
        .cloned()
        .collect();
    if active.is_empty() {
        return Err(FitnessError::AllParametersConstant);
    }
    Ok(active)
}

/// Outcome of one smuggler pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessReport {
    pub objective: Objective,
    pub active_params: Vec<ParameterSpec>,
    /// Fitness per solution id, in population order.
    pub fitness: IndexMap<String, f64>,
    /// Solution ids, best first.
    pub ranking: Vec<String>,
    pub best: String,
}

impl FitnessReport {
    pub fn fitness_of(&self, id: &str) -> Option<f64> {
        self.fitness.get(id).copied()
    }

    /// 1-based rank of `id`.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.ranking.iter().position(|r| r == id).map(|p| p + 1)
    }

    /// CSV with columns `solution_id,fitness,rank`, rows in population order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["solution_id", "fitness", "rank"]).expect("in-memory write");
        for (id, f) in &self.fitness {
            let rank = self.rank_of(id).unwrap_or(0);
            w.write_record([id.as_str(), &f.to_string(), &rank.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let active: Vec<String> = self
            .active_params
            .iter()
            .map(|s| format!("{} ({})", s.name(), s.direction()))
            .collect();
        out.push_str(&format!("objective: {}\n", self.objective));
        out.push_str(&format!("active parameters: {}\n", active.join(", ")));
        for (pos, id) in self.ranking.iter().enumerate() {
            out.push_str(&format!("{:>3}. {:<12} fitness = {}\n", pos + 1, id, self.fitness[id]));
        }
        out.push_str(&format!("best: {}\n", self.best));
        out
    }
}

/// Evaluates `active` over every solution, in population order.
pub(crate) fn evaluate_all(population: &Population, active: &[ParameterSpec]) -> Result<Vec<f64>> {
    population
        .solutions
        .iter()
        .map(|s| compute_fitness(s, active))
        .collect()
}

/// Indices ordered best-first; ties keep insertion order.
pub(crate) fn order_indices(fitness: &[f64], objective: Objective) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    // stable sort keeps insertion order among equal values
    order.sort_by(|&a, &b| {
        let ord = fitness[a].total_cmp(&fitness[b]);
        match objective {
            Objective::Maximize => ord.reverse(),
            Objective::Minimize => ord,
        }
    });
    order
}

/// Filters constant parameters, scores every solution and orders them.
pub fn rank(population: &Population) -> Result<FitnessReport> {
    let active = filter_constant_parameters(population)?;
    let values = evaluate_all(population, &active)?;
    let order = order_indices(&values, population.objective);
    let fitness = population
        .solutions
        .iter()
        .zip(&values)
        .map(|(s, f)| (s.id.clone(), *f))
        .collect();
    let ranking: Vec<String> = order.iter().map(|&i| population.solutions[i].id.clone()).collect();
    Ok(FitnessReport {
        objective: population.objective,
        active_params: active,
        fitness,
        best: ranking[0].clone(),
        ranking,
    })
}
