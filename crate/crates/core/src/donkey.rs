//! Donkey mode: keeps the smuggler's chosen solution in service while
//! fitness-changing events arrive.
//!
//! The state carries a frozen fitness snapshot taken at the last full ranking.
//! `observe` applies an event and compares fresh fitness values against that
//! snapshot; the three reactions then decide what is used next:
//!
//! * `Run` re-ranks everything and adopts the new best.
//! * `FaceAndSuicide` swaps in the snapshot runner-up without re-evaluating.
//! * `FaceAndSupport` keeps the best and adds the runner-up beside it.
//!
//! `try_restore` returns to the original best once it is back to its
//! snapshot fitness.
//!
//! Every transition takes `&self` and returns a new state.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use thiserror::Error;

use crate::fitness::{
    self, compute_fitness, FitnessError, FitnessReport, Objective, ParameterSpec, Population,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DonkeyError {
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("no alternative solution: population has a single solution")]
    SingleSolution,
    #[error("unknown solution `{0}`")]
    UnknownSolution(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("non-finite value for `{parameter}` on `{solution}`")]
    NonFiniteValue { solution: String, parameter: String },
}

pub type Result<T> = std::result::Result<T, DonkeyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Reaction {
    #[default]
    Run,
    FaceAndSuicide,
    FaceAndSupport,
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reaction::Run => "Run",
            Reaction::FaceAndSuicide => "FaceAndSuicide",
            Reaction::FaceAndSupport => "FaceAndSupport",
        })
    }
}

impl FromStr for Reaction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "run" => Ok(Reaction::Run),
            "faceandsuicide" | "facesuicide" | "suicide" => Ok(Reaction::FaceAndSuicide),
            "faceandsupport" | "facesupport" | "support" => Ok(Reaction::FaceAndSupport),
            _ => Err(format!(
                "unknown reaction `{}` (expected Run, FaceAndSuicide or FaceAndSupport)",
                s.trim()
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Normal,
    SuicideSubstituted,
    Supported,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Normal => "Normal",
            Mode::SuicideSubstituted => "SuicideSubstituted",
            Mode::Supported => "Supported",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "Normal" => Ok(Mode::Normal),
            "SuicideSubstituted" => Ok(Mode::SuicideSubstituted),
            "Supported" => Ok(Mode::Supported),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// A batch of parameter updates for one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessEvent {
    pub target: String,
    pub changes: IndexMap<String, f64>,
}

impl FitnessEvent {
    pub fn new(target: impl Into<String>) -> Self {
        Self { target: target.into(), changes: IndexMap::new() }
    }

    pub fn set(mut self, parameter: impl Into<String>, value: f64) -> Self {
        self.changes.insert(parameter.into(), value);
        self
    }
}

/// Relative tolerance used when deciding whether the original best recovered.
pub const RESTORE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DonkeyState {
    population: Population,
    active_params: Vec<ParameterSpec>,
    snapshot: Vec<f64>,
    current: Vec<f64>,
    original_best: usize,
    active_set: Vec<usize>,
    mode: Mode,
    policy: Reaction,
}

impl DonkeyState {
    /// Runs the smuggler ranking and starts in `Normal` mode on its best.
    pub fn new(population: Population, policy: Reaction) -> Result<Self> {
        let report = fitness::rank(&population)?;
        Ok(Self::from_report(population, &report, policy))
    }

    fn from_report(population: Population, report: &FitnessReport, policy: Reaction) -> Self {
        let snapshot: Vec<f64> = report.fitness.values().copied().collect();
        let best = population.index_of(&report.best).expect("report built from this population");
        Self {
            population,
            active_params: report.active_params.clone(),
            current: snapshot.clone(),
            snapshot,
            original_best: best,
            active_set: vec![best],
            mode: Mode::Normal,
            policy,
        }
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn active_params(&self) -> &[ParameterSpec] {
        &self.active_params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn policy(&self) -> Reaction {
        self.policy
    }

    pub fn with_policy(mut self, policy: Reaction) -> Self {
        self.policy = policy;
        self
    }

    fn id(&self, idx: usize) -> &str {
        &self.population.solutions()[idx].id
    }

    pub fn original_best(&self) -> &str {
        self.id(self.original_best)
    }

    /// The solution currently carrying the load (first of the active set).
    pub fn current_best(&self) -> &str {
        self.id(self.active_set[0])
    }

    pub fn active_set(&self) -> Vec<&str> {
        self.active_set.iter().map(|&i| self.id(i)).collect()
    }

    /// Frozen fitness per solution, population order.
    pub fn snapshot(&self) -> IndexMap<String, f64> {
        self.zip_ids(&self.snapshot)
    }

    /// Fitness on the current parameter values, population order.
    pub fn current_fitness(&self) -> IndexMap<String, f64> {
        self.zip_ids(&self.current)
    }

    fn zip_ids(&self, values: &[f64]) -> IndexMap<String, f64> {
        self.population
            .solutions()
            .iter()
            .zip(values)
            .map(|(s, f)| (s.id.clone(), *f))
            .collect()
    }

    pub fn snapshot_of(&self, id: &str) -> Option<f64> {
        self.population.index_of(id).map(|i| self.snapshot[i])
    }

    pub fn current_of(&self, id: &str) -> Option<f64> {
        self.population.index_of(id).map(|i| self.current[i])
    }

    /// Combined snapshot fitness of the support pair, when in `Supported` mode.
    pub fn support_fitness(&self) -> Option<f64> {
        match self.mode {
            Mode::Supported => Some(self.active_set.iter().map(|&i| self.snapshot[i]).sum()),
            _ => None,
        }
    }

    /// Checks the mode/active-set consistency rules.
    pub fn invariants_hold(&self) -> bool {
        let n = self.population.len();
        if self.snapshot.len() != n || self.current.len() != n {
            return false;
        }
        if self.active_set.iter().any(|&i| i >= n) || self.original_best >= n {
            return false;
        }
        match (self.mode, self.active_set.as_slice()) {
            (Mode::Normal, [only]) => *only == self.original_best,
            (Mode::SuicideSubstituted, [replacement]) => *replacement != self.original_best,
            (Mode::Supported, [best, support]) => {
                *best == self.original_best && *support != self.original_best
            }
            _ => false,
        }
    }

    /// Applies `event` and reports whether the solution in use lost ground.
    ///
    /// The snapshot is left untouched. Fitness is recomputed over the
    /// parameters that were active at the last full ranking.
    pub fn observe(&self, event: &FitnessEvent) -> Result<(Self, bool)> {
        if self.population.index_of(&event.target).is_none() {
            return Err(DonkeyError::UnknownSolution(event.target.clone()));
        }
        for (param, value) in &event.changes {
            if self.population.spec(param).is_none() {
                return Err(DonkeyError::UnknownParameter(param.clone()));
            }
            if !value.is_finite() {
                return Err(DonkeyError::NonFiniteValue {
                    solution: event.target.clone(),
                    parameter: param.clone(),
                });
            }
        }
        let mut next = self.clone();
        for (param, value) in &event.changes {
            next.population.set_value(&event.target, param, *value)?;
        }
        next.current = fitness::evaluate_all(&next.population, &next.active_params)?;
        let dropped = next.drop_detected();
        Ok((next, dropped))
    }

    fn drop_detected(&self) -> bool {
        let objective = self.population.objective();
        let in_use = self.active_set[0];
        let value = self.current[in_use];
        let beaten = self
            .current
            .iter()
            .enumerate()
            .any(|(i, &f)| i != in_use && objective.better(f, value));
        beaten || objective.better(self.snapshot[in_use], value)
    }

    /// Dispatches to the reaction named by `reaction`.
    pub fn react(&self, reaction: Reaction) -> Result<Self> {
        match reaction {
            Reaction::Run => self.react_run(),
            Reaction::FaceAndSuicide => self.react_suicide(),
            Reaction::FaceAndSupport => self.react_support(),
        }
    }

    /// Full re-rank on current values; snapshot and best are replaced.
    pub fn react_run(&self) -> Result<Self> {
        let report = fitness::rank(&self.population)?;
        Ok(Self::from_report(self.population.clone(), &report, self.policy))
    }

    /// Snapshot solution closest in fitness to the original best.
    fn runner_up(&self) -> Result<usize> {
        if self.population.len() < 2 {
            return Err(DonkeyError::SingleSolution);
        }
        let reference = self.snapshot[self.original_best];
        let mut pick: Option<(usize, f64)> = None;
        for (i, &f) in self.snapshot.iter().enumerate() {
            if i == self.original_best {
                continue;
            }
            let gap = (f - reference).abs();
            if pick.is_none_or(|(_, g)| gap < g) {
                pick = Some((i, gap));
            }
        }
        Ok(pick.expect("at least two solutions").0)
    }

    /// Replaces the original best with the snapshot runner-up.
    pub fn react_suicide(&self) -> Result<Self> {
        let replacement = self.runner_up()?;
        let mut next = self.clone();
        next.active_set = vec![replacement];
        next.mode = Mode::SuicideSubstituted;
        Ok(next)
    }

    /// Pairs the original best with the snapshot runner-up.
    pub fn react_support(&self) -> Result<Self> {
        let support = self.runner_up()?;
        let mut next = self.clone();
        next.active_set = vec![self.original_best, support];
        next.mode = Mode::Supported;
        Ok(next)
    }

    /// Returns to the original best once its fitness is back to the snapshot.
    pub fn try_restore(&self) -> Result<Self> {
        if self.mode == Mode::Normal {
            return Ok(self.clone());
        }
        let best = self.original_best;
        let now = compute_fitness(&self.population.solutions()[best], &self.active_params)?;
        let reference = self.snapshot[best];
        let eps = RESTORE_TOLERANCE * reference.abs().max(1.0);
        let recovered = match self.population.objective() {
            Objective::Maximize => now >= reference - eps,
            Objective::Minimize => now <= reference + eps,
        };
        let mut next = self.clone();
        next.current[best] = now;
        if recovered {
            next.active_set = vec![best];
            next.mode = Mode::Normal;
        }
        Ok(next)
    }

    /// Plain-text dump, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("mode = {}\n", self.mode));
        out.push_str(&format!("policy = {}\n", self.policy));
        out.push_str(&format!("objective = {}\n", self.population.objective()));
        out.push_str(&format!("original_best = {}\n", self.original_best()));
        out.push_str(&format!("active_set = {}\n", self.active_set().join(";")));
        let params: Vec<&str> = self.active_params.iter().map(|p| p.name()).collect();
        out.push_str(&format!("active_params = {}\n", params.join(";")));
        if let Some(s) = self.support_fitness() {
            out.push_str(&format!("support_fitness = {s}\n"));
        }
        for (i, sol) in self.population.solutions().iter().enumerate() {
            out.push_str(&format!(
                "solution {} snapshot = {} current = {}\n",
                sol.id, self.snapshot[i], self.current[i]
            ));
        }
        out
    }
}
