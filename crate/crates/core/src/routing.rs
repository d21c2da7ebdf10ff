//! Scenario-driven path selection: a table of candidate paths, a reaction
//! policy and a tick-ordered list of events that change path parameters.
//!
//! Scenario documents are sectioned plain text:
//!
//! ```text
//! [title]
//! Three-path network
//! [objective]
//! Maximize
//! [policy]
//! FaceAndSuicide
//! [specs]
//! packet_delay = Inverse
//! transmission_speed = Direct
//! [paths]
//! X1, 70, 15
//! X2, 19, 16
//! [events]
//! 1, change, X2, packet_delay=500
//! 2, overload, X1
//! 3, recovery, X2, packet_delay=19
//! ```
//!
//! `change:<Reaction>` overrides the policy for a single event. Lines
//! starting with `#` are comments. When `[specs]` is omitted the five
//! network parameters in [`default_network_specs`] are used, and any of
//! those names may be listed without a direction.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::donkey::{DonkeyError, DonkeyState, FitnessEvent, Mode, Reaction};
use crate::fitness::{is_identifier, Direction, Objective, ParameterSpec, Population, Solution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}: {source}", tick_label(*tick))]
pub struct SimError {
    pub tick: Option<u64>,
    #[source]
    pub source: DonkeyError,
}

fn tick_label(tick: Option<u64>) -> String {
    match tick {
        Some(t) => format!("tick {t}"),
        None => "smuggler pass".to_string(),
    }
}

pub mod bundled {
    //! Scenario documents shipped with the crate.

    /// Three measured network paths, no events.
    pub const NETWORK_A: &str = include_str!("../scenarios/network_a.scn");
    /// The same paths with a degrade, overload and recovery sequence.
    pub const NETWORK_A_FAILOVER: &str = include_str!("../scenarios/network_a_failover.scn");
    /// Second network design, no events.
    pub const NETWORK_B: &str = include_str!("../scenarios/network_b.scn");
    /// Three ambulance routes with road reports arriving at tick 1.
    pub const AMBULANCE: &str = include_str!("../scenarios/ambulance.scn");

    pub fn by_name(name: &str) -> Option<&'static str> {
        match name {
            "network_a" => Some(NETWORK_A),
            "network_a_failover" => Some(NETWORK_A_FAILOVER),
            "network_b" => Some(NETWORK_B),
            "ambulance" => Some(AMBULANCE),
            _ => None,
        }
    }

    pub const NAMES: [&str; 4] = ["network_a", "network_a_failover", "network_b", "ambulance"];
}

/// Loss, delay and cost count against a path; bandwidth and speed for it.
pub fn default_network_specs() -> Vec<ParameterSpec> {
    vec![
        ParameterSpec::inverse("packet_loss"),
        ParameterSpec::inverse("packet_delay"),
        ParameterSpec::inverse("cost"),
        ParameterSpec::direct("bandwidth"),
        ParameterSpec::direct("transmission_speed"),
    ]
}

fn default_direction(name: &str) -> Option<Direction> {
    default_network_specs()
        .into_iter()
        .find(|s| s.name() == name)
        .map(|s| s.direction())
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    ParamChange { event: FitnessEvent, reaction: Option<Reaction> },
    Overload { target: String },
    Recovery { event: FitnessEvent },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent {
    pub t: u64,
    pub kind: EventKind,
}

impl TimedEvent {
    pub fn target(&self) -> &str {
        match &self.kind {
            EventKind::ParamChange { event, .. } | EventKind::Recovery { event } => &event.target,
            EventKind::Overload { target } => target,
        }
    }
}

fn changes_summary(changes: &IndexMap<String, f64>) -> String {
    changes
        .iter()
        .map(|(k, v)| format!(" {k}={v}"))
        .collect::<String>()
}

impl fmt::Display for TimedEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EventKind::ParamChange { event, reaction } => {
                write!(f, "change")?;
                if let Some(r) = reaction {
                    write!(f, ":{r}")?;
                }
                write!(f, " {}{}", event.target, changes_summary(&event.changes))
            }
            EventKind::Overload { target } => write!(f, "overload {target}"),
            EventKind::Recovery { event } => {
                write!(f, "recovery {}{}", event.target, changes_summary(&event.changes))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub title: String,
    pub policy: Reaction,
    pub events: Vec<TimedEvent>,
    population: Population,
}

impl Scenario {
    pub fn new(
        title: impl Into<String>,
        specs: Vec<ParameterSpec>,
        paths: Vec<Solution>,
        objective: Objective,
        policy: Reaction,
        events: Vec<TimedEvent>,
    ) -> Result<Self, ScenarioError> {
        let population = Population::new(specs, paths, objective)
            .map_err(|e| ScenarioError::Validation(format!("paths: {e}")))?;
        if let Some(w) = events.windows(2).find(|w| w[1].t < w[0].t) {
            return Err(ScenarioError::Validation(format!(
                "events must be in non-decreasing tick order (tick {} follows tick {})",
                w[1].t, w[0].t
            )));
        }
        for ev in &events {
            if population.index_of(ev.target()).is_none() {
                return Err(ScenarioError::Validation(format!(
                    "event at tick {} references unknown path `{}`",
                    ev.t,
                    ev.target()
                )));
            }
            let changes = match &ev.kind {
                EventKind::ParamChange { event, .. } | EventKind::Recovery { event } => {
                    Some(&event.changes)
                }
                EventKind::Overload { .. } => None,
            };
            for (param, value) in changes.into_iter().flatten() {
                if population.spec(param).is_none() {
                    return Err(ScenarioError::Validation(format!(
                        "event at tick {} references unknown parameter `{param}`",
                        ev.t
                    )));
                }
                if !value.is_finite() {
                    return Err(ScenarioError::Validation(format!(
                        "event at tick {} sets `{param}` to a non-finite value",
                        ev.t
                    )));
                }
            }
        }
        Ok(Self { title: title.into(), policy, events, population })
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        self.population.specs()
    }

    pub fn paths(&self) -> &[Solution] {
        self.population.solutions()
    }

    pub fn objective(&self) -> Objective {
        self.population.objective()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Title,
    Objective,
    Policy,
    Specs,
    Paths,
    Events,
}

fn parse_err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, message: message.into() }
}

fn parse_assignments(
    line: usize,
    cells: &[&str],
) -> Result<IndexMap<String, f64>, ScenarioError> {
    let mut changes = IndexMap::new();
    for cell in cells {
        let (k, v) = cell
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected param=value, found `{cell}`")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("`{}` is not a number", v.trim())))?;
        changes.insert(k.trim().to_string(), value);
    }
    Ok(changes)
}

fn parse_event(line: usize, text: &str) -> Result<TimedEvent, ScenarioError> {
    let cells: Vec<&str> = text.split(',').map(str::trim).collect();
    if cells.len() < 3 {
        return Err(parse_err(line, "event needs at least: tick, kind, target"));
    }
    let t: u64 = cells[0]
        .parse()
        .map_err(|_| parse_err(line, format!("tick `{}` is not a non-negative integer", cells[0])))?;
    let target = cells[2].to_string();
    if !is_identifier(&target) {
        return Err(parse_err(line, format!("invalid target `{target}`")));
    }
    let (kind, override_reaction) = match cells[1].split_once(':') {
        Some((k, r)) => (k.trim(), Some(r.parse::<Reaction>().map_err(|m| parse_err(line, m))?)),
        None => (cells[1], None),
    };
    let changes = parse_assignments(line, &cells[3..])?;
    let kind = match kind.to_ascii_lowercase().as_str() {
        "change" => EventKind::ParamChange {
            event: FitnessEvent { target, changes },
            reaction: override_reaction,
        },
        "overload" | "recovery" if override_reaction.is_some() => {
            return Err(parse_err(line, "only change events accept a reaction override"));
        }
        "overload" => {
            if !changes.is_empty() {
                return Err(parse_err(line, "overload events take no parameter values"));
            }
            EventKind::Overload { target }
        }
        "recovery" => EventKind::Recovery { event: FitnessEvent { target, changes } },
        other => {
            return Err(parse_err(
                line,
                format!("unknown event kind `{other}` (expected change, overload or recovery)"),
            ))
        }
    };
    Ok(TimedEvent { t, kind })
}

/// Parses and validates a scenario document.
pub fn load_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let mut section: Option<Section> = None;
    let mut title = Vec::new();
    let mut objective = None;
    let mut policy = None;
    let mut specs: Option<Vec<ParameterSpec>> = None;
    let mut raw_paths: Vec<(usize, String, Vec<f64>)> = Vec::new();
    let mut events = Vec::new();

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(match name.trim().to_ascii_lowercase().as_str() {
                "title" => Section::Title,
                "objective" => Section::Objective,
                "policy" => Section::Policy,
                "specs" => {
                    specs.get_or_insert_with(Vec::new);
                    Section::Specs
                }
                "paths" => Section::Paths,
                "events" => Section::Events,
                other => return Err(parse_err(line_no, format!("unknown section [{other}]"))),
            });
            continue;
        }
        match section {
            None => return Err(parse_err(line_no, "content before the first [section]")),
            Some(Section::Title) => title.push(line.to_string()),
            Some(Section::Objective) => {
                if objective.is_some() {
                    return Err(parse_err(line_no, "objective given twice"));
                }
                objective = Some(line.parse::<Objective>().map_err(|m| parse_err(line_no, m))?);
            }
            Some(Section::Policy) => {
                if policy.is_some() {
                    return Err(parse_err(line_no, "policy given twice"));
                }
                policy = Some(line.parse::<Reaction>().map_err(|m| parse_err(line_no, m))?);
            }
            Some(Section::Specs) => {
                let spec = match line.split_once('=') {
                    Some((name, dir)) => ParameterSpec::new(
                        name.trim(),
                        dir.parse::<Direction>().map_err(|m| parse_err(line_no, m))?,
                    ),
                    None => {
                        let dir = default_direction(line).ok_or_else(|| {
                            parse_err(line_no, format!("parameter `{line}` needs a direction"))
                        })?;
                        ParameterSpec::new(line, dir)
                    }
                };
                specs.get_or_insert_with(Vec::new).push(spec);
            }
            Some(Section::Paths) => {
                let cells: Vec<&str> = line.split(',').map(str::trim).collect();
                let values = cells[1..]
                    .iter()
                    .map(|c| {
                        c.parse::<f64>()
                            .map_err(|_| parse_err(line_no, format!("`{c}` is not a number")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                raw_paths.push((line_no, cells[0].to_string(), values));
            }
            Some(Section::Events) => events.push(parse_event(line_no, line)?),
        }
    }

    let specs = specs.unwrap_or_else(default_network_specs);
    let mut paths = Vec::with_capacity(raw_paths.len());
    for (line_no, id, values) in raw_paths {
        if values.len() != specs.len() {
            return Err(parse_err(
                line_no,
                format!("path `{id}` has {} values, expected {}", values.len(), specs.len()),
            ));
        }
        paths.push(Solution::from_values(id, &specs, &values));
    }
    Scenario::new(
        title.join(" "),
        specs,
        paths,
        objective.unwrap_or_default(),
        policy.unwrap_or_default(),
        events,
    )
}

/// What the controller did in response to one record's event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Initial ranking.
    Smuggler,
    NoDrop,
    React(Reaction),
    /// Overload on the protected best; runner-up added as support.
    Support,
    Restored,
    NotRecovered,
    /// Overload on a path that is not the protected best.
    Ignored,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Smuggler => f.write_str("smuggler ranking"),
            Action::NoDrop => f.write_str("no drop"),
            Action::React(Reaction::Run) => f.write_str("drop -> Run (re-evaluated all paths)"),
            Action::React(r) => write!(f, "drop -> {r}"),
            Action::Support => f.write_str("overload -> FaceAndSupport"),
            Action::Restored => f.write_str("original best restored"),
            Action::NotRecovered => f.write_str("original best not recovered"),
            Action::Ignored => f.write_str("ignored"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    /// `None` for the initial smuggler record.
    pub tick: Option<u64>,
    pub event: String,
    /// Fitness of every path on its values after the event.
    pub fitness: IndexMap<String, f64>,
    pub action: Action,
    pub active_set: Vec<String>,
    pub mode: Mode,
    pub best: String,
    pub fitness_of_best: f64,
    pub support_fitness: Option<f64>,
}

impl LogRecord {
    fn capture(tick: Option<u64>, event: String, action: Action, state: &DonkeyState) -> Self {
        let fitness = state.current_fitness();
        let best = state.current_best().to_string();
        Self {
            tick,
            event,
            fitness_of_best: fitness[&best],
            fitness,
            action,
            active_set: state.active_set().iter().map(|s| s.to_string()).collect(),
            mode: state.mode(),
            best,
            support_fitness: state.support_fitness(),
        }
    }

    pub fn tick_label(&self) -> String {
        match self.tick {
            Some(t) => t.to_string(),
            None => "init".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog {
    pub title: String,
    pub records: Vec<LogRecord>,
    pub final_state: DonkeyState,
}

impl SimulationLog {
    pub fn last(&self) -> &LogRecord {
        self.records.last().expect("log always holds the smuggler record")
    }
}

/// Runs the smuggler pass and then every event in order.
pub fn run(scenario: &Scenario) -> Result<SimulationLog, SimError> {
    let mut state = DonkeyState::new(scenario.population.clone(), scenario.policy)
        .map_err(|source| SimError { tick: None, source })?;
    let mut records = vec![LogRecord::capture(None, "smuggler".into(), Action::Smuggler, &state)];

    for ev in &scenario.events {
        let tick = Some(ev.t);
        let annotate = |source| SimError { tick, source };
        let action = match &ev.kind {
            EventKind::ParamChange { event, reaction } => {
                let (next, dropped) = state.observe(event).map_err(annotate)?;
                state = next;
                if dropped {
                    let r = reaction.unwrap_or(scenario.policy);
                    state = state.react(r).map_err(annotate)?;
                    Action::React(r)
                } else if state.mode() != Mode::Normal {
                    state = state.try_restore().map_err(annotate)?;
                    if state.mode() == Mode::Normal {
                        Action::Restored
                    } else {
                        Action::NoDrop
                    }
                } else {
                    Action::NoDrop
                }
            }
            EventKind::Overload { target } => {
                if target == state.original_best() {
                    state = state.react_support().map_err(annotate)?;
                    Action::Support
                } else {
                    Action::Ignored
                }
            }
            EventKind::Recovery { event } => {
                let (next, _) = state.observe(event).map_err(annotate)?;
                let was_normal = next.mode() == Mode::Normal;
                state = next.try_restore().map_err(annotate)?;
                if was_normal {
                    Action::NoDrop
                } else if state.mode() == Mode::Normal {
                    Action::Restored
                } else {
                    Action::NotRecovered
                }
            }
        };
        records.push(LogRecord::capture(tick, ev.to_string(), action, &state));
    }

    Ok(SimulationLog { title: scenario.title.clone(), records, final_state: state })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

/// CSV columns: `tick,event,best,active_set,mode,fitness_of_best`; the
/// active set is `;` separated.
pub fn report(log: &SimulationLog, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => report_csv(log),
        ReportFormat::Text => report_text(log),
    }
}

fn report_csv(log: &SimulationLog) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tick", "event", "best", "active_set", "mode", "fitness_of_best"])
        .expect("in-memory write");
    for r in &log.records {
        w.write_record([
            r.tick_label(),
            r.event.clone(),
            r.best.clone(),
            r.active_set.join(";"),
            r.mode.to_string(),
            r.fitness_of_best.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn report_text(log: &SimulationLog) -> String {
    let mut out = String::new();
    if !log.title.is_empty() {
        out.push_str(&format!("{}\n", log.title));
    }
    for r in &log.records {
        out.push_str(&format!("[{}] {}: {}\n", r.tick_label(), r.event, r.action));
        let fitness: Vec<String> = r.fitness.iter().map(|(id, f)| format!("{id}={f:.6e}")).collect();
        out.push_str(&format!("    fitness: {}\n", fitness.join(", ")));
        out.push_str(&format!(
            "    best = {}, active = [{}], mode = {}",
            r.best,
            r.active_set.join(", "),
            r.mode
        ));
        if let Some(s) = r.support_fitness {
            out.push_str(&format!(", support fitness = {s:.6e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_load() {
        for name in bundled::NAMES {
            let s = load_scenario(bundled::by_name(name).unwrap())
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.paths().len(), 3, "{name}");
        }
        let a = load_scenario(bundled::NETWORK_A).unwrap();
        assert_eq!(a.specs().len(), 5);
        assert!(a.events.is_empty());
    }

    #[test]
    fn empty_events_section_is_valid() {
        let s = load_scenario("[specs]\na = Direct\n[paths]\nP, 1\nQ, 2\n[events]\n").unwrap();
        assert!(s.events.is_empty());
        assert_eq!(s.policy, Reaction::Run);
        assert_eq!(s.objective(), Objective::Maximize);
    }

    #[test]
    fn unknown_path_is_validation_error() {
        let doc = format!("{}\n[events]\n1, change, X9, cost=1\n", bundled::NETWORK_A);
        match load_scenario(&doc) {
            Err(ScenarioError::Validation(msg)) => assert!(msg.contains("X9"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_parameter_and_order_are_validated() {
        let base = "[specs]\na = Direct\n[paths]\nP, 1\nQ, 2\n[events]\n";
        assert!(matches!(
            load_scenario(&format!("{base}1, change, P, b=3\n")),
            Err(ScenarioError::Validation(_))
        ));
        assert!(matches!(
            load_scenario(&format!("{base}2, overload, P\n1, overload, Q\n")),
            Err(ScenarioError::Validation(_))
        ));
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = load_scenario("[specs]\na = Direct\n[paths]\nP, one\n").unwrap_err();
        assert_eq!(err, ScenarioError::Parse { line: 4, message: "`one` is not a number".into() });
        let err = load_scenario("[specs]\nwidth\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 2, .. }));
        let err = load_scenario("[events]\nx, change, P\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 2, .. }));
        let err = load_scenario("[paths]\nP, 1, 2\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 2, .. }), "{err:?}");
        let err = load_scenario("[events]\n1, explode, P\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 2, .. }));
    }

    #[test]
    fn per_event_override() {
        let doc = "[specs]\nx = Direct\n[policy]\nRun\n[paths]\nA, 3\nB, 2\nC, 1\n\
                   [events]\n1, change:FaceAndSuicide, A, x=0.5\n";
        let log = run(&load_scenario(doc).unwrap()).unwrap();
        assert_eq!(log.last().action, Action::React(Reaction::FaceAndSuicide));
        assert_eq!(log.last().active_set, ["B"]);
    }

    #[test]
    fn overload_on_other_path_is_ignored() {
        let doc = "[specs]\nx = Direct\n[paths]\nA, 3\nB, 2\n[events]\n1, overload, B\n";
        let log = run(&load_scenario(doc).unwrap()).unwrap();
        assert_eq!(log.last().action, Action::Ignored);
        assert_eq!(log.last().mode, Mode::Normal);
    }

    #[test]
    fn sim_error_names_tick() {
        let doc = "[specs]\nx = Inverse\n[paths]\nA, 1\nB, 2\n[events]\n4, change, A, x=3\n5, change, B, x=0\n";
        let err = run(&load_scenario(doc).unwrap()).unwrap_err();
        assert_eq!(err.tick, Some(5));
        assert!(err.to_string().starts_with("tick 5:"), "{err}");
    }

    #[test]
    fn csv_report_header() {
        let log = run(&load_scenario(bundled::NETWORK_A).unwrap()).unwrap();
        let csv = report(&log, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "tick,event,best,active_set,mode,fitness_of_best");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("init,smuggler,X3,X3,Normal,"));
    }
}
