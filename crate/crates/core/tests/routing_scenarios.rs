use dso_core::donkey::{FitnessEvent, Mode, Reaction};
use dso_core::routing::{
    bundled, load_scenario, report, run, Action, EventKind, ReportFormat, Scenario, TimedEvent,
};
use proptest::prelude::*;

fn network_a_with(policy: &str, events: &str) -> Scenario {
    let text = format!(
        "[policy]\n{policy}\n[specs]\npacket_loss\npacket_delay\ncost\nbandwidth\ntransmission_speed\n\
         [paths]\nX1, 0, 70, 5186, 1544, 15\nX2, 0, 55, 26062, 1544, 12\nX3, 0, 19, 4062, 1544, 16\n\
         [events]\n{events}"
    );
    load_scenario(&text).unwrap()
}

#[test]
fn network_a_without_events_selects_x3() {
    let log = run(&load_scenario(bundled::NETWORK_A).unwrap()).unwrap();
    assert_eq!(log.records.len(), 1);
    assert_eq!(log.last().action, Action::Smuggler);
    assert_eq!(log.last().best, "X3");
    assert_eq!(log.final_state.mode(), Mode::Normal);
}

#[test]
fn congested_x3_is_replaced_by_x1_under_suicide() {
    let log = run(&network_a_with("FaceAndSuicide", "1, change, X3, packet_delay=500\n")).unwrap();
    let r = log.last();
    assert_eq!(r.action, Action::React(Reaction::FaceAndSuicide));
    assert_eq!(r.active_set, ["X1"]);
    assert_eq!(r.mode, Mode::SuicideSubstituted);
    // 32 / (500 + 4062 + 500 * 4062)
    let x3 = 32.0 / (500.0 + 4062.0 + 500.0 * 4062.0);
    assert!((r.fitness["X3"] - x3).abs() <= 1e-15);
}

#[test]
fn ambulance_run_reevaluates_at_tick_one() {
    let log = run(&load_scenario(bundled::AMBULANCE).unwrap()).unwrap();
    assert_eq!(log.records[0].best, "X1");
    let rerun = log
        .records
        .iter()
        .find(|r| r.action == Action::React(Reaction::Run))
        .expect("a Run record");
    assert_eq!(rerun.tick, Some(1));
    assert_eq!(log.last().best, "X2");
    let text = report(&log, ReportFormat::Text);
    assert!(text.contains("re-evaluated all paths"));
}

#[test]
fn network_b_selects_x1() {
    let log = run(&load_scenario(bundled::NETWORK_B).unwrap()).unwrap();
    assert_eq!(log.records[0].best, "X1");
}

#[test]
fn failover_walks_through_every_mode() {
    let log = run(&load_scenario(bundled::NETWORK_A_FAILOVER).unwrap()).unwrap();
    let modes: Vec<Mode> = log.records.iter().map(|r| r.mode).collect();
    assert_eq!(
        modes,
        [Mode::Normal, Mode::SuicideSubstituted, Mode::Normal, Mode::Supported, Mode::Normal]
    );
    assert_eq!(log.records[3].active_set, ["X3", "X1"]);
    assert_eq!(log.records[2].action, Action::Restored);
    assert_eq!(log.last().best, "X3");
}

#[test]
fn simulation_is_deterministic() {
    for name in bundled::NAMES {
        let s = load_scenario(bundled::by_name(name).unwrap()).unwrap();
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a, b, "{name}");
        assert_eq!(report(&a, ReportFormat::Csv), report(&b, ReportFormat::Csv));
        assert_eq!(report(&a, ReportFormat::Text), report(&b, ReportFormat::Text));
    }
}

#[test]
fn csv_report_reads_back() {
    let log = run(&load_scenario(bundled::NETWORK_A_FAILOVER).unwrap()).unwrap();
    let csv_text = report(&log, ReportFormat::Csv);
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["tick", "event", "best", "active_set", "mode", "fitness_of_best"]);
    let rows: Vec<(String, String, String)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[2].to_string(), r[4].to_string())
        })
        .collect();
    let expected: Vec<(String, String, String)> = log
        .records
        .iter()
        .map(|r| (r.tick_label(), r.best.clone(), r.mode.to_string()))
        .collect();
    assert_eq!(rows, expected);
    for (row, rec) in reader_rows(&csv_text).iter().zip(&log.records) {
        assert_eq!(row.parse::<f64>().unwrap(), rec.fitness_of_best);
    }
}

fn reader_rows(text: &str) -> Vec<String> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap()[5].to_string())
        .collect()
}

#[test]
fn text_report_names_the_best() {
    let log = run(&load_scenario(bundled::NETWORK_A).unwrap()).unwrap();
    let text = report(&log, ReportFormat::Text);
    assert!(text.contains("best = X3"));
}

#[test]
fn programmatic_scenario_matches_parsed() {
    let parsed = network_a_with("Run", "1, change, X2, cost=10\n");
    let built = Scenario::new(
        parsed.title.clone(),
        parsed.specs().to_vec(),
        parsed.paths().to_vec(),
        parsed.objective(),
        Reaction::Run,
        vec![TimedEvent {
            t: 1,
            kind: EventKind::ParamChange { event: FitnessEvent::new("X2").set("cost", 10.0), reaction: None },
        }],
    )
    .unwrap();
    assert_eq!(run(&parsed).unwrap(), run(&built).unwrap());
}

fn event_line() -> impl Strategy<Value = String> {
    let target = prop::sample::select(vec!["X1", "X2", "X3"]);
    let param = prop::sample::select(vec!["packet_delay", "cost", "transmission_speed"]);
    prop_oneof![
        (target.clone(), param.clone(), 1u32..30_000).prop_map(|(t, p, v)| format!("change, {t}, {p}={v}")),
        (target.clone(), param, 1u32..30_000).prop_map(|(t, p, v)| format!("recovery, {t}, {p}={v}")),
        target.prop_map(|t| format!("overload, {t}")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn paths_are_conserved_and_invariants_hold(
        policy in prop::sample::select(vec!["Run", "FaceAndSuicide", "FaceAndSupport"]),
        lines in prop::collection::vec(event_line(), 0..12),
    ) {
        let events: String = lines
            .iter()
            .enumerate()
            .map(|(i, l)| format!("{}, {l}\n", i + 1))
            .collect();
        let scenario = network_a_with(policy, &events);
        let Ok(log) = run(&scenario) else { return Ok(()); };
        prop_assert_eq!(log.records.len(), lines.len() + 1);
        prop_assert_eq!(log.final_state.population().len(), 3);
        prop_assert!(log.final_state.invariants_hold());
        for r in &log.records {
            prop_assert_eq!(r.fitness.len(), 3);
            prop_assert!(!r.active_set.is_empty() && r.active_set.len() <= 2);
            prop_assert_eq!(&r.best, &r.active_set[0]);
            prop_assert!(r.active_set.iter().all(|id| ["X1", "X2", "X3"].contains(&id.as_str())));
        }
    }

    #[test]
    fn exact_recovery_round_trip(
        param in prop::sample::select(vec!["packet_delay", "cost", "transmission_speed"]),
        value in 1u32..30_000,
    ) {
        let original = match param {
            "packet_delay" => 19,
            "cost" => 4062,
            _ => 16,
        };
        let events = format!("1, change, X3, {param}={value}\n2, recovery, X3, {param}={original}\n");
        let log = run(&network_a_with("FaceAndSuicide", &events)).unwrap();
        prop_assert_eq!(log.final_state.mode(), Mode::Normal);
        prop_assert_eq!(log.final_state.active_set(), vec!["X3"]);
        prop_assert_eq!(&log.last().best, "X3");
    }
}
