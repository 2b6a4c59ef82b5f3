mod common;

use std::collections::BTreeSet;

use scuc_lab::harness::{
    parse_hints, run_test, run_training, write_csv, Campaign, ExperimentConfig, HintsDocument,
    Method,
};
use scuc_lab::learn::{LearnError, TrainingStore};
use scuc_lab::powergrid::{parse_instance, ConstraintFamily};
use scuc_lab::sampling::{generate_variation, ShiftSpec};
use scuc_lab::sensitivity::scan_violations;
use scuc_lab::{
    solve_scuc, validate_solution, HighsBackend, Hints, ScreeningConfig, Sensitivities,
    SolveOptions, WarmStart,
};

fn small_config(base: &str, roster: &[&str], train: usize, test: usize) -> ExperimentConfig {
    let roster = roster.iter().map(|m| m.parse().unwrap()).collect();
    let mut cfg = ExperimentConfig::new(common::fixture_path(&format!("{base}.json")), roster);
    cfg.profile = Some(common::fixture_path("reference_loads.csv"));
    cfg.train_samples = train;
    cfg.test_samples = test;
    cfg
}

#[test]
fn single_sample_store_matches_a_standalone_solve() {
    let cfg = small_config("case14", &["zero"], 1, 1);
    let campaign = Campaign::from_config(cfg.clone()).unwrap();
    let store = run_training(&campaign).unwrap().store;
    assert_eq!(store.len(), 1);
    let (_, instance) =
        generate_variation(&campaign.base, &campaign.profile, &ShiftSpec::in_distribution(), cfg.train_seed).unwrap();
    let mut options = SolveOptions::default();
    options.backend = cfg.train_backend;
    let alone = solve_scuc(&instance, &campaign.sens, &Hints::default(), &options, &HighsBackend).unwrap();
    assert_eq!(store.records[0].enforced, alone.enforced);
    assert_eq!(store.records[0].solution, alone.solution);
}

/// Two buses joined by two parallel lines. The cheap unit sits behind them,
/// and losing either line leaves the other with the full export, so the same
/// contingency limits bind in every hour of every variation.
const ALWAYS_BINDING: &str = r#"{
  "format": "scuc-lab/1",
  "buses": ["a", "b"],
  "slack_bus": "a",
  "lines": [
    {"id": "l1", "from_bus": "a", "to_bus": "b", "reactance": 0.1, "normal_limit": 30.0, "contingency_limit": 30.0},
    {"id": "l2", "from_bus": "a", "to_bus": "b", "reactance": 0.1, "normal_limit": 30.0, "contingency_limit": 30.0}
  ],
  "generators": [
    {"id": "cheap", "bus": "a", "min_power": 0.0, "max_power": 100.0,
     "segments": [{"size": 100.0, "cost": 10.0}], "base_cost": 0.0, "startup_cost": 0.0,
     "ramp_up": 100.0, "ramp_down": 100.0, "min_up": 1, "min_down": 1, "initial_status": true},
    {"id": "dear", "bus": "b", "min_power": 0.0, "max_power": 100.0,
     "segments": [{"size": 100.0, "cost": 50.0}], "base_cost": 0.0, "startup_cost": 0.0,
     "ramp_up": 100.0, "ramp_down": 100.0, "min_up": 1, "min_down": 1, "initial_status": true}
  ],
  "demand": {"b": [70, 66, 64, 63, 64, 68, 77, 88, 97, 102, 104, 106, 107, 106, 105, 105, 107, 112, 113, 111, 105, 96, 86, 77]},
  "reserve": [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]
}"#;

#[test]
fn online_training_reuses_a_fixed_constraint_set() {
    let dir = tempfile::tempdir().unwrap();
    let base_path = dir.path().join("binding.json");
    std::fs::write(&base_path, ALWAYS_BINDING).unwrap();
    let mut cfg = ExperimentConfig::new(&base_path, vec![Method::Zero]);
    cfg.train_samples = 10;
    cfg.online = true;
    let campaign = Campaign::from_config(cfg).unwrap();
    let out = run_training(&campaign).unwrap();
    assert!(out.iterations[0] > 1);
    assert!(out.iterations[1..].iter().all(|&i| i == 1), "{:?}", out.iterations);
    let first = &out.store.records[0].enforced;
    assert!(out.store.records.iter().all(|r| &r.enforced == first));
}

#[test]
fn store_round_trips_and_rejects_other_bases() {
    let cfg = small_config("case6", &["zero"], 3, 1);
    let campaign = Campaign::from_config(cfg).unwrap();
    let store = run_training(&campaign).unwrap().store;
    let dir = tempfile::tempdir().unwrap();
    store.save(dir.path(), &campaign.base, serde_json::json!({"note": "test"})).unwrap();
    for i in 1..=3 {
        assert!(dir.path().join(format!("sample_{i}.json")).exists());
    }
    let loaded = TrainingStore::load(dir.path(), &campaign.base).unwrap();
    assert_eq!(loaded, store);

    let other = common::fixture("case14");
    assert!(matches!(
        TrainingStore::load(dir.path(), &other),
        Err(LearnError::Fingerprint { .. })
    ));
}

#[test]
fn test_phase_examples() {
    let cfg = small_config(
        "case6",
        &["zero", "tr:perf", "ws:perf", "aff:perf", "tr:nearest", "tr:all", "aff:svm"],
        12,
        3,
    );
    let campaign = Campaign::from_config(cfg.clone()).unwrap();
    let store = run_training(&campaign).unwrap().store;
    let report = run_test(&campaign, &store).unwrap();
    assert_eq!(report.runs.len(), 3 * cfg.roster.len());
    let row = |name: &str| report.rows.iter().find(|r| r.method.to_string() == name).unwrap();
    assert_eq!(row("zero").speedup, 1.0);
    for r in report.runs.iter().filter(|r| r.method == Method::TrPerf) {
        assert_eq!(r.iterations, 1);
    }
    for r in report.runs.iter().filter(|r| r.method == Method::WsPerf) {
        assert!(r.warm_start_accepted);
    }
    for r in report.runs.iter().filter(|r| r.method.is_affine() && r.feasible) {
        assert!(r.gap_vs_zero.unwrap() >= -2.0 * cfg.test_backend.relative_gap);
    }
    assert_eq!(row("aff:perf").feasible_rate, 1.0);

    // The same variations come back in the same order for every method.
    let seeds = |m: Method| report.runs.iter().filter(|r| r.method == m).map(|r| r.seed).collect::<Vec<_>>();
    for &m in &cfg.roster {
        assert_eq!(seeds(m), report.seeds);
    }

    let mut csv = Vec::new();
    write_csv(&report.rows[..1], &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    let header = text.lines().next().unwrap();
    let pos = |c: &str| header.split(',').position(|h| h == c).unwrap();
    assert!(pos("gap_p50") < pos("gap_p80") && pos("gap_p80") < pos("gap_p95") && pos("gap_p95") < pos("gap_p100"));
}

#[test]
fn zero_only_roster_has_unit_speedup() {
    let cfg = small_config("case6", &["zero"], 1, 2);
    let campaign = Campaign::from_config(cfg).unwrap();
    let store = run_training(&campaign).unwrap().store;
    let report = run_test(&campaign, &store).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].speedup, 1.0);
}

#[test]
fn final_scan_and_full_validation_agree() {
    let base = common::fixture("case30");
    let sens = Sensitivities::new(&base.network).unwrap();
    let stats = common::profile();
    for seed in 0..3 {
        let (_, inst) = generate_variation(&base, &stats, &ShiftSpec::in_distribution(), seed).unwrap();
        let out = solve_scuc(&inst, &sens, &Hints::default(), &SolveOptions::default(), &HighsBackend).unwrap();
        let report = validate_solution(&inst, &out.solution, 1e-6).unwrap();
        let scan = scan_violations(&inst, &sens, &out.solution.production, &BTreeSet::new(), &ScreeningConfig::default());
        assert_eq!(scan.is_empty(), !report.has_flow_violations());
        assert!(report.is_feasible());

        // A dispatch that ignores the network is caught by both.
        let hints = Hints::default();
        let mut free = out.solution.clone();
        let cheapest = (0..inst.generators.len())
            .min_by(|&a, &b| inst.generators[a].segments[0].cost.total_cmp(&inst.generators[b].segments[0].cost))
            .unwrap();
        for t in 0..scuc_lab::HORIZON {
            let total: f64 = free.production.iter().map(|p| p[t]).sum();
            for (g, p) in free.production.iter_mut().enumerate() {
                p[t] = if g == cheapest { total } else { 0.0 };
            }
        }
        let report = validate_solution(&inst, &free, 1e-6).unwrap();
        let scan = scan_violations(&inst, &sens, &free.production, &hints.enforce, &ScreeningConfig::default());
        assert_eq!(scan.is_empty(), report.get(ConstraintFamily::BaseFlow).is_none() && report.get(ConstraintFamily::ContingencyFlow).is_none());
    }
}

#[test]
fn hints_documents_round_trip() {
    let inst = common::fixture("case14");
    let sens = Sensitivities::new(&inst.network).unwrap();
    let out = solve_scuc(&inst, &sens, &Hints::default(), &SolveOptions::default(), &HighsBackend).unwrap();
    let mut start = WarmStart::from_commitment(&out.solution.commitment);
    start.values[0][3] = None;
    let hints = Hints {
        enforce: out.enforced.clone(),
        warm_starts: vec![start],
        hyperplanes: vec![scuc_lab::Hyperplane::new(scuc_lab::HyperplaneKind::FixNext, 1, 22)],
    };
    let text = serde_json::to_string(&HintsDocument::from_hints(&hints, &inst)).unwrap();
    let back = parse_hints(&text, &inst).unwrap();
    assert_eq!(back, hints);

    let solved = solve_scuc(&inst, &sens, &back, &SolveOptions::default(), &HighsBackend).unwrap();
    assert_eq!(solved.stats.iterations, 1);
    assert!(solved.stats.warm_start_accepted);

    assert!(parse_hints(r#"{"hyperplanes": [{"kind": "FixZero", "generator": "nope", "period": 1}]}"#, &inst).is_err());
    assert!(parse_hints(r#"{"hyperplanes": [{"kind": "FixNext", "generator": "g01", "period": 24}]}"#, &inst).is_err());
    assert!(parse_hints(r#"{"enforce": [{"line": "l01", "scenario": "l01", "period": 1}]}"#, &inst).is_err());
    assert!(parse_hints(r#"{"surprise": 1}"#, &inst).is_err());
}

#[test]
fn fixtures_are_valid_instances() {
    for name in ["case6", "case14", "case30"] {
        let text = std::fs::read_to_string(common::fixture_path(&format!("{name}.json"))).unwrap();
        let inst = parse_instance(&text).unwrap();
        assert!(Sensitivities::new(&inst.network).is_ok());
    }
}
