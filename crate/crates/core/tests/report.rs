mod common;

use footstep::energy::HeuristicKind;
use footstep::report::{self, Mode, Variant};
use footstep::scenario::Scenario;

use common::scenario;

#[test]
fn identical_runs_write_identical_plans() {
    let s = Scenario::load(scenario("clutter.toml")).unwrap();
    let v = Variant {
        seed: Some(11),
        ..Variant::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = report::run_scenario(&s, &v, Some(a.path())).unwrap().report;
    let rb = report::run_scenario(&s, &v, Some(b.path())).unwrap().report;
    assert_eq!(ra.artifacts.len(), rb.artifacts.len());
    for (x, y) in ra.artifacts.iter().zip(&rb.artifacts) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn seeds_fix_the_noise() {
    let s = Scenario::load(scenario("clutter.toml")).unwrap();
    let with_seed = |seed| {
        let mut s = s.clone();
        Variant {
            seed: Some(seed),
            ..Variant::default()
        }
        .apply(&mut s);
        s.build_map().unwrap()
    };
    let heights =
        |m: &footstep::worldmap::ElevationMap| (0..m.grid.len()).map(|i| m.cell(i).height).collect::<Vec<_>>();
    assert_eq!(heights(&with_seed(1)), heights(&with_seed(1)));
    assert_ne!(heights(&with_seed(1)), heights(&with_seed(2)));
}

#[test]
fn sim_runs_are_reproducible() {
    let s = Scenario::load(scenario("dynamic-person.toml")).unwrap();
    let v = Variant {
        mode: Mode::Sim,
        ..Variant::default()
    };
    let a = report::run_scenario(&s, &v, None).unwrap();
    let b = report::run_scenario(&s, &v, None).unwrap();
    assert_eq!(a.ticks, b.ticks);
}

#[test]
fn single_scenario_comparison_means_equal_its_row() {
    let set = vec![Scenario::load(scenario("turning/turn-060.toml")).unwrap()];
    let a = Variant {
        heuristic: Some(HeuristicKind::Distance),
        ..Variant::default()
    };
    let b = Variant {
        heuristic: Some(HeuristicKind::DistanceAngle),
        ..Variant::default()
    };
    let cmp = report::compare(&set, &a, &b).unwrap();
    let r = &cmp.rows[0];
    assert_eq!(cmp.mean_cost_delta_pct, r.cost_delta_pct);
    assert_eq!(cmp.mean_iterations_delta_pct, r.iterations_delta_pct);
    assert_eq!(cmp.mean_iterations_a, r.iterations_a as f64);
    assert_eq!(cmp.mean_iterations_b, r.iterations_b as f64);
    let expected = (r.iterations_b as f64 - r.iterations_a as f64) / r.iterations_a as f64 * 100.0;
    assert!((r.iterations_delta_pct - expected).abs() < 1e-12);
    assert!(cmp.table().contains("turn-060"));
}

#[test]
fn variant_overrides_parse_and_reject() {
    let v = Variant::default().with_overrides("heuristic=zero,penalty=off").unwrap();
    assert_eq!(v.heuristic, Some(HeuristicKind::Zero));
    assert_eq!(v.penalty, Some(false));
    assert!(Variant::default().with_overrides("heuristic=psychic").is_err());
}
