use std::process::Command;

use corobts_bench::{run, verify, write_csv, BenchError, Scenario, ScenarioSpec, Suite, VerifyOptions};

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corobts-bench"))
}

fn csv_of(spec: &ScenarioSpec) -> String {
    let mut out = Vec::new();
    write_csv(&run(spec).unwrap(), &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn identical_seed_identical_csv() {
    for scenario in [Scenario::Search, Scenario::InsertRemove, Scenario::PmaChurn, Scenario::Persist] {
        let n = if scenario == Scenario::Persist { 32 } else { 1 << 10 };
        let spec = ScenarioSpec { seed: 11, repetitions: 40, writes: 200, ..ScenarioSpec::new(scenario, n) };
        let first = csv_of(&spec);
        assert_eq!(first, csv_of(&spec), "{scenario}");
        assert!(first.starts_with("n,eps,a,b,block_size,cache_blocks,operation,transfers,accesses,measured_quantity\n"));
        let other = csv_of(&ScenarioSpec { seed: 12, ..spec.clone() });
        if scenario != Scenario::Search {
            assert_ne!(first, other, "{scenario} ignores its seed");
        }
    }
}

#[test]
fn search_rows() {
    let spec = ScenarioSpec { repetitions: 25, ..ScenarioSpec::new(Scenario::Search, 1 << 12) };
    let rows = run(&spec).unwrap();
    assert_eq!(rows.len(), 25);
    for r in &rows {
        assert_eq!(r.operation, "descent");
        assert_eq!(r.measured_quantity, 12.0);
        assert!(r.transfers >= 1 && r.transfers <= r.accesses);
    }
}

#[test]
fn persist_rows_per_epoch() {
    let spec = ScenarioSpec { writes: 64 * 5 + 3, ..ScenarioSpec::new(Scenario::Persist, 64) };
    let rows = run(&spec).unwrap();
    assert_eq!(rows.iter().filter(|r| r.operation == "epoch").count(), 5);
    assert_eq!(rows.last().unwrap().operation, "final");
    assert!(rows.windows(2).all(|w| w[1].measured_quantity >= w[0].measured_quantity));
}

#[test]
fn invalid_specs() {
    let bad = [
        ScenarioSpec { a: 3, b: 3, ..ScenarioSpec::new(Scenario::Search, 64) },
        ScenarioSpec { block_size: 0, ..ScenarioSpec::new(Scenario::PmaChurn, 64) },
        ScenarioSpec::new(Scenario::Persist, 48),
        ScenarioSpec::new(Scenario::Search, 0),
    ];
    for spec in bad {
        assert!(matches!(run(&spec), Err(BenchError::Usage(_))), "{spec:?}");
    }
    assert!("nope".parse::<Scenario>().is_err());
    assert!("nope".parse::<Suite>().is_err());
}

#[test]
fn suites_pass_and_catch_corruption() {
    for suite in [Suite::LayoutOracle, Suite::PmaDensity, Suite::PersistOracle] {
        let opts = VerifyOptions { seed: 7, u: 16, writes: 300, ..Default::default() };
        assert!(verify(suite, &opts).unwrap().is_ok(), "{suite}");
        let broken = VerifyOptions { inject_corruption: true, ..opts };
        assert!(verify(suite, &broken).unwrap().is_err(), "{suite} missed the corruption");
    }
}

#[test]
fn exit_codes() {
    let ok = bench().args(["verify", "layout-oracle", "--seed", "7"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("PASS"));

    let bad = bench().args(["verify", "layout-oracle", "--inject-corruption"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("pointer"));

    assert_eq!(bench().args(["verify", "persist-oracle", "--u", "64", "--writes", "2000"]).output().unwrap().status.code(), Some(0));
    assert_eq!(bench().arg("warp").output().unwrap().status.code(), Some(2));
    assert_eq!(bench().args(["search", "--a", "4", "--b", "3"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bench().args(["verify", "everything"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn output_directory_from_env() {
    let dir = std::env::temp_dir().join(format!("corobts-bench-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = bench()
        .args(["persist", "--u", "16", "--writes", "40"])
        .env("COROBTS_BENCH_OUT", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("persist.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",epoch,")).count(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}
