use std::fs;
use std::path::{Path, PathBuf};

use scoco::config::RunConfig;
use scoco::run::{run_into, sha256_hex, Command, Manifest};

fn config(name: &str) -> RunConfig {
    RunConfig::from_path(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn lsm_rows(dir: &Path) -> Vec<(usize, f64)> {
    rows(&dir.join("lsm_1rr2I.csv"))
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect()
}

#[test]
fn manifest_hashes_every_output_and_is_reproducible() {
    let mut c = config("germany.toml");
    c.scenarios.regime_scenarios = 2;
    c.scenarios.paths_per_regime = 30;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_into(&c, Command::Run, a.path()).unwrap();
    let second = run_into(&c, Command::Run, b.path()).unwrap();
    assert_eq!(first, second);
    for (file, hash) in &first.outputs {
        assert_eq!(&sha256_hex(&fs::read(a.path().join(file)).unwrap()), hash, "{file}");
    }
    for expected in ["estimate.json", "calibration.json", "scenarios.bin", "price.json", "par_rates.csv"] {
        assert!(first.outputs.contains_key(expected), "{expected}");
    }
    let on_disk: Manifest = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, first);
    assert!(!first.outputs.contains_key("lsm.json"));

    c.seed += 1;
    let other = run_into(&c, Command::Run, b.path()).unwrap();
    assert_ne!(other.config_sha256, first.config_sha256);
    assert_ne!(other.outputs["scenarios.bin"], first.outputs["scenarios.bin"]);
    assert_eq!(other.outputs["estimate.json"], first.outputs["estimate.json"]);
}

#[test]
fn greek_par_rate_sweep_table() {
    let mut c = config("greece.toml");
    c.scenarios.regime_scenarios = 4;
    c.scenarios.paths_per_regime = 100;
    let dir = tempfile::tempdir().unwrap();
    run_into(&c, Command::ParRate, dir.path()).unwrap();
    let table = rows(&dir.path().join("par_rates.csv"));
    let thresholds: Vec<f64> = table.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(thresholds, vec![100.0, 200.0, 300.0, 400.0]);
    let par: Vec<f64> = table.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(par[0] > par[3]);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("par_rates.json")).unwrap()).unwrap();
    let straight = report["straight"]["annualized"].as_f64().unwrap();
    assert!(par.iter().all(|&p| p > straight));
    assert!((0.01..0.025).contains(&straight), "{straight}");
}

#[test]
fn regime_effect_test_beds() {
    let horizons = [2, 10, 26, 39];
    let mut beds = Vec::new();
    for (name, outer, inner) in [("italy_r_off.toml", 1, 400), ("italy_r1.toml", 1, 400), ("italy.toml", 20, 20)] {
        let mut c = config(name);
        c.scenarios.regime_scenarios = outer;
        c.scenarios.paths_per_regime = inner;
        let dir = tempfile::tempdir().unwrap();
        run_into(&c, Command::Lsm, dir.path()).unwrap();
        let prices = lsm_rows(dir.path());
        assert_eq!(prices.len(), horizons.len() * outer * inner, "{name}");
        for h in horizons {
            assert_eq!(prices.iter().filter(|p| p.0 == h).count(), outer * inner);
        }
        assert!(prices.iter().all(|p| p.1.is_finite() && p.1 > 0.0));
        beds.push(prices);
    }
    // no standstill without switching: prices depend on the rate alone
    let spread = |prices: &[(usize, f64)], h: usize| {
        let xs: Vec<f64> = prices.iter().filter(|p| p.0 == h).map(|p| p.1).collect();
        scoco::stats::Summary::of(&xs).stdev
    };
    assert!(spread(&beds[2], 10) > spread(&beds[0], 10));
}

#[test]
fn history_config_ingests_the_fixtures() {
    let c = config("greece_history.toml");
    let dir = tempfile::tempdir().unwrap();
    let m = run_into(&c, Command::Estimate, dir.path()).unwrap();
    assert!(m.outputs.contains_key("spread_regimes.csv"));
    assert!(m.outputs.contains_key("rate_regimes.csv"));
    let table = rows(&dir.path().join("spread_regimes.csv"));
    let labels: Vec<&str> = table.iter().map(|r| r.get(1).unwrap()).collect();
    assert_eq!(labels, ["tranquil", "turbulent", "crisis"]);
    let means: Vec<f64> = table.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(means.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bad_configs_are_rejected() {
    let mut c = config("germany.toml");
    c.instrument.standstill_periods = 0;
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(&c, Command::Price, dir.path()).is_err());

    let text = fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/germany.toml")).unwrap();
    let typo = text.replace("standstill_periods", "standstill_period");
    let err = RunConfig::parse(&typo, ".").unwrap_err().to_string();
    assert!(err.contains("standstill_period"), "{err}");
}
