// Full batch run from a configuration file, with its manifest.

use std::path::PathBuf;

use scoco::config::RunConfig;
use scoco::run::{run_into, Command, Manifest};

pub fn run_example() -> Manifest {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/germany.toml");
    let mut config = RunConfig::from_path(path).unwrap();
    config.scenarios.regime_scenarios = 2;
    config.scenarios.paths_per_regime = 50;
    let out = std::env::temp_dir().join(format!("scoco-run-{}", std::process::id()));
    let manifest = run_into(&config, Command::Run, &out).unwrap();
    for (file, hash) in &manifest.outputs {
        println!("{file:<24} {}", &hash[..16]);
    }
    std::fs::remove_dir_all(&out).ok();
    manifest
}

fn main() {
    run_example();
}
