// Par rate against trigger threshold for the Greek-style calibration.

use std::path::PathBuf;

use scoco::config::RunConfig;
use scoco::instrument::SCoCoSpec;
use scoco::pricing::{par_rate, par_rate_sweep, write_par_table, ParRate};
use scoco::run::{calibrate, estimate, simulate};

pub fn run_example() -> (ParRate, Vec<(f64, ParRate)>) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/greece.toml");
    let mut config = RunConfig::from_path(path).unwrap();
    config.scenarios.paths_per_regime = 100;
    let models = calibrate(&config, &estimate(&config).unwrap()).unwrap();
    let set = simulate(&config, &models).unwrap();
    let spec = config.instrument_spec().unwrap();
    let straight = par_rate(&set, &SCoCoSpec::straight(spec.maturity, 0.0)).unwrap();
    let rows = par_rate_sweep(&set, &spec, &[100.0, 200.0, 300.0, 400.0]).unwrap();
    println!("straight bond par {:.4}%", 100.0 * straight.annualized);
    write_par_table(&rows, std::io::stdout()).unwrap();
    (straight, rows)
}

fn main() {
    run_example();
}
