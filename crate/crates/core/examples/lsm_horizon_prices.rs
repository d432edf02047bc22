// Least-squares Monte Carlo prices at future horizons.

use std::path::PathBuf;

use scoco::config::RunConfig;
use scoco::instrument::StandstillSchedule;
use scoco::lsm::{lsm_price, BasisSpec, LsmResult};
use scoco::pricing::price_with_schedules;
use scoco::run::{calibrate, estimate, simulate};

pub fn run_example() -> (f64, LsmResult) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/greece.toml");
    let mut config = RunConfig::from_path(path).unwrap();
    config.scenarios.paths_per_regime = 200;
    let models = calibrate(&config, &estimate(&config).unwrap()).unwrap();
    let set = simulate(&config, &models).unwrap();
    let spec = config.instrument_spec().unwrap();
    let schedules = StandstillSchedule::build(&set, &spec).unwrap();
    let mc = price_with_schedules(&set, &schedules, &spec).unwrap().price;
    let res = lsm_price(&set, &schedules, &spec, &BasisSpec::new(3).unwrap(), &[2, 10, 26, 39]).unwrap();
    println!("root {:.6}  mc {mc:.6}  basis {}", res.root_price, res.basis.describe());
    for d in &res.distributions {
        let s = &d.summary;
        println!(
            "{:>5.1}y  median {:.4}  iqr {:.4}  stdev {:.4}",
            d.horizon as f64 / 2.0,
            s.median,
            s.iqr(),
            s.stdev
        );
    }
    (mc, res)
}

fn main() {
    run_example();
}
