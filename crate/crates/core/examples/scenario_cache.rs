// Joint spread and short-rate scenarios with a binary cache round trip.

use scoco::regime::TransitionMatrix;
use scoco::scenario::{generate, ProcessModel, ScenarioConfig, ScenarioSet};
use scoco::srmr::MomentTargets;

fn targets(mean: f64, sd: f64, ret: f64) -> MomentTargets {
    MomentTargets { s_hat: mean, sigma_s_hat: sd, sigma_r_hat: ret, s2_hat: 0.5 * ret * ret, s0: mean }
}

pub fn run_example() -> ScenarioSet {
    let spread_p = TransitionMatrix::new(vec![vec![0.998, 0.002], vec![0.004, 0.996]]).unwrap();
    let spread = ProcessModel::from_targets(spread_p, &[targets(120.0, 40.0, 0.04), targets(600.0, 200.0, 0.06)]).unwrap();
    let rate = ProcessModel::single(scoco::srmr::RegimeCalibration::new(targets(2.5, 0.5, 0.01)).unwrap())
        .with_scale(1.0, 0.01);
    let config = ScenarioConfig {
        n_regime_scenarios: 4,
        n_paths_per_regime: 50,
        horizon_years: 5.0,
        seed: 3,
        ..ScenarioConfig::default()
    };
    let set = generate(&config, &spread, &rate, None).unwrap();
    let mut buf = Vec::new();
    set.write_cache(&mut buf).unwrap();
    let back = ScenarioSet::read_cache(buf.as_slice()).unwrap();
    assert_eq!(back, set);
    let last = set.n_steps();
    let mean_spread = set.paths.iter().map(|p| p.spreads[last]).sum::<f64>() / set.len() as f64;
    let mean_rate = set.paths.iter().map(|p| p.rates[last]).sum::<f64>() / set.len() as f64;
    println!(
        "{} paths, {} steps, cache {} bytes; at 5y mean spread {mean_spread:.1} bp, mean rate {:.3}%",
        set.len(),
        last,
        buf.len(),
        100.0 * mean_rate
    );
    set
}

fn main() {
    run_example();
}
