// Calibrates the SRMR process to moment targets and checks them on a long
// simulated path.

use scoco::rng::{stream, Factor};
use scoco::srmr::{asymptotic_moments, calibrate, estimate_moments, simulate, MomentTargets, SrmrState};

pub fn run_example() -> (MomentTargets, MomentTargets) {
    let targets = MomentTargets {
        s_hat: 150.0,
        sigma_s_hat: 30.0,
        sigma_r_hat: 0.01,
        s2_hat: 2.2e-5,
        s0: 150.0,
    };
    let p = calibrate(&targets).unwrap();
    println!("k0 {:.3e}  k1 {:.4}  k2 {:.3e}  sigma {:.3e}", p.k0, p.k1, p.k2, p.sigma);
    let m = asymptotic_moments(&p, targets.s0);
    println!("asymptotic E[S] {:.2}  sd[S] {:.2}", m.mean_s, m.var_s.sqrt());
    let mut rng = stream(5, 0, 0, Factor::Generic);
    let path = simulate(&p, SrmrState::start(targets.s0), 200_000, &mut rng);
    let levels: Vec<f64> = path[20_000..].iter().map(|s| s.level).collect();
    let got = estimate_moments(&levels).unwrap();
    println!(
        "simulated E[S] {:.2}  sd[S] {:.2}  sd[r] {:.4}  smoothness {:.2e}",
        got.s_hat, got.sigma_s_hat, got.sigma_r_hat, got.s2_hat
    );
    (targets, got)
}

fn main() {
    run_example();
}
