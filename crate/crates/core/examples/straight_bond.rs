// With an unreachable threshold and a flat rate the Monte Carlo price is the
// textbook coupon bond value.

use scoco::instrument::SCoCoSpec;
use scoco::pricing::{par_rate, price};
use scoco::scenario::{ScenarioPath, ScenarioSet};

pub fn run_example() -> (f64, f64, f64, f64) {
    let (r, dt, n) = (0.03, 0.5, 20);
    let set = ScenarioSet::from_paths(vec![ScenarioPath::deterministic(vec![r; n + 4], vec![300.0; n + 4])], 2).unwrap();
    let spec = SCoCoSpec::straight(n, 0.025);
    let mc = price(&set, &spec).unwrap().price;
    let b = |t: usize| (-r * dt * t as f64).exp();
    let closed = (1..=n).map(|t| spec.coupon * b(t)).sum::<f64>() + b(n);
    let par = par_rate(&set, &spec).unwrap().coupon;
    let textbook = (1.0 - b(n)) / (1..=n).map(b).sum::<f64>();
    println!("price {mc:.12} vs {closed:.12}; par coupon {par:.12} vs {textbook:.12}");
    (mc, closed, par, textbook)
}

fn main() {
    run_example();
}
