// Payment standstill intervals and principal deferral on one spread path.

use scoco::instrument::{build_schedule, PathSchedule, SCoCoSpec};
use scoco::scenario::ScenarioPath;

pub fn run_example() -> PathSchedule {
    let spreads = vec![150.0, 180.0, 260.0, 240.0, 190.0, 170.0, 160.0, 210.0, 230.0, 180.0, 175.0];
    let path = ScenarioPath::deterministic(vec![0.02; spreads.len()], spreads);
    let spec = SCoCoSpec::new(8, 0.02, 200.0, 2).unwrap();
    let s = build_schedule(&path, &spec).unwrap();
    for iv in &s.lambda {
        println!("standstill {}..={}", iv.start, iv.end);
    }
    let paid: Vec<usize> = (1..=spec.maturity).filter(|&t| s.pays_coupon(t)).collect();
    println!("coupons paid at {paid:?}, principal deferred by {} periods", s.deferral);
    s
}

fn main() {
    run_example();
}
