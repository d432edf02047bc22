// Dual trigger: systemic breaches suspend K1 coupons, idiosyncratic ones K2.

use scoco::instrument::{build_dual_schedule, DualTrigger, PathSchedule, SCoCoSpec};
use scoco::scenario::ScenarioPath;

pub fn run_example() -> PathSchedule {
    let spreads = vec![100.0, 250.0, 120.0, 110.0, 105.0, 100.0, 260.0, 120.0, 110.0, 100.0, 100.0, 100.0, 100.0, 100.0];
    let index = vec![40.0, 80.0, 50.0, 40.0, 40.0, 40.0, 30.0, 40.0, 40.0, 40.0, 40.0, 40.0, 40.0, 40.0];
    let mut path = ScenarioPath::deterministic(vec![0.02; spreads.len()], spreads);
    path.index = Some(index);
    let spec = SCoCoSpec::new(10, 0.02, 200.0, 2)
        .unwrap()
        .with_dual(DualTrigger { index_threshold: 60.0, k1: 1, k2: 3, allow_short_idiosyncratic: false })
        .unwrap();
    let s = build_dual_schedule(&path, &spec).unwrap();
    println!("systemic {:?}", s.lambda_steps());
    println!("idiosyncratic {:?}", s.upsilon_steps());
    s
}

fn main() {
    run_example();
}
