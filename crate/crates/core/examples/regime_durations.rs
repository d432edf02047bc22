// Simulated regime sojourns against the expected duration 1 / (1 - p_ii).

use scoco::regime::{empirical_stationary, expected_duration, simulate_regimes_seeded, TransitionMatrix};

pub fn run_example() -> Vec<(f64, f64)> {
    let p = TransitionMatrix::new(vec![
        vec![0.98, 0.015, 0.005],
        vec![0.03, 0.95, 0.02],
        vec![0.02, 0.08, 0.90],
    ])
    .unwrap();
    let path = simulate_regimes_seeded(&p, 0, 200_000, 11).unwrap();
    let freq = empirical_stationary(&path.states, 3).unwrap();
    let mut out = Vec::new();
    for i in 0..3 {
        let (time, exits) = path.sojourn_counts(i);
        let mean = time as f64 / exits.max(1) as f64;
        let expect = expected_duration(&p, i).unwrap();
        println!("regime {i}: share {:.4}, mean sojourn {mean:.2} (expected {expect:.2})", freq.probs()[i]);
        out.push((mean, expect));
    }
    out
}

fn main() {
    run_example();
}
