// Maximum-entropy transition matrix for the three Greek CDS regimes.

use scoco::regime::{expected_duration, stationary_of, MaxEntropyEstimator, StationaryDistribution, TransitionMatrix};

pub fn run_example() -> TransitionMatrix {
    let pi = StationaryDistribution::new(vec![0.5612, 0.2888, 0.15]).unwrap();
    let fit = MaxEntropyEstimator::default().estimate(&pi, &[0.999, 0.998]).unwrap();
    let p = fit.matrix;
    println!("entropy {:.6}, {}/{} starts converged", fit.entropy, fit.starts_converged, fit.starts);
    for (i, row) in p.rows().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.6}")).collect();
        println!("{}  E[D] = {:>7.1} days", cells.join("  "), expected_duration(&p, i).unwrap());
    }
    let back = stationary_of(&p).unwrap();
    println!("stationary error {:.2e}", back.max_abs_diff(&pi));
    p
}

fn main() {
    run_example();
}
