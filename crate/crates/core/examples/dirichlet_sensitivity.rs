// Spread of the Greek stationary distribution under Dirichlet draws.

use scoco::regime::{MaxEntropyEstimator, StationaryDistribution};
use scoco::sensitivity::{component_variances, reprice_under, sample_dirichlet, DirichletSpec, SensitivityReport, Valuation};

pub fn run_example() -> Vec<SensitivityReport> {
    let base = StationaryDistribution::new(vec![0.5612, 0.2888, 0.15]).unwrap();
    let estimator = MaxEntropyEstimator::default();
    [10.0, 20.0, 30.0]
        .iter()
        .map(|&alpha| {
            let draws = sample_dirichlet(&DirichletSpec::new(base.clone(), alpha, 40).unwrap(), 9).unwrap();
            let v = component_variances(&draws);
            // stand-in valuation: the expected time in the crisis regime
            let report = reprice_under(&draws, alpha, |p| {
                let m = estimator.estimate(p, &[0.999, 0.998])?.matrix;
                Ok(Valuation { price: 1.0 - p.probs()[2], par_rate: 1.0 / (1.0 - m.get(2, 2)) })
            });
            println!(
                "alpha {alpha:>4}: var {:.2e} {:.2e} {:.2e}, failures {}, iqr {:.4}",
                v[0],
                v[1],
                v[2],
                report.failures,
                report.price.as_ref().map_or(f64::NAN, |b| b.iqr)
            );
            report
        })
        .collect()
}

fn main() {
    run_example();
}
