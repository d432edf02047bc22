//! Dirichlet perturbation of the stationary distribution and re-pricing.

use std::io::Write;

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regime::StationaryDistribution;
use crate::rng::{stream, Factor};
use crate::stats::{self, Summary};

/// Components below this are treated as boundary draws and resampled.
pub const BOUNDARY: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpec {
    pub base: StationaryDistribution,
    /// Concentration.
    pub alpha: f64,
    pub n_samples: usize,
}

impl DirichletSpec {
    pub fn new(base: StationaryDistribution, alpha: f64, n_samples: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("concentration must be positive, got {alpha}")));
        }
        if !base.is_strictly_positive() {
            return Err(Error::invalid("base distribution must be strictly positive"));
        }
        Ok(Self { base, alpha, n_samples })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletDraws {
    pub samples: Vec<StationaryDistribution>,
    /// Boundary draws that were rejected and redrawn.
    pub resampled: usize,
}

/// Normalized independent gamma draws with shapes `alpha * base_i`. Component
/// `i` of sample `l` reads its own keyed stream, so the draws for different
/// concentrations are coupled.
pub fn sample_dirichlet(spec: &DirichletSpec, seed: u64) -> Result<DirichletDraws> {
    let gammas = spec
        .base
        .probs()
        .iter()
        .map(|&p| Gamma::new(spec.alpha * p, 1.0).map_err(|e| Error::invalid(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<(StationaryDistribution, usize)> = (0..spec.n_samples)
        .into_par_iter()
        .map(|l| {
            let mut rngs: Vec<_> = (0..gammas.len())
                .map(|i| stream(seed, l as u64, i as u64, Factor::Dirichlet))
                .collect();
            let mut rejected = 0;
            loop {
                let g: Vec<f64> = gammas.iter().zip(&mut rngs).map(|(d, r)| d.sample(r)).collect();
                let total: f64 = g.iter().sum();
                let mut p: Vec<f64> = g.iter().map(|x| x / total).collect();
                if total > 0.0 && p.iter().all(|&x| x >= BOUNDARY) {
                    // put the rounding residue on the largest component
                    let s: f64 = p.iter().sum();
                    let imax = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).expect("nonempty");
                    p[imax] += 1.0 - s;
                    return Ok((StationaryDistribution::new(p)?, rejected));
                }
                rejected += 1;
                if rejected > 10_000 {
                    return Err(Error::invalid(format!(
                        "concentration {} puts almost all mass on the boundary",
                        spec.alpha
                    )));
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let resampled = results.iter().map(|r| r.1).sum();
    Ok(DirichletDraws {
        samples: results.into_iter().map(|r| r.0).collect(),
        resampled,
    })
}

/// Price and par rate under one sampled distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Valuation {
    pub price: f64,
    /// Annualized par coupon.
    pub par_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub probs: Vec<f64>,
    pub valuation: Option<Valuation>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub mean: f64,
    pub iqr: f64,
}

impl BoxStats {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let s = Summary::of(xs);
        Some(Self {
            q25: s.q25,
            median: s.median,
            q75: s.q75,
            mean: s.mean,
            iqr: s.iqr(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub alpha: f64,
    pub samples: Vec<SampleOutcome>,
    pub resampled: usize,
    pub failures: usize,
    pub price: Option<BoxStats>,
    pub par_rate: Option<BoxStats>,
}

impl SensitivityReport {
    pub fn prices(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.valuation.map(|v| v.price)).collect()
    }

    pub fn par_rates(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.valuation.map(|v| v.par_rate)).collect()
    }

    /// Rows `sample,p_0..p_{S-1},price,par_rate,error`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let s = self.samples.first().map_or(0, |x| x.probs.len());
        let mut header = vec!["sample".to_string()];
        header.extend((0..s).map(|i| format!("p_{i}")));
        header.extend(["price", "par_rate", "error"].map(String::from));
        wtr.write_record(&header)?;
        for (l, o) in self.samples.iter().enumerate() {
            let mut row = vec![l.to_string()];
            row.extend(o.probs.iter().map(|p| format!("{p:e}")));
            match o.valuation {
                Some(v) => row.extend([format!("{:e}", v.price), format!("{:e}", v.par_rate)]),
                None => row.extend([String::new(), String::new()]),
            }
            row.push(o.error.clone().unwrap_or_default());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Re-runs `value` for every sample. Failures are recorded per sample.
pub fn reprice_under<F>(draws: &DirichletDraws, alpha: f64, value: F) -> SensitivityReport
where
    F: Fn(&StationaryDistribution) -> Result<Valuation> + Sync,
{
    let samples: Vec<SampleOutcome> = draws
        .samples
        .par_iter()
        .map(|p| match value(p) {
            Ok(v) => SampleOutcome {
                probs: p.probs().to_vec(),
                valuation: Some(v),
                error: None,
            },
            Err(e) => SampleOutcome {
                probs: p.probs().to_vec(),
                valuation: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let failures = samples.iter().filter(|s| s.valuation.is_none()).count();
    let mut report = SensitivityReport {
        alpha,
        samples,
        resampled: draws.resampled,
        failures,
        price: None,
        par_rate: None,
    };
    report.price = BoxStats::of(&report.prices());
    report.par_rate = BoxStats::of(&report.par_rates());
    report
}

/// Componentwise sample variance of the draws.
pub fn component_variances(draws: &DirichletDraws) -> Vec<f64> {
    let s = draws.samples.first().map_or(0, |p| p.len());
    (0..s)
        .map(|i| {
            let xs: Vec<f64> = draws.samples.iter().map(|p| p.probs()[i]).collect();
            stats::sample_variance(&xs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn greek() -> StationaryDistribution {
        StationaryDistribution::new(vec![0.5612, 0.2888, 0.15]).unwrap()
    }

    #[test]
    fn draws_are_probability_vectors() {
        let d = sample_dirichlet(&DirichletSpec::new(greek(), 10.0, 500).unwrap(), 3).unwrap();
        assert_eq!(d.samples.len(), 500);
        for p in &d.samples {
            assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.probs().iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn concentration_limit() {
        let d = sample_dirichlet(&DirichletSpec::new(greek(), 1e6, 200).unwrap(), 1).unwrap();
        assert!(d.samples.iter().all(|p| p.max_abs_diff(&greek()) < 0.01));
    }

    #[test]
    fn sample_mean_matches_base() {
        let n = 10_000;
        let spec = DirichletSpec::new(greek(), 20.0, n).unwrap();
        let d = sample_dirichlet(&spec, 5).unwrap();
        for (i, &b) in greek().probs().iter().enumerate() {
            let xs: Vec<f64> = d.samples.iter().map(|p| p.probs()[i]).collect();
            let se = stats::standard_error(&xs);
            assert!((stats::mean(&xs) - b).abs() < 3.0 * se, "component {i}");
            // Var = b (1 - b) / (alpha + 1)
            let v = b * (1.0 - b) / 21.0;
            assert!((stats::sample_variance(&xs) / v - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn variance_falls_with_concentration() {
        let vars: Vec<Vec<f64>> = [10.0, 20.0, 30.0]
            .iter()
            .map(|&a| component_variances(&sample_dirichlet(&DirichletSpec::new(greek(), a, 2000).unwrap(), 7).unwrap()))
            .collect();
        for i in 0..3 {
            assert!(vars[0][i] > vars[1][i] && vars[1][i] > vars[2][i]);
        }
    }

    #[test]
    fn small_shapes_use_boundary_rejection() {
        let base = StationaryDistribution::new(vec![0.98, 0.01, 0.01]).unwrap();
        let d = sample_dirichlet(&DirichletSpec::new(base, 0.5, 200).unwrap(), 2).unwrap();
        assert!(d.resampled > 0);
        assert!(d.samples.iter().all(|p| p.probs().iter().all(|&x| x >= BOUNDARY)));
    }

    #[test]
    fn identical_samples_have_zero_iqr_and_failures_are_kept() {
        let draws = DirichletDraws {
            samples: vec![greek(); 8],
            resampled: 0,
        };
        let r = reprice_under(&draws, 10.0, |_| Ok(Valuation { price: 0.97, par_rate: 0.03 }));
        assert_eq!(r.price.as_ref().unwrap().iqr, 0.0);
        assert_eq!(r.par_rate.as_ref().unwrap().iqr, 0.0);
        let r = reprice_under(&draws, 10.0, |p| {
            if p.probs()[0] > 0.5 {
                Err(Error::invalid("boom"))
            } else {
                Ok(Valuation { price: 1.0, par_rate: 0.0 })
            }
        });
        assert_eq!(r.failures, 8);
        assert!(r.price.is_none());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("boom"));
        assert!(DirichletSpec::new(greek(), 0.0, 1).is_err());
    }
}
