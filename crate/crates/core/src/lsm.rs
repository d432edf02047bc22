//! State-contingent prices by least-squares Monte Carlo.
//!
//! Working backwards from maturity, the discounted next-period value
//! `[P_{t+1} + c I(t+1)] B(t, t+1)` is regressed on powers of the short rate
//! and the coupon indicator `I(t)` (1 when the coupon at `t` is paid). The
//! fitted function `P_t` is the clean price at `t`. At maturity the value is
//! `1 + c` without a standstill and the nested zero-coupon value of the
//! deferred principal otherwise.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instrument::{SCoCoSpec, StandstillSchedule};
use crate::scenario::ScenarioSet;
use crate::stats::{self, Summary};

/// Regression basis `{1, r, .., r^(M-1)}` plus optionally the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    /// Number of rate functions M, including the constant.
    pub rate_terms: usize,
    pub include_indicator: bool,
}

impl BasisSpec {
    pub fn new(rate_terms: usize) -> Result<Self> {
        if !(1..=5).contains(&rate_terms) {
            return Err(Error::invalid(format!("rate_terms must be in 1..=5, got {rate_terms}")));
        }
        Ok(Self {
            rate_terms,
            include_indicator: true,
        })
    }

    pub fn rate_only(rate_terms: usize) -> Result<Self> {
        Ok(Self {
            include_indicator: false,
            ..Self::new(rate_terms)?
        })
    }

    /// Highest power of the rate.
    pub fn max_power(&self) -> usize {
        self.rate_terms - 1
    }

    pub fn size(&self) -> usize {
        self.rate_terms + self.include_indicator as usize
    }

    pub fn describe(&self) -> String {
        let mut names: Vec<String> = (0..self.rate_terms)
            .map(|k| match k {
                0 => "1".to_string(),
                1 => "r".to_string(),
                k => format!("r^{k}"),
            })
            .collect();
        if self.include_indicator {
            names.push("I".to_string());
        }
        names.join(",")
    }
}

/// One backward regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionStage {
    pub step: usize,
    /// Coefficients on `1, r, .., r^(M-1), I` in raw rate units; dropped
    /// columns have coefficient 0.
    pub coefficients: Vec<f64>,
    /// Columns removed for rank deficiency, by basis position.
    pub dropped: Vec<usize>,
    pub r_squared: f64,
    pub residual_stdev: f64,
    /// `max_k |X_k' e| / (|X_k| |y|)`.
    pub orthogonality: f64,
}

/// Cross-section of fitted prices at a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDistribution {
    pub horizon: usize,
    pub prices: Vec<f64>,
    pub summary: Summary,
}

impl PriceDistribution {
    fn new(horizon: usize, prices: Vec<f64>) -> Self {
        Self {
            horizon,
            summary: Summary::of(&prices),
            prices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsmResult {
    pub root_price: f64,
    pub basis: BasisSpec,
    /// Stages in backward order, from `T - 1` down to 1.
    pub stages: Vec<RegressionStage>,
    pub distributions: Vec<PriceDistribution>,
}

impl LsmResult {
    pub fn max_orthogonality(&self) -> f64 {
        self.stages.iter().map(|s| s.orthogonality).fold(0.0, f64::max)
    }

    pub fn distribution(&self, horizon: usize) -> Option<&PriceDistribution> {
        self.distributions.iter().find(|d| d.horizon == horizon)
    }

    /// Rows `scenario,horizon,price`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["scenario", "horizon", "price"])?;
        for d in &self.distributions {
            for (l, p) in d.prices.iter().enumerate() {
                wtr.write_record([l.to_string(), d.horizon.to_string(), format!("{p:e}")])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

struct Fit {
    fitted: Vec<f64>,
    stage: RegressionStage,
}

/// OLS of `y` on the basis evaluated at `(rates, indicator)`, with rate
/// powers standardized over the cross-section.
fn regress(step: usize, rates: &[f64], indicator: Option<&[bool]>, y: &[f64], basis: &BasisSpec) -> Result<Fit> {
    let n = y.len();
    if n == 0 {
        return Err(Error::RankDeficient { step });
    }
    let mean = stats::mean(rates);
    let sd = stats::variance(rates).sqrt();
    let scale = if sd > 1e-12 * mean.abs().max(1e-12) { sd } else { 0.0 };

    // candidate columns by basis position; the rate columns vanish when the
    // cross-section is constant
    let mut active: Vec<usize> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();
    active.push(0);
    for k in 1..basis.rate_terms {
        if scale > 0.0 {
            active.push(k);
        } else {
            dropped.push(k);
        }
    }
    let ind_pos = basis.rate_terms;
    if let (true, Some(ind)) = (basis.include_indicator, indicator) {
        let ones = ind.iter().filter(|&&b| b).count();
        if ones > 0 && ones < n {
            active.push(ind_pos);
        } else {
            dropped.push(ind_pos);
        }
    } else if basis.include_indicator {
        dropped.push(ind_pos);
    }

    let column = |pos: usize, l: usize| -> f64 {
        if pos == ind_pos {
            indicator.map_or(0.0, |ind| ind[l] as u8 as f64)
        } else if pos == 0 {
            1.0
        } else {
            ((rates[l] - mean) / scale).powi(pos as i32)
        }
    };

    let yv = DVector::from_column_slice(y);
    loop {
        let p = active.len();
        let x = DMatrix::from_fn(n, p, |l, j| column(active[j], l));
        let qr = x.clone().qr();
        let r = qr.r();
        let diag = |j: usize| if j < r.nrows() { r[(j, j)].abs() } else { 0.0 };
        let diag_max = (0..p).map(diag).fold(0.0, f64::max);
        let deficient = (0..p).any(|j| diag(j) <= 1e-10 * diag_max);
        if deficient {
            if p == 1 {
                return Err(Error::RankDeficient { step });
            }
            // the indicator goes first, then the highest rate power
            let victim = if active.contains(&ind_pos) {
                ind_pos
            } else {
                *active.iter().filter(|&&k| k != 0).max().expect("rate column")
            };
            active.retain(|&k| k != victim);
            dropped.push(victim);
            continue;
        }
        let mut qty = yv.clone();
        qr.q_tr_mul(&mut qty);
        let rhs = qty.rows(0, p).into_owned();
        let beta = r
            .solve_upper_triangular(&rhs)
            .ok_or(Error::RankDeficient { step })?;
        let fitted = &x * &beta;
        let resid = &yv - &fitted;

        let ynorm = yv.norm().max(f64::MIN_POSITIVE);
        let orthogonality = (0..p)
            .map(|j| {
                let col = x.column(j);
                col.dot(&resid).abs() / (col.norm() * ynorm)
            })
            .fold(0.0, f64::max);
        let ymean = stats::mean(y);
        let tss: f64 = y.iter().map(|v| (v - ymean) * (v - ymean)).sum();
        let rss = resid.norm_squared();
        let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

        // back to raw rate powers: ((r - m) / s)^k = sum_j C(k, j) r^j (-m)^(k-j) / s^k
        let mut coefficients = vec![0.0; basis.size()];
        for (j, &pos) in active.iter().enumerate() {
            if pos == ind_pos {
                coefficients[ind_pos] = beta[j];
                continue;
            }
            let k = pos as i32;
            let inv = if k == 0 { 1.0 } else { scale.powi(-k) };
            for jj in 0..=pos {
                coefficients[jj] += beta[j] * binomial(pos, jj) * (-mean).powi(k - jj as i32) * inv;
            }
        }
        dropped.sort_unstable();
        return Ok(Fit {
            fitted: fitted.as_slice().to_vec(),
            stage: RegressionStage {
                step,
                coefficients,
                dropped,
                r_squared,
                residual_stdev: (rss / n as f64).sqrt(),
                orthogonality,
            },
        });
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn rates_at(set: &ScenarioSet, t: usize) -> Vec<f64> {
    set.paths.iter().map(|p| p.rates[t]).collect()
}

/// Expected value at `T` of a zero-coupon bond paying 1 at `T + d`, by a
/// rate-only backward regression over all scenarios. Returns one value per
/// scenario.
pub fn nested_zcb(set: &ScenarioSet, maturity: usize, deferral: usize, basis: &BasisSpec) -> Result<Vec<f64>> {
    let basis = BasisSpec {
        include_indicator: false,
        ..*basis
    };
    if deferral == 0 {
        return Ok(vec![1.0; set.len()]);
    }
    let needed = maturity + deferral;
    if set.n_steps() < needed {
        return Err(Error::HorizonTooShort {
            needed,
            available: set.n_steps(),
        });
    }
    let growth = one_step_discounts(set);
    let mut value = vec![1.0; set.len()];
    for t in (maturity..needed).rev() {
        let y: Vec<f64> = value.iter().zip(&growth).map(|(v, g)| v * g[t]).collect();
        value = regress(t, &rates_at(set, t), None, &y, &basis)?.fitted;
    }
    Ok(value)
}

/// `B(t, t + 1)` per scenario and step.
fn one_step_discounts(set: &ScenarioSet) -> Vec<Vec<f64>> {
    let dt = set.dt();
    set.paths
        .iter()
        .map(|p| p.rates.iter().map(|r| (-r * dt).exp()).collect())
        .collect()
}

/// LSM root price and horizon price distributions.
pub fn lsm_price(
    set: &ScenarioSet,
    schedules: &StandstillSchedule,
    spec: &SCoCoSpec,
    basis: &BasisSpec,
    horizons: &[usize],
) -> Result<LsmResult> {
    let t_mat = spec.maturity;
    if schedules.len() != set.len() {
        return Err(Error::invalid("schedules do not match the scenario set"));
    }
    if let Some(&h) = horizons.iter().find(|&&h| h == 0 || h >= t_mat) {
        return Err(Error::invalid(format!("horizon {h} must lie in 1..{t_mat}")));
    }
    let needed = t_mat + spec.max_deferral();
    if set.n_steps() < needed {
        return Err(Error::HorizonTooShort {
            needed,
            available: set.n_steps(),
        });
    }
    let growth = one_step_discounts(set);
    let c = spec.coupon;
    let pays = |t: usize| -> Vec<bool> { schedules.paths.iter().map(|s| s.pays_coupon(t)).collect() };

    // terminal cash at T, coupon included
    let mut deferrals: Vec<usize> = schedules.paths.iter().map(|s| s.deferral).collect();
    deferrals.sort_unstable();
    deferrals.dedup();
    let mut zcb: Vec<(usize, Vec<f64>)> = Vec::new();
    for &d in &deferrals {
        if d > 0 {
            zcb.push((d, nested_zcb(set, t_mat, d, basis)?));
        }
    }
    let mut cash: Vec<f64> = schedules
        .paths
        .iter()
        .enumerate()
        .map(|(l, s)| {
            if s.pays_coupon(t_mat) {
                1.0 + c
            } else if s.deferral == 0 {
                1.0
            } else {
                zcb.iter().find(|(d, _)| *d == s.deferral).expect("deferral value").1[l]
            }
        })
        .collect();

    let mut stages = Vec::with_capacity(t_mat);
    let mut distributions = Vec::new();
    for t in (1..t_mat).rev() {
        let y: Vec<f64> = cash.iter().zip(&growth).map(|(v, g)| v * g[t]).collect();
        let ind = pays(t);
        let fit = regress(t, &rates_at(set, t), Some(&ind), &y, basis)?;
        if horizons.contains(&t) {
            distributions.push(PriceDistribution::new(t, fit.fitted.clone()));
        }
        stages.push(fit.stage);
        cash = fit
            .fitted
            .iter()
            .zip(&ind)
            .map(|(p, &paid)| p + if paid { c } else { 0.0 })
            .collect();
    }
    let root: Vec<f64> = cash.iter().zip(&growth).map(|(v, g)| v * g[0]).collect();
    distributions.sort_by_key(|d| d.horizon);
    Ok(LsmResult {
        root_price: stats::mean(&root),
        basis: *basis,
        stages,
        distributions,
    })
}

/// Mean absolute percentage deviation of `estimates` from `reference`.
pub fn mape(estimates: &[f64], reference: &[f64]) -> f64 {
    let errs: Vec<f64> = estimates
        .iter()
        .zip(reference)
        .map(|(e, r)| ((e - r) / r).abs())
        .collect();
    stats::mean(&errs)
}
