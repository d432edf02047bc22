//! Monte Carlo present value and par coupon of an S-CoCo.
//!
//! Per scenario the coupon `c` is paid at each step `t = 1..=T` outside a
//! standstill and the principal at `T + deferral`, all discounted with
//! `B(0, t) = exp(-sum_{u < t} r_u dt)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instrument::{PathSchedule, SCoCoSpec, StandstillSchedule};
use crate::scenario::ScenarioSet;
use crate::stats;

/// Discount factors `B(0, t)` of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurvePath {
    pub factors: Vec<f64>,
}

impl DiscountCurvePath {
    /// `B(t, t') = B(0, t') / B(0, t)`.
    pub fn forward(&self, t: usize, t_end: usize) -> f64 {
        self.factors[t_end] / self.factors[t]
    }
}

/// `B(0, t)` for every grid point of `rates`, using the rate at the start of
/// each period.
pub fn discount_factors(rates: &[f64], dt: f64) -> Result<DiscountCurvePath> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let mut factors = Vec::with_capacity(rates.len());
    let mut acc = 0.0;
    for (t, _) in rates.iter().enumerate() {
        factors.push((-acc * dt).exp());
        acc += rates[t];
    }
    Ok(DiscountCurvePath { factors })
}

/// Standstill statistics over the scenario set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerStats {
    pub mean_standstills: f64,
    pub mean_deferral: f64,
    pub triggered_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingResult {
    pub price: f64,
    pub standard_error: f64,
    pub coupon_pv: f64,
    pub principal_pv: f64,
    /// Mean discounted sum over paid coupon dates, the value of a unit coupon.
    pub annuity: f64,
    pub n_paths: usize,
    pub trigger_stats: TriggerStats,
}

/// Per-path value components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathValue {
    pub annuity: f64,
    pub principal: f64,
}

impl PathValue {
    pub fn pv(&self, coupon: f64) -> f64 {
        coupon * self.annuity + self.principal
    }
}

fn path_value(factors: &[f64], sched: &PathSchedule, maturity: usize) -> PathValue {
    let mut annuity = 0.0;
    for t in 1..=maturity {
        if sched.pays_coupon(t) {
            annuity += factors[t];
        }
    }
    PathValue {
        annuity,
        principal: factors[maturity + sched.deferral],
    }
}

/// Per-path annuity and principal values under given schedules.
pub fn path_values(set: &ScenarioSet, schedules: &StandstillSchedule, spec: &SCoCoSpec) -> Result<Vec<PathValue>> {
    if schedules.len() != set.len() {
        return Err(Error::invalid("schedules do not match the scenario set"));
    }
    let needed = spec.maturity + spec.max_deferral();
    let available = set.n_steps();
    if available < needed {
        return Err(Error::HorizonTooShort { needed, available });
    }
    let dt = set.dt();
    set.paths
        .par_iter()
        .zip(schedules.paths.par_iter())
        .map(|(p, s)| Ok(path_value(&discount_factors(&p.rates, dt)?.factors, s, spec.maturity)))
        .collect()
}

fn summarize(values: &[PathValue], spec: &SCoCoSpec, schedules: &StandstillSchedule) -> PricingResult {
    let pvs: Vec<f64> = values.iter().map(|v| v.pv(spec.coupon)).collect();
    let annuities: Vec<f64> = values.iter().map(|v| v.annuity).collect();
    let principals: Vec<f64> = values.iter().map(|v| v.principal).collect();
    let annuity = stats::mean(&annuities);
    let coupon_pv = spec.coupon * annuity;
    let principal_pv = stats::mean(&principals);
    PricingResult {
        price: coupon_pv + principal_pv,
        standard_error: stats::standard_error(&pvs),
        coupon_pv,
        principal_pv,
        annuity,
        n_paths: values.len(),
        trigger_stats: TriggerStats {
            mean_standstills: schedules.mean_standstills(),
            mean_deferral: schedules.mean_deferral(),
            triggered_fraction: schedules.triggered_fraction(),
        },
    }
}

/// Prices under precomputed schedules.
pub fn price_with_schedules(set: &ScenarioSet, schedules: &StandstillSchedule, spec: &SCoCoSpec) -> Result<PricingResult> {
    let values = path_values(set, schedules, spec)?;
    Ok(summarize(&values, spec, schedules))
}

/// Single-trigger price. A dual trigger on `spec` is ignored.
pub fn price(set: &ScenarioSet, spec: &SCoCoSpec) -> Result<PricingResult> {
    let single = SCoCoSpec { dual: None, ..*spec };
    let schedules = StandstillSchedule::build(set, &single)?;
    price_with_schedules(set, &schedules, &single)
}

/// Dual-trigger price; coupons are paid only outside both standstill families.
pub fn price_dual(set: &ScenarioSet, spec: &SCoCoSpec) -> Result<PricingResult> {
    if spec.dual.is_none() {
        return Err(Error::invalid("contract has no dual trigger"));
    }
    if !set.has_index() {
        return Err(Error::MissingIndex);
    }
    let schedules = StandstillSchedule::build(set, spec)?;
    price_with_schedules(set, &schedules, spec)
}

/// Par coupon solving `P0(c) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParRate {
    /// Coupon per pricing period.
    pub coupon: f64,
    /// Coupon per year.
    pub annualized: f64,
    /// Root found by bisection on the price function.
    pub bisection: f64,
    /// `|P0(coupon) - 1|`.
    pub residual: f64,
    pub principal_pv: f64,
    pub annuity: f64,
}

/// Exact solve of the affine equation, checked by bisection.
pub fn par_rate_from_values(values: &[PathValue], steps_per_year: usize) -> Result<ParRate> {
    let annuities: Vec<f64> = values.iter().map(|v| v.annuity).collect();
    let principals: Vec<f64> = values.iter().map(|v| v.principal).collect();
    let annuity = stats::mean(&annuities);
    let principal_pv = stats::mean(&principals);
    if !(annuity > 0.0) {
        return Err(Error::ParRateUndefined);
    }
    if principal_pv >= 1.0 {
        return Err(Error::invalid(format!(
            "principal value {principal_pv} is not below par; no positive par coupon exists"
        )));
    }
    let coupon = (1.0 - principal_pv) / annuity;
    let price_at = |c: f64| {
        let pvs: Vec<f64> = values.iter().map(|v| v.pv(c)).collect();
        stats::mean(&pvs)
    };
    let (mut lo, mut hi) = (0.0, 2.0 * coupon);
    while price_at(hi) < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if price_at(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bisection = 0.5 * (lo + hi);
    Ok(ParRate {
        coupon,
        annualized: coupon * steps_per_year as f64,
        bisection,
        residual: (price_at(coupon) - 1.0).abs(),
        principal_pv,
        annuity,
    })
}

/// Par coupon of the contract; the coupon on `spec` is ignored.
pub fn par_rate(set: &ScenarioSet, spec: &SCoCoSpec) -> Result<ParRate> {
    let schedules = StandstillSchedule::build(set, spec)?;
    let values = path_values(set, &schedules, spec)?;
    par_rate_from_values(&values, set.pricing_steps_per_year)
}

/// Par rate for each trigger threshold.
pub fn par_rate_sweep(set: &ScenarioSet, spec: &SCoCoSpec, thresholds: &[f64]) -> Result<Vec<(f64, ParRate)>> {
    thresholds
        .iter()
        .map(|&s| par_rate(set, &spec.with_threshold(s)).map(|p| (s, p)))
        .collect()
}

/// Writes `threshold,par_rate_annual,par_coupon` rows.
pub fn write_par_table<W: Write>(rows: &[(f64, ParRate)], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["threshold", "par_rate_annual", "par_coupon"])?;
    for (s, p) in rows {
        wtr.write_record([s.to_string(), format!("{:e}", p.annualized), format!("{:e}", p.coupon)])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioPath;

    fn flat_set(rate: f64, n: usize, spreads: Vec<f64>) -> ScenarioSet {
        ScenarioSet::from_paths(vec![ScenarioPath::deterministic(vec![rate; n], spreads)], 2).unwrap()
    }

    #[test]
    fn discount_factor_cases() {
        let d = discount_factors(&[0.0; 5], 0.5).unwrap();
        assert!(d.factors.iter().all(|&b| b == 1.0));
        let d = discount_factors(&[0.02; 5], 0.5).unwrap();
        assert!((d.factors[2] - 0.980_198_673_306_755_3).abs() < 1e-15);
        assert!((d.factors[4] - (-0.02f64 * 4.0 * 0.5).exp()).abs() < 1e-15);
        assert!((d.forward(1, 3) * d.factors[1] - d.factors[3]).abs() < 1e-16);
        assert!(discount_factors(&[0.02], 0.0).is_err());
    }

    #[test]
    fn untriggered_bond_matches_closed_form() {
        let set = flat_set(0.03, 25, vec![100.0; 25]);
        let spec = SCoCoSpec::straight(20, 0.015);
        let res = price(&set, &spec).unwrap();
        let b = |t: usize| (-0.03 * 0.5 * t as f64).exp();
        let closed = 0.015 * (1..=20).map(b).sum::<f64>() + b(20);
        assert!((res.price - closed).abs() < 1e-12);
        assert_eq!(res.price, res.coupon_pv + res.principal_pv);
        assert_eq!(res.standard_error, 0.0);

        let zero = price(&set, &spec.with_coupon(0.0)).unwrap();
        assert!((zero.price - b(20)).abs() < 1e-15);

        let par = par_rate(&set, &spec).unwrap();
        let textbook = (1.0 - b(20)) / (1..=20).map(b).sum::<f64>();
        assert!((par.coupon - textbook).abs() < 1e-12);
        assert!(par.residual < 1e-10);
        assert!((par.bisection - par.coupon).abs() < 1e-10);
    }

    #[test]
    fn standstill_omits_coupons_by_hand() {
        let mut spreads = vec![100.0; 14];
        spreads[3] = 600.0;
        let set = flat_set(0.02, 14, spreads);
        let spec = SCoCoSpec::new(10, 0.01, 500.0, 2).unwrap();
        let res = price(&set, &spec).unwrap();
        let b = |t: usize| (-0.02 * 0.5 * t as f64).exp();
        let by_hand = 0.01 * [1, 2, 6, 7, 8, 9, 10].iter().map(|&t| b(t)).sum::<f64>() + b(10);
        assert!((res.price - by_hand).abs() < 1e-14);
    }

    #[test]
    fn deferred_principal_is_discounted_further() {
        let mut spreads = vec![100.0; 14];
        spreads[9] = 600.0;
        let set = flat_set(0.02, 14, spreads);
        let spec = SCoCoSpec::new(10, 0.0, 500.0, 3).unwrap();
        let res = price(&set, &spec).unwrap();
        assert!((res.principal_pv - (-0.02f64 * 0.5 * 12.0).exp()).abs() < 1e-15);
        assert_eq!(res.trigger_stats.mean_deferral, 2.0);
    }

    #[test]
    fn errors() {
        let set = flat_set(0.02, 12, vec![100.0; 12]);
        let spec = SCoCoSpec::new(10, 0.01, 500.0, 3).unwrap();
        assert!(matches!(price(&set, &spec), Err(Error::HorizonTooShort { .. })));
        let spec = SCoCoSpec::new(10, 0.01, 500.0, 20).unwrap();
        let long = ScenarioSet::from_paths(vec![ScenarioPath::deterministic(vec![0.02; 31], vec![900.0; 31])], 2).unwrap();
        assert!(matches!(par_rate(&long, &spec), Err(Error::ParRateUndefined)));
        let dual_less = SCoCoSpec::new(10, 0.01, 500.0, 1).unwrap();
        assert!(price_dual(&long, &dual_less).is_err());
    }
}
