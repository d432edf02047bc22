//! S-CoCo contract terms and per-scenario payment standstill schedules.
//!
//! A breach at an eligible step `t` opens the standstill `{t, .., t + K}`
//! (clipped at maturity), so the trigger-date coupon is itself suspended.
//! Breaches inside an open standstill are ignored.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ScenarioPath, ScenarioSet};

/// Market-index condition of the dual trigger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualTrigger {
    /// Index level at or above which a breach counts as systemic.
    pub index_threshold: f64,
    /// Standstill length after a systemic breach.
    pub k1: usize,
    /// Standstill length after an idiosyncratic breach.
    pub k2: usize,
    /// Accept `k2 <= k1`.
    #[serde(default)]
    pub allow_short_idiosyncratic: bool,
}

/// Contract terms on the pricing grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SCoCoSpec {
    /// Maturity in pricing steps.
    pub maturity: usize,
    /// Coupon per pricing period per unit notional.
    pub coupon: f64,
    /// CDS spread trigger, basis points. `inf` disables the trigger.
    pub threshold: f64,
    /// Standstill length in periods.
    pub standstill_k: usize,
    #[serde(default)]
    pub dual: Option<DualTrigger>,
}

impl SCoCoSpec {
    pub fn new(maturity: usize, coupon: f64, threshold: f64, standstill_k: usize) -> Result<Self> {
        let s = Self {
            maturity,
            coupon,
            threshold,
            standstill_k,
            dual: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// A bond whose trigger never fires.
    pub fn straight(maturity: usize, coupon: f64) -> Self {
        Self {
            maturity,
            coupon,
            threshold: f64::INFINITY,
            standstill_k: 1,
            dual: None,
        }
    }

    pub fn with_dual(mut self, dual: DualTrigger) -> Result<Self> {
        self.dual = Some(dual);
        self.validate()?;
        Ok(self)
    }

    pub fn with_coupon(self, coupon: f64) -> Self {
        Self { coupon, ..self }
    }

    pub fn with_threshold(self, threshold: f64) -> Self {
        Self { threshold, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.maturity == 0 {
            return Err(Error::invalid("maturity must be at least one step"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::invalid(format!("threshold must be positive, got {}", self.threshold)));
        }
        if self.standstill_k == 0 {
            return Err(Error::invalid("standstill length K must be at least 1"));
        }
        if !self.coupon.is_finite() {
            return Err(Error::invalid("coupon must be finite"));
        }
        if let Some(d) = self.dual {
            if d.k1 == 0 || d.k2 == 0 {
                return Err(Error::invalid("dual standstill lengths must be at least 1"));
            }
            if d.k2 <= d.k1 && !d.allow_short_idiosyncratic {
                return Err(Error::invalid(format!(
                    "idiosyncratic standstill K2 = {} must exceed systemic K1 = {}",
                    d.k2, d.k1
                )));
            }
        }
        Ok(())
    }

    /// Longest possible principal deferral.
    pub fn max_deferral(&self) -> usize {
        match self.dual {
            Some(d) => d.k1.max(d.k2),
            None => self.standstill_k,
        }
    }
}

/// Standstill family of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    None,
    /// Single-trigger or systemic dual-trigger standstill.
    Lambda,
    /// Idiosyncratic dual-trigger standstill.
    Upsilon,
}

/// Inclusive range of pricing steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Standstills of one scenario over steps `0..=T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSchedule {
    pub lambda: Vec<Interval>,
    pub upsilon: Vec<Interval>,
    /// Steps by which the principal payment is delayed past maturity.
    pub deferral: usize,
    family: Vec<Family>,
}

impl PathSchedule {
    pub fn family(&self, t: usize) -> Family {
        self.family.get(t).copied().unwrap_or(Family::None)
    }

    pub fn in_lambda(&self, t: usize) -> bool {
        self.family(t) == Family::Lambda
    }

    pub fn in_upsilon(&self, t: usize) -> bool {
        self.family(t) == Family::Upsilon
    }

    /// Whether the coupon due at `t` is paid.
    pub fn pays_coupon(&self, t: usize) -> bool {
        self.family(t) == Family::None
    }

    /// Standstill count M.
    pub fn m(&self) -> usize {
        self.lambda.len()
    }

    /// Idiosyncratic standstill count Q.
    pub fn q(&self) -> usize {
        self.upsilon.len()
    }

    pub fn lambda_steps(&self) -> Vec<usize> {
        self.lambda.iter().flat_map(|i| i.start..=i.end).collect()
    }

    pub fn upsilon_steps(&self) -> Vec<usize> {
        self.upsilon.iter().flat_map(|i| i.start..=i.end).collect()
    }

    pub fn standstill_steps(&self) -> usize {
        self.family.iter().filter(|f| **f != Family::None).count()
    }
}

fn check_horizon(path: &ScenarioPath, maturity: usize) -> Result<()> {
    if path.len() <= maturity {
        return Err(Error::HorizonTooShort {
            needed: maturity,
            available: path.len().saturating_sub(1),
        });
    }
    Ok(())
}

/// Greedy scan of `t = 0..=T`; `classify` returns the family and length of a
/// standstill opened at `t`, or `None` when there is no breach.
fn scan(maturity: usize, mut classify: impl FnMut(usize) -> Option<(Family, usize)>) -> PathSchedule {
    let mut family = vec![Family::None; maturity + 1];
    let mut lambda = Vec::new();
    let mut upsilon = Vec::new();
    let mut last: Option<(Interval, usize)> = None;
    let mut t = 0;
    while t <= maturity {
        let Some((fam, k)) = classify(t) else {
            t += 1;
            continue;
        };
        let iv = Interval {
            start: t,
            end: (t + k).min(maturity),
        };
        for f in &mut family[iv.start..=iv.end] {
            *f = fam;
        }
        match fam {
            Family::Lambda => lambda.push(iv),
            Family::Upsilon => upsilon.push(iv),
            Family::None => unreachable!(),
        }
        last = Some((iv, k));
        t = iv.end + 1;
    }
    let deferral = match last {
        Some((iv, k)) if iv.end == maturity && maturity - iv.start < k => maturity - iv.start + 1,
        _ => 0,
    };
    PathSchedule {
        lambda,
        upsilon,
        deferral,
        family,
    }
}

/// Single-trigger schedule of one path.
pub fn build_schedule(path: &ScenarioPath, spec: &SCoCoSpec) -> Result<PathSchedule> {
    check_horizon(path, spec.maturity)?;
    Ok(scan(spec.maturity, |t| {
        (path.spreads[t] >= spec.threshold).then_some((Family::Lambda, spec.standstill_k))
    }))
}

/// Dual-trigger schedule of one path.
pub fn build_dual_schedule(path: &ScenarioPath, spec: &SCoCoSpec) -> Result<PathSchedule> {
    let dual = spec
        .dual
        .ok_or_else(|| Error::invalid("contract has no dual trigger"))?;
    let index = path.index.as_ref().ok_or(Error::MissingIndex)?;
    check_horizon(path, spec.maturity)?;
    Ok(scan(spec.maturity, |t| {
        if path.spreads[t] < spec.threshold {
            None
        } else if index[t] >= dual.index_threshold {
            Some((Family::Lambda, dual.k1))
        } else {
            Some((Family::Upsilon, dual.k2))
        }
    }))
}

/// Schedules of every scenario in a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandstillSchedule {
    pub maturity: usize,
    pub paths: Vec<PathSchedule>,
}

impl StandstillSchedule {
    /// Uses the dual trigger when the contract has one.
    pub fn build(set: &ScenarioSet, spec: &SCoCoSpec) -> Result<Self> {
        spec.validate()?;
        let paths = set
            .paths
            .par_iter()
            .map(|p| {
                if spec.dual.is_some() {
                    build_dual_schedule(p, spec)
                } else {
                    build_schedule(p, spec)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            maturity: spec.maturity,
            paths,
        })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Fraction of scenarios with at least one standstill.
    pub fn triggered_fraction(&self) -> f64 {
        let n = self.paths.iter().filter(|p| p.m() + p.q() > 0).count();
        n as f64 / self.paths.len() as f64
    }

    pub fn mean_standstills(&self) -> f64 {
        self.paths.iter().map(|p| (p.m() + p.q()) as f64).sum::<f64>() / self.paths.len() as f64
    }

    pub fn mean_deferral(&self) -> f64 {
        self.paths.iter().map(|p| p.deferral as f64).sum::<f64>() / self.paths.len() as f64
    }

    /// One row per scenario and step.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["scenario", "step", "in_standstill", "family"])?;
        for (l, p) in self.paths.iter().enumerate() {
            for t in 0..=self.maturity {
                let (flag, fam) = match p.family(t) {
                    Family::None => ("0", ""),
                    Family::Lambda => ("1", "lambda"),
                    Family::Upsilon => ("1", "upsilon"),
                };
                wtr.write_record([l.to_string().as_str(), t.to_string().as_str(), flag, fam])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_with_breaches(n: usize, at: &[usize]) -> ScenarioPath {
        let spreads = (0..n).map(|t| if at.contains(&t) { 600.0 } else { 100.0 }).collect();
        ScenarioPath::deterministic(vec![0.0; n], spreads)
    }

    #[test]
    fn no_breach_is_a_straight_bond() {
        let spec = SCoCoSpec::new(10, 0.01, 500.0, 2).unwrap();
        let s = build_schedule(&path_with_breaches(13, &[]), &spec).unwrap();
        assert!(s.lambda.is_empty());
        assert_eq!(s.deferral, 0);
        assert!((1..=10).all(|t| s.pays_coupon(t)));
    }

    #[test]
    fn signal_inside_standstill_is_ignored() {
        let spec = SCoCoSpec::new(10, 0.01, 500.0, 2).unwrap();
        let s = build_schedule(&path_with_breaches(13, &[3, 4]), &spec).unwrap();
        assert_eq!(s.lambda_steps(), vec![3, 4, 5]);
        assert_eq!(s.m(), 1);
        assert_eq!(s.deferral, 0);
    }

    #[test]
    fn late_breach_defers_principal() {
        let spec = SCoCoSpec::new(10, 0.01, 500.0, 3).unwrap();
        let s = build_schedule(&path_with_breaches(14, &[9]), &spec).unwrap();
        assert_eq!(s.lambda_steps(), vec![9, 10]);
        assert_eq!(s.deferral, 2);
    }

    #[test]
    fn immediate_retrigger_opens_new_interval() {
        let spec = SCoCoSpec::new(10, 0.01, 500.0, 2).unwrap();
        let s = build_schedule(&path_with_breaches(13, &[1, 4]), &spec).unwrap();
        assert_eq!(s.lambda, vec![Interval { start: 1, end: 3 }, Interval { start: 4, end: 6 }]);
    }

    #[test]
    fn horizon_must_cover_maturity() {
        let spec = SCoCoSpec::new(10, 0.01, 500.0, 2).unwrap();
        assert!(matches!(
            build_schedule(&path_with_breaches(10, &[]), &spec),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn dual_reductions() {
        let mut p = path_with_breaches(20, &[2, 9, 15]);
        let single = SCoCoSpec::new(16, 0.01, 500.0, 2).unwrap();
        let dual = single
            .with_dual(DualTrigger {
                index_threshold: 50.0,
                k1: 2,
                k2: 4,
                allow_short_idiosyncratic: false,
            })
            .unwrap();
        assert!(matches!(build_dual_schedule(&p, &dual), Err(Error::MissingIndex)));

        p.index = Some(vec![80.0; 20]);
        let a = build_schedule(&p, &single).unwrap();
        let b = build_dual_schedule(&p, &dual).unwrap();
        assert_eq!(a.lambda, b.lambda);
        assert!(b.upsilon.is_empty());

        p.index = Some(vec![10.0; 20]);
        let c = build_dual_schedule(&p, &dual).unwrap();
        assert!(c.lambda.is_empty());
        assert!(c.upsilon.iter().all(|i| i.len() == 5 || i.end == 16));
        assert_eq!(c.deferral, 16 - 15 + 1);
    }

    #[test]
    fn k2_must_exceed_k1_unless_overridden() {
        let base = SCoCoSpec::new(10, 0.01, 500.0, 2).unwrap();
        let mut d = DualTrigger {
            index_threshold: 1.0,
            k1: 3,
            k2: 3,
            allow_short_idiosyncratic: false,
        };
        assert!(base.with_dual(d).is_err());
        d.allow_short_idiosyncratic = true;
        assert!(base.with_dual(d).is_ok());
    }

    #[test]
    fn csv_has_one_row_per_step() {
        let spec = SCoCoSpec::new(4, 0.01, 500.0, 1).unwrap();
        let set = ScenarioSet::from_paths(vec![path_with_breaches(6, &[2]); 3], 2).unwrap();
        let sched = StandstillSchedule::build(&set, &spec).unwrap();
        let mut buf = Vec::new();
        sched.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 5);
        assert!(text.contains("0,2,1,lambda"));
    }

    fn arb_path() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (prop::collection::vec(0.0f64..1000.0, 25), prop::collection::vec(0.0f64..100.0, 25))
    }

    proptest! {
        #[test]
        fn schedule_invariants((spreads, index) in arb_path(), k in 1usize..6, k1 in 1usize..4, extra in 1usize..4, bar in 1.0f64..1000.0) {
            let mut path = ScenarioPath::deterministic(vec![0.0; 25], spreads);
            path.index = Some(index);
            let spec = SCoCoSpec::new(20, 0.01, bar, k).unwrap();
            let s = build_schedule(&path, &spec).unwrap();
            prop_assert!(s.deferral <= k);
            prop_assert!(s.lambda.windows(2).all(|w| w[0].end < w[1].start));
            prop_assert_eq!(&s, &build_schedule(&path, &spec).unwrap());
            if s.deferral > 0 {
                prop_assert!(s.in_lambda(20));
            }

            let higher = build_schedule(&path, &spec.with_threshold(bar * 1.3)).unwrap();
            prop_assert!(higher.standstill_steps() <= s.standstill_steps());

            let dual = spec.with_dual(DualTrigger { index_threshold: 50.0, k1, k2: k1 + extra, allow_short_idiosyncratic: false }).unwrap();
            let d = build_dual_schedule(&path, &dual).unwrap();
            for t in 0..=20 {
                prop_assert!(!(d.in_lambda(t) && d.in_upsilon(t)));
            }
            let mut all: Vec<Interval> = d.lambda.iter().chain(&d.upsilon).copied().collect();
            all.sort_by_key(|i| i.start);
            prop_assert!(all.windows(2).all(|w| w[0].end < w[1].start));
            prop_assert!(d.deferral <= k1 + extra);
        }
    }
}
