//! Joint scenarios of short rate, CDS spread, optional market index and
//! regime labels.
//!
//! Regime paths form the outer loop and are shared by every inner path with
//! the same outer index. Each process is simulated daily and sampled on the
//! pricing grid.

use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regime::{next_state, stationary_of, TransitionMatrix};
use crate::rng::{stream, Factor};
use crate::srmr::{correlated_noise, step, CorrelationSpec, MomentTargets, RegimeCalibration, SrmrState};

/// A regime-switching SRMR process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub transition: TransitionMatrix,
    /// Calibration per regime, indexed by regime id.
    pub calibrations: Vec<Option<RegimeCalibration>>,
    pub labels: Vec<String>,
    /// Starting regime; drawn from the stationary law when absent.
    pub initial_regime: Option<usize>,
    /// Starting level; the starting regime's `s0` when absent.
    pub initial_level: Option<f64>,
    /// The simulated positive level minus `shift` is the modelled quantity.
    pub shift: f64,
    /// Multiplier applied after the shift, e.g. 0.01 for percent to decimal.
    pub scale: f64,
}

impl ProcessModel {
    pub fn new(transition: TransitionMatrix, calibrations: Vec<RegimeCalibration>) -> Self {
        let n = calibrations.len();
        Self {
            transition,
            calibrations: calibrations.into_iter().map(Some).collect(),
            labels: (0..n).map(|i| format!("regime {i}")).collect(),
            initial_regime: None,
            initial_level: None,
            shift: 0.0,
            scale: 1.0,
        }
    }

    /// One regime, no switching.
    pub fn single(calibration: RegimeCalibration) -> Self {
        let mut m = Self::new(TransitionMatrix::identity(1), vec![calibration]);
        m.initial_regime = Some(0);
        m
    }

    pub fn from_targets(transition: TransitionMatrix, targets: &[MomentTargets]) -> Result<Self> {
        let cals = targets
            .iter()
            .enumerate()
            .map(|(i, t)| RegimeCalibration::new(*t).map_err(|e| e.in_stage(format!("calibrate regime {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(transition, cals))
    }

    pub fn with_initial_regime(mut self, regime: usize) -> Self {
        self.initial_regime = Some(regime);
        self
    }

    pub fn with_initial_level(mut self, level: f64) -> Self {
        self.initial_level = Some(level);
        self
    }

    pub fn with_scale(mut self, shift: f64, scale: f64) -> Self {
        self.shift = shift;
        self.scale = scale;
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = labels;
        self
    }

    fn validate(&self) -> Result<Vec<RegimeCalibration>> {
        let n = self.transition.n_states();
        if self.calibrations.len() < n {
            let label = self.labels.get(self.calibrations.len()).cloned().unwrap_or_else(|| self.calibrations.len().to_string());
            return Err(Error::MissingCalibration(label));
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            match &self.calibrations[i] {
                Some(c) => out.push(*c),
                None => {
                    let label = self.labels.get(i).cloned().unwrap_or_else(|| i.to_string());
                    return Err(Error::MissingCalibration(label));
                }
            }
        }
        if let Some(r) = self.initial_regime {
            if r >= n {
                return Err(Error::invalid(format!("initial regime {r} out of range")));
            }
        }
        if let Some(l) = self.initial_level {
            if !(l > 0.0) {
                return Err(Error::invalid(format!("initial level must be positive, got {l}")));
            }
        }
        Ok(out)
    }

    fn initial_weights(&self) -> Result<Vec<f64>> {
        Ok(match self.initial_regime {
            Some(r) => (0..self.transition.n_states()).map(|i| if i == r { 1.0 } else { 0.0 }).collect(),
            None => stationary_of(&self.transition)?.probs().to_vec(),
        })
    }

    #[inline]
    fn observe(&self, level: f64) -> f64 {
        (level - self.shift) * self.scale
    }
}

/// Monte Carlo layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_regime_scenarios: usize,
    pub n_paths_per_regime: usize,
    pub horizon_years: f64,
    /// Pricing periods per year.
    pub pricing_steps_per_year: usize,
    /// Simulation days per year.
    pub days_per_year: usize,
    pub seed: u64,
    /// Noise correlation between spread and short rate.
    #[serde(default)]
    pub correlation: CorrelationSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_regime_scenarios: 100,
            n_paths_per_regime: 1000,
            horizon_years: 20.0,
            pricing_steps_per_year: 2,
            days_per_year: 252,
            seed: 1,
            correlation: CorrelationSpec::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_regime_scenarios == 0 || self.n_paths_per_regime == 0 {
            return Err(Error::invalid("scenario counts must be at least 1"));
        }
        if !(self.horizon_years > 0.0) {
            return Err(Error::invalid("horizon must be positive"));
        }
        if self.pricing_steps_per_year == 0 || self.days_per_year % self.pricing_steps_per_year != 0 {
            return Err(Error::invalid(format!(
                "{} pricing steps per year do not divide {} days",
                self.pricing_steps_per_year, self.days_per_year
            )));
        }
        let steps = self.horizon_years * self.pricing_steps_per_year as f64;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "horizon {} years is not a whole number of pricing steps",
                self.horizon_years
            )));
        }
        CorrelationSpec::new(self.correlation.rho)?;
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon_years * self.pricing_steps_per_year as f64).round() as usize
    }

    pub fn days_per_step(&self) -> usize {
        self.days_per_year / self.pricing_steps_per_year
    }

    /// Pricing period as a year fraction.
    pub fn dt(&self) -> f64 {
        1.0 / self.pricing_steps_per_year as f64
    }
}

/// One scenario sampled on the pricing grid, `n_steps + 1` points from t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPath {
    /// Annualized short rate, decimal.
    pub rates: Vec<f64>,
    /// CDS spread, basis points.
    pub spreads: Vec<f64>,
    pub index: Option<Vec<f64>>,
    /// Spread regime label.
    pub regimes: Vec<usize>,
}

impl ScenarioPath {
    pub fn len(&self) -> usize {
        self.spreads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spreads.is_empty()
    }

    /// A deterministic path, mostly for tests and examples.
    pub fn deterministic(rates: Vec<f64>, spreads: Vec<f64>) -> Self {
        let n = spreads.len();
        Self {
            rates,
            spreads,
            index: None,
            regimes: vec![0; n],
        }
    }
}

/// Equally weighted scenarios, path-major with index `outer * n_inner + inner`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub n_outer: usize,
    pub n_inner: usize,
    pub pricing_steps_per_year: usize,
    pub days_per_step: usize,
    pub paths: Vec<ScenarioPath>,
}

impl ScenarioSet {
    pub fn from_paths(paths: Vec<ScenarioPath>, pricing_steps_per_year: usize) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("empty scenario set"));
        }
        let n = paths[0].len();
        for (l, p) in paths.iter().enumerate() {
            if p.rates.len() != n || p.spreads.len() != n || p.regimes.len() != n {
                return Err(Error::invalid(format!("path {l} has inconsistent lengths")));
            }
            if p.index.as_ref().is_some_and(|v| v.len() != n) {
                return Err(Error::invalid(format!("path {l} index length differs")));
            }
        }
        Ok(Self {
            n_outer: 1,
            n_inner: paths.len(),
            pricing_steps_per_year,
            days_per_step: 0,
            paths,
        })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Pricing steps after t = 0.
    pub fn n_steps(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len() - 1)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.pricing_steps_per_year as f64
    }

    pub fn probability(&self) -> f64 {
        1.0 / self.paths.len() as f64
    }

    pub fn has_index(&self) -> bool {
        self.paths.iter().all(|p| p.index.is_some())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["scenario", "step", "rate", "spread", "index", "regime"])?;
        for (l, p) in self.paths.iter().enumerate() {
            for t in 0..p.len() {
                let idx = p.index.as_ref().map_or(String::new(), |v| format!("{:e}", v[t]));
                wtr.write_record([
                    l.to_string(),
                    t.to_string(),
                    format!("{:e}", p.rates[t]),
                    format!("{:e}", p.spreads[t]),
                    idx,
                    p.regimes[t].to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Binary cache: magic `SCOCOSC1`, six little-endian `u64` header words
    /// (outer, inner, points per path, steps per year, days per step, index
    /// flag), then per path the rates, spreads, index (if flagged) and regime
    /// labels as `f64`.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        let has_index = self.has_index();
        w.write_all(CACHE_MAGIC)?;
        let points = self.paths.first().map_or(0, |p| p.len());
        for v in [
            self.n_outer,
            self.n_inner,
            points,
            self.pricing_steps_per_year,
            self.days_per_step,
            has_index as usize,
        ] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(points * 8);
        let mut put = |w: &mut W, xs: &mut dyn Iterator<Item = f64>| -> std::io::Result<()> {
            buf.clear();
            for x in xs {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)
        };
        for p in &self.paths {
            put(&mut w, &mut p.rates.iter().copied())?;
            put(&mut w, &mut p.spreads.iter().copied())?;
            if has_index {
                put(&mut w, &mut p.index.as_ref().expect("index").iter().copied())?;
            }
            put(&mut w, &mut p.regimes.iter().map(|&r| r as f64))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::invalid("not a scenario cache file"));
        }
        let mut header = [0usize; 6];
        for h in &mut header {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *h = u64::from_le_bytes(b) as usize;
        }
        let [n_outer, n_inner, points, steps_per_year, days_per_step, has_index] = header;
        let read_vec = |r: &mut R| -> std::io::Result<Vec<f64>> {
            let mut bytes = vec![0u8; points * 8];
            r.read_exact(&mut bytes)?;
            Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
        };
        let mut paths = Vec::with_capacity(n_outer * n_inner);
        for _ in 0..n_outer * n_inner {
            let rates = read_vec(&mut r)?;
            let spreads = read_vec(&mut r)?;
            let index = if has_index != 0 { Some(read_vec(&mut r)?) } else { None };
            let regimes = read_vec(&mut r)?.into_iter().map(|x| x as usize).collect();
            paths.push(ScenarioPath { rates, spreads, index, regimes });
        }
        Ok(Self {
            n_outer,
            n_inner,
            pricing_steps_per_year: steps_per_year,
            days_per_step,
            paths,
        })
    }
}

const CACHE_MAGIC: &[u8; 8] = b"SCOCOSC1";

/// Daily regime labels shared by all inner paths of one outer scenario.
struct RegimeDraw {
    spread: Vec<usize>,
    rate: Vec<usize>,
    index: Option<Vec<usize>>,
}

fn draw_regimes(
    model: &ProcessModel,
    weights: &[f64],
    days: usize,
    seed: u64,
    outer: u64,
    factor: Factor,
) -> Vec<usize> {
    let mut init_rng = stream(seed, outer, factor as u64, Factor::InitialRegime);
    let u: f64 = init_rng.random();
    let mut acc = 0.0;
    let mut start = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            start = i;
            break;
        }
    }
    let mut rng = stream(seed, outer, 0, factor);
    let mut states = Vec::with_capacity(days + 1);
    let mut s = start;
    states.push(s);
    for _ in 0..days {
        s = next_state(&model.transition, s, &mut rng);
        states.push(s);
    }
    states
}

/// Daily simulation of one process along given regime labels, sampled every
/// `every` days. `noise` supplies the scaled innovation for each day.
fn simulate_process(
    model: &ProcessModel,
    cals: &[RegimeCalibration],
    regimes: &[usize],
    every: usize,
    mut noise: impl FnMut() -> f64,
) -> Vec<f64> {
    let start_regime = regimes[0];
    let s0 = model.initial_level.unwrap_or(cals[start_regime].targets.s0);
    let mut state = SrmrState::start(s0);
    let mut params = cals[start_regime].params_from(s0);
    let mut out = Vec::with_capacity(regimes.len() / every + 1);
    out.push(model.observe(state.level));
    for d in 1..regimes.len() {
        if regimes[d] != regimes[d - 1] {
            state = state.rebased();
            params = cals[regimes[d]].params_from(state.level);
        }
        state = step(&state, &params, 1.0, noise());
        if d % every == 0 {
            out.push(model.observe(state.level));
        }
    }
    out
}

/// Generates `n_regime_scenarios * n_paths_per_regime` scenarios.
pub fn generate(
    config: &ScenarioConfig,
    spread: &ProcessModel,
    rate: &ProcessModel,
    index: Option<&ProcessModel>,
) -> Result<ScenarioSet> {
    config.validate()?;
    let spread_cals = spread.validate()?;
    let rate_cals = rate.validate()?;
    let index_cals = index.map(|m| m.validate()).transpose()?;
    let spread_w = spread.initial_weights()?;
    let rate_w = rate.initial_weights()?;
    let index_w = index.map(|m| m.initial_weights()).transpose()?;

    let every = config.days_per_step();
    let days = config.n_steps() * every;
    let seed = config.seed;

    let draws: Vec<RegimeDraw> = (0..config.n_regime_scenarios)
        .into_par_iter()
        .map(|o| {
            let o = o as u64;
            RegimeDraw {
                spread: draw_regimes(spread, &spread_w, days, seed, o, Factor::SpreadRegime),
                rate: draw_regimes(rate, &rate_w, days, seed, o, Factor::RateRegime),
                index: index.map(|m| draw_regimes(m, index_w.as_ref().expect("weights"), days, seed, o, Factor::IndexRegime)),
            }
        })
        .collect();

    let n_inner = config.n_paths_per_regime;
    let corr = config.correlation;
    let paths: Vec<ScenarioPath> = (0..config.n_regime_scenarios * n_inner)
        .into_par_iter()
        .map(|l| {
            let (o, i) = (l / n_inner, l % n_inner);
            let draw = &draws[o];
            let (o, i) = (o as u64, i as u64);
            let mut spread_rng = stream(seed, o, i, Factor::Spread);
            let mut rate_rng = stream(seed, o, i, Factor::Rate);
            // spread noise is drawn first each day so the rate can share it
            let mut spread_eps = Vec::with_capacity(days);
            let spreads = simulate_process(spread, &spread_cals, &draw.spread, every, || {
                let e: f64 = spread_rng.sample(StandardNormal);
                spread_eps.push(e);
                e
            });
            let mut day = 0;
            let rates = simulate_process(rate, &rate_cals, &draw.rate, every, || {
                let e2: f64 = rate_rng.sample(StandardNormal);
                let w = correlated_noise(corr, spread_eps[day], e2).1;
                day += 1;
                w
            });
            let index_path = index.map(|m| {
                let mut rng: ChaCha8Rng = stream(seed, o, i, Factor::Index);
                simulate_process(
                    m,
                    index_cals.as_ref().expect("calibrations"),
                    draw.index.as_ref().expect("regimes"),
                    every,
                    || rng.sample(StandardNormal),
                )
            });
            ScenarioPath {
                rates,
                spreads,
                index: index_path,
                regimes: draw.spread.iter().step_by(every).copied().collect(),
            }
        })
        .collect();

    Ok(ScenarioSet {
        n_outer: config.n_regime_scenarios,
        n_inner,
        pricing_steps_per_year: config.pricing_steps_per_year,
        days_per_step: every,
        paths,
    })
}

/// Scenarios without regime switching in the spread, calibrated on fixed
/// whole-sample targets.
pub fn regime_off_variant(
    config: &ScenarioConfig,
    fixed_targets: &MomentTargets,
    rate: &ProcessModel,
    index: Option<&ProcessModel>,
) -> Result<ScenarioSet> {
    let spread = ProcessModel::single(RegimeCalibration::new(*fixed_targets)?);
    generate(config, &spread, rate, index)
}

/// Time-weighted average of per-regime targets, a single-regime stand-in for
/// a switching model.
pub fn averaged_targets(targets: &[MomentTargets], weights: &[f64], s0: f64) -> Result<MomentTargets> {
    if targets.is_empty() || targets.len() != weights.len() {
        return Err(Error::invalid("targets and weights must be nonempty and of equal length"));
    }
    let total: f64 = weights.iter().sum();
    let avg = |f: fn(&MomentTargets) -> f64| targets.iter().zip(weights).map(|(t, w)| f(t) * w).sum::<f64>() / total;
    Ok(MomentTargets {
        s_hat: avg(|t| t.s_hat),
        sigma_s_hat: avg(|t| t.sigma_s_hat),
        sigma_r_hat: avg(|t| t.sigma_r_hat),
        s2_hat: avg(|t| t.s2_hat),
        s0,
    })
}
