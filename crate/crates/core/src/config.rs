//! Run configuration (TOML) and construction of the models it describes.
//!
//! The schema is described in the README.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ingest, resolve, HistoricalSeries, IngestedRegime, RegimeBreakpoints};
use crate::instrument::{DualTrigger, SCoCoSpec};
use crate::lsm::BasisSpec;
use crate::regime::{default_eigenvalues, MaxEntropyEstimator, StationaryDistribution, TransitionMatrix};
use crate::scenario::{averaged_targets, ProcessModel, ScenarioConfig};
use crate::srmr::{CorrelationSpec, MomentTargets, RegimeCalibration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelUnit {
    Bp,
    Percent,
    Decimal,
}

impl LevelUnit {
    fn to_bp(self) -> f64 {
        match self {
            LevelUnit::Bp => 1.0,
            LevelUnit::Percent => 100.0,
            LevelUnit::Decimal => 1e4,
        }
    }

    fn to_decimal(self) -> f64 {
        self.to_bp() * 1e-4
    }
}

/// Unit of daily return statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnUnit {
    Percent,
    Decimal,
}

impl ReturnUnit {
    fn to_decimal(self) -> f64 {
        match self {
            ReturnUnit::Percent => 0.01,
            ReturnUnit::Decimal => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Spread,
    Rate,
    Index,
}

/// Statistics of one regime, given inline or overriding ingested values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeOverride {
    pub label: Option<String>,
    pub mean: Option<f64>,
    pub stdev: Option<f64>,
    pub return_stdev: Option<f64>,
    pub smoothness: Option<f64>,
    /// Stationary probability or trading-day count; normalized.
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    pub label: String,
    pub level_unit: LevelUnit,
    pub return_unit: ReturnUnit,
    pub series: Option<PathBuf>,
    pub breakpoints: Option<PathBuf>,
    #[serde(default)]
    pub regimes: Vec<RegimeOverride>,
    /// Subdominant eigenvalues for the max-entropy estimate.
    pub eigenvalues: Option<Vec<f64>>,
    /// Explicit transition matrix, skipping estimation.
    pub transition: Option<Vec<Vec<f64>>>,
    /// Starting level, in `level_unit`.
    pub start_level: Option<f64>,
    /// Starting regime label; drawn from the stationary law when absent.
    pub initial_regime: Option<String>,
    /// Added to observed levels before calibration, in `level_unit`.
    #[serde(default)]
    pub shift: f64,
    /// Smoothness as a multiple of the return variance, for regimes given
    /// without one.
    pub smoothness_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualConfig {
    pub index_threshold: f64,
    pub k1: usize,
    pub k2: usize,
    #[serde(default)]
    pub allow_short_idiosyncratic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    pub maturity_years: f64,
    /// Annual coupon as a decimal.
    #[serde(default)]
    pub coupon_annual: f64,
    /// Spread threshold in basis points; `inf` for a straight bond.
    pub threshold_bp: f64,
    /// Standstill length K in pricing periods.
    pub standstill_periods: usize,
    pub dual: Option<DualConfig>,
}

fn default_steps() -> usize {
    2
}
fn default_days() -> usize {
    252
}
fn default_true() -> bool {
    true
}
fn default_outer() -> usize {
    10
}
fn default_inner() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    #[serde(default = "default_outer")]
    pub regime_scenarios: usize,
    #[serde(default = "default_inner")]
    pub paths_per_regime: usize,
    /// Defaults to maturity plus the longest deferral.
    pub horizon_years: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps_per_year: usize,
    #[serde(default = "default_days")]
    pub days_per_year: usize,
    /// Correlation of spread and short-rate innovations.
    #[serde(default)]
    pub correlation: f64,
    /// When false the spread runs one regime with time-averaged targets.
    #[serde(default = "default_true")]
    pub regime_switching: bool,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            regime_scenarios: default_outer(),
            paths_per_regime: default_inner(),
            horizon_years: None,
            steps_per_year: 2,
            days_per_year: 252,
            correlation: 0.0,
            regime_switching: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParRateOptions {
    pub thresholds_bp: Vec<f64>,
}

fn default_terms() -> Vec<usize> {
    vec![2, 3]
}
fn default_horizons() -> Vec<f64> {
    vec![5.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsmOptions {
    /// Number of rate terms including the constant, one basis per entry.
    #[serde(default = "default_terms")]
    pub rate_terms: Vec<usize>,
    #[serde(default = "default_true")]
    pub include_indicator: bool,
    #[serde(default = "default_horizons")]
    pub horizons_years: Vec<f64>,
}

fn default_alphas() -> Vec<f64> {
    vec![10.0, 20.0, 30.0]
}
fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityOptions {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Seed of the Dirichlet draws; the run seed when absent.
    pub seed: Option<u64>,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self {
            alphas: default_alphas(),
            samples: default_samples(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub spread: AssetConfig,
    pub rate: AssetConfig,
    pub index: Option<AssetConfig>,
    pub instrument: InstrumentConfig,
    #[serde(default)]
    pub scenarios: ScenarioOptions,
    pub par_rate: Option<ParRateOptions>,
    pub lsm: Option<LsmOptions>,
    pub sensitivity: Option<SensitivityOptions>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(text)?;
        c.base_dir = base_dir.into();
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = &self.index {
            if self.instrument.dual.is_none() {
                return Err(Error::invalid(format!("index `{}` given without a dual trigger", d.label)));
            }
        }
        if self.instrument.dual.is_some() && self.index.is_none() {
            return Err(Error::invalid("dual trigger needs an [index] block"));
        }
        self.instrument_spec()?;
        self.scenario_config()?.validate()?;
        if let Some(l) = &self.lsm {
            for &m in &l.rate_terms {
                BasisSpec::new(m)?;
            }
            self.lsm_horizons()?;
        }
        if let Some(s) = &self.sensitivity {
            if s.alphas.iter().any(|a| !(*a > 0.0)) {
                return Err(Error::invalid("sensitivity concentrations must be positive"));
            }
        }
        Ok(())
    }

    fn whole_steps(&self, years: f64, what: &str) -> Result<usize> {
        let s = years * self.scenarios.steps_per_year as f64;
        if !(s >= 0.0) || (s - s.round()).abs() > 1e-9 {
            return Err(Error::invalid(format!("{what} of {years} years is not a whole number of periods")));
        }
        Ok(s.round() as usize)
    }

    pub fn instrument_spec(&self) -> Result<SCoCoSpec> {
        let i = &self.instrument;
        let maturity = self.whole_steps(i.maturity_years, "maturity")?;
        let coupon = i.coupon_annual / self.scenarios.steps_per_year as f64;
        let spec = SCoCoSpec::new(maturity, coupon, i.threshold_bp, i.standstill_periods)?;
        match &i.dual {
            Some(d) => spec.with_dual(DualTrigger {
                index_threshold: d.index_threshold,
                k1: d.k1,
                k2: d.k2,
                allow_short_idiosyncratic: d.allow_short_idiosyncratic,
            }),
            None => Ok(spec),
        }
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let o = &self.scenarios;
        let per_year = o.steps_per_year.max(1) as f64;
        let horizon = match o.horizon_years {
            Some(h) => h,
            None => {
                let spec = self.instrument_spec_unchecked();
                (spec.0 + spec.1) as f64 / per_year
            }
        };
        Ok(ScenarioConfig {
            n_regime_scenarios: o.regime_scenarios,
            n_paths_per_regime: o.paths_per_regime,
            horizon_years: horizon,
            pricing_steps_per_year: o.steps_per_year,
            days_per_year: o.days_per_year,
            seed: self.seed,
            correlation: CorrelationSpec::new(o.correlation)?,
        })
    }

    /// Maturity steps and longest deferral without validation.
    fn instrument_spec_unchecked(&self) -> (usize, usize) {
        let i = &self.instrument;
        let m = (i.maturity_years * self.scenarios.steps_per_year as f64).round().max(0.0) as usize;
        let k = match &i.dual {
            Some(d) => d.k1.max(d.k2),
            None => i.standstill_periods,
        };
        (m, k)
    }

    pub fn lsm_horizons(&self) -> Result<Vec<usize>> {
        self.lsm
            .as_ref()
            .map_or(&[][..], |l| &l.horizons_years[..])
            .iter()
            .map(|&h| self.whole_steps(h, "horizon"))
            .collect()
    }

    pub fn lsm_bases(&self) -> Result<Vec<BasisSpec>> {
        let Some(l) = &self.lsm else { return Ok(Vec::new()) };
        l.rate_terms
            .iter()
            .map(|&m| if l.include_indicator { BasisSpec::new(m) } else { BasisSpec::rate_only(m) })
            .collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        resolve(&self.base_dir, &out)
    }
}

/// One regime's calibration inputs in model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeInput {
    pub label: String,
    pub targets: MomentTargets,
    pub weight: f64,
    /// Ingested statistics when the regime came from a series.
    pub ingested: Option<IngestedRegime>,
}

/// Regimes of an asset with their weights and transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetEstimate {
    pub label: String,
    pub regimes: Vec<RegimeInput>,
    pub stationary: StationaryDistribution,
    pub eigenvalues: Vec<f64>,
    pub transition: TransitionMatrix,
    pub entropy: f64,
}

impl AssetConfig {
    fn override_for(&self, i: usize) -> RegimeOverride {
        self.regimes.get(i).cloned().unwrap_or_default()
    }

    /// Regime inputs from the series or the inline table.
    pub fn regime_inputs(&self, base: &Path) -> Result<Vec<RegimeInput>> {
        let ret = self.return_unit.to_decimal();
        let mut out = Vec::new();
        let mut start = self.start_level.map(|s| s + self.shift);
        if let Some(path) = &self.series {
            let series = HistoricalSeries::read_csv(resolve(base, path), &self.label)?.shifted(self.shift);
            let bp = match &self.breakpoints {
                Some(p) => RegimeBreakpoints::read_csv(resolve(base, p))?,
                None => RegimeBreakpoints::whole(&self.label),
            };
            start = start.or(Some(series.last_value()));
            for mut row in ingest(&series, &bp)? {
                row.spec.spread_mean -= self.shift;
                out.push(RegimeInput {
                    label: row.spec.label.clone(),
                    targets: row.targets,
                    weight: row.observations as f64,
                    ingested: Some(row),
                });
            }
            if self.regimes.len() > out.len() {
                return Err(Error::invalid(format!(
                    "{}: {} regime overrides for {} segments",
                    self.label,
                    self.regimes.len(),
                    out.len()
                )));
            }
        } else {
            if self.regimes.is_empty() {
                return Err(Error::invalid(format!("{}: needs a series or a regime table", self.label)));
            }
            for (i, r) in self.regimes.iter().enumerate() {
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| Error::invalid(format!("{}: regime {i} lacks `{name}`", self.label)))
                };
                let mean = need(r.mean, "mean")? + self.shift;
                out.push(RegimeInput {
                    label: r.label.clone().unwrap_or_else(|| format!("regime {i}")),
                    targets: MomentTargets {
                        s_hat: mean,
                        sigma_s_hat: need(r.stdev, "stdev")?,
                        sigma_r_hat: need(r.return_stdev, "return_stdev")? * ret,
                        s2_hat: f64::NAN,
                        s0: mean,
                    },
                    weight: need(r.weight, "weight")?,
                    ingested: None,
                });
            }
        }
        for (i, input) in out.iter_mut().enumerate() {
            let o = self.override_for(i);
            if let Some(l) = o.label {
                input.label = l;
            }
            if self.series.is_some() {
                if let Some(m) = o.mean {
                    input.targets.s_hat = m + self.shift;
                }
                if let Some(s) = o.stdev {
                    input.targets.sigma_s_hat = s;
                }
                if let Some(s) = o.return_stdev {
                    input.targets.sigma_r_hat = s * ret;
                }
                if let Some(w) = o.weight {
                    input.weight = w;
                }
            }
            let t = &mut input.targets;
            t.s2_hat = match (o.smoothness, self.smoothness_ratio) {
                (Some(s), _) => s * ret * ret,
                (None, Some(k)) => k * t.sigma_r_hat * t.sigma_r_hat,
                (None, None) if input.ingested.is_some() => t.s2_hat,
                (None, None) => {
                    return Err(Error::invalid(format!(
                        "{}: regime `{}` needs `smoothness` or an asset `smoothness_ratio`",
                        self.label, input.label
                    )))
                }
            };
            if let Some(s0) = start {
                t.s0 = s0;
            }
            if !(input.weight > 0.0) {
                return Err(Error::invalid(format!("{}: regime `{}` has weight {}", self.label, input.label, input.weight)));
            }
        }
        Ok(out)
    }

    /// Regime inputs plus the estimated (or given) transition matrix.
    pub fn estimate(&self, base: &Path) -> Result<AssetEstimate> {
        let regimes = self.regime_inputs(base)?;
        let weights: Vec<f64> = regimes.iter().map(|r| r.weight).collect();
        let stationary = StationaryDistribution::from_weights(&weights)?;
        let n = regimes.len();
        let eigenvalues = self.eigenvalues.clone().unwrap_or_else(|| default_eigenvalues(n));
        let transition = match (&self.transition, n) {
            (Some(rows), _) => TransitionMatrix::new(rows.clone())?,
            (None, 1) => TransitionMatrix::identity(1),
            (None, _) => MaxEntropyEstimator::default().estimate(&stationary, &eigenvalues)?.matrix,
        };
        if transition.n_states() != n {
            return Err(Error::invalid(format!(
                "{}: transition matrix has {} states for {n} regimes",
                self.label,
                transition.n_states()
            )));
        }
        let entropy = transition.entropy();
        Ok(AssetEstimate {
            label: self.label.clone(),
            regimes,
            stationary,
            eigenvalues,
            transition,
            entropy,
        })
    }

    fn output_scale(&self, role: Role) -> f64 {
        match role {
            Role::Rate => self.level_unit.to_decimal(),
            Role::Spread | Role::Index => self.level_unit.to_bp(),
        }
    }

    fn initial_regime(&self, labels: &[String]) -> Result<Option<usize>> {
        self.initial_regime
            .as_ref()
            .map(|l| {
                labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::invalid(format!("{}: unknown initial regime `{l}`", self.label)))
            })
            .transpose()
    }

    /// Calibrated process for the estimate, or its time-averaged single
    /// regime stand-in when `switching` is false.
    pub fn process(&self, est: &AssetEstimate, role: Role, switching: bool) -> Result<ProcessModel> {
        let labels: Vec<String> = est.regimes.iter().map(|r| r.label.clone()).collect();
        let targets: Vec<MomentTargets> = est.regimes.iter().map(|r| r.targets).collect();
        let mut model = if switching || targets.len() == 1 {
            let m = ProcessModel::from_targets(est.transition.clone(), &targets)?.with_labels(labels.clone());
            match self.initial_regime(&labels)? {
                Some(r) => m.with_initial_regime(r),
                None => m,
            }
        } else {
            let s0 = match self.start_level {
                Some(s) => s + self.shift,
                None if self.series.is_some() => targets[0].s0,
                None => est
                    .regimes
                    .iter()
                    .map(|r| r.targets.s_hat * r.weight)
                    .sum::<f64>()
                    / est.regimes.iter().map(|r| r.weight).sum::<f64>(),
            };
            let avg = averaged_targets(&targets, est.stationary.probs(), s0)?;
            ProcessModel::single(RegimeCalibration::new(avg)?).with_labels(vec![format!("{} average", self.label)])
        };
        if let Some(s) = self.start_level {
            model = model.with_initial_level(s + self.shift);
        }
        Ok(model.with_scale(self.shift, self.output_scale(role)))
    }
}
