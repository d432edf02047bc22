//! Batch pipeline: estimate, calibrate, simulate, then price, par rates,
//! LSM and sensitivity. Every file written is hashed into `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AssetConfig, AssetEstimate, Role, RunConfig};
use crate::error::{Error, Result};
use crate::ingest::write_regime_table;
use crate::instrument::{SCoCoSpec, StandstillSchedule};
use crate::lsm::{lsm_price, LsmResult};
use crate::pricing::{self, ParRate, PricingResult};
use crate::regime::MaxEntropyEstimator;
use crate::scenario::{generate, ProcessModel, ScenarioSet};
use crate::sensitivity::{reprice_under, sample_dirichlet, DirichletSpec, SensitivityReport, Valuation};
use crate::srmr::{MomentTargets, SrmrParams};
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Estimate,
    Calibrate,
    Simulate,
    Price,
    ParRate,
    Lsm,
    Sensitivity,
    Run,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Calibrate => "calibrate",
            Command::Simulate => "simulate",
            Command::Price => "price",
            Command::ParRate => "par-rate",
            Command::Lsm => "lsm",
            Command::Sensitivity => "sensitivity",
            Command::Run => "run",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Output file name to SHA-256.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Outputs {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn with<F: FnOnce(&mut Vec<u8>) -> Result<()>>(&mut self, name: &str, f: F) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}

/// Estimated regime structure of every asset.
#[derive(Debug, Clone, Serialize)]
pub struct Estimates {
    pub spread: AssetEstimate,
    pub rate: AssetEstimate,
    pub index: Option<AssetEstimate>,
}

/// Calibrated processes.
#[derive(Debug, Clone, Serialize)]
pub struct Models {
    pub spread: ProcessModel,
    pub rate: ProcessModel,
    pub index: Option<ProcessModel>,
}

#[derive(Debug, Clone, Serialize)]
struct RegimeParams<'a> {
    label: &'a str,
    targets: MomentTargets,
    params: SrmrParams,
}

fn describe(model: &ProcessModel) -> Vec<RegimeParams<'_>> {
    model
        .calibrations
        .iter()
        .zip(&model.labels)
        .filter_map(|(c, l)| {
            c.map(|c| RegimeParams {
                label: l,
                targets: c.targets,
                params: c.params,
            })
        })
        .collect()
}

pub fn estimate(config: &RunConfig) -> Result<Estimates> {
    let base = &config.base_dir;
    let one = |a: &AssetConfig| a.estimate(base).map_err(|e| e.in_stage(format!("estimate {}", a.label)));
    Ok(Estimates {
        spread: one(&config.spread)?,
        rate: one(&config.rate)?,
        index: config.index.as_ref().map(one).transpose()?,
    })
}

pub fn calibrate(config: &RunConfig, est: &Estimates) -> Result<Models> {
    let switching = config.scenarios.regime_switching;
    Ok(Models {
        spread: config.spread.process(&est.spread, Role::Spread, switching)?,
        rate: config.rate.process(&est.rate, Role::Rate, true)?,
        index: match (&config.index, &est.index) {
            (Some(c), Some(e)) => Some(c.process(e, Role::Index, true)?),
            _ => None,
        },
    })
}

pub fn simulate(config: &RunConfig, models: &Models) -> Result<ScenarioSet> {
    generate(&config.scenario_config()?, &models.spread, &models.rate, models.index.as_ref())
}

fn price_contract(set: &ScenarioSet, spec: &SCoCoSpec) -> Result<PricingResult> {
    if spec.dual.is_some() {
        pricing::price_dual(set, spec)
    } else {
        pricing::price(set, spec)
    }
}

#[derive(Debug, Clone, Serialize)]
struct PriceReport {
    coupon_annual: f64,
    threshold_bp: f64,
    scoco: PricingResult,
    straight: PricingResult,
}

#[derive(Debug, Clone, Serialize)]
struct ParReport {
    straight: ParRate,
    thresholds: Vec<(f64, ParRate)>,
}

#[derive(Debug, Clone, Serialize)]
struct LsmSummary {
    basis: String,
    root_price: f64,
    mc_price: f64,
    relative_error: f64,
    max_orthogonality: f64,
    horizons: Vec<(usize, Summary)>,
}

fn scenario_summary<W: Write>(set: &ScenarioSet, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["step", "years", "spread_mean", "spread_q05", "spread_q50", "spread_q95", "rate_mean", "rate_q05", "rate_q95"])?;
    for t in 0..=set.n_steps() {
        let s: Vec<f64> = set.paths.iter().map(|p| p.spreads[t]).collect();
        let r: Vec<f64> = set.paths.iter().map(|p| p.rates[t]).collect();
        let (s, r) = (Summary::of(&s), Summary::of(&r));
        wtr.write_record([
            t.to_string(),
            format!("{}", t as f64 * set.dt()),
            format!("{:e}", s.mean),
            format!("{:e}", s.q05),
            format!("{:e}", s.median),
            format!("{:e}", s.q95),
            format!("{:e}", r.mean),
            format!("{:e}", r.q05),
            format!("{:e}", r.q95),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Price and par rate of the configured contract under Dirichlet draws of the
/// spread's stationary distribution.
pub fn sensitivity(config: &RunConfig, est: &Estimates, models: &Models) -> Result<Vec<SensitivityReport>> {
    let opts = config.sensitivity.clone().unwrap_or_default();
    if !config.scenarios.regime_switching || est.spread.regimes.len() < 2 {
        return Err(Error::invalid("sensitivity needs a switching spread model with at least two regimes"));
    }
    let spec = config.instrument_spec()?;
    let scen = config.scenario_config()?;
    let seed = opts.seed.unwrap_or(config.seed);
    let estimator = MaxEntropyEstimator::default();
    let value = |p: &crate::regime::StationaryDistribution| -> Result<Valuation> {
        let spread = ProcessModel {
            transition: estimator.estimate(p, &est.spread.eigenvalues)?.matrix,
            ..models.spread.clone()
        };
        let set = generate(&scen, &spread, &models.rate, models.index.as_ref())?;
        let price = price_contract(&set, &spec)?.price;
        let par = pricing::par_rate(&set, &spec)?;
        Ok(Valuation {
            price,
            par_rate: par.annualized,
        })
    };
    opts.alphas
        .iter()
        .map(|&alpha| {
            let draws = sample_dirichlet(&DirichletSpec::new(est.spread.stationary.clone(), alpha, opts.samples)?, seed)?;
            Ok(reprice_under(&draws, alpha, value))
        })
        .collect()
}

fn finish(config: &RunConfig, command: Command, out: Outputs) -> Result<Manifest> {
    let canonical = toml::to_string(config).map_err(|e| Error::invalid(e.to_string()))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        config_sha256: sha256_hex(canonical.as_bytes()),
        seed: config.seed,
        outputs: out.files,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(out.dir.join("manifest.json"), bytes)?;
    Ok(manifest)
}

/// Runs `command` and writes its outputs to the configured directory.
pub fn run(config: &RunConfig, command: Command) -> Result<Manifest> {
    run_into(config, command, &config.out_dir())
}

pub fn run_into(config: &RunConfig, command: Command, dir: &Path) -> Result<Manifest> {
    config.validate()?;
    fs::create_dir_all(dir)?;
    let mut out = Outputs {
        dir: dir.to_path_buf(),
        files: BTreeMap::new(),
    };
    let all = command == Command::Run;

    let est = estimate(config)?;
    out.json("estimate.json", &est)?;
    for (name, e) in [("spread", Some(&est.spread)), ("rate", Some(&est.rate)), ("index", est.index.as_ref())] {
        let Some(e) = e else { continue };
        out.with(&format!("{name}_transition.csv"), |w| e.transition.write_csv(w))?;
        let rows: Vec<_> = e.regimes.iter().filter_map(|r| r.ingested.clone()).collect();
        if !rows.is_empty() {
            out.with(&format!("{name}_regimes.csv"), |w| write_regime_table(&rows, w))?;
        }
    }
    if command == Command::Estimate {
        return finish(config, command, out);
    }

    let models = calibrate(config, &est).map_err(|e| e.in_stage("calibrate"))?;
    let mut cal = BTreeMap::new();
    cal.insert("spread", describe(&models.spread));
    cal.insert("rate", describe(&models.rate));
    if let Some(m) = &models.index {
        cal.insert("index", describe(m));
    }
    out.json("calibration.json", &cal)?;
    if command == Command::Calibrate {
        return finish(config, command, out);
    }

    let spec = config.instrument_spec()?;
    if command == Command::Sensitivity || (all && config.sensitivity.is_some()) {
        let reports = sensitivity(config, &est, &models).map_err(|e| e.in_stage("sensitivity"))?;
        for r in &reports {
            out.with(&format!("sensitivity_alpha_{}.csv", r.alpha), |w| r.write_csv(w))?;
        }
        out.json("sensitivity.json", &reports)?;
        if !all {
            return finish(config, command, out);
        }
    }

    let set = simulate(config, &models).map_err(|e| e.in_stage("simulate"))?;
    if matches!(command, Command::Simulate | Command::Run) {
        out.with("scenarios.bin", |w| set.write_cache(w))?;
        out.with("scenario_summary.csv", |w| scenario_summary(&set, w))?;
    }

    if matches!(command, Command::Price | Command::Run) {
        let scoco = price_contract(&set, &spec).map_err(|e| e.in_stage("price"))?;
        let straight = pricing::price(&set, &SCoCoSpec::straight(spec.maturity, spec.coupon)).map_err(|e| e.in_stage("price"))?;
        out.json(
            "price.json",
            &PriceReport {
                coupon_annual: config.instrument.coupon_annual,
                threshold_bp: spec.threshold,
                scoco,
                straight,
            },
        )?;
        let schedules = StandstillSchedule::build(&set, &spec)?;
        out.with("standstills.csv", |w| schedules.write_csv(w))?;
    }

    if matches!(command, Command::ParRate | Command::Run) {
        let stage = |e: Error| e.in_stage("par-rate");
        let thresholds = config
            .par_rate
            .as_ref()
            .map_or_else(|| vec![spec.threshold], |p| p.thresholds_bp.clone());
        let rows = pricing::par_rate_sweep(&set, &spec, &thresholds).map_err(stage)?;
        let straight = pricing::par_rate(&set, &SCoCoSpec::straight(spec.maturity, 0.0)).map_err(stage)?;
        out.with("par_rates.csv", |w| pricing::write_par_table(&rows, w))?;
        out.json("par_rates.json", &ParReport { straight, thresholds: rows })?;
    }

    if command == Command::Lsm || (all && config.lsm.is_some()) {
        let stage = |e: Error| e.in_stage("lsm");
        let horizons = config.lsm_horizons()?;
        let schedules = StandstillSchedule::build(&set, &spec).map_err(stage)?;
        let mc = pricing::price_with_schedules(&set, &schedules, &spec).map_err(stage)?.price;
        let mut summaries = Vec::new();
        for basis in config.lsm_bases()? {
            let res: LsmResult = lsm_price(&set, &schedules, &spec, &basis, &horizons).map_err(stage)?;
            let tag = basis.describe().replace(['^', ','], "");
            out.with(&format!("lsm_{tag}.csv"), |w| res.write_csv(w))?;
            summaries.push(LsmSummary {
                basis: basis.describe(),
                root_price: res.root_price,
                mc_price: mc,
                relative_error: (res.root_price - mc).abs() / mc,
                max_orthogonality: res.max_orthogonality(),
                horizons: res.distributions.iter().map(|d| (d.horizon, d.summary.clone())).collect(),
            });
        }
        out.json("lsm.json", &summaries)?;
    }

    finish(config, command, out)
}
