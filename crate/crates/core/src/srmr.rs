//! Spread returns with mean reversion (SRMR).
//!
//! ```text
//!   dr_t = (k0 - k1 r_t - k2 C_t) dt + sigma w_t,   C_t = sum r_s dt,   S_t = S0 exp(C_t)
//! ```
//!
//! Calibration matches the four asymptotic moments E[S], var[S], var[r] and
//! E[(dr)^2] in closed form.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Moment targets of one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTargets {
    /// Asymptotic level.
    pub s_hat: f64,
    /// Asymptotic standard deviation of the level.
    pub sigma_s_hat: f64,
    /// Asymptotic standard deviation of per-step log returns.
    pub sigma_r_hat: f64,
    /// Smoothness, mean squared change of the return.
    pub s2_hat: f64,
    /// Starting level.
    pub s0: f64,
}

impl MomentTargets {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s_hat", self.s_hat), ("s0", self.s0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("sigma_s_hat", self.sigma_s_hat),
            ("sigma_r_hat", self.sigma_r_hat),
            ("s2_hat", self.s2_hat),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be nonnegative, got {v}")));
            }
            if v == 0.0 {
                return Err(Error::Degenerate(format!("{name} is zero")));
            }
        }
        Ok(())
    }

    pub fn with_start(self, s0: f64) -> Self {
        Self { s0, ..self }
    }
}

/// Drift and diffusion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrmrParams {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub sigma: f64,
}

impl SrmrParams {
    pub fn new(k0: f64, k1: f64, k2: f64, sigma: f64) -> Result<Self> {
        if !(k1 > 0.0 && k2 > 0.0 && sigma >= 0.0) || !k0.is_finite() || !k1.is_finite() || !k2.is_finite() {
            return Err(Error::invalid(format!(
                "SRMR coefficients need k1 > 0, k2 > 0, sigma >= 0 (k0={k0}, k1={k1}, k2={k2}, sigma={sigma})"
            )));
        }
        Ok(Self { k0, k1, k2, sigma })
    }

    /// Long-run mean of the cumulative return.
    pub fn mean_c(&self) -> f64 {
        self.k0 / self.k2
    }
}

/// Continuous-time asymptotic moments of the process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMoments {
    pub mean_s: f64,
    pub var_s: f64,
    pub var_r: f64,
    pub var_c: f64,
    pub smoothness: f64,
}

pub fn asymptotic_moments(p: &SrmrParams, s0: f64) -> AsymptoticMoments {
    let var_c = p.sigma * p.sigma / (2.0 * p.k1 * p.k2);
    let m = p.k0 / p.k2;
    AsymptoticMoments {
        mean_s: s0 * (m + 0.5 * var_c).exp(),
        var_s: s0 * s0 * (2.0 * m + var_c).exp() * var_c.exp_m1(),
        var_r: p.sigma * p.sigma / (2.0 * p.k1),
        var_c,
        smoothness: 0.5 * p.sigma * p.sigma * (p.k1 + p.k2 / p.k1 + 2.0),
    }
}

/// Relative residuals of the four moment-matching equations.
pub fn system_residuals(p: &SrmrParams, t: &MomentTargets) -> [f64; 4] {
    let m = asymptotic_moments(p, t.s0);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    [
        rel(m.mean_s, t.s_hat),
        rel(m.var_s, t.sigma_s_hat * t.sigma_s_hat),
        rel(m.var_r, t.sigma_r_hat * t.sigma_r_hat),
        rel(m.smoothness, t.s2_hat),
    ]
}

/// Sample moments of a level series.
///
/// Levels use population statistics, returns are `ln(S_t / S_{t-1})` and the
/// smoothness is the mean squared first difference of the returns.
pub fn estimate_moments(levels: &[f64]) -> Result<MomentTargets> {
    if levels.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 observations, got {}", levels.len())));
    }
    if let Some((i, v)) = levels.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("nonpositive level {v} at index {i}")));
    }
    let returns: Vec<f64> = levels.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let sq_diff: Vec<f64> = returns.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).collect();
    Ok(MomentTargets {
        s_hat: stats::mean(levels),
        sigma_s_hat: stats::variance(levels).sqrt(),
        sigma_r_hat: stats::variance(&returns).sqrt(),
        s2_hat: stats::mean(&sq_diff),
        s0: levels[0],
    })
}

/// Closed-form solution of the moment-matching system.
pub fn calibrate(t: &MomentTargets) -> Result<SrmrParams> {
    t.validate()?;
    let vr = t.sigma_r_hat * t.sigma_r_hat;
    let log_disp = (t.sigma_s_hat / t.s_hat).powi(2).ln_1p();
    let k2 = vr / log_disp;
    if !k2.is_finite() || log_disp <= 0.0 {
        return Err(Error::Degenerate(format!(
            "level variance {:.3e} too small relative to mean {:.3e}",
            t.sigma_s_hat, t.s_hat
        )));
    }
    let excess = t.s2_hat - k2 * vr;
    if !(excess > 0.0) {
        return Err(Error::SmoothnessIncompatible);
    }
    // sqrt(1 + y) - 1 without cancellation
    let k1 = (0.5 * (excess / vr).ln_1p()).exp_m1();
    let sigma = (2.0 * vr * k1).sqrt();
    let k0 = k2 * (t.s_hat / t.s0).ln() - 0.5 * vr;
    SrmrParams::new(k0, k1, k2, sigma)
}

/// A regime's targets with their calibration. Restarting the process from a
/// new level keeps the asymptotic target and re-solves for `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCalibration {
    pub targets: MomentTargets,
    pub params: SrmrParams,
}

impl RegimeCalibration {
    pub fn new(targets: MomentTargets) -> Result<Self> {
        Ok(Self {
            params: calibrate(&targets)?,
            targets,
        })
    }

    /// Parameters for a run that starts at `s0` with `C = 0`.
    pub fn params_from(&self, s0: f64) -> SrmrParams {
        let vr = self.targets.sigma_r_hat * self.targets.sigma_r_hat;
        SrmrParams {
            k0: self.params.k2 * (self.targets.s_hat / s0).ln() - 0.5 * vr,
            ..self.params
        }
    }
}

/// Process state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrmrState {
    pub r: f64,
    pub c: f64,
    pub s0: f64,
    pub level: f64,
}

impl SrmrState {
    pub fn start(s0: f64) -> Self {
        Self { r: 0.0, c: 0.0, s0, level: s0 }
    }

    /// Restarts the integral at the current level, keeping the return.
    pub fn rebased(&self) -> Self {
        Self {
            r: self.r,
            c: 0.0,
            s0: self.level,
            level: self.level,
        }
    }
}

/// One step of the recursion. `w` is the noise already scaled by `sqrt(dt)`.
#[inline]
pub fn step(state: &SrmrState, p: &SrmrParams, dt: f64, w: f64) -> SrmrState {
    let dr = (p.k0 - p.k1 * state.r - p.k2 * state.c) * dt + p.sigma * w;
    let r = state.r + dr;
    let c = state.c + r * dt;
    SrmrState {
        r,
        c,
        s0: state.s0,
        level: state.s0 * c.exp(),
    }
}

/// Simulates `steps` unit steps and returns the states after each step.
pub fn simulate<R: Rng + ?Sized>(p: &SrmrParams, start: SrmrState, steps: usize, rng: &mut R) -> Vec<SrmrState> {
    let mut out = Vec::with_capacity(steps);
    let mut s = start;
    for _ in 0..steps {
        s = step(&s, p, 1.0, rng.sample(StandardNormal));
        out.push(s);
    }
    out
}

/// Correlation between the noises of two processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CorrelationSpec {
    pub rho: f64,
}

impl CorrelationSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::invalid(format!("correlation {rho} outside [-1, 1]")));
        }
        Ok(Self { rho })
    }
}

/// `(eps1, rho eps1 + sqrt(1 - rho^2) eps2)`.
#[inline]
pub fn correlated_noise(c: CorrelationSpec, eps1: f64, eps2: f64) -> (f64, f64) {
    (eps1, c.rho * eps1 + eps2 * (1.0 - c.rho * c.rho).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Factor};

    fn targets() -> MomentTargets {
        MomentTargets {
            s_hat: 250.0,
            sigma_s_hat: 60.0,
            sigma_r_hat: 0.03,
            s2_hat: 0.0012,
            s0: 200.0,
        }
    }

    #[test]
    fn calibration_solves_the_system() {
        let p = calibrate(&targets()).unwrap();
        for r in system_residuals(&p, &targets()) {
            assert!(r < 1e-12, "{r}");
        }
    }

    #[test]
    fn level_at_start_gives_pure_drift_correction() {
        let t = MomentTargets { s0: 250.0, ..targets() };
        let p = calibrate(&t).unwrap();
        assert_eq!(p.k0, -0.5 * 0.03 * 0.03);
    }

    #[test]
    fn degenerate_and_rough_targets_are_rejected() {
        let flat = estimate_moments(&[100.0; 10]).unwrap();
        assert_eq!(flat.s_hat, 100.0);
        assert_eq!(flat.sigma_s_hat, 0.0);
        assert_eq!(flat.sigma_r_hat, 0.0);
        assert!(matches!(calibrate(&flat), Err(Error::Degenerate(_))));
        let tiny = MomentTargets { sigma_s_hat: 1e-300, ..targets() };
        assert!(matches!(calibrate(&tiny), Err(Error::Degenerate(_))));
        let rough = MomentTargets { s2_hat: 1e-6, ..targets() };
        assert!(matches!(calibrate(&rough), Err(Error::SmoothnessIncompatible)));
    }

    #[test]
    fn moments_of_constructed_series() {
        let returns = [0.01, -0.02, 0.03, 0.0, -0.01];
        let mut levels = vec![100.0];
        for r in returns {
            let last = *levels.last().unwrap();
            levels.push(last * f64::exp(r));
        }
        let m = estimate_moments(&levels).unwrap();
        let mr = returns.iter().sum::<f64>() / 5.0;
        let vr = returns.iter().map(|r| (r - mr) * (r - mr)).sum::<f64>() / 5.0;
        assert!((m.sigma_r_hat - vr.sqrt()).abs() < 1e-12);
        let s2 = returns.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / 4.0;
        assert!((m.s2_hat - s2).abs() < 1e-12);
        assert!(estimate_moments(&[1.0, 2.0]).is_err());
        assert!(estimate_moments(&[1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn noiseless_fixed_point() {
        let p = SrmrParams::new(0.002, 0.3, 0.01, 0.0).unwrap();
        let mut s = SrmrState { r: 0.0, c: p.mean_c(), s0: 100.0, level: 100.0 * p.mean_c().exp() };
        let start = s;
        for _ in 0..1000 {
            s = step(&s, &p, 1.0, 0.0);
        }
        assert_eq!(s.r, 0.0);
        assert_eq!(s.c, start.c);
        assert_eq!(s.level, start.level);
    }

    #[test]
    fn noiseless_path_converges() {
        let p = SrmrParams::new(0.002, 0.3, 0.01, 0.0).unwrap();
        let mut s = SrmrState::start(100.0);
        for _ in 0..5000 {
            s = step(&s, &p, 1.0, 0.0);
        }
        assert!((s.c - 0.2).abs() < 1e-9);
        assert!((s.level - 100.0 * 0.2f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn correlated_noise_limits() {
        assert_eq!(correlated_noise(CorrelationSpec::new(0.0).unwrap(), 0.3, -1.2), (0.3, -1.2));
        assert_eq!(correlated_noise(CorrelationSpec::new(1.0).unwrap(), 0.3, -1.2), (0.3, 0.3));
        assert!(CorrelationSpec::new(1.5).is_err());
    }

    #[test]
    fn sample_correlation_of_generated_noise() {
        let c = CorrelationSpec::new(0.5).unwrap();
        let mut rng = stream(11, 0, 0, Factor::Generic);
        let n = 1_000_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (a, b) = correlated_noise(c, rng.sample(StandardNormal), rng.sample(StandardNormal));
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!((corr - 0.5).abs() < 0.003, "{corr}");
    }

    #[test]
    fn rebasing_keeps_target_level() {
        let cal = RegimeCalibration::new(targets()).unwrap();
        let p = cal.params_from(400.0);
        let m = asymptotic_moments(&p, 400.0);
        assert!((m.mean_s - 250.0).abs() < 1e-9);
        assert_eq!(p.k1, cal.params.k1);
    }
}
