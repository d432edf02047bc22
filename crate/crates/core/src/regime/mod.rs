//! Regime-switching Markov chain: transition matrices, stationary
//! distributions, sojourn statistics and path simulation.

mod max_entropy;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use max_entropy::{
    default_eigenvalues, estimate_max_entropy, shannon_entropy, MaxEntropyEstimator, MaxEntropyFit,
};

/// Tolerance on row sums and on the probability-vector sum.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Eigenvalues closer than this to 1 count towards the multiplicity of the
/// unit eigenvalue.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-10;

/// Descriptive statistics of one spread regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub regime_id: usize,
    /// Mean spread level, basis points.
    pub spread_mean: f64,
    /// Standard deviation of the spread level, basis points.
    pub spread_stdev: f64,
    /// Standard deviation of daily log spread returns, as a decimal.
    pub return_stdev: f64,
    pub label: String,
}

impl RegimeSpec {
    pub fn new(
        regime_id: usize,
        spread_mean: f64,
        spread_stdev: f64,
        return_stdev: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        for (name, v) in [
            ("spread_mean", spread_mean),
            ("spread_stdev", spread_stdev),
            ("return_stdev", return_stdev),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("regime {regime_id}: {name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            regime_id,
            spread_mean,
            spread_stdev,
            return_stdev,
            label: label.into(),
        })
    }
}

/// Probability vector over regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationaryDistribution(Vec<f64>);

impl StationaryDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty probability vector"));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid(format!("negative or non-finite probability in {probs:?}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::invalid(format!("probabilities sum to {s}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) {
            return Err(Error::invalid("weights must have a positive sum"));
        }
        Self::new(weights.iter().map(|w| w / s).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&p| p > 0.0)
    }

    pub fn max_abs_diff(&self, other: &StationaryDistribution) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Fraction of observation days spent in each regime.
pub fn empirical_stationary(assignments: &[usize], n_regimes: usize) -> Result<StationaryDistribution> {
    if assignments.is_empty() {
        return Err(Error::NoObservations);
    }
    let mut counts = vec![0usize; n_regimes];
    for &a in assignments {
        if a >= n_regimes {
            return Err(Error::invalid(format!("regime id {a} out of range 0..{n_regimes}")));
        }
        counts[a] += 1;
    }
    let total = assignments.len() as f64;
    let mut probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    // absorb rounding so the vector sums to one
    let s: f64 = probs.iter().sum();
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    probs[last] += 1.0 - s;
    StationaryDistribution::new(probs)
}

/// Row-stochastic matrix of daily regime transition probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
    /// Spectrum the matrix was constructed to have, in descending order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("empty transition matrix"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::invalid(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::invalid(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { rows, eigenvalues: None })
    }

    /// Builds a matrix after rescaling each row to sum to one, for matrices
    /// read from rounded sources.
    pub fn normalized(rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|p| p / s).collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self { rows, eigenvalues: Some(vec![1.0; n]) }
    }

    /// Every row equal to `pi`: one step reaches the stationary law.
    pub fn rank_one(pi: &StationaryDistribution) -> Self {
        let n = pi.len();
        let mut eig = vec![0.0; n];
        eig[0] = 1.0;
        Self {
            rows: vec![pi.probs().to_vec(); n],
            eigenvalues: Some(eig),
        }
    }

    pub(crate) fn with_eigenvalues(mut self, eigenvalues: Vec<f64>) -> Self {
        self.eigenvalues = Some(eigenvalues);
        self
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Spectrum recorded at construction, if any.
    pub fn target_eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.n_states();
        DMatrix::from_fn(n, n, |i, j| self.rows[i][j])
    }

    /// Eigenvalues computed from the entries, sorted by descending real part.
    pub fn computed_eigenvalues(&self) -> Vec<nalgebra::Complex<f64>> {
        let mut ev: Vec<_> = self.to_dmatrix().complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re));
        ev
    }

    pub fn trace(&self) -> f64 {
        (0..self.n_states()).map(|i| self.rows[i][i]).sum()
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.rows)
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.rows.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["from", "to", "prob"])?;
        for (i, row) in self.rows.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                wtr.write_record([i.to_string(), j.to_string(), format!("{p:e}")])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Solves `pi = pi P`, `sum(pi) = 1`.
pub fn stationary_of(p: &TransitionMatrix) -> Result<StationaryDistribution> {
    let n = p.n_states();
    let unit = p
        .computed_eigenvalues()
        .iter()
        .filter(|z| (z.re - 1.0).hypot(z.im) < UNIT_EIGENVALUE_TOL)
        .count();
    if unit != 1 {
        return Err(Error::StationaryNotUnique);
    }
    let pm = p.to_dmatrix();
    // (P^T - I) pi = 0 stacked on 1^T pi = 1
    let mut a = DMatrix::<f64>::zeros(n + 1, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = pm[(j, i)] - if i == j { 1.0 } else { 0.0 };
        }
        a[(n, i)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n + 1);
    b[n] = 1.0;
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-14).map_err(|e| Error::invalid(e.to_string()))?;
    let mut probs: Vec<f64> = x.iter().map(|&v| if v < 0.0 && v > -1e-13 { 0.0 } else { v }).collect();
    let s: f64 = probs.iter().sum();
    for v in &mut probs {
        *v /= s;
    }
    StationaryDistribution::new(probs)
}

/// Mean number of consecutive steps spent in regime `i`.
pub fn expected_duration(p: &TransitionMatrix, i: usize) -> Result<f64> {
    if i >= p.n_states() {
        return Err(Error::invalid(format!("regime id {i} out of range")));
    }
    let stay = p.get(i, i);
    if stay >= 1.0 {
        return Err(Error::InfiniteDuration);
    }
    Ok(1.0 / (1.0 - stay))
}

/// Simulated sequence of regime labels on a daily grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePath {
    /// Length of one grid step, in days.
    pub step_days: f64,
    /// Regime at each grid point, starting with the initial regime.
    pub states: Vec<usize>,
}

impl RegimePath {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Time spent in regime `i` divided by the number of exits from it.
    /// Right-censored sojourns contribute their time but no exit.
    pub fn sojourn_counts(&self, i: usize) -> (usize, usize) {
        let mut time = 0;
        let mut exits = 0;
        for w in self.states.windows(2) {
            if w[0] == i {
                time += 1;
                if w[1] != i {
                    exits += 1;
                }
            }
        }
        (time, exits)
    }
}

/// Draws the next state from row `i` by inversion.
#[inline]
pub(crate) fn next_state<R: Rng + ?Sized>(p: &TransitionMatrix, i: usize, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let row = &p.rows[i];
    let mut acc = 0.0;
    for (j, &pij) in row.iter().enumerate() {
        acc += pij;
        if u < acc {
            return j;
        }
    }
    // u fell in the rounding gap above the cumulative sum
    row.iter().rposition(|&pij| pij > 0.0).unwrap_or(i)
}

/// Simulates `steps` transitions starting from `initial`; the returned path
/// holds `steps + 1` states.
pub fn simulate_regimes<R: Rng + ?Sized>(
    p: &TransitionMatrix,
    initial: usize,
    steps: usize,
    rng: &mut R,
) -> Result<RegimePath> {
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    if initial >= p.n_states() {
        return Err(Error::invalid(format!("initial regime {initial} out of range")));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut s = initial;
    states.push(s);
    for _ in 0..steps {
        s = next_state(p, s, rng);
        states.push(s);
    }
    Ok(RegimePath { step_days: 1.0, states })
}

/// Same as [`simulate_regimes`] with a keyed stream.
pub fn simulate_regimes_seeded(p: &TransitionMatrix, initial: usize, steps: usize, seed: u64) -> Result<RegimePath> {
    let mut rng = crate::rng::stream(seed, 0, 0, crate::rng::Factor::SpreadRegime);
    simulate_regimes(p, initial, steps, &mut rng)
}
