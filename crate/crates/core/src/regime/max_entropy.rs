//! Maximum-entropy estimation of a transition matrix with a prescribed
//! stationary distribution and spectrum.
//!
//! The unknowns are the right eigenvectors `U` (first column fixed to ones),
//! the left eigenvectors `V` (first row fixed to the target distribution) and
//! the matrix `P` itself. The equality constraints
//!
//! ```text
//!   U V     = I
//!   U D V   = P        D = diag(1, l_2, .., l_S)
//!   P 1     = 1
//! ```
//!
//! are handled by an augmented Lagrangian, nonnegativity of `P` by a log
//! barrier whose weight is driven to zero. Each subproblem is minimised with a
//! damped Newton method on the exact Hessian. A final restoration step sets
//! `P = V^-1 D V` from the converged left eigenvectors, which satisfies the
//! equality constraints to rounding error.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{StationaryDistribution, TransitionMatrix};
use crate::error::{ConstraintResiduals, Error, Result};
use crate::rng::{self, Factor};

/// Conditional entropy `-sum p_ij ln p_ij` of a row-stochastic matrix.
pub fn shannon_entropy(rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .flatten()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// `l_i = 1 - i * 1e-3` for `i = 2..S`.
pub fn default_eigenvalues(n_states: usize) -> Vec<f64> {
    (2..=n_states).map(|i| 1.0 - i as f64 * 1e-3).collect()
}

/// Result of a successful estimation.
#[derive(Debug, Clone)]
pub struct MaxEntropyFit {
    pub matrix: TransitionMatrix,
    pub entropy: f64,
    /// Constraint residuals of the winning start before restoration.
    pub residuals: ConstraintResiduals,
    pub starts_converged: usize,
    pub starts: usize,
}

#[derive(Debug, Clone)]
pub struct MaxEntropyEstimator {
    pub starts: usize,
    pub seed: u64,
    /// Required max-norm of the equality residuals at termination.
    pub constraint_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Weight of the rank-one matrix in the random starting points.
    pub start_mixing: f64,
}

impl Default for MaxEntropyEstimator {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0x5c0c0,
            constraint_tol: 1e-9,
            max_outer: 60,
            max_inner: 200,
            start_mixing: 0.7,
        }
    }
}

/// Convenience wrapper around [`MaxEntropyEstimator::estimate`] with
/// default settings.
pub fn estimate_max_entropy(target: &StationaryDistribution, eigenvalues: &[f64]) -> Result<TransitionMatrix> {
    MaxEntropyEstimator::default().estimate(target, eigenvalues).map(|f| f.matrix)
}

impl MaxEntropyEstimator {
    pub fn estimate(&self, target: &StationaryDistribution, eigenvalues: &[f64]) -> Result<MaxEntropyFit> {
        let s = target.len();
        if !target.is_strictly_positive() {
            return Err(Error::invalid(
                "target distribution has a zero entry; the regime would be unreachable",
            ));
        }
        validate_spectrum(s, eigenvalues)?;
        let mut d = Vec::with_capacity(s);
        d.push(1.0);
        d.extend_from_slice(eigenvalues);

        if s == 1 {
            let matrix = TransitionMatrix::new(vec![vec![1.0]])?.with_eigenvalues(d);
            return Ok(MaxEntropyFit {
                matrix,
                entropy: 0.0,
                residuals: ConstraintResiduals {
                    orthonormality: 0.0,
                    spectral: 0.0,
                    row_sums: 0.0,
                    negativity: 0.0,
                },
                starts_converged: 1,
                starts: 1,
            });
        }

        let problem = Problem::new(target.probs().to_vec(), d.clone());
        let outcomes: Vec<StartOutcome> = (0..self.starts.max(1))
            .into_par_iter()
            .map(|k| {
                let mut rng = rng::stream(self.seed, k as u64, 0, Factor::Multistart);
                let x0 = problem.starting_point(self.start_mixing, &mut rng);
                self.run_start(&problem, x0)
            })
            .collect();

        let starts = outcomes.len();
        let converged: Vec<&StartOutcome> = outcomes.iter().filter(|o| o.feasible).collect();
        let Some(best) = converged.iter().copied().reduce(|a, b| if b.entropy > a.entropy { b } else { a }) else {
            let least_bad = outcomes
                .iter()
                .min_by(|a, b| a.residuals.spectral.max(a.residuals.orthonormality).total_cmp(
                    &b.residuals.spectral.max(b.residuals.orthonormality),
                ))
                .expect("at least one start");
            return Err(Error::Infeasible(least_bad.residuals));
        };
        let matrix = TransitionMatrix::new(best.restored.clone())?.with_eigenvalues(d);
        Ok(MaxEntropyFit {
            entropy: matrix.entropy(),
            matrix,
            residuals: best.residuals,
            starts_converged: converged.len(),
            starts,
        })
    }

    fn run_start(&self, problem: &Problem, mut x: Vec<f64>) -> StartOutcome {
        let m = problem.n_constraints();
        let mut lambda = vec![0.0; m];
        let mut rho = 10.0;
        let mut mu = 1e-6;
        let mut prev_violation = f64::INFINITY;

        for _ in 0..self.max_outer {
            let inner_tol = (1e-3 * prev_violation.min(1.0)).max(1e-11);
            newton_minimize(problem, &mut x, &lambda, rho, mu, inner_tol, self.max_inner);
            let c = problem.constraints(&x);
            let violation = max_abs(&c);
            for (l, ci) in lambda.iter_mut().zip(&c) {
                *l += rho * ci;
            }
            if violation > 0.25 * prev_violation {
                rho = (rho * 10.0).min(1e10);
            }
            prev_violation = violation;
            mu = (mu * 0.1).max(1e-16);
            if violation < self.constraint_tol && mu <= 1e-14 {
                break;
            }
        }
        problem.finish(&x, self.constraint_tol)
    }
}

fn validate_spectrum(s: usize, eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.len() + 1 != s {
        return Err(Error::invalid(format!(
            "expected {} eigenvalues (l_2..l_S) for {s} regimes, got {}",
            s - 1,
            eigenvalues.len()
        )));
    }
    let mut prev = 1.0f64;
    for &l in eigenvalues {
        if !l.is_finite() || l.abs() >= 1.0 {
            return Err(Error::invalid(format!("eigenvalue {l} must satisfy |l| < 1")));
        }
        if l.abs() >= prev.abs() {
            return Err(Error::invalid(
                "eigenvalues must be distinct and strictly decreasing in magnitude",
            ));
        }
        prev = l;
    }
    Ok(())
}

struct StartOutcome {
    feasible: bool,
    entropy: f64,
    restored: Vec<Vec<f64>>,
    residuals: ConstraintResiduals,
}

/// Variable layout: free entries of `U` (columns 1..S), free entries of `V`
/// (rows 1..S), then `P`, all row-major.
struct Problem {
    s: usize,
    pi: Vec<f64>,
    d: Vec<f64>,
}

impl Problem {
    fn new(pi: Vec<f64>, d: Vec<f64>) -> Self {
        Self { s: pi.len(), pi, d }
    }

    fn n_u(&self) -> usize {
        self.s * (self.s - 1)
    }

    fn n_vars(&self) -> usize {
        2 * self.s * (self.s - 1) + self.s * self.s
    }

    fn n_constraints(&self) -> usize {
        2 * self.s * self.s + self.s
    }

    #[inline]
    fn iu(&self, i: usize, k: usize) -> usize {
        i * (self.s - 1) + (k - 1)
    }

    #[inline]
    fn iv(&self, k: usize, j: usize) -> usize {
        self.n_u() + (k - 1) * self.s + j
    }

    #[inline]
    fn ip(&self, i: usize, j: usize) -> usize {
        2 * self.n_u() + i * self.s + j
    }

    fn u(&self, x: &[f64], i: usize, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            x[self.iu(i, k)]
        }
    }

    fn v(&self, x: &[f64], k: usize, j: usize) -> f64 {
        if k == 0 {
            self.pi[j]
        } else {
            x[self.iv(k, j)]
        }
    }

    fn starting_point<R: Rng>(&self, mixing: f64, rng: &mut R) -> Vec<f64> {
        let s = self.s;
        let mut x = vec![0.0; self.n_vars()];
        // perturbed rank-one matrix, rows = pi
        for i in 0..s {
            let noise: Vec<f64> = (0..s).map(|_| rng.random::<f64>() + 1e-3).collect();
            let ns: f64 = noise.iter().sum();
            for j in 0..s {
                x[self.ip(i, j)] = mixing * self.pi[j] + (1.0 - mixing) * noise[j] / ns;
            }
        }
        // random zero-sum left eigenvectors, U = V^-1 keeps U V = I exact
        loop {
            let mut v = DMatrix::<f64>::zeros(s, s);
            for j in 0..s {
                v[(0, j)] = self.pi[j];
            }
            for k in 1..s {
                let row: Vec<f64> = (0..s).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let mean = row.iter().sum::<f64>() / s as f64;
                for j in 0..s {
                    v[(k, j)] = row[j] - mean;
                }
            }
            let Some(u) = v.clone().try_inverse() else { continue };
            if u.amax() > 1e3 {
                continue;
            }
            for k in 1..s {
                for j in 0..s {
                    x[self.iv(k, j)] = v[(k, j)];
                }
                for i in 0..s {
                    x[self.iu(i, k)] = u[(i, k)];
                }
            }
            return x;
        }
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        let s = self.s;
        let mut c = vec![0.0; self.n_constraints()];
        for i in 0..s {
            for j in 0..s {
                let mut uv = 0.0;
                let mut udv = 0.0;
                for k in 0..s {
                    let t = self.u(x, i, k) * self.v(x, k, j);
                    uv += t;
                    udv += self.d[k] * t;
                }
                c[i * s + j] = uv - if i == j { 1.0 } else { 0.0 };
                c[s * s + i * s + j] = udv - x[self.ip(i, j)];
            }
            let row: f64 = (0..s).map(|j| x[self.ip(i, j)]).sum();
            c[2 * s * s + i] = row - 1.0;
        }
        c
    }

    /// Dense constraint Jacobian, `m x n`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let s = self.s;
        let mut jac = DMatrix::<f64>::zeros(self.n_constraints(), self.n_vars());
        for i in 0..s {
            for j in 0..s {
                let r1 = i * s + j;
                let r2 = s * s + i * s + j;
                for k in 1..s {
                    let vkj = self.v(x, k, j);
                    let uik = self.u(x, i, k);
                    jac[(r1, self.iu(i, k))] += vkj;
                    jac[(r1, self.iv(k, j))] += uik;
                    jac[(r2, self.iu(i, k))] += self.d[k] * vkj;
                    jac[(r2, self.iv(k, j))] += self.d[k] * uik;
                }
                jac[(r2, self.ip(i, j))] = -1.0;
                jac[(2 * s * s + i, self.ip(i, j))] = 1.0;
            }
        }
        jac
    }

    /// Negative entropy plus log barrier; `None` outside the open orthant.
    fn objective(&self, x: &[f64], mu: f64) -> Option<f64> {
        let mut f = 0.0;
        for i in 0..self.s {
            for j in 0..self.s {
                let p = x[self.ip(i, j)];
                if !(p > 0.0) {
                    return None;
                }
                f += p * p.ln() - mu * p.ln();
            }
        }
        Some(f)
    }

    fn merit(&self, x: &[f64], lambda: &[f64], rho: f64, mu: f64) -> Option<f64> {
        let f = self.objective(x, mu)?;
        let c = self.constraints(x);
        let mut m = f;
        for (l, ci) in lambda.iter().zip(&c) {
            m += l * ci + 0.5 * rho * ci * ci;
        }
        Some(m)
    }

    fn gradient_hessian(
        &self,
        x: &[f64],
        lambda: &[f64],
        rho: f64,
        mu: f64,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let s = self.s;
        let n = self.n_vars();
        let c = self.constraints(x);
        let w: Vec<f64> = lambda.iter().zip(&c).map(|(l, ci)| l + rho * ci).collect();
        let jac = self.jacobian(x);
        let wv = DVector::from_vec(w.clone());
        let mut g = jac.transpose() * &wv;
        let mut h = (jac.transpose() * &jac) * rho;
        for i in 0..s {
            for j in 0..s {
                let idx = self.ip(i, j);
                let p = x[idx];
                g[idx] += p.ln() + 1.0 - mu / p;
                h[(idx, idx)] += 1.0 / p + mu / (p * p);
                let w1 = w[i * s + j];
                let w2 = w[s * s + i * s + j];
                for k in 1..s {
                    let a = self.iu(i, k);
                    let b = self.iv(k, j);
                    let val = w1 + self.d[k] * w2;
                    h[(a, b)] += val;
                    h[(b, a)] += val;
                }
            }
        }
        debug_assert_eq!(g.len(), n);
        (g, h)
    }

    /// Restores exact feasibility from the left eigenvectors and scores the
    /// start.
    fn finish(&self, x: &[f64], tol: f64) -> StartOutcome {
        let s = self.s;
        let c = self.constraints(x);
        let orthonormality = max_abs(&c[..s * s]);
        let spectral = max_abs(&c[s * s..2 * s * s]);
        let row_sums = max_abs(&c[2 * s * s..]);

        let mut v = DMatrix::<f64>::zeros(s, s);
        for j in 0..s {
            v[(0, j)] = self.pi[j];
        }
        for k in 1..s {
            let mean = (0..s).map(|j| x[self.iv(k, j)]).sum::<f64>() / s as f64;
            for j in 0..s {
                v[(k, j)] = x[self.iv(k, j)] - mean;
            }
        }
        let restored = v.clone().try_inverse().map(|u| {
            let dm = DMatrix::from_diagonal(&DVector::from_vec(self.d.clone()));
            let p = u * dm * v;
            (0..s)
                .map(|i| (0..s).map(|j| p[(i, j)]).collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        });
        let Some(mut restored) = restored else {
            return StartOutcome {
                feasible: false,
                entropy: f64::NEG_INFINITY,
                restored: Vec::new(),
                residuals: ConstraintResiduals {
                    orthonormality,
                    spectral,
                    row_sums,
                    negativity: f64::NAN,
                },
            };
        };
        let min_entry = restored.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let negativity = min_entry.min(0.0);
        // rounding-level negatives are zeroed, then rows re-summed exactly
        if negativity > -1e-14 {
            for row in &mut restored {
                for p in row.iter_mut() {
                    *p = p.max(0.0);
                }
                let sum: f64 = row.iter().sum();
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
        }
        let residuals = ConstraintResiduals {
            orthonormality,
            spectral,
            row_sums,
            negativity,
        };
        let feasible = orthonormality.max(spectral).max(row_sums) < tol && negativity > -1e-14;
        StartOutcome {
            feasible,
            entropy: if feasible { shannon_entropy(&restored) } else { f64::NEG_INFINITY },
            restored,
            residuals,
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton on the augmented Lagrangian with a backtracking line search
/// that keeps `P` strictly positive.
fn newton_minimize(
    problem: &Problem,
    x: &mut Vec<f64>,
    lambda: &[f64],
    rho: f64,
    mu: f64,
    tol: f64,
    max_iter: usize,
) {
    let n = x.len();
    let p_start = problem.ip(0, 0);
    let Some(mut fx) = problem.merit(x, lambda, rho, mu) else {
        return;
    };
    let mut damping = 0.0f64;
    for _ in 0..max_iter {
        let (g, h) = problem.gradient_hessian(x, lambda, rho, mu);
        if g.amax() < tol {
            return;
        }
        let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
        let mut tau = damping.max(1e-14 * scale);
        let step = loop {
            let mut hr = h.clone();
            for i in 0..n {
                hr[(i, i)] += tau;
            }
            if let Some(ch) = hr.cholesky() {
                break ch.solve(&(-&g));
            }
            tau = (tau * 10.0).max(1e-10 * scale);
            if tau > 1e6 * scale {
                // fall back to steepest descent
                break -&g / scale;
            }
        };
        damping = tau * 0.1;

        // largest step keeping P > 0, with a safety margin
        let mut alpha = 1.0f64;
        for idx in p_start..n {
            if step[idx] < 0.0 {
                alpha = alpha.min(-0.95 * x[idx] / step[idx]);
            }
        }
        let slope = g.dot(&step);
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, di)| xi + alpha * di).collect();
            if let Some(ft) = problem.merit(&trial, lambda, rho, mu) {
                if ft <= fx + 1e-4 * alpha * slope.min(0.0) || (ft - fx).abs() <= 1e-15 * fx.abs().max(1.0) && ft <= fx {
                    *x = trial;
                    fx = ft;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return;
        }
    }
}
