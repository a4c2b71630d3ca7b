//! Exact stationary law of log-linear learning and the design objective.
//!
//! Log-linear learning on a symmetric weight matrix is reversible with
//! stationary law `mu(a) ∝ exp(beta Phi_W(a))`. The designer minimizes
//!
//! ```text
//! f0(W) = 1 / mu(a*) + (rho/2) 1'W1
//! ```
//!
//! where `1 / mu(a*) = sum_a exp(beta (Phi_W(a) - Phi_W(a*)))`. All sums are
//! taken by exhaustive enumeration, so `N` is capped at [`MAX_ENUM_AGENTS`].

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::QuadraticForm;
use crate::error::{Error, Result};
use crate::game::{nash_action, ActionProfile, Equilibrium, GameParams, WeightMatrix};
use crate::sum::{pairwise_sum, ScaledSum};

pub const MAX_ENUM_AGENTS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsDistribution {
    n: usize,
    log_weights: Vec<f64>,
    max_log_weight: f64,
    scaled_sum: f64,
}

impl GibbsDistribution {
    /// Normalizes arbitrary log-weights indexed by profile.
    pub fn from_log_weights(n: usize, log_weights: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_ENUM_AGENTS {
            return Err(Error::TooManyAgents {
                n,
                limit: MAX_ENUM_AGENTS,
            });
        }
        if log_weights.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: log_weights.len(),
            });
        }
        let s = ScaledSum::from_exponents(&log_weights);
        Ok(GibbsDistribution {
            n,
            max_log_weight: s.max,
            scaled_sum: s.scaled,
            log_weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `beta * Phi_W(a)` for every profile index.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn log_partition(&self) -> f64 {
        self.max_log_weight + self.scaled_sum.ln()
    }

    pub fn probability(&self, index: usize) -> f64 {
        (self.log_weights[index] - self.max_log_weight).exp() / self.scaled_sum
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.log_weights.len())
            .map(|x| self.probability(x))
            .collect()
    }

    /// Most probable profile; lowest index on ties.
    pub fn mode(&self) -> ActionProfile {
        let (idx, _) = self
            .log_weights
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
        ActionProfile::from_index(self.n, idx as u64).expect("index in range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    /// `1 / mu(a* | beta)`.
    pub inverse_prob: f64,
    /// `(rho/2) 1'W1`.
    pub penalty: f64,
    pub total: f64,
}

impl ObjectiveValue {
    fn new(inverse_prob: f64, penalty: f64) -> Self {
        ObjectiveValue {
            inverse_prob,
            penalty,
            total: inverse_prob + penalty,
        }
    }

    /// Stationary probability of the equilibrium profile.
    pub fn equilibrium_probability(&self) -> f64 {
        1.0 / self.inverse_prob
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ENUM_AGENTS {
        return Err(Error::TooManyAgents {
            n,
            limit: MAX_ENUM_AGENTS,
        });
    }
    Ok(())
}

fn check_dims(w: &WeightMatrix, params: &GameParams) -> Result<()> {
    if w.n() != params.n_agents {
        return Err(Error::DimensionMismatch {
            expected: params.n_agents,
            actual: w.n(),
        });
    }
    check_size(w.n())
}

/// The potential without its constant: `Phi_W(a) - Phi_W(0)`.
fn relative_potential(w: &WeightMatrix, params: &GameParams) -> QuadraticForm {
    let n = w.n();
    let c = params.theta_per_agent();
    let dense: Vec<f64> = (0..n * n).map(|k| w.get(k / n, k % n)).collect();
    let h: Vec<f64> = w.row_sums().iter().map(|s| -c * s).collect();
    QuadraticForm::new(n, dense, h)
}

pub fn gibbs_distribution(w: &WeightMatrix, params: &GameParams) -> Result<GibbsDistribution> {
    check_dims(w, params)?;
    let n = w.n();
    let form = relative_potential(w, params);
    let constant = 0.5 * params.theta_per_agent() * w.total_weight();
    let mut log_weights = vec![0.0; 1 << n];
    log_weights
        .par_chunks_mut(form.block_len())
        .enumerate()
        .for_each(|(hi, out)| form.fill_block(hi, params.beta, constant, out));
    GibbsDistribution::from_log_weights(n, log_weights)
}

/// Moment sums of `p(a) = exp(e(a) - max)` within one block.
struct BlockMoments {
    sum: ScaledSum,
    /// `sum p a_i`.
    first: Vec<f64>,
    /// `sum p a_i a_j`, row-major, upper triangle filled.
    second: Vec<f64>,
}

struct ExpSum {
    sum: ScaledSum,
    first: Vec<f64>,
    second: Vec<f64>,
}

/// `sum_a exp(beta (Phi(a) - Phi(0) + offset))`, optionally with the first and
/// second action moments needed for the gradient. Blocks are reduced in
/// index order, so the result does not depend on the thread pool.
fn exp_sum(form: &QuadraticForm, n: usize, beta: f64, offset: f64, moments: bool) -> ExpSum {
    let len = form.block_len();
    let lb = form.low_bits();
    let blocks: Vec<BlockMoments> = (0..form.block_count())
        .into_par_iter()
        .map(|hi| {
            let mut e = vec![0.0; len];
            form.fill_block(hi, beta, offset, &mut e);
            let sum = ScaledSum::from_exponents(&e);
            let (mut first, mut second) = (Vec::new(), Vec::new());
            if moments {
                first = vec![0.0; n];
                second = vec![0.0; n * n];
                let mut ones = Vec::with_capacity(n);
                for (lo, &ex) in e.iter().enumerate() {
                    let p = (ex - sum.max).exp();
                    let x = (hi << lb) | lo;
                    ones.clear();
                    ones.extend((0..n).filter(|&i| (x >> i) & 1 == 1));
                    for (k, &i) in ones.iter().enumerate() {
                        first[i] += p;
                        for &j in &ones[k + 1..] {
                            second[i * n + j] += p;
                        }
                    }
                }
            }
            BlockMoments { sum, first, second }
        })
        .collect();

    let parts: Vec<ScaledSum> = blocks.iter().map(|b| b.sum).collect();
    let total = ScaledSum::combine(&parts);
    let (mut first, mut second) = (Vec::new(), Vec::new());
    if moments {
        first = vec![0.0; n];
        second = vec![0.0; n * n];
        for b in &blocks {
            let r = (b.sum.max - total.max).exp();
            for (acc, v) in first.iter_mut().zip(&b.first) {
                *acc += r * v;
            }
            for (acc, v) in second.iter_mut().zip(&b.second) {
                *acc += r * v;
            }
        }
    }
    ExpSum {
        sum: total,
        first,
        second,
    }
}

/// Branch constant added to the relative potential: 0 when `a* = 0`,
/// `(theta/N - 1/2) 1'W1` when `a* = 1`.
fn branch_offset(eq: Equilibrium, w: &WeightMatrix, params: &GameParams) -> f64 {
    match eq {
        Equilibrium::AllOnes => (params.theta_per_agent() - 0.5) * w.total_weight(),
        _ => 0.0,
    }
}

fn regime(params: &GameParams) -> Result<Equilibrium> {
    match nash_action(params) {
        Equilibrium::Tie => Err(Error::TieRegime),
        eq => Ok(eq),
    }
}

/// `1 / mu(0 | beta)`; valid when `theta > N/2`.
pub fn inverse_prob_zero(w: &WeightMatrix, params: &GameParams) -> Result<f64> {
    check_dims(w, params)?;
    match regime(params)? {
        Equilibrium::AllZeros => {}
        _ => {
            return Err(Error::WrongRegime(
                "all-zeros is the equilibrium only when theta > N/2".into(),
            ))
        }
    }
    let form = relative_potential(w, params);
    Ok(exp_sum(&form, w.n(), params.beta, 0.0, false).sum.value())
}

/// `1 / mu(1 | beta)`; valid when `theta < N/2`.
pub fn inverse_prob_one(w: &WeightMatrix, params: &GameParams) -> Result<f64> {
    check_dims(w, params)?;
    match regime(params)? {
        Equilibrium::AllOnes => {}
        _ => {
            return Err(Error::WrongRegime(
                "all-ones is the equilibrium only when theta < N/2".into(),
            ))
        }
    }
    let form = relative_potential(w, params);
    let offset = branch_offset(Equilibrium::AllOnes, w, params);
    Ok(exp_sum(&form, w.n(), params.beta, offset, false).sum.value())
}

/// `f0(W)` on the branch selected by [`nash_action`].
pub fn objective(w: &WeightMatrix, params: &GameParams) -> Result<ObjectiveValue> {
    check_dims(w, params)?;
    let eq = regime(params)?;
    let form = relative_potential(w, params);
    let offset = branch_offset(eq, w, params);
    let inv = exp_sum(&form, w.n(), params.beta, offset, false).sum.value();
    Ok(ObjectiveValue::new(inv, 0.5 * params.rho * w.total_weight()))
}

/// `f0(W)` together with its gradient.
///
/// Each unordered pair `{i, j}` is one variable; moving it moves both
/// `w_ij` and `w_ji`. The returned matrix carries that pair derivative in
/// both `(i, j)` and `(j, i)` and zeros on the diagonal.
pub fn objective_with_gradient(
    w: &WeightMatrix,
    params: &GameParams,
) -> Result<(ObjectiveValue, DMatrix<f64>)> {
    check_dims(w, params)?;
    let eq = regime(params)?;
    let n = w.n();
    let c = params.theta_per_agent();
    let form = relative_potential(w, params);
    let offset = branch_offset(eq, w, params);
    let sums = exp_sum(&form, n, params.beta, offset, true);

    // d/dw_ij of the exponent: beta (a_i a_j - c (a_i + a_j) + k)
    let k = match eq {
        Equilibrium::AllOnes => 2.0 * c - 1.0,
        _ => 0.0,
    };
    let scale = params.beta * sums.sum.max.exp();
    let s = sums.sum.scaled;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sums.second[i * n + j] - c * (sums.first[i] + sums.first[j]) + k * s;
            let v = scale * d + params.rho;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let value = ObjectiveValue::new(sums.sum.value(), 0.5 * params.rho * w.total_weight());
    Ok((value, g))
}

pub fn objective_gradient(w: &WeightMatrix, params: &GameParams) -> Result<DMatrix<f64>> {
    objective_with_gradient(w, params).map(|(_, g)| g)
}

/// Exponents `beta (Phi(a) - Phi(a*))` for every profile, in index order.
pub fn relative_log_weights(w: &WeightMatrix, params: &GameParams) -> Result<Vec<f64>> {
    check_dims(w, params)?;
    let eq = regime(params)?;
    let form = relative_potential(w, params);
    let offset = branch_offset(eq, w, params);
    let mut out = vec![0.0; 1 << w.n()];
    out.par_chunks_mut(form.block_len())
        .enumerate()
        .for_each(|(hi, chunk)| form.fill_block(hi, params.beta, offset, chunk));
    Ok(out)
}

/// Sum of probabilities, for normalization checks.
pub fn total_probability(dist: &GibbsDistribution) -> f64 {
    pairwise_sum(&dist.probabilities())
}
