//! Asynchronous log-linear learning.
//!
//! At each step one agent is drawn and resamples its action from the softmax
//! of its two utilities at inverse temperature `beta`. Every other agent
//! keeps its action, so consecutive profiles differ in at most one bit.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::game::{ActionProfile, GameParams, WeightMatrix};
use crate::gibbs::{GibbsDistribution, MAX_ENUM_AGENTS};

/// Generator behind every chain; recorded in experiment outputs.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.9, seed_from_u64)";

/// How the revising agent is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentSelection {
    Uniform,
    /// Draw agent `i` with probability proportional to `weights[i]`.
    Weighted(Vec<f64>),
}

impl AgentSelection {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> usize {
        match self {
            AgentSelection::Uniform => rng.random_range(0..n),
            AgentSelection::Weighted(ws) => {
                let total: f64 = ws.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (i, &w) in ws.iter().enumerate() {
                    if u < w {
                        return i;
                    }
                    u -= w;
                }
                n - 1
            }
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let AgentSelection::Weighted(ws) = self {
            if ws.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: ws.len(),
                });
            }
            if ws.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                return Err(Error::InvalidChain(
                    "selection weights must be positive and finite".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub profile: ActionProfile,
    pub step_count: u64,
    rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(profile: ActionProfile, seed: u64) -> Self {
        ChainState {
            profile,
            step_count: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// `U_i(1, a_-i) - U_i(0, a_-i)`. Zero-weight pairs contribute nothing, so
/// only actual neighbors matter.
pub fn utility_gain(i: usize, profile: &ActionProfile, w: &WeightMatrix, params: &GameParams) -> f64 {
    let c = params.theta_per_agent();
    (0..w.n())
        .filter(|&j| j != i)
        .map(|j| {
            let wij = w.get(i, j);
            if wij == 0.0 {
                0.0
            } else {
                wij * ((profile.get(j) as u8 as f64) - c)
            }
        })
        .sum()
}

/// Probability that agent `i` plays 1 after revising, in logistic form.
pub fn update_probability(
    i: usize,
    profile: &ActionProfile,
    w: &WeightMatrix,
    params: &GameParams,
) -> f64 {
    let gain = utility_gain(i, profile, w, params);
    1.0 / (1.0 + (-params.beta * gain).exp())
}

/// One-step transition probability between profiles under uniform selection.
pub fn transition_probability(
    from: &ActionProfile,
    to: &ActionProfile,
    w: &WeightMatrix,
    params: &GameParams,
) -> f64 {
    let n = w.n() as f64;
    let diff = from.index() ^ to.index();
    let choose = |i: usize, p_one: f64| if to.get(i) { p_one } else { 1.0 - p_one };
    match diff.count_ones() {
        0 => {
            (0..w.n())
                .map(|i| choose(i, update_probability(i, from, w, params)))
                .sum::<f64>()
                / n
        }
        1 => {
            let i = diff.trailing_zeros() as usize;
            choose(i, update_probability(i, from, w, params)) / n
        }
        _ => 0.0,
    }
}

/// Advances the chain by one revision; returns the revising agent.
pub fn lll_step(
    state: &mut ChainState,
    w: &WeightMatrix,
    params: &GameParams,
    selection: &AgentSelection,
) -> usize {
    let i = selection.draw(w.n(), &mut state.rng);
    let p = update_probability(i, &state.profile, w, params);
    let action = state.rng.random::<f64>() < p;
    state.profile = state.profile.with(i, action);
    state.step_count += 1;
    i
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Starting profile index; all-ones when absent.
    pub initial: Option<u64>,
    pub selection: AgentSelection,
    /// Record every `thin`-th post-burn-in state.
    pub thin: u64,
}

impl ChainConfig {
    /// Burn-in defaults to 10% of `steps`.
    pub fn new(steps: u64, seed: u64) -> Self {
        ChainConfig {
            steps,
            burn_in: steps / 10,
            seed,
            initial: None,
            selection: AgentSelection::Uniform,
            thin: 1,
        }
    }

    pub fn burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn thin(mut self, thin: u64) -> Self {
        self.thin = thin;
        self
    }

    pub fn initial(mut self, index: u64) -> Self {
        self.initial = Some(index);
        self
    }

    pub fn selection(mut self, selection: AgentSelection) -> Self {
        self.selection = selection;
        self
    }

    /// Number of states a run records.
    pub fn recorded(&self) -> u64 {
        (self.steps - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    n: usize,
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalDistribution {
    pub fn from_counts(n: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: counts.len(),
            });
        }
        let total = counts.iter().sum();
        Ok(EmpiricalDistribution { n, counts, total })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.counts[index] as f64 / self.total as f64
    }

    /// Adds another run's counts.
    pub fn merge(&mut self, other: &EmpiricalDistribution) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }
}

pub fn run_chain(
    w: &WeightMatrix,
    params: &GameParams,
    config: &ChainConfig,
) -> Result<EmpiricalDistribution> {
    let n = w.n();
    if n != params.n_agents {
        return Err(Error::DimensionMismatch {
            expected: params.n_agents,
            actual: n,
        });
    }
    if n > MAX_ENUM_AGENTS {
        return Err(Error::TooManyAgents {
            n,
            limit: MAX_ENUM_AGENTS,
        });
    }
    if config.steps <= config.burn_in {
        return Err(Error::InvalidChain(format!(
            "steps ({}) must exceed burn-in ({})",
            config.steps, config.burn_in
        )));
    }
    if config.thin == 0 {
        return Err(Error::InvalidChain("thin must be at least 1".into()));
    }
    config.selection.validate(n)?;
    let start = match config.initial {
        Some(idx) => ActionProfile::from_index(n, idx)?,
        None => ActionProfile::ones(n),
    };

    let mut state = ChainState::new(start, config.seed);
    let mut counts = vec![0u64; 1 << n];
    for _ in 0..config.burn_in {
        lll_step(&mut state, w, params, &config.selection);
    }
    for k in 1..=(config.steps - config.burn_in) {
        lll_step(&mut state, w, params, &config.selection);
        if k % config.thin == 0 {
            counts[state.profile.index() as usize] += 1;
        }
    }
    EmpiricalDistribution::from_counts(n, counts)
}

/// Independent chains, one per seed, pooled by count addition.
pub fn run_chains(
    w: &WeightMatrix,
    params: &GameParams,
    config: &ChainConfig,
    seeds: &[u64],
) -> Result<EmpiricalDistribution> {
    let runs: Vec<EmpiricalDistribution> = seeds
        .par_iter()
        .map(|&seed| {
            let c = ChainConfig {
                seed,
                ..config.clone()
            };
            run_chain(w, params, &c)
        })
        .collect::<Result<_>>()?;
    let mut pooled = EmpiricalDistribution::from_counts(w.n(), vec![0; 1 << w.n()])?;
    for r in &runs {
        pooled.merge(r)?;
    }
    Ok(pooled)
}

/// Total variation distance between two probability vectors.
pub fn tv_between(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

pub fn tv_distance(emp: &EmpiricalDistribution, gibbs: &GibbsDistribution) -> Result<f64> {
    if emp.n() != gibbs.n() {
        return Err(Error::DimensionMismatch {
            expected: gibbs.n(),
            actual: emp.n(),
        });
    }
    let freq: Vec<f64> = (0..emp.counts.len()).map(|x| emp.frequency(x)).collect();
    tv_between(&freq, &gibbs.probabilities())
}

pub const CHAIN_CSV_HEADER: [&str; 4] = ["profile_index", "count", "frequency", "gibbs_probability"];

pub fn write_chain_csv<W: Write>(
    emp: &EmpiricalDistribution,
    gibbs: &GibbsDistribution,
    out: W,
) -> Result<()> {
    if emp.n() != gibbs.n() {
        return Err(Error::DimensionMismatch {
            expected: gibbs.n(),
            actual: emp.n(),
        });
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(CHAIN_CSV_HEADER)?;
    for (x, &c) in emp.counts.iter().enumerate() {
        wtr.write_record([
            x.to_string(),
            c.to_string(),
            sig12(emp.frequency(x)),
            sig12(gibbs.probability(x)),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2() -> WeightMatrix {
        WeightMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn beta_zero_update_is_a_coin_flip() {
        let p = GameParams::new(5, 3.0, 0.0, 1.0).unwrap();
        let w = WeightMatrix::uniform(5, 0.8).unwrap();
        for x in 0..32 {
            let a = ActionProfile::from_index(5, x).unwrap();
            for i in 0..5 {
                assert_eq!(update_probability(i, &a, &w, &p), 0.5);
            }
        }
    }

    #[test]
    fn high_beta_update_follows_best_response() {
        let p = GameParams::new(2, 1.0, 50.0, 1.0).unwrap();
        let a = ActionProfile::from_actions(&[false, true]).unwrap();
        let prob = update_probability(0, &a, &k2(), &p);
        assert_eq!(prob, 1.0 / (1.0 + (-25.0f64).exp()));
        assert!(prob > 1.0 - 1e-10);
    }

    #[test]
    fn transitions_are_positive_and_stochastic() {
        let p = GameParams::new(3, 2.0, 1.5, 1.0).unwrap();
        let w = WeightMatrix::from_edges(3, &[(0, 1, 0.7), (1, 2, 0.2)]).unwrap();
        for x in 0..8 {
            let from = ActionProfile::from_index(3, x).unwrap();
            let row: f64 = (0..8)
                .map(|y| transition_probability(&from, &ActionProfile::from_index(3, y).unwrap(), &w, &p))
                .sum();
            assert!((row - 1.0).abs() < 1e-14);
            for i in 0..3 {
                assert!(transition_probability(&from, &from.with(i, !from.get(i)), &w, &p) > 0.0);
            }
        }
    }

    #[test]
    fn steps_change_at_most_one_agent() {
        let p = GameParams::new(6, 4.0, 2.0, 1.0).unwrap();
        let w = WeightMatrix::uniform(6, 0.4).unwrap();
        let mut s = ChainState::new(ActionProfile::ones(6), 9);
        for _ in 0..10_000 {
            let before = s.profile;
            let i = lll_step(&mut s, &w, &p, &AgentSelection::Uniform);
            let diff = before.index() ^ s.profile.index();
            assert!(diff == 0 || diff == 1 << i);
        }
        assert_eq!(s.step_count, 10_000);
    }

    #[test]
    fn chain_is_deterministic_per_seed() {
        let p = GameParams::new(4, 3.0, 1.0, 1.0).unwrap();
        let w = WeightMatrix::uniform(4, 0.5).unwrap();
        let c = ChainConfig::new(20_000, 42);
        let a = run_chain(&w, &p, &c).unwrap();
        let b = run_chain(&w, &p, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 18_000);
        let other = run_chain(&w, &p, &ChainConfig::new(20_000, 43)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn chain_config_errors() {
        let p = GameParams::new(3, 2.0, 1.0, 1.0).unwrap();
        let w = WeightMatrix::uniform(3, 0.5).unwrap();
        assert!(run_chain(&w, &p, &ChainConfig::new(100, 0).burn_in(100)).is_err());
        assert!(run_chain(&w, &p, &ChainConfig::new(100, 0).thin(0)).is_err());
        let bad = ChainConfig::new(100, 0).selection(AgentSelection::Weighted(vec![1.0, 1.0]));
        assert!(run_chain(&w, &p, &bad).is_err());
    }

    #[test]
    fn tv_examples() {
        let point = EmpiricalDistribution::from_counts(1, vec![10, 0]).unwrap();
        let uniform = GibbsDistribution::from_log_weights(1, vec![0.0, 0.0]).unwrap();
        assert_eq!(tv_distance(&point, &uniform).unwrap(), 0.5);

        let g = GibbsDistribution::from_log_weights(2, vec![0.0, 2f64.ln(), 0.0, 0.0]).unwrap();
        let prop = EmpiricalDistribution::from_counts(2, vec![10, 20, 10, 10]).unwrap();
        assert!(tv_distance(&prop, &g).unwrap() < 1e-15);

        let wrong = EmpiricalDistribution::from_counts(1, vec![1, 1]).unwrap();
        assert!(tv_distance(&wrong, &g).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = GibbsDistribution::from_log_weights(1, vec![0.0, 0.0]).unwrap();
        let e = EmpiricalDistribution::from_counts(1, vec![3, 1]).unwrap();
        let mut buf = Vec::new();
        write_chain_csv(&e, &g, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "profile_index,count,frequency,gibbs_probability\n0,3,0.75,0.5\n1,1,0.25,0.5\n"
        );
    }
}
