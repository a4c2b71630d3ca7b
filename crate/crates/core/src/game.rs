//! The weighted network coordination game.
//!
//! Agents pick binary actions; every edge `{i, j}` with weight `w_ij` plays the
//! two-player stag-hunt `V(a_i, a_j) = a_i (a_j - theta/N)`. The game is an
//! exact potential game exactly when the weight matrix is symmetric, with
//! potential
//!
//! ```text
//! Phi_W(a) = 1/2 a'Wa - (theta/N) 1'Wa + (theta/2N) 1'W1
//! ```

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest agent count for which exhaustive checks are allowed.
pub const MAX_VERIFY_AGENTS: usize = 20;

/// Absolute tolerance for structural identities (potential, symmetry).
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Absolute tolerance for eigenvalue checks.
pub const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub n_agents: usize,
    /// Task difficulty.
    pub theta: f64,
    /// Rationality (inverse temperature of the softmax update).
    pub beta: f64,
    /// Price per unit of total edge weight.
    pub rho: f64,
}

impl GameParams {
    pub fn new(n_agents: usize, theta: f64, beta: f64, rho: f64) -> Result<Self> {
        let p = GameParams {
            n_agents,
            theta,
            beta,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 agents, got {}",
                self.n_agents
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParams("theta must be finite".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "beta must be finite and nonnegative, got {}",
                self.beta
            )));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "rho must be finite and positive, got {}",
                self.rho
            )));
        }
        Ok(())
    }

    /// Per-edge share of the task difficulty, `theta / N`.
    pub fn theta_per_agent(&self) -> f64 {
        self.theta / self.n_agents as f64
    }

    /// True when `theta == N/2`, where both uniform profiles tie.
    pub fn is_tie(&self) -> bool {
        2.0 * self.theta == self.n_agents as f64
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        GameParams { beta, ..*self }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        GameParams { rho, ..*self }
    }
}

/// A joint action profile, bit `i` of the index is agent `i`'s action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionProfile {
    n: usize,
    bits: u64,
}

impl ActionProfile {
    pub fn from_index(n: usize, index: u64) -> Result<Self> {
        if n > 63 {
            return Err(Error::TooManyAgents { n, limit: 63 });
        }
        if index >> n != 0 {
            return Err(Error::InvalidParams(format!(
                "profile index {index} does not fit in {n} bits"
            )));
        }
        Ok(ActionProfile { n, bits: index })
    }

    pub fn from_actions(actions: &[bool]) -> Result<Self> {
        let bits = actions
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &a)| acc | ((a as u64) << i));
        ActionProfile::from_index(actions.len(), bits)
    }

    pub fn zeros(n: usize) -> Self {
        ActionProfile { n, bits: 0 }
    }

    pub fn ones(n: usize) -> Self {
        let bits = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        ActionProfile { n, bits }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn with(&self, i: usize, action: bool) -> Self {
        let bits = if action {
            self.bits | (1 << i)
        } else {
            self.bits & !(1 << i)
        };
        ActionProfile { n: self.n, bits }
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn actions(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.get(i)).collect()
    }

    /// Relabels agents: agent `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let bits = (0..self.n)
            .filter(|&i| self.get(i))
            .fold(0u64, |acc, i| acc | (1 << perm[i]));
        ActionProfile { n: self.n, bits }
    }
}

/// Symmetric boolean mask of edges the designer may use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityPattern {
    n: usize,
    allowed: Vec<bool>,
}

impl SparsityPattern {
    /// Builds a pattern from undirected edges; rejects self-loops, out of
    /// range endpoints, and patterns that admit no connected graph.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut allowed = vec![false; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidPattern(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::InvalidPattern(format!("self-loop at node {i}")));
            }
            allowed[i * n + j] = true;
            allowed[j * n + i] = true;
        }
        let pattern = SparsityPattern { n, allowed };
        if !pattern.is_connectable() {
            return Err(Error::DisconnectedPattern);
        }
        Ok(pattern)
    }

    /// Validates a dense mask.
    pub fn from_mask(n: usize, allowed: Vec<bool>) -> Result<Self> {
        if allowed.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: allowed.len(),
            });
        }
        for i in 0..n {
            if allowed[i * n + i] {
                return Err(Error::InvalidPattern(format!("self-loop at node {i}")));
            }
            for j in (i + 1)..n {
                if allowed[i * n + j] != allowed[j * n + i] {
                    return Err(Error::InvalidPattern(format!(
                        "mask not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let pattern = SparsityPattern { n, allowed };
        if !pattern.is_connectable() {
            return Err(Error::DisconnectedPattern);
        }
        Ok(pattern)
    }

    /// Every pair of distinct agents may connect.
    pub fn full(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        SparsityPattern::from_edges(n, &edges)
    }

    /// Node 0 is the hub.
    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|j| (0, j)).collect();
        SparsityPattern::from_edges(n, &edges)
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn line(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|j| (j - 1, j)).collect();
        SparsityPattern::from_edges(n, &edges)
    }

    /// A star on nodes `0..n-1` with the spoke to node `n-2` extended to
    /// node `n-1`. For five nodes: edges {0-1, 0-2, 0-3, 3-4}.
    pub fn hybrid(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidPattern(
                "hybrid topology needs at least 3 nodes".into(),
            ));
        }
        let mut edges: Vec<_> = (1..n - 1).map(|j| (0, j)).collect();
        edges.push((n - 2, n - 1));
        SparsityPattern::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n + j]
    }

    /// Allowed edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.allows(i, j))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    fn is_connectable(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..self.n {
                if self.allows(u, v) && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Edge weights `w_ij` in `[0, 1]`, symmetric with zero diagonal.
///
/// Validated constructors write `(i, j)` and `(j, i)` from the same value so
/// symmetry is exact. [`WeightMatrix::from_raw_unchecked`] skips validation
/// and exists for negative tests only.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    m: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidWeights(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidWeights(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let w = m[(i, j)];
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::InvalidWeights(format!(
                        "entry ({i}, {j}) = {w} outside [0, 1]"
                    )));
                }
                if w != m[(j, i)] {
                    return Err(Error::InvalidWeights(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(WeightMatrix { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidWeights("ragged rows".into()));
        }
        WeightMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Bypasses every invariant.
    pub fn from_raw_unchecked(m: DMatrix<f64>) -> Self {
        WeightMatrix { m }
    }

    pub fn zeros(n: usize) -> Self {
        WeightMatrix {
            m: DMatrix::zeros(n, n),
        }
    }

    /// `w (11' - I)`.
    pub fn uniform(n: usize, w: f64) -> Result<Self> {
        WeightMatrix::new(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { w }))
    }

    /// Weight `w` on every allowed edge of `pattern`.
    pub fn on_pattern(pattern: &SparsityPattern, w: f64) -> Result<Self> {
        let n = pattern.n();
        WeightMatrix::new(DMatrix::from_fn(n, n, |i, j| {
            if pattern.allows(i, j) {
                w
            } else {
                0.0
            }
        }))
    }

    /// Builds from `(i, j, w)` triples; unspecified pairs are zero.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    n,
                });
            }
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        WeightMatrix::new(m)
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// `1'W1`.
    pub fn total_weight(&self) -> f64 {
        self.m.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.m.row_iter().map(|r| r.sum()).collect()
    }

    /// Upper-triangle entries `(i, j, w_ij)` with `i < j`, row-major.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.m[(i, j)]))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.m == self.m.transpose()
    }

    pub fn conforms_to(&self, pattern: &SparsityPattern) -> bool {
        let n = self.n();
        n == pattern.n()
            && (0..n).all(|i| (0..n).all(|j| pattern.allows(i, j) || self.m[(i, j)] == 0.0))
    }

    /// `P W P'` where agent `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(perm[i], perm[j])] = self.m[(i, j)];
            }
        }
        WeightMatrix { m }
    }
}

/// Payoff to `i` from the pairwise game with `j`: `a_i (a_j - theta/N)`.
pub fn pairwise_payoff(a_i: bool, a_j: bool, params: &GameParams) -> f64 {
    if a_i {
        (a_j as u8 as f64) - params.theta_per_agent()
    } else {
        0.0
    }
}

/// `U_i(a) = a_i (sum_j w_ij a_j - (theta/N) sum_j w_ij)`.
pub fn utility(i: usize, a: &ActionProfile, w: &WeightMatrix, params: &GameParams) -> Result<f64> {
    let n = w.n();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if a.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.n(),
        });
    }
    if !a.get(i) {
        return Ok(0.0);
    }
    let c = params.theta_per_agent();
    let mut s = 0.0;
    for j in 0..n {
        if j != i {
            s += w.get(i, j) * ((a.get(j) as u8 as f64) - c);
        }
    }
    Ok(s)
}

/// Evaluates the potential directly from its quadratic form. Works on raw
/// (possibly asymmetric) matrices, column sums entering `1'Wa`.
pub fn potential(a: &ActionProfile, w: &WeightMatrix, params: &GameParams) -> f64 {
    let n = w.n();
    let c = params.theta_per_agent();
    let mut quad = 0.0;
    let mut lin = 0.0;
    for i in 0..n {
        let ai = a.get(i) as u8 as f64;
        for j in 0..n {
            let wij = w.get(i, j);
            let aj = a.get(j) as u8 as f64;
            quad += ai * wij * aj;
            lin += wij * aj;
        }
    }
    0.5 * quad - c * lin + 0.5 * c * w.total_weight()
}

/// Exhaustively checks the unilateral-deviation identity
/// `U_i(1, a_-i) - U_i(0, a_-i) = Phi(1, a_-i) - Phi(0, a_-i)` for every
/// profile and agent.
pub fn verify_exact_potential(w: &WeightMatrix, params: &GameParams) -> Result<bool> {
    let n = w.n();
    if n > MAX_VERIFY_AGENTS {
        return Err(Error::TooManyAgents {
            n,
            limit: MAX_VERIFY_AGENTS,
        });
    }
    let phi: Vec<f64> = (0..1u64 << n)
        .map(|x| potential(&ActionProfile { n, bits: x }, w, params))
        .collect();
    for x in 0..1u64 << n {
        let a = ActionProfile { n, bits: x };
        for i in 0..n {
            let up = a.with(i, true);
            let down = a.with(i, false);
            let du = utility(i, &up, w, params)? - utility(i, &down, w, params)?;
            let dphi = phi[up.bits as usize] - phi[down.bits as usize];
            if (du - dphi).abs() > STRUCTURAL_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `L(W) = diag(W1) - W`.
pub fn laplacian(w: &WeightMatrix) -> DMatrix<f64> {
    let n = w.n();
    let sums = w.row_sums();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            sums[i] - w.get(i, i)
        } else {
            -w.get(i, j)
        }
    })
}

/// Second-smallest eigenvalue of a symmetric Laplacian.
pub fn algebraic_connectivity(l: &DMatrix<f64>) -> Result<f64> {
    let n = l.nrows();
    if n < 2 || !l.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 2.max(l.ncols()),
            actual: n,
        });
    }
    let mut eig = sorted_eigenvalues(l)?;
    eig.truncate(2);
    Ok(eig[1])
}

/// All eigenvalues of a symmetric matrix in ascending order.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::EigenFailure)?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(vals)
}

/// Which uniform profile maximizes the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equilibrium {
    AllZeros,
    AllOnes,
    /// `theta == N/2`: both candidates maximize the potential.
    Tie,
}

impl Equilibrium {
    /// Candidate maximizers; two of them for a tie.
    pub fn profiles(&self, n: usize) -> Vec<ActionProfile> {
        match self {
            Equilibrium::AllZeros => vec![ActionProfile::zeros(n)],
            Equilibrium::AllOnes => vec![ActionProfile::ones(n)],
            Equilibrium::Tie => vec![ActionProfile::zeros(n), ActionProfile::ones(n)],
        }
    }
}

pub fn nash_action(params: &GameParams) -> Equilibrium {
    let half = params.n_agents as f64 / 2.0;
    if params.theta > half {
        Equilibrium::AllZeros
    } else if params.theta < half {
        Equilibrium::AllOnes
    } else {
        Equilibrium::Tie
    }
}
