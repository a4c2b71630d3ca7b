//! Weight design over a sparsity pattern.
//!
//! Minimizes `f0(W)` over symmetric, zero-diagonal, `[0, 1]`-boxed matrices
//! supported on a pattern, with algebraic connectivity at least a floor
//! `eps`. Once symmetry is tied the box and pattern constraints are
//! separable per edge, so the Euclidean projection is an entrywise clamp and
//! projected gradient applies directly. The spectral constraint has no cheap
//! projection; iterates that fall below the floor are pulled back toward a
//! uniform anchor matrix on the pattern instead.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{algebraic_connectivity, laplacian, GameParams, SparsityPattern, WeightMatrix};
use crate::gibbs::{objective, objective_with_gradient, ObjectiveValue};

pub const DEFAULT_CONNECTIVITY_FLOOR: f64 = 1e-6;

/// Default agent limit; each gradient costs O(2^N N^2).
pub const DEFAULT_MAX_AGENTS: usize = 15;

/// Limit when [`SolverConfig::allow_large`] is set.
pub const EXTENDED_MAX_AGENTS: usize = 20;

/// Backtracking gives up below this step.
const MIN_STEP: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed { step: f64 },
    /// Armijo backtracking restarted from `initial` every iteration.
    Backtracking { initial: f64, c: f64, shrink: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub step_rule: StepRule,
    /// Stop when the projected-gradient norm drops to this.
    pub gradient_tolerance: f64,
    /// Stop when the relative objective decrease drops below this.
    pub objective_tolerance: f64,
    pub connectivity_floor: f64,
    /// Raise the agent limit from 15 to 20.
    pub allow_large: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 10_000,
            step_rule: StepRule::Backtracking {
                initial: 1.0,
                c: 1e-4,
                shrink: 0.5,
            },
            gradient_tolerance: 1e-8,
            objective_tolerance: 1e-12,
            connectivity_floor: DEFAULT_CONNECTIVITY_FLOOR,
            allow_large: false,
        }
    }
}

impl SolverConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.gradient_tolerance > 0.0) || !(self.objective_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.connectivity_floor > 0.0) {
            return bad("connectivity floor must be positive");
        }
        match self.step_rule {
            StepRule::Fixed { step } if !(step > 0.0) => bad("fixed step must be positive"),
            StepRule::Backtracking { initial, c, shrink }
                if !(initial > 0.0) || !(c > 0.0 && c < 1.0) || !(shrink > 0.0 && shrink < 1.0) =>
            {
                bad("backtracking needs initial > 0 and c, shrink in (0, 1)")
            }
            _ => Ok(()),
        }
    }

    fn agent_limit(&self) -> usize {
        if self.allow_large {
            EXTENDED_MAX_AGENTS
        } else {
            DEFAULT_MAX_AGENTS
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub weights: WeightMatrix,
    pub objective: ObjectiveValue,
    pub iterations: usize,
    pub converged: bool,
    pub projected_gradient_norm: f64,
    /// Algebraic connectivity at the solution.
    pub lambda2: f64,
    /// The connectivity floor was binding at the solution.
    pub floor_active: bool,
    /// Objective after every accepted iterate, starting point first.
    pub history: Vec<f64>,
}

/// Euclidean projection onto symmetric, zero-diagonal, pattern-supported
/// matrices in `[0, 1]`: average with the transpose, mask, clamp.
pub fn project_feasible(m: &DMatrix<f64>, pattern: &SparsityPattern) -> Result<WeightMatrix> {
    let n = pattern.n();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.nrows(),
        });
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if pattern.allows(i, j) {
                let v = (0.5 * (m[(i, j)] + m[(j, i)])).clamp(0.0, 1.0);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
    }
    WeightMatrix::new(out)
}

/// Replaces every off-diagonal entry by the mean off-diagonal entry. This is
/// the average of `P W P'` over all permutation matrices `P`.
pub fn orbit_symmetrize(w: &WeightMatrix) -> WeightMatrix {
    let n = w.n();
    let values: Vec<f64> = w.upper_entries().iter().map(|e| e.2).collect();
    WeightMatrix::uniform(n, exact_mean(&values)).expect("mean of valid weights is valid")
}

/// Gives every allowed edge the mean of the allowed-edge weights.
pub fn edge_value_symmetrize(w: &WeightMatrix, pattern: &SparsityPattern) -> Result<WeightMatrix> {
    if !w.conforms_to(pattern) {
        return Err(Error::InvalidWeights(
            "matrix has weight outside the pattern".into(),
        ));
    }
    let values: Vec<f64> = pattern.edges().iter().map(|&(i, j)| w.get(i, j)).collect();
    WeightMatrix::on_pattern(pattern, exact_mean(&values))
}

/// Mean that returns the common value unchanged when all inputs agree.
fn exact_mean(values: &[f64]) -> f64 {
    match values.first() {
        None => 0.0,
        Some(&v) if values.iter().all(|&x| x == v) => v,
        Some(_) => values.iter().sum::<f64>() / values.len() as f64,
    }
}

fn lambda2(w: &WeightMatrix) -> Result<f64> {
    algebraic_connectivity(&laplacian(w))
}

/// Keeps iterates above the connectivity floor by blending toward a uniform
/// anchor on the pattern whose own connectivity meets the floor.
struct ConnectivityGuard {
    floor: f64,
    anchor: WeightMatrix,
}

impl ConnectivityGuard {
    fn new(pattern: &SparsityPattern, floor: f64) -> Result<Self> {
        let unit = WeightMatrix::on_pattern(pattern, 1.0)?;
        let l2 = lambda2(&unit)?;
        if l2 <= 0.0 {
            return Err(Error::DisconnectedPattern);
        }
        // lambda2 is linear in a uniform weight.
        let level = floor / l2 * (1.0 + 1e-9);
        if level > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "connectivity floor {floor} unreachable on this pattern (max {l2})"
            )));
        }
        Ok(ConnectivityGuard {
            floor,
            anchor: WeightMatrix::on_pattern(pattern, level)?,
        })
    }

    fn blend(&self, x: &WeightMatrix, s: f64) -> WeightMatrix {
        let n = x.n();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, v) in x.upper_entries() {
            let b = (1.0 - s) * v + s * self.anchor.get(i, j);
            m[(i, j)] = b;
            m[(j, i)] = b;
        }
        WeightMatrix::from_raw_unchecked(m)
    }

    /// Returns the repaired matrix and whether a repair was needed. Since
    /// `lambda2` is concave, the feasible blend weights form an interval
    /// ending at 1 and bisection finds its left end.
    fn enforce(&self, x: WeightMatrix) -> Result<(WeightMatrix, bool)> {
        if lambda2(&x)? >= self.floor {
            return Ok((x, false));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if lambda2(&self.blend(&x, mid))? >= self.floor {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((self.blend(&x, hi), true))
    }
}

/// Norm of `P(W - G) - W` over the edge variables.
fn projected_gradient_norm(w: &WeightMatrix, g: &DMatrix<f64>, pattern: &SparsityPattern) -> f64 {
    pattern
        .edges()
        .iter()
        .map(|&(i, j)| {
            let v = w.get(i, j);
            let d = (v - g[(i, j)]).clamp(0.0, 1.0) - v;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn step(w: &WeightMatrix, g: &DMatrix<f64>, t: f64, pattern: &SparsityPattern) -> Result<WeightMatrix> {
    project_feasible(&(w.as_matrix() - g * t), pattern)
}

/// `<G, X - W>` over the edge variables.
fn directional(w: &WeightMatrix, x: &WeightMatrix, g: &DMatrix<f64>, pattern: &SparsityPattern) -> f64 {
    pattern
        .edges()
        .iter()
        .map(|&(i, j)| g[(i, j)] * (x.get(i, j) - w.get(i, j)))
        .sum()
}

/// Largest violation of the first-order conditions over the edge variables:
/// gradient `>= 0` at 0, `<= 0` at 1, zero in between.
pub fn kkt_violation(w: &WeightMatrix, g: &DMatrix<f64>, pattern: &SparsityPattern) -> f64 {
    pattern
        .edges()
        .iter()
        .map(|&(i, j)| {
            let (v, gij) = (w.get(i, j), g[(i, j)]);
            if v <= 0.0 {
                (-gij).max(0.0)
            } else if v >= 1.0 {
                gij.max(0.0)
            } else {
                gij.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Solves the design program on `pattern`. Starts from `initial`, or from
/// weight 0.5 on every allowed edge.
pub fn optimize_weights(
    params: &GameParams,
    pattern: &SparsityPattern,
    config: &SolverConfig,
    initial: Option<&WeightMatrix>,
) -> Result<OptimizationResult> {
    params.validate()?;
    config.validate()?;
    let n = params.n_agents;
    if pattern.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: pattern.n(),
        });
    }
    if n > config.agent_limit() {
        return Err(Error::TooManyAgents {
            n,
            limit: config.agent_limit(),
        });
    }
    let guard = ConnectivityGuard::new(pattern, config.connectivity_floor)?;

    let start = match initial {
        Some(w) => project_feasible(w.as_matrix(), pattern)?,
        None => WeightMatrix::on_pattern(pattern, 0.5)?,
    };
    let (mut w, _) = guard.enforce(start)?;
    let (mut value, mut grad) = objective_with_gradient(&w, params)?;
    let mut history = vec![value.total];
    let mut best = (w.clone(), value, grad.clone());
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        if projected_gradient_norm(&w, &grad, pattern) <= config.gradient_tolerance {
            converged = true;
            break;
        }
        let candidate = match config.step_rule {
            StepRule::Fixed { step: t } => {
                let (x, _) = guard.enforce(step(&w, &grad, t, pattern)?)?;
                let v = objective(&x, params)?;
                Some((x, v))
            }
            StepRule::Backtracking { initial, c, shrink } => {
                let mut t = initial;
                let mut found = None;
                while t >= MIN_STEP {
                    let (x, _) = guard.enforce(step(&w, &grad, t, pattern)?)?;
                    let v = objective(&x, params)?;
                    let slope = directional(&w, &x, &grad, pattern);
                    if v.total <= value.total + c * slope && v.total <= value.total {
                        found = Some((x, v));
                        break;
                    }
                    t *= shrink;
                }
                found
            }
        };
        let Some((x, _)) = candidate else {
            // No descent left: only acceptable when the floor is what stops us.
            converged = lambda2(&w)? <= config.connectivity_floor * (1.0 + 1e-6);
            break;
        };
        let previous = value.total;
        let (v, g) = objective_with_gradient(&x, params)?;
        w = x;
        value = v;
        grad = g;
        iterations += 1;
        history.push(value.total);
        if value.total < best.1.total {
            best = (w.clone(), value, grad.clone());
        }
        let rel = (previous - value.total).abs() / previous.abs().max(1.0);
        if rel < config.objective_tolerance {
            converged = true;
            break;
        }
    }

    if !converged {
        (w, value, grad) = best;
    }
    let l2 = lambda2(&w)?;
    Ok(OptimizationResult {
        projected_gradient_norm: projected_gradient_norm(&w, &grad, pattern),
        floor_active: l2 <= config.connectivity_floor * (1.0 + 1e-6),
        lambda2: l2,
        weights: w,
        objective: value,
        iterations,
        converged,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// JSON form of a solved design. Node indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub n: usize,
    pub theta: f64,
    pub beta: f64,
    pub rho: f64,
    pub pattern: Vec<[usize; 2]>,
    pub weights: Vec<EdgeWeight>,
    pub objective: ObjectiveValue,
    pub lambda2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolutionRecord {
    pub fn new(params: &GameParams, pattern: &SparsityPattern, result: &OptimizationResult) -> Self {
        let edges = pattern.edges();
        SolutionRecord {
            n: params.n_agents,
            theta: params.theta,
            beta: params.beta,
            rho: params.rho,
            pattern: edges.iter().map(|&(i, j)| [i, j]).collect(),
            weights: edges
                .iter()
                .map(|&(i, j)| EdgeWeight {
                    i,
                    j,
                    weight: result.weights.get(i, j),
                })
                .collect(),
            objective: result.objective,
            lambda2: result.lambda2,
            iterations: result.iterations,
            converged: result.converged,
        }
    }

    pub fn weight_matrix(&self) -> Result<WeightMatrix> {
        let edges: Vec<_> = self.weights.iter().map(|e| (e.i, e.j, e.weight)).collect();
        WeightMatrix::from_edges(self.n, &edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_agent_params() -> GameParams {
        GameParams::new(5, 3.0, 1.0, 5.0).unwrap()
    }

    #[test]
    fn projection_examples() {
        let full2 = SparsityPattern::full(2).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.7, 0.0]);
        let p = project_feasible(&m, &full2).unwrap();
        assert_eq!(p.get(0, 1), 0.5);
        assert_eq!(p.get(1, 0), 0.5);

        let line = SparsityPattern::line(3).unwrap();
        let m = DMatrix::from_row_slice(3, 3, &[0.4, 1.7, 0.9, 1.7, 0.0, -0.2, 0.9, -0.2, 0.0]);
        let p = project_feasible(&m, &line).unwrap();
        assert_eq!(p.get(0, 1), 1.0);
        assert_eq!(p.get(1, 2), 0.0);
        assert_eq!(p.get(0, 2), 0.0);
        assert_eq!(p.get(0, 0), 0.0);

        let w = WeightMatrix::from_edges(3, &[(0, 1, 0.25), (1, 2, 0.75)]).unwrap();
        assert_eq!(project_feasible(w.as_matrix(), &line).unwrap(), w);
        assert!(project_feasible(&DMatrix::zeros(4, 4), &line).is_err());
    }

    #[test]
    fn symmetrizers_fix_uniform_matrices() {
        let u = WeightMatrix::uniform(5, 0.3).unwrap();
        assert_eq!(orbit_symmetrize(&u), u);
        let line = SparsityPattern::line(5).unwrap();
        let on_line = WeightMatrix::on_pattern(&line, 0.4).unwrap();
        assert_eq!(edge_value_symmetrize(&on_line, &line).unwrap(), on_line);
        assert!(edge_value_symmetrize(&u, &line).is_err());
    }

    #[test]
    fn symmetrized_line_edges() {
        let line = SparsityPattern::line(5).unwrap();
        let w = WeightMatrix::from_edges(
            5,
            &[(0, 1, 0.5363), (1, 2, 0.5056), (2, 3, 0.5056), (3, 4, 0.5363)],
        )
        .unwrap();
        let s = edge_value_symmetrize(&w, &line).unwrap();
        for (i, j) in line.edges() {
            assert!((s.get(i, j) - 0.52095).abs() < 1e-12);
        }
    }

    #[test]
    fn guard_repairs_disconnected_iterates() {
        let line = SparsityPattern::line(5).unwrap();
        let guard = ConnectivityGuard::new(&line, 1e-3).unwrap();
        let cut = WeightMatrix::from_edges(5, &[(0, 1, 0.5), (1, 2, 0.5), (3, 4, 0.5)]).unwrap();
        let (fixed, repaired) = guard.enforce(cut).unwrap();
        assert!(repaired);
        let l2 = lambda2(&fixed).unwrap();
        assert!((1e-3..1.1e-3).contains(&l2), "{l2}");
        assert!(fixed.conforms_to(&line) && fixed.is_symmetric());
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.max_iterations = 0;
        assert!(c.validate().is_err());
        let c = SolverConfig {
            step_rule: StepRule::Backtracking {
                initial: 1.0,
                c: 1.5,
                shrink: 0.5,
            },
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn star_solution_is_symmetric_with_reference_weights() {
        let star = SparsityPattern::star(5).unwrap();
        let r = optimize_weights(&five_agent_params(), &star, &SolverConfig::default(), None).unwrap();
        assert!(r.converged);
        for (i, j) in star.edges() {
            assert!((r.weights.get(i, j) - 0.5174).abs() < 1e-3);
        }
        assert!((r.objective.total - 26.5133).abs() < 1e-3);
        assert!(!r.floor_active);
    }

    #[test]
    fn agent_guard() {
        let p = GameParams::new(16, 9.0, 1.0, 1.0).unwrap();
        let full = SparsityPattern::full(16).unwrap();
        assert!(matches!(
            optimize_weights(&p, &full, &SolverConfig::default(), None),
            Err(Error::TooManyAgents { limit: 15, .. })
        ));
    }

    #[test]
    fn solution_json_round_trip() {
        let star = SparsityPattern::star(5).unwrap();
        let p = five_agent_params();
        let r = optimize_weights(&p, &star, &SolverConfig::default(), None).unwrap();
        let rec = SolutionRecord::new(&p, &star, &r);
        let back: SolutionRecord = serde_json::from_str(&rec.to_json()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.weight_matrix().unwrap(), r.weights);
        let v: serde_json::Value = serde_json::from_str(&rec.to_json()).unwrap();
        for key in ["n", "theta", "beta", "rho", "pattern", "weights", "objective", "lambda2", "iterations", "converged"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["objective"].get("inverse_prob").is_some());
    }
}
