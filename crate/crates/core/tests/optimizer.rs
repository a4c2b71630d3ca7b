mod common;

use common::*;
use netcoord::optimize::{kkt_violation, DEFAULT_CONNECTIVITY_FLOOR};
use netcoord::uniform::DEFAULT_ROOT_TOL;
use netcoord::{
    algebraic_connectivity, edge_value_symmetrize, laplacian, objective, objective_with_gradient,
    optimize_weights, project_feasible, solve_uniform, Error, OptimizationResult, SolutionRecord,
    SolverConfig, SparsityPattern, StepRule, WeightMatrix,
};
use proptest::prelude::*;

fn solve(n: usize, theta: f64, beta: f64, rho: f64, pattern: &SparsityPattern) -> OptimizationResult {
    optimize_weights(&params(n, theta, beta, rho), pattern, &SolverConfig::default(), None).unwrap()
}

fn spread(w: &WeightMatrix) -> f64 {
    let v: Vec<f64> = w.upper_entries().iter().map(|e| e.2).collect();
    v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
}

#[test]
fn star_solution() {
    let r = solve(5, 3.0, 1.0, 5.0, &SparsityPattern::star(5).unwrap());
    assert!(r.converged);
    for j in 1..5 {
        assert!((r.weights.get(0, j) - 0.51737).abs() < 1e-4);
    }
    assert!((r.objective.total - 26.51329).abs() < 1e-4);
}

#[test]
fn line_solution_is_asymmetric() {
    let pattern = SparsityPattern::line(5).unwrap();
    let r = solve(5, 3.0, 1.0, 5.0, &pattern);
    assert!(r.converged);
    let e = [0.53631, 0.50564, 0.50564, 0.53631];
    for (k, &want) in e.iter().enumerate() {
        assert!((r.weights.get(k, k + 1) - want).abs() < 1e-4);
    }
    assert!((r.objective.total - 26.475266).abs() < 1e-4);
    let sym = edge_value_symmetrize(&r.weights, &pattern).unwrap();
    let fs = objective(&sym, &params(5, 3.0, 1.0, 5.0)).unwrap().total;
    assert!(fs > r.objective.total);
    assert!((sym.get(0, 1) - 0.52095).abs() < 1e-4);
}

#[test]
fn full_pattern_solution_is_uniform_and_matches_closed_form() {
    for (n, theta) in [(4, 3.0), (5, 3.0), (6, 4.0)] {
        let r = solve(n, theta, 1.0, 5.0, &SparsityPattern::full(n).unwrap());
        assert!(r.converged);
        assert!(spread(&r.weights) <= 1e-4, "n={n}");
        let u = solve_uniform(&params(n, theta, 1.0, 5.0), DEFAULT_ROOT_TOL).unwrap();
        assert!((r.weights.get(0, 1) - u.w_star).abs() <= 1e-4, "n={n}");
        assert!((r.objective.total - u.objective).abs() <= 1e-6);
    }
}

#[test]
fn history_is_monotone_and_kkt_holds() {
    for pattern in [
        SparsityPattern::star(5).unwrap(),
        SparsityPattern::line(5).unwrap(),
        SparsityPattern::hybrid(5).unwrap(),
    ] {
        for (theta, beta) in [(3.0, 1.0), (4.0, 2.0), (2.0, 1.0)] {
            let p = params(5, theta, beta, 5.0);
            let r = optimize_weights(&p, &pattern, &SolverConfig::default(), None).unwrap();
            assert!(r.history.windows(2).all(|h| h[1] <= h[0]));
            assert!(r.weights.conforms_to(&pattern) && r.weights.is_symmetric());
            assert!(r.lambda2 >= DEFAULT_CONNECTIVITY_FLOOR * (1.0 - 1e-9));
            if r.converged && !r.floor_active {
                let (_, g) = objective_with_gradient(&r.weights, &p).unwrap();
                // The relative-decrease stop (1e-12) fires with gradients
                // around 1e-5 once backtracking needs short steps.
                let k = kkt_violation(&r.weights, &g, &pattern);
                assert!(k < 1e-4, "theta={theta} beta={beta} kkt={k}");
            }
        }
    }
}

#[test]
fn star_spokes_are_equal() {
    let r = solve(6, 4.0, 1.5, 3.0, &SparsityPattern::star(6).unwrap());
    let spokes: Vec<f64> = (1..6).map(|j| r.weights.get(0, j)).collect();
    assert!(spokes.iter().all(|&s| (s - spokes[0]).abs() < 1e-5));
}

#[test]
fn connectivity_floor_binds_when_links_are_expensive() {
    // Below the threshold the objective keeps falling toward W = 0.
    let p = params(5, 4.0, 0.05, 5.0);
    let pattern = SparsityPattern::line(5).unwrap();
    let r = optimize_weights(&p, &pattern, &SolverConfig::default(), None).unwrap();
    assert!(r.floor_active);
    assert!(r.converged);
    let l2 = algebraic_connectivity(&laplacian(&r.weights)).unwrap();
    assert!(l2 >= DEFAULT_CONNECTIVITY_FLOOR * (1.0 - 1e-9));
}

#[test]
fn fixed_step_reaches_the_same_point() {
    let cfg = SolverConfig {
        step_rule: StepRule::Fixed { step: 0.002 },
        max_iterations: 50_000,
        ..SolverConfig::default()
    };
    let p = params(5, 3.0, 1.0, 5.0);
    let pattern = SparsityPattern::star(5).unwrap();
    let r = optimize_weights(&p, &pattern, &cfg, None).unwrap();
    assert!((r.weights.get(0, 1) - 0.51737).abs() < 1e-3);
}

#[test]
fn warm_start_is_projected() {
    let p = params(5, 3.0, 1.0, 5.0);
    let pattern = SparsityPattern::line(5).unwrap();
    let start = WeightMatrix::uniform(5, 0.9).unwrap();
    let r = optimize_weights(&p, &pattern, &SolverConfig::default(), Some(&start)).unwrap();
    assert!(r.weights.conforms_to(&pattern));
    assert!((r.objective.total - 26.475266).abs() < 1e-4);
}

#[test]
fn size_and_config_guards() {
    let p = params(16, 9.0, 1.0, 1.0);
    let pattern = SparsityPattern::line(16).unwrap();
    assert!(matches!(
        optimize_weights(&p, &pattern, &SolverConfig::default(), None),
        Err(Error::TooManyAgents { n: 16, limit: 15 })
    ));
    let bad = SolverConfig {
        gradient_tolerance: 0.0,
        ..SolverConfig::default()
    };
    let p5 = params(5, 3.0, 1.0, 1.0);
    assert!(matches!(
        optimize_weights(&p5, &SparsityPattern::line(5).unwrap(), &bad, None),
        Err(Error::InvalidConfig(_))
    ));
    assert!(SparsityPattern::from_edges(4, &[(0, 1), (2, 3)]).is_err());
}

#[test]
fn solution_record_round_trips() {
    let p = params(5, 3.0, 1.0, 5.0);
    let pattern = SparsityPattern::hybrid(5).unwrap();
    let r = optimize_weights(&p, &pattern, &SolverConfig::default(), None).unwrap();
    let rec = SolutionRecord::new(&p, &pattern, &r);
    let back: SolutionRecord = serde_json::from_str(&rec.to_json()).unwrap();
    assert_eq!(back, rec);
    assert_eq!(back.weight_matrix().unwrap(), r.weights);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn projection_is_idempotent_and_feasible(
        raw in proptest::collection::vec(-1.0f64..2.0, 25),
        mask in proptest::collection::vec(any::<bool>(), 10),
    ) {
        let m = nalgebra::DMatrix::from_vec(5, 5, raw);
        let mut edges: Vec<(usize, usize)> = (0..4).map(|i| (i, i + 1)).collect();
        let mut k = 0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                if mask[k] {
                    edges.push((i, j));
                }
                k += 1;
            }
        }
        let pattern = SparsityPattern::from_edges(5, &edges).unwrap();
        let x = project_feasible(&m, &pattern).unwrap();
        prop_assert!(x.conforms_to(&pattern) && x.is_symmetric());
        prop_assert!(x.upper_entries().iter().all(|e| (0.0..=1.0).contains(&e.2)));
        prop_assert_eq!(project_feasible(x.as_matrix(), &pattern).unwrap(), x);
    }
}
