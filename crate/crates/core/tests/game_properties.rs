mod common;

use common::*;
use netcoord::{
    algebraic_connectivity, laplacian, nash_action, potential, utility, verify_exact_potential,
    ActionProfile, Equilibrium, WeightMatrix,
};
use proptest::prelude::*;

#[test]
fn potential_identity_holds_exhaustively_up_to_ten_agents() {
    let mut rng = rng(11);
    for n in 2..=10 {
        for theta in [0.3 * n as f64, 0.5 * n as f64, 0.5 * n as f64 + 1.0] {
            let w = random_weights(n, 0.0, 1.0, &mut rng);
            let p = params(n, theta, 1.0, 1.0);
            assert!(verify_exact_potential(&w, &p).unwrap(), "n={n} theta={theta}");
        }
    }
}

#[test]
fn potential_matches_pair_form_and_payoff_table() {
    let mut rng = rng(12);
    for n in 2..=8 {
        let w = random_weights(n, 0.0, 1.0, &mut rng);
        let p = params(n, 0.6 * n as f64, 1.0, 1.0);
        let c = p.theta_per_agent();
        for x in 0..1usize << n {
            let a = ActionProfile::from_index(n, x as u64).unwrap();
            let phi = potential(&a, &w, &p);
            let oracle = pair_potential(&bits(n, x), w.as_matrix(), c);
            assert!((phi - oracle).abs() < 1e-12, "n={n} x={x}");
            for i in 0..n {
                let u = utility(i, &a, &w, &p).unwrap();
                let t = table_utility(i, &bits(n, x), w.as_matrix(), c);
                assert!((u - t).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn uniform_profile_maximizes_potential(
        n in 2usize..=8,
        upper in proptest::collection::vec(0.05f64..=1.0, 28),
        theta_frac in 0.05f64..0.95,
    ) {
        let w = symmetric_from_upper(n, &upper[..n * (n - 1) / 2]);
        let theta = theta_frac * n as f64;
        prop_assume!((theta - n as f64 / 2.0).abs() > 1e-3);
        let p = params(n, theta, 1.0, 1.0);
        let c = p.theta_per_agent();
        let phis: Vec<f64> = (0..1usize << n)
            .map(|x| pair_potential(&bits(n, x), w.as_matrix(), c))
            .collect();
        let best = phis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expected = match nash_action(&p) {
            Equilibrium::AllZeros => 0,
            Equilibrium::AllOnes => (1 << n) - 1,
            Equilibrium::Tie => unreachable!(),
        };
        prop_assert!((phis[expected] - best).abs() < 1e-12);
        let winners = phis.iter().filter(|&&f| f > best - 1e-12).count();
        prop_assert_eq!(winners, 1);
    }

    #[test]
    fn potential_is_permutation_invariant(
        (w, perm, x) in (2usize..=8).prop_flat_map(|n| {
            (weights_in(n, 0.0, 1.0), permutation(n), 0u64..(1 << n))
        })
    ) {
        let n = w.n();
        let p = params(n, 0.7 * n as f64, 1.0, 1.0);
        let a = ActionProfile::from_index(n, x).unwrap();
        let lhs = potential(&a.permuted(&perm), &w.permuted(&perm), &p);
        prop_assert!((lhs - potential(&a, &w, &p)).abs() < 1e-12);
    }

    #[test]
    fn laplacian_is_psd_and_vanishes_only_on_consensus(w in (3usize..=8).prop_flat_map(|n| weights_in(n, 0.01, 1.0))) {
        let n = w.n();
        let l = laplacian(&w);
        let eig = netcoord::game::sorted_eigenvalues(&l).unwrap();
        prop_assert!(eig[0] > -1e-10);
        prop_assert!(eig[0].abs() < 1e-10);
        prop_assert!(algebraic_connectivity(&l).unwrap() > 0.0);
        for x in 0..1usize << n {
            let a = nalgebra::DVector::from_vec(bits(n, x));
            let q = (a.transpose() * &l * &a)[(0, 0)];
            let consensus = x == 0 || x == (1 << n) - 1;
            prop_assert_eq!(q.abs() < 1e-12, consensus);
        }
    }
}

#[test]
fn disconnected_weights_have_zero_connectivity() {
    let w = WeightMatrix::from_edges(4, &[(0, 1, 0.5), (2, 3, 0.5)]).unwrap();
    let l2 = algebraic_connectivity(&laplacian(&w)).unwrap();
    assert!(l2.abs() < 1e-10);
}
