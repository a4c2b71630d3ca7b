//! Independent reference implementations used as test oracles. Nothing here
//! shares code with the library's enumeration or bit tricks.

#![allow(dead_code)]

use nalgebra::DMatrix;
use netcoord::{GameParams, WeightMatrix};
use proptest::prelude::*;

pub fn params(n: usize, theta: f64, beta: f64, rho: f64) -> GameParams {
    GameParams::new(n, theta, beta, rho).unwrap()
}

pub fn bits(n: usize, x: usize) -> Vec<f64> {
    (0..n).map(|i| ((x >> i) & 1) as f64).collect()
}

/// Potential written pair by pair: `sum_{i<j} w_ij (a_i a_j + (1 - a_i - a_j) c)`.
pub fn pair_potential(a: &[f64], w: &DMatrix<f64>, c: f64) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += w[(i, j)] * (a[i] * a[j] + (1.0 - a[i] - a[j]) * c);
        }
    }
    s
}

/// Utility straight from the payoff table.
pub fn table_utility(i: usize, a: &[f64], w: &DMatrix<f64>, c: f64) -> f64 {
    (0..a.len())
        .filter(|&j| j != i)
        .map(|j| w[(i, j)] * a[i] * (a[j] - c))
        .sum()
}

/// `1/mu(a*) + (rho/2) 1'W1` by a flat loop over profiles. `a*` is taken
/// as whichever of all-zeros and all-ones has the larger potential.
pub fn naive_objective(w: &DMatrix<f64>, p: &GameParams) -> f64 {
    let n = p.n_agents;
    let c = p.theta / n as f64;
    let phis: Vec<f64> = (0..1usize << n)
        .map(|x| pair_potential(&bits(n, x), w, c))
        .collect();
    let star = phis[0].max(phis[(1 << n) - 1]);
    let inv: f64 = phis.iter().map(|&f| (p.beta * (f - star)).exp()).sum();
    inv + 0.5 * p.rho * w.sum()
}

/// Central differences of the objective in each pair variable, moving
/// `w_ij` and `w_ji` together.
pub fn fd_gradient(w: &DMatrix<f64>, p: &GameParams, h: f64) -> DMatrix<f64> {
    let n = w.nrows();
    let f = |m: &DMatrix<f64>| {
        netcoord::objective(&WeightMatrix::from_raw_unchecked(m.clone()), p)
            .unwrap()
            .total
    };
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut up = w.clone();
            let mut down = w.clone();
            up[(i, j)] += h;
            up[(j, i)] += h;
            down[(i, j)] -= h;
            down[(j, i)] -= h;
            let d = (f(&up) - f(&down)) / (2.0 * h);
            g[(i, j)] = d;
            g[(j, i)] = d;
        }
    }
    g
}

pub fn symmetric_from_upper(n: usize, upper: &[f64]) -> WeightMatrix {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = upper[k];
            m[(j, i)] = upper[k];
            k += 1;
        }
    }
    WeightMatrix::new(m).unwrap()
}

/// Random symmetric matrix with off-diagonal entries in `[lo, hi]`.
pub fn weights_in(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = WeightMatrix> {
    proptest::collection::vec(lo..=hi, n * (n - 1) / 2)
        .prop_map(move |upper| symmetric_from_upper(n, &upper))
}

pub fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// All permutations of `0..n` by Heap's algorithm.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_weights(n: usize, lo: f64, hi: f64, rng: &mut impl rand::Rng) -> WeightMatrix {
    let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.random_range(lo..=hi)).collect();
    symmetric_from_upper(n, &upper)
}
