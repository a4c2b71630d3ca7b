//! Deterministic reductions.
//!
//! Every exponential sum in the crate goes through these helpers so that the
//! result depends only on the input order, never on thread count.

const PAIRWISE_BASE: usize = 16;

/// Pairwise (cascade) summation. Error grows as O(log n) instead of O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BASE {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// A sum of exponentials held as `exp(max) * scaled`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledSum {
    pub max: f64,
    pub scaled: f64,
}

impl ScaledSum {
    /// Sums `exp(x)` over `exponents` with max subtraction.
    pub fn from_exponents(exponents: &[f64]) -> Self {
        let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let terms: Vec<f64> = exponents.iter().map(|&e| (e - max).exp()).collect();
        ScaledSum {
            max,
            scaled: pairwise_sum(&terms),
        }
    }

    /// Combines partial sums in slice order.
    pub fn combine(parts: &[ScaledSum]) -> Self {
        let max = parts.iter().map(|p| p.max).fold(f64::NEG_INFINITY, f64::max);
        let terms: Vec<f64> = parts
            .iter()
            .map(|p| p.scaled * (p.max - max).exp())
            .collect();
        ScaledSum {
            max,
            scaled: pairwise_sum(&terms),
        }
    }

    pub fn ln(&self) -> f64 {
        self.max + self.scaled.ln()
    }

    pub fn value(&self) -> f64 {
        self.max.exp() * self.scaled
    }
}

/// `ln Σ exp(x_i)` with max subtraction.
pub fn log_sum_exp(exponents: &[f64]) -> f64 {
    ScaledSum::from_exponents(exponents).ln()
}
