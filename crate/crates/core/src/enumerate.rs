//! Ascending-order evaluation of a binary quadratic form over all profiles.
//!
//! Profiles are split as `x = hi << L | lo`. Inside a block (fixed `hi`) the
//! form is rebuilt from two small tables in O(1) per profile, so a full sweep
//! costs O(2^N) after O(2^L L) setup, and blocks can be filled independently.

/// `q(x) = sum_{i<j} w_ij x_i x_j + sum_i h_i x_i`.
pub(crate) struct QuadraticForm {
    n: usize,
    low_bits: usize,
    w: Vec<f64>,
    h: Vec<f64>,
    /// Pair term restricted to the low bits, indexed by `lo`.
    pair_low: Vec<f64>,
}

const MAX_LOW_BITS: usize = 12;

impl QuadraticForm {
    /// `w` is a dense row-major symmetric `n x n` matrix; only `i < j` is read.
    pub(crate) fn new(n: usize, w: Vec<f64>, h: Vec<f64>) -> Self {
        debug_assert_eq!(w.len(), n * n);
        debug_assert_eq!(h.len(), n);
        let low_bits = n.min(MAX_LOW_BITS);
        let mut pair_low = vec![0.0; 1 << low_bits];
        for lo in 1..(1usize << low_bits) {
            let k = lo.trailing_zeros() as usize;
            let rest = lo & (lo - 1);
            let mut s = pair_low[rest];
            let mut r = rest;
            while r != 0 {
                let j = r.trailing_zeros() as usize;
                s += w[k * n + j];
                r &= r - 1;
            }
            pair_low[lo] = s;
        }
        QuadraticForm {
            n,
            low_bits,
            w,
            h,
            pair_low,
        }
    }

    pub(crate) fn block_len(&self) -> usize {
        1 << self.low_bits
    }

    pub(crate) fn block_count(&self) -> usize {
        1 << (self.n - self.low_bits)
    }

    /// Writes `scale * (q(x) + offset)` for every `x` in block `hi`.
    pub(crate) fn fill_block(&self, hi: usize, scale: f64, offset: f64, out: &mut [f64]) {
        let n = self.n;
        let lb = self.low_bits;
        debug_assert_eq!(out.len(), self.block_len());

        let high: Vec<usize> = (lb..n).filter(|&k| (hi >> (k - lb)) & 1 == 1).collect();
        let mut base = 0.0;
        for (a, &i) in high.iter().enumerate() {
            base += self.h[i];
            for &j in &high[a + 1..] {
                base += self.w[i * n + j];
            }
        }
        let field: Vec<f64> = (0..lb)
            .map(|k| self.h[k] + high.iter().map(|&j| self.w[k * n + j]).sum::<f64>())
            .collect();

        // out[lo] holds the linear part first, then gets the rest added.
        out[0] = 0.0;
        for lo in 1..out.len() {
            let k = lo.trailing_zeros() as usize;
            out[lo] = out[lo & (lo - 1)] + field[k];
        }
        for (lo, v) in out.iter_mut().enumerate() {
            *v = scale * (base + self.pair_low[lo] + *v + offset);
        }
    }

    pub(crate) fn low_bits(&self) -> usize {
        self.low_bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(n: usize, w: &[f64], h: &[f64], x: usize) -> f64 {
        let mut q = 0.0;
        for i in 0..n {
            if (x >> i) & 1 == 0 {
                continue;
            }
            q += h[i];
            for j in (i + 1)..n {
                if (x >> j) & 1 == 1 {
                    q += w[i * n + j];
                }
            }
        }
        q
    }

    #[test]
    fn blocks_match_naive_evaluation() {
        for n in [1usize, 3, 7, 14] {
            let w: Vec<f64> = (0..n * n)
                .map(|k| {
                    let (i, j) = (k / n, k % n);
                    let (a, b) = (i.min(j), i.max(j));
                    if a == b {
                        0.0
                    } else {
                        ((a * 31 + b * 17) % 13) as f64 / 13.0
                    }
                })
                .collect();
            let h: Vec<f64> = (0..n).map(|i| -0.3 * i as f64 + 0.1).collect();
            let q = QuadraticForm::new(n, w.clone(), h.clone());
            let mut buf = vec![0.0; q.block_len()];
            for hi in 0..q.block_count() {
                q.fill_block(hi, 2.0, 0.5, &mut buf);
                for (lo, &v) in buf.iter().enumerate() {
                    let x = (hi << q.low_bits()) | lo;
                    let expect = 2.0 * (naive(n, &w, &h, x) + 0.5);
                    assert!((v - expect).abs() < 1e-11, "n={n} x={x}: {v} vs {expect}");
                }
            }
        }
    }
}
