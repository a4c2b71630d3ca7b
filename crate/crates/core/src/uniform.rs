//! Complete-graph reduction.
//!
//! On the complete pattern an optimal design is uniform, `W = w (11' - I)`.
//! With `d` agents playing 1 the exponent becomes `beta w A_d`, so the
//! objective collapses to an `(N+1)`-term sum
//!
//! ```text
//! f(w) = sum_d C(N,d) exp(beta w A_d) + (rho/2) w N (N-1)
//! A_d  = (d^2 - d)/2 - (theta/N)(N-1) d
//! ```
//!
//! All of this assumes `theta > N/2` (equilibrium at all-zeros). Then every
//! `A_d` with `d >= 1` is negative, `f` is strictly convex and its
//! derivative `F` is strictly increasing.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::game::{nash_action, Equilibrium, GameParams};
use crate::optimize::DEFAULT_CONNECTIVITY_FLOOR;

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

/// Residual bound for an interior root.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    /// `C(N, d)` for `d = 0..=N`, held as floats (exact for `N <= 60`).
    pub binomials: Vec<f64>,
    /// `A_d` for `d = 0..=N`.
    pub a_coeffs: Vec<f64>,
}

impl CoefficientTable {
    pub fn new(params: &GameParams) -> Self {
        let n = params.n_agents;
        let nf = n as f64;
        let c = params.theta / nf * (nf - 1.0);
        let a_coeffs = (0..=n)
            .map(|d| {
                let d = d as f64;
                (d * d - d) / 2.0 - c * d
            })
            .collect();
        CoefficientTable {
            binomials: binomials(n),
            a_coeffs,
        }
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.binomials.iter().copied().zip(self.a_coeffs.iter().copied())
    }
}

fn binomials(n: usize) -> Vec<f64> {
    if n <= 60 {
        let mut out = Vec::with_capacity(n + 1);
        let mut c: u64 = 1;
        out.push(1.0);
        for k in 0..n as u64 {
            // C(n, k+1) = C(n, k) (n - k) / (k + 1), exact in u128.
            c = ((c as u128 * (n as u128 - k as u128)) / (k as u128 + 1)) as u64;
            out.push(c as f64);
        }
        out
    } else {
        let ln_n = ln_gamma(n as f64 + 1.0);
        (0..=n)
            .map(|k| (ln_n - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)).exp())
            .collect()
    }
}

fn require_zero_regime(params: &GameParams) -> Result<()> {
    match nash_action(params) {
        Equilibrium::AllZeros => Ok(()),
        Equilibrium::Tie => Err(Error::TieRegime),
        Equilibrium::AllOnes => Err(Error::WrongRegime(
            "the uniform reduction is derived for theta > N/2 only".into(),
        )),
    }
}

fn pairs(params: &GameParams) -> f64 {
    let n = params.n_agents as f64;
    n * (n - 1.0)
}

fn check_weight(w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidWeights(format!("uniform weight {w} outside [0, 1]")));
    }
    Ok(())
}

/// `sum_d C(N,d) exp(beta w A_d)`, which equals `1 / mu(0)` at `w (11' - I)`.
pub fn inverse_prob_uniform(w: f64, params: &GameParams) -> Result<f64> {
    require_zero_regime(params)?;
    check_weight(w)?;
    let t = CoefficientTable::new(params);
    Ok(t.terms()
        .map(|(c, a)| c * (params.beta * w * a).exp())
        .sum())
}

/// The objective restricted to uniform complete graphs.
pub fn f_tilde(w: f64, params: &GameParams) -> Result<f64> {
    Ok(inverse_prob_uniform(w, params)? + 0.5 * params.rho * w * pairs(params))
}

/// `F(w) = d f_tilde / dw`.
pub fn f_prime(w: f64, params: &GameParams) -> Result<f64> {
    require_zero_regime(params)?;
    check_weight(w)?;
    let t = CoefficientTable::new(params);
    Ok(derivative(&t, w, params))
}

fn derivative(t: &CoefficientTable, w: f64, params: &GameParams) -> f64 {
    let b = params.beta;
    let s: f64 = t.terms().map(|(c, a)| c * (b * w * a).exp() * b * a).sum();
    s + 0.5 * params.rho * pairs(params)
}

fn second_derivative(t: &CoefficientTable, w: f64, params: &GameParams) -> f64 {
    let b = params.beta;
    t.terms()
        .map(|(c, a)| c * (b * w * a).exp() * b * b * a * a)
        .sum()
}

/// Smallest `beta` at which `F(0) < 0`: `2^(2-N) rho N / (4 theta - N)`.
pub fn beta_threshold(params: &GameParams) -> Result<f64> {
    let n = params.n_agents as f64;
    let denom = 4.0 * params.theta - n;
    if denom == 0.0 {
        return Err(Error::InvalidParams("4 theta = N makes the threshold undefined".into()));
    }
    Ok((2.0 - n).exp2() * params.rho * n / denom)
}

/// `ceil(theta (N-1)/N + 1/2)` clamped to `[0, N]`.
pub fn d_star(params: &GameParams) -> usize {
    let n = params.n_agents as f64;
    let v = (params.theta * (n - 1.0) / n + 0.5).ceil();
    v.clamp(0.0, n) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Interior,
    /// `F(1) <= 0`: the cap `w = 1` binds.
    UpperBoundary,
    /// `F(0) >= 0`: the infimum is at `w -> 0+`, which is disconnected; the
    /// reported weight is the connectivity floor.
    LowerDegenerate,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Interior => "interior",
            Boundary::UpperBoundary => "upper_boundary",
            Boundary::LowerDegenerate => "lower_degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformSolution {
    pub w_star: f64,
    /// `f_tilde(w_star)`.
    pub objective: f64,
    pub boundary: Boundary,
    /// `F(w_star)`.
    pub residual: f64,
}

fn classify(
    t: &CoefficientTable,
    params: &GameParams,
    floor: f64,
) -> Result<Option<UniformSolution>> {
    let f0 = derivative(t, 0.0, params);
    if f0 >= 0.0 {
        return Ok(Some(UniformSolution {
            w_star: floor,
            objective: f_tilde(floor, params)?,
            boundary: Boundary::LowerDegenerate,
            residual: derivative(t, floor, params),
        }));
    }
    let f1 = derivative(t, 1.0, params);
    if f1 <= 0.0 {
        return Ok(Some(UniformSolution {
            w_star: 1.0,
            objective: f_tilde(1.0, params)?,
            boundary: Boundary::UpperBoundary,
            residual: f1,
        }));
    }
    Ok(None)
}

fn interior(w: f64, residual: f64, params: &GameParams) -> Result<UniformSolution> {
    Ok(UniformSolution {
        w_star: w,
        objective: f_tilde(w, params)?,
        boundary: Boundary::Interior,
        residual,
    })
}

/// Minimizes `f_tilde` over `(0, 1]` by bisection on `F`.
pub fn solve_uniform(params: &GameParams, tol: f64) -> Result<UniformSolution> {
    solve_uniform_with_floor(params, tol, DEFAULT_CONNECTIVITY_FLOOR)
}

/// As [`solve_uniform`], reporting `floor` as the weight of a degenerate
/// solution.
pub fn solve_uniform_with_floor(
    params: &GameParams,
    tol: f64,
    floor: f64,
) -> Result<UniformSolution> {
    require_zero_regime(params)?;
    let t = CoefficientTable::new(params);
    if let Some(s) = classify(&t, params, floor)? {
        return Ok(s);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        let fm = derivative(&t, mid, params);
        if (hi - lo <= tol && fm.abs() <= ROOT_RESIDUAL_TOL) || mid <= lo || mid >= hi {
            return interior(mid, fm, params);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Newton's method from `w = 0.5`, falling back to bisection whenever a
/// step leaves the current bracket. Independent of [`solve_uniform`].
pub fn solve_uniform_newton(params: &GameParams, tol: f64) -> Result<UniformSolution> {
    require_zero_regime(params)?;
    let t = CoefficientTable::new(params);
    if let Some(s) = classify(&t, params, DEFAULT_CONNECTIVITY_FLOOR)? {
        return Ok(s);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut w = 0.5;
    for _ in 0..500 {
        let fw = derivative(&t, w, params);
        if fw < 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let slope = second_derivative(&t, w, params);
        let mut next = w - fw / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - w).abs();
        w = next;
        if step <= tol {
            let fw = derivative(&t, w, params);
            if fw.abs() <= ROOT_RESIDUAL_TOL || hi - lo <= f64::EPSILON {
                return interior(w, fw, params);
            }
        }
    }
    let fw = derivative(&t, w, params);
    interior(w, fw, params)
}

/// Sensitivity of the interior root to rationality, by implicit
/// differentiation of `F(w*(beta), beta) = 0`.
pub fn dw_dbeta(params: &GameParams, w_star: f64) -> Result<f64> {
    require_zero_regime(params)?;
    check_weight(w_star)?;
    let t = CoefficientTable::new(params);
    let b = params.beta;
    let (mut num, mut den) = (0.0, 0.0);
    for (c, a) in t.terms() {
        let e = c * (b * w_star * a).exp();
        num += e * (a + b * w_star * a * a);
        den += e * a * a;
    }
    let den = b * b * den;
    if den == 0.0 {
        return Err(Error::InvalidParams(
            "dw/dbeta undefined: zero curvature (beta = 0?)".into(),
        ));
    }
    Ok(-num / den)
}

/// One row of a rationality sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub w_star: f64,
    pub f_tilde: f64,
    /// Stationary probability of the all-zeros equilibrium at `w_star`.
    pub mu_nash: f64,
    /// Only defined for interior solutions.
    pub dw_dbeta: Option<f64>,
    pub boundary: Boundary,
}

pub fn beta_sweep(params: &GameParams, betas: &[f64], tol: f64) -> Result<Vec<SweepRow>> {
    betas
        .iter()
        .map(|&beta| {
            let p = params.with_beta(beta);
            let s = solve_uniform(&p, tol)?;
            let dw = match s.boundary {
                Boundary::Interior => Some(dw_dbeta(&p, s.w_star)?),
                _ => None,
            };
            Ok(SweepRow {
                beta,
                w_star: s.w_star,
                f_tilde: s.objective,
                mu_nash: 1.0 / inverse_prob_uniform(s.w_star, &p)?,
                dw_dbeta: dw,
                boundary: s.boundary,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: [&str; 6] = [
    "beta",
    "w_star",
    "f_tilde",
    "mu_nash",
    "dw_dbeta",
    "boundary_flag",
];

/// Writes a sweep as CSV; `dw_dbeta` is `NaN` off the interior.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        wtr.write_record([
            sig12(r.beta),
            sig12(r.w_star),
            sig12(r.f_tilde),
            sig12(r.mu_nash),
            sig12(r.dw_dbeta.unwrap_or(f64::NAN)),
            r.boundary.as_str().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
