//! JSON description of a single experiment run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use netcoord::{GameParams, SparsityPattern};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    UniformSweep,
    PatternOptimize,
    TopologyCompare,
    ChainValidate,
}

/// A named topology or an explicit zero-based edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Full,
    Star,
    Line,
    Hybrid,
    Custom(Vec<[usize; 2]>),
}

impl Topology {
    pub fn pattern(&self, n: usize) -> Result<SparsityPattern> {
        let p = match self {
            Topology::Full => SparsityPattern::full(n),
            Topology::Star => SparsityPattern::star(n),
            Topology::Line => SparsityPattern::line(n),
            Topology::Hybrid => SparsityPattern::hybrid(n),
            Topology::Custom(edges) => {
                let edges: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
                SparsityPattern::from_edges(n, &edges)
            }
        };
        Ok(p?)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::Full => "full",
            Topology::Star => "star",
            Topology::Line => "line",
            Topology::Hybrid => "hybrid",
            Topology::Custom(_) => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Topology::Full),
            "star" => Ok(Topology::Star),
            "line" => Ok(Topology::Line),
            "hybrid" => Ok(Topology::Hybrid),
            _ => parse_edge_list(s).map(Topology::Custom),
        }
    }
}

/// Parses `0-1,1-2,...` into an edge list.
fn parse_edge_list(s: &str) -> Result<Vec<[usize; 2]>> {
    let bad = || {
        CliError::Config(format!(
            "topology {s:?} is neither full/star/line/hybrid nor an edge list like 0-1,1-2"
        ))
    };
    s.split(',')
        .map(|e| {
            let (i, j) = e.trim().split_once('-').ok_or_else(bad)?;
            Ok([i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?])
        })
        .collect()
}

/// Settings for simulator validation runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainSettings {
    pub steps: u64,
    /// Independent chains, seeded `seed`, `seed + 1`, ...
    pub chains: u64,
    /// Weight on every edge of the pattern.
    pub weight: f64,
    pub tv_threshold: f64,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            steps: 2_000_000,
            chains: 3,
            weight: 0.5,
            tv_threshold: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub params: Option<GameParams>,
    #[serde(default)]
    pub beta_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub rho_list: Option<Vec<f64>>,
    #[serde(default)]
    pub pattern: Option<Topology>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub chain: ChainSettings,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(grid) = &self.beta_grid {
            validate_grid(grid)?;
        }
        if let Some(rhos) = &self.rho_list {
            if rhos.is_empty() || rhos.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
                return Err(CliError::Config("rho_list must hold positive values".into()));
            }
        }
        if let Some(p) = &self.params {
            p.validate()?;
            if let Some(t) = &self.pattern {
                t.pattern(p.n_agents)?;
            }
        }
        Ok(())
    }
}

/// Grids must be positive and strictly increasing.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CliError::Config("beta grid is empty".into()));
    }
    if grid.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(CliError::Config("beta grid values must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("beta grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => vec![],
        1 => vec![lo],
        _ => (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

pub fn logspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), k).into_iter().map(f64::exp).collect()
}
