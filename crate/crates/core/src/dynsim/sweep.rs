//! Transverse MLEs over a one-parameter grid.

use std::fmt;
use std::str::FromStr;

use crate::coloring::{quotient, Partition, QuotientNetwork};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::irrtransform::{build_transform_from, TransformResult};
use crate::isslattice::PartitionLattice;
use crate::netmodel::Network;

use super::mle::{mle, MleEstimate, MleOptions};
use super::models::Models;
use super::variational::assemble_variational;

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    /// Delay of every layer.
    Delay,
    /// Coupling strength of one layer (0-based).
    Sigma(usize),
}

impl FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delay" | "delta" => Ok(Param::Delay),
            "kappa" => Ok(Param::Sigma(0)),
            _ => s
                .strip_prefix("sigma")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .map(|k| Param::Sigma(k - 1))
                .ok_or_else(|| Error::Config(format!("unknown sweep parameter `{s}`"))),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Delay => write!(f, "delay"),
            Param::Sigma(k) => write!(f, "sigma{}", k + 1),
        }
    }
}

impl Param {
    pub fn apply_network(&self, net: &Network, value: f64) -> Result<Network> {
        let mut out = net.clone();
        match *self {
            Param::Delay => out.layers.iter_mut().for_each(|l| l.delay = value),
            Param::Sigma(k) => {
                out.layers
                    .get_mut(k)
                    .ok_or_else(|| Error::Config(format!("network has no layer {}", k + 1)))?
                    .sigma = value;
            }
        }
        Ok(out)
    }

    pub fn apply_quotient(&self, q: &QuotientNetwork, value: f64) -> Result<QuotientNetwork> {
        match *self {
            Param::Delay => Ok(q.with_delay(value)),
            Param::Sigma(k) if k < q.sigma.len() => Ok(q.with_sigma(k, value)),
            Param::Sigma(k) => Err(Error::Config(format!("network has no layer {}", k + 1))),
        }
    }
}

/// `points` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![from],
        _ => (0..points)
            .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub network: Network,
    /// Balanced partition whose stability is assessed.
    pub base: Partition,
    pub param: Param,
    pub grid: Vec<f64>,
    pub mle: MleOptions,
    /// Initial state of every cluster, concatenated.
    pub sync_init: Vec<f64>,
    /// Bisection steps used to refine the first sign change.
    pub bisection_steps: usize,
    pub execution: Execution,
}

/// Rows and clusters of one irreducible transverse piece.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceInfo {
    pub rows: Vec<usize>,
    pub clusters: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub param: Param,
    pub grid: Vec<f64>,
    pub pieces: Vec<PieceInfo>,
    /// `mle[g][b]`: estimate of piece `b` at grid point `g`.
    pub mle: Vec<Vec<MleEstimate>>,
    /// `cluster_mle[g][q]`: max over pieces holding rows of cluster `q`; `None` for single-node clusters.
    pub cluster_mle: Vec<Vec<Option<f64>>>,
    /// Overall transverse MLE per grid point.
    pub overall: Vec<f64>,
    /// First sign change of `overall`, refined by bisection.
    pub threshold: Option<f64>,
    pub options: MleOptions,
}

impl StabilityReport {
    pub fn all_converged(&self) -> bool {
        self.mle.iter().flatten().all(|e| e.converged)
    }
}

/// Everything fixed across a sweep: quotient, transform, models.
#[derive(Debug)]
pub struct StabilityProblem {
    pub quotient: QuotientNetwork,
    pub transform: TransformResult,
    pub models: Models,
    pub pieces: Vec<PieceInfo>,
}

impl StabilityProblem {
    pub fn new(net: &Network, lattice: &PartitionLattice, base: &Partition) -> Result<Self> {
        let transform = build_transform_from(net, lattice, base)?;
        Self::with_transform(net, transform)
    }

    pub fn with_transform(net: &Network, transform: TransformResult) -> Result<Self> {
        let quotient = quotient(net, &transform.base)?;
        let models = Models::for_quotient(&quotient)?;
        let pieces = transform
            .pieces()
            .into_iter()
            .map(|rows| {
                let mut clusters: Vec<usize> = rows.iter().map(|&r| transform.row_cluster[r]).collect();
                clusters.sort_unstable();
                clusters.dedup();
                PieceInfo { rows, clusters }
            })
            .collect();
        Ok(Self {
            quotient,
            transform,
            models,
            pieces,
        })
    }

    /// MLE of every piece for a parameter value.
    pub fn piece_mles(&self, param: Param, value: f64, init: &[f64], opts: &MleOptions) -> Result<Vec<MleEstimate>> {
        let q = param.apply_quotient(&self.quotient, value)?;
        self.pieces
            .iter()
            .map(|p| {
                let v = assemble_variational(&self.transform, &q, &self.models, &p.rows)?;
                mle(&v, init, opts)
            })
            .collect()
    }

    pub fn cluster_mles(&self, piece_mles: &[MleEstimate]) -> Vec<Option<f64>> {
        (0..self.quotient.num_clusters())
            .map(|c| {
                self.pieces
                    .iter()
                    .zip(piece_mles)
                    .filter(|(p, _)| p.clusters.contains(&c))
                    .map(|(_, e)| e.value)
                    .reduce(f64::max)
            })
            .collect()
    }
}

fn overall(m: &[MleEstimate]) -> f64 {
    m.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max)
}

pub fn sweep(cfg: &SweepConfig, lattice: &PartitionLattice) -> Result<StabilityReport> {
    let problem = StabilityProblem::new(&cfg.network, lattice, &cfg.base)?;
    sweep_problem(&problem, cfg)
}

pub fn sweep_problem(problem: &StabilityProblem, cfg: &SweepConfig) -> Result<StabilityReport> {
    let results: Vec<Result<Vec<MleEstimate>>> = cfg.execution.map(cfg.grid.clone(), |v| {
        problem.piece_mles(cfg.param, v, &cfg.sync_init, &cfg.mle)
    });
    let mle = results.into_iter().collect::<Result<Vec<_>>>()?;
    let overall_v: Vec<f64> = mle.iter().map(|m| overall(m)).collect();
    let mut threshold = None;
    for i in 1..cfg.grid.len() {
        let (a, b) = (overall_v[i - 1], overall_v[i]);
        if a.is_finite() && b.is_finite() && (a < 0.0) != (b < 0.0) {
            let (mut lo, mut hi) = (cfg.grid[i - 1], cfg.grid[i]);
            let lo_negative = a < 0.0;
            for _ in 0..cfg.bisection_steps {
                let mid = 0.5 * (lo + hi);
                let m = overall(&problem.piece_mles(cfg.param, mid, &cfg.sync_init, &cfg.mle)?);
                if (m < 0.0) == lo_negative {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            threshold = Some(0.5 * (lo + hi));
            break;
        }
    }
    Ok(StabilityReport {
        param: cfg.param,
        grid: cfg.grid.clone(),
        pieces: problem.pieces.clone(),
        cluster_mle: mle.iter().map(|m| problem.cluster_mles(m)).collect(),
        overall: overall_v,
        mle,
        threshold,
        options: cfg.mle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_params() {
        assert_eq!("sigma2".parse::<Param>().unwrap(), Param::Sigma(1));
        assert_eq!("kappa".parse::<Param>().unwrap(), Param::Sigma(0));
        assert_eq!("delay".parse::<Param>().unwrap(), Param::Delay);
        assert!("sigma0".parse::<Param>().is_err());
        assert_eq!(Param::Sigma(1).to_string(), "sigma2");
    }

    #[test]
    fn grid() {
        assert_eq!(linspace(0.0, 4.0, 5), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
    }
}
