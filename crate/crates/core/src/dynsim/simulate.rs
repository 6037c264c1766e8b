//! Quotient and full-network trajectories.

use crate::coloring::QuotientNetwork;
use crate::error::{Error, Result};
use crate::netmodel::Network;

use super::dde::{DelaySystem, Integrator};
use super::models::Models;

/// States above this norm count as a blow-up.
pub const BLOWUP_NORM: f64 = 1e8;

/// Uniformly sampled trajectory of `nodes` blocks of `dim` components each.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub nodes: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Per-cluster trace `s_q(t)` of a quotient network.
pub type SynchronousState = Trajectory;

impl Trajectory {
    pub fn node(&self, sample: usize, node: usize) -> &[f64] {
        &self.states[sample][node * self.dim..(node + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("empty trajectory")
    }

    /// Linear interpolation between samples; clamps outside the window.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1].clone();
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.states[k]
            .iter()
            .zip(&self.states[k + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }
}

/// `s_q' = f_q(s_q) + sum_k sigma_k sum_p R^k_qp h^k(s_q, s_p(t - delta_k))`.
#[derive(Debug)]
pub struct QuotientSystem<'a> {
    pub qnet: &'a QuotientNetwork,
    pub models: &'a Models,
    /// Nonzero entries `(q, p, sigma_k R^k_qp)` per layer.
    terms: Vec<Vec<(usize, usize, f64)>>,
}

impl<'a> QuotientSystem<'a> {
    pub fn new(qnet: &'a QuotientNetwork, models: &'a Models) -> Self {
        let q = qnet.num_clusters();
        let terms = qnet
            .r
            .iter()
            .zip(&qnet.sigma)
            .map(|(r, &s)| {
                let mut t = Vec::new();
                for a in 0..q {
                    for b in 0..q {
                        if r[(a, b)] != 0.0 && s != 0.0 {
                            t.push((a, b, s * r[(a, b)]));
                        }
                    }
                }
                t
            })
            .collect();
        Self { qnet, models, terms }
    }

    /// Writes the quotient vector field for the cluster block `x`.
    pub fn eval(&self, x: &[f64], lagged: &[&[f64]], out: &mut [f64]) {
        let n = self.qnet.state_dim;
        let mut h = vec![0.0; n];
        for q in 0..self.qnet.num_clusters() {
            self.models
                .node(self.qnet.cluster_type[q])
                .f(&x[q * n..(q + 1) * n], &mut out[q * n..(q + 1) * n]);
        }
        for (k, terms) in self.terms.iter().enumerate() {
            let c = self.models.couplings[k].as_ref();
            for &(q, p, w) in terms {
                c.h(&x[q * n..(q + 1) * n], &lagged[k][p * n..(p + 1) * n], &mut h);
                for i in 0..n {
                    out[q * n + i] += w * h[i];
                }
            }
        }
    }
}

impl DelaySystem for QuotientSystem<'_> {
    fn dim(&self) -> usize {
        self.qnet.num_clusters() * self.qnet.state_dim
    }
    fn delays(&self) -> Vec<f64> {
        self.qnet.delay.clone()
    }
    fn rhs(&self, x: &[f64], lagged: &[&[f64]], out: &mut [f64]) {
        self.eval(x, lagged, out);
    }
}

/// Eq. (1) on every node.
#[derive(Debug)]
pub struct FullSystem<'a> {
    pub net: &'a Network,
    pub models: &'a Models,
    /// `(i, j, sigma_k A^k_ij)` per layer.
    terms: Vec<Vec<(usize, usize, f64)>>,
}

impl<'a> FullSystem<'a> {
    pub fn new(net: &'a Network, models: &'a Models) -> Self {
        let n = net.len();
        let terms = net
            .layers
            .iter()
            .map(|l| {
                let mut t = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        let a = l.adjacency[(i, j)];
                        if a != 0.0 && l.sigma != 0.0 {
                            t.push((i, j, l.sigma * a));
                        }
                    }
                }
                t
            })
            .collect();
        Self { net, models, terms }
    }
}

impl DelaySystem for FullSystem<'_> {
    fn dim(&self) -> usize {
        self.net.len() * self.net.state_dim
    }
    fn delays(&self) -> Vec<f64> {
        self.net.layers.iter().map(|l| l.delay).collect()
    }
    fn rhs(&self, x: &[f64], lagged: &[&[f64]], out: &mut [f64]) {
        let n = self.net.state_dim;
        let mut h = vec![0.0; n];
        for (i, &t) in self.net.node_types.iter().enumerate() {
            self.models
                .node(t)
                .f(&x[i * n..(i + 1) * n], &mut out[i * n..(i + 1) * n]);
        }
        for (k, terms) in self.terms.iter().enumerate() {
            let c = self.models.couplings[k].as_ref();
            for &(i, j, w) in terms {
                c.h(&x[i * n..(i + 1) * n], &lagged[k][j * n..(j + 1) * n], &mut h);
                for a in 0..n {
                    out[i * n + a] += w * h[a];
                }
            }
        }
    }
}

fn check_finite(x: &[f64], time: f64) -> Result<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm.is_finite() && norm <= BLOWUP_NORM {
        Ok(())
    } else {
        Err(Error::BlowUp { time })
    }
}

/// Integrates any delay system, sampling every `sample_every` steps.
pub fn integrate<S: DelaySystem>(
    sys: S,
    nodes: usize,
    init: &[f64],
    horizon: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    let dim = sys.dim() / nodes.max(1);
    let mut it = Integrator::new(sys, init, dt)?;
    let every = sample_every.clamp(1, i64::MAX as usize) as i64;
    let mut tr = Trajectory {
        dim,
        nodes,
        times: vec![0.0],
        states: vec![init.to_vec()],
    };
    while it.time() < horizon - 0.5 * it.dt() {
        it.step();
        if it.steps() % 64 == 0 || it.steps() % every == 0 {
            check_finite(it.state(), it.time())?;
        }
        if it.steps() % every == 0 {
            tr.times.push(it.time());
            tr.states.push(it.state().to_vec());
        }
    }
    check_finite(it.state(), it.time())?;
    if *tr.times.last().expect("sample") < it.time() {
        tr.times.push(it.time());
        tr.states.push(it.state().to_vec());
    }
    Ok(tr)
}

/// Trajectory of the quotient network from a constant initial history.
pub fn integrate_quotient(
    qnet: &QuotientNetwork,
    models: &Models,
    init: &[f64],
    horizon: f64,
    dt: f64,
    sample_every: usize,
) -> Result<SynchronousState> {
    integrate(
        QuotientSystem::new(qnet, models),
        qnet.num_clusters(),
        init,
        horizon,
        dt,
        sample_every,
    )
}

/// Trajectory of the full network from a constant initial history.
pub fn integrate_full(
    net: &Network,
    models: &Models,
    init: &[f64],
    horizon: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    integrate(FullSystem::new(net, models), net.len(), init, horizon, dt, sample_every)
}

/// Full-network state with every node set to its cluster's state.
pub fn lift(partition: &crate::coloring::Partition, cluster_state: &[f64], dim: usize) -> Vec<f64> {
    partition
        .assignment()
        .iter()
        .flat_map(|&c| cluster_state[c * dim..(c + 1) * dim].iter().copied())
        .collect()
}
