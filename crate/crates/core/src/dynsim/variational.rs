//! Linearization about the cluster-synchronous solution, restricted to a
//! set of transverse rows of `T`.
//!
//! With `eta_r` the perturbation along transverse row `r` (cluster `q_r`):
//!
//! ```text
//! eta_r' = Psi1_r eta_r + sum_k sum_r' Psi2^k_rr' eta_r'(t - delta_k)
//! Psi1_r    = Df(s_q) + sum_k sigma_k sum_p R^k_qp D_recv h^k(s_q, s_p(t - delta_k))
//! Psi2^k_rr' = sigma_k B^k_rr' D_send h^k(s_q, s_q'(t - delta_k))
//! ```
//!
//! The synchronous solution is integrated in the same state vector, so the
//! combined system is a single delay equation in `[s; eta]`.

use nalgebra::DMatrix;

use crate::coloring::QuotientNetwork;
use crate::error::{Error, Result};
use crate::irrtransform::{TransformResult, BLOCK_TOL};

use super::dde::DelaySystem;
use super::models::Models;
use super::simulate::QuotientSystem;

#[derive(Debug)]
pub struct VariationalSystem<'a> {
    quotient: QuotientSystem<'a>,
    qnet: &'a QuotientNetwork,
    models: &'a Models,
    /// Rows of `T` spanned by the perturbation.
    pub rows: Vec<usize>,
    row_cluster: Vec<usize>,
    /// `(r, r', sigma_k B^k_rr')` per layer, local row indices.
    couplings: Vec<Vec<(usize, usize, f64)>>,
}

pub fn assemble_variational<'a>(
    result: &TransformResult,
    qnet: &'a QuotientNetwork,
    models: &'a Models,
    rows: &[usize],
) -> Result<VariationalSystem<'a>> {
    if qnet.partition != result.base {
        return Err(Error::Config("quotient and transform use different partitions".into()));
    }
    let q = result.num_parallel();
    if let Some(&r) = rows.iter().find(|&&r| r < q) {
        return Err(Error::ParallelRow { row: r + 1 });
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= result.t.nrows()) {
        return Err(Error::Config(format!("row {} outside T", r + 1)));
    }
    let couplings = result
        .b
        .iter()
        .zip(&qnet.sigma)
        .map(|(b, &sigma)| {
            let mut t = Vec::new();
            for (a, &r) in rows.iter().enumerate() {
                for (c, &rr) in rows.iter().enumerate() {
                    let v = b[(r, rr)];
                    if v.abs() > BLOCK_TOL && sigma != 0.0 {
                        t.push((a, c, sigma * v));
                    }
                }
            }
            t
        })
        .collect();
    Ok(VariationalSystem {
        quotient: QuotientSystem::new(qnet, models),
        qnet,
        models,
        rows: rows.to_vec(),
        row_cluster: rows.iter().map(|&r| result.row_cluster[r]).collect(),
        couplings,
    })
}

impl VariationalSystem<'_> {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Length of the synchronous part of the state.
    pub fn sync_dim(&self) -> usize {
        self.qnet.num_clusters() * self.qnet.state_dim
    }

    fn cluster_jacobian(&self, q: usize, s: &[f64], lagged: &[&[f64]], jac: &mut [f64], tmp: &mut [f64]) {
        let n = self.qnet.state_dim;
        let sq = &s[q * n..(q + 1) * n];
        self.models.node(self.qnet.cluster_type[q]).df(sq, jac);
        for (k, r) in self.qnet.r.iter().enumerate() {
            let sigma = self.qnet.sigma[k];
            if sigma == 0.0 {
                continue;
            }
            for p in 0..self.qnet.num_clusters() {
                let w = r[(q, p)];
                if w == 0.0 {
                    continue;
                }
                self.models.couplings[k].d_receiver(sq, &lagged[k][p * n..(p + 1) * n], tmp);
                for (j, t) in jac.iter_mut().zip(tmp.iter()) {
                    *j += sigma * w * t;
                }
            }
        }
    }

    /// Dense `Psi1` (block diagonal) and `Psi2^k` for the given synchronous
    /// state and its delayed copies (one per layer).
    pub fn psi_matrices(&self, s: &[f64], lagged: &[&[f64]]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let n = self.qnet.state_dim;
        let m = self.rows.len();
        let mut psi1 = DMatrix::zeros(m * n, m * n);
        let mut jac = vec![0.0; n * n];
        let mut tmp = vec![0.0; n * n];
        for (r, &q) in self.row_cluster.iter().enumerate() {
            self.cluster_jacobian(q, s, lagged, &mut jac, &mut tmp);
            for a in 0..n {
                for b in 0..n {
                    psi1[(r * n + a, r * n + b)] = jac[a * n + b];
                }
            }
        }
        let psi2 = self
            .couplings
            .iter()
            .enumerate()
            .map(|(k, terms)| {
                let mut m2 = DMatrix::zeros(m * n, m * n);
                for &(r, rr, w) in terms {
                    let (q, qq) = (self.row_cluster[r], self.row_cluster[rr]);
                    self.models.couplings[k].d_sender(
                        &s[q * n..(q + 1) * n],
                        &lagged[k][qq * n..(qq + 1) * n],
                        &mut tmp,
                    );
                    for a in 0..n {
                        for b in 0..n {
                            m2[(r * n + a, rr * n + b)] += w * tmp[a * n + b];
                        }
                    }
                }
                m2
            })
            .collect();
        (psi1, psi2)
    }
}

impl DelaySystem for VariationalSystem<'_> {
    fn dim(&self) -> usize {
        self.sync_dim() + self.rows.len() * self.qnet.state_dim
    }

    fn delays(&self) -> Vec<f64> {
        self.qnet.delay.clone()
    }

    fn rhs(&self, x: &[f64], lagged: &[&[f64]], out: &mut [f64]) {
        let n = self.qnet.state_dim;
        let sd = self.sync_dim();
        let (s, eta) = x.split_at(sd);
        let lag_s: Vec<&[f64]> = lagged.iter().map(|l| &l[..sd]).collect();
        let (out_s, out_eta) = out.split_at_mut(sd);
        self.quotient.eval(s, &lag_s, out_s);

        let mut jac = vec![0.0; n * n];
        let mut tmp = vec![0.0; n * n];
        let qn = self.qnet.num_clusters();
        let mut done = vec![false; qn];
        let mut jacs = vec![0.0; qn * n * n];
        for &q in &self.row_cluster {
            if !done[q] {
                self.cluster_jacobian(q, s, &lag_s, &mut jac, &mut tmp);
                jacs[q * n * n..(q + 1) * n * n].copy_from_slice(&jac);
                done[q] = true;
            }
        }
        for (r, &q) in self.row_cluster.iter().enumerate() {
            let j = &jacs[q * n * n..(q + 1) * n * n];
            let e = &eta[r * n..(r + 1) * n];
            for a in 0..n {
                out_eta[r * n + a] = (0..n).map(|b| j[a * n + b] * e[b]).sum();
            }
        }
        for (k, terms) in self.couplings.iter().enumerate() {
            let c = self.models.couplings[k].as_ref();
            let lag_eta = &lagged[k][sd..];
            for &(r, rr, w) in terms {
                let (q, qq) = (self.row_cluster[r], self.row_cluster[rr]);
                c.d_sender(&s[q * n..(q + 1) * n], &lag_s[k][qq * n..(qq + 1) * n], &mut tmp);
                let e = &lag_eta[rr * n..(rr + 1) * n];
                for a in 0..n {
                    out_eta[r * n + a] += w * (0..n).map(|b| tmp[a * n + b] * e[b]).sum::<f64>();
                }
            }
        }
    }
}
