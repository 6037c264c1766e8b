//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use clustersync::{Layer, ModelSpec, Network, Partition};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

/// Every set partition of `0..n`, by brute force over restricted growth strings.
pub fn all_set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == labels.len() {
            out.push(labels.clone());
            return;
        }
        for l in 0..=max + usize::from(i > 0) {
            labels[i] = l;
            rec(i + 1, max.max(l), labels, out);
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    rec(1, 0, &mut labels, &mut out);
    out
}

/// Balance straight from the definition: nodes sharing a label have the
/// same type and the same total input weight from every label, per layer.
pub fn balanced_by_definition(net: &Network, labels: &[usize]) -> bool {
    let n = net.len();
    let q = labels.iter().max().map_or(0, |m| m + 1);
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] != labels[j] {
                continue;
            }
            if net.node_types[i] != net.node_types[j] {
                return false;
            }
            for layer in &net.layers {
                for c in 0..q {
                    let wi: f64 = (0..n)
                        .filter(|&k| labels[k] == c)
                        .map(|k| layer.adjacency[(i, k)])
                        .sum();
                    let wj: f64 = (0..n)
                        .filter(|&k| labels[k] == c)
                        .map(|k| layer.adjacency[(j, k)])
                        .sum();
                    if (wi - wj).abs() > 1e-9 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// All balanced partitions by filtering every set partition.
pub fn brute_force_lattice(net: &Network) -> Vec<Partition> {
    let mut v: Vec<Partition> = all_set_partitions(net.len())
        .into_iter()
        .filter(|l| balanced_by_definition(net, l))
        .map(|l| Partition::from_labels(&l))
        .collect();
    v.sort();
    v
}

/// Random network with a planted equitable partition: every node of cluster
/// `p` receives `r[k][p][q]` arrows of weight `w[k][p][q]` from distinct nodes of
/// cluster `q`, plus a few random type labels respected by the plant.
pub fn planted_network<R: Rng>(rng: &mut R, n: usize, q: usize, layers: usize, density: f64) -> (Network, Partition) {
    let q = q.clamp(1, n);
    let mut labels: Vec<usize> = (0..n).map(|i| if i < q { i } else { rng.gen_range(0..q) }).collect();
    labels.shuffle(rng);
    let plant = Partition::from_labels(&labels);
    let clusters = plant.clusters();
    let mut out_layers = Vec::new();
    for _ in 0..layers {
        let mut a = DMatrix::zeros(n, n);
        for p in 0..plant.num_clusters() {
            for members in &clusters {
                if !rng.gen_bool(density) {
                    continue;
                }
                let count = rng.gen_range(1..=members.len());
                let w = [1.0, 2.0, 0.5, 1.5][rng.gen_range(0..4)];
                for &i in &clusters[p] {
                    let mut src = members.clone();
                    src.shuffle(rng);
                    for &j in &src[..count] {
                        a[(i, j)] += w;
                    }
                }
            }
        }
        out_layers.push(Layer::new(a, 1.0, 0.0, ModelSpec::new("diffusive")));
    }
    // types: constant on clusters, some clusters share a type
    let ntypes = rng.gen_range(1..=plant.num_clusters());
    let mut cluster_type: Vec<usize> = (0..plant.num_clusters())
        .map(|c| if c < ntypes { c + 1 } else { rng.gen_range(1..=ntypes) })
        .collect();
    cluster_type.shuffle(rng);
    let types = (0..n).map(|i| cluster_type[plant.cluster_of(i)]).collect();
    (Network::new(types, out_layers, 1), plant)
}

/// Random unstructured single-type network.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, layers: usize, density: f64) -> Network {
    let ls = (0..layers)
        .map(|_| {
            let a = DMatrix::from_fn(n, n, |i, j| {
                if i != j && rng.gen_bool(density) {
                    [1.0, 2.0][rng.gen_range(0..2)]
                } else {
                    0.0
                }
            });
            Layer::new(a, 1.0, 0.0, ModelSpec::new("diffusive"))
        })
        .collect();
    let types = (0..n).map(|_| rng.gen_range(1..=2)).collect::<Vec<usize>>();
    let types = Partition::from_labels(&types)
        .assignment()
        .iter()
        .map(|t| t + 1)
        .collect();
    Network::new(types, ls, 1)
}

/// Central-difference Jacobian of `f` at `x`, row-major.
pub fn fd_jacobian(f: impl Fn(&[f64], &mut [f64]), x: &[f64], m: usize, h: f64) -> Vec<f64> {
    let n = x.len();
    let mut jac = vec![0.0; m * n];
    let (mut fp, mut fm) = (vec![0.0; m], vec![0.0; m]);
    for c in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += h;
        xm[c] -= h;
        f(&xp, &mut fp);
        f(&xm, &mut fm);
        for r in 0..m {
            jac[r * n + c] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Largest relative deviation `|a - b| / max(1, |b|)`.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Partitions given as one-based cluster lists.
pub fn one_based(n: usize, clusters: &[&[usize]]) -> Partition {
    let v: Vec<Vec<usize>> = clusters.iter().map(|c| c.to_vec()).collect();
    Partition::from_one_based_clusters(n, &v).unwrap()
}

/// Rossler nodes, diffusive coupling on `x` only, no delays: the full network
/// vector field written out directly.
pub struct RosslerNet {
    pub a: DMatrix<f64>,
    pub sigma: f64,
    pub params: (f64, f64, f64),
}

impl RosslerNet {
    pub fn rhs(&self, s: &[f64], out: &mut [f64]) {
        let (a, b, c) = self.params;
        let n = self.a.nrows();
        for i in 0..n {
            let (x, y, z) = (s[3 * i], s[3 * i + 1], s[3 * i + 2]);
            let mut coup = 0.0;
            for j in 0..n {
                coup += self.a[(i, j)] * (s[3 * j] - x);
            }
            out[3 * i] = -y - z + self.sigma * coup;
            out[3 * i + 1] = x + a * y;
            out[3 * i + 2] = b + z * (x - c);
        }
    }

    /// The same network reduced to the clusters of `p`: `R_pq` is the input
    /// weight a node of `p` receives from cluster `q`.
    pub fn quotient(&self, p: &Partition) -> RosslerNet {
        let clusters = p.clusters();
        let q = clusters.len();
        let r = DMatrix::from_fn(q, q, |u, v| {
            clusters[v].iter().map(|&j| self.a[(clusters[u][0], j)]).sum()
        });
        RosslerNet {
            a: r,
            sigma: self.sigma,
            params: self.params,
        }
    }
}

pub fn rk4(f: &dyn Fn(&[f64], &mut [f64]), x: &mut [f64], dt: f64) {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; 4];
    let mut tmp = vec![0.0; n];
    f(x, &mut k[0]);
    for s in 1..4 {
        let h = if s == 3 { dt } else { dt / 2.0 };
        for i in 0..n {
            tmp[i] = x[i] + h * k[s - 1][i];
        }
        f(&tmp, &mut k[s]);
    }
    for i in 0..n {
        x[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

/// Largest transverse exponent from two nearby full-network trajectories:
/// a reference on the synchrony subspace (quotient, lifted) and a copy
/// displaced by `eps`; the displacement is projected off the subspace
/// (cluster means removed) and rescaled every `renorm` steps.
pub fn two_trajectory_mle(
    net: &RosslerNet,
    p: &Partition,
    cluster_init: &[f64],
    dt: f64,
    horizon: f64,
    renorm: usize,
) -> f64 {
    let quot = net.quotient(p);
    let n = net.a.nrows();
    let clusters = p.clusters();
    let eps = 1e-8;
    let mut s = cluster_init.to_vec();
    let lift = |s: &[f64]| -> Vec<f64> {
        (0..n)
            .flat_map(|i| s[3 * p.cluster_of(i)..3 * p.cluster_of(i) + 3].to_vec())
            .collect()
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut d: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let project = |d: &mut [f64]| {
        for c in &clusters {
            for k in 0..3 {
                let mean = c.iter().map(|&i| d[3 * i + k]).sum::<f64>() / c.len() as f64;
                for &i in c {
                    d[3 * i + k] -= mean;
                }
            }
        }
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
    };
    project(&mut d);
    let base = lift(&s);
    let mut x: Vec<f64> = base.iter().zip(&d).map(|(b, v)| b + eps * v).collect();
    let steps = (horizon / dt).round() as usize;
    let start = steps / 2;
    let mut sum = 0.0;
    let mut t_acc = 0.0;
    let fq = |a: &[f64], o: &mut [f64]| quot.rhs(a, o);
    let ff = |a: &[f64], o: &mut [f64]| net.rhs(a, o);
    for step in 1..=steps {
        rk4(&fq, &mut s, dt);
        rk4(&ff, &mut x, dt);
        if step % renorm == 0 {
            let r = lift(&s);
            let mut diff: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a - b).collect();
            for c in &clusters {
                for k in 0..3 {
                    let mean = c.iter().map(|&i| diff[3 * i + k]).sum::<f64>() / c.len() as f64;
                    for &i in c {
                        diff[3 * i + k] -= mean;
                    }
                }
            }
            let g = diff.iter().map(|v| v * v).sum::<f64>().sqrt() / eps;
            if step > start {
                sum += g.ln();
                t_acc += renorm as f64 * dt;
            }
            x = r.iter().zip(&diff).map(|(b, v)| b + v / g).collect();
        }
    }
    sum / t_acc
}
