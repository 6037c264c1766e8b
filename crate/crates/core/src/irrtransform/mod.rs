//! The irreducible transform `T`, the transformed layers `B^k = T A^k T^T`,
//! transverse block detection and cluster dependency classification.

pub mod ordering;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::breaking::{breaking_vectors_from, BreakingVector, Pattern};
use crate::coloring::{is_balanced, Partition};
use crate::error::{Error, Result};
use crate::isslattice::PartitionLattice;
use crate::netmodel::Network;

use ordering::{connected_components, reachable, reverse_cuthill_mckee, strongly_connected_components};

/// Entries of `sum_k |B^k_perp|` at or below this are structural zeros.
pub const BLOCK_TOL: f64 = 1e-9;
/// Relative tolerance of the zero transverse/parallel block.
pub const ZERO_BLOCK_TOL: f64 = 1e-12;
const GS_TOL: f64 = 1e-9;

/// Orthonormal rows spanning the coordinates of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterBasis {
    pub cluster: usize,
    /// First row is the parallel row; the rest are transverse.
    pub rows: Vec<Vec<f64>>,
    /// Pattern each transverse row was realized from (`None` for fallback rows).
    pub sources: Vec<Option<Pattern>>,
    pub warning: Option<String>,
}

/// Patterns of cluster `q` in selection order: lowest intertwining index,
/// then most frequent, then lexicographic.
pub fn ranked_patterns(vectors: &[BreakingVector], q: usize) -> Vec<Pattern> {
    let mut stats: BTreeMap<Pattern, (usize, usize)> = BTreeMap::new();
    for b in vectors.iter().filter(|b| b.cluster == q) {
        let e = stats.entry(b.pattern.clone()).or_insert((usize::MAX, 0));
        e.0 = e.0.min(b.index);
        e.1 += 1;
    }
    let mut ranked: Vec<(Pattern, usize, usize)> = stats.into_iter().map(|(p, (i, f))| (p, i, f)).collect();
    ranked.sort_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
    ranked.into_iter().map(|(p, _, _)| p).collect()
}

pub fn build_cluster_basis(base: &Partition, q: usize, vectors: &[BreakingVector]) -> ClusterBasis {
    basis_from_patterns(base, q, &ranked_patterns(vectors, q))
}

/// Realizes the given patterns, in order, as orthonormal zero-sum rows on cluster `q`.
pub fn basis_from_patterns(base: &Partition, q: usize, patterns: &[Pattern]) -> ClusterBasis {
    let n = base.len();
    let members = &base.clusters()[q];
    let nq = members.len();
    let mut parallel = vec![0.0; n];
    for &i in members {
        parallel[i] = 1.0 / (nq as f64).sqrt();
    }
    let mut rows = vec![parallel];
    let mut sources = vec![];
    for pattern in patterns {
        for sub in pattern.subclusters() {
            if rows.len() == nq {
                break;
            }
            let mut v = vec![0.0; n];
            for &i in &sub {
                v[i] = 1.0;
            }
            if let Some(u) = orthonormalize(&v, &rows) {
                rows.push(u);
                sources.push(Some(pattern.clone()));
            }
        }
    }
    let mut warning = None;
    if rows.len() < nq {
        warning = Some(format!(
            "cluster {}: breaking patterns span only {} of {} transverse directions; completed with coordinate vectors",
            q + 1,
            rows.len() - 1,
            nq - 1
        ));
        for &i in members {
            if rows.len() == nq {
                break;
            }
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            if let Some(u) = orthonormalize(&v, &rows) {
                rows.push(u);
                sources.push(None);
            }
        }
    }
    ClusterBasis {
        cluster: q,
        rows,
        sources,
        warning,
    }
}

/// Gram-Schmidt (applied twice) of `v` against `rows`; sign fixed so the
/// first nonzero entry is positive.
fn orthonormalize(v: &[f64], rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let scale = dot(v, v).sqrt();
    let mut u = v.to_vec();
    for _ in 0..2 {
        for r in rows {
            let c = dot(&u, r);
            u.iter_mut().zip(r).for_each(|(x, y)| *x -= c * y);
        }
    }
    let norm = dot(&u, &u).sqrt();
    if norm <= GS_TOL * scale {
        return None;
    }
    u.iter_mut().for_each(|x| *x /= norm);
    if let Some(first) = u.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
    // clean up rounding residue on the zero pattern
    u.iter_mut().for_each(|x| {
        if x.abs() < 1e-15 {
            *x = 0.0
        }
    });
    Some(u)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockShape {
    /// One strongly connected piece: no triangular ordering exists.
    Irreducible,
    /// Several strongly connected pieces in upper-triangular order.
    UpperTriangular,
}

/// A diagonal block of the transverse part of every `B^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransverseBlock {
    /// Row indices into `T` (all `>= Q`), in diagonal order.
    pub rows: Vec<usize>,
    /// Strongly connected pieces in diagonal order; each is an irreducible sub-block.
    pub pieces: Vec<Vec<usize>>,
    pub shape: BlockShape,
    /// Clusters owning the rows, ascending.
    pub clusters: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TransformResult {
    pub base: Partition,
    pub t: DMatrix<f64>,
    /// Cluster of each row of `T`.
    pub row_cluster: Vec<usize>,
    pub b: Vec<DMatrix<f64>>,
    pub blocks: Vec<TransverseBlock>,
    pub warnings: Vec<String>,
}

impl TransformResult {
    pub fn num_parallel(&self) -> usize {
        self.base.num_clusters()
    }

    pub fn num_transverse(&self) -> usize {
        self.t.nrows() - self.num_parallel()
    }

    /// Irreducible sub-blocks (the units of stability analysis), in diagonal order.
    pub fn pieces(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().flat_map(|b| b.pieces.iter().cloned()).collect()
    }

    /// `sum_k |B^k|` restricted to transverse rows and columns.
    pub fn transverse_support(&self) -> DMatrix<f64> {
        let q = self.num_parallel();
        let m = self.num_transverse();
        let mut s = DMatrix::zeros(m, m);
        for b in &self.b {
            s += b.view((q, q), (m, m)).abs();
        }
        s
    }

    /// `max |T T^T - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.t.nrows();
        (&self.t * self.t.transpose() - DMatrix::<f64>::identity(n, n)).amax()
    }
}

/// Transform on the minimal balanced coloring.
pub fn build_transform(net: &Network, lattice: &PartitionLattice) -> Result<TransformResult> {
    build_transform_from(net, lattice, lattice.minimal())
}

/// Transform on an arbitrary balanced `base`, using the lattice members that refine it.
pub fn build_transform_from(net: &Network, lattice: &PartitionLattice, base: &Partition) -> Result<TransformResult> {
    if !is_balanced(net, base) {
        return Err(Error::Unbalanced);
    }
    let vectors = breaking_vectors_from(lattice, base);
    let bases: Vec<ClusterBasis> = (0..base.num_clusters())
        .map(|q| build_cluster_basis(base, q, &vectors))
        .collect();
    assemble_t(net, base, &bases)
}

/// Stacks the cluster bases and orders the transverse rows into blocks.
pub fn assemble_t(net: &Network, base: &Partition, bases: &[ClusterBasis]) -> Result<TransformResult> {
    let n = net.len();
    let q = base.num_clusters();
    let mut rows: Vec<(usize, &Vec<f64>)> = bases.iter().map(|b| (b.cluster, &b.rows[0])).collect();
    for b in bases {
        rows.extend(b.rows[1..].iter().map(|r| (b.cluster, r)));
    }
    if rows.len() != n {
        return Err(Error::Dimension(format!(
            "bases provide {} rows for {n} nodes",
            rows.len()
        )));
    }
    let t0 = DMatrix::from_fn(n, n, |r, c| rows[r].1[c]);
    let b0 = transform_adjacency(net, &t0, q)?;
    let m = n - q;
    let support = |r: usize, c: usize| b0.iter().map(|b| b[(q + r, q + c)].abs()).sum::<f64>();
    let mut directed = vec![Vec::new(); m];
    let mut undirected = vec![Vec::new(); m];
    for r in 0..m {
        for c in 0..m {
            if r != c && support(r, c) > BLOCK_TOL {
                directed[r].push(c);
                undirected[r].push(c);
                undirected[c].push(r);
            }
        }
    }
    for l in &mut undirected {
        l.sort_unstable();
        l.dedup();
    }
    let rcm = reverse_cuthill_mckee(&undirected);
    let mut pos = vec![0; m];
    for (p, &v) in rcm.iter().enumerate() {
        pos[v] = p;
    }
    let mut comps = connected_components(&undirected);
    comps.sort_by_key(|c| (std::cmp::Reverse(c.len()), c.iter().map(|&v| pos[v]).min()));

    let mut order: Vec<usize> = Vec::with_capacity(m);
    let mut local_blocks: Vec<Vec<Vec<usize>>> = Vec::new();
    for comp in &comps {
        let pieces = order_component(comp, &directed, &pos);
        order.extend(pieces.iter().flatten().copied());
        local_blocks.push(pieces);
    }
    let mut final_rows: Vec<usize> = (0..q).collect();
    final_rows.extend(order.iter().map(|&r| q + r));
    let mut new_pos = vec![0; m];
    for (p, &r) in order.iter().enumerate() {
        new_pos[r] = q + p;
    }
    let t = DMatrix::from_fn(n, n, |r, c| t0[(final_rows[r], c)]);
    let row_cluster: Vec<usize> = final_rows.iter().map(|&r| rows[r].0).collect();
    let b = transform_adjacency(net, &t, q)?;
    let blocks = local_blocks
        .into_iter()
        .map(|pieces| {
            let pieces: Vec<Vec<usize>> = pieces.iter().map(|p| p.iter().map(|&r| new_pos[r]).collect()).collect();
            let rows: Vec<usize> = pieces.iter().flatten().copied().collect();
            let mut clusters: Vec<usize> = rows.iter().map(|&r| row_cluster[r]).collect();
            clusters.sort_unstable();
            clusters.dedup();
            TransverseBlock {
                shape: if pieces.len() > 1 {
                    BlockShape::UpperTriangular
                } else {
                    BlockShape::Irreducible
                },
                rows,
                pieces,
                clusters,
            }
        })
        .collect();
    Ok(TransformResult {
        base: base.clone(),
        t,
        row_cluster,
        b,
        blocks,
        warnings: bases.iter().filter_map(|b| b.warning.clone()).collect(),
    })
}

/// Strongly connected pieces of one component, dependents before the rows
/// they depend on; rows within a piece follow the RCM positions.
fn order_component(comp: &[usize], directed: &[Vec<usize>], pos: &[usize]) -> Vec<Vec<usize>> {
    let local: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let sub: Vec<Vec<usize>> = comp
        .iter()
        .map(|v| directed[*v].iter().filter_map(|w| local.get(w).copied()).collect())
        .collect();
    let sccs = strongly_connected_components(&sub);
    let mut scc_of = vec![0; comp.len()];
    for (s, members) in sccs.iter().enumerate() {
        for &v in members {
            scc_of[v] = s;
        }
    }
    let k = sccs.len();
    let mut indeg = vec![0usize; k];
    let mut succ = vec![Vec::new(); k];
    for (v, ws) in sub.iter().enumerate() {
        for &w in ws {
            let (a, b) = (scc_of[v], scc_of[w]);
            if a != b && !succ[a].contains(&b) {
                succ[a].push(b);
                indeg[b] += 1;
            }
        }
    }
    let key = |s: usize| sccs[s].iter().map(|&v| pos[comp[v]]).min().unwrap_or(usize::MAX);
    let mut done = vec![false; k];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let s = (0..k)
            .filter(|&s| !done[s] && indeg[s] == 0)
            .min_by_key(|&s| key(s))
            .expect("condensation is acyclic");
        done[s] = true;
        for &t in &succ[s] {
            indeg[t] -= 1;
        }
        let mut piece: Vec<usize> = sccs[s].iter().map(|&v| comp[v]).collect();
        piece.sort_by_key(|&v| pos[v]);
        out.push(piece);
    }
    out
}

/// `B^k = T A^k T^T` for every layer, checking that transverse rows do not
/// see parallel columns.
pub fn transform_adjacency(net: &Network, t: &DMatrix<f64>, num_parallel: usize) -> Result<Vec<DMatrix<f64>>> {
    let n = net.len();
    let mut out = Vec::with_capacity(net.num_layers());
    for (k, layer) in net.layers.iter().enumerate() {
        let b = t * &layer.adjacency * t.transpose();
        let tol = ZERO_BLOCK_TOL * layer.max_abs();
        for r in num_parallel..n {
            for c in 0..num_parallel {
                if b[(r, c)].abs() > tol {
                    return Err(Error::TransformInvariant {
                        layer: k + 1,
                        row: r + 1,
                        col: c + 1,
                        value: b[(r, c)],
                    });
                }
            }
        }
        out.push(b);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Independent,
    /// `dependent` needs `on` to be synchronized, not the other way round.
    OneWay {
        dependent: usize,
        on: usize,
    },
    Intertwined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterVerdict {
    pub cluster: usize,
    /// No transverse directions (single node).
    pub trivial: bool,
    pub depends_on: Vec<usize>,
    pub intertwined_with: Vec<usize>,
}

impl ClusterVerdict {
    pub fn is_independent(&self) -> bool {
        self.depends_on.is_empty() && self.intertwined_with.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// `depends[p][q]`: some transverse row of `p` is driven, directly or
    /// through other rows, by a row of `q`.
    pub depends: Vec<Vec<bool>>,
    pub clusters: Vec<ClusterVerdict>,
}

impl Classification {
    pub fn relation(&self, p: usize, q: usize) -> Relation {
        match (self.depends[p][q], self.depends[q][p]) {
            (true, true) => Relation::Intertwined,
            (true, false) => Relation::OneWay { dependent: p, on: q },
            (false, true) => Relation::OneWay { dependent: q, on: p },
            (false, false) => Relation::Independent,
        }
    }

    /// Relation of every unordered pair `p < q`.
    pub fn pairs(&self) -> Vec<(usize, usize, Relation)> {
        let n = self.depends.len();
        (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| (p, q, self.relation(p, q)))
            .collect()
    }
}

pub fn classify(result: &TransformResult) -> Classification {
    let q = result.num_parallel();
    let m = result.num_transverse();
    let s = result.transverse_support();
    let adj: Vec<Vec<usize>> = (0..m)
        .map(|r| (0..m).filter(|&c| c != r && s[(r, c)] > BLOCK_TOL).collect())
        .collect();
    let mut depends = vec![vec![false; q]; q];
    for r in 0..m {
        let p = result.row_cluster[q + r];
        for (c, hit) in reachable(&adj, r).into_iter().enumerate() {
            let other = result.row_cluster[q + c];
            if hit && other != p {
                depends[p][other] = true;
            }
        }
    }
    let sizes = result.base.cluster_sizes();
    let clusters = (0..q)
        .map(|p| ClusterVerdict {
            cluster: p,
            trivial: sizes[p] == 1,
            depends_on: (0..q).filter(|&o| depends[p][o] && !depends[o][p]).collect(),
            intertwined_with: (0..q).filter(|&o| depends[p][o] && depends[o][p]).collect(),
        })
        .collect();
    Classification { depends, clusters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isslattice::enumerate_balanced_partitions;
    use crate::netmodel::{Layer, ModelSpec};

    fn cycle(n: usize) -> Network {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, (i + n - 1) % n)] = 1.0;
        }
        Network::new(
            vec![1; n],
            vec![Layer::new(a, 1.0, 0.0, ModelSpec::new("diffusive"))],
            1,
        )
    }

    #[test]
    fn single_cluster_gives_one_parallel_row() {
        let net = cycle(4);
        let lat = enumerate_balanced_partitions(&net).unwrap();
        let tr = build_transform(&net, &lat).unwrap();
        assert_eq!(tr.num_parallel(), 1);
        assert!(tr.orthonormality_error() < 1e-12);
        for c in 0..4 {
            assert!((tr.t[(0, c)] - 0.5).abs() < 1e-15);
        }
        assert_eq!(tr.pieces().iter().map(Vec::len).sum::<usize>(), 3);
    }

    #[test]
    fn zero_adjacency_gives_zero_b() {
        let net = Network::new(
            vec![1, 1, 1],
            vec![Layer::new(DMatrix::zeros(3, 3), 1.0, 0.0, ModelSpec::new("diffusive"))],
            1,
        );
        let lat = enumerate_balanced_partitions(&net).unwrap();
        let tr = build_transform(&net, &lat).unwrap();
        assert_eq!(tr.b[0].amax(), 0.0);
        let cls = classify(&tr);
        assert!(cls.clusters.iter().all(ClusterVerdict::is_independent));
    }

    #[test]
    fn unbalanced_rows_are_caught() {
        let net = cycle(3);
        let mut t = DMatrix::<f64>::identity(3, 3);
        t[(0, 0)] = 0.0;
        t[(0, 1)] = 1.0;
        t[(1, 0)] = 1.0;
        t[(1, 1)] = 0.0;
        // parallel row e2, transverse rows e1, e3: not a balanced basis
        assert!(matches!(
            transform_adjacency(&net, &t, 1),
            Err(Error::TransformInvariant { .. })
        ));
    }
}
