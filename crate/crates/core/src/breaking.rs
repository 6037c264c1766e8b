//! Breaking vectors and intertwining indices.

use std::collections::BTreeMap;
use std::fmt;

use crate::coloring::Partition;
use crate::isslattice::PartitionLattice;

/// Length-N symbolic row: 0 outside the broken cluster, 1, 2, ... for its
/// sub-clusters in order of first appearance (printed as a, b, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(Vec<usize>);

impl Pattern {
    /// Pattern of `fine` on the nodes of `cluster`.
    pub fn of(n: usize, cluster: &[usize], fine: &Partition) -> Self {
        let mut row = vec![0; n];
        for (&i, s) in cluster.iter().zip(fine.restrict(cluster)) {
            row[i] = s + 1;
        }
        Pattern(row)
    }

    pub fn from_symbols(row: Vec<usize>) -> Self {
        Pattern(row)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn num_subclusters(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Nodes of each sub-cluster, in symbol order.
    pub fn subclusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_subclusters()];
        for (i, &s) in self.0.iter().enumerate() {
            if s > 0 {
                out[s - 1].push(i);
            }
        }
        out
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self
            .0
            .iter()
            .map(|&s| match s {
                0 => "0".to_string(),
                s if s <= 26 => char::from(b'a' + (s - 1) as u8).to_string(),
                s => format!("s{s}"),
            })
            .collect();
        write!(f, "[{}]", cells.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BreakingVector {
    /// Broken cluster of the base partition (0-based).
    pub cluster: usize,
    /// Index of the finer partition in the lattice.
    pub partition: usize,
    pub pattern: Pattern,
    /// Number of other base clusters that also break.
    pub index: usize,
    /// Those other clusters.
    pub also_broken: Vec<usize>,
}

/// Breaking vectors relative to the lattice's minimal balanced coloring.
pub fn breaking_vectors(lattice: &PartitionLattice) -> Vec<BreakingVector> {
    breaking_vectors_from(lattice, lattice.minimal())
}

/// Breaking vectors of every lattice member refining `base`, sorted by
/// (cluster, partition).
pub fn breaking_vectors_from(lattice: &PartitionLattice, base: &Partition) -> Vec<BreakingVector> {
    let clusters = base.clusters();
    let n = base.len();
    let mut out = Vec::new();
    for (j, fine) in lattice.partitions().iter().enumerate() {
        if fine == base || !fine.refines(base) {
            continue;
        }
        let broken: Vec<usize> = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|&i| fine.cluster_of(i) != fine.cluster_of(c[0])))
            .map(|(q, _)| q)
            .collect();
        for &q in &broken {
            let also: Vec<usize> = broken.iter().copied().filter(|&p| p != q).collect();
            out.push(BreakingVector {
                cluster: q,
                partition: j,
                pattern: Pattern::of(n, &clusters[q], fine),
                index: also.len(),
                also_broken: also,
            });
        }
    }
    out.sort_by_key(|b| (b.cluster, b.partition));
    out
}

/// Occurrence count of each pattern of cluster `q`.
pub fn pattern_frequency(vectors: &[BreakingVector], q: usize) -> BTreeMap<Pattern, usize> {
    let mut m = BTreeMap::new();
    for b in vectors.iter().filter(|b| b.cluster == q) {
        *m.entry(b.pattern.clone()).or_insert(0) += 1;
    }
    m
}

/// `dep[p][q]`: every breaking of cluster `q` also breaks cluster `p`
/// (and `q` can break at all), i.e. `p` cannot stay synchronized without `q`.
pub fn combinatorial_dependence(vectors: &[BreakingVector], num_clusters: usize) -> Vec<Vec<bool>> {
    let mut dep = vec![vec![false; num_clusters]; num_clusters];
    for q in 0..num_clusters {
        let of_q: Vec<&BreakingVector> = vectors.iter().filter(|b| b.cluster == q).collect();
        if of_q.is_empty() {
            continue;
        }
        for (p, row) in dep.iter_mut().enumerate() {
            if p != q {
                row[q] = of_q.iter().all(|b| b.also_broken.contains(&p));
            }
        }
    }
    dep
}
