//! Enumeration of all balanced partitions (invariant synchrony subspaces).
//!
//! Every balanced partition refines the minimal balanced coloring, so the
//! search fixes the sub-partition of one minimal cluster at a time and prunes
//! any choice that the balanced condition would force to split further.

use crate::coloring::{minimal_balanced_coloring, Partition, Refiner};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::netmodel::Network;

pub const DEFAULT_CAP: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct LatticeOptions {
    /// Largest minimal-coloring cluster the search accepts.
    pub cap: usize,
    pub execution: Execution,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            execution: Execution::Auto,
        }
    }
}

/// All balanced partitions of a network, coarsest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionLattice {
    partitions: Vec<Partition>,
}

impl PartitionLattice {
    /// Sorts into canonical order (cluster count, then assignment) and drops duplicates.
    pub fn from_partitions(mut partitions: Vec<Partition>) -> Self {
        partitions.sort();
        partitions.dedup();
        Self { partitions }
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    /// The minimal balanced coloring.
    pub fn minimal(&self) -> &Partition {
        &self.partitions[0]
    }

    pub fn get(&self, index: usize) -> Option<&Partition> {
        self.partitions.get(index)
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.partitions.binary_search(p).ok()
    }

    /// Covering pairs `(i, j)`: partition `j` refines `i` with nothing strictly between.
    pub fn refinement_edges(&self) -> Vec<(usize, usize)> {
        let n = self.partitions.len();
        let mut edges = Vec::new();
        for j in 0..n {
            let fine = &self.partitions[j];
            let above: Vec<usize> = (0..n)
                .filter(|&i| {
                    let coarse = &self.partitions[i];
                    i != j && coarse.num_clusters() < fine.num_clusters() && fine.refines(coarse)
                })
                .collect();
            for &i in &above {
                let covered = above.iter().any(|&k| {
                    k != i
                        && self.partitions[k].num_clusters() > self.partitions[i].num_clusters()
                        && self.partitions[k].refines(&self.partitions[i])
                });
                if !covered {
                    edges.push((i, j));
                }
            }
        }
        edges.sort_unstable();
        edges
    }

    /// Covering pairs, or `None` when the lattice has more than `limit` members.
    pub fn refinement_edges_limited(&self, limit: usize) -> Option<Vec<(usize, usize)>> {
        (self.len() <= limit).then(|| self.refinement_edges())
    }
}

pub fn refines(a: &Partition, b: &Partition) -> bool {
    a.refines(b)
}

pub fn enumerate_balanced_partitions(net: &Network) -> Result<PartitionLattice> {
    enumerate_with(net, LatticeOptions::default())
}

pub fn enumerate_with(net: &Network, opts: LatticeOptions) -> Result<PartitionLattice> {
    let pmin = minimal_balanced_coloring(net);
    let largest = pmin.cluster_sizes().into_iter().max().unwrap_or(0);
    if net.len() > opts.cap && largest > opts.cap {
        return Err(Error::SizeCap {
            size: largest,
            cap: opts.cap,
        });
    }
    let refiner = Refiner::new(net);
    let mut order = pmin.clusters();
    // among equal sizes, clusters driven by fewer other clusters go first:
    // splitting a driver forces splits downstream, which prunes the search
    let drivers = driver_counts(net, &pmin);
    order.sort_by_key(|c| (c.len(), drivers[pmin.cluster_of(c[0])], c[0]));
    // singleton clusters never split
    order.retain(|c| c.len() > 1);
    let protected = (0..order.len())
        .map(|d| {
            let mut mask = vec![false; refiner.len()];
            order[..=d].iter().flatten().for_each(|&i| mask[i] = true);
            mask
        })
        .collect();
    let search = Search {
        refiner: &refiner,
        order,
        protected,
    };
    if search.order.is_empty() {
        return Ok(PartitionLattice::from_partitions(vec![pmin]));
    }
    let current = pmin.restrict(&search.order[0]);
    let mut first = Vec::new();
    each_refinement(&current, &mut |pi| first.extend(search.accept(0, &pmin, &current, pi)));
    let found: Vec<Vec<Partition>> = opts.execution.map(first, |u| {
        let mut out = Vec::new();
        search.descend(1, u, &mut out);
        out
    });
    Ok(PartitionLattice::from_partitions(found.into_iter().flatten().collect()))
}

/// Number of other clusters of `p` with an arrow into each cluster.
fn driver_counts(net: &Network, p: &Partition) -> Vec<usize> {
    let q = p.num_clusters();
    let mut into = vec![vec![false; q]; q];
    for layer in &net.layers {
        for i in 0..net.len() {
            for j in 0..net.len() {
                let (ci, cj) = (p.cluster_of(i), p.cluster_of(j));
                if ci != cj && layer.adjacency[(i, j)] != 0.0 {
                    into[ci][cj] = true;
                }
            }
        }
    }
    into.iter().map(|row| row.iter().filter(|&&b| b).count()).collect()
}

struct Search<'a> {
    refiner: &'a Refiner,
    order: Vec<Vec<usize>>,
    /// Nodes of the clusters fixed up to and including each depth.
    protected: Vec<Vec<bool>>,
}

impl Search<'_> {
    fn descend(&self, depth: usize, u: Partition, out: &mut Vec<Partition>) {
        if depth == self.order.len() {
            out.push(u);
            return;
        }
        let current = u.restrict(&self.order[depth]);
        each_refinement(&current, &mut |pi| {
            if let Some(v) = self.accept(depth, &u, &current, pi) {
                self.descend(depth + 1, v, out);
            }
        });
    }

    /// Applies `pi` to the current cluster; returns the forced balanced partition
    /// if it keeps `pi` and every earlier cluster intact.
    fn accept(&self, depth: usize, u: &Partition, current: &[usize], pi: &[usize]) -> Option<Partition> {
        let cluster = &self.order[depth];
        if current == pi {
            return Some(u.clone());
        }
        let mut labels = u.assignment().to_vec();
        let offset = u.num_clusters();
        for (idx, &i) in cluster.iter().enumerate() {
            labels[i] = offset + pi[idx];
        }
        let x = Partition::from_bounded_labels(&labels, offset + cluster.len());
        let last = depth + 1 == self.order.len();
        self.refiner
            .refine_after_change(&x, cluster, &self.protected[depth], last)
    }
}

/// Calls `visit` with every canonical labeling of a cluster that refines
/// its current labels `blocks`.
fn each_refinement(blocks: &[usize], visit: &mut dyn FnMut(&[usize])) {
    let mut labels = Vec::with_capacity(blocks.len());
    // sub-labels already opened inside each block
    let mut opened: Vec<Vec<usize>> = vec![Vec::new(); blocks.iter().max().map_or(0, |m| m + 1)];
    grow(blocks, &mut labels, &mut opened, 0, visit);
}

/// Restricted-growth enumeration of set partitions refining `blocks`.
fn grow(
    blocks: &[usize],
    labels: &mut Vec<usize>,
    opened: &mut [Vec<usize>],
    next: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    let t = labels.len();
    if t == blocks.len() {
        // labels open in order, so they are already canonical
        visit(labels);
        return;
    }
    let b = blocks[t];
    for idx in 0..opened[b].len() {
        labels.push(opened[b][idx]);
        grow(blocks, labels, opened, next, visit);
        labels.pop();
    }
    opened[b].push(next);
    labels.push(next);
    grow(blocks, labels, opened, next + 1, visit);
    labels.pop();
    opened[b].pop();
}
