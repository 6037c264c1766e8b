//! Balanced partitions, the coarsest balanced refinement and quotient networks.

use std::cell::RefCell;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::netmodel::{ModelSpec, Network};

/// Absolute tolerance when comparing summed in-weights.
pub const WEIGHT_TOL: f64 = 1e-9;

/// A partition of the node set with canonical 0-based cluster labels:
/// cluster 0 holds node 0, and labels appear in increasing order of first occurrence.
///
/// The derived ordering sorts by cluster count first, then lexicographically
/// by assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    q: usize,
    assignment: Vec<usize>,
}

impl Partition {
    /// Builds a partition from arbitrary labels, canonicalizing them.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self {
            q: map.len(),
            assignment,
        }
    }

    /// `from_labels` for labels known to lie in `0..bound`.
    pub(crate) fn from_bounded_labels(labels: &[usize], bound: usize) -> Self {
        let mut map = vec![usize::MAX; bound];
        let mut q = 0;
        let assignment = labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = q;
                    q += 1;
                }
                map[l]
            })
            .collect();
        Self { q, assignment }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            q: usize::from(n > 0),
            assignment: vec![0; n],
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            q: n,
            assignment: (0..n).collect(),
        }
    }

    /// Builds a partition from 0-based clusters, which must cover `0..n` exactly once.
    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &i in members {
                if i >= n || labels[i] != usize::MAX {
                    return Err(Error::Config(format!("node {} listed twice or out of range", i + 1)));
                }
                labels[i] = c;
            }
        }
        if labels.contains(&usize::MAX) || clusters.iter().any(|c| c.is_empty()) {
            return Err(Error::Config("clusters must be nonempty and cover every node".into()));
        }
        Ok(Self::from_labels(&labels))
    }

    /// Same as [`from_clusters`](Self::from_clusters) with 1-based node labels.
    pub fn from_one_based_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let zero: Vec<Vec<usize>> = clusters
            .iter()
            .map(|c| c.iter().map(|&i| i.wrapping_sub(1)).collect())
            .collect();
        Self::from_clusters(n, &zero)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.q
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    /// 1-based cluster label per node.
    pub fn to_one_based(&self) -> Vec<usize> {
        self.assignment.iter().map(|c| c + 1).collect()
    }

    /// Members of each cluster in increasing node order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.q];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.q];
        for &c in &self.assignment {
            out[c] += 1;
        }
        out
    }

    /// True iff every cluster of `self` lies inside a cluster of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        assert_eq!(self.len(), other.len(), "partitions over different node sets");
        let mut image = vec![usize::MAX; self.q];
        for (i, &c) in self.assignment.iter().enumerate() {
            let o = other.assignment[i];
            if image[c] == usize::MAX {
                image[c] = o;
            } else if image[c] != o {
                return false;
            }
        }
        true
    }

    /// Coarsest common refinement.
    pub fn meet(&self, other: &Partition) -> Partition {
        let pairs: Vec<(usize, usize)> = self
            .assignment
            .iter()
            .zip(&other.assignment)
            .map(|(&a, &b)| (a, b))
            .collect();
        Partition::from_labels(&pairs)
    }

    /// Finest common coarsening.
    pub fn join(&self, other: &Partition) -> Partition {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for part in [self, other] {
            let mut first = vec![usize::MAX; part.q];
            for i in 0..n {
                let c = part.assignment[i];
                if first[c] == usize::MAX {
                    first[c] = i;
                } else {
                    let (a, b) = (find(&mut parent, first[c]), find(&mut parent, i));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        Partition::from_labels(&roots)
    }

    /// Canonical labels of the restriction to `nodes` (in the given order).
    pub fn restrict(&self, nodes: &[usize]) -> Vec<usize> {
        let labels: Vec<usize> = nodes.iter().map(|&i| self.assignment[i]).collect();
        Partition::from_bounded_labels(&labels, self.q).assignment
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .clusters()
            .iter()
            .map(|c| {
                let inner: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Sparse in-neighbour lists of every layer, reused across many refinement calls.
#[derive(Debug, Clone)]
pub struct Refiner {
    n: usize,
    /// `rows[k][i]` lists `(j, w)` with `A^k[i][j] = w != 0`.
    rows: Vec<Vec<Vec<(usize, f64)>>>,
    /// `outs[j]` lists the nodes hearing `j` in any layer.
    outs: Vec<Vec<usize>>,
    types: Partition,
}

impl Refiner {
    pub fn new(net: &Network) -> Self {
        let n = net.len();
        let rows: Vec<Vec<Vec<(usize, f64)>>> = net
            .layers
            .iter()
            .map(|l| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .filter_map(|j| {
                                let w = l.adjacency[(i, j)];
                                (w != 0.0).then_some((j, w))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut outs = vec![Vec::new(); n];
        for layer in &rows {
            for (i, row) in layer.iter().enumerate() {
                for &(j, _) in row {
                    outs[j].push(i);
                }
            }
        }
        for o in &mut outs {
            o.sort_unstable();
            o.dedup();
        }
        Self {
            n,
            rows,
            outs,
            types: Partition::from_labels(&net.node_types),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn type_partition(&self) -> &Partition {
        &self.types
    }

    fn signatures(&self, assignment: &[usize], q: usize) -> Vec<f64> {
        let mut sig = Vec::new();
        self.signatures_into(assignment, q, &mut sig);
        sig
    }

    fn signatures_into(&self, assignment: &[usize], q: usize, sig: &mut Vec<f64>) {
        let width = self.rows.len() * q;
        sig.clear();
        sig.resize(self.n * width, 0.0);
        for (k, layer) in self.rows.iter().enumerate() {
            for (i, row) in layer.iter().enumerate() {
                let base = i * width + k * q;
                for &(j, w) in row {
                    sig[base + assignment[j]] += w;
                }
            }
        }
    }

    /// True iff `p` respects node types and equalizes in-weights within every cluster.
    pub fn is_balanced(&self, p: &Partition) -> bool {
        if !p.refines(&self.types) {
            return false;
        }
        let q = p.q;
        let width = self.rows.len() * q;
        let sig = self.signatures(&p.assignment, q);
        let mut rep = vec![usize::MAX; q];
        for i in 0..self.n {
            let c = p.assignment[i];
            if rep[c] == usize::MAX {
                rep[c] = i;
            } else if !close(
                &sig[i * width..(i + 1) * width],
                &sig[rep[c] * width..(rep[c] + 1) * width],
            ) {
                return false;
            }
        }
        true
    }

    /// Splits clusters once by in-weight signature; returns the new partition.
    fn split_once(&self, p: &Partition) -> Partition {
        let q = p.q;
        let width = self.rows.len() * q;
        let sig = self.signatures(&p.assignment, q);
        // groups[c] = (representative node, new label)
        let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); q];
        let mut next = 0;
        let mut out = vec![0; self.n];
        for i in 0..self.n {
            let c = p.assignment[i];
            let s = &sig[i * width..(i + 1) * width];
            let found = groups[c]
                .iter()
                .find(|(r, _)| close(s, &sig[r * width..(r + 1) * width]))
                .map(|&(_, l)| l);
            out[i] = match found {
                Some(l) => l,
                None => {
                    groups[c].push((i, next));
                    next += 1;
                    next - 1
                }
            };
        }
        Partition {
            q: next,
            assignment: out,
        }
    }

    /// Coarsest balanced refinement of `start`, or `None` as soon as it
    /// would split a cluster of `start` among the `protected` nodes.
    /// `start` must already respect node types.
    pub fn refinement_keeping(&self, start: &Partition, protected: &[usize]) -> Option<Partition> {
        let mut mask = vec![false; self.n];
        protected.iter().for_each(|&i| mask[i] = true);
        let all: Vec<usize> = (0..self.n).collect();
        self.refine_after_change(start, &all, &mask, false)
    }

    /// Like `refinement_keeping`, for a `start` that differs from some
    /// balanced partition only in the labels of the `changed` nodes. Only
    /// clusters hearing a relabelled node are re-examined. With `check_only`
    /// any split at all gives `None`, so `Some` means `start` is balanced.
    pub(crate) fn refine_after_change(
        &self,
        start: &Partition,
        changed: &[usize],
        protected: &[bool],
        check_only: bool,
    ) -> Option<Partition> {
        SCRATCH.with(|cell| self.refine_in(start, changed, protected, check_only, &mut cell.borrow_mut()))
    }

    fn refine_in(
        &self,
        start: &Partition,
        changed: &[usize],
        protected: &[bool],
        check_only: bool,
        s: &mut Scratch,
    ) -> Option<Partition> {
        let n = self.n;
        let Scratch {
            label,
            seg_start,
            seg_len,
            elems,
            dirty,
            urgent,
            queue,
            entries,
            offsets,
            reps,
            group,
            counts,
            buf,
        } = s;
        label.clear();
        label.extend_from_slice(&start.assignment);
        let mut q = start.q;
        // clusters are contiguous segments of `elems`
        seg_len.clear();
        seg_len.resize(n, 0);
        for &c in label.iter() {
            seg_len[c] += 1;
        }
        seg_start.clear();
        seg_start.resize(n, 0);
        for c in 1..q {
            seg_start[c] = seg_start[c - 1] + seg_len[c - 1];
        }
        elems.clear();
        elems.resize(n, 0);
        // seg_start doubles as the fill cursor, then is rebuilt
        for (i, &c) in label.iter().enumerate() {
            elems[seg_start[c]] = i;
            seg_start[c] += 1;
        }
        for c in 0..q {
            seg_start[c] -= seg_len[c];
        }

        dirty.clear();
        dirty.resize(n, false);
        // clusters with protected nodes go first so rejection stays cheap
        urgent.clear();
        queue.clear();
        let mark =
            |moved: &[usize], label: &[usize], dirty: &mut [bool], urgent: &mut Vec<usize>, queue: &mut Vec<usize>| {
                for &m in moved {
                    for &t in &self.outs[m] {
                        let c = label[t];
                        if !dirty[c] {
                            dirty[c] = true;
                            if protected[t] {
                                urgent.push(c);
                            } else {
                                queue.push(c);
                            }
                        }
                    }
                }
            };
        mark(changed, label, dirty, urgent, queue);

        while let Some(c) = urgent.pop().or_else(|| queue.pop()) {
            dirty[c] = false;
            let (s0, len) = (seg_start[c], seg_len[c]);
            if len < 2 {
                continue;
            }
            entries.clear();
            offsets.clear();
            for &i in &elems[s0..s0 + len] {
                offsets.push(entries.len());
                self.push_signature(i, label, entries);
            }
            offsets.push(entries.len());
            let sig = |m: usize| &entries[offsets[m]..offsets[m + 1]];
            reps.clear();
            group.clear();
            for m in 0..len {
                let g = match reps.iter().position(|&r| same_signature(sig(m), sig(r))) {
                    Some(g) => g,
                    None => {
                        reps.push(m);
                        reps.len() - 1
                    }
                };
                group.push(g);
            }
            if reps.len() == 1 {
                continue;
            }
            if check_only {
                return None;
            }
            let mut seen = None;
            for (m, &i) in elems[s0..s0 + len].iter().enumerate() {
                if protected[i] && *seen.get_or_insert(group[m]) != group[m] {
                    return None;
                }
            }
            // stable reorder of the segment by group; group 0 keeps id `c`
            counts.clear();
            counts.resize(reps.len() + 1, 0);
            for &g in group.iter() {
                counts[g + 1] += 1;
            }
            for g in 1..counts.len() {
                counts[g] += counts[g - 1];
            }
            buf.clear();
            buf.resize(len, 0);
            for (m, &g) in group.iter().enumerate() {
                buf[counts[g]] = elems[s0 + m];
                counts[g] += 1;
            }
            elems[s0..s0 + len].copy_from_slice(buf);
            let first = counts[0];
            seg_len[c] = first;
            for g in 1..reps.len() {
                let from = counts[g - 1];
                seg_start[q] = s0 + from;
                seg_len[q] = counts[g] - from;
                for &i in &elems[s0 + from..s0 + counts[g]] {
                    label[i] = q;
                }
                q += 1;
            }
            mark(&elems[s0 + first..s0 + len], label, dirty, urgent, queue);
        }
        Some(Partition::from_bounded_labels(label, q))
    }

    /// Appends the in-weight signature of node `i` as sorted `(layer * n + cluster, weight)` pairs.
    fn push_signature(&self, i: usize, label: &[usize], entries: &mut Vec<(usize, f64)>) {
        let from = entries.len();
        for (k, layer) in self.rows.iter().enumerate() {
            entries.extend(layer[i].iter().map(|&(j, w)| (k * self.n + label[j], w)));
        }
        let run = &mut entries[from..];
        run.sort_unstable_by_key(|e| e.0);
        let mut len = 0;
        for m in 0..run.len() {
            if len > 0 && run[len - 1].0 == run[m].0 {
                run[len - 1].1 += run[m].1;
            } else {
                run[len] = run[m];
                len += 1;
            }
        }
        entries.truncate(from + len);
    }

    /// Coarsest balanced partition refining `start`.
    pub fn coarsest_refinement(&self, start: &Partition) -> Partition {
        let mut p = start.meet(&self.types);
        loop {
            let next = self.split_once(&p);
            if next.q == p.q {
                return p;
            }
            p = next;
        }
    }
}

/// Reusable buffers for `Refiner::refine_after_change`.
#[derive(Default)]
struct Scratch {
    label: Vec<usize>,
    seg_start: Vec<usize>,
    seg_len: Vec<usize>,
    elems: Vec<usize>,
    dirty: Vec<bool>,
    urgent: Vec<usize>,
    queue: Vec<usize>,
    entries: Vec<(usize, f64)>,
    offsets: Vec<usize>,
    reps: Vec<usize>,
    group: Vec<usize>,
    counts: Vec<usize>,
    buf: Vec<usize>,
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::default();
}

/// Same comparison as `close` on dense rows: missing keys count as zero.
fn same_signature(x: &[(usize, f64)], y: &[(usize, f64)]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let kx = x.get(i).map_or(usize::MAX, |e| e.0);
        let ky = y.get(j).map_or(usize::MAX, |e| e.0);
        let diff = if kx == ky {
            i += 1;
            j += 1;
            x[i - 1].1 - y[j - 1].1
        } else if kx < ky {
            i += 1;
            x[i - 1].1
        } else {
            j += 1;
            y[j - 1].1
        };
        if diff.abs() > WEIGHT_TOL {
            return false;
        }
    }
    true
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= WEIGHT_TOL)
}

pub fn is_balanced(net: &Network, p: &Partition) -> bool {
    p.len() == net.len() && Refiner::new(net).is_balanced(p)
}

/// Coarsest balanced partition refining `start` (and the node-type classes).
pub fn coarsest_balanced_refinement(net: &Network, start: &Partition) -> Partition {
    Refiner::new(net).coarsest_refinement(start)
}

/// The balanced coloring with the fewest clusters.
pub fn minimal_balanced_coloring(net: &Network) -> Partition {
    let refiner = Refiner::new(net);
    let p = refiner.coarsest_refinement(&Partition::uniform(net.len()));
    assert_eq!(refiner.coarsest_refinement(&p), p, "refinement is not idempotent");
    p
}

/// Reduced network on the clusters of a balanced partition.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientNetwork {
    pub partition: Partition,
    /// `r[k][(q, p)]`: summed weight a node of cluster q receives from cluster p in layer k.
    pub r: Vec<DMatrix<f64>>,
    /// 1-based node type shared by each cluster.
    pub cluster_type: Vec<usize>,
    pub sigma: Vec<f64>,
    pub delay: Vec<f64>,
    pub coupling: Vec<ModelSpec>,
    pub state_dim: usize,
    pub node_models: Vec<ModelSpec>,
}

impl QuotientNetwork {
    pub fn num_clusters(&self) -> usize {
        self.partition.num_clusters()
    }

    pub fn max_delay(&self) -> f64 {
        self.delay.iter().copied().fold(0.0, f64::max)
    }

    /// Copy with one layer's coupling strength replaced.
    pub fn with_sigma(&self, layer: usize, sigma: f64) -> Self {
        let mut q = self.clone();
        q.sigma[layer] = sigma;
        q
    }

    /// Copy with every layer's delay replaced.
    pub fn with_delay(&self, delay: f64) -> Self {
        let mut q = self.clone();
        q.delay.iter_mut().for_each(|d| *d = delay);
        q
    }
}

/// Builds the quotient of a balanced partition.
pub fn quotient(net: &Network, p: &Partition) -> Result<QuotientNetwork> {
    if p.len() != net.len() {
        return Err(Error::PartitionSize {
            expected: net.len(),
            found: p.len(),
        });
    }
    if !is_balanced(net, p) {
        return Err(Error::Unbalanced);
    }
    let q = p.num_clusters();
    let clusters = p.clusters();
    let mut r = Vec::with_capacity(net.num_layers());
    for layer in &net.layers {
        let tol = 1e-12 * layer.max_abs();
        let mut m = DMatrix::zeros(q, q);
        for (cq, members) in clusters.iter().enumerate() {
            for (idx, &i) in members.iter().enumerate() {
                let mut row = vec![0.0; q];
                for j in 0..net.len() {
                    row[p.cluster_of(j)] += layer.adjacency[(i, j)];
                }
                if idx == 0 {
                    for (cp, v) in row.iter().enumerate() {
                        m[(cq, cp)] = *v;
                    }
                } else {
                    // representative independence, to the balanced-check tolerance
                    for (cp, v) in row.iter().enumerate() {
                        let d = (m[(cq, cp)] - v).abs();
                        if d > tol.max(WEIGHT_TOL) {
                            return Err(Error::Unbalanced);
                        }
                    }
                }
            }
        }
        r.push(m);
    }
    Ok(QuotientNetwork {
        partition: p.clone(),
        r,
        cluster_type: clusters.iter().map(|c| net.node_types[c[0]]).collect(),
        sigma: net.layers.iter().map(|l| l.sigma).collect(),
        delay: net.layers.iter().map(|l| l.delay).collect(),
        coupling: net.layers.iter().map(|l| l.coupling.clone()).collect(),
        state_dim: net.state_dim,
        node_models: net.node_models.clone(),
    })
}
