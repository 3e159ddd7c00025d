//! HDBSCAN*-style hierarchy over a spanning forest.
//!
//! The forest is swept into a single-linkage dendrogram, condensed under a
//! minimum cluster size, and flattened by bottom-up stability selection.
//! Densities are expressed as `λ = 1 / weight`.
//!
//! Separate components of the forest, and components joined only by
//! infinite-weight edges, are treated as splitting off the root at `λ = 0`
//! all at once: components of at least `min_cluster_size` items become
//! clusters, smaller ones are noise. The root itself is never selected.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::msf::UnionFind;
use crate::{Edge, ItemId};

/// Label of items assigned to no flat cluster.
pub const NOISE: i64 = -1;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("edge ({0}, {1}) closes a cycle")]
    Cycle(ItemId, ItemId),
    #[error("edge ({lo}, {hi}) references an item outside 0..{n}")]
    OutOfRange { lo: ItemId, hi: ItemId, n: usize },
    #[error("min cluster size must be at least 2 (got {0})")]
    MinClusterSize(usize),
}

/// One agglomeration step. Nodes `0..n` are items; the node created by merge
/// `k` is `n + k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub weight: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn item_count(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Nodes not merged into anything at a finite weight, excluding the
    /// infinite-weight merges themselves, in increasing order.
    pub fn roots(&self) -> Vec<usize> {
        let total = self.n + self.merges.len();
        let mut joined = vec![false; total];
        for (k, m) in self.merges.iter().enumerate() {
            if m.weight.is_finite() {
                joined[m.left] = true;
                joined[m.right] = true;
            } else {
                joined[self.n + k] = true;
            }
        }
        (0..total).filter(|&v| !joined[v]).collect()
    }

    fn size(&self, node: usize) -> usize {
        if node < self.n {
            1
        } else {
            self.merges[node - self.n].size
        }
    }

    /// Items under `node`.
    fn leaves(&self, node: usize, out: &mut Vec<ItemId>) {
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < self.n {
                out.push(v);
            } else {
                let m = &self.merges[v - self.n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
    }
}

/// Sweeps `edges` in `(weight, lo, hi)` order with a union-find.
pub fn build_dendrogram(n: usize, edges: &[Edge]) -> Result<Dendrogram, HierarchyError> {
    let mut sorted = edges.to_vec();
    sorted.sort_unstable_by_key(Edge::sort_key);
    let mut uf = UnionFind::new(n);
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(sorted.len());
    for e in sorted {
        if e.hi >= n {
            return Err(HierarchyError::OutOfRange { lo: e.lo, hi: e.hi, n });
        }
        let (ra, rb) = (uf.find(e.lo), uf.find(e.hi));
        if ra == rb {
            return Err(HierarchyError::Cycle(e.lo, e.hi));
        }
        let (left, right) = (node_of[ra], node_of[rb]);
        let size = merge_size(n, &merges, left) + merge_size(n, &merges, right);
        uf.union(ra, rb);
        node_of[uf.find(ra)] = n + merges.len();
        merges.push(Merge {
            left,
            right,
            weight: e.weight.get(),
            size,
        });
    }
    Ok(Dendrogram { n, merges })
}

fn merge_size(n: usize, merges: &[Merge], node: usize) -> usize {
    if node < n {
        1
    } else {
        merges[node - n].size
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth_lambda: f64,
    /// λ at which the last point left the cluster, either by falling out or by a split.
    pub death_lambda: f64,
    pub size: usize,
    pub stability: f64,
    pub selected: bool,
}

/// A point leaving `cluster` at density `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEvent {
    pub point: ItemId,
    pub cluster: usize,
    pub lambda: f64,
}

/// Condensed hierarchy. Cluster 0 is the root holding every item; children
/// always have larger ids than their parent.
#[derive(Clone, Debug, PartialEq)]
pub struct CondensedTree {
    n: usize,
    min_cluster_size: usize,
    clusters: Vec<ClusterNode>,
    points: Vec<PointEvent>,
}

fn lambda_of(weight: f64) -> f64 {
    if weight == 0.0 {
        f64::INFINITY
    } else {
        1.0 / weight
    }
}

/// `a - b` for `a >= b`, with `∞ - ∞ = 0`.
fn excess(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        a - b
    }
}

/// Condenses `d` under `min_cluster_size`.
pub fn condense(d: &Dendrogram, min_cluster_size: usize) -> Result<CondensedTree, HierarchyError> {
    if min_cluster_size < 2 {
        return Err(HierarchyError::MinClusterSize(min_cluster_size));
    }
    let mut tree = CondensedTree {
        n: d.n,
        min_cluster_size,
        clusters: Vec::new(),
        points: Vec::with_capacity(d.n),
    };
    if d.n == 0 {
        return Ok(tree);
    }
    tree.new_cluster(None, 0.0, d.n);
    let mut leaves = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    let roots = d.roots();
    let big: Vec<usize> = roots
        .iter()
        .copied()
        .filter(|&r| d.size(r) >= min_cluster_size)
        .collect();
    for &r in roots.iter().filter(|&&r| d.size(r) < min_cluster_size) {
        tree.fall_out(d, r, 0, 0.0, &mut leaves);
    }
    if big.len() == 1 {
        stack.push((big[0], 0));
    } else {
        for &r in &big {
            let c = tree.new_cluster(Some(0), 0.0, d.size(r));
            stack.push((r, c));
        }
    }

    while let Some((node, cluster)) = stack.pop() {
        if node < d.n {
            tree.fall_out(d, node, cluster, f64::INFINITY, &mut leaves);
            continue;
        }
        let m = d.merges[node - d.n];
        let lambda = lambda_of(m.weight);
        let (sl, sr) = (d.size(m.left), d.size(m.right));
        match (sl >= min_cluster_size, sr >= min_cluster_size) {
            (true, true) => {
                let l = tree.new_cluster(Some(cluster), lambda, sl);
                let r = tree.new_cluster(Some(cluster), lambda, sr);
                stack.push((m.right, r));
                stack.push((m.left, l));
            }
            (false, false) => {
                tree.fall_out(d, m.left, cluster, lambda, &mut leaves);
                tree.fall_out(d, m.right, cluster, lambda, &mut leaves);
            }
            (true, false) => {
                tree.fall_out(d, m.right, cluster, lambda, &mut leaves);
                stack.push((m.left, cluster));
            }
            (false, true) => {
                tree.fall_out(d, m.left, cluster, lambda, &mut leaves);
                stack.push((m.right, cluster));
            }
        }
    }
    tree.finish();
    Ok(tree)
}

impl CondensedTree {
    fn new_cluster(&mut self, parent: Option<usize>, birth: f64, size: usize) -> usize {
        let id = self.clusters.len();
        self.clusters.push(ClusterNode {
            id,
            parent,
            birth_lambda: birth,
            death_lambda: birth,
            size,
            stability: 0.0,
            selected: false,
        });
        id
    }

    fn fall_out(&mut self, d: &Dendrogram, node: usize, cluster: usize, lambda: f64, buf: &mut Vec<ItemId>) {
        buf.clear();
        d.leaves(node, buf);
        for &point in buf.iter() {
            self.points.push(PointEvent { point, cluster, lambda });
        }
    }

    /// Fills in death densities and stabilities.
    fn finish(&mut self) {
        for p in &self.points {
            let c = &mut self.clusters[p.cluster];
            if p.lambda > c.death_lambda {
                c.death_lambda = p.lambda;
            }
            c.stability += excess(p.lambda, c.birth_lambda);
        }
        for i in 1..self.clusters.len() {
            let (birth, size) = (self.clusters[i].birth_lambda, self.clusters[i].size);
            let parent = self.clusters[i].parent.unwrap_or(0);
            let p = &mut self.clusters[parent];
            if birth > p.death_lambda {
                p.death_lambda = birth;
            }
            p.stability += size as f64 * excess(birth, p.birth_lambda);
        }
    }

    pub fn item_count(&self) -> usize {
        self.n
    }

    pub fn min_cluster_size(&self) -> usize {
        self.min_cluster_size
    }

    pub fn clusters(&self) -> &[ClusterNode] {
        &self.clusters
    }

    pub fn points(&self) -> &[PointEvent] {
        &self.points
    }

    /// Sum over points that fell out of `cluster`, or were still in it when
    /// it split, of `λ_p - λ_birth`.
    pub fn stability(&self, cluster: usize) -> Option<f64> {
        self.clusters.get(cluster).map(|c| c.stability)
    }

    pub fn children(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.clusters
            .iter()
            .filter(move |c| c.parent == Some(cluster))
            .map(|c| c.id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatSelection {
    /// Selected cluster ids in increasing order; label `k` names `selected[k]`.
    pub selected: Vec<usize>,
    pub labels: Vec<i64>,
}

/// Bottom-up selection maximizing total stability. A cluster beats its
/// descendants only when strictly more stable than their best selection.
pub fn extract_flat(tree: &CondensedTree) -> FlatSelection {
    let k = tree.clusters.len();
    let mut has_children = vec![false; k];
    for c in &tree.clusters {
        if let Some(p) = c.parent {
            has_children[p] = true;
        }
    }
    let mut best = vec![0.0f64; k];
    let mut child_sum = vec![0.0f64; k];
    let mut chosen = vec![false; k];
    for i in (1..k).rev() {
        let s = tree.clusters[i].stability;
        if !has_children[i] || s > child_sum[i] {
            chosen[i] = true;
            best[i] = s;
        } else {
            best[i] = child_sum[i];
        }
        let p = tree.clusters[i].parent.unwrap_or(0);
        child_sum[p] += best[i];
    }
    // Walk top-down: anything below a chosen cluster is folded into it.
    let mut owner: Vec<Option<usize>> = vec![None; k];
    let mut selected = Vec::new();
    for i in 1..k {
        let inherited = tree.clusters[i].parent.and_then(|p| owner[p]);
        owner[i] = match inherited {
            Some(o) => Some(o),
            None if chosen[i] => {
                selected.push(i);
                Some(i)
            }
            None => None,
        };
    }
    let mut label_of = vec![NOISE; k];
    for (label, &c) in selected.iter().enumerate() {
        label_of[c] = label as i64;
    }
    let mut labels = vec![NOISE; tree.n];
    for p in &tree.points {
        if let Some(o) = owner[p.cluster] {
            labels[p.point] = label_of[o];
        }
    }
    FlatSelection { selected, labels }
}

/// Flat labels plus the condensed tree they were selected from.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterResult {
    pub labels: Vec<i64>,
    pub condensed: CondensedTree,
}

impl ClusterResult {
    pub fn cluster_count(&self) -> usize {
        self.condensed.clusters.iter().filter(|c| c.selected).count()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn clustered_count(&self) -> usize {
        self.labels.len() - self.noise_count()
    }
}

/// Dendrogram, condensed tree and flat labels for a spanning forest over `n` items.
pub fn cluster_forest(n: usize, edges: &[Edge], min_cluster_size: usize) -> Result<ClusterResult, HierarchyError> {
    let d = build_dendrogram(n, edges)?;
    let mut condensed = condense(&d, min_cluster_size)?;
    let flat = extract_flat(&condensed);
    for &c in &flat.selected {
        condensed.clusters[c].selected = true;
    }
    Ok(ClusterResult {
        labels: flat.labels,
        condensed,
    })
}
