//! Approximate minimum spanning forest of the mutual-reachability graph.
//!
//! New or cheaper edges accumulate in a [`CandidateBuffer`]; [`Msf::update`]
//! folds them into the forest with Kruskal's algorithm over
//! `forest ∪ candidates`. Edges dropped from a spanning forest of a subgraph
//! never belong to a spanning forest of the supergraph, so flushing in
//! batches yields the same forest as a single pass over all edges.
//!
//! All forests are minimal with respect to the strict order
//! `(weight, lo, hi)`, which makes the result unique.

use alloc::vec::Vec;
use core::fmt;

use crate::{Edge, FxHashMap, ItemId, Weight};

/// Disjoint sets with path halving and union by rank.
#[derive(Clone, Debug, Default)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
            rank: alloc::vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn grow(&mut self, n: usize) {
        while self.parent.len() < n {
            self.parent.push(self.parent.len());
            self.rank.push(0);
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `false` if `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            core::cmp::Ordering::Less => self.parent[ra] = rb,
            core::cmp::Ordering::Greater => self.parent[rb] = ra,
            core::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    pub fn component_count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

/// Best known reachability weight per undirected pair, awaiting a flush.
#[derive(Clone, Debug, Default)]
pub struct CandidateBuffer {
    edges: FxHashMap<(ItemId, ItemId), Weight>,
}

impl CandidateBuffer {
    pub fn new() -> CandidateBuffer {
        CandidateBuffer::default()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Inserts the edge or lowers its stored weight; a weight is never raised.
    pub fn push(&mut self, e: Edge) {
        self.edges
            .entry(e.pair())
            .and_modify(|w| {
                if e.weight < *w {
                    *w = e.weight;
                }
            })
            .or_insert(e.weight);
    }

    pub fn get(&self, a: ItemId, b: ItemId) -> Option<Weight> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.get(&key).copied()
    }

    /// Edges in arbitrary order.
    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|(&(lo, hi), &weight)| Edge { lo, hi, weight })
    }

    pub fn clear(&mut self) {
        self.edges.clear();
    }

    /// True iff the buffer holds more than `alpha * n` edges.
    pub fn should_flush(&self, n: usize, alpha: f64) -> bool {
        self.len() as f64 > alpha * n as f64
    }
}

#[derive(Clone, Debug, Default)]
pub struct Msf {
    edges: Vec<Edge>,
    components: UnionFind,
}

impl Msf {
    pub fn new() -> Msf {
        Msf::default()
    }

    /// Number of nodes the forest spans.
    pub fn node_count(&self) -> usize {
        self.components.len()
    }

    pub fn grow(&mut self, n: usize) {
        self.components.grow(n);
    }

    /// Forest edges sorted by `(weight, lo, hi)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn component_count(&mut self) -> usize {
        self.components.component_count()
    }

    pub fn connected(&mut self, a: ItemId, b: ItemId) -> bool {
        self.components.find(a) == self.components.find(b)
    }

    /// Replaces the forest by a minimum spanning forest of `forest ∪ buf` and
    /// empties `buf`. Infinite-weight edges are discarded.
    pub fn update(&mut self, buf: &mut CandidateBuffer) {
        if buf.is_empty() {
            return;
        }
        let mut merged: FxHashMap<(ItemId, ItemId), Weight> = FxHashMap::default();
        merged.reserve(self.edges.len() + buf.len());
        for e in self.edges.iter().copied().chain(buf.iter()) {
            merged
                .entry(e.pair())
                .and_modify(|w| {
                    if e.weight < *w {
                        *w = e.weight;
                    }
                })
                .or_insert(e.weight);
        }
        buf.clear();
        let mut all: Vec<Edge> = merged
            .into_iter()
            .filter(|(_, w)| w.is_finite())
            .map(|((lo, hi), weight)| Edge { lo, hi, weight })
            .collect();
        let n = self.components.len().max(all.iter().map(|e| e.hi + 1).max().unwrap_or(0));
        self.edges = kruskal(n, &mut all, &mut self.components);
    }

    /// One line per edge: `lo hi weight`.
    pub fn write_edge_list<W: fmt::Write>(&self, out: &mut W) -> fmt::Result {
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.lo, e.hi, e.weight)?;
        }
        Ok(())
    }
}

/// Kruskal over `edges` (sorted in place). `components` is reset to `n` singletons.
pub fn kruskal(n: usize, edges: &mut [Edge], components: &mut UnionFind) -> Vec<Edge> {
    edges.sort_unstable_by_key(Edge::sort_key);
    *components = UnionFind::new(n);
    edges
        .iter()
        .filter(|e| components.union(e.lo, e.hi))
        .copied()
        .collect()
}
