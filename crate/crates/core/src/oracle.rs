//! Exact HDBSCAN* on an explicit distance matrix, where `∞` marks pairs
//! whose distance is unknown.
//!
//! Quadratic in time and memory; used as the ground truth for the
//! incremental engine. Extraction goes through [`crate::hierarchy`], so a
//! comparison against [`crate::Fishdbc`] only exercises the spanning forest.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::hierarchy::{self, ClusterResult, HierarchyError};
use crate::{Edge, ItemId, Weight};

/// Largest matrix [`exact_cluster`] accepts.
pub const MAX_ITEMS: usize = 5_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} items exceeds the oracle limit of {MAX_ITEMS}")]
    TooLarge(usize),
    #[error("{0} core distances supplied for {1} items")]
    CoreCount(usize, usize),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

/// Symmetric matrix with a zero diagonal. Off-diagonal entries start at `∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<Weight>,
}

impl DistanceMatrix {
    pub fn new(n: usize) -> DistanceMatrix {
        let mut data = vec![Weight::INFINITY; n * n];
        for i in 0..n {
            data[i * n + i] = Weight::ZERO;
        }
        DistanceMatrix { n, data }
    }

    /// Fills every pair from `f(i, j)` with `i < j`.
    pub fn from_fn<F: FnMut(ItemId, ItemId) -> Weight>(n: usize, mut f: F) -> DistanceMatrix {
        let mut m = DistanceMatrix::new(n);
        for i in 0..n {
            for j in i + 1..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: ItemId, j: ItemId) -> Weight {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`. Diagonal writes are ignored.
    pub fn set(&mut self, i: ItemId, j: ItemId, w: Weight) {
        if i != j {
            self.data[i * self.n + j] = w;
            self.data[j * self.n + i] = w;
        }
    }

    pub fn row(&self, i: ItemId) -> &[Weight] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// The `minpts`-th smallest off-diagonal entry of each row (`∞` if the row
/// has fewer than `minpts` finite entries).
pub fn exact_core_distances(m: &DistanceMatrix, minpts: usize) -> Vec<Weight> {
    let mut row = Vec::with_capacity(m.n);
    (0..m.n)
        .map(|i| {
            row.clear();
            row.extend(m.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &w)| w));
            if minpts == 0 || minpts > row.len() {
                return Weight::INFINITY;
            }
            *row.select_nth_unstable(minpts - 1).1
        })
        .collect()
}

pub fn mutual_reachability(m: &DistanceMatrix, cores: &[Weight]) -> Result<DistanceMatrix, OracleError> {
    if cores.len() != m.n {
        return Err(OracleError::CoreCount(cores.len(), m.n));
    }
    Ok(DistanceMatrix::from_fn(m.n, |i, j| m.get(i, j).max(cores[i]).max(cores[j])))
}

/// Minimum spanning forest over the finite entries by dense Prim, with ties
/// broken on `(weight, lo, hi)`.
pub fn exact_msf(m: &DistanceMatrix) -> Vec<Edge> {
    let n = m.n;
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<(Weight, ItemId, ItemId)>> = vec![None; n];
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for start in 0..n {
        if in_tree[start] {
            continue;
        }
        let mut v = start;
        loop {
            in_tree[v] = true;
            for (u, slot) in best.iter_mut().enumerate() {
                if in_tree[u] {
                    continue;
                }
                let w = m.get(v, u);
                if !w.is_finite() {
                    continue;
                }
                let key = (w, v.min(u), v.max(u));
                if slot.map_or(true, |b| key < b) {
                    *slot = Some(key);
                }
            }
            let next = (0..n)
                .filter(|&u| !in_tree[u])
                .filter_map(|u| best[u].map(|k| (k, u)))
                .min();
            match next {
                Some(((w, lo, hi), u)) => {
                    out.push(Edge { lo, hi, weight: w });
                    v = u;
                }
                None => break,
            }
        }
    }
    out
}

/// HDBSCAN* labels and condensed tree for `m`.
pub fn exact_cluster(m: &DistanceMatrix, minpts: usize, min_cluster_size: usize) -> Result<ClusterResult, OracleError> {
    if m.n > MAX_ITEMS {
        return Err(OracleError::TooLarge(m.n));
    }
    let cores = exact_core_distances(m, minpts);
    let mr = mutual_reachability(m, &cores)?;
    let forest = exact_msf(&mr);
    Ok(hierarchy::cluster_forest(m.n, &forest, min_cluster_size)?)
}
