//! Per-item bounded max-heaps of the closest neighbors discovered so far.
//!
//! The heap top is the item's core distance once `minpts` neighbors are
//! known; before that the core distance is `+∞`, so core distances (and the
//! reachability weights derived from them) can only decrease over time.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use thiserror::Error;

use crate::{ItemId, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("unknown item {0}")]
pub struct UnknownItem(pub ItemId);

#[derive(Clone, Debug, Default)]
pub struct NeighborHeap {
    entries: BinaryHeap<(Weight, ItemId)>,
}

impl NeighborHeap {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self) -> Option<Weight> {
        self.entries.peek().map(|e| e.0)
    }

    /// Entries in arbitrary order.
    pub fn iter(&self) -> impl Iterator<Item = (ItemId, Weight)> + '_ {
        self.entries.iter().map(|&(w, id)| (id, w))
    }

    fn observe(&mut self, capacity: usize, neighbor: ItemId, dist: Weight) -> bool {
        if let Some(&(old, _)) = self.entries.iter().find(|e| e.1 == neighbor) {
            if dist >= old {
                return false;
            }
            let mut v = core::mem::take(&mut self.entries).into_vec();
            for e in v.iter_mut().filter(|e| e.1 == neighbor) {
                e.0 = dist;
            }
            self.entries = BinaryHeap::from(v);
            return true;
        }
        if self.entries.len() < capacity {
            self.entries.push((dist, neighbor));
            return true;
        }
        match self.entries.peek() {
            Some(&(top, _)) if dist < top => {
                self.entries.pop();
                self.entries.push((dist, neighbor));
                true
            }
            _ => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NeighborStore {
    minpts: usize,
    heaps: Vec<NeighborHeap>,
}

impl NeighborStore {
    pub fn new(minpts: usize) -> NeighborStore {
        NeighborStore {
            minpts,
            heaps: Vec::new(),
        }
    }

    pub fn minpts(&self) -> usize {
        self.minpts
    }

    pub fn len(&self) -> usize {
        self.heaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heaps.is_empty()
    }

    /// Registers the next item id with an empty heap.
    pub fn push_item(&mut self) -> ItemId {
        self.heaps.push(NeighborHeap::default());
        self.heaps.len() - 1
    }

    pub fn heap(&self, x: ItemId) -> Result<&NeighborHeap, UnknownItem> {
        self.heaps.get(x).ok_or(UnknownItem(x))
    }

    /// Offers `y` at distance `v` to `x`'s heap. Returns whether the heap changed.
    ///
    /// Ties with a full heap's top are not admitted.
    pub fn observe(&mut self, x: ItemId, y: ItemId, v: Weight) -> Result<bool, UnknownItem> {
        debug_assert_ne!(x, y);
        let minpts = self.minpts;
        let heap = self.heaps.get_mut(x).ok_or(UnknownItem(x))?;
        Ok(heap.observe(minpts, y, v))
    }

    pub fn core_distance(&self, x: ItemId) -> Result<Weight, UnknownItem> {
        let heap = self.heap(x)?;
        Ok(if heap.len() >= self.minpts {
            heap.top().unwrap_or(Weight::INFINITY)
        } else {
            Weight::INFINITY
        })
    }

    /// Heap entries of `y` strictly closer than `v`, in arbitrary order.
    pub fn neighbors_closer_than(
        &self,
        y: ItemId,
        v: Weight,
    ) -> Result<Vec<(ItemId, Weight)>, UnknownItem> {
        Ok(self.heap(y)?.iter().filter(|e| e.1 < v).collect())
    }
}
