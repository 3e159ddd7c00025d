//! Hierarchical Navigable Small World graph used purely as an insertion engine.
//!
//! The index is never queried. Its value is the stream of distance
//! evaluations performed while linking each new item: every one of them is
//! reported back to the caller as a [`DistanceTriple`].
//!
//! Construction follows Malkov & Yashunin: greedy descent through the layers
//! above the new item's level, then an `ef`-bounded best-first search per
//! layer, neighbor selection with the diversity heuristic (no candidate
//! extension, pruned links are not kept), and symmetric linking with degree
//! pruning at `m` (upper layers) or `m0` (layer 0).

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{FxHashMap, ItemId, Weight};

/// One distance evaluation `value = d(a, b)` observed during an insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DistanceTriple {
    pub a: ItemId,
    pub b: ItemId,
    pub value: Weight,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HnswParams {
    pub m: usize,
    pub m0: usize,
    pub level_mult: f64,
    pub ef: usize,
}

#[derive(Debug, PartialEq, Eq)]
pub enum InsertError<E> {
    Duplicate(ItemId),
    OutOfOrder { expected: ItemId, got: ItemId },
    Distance(E),
}

impl<E: fmt::Display> fmt::Display for InsertError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InsertError::Duplicate(x) => write!(f, "item {x} is already in the index"),
            InsertError::OutOfOrder { expected, got } => {
                write!(f, "items must be inserted densely: expected id {expected}, got {got}")
            }
            InsertError::Distance(e) => write!(f, "distance evaluation failed: {e}"),
        }
    }
}

impl<E: fmt::Debug + fmt::Display> core::error::Error for InsertError<E> {}

/// Outcome of a successful insertion.
#[derive(Clone, Debug)]
pub struct Insertion {
    pub level: usize,
    /// Distinct pairs evaluated, in first-evaluation order, each with its smallest value.
    pub triples: Vec<DistanceTriple>,
    /// Number of distance evaluations, duplicates included.
    pub raw_calls: usize,
}

#[derive(Clone, Copy, Debug)]
struct Link {
    id: ItemId,
    dist: Weight,
}

#[derive(Clone, Debug)]
struct Node {
    links: Vec<Vec<Link>>,
}

/// Per-search visit marks and a per-insertion cache of `d(new item, ·)`.
#[derive(Clone, Debug, Default)]
struct Scratch {
    visit_gen: u32,
    visited: Vec<u32>,
    cache_gen: u32,
    cached: Vec<u32>,
    cache: Vec<Weight>,
}

impl Scratch {
    fn begin_insertion(&mut self, n: usize) {
        self.visited.resize(n, 0);
        self.cached.resize(n, 0);
        self.cache.resize(n, Weight::ZERO);
        self.cache_gen = self.cache_gen.wrapping_add(1);
        if self.cache_gen == 0 {
            self.cached.iter_mut().for_each(|g| *g = 0);
            self.cache_gen = 1;
        }
    }

    fn begin_search(&mut self) {
        self.visit_gen = self.visit_gen.wrapping_add(1);
        if self.visit_gen == 0 {
            self.visited.iter_mut().for_each(|g| *g = 0);
            self.visit_gen = 1;
        }
    }

    /// Marks `id` visited; returns false if it already was.
    fn visit(&mut self, id: ItemId) -> bool {
        if self.visited[id] == self.visit_gen {
            false
        } else {
            self.visited[id] = self.visit_gen;
            true
        }
    }
}

/// Routes every distance evaluation of one insertion through a log.
struct Tap<'a, F> {
    query: ItemId,
    dist: &'a mut F,
    raw: Vec<DistanceTriple>,
    scratch: &'a mut Scratch,
}

impl<F, E> Tap<'_, F>
where
    F: FnMut(ItemId, ItemId) -> Result<Weight, E>,
{
    fn eval(&mut self, a: ItemId, b: ItemId) -> Result<Weight, E> {
        let other = if a == self.query {
            Some(b)
        } else if b == self.query {
            Some(a)
        } else {
            None
        };
        if let Some(o) = other {
            if self.scratch.cached[o] == self.scratch.cache_gen {
                return Ok(self.scratch.cache[o]);
            }
        }
        let value = (self.dist)(a, b)?;
        self.raw.push(DistanceTriple { a, b, value });
        if let Some(o) = other {
            self.scratch.cached[o] = self.scratch.cache_gen;
            self.scratch.cache[o] = value;
        }
        Ok(value)
    }
}

#[derive(Clone, Debug)]
pub struct Hnsw {
    params: HnswParams,
    nodes: Vec<Node>,
    entry: Option<ItemId>,
    max_level: usize,
    rng: ChaCha8Rng,
    scratch: Scratch,
}

/// `⌊-ln(u) · level_mult⌋` for `u ∈ (0, 1]`.
pub fn level_for(u: f64, level_mult: f64) -> usize {
    let l = -libm::log(u) * level_mult;
    if l.is_finite() && l > 0.0 {
        libm::floor(l) as usize
    } else {
        0
    }
}

impl Hnsw {
    pub fn new(params: HnswParams, seed: u64) -> Hnsw {
        Hnsw {
            params,
            nodes: Vec::new(),
            entry: None,
            max_level: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scratch: Scratch::default(),
        }
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entry_point(&self) -> Option<ItemId> {
        self.entry
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn level(&self, x: ItemId) -> Option<usize> {
        self.nodes.get(x).map(|n| n.links.len() - 1)
    }

    /// Neighbors of `x` at `layer` (empty if `x` is not present there).
    pub fn neighbors(&self, x: ItemId, layer: usize) -> impl Iterator<Item = ItemId> + '_ {
        self.nodes
            .get(x)
            .and_then(|n| n.links.get(layer))
            .into_iter()
            .flatten()
            .map(|l| l.id)
    }

    /// Draws the level of the next item.
    pub fn assign_level(&mut self) -> usize {
        let u = 1.0 - self.rng.random::<f64>();
        level_for(u, self.params.level_mult)
    }

    /// Links item `x` (which must equal `len()`) into the graph.
    ///
    /// `dist(a, b)` must return `d(payload(a), payload(b))`. If it fails, the
    /// index is restored to its state before the call.
    pub fn insert<F, E>(&mut self, x: ItemId, mut dist: F) -> Result<Insertion, InsertError<E>>
    where
        F: FnMut(ItemId, ItemId) -> Result<Weight, E>,
    {
        let n = self.nodes.len();
        if x < n {
            return Err(InsertError::Duplicate(x));
        }
        if x > n {
            return Err(InsertError::OutOfOrder { expected: n, got: x });
        }
        let rng_before = self.rng.clone();
        let level = self.assign_level();
        let mut scratch = core::mem::take(&mut self.scratch);
        scratch.begin_insertion(n + 1);
        self.nodes.push(Node {
            links: vec![Vec::new(); level + 1],
        });
        let mut journal = Vec::new();
        let mut tap = Tap {
            query: x,
            dist: &mut dist,
            raw: Vec::new(),
            scratch: &mut scratch,
        };
        let outcome = self.link(x, level, &mut tap, &mut journal);
        let raw = core::mem::take(&mut tap.raw);
        self.scratch = scratch;
        match outcome {
            Ok(()) => {
                if self.entry.is_none() || level > self.max_level {
                    self.entry = Some(x);
                    self.max_level = level;
                }
                Ok(Insertion {
                    level,
                    raw_calls: raw.len(),
                    triples: dedup_min(raw),
                })
            }
            Err(e) => {
                for (id, layer, links) in journal.into_iter().rev() {
                    self.nodes[id].links[layer] = links;
                }
                self.nodes.truncate(x);
                self.rng = rng_before;
                Err(InsertError::Distance(e))
            }
        }
    }

    fn link<F, E>(
        &mut self,
        x: ItemId,
        level: usize,
        tap: &mut Tap<'_, F>,
        journal: &mut Vec<(ItemId, usize, Vec<Link>)>,
    ) -> Result<(), E>
    where
        F: FnMut(ItemId, ItemId) -> Result<Weight, E>,
    {
        let Some(entry) = self.entry else {
            return Ok(());
        };
        let mut ep = vec![(tap.eval(x, entry)?, entry)];
        for layer in (level + 1..=self.max_level).rev() {
            ep = search_layer(&self.nodes, tap, &ep, 1, layer)?;
        }
        for layer in (0..=level.min(self.max_level)).rev() {
            let found = search_layer(&self.nodes, tap, &ep, self.params.ef, layer)?;
            let selected = select_neighbors(tap, &found, self.params.m)?;
            self.nodes[x].links[layer] = selected
                .iter()
                .map(|&(dist, id)| Link { id, dist })
                .collect();
            let cap = if layer == 0 { self.params.m0 } else { self.params.m };
            for &(dist, e) in &selected {
                journal.push((e, layer, self.nodes[e].links[layer].clone()));
                self.nodes[e].links[layer].push(Link { id: x, dist });
                if self.nodes[e].links[layer].len() > cap {
                    self.shrink(e, layer, cap, tap, journal)?;
                }
            }
            ep = found;
        }
        Ok(())
    }

    /// Re-selects `e`'s links at `layer` down to `cap`, unlinking both directions.
    fn shrink<F, E>(
        &mut self,
        e: ItemId,
        layer: usize,
        cap: usize,
        tap: &mut Tap<'_, F>,
        journal: &mut Vec<(ItemId, usize, Vec<Link>)>,
    ) -> Result<(), E>
    where
        F: FnMut(ItemId, ItemId) -> Result<Weight, E>,
    {
        let mut candidates: Vec<(Weight, ItemId)> = self.nodes[e].links[layer]
            .iter()
            .map(|l| (l.dist, l.id))
            .collect();
        candidates.sort_unstable();
        let kept = select_neighbors(tap, &candidates, cap)?;
        for &(_, r) in &candidates {
            if kept.iter().any(|k| k.1 == r) {
                continue;
            }
            if r != tap.query {
                journal.push((r, layer, self.nodes[r].links[layer].clone()));
            }
            self.nodes[r].links[layer].retain(|l| l.id != e);
        }
        self.nodes[e].links[layer] = kept.into_iter().map(|(dist, id)| Link { id, dist }).collect();
        Ok(())
    }
}

/// Best-first search for the `ef` closest items to the tap's query at `layer`.
/// Returns them sorted by increasing distance.
fn search_layer<F, E>(
    nodes: &[Node],
    tap: &mut Tap<'_, F>,
    entries: &[(Weight, ItemId)],
    ef: usize,
    layer: usize,
) -> Result<Vec<(Weight, ItemId)>, E>
where
    F: FnMut(ItemId, ItemId) -> Result<Weight, E>,
{
    tap.scratch.begin_search();
    let mut candidates: BinaryHeap<Reverse<(Weight, ItemId)>> = BinaryHeap::new();
    let mut results: BinaryHeap<(Weight, ItemId)> = BinaryHeap::new();
    for &e in entries {
        if tap.scratch.visit(e.1) {
            candidates.push(Reverse(e));
            results.push(e);
            if results.len() > ef {
                results.pop();
            }
        }
    }
    while let Some(Reverse((d, c))) = candidates.pop() {
        if results.len() >= ef && results.peek().is_some_and(|top| d > top.0) {
            break;
        }
        for link in &nodes[c].links[layer] {
            if !tap.scratch.visit(link.id) {
                continue;
            }
            let dq = tap.eval(tap.query, link.id)?;
            if results.len() < ef || results.peek().is_some_and(|top| dq < top.0) {
                candidates.push(Reverse((dq, link.id)));
                results.push((dq, link.id));
                if results.len() > ef {
                    results.pop();
                }
            }
        }
    }
    Ok(results.into_sorted_vec())
}

/// Diversity heuristic: walk candidates by increasing distance to the base
/// item and keep one only if it is closer to the base than to every item
/// kept so far. `candidates` must be sorted ascending.
fn select_neighbors<F, E>(
    tap: &mut Tap<'_, F>,
    candidates: &[(Weight, ItemId)],
    m: usize,
) -> Result<Vec<(Weight, ItemId)>, E>
where
    F: FnMut(ItemId, ItemId) -> Result<Weight, E>,
{
    let mut kept: Vec<(Weight, ItemId)> = Vec::with_capacity(m);
    for &(d, c) in candidates {
        if kept.len() >= m {
            break;
        }
        let mut diverse = true;
        for &(_, r) in &kept {
            if tap.eval(c, r)? < d {
                diverse = false;
                break;
            }
        }
        if diverse {
            kept.push((d, c));
        }
    }
    Ok(kept)
}

/// Collapses repeated evaluations of a pair, keeping the smallest value.
fn dedup_min(raw: Vec<DistanceTriple>) -> Vec<DistanceTriple> {
    let mut index: FxHashMap<(ItemId, ItemId), usize> = FxHashMap::default();
    let mut out: Vec<DistanceTriple> = Vec::with_capacity(raw.len());
    for t in raw {
        let key = if t.a < t.b { (t.a, t.b) } else { (t.b, t.a) };
        match index.get(&key) {
            Some(&i) => {
                if t.value < out[i].value {
                    out[i].value = t.value;
                }
            }
            None => {
                index.insert(key, out.len());
                out.push(t);
            }
        }
    }
    out
}
