use alloc::vec::Vec;
use thiserror::Error;

use crate::distance::{Distance, DistanceError};
use crate::hierarchy::{self, ClusterResult, HierarchyError};
use crate::hnsw::{DistanceTriple, Hnsw, HnswParams, InsertError};
use crate::msf::{CandidateBuffer, Msf};
use crate::neighbors::NeighborStore;
use crate::{Config, ConfigError, Edge, FxHashMap, ItemId, Weight};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FishdbcError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("distance between items {a} and {b} failed: {source}")]
    Distance {
        a: ItemId,
        b: ItemId,
        source: DistanceError,
    },
    #[error("nothing to cluster")]
    Empty,
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

/// Running counters, updated by every [`Fishdbc::add`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Distance evaluations over the lifetime of the engine.
    pub distance_calls: u64,
    /// Distance evaluations made by the most recent insertion.
    pub last_calls: usize,
    /// Candidate pushes made by the most recent insertion.
    pub last_burst: usize,
    /// Candidate buffer size after the most recent insertion, before any flush.
    pub last_buffer: usize,
    /// Largest candidate buffer seen, measured before any flush.
    pub peak_candidates: usize,
    /// Largest `msf + candidates` edge count seen.
    pub peak_stored_edges: usize,
    pub flushes: u64,
}

/// Item, its heap before this insertion, and whether the heap changed.
type Touched = (ItemId, Vec<(ItemId, Weight)>, bool);

/// Incremental density-based clustering state.
///
/// Items are added one at a time with [`add`](Fishdbc::add); a clustering
/// of everything added so far is available at any point from
/// [`cluster`](Fishdbc::cluster).
#[derive(Debug)]
pub struct Fishdbc<T, D> {
    config: Config,
    distance: D,
    items: Vec<T>,
    hnsw: Hnsw,
    neighbors: NeighborStore,
    msf: Msf,
    candidates: CandidateBuffer,
    stats: Stats,
    log: Option<Vec<DistanceTriple>>,
}

impl<T, D: Distance<T>> Fishdbc<T, D> {
    pub fn new(distance: D, config: Config) -> Result<Self, FishdbcError> {
        config.validate()?;
        let params = HnswParams {
            m: config.hnsw_m(),
            m0: config.hnsw_m0(),
            level_mult: config.level_mult(),
            ef: config.ef,
        };
        Ok(Fishdbc {
            hnsw: Hnsw::new(params, config.seed),
            neighbors: NeighborStore::new(config.minpts),
            msf: Msf::new(),
            candidates: CandidateBuffer::new(),
            items: Vec::new(),
            stats: Stats::default(),
            log: None,
            distance,
            config,
        })
    }

    /// Keeps every distance triple seen from now on, available through [`triple_log`](Self::triple_log).
    pub fn record_triples(mut self) -> Self {
        self.log.get_or_insert_with(Vec::new);
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn distance(&self) -> &D {
        &self.distance
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn hnsw(&self) -> &Hnsw {
        &self.hnsw
    }

    pub fn neighbors(&self) -> &NeighborStore {
        &self.neighbors
    }

    pub fn candidates(&self) -> &CandidateBuffer {
        &self.candidates
    }

    pub fn msf(&self) -> &Msf {
        &self.msf
    }

    pub fn triple_log(&self) -> Option<&[DistanceTriple]> {
        self.log.as_deref()
    }

    /// Current weight of the pair in the candidate buffer or the forest.
    pub fn known_weight(&self, a: ItemId, b: ItemId) -> Option<Weight> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let forest = self
            .msf
            .edges()
            .iter()
            .find(|e| e.lo == lo && e.hi == hi)
            .map(|e| e.weight);
        match (forest, self.candidates.get(lo, hi)) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }

    /// Inserts `payload` and returns its id.
    ///
    /// If the distance function fails (or yields NaN or a negative value)
    /// the engine is left exactly as it was before the call.
    pub fn add(&mut self, payload: T) -> Result<ItemId, FishdbcError> {
        let x = self.items.len();
        self.items.push(payload);
        let items = &self.items;
        let distance = &self.distance;
        let inserted = self.hnsw.insert(x, |a, b| {
            let v = distance
                .eval(&items[a], &items[b])
                .map_err(|source| (a, b, source))?;
            Weight::new(v).ok_or((a, b, DistanceError::InvalidValue(v)))
        });
        let insertion = match inserted {
            Ok(ins) => ins,
            Err(e) => {
                self.items.pop();
                return Err(match e {
                    InsertError::Distance((a, b, source)) => FishdbcError::Distance { a, b, source },
                    // ids are always dense here
                    InsertError::Duplicate(_) | InsertError::OutOfOrder { .. } => unreachable!(),
                });
            }
        };
        self.neighbors.push_item();
        self.msf.grow(x + 1);
        self.stats.distance_calls += insertion.raw_calls as u64;
        self.stats.last_calls = insertion.raw_calls;
        self.ingest(&insertion.triples);
        if let Some(log) = self.log.as_mut() {
            log.extend_from_slice(&insertion.triples);
        }
        Ok(x)
    }

    /// Heaps first, then candidate edges for every triple plus a refresh of
    /// every edge whose reachability weight may have dropped.
    fn ingest(&mut self, triples: &[DistanceTriple]) {
        let mut touched: Vec<Touched> = Vec::new();
        let mut slot: FxHashMap<ItemId, usize> = FxHashMap::default();
        for t in triples {
            for (p, q) in [(t.a, t.b), (t.b, t.a)] {
                let i = *slot.entry(p).or_insert_with(|| {
                    let before = self.neighbors.heap(p).map(|h| h.iter().collect()).unwrap_or_default();
                    touched.push((p, before, false));
                    touched.len() - 1
                });
                if self.neighbors.observe(p, q, t.value).unwrap_or(false) {
                    touched[i].2 = true;
                }
            }
        }

        let mut burst = 0;
        for t in triples {
            self.push_candidate(t.a, t.b, t.value);
            burst += 1;
        }
        for (y, before, changed) in &touched {
            if !changed {
                continue;
            }
            let now: Vec<(ItemId, Weight)> = self.neighbors.heap(*y).map(|h| h.iter().collect()).unwrap_or_default();
            for &(z, w) in before.iter().chain(&now) {
                self.push_candidate(*y, z, w);
                burst += 1;
            }
        }
        self.stats.last_burst = burst;
        self.stats.last_buffer = self.candidates.len();
        self.stats.peak_candidates = self.stats.peak_candidates.max(self.candidates.len());
        self.note_stored();
        if self.candidates.should_flush(self.items.len(), self.config.alpha) {
            self.update_msf();
        }
    }

    fn push_candidate(&mut self, a: ItemId, b: ItemId, d: Weight) {
        let ca = self.neighbors.core_distance(a).unwrap_or(Weight::INFINITY);
        let cb = self.neighbors.core_distance(b).unwrap_or(Weight::INFINITY);
        if let Some(e) = Edge::new(a, b, d.max(ca).max(cb)) {
            self.candidates.push(e);
        }
    }

    fn note_stored(&mut self) {
        let stored = self.msf.edges().len() + self.candidates.len();
        self.stats.peak_stored_edges = self.stats.peak_stored_edges.max(stored);
    }

    /// Folds the candidate buffer into the spanning forest.
    pub fn update_msf(&mut self) {
        if !self.candidates.is_empty() {
            self.msf.update(&mut self.candidates);
            self.stats.flushes += 1;
        }
    }

    /// The current forest after flushing pending candidates.
    pub fn spanning_forest(&mut self) -> &[Edge] {
        self.update_msf();
        self.msf.edges()
    }

    /// Flat clustering and condensed tree of all items added so far.
    pub fn cluster(&mut self, min_cluster_size: usize) -> Result<ClusterResult, FishdbcError> {
        if self.items.is_empty() {
            return Err(FishdbcError::Empty);
        }
        self.update_msf();
        Ok(hierarchy::cluster_forest(self.items.len(), self.msf.edges(), min_cluster_size)?)
    }

    /// [`cluster`](Self::cluster) with the configured minimum cluster size.
    pub fn cluster_default(&mut self) -> Result<ClusterResult, FishdbcError> {
        self.cluster(self.config.min_cluster_size())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{self, ItemSet};
    use crate::hierarchy::NOISE;
    use alloc::vec;

    fn line(a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    #[test]
    fn setup_examples() {
        let e = Fishdbc::new(distance::Euclidean, Config::default()).unwrap();
        let _: &Fishdbc<Vec<f64>, _> = &e;
        assert_eq!(e.len(), 0);
        assert!(e.msf().edges().is_empty());
        assert!(e.candidates().is_empty());

        let bad = Fishdbc::<Vec<f64>, _>::new(distance::Cosine, Config::new(1));
        assert_eq!(bad.unwrap_err(), FishdbcError::Config(ConfigError::MinPts(1)));

        let mut j = Fishdbc::new(distance::Jaccard, Config::default()).unwrap();
        for s in [vec![1u32, 2], vec![2, 3], vec![5]] {
            j.add(s.into_iter().collect::<ItemSet>()).unwrap();
        }
        assert_eq!(j.len(), 3);
    }

    #[test]
    fn first_and_second_item() {
        let mut e = Fishdbc::new(line, Config::new(3)).unwrap();
        assert_eq!(e.add(0.0).unwrap(), 0);
        assert_eq!(e.stats().distance_calls, 0);
        assert!(e.candidates().is_empty());
        assert_eq!(e.add(2.0).unwrap(), 1);
        assert_eq!(e.stats().distance_calls, 1);
        assert_eq!(e.candidates().get(0, 1), Some(Weight::INFINITY));
    }

    #[test]
    fn cluster_single_item() {
        let mut e = Fishdbc::new(line, Config::new(3)).unwrap();
        assert_eq!(e.cluster(3).unwrap_err(), FishdbcError::Empty);
        e.add(1.0).unwrap();
        let r = e.cluster(3).unwrap();
        assert_eq!(r.labels, vec![NOISE]);
        assert_eq!(r.cluster_count(), 0);
    }

    #[test]
    fn invalid_distance_is_rejected_atomically() {
        let flaky = |a: &f64, b: &f64| if a.is_nan() || b.is_nan() { f64::NAN } else { (a - b).abs() };
        let mut e = Fishdbc::new(flaky, Config::new(3)).unwrap();
        for x in 0..20 {
            e.add(x as f64).unwrap();
        }
        let calls = e.stats().distance_calls;
        let forest = e.msf().edges().to_vec();
        let pending = e.candidates().len();
        let err = e.add(f64::NAN).unwrap_err();
        assert!(matches!(err, FishdbcError::Distance { source: DistanceError::InvalidValue(_), .. }));
        assert_eq!(e.len(), 20);
        assert_eq!(e.neighbors().len(), 20);
        assert_eq!(e.hnsw().len(), 20);
        assert_eq!(e.stats().distance_calls, calls);
        assert_eq!(e.msf().edges(), &forest[..]);
        assert_eq!(e.candidates().len(), pending);
        assert_eq!(e.add(20.0).unwrap(), 20);

        let negative = |a: &f64, b: &f64| if *a < 0.0 || *b < 0.0 { -1.0 } else { (a - b).abs() };
        let mut e = Fishdbc::new(negative, Config::new(3)).unwrap();
        e.add(1.0).unwrap();
        assert!(e.add(-5.0).is_err());
        assert_eq!(e.len(), 1);
    }

    #[test]
    fn engine_agrees_across_instances() {
        let pts: Vec<f64> = (0..300).map(|i| ((i * 7919) % 1000) as f64 / 10.0).collect();
        let run = |alpha: f64| {
            let mut e = Fishdbc::new(line, Config::new(4).with_alpha(alpha).with_seed(3)).unwrap();
            for &p in &pts {
                e.add(p).unwrap();
            }
            (e.spanning_forest().to_vec(), e.cluster(4).unwrap().labels, e.stats().flushes)
        };
        let (f1, l1, flushes) = run(1.0);
        let (f2, l2, _) = run(1e9);
        assert!(flushes > 1);
        assert_eq!(f1, f2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn buffer_stays_bounded() {
        let pts: Vec<f64> = (0..2000).map(|i| ((i * 104729) % 7919) as f64).collect();
        let alpha = 2.0;
        let mut e = Fishdbc::new(line, Config::new(5).with_alpha(alpha)).unwrap();
        for &p in &pts {
            e.add(p).unwrap();
            let n = e.len() as f64;
            assert!(e.candidates().len() as f64 <= alpha * n);
            let s = e.stats();
            assert!(s.last_buffer as f64 <= alpha * n + s.last_burst as f64);
            assert!(e.msf().edges().len() < e.len().max(1));
        }
    }

    #[test]
    fn repeated_cluster_calls_agree() {
        let mut e = Fishdbc::new(line, Config::new(3)).unwrap();
        for x in [0.0, 0.1, 0.2, 0.3, 0.35, 10.0, 10.1, 10.2, 10.3, 10.4] {
            e.add(x).unwrap();
        }
        let a = e.cluster(3).unwrap();
        let b = e.cluster(3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cluster_count(), 2);
        assert!(e.candidates().is_empty());
    }
}
