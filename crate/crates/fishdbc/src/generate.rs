//! Synthetic labeled datasets.

use fishdbc_core::distance::ItemSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Debug, PartialEq)]
pub struct Labeled<T> {
    pub items: Vec<T>,
    pub labels: Vec<i64>,
}

/// Isotropic Gaussian blobs in the style of scikit-learn's `make_blobs`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlobParams {
    pub samples: usize,
    pub centers: usize,
    pub dim: usize,
    pub std: f64,
    /// Centers are drawn uniformly from this box in every coordinate.
    pub center_box: (f64, f64),
}

impl Default for BlobParams {
    fn default() -> Self {
        BlobParams {
            samples: 2000,
            centers: 10,
            dim: 2,
            std: 1.0,
            center_box: (-10.0, 10.0),
        }
    }
}

/// Samples are split as evenly as possible over the centers, then shuffled.
pub fn blobs(p: &BlobParams, seed: u64) -> Labeled<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = p.center_box;
    let centers: Vec<Vec<f64>> = (0..p.centers)
        .map(|_| (0..p.dim).map(|_| rng.random_range(lo..hi)).collect())
        .collect();
    let noise = Normal::new(0.0, p.std).expect("std must be finite and non-negative");
    let mut rows: Vec<(Vec<f64>, i64)> = Vec::with_capacity(p.samples);
    for (c, center) in centers.iter().enumerate() {
        let count = p.samples / p.centers + usize::from(c < p.samples % p.centers);
        for _ in 0..count {
            rows.push((center.iter().map(|&m| m + noise.sample(&mut rng)).collect(), c as i64));
        }
    }
    rows.shuffle(&mut rng);
    let (items, labels) = rows.into_iter().unzip();
    Labeled { items, labels }
}

/// Transaction clusters over disjoint item blocks.
///
/// The `dim` items are split into `clusters` contiguous blocks. Each cluster
/// draws a per-item inclusion probability in `[0.2, 0.8]` once; a transaction
/// of that cluster includes each block item independently with it.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub transactions: usize,
    pub clusters: usize,
    pub dim: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            transactions: 2000,
            clusters: 5,
            dim: 1024,
        }
    }
}

pub fn synth(p: &SynthParams, seed: u64) -> Labeled<ItemSet> {
    assert!(p.clusters >= 1 && p.dim >= p.clusters, "need at least one item per cluster");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = p.dim / p.clusters;
    let profiles: Vec<Vec<f64>> = (0..p.clusters)
        .map(|_| (0..block).map(|_| rng.random_range(0.2..0.8)).collect())
        .collect();
    let mut items = Vec::with_capacity(p.transactions);
    let mut labels = Vec::with_capacity(p.transactions);
    for _ in 0..p.transactions {
        let c = rng.random_range(0..p.clusters);
        let base = (c * block) as u32;
        let mut set: Vec<u32> = profiles[c]
            .iter()
            .enumerate()
            .filter(|&(_, &q)| rng.random::<f64>() < q)
            .map(|(i, _)| base + i as u32)
            .collect();
        if set.is_empty() {
            set.push(base + rng.random_range(0..block) as u32);
        }
        items.push(set.into_iter().collect());
        labels.push(c as i64);
    }
    Labeled { items, labels }
}

/// Points uniform in the unit cube.
pub fn uniform(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
}
