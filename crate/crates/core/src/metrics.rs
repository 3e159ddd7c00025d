//! Clustering quality metrics.
//!
//! External: adjusted mutual information (arithmetic-mean normalization,
//! exact hypergeometric expectation) and adjusted Rand index. The plain
//! variants score only clustered items; the starred variants keep noise as
//! one extra cluster. Internal: sampled intra/inter-cluster distances and
//! the silhouette coefficient.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use thiserror::Error;

use crate::distance::{Distance, DistanceError};
use crate::hierarchy::NOISE;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MetricError {
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least 2 items are required (got {0})")]
    TooFew(usize),
    #[error("silhouette needs at least 2 clusters")]
    SingleCluster,
    #[error("{n} clustered items exceeds the silhouette cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

/// Co-occurrence counts of two labelings, with labels compacted to `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    total: u64,
}

fn compact(labels: &[i64]) -> (Vec<usize>, usize) {
    let mut uniq = labels.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let idx = labels.iter().map(|l| uniq.binary_search(l).unwrap_or(0)).collect();
    (idx, uniq.len())
}

impl ContingencyTable {
    pub fn new(reference: &[i64], predicted: &[i64]) -> Result<ContingencyTable, MetricError> {
        if reference.len() != predicted.len() {
            return Err(MetricError::LengthMismatch(reference.len(), predicted.len()));
        }
        let (r, nr) = compact(reference);
        let (c, nc) = compact(predicted);
        let mut counts = vec![vec![0u64; nc]; nr];
        let mut rows = vec![0u64; nr];
        let mut cols = vec![0u64; nc];
        for (&i, &j) in r.iter().zip(&c) {
            counts[i][j] += 1;
            rows[i] += 1;
            cols[j] += 1;
        }
        Ok(ContingencyTable {
            counts,
            rows,
            cols,
            total: reference.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.rows
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.cols
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn mutual_information(&self) -> f64 {
        let n = self.total as f64;
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &nij) in row.iter().enumerate() {
                if nij > 0 {
                    let nij = nij as f64;
                    mi += nij / n * libm::log(n * nij / (self.rows[i] as f64 * self.cols[j] as f64));
                }
            }
        }
        mi.max(0.0)
    }

    /// `E[MI]` when the labelings are permuted independently with fixed marginals.
    pub fn expected_mutual_information(&self) -> f64 {
        let n = self.total;
        let nf = n as f64;
        let lg = |x: u64| libm::lgamma(x as f64 + 1.0);
        let lg_n = lg(n);
        let mut emi = 0.0;
        for &a in &self.rows {
            for &b in &self.cols {
                let lo = (a + b).saturating_sub(n).max(1);
                let hi = a.min(b);
                let base = lg(a) + lg(b) + lg(n - a) + lg(n - b) - lg_n;
                for nij in lo..=hi {
                    let p = libm::exp(base - lg(nij) - lg(a - nij) - lg(b - nij) - lg(n + nij - a - b));
                    let x = nij as f64;
                    emi += x / nf * libm::log(nf * x / (a as f64 * b as f64)) * p;
                }
            }
        }
        emi
    }
}

fn entropy(sizes: &[u64], total: u64) -> f64 {
    let n = total as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

fn check(reference: &[i64], predicted: &[i64]) -> Result<(), MetricError> {
    if reference.len() != predicted.len() {
        return Err(MetricError::LengthMismatch(reference.len(), predicted.len()));
    }
    if reference.len() < 2 {
        return Err(MetricError::TooFew(reference.len()));
    }
    Ok(())
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Every label value, including `-1`, is an ordinary cluster.
pub fn ari(reference: &[i64], predicted: &[i64]) -> Result<f64, MetricError> {
    check(reference, predicted)?;
    let t = ContingencyTable::new(reference, predicted)?;
    let both: f64 = t.counts.iter().flatten().map(|&c| choose2(c)).sum();
    let same_ref: f64 = t.rows.iter().map(|&c| choose2(c)).sum();
    let same_pred: f64 = t.cols.iter().map(|&c| choose2(c)).sum();
    let all = choose2(t.total);
    // pair confusion: tp = both, fn = same_ref - both, fp = same_pred - both
    let tp = both;
    let fnn = same_ref - both;
    let fp = same_pred - both;
    let tn = all - tp - fnn - fp;
    if fnn == 0.0 && fp == 0.0 {
        return Ok(1.0);
    }
    Ok(2.0 * (tp * tn - fnn * fp) / ((tp + fnn) * (fnn + tn) + (tp + fp) * (fp + tn)))
}

/// Adjusted mutual information with the arithmetic mean of the two entropies
/// as normalizer. Every label value, including `-1`, is an ordinary cluster.
pub fn ami(reference: &[i64], predicted: &[i64]) -> Result<f64, MetricError> {
    check(reference, predicted)?;
    let t = ContingencyTable::new(reference, predicted)?;
    if t.rows.len() == 1 && t.cols.len() == 1 {
        return Ok(1.0);
    }
    let mi = t.mutual_information();
    let emi = t.expected_mutual_information();
    let normalizer = 0.5 * (entropy(&t.rows, t.total) + entropy(&t.cols, t.total));
    let mut denom = normalizer - emi;
    if denom < 0.0 {
        denom = denom.min(-f64::EPSILON);
    } else {
        denom = denom.max(f64::EPSILON);
    }
    Ok((mi - emi) / denom)
}

/// Reference and predicted labels restricted to items not predicted as noise.
pub fn drop_noise(reference: &[i64], predicted: &[i64]) -> (Vec<i64>, Vec<i64>) {
    reference
        .iter()
        .zip(predicted)
        .filter(|&(_, &p)| p != NOISE)
        .map(|(&r, &p)| (r, p))
        .unzip()
}

/// Predictions with every noise item moved into one fresh cluster.
pub fn noise_as_cluster(predicted: &[i64]) -> Vec<i64> {
    let fresh = predicted.iter().copied().max().unwrap_or(0).max(0) + 1;
    predicted.iter().map(|&p| if p == NOISE { fresh } else { p }).collect()
}

/// `metric` after folding noise into a single extra cluster.
pub fn starred<F>(metric: F, reference: &[i64], predicted: &[i64]) -> Result<f64, MetricError>
where
    F: Fn(&[i64], &[i64]) -> Result<f64, MetricError>,
{
    metric(reference, &noise_as_cluster(predicted))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scores {
    /// AMI over clustered items only; 0 when fewer than 2 items are clustered.
    pub ami: f64,
    pub ari: f64,
    pub ami_star: f64,
    pub ari_star: f64,
    pub clustered: usize,
    pub total: usize,
}

impl Scores {
    /// True if the plain scores were defaulted because too few items were clustered.
    pub fn plain_undefined(&self) -> bool {
        self.clustered < 2
    }
}

pub fn evaluate(reference: &[i64], predicted: &[i64]) -> Result<Scores, MetricError> {
    check(reference, predicted)?;
    let (r, p) = drop_noise(reference, predicted);
    let (plain_ami, plain_ari) = if r.len() >= 2 {
        (ami(&r, &p)?, ari(&r, &p)?)
    } else {
        (0.0, 0.0)
    };
    Ok(Scores {
        ami: plain_ami,
        ari: plain_ari,
        ami_star: starred(ami, reference, predicted)?,
        ari_star: starred(ari, reference, predicted)?,
        clustered: p.len(),
        total: reference.len(),
    })
}

/// Clustered items grouped by label.
fn groups(labels: &[i64]) -> Vec<Vec<usize>> {
    let (idx, k) = compact(labels);
    let mut out = vec![Vec::new(); k];
    for (item, (&l, &g)) in labels.iter().zip(&idx).enumerate() {
        if l != NOISE {
            out[g].push(item);
        }
    }
    out.retain(|g| !g.is_empty());
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledDistances {
    /// `None` when no cluster has two members.
    pub intra: Option<f64>,
    /// `None` when fewer than two clusters exist.
    pub inter: Option<f64>,
}

/// Mean distance over `sample_size` pairs drawn uniformly from same-cluster
/// pairs, and likewise from different-cluster pairs. Noise is ignored.
pub fn sampled_pair_distances<T, D, R>(
    items: &[T],
    labels: &[i64],
    distance: &D,
    sample_size: usize,
    rng: &mut R,
) -> Result<SampledDistances, MetricError>
where
    D: Distance<T> + ?Sized,
    R: Rng + ?Sized,
{
    if items.len() != labels.len() {
        return Err(MetricError::LengthMismatch(items.len(), labels.len()));
    }
    let gs = groups(labels);
    let total: usize = gs.iter().map(Vec::len).sum();
    // items laid out group by group
    let order: Vec<usize> = gs.iter().flatten().copied().collect();
    let mut offset = Vec::with_capacity(gs.len());
    let mut acc = 0;
    for g in &gs {
        offset.push(acc);
        acc += g.len();
    }

    let pick = |rng: &mut R, weights: &[f64]| -> usize {
        let sum: f64 = weights.iter().sum();
        let mut x = rng.random::<f64>() * sum;
        for (i, &w) in weights.iter().enumerate() {
            if x < w {
                return i;
            }
            x -= w;
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    };

    let intra_w: Vec<f64> = gs.iter().map(|g| choose2(g.len() as u64)).collect();
    let intra = if intra_w.iter().any(|&w| w > 0.0) && sample_size > 0 {
        let mut sum = 0.0;
        for _ in 0..sample_size {
            let g = &gs[pick(rng, &intra_w)];
            let a = rng.random_range(0..g.len());
            let mut b = rng.random_range(0..g.len() - 1);
            if b >= a {
                b += 1;
            }
            sum += distance.eval(&items[g[a]], &items[g[b]])?;
        }
        Some(sum / sample_size as f64)
    } else {
        None
    };

    let inter_w: Vec<f64> = gs.iter().map(|g| (g.len() * (total - g.len())) as f64).collect();
    let inter = if gs.len() >= 2 && sample_size > 0 {
        let mut sum = 0.0;
        for _ in 0..sample_size {
            let c = pick(rng, &inter_w);
            let a = gs[c][rng.random_range(0..gs[c].len())];
            let k = rng.random_range(0..total - gs[c].len());
            let b = if k < offset[c] { order[k] } else { order[k + gs[c].len()] };
            sum += distance.eval(&items[a], &items[b])?;
        }
        Some(sum / sample_size as f64)
    } else {
        None
    };
    Ok(SampledDistances { intra, inter })
}

/// Mean silhouette over clustered items; singletons score 0.
/// Refuses more than `cap` clustered items.
pub fn silhouette<T, D>(items: &[T], labels: &[i64], distance: &D, cap: usize) -> Result<f64, MetricError>
where
    D: Distance<T> + ?Sized,
{
    if items.len() != labels.len() {
        return Err(MetricError::LengthMismatch(items.len(), labels.len()));
    }
    let gs = groups(labels);
    if gs.len() < 2 {
        return Err(MetricError::SingleCluster);
    }
    let n: usize = gs.iter().map(Vec::len).sum();
    if n > cap {
        return Err(MetricError::TooLarge { n, cap });
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; gs.len()];
    for (gi, g) in gs.iter().enumerate() {
        if g.len() == 1 {
            continue;
        }
        for &x in g {
            for (gj, h) in gs.iter().enumerate() {
                let mut s = 0.0;
                for &y in h {
                    if y != x {
                        s += distance.eval(&items[x], &items[y])?;
                    }
                }
                sums[gj] = s;
            }
            let a = sums[gi] / (g.len() - 1) as f64;
            let b = gs
                .iter()
                .enumerate()
                .filter(|&(gj, _)| gj != gi)
                .map(|(gj, h)| sums[gj] / h.len() as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                total += (b - a) / m;
            }
        }
    }
    Ok(total / n as f64)
}
