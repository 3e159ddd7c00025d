//! Distance contract and built-in distance functions.
//!
//! A distance must be symmetric, zero on identical inputs, finite and
//! non-negative. Nothing assumes the triangle inequality.

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DistanceError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine distance is undefined for a zero-norm vector")]
    ZeroNorm,
    #[error("simpson distance is undefined for an all-zero bitmap")]
    EmptyBitmap,
    #[error("distance function returned an invalid value {0}")]
    InvalidValue(f64),
    #[error("payload kind not supported by this distance")]
    UnsupportedPayload,
}

/// A symmetric dissimilarity over payloads of type `T`.
pub trait Distance<T: ?Sized> {
    fn eval(&self, a: &T, b: &T) -> Result<f64, DistanceError>;
}

impl<T: ?Sized, F> Distance<T> for F
where
    F: Fn(&T, &T) -> f64,
{
    fn eval(&self, a: &T, b: &T) -> Result<f64, DistanceError> {
        Ok(self(a, b))
    }
}

/// Sparse real vector with strictly increasing indices and no stored zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary `(index, value)` pairs; duplicate indices are summed.
    pub fn from_pairs<I: IntoIterator<Item = (u32, f64)>>(pairs: I) -> SparseVector {
        let mut entries: Vec<(u32, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        SparseVector { entries: merged }
    }

    pub fn from_dense(values: &[f64]) -> SparseVector {
        SparseVector::from_pairs(
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v)),
        )
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Set of integer tokens, kept sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ItemSet(Vec<u32>);

impl ItemSet {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intersection_len(&self, other: &ItemSet) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }
}

impl FromIterator<u32> for ItemSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut v: Vec<u32> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        ItemSet(v)
    }
}

/// Fixed-length bit string packed into 64-bit words.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Bitmap {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1u64 << (len % 64);
            }
            len += 1;
        }
        Bitmap { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn and_count(&self, other: &Bitmap) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
    if a.len() != b.len() {
        return Err(DistanceError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    Ok(libm::sqrt(sum))
}

fn cosine_from_parts(dot: f64, na: f64, nb: f64) -> Result<f64, DistanceError> {
    if na == 0.0 || nb == 0.0 {
        return Err(DistanceError::ZeroNorm);
    }
    // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): exact 1.0 on identical inputs.
    let sim = dot / libm::sqrt(na * nb);
    Ok((1.0 - sim).clamp(0.0, 2.0))
}

pub fn cosine(a: &SparseVector, b: &SparseVector) -> Result<f64, DistanceError> {
    cosine_from_parts(a.dot(b), a.squared_norm(), b.squared_norm())
}

pub fn cosine_dense(a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
    if a.len() != b.len() {
        return Err(DistanceError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let dot = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum();
    let nb = b.iter().map(|x| x * x).sum();
    cosine_from_parts(dot, na, nb)
}

pub fn jaccard(a: &ItemSet, b: &ItemSet) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

const WINKLER_SCALE: f64 = 0.1;
const WINKLER_MAX_PREFIX: usize = 4;

fn jaro_chars(a: &[char], b: &[char]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_taken = alloc::vec![false; b.len()];
    let mut a_matched: Vec<char> = Vec::new();
    for (i, &ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_taken[j] && b[j] == ca {
                b_taken[j] = true;
                a_matched.push(ca);
                break;
            }
        }
    }
    let m = a_matched.len();
    if m == 0 {
        return 0.0;
    }
    let b_matched = b.iter().zip(&b_taken).filter(|(_, t)| **t).map(|(c, _)| *c);
    let half_transpositions = a_matched
        .iter()
        .zip(b_matched)
        .filter(|(x, y)| **x != *y)
        .count();
    let m = m as f64;
    let t = (half_transpositions / 2) as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro-Winkler similarity with prefix scale 0.1 and prefix length ≤ 4.
pub fn jaro_winkler_similarity(a: &str, b: &str) -> f64 {
    let mut a: Vec<char> = a.chars().collect();
    let mut b: Vec<char> = b.chars().collect();
    // Greedy matching depends on argument order; fix it so the result is symmetric.
    if a > b {
        core::mem::swap(&mut a, &mut b);
    }
    let jaro = jaro_chars(&a, &b);
    let prefix = a
        .iter()
        .zip(&b)
        .take(WINKLER_MAX_PREFIX)
        .take_while(|(x, y)| x == y)
        .count();
    jaro + prefix as f64 * WINKLER_SCALE * (1.0 - jaro)
}

pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    (1.0 - jaro_winkler_similarity(a, b)).max(0.0)
}

/// `1 - c(a & b) / min(c(a), c(b))` where `c` counts set bits.
pub fn simpson(a: &Bitmap, b: &Bitmap) -> Result<f64, DistanceError> {
    let (ca, cb) = (a.count_ones(), b.count_ones());
    if ca == 0 || cb == 0 {
        return Err(DistanceError::EmptyBitmap);
    }
    Ok(1.0 - a.and_count(b) as f64 / ca.min(cb) as f64)
}

pub fn hamming<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64, DistanceError> {
    if a.len() != b.len() {
        return Err(DistanceError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as f64)
}

pub fn hamming_str(a: &str, b: &str) -> Result<f64, DistanceError> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    hamming(&a, &b)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Euclidean;

impl Distance<[f64]> for Euclidean {
    fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
        euclidean(a, b)
    }
}

impl Distance<Vec<f64>> for Euclidean {
    fn eval(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64, DistanceError> {
        euclidean(a, b)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Cosine;

impl Distance<SparseVector> for Cosine {
    fn eval(&self, a: &SparseVector, b: &SparseVector) -> Result<f64, DistanceError> {
        cosine(a, b)
    }
}

impl Distance<Vec<f64>> for Cosine {
    fn eval(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64, DistanceError> {
        cosine_dense(a, b)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Jaccard;

impl Distance<ItemSet> for Jaccard {
    fn eval(&self, a: &ItemSet, b: &ItemSet) -> Result<f64, DistanceError> {
        Ok(jaccard(a, b))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct JaroWinkler;

impl Distance<str> for JaroWinkler {
    fn eval(&self, a: &str, b: &str) -> Result<f64, DistanceError> {
        Ok(jaro_winkler(a, b))
    }
}

impl Distance<alloc::string::String> for JaroWinkler {
    fn eval(&self, a: &alloc::string::String, b: &alloc::string::String) -> Result<f64, DistanceError> {
        Ok(jaro_winkler(a, b))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Simpson;

impl Distance<Bitmap> for Simpson {
    fn eval(&self, a: &Bitmap, b: &Bitmap) -> Result<f64, DistanceError> {
        simpson(a, b)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Hamming;

impl Distance<str> for Hamming {
    fn eval(&self, a: &str, b: &str) -> Result<f64, DistanceError> {
        hamming_str(a, b)
    }
}

impl Distance<alloc::string::String> for Hamming {
    fn eval(&self, a: &alloc::string::String, b: &alloc::string::String) -> Result<f64, DistanceError> {
        hamming_str(a, b)
    }
}

impl Distance<Vec<u8>> for Hamming {
    fn eval(&self, a: &Vec<u8>, b: &Vec<u8>) -> Result<f64, DistanceError> {
        hamming(a, b)
    }
}
