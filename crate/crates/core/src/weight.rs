use core::cmp::Ordering;
use core::fmt;

/// Dense handle of an inserted item; ids are assigned `0..n` in insertion order.
pub type ItemId = usize;

/// A non-negative distance or edge weight. `+∞` is allowed, NaN is not.
#[derive(Clone, Copy, Default)]
pub struct Weight(f64);

impl Weight {
    pub const ZERO: Weight = Weight(0.0);
    pub const INFINITY: Weight = Weight(f64::INFINITY);

    /// Returns `None` for NaN and for negative values.
    pub fn new(value: f64) -> Option<Weight> {
        if value >= 0.0 {
            // `-0.0 >= 0.0` holds; normalise so that bit patterns stay canonical.
            Some(Weight(value + 0.0))
        } else {
            None
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Density level `1 / weight`, with `λ(0) = +∞` and `λ(∞) = 0`.
    #[inline]
    pub fn lambda(self) -> f64 {
        if self.0 == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.0
        }
    }
}

impl PartialEq for Weight {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Weight {}

impl core::hash::Hash for Weight {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

/// Undirected edge in canonical form (`lo < hi`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub lo: ItemId,
    pub hi: ItemId,
    pub weight: Weight,
}

impl Edge {
    /// Canonicalises the endpoint order. Self-loops are rejected.
    pub fn new(a: ItemId, b: ItemId, weight: Weight) -> Option<Edge> {
        match a.cmp(&b) {
            Ordering::Less => Some(Edge { lo: a, hi: b, weight }),
            Ordering::Greater => Some(Edge { lo: b, hi: a, weight }),
            Ordering::Equal => None,
        }
    }

    #[inline]
    pub fn pair(&self) -> (ItemId, ItemId) {
        (self.lo, self.hi)
    }

    /// Total order used for every spanning-forest computation in the crate:
    /// by weight, then by endpoints.
    #[inline]
    pub fn sort_key(&self) -> (Weight, ItemId, ItemId) {
        (self.weight, self.lo, self.hi)
    }
}
