//! Flexible, incremental, scalable, hierarchical density-based clustering.
//!
//! Items are opaque payloads compared by a user-supplied symmetric distance
//! function (no triangle inequality assumed). Every distance evaluated while
//! inserting an item into an HNSW graph is fed into per-item neighbor heaps
//! and into a bounded buffer of candidate edges of the mutual-reachability
//! graph. The buffer is periodically folded into an approximate minimum
//! spanning forest, from which an HDBSCAN*-style condensed tree and flat
//! clustering can be extracted at any time.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use fishdbc_core::{Config, Fishdbc};
//!
//! let dist = |a: &f64, b: &f64| (a - b).abs();
//! let mut engine = Fishdbc::new(dist, Config::new(3)).unwrap();
//! for x in [0.0, 0.1, 0.2, 0.3, 10.0, 10.1, 10.2, 10.3] {
//!     engine.add(x).unwrap();
//! }
//! let result = engine.cluster(3).unwrap();
//! assert_eq!(result.cluster_count(), 2);
//! ```
#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod config;
pub mod distance;
mod engine;
pub mod hierarchy;
pub mod hnsw;
pub mod metrics;
pub mod msf;
pub mod neighbors;
pub mod oracle;
mod weight;

pub use config::{Config, ConfigError};
pub use distance::{Distance, DistanceError};
pub use engine::{Fishdbc, FishdbcError};
pub use hierarchy::{ClusterResult, CondensedTree, NOISE};
pub use hnsw::DistanceTriple;
pub use weight::{Edge, ItemId, Weight};

pub(crate) type FxHashMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;
