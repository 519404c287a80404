//! Compact fingerprints for 802.11 probe requests.
//!
//! Probe requests are dissected into fixed 1784-bit vectors, compressed to
//! `M`-bit binary fingerprints by boosted bitmask filters, and compared with
//! the Hamming distance for matching and online device counting.

pub mod cluster;
pub mod codec;
pub mod config;
pub mod eval;
pub mod filter;
pub mod ingest;
pub mod model;
pub mod pairs;
pub mod train;
