//! Haar-like bitmask filters over probe vectors.
//!
//! A filter is a window of `L` mask entries placed after `P` zeros and
//! followed by `S = 1784 - P - L` zeros. The four kinds differ only in the
//! sign pattern of the window:
//!
//! * `A`: first half `+1`, second half `-1`
//! * `B`: first half `-1`, second half `+1`
//! * `C`: all `-1`
//! * `D`: all `+1`
//!
//! The response of a filter is the dot product of its mask with the bits.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ProbeBits, VECTOR_BITS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BankError {
    #[error("filter length {0} must be between 1 and {VECTOR_BITS}")]
    BadLength(usize),
    #[error("kind {kind} filters need an even length, got {length}")]
    OddLength { kind: FilterKind, length: usize },
    #[error("filter window {prefix}..{} exceeds {VECTOR_BITS} bits", prefix + length)]
    OutOfBounds { prefix: usize, length: usize },
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("no filter kinds selected")]
    NoKinds,
    #[error("cannot subsample {requested} filters from a bank of {available}")]
    Subsample { requested: usize, available: usize },
    #[error("unknown filter kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FilterKind {
    A,
    B,
    C,
    D,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [FilterKind::A, FilterKind::B, FilterKind::C, FilterKind::D];

    fn needs_even_length(self) -> bool {
        matches!(self, FilterKind::A | FilterKind::B)
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            FilterKind::A => "A",
            FilterKind::B => "B",
            FilterKind::C => "C",
            FilterKind::D => "D",
        };
        f.write_str(c)
    }
}

impl FromStr for FilterKind {
    type Err = BankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(FilterKind::A),
            "B" | "b" => Ok(FilterKind::B),
            "C" | "c" => Ok(FilterKind::C),
            "D" | "d" => Ok(FilterKind::D),
            other => Err(BankError::UnknownKind(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitmaskFilter {
    kind: FilterKind,
    length: usize,
    prefix: usize,
}

impl BitmaskFilter {
    pub fn new(kind: FilterKind, length: usize, prefix: usize) -> Result<Self, BankError> {
        if length == 0 || length > VECTOR_BITS {
            return Err(BankError::BadLength(length));
        }
        if kind.needs_even_length() && length % 2 != 0 {
            return Err(BankError::OddLength { kind, length });
        }
        if prefix + length > VECTOR_BITS {
            return Err(BankError::OutOfBounds { prefix, length });
        }
        Ok(BitmaskFilter { kind, length, prefix })
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    /// Number of non-zero mask entries, `L`.
    pub fn length(&self) -> usize {
        self.length
    }

    /// Leading zeros, `P`.
    pub fn prefix(&self) -> usize {
        self.prefix
    }

    /// Trailing zeros, `S`.
    pub fn suffix(&self) -> usize {
        VECTOR_BITS - self.prefix - self.length
    }

    pub fn window(&self) -> std::ops::Range<usize> {
        self.prefix..self.prefix + self.length
    }

    /// Mask entry at offset `k` inside the window.
    pub fn mask(&self, k: usize) -> i32 {
        let first_half = k < self.length / 2;
        match self.kind {
            FilterKind::A => {
                if first_half {
                    1
                } else {
                    -1
                }
            }
            FilterKind::B => {
                if first_half {
                    -1
                } else {
                    1
                }
            }
            FilterKind::C => -1,
            FilterKind::D => 1,
        }
    }

    pub fn response(&self, x: &ProbeBits) -> i32 {
        let half = self.length / 2;
        match self.kind {
            FilterKind::D => x.count_ones(self.prefix, self.length) as i32,
            FilterKind::C => -(x.count_ones(self.prefix, self.length) as i32),
            FilterKind::A | FilterKind::B => {
                let first = x.count_ones(self.prefix, half) as i32;
                let second = x.count_ones(self.prefix + half, half) as i32;
                if self.kind == FilterKind::A {
                    first - second
                } else {
                    second - first
                }
            }
        }
    }

    /// Smallest and largest achievable response.
    pub fn response_range(&self) -> (i32, i32) {
        let l = self.length as i32;
        match self.kind {
            FilterKind::A | FilterKind::B => (-l / 2, l / 2),
            FilterKind::C => (-l, 0),
            FilterKind::D => (0, l),
        }
    }
}

impl fmt::Display for BitmaskFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(L={}, P={}, S={})",
            self.kind,
            self.length,
            self.prefix,
            self.suffix()
        )
    }
}

/// Parameters the candidate set was generated from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankParams {
    pub lengths: Vec<usize>,
    pub stride: usize,
    pub kinds: Vec<FilterKind>,
    /// Seeded random subsample of the enumerated bank, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<(usize, u64)>,
}

impl Default for BankParams {
    fn default() -> Self {
        BankParams {
            lengths: vec![4, 8, 16],
            stride: 8,
            kinds: FilterKind::ALL.to_vec(),
            subsample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterBank {
    filters: Vec<BitmaskFilter>,
    params: BankParams,
}

/// Enumerates filters ordered by kind, then length, then prefix.
pub fn generate_bank(lengths: &[usize], stride: usize, kinds: &[FilterKind]) -> Result<FilterBank, BankError> {
    if stride == 0 {
        return Err(BankError::ZeroStride);
    }
    let mut lengths = lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    let mut kinds = kinds.to_vec();
    kinds.sort_unstable();
    kinds.dedup();
    if kinds.is_empty() {
        return Err(BankError::NoKinds);
    }

    let mut filters = Vec::new();
    for &kind in &kinds {
        for &length in &lengths {
            // validates the length once per (kind, L)
            BitmaskFilter::new(kind, length, 0)?;
            filters.extend((0..=VECTOR_BITS - length).step_by(stride).map(|prefix| BitmaskFilter {
                kind,
                length,
                prefix,
            }));
        }
    }
    Ok(FilterBank {
        filters,
        params: BankParams {
            lengths,
            stride,
            kinds,
            subsample: None,
        },
    })
}

impl FilterBank {
    pub fn from_params(params: &BankParams) -> Result<FilterBank, BankError> {
        let bank = generate_bank(&params.lengths, params.stride, &params.kinds)?;
        match params.subsample {
            Some((n, seed)) => bank.subsample(n, seed),
            None => Ok(bank),
        }
    }

    /// Keeps a seeded random subset of `n` filters, preserving bank order.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<FilterBank, BankError> {
        if n > self.filters.len() {
            return Err(BankError::Subsample {
                requested: n,
                available: self.filters.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = index::sample(&mut rng, self.filters.len(), n).into_vec();
        keep.sort_unstable();
        Ok(FilterBank {
            filters: keep.into_iter().map(|i| self.filters[i]).collect(),
            params: BankParams {
                subsample: Some((n, seed)),
                ..self.params.clone()
            },
        })
    }

    pub fn from_filters(filters: Vec<BitmaskFilter>) -> FilterBank {
        let mut lengths: Vec<usize> = filters.iter().map(|f| f.length).collect();
        lengths.sort_unstable();
        lengths.dedup();
        let mut kinds: Vec<FilterKind> = filters.iter().map(|f| f.kind).collect();
        kinds.sort_unstable();
        kinds.dedup();
        FilterBank {
            filters,
            params: BankParams {
                lengths,
                stride: 0,
                kinds,
                subsample: None,
            },
        }
    }

    pub fn filters(&self) -> &[BitmaskFilter] {
        &self.filters
    }

    pub fn params(&self) -> &BankParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&BitmaskFilter> {
        self.filters.get(index)
    }
}

/// Row-major table of filter responses, one row per probe vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl ResponseMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

pub fn response_matrix<'a, I>(bank: &FilterBank, xs: I) -> ResponseMatrix
where
    I: IntoIterator<Item = &'a ProbeBits>,
{
    let xs: Vec<&ProbeBits> = xs.into_iter().collect();
    let cols = bank.len();
    let mut data = vec![0i8; xs.len() * cols];
    if cols > 0 {
        data.par_chunks_mut(cols).zip(xs.par_iter()).for_each(|(row, x)| {
            for (out, f) in row.iter_mut().zip(&bank.filters) {
                *out = f.response(x) as i8;
            }
        });
    }
    ResponseMatrix {
        rows: xs.len(),
        cols,
        data,
    }
}
