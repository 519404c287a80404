//! Fingerprint extraction, matching and the packed fingerprint batch format.

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::ingest::{ProbeBits, VECTOR_BITS};
use crate::model::FingerprintModel;
use crate::pairs::MatchLabel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchError {
    #[error("fingerprint lengths differ: {0} vs {1} bits")]
    LengthMismatch(usize, usize),
    #[error("fingerprints have {fingerprint} bits but the model has {model}")]
    ModelMismatch { fingerprint: usize, model: usize },
}

/// An `M`-bit binary descriptor. Bit `m` set means classifier `m` fired
/// (`+1`), clear means `-1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    len: usize,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn zeros(len: usize) -> Self {
        Fingerprint {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if b {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Fingerprint { len, words }
    }

    /// Parses a string of `0`/`1` characters, bit 0 first.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()
            .map(Self::from_bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, m: usize) -> bool {
        assert!(m < self.len, "bit {m} out of range for {}-bit fingerprint", self.len);
        self.words[m / 64] >> (m % 64) & 1 == 1
    }

    pub fn set(&mut self, m: usize, value: bool) {
        assert!(m < self.len, "bit {m} out of range for {}-bit fingerprint", self.len);
        if value {
            self.words[m / 64] |= 1 << (m % 64);
        } else {
            self.words[m / 64] &= !(1 << (m % 64));
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|m| self.bit(m))
    }

    pub fn complement(&self) -> Fingerprint {
        Fingerprint::from_bits(self.iter().map(|b| !b))
    }

    /// Packs into `ceil(M / 8)` bytes, bit `m` at byte `m / 8`, most
    /// significant bit first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for m in 0..self.len {
            if self.bit(m) {
                out[m / 8] |= 0x80 >> (m % 8);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        Fingerprint::from_bits((0..len).map(|m| bytes[m / 8] & (0x80 >> (m % 8)) != 0))
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn fingerprint(model: &FingerprintModel, x: &ProbeBits) -> Fingerprint {
    Fingerprint::from_bits(model.classifiers().iter().map(|c| c.bit(x)))
}

pub fn hamming(f1: &Fingerprint, f2: &Fingerprint) -> Result<u32, MatchError> {
    if f1.len != f2.len {
        return Err(MatchError::LengthMismatch(f1.len, f2.len));
    }
    Ok(f1.words.iter().zip(&f2.words).map(|(a, b)| (a ^ b).count_ones()).sum())
}

/// Confidence-weighted agreement `sum_m c_m * s_m`, where `s_m` is `+1` when
/// bit `m` agrees and `-1` otherwise. Higher means more likely the same device.
pub fn weighted_score(model: &FingerprintModel, f1: &Fingerprint, f2: &Fingerprint) -> Result<f64, MatchError> {
    if f1.len != f2.len {
        return Err(MatchError::LengthMismatch(f1.len, f2.len));
    }
    if f1.len != model.bits() {
        return Err(MatchError::ModelMismatch {
            fingerprint: f1.len,
            model: model.bits(),
        });
    }
    Ok(model
        .confidences()
        .enumerate()
        .map(|(m, c)| if f1.bit(m) == f2.bit(m) { c } else { -c })
        .sum())
}

/// `+1` iff the Hamming distance is strictly below `tau`.
pub fn predict_match(f1: &Fingerprint, f2: &Fingerprint, tau: u32) -> Result<MatchLabel, MatchError> {
    Ok(if hamming(f1, f2)? < tau {
        MatchLabel::Match
    } else {
        MatchLabel::NonMatch
    })
}

/// `+1` iff the weighted agreement score is at least `tau_w`.
pub fn predict_match_weighted(
    model: &FingerprintModel,
    f1: &Fingerprint,
    f2: &Fingerprint,
    tau_w: f64,
) -> Result<MatchLabel, MatchError> {
    Ok(if weighted_score(model, f1, f2)? >= tau_w {
        MatchLabel::Match
    } else {
        MatchLabel::NonMatch
    })
}

/// Size of the raw probe vector relative to an `M`-bit fingerprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionRatio {
    pub raw_bits: u32,
    pub fingerprint_bits: u32,
}

impl CompressionRatio {
    pub fn for_bits(fingerprint_bits: u32) -> Self {
        CompressionRatio {
            raw_bits: VECTOR_BITS as u32,
            fingerprint_bits,
        }
    }

    pub fn value(&self) -> f64 {
        self.raw_bits as f64 / self.fingerprint_bits as f64
    }

    /// The ratio truncated to tenths, computed in integers
    /// (1784/32 = 55.75 reports as 55.7).
    pub fn tenths(&self) -> u32 {
        self.raw_bits * 10 / self.fingerprint_bits
    }
}

impl fmt::Display for CompressionRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.tenths();
        write!(f, "{}.{}", t / 10, t % 10)
    }
}

pub const BATCH_MAGIC: [u8; 4] = *b"PRFP";
pub const BATCH_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("fingerprint batch i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a fingerprint batch (bad magic)")]
    BadMagic,
    #[error("unsupported fingerprint batch version {found}, expected {expected}")]
    Version { found: u16, expected: u16 },
    #[error("fingerprint batch truncated at record {0}")]
    Truncated(usize),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("batch too large: {0}")]
    TooLarge(String),
}

/// Writes `magic | version u16 | reserved u16 | M u32 | count u32` (little
/// endian) followed by the packed fingerprints.
pub fn write_batch<W: Write>(mut w: W, bits: usize, fingerprints: &[Fingerprint]) -> Result<(), BatchError> {
    let m = u32::try_from(bits).map_err(|_| BatchError::TooLarge(format!("M = {bits}")))?;
    let count = u32::try_from(fingerprints.len())
        .map_err(|_| BatchError::TooLarge(format!("{} records", fingerprints.len())))?;
    w.write_all(&BATCH_MAGIC)?;
    w.write_all(&BATCH_VERSION.to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    w.write_all(&m.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    for f in fingerprints {
        if f.len() != bits {
            return Err(MatchError::LengthMismatch(bits, f.len()).into());
        }
        w.write_all(&f.to_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Returns `(M, fingerprints)`.
pub fn read_batch<R: Read>(mut r: R) -> Result<(usize, Vec<Fingerprint>), BatchError> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => BatchError::BadMagic,
        _ => BatchError::Io(e),
    })?;
    if header[..4] != BATCH_MAGIC {
        return Err(BatchError::BadMagic);
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != BATCH_VERSION {
        return Err(BatchError::Version {
            found: version,
            expected: BATCH_VERSION,
        });
    }
    let bits = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut record = vec![0u8; bits.div_ceil(8)];
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        r.read_exact(&mut record).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => BatchError::Truncated(i),
            _ => BatchError::Io(e),
        })?;
        out.push(Fingerprint::from_bytes(&record, bits));
    }
    Ok((bits, out))
}

pub fn save_batch(path: &Path, bits: usize, fingerprints: &[Fingerprint]) -> Result<(), BatchError> {
    write_batch(BufWriter::new(File::create(path)?), bits, fingerprints)
}

pub fn load_batch(path: &Path) -> Result<(usize, Vec<Fingerprint>), BatchError> {
    read_batch(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{BitmaskFilter, FilterKind};
    use crate::model::{FingerprintModel, WeakClassifier};
    use proptest::prelude::*;

    fn model_of(specs: &[(FilterKind, usize, usize, i32, f64)]) -> FingerprintModel {
        let classifiers = specs
            .iter()
            .enumerate()
            .map(|(i, &(kind, len, prefix, t, c))| WeakClassifier {
                filter_index: i,
                filter: BitmaskFilter::new(kind, len, prefix).unwrap(),
                threshold: t,
                confidence: c,
                training_error: 0.1,
            })
            .collect();
        FingerprintModel::new(classifiers, crate::model::tests::metadata()).unwrap()
    }

    #[test]
    fn single_classifier_bits() {
        let model = model_of(&[(FilterKind::D, 8, 0, 3, 1.0)]);
        let mut x = ProbeBits::zeroed();
        x.as_bytes_mut()[0] = 0xFF;
        assert_eq!(fingerprint(&model, &x).to_string(), "1");
        assert_eq!(fingerprint(&model, &ProbeBits::zeroed()).to_string(), "0");
        // strict inequality: response 3 is not above 3
        x.as_bytes_mut()[0] = 0xE0;
        assert_eq!(fingerprint(&model, &x).to_string(), "0");
    }

    #[test]
    fn hamming_examples() {
        let a = Fingerprint::parse("1010").unwrap();
        let b = Fingerprint::parse("1001").unwrap();
        assert_eq!(hamming(&a, &b), Ok(2));
        assert_eq!(hamming(&a, &a), Ok(0));
        let f = Fingerprint::parse("1100101011110000").unwrap();
        assert_eq!(hamming(&f, &f.complement()), Ok(16));
        assert_eq!(hamming(&a, &f), Err(MatchError::LengthMismatch(4, 16)));
    }

    #[test]
    fn predict_match_thresholds() {
        let a = Fingerprint::parse("10110").unwrap();
        let b = Fingerprint::parse("00111").unwrap();
        assert_eq!(predict_match(&a, &b, 0), Ok(MatchLabel::NonMatch));
        assert_eq!(predict_match(&a, &a, 0), Ok(MatchLabel::NonMatch));
        assert_eq!(predict_match(&a, &b, 6), Ok(MatchLabel::Match));
        assert_eq!(predict_match(&a, &a, 1), Ok(MatchLabel::Match));
        assert_eq!(predict_match(&a, &b, 2), Ok(MatchLabel::NonMatch));
        assert_eq!(predict_match(&a, &b, 3), Ok(MatchLabel::Match));
    }

    #[test]
    fn weighted_score_examples() {
        let model = model_of(&[
            (FilterKind::D, 8, 0, 3, 2.5),
            (FilterKind::C, 8, 8, -2, 0.5),
            (FilterKind::A, 16, 16, 0, 1.25),
        ]);
        let f = Fingerprint::parse("101").unwrap();
        assert_eq!(weighted_score(&model, &f, &f), Ok(4.25));
        assert_eq!(weighted_score(&model, &f, &f.complement()), Ok(-4.25));
        let g = Fingerprint::parse("111").unwrap();
        assert_eq!(weighted_score(&model, &f, &g), Ok(2.5 - 0.5 + 1.25));
        assert_eq!(predict_match_weighted(&model, &f, &g, 3.25), Ok(MatchLabel::Match));
        assert_eq!(predict_match_weighted(&model, &f, &g, 3.26), Ok(MatchLabel::NonMatch));
        let short = Fingerprint::parse("10").unwrap();
        assert!(matches!(
            weighted_score(&model, &short, &short),
            Err(MatchError::ModelMismatch {
                fingerprint: 2,
                model: 3
            })
        ));
    }

    #[test]
    fn compression_ratios() {
        let r16 = CompressionRatio::for_bits(16);
        assert_eq!(r16.value(), 111.5);
        assert_eq!(r16.to_string(), "111.5");
        assert_eq!(CompressionRatio::for_bits(32).to_string(), "55.7");
        assert_eq!(CompressionRatio::for_bits(64).to_string(), "27.8");
        assert_eq!(CompressionRatio::for_bits(1784).to_string(), "1.0");
    }

    #[test]
    fn byte_packing_msb_first() {
        let f = Fingerprint::parse("1000000001").unwrap();
        assert_eq!(f.to_bytes(), vec![0x80, 0x40]);
        assert_eq!(Fingerprint::from_bytes(&[0x80, 0x40], 10), f);
    }

    #[test]
    fn batch_errors() {
        let fps = vec![Fingerprint::parse("1011").unwrap(); 3];
        let mut buf = Vec::new();
        write_batch(&mut buf, 4, &fps).unwrap();
        assert_eq!(buf.len(), 16 + 3);
        assert_eq!(read_batch(&buf[..]).unwrap(), (4, fps.clone()));
        assert!(matches!(
            read_batch(&buf[..buf.len() - 1]),
            Err(BatchError::Truncated(2))
        ));
        assert!(matches!(read_batch(&b"nope"[..]), Err(BatchError::BadMagic)));
        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(
            read_batch(&bad[..]),
            Err(BatchError::Version { found: 2, .. })
        ));
        assert!(write_batch(Vec::new(), 5, &fps).is_err());
    }

    fn arb_fp(len: usize) -> impl Strategy<Value = Fingerprint> {
        proptest::collection::vec(any::<bool>(), len).prop_map(Fingerprint::from_bits)
    }

    proptest! {
        #[test]
        fn batch_round_trip(len in 1usize..130, n in 0usize..6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fps: Vec<Fingerprint> = (0..n).map(|_| Fingerprint::from_bits((0..len).map(|_| rng.random::<bool>()))).collect();
            let mut buf = Vec::new();
            write_batch(&mut buf, len, &fps).unwrap();
            prop_assert_eq!(buf.len(), 16 + n * len.div_ceil(8));
            prop_assert_eq!(read_batch(&buf[..]).unwrap(), (len, fps));
        }

        #[test]
        fn hamming_is_a_metric((a, b, c) in (1usize..100).prop_flat_map(|n| (arb_fp(n), arb_fp(n), arb_fp(n)))) {
            let d = |x: &Fingerprint, y: &Fingerprint| hamming(x, y).unwrap();
            prop_assert_eq!(d(&a, &a), 0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
            prop_assert_eq!(d(&a, &b) == 0, a == b);
        }
    }
}
