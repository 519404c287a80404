//! Balanced matching / non-matching pair datasets.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ProbeVector;

/// Name of the generator used for every seeded draw in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Ground truth (or prediction) for a pair of probe requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchLabel {
    /// Same device, `+1`.
    Match,
    /// Different devices, `-1`.
    NonMatch,
}

impl MatchLabel {
    pub fn sign(self) -> i8 {
        match self {
            MatchLabel::Match => 1,
            MatchLabel::NonMatch => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Option<MatchLabel> {
        match sign {
            1 => Some(MatchLabel::Match),
            -1 => Some(MatchLabel::NonMatch),
            _ => None,
        }
    }

    pub fn is_match(self) -> bool {
        self == MatchLabel::Match
    }
}

impl fmt::Display for MatchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchLabel::Match => "+1",
            MatchLabel::NonMatch => "-1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub a: usize,
    pub b: usize,
    pub y: MatchLabel,
}

impl LabeledPair {
    fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

#[derive(Debug, Error)]
pub enum PairError {
    #[error("no device has at least two probe vectors")]
    NoMatchingDevice,
    #[error("requested {requested} {relation} pairs but at most {available} exist")]
    Capacity {
        relation: &'static str,
        requested: usize,
        available: u64,
    },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("need at least 2 {relation} pairs to split, found {count}")]
    TooFewPairs { relation: &'static str, count: usize },
    #[error("pair file i/o: {0}")]
    Io(#[from] io::Error),
    #[error("pair file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("pair ({a}, {b}) is inconsistent with the vector labels")]
    Inconsistent { a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    pub vectors: Arc<Vec<ProbeVector>>,
    pub pairs: Vec<LabeledPair>,
    pub rng_seed: u64,
}

impl PairDataset {
    pub fn new(vectors: Arc<Vec<ProbeVector>>, pairs: Vec<LabeledPair>, rng_seed: u64) -> Result<Self, PairError> {
        let ds = PairDataset {
            vectors,
            pairs,
            rng_seed,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn count(&self, y: MatchLabel) -> usize {
        self.pairs.iter().filter(|p| p.y == y).count()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Checks index bounds, `a != b`, label agreement and uniqueness.
    pub fn validate(&self) -> Result<(), PairError> {
        let mut seen = HashSet::with_capacity(self.pairs.len());
        for p in &self.pairs {
            let (Some(va), Some(vb)) = (self.vectors.get(p.a), self.vectors.get(p.b)) else {
                return Err(PairError::Inconsistent { a: p.a, b: p.b });
            };
            let same = va.device_label == vb.device_label;
            if p.a == p.b || same != p.y.is_match() || !seen.insert(p.key()) {
                return Err(PairError::Inconsistent { a: p.a, b: p.b });
            }
        }
        Ok(())
    }
}

/// Draws distinct integers from `0..space` without replacement.
///
/// Rejection sampling while less than half the space is used, then the
/// remainder is materialised and shuffled.
struct UniqueDraws {
    space: u64,
    drawn: HashSet<u64>,
    pool: Option<Vec<u64>>,
}

impl UniqueDraws {
    fn new(space: u64) -> Self {
        UniqueDraws {
            space,
            drawn: HashSet::new(),
            pool: None,
        }
    }

    fn remaining(&self) -> u64 {
        match &self.pool {
            Some(pool) => pool.len() as u64,
            None => self.space - self.drawn.len() as u64,
        }
    }

    fn draw<R: Rng>(&mut self, rng: &mut R) -> Option<u64> {
        if self.pool.is_none() && self.drawn.len() as u64 * 2 >= self.space {
            let mut pool: Vec<u64> = (0..self.space).filter(|r| !self.drawn.contains(r)).collect();
            pool.shuffle(rng);
            self.pool = Some(pool);
        }
        if let Some(pool) = &mut self.pool {
            return pool.pop();
        }
        loop {
            let r = rng.random_range(0..self.space);
            if self.drawn.insert(r) {
                return Some(r);
            }
        }
    }
}

/// Inverse of the row-major enumeration of `{(i, j) : 0 <= i < j < k}`.
fn unrank_pair(r: u64, k: u64) -> (u64, u64) {
    let start = |i: u64| i * (2 * k - i - 1) / 2;
    let kf = k as f64;
    let disc = (2.0 * kf - 1.0).powi(2) - 8.0 * r as f64;
    let mut i = ((2.0 * kf - 1.0 - disc.max(0.0).sqrt()) / 2.0).floor().max(0.0) as u64;
    i = i.min(k.saturating_sub(2));
    while i > 0 && start(i) > r {
        i -= 1;
    }
    while start(i + 1) <= r {
        i += 1;
    }
    (i, i + 1 + r - start(i))
}

fn choose2(k: usize) -> u64 {
    let k = k as u64;
    k * k.saturating_sub(1) / 2
}

/// Groups vector indices by device label, devices in order of first appearance.
pub(crate) fn group_by_device(vectors: &[ProbeVector]) -> Vec<Vec<usize>> {
    let mut order: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let g = *order.entry(v.device_label.as_str()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Samples `n_matching` unique same-device pairs and as many unique
/// cross-device pairs.
///
/// Matching pairs visit devices round-robin, drawing uniformly among the
/// device's unused pairs; non-matching pairs first pick a device pair
/// uniformly among those with unused combinations.
pub fn build_pairs(vectors: Arc<Vec<ProbeVector>>, n_matching: usize, seed: u64) -> Result<PairDataset, PairError> {
    let groups = group_by_device(&vectors);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let match_capacity: u64 = groups.iter().map(|g| choose2(g.len())).sum();
    if match_capacity == 0 {
        return Err(PairError::NoMatchingDevice);
    }
    if n_matching as u64 > match_capacity {
        return Err(PairError::Capacity {
            relation: "matching",
            requested: n_matching,
            available: match_capacity,
        });
    }
    let total = vectors.len() as u64;
    let squares: u64 = groups.iter().map(|g| (g.len() as u64).pow(2)).sum();
    let cross_capacity = (total * total - squares) / 2;
    if n_matching as u64 > cross_capacity {
        return Err(PairError::Capacity {
            relation: "non-matching",
            requested: n_matching,
            available: cross_capacity,
        });
    }

    let mut pairs = Vec::with_capacity(2 * n_matching);

    let mut device_draws: Vec<(usize, UniqueDraws)> = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| g.len() >= 2)
        .map(|(d, g)| (d, UniqueDraws::new(choose2(g.len()))))
        .collect();
    let devices_with_pairs = device_draws.len();
    let mut turn = 0;
    while pairs.len() < n_matching {
        let (d, draws) = &mut device_draws[turn % devices_with_pairs];
        turn += 1;
        if draws.remaining() == 0 {
            continue;
        }
        let members = &groups[*d];
        let r = draws.draw(&mut rng).expect("remaining > 0");
        let (i, j) = unrank_pair(r, members.len() as u64);
        pairs.push(LabeledPair {
            a: members[i as usize],
            b: members[j as usize],
            y: MatchLabel::Match,
        });
    }

    let mut active: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|d| (d + 1..groups.len()).map(move |e| (d, e)))
        .collect();
    let mut cross_draws: HashMap<(usize, usize), UniqueDraws> = HashMap::new();
    let mut produced = 0;
    while produced < n_matching {
        let slot = rng.random_range(0..active.len());
        let (d, e) = active[slot];
        let draws = cross_draws
            .entry((d, e))
            .or_insert_with(|| UniqueDraws::new(groups[d].len() as u64 * groups[e].len() as u64));
        let r = draws
            .draw(&mut rng)
            .expect("active device pairs have unused combinations");
        if draws.remaining() == 0 {
            active.swap_remove(slot);
        }
        let ke = groups[e].len() as u64;
        let (a, b) = (groups[d][(r / ke) as usize], groups[e][(r % ke) as usize]);
        pairs.push(LabeledPair {
            a: a.min(b),
            b: a.max(b),
            y: MatchLabel::NonMatch,
        });
        produced += 1;
    }

    Ok(PairDataset {
        vectors,
        pairs,
        rng_seed: seed,
    })
}

/// Stratified split; each class is shuffled and `round(n * train_fraction)`
/// of it goes to the training side. Pairs keep their original relative order.
pub fn split(ds: &PairDataset, train_fraction: f64, seed: u64) -> Result<(PairDataset, PairDataset), PairError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(PairError::BadFraction(train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; ds.pairs.len()];
    for (relation, y) in [("matching", MatchLabel::Match), ("non-matching", MatchLabel::NonMatch)] {
        let mut members: Vec<usize> = (0..ds.pairs.len()).filter(|&i| ds.pairs[i].y == y).collect();
        if members.len() < 2 {
            return Err(PairError::TooFewPairs {
                relation,
                count: members.len(),
            });
        }
        let take = ((members.len() as f64 * train_fraction).round() as usize).clamp(1, members.len() - 1);
        members.shuffle(&mut rng);
        for &i in &members[..take] {
            in_train[i] = true;
        }
    }
    let pick = |want: bool| PairDataset {
        vectors: Arc::clone(&ds.vectors),
        pairs: ds
            .pairs
            .iter()
            .zip(&in_train)
            .filter(|(_, &t)| t == want)
            .map(|(p, _)| *p)
            .collect(),
        rng_seed: seed,
    };
    Ok((pick(true), pick(false)))
}

const PAIRS_HEADER: &str = "# probefp pairs v1";

pub fn write_pairs<W: Write>(mut w: W, ds: &PairDataset) -> io::Result<()> {
    writeln!(w, "{PAIRS_HEADER}")?;
    writeln!(w, "seed={}", ds.rng_seed)?;
    writeln!(w, "rng={RNG_ALGORITHM}")?;
    writeln!(w, "vectors={}", ds.vectors.len())?;
    writeln!(w, "matching={}", ds.count(MatchLabel::Match))?;
    writeln!(w, "non_matching={}", ds.count(MatchLabel::NonMatch))?;
    writeln!(w, "a,b,y")?;
    for p in &ds.pairs {
        writeln!(w, "{},{},{}", p.a, p.b, p.y.sign())?;
    }
    w.flush()
}

/// Parses the text form and re-attaches it to the vectors it indexes.
pub fn parse_pairs(text: &str, vectors: Arc<Vec<ProbeVector>>) -> Result<PairDataset, PairError> {
    let err = |line: usize, message: String| PairError::Parse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, PAIRS_HEADER)) => {}
        _ => return Err(err(1, format!("expected {PAIRS_HEADER:?}"))),
    }
    let mut header: HashMap<String, String> = HashMap::new();
    let mut pairs = Vec::new();
    let mut in_body = false;
    for (line, content) in lines {
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if !in_body {
            if content == "a,b,y" {
                in_body = true;
            } else if let Some((k, v)) = content.split_once('=') {
                header.insert(k.trim().to_owned(), v.trim().to_owned());
            } else {
                return Err(err(line, format!("unexpected header line {content:?}")));
            }
            continue;
        }
        let fields: Vec<&str> = content.split(',').collect();
        if fields.len() != 3 {
            return Err(err(line, format!("expected 3 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.trim().parse::<i64>().map_err(|e| err(line, format!("{s:?}: {e}")));
        let (a, b, y) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
        let y = MatchLabel::from_sign(y).ok_or_else(|| err(line, format!("label {y} is not 1 or -1")))?;
        if a < 0 || b < 0 {
            return Err(err(line, "negative index".into()));
        }
        pairs.push(LabeledPair {
            a: a as usize,
            b: b as usize,
            y,
        });
    }
    if !in_body {
        return Err(err(0, "missing a,b,y column header".into()));
    }
    let seed = header
        .get("seed")
        .ok_or_else(|| err(0, "missing seed".into()))?
        .parse::<u64>()
        .map_err(|e| err(0, format!("seed: {e}")))?;
    if let Some(n) = header.get("vectors") {
        if n.parse::<usize>().ok() != Some(vectors.len()) {
            return Err(err(
                0,
                format!("pairs index {n} vectors, dataset has {}", vectors.len()),
            ));
        }
    }
    PairDataset::new(vectors, pairs, seed)
}

pub fn save_pairs(path: &Path, ds: &PairDataset) -> Result<(), PairError> {
    let mut buf = Vec::new();
    write_pairs(&mut buf, ds)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_pairs(path: &Path, vectors: Arc<Vec<ProbeVector>>) -> Result<PairDataset, PairError> {
    parse_pairs(&fs::read_to_string(path)?, vectors)
}
