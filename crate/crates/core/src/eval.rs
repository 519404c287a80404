//! Evaluation: ROC sweeps over the Hamming threshold, clustering quality
//! scores and the random device-subset counting protocol.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cluster::cluster_stream;
use crate::codec::{fingerprint, hamming, CompressionRatio, Fingerprint, MatchError};
use crate::ingest::ProbeVector;
use crate::model::FingerprintModel;
use crate::pairs::{group_by_device, MatchLabel, PairDataset};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("test set has no {0} pairs")]
    EmptyClass(&'static str),
    #[error("assignment has {assignment} entries but truth has {truth}")]
    LengthMismatch { assignment: usize, truth: usize },
    #[error("clustering quality needs at least one point")]
    Empty,
    #[error("subset protocol needs at least 2 devices, found {0}")]
    TooFewDevices(usize),
    #[error("population {p} exceeds the {available} available devices")]
    Population { p: usize, available: usize },
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub tau: u32,
    pub tpr: f64,
    pub fpr: f64,
}

/// Sweeps `tau = 0..=M+1` with the unweighted Hamming rule.
pub fn roc_curve(model: &FingerprintModel, test: &PairDataset) -> Result<Vec<RocPoint>, EvalError> {
    let distances = pair_distances(model, test)?;
    roc_from_distances(&distances, model.bits() as u32)
}

/// ROC from precomputed `(hamming distance, label)` pairs, `tau = 0..=bits+1`.
pub fn roc_from_distances(distances: &[(u32, MatchLabel)], bits: u32) -> Result<Vec<RocPoint>, EvalError> {
    let positives = distances.iter().filter(|(_, y)| y.is_match()).count();
    let negatives = distances.len() - positives;
    if positives == 0 {
        return Err(EvalError::EmptyClass("matching"));
    }
    if negatives == 0 {
        return Err(EvalError::EmptyClass("non-matching"));
    }
    // histogram[d] = (positives, negatives) at distance d
    let mut histogram = vec![(0usize, 0usize); bits as usize + 1];
    for &(d, y) in distances {
        let slot = &mut histogram[d.min(bits) as usize];
        if y.is_match() {
            slot.0 += 1;
        } else {
            slot.1 += 1;
        }
    }
    let mut curve = Vec::with_capacity(bits as usize + 2);
    let (mut tp, mut fp) = (0usize, 0usize);
    for tau in 0..=bits + 1 {
        // predicted match iff d < tau, so tau admits distance tau - 1
        if tau > 0 {
            let (p, n) = histogram[tau as usize - 1];
            tp += p;
            fp += n;
        }
        curve.push(RocPoint {
            tau,
            tpr: tp as f64 / positives as f64,
            fpr: fp as f64 / negatives as f64,
        });
    }
    Ok(curve)
}

fn pair_distances(model: &FingerprintModel, ds: &PairDataset) -> Result<Vec<(u32, MatchLabel)>, EvalError> {
    let mut cache: HashMap<usize, Fingerprint> = HashMap::new();
    for p in &ds.pairs {
        for i in [p.a, p.b] {
            cache
                .entry(i)
                .or_insert_with(|| fingerprint(model, &ds.vectors[i].bits));
        }
    }
    ds.pairs
        .iter()
        .map(|p| Ok((hamming(&cache[&p.a], &cache[&p.b])?, p.y)))
        .collect()
}

/// The point closest to the top-left corner `(fpr 0, tpr 1)`; ties go to the
/// smaller `tau`. `None` for an empty curve.
pub fn optimal_tau(curve: &[RocPoint]) -> Option<u32> {
    let dist = |p: &RocPoint| (p.fpr * p.fpr + (1.0 - p.tpr) * (1.0 - p.tpr)).sqrt();
    let mut best: Option<(f64, u32)> = None;
    for p in curve {
        let d = dist(p);
        match best {
            Some((bd, bt)) if d > bd || (d == bd && p.tau >= bt) => {}
            _ => best = Some((d, p.tau)),
        }
    }
    best.map(|(_, tau)| tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterQuality {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub cluster_count: usize,
    pub true_device_count: usize,
}

/// Homogeneity, completeness and V-measure of `assignment` against `truth`,
/// with entropies in nats over the joint empirical distribution.
pub fn clustering_quality<T: Eq + Hash>(assignment: &[usize], truth: &[T]) -> Result<ClusterQuality, EvalError> {
    if assignment.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            assignment: assignment.len(),
            truth: truth.len(),
        });
    }
    if assignment.is_empty() {
        return Err(EvalError::Empty);
    }
    // Dense ids in order of first appearance keep the floating-point sums in a
    // fixed order across runs.
    fn dense<K: Eq + Hash>(keys: impl Iterator<Item = K>) -> (Vec<usize>, Vec<usize>) {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let mut counts = Vec::new();
        let mapped = keys
            .map(|k| {
                let id = *ids.entry(k).or_insert_with(|| {
                    counts.push(0);
                    counts.len() - 1
                });
                counts[id] += 1;
                id
            })
            .collect();
        (mapped, counts)
    }
    let n = assignment.len() as f64;
    let (cluster_ids, clusters) = dense(assignment.iter());
    let (class_ids, classes) = dense(truth.iter());
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&k, &c) in cluster_ids.iter().zip(&class_ids) {
        *joint.entry((k, c)).or_default() += 1;
    }
    let entropy = |counts: &[usize]| -> f64 {
        -counts
            .iter()
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    };
    let h_truth = entropy(&classes);
    let h_clusters = entropy(&clusters);
    let mut h_truth_given_clusters = 0.0;
    let mut h_clusters_given_truth = 0.0;
    for (&(k, c), &nkc) in &joint {
        let p = nkc as f64 / n;
        h_truth_given_clusters -= p * (nkc as f64 / clusters[k] as f64).ln();
        h_clusters_given_truth -= p * (nkc as f64 / classes[c] as f64).ln();
    }
    let score = |h_cond: f64, h: f64| {
        if h == 0.0 {
            1.0
        } else {
            (1.0 - h_cond / h).clamp(0.0, 1.0)
        }
    };
    let homogeneity = score(h_truth_given_clusters, h_truth);
    let completeness = score(h_clusters_given_truth, h_clusters);
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(ClusterQuality {
        homogeneity,
        completeness,
        v_measure,
        cluster_count: clusters.len(),
        true_device_count: classes.len(),
    })
}

/// One (population, repetition) run of the subset protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCell {
    pub p: usize,
    pub repetition: usize,
    /// Indices into the device list (first-appearance order), ascending.
    pub devices: Vec<usize>,
    pub inputs: usize,
    pub quality: ClusterQuality,
}

/// Means over the repetitions of one population size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationRow {
    pub p: usize,
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub mean_cluster_count: f64,
    /// `sqrt(mean((cluster_count - p)^2))`
    pub rmse: f64,
}

/// Averages over population sizes, each size weighted equally.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolAverages {
    pub memory_bits: usize,
    pub compression_ratio: String,
    pub v_measure: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetReport {
    pub tau: u32,
    pub repetitions: usize,
    pub seed: u64,
    pub rng: String,
    pub device_count: usize,
    pub vector_count: usize,
    pub cells: Vec<SubsetCell>,
    pub populations: Vec<PopulationRow>,
    pub averages: ProtocolAverages,
}

/// Runs the protocol for every `p = 1..P-1`, where `P` is the number of
/// devices in `vectors`.
pub fn subset_protocol(
    vectors: &[ProbeVector],
    model: &FingerprintModel,
    tau: u32,
    repetitions: usize,
    seed: u64,
) -> Result<SubsetReport, EvalError> {
    let devices = group_by_device(vectors).len();
    if devices < 2 {
        return Err(EvalError::TooFewDevices(devices));
    }
    let populations: Vec<usize> = (1..devices).collect();
    subset_protocol_for(vectors, model, tau, &populations, repetitions, seed)
}

/// Runs the protocol for the given population sizes. Each cell draws its
/// devices from its own ChaCha8 stream, so results do not depend on
/// scheduling; the clustered stream is every vector of the chosen devices in
/// dataset order.
pub fn subset_protocol_for(
    vectors: &[ProbeVector],
    model: &FingerprintModel,
    tau: u32,
    populations: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<SubsetReport, EvalError> {
    let groups = group_by_device(vectors);
    let device_count = groups.len();
    if device_count < 2 {
        return Err(EvalError::TooFewDevices(device_count));
    }
    if let Some(&p) = populations.iter().find(|&&p| p == 0 || p > device_count) {
        return Err(EvalError::Population {
            p,
            available: device_count,
        });
    }
    let mut device_of = vec![0usize; vectors.len()];
    for (d, g) in groups.iter().enumerate() {
        for &i in g {
            device_of[i] = d;
        }
    }
    let fingerprints: Vec<Fingerprint> = vectors.par_iter().map(|v| fingerprint(model, &v.bits)).collect();

    let jobs: Vec<(usize, usize)> = populations
        .iter()
        .flat_map(|&p| (0..repetitions).map(move |r| (p, r)))
        .collect();
    let cells = jobs
        .par_iter()
        .enumerate()
        .map(|(job, &(p, repetition))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(job as u64);
            let mut chosen = rand::seq::index::sample(&mut rng, device_count, p).into_vec();
            chosen.sort_unstable();
            let mut selected = vec![false; device_count];
            for &d in &chosen {
                selected[d] = true;
            }
            let stream: Vec<usize> = (0..vectors.len()).filter(|&i| selected[device_of[i]]).collect();
            let run = cluster_stream(stream.iter().map(|&i| &fingerprints[i]), tau)?;
            let truth: Vec<usize> = stream.iter().map(|&i| device_of[i]).collect();
            let quality = clustering_quality(&run.assignment, &truth)?;
            Ok(SubsetCell {
                p,
                repetition,
                devices: chosen,
                inputs: stream.len(),
                quality,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let rows: Vec<PopulationRow> = populations
        .iter()
        .map(|&p| {
            let of_p: Vec<&SubsetCell> = cells.iter().filter(|c| c.p == p).collect();
            population_row(p, &of_p)
        })
        .collect();
    let averages = average_rows(&rows, model.bits());
    Ok(SubsetReport {
        tau,
        repetitions,
        seed,
        rng: crate::pairs::RNG_ALGORITHM.to_string(),
        device_count,
        vector_count: vectors.len(),
        cells,
        populations: rows,
        averages,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn population_row(p: usize, cells: &[&SubsetCell]) -> PopulationRow {
    PopulationRow {
        p,
        homogeneity: mean(cells.iter().map(|c| c.quality.homogeneity)),
        completeness: mean(cells.iter().map(|c| c.quality.completeness)),
        v_measure: mean(cells.iter().map(|c| c.quality.v_measure)),
        mean_cluster_count: mean(cells.iter().map(|c| c.quality.cluster_count as f64)),
        rmse: mean(cells.iter().map(|c| {
            let e = c.quality.cluster_count as f64 - p as f64;
            e * e
        }))
        .sqrt(),
    }
}

fn average_rows(rows: &[PopulationRow], bits: usize) -> ProtocolAverages {
    ProtocolAverages {
        memory_bits: bits,
        compression_ratio: CompressionRatio::for_bits(bits as u32).to_string(),
        v_measure: mean(rows.iter().map(|r| r.v_measure)),
        homogeneity: mean(rows.iter().map(|r| r.homogeneity)),
        completeness: mean(rows.iter().map(|r| r.completeness)),
        rmse: mean(rows.iter().map(|r| r.rmse)),
    }
}

pub fn write_roc_csv<W: Write>(mut w: W, curve: &[RocPoint]) -> io::Result<()> {
    writeln!(w, "tau,tpr,fpr")?;
    for p in curve {
        writeln!(w, "{},{},{}", p.tau, p.tpr, p.fpr)?;
    }
    Ok(())
}

pub fn write_cells_csv<W: Write>(mut w: W, cells: &[SubsetCell]) -> io::Result<()> {
    writeln!(w, "p,repetition,homogeneity,completeness,v_measure,cluster_count")?;
    for c in cells {
        let q = &c.quality;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.p, c.repetition, q.homogeneity, q.completeness, q.v_measure, q.cluster_count
        )?;
    }
    Ok(())
}

pub fn write_populations_csv<W: Write>(mut w: W, rows: &[PopulationRow]) -> io::Result<()> {
    writeln!(w, "p,homogeneity,completeness,v_measure,mean_cluster_count,rmse")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.p, r.homogeneity, r.completeness, r.v_measure, r.mean_cluster_count, r.rmse
        )?;
    }
    Ok(())
}
