//! Acceptance gate. Prints one PASS / FAIL / NOT RUN line per criterion and
//! exits non-zero on any failure not listed in `KNOWN_FAILURES`.
//!
//! The reproduction criterion needs the public probe-request datasets, which
//! are not bundled. Dissect them with `probefp dissect` and point
//! `PROBEFP_VECTORS` at the resulting vectors file to run it.

mod common;

use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use probefp::cluster::cluster_stream;
use probefp::codec::{fingerprint, hamming, weighted_score, CompressionRatio, Fingerprint};
use probefp::eval::{clustering_quality, optimal_tau, roc_curve, subset_protocol, subset_protocol_for};
use probefp::filter::{BankParams, BitmaskFilter, FilterBank, FilterKind};
use probefp::ingest::{
    dissect, export_vectors, load_capture, load_vectors, read_vectors, write_vectors, LabelMap, ProbeBits, ProbeVector,
    VECTOR_BITS,
};
use probefp::model::{FingerprintModel, ModelMetadata, WeakClassifier};
use probefp::pairs::{build_pairs, split, LabeledPair, MatchLabel, PairDataset};
use probefp::train::{ThresholdSet, TrainOptions, Trainer};

/// Criteria that fail by construction; see the README for the analysis.
const KNOWN_FAILURES: &[&str] = &["3f"];

enum Verdict {
    Pass(String),
    Fail(String),
    NotRun(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// independent oracles
// ---------------------------------------------------------------------------

/// Filter response summed bit by bit from the mask definition.
fn oracle_response(f: &BitmaskFilter, x: &ProbeBits) -> i32 {
    let l = f.length();
    (0..l)
        .map(|k| {
            let m = match f.kind() {
                FilterKind::A => {
                    if k < l / 2 {
                        1
                    } else {
                        -1
                    }
                }
                FilterKind::B => {
                    if k < l / 2 {
                        -1
                    } else {
                        1
                    }
                }
                FilterKind::C => -1,
                FilterKind::D => 1,
            };
            m * x.bit(f.prefix() + k) as i32
        })
        .sum()
}

fn oracle_range(f: &BitmaskFilter) -> (i32, i32) {
    let l = f.length() as i32;
    match f.kind() {
        FilterKind::A | FilterKind::B => (-l / 2, l / 2),
        FilterKind::C => (-l, 0),
        FilterKind::D => (0, l),
    }
}

fn oracle_error(responses: &[Vec<i32>], pairs: &[LabeledPair], weights: &[f64], filter: usize, t: i32) -> f64 {
    let mut e = 0.0;
    for (p, &w) in pairs.iter().zip(weights) {
        let same_side = (responses[p.a][filter] > t) == (responses[p.b][filter] > t);
        if same_side != p.y.is_match() {
            e += w;
        }
    }
    e
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Homogeneity and completeness from H(A|B) = H(A,B) - H(B).
fn oracle_quality(assignment: &[usize], truth: &[usize]) -> (f64, f64, f64) {
    let n = assignment.len();
    let k = assignment.iter().max().unwrap() + 1;
    let c = truth.iter().max().unwrap() + 1;
    let mut ck = vec![0usize; k];
    let mut cc = vec![0usize; c];
    let mut joint = vec![0usize; k * c];
    for (&a, &t) in assignment.iter().zip(truth) {
        ck[a] += 1;
        cc[t] += 1;
        joint[a * c + t] += 1;
    }
    let (hk, hc, hj) = (entropy(&ck, n), entropy(&cc, n), entropy(&joint, n));
    let h = if hc == 0.0 { 1.0 } else { 1.0 - (hj - hk) / hc };
    let cpl = if hk == 0.0 { 1.0 } else { 1.0 - (hj - hc) / hk };
    let v = if h + cpl == 0.0 { 0.0 } else { 2.0 * h * cpl / (h + cpl) };
    (h, cpl, v)
}

/// All set partitions of `n` points as restricted growth strings.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for v in 0..=next {
            prefix.push(v);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

// ---------------------------------------------------------------------------
// fixtures
// ---------------------------------------------------------------------------

fn metadata(bank: &FilterBank) -> ModelMetadata {
    ModelMetadata {
        bank: bank.params().clone(),
        bank_size: bank.len(),
        thresholds: ThresholdSet::default().values().to_vec(),
        allow_repeat: true,
        training_pairs: 0,
        pair_seed: 0,
        rng: "ChaCha8".into(),
        config_hash: None,
    }
}

fn unit_model(bits: usize) -> FingerprintModel {
    let classifiers = (0..bits)
        .map(|m| WeakClassifier {
            filter_index: m,
            filter: BitmaskFilter::new(FilterKind::D, 8, 8 * (m % 223)).unwrap(),
            threshold: 3,
            confidence: 1.0,
            training_error: 0.25,
        })
        .collect();
    FingerprintModel::new(classifiers, metadata(&FilterBank::from_filters(Vec::new()))).unwrap()
}

fn random_fingerprint(rng: &mut ChaCha8Rng, bits: usize) -> Fingerprint {
    Fingerprint::from_bits((0..bits).map(|_| rng.random::<bool>()))
}

/// Up to 20 random vectors over up to 4 devices, up to 40 pairs, at least one
/// of each class.
fn random_pair_dataset(rng: &mut ChaCha8Rng) -> PairDataset {
    loop {
        let n = rng.random_range(4..=20);
        let devices = rng.random_range(2..=4);
        let vectors: Vec<ProbeVector> = (0..n)
            .map(|_| {
                let mut bytes = [0u8; 223];
                rng.fill(&mut bytes[..]);
                ProbeVector::new(
                    ProbeBits::from_bytes(bytes),
                    format!("d{}", rng.random_range(0..devices)),
                    1,
                )
            })
            .collect();
        let mut all: Vec<LabeledPair> = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let y = if vectors[a].device_label == vectors[b].device_label {
                    MatchLabel::Match
                } else {
                    MatchLabel::NonMatch
                };
                all.push(LabeledPair { a, b, y });
            }
        }
        all.shuffle(rng);
        all.truncate(rng.random_range(2..=40));
        let pos = all.iter().filter(|p| p.y.is_match()).count();
        if pos == 0 || pos == all.len() {
            continue;
        }
        return PairDataset::new(Arc::new(vectors), all, 0).unwrap();
    }
}

fn random_bank(rng: &mut ChaCha8Rng) -> FilterBank {
    let size = rng.random_range(2..=50);
    let mut seen = HashSet::new();
    let mut filters = Vec::new();
    while filters.len() < size {
        let kind = FilterKind::ALL[rng.random_range(0..4)];
        let length = [4, 8, 16][rng.random_range(0..3)];
        let prefix = 8 * rng.random_range(0..=(VECTOR_BITS - length) / 8);
        if seen.insert((kind, length, prefix)) {
            filters.push(BitmaskFilter::new(kind, length, prefix).unwrap());
        }
    }
    FilterBank::from_filters(filters)
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

fn criterion_1() -> Verdict {
    let Ok(path) = std::env::var("PROBEFP_VECTORS") else {
        return Verdict::NotRun("requires the public datasets; set PROBEFP_VECTORS to a dissected vectors file".into());
    };
    let run = || -> Check {
        let vectors = Arc::new(load_vectors(Path::new(&path)).map_err(|e| e.to_string())?);
        let all = build_pairs(vectors.clone(), 1000, 0).map_err(|e| e.to_string())?;
        let (train, test) = split(&all, 0.6, 1).map_err(|e| e.to_string())?;
        let bank = FilterBank::from_params(&BankParams::default()).map_err(|e| e.to_string())?;
        let model = probefp::train::train(&train, &bank, &ThresholdSet::default(), 16).map_err(|e| e.to_string())?;
        let curve = roc_curve(&model, &test).map_err(|e| e.to_string())?;
        let tau = optimal_tau(&curve).unwrap();
        let report = subset_protocol(&vectors, &model, tau, 10, 0).map_err(|e| e.to_string())?;
        let a = &report.averages;
        let detail = format!(
            "V {:.3} (0.869) H {:.3} (0.840) C {:.3} (0.910) RMSE {:.3} (2.543), tau {tau}, {} devices",
            a.v_measure, a.homogeneity, a.completeness, a.rmse, report.device_count
        );
        let ok = (a.v_measure - 0.869).abs() <= 0.05
            && (a.homogeneity - 0.840).abs() <= 0.05
            && (a.completeness - 0.910).abs() <= 0.05
            && (a.rmse - 2.543).abs() <= 0.75;
        if ok {
            Ok(detail)
        } else {
            Err(detail)
        }
    };
    match run() {
        Ok(d) => Verdict::Pass(d),
        Err(d) => Verdict::Fail(d),
    }
}

fn criterion_2() -> Check {
    let vectors = Arc::new(common::synthetic_vectors(6, 6, 2));
    let all = build_pairs(vectors.clone(), 30, 2).map_err(|e| e.to_string())?;
    let bank = FilterBank::from_params(&BankParams::default()).unwrap();
    let mut shown = Vec::new();
    for (bits, ratio) in [(16usize, "111.5"), (32, "55.7"), (64, "27.8")] {
        let model = probefp::train::train_with(&all, &bank, &ThresholdSet::default(), TrainOptions::rounds(bits))
            .map_err(|e| e.to_string())?;
        let report = subset_protocol_for(&vectors, &model, 1, &[1], 1, 0).map_err(|e| e.to_string())?;
        let reported = &report.averages;
        ensure(reported.memory_bits == bits, || {
            format!("M={bits}: reported {} bits", reported.memory_bits)
        })?;
        ensure(reported.compression_ratio == ratio, || {
            format!("M={bits}: ratio {} != {ratio}", reported.compression_ratio)
        })?;
        let fp = fingerprint(&model, &vectors[0].bits);
        ensure(fp.len() == bits && fp.to_bytes().len() * 8 == bits, || {
            format!("M={bits}: fingerprint carries {} bits", fp.len())
        })?;
        shown.push(format!("{bits} bits -> {}", reported.compression_ratio));
    }
    ensure(CompressionRatio::for_bits(8).to_string() == "223.0", || {
        "M=8 ratio".into()
    })?;
    Ok(shown.join(", "))
}

fn criterion_3a_3c() -> (Check, Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3A);
    let (mut rounds_checked, mut max_eps_diff, mut max_weight_diff) = (0usize, 0f64, 0f64);
    let mut max_mass_err = 0f64;
    let mut min_weight = f64::INFINITY;
    let trials = 60;
    for trial in 0..trials {
        let ds = random_pair_dataset(&mut rng);
        let bank = random_bank(&mut rng);
        let thresholds = ThresholdSet::default();
        let allow_repeat = rng.random_bool(0.5);
        let rounds = rng.random_range(1..=8).min(bank.len() - 1);
        let opts = TrainOptions { rounds, allow_repeat };
        let mut trainer = match Trainer::new(&ds, &bank, &thresholds, opts) {
            Ok(t) => t,
            Err(e) => return (Err(format!("trial {trial}: {e}")), Err("not reached".into())),
        };

        let responses: Vec<Vec<i32>> = ds
            .vectors
            .iter()
            .map(|v| bank.filters().iter().map(|f| oracle_response(f, &v.bits)).collect())
            .collect();
        let n = ds.len();
        let mut weights = vec![1.0 / n as f64; n];
        let mut used = HashSet::new();

        for round in 1..=rounds {
            // brute force over every non-constant (filter, threshold)
            let mut best: Option<(f64, usize, i32)> = None;
            for (i, f) in bank.filters().iter().enumerate() {
                let (lo, hi) = oracle_range(f);
                for &t in thresholds.values() {
                    if t < lo || t >= hi || (!allow_repeat && used.contains(&(i, t))) {
                        continue;
                    }
                    let e = oracle_error(&responses, &ds.pairs, &weights, i, t);
                    if best.is_none_or(|(be, _, _)| e < be) {
                        best = Some((e, i, t));
                    }
                }
            }
            let got = match trainer.step() {
                Ok(c) => c,
                Err(e) => {
                    let verdict = if best.is_none() {
                        continue;
                    } else {
                        Err(format!(
                            "trial {trial} round {round}: trainer failed ({e}) but a candidate exists"
                        ))
                    };
                    return (verdict, Err("not reached".into()));
                }
            };
            let Some((eps, fi, t)) = best else {
                return (
                    Err(format!(
                        "trial {trial} round {round}: trainer selected with no candidate"
                    )),
                    Err("not reached".into()),
                );
            };
            let diff = (got.training_error - eps).abs();
            max_eps_diff = max_eps_diff.max(diff);
            if diff > 1e-12 || (got.filter_index, got.threshold) != (fi, t) {
                return (
                    Err(format!(
                        "trial {trial} round {round}: trainer ({}, {}, {}) vs oracle ({fi}, {t}, {eps})",
                        got.filter_index, got.threshold, got.training_error
                    )),
                    Err("not reached".into()),
                );
            }
            used.insert((fi, t));
            rounds_checked += 1;

            // oracle weight update
            let c = ((1.0 - eps.clamp(1e-6, 1.0 - 1e-6)) / eps.clamp(1e-6, 1.0 - 1e-6)).ln();
            for (p, w) in ds.pairs.iter().zip(weights.iter_mut()) {
                let same = (responses[p.a][fi] > t) == (responses[p.b][fi] > t);
                if p.y.is_match() && !same {
                    *w *= c.exp();
                }
            }
            let mass: f64 = ds
                .pairs
                .iter()
                .zip(&weights)
                .filter(|(p, _)| p.y.is_match())
                .map(|(_, w)| w)
                .sum();
            for (p, w) in ds.pairs.iter().zip(weights.iter_mut()) {
                if p.y.is_match() {
                    *w /= mass;
                }
            }

            // invariant on the trainer's own weights
            let tw = &trainer.state().weights;
            let pos: f64 = ds
                .pairs
                .iter()
                .zip(tw)
                .filter(|(p, _)| p.y.is_match())
                .map(|(_, w)| w)
                .sum();
            max_mass_err = max_mass_err.max((pos - 1.0).abs());
            min_weight = tw.iter().copied().fold(min_weight, f64::min);
            for (a, b) in tw.iter().zip(&weights) {
                max_weight_diff = max_weight_diff.max((a - b).abs());
            }
        }
    }
    let a = if max_weight_diff <= 1e-12 {
        Ok(format!(
            "{trials} random datasets, {rounds_checked} rounds; max |eps - oracle| = {max_eps_diff:.1e}, max weight drift {max_weight_diff:.1e}"
        ))
    } else {
        Err(format!("trainer weights drift from oracle by {max_weight_diff:.3e}"))
    };
    let c = if max_mass_err <= 1e-12 && min_weight >= 0.0 {
        Ok(format!(
            "{rounds_checked} rounds; max |sum(w+) - 1| = {max_mass_err:.1e}, min weight {min_weight:.3e}"
        ))
    } else {
        Err(format!(
            "max |sum(w+) - 1| = {max_mass_err:.3e}, min weight {min_weight:.3e}"
        ))
    };
    (a, c)
}

fn criterion_3b() -> Check {
    // window byte 100 (bits 800..808) is 0xFF for dev-a and 0x00 for dev-b;
    // bytes 98..103 are otherwise constant, noise lives in bytes 150..223
    const WINDOW: std::ops::Range<usize> = 800..808;
    let mut rng = ChaCha8Rng::seed_from_u64(0x3B);
    let mut vectors = Vec::new();
    for (label, byte) in [("dev-a", 0xFFu8), ("dev-b", 0x00)] {
        for _ in 0..8 {
            let mut bytes = [0u8; 223];
            bytes[100] = byte;
            rng.fill(&mut bytes[150..]);
            vectors.push(ProbeVector::new(ProbeBits::from_bytes(bytes), label, 6));
        }
    }
    let all = build_pairs(Arc::new(vectors), 20, 3).map_err(|e| e.to_string())?;
    let (train, test) = split(&all, 0.6, 4).map_err(|e| e.to_string())?;
    let bank = FilterBank::from_params(&BankParams::default()).unwrap();
    let model = probefp::train::train(&train, &bank, &ThresholdSet::default(), 1).map_err(|e| e.to_string())?;
    let c = model.classifiers()[0];
    let w = c.filter.window();
    ensure(w.start < WINDOW.end && WINDOW.start < w.end, || {
        format!("selected {} which misses bits {WINDOW:?}", c.filter)
    })?;
    let curve = roc_curve(&model, &test).map_err(|e| e.to_string())?;
    let corner = curve.iter().find(|p| p.fpr == 0.0 && p.tpr == 1.0);
    let corner = corner.ok_or_else(|| format!("ROC lacks (0,1): {curve:?}"))?;
    Ok(format!(
        "selected {} t={} eps={:.1e}; (FPR 0, TPR 1) at tau {}",
        c.filter, c.threshold, c.training_error, corner.tau
    ))
}

fn criterion_3d() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3D);
    let bank = FilterBank::from_params(&BankParams::default()).unwrap();
    let mut sets = 0;
    for trial in 0..40 {
        let ds = random_pair_dataset(&mut rng);
        let bits = rng.random_range(1..=24);
        let classifiers = (0..bits)
            .map(|m| {
                let i = rng.random_range(0..bank.len());
                let f = bank.filters()[i];
                let (lo, hi) = f.response_range();
                WeakClassifier {
                    filter_index: i,
                    filter: f,
                    threshold: rng.random_range(lo..hi),
                    confidence: 1.0 + m as f64,
                    training_error: 0.1,
                }
            })
            .collect();
        let model = FingerprintModel::new(classifiers, metadata(&bank)).unwrap();
        let curve = roc_curve(&model, &ds).map_err(|e| e.to_string())?;
        let m = bits as u32;
        ensure(curve.len() == bits + 2, || {
            format!("trial {trial}: {} points for M={bits}", curve.len())
        })?;
        let (first, last) = (curve[0], curve[curve.len() - 1]);
        ensure(first.tau == 0 && first.tpr == 0.0 && first.fpr == 0.0, || {
            format!("trial {trial}: tau 0 gives {first:?}")
        })?;
        ensure(last.tau == m + 1 && last.tpr == 1.0 && last.fpr == 1.0, || {
            format!("trial {trial}: tau M+1 gives {last:?}")
        })?;
        for w in curve.windows(2) {
            ensure(w[1].tpr >= w[0].tpr && w[1].fpr >= w[0].fpr, || {
                format!("trial {trial}: not monotone at tau {}", w[1].tau)
            })?;
        }
        sets += 1;
    }
    Ok(format!("{sets} random test sets and models, M in 1..=24"))
}

fn criterion_3e() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3E);
    let mut checks = 0usize;
    for _ in 0..300 {
        let bits = rng.random_range(1..=70);
        let fs: Vec<Fingerprint> = (0..6).map(|_| random_fingerprint(&mut rng, bits)).collect();
        let d = |a: &Fingerprint, b: &Fingerprint| hamming(a, b).unwrap();
        for x in &fs {
            ensure(d(x, x) == 0, || "d(x,x) != 0".into())?;
            for y in &fs {
                ensure(d(x, y) == d(y, x), || "asymmetric".into())?;
                ensure((d(x, y) == 0) == (x == y), || "d = 0 for distinct fingerprints".into())?;
                for z in &fs {
                    ensure(d(x, z) <= d(x, y) + d(y, z), || "triangle inequality".into())?;
                    checks += 1;
                }
            }
        }
        let model = unit_model(bits);
        let query = &fs[0];
        for f in &fs {
            let s = weighted_score(&model, query, f).unwrap();
            let expected = bits as f64 - 2.0 * d(query, f) as f64;
            ensure(s == expected, || format!("score {s} != {expected} at M={bits}"))?;
        }
        let mut by_distance: Vec<usize> = (0..fs.len()).collect();
        by_distance.sort_by_key(|&i| d(query, &fs[i]));
        let mut by_score: Vec<usize> = (0..fs.len()).collect();
        by_score.sort_by(|&i, &j| {
            let (si, sj) = (
                weighted_score(&model, query, &fs[i]).unwrap(),
                weighted_score(&model, query, &fs[j]).unwrap(),
            );
            sj.partial_cmp(&si).unwrap()
        });
        ensure(by_distance == by_score, || "hamming and score rankings differ".into())?;
    }
    Ok(format!("300 random sets, M in 1..=70, {checks} triangle checks"))
}

fn criterion_3f() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3F);
    let bits = 16;
    let mut violations = Vec::new();
    for stream_id in 0..200 {
        let n = rng.random_range(1..=60);
        let stream: Vec<Fingerprint> = if stream_id % 2 == 0 {
            (0..n).map(|_| random_fingerprint(&mut rng, bits)).collect()
        } else {
            // noisy copies of a few device centres
            let k = rng.random_range(1..=8);
            let centres: Vec<Fingerprint> = (0..k).map(|_| random_fingerprint(&mut rng, bits)).collect();
            (0..n)
                .map(|_| {
                    let c = &centres[rng.random_range(0..k)];
                    Fingerprint::from_bits(c.iter().map(|b| b ^ rng.random_bool(0.1)))
                })
                .collect()
        };
        let counts: Vec<usize> = (0..=bits as u32 + 1)
            .map(|tau| cluster_stream(&stream, tau).unwrap().count_devices())
            .collect();
        if counts[0] != n || counts[bits + 1] != 1 {
            return Err(format!("stream {stream_id}: endpoint counts {counts:?}"));
        }
        if let Some(tau) = counts.windows(2).position(|w| w[1] > w[0]) {
            violations.push(format!(
                "stream {stream_id}: {} -> {} at tau {}",
                counts[tau],
                counts[tau + 1],
                tau + 1
            ));
        }
    }
    if violations.is_empty() {
        Ok("200 streams, counts non-increasing over tau = 0..=17".into())
    } else {
        Err(format!(
            "{}/200 streams grow with tau (first: {}); first-member representatives make this reachable",
            violations.len(),
            violations[0]
        ))
    }
}

fn criterion_3g() -> Check {
    let mut compared = 0usize;
    let mut max_diff = 0f64;
    for n in 1..=6 {
        let parts = partitions(n);
        for assignment in &parts {
            for truth in &parts {
                let q = clustering_quality(assignment, truth).map_err(|e| e.to_string())?;
                let (h, c, v) = oracle_quality(assignment, truth);
                for (got, want) in [(q.homogeneity, h), (q.completeness, c), (q.v_measure, v)] {
                    max_diff = max_diff.max((got - want).abs());
                }
                ensure(
                    q.v_measure
                        == if q.homogeneity + q.completeness == 0.0 {
                            0.0
                        } else {
                            2.0 * q.homogeneity * q.completeness / (q.homogeneity + q.completeness)
                        },
                    || "v is not the harmonic mean".into(),
                )?;
                // relabel clusters by a rotation of ids
                let k = assignment.iter().max().unwrap() + 1;
                let relabeled: Vec<usize> = assignment.iter().map(|&a| 100 + (a + 1) % k).collect();
                let r = clustering_quality(&relabeled, truth).map_err(|e| e.to_string())?;
                ensure(
                    (r.homogeneity - q.homogeneity).abs() <= 1e-12
                        && (r.completeness - q.completeness).abs() <= 1e-12
                        && (r.v_measure - q.v_measure).abs() <= 1e-12,
                    || format!("relabeling changed scores for {assignment:?} vs {truth:?}"),
                )?;
                compared += 1;
            }
        }
    }
    ensure(max_diff <= 1e-12, || {
        format!("max deviation from oracle {max_diff:.3e}")
    })?;
    Ok(format!(
        "{compared} assignment/truth pairs with n <= 6; max deviation {max_diff:.1e}"
    ))
}

fn byte_at(bits: &ProbeBits, start_bit: usize) -> u8 {
    (0..8).fold(0u8, |acc, k| (acc << 1) | bits.bit(start_bit + k) as u8)
}

fn criterion_3h() -> Check {
    let ht: Vec<u8> = [0x2D, 0x01].into_iter().chain(3..27).collect();
    let ext = [0x04, 0x00, 0x08, 0x84, 0x00, 0x00, 0x00, 0x40];
    let v1 = [0x00, 0x50, 0xF2, 0x08, 0x00, 0x10, 0x00];
    let v2 = [0x00, 0x10, 0x18, 0x02, 0x00];
    let frame = common::probe_request(
        [0x02, 1, 2, 3, 4, 5],
        &[
            (1, &[0x02, 0x04, 0x0B, 0x16]),
            (common::VENDOR_SPECIFIC, &v1),
            (common::HT_CAPABILITIES, &ht),
            (common::EXT_CAPABILITIES, &ext),
            (common::VENDOR_SPECIFIC, &v2),
        ],
    );
    let bits = dissect(&frame).map_err(|e| e.to_string())?;
    ensure(byte_at(&bits, 0) == 26, || "HT length not at bits 0..8".into())?;
    for (i, &b) in ht.iter().enumerate() {
        ensure(byte_at(&bits, 8 + 8 * i) == b, || format!("HT byte {i}"))?;
    }
    ensure(byte_at(&bits, 216) == ext.len() as u8, || {
        "Ext-Cap length not at bits 216..224".into()
    })?;
    for (i, &b) in ext.iter().enumerate() {
        ensure(byte_at(&bits, 224 + 8 * i) == b, || format!("Ext-Cap byte {i}"))?;
    }
    ensure((224 + 8 * ext.len()..328).all(|k| !bits.bit(k)), || {
        "Ext-Cap padding not zero".into()
    })?;
    let vendor: Vec<u8> = [221u8, v1.len() as u8]
        .into_iter()
        .chain(v1)
        .chain([221u8, v2.len() as u8])
        .chain(v2)
        .collect();
    for (i, &b) in vendor.iter().enumerate() {
        ensure(byte_at(&bits, 328 + 8 * i) == b, || format!("vendor byte {i}"))?;
    }
    ensure((328 + 8 * vendor.len()..VECTOR_BITS).all(|k| !bits.bit(k)), || {
        "vendor padding not zero".into()
    })?;

    // capture -> vectors -> dataset file -> vectors
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pcap = dir.path().join("golden.pcap");
    let mut frames: Vec<Vec<u8>> = vec![frame.clone()];
    frames.extend(common::device_frames(3, 4, 9));
    frames.push(common::beacon([0x02, 9, 9, 9, 9, 9]));
    common::write_pcap(&pcap, pcap_file::DataLink::IEEE802_11, &frames);
    let capture = load_capture(&pcap, &LabelMap::for_file("dev-A").with_channel(11)).map_err(|e| e.to_string())?;
    let vectors = export_vectors(&capture).map_err(|e| e.to_string())?;
    ensure(vectors.len() == 5 && vectors[0].bits == bits, || {
        "capture did not reproduce the golden vector".into()
    })?;
    let mut buf = Vec::new();
    write_vectors(&mut buf, &vectors).map_err(|e| e.to_string())?;
    let back = read_vectors(&buf[..]).map_err(|e| e.to_string())?;
    ensure(
        back.len() == vectors.len()
            && back
                .iter()
                .zip(&vectors)
                .all(|(a, b)| a.bits == b.bits && a.device_label == b.device_label && a.channel == b.channel),
        || "dataset round trip differs".into(),
    )?;
    Ok(format!(
        "HT len @0, Ext-Cap len @216, vendor @328 verified; {} vectors round-trip ({} bytes)",
        back.len(),
        buf.len()
    ))
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(&str, &str, Verdict)> = Vec::new();
    let wrap = |c: Check| match c {
        Ok(d) => Verdict::Pass(d),
        Err(d) => Verdict::Fail(d),
    };

    results.push(("1", "full-dataset reproduction", criterion_1()));
    results.push(("2", "memory accounting", wrap(criterion_2())));
    let (a, c) = criterion_3a_3c();
    results.push(("3a", "trainer oracle equivalence", wrap(a)));
    results.push(("3b", "planted-separator recovery", wrap(criterion_3b())));
    results.push(("3c", "weight invariant", wrap(c)));
    results.push(("3d", "ROC endpoints and monotonicity", wrap(criterion_3d())));
    results.push(("3e", "matching identities", wrap(criterion_3e())));
    results.push(("3f", "clustering monotonicity in tau", wrap(criterion_3f())));
    results.push(("3g", "clustering metric correctness", wrap(criterion_3g())));
    results.push(("3h", "dissection layout and round trip", wrap(criterion_3h())));

    let mut unexpected = 0;
    for (id, name, verdict) in &results {
        match verdict {
            Verdict::Pass(d) => println!("PASS     {id:<3} {name}: {d}"),
            Verdict::NotRun(d) => println!("NOT RUN  {id:<3} {name}: {d}"),
            Verdict::Fail(d) => {
                let known = KNOWN_FAILURES.contains(id);
                if !known {
                    unexpected += 1;
                }
                let note = if known { " [known failure, documented]" } else { "" };
                println!("FAIL     {id:<3} {name}: {d}{note}");
            }
        }
    }
    println!("acceptance finished in {:.1} s", started.elapsed().as_secs_f64());
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}
