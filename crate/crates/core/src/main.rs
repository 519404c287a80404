use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use probefp::cluster::cluster_stream;
use probefp::codec::{
    hamming, load_batch, predict_match, predict_match_weighted, save_batch, weighted_score, CompressionRatio,
};
use probefp::config::RunConfig;
use probefp::eval::{optimal_tau, roc_curve, subset_protocol, write_cells_csv, write_populations_csv, write_roc_csv};
use probefp::filter::FilterBank;
use probefp::ingest::{
    export_vectors, load_capture, load_vectors, save_vectors, LabelMap, MacAddr, ProbeVector, RawCapture,
};
use probefp::model::FingerprintModel;
use probefp::pairs::{build_pairs, load_pairs, save_pairs, split, MatchLabel};
use probefp::train::train_with;

const EXIT_USAGE: u8 = 2;
const EXIT_INGEST: u8 = 3;
const EXIT_TRAINING: u8 = 4;
const EXIT_EVALUATION: u8 = 5;

/// Probe-request fingerprinting: dissect captures, build pairs, train,
/// fingerprint, match, cluster and evaluate.
#[derive(Parser)]
#[command(name = "probefp", version)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract probe vectors from labelled captures.
    Dissect(DissectArgs),
    /// Sample matching/non-matching pairs and split them into train and test sets.
    Pairs(PairsArgs),
    /// Train a fingerprint model on training pairs.
    Train(TrainArgs),
    /// Fingerprint every probe vector with a trained model.
    Fingerprint(FingerprintArgs),
    /// Decide whether two fingerprint records come from the same device.
    Match(MatchArgs),
    /// Cluster a fingerprint stream online.
    Cluster(ClusterArgs),
    /// ROC sweep over the Hamming threshold on test pairs.
    EvalRoc(EvalRocArgs),
    /// Random device-subset counting protocol.
    EvalClustering(EvalClusteringArgs),
}

#[derive(Args)]
struct DissectArgs {
    /// Capture of one device, as LABEL=PATH; repeatable.
    #[arg(long = "capture", required = true, value_name = "LABEL=PATH")]
    captures: Vec<String>,
    /// CSV of `mac,label` lines; these labels take precedence over LABEL.
    #[arg(long)]
    mac_labels: Option<PathBuf>,
    /// Channel recorded for frames without radiotap channel information.
    #[arg(long)]
    channel: Option<u8>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PairsArgs {
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
    #[arg(long)]
    matching: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fingerprint length M.
    #[arg(long)]
    bits: Option<usize>,
    #[arg(long)]
    allow_repeat: Option<bool>,
}

#[derive(Args)]
struct FingerprintArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    fingerprints: PathBuf,
    /// Record index of the first fingerprint.
    #[arg(long)]
    a: usize,
    /// Record index of the second fingerprint.
    #[arg(long)]
    b: usize,
    /// Match iff the Hamming distance is below this.
    #[arg(long, conflicts_with = "weighted")]
    tau: Option<u32>,
    /// Use the confidence-weighted score: match iff it is at least this.
    #[arg(long, requires = "model", allow_hyphen_values = true)]
    weighted: Option<f64>,
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct TauArgs {
    #[arg(long)]
    tau: Option<u32>,
    /// Take tau from the optimal point of an `eval-roc` summary.
    #[arg(long)]
    roc_summary: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    fingerprints: PathBuf,
    #[command(flatten)]
    tau: TauArgs,
    /// CSV of input_index,cluster_id.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON; defaults to OUT with a .json extension.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct EvalRocArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
    /// Held-out test pairs.
    #[arg(long)]
    pairs: PathBuf,
    /// CSV of tau,tpr,fpr.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON; defaults to OUT with a .json extension.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct EvalClusteringArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
    #[command(flatten)]
    tau: TauArgs,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV with one row per (p, repetition).
    #[arg(long)]
    out: PathBuf,
    /// CSV with the per-p means and RMSE.
    #[arg(long)]
    populations_out: Option<PathBuf>,
    /// Summary JSON; defaults to OUT with a .json extension.
    #[arg(long)]
    summary: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn stage<E: Display>(code: u8) -> impl Fn(E) -> Failure {
    move |e| Failure {
        code,
        message: e.to_string(),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct FileRecord {
    path: String,
    sha256: String,
}

/// Provenance written next to a subcommand's first output as
/// `<output>.manifest.json`.
#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    config: &'a RunConfig,
    seeds: BTreeMap<&'a str, u64>,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
}

fn file_record(path: &Path, code: u8) -> Result<FileRecord, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure {
        code,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(FileRecord {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

struct Run<'a> {
    command: &'a str,
    config: &'a RunConfig,
    seeds: BTreeMap<&'a str, u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn new(command: &'a str, config: &'a RunConfig) -> Self {
        Run {
            command,
            config,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn write_manifest(self, code: u8) -> Outcome {
        let Some(first) = self.outputs.first() else {
            return Ok(());
        };
        let manifest = Manifest {
            command: self.command,
            config_hash: self.config.hash(),
            config: self.config,
            seeds: self.seeds,
            inputs: self
                .inputs
                .iter()
                .map(|p| file_record(p, code))
                .collect::<Result<_, _>>()?,
            outputs: self
                .outputs
                .iter()
                .map(|p| file_record(p, code))
                .collect::<Result<_, _>>()?,
        };
        let mut path = first.clone().into_os_string();
        path.push(".manifest.json");
        write_json(
            Path::new(&path),
            &serde_json::to_value(&manifest).expect("manifest serialises"),
            code,
        )
    }
}

fn write_json(path: &Path, value: &serde_json::Value, code: u8) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).expect("json serialises");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure {
        code,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn write_with<F>(path: &Path, code: u8, body: F) -> Outcome
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let err = |e: std::io::Error| Failure {
        code,
        message: format!("cannot write {}: {e}", path.display()),
    };
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    body(&mut w).map_err(err)?;
    w.flush().map_err(err)
}

fn summary_path(out: &Path, summary: &Option<PathBuf>) -> PathBuf {
    summary.clone().unwrap_or_else(|| out.with_extension("json"))
}

fn read_vectors(path: &Path) -> Result<Arc<Vec<ProbeVector>>, Failure> {
    load_vectors(path).map(Arc::new).map_err(|e| Failure {
        code: EXIT_INGEST,
        message: format!("{}: {e}", path.display()),
    })
}

fn read_model(path: &Path) -> Result<FingerprintModel, Failure> {
    FingerprintModel::load(path).map_err(|e| Failure {
        code: EXIT_TRAINING,
        message: format!("{}: {e}", path.display()),
    })
}

fn parse_mac(s: &str) -> Option<MacAddr> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 6 {
        return None;
    }
    let mut mac = [0u8; 6];
    for (b, p) in mac.iter_mut().zip(parts) {
        *b = u8::from_str_radix(p, 16).ok()?;
    }
    Some(mac)
}

fn read_mac_labels(path: &Path) -> Result<HashMap<MacAddr, String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(mac, label)| Some((parse_mac(mac.trim())?, label.trim())));
        match parsed {
            Some((mac, label)) if !label.is_empty() => {
                map.insert(mac, label.to_owned());
            }
            _ => return Err(usage(format!("{} line {}: expected mac,label", path.display(), n + 1))),
        }
    }
    Ok(map)
}

/// Tau for clustering: flag, then config, then the optimal point of an ROC summary.
fn resolve_tau(args: &TauArgs, config: &RunConfig) -> Result<(u32, String), Failure> {
    if let Some(t) = args.tau {
        return Ok((t, "flag".into()));
    }
    if let Some(t) = config.eval.tau {
        return Ok((t, "config".into()));
    }
    let Some(path) = &args.roc_summary else {
        return Err(usage("no tau: pass --tau, --roc-summary or set eval.tau"));
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    value["optimal_tau"]
        .as_u64()
        .map(|t| (t as u32, format!("roc summary {}", path.display())))
        .ok_or_else(|| usage(format!("{} has no optimal_tau", path.display())))
}

fn dissect_cmd(args: &DissectArgs, config: &RunConfig) -> Outcome {
    let macs = match &args.mac_labels {
        Some(p) => read_mac_labels(p)?,
        None => HashMap::new(),
    };
    let mut run = Run::new("dissect", config);
    let mut capture = RawCapture::default();
    for spec in &args.captures {
        let Some((label, path)) = spec.split_once('=').filter(|(l, p)| !l.is_empty() && !p.is_empty()) else {
            return Err(usage(format!("--capture expects LABEL=PATH, got {spec:?}")));
        };
        let mut labels = LabelMap::for_file(label);
        labels.by_mac = macs.clone();
        labels.default_channel = args.channel;
        let path = PathBuf::from(path);
        capture.extend(load_capture(&path, &labels).map_err(stage(EXIT_INGEST))?);
        run.inputs.push(path);
    }
    let vectors = export_vectors(&capture).map_err(stage(EXIT_INGEST))?;
    save_vectors(&args.out, &vectors).map_err(stage(EXIT_INGEST))?;
    let devices: std::collections::HashSet<&str> = vectors.iter().map(|v| v.device_label.as_str()).collect();
    println!(
        "{} probe vectors from {} devices -> {}",
        vectors.len(),
        devices.len(),
        args.out.display()
    );
    run.outputs.push(args.out.clone());
    run.write_manifest(EXIT_INGEST)
}

fn pairs_cmd(args: &PairsArgs, config: &mut RunConfig) -> Outcome {
    if let Some(n) = args.matching {
        config.pairs.matching = n;
    }
    if let Some(f) = args.train_fraction {
        config.pairs.train_fraction = f;
    }
    if let Some(s) = args.seed {
        config.pairs.seed = s;
    }
    if let Some(s) = args.split_seed {
        config.pairs.split_seed = s;
    }
    config.validate().map_err(stage(EXIT_USAGE))?;
    let vectors = read_vectors(&args.vectors)?;
    let all = build_pairs(vectors, config.pairs.matching, config.pairs.seed).map_err(stage(EXIT_INGEST))?;
    let (train, test) =
        split(&all, config.pairs.train_fraction, config.pairs.split_seed).map_err(stage(EXIT_INGEST))?;
    save_pairs(&args.train_out, &train).map_err(stage(EXIT_INGEST))?;
    save_pairs(&args.test_out, &test).map_err(stage(EXIT_INGEST))?;
    println!("{} pairs: {} train, {} test", all.len(), train.len(), test.len());
    let mut run = Run::new("pairs", config);
    run.seeds.insert("pairs", config.pairs.seed);
    run.seeds.insert("split", config.pairs.split_seed);
    run.inputs.push(args.vectors.clone());
    run.outputs.extend([args.train_out.clone(), args.test_out.clone()]);
    run.write_manifest(EXIT_INGEST)
}

fn train_cmd(args: &TrainArgs, config: &mut RunConfig) -> Outcome {
    if let Some(m) = args.bits {
        config.train.bits = m;
    }
    if let Some(r) = args.allow_repeat {
        config.train.allow_repeat = r;
    }
    config.validate().map_err(stage(EXIT_USAGE))?;
    let vectors = read_vectors(&args.vectors)?;
    let pairs = load_pairs(&args.pairs, vectors).map_err(stage(EXIT_INGEST))?;
    let bank = FilterBank::from_params(&config.bank_params()).map_err(stage(EXIT_USAGE))?;
    let thresholds = config.threshold_set().map_err(stage(EXIT_USAGE))?;
    let mut model = train_with(&pairs, &bank, &thresholds, config.train_options()).map_err(stage(EXIT_TRAINING))?;
    model.metadata.config_hash = Some(config.hash());
    model.save(&args.out).map_err(stage(EXIT_TRAINING))?;
    println!(
        "{}-bit model from {} filters and {} pairs (compression {}) -> {}",
        model.bits(),
        bank.len(),
        pairs.len(),
        CompressionRatio::for_bits(model.bits() as u32),
        args.out.display()
    );
    let mut run = Run::new("train", config);
    run.seeds.insert("pairs", pairs.rng_seed);
    if let Some((_, seed)) = config.bank_params().subsample {
        run.seeds.insert("bank_subsample", seed);
    }
    run.inputs.extend([args.vectors.clone(), args.pairs.clone()]);
    run.outputs.push(args.out.clone());
    run.write_manifest(EXIT_TRAINING)
}

fn fingerprint_cmd(args: &FingerprintArgs, config: &RunConfig) -> Outcome {
    let model = read_model(&args.model)?;
    let vectors = read_vectors(&args.vectors)?;
    let fps: Vec<_> = vectors
        .iter()
        .map(|v| probefp::codec::fingerprint(&model, &v.bits))
        .collect();
    save_batch(&args.out, model.bits(), &fps).map_err(stage(EXIT_EVALUATION))?;
    println!(
        "{} fingerprints of {} bits -> {}",
        fps.len(),
        model.bits(),
        args.out.display()
    );
    let mut run = Run::new("fingerprint", config);
    run.inputs.extend([args.model.clone(), args.vectors.clone()]);
    run.outputs.push(args.out.clone());
    run.write_manifest(EXIT_EVALUATION)
}

fn match_cmd(args: &MatchArgs) -> Outcome {
    let (_, fps) = load_batch(&args.fingerprints).map_err(stage(EXIT_EVALUATION))?;
    let get = |i: usize| {
        fps.get(i)
            .ok_or_else(|| usage(format!("record {i} out of range ({} records)", fps.len())))
    };
    let (fa, fb) = (get(args.a)?, get(args.b)?);
    let label = match (args.tau, args.weighted) {
        (Some(tau), None) => {
            log::info!("hamming distance {}", hamming(fa, fb).map_err(stage(EXIT_EVALUATION))?);
            predict_match(fa, fb, tau).map_err(stage(EXIT_EVALUATION))?
        }
        (None, Some(tau_w)) => {
            let model = read_model(args.model.as_ref().expect("clap enforces --model"))?;
            log::info!(
                "weighted score {}",
                weighted_score(&model, fa, fb).map_err(stage(EXIT_EVALUATION))?
            );
            predict_match_weighted(&model, fa, fb, tau_w).map_err(stage(EXIT_EVALUATION))?
        }
        _ => return Err(usage("pass exactly one of --tau or --weighted")),
    };
    println!("{label}");
    Ok(())
}

fn cluster_cmd(args: &ClusterArgs, config: &RunConfig) -> Outcome {
    let (tau, tau_source) = resolve_tau(&args.tau, config)?;
    let (_, fps) = load_batch(&args.fingerprints).map_err(stage(EXIT_EVALUATION))?;
    let run_result = cluster_stream(&fps, tau).map_err(stage(EXIT_EVALUATION))?;
    write_with(&args.out, EXIT_EVALUATION, |w| {
        writeln!(w, "input_index,cluster_id")?;
        for (i, c) in run_result.assignment.iter().enumerate() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    })?;
    let summary = summary_path(&args.out, &args.summary);
    let s = run_result.summary();
    write_json(
        &summary,
        &json!({
            "config_hash": config.hash(),
            "tau": tau,
            "tau_source": tau_source,
            "inputs": s.inputs,
            "cluster_count": s.cluster_count,
            "sizes": s.sizes,
        }),
        EXIT_EVALUATION,
    )?;
    println!("{} inputs -> {} clusters (tau {tau})", s.inputs, s.cluster_count);
    let mut run = Run::new("cluster", config);
    run.inputs.push(args.fingerprints.clone());
    if let Some(p) = &args.tau.roc_summary {
        run.inputs.push(p.clone());
    }
    run.outputs.extend([args.out.clone(), summary]);
    run.write_manifest(EXIT_EVALUATION)
}

fn eval_roc_cmd(args: &EvalRocArgs, config: &RunConfig) -> Outcome {
    let model = read_model(&args.model)?;
    let vectors = read_vectors(&args.vectors)?;
    let test = load_pairs(&args.pairs, vectors).map_err(stage(EXIT_INGEST))?;
    let curve = roc_curve(&model, &test).map_err(stage(EXIT_EVALUATION))?;
    write_with(&args.out, EXIT_EVALUATION, |w| write_roc_csv(w, &curve))?;
    let best = optimal_tau(&curve).expect("curve has M+2 points");
    let point = curve[best as usize];
    let summary = summary_path(&args.out, &args.summary);
    write_json(
        &summary,
        &json!({
            "config_hash": config.hash(),
            "model_config_hash": model.metadata.config_hash,
            "bits": model.bits(),
            "compression_ratio": CompressionRatio::for_bits(model.bits() as u32).to_string(),
            "test_pairs": test.len(),
            "matching_pairs": test.count(MatchLabel::Match),
            "non_matching_pairs": test.count(MatchLabel::NonMatch),
            "points": curve.len(),
            "optimal_tau": best,
            "optimal_tpr": point.tpr,
            "optimal_fpr": point.fpr,
        }),
        EXIT_EVALUATION,
    )?;
    println!(
        "{} ROC points; optimal tau {best} (tpr {:.4}, fpr {:.4})",
        curve.len(),
        point.tpr,
        point.fpr
    );
    let mut run = Run::new("eval-roc", config);
    run.seeds.insert("pairs", test.rng_seed);
    run.inputs
        .extend([args.model.clone(), args.vectors.clone(), args.pairs.clone()]);
    run.outputs.extend([args.out.clone(), summary]);
    run.write_manifest(EXIT_EVALUATION)
}

fn eval_clustering_cmd(args: &EvalClusteringArgs, config: &mut RunConfig) -> Outcome {
    if let Some(d) = args.repetitions {
        config.eval.repetitions = d;
    }
    if let Some(s) = args.seed {
        config.eval.seed = s;
    }
    config.validate().map_err(stage(EXIT_USAGE))?;
    let (tau, tau_source) = resolve_tau(&args.tau, config)?;
    let model = read_model(&args.model)?;
    let vectors = read_vectors(&args.vectors)?;
    let report = subset_protocol(&vectors, &model, tau, config.eval.repetitions, config.eval.seed)
        .map_err(stage(EXIT_EVALUATION))?;
    write_with(&args.out, EXIT_EVALUATION, |w| write_cells_csv(w, &report.cells))?;
    let mut outputs = vec![args.out.clone()];
    if let Some(p) = &args.populations_out {
        write_with(p, EXIT_EVALUATION, |w| write_populations_csv(w, &report.populations))?;
        outputs.push(p.clone());
    }
    let avg = &report.averages;
    let summary = summary_path(&args.out, &args.summary);
    write_json(
        &summary,
        &json!({
            "config_hash": config.hash(),
            "model_config_hash": model.metadata.config_hash,
            "tau": tau,
            "tau_source": tau_source,
            "repetitions": report.repetitions,
            "seed": report.seed,
            "rng": report.rng,
            "device_count": report.device_count,
            "vector_count": report.vector_count,
            "table": {
                "Memory (bits / probe request)": avg.memory_bits,
                "Compression Ratio": avg.compression_ratio,
                "V-Measure (avg)": avg.v_measure,
                "Homogeneity (avg)": avg.homogeneity,
                "Completeness (avg)": avg.completeness,
                "RMSE (avg)": avg.rmse,
            },
            "populations": report.populations,
        }),
        EXIT_EVALUATION,
    )?;
    outputs.push(summary);
    println!(
        "{}-bit, tau {tau}: V {:.3} H {:.3} C {:.3} RMSE {:.3} over p = 1..{}",
        avg.memory_bits,
        avg.v_measure,
        avg.homogeneity,
        avg.completeness,
        avg.rmse,
        report.device_count - 1
    );
    let mut run = Run::new("eval-clustering", config);
    run.seeds.insert("subsets", config.eval.seed);
    run.inputs.extend([args.model.clone(), args.vectors.clone()]);
    if let Some(p) = &args.tau.roc_summary {
        run.inputs.push(p.clone());
    }
    run.outputs = outputs;
    run.write_manifest(EXIT_EVALUATION)
}

fn run(cli: Cli) -> Outcome {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(stage(EXIT_USAGE))?,
        None => RunConfig::default(),
    };
    config.validate().map_err(stage(EXIT_USAGE))?;
    match &cli.command {
        Command::Dissect(a) => dissect_cmd(a, &config),
        Command::Pairs(a) => pairs_cmd(a, &mut config),
        Command::Train(a) => train_cmd(a, &mut config),
        Command::Fingerprint(a) => fingerprint_cmd(a, &config),
        Command::Match(a) => match_cmd(a),
        Command::Cluster(a) => cluster_cmd(a, &config),
        Command::EvalRoc(a) => eval_roc_cmd(a, &config),
        Command::EvalClustering(a) => eval_clustering_cmd(a, &mut config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("probefp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
