//! `linerblc`: synthetic data, BLC extraction, training, prediction and
//! evaluation from the command line.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blc_core::image::{decode_png, Preprocessor};
use blc_core::model::{predict_transfer, sha256_hex, ModelBundle, PredictionRecord};
use blc_core::param_stage::build_feature_vector;
use blc_core::pipeline::{
    csv_line, evaluate, grouped_split, load_manifest, load_samples, run_crossval, train_model, write_config_lock,
    Manifest, PipelineConfig,
};
use blc_core::surface::io::{format_blc_text, load_blc, load_htdp, save_blc};
use blc_core::surface::{compute_blc, Blc, KParams, VolumeParams};
use blc_core::synth::{generate_dataset, DatasetConfig};
use blc_core::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "linerblc", version, about = "Bearing load curves from RGB reflection images of honed liners")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Dataset manifest (JSON array of records).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with manifest.
    Synth {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        liners: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// Image and depth side length in pixels.
        #[arg(long)]
        size: Option<usize>,
    },
    /// BLCs of HTDP depth files, or of every manifest record.
    Blc {
        depth: Vec<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Roughness parameters of BLC text files or HTDP depth files.
    Params {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Filtered BLC stacks and 12-value feature vectors of PNG images.
    Preprocess {
        images: Vec<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Train both stages on the training liners and evaluate on the rest.
    Train,
    /// Liner-grouped k-fold cross-validation.
    Crossval,
    /// Predict BLCs for PNG images or manifest records.
    Predict {
        #[arg(long)]
        model: PathBuf,
        images: Vec<PathBuf>,
    },
    /// Evaluate a model on a manifest with ground truth.
    Eval {
        #[arg(long)]
        model: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Blc { .. } => "blc",
            Command::Params { .. } => "params",
            Command::Preprocess { .. } => "preprocess",
            Command::Train => "train",
            Command::Crossval => "crossval",
            Command::Predict { .. } => "predict",
            Command::Eval { .. } => "eval",
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct RunConfig {
    synth: DatasetConfig,
    #[serde(flatten)]
    pipeline: PipelineConfig,
}

#[derive(Serialize)]
struct ConfigLock<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::from(e).context(path.display())
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut config: RunConfig = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        config.synth.seed = s;
        config.pipeline.seed = s;
        config.pipeline.param.seed = s;
        config.pipeline.blc.seed = s;
    }
    Ok(config)
}

fn manifest_arg(common: &Common) -> Result<Manifest> {
    let path = common.manifest.as_ref().ok_or_else(|| Error::InvalidInput("--manifest is required".into()))?;
    load_manifest(path)
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, body).map_err(io_err(path))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

/// `(name, path)` pairs from the positional inputs or from one manifest column.
fn inputs(
    common: &Common,
    given: &[PathBuf],
    column: impl Fn(&blc_core::pipeline::ManifestRecord) -> &str,
) -> Result<Vec<(String, PathBuf)>> {
    if !given.is_empty() {
        return Ok(given.iter().map(|p| (stem(p), p.clone())).collect());
    }
    let m = manifest_arg(common).map_err(|e| match e {
        Error::InvalidInput(_) if common.manifest.is_none() => Error::InvalidInput("give input files or --manifest".into()),
        other => other,
    })?;
    Ok(m.records.iter().map(|r| (r.id.clone(), m.resolve(column(r)))).collect())
}

fn synth(out: &Path, config: &mut RunConfig, n: Option<usize>, liners: Option<usize>, k: Option<usize>, size: Option<usize>) -> Result<()> {
    let c = &mut config.synth;
    c.n = n.unwrap_or(c.n);
    c.liners = liners.unwrap_or(c.liners);
    c.k = k.unwrap_or(c.k);
    if let Some(s) = size {
        c.rows = s;
        c.cols = s;
    }
    let records = generate_dataset(c, out)?;
    println!("wrote {} pairs to {}", records.len(), out.join("manifest.json").display());
    Ok(())
}

fn blc(common: &Common, k: usize, depth: &[PathBuf]) -> Result<()> {
    for (name, path) in inputs(common, depth, |r| &r.depth_path)? {
        let b = compute_blc(&load_htdp(&path).map_err(|e| e.context(path.display()))?, k)?;
        save_blc(common.out.join(format!("{name}.txt")), &b)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ParamRow {
    source: String,
    k: usize,
    k_params: KParams,
    volume_params: VolumeParams,
}

fn params(common: &Common, k: usize, given: &[PathBuf]) -> Result<()> {
    let list = inputs(common, given, |r| &r.depth_path)?;
    let mut rows = Vec::new();
    let mut csv = csv_line(&["source", "k", "sk", "spk", "svk", "smr1", "smr2", "vmp", "vvv", "vmc", "vvc"]);
    for (name, path) in list {
        let curve: Blc = if path.extension().is_some_and(|e| e == "htdp") {
            compute_blc(&load_htdp(&path)?, k)?
        } else {
            load_blc(&path)?
        };
        let (kp, vp) = (curve.k_params()?, curve.volume_params()?);
        let mut cells = vec![name.clone(), curve.k().to_string()];
        cells.extend([kp.sk, kp.spk, kp.svk, kp.smr1, kp.smr2, vp.vmp, vp.vvv, vp.vmc, vp.vvc].map(|v| format!("{v:.9}")));
        csv += &csv_line(&cells);
        rows.push(ParamRow { source: name, k: curve.k(), k_params: kp, volume_params: vp });
    }
    let json = serde_json::to_string_pretty(&rows)? + "\n";
    print!("{json}");
    write(&common.out.join("params.json"), json)?;
    write(&common.out.join("params.csv"), csv)
}

fn load_image(path: &Path) -> Result<(blc_core::image::ReflectionImage, String)> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let img = decode_png(&bytes).map_err(|e| e.context(path.display()))?;
    Ok((img, sha256_hex(&bytes)))
}

fn preprocess(common: &Common, config: &RunConfig, k: Option<usize>, images: &[PathBuf]) -> Result<()> {
    let mut pc = config.pipeline.preprocess.clone();
    pc.k = k.unwrap_or(pc.k);
    let pre = Preprocessor::new(pc.clone())?;
    let mut header = vec!["id".to_string()];
    for fam in ["sk", "vvv", "vmp"] {
        header.extend(pc.sigmas.iter().map(|s| format!("{fam}_sigma{s}")));
    }
    let mut features = csv_line(&header);
    for (name, path) in inputs(common, images, |r| &r.rgb_path)? {
        let (img, _) = load_image(&path)?;
        let stack = pre.stack(&img).map_err(|e| e.context(&name))?;
        let mut t = csv_line(&pc.sigmas.iter().map(|s| format!("sigma{s}")).collect::<Vec<_>>());
        for row in 0..stack.k() {
            t += &csv_line(&stack.row(row).iter().map(|v| format!("{v:.9}")).collect::<Vec<_>>());
        }
        write(&common.out.join(format!("{name}.stack.csv")), t)?;
        let f = build_feature_vector(&stack)?;
        let mut cells = vec![name];
        cells.extend(f.values().iter().map(|v| format!("{v:.9}")));
        features += &csv_line(&cells);
    }
    write(&common.out.join("features.csv"), features)
}

#[derive(Serialize)]
struct History<'a> {
    param: &'a [blc_core::train::EpochLog],
    blc: &'a [blc_core::train::EpochLog],
}

#[derive(Serialize)]
struct SplitRecord {
    train: Vec<String>,
    eval: Vec<String>,
}

fn train(common: &Common, config: &RunConfig) -> Result<()> {
    let c = &config.pipeline;
    c.validate()?;
    let manifest = manifest_arg(common)?;
    let (train_m, eval_m) = grouped_split(&manifest, c.eval_fraction, c.seed)?;
    let samples = load_samples(&manifest, c.preprocess.k)?;
    let eval_ids: HashSet<&str> = eval_m.records.iter().map(|r| r.id.as_str()).collect();
    let (held, train): (Vec<_>, Vec<_>) = samples.into_iter().partition(|s| eval_ids.contains(s.record.id.as_str()));
    eprintln!("training on {} records, {} liners held out ({} records)", train.len(), eval_m.liners().len(), held.len());
    let outcome = train_model(&train, c)?;
    outcome.bundle.save(&common.out.join("model.bin"))?;
    let history = History { param: &outcome.param_history, blc: &outcome.blc_history };
    write(&common.out.join("history.json"), serde_json::to_string_pretty(&history)? + "\n")?;
    let split = SplitRecord {
        train: train_m.records.iter().map(|r| r.id.clone()).collect(),
        eval: eval_m.records.iter().map(|r| r.id.clone()).collect(),
    };
    write(&common.out.join("split.json"), serde_json::to_string_pretty(&split)? + "\n")?;
    let report = evaluate(&outcome.bundle, &held)?;
    report.write(&common.out.join("eval"), "Eval")?;
    println!("eval W1 {}", report.summary.w1.display(4));
    Ok(())
}

fn crossval(common: &Common, config: &RunConfig) -> Result<()> {
    let c = &config.pipeline;
    c.validate()?;
    let manifest = manifest_arg(common)?;
    let samples = load_samples(&manifest, c.preprocess.k)?;
    let report = run_crossval(&manifest, &samples, c)?;
    for (i, fold) in report.folds.iter().enumerate() {
        fold.write(&common.out.join(format!("fold{}", i + 1)), &(i + 1).to_string())?;
    }
    let csv = report.to_csv();
    print!("{csv}");
    write(&common.out.join("crossval.csv"), csv)?;
    write(&common.out.join("crossval.json"), serde_json::to_string_pretty(&report)? + "\n")
}

fn predict(common: &Common, model_path: &Path, images: &[PathBuf]) -> Result<()> {
    let model_bytes = fs::read(model_path).map_err(io_err(model_path))?;
    let model = ModelBundle::from_bytes(&model_bytes).map_err(|e| e.context(model_path.display()))?;
    let model_sha = sha256_hex(&model_bytes);
    for (name, path) in inputs(common, images, |r| &r.rgb_path)? {
        let (img, input_sha) = load_image(&path)?;
        let t = predict_transfer(&model, &img).map_err(|e| e.context(&name))?;
        write(&common.out.join(format!("{name}.blc.txt")), format_blc_text(t.blc.values()))?;
        let sidecar = PredictionRecord {
            k: t.blc.k(),
            params: t.params,
            stage1_params: t.stage1,
            monotone_projection: true,
            raw_output_monotone: t.raw_monotone,
            model_sha256: model_sha.clone(),
            input_sha256: input_sha,
        };
        write(&common.out.join(format!("{name}.json")), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    }
    Ok(())
}

fn eval(common: &Common, model_path: &Path) -> Result<()> {
    let model = ModelBundle::load(model_path)?;
    let manifest = manifest_arg(common)?;
    let samples = load_samples(&manifest, model.preprocess.k)?;
    let report = evaluate(&model, &samples)?;
    report.write(&common.out, "Eval")?;
    print!("{}", blc_core::pipeline::report_csv(&[("Eval".into(), report.summary.clone())]));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let mut config = load_config(common)?;
    create_dir(&common.out)?;
    write_config_lock(&common.out, &ConfigLock { command: cli.command.name(), config: &config })?;
    let default_k = config.pipeline.preprocess.k;
    let k_or = |k: Option<usize>| k.unwrap_or(default_k);
    match &cli.command {
        Command::Synth { n, liners, k, size } => {
            synth(&common.out, &mut config, *n, *liners, *k, *size)?;
            write_config_lock(&common.out, &ConfigLock { command: "synth", config: &config })
        }
        Command::Blc { depth, k } => blc(common, k_or(*k), depth),
        Command::Params { inputs, k } => params(common, k_or(*k), inputs),
        Command::Preprocess { images, k } => preprocess(common, &config, *k, images),
        Command::Train => train(common, &config),
        Command::Crossval => crossval(common, &config),
        Command::Predict { model, images } => predict(common, model, images),
        Command::Eval { model } => eval(common, model),
    }
}

/// 2 invalid input, 3 I/O, 4 training failure.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Training(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
