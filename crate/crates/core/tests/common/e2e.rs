//! The synthetic end-to-end training run used by the acceptance target.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use blc_core::image::PreprocessConfig;
use blc_core::pipeline::{
    evaluate, evaluate_curves, grouped_split, load_manifest, load_samples, mean_blc, train_model, AugmentConfig,
    EvalReport, PipelineConfig, Sample,
};
use blc_core::surface::Blc;
use blc_core::synth::{generate_dataset, DatasetConfig};

pub const E2E_SEED: u64 = 2024;
pub const E2E_K: usize = 128;

pub struct E2eRun {
    pub bundle: Vec<u8>,
    pub report: EvalReport,
    pub baseline: EvalReport,
    pub train_records: usize,
    pub eval_records: usize,
    pub elapsed: Duration,
}

pub fn e2e_config(k: usize, seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig {
        preprocess: PreprocessConfig { k, ..Default::default() },
        augment: AugmentConfig { enabled: false, ..Default::default() },
        eval_fraction: 0.2,
        seed,
        ..Default::default()
    };
    c.param.seed = seed;
    c.blc.seed = seed;
    c
}

fn pick(samples: &[Sample], ids: &HashSet<&str>) -> Vec<Sample> {
    samples.iter().filter(|s| ids.contains(s.record.id.as_str())).cloned().collect()
}

/// Generate, split by liner, train both stages, evaluate on the held-out
/// liners and against the mean-BLC baseline.
pub fn run(dataset: &DatasetConfig, config: &PipelineConfig) -> E2eRun {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(dataset, dir.path()).unwrap();
    let manifest = load_manifest(&dir.path().join("manifest.json")).unwrap();
    let samples = load_samples(&manifest, config.preprocess.k).unwrap();
    let (train_m, eval_m) = grouped_split(&manifest, config.eval_fraction, config.seed).unwrap();
    let train_ids: HashSet<&str> = train_m.records.iter().map(|r| r.id.as_str()).collect();
    let eval_ids: HashSet<&str> = eval_m.records.iter().map(|r| r.id.as_str()).collect();
    let (train, held) = (pick(&samples, &train_ids), pick(&samples, &eval_ids));

    let outcome = train_model(&train, config).unwrap();
    let report = evaluate(&outcome.bundle, &held).unwrap();

    let mean = mean_blc(&train.iter().map(|s| s.truth.clone()).collect::<Vec<Blc>>()).unwrap();
    let records: Vec<_> = held.iter().map(|s| &s.record).collect();
    let truth: Vec<Blc> = held.iter().map(|s| s.truth.clone()).collect();
    let baseline = evaluate_curves(&records, &truth, &vec![mean; held.len()]).unwrap();
    E2eRun {
        bundle: outcome.bundle.to_bytes().unwrap(),
        report,
        baseline,
        train_records: train.len(),
        eval_records: held.len(),
        elapsed: t0.elapsed(),
    }
}
