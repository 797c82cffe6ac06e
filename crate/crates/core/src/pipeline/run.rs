//! Sample loading, two-stage training, model evaluation and cross-validation.

use std::io::ErrorKind;

use serde::{Deserialize, Serialize};

use super::augment::{apply_variant, AugmentConfig};
use super::evaluate::{evaluate_curves, report_csv, EvalReport, Stat, Summary};
use super::split::make_folds;
use super::{Manifest, ManifestRecord};
use crate::blc_stage::{assemble_input, train_blc, BlcTrainConfig};
use crate::error::{Error, Result};
use crate::image::{load_png, FilteredBlcStack, PreprocessConfig, Preprocessor, ReflectionImage};
use crate::model::ModelBundle;
use crate::param_stage::{build_feature_vector, train_params, ParamTrainConfig, ParamTriple};
use crate::surface::io::{load_blc, load_htdp};
use crate::surface::{compute_blc, Blc};
use crate::train::EpochLog;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub param: ParamTrainConfig,
    pub blc: BlcTrainConfig,
    pub augment: AugmentConfig,
    /// Share of liners held out by `grouped_split`.
    pub eval_fraction: f64,
    pub folds: usize,
    /// Seeds both stages and all splits; overrides the stage seeds.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            param: ParamTrainConfig::default(),
            blc: BlcTrainConfig::default(),
            augment: AugmentConfig::default(),
            eval_fraction: 0.17,
            folds: 5,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(Error::config(format!("eval_fraction must lie in (0, 1), got {}", self.eval_fraction)));
        }
        if self.folds < 2 {
            return Err(Error::config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !(self.augment.blur_sigma >= 0.0) {
            return Err(Error::config("blur_sigma must be non-negative"));
        }
        Ok(())
    }
}

/// A record with its reflection image and ground-truth BLC.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub record: ManifestRecord,
    pub image: ReflectionImage,
    pub truth: Blc,
}

fn missing_as_invalid(e: Error) -> Error {
    match e {
        Error::Io(io) if io.kind() == ErrorKind::NotFound => Error::InvalidInput(format!("missing ground truth: {io}")),
        other => other,
    }
}

/// The stored BLC when its length is `k`, else the BLC of the depth profile.
pub fn ground_truth(manifest: &Manifest, record: &ManifestRecord, k: usize) -> Result<Blc> {
    if let Some(p) = &record.blc_path {
        let path = manifest.resolve(p);
        let b = load_blc(&path).map_err(|e| missing_as_invalid(e).context(path.display()))?;
        if b.k() == k {
            return Ok(b);
        }
    }
    let path = manifest.resolve(&record.depth_path);
    let depth = load_htdp(&path).map_err(|e| missing_as_invalid(e).context(path.display()))?;
    compute_blc(&depth, k)
}

/// Load images and ground truth for every record, in manifest order.
pub fn load_samples(manifest: &Manifest, k: usize) -> Result<Vec<Sample>> {
    let load = |r: &ManifestRecord| -> Result<Sample> {
        let rgb = manifest.resolve(&r.rgb_path);
        let image = load_png(&rgb).map_err(|e| e.context(rgb.display()))?;
        let truth = ground_truth(manifest, r, k)?;
        Ok(Sample { record: r.clone(), image, truth })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        manifest.records.par_iter().map(load).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        manifest.records.iter().map(load).collect()
    }
}

/// Filtered stacks for all augmented variants, sample-major.
fn augmented_stacks(pre: &Preprocessor, samples: &[Sample], augment: &AugmentConfig) -> Result<Vec<(FilteredBlcStack, Blc)>> {
    let variants = augment.variants();
    let one = |s: &Sample| -> Result<Vec<(FilteredBlcStack, Blc)>> {
        variants
            .iter()
            .map(|&v| Ok((pre.stack(&apply_variant(&s.image, v, augment.blur_sigma))?, s.truth.clone())))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.context(&s.record.id))
    };
    #[cfg(feature = "parallel")]
    let nested: Vec<Vec<_>> = {
        use rayon::prelude::*;
        samples.par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let nested: Vec<Vec<_>> = samples.iter().map(one).collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub param_history: Vec<EpochLog>,
    pub blc_history: Vec<EpochLog>,
}

fn training_failure(stage: &str, e: Error) -> Error {
    match e {
        Error::Training(m) => Error::Training(format!("{stage}: {m}")),
        other => other.context(stage),
    }
}

/// Train stage 1 on the augmented training stacks, feed its standardized
/// predictions into the stage-2 signals and train stage 2.
pub fn train_model(train: &[Sample], config: &PipelineConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let pre = Preprocessor::new(config.preprocess.clone())?;
    let data = augmented_stacks(&pre, train, &config.augment)?;

    let set1 = data
        .iter()
        .map(|(s, b)| Ok((build_feature_vector(s)?, ParamTriple::from_blc(b)?)))
        .collect::<Result<Vec<_>>>()?;
    let param_cfg = ParamTrainConfig { seed: config.seed, ..config.param.clone() };
    let stage1 = train_params(&set1, None, &param_cfg).map_err(|e| training_failure("parameter stage", e))?;

    let set2 = data
        .iter()
        .zip(&set1)
        .map(|((s, b), (f, _))| Ok((assemble_input(s, &stage1.model.predict_standardized(f)?)?, b.clone())))
        .collect::<Result<Vec<_>>>()?;
    drop(data);
    let blc_cfg = BlcTrainConfig { seed: config.seed.wrapping_add(1), ..config.blc.clone() };
    let stage2 = train_blc(&set2, None, &blc_cfg).map_err(|e| training_failure("BLC stage", e))?;

    let bundle = ModelBundle::new(stage1.model, stage2.net, config.preprocess.clone(), serde_json::to_value(config)?)?;
    Ok(TrainOutcome { bundle, param_history: stage1.history, blc_history: stage2.history })
}

/// Predicted (projected) BLCs for the samples, in input order.
pub fn predict_samples(model: &ModelBundle, samples: &[Sample]) -> Result<Vec<Blc>> {
    let one = |s: &Sample| crate::model::predict_transfer(model, &s.image).map(|t| t.blc).map_err(|e| e.context(&s.record.id));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        samples.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        samples.iter().map(one).collect()
    }
}

pub fn evaluate(model: &ModelBundle, samples: &[Sample]) -> Result<EvalReport> {
    if let Some(s) = samples.iter().find(|s| s.truth.k() != model.preprocess.k) {
        return Err(Error::invalid(format!(
            "{}: ground truth has K={}, model predicts K={}",
            s.record.id,
            s.truth.k(),
            model.preprocess.k
        )));
    }
    let predicted = predict_samples(model, samples)?;
    let records: Vec<&ManifestRecord> = samples.iter().map(|s| &s.record).collect();
    let truth: Vec<Blc> = samples.iter().map(|s| s.truth.clone()).collect();
    evaluate_curves(&records, &truth, &predicted)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub folds: Vec<EvalReport>,
    /// Fold-mean of each metric's mean and standard deviation.
    pub average: Summary,
    /// Standard deviation of the fold means.
    pub spread: Summary,
}

fn aggregate(summaries: &[&Summary]) -> (Summary, Summary) {
    let pick = |f: &dyn Fn(&Summary) -> Stat| -> (Stat, Stat) {
        let means: Vec<f64> = summaries.iter().map(|s| f(s).mean).collect();
        let stds: Vec<f64> = summaries.iter().map(|s| f(s).std).collect();
        let m = Stat::of(&means);
        (Stat { mean: m.mean, std: Stat::of(&stds).mean }, Stat { mean: m.std, std: 0.0 })
    };
    let n = summaries.iter().map(|s| s.n).sum();
    let (w1, sw1) = pick(&|s| s.w1);
    let (sk, ssk) = pick(&|s| s.sk_mae);
    let (mape, smape) = pick(&|s| s.sk_mape);
    let (vvv, svvv) = pick(&|s| s.vvv_mae);
    let (vmp, svmp) = pick(&|s| s.vmp_mae);
    (
        Summary { n, w1, sk_mae: sk, sk_mape: mape, vvv_mae: vvv, vmp_mae: vmp },
        Summary { n, w1: sw1, sk_mae: ssk, sk_mape: smape, vvv_mae: svvv, vmp_mae: svmp },
    )
}

impl CrossvalReport {
    /// Fold rows `1..=k`, then `Avg.` and `Std.`.
    pub fn to_csv(&self) -> String {
        let mut runs: Vec<(String, Summary)> =
            self.folds.iter().enumerate().map(|(i, r)| ((i + 1).to_string(), r.summary.clone())).collect();
        runs.push(("Avg.".into(), self.average.clone()));
        runs.push(("Std.".into(), self.spread.clone()));
        report_csv(&runs)
    }
}

/// Train on all folds but one and evaluate on the held-out fold, for every
/// fold of a liner-grouped plan.
pub fn run_crossval(manifest: &Manifest, samples: &[Sample], config: &PipelineConfig) -> Result<CrossvalReport> {
    let plan = make_folds(manifest, config.folds, config.seed)?;
    let mut folds = Vec::with_capacity(plan.k);
    for f in 0..plan.k {
        let held = plan.fold_ids(f);
        let (test, train): (Vec<Sample>, Vec<Sample>) =
            samples.iter().cloned().partition(|s| held.contains(s.record.id.as_str()));
        let outcome = train_model(&train, config).map_err(|e| e.context(format!("fold {}", f + 1)))?;
        folds.push(evaluate(&outcome.bundle, &test).map_err(|e| e.context(format!("fold {}", f + 1)))?);
    }
    let (average, spread) = aggregate(&folds.iter().map(|r| &r.summary).collect::<Vec<_>>());
    Ok(CrossvalReport { folds, average, spread })
}
