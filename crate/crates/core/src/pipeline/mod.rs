//! Manifests, grouped splitting, augmentation, evaluation and cross-validation.

mod augment;
mod evaluate;
mod manifest;
mod run;
mod split;

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub use augment::{apply_variant, augment, AugmentConfig, Variant};
pub use evaluate::{
    csv_line, evaluate_curves, hours_bins, hours_boxplot_svg, mean_blc, quantile_sorted, quartile_scatter_svg, report_cells,
    report_csv, sample_row, BoxStats, EvalReport, HoursBin, SampleRow, Stat, Summary, REPORT_HEADER,
    SAMPLES_HEADER, VOLUME_REPORT_SCALE,
};
pub use manifest::{load_manifest, save_manifest, validate_records, Manifest, ManifestRecord, Segment};
pub use run::{
    evaluate, ground_truth, load_samples, predict_samples, run_crossval, train_model, CrossvalReport,
    PipelineConfig, Sample, TrainOutcome,
};
pub use split::{grouped_split, make_folds, FoldPlan};

pub const CONFIG_LOCK_FILE: &str = "config.lock.json";

/// Echo the effective configuration into `dir` as `config.lock.json`.
pub fn write_config_lock<C: Serialize>(dir: &Path, config: &C) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).context(dir.display()))?;
    let path = dir.join(CONFIG_LOCK_FILE);
    fs::write(&path, serde_json::to_string_pretty(config)? + "\n").map_err(|e| Error::from(e).context(path.display()))
}
