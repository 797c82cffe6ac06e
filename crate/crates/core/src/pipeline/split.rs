//! Liner-grouped train/eval splits and cross-validation folds.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Manifest;
use crate::error::{Error, Result};

struct LinerInfo<'a> {
    id: &'a str,
    records: usize,
    hours: f64,
}

fn liner_info(manifest: &Manifest) -> Vec<LinerInfo<'_>> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<LinerInfo<'_>> = Vec::new();
    for r in &manifest.records {
        let i = *index.entry(r.liner_id.as_str()).or_insert_with(|| {
            out.push(LinerInfo { id: r.liner_id.as_str(), records: 0, hours: 0.0 });
            out.len() - 1
        });
        out[i].records += 1;
        out[i].hours += r.operating_hours;
    }
    for l in &mut out {
        l.hours /= l.records as f64;
    }
    out
}

fn subset_by_liners(manifest: &Manifest, liners: &HashSet<&str>, keep: bool) -> Manifest {
    Manifest {
        records: manifest.records.iter().filter(|r| liners.contains(r.liner_id.as_str()) == keep).cloned().collect(),
        base_dir: manifest.base_dir.clone(),
    }
}

/// Split whole liners into `(train, eval)`. Liners are sorted by their mean
/// operating hours and cut into as many consecutive bins as eval liners are
/// needed; one liner is drawn from each bin.
pub fn grouped_split(manifest: &Manifest, eval_fraction: f64, seed: u64) -> Result<(Manifest, Manifest)> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::invalid(format!("eval fraction must lie in (0, 1), got {eval_fraction}")));
    }
    let mut liners = liner_info(manifest);
    if liners.len() < 2 {
        return Err(Error::invalid(format!("a grouped split needs at least 2 liners, got {}", liners.len())));
    }
    let n = liners.len();
    let n_eval = ((eval_fraction * n as f64).round() as usize).clamp(1, n - 1);
    liners.sort_by(|a, b| a.hours.total_cmp(&b.hours).then_with(|| a.id.cmp(b.id)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = HashSet::new();
    for b in 0..n_eval {
        let (lo, hi) = (b * n / n_eval, (b + 1) * n / n_eval);
        chosen.insert(liners[rng.random_range(lo..hi)].id);
    }
    Ok((subset_by_liners(manifest, &chosen, false), subset_by_liners(manifest, &chosen, true)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Record id to fold index.
    pub assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    /// Ids of the records in `fold`, sorted.
    pub fn fold_ids(&self, fold: usize) -> HashSet<&str> {
        self.assignment.iter().filter(|(_, &f)| f == fold).map(|(id, _)| id.as_str()).collect()
    }

    /// `(training part, held-out part)` of the manifest for one fold.
    pub fn split(&self, manifest: &Manifest, fold: usize) -> (Manifest, Manifest) {
        let held = self.fold_ids(fold);
        let train: HashSet<&str> =
            manifest.records.iter().map(|r| r.id.as_str()).filter(|id| !held.contains(id)).collect();
        (manifest.subset(&train), manifest.subset(&held))
    }
}

/// Assign whole liners to `k` folds. Liners are dealt in rounds of `k`,
/// largest first, each round giving the largest remaining liner to the fold
/// with the fewest records. Liner counts per fold then differ by at most one
/// and record counts by at most the largest liner.
pub fn make_folds(manifest: &Manifest, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut liners = liner_info(manifest);
    if liners.len() < k {
        return Err(Error::invalid(format!("{} liners cannot fill {k} folds", liners.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    liners.shuffle(&mut rng);
    liners.sort_by(|a, b| b.records.cmp(&a.records));

    let mut totals = vec![0usize; k];
    let mut liner_fold: HashMap<&str, usize> = HashMap::new();
    for round in liners.chunks(k) {
        let mut folds: Vec<usize> = (0..k).collect();
        folds.sort_by_key(|&f| (totals[f], f));
        for (liner, &f) in round.iter().zip(&folds) {
            totals[f] += liner.records;
            liner_fold.insert(liner.id, f);
        }
    }
    let assignment = manifest.records.iter().map(|r| (r.id.clone(), liner_fold[r.liner_id.as_str()])).collect();
    Ok(FoldPlan { k, assignment })
}
