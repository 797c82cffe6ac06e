use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{generate_surface, render_reflection, SurfaceRecipe};
use crate::error::{Error, Result};
use crate::image::{save_png, ReflectionImage};
use crate::pipeline::{save_manifest, ManifestRecord, Segment};
use crate::surface::io::{save_blc, save_htdp};
use crate::surface::{compute_blc, DepthProfile};

/// Operating hours assigned to full wear.
pub const HOURS_AT_FULL_WEAR: f64 = 60000.0;

/// Inclusive sampling ranges `[lo, hi]` of the recipe fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecipeRanges {
    pub groove_angle_deg: [f64; 2],
    pub groove_spacing_um: [f64; 2],
    pub groove_depth_um: [f64; 2],
    pub plateau_roughness_um: [f64; 2],
    pub illumination_amplitude: [f64; 2],
    pub noise_level: [f64; 2],
}

impl Default for RecipeRanges {
    fn default() -> Self {
        Self {
            groove_angle_deg: [20.0, 30.0],
            groove_spacing_um: [40.0, 56.0],
            groove_depth_um: [1.8, 2.6],
            plateau_roughness_um: [0.3, 0.36],
            illumination_amplitude: [0.1, 0.35],
            noise_level: [0.01, 0.03],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n: usize,
    pub liners: usize,
    /// Sample count of the stored BLC files.
    pub k: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixel_pitch_um: f64,
    pub seed: u64,
    pub ranges: RecipeRanges,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { n: 200, liners: 25, k: 512, rows: 128, cols: 128, pixel_pitch_um: 4.0, seed: 0, ranges: RecipeRanges::default() }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("dataset needs at least one pair"));
        }
        if self.liners == 0 || self.liners > self.n {
            return Err(Error::config(format!("liner count must lie in 1..={}, got {}", self.n, self.liners)));
        }
        if self.k == 0 {
            return Err(Error::config("BLC sample count must be positive"));
        }
        let r = &self.ranges;
        for (name, [lo, hi]) in [
            ("groove_angle_deg", r.groove_angle_deg),
            ("groove_spacing_um", r.groove_spacing_um),
            ("groove_depth_um", r.groove_depth_um),
            ("plateau_roughness_um", r.plateau_roughness_um),
            ("illumination_amplitude", r.illumination_amplitude),
            ("noise_level", r.noise_level),
        ] {
            if !(lo <= hi) {
                return Err(Error::config(format!("range {name} is empty: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    fn liner_of(&self, index: usize) -> usize {
        index * self.liners / self.n
    }

    fn liner_span(&self, liner: usize) -> (usize, usize) {
        let first = (liner * self.n).div_ceil(self.liners);
        let end = ((liner + 1) * self.n).div_ceil(self.liners);
        (first, end)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticPair {
    pub id: String,
    pub liner_id: String,
    pub segment: Segment,
    pub operating_hours: f64,
    pub recipe: SurfaceRecipe,
    pub depth: DepthProfile,
    pub image: ReflectionImage,
}

fn sample(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const LINER_STREAM_BASE: u64 = 1 << 40;

/// Recipe and metadata of pair `index`, a pure function of `(config, index)`.
fn pair_recipe(config: &DatasetConfig, index: usize) -> (SurfaceRecipe, String, Segment) {
    let liner = config.liner_of(index);
    let (first, end) = config.liner_span(liner);
    let worn = 2 * (index - first) >= end - first;

    let r = &config.ranges;
    let mut lr = stream_rng(config.seed, LINER_STREAM_BASE + liner as u64);
    let liner_wear: f64 = lr.random_range(0.0..=1.0);
    let angle = sample(&mut lr, r.groove_angle_deg);
    let spacing = sample(&mut lr, r.groove_spacing_um);
    let depth = sample(&mut lr, r.groove_depth_um);
    let roughness = sample(&mut lr, r.plateau_roughness_um);

    let mut pr = stream_rng(config.seed, index as u64);
    let wear = if worn {
        liner_wear + pr.random_range(-0.08..=0.08)
    } else {
        0.35 * liner_wear + pr.random_range(0.0..=0.08)
    }
    .clamp(0.0, 1.0);
    let recipe = SurfaceRecipe {
        groove_angle_deg: angle,
        groove_spacing_um: spacing,
        groove_depth_um: depth,
        plateau_roughness_um: roughness,
        wear,
        illumination_amplitude: sample(&mut pr, r.illumination_amplitude),
        noise_level: sample(&mut pr, r.noise_level),
        rows: config.rows,
        cols: config.cols,
        pixel_pitch_um: config.pixel_pitch_um,
        seed: pr.random(),
    };
    let segment = if worn { Segment::SixOClock } else { Segment::ThreeOClock };
    (recipe, format!("liner{liner:03}"), segment)
}

fn synthesize_one(config: &DatasetConfig, index: usize) -> Result<SyntheticPair> {
    let (recipe, liner_id, segment) = pair_recipe(config, index);
    let depth = generate_surface(&recipe)?;
    let image = render_reflection(&depth, &recipe)?;
    Ok(SyntheticPair {
        id: format!("s{index:04}"),
        liner_id,
        segment,
        operating_hours: HOURS_AT_FULL_WEAR * recipe.wear,
        recipe,
        depth,
        image,
    })
}

/// All pairs in index order. Each pair depends only on `(seed, index)`.
pub fn synthesize_pairs(config: &DatasetConfig) -> Result<Vec<SyntheticPair>> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..config.n).into_par_iter().map(|i| synthesize_one(config, i)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..config.n).map(|i| synthesize_one(config, i)).collect()
    }
}

/// Write PNG, HTDP, BLC files and `manifest.json` under `out`.
pub fn generate_dataset(config: &DatasetConfig, out: &Path) -> Result<Vec<ManifestRecord>> {
    let pairs = synthesize_pairs(config)?;
    for sub in ["rgb", "depth", "blc"] {
        fs::create_dir_all(out.join(sub)).map_err(|e| Error::from(e).context(out.join(sub).display()))?;
    }
    let mut records = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let rgb = format!("rgb/{}.png", p.id);
        let depth = format!("depth/{}.htdp", p.id);
        let blc = format!("blc/{}.txt", p.id);
        save_png(out.join(&rgb), &p.image).map_err(|e| e.context(&rgb))?;
        save_htdp(out.join(&depth), &p.depth).map_err(|e| e.context(&depth))?;
        save_blc(out.join(&blc), &compute_blc(&p.depth, config.k)?).map_err(|e| e.context(&blc))?;
        records.push(ManifestRecord {
            id: p.id.clone(),
            liner_id: p.liner_id.clone(),
            segment: p.segment,
            operating_hours: p.operating_hours,
            rgb_path: rgb,
            depth_path: depth,
            blc_path: Some(blc),
        });
    }
    save_manifest(&out.join("manifest.json"), &records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn liner_assignment_is_balanced() {
        let c = DatasetConfig { n: 20, liners: 5, ..Default::default() };
        let liners: Vec<usize> = (0..20).map(|i| c.liner_of(i)).collect();
        for l in 0..5 {
            assert_eq!(liners.iter().filter(|&&x| x == l).count(), 4);
            let (a, b) = c.liner_span(l);
            assert!((a..b).all(|i| c.liner_of(i) == l));
        }
        let c = DatasetConfig { n: 7, liners: 3, ..Default::default() };
        let mut seen: Vec<usize> = (0..7).map(|i| c.liner_of(i)).collect();
        seen.dedup();
        assert_eq!(seen, vec![0, 1, 2]);
        for l in 0..3 {
            let (a, b) = c.liner_span(l);
            assert!((a..b).all(|i| c.liner_of(i) == l));
        }
    }

    #[test]
    fn recipes_are_index_pure() {
        let c = DatasetConfig { n: 10, liners: 2, rows: 32, cols: 32, ..Default::default() };
        assert_eq!(pair_recipe(&c, 7), pair_recipe(&c, 7));
        let (a, la, _) = pair_recipe(&c, 0);
        let (b, lb, _) = pair_recipe(&c, 1);
        assert_eq!(la, lb);
        assert_eq!(a.groove_depth_um, b.groove_depth_um);
        assert_ne!(a.seed, b.seed);
    }

    #[test]
    fn bad_configs() {
        assert!(DatasetConfig { n: 0, ..Default::default() }.validate().is_err());
        assert!(DatasetConfig { n: 3, liners: 4, ..Default::default() }.validate().is_err());
    }
}
