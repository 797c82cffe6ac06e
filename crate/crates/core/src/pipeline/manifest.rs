use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Liner segment position: `3h` is the unworn reference, `6h` the worn one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    #[serde(rename = "3h")]
    ThreeOClock,
    #[serde(rename = "6h")]
    SixOClock,
}

impl Segment {
    pub fn tag(self) -> &'static str {
        match self {
            Segment::ThreeOClock => "3h",
            Segment::SixOClock => "6h",
        }
    }
}

/// One measurement area. Paths are relative to the manifest file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub liner_id: String,
    pub segment: Segment,
    pub operating_hours: f64,
    pub rgb_path: String,
    pub depth_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blc_path: Option<String>,
}

/// A loaded manifest: the records and the directory their paths resolve in.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        validate_records(&records)?;
        Ok(Self { records, base_dir: base_dir.into() })
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records whose id is in `ids`, in manifest order.
    pub fn subset(&self, ids: &HashSet<&str>) -> Manifest {
        Manifest {
            records: self.records.iter().filter(|r| ids.contains(r.id.as_str())).cloned().collect(),
            base_dir: self.base_dir.clone(),
        }
    }

    /// Distinct liner ids in order of first appearance.
    pub fn liners(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.records.iter().map(|r| r.liner_id.as_str()).filter(|l| seen.insert(*l)).collect()
    }
}

pub fn validate_records(records: &[ManifestRecord]) -> Result<()> {
    let mut ids = HashSet::new();
    for r in records {
        if !ids.insert(r.id.as_str()) {
            return Err(Error::invalid(format!("duplicate record id {}", r.id)));
        }
        if !(r.operating_hours >= 0.0 && r.operating_hours.is_finite()) {
            return Err(Error::invalid(format!("record {}: operating hours must be >= 0", r.id)));
        }
    }
    Ok(())
}

pub fn save_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(records)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::from(e).context(path.display()))?;
    Ok(())
}

/// Parse and check a manifest; every referenced file must exist.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display()))?;
    let records: Vec<ManifestRecord> =
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest = Manifest::new(records, base)?;
    for r in &manifest.records {
        let files = [Some(&r.rgb_path), Some(&r.depth_path), r.blc_path.as_ref()];
        for rel in files.into_iter().flatten() {
            if !manifest.resolve(rel).is_file() {
                return Err(Error::invalid(format!("record {}: missing file {rel}", r.id)));
            }
        }
    }
    Ok(manifest)
}
