//! Evaluation metrics, reports, CSV tables and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ManifestRecord;
use crate::error::{Error, Result};
use crate::param_stage::ParamTriple;
use crate::surface::{blc_area_quartiles, wasserstein1, Blc};

/// ml/m² to µl/m².
pub const VOLUME_REPORT_SCALE: f64 = 1000.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }

    /// `mean ± std` with a fixed number of decimals.
    pub fn display(&self, decimals: usize) -> String {
        format!("{:.*} ± {:.*}", decimals, self.mean, decimals, self.std)
    }
}

/// Five-number summary for box glyphs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return Self::default();
        }
        Self {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub id: String,
    pub liner_id: String,
    pub operating_hours: f64,
    pub w1: f64,
    pub truth: ParamTriple,
    pub predicted: ParamTriple,
    /// Heights at material ratios 0.25, 0.5, 0.75.
    pub truth_quartiles: [f64; 3],
    pub predicted_quartiles: [f64; 3],
}

impl SampleRow {
    pub fn sk_error(&self) -> f64 {
        (self.predicted.sk - self.truth.sk).abs()
    }

    /// Absolute percentage error of Sk; `None` when the true Sk is zero.
    pub fn sk_ape(&self) -> Option<f64> {
        (self.truth.sk > 0.0).then(|| 100.0 * self.sk_error() / self.truth.sk)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub w1: Stat,
    /// µm.
    pub sk_mae: Stat,
    /// Percent, over samples with positive true Sk.
    pub sk_mape: Stat,
    /// µl/m².
    pub vvv_mae: Stat,
    /// µl/m².
    pub vmp_mae: Stat,
}

impl Summary {
    pub fn of(rows: &[SampleRow]) -> Self {
        let col = |f: &dyn Fn(&SampleRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
        let apes: Vec<f64> = rows.iter().filter_map(SampleRow::sk_ape).collect();
        Self {
            n: rows.len(),
            w1: Stat::of(&col(&|r| r.w1)),
            sk_mae: Stat::of(&col(&|r| r.sk_error())),
            sk_mape: Stat::of(&apes),
            vvv_mae: Stat::of(&col(&|r| VOLUME_REPORT_SCALE * (r.predicted.vvv - r.truth.vvv).abs())),
            vmp_mae: Stat::of(&col(&|r| VOLUME_REPORT_SCALE * (r.predicted.vmp - r.truth.vmp).abs())),
        }
    }
}

/// W1 and signed Sk difference for one operating-hours quartile bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoursBin {
    pub bin: usize,
    pub hours_lo: f64,
    pub hours_hi: f64,
    pub n: usize,
    pub w1: BoxStats,
    /// Predicted minus true Sk.
    pub sk_diff: BoxStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Sorted by record id.
    pub rows: Vec<SampleRow>,
    pub summary: Summary,
    pub hours_bins: Vec<HoursBin>,
}

/// Quartile bins of the hour distribution; a sample falls into the first bin
/// whose upper edge is at or above its hours.
pub fn hours_bins(rows: &[SampleRow]) -> Vec<HoursBin> {
    if rows.is_empty() {
        return Vec::new();
    }
    let mut hours: Vec<f64> = rows.iter().map(|r| r.operating_hours).collect();
    hours.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (0..=4).map(|q| quantile_sorted(&hours, q as f64 / 4.0)).collect();
    let mut members: Vec<Vec<&SampleRow>> = vec![Vec::new(); 4];
    for r in rows {
        let b = (0..4).find(|&b| r.operating_hours <= edges[b + 1]).unwrap_or(3);
        members[b].push(r);
    }
    members
        .iter()
        .enumerate()
        .map(|(b, m)| HoursBin {
            bin: b,
            hours_lo: edges[b],
            hours_hi: edges[b + 1],
            n: m.len(),
            w1: BoxStats::of(&m.iter().map(|r| r.w1).collect::<Vec<_>>()),
            sk_diff: BoxStats::of(&m.iter().map(|r| r.predicted.sk - r.truth.sk).collect::<Vec<_>>()),
        })
        .collect()
}

pub fn sample_row(record: &ManifestRecord, truth: &Blc, predicted: &Blc) -> Result<SampleRow> {
    let q = |b: &Blc| blc_area_quartiles(b).map(|(a, m, c)| [a, m, c]);
    Ok(SampleRow {
        id: record.id.clone(),
        liner_id: record.liner_id.clone(),
        operating_hours: record.operating_hours,
        w1: wasserstein1(predicted, truth)?,
        truth: ParamTriple::from_blc(truth)?,
        predicted: ParamTriple::from_blc(predicted)?,
        truth_quartiles: q(truth)?,
        predicted_quartiles: q(predicted)?,
    })
}

/// Build a report from matching records, true curves and predicted curves.
pub fn evaluate_curves(records: &[&ManifestRecord], truth: &[Blc], predicted: &[Blc]) -> Result<EvalReport> {
    if records.len() != truth.len() || records.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} records, {} true curves and {} predictions do not match",
            records.len(),
            truth.len(),
            predicted.len()
        )));
    }
    if records.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    let mut rows = records
        .iter()
        .zip(truth)
        .zip(predicted)
        .map(|((r, t), p)| sample_row(r, t, p).map_err(|e| e.context(&r.id)))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    let summary = Summary::of(&rows);
    let hours_bins = hours_bins(&rows);
    Ok(EvalReport { rows, summary, hours_bins })
}

/// Pointwise mean of equally long curves.
pub fn mean_blc(curves: &[Blc]) -> Result<Blc> {
    let first = curves.first().ok_or_else(|| Error::invalid("mean of no curves"))?;
    let k = first.k();
    let mut acc = vec![0.0; k];
    for c in curves {
        if c.k() != k {
            return Err(Error::invalid(format!("curve of K={} among K={k}", c.k())));
        }
        for (a, v) in acc.iter_mut().zip(c.values()) {
            *a += v;
        }
    }
    let n = curves.len() as f64;
    Blc::new(acc.into_iter().map(|a| a / n).collect())
}

pub const REPORT_HEADER: [&str; 5] = ["Run", "W1 ± std", "Sk MAE (MAPE) ± std", "Vvv MAE ± std", "Vmp MAE ± std"];

/// One row in the layout of the cross-validation table.
pub fn report_cells(run: &str, s: &Summary) -> [String; 5] {
    [
        run.to_string(),
        s.w1.display(3),
        format!("{:.3} ({:.1}%) ± {:.3} µm", s.sk_mae.mean, s.sk_mape.mean, s.sk_mae.std),
        format!("{:.1} ± {:.1} µl/m²", s.vvv_mae.mean, s.vvv_mae.std),
        format!("{:.2} ± {:.2} µl/m²", s.vmp_mae.mean, s.vmp_mae.std),
    ]
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_line<S: AsRef<str>>(cells: &[S]) -> String {
    let mut line = cells.iter().map(|c| csv_field(c.as_ref())).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

/// Table rows, one per `(run label, summary)`.
pub fn report_csv(runs: &[(String, Summary)]) -> String {
    let mut out = csv_line(&REPORT_HEADER);
    for (label, s) in runs {
        out += &csv_line(&report_cells(label, s));
    }
    out
}

pub const SAMPLES_HEADER: [&str; 12] = [
    "id",
    "liner_id",
    "operating_hours",
    "w1",
    "sk_true",
    "sk_pred",
    "sk_abs_err",
    "sk_ape_percent",
    "vvv_true",
    "vvv_pred",
    "vmp_true",
    "vmp_pred",
];

impl EvalReport {
    pub fn samples_csv(&self) -> String {
        let mut out = csv_line(&SAMPLES_HEADER);
        for r in &self.rows {
            out += &csv_line(&[
                r.id.clone(),
                r.liner_id.clone(),
                format!("{}", r.operating_hours),
                format!("{:.9}", r.w1),
                format!("{:.9}", r.truth.sk),
                format!("{:.9}", r.predicted.sk),
                format!("{:.9}", r.sk_error()),
                r.sk_ape().map_or(String::new(), |a| format!("{a:.6}")),
                format!("{:.9}", r.truth.vvv),
                format!("{:.9}", r.predicted.vvv),
                format!("{:.9}", r.truth.vmp),
                format!("{:.9}", r.predicted.vmp),
            ]);
        }
        out
    }

    pub fn quartiles_csv(&self) -> String {
        let mut out = csv_line(&["id", "quartile", "truth", "predicted"]);
        for r in &self.rows {
            for (q, name) in ["0.25", "0.50", "0.75"].iter().enumerate() {
                out += &csv_line(&[
                    r.id.clone(),
                    name.to_string(),
                    format!("{:.9}", r.truth_quartiles[q]),
                    format!("{:.9}", r.predicted_quartiles[q]),
                ]);
            }
        }
        out
    }

    pub fn hours_bins_csv(&self) -> String {
        let mut out = csv_line(&[
            "bin", "hours_lo", "hours_hi", "n", "w1_min", "w1_q1", "w1_median", "w1_q3", "w1_max", "sk_diff_min",
            "sk_diff_q1", "sk_diff_median", "sk_diff_q3", "sk_diff_max",
        ]);
        for b in &self.hours_bins {
            let mut cells = vec![b.bin.to_string(), format!("{}", b.hours_lo), format!("{}", b.hours_hi), b.n.to_string()];
            for s in [&b.w1, &b.sk_diff] {
                cells.extend([s.min, s.q1, s.median, s.q3, s.max].map(|v| format!("{v:.9}")));
            }
            out += &csv_line(&cells);
        }
        out
    }

    /// Write the CSV tables, the JSON report and both SVG plots into `dir`.
    pub fn write(&self, dir: &Path, run_label: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::from(e).context(dir.display()))?;
        let files: [(&str, String); 7] = [
            ("samples.csv", self.samples_csv()),
            ("report.csv", report_csv(&[(run_label.to_string(), self.summary.clone())])),
            ("quartiles.csv", self.quartiles_csv()),
            ("hours_bins.csv", self.hours_bins_csv()),
            ("report.json", serde_json::to_string_pretty(self)? + "\n"),
            ("quartile_scatter.svg", quartile_scatter_svg(self)),
            ("hours_boxplot.svg", hours_boxplot_svg(self)),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::from(e).context(path.display()))?;
        }
        Ok(())
    }
}

const SVG_SIZE: f64 = 400.0;
const SVG_MARGIN: f64 = 40.0;
const QUARTILE_COLORS: [&str; 3] = ["#1f77b4", "#ff7f0e", "#2ca02c"];

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#,
        s = SVG_SIZE
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" font-size="13" text-anchor="middle">{title}</text>"#, SVG_SIZE / 2.0);
    let inner = SVG_SIZE - 2.0 * SVG_MARGIN;
    let _ = writeln!(
        out,
        r#"<rect x="{m}" y="{m}" width="{inner}" height="{inner}" fill="none" stroke="black"/>"#,
        m = SVG_MARGIN
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Predicted against true BLC heights at the three area quartiles, with
/// the identity line.
pub fn quartile_scatter_svg(report: &EvalReport) -> String {
    let (lo, hi) = range(report.rows.iter().flat_map(|r| r.truth_quartiles.into_iter().chain(r.predicted_quartiles)));
    let inner = SVG_SIZE - 2.0 * SVG_MARGIN;
    let x = |v: f64| SVG_MARGIN + (v - lo) / (hi - lo) * inner;
    let y = |v: f64| SVG_SIZE - SVG_MARGIN - (v - lo) / (hi - lo) * inner;
    let mut out = String::new();
    svg_open(&mut out, "BLC quartiles: predicted vs truth");
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        x(lo),
        y(lo),
        x(hi),
        y(hi)
    );
    for r in &report.rows {
        for q in 0..3 {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                x(r.truth_quartiles[q]),
                y(r.predicted_quartiles[q]),
                QUARTILE_COLORS[q]
            );
        }
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">truth (µm)</text>"#, SVG_SIZE / 2.0, SVG_SIZE - 10.0);
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" font-size="11" text-anchor="middle" transform="rotate(-90 12 {})">predicted (µm)</text>"#,
        SVG_SIZE / 2.0,
        SVG_SIZE / 2.0
    );
    out.push_str("</svg>\n");
    out
}

/// W1 box glyphs per operating-hours quartile bin.
pub fn hours_boxplot_svg(report: &EvalReport) -> String {
    let bins = &report.hours_bins;
    let (lo, hi) = range(bins.iter().filter(|b| b.n > 0).flat_map(|b| [b.w1.min, b.w1.max]));
    let inner = SVG_SIZE - 2.0 * SVG_MARGIN;
    let y = |v: f64| SVG_SIZE - SVG_MARGIN - (v - lo) / (hi - lo) * inner;
    let slot = inner / bins.len().max(1) as f64;
    let mut out = String::new();
    svg_open(&mut out, "W1 by operating-hours quartile");
    for (i, b) in bins.iter().enumerate() {
        let cx = SVG_MARGIN + slot * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{}" font-size="10" text-anchor="middle">{:.0}-{:.0} h</text>"#,
            SVG_SIZE - SVG_MARGIN + 14.0,
            b.hours_lo,
            b.hours_hi
        );
        if b.n == 0 {
            continue;
        }
        let w = slot * 0.5;
        let s = &b.w1;
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            y(s.min),
            y(s.max)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
            cx - w / 2.0,
            y(s.q3),
            (y(s.q1) - y(s.q3)).max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
            cx - w / 2.0,
            y(s.median),
            cx + w / 2.0,
            y(s.median)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" font-size="11" text-anchor="middle" transform="rotate(-90 12 {})">W1 (µm)</text>"#,
        SVG_SIZE / 2.0,
        SVG_SIZE / 2.0
    );
    out.push_str("</svg>\n");
    out
}
