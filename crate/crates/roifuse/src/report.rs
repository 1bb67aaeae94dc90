//! Run outputs: `metrics.json`, `cost.json`, `cost.csv`, `per_frame.csv` and
//! `sweep.csv`. All writers are deterministic for a given outcome.

use std::fs;
use std::path::Path;

use roifuse_core::metrics::MetricsReport;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::run::{Mode, RunOutcome, SweepAxis, SweepRow};

/// One line of the comparison table: configuration, accuracy, cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub mode: Mode,
    pub primary: String,
    pub secondary: Option<String>,
    pub roi_size: Option<u32>,
    pub n_frames: usize,
    pub recall: f64,
    pub precision: f64,
    pub mean_n_rois: f64,
    pub mean_gflops: f64,
    pub mean_energy_j: f64,
}

impl SummaryRow {
    pub fn from_outcome(out: &RunOutcome) -> Self {
        let fused = out.mode == Mode::Fusion;
        Self {
            mode: out.mode,
            primary: out.primary.to_string(),
            secondary: fused.then(|| out.secondary.to_string()),
            roi_size: fused.then_some(out.fusion.roi_size),
            n_frames: out.results.len(),
            recall: out.metrics.recall,
            precision: out.metrics.precision,
            mean_n_rois: out.cost.mean_n_rois,
            mean_gflops: out.cost.mean_gflops,
            mean_energy_j: out.cost.mean_energy_j,
        }
    }

    pub fn header() -> &'static str {
        "mode          primary          secondary        roi   frames  recall  precision  rois/frame  GFLOPs/frame  J/frame"
    }

    pub fn line(&self) -> String {
        format!(
            "{:<13} {:<16} {:<16} {:>5} {:>7} {:>7.4} {:>10.4} {:>11.2} {:>13.2} {:>8.4}",
            self.mode.to_string(),
            self.primary,
            self.secondary.as_deref().unwrap_or("-"),
            self.roi_size
                .map_or_else(|| "-".to_string(), |r| r.to_string()),
            self.n_frames,
            self.recall,
            self.precision,
            self.mean_n_rois,
            self.mean_gflops,
            self.mean_energy_j,
        )
    }
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    summary: SummaryRow,
    match_iou: f64,
    nms_iou: f64,
    metrics: &'a MetricsReport,
}

#[derive(Serialize)]
struct CostCsvRow {
    frame_id: u64,
    n_rois: usize,
    gflops: f64,
    energy_j: f64,
}

#[derive(Serialize)]
struct PerFrameCsvRow {
    frame_id: u64,
    recall: Option<f64>,
    true_positives: u64,
    false_positives: u64,
    false_negatives: u64,
    n_rois: usize,
    gflops: f64,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Report(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Report(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn metrics_json(out: &RunOutcome) -> Result<String> {
    json(&MetricsFile {
        summary: SummaryRow::from_outcome(out),
        match_iou: out.metrics.iou_threshold,
        nms_iou: out.fusion.nms_iou,
        metrics: &out.metrics,
    })
}

pub fn cost_csv(out: &RunOutcome) -> Result<String> {
    csv_string(out.cost.per_frame.iter().map(|c| CostCsvRow {
        frame_id: c.frame_id,
        n_rois: c.n_rois,
        gflops: c.gflops,
        energy_j: c.energy_j,
    }))
}

pub fn per_frame_csv(out: &RunOutcome) -> Result<String> {
    csv_string(
        out.metrics
            .per_frame
            .iter()
            .zip(&out.cost.per_frame)
            .map(|(m, c)| PerFrameCsvRow {
                frame_id: m.frame_id,
                recall: m.recall,
                true_positives: m.true_positives,
                false_positives: m.false_positives,
                false_negatives: m.false_negatives,
                n_rois: c.n_rois,
                gflops: c.gflops,
            }),
    )
}

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> Result<String> {
    #[derive(Serialize)]
    struct Row {
        axis: SweepAxis,
        value: u32,
        recall: f64,
        mean_gflops: f64,
        mean_energy_j: f64,
        mean_n_rois: f64,
    }
    csv_string(rows.iter().map(|r| Row {
        axis,
        value: r.value,
        recall: r.recall,
        mean_gflops: r.mean_gflops,
        mean_energy_j: r.mean_energy_j,
        mean_n_rois: r.mean_n_rois,
    }))
}

/// Writes the four run files into `dir`, creating it if needed.
pub fn write_run(dir: &Path, out: &RunOutcome) -> Result<()> {
    ensure_dir(dir)?;
    write_text(&dir.join("metrics.json"), &metrics_json(out)?)?;
    write_text(&dir.join("cost.json"), &json(&out.cost)?)?;
    write_text(&dir.join("cost.csv"), &cost_csv(out)?)?;
    write_text(&dir.join("per_frame.csv"), &per_frame_csv(out)?)
}

pub fn write_sweep(dir: &Path, axis: SweepAxis, rows: &[SweepRow]) -> Result<()> {
    ensure_dir(dir)?;
    write_text(&dir.join("sweep.csv"), &sweep_csv(axis, rows)?)
}
