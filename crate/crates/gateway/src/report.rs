//! Input loading and rendering for the `eval` command.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use tactile_core::evaluator::EvalReport;
use tactile_core::ingestion::read_frames;
use tactile_core::{ClassVocabulary, Frame};

/// Reads a ground-truth or prediction file. Detections of classes outside
/// `vocab` are an error here, since they would silently change the metric.
pub fn load_eval_frames(path: &Path, vocab: &ClassVocabulary) -> Result<Vec<Frame>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (frames, unknown) = read_frames(BufReader::new(file), vocab)
        .with_context(|| format!("reading {}", path.display()))?;
    anyhow::ensure!(
        unknown == 0,
        "{}: {unknown} detections use classes outside the vocabulary",
        path.display()
    );
    Ok(frames)
}

/// Single-group vocabulary of every class named in `paths`, in sorted
/// order.
pub fn vocabulary_from_files(paths: &[&Path]) -> Result<ClassVocabulary> {
    let mut names = BTreeSet::new();
    for path in paths {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Value = serde_json::from_str(line)
                .with_context(|| format!("{} line {}", path.display(), i + 1))?;
            for det in record["detections"].as_array().into_iter().flatten() {
                if let Some(class) = det["class"].as_str() {
                    names.insert(class.to_owned());
                }
            }
        }
    }
    anyhow::ensure!(!names.is_empty(), "no detections in the evaluation files");
    Ok(ClassVocabulary::from_groups([("all", names)])?)
}

pub fn render_table(report: &EvalReport<f64>, vocab: &ClassVocabulary) -> String {
    let width = report
        .classes
        .iter()
        .filter_map(|c| vocab.name(c.class_id))
        .map(str::len)
        .chain([5])
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    writeln!(
        out,
        "{:<width$}  {:>6}  {:>6}  {:>8}",
        "class", "gt", "pred", "AP"
    )
    .unwrap();
    for c in &report.classes {
        let name = vocab.name(c.class_id).unwrap_or("?");
        let ap = c.ap.map_or_else(|| "-".to_owned(), |ap| format!("{ap:.4}"));
        writeln!(
            out,
            "{name:<width$}  {:>6}  {:>6}  {ap:>8}",
            c.n_gt, c.n_pred
        )
        .unwrap();
    }
    writeln!(
        out,
        "mAP@{:.2} = {:.4} over {} images",
        report.iou_threshold, report.map, report.images
    )
    .unwrap();
    if let Some(ms) = report.mean_latency_ms {
        writeln!(out, "mean latency = {ms:.2} ms").unwrap();
    }
    out
}

pub fn render_json(report: &EvalReport<f64>, vocab: &ClassVocabulary) -> String {
    let classes: Vec<Value> = report
        .classes
        .iter()
        .map(|c| {
            json!({
                "class": vocab.name(c.class_id),
                "n_gt": c.n_gt,
                "n_pred": c.n_pred,
                "ap": c.ap,
            })
        })
        .collect();
    json!({
        "iou_threshold": report.iou_threshold,
        "images": report.images,
        "map": report.map,
        "mean_latency_ms": report.mean_latency_ms,
        "classes": classes,
    })
    .to_string()
}
