//! Detector evaluation: IoU matching, all-point interpolated average
//! precision and its class mean (mAP at a given IoU threshold, 0.5 by
//! default).
//!
//! Ground truth and predictions are both sequences of [`Frame`]s; the frame
//! id is the image id. Ground truth confidences are ignored.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::scene::{lit, BoundingBox, Frame, Scalar};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

pub fn iou<T: Scalar>(a: &BoundingBox<T>, b: &BoundingBox<T>) -> T {
    let inter = a.intersection_area(b);
    if inter.is_zero() {
        return T::zero();
    }
    let union = a.area() + b.area() - inter;
    (inter / union).min(T::one())
}

/// One prediction after matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPrediction<T> {
    pub image_id: u64,
    /// Index of the detection within its prediction frame.
    pub index: usize,
    pub confidence: T,
    pub true_positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMatches<T> {
    pub class_id: usize,
    pub n_gt: usize,
    /// Predictions of this class across all images, ranked by confidence
    /// descending; equal confidences keep input order.
    pub ranked: Vec<MatchedPrediction<T>>,
}

impl<T> ClassMatches<T> {
    pub fn flags(&self) -> Vec<bool> {
        self.ranked.iter().map(|p| p.true_positive).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult<T> {
    pub classes: BTreeMap<usize, ClassMatches<T>>,
}

fn by_confidence_desc<T: Scalar>(a: T, b: T) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Greedy per-image, per-class matching. Predictions are visited by
/// confidence; each takes the still-unmatched ground truth box with the
/// highest IoU if that IoU reaches `iou_thr`, otherwise it is a false
/// positive.
pub fn match_detections<T: Scalar>(
    preds: &[Frame<T>],
    gts: &[Frame<T>],
    iou_thr: T,
) -> Result<MatchResult<T>> {
    if !(iou_thr > T::zero() && iou_thr < T::one()) {
        return Err(Error::Config(format!(
            "IoU threshold {iou_thr} outside (0, 1)"
        )));
    }
    let gt_by_id = index_by_id(gts, "ground truth")?;
    let pred_by_id = index_by_id(preds, "prediction")?;
    let gt_ids: BTreeSet<u64> = gt_by_id.keys().copied().collect();
    let pred_ids: BTreeSet<u64> = pred_by_id.keys().copied().collect();
    if gt_ids != pred_ids {
        let only_gt: Vec<_> = gt_ids.difference(&pred_ids).collect();
        let only_pred: Vec<_> = pred_ids.difference(&gt_ids).collect();
        return Err(Error::Dataset(format!(
            "image ids differ: only in ground truth {only_gt:?}, only in predictions {only_pred:?}"
        )));
    }

    let mut classes: BTreeMap<usize, ClassMatches<T>> = BTreeMap::new();
    for gt in gts {
        for d in &gt.detections {
            class_entry(&mut classes, d.class_id).n_gt += 1;
        }
    }

    for pred in preds {
        let gt = gts[gt_by_id[&pred.frame_id]].detections.as_slice();
        let mut order: Vec<usize> = (0..pred.detections.len()).collect();
        order.sort_by(|&a, &b| {
            by_confidence_desc(pred.detections[a].confidence, pred.detections[b].confidence)
        });
        let mut used = vec![false; gt.len()];
        let mut flags = vec![false; pred.detections.len()];
        for i in order {
            let p = &pred.detections[i];
            let mut best: Option<(usize, T)> = None;
            for (j, g) in gt.iter().enumerate() {
                if used[j] || g.class_id != p.class_id {
                    continue;
                }
                let overlap = iou(&p.bbox, &g.bbox);
                if overlap >= iou_thr && best.is_none_or(|(_, b)| overlap > b) {
                    best = Some((j, overlap));
                }
            }
            if let Some((j, _)) = best {
                used[j] = true;
                flags[i] = true;
            }
        }
        for (i, p) in pred.detections.iter().enumerate() {
            class_entry(&mut classes, p.class_id)
                .ranked
                .push(MatchedPrediction {
                    image_id: pred.frame_id,
                    index: i,
                    confidence: p.confidence,
                    true_positive: flags[i],
                });
        }
    }

    for c in classes.values_mut() {
        c.ranked
            .sort_by(|a, b| by_confidence_desc(a.confidence, b.confidence));
    }
    Ok(MatchResult { classes })
}

fn class_entry<T>(
    classes: &mut BTreeMap<usize, ClassMatches<T>>,
    class_id: usize,
) -> &mut ClassMatches<T> {
    classes.entry(class_id).or_insert_with(|| ClassMatches {
        class_id,
        n_gt: 0,
        ranked: Vec::new(),
    })
}

fn index_by_id<T>(frames: &[Frame<T>], what: &str) -> Result<BTreeMap<u64, usize>> {
    let mut out = BTreeMap::new();
    for (i, f) in frames.iter().enumerate() {
        if out.insert(f.frame_id, i).is_some() {
            return Err(Error::Dataset(format!(
                "duplicate {what} image id {}",
                f.frame_id
            )));
        }
    }
    Ok(out)
}

/// All-point interpolated AP of a ranked TP/FP list: the precision envelope
/// (running maximum from the lowest rank up) integrated over recall.
///
/// Returns `None` for a class with neither ground truth nor predictions, and
/// zero for predictions without ground truth.
pub fn average_precision<T: Scalar>(flags: &[bool], n_gt: usize) -> Option<T> {
    if n_gt == 0 {
        return if flags.is_empty() {
            None
        } else {
            Some(T::zero())
        };
    }
    let mut precision = Vec::with_capacity(flags.len());
    let (mut tp, mut seen) = (0usize, 0usize);
    for &hit in flags {
        seen += 1;
        tp += hit as usize;
        precision.push(lit::<T>(tp as f64) / lit::<T>(seen as f64));
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    // recall steps by 1/n_gt exactly at each true positive
    let area = flags
        .iter()
        .zip(&precision)
        .filter(|(&hit, _)| hit)
        .fold(T::zero(), |acc, (_, &p)| acc + p);
    Some(area / lit::<T>(n_gt as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAp<T> {
    pub class_id: usize,
    pub n_gt: usize,
    pub n_pred: usize,
    /// `None` when the class has neither ground truth nor predictions.
    pub ap: Option<T>,
}

/// Unweighted mean over the evaluable classes.
pub fn mean_ap<T: Scalar>(per_class: &[ClassAp<T>]) -> Result<T> {
    let aps: Vec<T> = per_class.iter().filter_map(|c| c.ap).collect();
    if aps.is_empty() {
        return Err(Error::Evaluation(
            "no class has ground truth or predictions".into(),
        ));
    }
    let sum = aps.iter().fold(T::zero(), |acc, &ap| acc + ap);
    Ok(sum / lit::<T>(aps.len() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<T> {
    pub iou_threshold: T,
    pub classes: Vec<ClassAp<T>>,
    pub map: T,
    pub images: usize,
    /// Mean of the `latency_ms` values reported in the prediction file.
    pub mean_latency_ms: Option<f64>,
}

/// Full evaluation: matching, per-class AP and mAP.
pub fn evaluate<T: Scalar>(
    preds: &[Frame<T>],
    gts: &[Frame<T>],
    iou_thr: T,
) -> Result<EvalReport<T>> {
    let matches = match_detections(preds, gts, iou_thr)?;
    let classes: Vec<ClassAp<T>> = matches
        .classes
        .values()
        .map(|c| ClassAp {
            class_id: c.class_id,
            n_gt: c.n_gt,
            n_pred: c.ranked.len(),
            ap: average_precision(&c.flags(), c.n_gt),
        })
        .collect();
    let map = mean_ap(&classes)?;
    let latencies: Vec<f64> = preds.iter().filter_map(|p| p.latency_ms).collect();
    let mean_latency_ms = if latencies.is_empty() {
        None
    } else {
        Some(latencies.iter().sum::<f64>() / latencies.len() as f64)
    };
    Ok(EvalReport {
        iou_threshold: iou_thr,
        classes,
        map,
        images: gts.len(),
        mean_latency_ms,
    })
}
