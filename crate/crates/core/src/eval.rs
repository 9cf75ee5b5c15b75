//! One-pass evaluation: overlap and centre-error metrics, precision/success
//! curves, per-attribute aggregation and ablation tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Frame;
use crate::geometry::BoundingBox;
use crate::tracker::{run_sequence, TrackerConfig};

/// Centre-error thresholds in pixels.
pub const PRECISION_THRESHOLDS: usize = 51;
/// Overlap thresholds 0, 0.02, …, 1.
pub const SUCCESS_THRESHOLDS: usize = 51;
pub const HEADLINE_PX: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceAnnotation {
    pub name: String,
    pub frame_paths: Vec<PathBuf>,
    /// `None` marks frames without a valid annotation.
    pub gt_boxes: Vec<Option<BoundingBox>>,
    pub attributes: BTreeSet<String>,
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    // (x + w) - x is not always w in floating point.
    if a == b {
        return 1.0;
    }
    let x0 = a.x.max(b.x);
    let y0 = a.y.max(b.y);
    let x1 = (a.x + a.w).min(b.x + b.w);
    let y1 = (a.y + a.h).min(b.y + b.h);
    let inter = (x1 - x0).max(0.0) * (y1 - y0).max(0.0);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn center_error(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Fraction of frames whose centre error is at most `t`, for t = 0..=50 px.
pub fn precision_curve(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = errors.len() as f64;
    Ok((0..PRECISION_THRESHOLDS)
        .map(|t| errors.iter().filter(|e| **e <= t as f64).count() as f64 / n)
        .collect())
}

pub fn success_threshold(k: usize) -> f64 {
    k as f64 / (SUCCESS_THRESHOLDS - 1) as f64
}

/// Fraction of frames whose overlap exceeds `t`, for t = 0, 0.02, …, 1. A
/// perfect overlap counts at every threshold, including 1.
pub fn success_curve(ious: &[f64]) -> Result<Vec<f64>> {
    if ious.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = ious.len() as f64;
    Ok((0..SUCCESS_THRESHOLDS)
        .map(|k| {
            let t = success_threshold(k);
            ious.iter().filter(|v| **v > t || **v >= 1.0).count() as f64 / n
        })
        .collect())
}

/// Mean of the curve samples.
pub fn auc(curve: &[f64]) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(curve.iter().sum::<f64>() / curve.len() as f64)
}

/// Mean overlap.
pub fn mean_iou(ious: &[f64]) -> Result<f64> {
    if ious.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(ious.iter().sum::<f64>() / ious.len() as f64)
}

/// Mean of `IoU / (gt area / frame area)`, each term clamped to [0,1].
pub fn normalized_precision(ious: &[f64], gt_boxes: &[BoundingBox], frame_area: f64) -> Result<f64> {
    if ious.is_empty() {
        return Err(Error::EmptyInput);
    }
    if ious.len() != gt_boxes.len() {
        return Err(Error::FrameCountMismatch { frames: ious.len(), boxes: gt_boxes.len() });
    }
    if !(frame_area > 0.0) {
        return Err(Error::InvalidConfig("frame area must be positive".into()));
    }
    let total: f64 = ious
        .iter()
        .zip(gt_boxes)
        .map(|(v, g)| {
            let ratio = g.area() / frame_area;
            if ratio > 0.0 {
                (v / ratio).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / ious.len() as f64)
}

/// Tracker output for one sequence, aligned with its annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceResult {
    pub name: String,
    pub attributes: BTreeSet<String>,
    pub predicted: Vec<BoundingBox>,
    pub gt_boxes: Vec<Option<BoundingBox>>,
    /// (width, height) in pixels.
    pub frame_size: (usize, usize),
    pub elapsed: Duration,
    /// False if any solver call stopped on its iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub name: String,
    pub attributes: Vec<String>,
    pub frames: usize,
    pub scored_frames: usize,
    pub precision_curve: Vec<f64>,
    pub success_curve: Vec<f64>,
    pub precision_at_20: f64,
    pub success_auc: f64,
    pub normalized_precision: f64,
    pub mean_iou: f64,
    pub fps: f64,
    pub converged: bool,
}

impl SequenceReport {
    pub fn from_result(r: &SequenceResult) -> Result<Self> {
        if r.predicted.len() != r.gt_boxes.len() {
            return Err(Error::FrameCountMismatch { frames: r.predicted.len(), boxes: r.gt_boxes.len() });
        }
        let mut ious = Vec::new();
        let mut errors = Vec::new();
        let mut gts = Vec::new();
        for (p, g) in r.predicted.iter().zip(&r.gt_boxes) {
            if let Some(g) = g {
                ious.push(iou(p, g));
                errors.push(center_error(p, g));
                gts.push(*g);
            }
        }
        let precision = precision_curve(&errors)?;
        let success = success_curve(&ious)?;
        let frame_area = (r.frame_size.0 * r.frame_size.1) as f64;
        let secs = r.elapsed.as_secs_f64();
        Ok(Self {
            name: r.name.clone(),
            attributes: r.attributes.iter().cloned().collect(),
            frames: r.predicted.len(),
            scored_frames: ious.len(),
            precision_at_20: precision[HEADLINE_PX],
            success_auc: auc(&success)?,
            normalized_precision: normalized_precision(&ious, &gts, frame_area)?,
            mean_iou: mean_iou(&ious)?,
            precision_curve: precision,
            success_curve: success,
            fps: if secs > 0.0 { r.predicted.len() as f64 / secs } else { 0.0 },
            converged: r.converged,
        })
    }
}

/// Metrics averaged over a group of sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sequences: usize,
    pub precision_curve: Vec<f64>,
    pub success_curve: Vec<f64>,
    pub precision_at_20: f64,
    pub success_auc: f64,
    pub normalized_precision: f64,
    pub mean_iou: f64,
}

impl Summary {
    fn over(reports: &[&SequenceReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let mean_curve = |get: fn(&SequenceReport) -> &Vec<f64>| -> Vec<f64> {
            let len = get(reports[0]).len();
            (0..len).map(|k| reports.iter().map(|r| get(r)[k]).sum::<f64>() / n).collect()
        };
        let mean = |get: fn(&SequenceReport) -> f64| reports.iter().map(|r| get(r)).sum::<f64>() / n;
        Some(Self {
            sequences: reports.len(),
            precision_curve: mean_curve(|r| &r.precision_curve),
            success_curve: mean_curve(|r| &r.success_curve),
            precision_at_20: mean(|r| r.precision_at_20),
            success_auc: mean(|r| r.success_auc),
            normalized_precision: mean(|r| r.normalized_precision),
            mean_iou: mean(|r| r.mean_iou),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRow {
    pub attribute: String,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub overall: Summary,
    pub attributes: Vec<AttributeRow>,
    pub sequences: Vec<SequenceReport>,
    /// Frames per second over the whole run.
    pub fps: f64,
    /// Sequences that could not be read or tracked.
    pub skipped: Vec<String>,
    pub converged: bool,
}

impl EvalReport {
    /// Aggregates per-sequence results; the output does not depend on the
    /// order of `results`.
    pub fn from_results(label: &str, results: &[SequenceResult], skipped: Vec<String>) -> Result<Self> {
        let mut sequences = results.iter().map(SequenceReport::from_result).collect::<Result<Vec<_>>>()?;
        sequences.sort_by(|a, b| a.name.cmp(&b.name));
        let refs: Vec<&SequenceReport> = sequences.iter().collect();
        let overall = Summary::over(&refs).ok_or(Error::EmptyInput)?;
        let names: BTreeSet<&String> = sequences.iter().flat_map(|s| &s.attributes).collect();
        let attributes = names
            .into_iter()
            .filter_map(|a| {
                let group: Vec<&SequenceReport> = sequences.iter().filter(|s| s.attributes.contains(a)).collect();
                Summary::over(&group).map(|summary| AttributeRow { attribute: a.clone(), summary })
            })
            .collect();
        let mut ordered: Vec<&SequenceResult> = results.iter().collect();
        ordered.sort_by(|a, b| a.name.cmp(&b.name));
        let frames: usize = ordered.iter().map(|r| r.predicted.len()).sum();
        let secs: f64 = ordered.iter().map(|r| r.elapsed.as_secs_f64()).sum();
        let mut skipped = skipped;
        skipped.sort();
        Ok(Self {
            label: label.to_string(),
            overall,
            attributes,
            converged: sequences.iter().all(|s| s.converged),
            sequences,
            fps: if secs > 0.0 { frames as f64 / secs } else { 0.0 },
            skipped,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned-column summary: one overall row followed by per-attribute rows.
    pub fn to_table(&self) -> String {
        let mut rows = vec![(self.label.clone(), self.overall.clone(), Some(self.fps))];
        for a in &self.attributes {
            rows.push((format!("  [{}]", a.attribute), a.summary.clone(), None));
        }
        render_table(&rows)
    }
}

fn render_table(rows: &[(String, Summary, Option<f64>)]) -> String {
    let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0).max("Tracker".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>7}  {:>7}  {:>8}  {:>7}", "Tracker", "Precision", "Success", "NP", "MeanIoU", "FPS");
    for (name, s, fps) in rows {
        let fps = fps.map_or("-".to_string(), |f| format!("{f:.1}"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.1}  {:>7.1}  {:>7.1}  {:>8.1}  {:>7}",
            name,
            100.0 * s.precision_at_20,
            100.0 * s.success_auc,
            100.0 * s.normalized_precision,
            100.0 * s.mean_iou,
            fps
        );
    }
    out
}

/// The five ablation rows derived from `base`: plain ridge filter, each
/// component alone, and everything on.
pub fn ablation_configs(base: &TrackerConfig) -> Vec<(String, TrackerConfig)> {
    let with = |astf, epsr, gesr| TrackerConfig { use_astf: astf, use_epsr: epsr, use_gesr: gesr, ..base.clone() };
    vec![
        ("KCF".to_string(), with(false, false, false)),
        ("KCF-ASTF".to_string(), with(true, false, false)),
        ("KCF-EPSR".to_string(), with(false, true, false)),
        ("KCF-GESR".to_string(), with(false, false, true)),
        ("full".to_string(), with(true, true, true)),
    ]
}

/// One row per configuration, in the given order.
pub fn ablation_table(reports: &[EvalReport]) -> String {
    let rows: Vec<_> = reports.iter().map(|r| (r.label.clone(), r.overall.clone(), Some(r.fps))).collect();
    render_table(&rows)
}

/// Tracks one sequence from its first annotated box.
pub fn track_sequence(
    annotation: &SequenceAnnotation,
    frames: &[Frame],
    cfg: &TrackerConfig,
) -> Result<SequenceResult> {
    if frames.len() != annotation.gt_boxes.len() {
        return Err(Error::FrameCountMismatch { frames: frames.len(), boxes: annotation.gt_boxes.len() });
    }
    let first = frames.first().ok_or(Error::EmptyInput)?;
    let init = annotation.gt_boxes[0].ok_or_else(|| Error::SequenceRead {
        name: annotation.name.clone(),
        reason: "first frame has no valid ground truth".into(),
    })?;
    let start = Instant::now();
    let results = run_sequence(frames, &init, cfg)?;
    Ok(SequenceResult {
        name: annotation.name.clone(),
        attributes: annotation.attributes.clone(),
        converged: results.iter().all(|r| r.converged),
        predicted: results.into_iter().map(|r| r.bbox).collect(),
        gt_boxes: annotation.gt_boxes.clone(),
        frame_size: (first.width(), first.height()),
        elapsed: start.elapsed(),
    })
}

/// One-pass evaluation over a dataset. Sequences whose frames cannot be
/// loaded or tracked are skipped and listed in the report.
pub fn run_ope_with(
    label: &str,
    dataset: &[SequenceAnnotation],
    cfg: &TrackerConfig,
    load: impl Fn(&SequenceAnnotation) -> Result<Vec<Frame>> + Sync,
) -> Result<EvalReport> {
    cfg.validate()?;
    let outcomes: Vec<_> =
        dataset.par_iter().map(|seq| (seq, load(seq).and_then(|frames| track_sequence(seq, &frames, cfg)))).collect();
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for (seq, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => {
                log::warn!("skipping sequence {}: {e}", seq.name);
                skipped.push(seq.name.clone());
            }
        }
    }
    EvalReport::from_results(label, &results, skipped)
}

/// [`run_ope_with`] reading frames from the annotation's image paths.
pub fn run_ope(dataset: &[SequenceAnnotation], cfg: &TrackerConfig) -> Result<EvalReport> {
    run_ope_with("tracker", dataset, cfg, |seq| crate::io::load_frames(&seq.frame_paths))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bx(5.0, 5.0, 1.0, 1.0)), 0.0);
        assert!((iou(&a, &bx(1.0, 0.0, 2.0, 2.0)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn center_error_examples() {
        let a = bx(0.0, 0.0, 4.0, 4.0);
        assert_eq!(center_error(&a, &a), 0.0);
        let b = bx(3.0, 4.0, 4.0, 4.0);
        assert_eq!(center_error(&a, &b), 5.0);
        assert_eq!(center_error(&b, &a), 5.0);
    }

    #[test]
    fn perfect_tracking_curves() {
        let p = precision_curve(&[0.0; 7]).unwrap();
        assert!(p.iter().all(|v| *v == 1.0));
        let s = success_curve(&[1.0; 7]).unwrap();
        assert_eq!(auc(&s).unwrap(), 1.0);
        assert_eq!(mean_iou(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn zero_overlap_curves() {
        let s = success_curve(&[0.0; 4]).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));
        assert_eq!(mean_iou(&[0.0; 4]).unwrap(), 0.0);
        let g = vec![bx(0.0, 0.0, 2.0, 2.0); 4];
        assert_eq!(normalized_precision(&[0.0; 4], &g, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn five_frame_hand_computed_curves() {
        // Centre errors 0, 5, 12, 20, 35 px and overlaps 1, 0.8, 0.5, 0.3, 0.
        let errors = [0.0, 5.0, 12.0, 20.0, 35.0];
        let p = precision_curve(&errors).unwrap();
        assert_eq!(p[0], 0.2);
        assert_eq!(p[4], 0.2);
        assert_eq!(p[5], 0.4);
        assert_eq!(p[11], 0.4);
        assert_eq!(p[12], 0.6);
        assert_eq!(p[19], 0.6);
        assert_eq!(p[20], 0.8);
        assert_eq!(p[34], 0.8);
        assert_eq!(p[35], 1.0);
        assert_eq!(p[50], 1.0);

        let ious = [1.0, 0.8, 0.5, 0.3, 0.0];
        let s = success_curve(&ious).unwrap();
        // t = 0: four overlaps exceed 0.
        assert_eq!(s[0], 0.8);
        // t = 0.3 (k = 15): 1, 0.8, 0.5.
        assert_eq!(s[15], 0.6);
        // t = 0.5 (k = 25): 1, 0.8.
        assert_eq!(s[25], 0.4);
        // t = 0.8 (k = 40): only the perfect frame.
        assert_eq!(s[40], 0.2);
        assert_eq!(s[50], 0.2);
        // Hand sum: k=0..14 → 0.8 (15), 15..24 → 0.6 (10), 25..39 → 0.4 (15),
        // 40..50 → 0.2 (11).
        let expect = (15.0 * 0.8 + 10.0 * 0.6 + 15.0 * 0.4 + 11.0 * 0.2) / 51.0;
        assert!((auc(&s).unwrap() - expect).abs() < 1e-15);
        assert_eq!(mean_iou(&[0.4, 0.6]).unwrap(), 0.5);
    }

    #[test]
    fn normalized_precision_clamps() {
        let g = vec![bx(0.0, 0.0, 10.0, 10.0); 2];
        // Area ratio 0.5: IoU 0.25 → 0.5, IoU 0.8 → clamped 1.
        let np = normalized_precision(&[0.25, 0.8], &g, 200.0).unwrap();
        assert!((np - 0.75).abs() < 1e-15);
        assert!(matches!(normalized_precision(&[], &[], 1.0), Err(Error::EmptyInput)));
    }

    fn seq_result(name: &str, attrs: &[&str], pred: Vec<BoundingBox>, gt: Vec<BoundingBox>) -> SequenceResult {
        SequenceResult {
            name: name.into(),
            attributes: attrs.iter().map(|s| s.to_string()).collect(),
            predicted: pred,
            gt_boxes: gt.into_iter().map(Some).collect(),
            frame_size: (100, 100),
            elapsed: Duration::from_millis(10),
            converged: true,
        }
    }

    #[test]
    fn oracle_report_is_perfect() {
        let gt: Vec<_> = (0..10).map(|k| bx(k as f64, 2.0, 10.0, 8.0)).collect();
        let r = EvalReport::from_results("oracle", &[seq_result("a", &[], gt.clone(), gt)], vec![]).unwrap();
        assert_eq!(r.overall.precision_at_20, 1.0);
        assert_eq!(r.overall.success_auc, 1.0);
        assert_eq!(r.overall.mean_iou, 1.0);
    }

    #[test]
    fn two_sequence_aggregation_matches_hand_means() {
        let gt = vec![bx(0.0, 0.0, 10.0, 10.0); 2];
        let a = seq_result("a", &["occlusion"], gt.clone(), gt.clone());
        let off = vec![bx(5.0, 0.0, 10.0, 10.0), bx(30.0, 0.0, 10.0, 10.0)];
        let b = seq_result("b", &["occlusion", "low_resolution"], off, gt);
        let r = EvalReport::from_results("toy", &[a.clone(), b.clone()], vec![]).unwrap();
        // Sequence b: overlaps 1/3 and 0; errors 5 and 30.
        let pb = 0.5;
        assert_eq!(r.sequences[1].precision_at_20, pb);
        assert!((r.overall.precision_at_20 - (1.0 + pb) / 2.0).abs() < 1e-15);
        assert!((r.overall.mean_iou - (1.0 + 1.0 / 6.0) / 2.0).abs() < 1e-15);
        assert_eq!(r.attributes.len(), 2);
        let low = r.attributes.iter().find(|a| a.attribute == "low_resolution").unwrap();
        assert_eq!(low.summary.sequences, 1);
        assert_eq!(low.summary.precision_at_20, pb);
        let swapped = EvalReport::from_results("toy", &[b, a], vec![]).unwrap();
        assert_eq!(r, swapped);
    }

    #[test]
    fn invalid_frames_are_not_scored() {
        let gt = bx(0.0, 0.0, 4.0, 4.0);
        let r = SequenceResult {
            gt_boxes: vec![Some(gt), None, Some(gt)],
            ..seq_result("x", &[], vec![gt, bx(50.0, 50.0, 4.0, 4.0), gt], vec![])
        };
        let rep = SequenceReport::from_result(&r).unwrap();
        assert_eq!(rep.scored_frames, 2);
        assert_eq!(rep.success_auc, 1.0);
    }

    #[test]
    fn table_lists_each_configuration() {
        let gt = vec![bx(0.0, 0.0, 10.0, 10.0); 3];
        let rep = EvalReport::from_results("full", &[seq_result("a", &[], gt.clone(), gt)], vec![]).unwrap();
        let t = ablation_table(&[rep.clone(), EvalReport { label: "baseline".into(), ..rep }]);
        assert_eq!(t.lines().count(), 3);
        assert!(t.contains("baseline") && t.contains("100.0"));
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (-20.0..20.0f64, -20.0..20.0f64, 0.5..15.0f64, 0.5..15.0f64).prop_map(|(x, y, w, h)| bx(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&b, &a));
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn curves_are_monotone(errors in prop::collection::vec(0.0..80.0f64, 1..40),
                               ious in prop::collection::vec(0.0..=1.0f64, 1..40)) {
            let p = precision_curve(&errors).unwrap();
            prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
            let s = success_curve(&ious).unwrap();
            prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
            let a = auc(&s).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
