//! Single-frame calibration metrics against polyline annotations: per-class
//! correctness at pixel tolerances τ combined into a Jaccard score, mean and
//! median reprojection error over annotated points, and the completeness
//! rate over a sequence.
//!
//! A predicted class is *visible* when any sampled point of its template
//! element projects inside the image. A visible annotated class is *correct
//! at τ* when every annotated point lies within τ pixels of the projected
//! element. Per frame, `JaC_τ = TP / (TP + FP + FN)` where FP counts
//! predicted-visible classes that are not annotated; annotated classes that
//! are not correct (or have no camera) count as FN.

use std::collections::BTreeMap;

use crate::field::{FieldElementClass, ProjectedPolyline, SampledTemplate};
use crate::geometry::{CameraState, Projector};
use crate::Vec2;

/// Annotated image polylines along each element's visible extent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameAnnotation {
    pub frame: u64,
    pub width: u32,
    pub height: u32,
    pub polylines: BTreeMap<FieldElementClass, Vec<Vec2<f64>>>,
}

/// Per-frame scoring outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameScore {
    pub frame: u64,
    pub camera_present: bool,
    /// Tolerances, ascending, and the Jaccard score per tolerance.
    pub taus: Vec<f64>,
    pub jaccard: Vec<f64>,
    pub tp: Vec<usize>,
    pub fp: usize,
    pub fn_: Vec<usize>,
    /// Pooled per-point distances (annotated classes with a camera).
    pub distances: Vec<f64>,
}

/// Sequence-level aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub taus: Vec<f64>,
    /// Mean JaC per τ over frames with a camera, percent.
    pub jaccard_percent: Vec<f64>,
    /// Mean reprojection error over pooled distances, pixels.
    pub mre_px: f64,
    /// Median reprojection error, pixels.
    pub medre_px: f64,
    /// Frames with a camera / total frames, percent.
    pub cr_percent: f64,
    pub frames_scored: usize,
    pub total_frames: usize,
}

/// Scores one frame. `camera = None` yields JaC 0 with the frame counted
/// absent for the completeness rate.
pub fn score_frame(
    camera: Option<&CameraState>,
    annotation: &FrameAnnotation,
    sampled: &SampledTemplate,
    taus: &[f64],
) -> FrameScore {
    let mut taus = taus.to_vec();
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let annotated = annotation.polylines.len();

    let Some(cam) = camera else {
        return FrameScore {
            frame: annotation.frame,
            camera_present: false,
            jaccard: vec![0.0; taus.len()],
            tp: vec![0; taus.len()],
            fp: 0,
            fn_: vec![annotated; taus.len()],
            taus,
            distances: Vec::new(),
        };
    };

    let projector = Projector::new(cam);
    let mut visible = BTreeMap::new();
    let mut polylines = BTreeMap::new();
    for class in sampled.classes() {
        let world = sampled.samples(class).unwrap();
        let poly = ProjectedPolyline::project(&projector, world);
        let any_inside = poly
            .pixels
            .iter()
            .flatten()
            .any(|p| cam.contains_pixel(p));
        visible.insert(class, any_inside);
        polylines.insert(class, poly);
    }

    let mut distances = Vec::new();
    let mut tp = vec![0usize; taus.len()];
    let mut fn_ = vec![0usize; taus.len()];
    for (class, points) in &annotation.polylines {
        let class_visible = visible.get(class).copied().unwrap_or(false);
        let mut max_distance: f64 = 0.0;
        let mut all_measured = true;
        for q in points {
            match polylines.get(class).and_then(|poly| poly.closest(q)) {
                Some(closest) => {
                    distances.push(closest.distance);
                    max_distance = max_distance.max(closest.distance);
                }
                None => all_measured = false,
            }
        }
        for (i, tau) in taus.iter().enumerate() {
            if class_visible && all_measured && max_distance <= *tau {
                tp[i] += 1;
            } else {
                fn_[i] += 1;
            }
        }
    }
    let fp = visible
        .iter()
        .filter(|(class, vis)| **vis && !annotation.polylines.contains_key(*class))
        .count();

    let jaccard = tp
        .iter()
        .zip(&fn_)
        .map(|(&tp, &fn_)| {
            let denom = tp + fp + fn_;
            if denom == 0 {
                0.0
            } else {
                tp as f64 / denom as f64
            }
        })
        .collect();

    FrameScore {
        frame: annotation.frame,
        camera_present: true,
        taus,
        jaccard,
        tp,
        fp,
        fn_,
        distances,
    }
}

/// Aggregates frame scores; `total_frames` is the sequence length (scored
/// frames may be fewer when predictions are missing entirely).
pub fn aggregate(scores: &[FrameScore], total_frames: usize) -> Summary {
    let taus = scores.first().map(|s| s.taus.clone()).unwrap_or_default();
    let with_camera: Vec<_> = scores.iter().filter(|s| s.camera_present).collect();
    let jaccard_percent = (0..taus.len())
        .map(|i| {
            if with_camera.is_empty() {
                0.0
            } else {
                100.0 * with_camera.iter().map(|s| s.jaccard[i]).sum::<f64>()
                    / with_camera.len() as f64
            }
        })
        .collect();

    let mut pooled: Vec<f64> = with_camera.iter().flat_map(|s| s.distances.iter().copied()).collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mre = if pooled.is_empty() { f64::NAN } else { pooled.iter().sum::<f64>() / pooled.len() as f64 };
    let medre = if pooled.is_empty() {
        f64::NAN
    } else if pooled.len() % 2 == 1 {
        pooled[pooled.len() / 2]
    } else {
        0.5 * (pooled[pooled.len() / 2 - 1] + pooled[pooled.len() / 2])
    };

    Summary {
        taus,
        jaccard_percent,
        mre_px: mre,
        medre_px: medre,
        cr_percent: if total_frames == 0 {
            0.0
        } else {
            100.0 * with_camera.len() as f64 / total_frames as f64
        },
        frames_scored: scores.len(),
        total_frames,
    }
}

/// Plain-text summary table, one metric column per τ.
pub fn format_summary(summary: &Summary) -> String {
    let mut header = String::new();
    let mut values = String::new();
    for (tau, jac) in summary.taus.iter().zip(&summary.jaccard_percent) {
        header.push_str(&format!("JaC_{tau:<4.0}(%) "));
        values.push_str(&format!("{jac:<10.2} "));
    }
    header.push_str("MRE(px)  MedRE(px)  CR(%)");
    values.push_str(&format!(
        "{:<8.3} {:<10.3} {:.2}",
        summary.mre_px, summary.medre_px, summary.cr_percent
    ));
    format!("{header}\n{values}")
}
