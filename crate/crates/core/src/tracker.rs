//! Per-frame orchestration: warm-start from the previous camera, build
//! observations, solve, score confidence, gate the optical flow, and trigger
//! reinitialization.
//!
//! Confidence is the Jaccard index between the detected marking pixels
//! (all classes unioned) and the projected template rendered as a mask. It
//! is evaluated twice per tracked frame: on the previous camera to decide
//! whether the flow (which is lifted through that camera) is trustworthy,
//! and on the solved camera to decide whether reinitialization is needed.
//! A track is declared lost only after `lost_frames` consecutive frames
//! under `lost_score`; until then the low-confidence camera is kept and the
//! status reads `Reinitializing`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::field::{build_template, FieldDimensions, FieldError, FieldTemplate, SampledTemplate};
use crate::geometry::CameraState;
use crate::io::FrameInputs;
use crate::observe::{condense_markings, filter_flow, lift_flow, SegmentationInput};
use crate::optimize::{self, MarkingPoints, SolveToggles};
use crate::raster::{render_template, BitMask};
use crate::reinit::reinitialize;
use crate::tripod::TripodRig;

/// Reported per-frame tracking state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tracking,
    Reinitializing,
    Lost,
}

/// Internal state-machine phase (the uninitialized tracker has no camera yet).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerPhase {
    Uninitialized,
    Tracking,
    Reinitializing,
    Lost,
}

/// One report per processed frame; `camera` is present iff the frame did not
/// end lost.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackReport {
    pub frame: u64,
    pub camera: Option<CameraState>,
    pub s: Option<f64>,
    pub status: TrackStatus,
    pub cost: Option<f64>,
    /// Mean absolute marking residual over inliers (within 3 Cauchy scales).
    pub mre_px: Option<f64>,
    pub reinit_used: bool,
}

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("frame {frame} arrived after frame {last}")]
    OutOfOrderFrame { frame: u64, last: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

/// Jaccard index between the union of detected marking pixels and the
/// rendered projected template. Returns 0 when both masks are empty.
pub fn confidence_score(
    cam: &CameraState,
    seg: &SegmentationInput,
    sampled_mask: &SampledTemplate,
    stroke_px: f64,
) -> f64 {
    debug_assert_eq!((seg.width, seg.height), (cam.image_w, cam.image_h), "dims mismatch");
    let render = render_template(cam, sampled_mask, stroke_px);
    let mut detected = BitMask::new(seg.width, seg.height);
    for points in seg.classes.values() {
        detected.set_points(points);
    }
    detected.jaccard(&render)
}

/// Sequential per-frame tracker; one instance per sequence.
pub struct Tracker {
    config: RunConfig,
    template: FieldTemplate<f64>,
    sampled_loss: SampledTemplate,
    sampled_mask: SampledTemplate,
    dims: FieldDimensions<f64>,
    rig: Option<TripodRig>,
    reinit_rig: TripodRig,
    toggles: SolveToggles,
    phase: TrackerPhase,
    prev_camera: Option<CameraState>,
    consecutive_low: u32,
    frames_since_reinit: u64,
    last_frame: Option<u64>,
    reinit_count: u64,
}

impl Tracker {
    /// `rig`: the fitted tripod if available; reinitialization otherwise pins
    /// the focal point to the configured role default.
    pub fn new(
        config: RunConfig,
        rig: Option<TripodRig>,
        role: Option<&str>,
        toggles: SolveToggles,
    ) -> Result<Self, TrackError> {
        let dims = config.dimensions()?;
        let template = build_template(&dims)?;
        let sampled_loss = SampledTemplate::new(&template, config.field.loss_step_m);
        let sampled_mask = SampledTemplate::new(&template, config.field.mask_step_m);
        let reinit_rig = match rig {
            Some(r) => r,
            None => config.default_rig(role)?,
        };
        Ok(Self {
            config,
            template,
            sampled_loss,
            sampled_mask,
            dims,
            rig,
            reinit_rig,
            toggles,
            phase: TrackerPhase::Uninitialized,
            prev_camera: None,
            consecutive_low: 0,
            frames_since_reinit: 0,
            last_frame: None,
            reinit_count: 0,
        })
    }

    pub fn phase(&self) -> TrackerPhase {
        self.phase
    }

    pub fn reinit_count(&self) -> u64 {
        self.reinit_count
    }

    pub fn frames_since_reinit(&self) -> u64 {
        self.frames_since_reinit
    }

    fn confidence(&self, cam: &CameraState, seg: &SegmentationInput, stroke: f64) -> f64 {
        confidence_score(cam, seg, &self.sampled_mask, stroke)
    }

    fn inlier_mre(&self, cam: &CameraState, markings: &MarkingPoints) -> Option<f64> {
        let residuals = optimize::marking_residuals(
            cam,
            markings,
            &self.sampled_loss,
            self.config.solver.r_cap_px,
        );
        let gate = 3.0 * self.config.solver.cauchy_scale_px;
        let inliers: Vec<f64> = residuals.into_iter().filter(|r| *r <= gate).collect();
        if inliers.is_empty() {
            None
        } else {
            Some(inliers.iter().sum::<f64>() / inliers.len() as f64)
        }
    }

    fn try_reinitialize(&self, inputs: &FrameInputs, markings: &MarkingPoints) -> Option<CameraState> {
        reinitialize(
            &inputs.keypoints,
            &self.reinit_rig,
            markings,
            &self.sampled_loss,
            &self.config.solver,
            &self.config.reinit,
            self.toggles,
            inputs.width,
            inputs.height,
        )
        .ok()
        .map(|r| r.camera)
    }

    /// Processes one frame (indices must be strictly increasing).
    pub fn step(&mut self, inputs: &FrameInputs) -> Result<TrackReport, TrackError> {
        if let Some(last) = self.last_frame {
            if inputs.frame <= last {
                return Err(TrackError::OutOfOrderFrame { frame: inputs.frame, last });
            }
        }
        self.last_frame = Some(inputs.frame);
        self.frames_since_reinit = self.frames_since_reinit.saturating_add(1);

        let height_scale = inputs.height as f64 / 1080.0;
        let stroke = self.config.tracker.stroke_px * height_scale;
        let bandwidth = self.config.tracker.bandwidth_px * height_scale;

        // condense segmentation; pre-extracted point classes pass through
        let to_condense = SegmentationInput {
            width: inputs.seg.width,
            height: inputs.seg.height,
            classes: inputs
                .seg
                .classes
                .iter()
                .filter(|(class, _)| !inputs.precondensed.contains_key(class))
                .map(|(class, pixels)| (*class, pixels.clone()))
                .collect(),
        };
        let mut markings =
            condense_markings(&to_condense, bandwidth, self.config.tracker.seed_decimation);
        for (class, points) in &inputs.precondensed {
            markings.insert(*class, points.clone());
        }

        let report = match self.phase {
            TrackerPhase::Uninitialized | TrackerPhase::Lost => {
                self.reinit_frame(inputs, &markings, stroke)
            }
            TrackerPhase::Tracking | TrackerPhase::Reinitializing => {
                self.track_frame(inputs, &markings, stroke)
            }
        };
        Ok(report)
    }

    fn reinit_frame(
        &mut self,
        inputs: &FrameInputs,
        markings: &MarkingPoints,
        stroke: f64,
    ) -> TrackReport {
        match self.try_reinitialize(inputs, markings) {
            Some(camera) => {
                let s = self.confidence(&camera, &inputs.seg, stroke);
                self.phase = TrackerPhase::Tracking;
                self.prev_camera = Some(camera);
                self.consecutive_low = u32::from(s < self.config.tracker.lost_score);
                self.frames_since_reinit = 0;
                self.reinit_count += 1;
                TrackReport {
                    frame: inputs.frame,
                    camera: Some(camera),
                    s: Some(s),
                    status: TrackStatus::Tracking,
                    cost: None,
                    mre_px: self.inlier_mre(&camera, markings),
                    reinit_used: true,
                }
            }
            None => {
                self.phase = TrackerPhase::Lost;
                self.prev_camera = None;
                self.consecutive_low = 0;
                TrackReport {
                    frame: inputs.frame,
                    camera: None,
                    s: None,
                    status: TrackStatus::Lost,
                    cost: None,
                    mre_px: None,
                    reinit_used: false,
                }
            }
        }
    }

    fn track_frame(
        &mut self,
        inputs: &FrameInputs,
        markings: &MarkingPoints,
        stroke: f64,
    ) -> TrackReport {
        let prev = self.prev_camera.expect("tracking phase carries a camera");

        // the flow is lifted through the previous camera, so gate it on how
        // well that camera still explains the current segmentation
        let s_prev = self.confidence(&prev, &inputs.seg, stroke);
        let lifted = if self.toggles.use_flow && s_prev >= self.config.tracker.flow_gate {
            let filtered = filter_flow(
                &inputs.flow,
                &prev,
                &inputs.boxes,
                &self.template,
                self.config.tracker.box_margin_px,
            );
            lift_flow(&filtered, &prev, &self.dims)
        } else {
            Vec::new()
        };

        let has_data = !markings.is_empty() || !lifted.is_empty();
        let (mut camera, mut cost) = if has_data {
            match optimize::solve(
                &prev,
                markings,
                &lifted,
                &self.sampled_loss,
                self.rig.as_ref(),
                &self.config.solver,
                self.toggles,
            ) {
                Ok(outcome) => (outcome.camera, Some(outcome.cost)),
                Err(_) => (prev, None),
            }
        } else {
            (prev, None)
        };

        let mut s = self.confidence(&camera, &inputs.seg, stroke);
        let mut reinit_used = false;
        if s < self.config.tracker.reinit_score {
            if let Some(reinit_cam) = self.try_reinitialize(inputs, markings) {
                let s_reinit = self.confidence(&reinit_cam, &inputs.seg, stroke);
                if s_reinit > s {
                    camera = reinit_cam;
                    s = s_reinit;
                    cost = None;
                    reinit_used = true;
                    self.frames_since_reinit = 0;
                    self.reinit_count += 1;
                }
            }
        }

        if s < self.config.tracker.lost_score {
            self.consecutive_low += 1;
        } else {
            self.consecutive_low = 0;
        }

        if self.consecutive_low >= self.config.tracker.lost_frames {
            self.phase = TrackerPhase::Lost;
            self.prev_camera = None;
            self.consecutive_low = 0;
            return TrackReport {
                frame: inputs.frame,
                camera: None,
                s: None,
                status: TrackStatus::Lost,
                cost: None,
                mre_px: None,
                reinit_used,
            };
        }

        let status = if s >= self.config.tracker.reinit_score {
            TrackStatus::Tracking
        } else {
            TrackStatus::Reinitializing
        };
        self.phase = match status {
            TrackStatus::Tracking => TrackerPhase::Tracking,
            _ => TrackerPhase::Reinitializing,
        };
        self.prev_camera = Some(camera);
        TrackReport {
            frame: inputs.frame,
            camera: Some(camera),
            s: Some(s),
            status,
            cost,
            mre_px: self.inlier_mre(&camera, markings),
            reinit_used,
        }
    }
}
