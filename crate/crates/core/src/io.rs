//! Line-delimited record formats shared by every tool: detection inputs,
//! tracking reports, annotations, and the rig parameter file. One JSON
//! object per line; streams and diffs cleanly.
//!
//! Angles cross this boundary in degrees; everything internal is radians.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::eval::FrameAnnotation;
use crate::field::{keypoint_catalog, FieldElementClass};
use crate::geometry::CameraState;
use crate::observe::{FlowMatch, PlayerBox, SegmentationInput};
use crate::reinit::Correspondence2D3D;
use crate::tracker::{TrackReport, TrackStatus};
use crate::tripod::TripodRig;
use crate::{Vec2, Vec3};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Record {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("frame {frame}: {message}")]
    Invalid { frame: u64, message: String },
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File { path: path.display().to_string(), source }
}

/// Reads one record per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| file_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| file_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| IoError::Record {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Writes one record per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| file_err(path, e))?,
    );
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(file, "{line}").map_err(|e| file_err(path, e))?;
    }
    Ok(())
}

/// Per-class marking evidence. `px` (raw pixels) and `rle` (run-length rows
/// `[y, x0, len]`) form the mask used for condensation and the confidence
/// score; `pts` are pre-extracted points that go straight to the solver,
/// skipping mean shift. A detector may provide any combination.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ClassPixels {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub px: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rle: Vec<[u32; 3]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pts: Vec<[f64; 2]>,
}

impl ClassPixels {
    pub fn from_pixels(px: Vec<[f64; 2]>) -> Self {
        Self { px, ..Default::default() }
    }

    pub fn from_points(pts: Vec<[f64; 2]>) -> Self {
        Self { pts, ..Default::default() }
    }
}

/// One frame of detector outputs.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct DetectionRecord {
    pub frame: u64,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub markings: BTreeMap<String, ClassPixels>,
    /// Flow matches as `[prev_x, prev_y, curr_x, curr_y]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flow: Vec<[f64; 4]>,
    /// Player boxes as `[x0, y0, x1, y1]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keypoints: Vec<KeypointRecord>,
}

/// A detected keypoint identified by its catalog id.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KeypointRecord {
    pub id: String,
    pub px: [f64; 2],
}

/// Decoded, alias-resolved inputs for one tracker step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameInputs {
    pub frame: u64,
    pub width: u32,
    pub height: u32,
    /// Pixel evidence per class (used for condensation and the confidence
    /// score); includes any pre-extracted points.
    pub seg: SegmentationInput,
    /// Classes whose points arrived pre-condensed and skip mean shift.
    pub precondensed: BTreeMap<FieldElementClass, Vec<Vec2<f64>>>,
    pub flow: Vec<FlowMatch>,
    pub boxes: Vec<PlayerBox>,
    pub keypoints: Vec<Correspondence2D3D>,
}

impl FrameInputs {
    /// Decodes a detection record: resolves class aliases, expands RLE,
    /// validates bounds, and resolves keypoint ids through the template
    /// catalog (unknown ids are skipped).
    pub fn from_record(record: &DetectionRecord, config: &RunConfig) -> Result<Self, IoError> {
        let frame = record.frame;
        let invalid = |message: String| IoError::Invalid { frame, message };
        if record.width == 0 || record.height == 0 {
            return Err(invalid("zero image dimensions".into()));
        }
        let (w, h) = (record.width as f64, record.height as f64);

        let mut seg = SegmentationInput { width: record.width, height: record.height, ..Default::default() };
        let mut precondensed = BTreeMap::new();
        for (name, pixels) in &record.markings {
            let Some(class) = config
                .resolve_class(name)
                .map_err(|e| invalid(e.to_string()))?
            else {
                continue;
            };
            let mut mask_points: Vec<Vec2<f64>> =
                pixels.px.iter().map(|p| Vec2::new(p[0], p[1])).collect();
            mask_points.extend(pixels.rle.iter().flat_map(|&[y, x0, len]| {
                (x0..x0 + len).map(move |x| Vec2::new(x as f64, y as f64))
            }));
            let points: Vec<Vec2<f64>> =
                pixels.pts.iter().map(|p| Vec2::new(p[0], p[1])).collect();
            for p in mask_points.iter().chain(&points) {
                if p.x < 0.0 || p.y < 0.0 || p.x >= w || p.y >= h {
                    return Err(invalid(format!(
                        "marking pixel ({}, {}) outside {}x{} for class {name}",
                        p.x, p.y, record.width, record.height
                    )));
                }
            }
            if !points.is_empty() {
                precondensed.insert(class, points.clone());
            }
            // points stand in as mask evidence only when no mask came along
            if mask_points.is_empty() {
                mask_points = points;
            }
            if !mask_points.is_empty() {
                seg.classes.entry(class).or_insert_with(Vec::new).extend(mask_points);
            }
        }

        let margin_x = 0.1 * w;
        let margin_y = 0.1 * h;
        let boxes = record
            .boxes
            .iter()
            .map(|&[x0, y0, x1, y1]| {
                if x0 > x1
                    || y0 > y1
                    || x0 < -margin_x
                    || y0 < -margin_y
                    || x1 > w + margin_x
                    || y1 > h + margin_y
                {
                    Err(invalid(format!("player box [{x0}, {y0}, {x1}, {y1}] out of range")))
                } else {
                    Ok(PlayerBox { x0, y0, x1, y1 })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        let flow = record
            .flow
            .iter()
            .map(|&[px, py, cx, cy]| {
                let m = FlowMatch { prev: Vec2::new(px, py), curr: Vec2::new(cx, cy) };
                if [px, py, cx, cy].iter().all(|v| v.is_finite()) {
                    Ok(m)
                } else {
                    Err(invalid("non-finite flow match".into()))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        let dims = config.dimensions().map_err(|e| invalid(e.to_string()))?;
        let catalog = keypoint_catalog(&dims);
        let keypoints = record
            .keypoints
            .iter()
            .filter_map(|kp| {
                let id = config.resolve_keypoint(&kp.id);
                catalog.get(id).map(|(class, world)| Correspondence2D3D {
                    pixel: Vec2::new(kp.px[0], kp.px[1]),
                    world: *world,
                    class: *class,
                })
            })
            .collect();

        Ok(Self {
            frame,
            width: record.width,
            height: record.height,
            seg,
            precondensed,
            flow,
            boxes,
            keypoints,
        })
    }
}

/// Camera parameters at the I/O boundary: degrees and meters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CameraRecord {
    pub f_px: f64,
    pub k1: f64,
    pub pan_deg: f64,
    pub tilt_deg: f64,
    pub roll_deg: f64,
    pub position_m: [f64; 3],
    pub width: u32,
    pub height: u32,
}

impl CameraRecord {
    pub fn from_state(cam: &CameraState) -> Self {
        Self {
            f_px: cam.f,
            k1: cam.k1,
            pan_deg: cam.pan.to_degrees(),
            tilt_deg: cam.tilt.to_degrees(),
            roll_deg: cam.roll.to_degrees(),
            position_m: [cam.c.x, cam.c.y, cam.c.z],
            width: cam.image_w,
            height: cam.image_h,
        }
    }

    pub fn to_state(&self) -> CameraState {
        CameraState::new(
            self.f_px,
            self.k1,
            self.pan_deg.to_radians(),
            self.tilt_deg.to_radians(),
            self.roll_deg.to_radians(),
            Vec3::new(self.position_m[0], self.position_m[1], self.position_m[2]),
            self.width,
            self.height,
        )
    }
}

/// One tracking report per frame.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRecord {
    pub frame: u64,
    pub status: String,
    pub reinit_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mre_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraRecord>,
}

impl ReportRecord {
    pub fn from_report(report: &TrackReport) -> Self {
        let status = match report.status {
            TrackStatus::Tracking => "tracking",
            TrackStatus::Reinitializing => "reinitializing",
            TrackStatus::Lost => "lost",
        };
        Self {
            frame: report.frame,
            status: status.to_string(),
            reinit_used: report.reinit_used,
            s: report.s,
            cost: report.cost,
            mre_px: report.mre_px,
            camera: report.camera.as_ref().map(CameraRecord::from_state),
        }
    }
}

/// Ground-truth camera record emitted by the simulator.
pub fn truth_record(frame: u64, cam: &CameraState) -> ReportRecord {
    ReportRecord {
        frame,
        status: "truth".to_string(),
        reinit_used: false,
        s: None,
        cost: None,
        mre_px: None,
        camera: Some(CameraRecord::from_state(cam)),
    }
}

/// Per-frame annotation polylines, class name → ordered image points.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnnotationRecord {
    pub frame: u64,
    pub width: u32,
    pub height: u32,
    pub annotations: BTreeMap<String, Vec<[f64; 2]>>,
}

impl AnnotationRecord {
    pub fn to_annotation(&self, config: &RunConfig) -> Result<FrameAnnotation, IoError> {
        let mut polylines = BTreeMap::new();
        for (name, points) in &self.annotations {
            let Some(class) = config
                .resolve_class(name)
                .map_err(|e| IoError::Invalid { frame: self.frame, message: e.to_string() })?
            else {
                continue;
            };
            if points.is_empty() {
                continue; // zero-point classes count as absent
            }
            polylines.insert(class, points.iter().map(|p| Vec2::new(p[0], p[1])).collect());
        }
        Ok(FrameAnnotation { frame: self.frame, width: self.width, height: self.height, polylines })
    }

    pub fn from_annotation(ann: &FrameAnnotation) -> Self {
        let annotations = ann
            .polylines
            .iter()
            .map(|(class, points)| {
                (class.name().to_string(), points.iter().map(|p| [p.x, p.y]).collect())
            })
            .collect();
        Self { frame: ann.frame, width: ann.width, height: ann.height, annotations }
    }
}

/// The fitted tripod rig, persisted per sequence.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RigRecord {
    pub t_m: [f64; 3],
    pub delta_m: f64,
}

impl RigRecord {
    pub fn from_rig(rig: &TripodRig) -> Self {
        Self { t_m: [rig.t.x, rig.t.y, rig.t.z], delta_m: rig.delta }
    }

    pub fn to_rig(&self) -> TripodRig {
        TripodRig { t: Vec3::new(self.t_m[0], self.t_m[1], self.t_m[2]), delta: self.delta_m }
    }
}

pub fn read_rig(path: &Path) -> Result<TripodRig, IoError> {
    let records: Vec<RigRecord> = read_jsonl(path)?;
    records
        .first()
        .map(RigRecord::to_rig)
        .ok_or_else(|| IoError::Invalid { frame: 0, message: "empty rig file".into() })
}

pub fn write_rig(path: &Path, rig: &TripodRig) -> Result<(), IoError> {
    write_jsonl(path, &[RigRecord::from_rig(rig)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_record_round_trips_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("detections.jsonl");
        let mut markings = BTreeMap::new();
        markings.insert(
            "side_line_top".to_string(),
            ClassPixels::from_pixels(vec![[10.0, 20.0], [11.0, 20.0]]),
        );
        markings.insert(
            "center_circle".to_string(),
            ClassPixels { rle: vec![[100, 50, 4]], ..Default::default() },
        );
        markings.insert("halfway_line".to_string(), ClassPixels::from_points(vec![[1.0, 2.0]]));
        let records = vec![DetectionRecord {
            frame: 3,
            width: 1920,
            height: 1080,
            markings,
            flow: vec![[1.0, 2.0, 3.0, 4.0]],
            boxes: vec![[10.0, 10.0, 50.0, 90.0]],
            keypoints: vec![KeypointRecord { id: "center_mark".into(), px: [960.0, 700.0] }],
        }];
        write_jsonl(&path, &records).unwrap();
        let back: Vec<DetectionRecord> = read_jsonl(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn frame_inputs_decode_rle_and_aliases() {
        let config = RunConfig::default();
        let mut markings = BTreeMap::new();
        markings.insert(
            "Side line left".to_string(),
            ClassPixels { rle: vec![[5, 2, 3]], ..Default::default() },
        );
        markings.insert("Goal unknown".to_string(), ClassPixels::from_pixels(vec![[1.0, 1.0]]));
        let record = DetectionRecord {
            frame: 0,
            width: 640,
            height: 360,
            markings,
            keypoints: vec![
                KeypointRecord { id: "corner_left_top".into(), px: [10.0, 10.0] },
                KeypointRecord { id: "mystery_point".into(), px: [5.0, 5.0] },
            ],
            ..Default::default()
        };
        let inputs = FrameInputs::from_record(&record, &config).unwrap();
        let pixels = &inputs.seg.classes[&FieldElementClass::GoalLineLeft];
        assert_eq!(pixels.len(), 3);
        assert_eq!(pixels[0], Vec2::new(2.0, 5.0));
        // ignored class dropped, unknown keypoint skipped
        assert_eq!(inputs.seg.classes.len(), 1);
        assert_eq!(inputs.keypoints.len(), 1);
        assert_eq!(inputs.keypoints[0].world, Vec3::new(-52.5, -34.0, 0.0));
    }

    #[test]
    fn frame_inputs_reject_out_of_bounds() {
        let config = RunConfig::default();
        let mut markings = BTreeMap::new();
        markings.insert("halfway_line".to_string(), ClassPixels::from_pixels(vec![[700.0, 10.0]]));
        let record =
            DetectionRecord { frame: 7, width: 640, height: 360, markings, ..Default::default() };
        let err = FrameInputs::from_record(&record, &config);
        assert!(matches!(err, Err(IoError::Invalid { frame: 7, .. })));
    }

    #[test]
    fn camera_record_round_trips_degrees() {
        let cam = CameraState::new(
            2345.0,
            -0.07,
            0.3,
            1.4,
            -0.02,
            Vec3::new(1.0, 54.0, -11.5),
            1920,
            1080,
        );
        let record = CameraRecord::from_state(&cam);
        assert!((record.tilt_deg - 1.4_f64.to_degrees()).abs() < 1e-12);
        let back = record.to_state();
        assert!((back.pan - cam.pan).abs() < 1e-15);
        assert_eq!(back.c, cam.c);
    }

    #[test]
    fn unknown_class_is_an_error() {
        let config = RunConfig::default();
        let mut markings = BTreeMap::new();
        markings.insert("Mystery line".to_string(), ClassPixels::from_pixels(vec![[1.0, 1.0]]));
        let record =
            DetectionRecord { frame: 0, width: 640, height: 360, markings, ..Default::default() };
        assert!(FrameInputs::from_record(&record, &config).is_err());
    }
}
