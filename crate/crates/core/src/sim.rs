//! Synthetic ground-truth scene generator: tripod-consistent camera
//! trajectories (sum-of-sinusoid pan/tilt/zoom profiles), rasterized marking
//! segmentation, optical-flow matches, keypoints, and annotations. This is
//! the oracle behind the verification suite: with zero noise every emitted
//! observation is exactly consistent with the truth camera.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::FrameAnnotation;
use crate::field::{
    build_template, keypoint_catalog, FieldDimensions, FieldError, GeometricElement,
    SampledTemplate,
};
use crate::geometry::{rotation_from_angles, CameraState, Projector};
use crate::io::{AnnotationRecord, ClassPixels, DetectionRecord, KeypointRecord};
use crate::observe::{FlowMatch, PlayerBox, SegmentationInput};
use crate::raster::BitMask;
use crate::reinit::Correspondence2D3D;
use crate::tripod::TripodRig;
use crate::{Vec2, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("frame {frame}: motion profile drives the pitch out of view")]
    PitchOutOfView { frame: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// One sinusoidal motion component: `amp · sin(2π·t/period + phase)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Sinusoid {
    pub amp: f64,
    pub period_frames: f64,
    pub phase: f64,
}

impl Default for Sinusoid {
    fn default() -> Self {
        Self { amp: 0.0, period_frames: 100.0, phase: 0.0 }
    }
}

fn profile(base: f64, components: &[Sinusoid], t: f64) -> f64 {
    base + components
        .iter()
        .map(|s| s.amp * (std::f64::consts::TAU * t / s.period_frames + s.phase).sin())
        .sum::<f64>()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RigSpec {
    pub t_m: [f64; 3],
    pub delta_m: f64,
}

impl Default for RigSpec {
    fn default() -> Self {
        Self { t_m: [0.0, 55.0, -12.0], delta_m: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CameraBaseSpec {
    pub f_px: f64,
    pub k1: f64,
    pub roll_rad: f64,
    pub pan_rad: f64,
    pub tilt_rad: f64,
    /// Focal-point travel along the optical axis, meters.
    pub lambda_m: f64,
}

impl Default for CameraBaseSpec {
    fn default() -> Self {
        Self { f_px: 2200.0, k1: -0.05, roll_rad: 0.0, pan_rad: 0.0, tilt_rad: 1.32, lambda_m: 0.8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MotionSpec {
    pub pan: Vec<Sinusoid>,
    pub tilt: Vec<Sinusoid>,
    pub focal_px: Vec<Sinusoid>,
    pub lambda_m: Vec<Sinusoid>,
}

impl MotionSpec {
    /// A gentle pan/tilt/zoom sweep that keeps the pitch in view.
    pub fn gentle_sweep() -> Self {
        Self {
            pan: vec![Sinusoid { amp: 0.30, period_frames: 260.0, phase: 0.3 }],
            tilt: vec![Sinusoid { amp: 0.03, period_frames: 170.0, phase: 1.1 }],
            focal_px: vec![Sinusoid { amp: 260.0, period_frames: 230.0, phase: 2.0 }],
            lambda_m: vec![Sinusoid { amp: 0.35, period_frames: 190.0, phase: 0.7 }],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub marking_sigma_px: f64,
    pub flow_sigma_px: f64,
    pub flow_outlier_rate: f64,
    /// Inclusive frame ranges with no detector output at all.
    pub dropouts: Vec<[u64; 2]>,
    /// Model an ideal point extractor: emit exact centerline points (`pts`)
    /// alongside the rasterized mask, bypassing mean-shift condensation.
    /// Rasterized masks alone carry quantization, stroke end-cap, and
    /// window-curvature biases that bound recovery away from zero.
    pub ideal_points: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            marking_sigma_px: 1.0,
            flow_sigma_px: 0.5,
            flow_outlier_rate: 0.05,
            dropouts: vec![],
            ideal_points: false,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            marking_sigma_px: 0.0,
            flow_sigma_px: 0.0,
            flow_outlier_rate: 0.0,
            dropouts: vec![],
            ideal_points: true,
        }
    }

    fn is_dropout(&self, frame: u64) -> bool {
        self.dropouts.iter().any(|&[a, b]| (a..=b).contains(&frame))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FlowGenSpec {
    pub matches_per_frame: usize,
}

impl Default for FlowGenSpec {
    fn default() -> Self {
        Self { matches_per_frame: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSpec {
    pub length_m: f64,
    pub width_m: f64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self { length_m: 105.0, width_m: 68.0 }
    }
}

/// Complete scene description; deterministic given the seed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySpec {
    pub frames: u64,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    /// Segmentation stroke width at 1080p, pixels.
    pub stroke_px: f64,
    pub field: FieldSpec,
    pub rig: RigSpec,
    pub camera: CameraBaseSpec,
    pub motion: MotionSpec,
    pub noise: NoiseSpec,
    pub flow: FlowGenSpec,
    /// Static player boxes `[x0, y0, x1, y1]`, pixels.
    pub players: Vec<[f64; 4]>,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            frames: 300,
            seed: 7,
            width: 1920,
            height: 1080,
            stroke_px: 5.0,
            field: FieldSpec::default(),
            rig: RigSpec::default(),
            camera: CameraBaseSpec::default(),
            motion: MotionSpec::gentle_sweep(),
            noise: NoiseSpec::default(),
            flow: FlowGenSpec::default(),
            players: vec![[850.0, 420.0, 930.0, 600.0], [1200.0, 500.0, 1290.0, 690.0]],
        }
    }
}

impl TrajectorySpec {
    pub fn rig(&self) -> TripodRig {
        TripodRig {
            t: Vec3::new(self.rig.t_m[0], self.rig.t_m[1], self.rig.t_m[2]),
            delta: self.rig.delta_m,
        }
    }

    pub fn dimensions(&self) -> Result<FieldDimensions<f64>, FieldError> {
        FieldDimensions::new(self.field.length_m, self.field.width_m)
    }

    /// Truth camera at a frame: angles and zoom from the motion profiles,
    /// the focal point from the head model `C = T - δ·r2 + λ·r3`.
    pub fn camera_at(&self, frame: u64) -> CameraState {
        let t = frame as f64;
        let pan = profile(self.camera.pan_rad, &self.motion.pan, t);
        let tilt = profile(self.camera.tilt_rad, &self.motion.tilt, t);
        let f = profile(self.camera.f_px, &self.motion.focal_px, t);
        let lambda = profile(self.camera.lambda_m, &self.motion.lambda_m, t);
        let roll = self.camera.roll_rad;
        let rig = self.rig();
        let r = rotation_from_angles(pan, tilt, roll);
        let r2 = Vec3::new(r[(1, 0)], r[(1, 1)], r[(1, 2)]);
        let r3 = Vec3::new(r[(2, 0)], r[(2, 1)], r[(2, 2)]);
        let c = rig.t - r2 * rig.delta + r3 * lambda;
        CameraState::new(f, self.camera.k1, pan, tilt, roll, c, self.width, self.height)
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("spec serializes")
    }
}

/// Everything the detectors would produce for one frame, plus the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub frame: u64,
    pub truth: CameraState,
    pub dropout: bool,
    pub seg: SegmentationInput,
    /// Exact centerline points per class (ideal-detector mode only).
    pub exact_points: std::collections::BTreeMap<crate::field::FieldElementClass, Vec<Vec2<f64>>>,
    pub flow: Vec<FlowMatch>,
    pub boxes: Vec<PlayerBox>,
    pub keypoints: Vec<(String, Correspondence2D3D)>,
    pub annotation: FrameAnnotation,
}

impl SyntheticFrame {
    pub fn to_detection_record(&self) -> DetectionRecord {
        let mut markings: std::collections::BTreeMap<String, ClassPixels> = self
            .seg
            .classes
            .iter()
            .map(|(class, points)| {
                (
                    class.name().to_string(),
                    ClassPixels::from_pixels(points.iter().map(|p| [p.x, p.y]).collect()),
                )
            })
            .collect();
        for (class, points) in &self.exact_points {
            markings.entry(class.name().to_string()).or_default().pts =
                points.iter().map(|p| [p.x, p.y]).collect();
        }
        DetectionRecord {
            frame: self.frame,
            width: self.seg.width,
            height: self.seg.height,
            markings,
            flow: self.flow.iter().map(|m| [m.prev.x, m.prev.y, m.curr.x, m.curr.y]).collect(),
            boxes: self.boxes.iter().map(|b| [b.x0, b.y0, b.x1, b.y1]).collect(),
            keypoints: self
                .keypoints
                .iter()
                .map(|(id, c)| KeypointRecord { id: id.clone(), px: [c.pixel.x, c.pixel.y] })
                .collect(),
        }
    }

    pub fn to_annotation_record(&self) -> AnnotationRecord {
        AnnotationRecord::from_annotation(&self.annotation)
    }
}

fn frame_rng(seed: u64, frame: u64, stream: u64) -> ChaCha8Rng {
    // splitmix64 over (seed, frame, stream) for independent per-frame streams
    let mut z = seed
        .wrapping_add(frame.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Ground-truth annotation: the in-image projected extent of every element,
/// decimated to roughly a dozen points with run endpoints kept. Classes with
/// fewer than two in-image projections are left unannotated.
pub fn annotate_frame(
    cam: &CameraState,
    sampled: &SampledTemplate,
    frame: u64,
) -> FrameAnnotation {
    let projector = Projector::new(cam);
    let mut annotation = FrameAnnotation {
        frame,
        width: cam.image_w,
        height: cam.image_h,
        ..Default::default()
    };
    for class in sampled.classes() {
        let world = sampled.samples(class).unwrap();
        let inside: Vec<Vec2<f64>> = world
            .iter()
            .filter_map(|x| projector.project(x).ok())
            .filter(|p| cam.contains_pixel(p))
            .collect();
        // mark points are annotated with their single projection; everything
        // else needs at least two points along the visible extent
        if world.len() == 1 {
            if let Some(p) = inside.first() {
                annotation.polylines.insert(class, vec![*p]);
            }
            continue;
        }
        if inside.len() < 2 {
            continue;
        }
        let stride = (inside.len() / 12).max(1);
        let mut points: Vec<Vec2<f64>> =
            inside.iter().step_by(stride).copied().collect();
        if points.last() != inside.last() {
            points.push(*inside.last().unwrap());
        }
        annotation.polylines.insert(class, points);
    }
    annotation
}

/// Generates the full synthetic sequence. Deterministic given the spec.
pub fn generate(spec: &TrajectorySpec) -> Result<Vec<SyntheticFrame>, SimError> {
    let dims = spec.dimensions()?;
    let template = build_template(&dims)?;
    let sampled_mask = SampledTemplate::new(&template, 0.05);
    let catalog = keypoint_catalog(&dims);
    let rig = spec.rig();
    let height_scale = spec.height as f64 / 1080.0;
    let stroke = spec.stroke_px * height_scale;
    let boxes: Vec<PlayerBox> =
        spec.players.iter().map(|&[x0, y0, x1, y1]| PlayerBox { x0, y0, x1, y1 }).collect();

    let mut frames = Vec::with_capacity(spec.frames as usize);
    for t in 0..spec.frames {
        let truth = spec.camera_at(t);
        debug_assert!(crate::tripod::tripod_residual(&truth, &rig).abs() < 1e-9);
        let annotation = annotate_frame(&truth, &sampled_mask, t);
        if annotation.polylines.len() < 3 {
            return Err(SimError::PitchOutOfView { frame: t });
        }
        let dropout = spec.noise.is_dropout(t);

        let mut seg =
            SegmentationInput { width: spec.width, height: spec.height, ..Default::default() };
        let mut exact_points = std::collections::BTreeMap::new();
        if !dropout {
            let projector = Projector::new(&truth);
            let mut rng = frame_rng(spec.seed, t, 1);
            let jitter = (spec.noise.marking_sigma_px > 0.0)
                .then(|| Normal::new(0.0, spec.noise.marking_sigma_px).unwrap());
            for (class, element) in template.elements() {
                let world = sampled_mask.samples(class).unwrap();
                let mut pixels: Vec<Option<Vec2<f64>>> =
                    world.iter().map(|x| projector.project(x).ok()).collect();
                if spec.noise.ideal_points {
                    let inside: Vec<Vec2<f64>> = pixels
                        .iter()
                        .flatten()
                        .filter(|p| truth.contains_pixel(p))
                        .copied()
                        .collect();
                    if !inside.is_empty() {
                        // one exact point per ~25 px of visible extent
                        let stride = (inside.len() / 12).max(8);
                        let mut points: Vec<Vec2<f64>> =
                            inside.iter().step_by(stride).copied().collect();
                        if points.last() != inside.last() {
                            points.push(*inside.last().unwrap());
                        }
                        exact_points.insert(class, points);
                    }
                }
                if let Some(noise) = &jitter {
                    for p in pixels.iter_mut().flatten() {
                        p.x += noise.sample(&mut rng);
                        p.y += noise.sample(&mut rng);
                    }
                }
                let mut mask = BitMask::new(spec.width, spec.height);
                let half = match element {
                    // marks are small disks, not strokes
                    GeometricElement::Point { .. } => stroke.max(2.0),
                    _ => stroke * 0.5,
                };
                mask.stamp_polyline(&pixels, half);
                let points = mask.to_points();
                if !points.is_empty() {
                    seg.classes.insert(class, points);
                }
            }
        }

        let mut flow = Vec::new();
        if t > 0 && !dropout {
            let prev_cam = spec.camera_at(t - 1);
            let prev_proj = Projector::new(&prev_cam);
            let curr_proj = Projector::new(&truth);
            let mut rng = frame_rng(spec.seed, t, 2);
            let noise = (spec.noise.flow_sigma_px > 0.0)
                .then(|| Normal::new(0.0, spec.noise.flow_sigma_px).unwrap());
            let l2 = dims.length * 0.5;
            let w2 = dims.width * 0.5;
            let mut attempts = 0;
            while flow.len() < spec.flow.matches_per_frame && attempts < spec.flow.matches_per_frame * 20
            {
                attempts += 1;
                let g = Vec3::new(rng.gen_range(-l2..l2), rng.gen_range(-w2..w2), 0.0);
                let (Ok(mut prev), Ok(mut curr)) = (prev_proj.project(&g), curr_proj.project(&g))
                else {
                    continue;
                };
                if !prev_cam.contains_pixel(&prev) || !truth.contains_pixel(&curr) {
                    continue;
                }
                if let Some(n) = &noise {
                    prev.x += n.sample(&mut rng);
                    prev.y += n.sample(&mut rng);
                    curr.x += n.sample(&mut rng);
                    curr.y += n.sample(&mut rng);
                }
                if spec.noise.flow_outlier_rate > 0.0 && rng.gen_bool(spec.noise.flow_outlier_rate)
                {
                    curr = Vec2::new(
                        rng.gen_range(0.0..spec.width as f64),
                        rng.gen_range(0.0..spec.height as f64),
                    );
                }
                flow.push(FlowMatch { prev, curr });
            }
        }

        let mut keypoints = Vec::new();
        if !dropout {
            for (id, (class, world)) in &catalog {
                if let Ok(pixel) = truth.project(world) {
                    if truth.contains_pixel(&pixel) {
                        keypoints.push((
                            id.clone(),
                            Correspondence2D3D { pixel, world: *world, class: *class },
                        ));
                    }
                }
            }
        }

        frames.push(SyntheticFrame {
            frame: t,
            truth,
            dropout,
            seg,
            exact_points,
            flow,
            boxes: boxes.clone(),
            keypoints,
            annotation,
        });
    }
    Ok(frames)
}
