//! Turns raw per-frame detector outputs into solver-ready observations:
//! mean-shift condensation of marking segmentation, optical-flow filtering
//! against the projected pitch boundary and player boxes, and ground-plane
//! lifting of the surviving matches.

use std::collections::{BTreeMap, HashMap};

use crate::field::{FieldDimensions, FieldElementClass, FieldTemplate, sample_element};
use crate::geometry::CameraState;
use crate::{Vec2, Vec3};

/// Per-class marking pixels (or pre-extracted points) for one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentationInput {
    pub width: u32,
    pub height: u32,
    pub classes: BTreeMap<FieldElementClass, Vec<Vec2<f64>>>,
}

impl SegmentationInput {
    pub fn is_empty(&self) -> bool {
        self.classes.values().all(Vec::is_empty)
    }
}

/// One optical-flow correspondence between consecutive frames, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowMatch {
    pub prev: Vec2<f64>,
    pub curr: Vec2<f64>,
}

/// Axis-aligned player bounding box, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl PlayerBox {
    pub fn contains(&self, p: &Vec2<f64>, margin: f64) -> bool {
        p.x >= self.x0 - margin
            && p.x <= self.x1 + margin
            && p.y >= self.y0 - margin
            && p.y <= self.y1 + margin
    }
}

/// Solver-ready observations for one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameObservations {
    pub frame_index: u64,
    /// Condensed marking points per class.
    pub marking_points: BTreeMap<FieldElementClass, Vec<Vec2<f64>>>,
    pub flow_matches: Vec<FlowMatch>,
    pub player_boxes: Vec<PlayerBox>,
}

/// A flow anchor: the previous-frame pixel lifted to the ground plane, paired
/// with its current-frame pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedFlowPoint {
    /// Ground point on z = 0, meters.
    pub x_prev: Vec3<f64>,
    /// Matched pixel in the current frame.
    pub x_curr: Vec2<f64>,
}

const MEAN_SHIFT_MAX_ITERS: usize = 100;
const MEAN_SHIFT_SHIFT_TOL: f64 = 0.1;

/// Flat-kernel mean shift over one class's pixels: seeds on a decimated grid
/// of the inputs, iterated to convergence, modes merged below half the
/// bandwidth. Every returned mode lies within `bandwidth` of an input pixel.
pub fn mean_shift_modes(pixels: &[Vec2<f64>], bandwidth: f64, seed_decimation: usize) -> Vec<Vec2<f64>> {
    assert!(bandwidth > 0.0, "bandwidth must be positive");
    if pixels.is_empty() {
        return Vec::new();
    }
    let cell = bandwidth;
    let key = |p: &Vec2<f64>| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pixels.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let window_mean = |m: &Vec2<f64>| -> (Vec2<f64>, usize) {
        let (cx, cy) = key(m);
        let mut sum = Vec2::zeros();
        let mut count = 0usize;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(cell_points) = grid.get(&(cx + dx, cy + dy)) {
                    for &i in cell_points {
                        if (pixels[i] - m).norm() <= bandwidth {
                            sum += pixels[i];
                            count += 1;
                        }
                    }
                }
            }
        }
        (sum / count.max(1) as f64, count)
    };

    let converge = |seed: Vec2<f64>| {
        let mut m = seed;
        for _ in 0..MEAN_SHIFT_MAX_ITERS {
            let (mean, count) = window_mean(&m);
            if count == 0 {
                break;
            }
            let shift = (mean - m).norm();
            m = mean;
            if shift < MEAN_SHIFT_SHIFT_TOL {
                break;
            }
        }
        m
    };

    let decimation = seed_decimation.max(1);
    let mut modes: Vec<Vec2<f64>> = Vec::new();
    for seed_idx in (0..pixels.len()).step_by(decimation) {
        let m = converge(pixels[seed_idx]);
        if !modes.iter().any(|existing| (existing - m).norm() < bandwidth * 0.5) {
            modes.push(m);
        }
    }

    // Coverage repair: the half-bandwidth merge can swallow the drifted mode
    // at a blob's extremity, leaving tail pixels unrepresented. Seed a fresh
    // mode from the first uncovered pixel until every pixel has a mode
    // within the bandwidth.
    loop {
        let uncovered = pixels
            .iter()
            .find(|p| modes.iter().all(|m| (m - *p).norm() > bandwidth));
        let Some(&p) = uncovered else { break };
        let m = converge(p);
        modes.push(if (m - p).norm() <= bandwidth { m } else { p });
    }
    modes
}

/// Condenses segmentation blobs into representative points, per class.
/// Empty classes stay empty; order of classes and points is deterministic.
pub fn condense_markings(
    seg: &SegmentationInput,
    bandwidth: f64,
    seed_decimation: usize,
) -> BTreeMap<FieldElementClass, Vec<Vec2<f64>>> {
    seg.classes
        .iter()
        .map(|(class, pixels)| (*class, mean_shift_modes(pixels, bandwidth, seed_decimation)))
        .filter(|(_, modes)| !modes.is_empty())
        .collect()
}

/// The pitch boundary (side + goal lines) projected into the image with the
/// previous camera, as a polygon in perimeter order. Samples behind the
/// camera are skipped.
pub fn projected_pitch_polygon(cam: &CameraState, dims: &FieldDimensions<f64>) -> Vec<Vec2<f64>> {
    let l2 = dims.length * 0.5;
    let w2 = dims.width * 0.5;
    let corners = [
        Vec3::new(-l2, -w2, 0.0),
        Vec3::new(l2, -w2, 0.0),
        Vec3::new(l2, w2, 0.0),
        Vec3::new(-l2, w2, 0.0),
    ];
    let projector = crate::geometry::Projector::new(cam);
    let mut polygon = Vec::new();
    for i in 0..4 {
        let seg = crate::field::GeometricElement::Segment { a: corners[i], b: corners[(i + 1) % 4] };
        let samples = sample_element(&seg, 0.5);
        // drop each edge's final sample: it reappears as the next edge's first
        for s in &samples[..samples.len() - 1] {
            if let Ok(pix) = projector.project(s) {
                polygon.push(pix);
            }
        }
    }
    polygon
}

/// Even-odd ray-crossing point-in-polygon test.
pub fn point_in_polygon(p: &Vec2<f64>, polygon: &[Vec2<f64>]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Keeps matches whose previous-frame pixel lies inside the projected pitch
/// boundary and outside every player box dilated by `margin_px`.
pub fn filter_flow(
    matches: &[FlowMatch],
    prev_cam: &CameraState,
    boxes: &[PlayerBox],
    template: &FieldTemplate<f64>,
    margin_px: f64,
) -> Vec<FlowMatch> {
    let polygon = projected_pitch_polygon(prev_cam, &template.dims);
    matches
        .iter()
        .filter(|m| point_in_polygon(&m.prev, &polygon))
        .filter(|m| !boxes.iter().any(|b| b.contains(&m.prev, margin_px)))
        .copied()
        .collect()
}

/// Lifts each match's previous pixel to the ground plane through the previous
/// camera. Matches that fail undistortion or ground intersection, or land
/// more than 2 m outside the pitch rectangle, are dropped silently.
pub fn lift_flow(
    matches: &[FlowMatch],
    prev_cam: &CameraState,
    dims: &FieldDimensions<f64>,
) -> Vec<LiftedFlowPoint> {
    let bound_x = dims.length * 0.5 + 2.0;
    let bound_y = dims.width * 0.5 + 2.0;
    matches
        .iter()
        .filter_map(|m| {
            let ray = prev_cam.unproject(&m.prev).ok()?;
            let ground = ray.intersect_ground().ok()?;
            if ground.x.abs() > bound_x || ground.y.abs() > bound_y {
                return None;
            }
            Some(LiftedFlowPoint { x_prev: ground, x_curr: m.curr })
        })
        .collect()
}
