//! Soccer-field template: semantic marking classes mapped to 3-D geometric
//! elements, dense sampling, and point-to-projected-element distances.
//!
//! Dimensions follow the laws of the game: only the pitch length and width
//! vary per stadium, the mark distances are fixed. Everything on the ground
//! sits at z = 0; the goal frame rises to z = -2.44 (z-down world frame).
//! "Top" is the negative-y touchline (the far side as seen from the default
//! main camera at positive y), "left" the negative-x goal.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraState, Projector};
use crate::{Real, Vec2, Vec3};

pub const CIRCLE_RADIUS_M: f64 = 9.15;
pub const PENALTY_SPOT_M: f64 = 11.0;
pub const PENALTY_AREA_DEPTH_M: f64 = 16.5;
pub const PENALTY_AREA_WIDTH_M: f64 = 40.32;
pub const GOAL_AREA_DEPTH_M: f64 = 5.5;
pub const GOAL_AREA_WIDTH_M: f64 = 18.32;
pub const GOAL_WIDTH_M: f64 = 7.32;
pub const GOAL_HEIGHT_M: f64 = 2.44;

/// Closed set of semantic marking classes; identical across template,
/// observations, and annotations. Wire names are the snake_case variant
/// names (`side_line_top`, `penalty_area_left_main`, ...); detector-specific
/// names are resolved through the config alias table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum FieldElementClass {
    SideLineTop,
    SideLineBottom,
    GoalLineLeft,
    GoalLineRight,
    HalfwayLine,
    CenterCircle,
    CenterMark,
    PenaltyMarkLeft,
    PenaltyMarkRight,
    PenaltyAreaLeftMain,
    PenaltyAreaLeftTop,
    PenaltyAreaLeftBottom,
    PenaltyAreaRightMain,
    PenaltyAreaRightTop,
    PenaltyAreaRightBottom,
    GoalAreaLeftMain,
    GoalAreaLeftTop,
    GoalAreaLeftBottom,
    GoalAreaRightMain,
    GoalAreaRightTop,
    GoalAreaRightBottom,
    PenaltyArcLeft,
    PenaltyArcRight,
    GoalLeftPostLeft,
    GoalLeftPostRight,
    GoalLeftCrossbar,
    GoalRightPostLeft,
    GoalRightPostRight,
    GoalRightCrossbar,
}

use FieldElementClass::*;

impl FieldElementClass {
    pub const ALL: [FieldElementClass; 29] = [
        SideLineTop,
        SideLineBottom,
        GoalLineLeft,
        GoalLineRight,
        HalfwayLine,
        CenterCircle,
        CenterMark,
        PenaltyMarkLeft,
        PenaltyMarkRight,
        PenaltyAreaLeftMain,
        PenaltyAreaLeftTop,
        PenaltyAreaLeftBottom,
        PenaltyAreaRightMain,
        PenaltyAreaRightTop,
        PenaltyAreaRightBottom,
        GoalAreaLeftMain,
        GoalAreaLeftTop,
        GoalAreaLeftBottom,
        GoalAreaRightMain,
        GoalAreaRightTop,
        GoalAreaRightBottom,
        PenaltyArcLeft,
        PenaltyArcRight,
        GoalLeftPostLeft,
        GoalLeftPostRight,
        GoalLeftCrossbar,
        GoalRightPostLeft,
        GoalRightPostRight,
        GoalRightCrossbar,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SideLineTop => "side_line_top",
            SideLineBottom => "side_line_bottom",
            GoalLineLeft => "goal_line_left",
            GoalLineRight => "goal_line_right",
            HalfwayLine => "halfway_line",
            CenterCircle => "center_circle",
            CenterMark => "center_mark",
            PenaltyMarkLeft => "penalty_mark_left",
            PenaltyMarkRight => "penalty_mark_right",
            PenaltyAreaLeftMain => "penalty_area_left_main",
            PenaltyAreaLeftTop => "penalty_area_left_top",
            PenaltyAreaLeftBottom => "penalty_area_left_bottom",
            PenaltyAreaRightMain => "penalty_area_right_main",
            PenaltyAreaRightTop => "penalty_area_right_top",
            PenaltyAreaRightBottom => "penalty_area_right_bottom",
            GoalAreaLeftMain => "goal_area_left_main",
            GoalAreaLeftTop => "goal_area_left_top",
            GoalAreaLeftBottom => "goal_area_left_bottom",
            GoalAreaRightMain => "goal_area_right_main",
            GoalAreaRightTop => "goal_area_right_top",
            GoalAreaRightBottom => "goal_area_right_bottom",
            PenaltyArcLeft => "penalty_arc_left",
            PenaltyArcRight => "penalty_arc_right",
            GoalLeftPostLeft => "goal_left_post_left",
            GoalLeftPostRight => "goal_left_post_right",
            GoalLeftCrossbar => "goal_left_crossbar",
            GoalRightPostLeft => "goal_right_post_left",
            GoalRightPostRight => "goal_right_post_right",
            GoalRightCrossbar => "goal_right_crossbar",
        }
    }

    /// Class under the pitch symmetry (x, y) → (-x, -y): left/right and
    /// top/bottom swap, post sides swap with the goal.
    pub fn mirror(&self) -> FieldElementClass {
        match self {
            SideLineTop => SideLineBottom,
            SideLineBottom => SideLineTop,
            GoalLineLeft => GoalLineRight,
            GoalLineRight => GoalLineLeft,
            HalfwayLine => HalfwayLine,
            CenterCircle => CenterCircle,
            CenterMark => CenterMark,
            PenaltyMarkLeft => PenaltyMarkRight,
            PenaltyMarkRight => PenaltyMarkLeft,
            PenaltyAreaLeftMain => PenaltyAreaRightMain,
            PenaltyAreaLeftTop => PenaltyAreaRightBottom,
            PenaltyAreaLeftBottom => PenaltyAreaRightTop,
            PenaltyAreaRightMain => PenaltyAreaLeftMain,
            PenaltyAreaRightTop => PenaltyAreaLeftBottom,
            PenaltyAreaRightBottom => PenaltyAreaLeftTop,
            GoalAreaLeftMain => GoalAreaRightMain,
            GoalAreaLeftTop => GoalAreaRightBottom,
            GoalAreaLeftBottom => GoalAreaRightTop,
            GoalAreaRightMain => GoalAreaLeftMain,
            GoalAreaRightTop => GoalAreaLeftBottom,
            GoalAreaRightBottom => GoalAreaLeftTop,
            PenaltyArcLeft => PenaltyArcRight,
            PenaltyArcRight => PenaltyArcLeft,
            GoalLeftPostLeft => GoalRightPostRight,
            GoalLeftPostRight => GoalRightPostLeft,
            GoalLeftCrossbar => GoalRightCrossbar,
            GoalRightPostLeft => GoalLeftPostRight,
            GoalRightPostRight => GoalLeftPostLeft,
            GoalRightCrossbar => GoalLeftCrossbar,
        }
    }
}

impl fmt::Display for FieldElementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FieldElementClass {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .find(|c| c.name() == s)
            .copied()
            .ok_or_else(|| FieldError::UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field dimensions outside the legal range: {0} x {1} m")]
    InvalidDimensions(f64, f64),
    #[error("element projects entirely behind the camera")]
    FullyBehind,
    #[error("unknown field element class: {0}")]
    UnknownClass(String),
}

/// Pitch length and width in meters; the mark distances are fixed constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDimensions<T: Real = f64> {
    pub length: T,
    pub width: T,
}

impl<T: Real> FieldDimensions<T> {
    pub fn new(length: T, width: T) -> Result<Self, FieldError> {
        let (l, w) = (
            num_traits::cast::<T, f64>(length).unwrap_or(f64::NAN),
            num_traits::cast::<T, f64>(width).unwrap_or(f64::NAN),
        );
        if !(90.0..=120.0).contains(&l) || !(45.0..=90.0).contains(&w) {
            return Err(FieldError::InvalidDimensions(l, w));
        }
        Ok(Self { length, width })
    }

    /// The common 105 x 68 m pitch.
    pub fn standard() -> Self {
        Self { length: T::c(105.0), width: T::c(68.0) }
    }
}

/// 3-D geometric element of the template, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometricElement<T: Real = f64> {
    Segment { a: Vec3<T>, b: Vec3<T> },
    Circle { center: Vec3<T>, radius: T, normal: Vec3<T> },
    Arc { center: Vec3<T>, radius: T, normal: Vec3<T>, start_angle: T, end_angle: T },
    Point { p: Vec3<T> },
}

impl<T: Real> GeometricElement<T> {
    /// Closed elements wrap around; their sampling carries a closing duplicate.
    pub fn is_closed(&self) -> bool {
        matches!(self, GeometricElement::Circle { .. })
    }
}

/// The complete class → element map for one pitch.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTemplate<T: Real = f64> {
    pub dims: FieldDimensions<T>,
    elements: BTreeMap<FieldElementClass, GeometricElement<T>>,
}

impl<T: Real> FieldTemplate<T> {
    pub fn get(&self, class: FieldElementClass) -> &GeometricElement<T> {
        &self.elements[&class]
    }

    pub fn elements(&self) -> impl Iterator<Item = (FieldElementClass, &GeometricElement<T>)> {
        self.elements.iter().map(|(c, e)| (*c, e))
    }
}

/// Builds the full template for the given dimensions.
pub fn build_template<T: Real>(dims: &FieldDimensions<T>) -> Result<FieldTemplate<T>, FieldError> {
    // re-validate: dimensions may have been constructed directly
    FieldDimensions::new(dims.length, dims.width)?;
    let half = T::c(0.5);
    let l2 = dims.length * half;
    let w2 = dims.width * half;
    let zero = T::zero();
    let z_up = Vec3::new(zero, zero, T::one());

    let ground = |x: T, y: T| Vec3::new(x, y, zero);
    let seg = |a: Vec3<T>, b: Vec3<T>| GeometricElement::Segment { a, b };

    let pa_half = T::c(PENALTY_AREA_WIDTH_M * 0.5);
    let ga_half = T::c(GOAL_AREA_WIDTH_M * 0.5);
    let pa_depth = T::c(PENALTY_AREA_DEPTH_M);
    let ga_depth = T::c(GOAL_AREA_DEPTH_M);
    let spot = T::c(PENALTY_SPOT_M);
    let radius = T::c(CIRCLE_RADIUS_M);
    let goal_half = T::c(GOAL_WIDTH_M * 0.5);
    let bar_z = -T::c(GOAL_HEIGHT_M);
    // the penalty arc spans the part of the circle outside the penalty area:
    // cos(alpha0) = (depth - spot) / radius
    let alpha0 = ((pa_depth - spot) / radius).acos();
    let pi = T::pi();

    let mut elements = BTreeMap::new();
    let mut put = |c: FieldElementClass, e: GeometricElement<T>| {
        elements.insert(c, e);
    };

    put(SideLineTop, seg(ground(-l2, -w2), ground(l2, -w2)));
    put(SideLineBottom, seg(ground(-l2, w2), ground(l2, w2)));
    put(GoalLineLeft, seg(ground(-l2, -w2), ground(-l2, w2)));
    put(GoalLineRight, seg(ground(l2, -w2), ground(l2, w2)));
    put(HalfwayLine, seg(ground(zero, -w2), ground(zero, w2)));
    put(CenterCircle, GeometricElement::Circle { center: ground(zero, zero), radius, normal: z_up });
    put(CenterMark, GeometricElement::Point { p: ground(zero, zero) });
    put(PenaltyMarkLeft, GeometricElement::Point { p: ground(-l2 + spot, zero) });
    put(PenaltyMarkRight, GeometricElement::Point { p: ground(l2 - spot, zero) });

    put(PenaltyAreaLeftMain, seg(ground(-l2 + pa_depth, -pa_half), ground(-l2 + pa_depth, pa_half)));
    put(PenaltyAreaLeftTop, seg(ground(-l2, -pa_half), ground(-l2 + pa_depth, -pa_half)));
    put(PenaltyAreaLeftBottom, seg(ground(-l2, pa_half), ground(-l2 + pa_depth, pa_half)));
    put(PenaltyAreaRightMain, seg(ground(l2 - pa_depth, -pa_half), ground(l2 - pa_depth, pa_half)));
    put(PenaltyAreaRightTop, seg(ground(l2, -pa_half), ground(l2 - pa_depth, -pa_half)));
    put(PenaltyAreaRightBottom, seg(ground(l2, pa_half), ground(l2 - pa_depth, pa_half)));

    put(GoalAreaLeftMain, seg(ground(-l2 + ga_depth, -ga_half), ground(-l2 + ga_depth, ga_half)));
    put(GoalAreaLeftTop, seg(ground(-l2, -ga_half), ground(-l2 + ga_depth, -ga_half)));
    put(GoalAreaLeftBottom, seg(ground(-l2, ga_half), ground(-l2 + ga_depth, ga_half)));
    put(GoalAreaRightMain, seg(ground(l2 - ga_depth, -ga_half), ground(l2 - ga_depth, ga_half)));
    put(GoalAreaRightTop, seg(ground(l2, -ga_half), ground(l2 - ga_depth, -ga_half)));
    put(GoalAreaRightBottom, seg(ground(l2, ga_half), ground(l2 - ga_depth, ga_half)));

    put(
        PenaltyArcLeft,
        GeometricElement::Arc {
            center: ground(-l2 + spot, zero),
            radius,
            normal: z_up,
            start_angle: -alpha0,
            end_angle: alpha0,
        },
    );
    put(
        PenaltyArcRight,
        GeometricElement::Arc {
            center: ground(l2 - spot, zero),
            radius,
            normal: z_up,
            start_angle: pi - alpha0,
            end_angle: pi + alpha0,
        },
    );

    put(GoalLeftPostLeft, seg(ground(-l2, -goal_half), Vec3::new(-l2, -goal_half, bar_z)));
    put(GoalLeftPostRight, seg(ground(-l2, goal_half), Vec3::new(-l2, goal_half, bar_z)));
    put(GoalLeftCrossbar, seg(Vec3::new(-l2, -goal_half, bar_z), Vec3::new(-l2, goal_half, bar_z)));
    put(GoalRightPostLeft, seg(ground(l2, -goal_half), Vec3::new(l2, -goal_half, bar_z)));
    put(GoalRightPostRight, seg(ground(l2, goal_half), Vec3::new(l2, goal_half, bar_z)));
    put(GoalRightCrossbar, seg(Vec3::new(l2, -goal_half, bar_z), Vec3::new(l2, goal_half, bar_z)));

    Ok(FieldTemplate { dims: *dims, elements })
}

fn circle_basis<T: Real>(normal: &Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let z_up = Vec3::new(T::zero(), T::zero(), T::one());
    if (normal - z_up).norm() < T::c(1e-9) {
        // template circles: angle 0 along +x, growing toward +y
        (Vec3::x(), Vec3::y())
    } else {
        let u = if normal.z.abs() < T::c(0.9) { z_up } else { Vec3::x() };
        let e1 = u.cross(normal).normalize();
        let e2 = normal.cross(&e1);
        (e1, e2)
    }
}

/// Samples an element at most `step` meters apart along its extent.
/// Endpoints are included; closed elements carry a closing duplicate
/// (`last == first`), so the unique sample count is `len() - 1`.
pub fn sample_element<T: Real>(element: &GeometricElement<T>, step: T) -> Vec<Vec3<T>> {
    assert!(step > T::zero(), "sampling step must be positive");
    match element {
        GeometricElement::Point { p } => vec![*p],
        GeometricElement::Segment { a, b } => {
            let len = (b - a).norm();
            let n = (len / step).ceil().max(T::one());
            let n_int = num_traits::cast::<T, usize>(n).unwrap_or(1);
            (0..=n_int)
                .map(|i| a + (b - a) * (T::c(i as f64) / n))
                .collect()
        }
        GeometricElement::Circle { center, radius, normal } => {
            let (e1, e2) = circle_basis(normal);
            let arclen = T::two_pi() * *radius;
            let n = (arclen / step).ceil().max(T::one());
            let n_int = num_traits::cast::<T, usize>(n).unwrap_or(1);
            let mut points: Vec<_> = (0..n_int)
                .map(|i| {
                    let angle = T::two_pi() * T::c(i as f64) / n;
                    center + (e1 * angle.cos() + e2 * angle.sin()) * *radius
                })
                .collect();
            points.push(points[0]);
            points
        }
        GeometricElement::Arc { center, radius, normal, start_angle, end_angle } => {
            let (e1, e2) = circle_basis(normal);
            let extent = *end_angle - *start_angle;
            let arclen = extent.abs() * *radius;
            let n = (arclen / step).ceil().max(T::one());
            let n_int = num_traits::cast::<T, usize>(n).unwrap_or(1);
            (0..=n_int)
                .map(|i| {
                    let angle = *start_angle + extent * T::c(i as f64) / n;
                    center + (e1 * angle.cos() + e2 * angle.sin()) * *radius
                })
                .collect()
        }
    }
}

/// Template with every element pre-sampled at a fixed step.
#[derive(Debug, Clone)]
pub struct SampledTemplate<T: Real = f64> {
    step: T,
    per_class: BTreeMap<FieldElementClass, Vec<Vec3<T>>>,
}

impl<T: Real> SampledTemplate<T> {
    pub fn new(template: &FieldTemplate<T>, step: T) -> Self {
        let per_class = template
            .elements()
            .map(|(class, element)| (class, sample_element(element, step)))
            .collect();
        Self { step, per_class }
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn samples(&self, class: FieldElementClass) -> Option<&[Vec3<T>]> {
        self.per_class.get(&class).map(Vec::as_slice)
    }

    pub fn classes(&self) -> impl Iterator<Item = FieldElementClass> + '_ {
        self.per_class.keys().copied()
    }
}

/// Closest point on a projected polyline to a query pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint<T: Real = f64> {
    pub distance: T,
    /// Sample index at the segment start (== `end` for an isolated vertex).
    pub start: usize,
    pub end: usize,
    /// Interpolation parameter in [0, 1] between `start` and `end`.
    pub t: T,
    /// The closest pixel on the polyline.
    pub point: Vec2<T>,
}

/// An element's samples pushed through a camera; samples behind the camera
/// break the polyline.
#[derive(Debug, Clone)]
pub struct ProjectedPolyline<T: Real = f64> {
    pub pixels: Vec<Option<Vec2<T>>>,
}

impl<T: Real> ProjectedPolyline<T> {
    pub fn project(projector: &Projector<T>, world: &[Vec3<T>]) -> Self {
        Self { pixels: world.iter().map(|x| projector.project(x).ok()).collect() }
    }

    /// Minimum distance from `q` to the polyline of visible samples, or None
    /// when every sample is behind the camera.
    pub fn closest(&self, q: &Vec2<T>) -> Option<ClosestPoint<T>> {
        let mut best: Option<ClosestPoint<T>> = None;
        let mut consider = |cand: ClosestPoint<T>| match &best {
            Some(b) if b.distance <= cand.distance => {}
            _ => best = Some(cand),
        };
        for (i, pix) in self.pixels.iter().enumerate() {
            if let Some(p) = pix {
                consider(ClosestPoint { distance: (q - p).norm(), start: i, end: i, t: T::zero(), point: *p });
            }
        }
        for i in 0..self.pixels.len().saturating_sub(1) {
            if let (Some(a), Some(b)) = (self.pixels[i], self.pixels[i + 1]) {
                let ab = b - a;
                let len2 = ab.norm_squared();
                if len2 < T::c(1e-24) {
                    continue;
                }
                let t = (q - a).dot(&ab) / len2;
                if t > T::zero() && t < T::one() {
                    let point = a + ab * t;
                    consider(ClosestPoint { distance: (q - point).norm(), start: i, end: i + 1, t, point });
                }
            }
        }
        best
    }
}

/// Distance in pixels from `pixel` to the projection of `element`, sampled at
/// `step` meters.
pub fn distance_to_projected_element<T: Real>(
    cam: &CameraState<T>,
    element: &GeometricElement<T>,
    pixel: &Vec2<T>,
    step: T,
) -> Result<T, FieldError> {
    let world = sample_element(element, step);
    let projector = Projector::new(cam);
    let poly = ProjectedPolyline::project(&projector, &world);
    poly.closest(pixel).map(|c| c.distance).ok_or(FieldError::FullyBehind)
}

/// Named template points usable as 2D-3D correspondences: corners, mark
/// points, line junctions, arc ends, goal-frame joints. Ids are stable
/// snake_case strings (see README for the full catalog).
pub fn keypoint_catalog(dims: &FieldDimensions<f64>) -> BTreeMap<String, (FieldElementClass, Vec3<f64>)> {
    let l2 = dims.length * 0.5;
    let w2 = dims.width * 0.5;
    let pa = PENALTY_AREA_WIDTH_M * 0.5;
    let ga = GOAL_AREA_WIDTH_M * 0.5;
    let gp = GOAL_WIDTH_M * 0.5;
    let cos0 = (PENALTY_AREA_DEPTH_M - PENALTY_SPOT_M) / CIRCLE_RADIUS_M;
    let arc_y = CIRCLE_RADIUS_M * (1.0 - cos0 * cos0).sqrt();
    let g = |x: f64, y: f64| Vec3::new(x, y, 0.0);

    let mut out = BTreeMap::new();
    let mut put = |id: &str, class: FieldElementClass, p: Vec3<f64>| {
        out.insert(id.to_string(), (class, p));
    };

    put("corner_left_top", GoalLineLeft, g(-l2, -w2));
    put("corner_left_bottom", GoalLineLeft, g(-l2, w2));
    put("corner_right_top", GoalLineRight, g(l2, -w2));
    put("corner_right_bottom", GoalLineRight, g(l2, w2));
    put("halfway_top", HalfwayLine, g(0.0, -w2));
    put("halfway_bottom", HalfwayLine, g(0.0, w2));
    put("center_mark", CenterMark, g(0.0, 0.0));
    put("penalty_mark_left", PenaltyMarkLeft, g(-l2 + PENALTY_SPOT_M, 0.0));
    put("penalty_mark_right", PenaltyMarkRight, g(l2 - PENALTY_SPOT_M, 0.0));
    put("center_circle_top", CenterCircle, g(0.0, -CIRCLE_RADIUS_M));
    put("center_circle_bottom", CenterCircle, g(0.0, CIRCLE_RADIUS_M));

    put("penalty_area_left_main_top", PenaltyAreaLeftMain, g(-l2 + PENALTY_AREA_DEPTH_M, -pa));
    put("penalty_area_left_main_bottom", PenaltyAreaLeftMain, g(-l2 + PENALTY_AREA_DEPTH_M, pa));
    put("penalty_area_left_goal_top", PenaltyAreaLeftTop, g(-l2, -pa));
    put("penalty_area_left_goal_bottom", PenaltyAreaLeftBottom, g(-l2, pa));
    put("penalty_area_right_main_top", PenaltyAreaRightMain, g(l2 - PENALTY_AREA_DEPTH_M, -pa));
    put("penalty_area_right_main_bottom", PenaltyAreaRightMain, g(l2 - PENALTY_AREA_DEPTH_M, pa));
    put("penalty_area_right_goal_top", PenaltyAreaRightTop, g(l2, -pa));
    put("penalty_area_right_goal_bottom", PenaltyAreaRightBottom, g(l2, pa));

    put("goal_area_left_main_top", GoalAreaLeftMain, g(-l2 + GOAL_AREA_DEPTH_M, -ga));
    put("goal_area_left_main_bottom", GoalAreaLeftMain, g(-l2 + GOAL_AREA_DEPTH_M, ga));
    put("goal_area_left_goal_top", GoalAreaLeftTop, g(-l2, -ga));
    put("goal_area_left_goal_bottom", GoalAreaLeftBottom, g(-l2, ga));
    put("goal_area_right_main_top", GoalAreaRightMain, g(l2 - GOAL_AREA_DEPTH_M, -ga));
    put("goal_area_right_main_bottom", GoalAreaRightMain, g(l2 - GOAL_AREA_DEPTH_M, ga));
    put("goal_area_right_goal_top", GoalAreaRightTop, g(l2, -ga));
    put("goal_area_right_goal_bottom", GoalAreaRightBottom, g(l2, ga));

    put("penalty_arc_left_top", PenaltyArcLeft, g(-l2 + PENALTY_AREA_DEPTH_M, -arc_y));
    put("penalty_arc_left_bottom", PenaltyArcLeft, g(-l2 + PENALTY_AREA_DEPTH_M, arc_y));
    put("penalty_arc_right_top", PenaltyArcRight, g(l2 - PENALTY_AREA_DEPTH_M, -arc_y));
    put("penalty_arc_right_bottom", PenaltyArcRight, g(l2 - PENALTY_AREA_DEPTH_M, arc_y));

    put("goal_left_post_left_base", GoalLeftPostLeft, g(-l2, -gp));
    put("goal_left_post_right_base", GoalLeftPostRight, g(-l2, gp));
    put("goal_left_post_left_top", GoalLeftPostLeft, Vec3::new(-l2, -gp, -GOAL_HEIGHT_M));
    put("goal_left_post_right_top", GoalLeftPostRight, Vec3::new(-l2, gp, -GOAL_HEIGHT_M));
    put("goal_right_post_left_base", GoalRightPostLeft, g(l2, -gp));
    put("goal_right_post_right_base", GoalRightPostRight, g(l2, gp));
    put("goal_right_post_left_top", GoalRightPostLeft, Vec3::new(l2, -gp, -GOAL_HEIGHT_M));
    put("goal_right_post_right_top", GoalRightPostRight, Vec3::new(l2, gp, -GOAL_HEIGHT_M));

    out
}
