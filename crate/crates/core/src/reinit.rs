//! Two-point reinitialization: focal length from a pair of 2D-3D
//! correspondences with the focal point pinned at the tripod rotation
//! center, iterative pan/tilt steering, RANSAC over the available
//! keypoints, and a final marking-based refine without the flow term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElementClass, SampledTemplate};
use crate::geometry::{pan_tilt_for_direction, CameraState};
use crate::optimize::{self, MarkingPoints, SolveToggles, SolverSettings};
use crate::tripod::TripodRig;
use crate::{Vec2, Vec3};

/// An image point matched to a named world point of the field template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence2D3D {
    pub pixel: Vec2<f64>,
    pub world: Vec3<f64>,
    pub class: FieldElementClass,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReinitError {
    #[error("fewer than two correspondences")]
    TooFewCorrespondences,
    #[error("no hypothesis reached two inliers")]
    NoConsensus,
    #[error("no focal length in range matches the subtended angle")]
    NoRoot,
    #[error("correspondence rays are degenerate")]
    DegenerateRays,
    #[error("barycenter coincides with the camera center")]
    BarycenterAtCamera,
}

/// RANSAC and pan/tilt-iteration knobs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ReinitSettings {
    /// Inlier reprojection threshold, pixels.
    pub tau_px: f64,
    pub max_hypotheses: usize,
    /// Stop enumerating once this inlier ratio is reached.
    pub early_exit_ratio: f64,
    /// Apply the literal per-correspondence sum in the pan/tilt updates
    /// instead of the mean (overshoots for many correspondences).
    pub sum_updates: bool,
    pub f_min_px: f64,
    pub f_max_px: f64,
}

impl Default for ReinitSettings {
    fn default() -> Self {
        Self {
            tau_px: 10.0,
            max_hypotheses: 200,
            early_exit_ratio: 0.8,
            sum_updates: false,
            f_min_px: 100.0,
            f_max_px: 50000.0,
        }
    }
}

/// Focal length such that the angle subtended by the two image points equals
/// the angle between the world points seen from `center`. Distortion is
/// ignored at this stage. Solved by a log-spaced scan plus bisection on the
/// cos-angle mismatch.
pub fn estimate_focal_two_points(
    c1: &Correspondence2D3D,
    c2: &Correspondence2D3D,
    center: &Vec3<f64>,
    principal_point: &Vec2<f64>,
    settings: &ReinitSettings,
) -> Result<f64, ReinitError> {
    let w1 = c1.world - center;
    let w2 = c2.world - center;
    if (c1.world - c2.world).norm() < 1e-9 || w1.norm() < 1e-9 || w2.norm() < 1e-9 {
        return Err(ReinitError::DegenerateRays);
    }
    let cos_world = (w1.dot(&w2) / (w1.norm() * w2.norm())).clamp(-1.0, 1.0);
    let angle = cos_world.acos();
    if !(1e-4..=std::f64::consts::PI - 1e-4).contains(&angle) {
        return Err(ReinitError::DegenerateRays);
    }

    let u1 = c1.pixel - principal_point;
    let u2 = c2.pixel - principal_point;
    let (a, b, c) = (u1.dot(&u2), u1.norm_squared(), u2.norm_squared());
    let mismatch = |f: f64| {
        let f2 = f * f;
        (a + f2) / ((b + f2) * (c + f2)).sqrt() - cos_world
    };

    const SCAN: usize = 256;
    let log_min = settings.f_min_px.ln();
    let log_max = settings.f_max_px.ln();
    let grid = |i: usize| (log_min + (log_max - log_min) * i as f64 / SCAN as f64).exp();
    let mut prev_f = grid(0);
    let mut prev_m = mismatch(prev_f);
    for i in 1..=SCAN {
        let f = grid(i);
        let m = mismatch(f);
        if prev_m == 0.0 {
            return Ok(prev_f);
        }
        if prev_m * m < 0.0 {
            // bisect the bracket
            let (mut lo, mut hi) = (prev_f, f);
            let (mut mlo, _) = (prev_m, m);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let mm = mismatch(mid);
                if mm == 0.0 || (hi - lo) < 1e-9 * mid {
                    return Ok(mid);
                }
                if mlo * mm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    mlo = mm;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_f = f;
        prev_m = m;
    }
    Err(ReinitError::NoRoot)
}

/// Pan and tilt that steer the optical axis toward the barycenter of the
/// world points (roll stays zero).
pub fn init_pan_tilt(
    correspondences: &[Correspondence2D3D],
    center: &Vec3<f64>,
) -> Result<(f64, f64), ReinitError> {
    if correspondences.is_empty() {
        return Err(ReinitError::BarycenterAtCamera);
    }
    let barycenter = correspondences.iter().fold(Vec3::zeros(), |acc, c| acc + c.world)
        / correspondences.len() as f64;
    let dir = barycenter - center;
    if dir.norm() < 1e-9 {
        return Err(ReinitError::BarycenterAtCamera);
    }
    pan_tilt_for_direction(&dir).map_err(|_| ReinitError::BarycenterAtCamera)
}

/// One pan/tilt correction from the current projections: the angle subtended
/// at focal length f by each pixel offset, averaged over correspondences.
/// The mean of full terms coincides with the halved two-term sum in the
/// two-point case and, unlike it, neither overshoots for many
/// correspondences nor crawls at half rate (five iterations must close a
/// barycenter-initialized start of hundreds of pixels). `sum_updates`
/// switches to the literal halved sum for comparison. With this rotation
/// convention a positive pan moves projections toward -x, so the pan term
/// uses the projection-minus-detection offset.
pub fn pan_tilt_update(
    correspondences: &[Correspondence2D3D],
    cam: &CameraState,
    sum_updates: bool,
) -> (f64, f64) {
    let mut dpan = 0.0;
    let mut dtilt = 0.0;
    let mut used = 0usize;
    for corr in correspondences {
        let Ok(proj) = cam.project(&corr.world) else { continue };
        dpan += (proj.x - corr.pixel.x).atan2(cam.f);
        dtilt += (corr.pixel.y - proj.y).atan2(cam.f);
        used += 1;
    }
    if used == 0 {
        return (0.0, 0.0);
    }
    if sum_updates {
        (0.5 * dpan, 0.5 * dtilt)
    } else {
        (dpan / used as f64, dtilt / used as f64)
    }
}

/// Up to five alternating pan/tilt corrections; stops early once the update
/// drops below 1e-6 rad.
pub fn refine_pan_tilt(
    correspondences: &[Correspondence2D3D],
    cam: &CameraState,
    sum_updates: bool,
) -> CameraState {
    let mut cam = *cam;
    for _ in 0..5 {
        let (dpan, dtilt) = pan_tilt_update(correspondences, &cam, sum_updates);
        cam.pan += dpan;
        cam.tilt += dtilt;
        if dpan.abs() + dtilt.abs() < 1e-6 {
            break;
        }
    }
    cam
}

/// Recovered camera plus the supporting inlier set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReinitResult {
    pub camera: CameraState,
    /// Indices into the keypoint list, ascending.
    pub inliers: Vec<usize>,
    /// RANSAC score of the winning hypothesis (inlier count).
    pub score: usize,
}

fn hypothesis_inliers(
    cam: &CameraState,
    keypoints: &[Correspondence2D3D],
    tau: f64,
) -> (Vec<usize>, f64) {
    let mut inliers = Vec::new();
    let mut err_sum = 0.0;
    for (i, kp) in keypoints.iter().enumerate() {
        if let Ok(proj) = cam.project(&kp.world) {
            let err = (proj - kp.pixel).norm();
            if err <= tau {
                inliers.push(i);
                err_sum += err;
            }
        }
    }
    let mre = if inliers.is_empty() { f64::INFINITY } else { err_sum / inliers.len() as f64 };
    (inliers, mre)
}

/// Two-point RANSAC reinitialization. Every hypothesis pins the focal point
/// to the rig rotation center with zero roll and zero distortion; the best
/// hypothesis (most inliers, ties by lower inlier MRE, then lower hypothesis
/// index) is refined against the frame's marking observations without the
/// flow term, with k1 free again unless the caller disabled distortion.
#[allow(clippy::too_many_arguments)]
pub fn reinitialize(
    keypoints: &[Correspondence2D3D],
    rig: &TripodRig,
    markings: &MarkingPoints,
    sampled: &SampledTemplate,
    solver: &SolverSettings,
    settings: &ReinitSettings,
    toggles: SolveToggles,
    image_w: u32,
    image_h: u32,
) -> Result<ReinitResult, ReinitError> {
    if keypoints.len() < 2 {
        return Err(ReinitError::TooFewCorrespondences);
    }
    let pp = Vec2::new(image_w as f64 * 0.5, image_h as f64 * 0.5);
    let early_exit = (settings.early_exit_ratio * keypoints.len() as f64).ceil() as usize;

    let mut best: Option<(Vec<usize>, f64, CameraState)> = None;
    let mut hypotheses = 0;
    'pairs: for i in 0..keypoints.len() {
        for j in i + 1..keypoints.len() {
            if hypotheses >= settings.max_hypotheses {
                break 'pairs;
            }
            hypotheses += 1;
            let pair = [keypoints[i], keypoints[j]];
            let Ok(f) = estimate_focal_two_points(&pair[0], &pair[1], &rig.t, &pp, settings) else {
                continue;
            };
            let Ok((pan, tilt)) = init_pan_tilt(&pair, &rig.t) else { continue };
            let cam = CameraState::new(f, 0.0, pan, tilt, 0.0, rig.t, image_w, image_h);
            let cam = refine_pan_tilt(&pair, &cam, settings.sum_updates);
            let (inliers, mre) = hypothesis_inliers(&cam, keypoints, settings.tau_px);
            let better = match &best {
                None => true,
                Some((bi, bmre, _)) => {
                    inliers.len() > bi.len() || (inliers.len() == bi.len() && mre < *bmre)
                }
            };
            if better {
                let exit = inliers.len() >= early_exit;
                best = Some((inliers, mre, cam));
                if exit {
                    break 'pairs;
                }
            }
        }
    }

    let (inliers, _, cam) = best.ok_or(ReinitError::NoConsensus)?;
    if inliers.len() < 2 {
        return Err(ReinitError::NoConsensus);
    }

    // polish the winning hypothesis on its full inlier set, still with
    // C = rig.T, roll = 0, k1 = 0
    let inlier_set: Vec<_> = inliers.iter().map(|&i| keypoints[i]).collect();
    let cam = refine_pan_tilt(&inlier_set, &cam, settings.sum_updates);

    // final refine on the markings, flow off
    let marking_count: usize = markings.values().map(Vec::len).sum();
    let camera = if marking_count >= 4 {
        let toggles = SolveToggles { use_flow: false, ..toggles };
        match optimize::solve(&cam, markings, &[], sampled, Some(rig), solver, toggles) {
            Ok(outcome) => outcome.camera,
            Err(_) => cam,
        }
    } else {
        cam
    };

    let (final_inliers, _) = hypothesis_inliers(&camera, keypoints, settings.tau_px);
    let score = final_inliers.len().max(inliers.len());
    Ok(ReinitResult { camera, inliers: final_inliers, score })
}
