//! Pan-tilt head model: rotation center `T`, optical-axis offset `δ`, the
//! derived axis point `O*`, the soft constraint residual, and rig fitting.
//!
//! The head model states that some point `O` on the camera's optical axis
//! stays at distance `δ` from the fixed rotation center `T` as the camera
//! pans, tilts, and zooms; the focal point travels along the axis as
//! `C = T - δ·r2 + λ·r3`. The constraint residual measures how far an
//! estimated camera is from that family.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{param, rotation_derivatives, CameraState};
use crate::optimize::{solve_lm, Evaluation, Kernel, LmError, RobustProblem, SolverSettings};
use crate::{Real, Vec3};

/// Rotation center and head offset, fixed for a whole sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripodRig<T: Real = f64> {
    /// Rotation center, meters, world frame (z < 0 above ground).
    pub t: Vec3<T>,
    /// Distance from the rotation center to the optical axis, meters.
    pub delta: T,
}

/// Per-camera quantities derived from the rig.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripodDerived<T: Real = f64> {
    /// Closest point to `T` on the camera optical axis.
    pub o_star: Vec3<T>,
    /// Signed distance from `O*` to the focal point along `r3`.
    pub lambda: T,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TripodError {
    #[error("camera set has insufficient angular diversity to observe the rig")]
    InsufficientDiversity,
    #[error("rig fit failed: {0}")]
    Solver(#[from] LmError),
}

/// Orthogonal projection of `T` onto the camera optical axis.
pub fn optical_axis_point<T: Real>(cam: &CameraState<T>, rig: &TripodRig<T>) -> TripodDerived<T> {
    let r3 = cam.optical_axis();
    let s = (rig.t - cam.c).dot(&r3);
    let o_star = cam.c + r3 * s;
    TripodDerived { o_star, lambda: (cam.c - o_star).dot(&r3) }
}

/// Signed constraint residual `δ - ‖O* - T‖` in meters.
///
/// Positive means the optical axis passes closer to `T` than the head
/// geometry allows, negative that it strays farther. Squared by the solver.
pub fn tripod_residual<T: Real>(cam: &CameraState<T>, rig: &TripodRig<T>) -> T {
    let derived = optical_axis_point(cam, rig);
    rig.delta - (derived.o_star - rig.t).norm()
}

/// Residual plus its gradient over the eight camera parameters
/// ([`crate::geometry::param`] layout). Only pan, tilt, and the focal point
/// move the optical axis, so the f/k1/roll entries are zero.
pub fn tripod_residual_jacobian(cam: &CameraState, rig: &TripodRig) -> (f64, [f64; 8]) {
    let r3 = cam.optical_axis();
    let u = rig.t - cam.c;
    let s = u.dot(&r3);
    let g_vec = cam.c + r3 * s - rig.t; // O* - T
    let g = g_vec.norm();
    let res = rig.delta - g;

    let mut grad = [0.0; 8];
    if g < 1e-12 {
        // T on the axis: distance gradient undefined, leave the row flat
        return (res, grad);
    }
    let dg_dc = g_vec / g;
    grad[param::CX] = -dg_dc.x;
    grad[param::CY] = -dg_dc.y;
    grad[param::CZ] = -dg_dc.z;
    let dr = rotation_derivatives(cam.pan, cam.tilt, cam.roll);
    for (idx, m) in [(param::PAN, &dr[0]), (param::TILT, &dr[1])] {
        let dr3 = Vec3::new(m[(2, 0)], m[(2, 1)], m[(2, 2)]);
        grad[idx] = s / g * u.dot(&dr3);
    }
    (res, grad)
}

struct RigFitProblem {
    axes: Vec<(Vec3<f64>, Vec3<f64>)>, // (focal point, optical axis direction)
}

impl RobustProblem for RigFitProblem {
    fn num_params(&self) -> usize {
        4
    }

    fn evaluate(&self, params: &DVector<f64>, with_jacobian: bool) -> Evaluation {
        let t = Vec3::new(params[0], params[1], params[2]);
        let delta = params[3].max(0.0);
        let n = self.axes.len();
        let mut residuals = DVector::zeros(n);
        let mut jacobian = with_jacobian.then(|| DMatrix::zeros(n, 4));
        let mut blocks = Vec::with_capacity(n);
        for (i, (c, r3)) in self.axes.iter().enumerate() {
            let u = t - c;
            let g_vec = u - r3 * u.dot(r3); // T - O*
            let g = g_vec.norm();
            residuals[i] = delta - g;
            blocks.push((i, 1, Kernel::Quadratic));
            if let Some(jac) = jacobian.as_mut() {
                if g > 1e-12 {
                    let d = -g_vec / g;
                    jac[(i, 0)] = d.x;
                    jac[(i, 1)] = d.y;
                    jac[(i, 2)] = d.z;
                }
                jac[(i, 3)] = 1.0;
            }
        }
        Evaluation { residuals, blocks, jacobian }
    }
}

/// Fits `(T, δ)` to a set of estimated cameras by nonlinear least squares on
/// the constraint residual. Requires at least 10 cameras spanning 2° or more
/// of pan (or tilt); below that the axis decomposition is rank deficient.
pub fn fit_rig(cameras: &[CameraState]) -> Result<TripodRig, TripodError> {
    if cameras.len() < 10 {
        return Err(TripodError::InsufficientDiversity);
    }
    let span = |mut it: Box<dyn Iterator<Item = f64> + '_>| {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in it.by_ref() {
            min = min.min(v);
            max = max.max(v);
        }
        max - min
    };
    let threshold = 2.0_f64.to_radians();
    let pan_span = span(Box::new(cameras.iter().map(|c| c.pan)));
    let tilt_span = span(Box::new(cameras.iter().map(|c| c.tilt)));
    if pan_span < threshold && tilt_span < threshold {
        return Err(TripodError::InsufficientDiversity);
    }

    let problem = RigFitProblem {
        axes: cameras.iter().map(|c| (c.c, c.optical_axis())).collect(),
    };
    let settings = SolverSettings { max_iterations: 100, ..SolverSettings::default() };

    // Two starts, best final cost wins. The mean-focal-point start can fall
    // into a folded local minimum where all axes nearly concur below the true
    // center (distance δ·cos²θ for a pure pan sweep), so a closed-form start
    // is derived first: the head model C = T - δ·r2 + λ·r3 confines T to each
    // camera's (r2, r3) plane, giving the linear system Σ r1·r1ᵀ T = Σ r1 (r1·C).
    let mut candidates = Vec::new();
    if let Some(planar) = plane_intersection_start(cameras) {
        candidates.push(planar);
    }
    let mean_c = cameras.iter().fold(Vec3::zeros(), |acc, c| acc + c.c) / cameras.len() as f64;
    candidates.push(DVector::from_vec(vec![mean_c.x, mean_c.y, mean_c.z, 0.3]));

    let mut best: Option<LmOutcome> = None;
    for initial in candidates {
        let outcome = solve_lm(&problem, initial, &settings)?;
        if best.as_ref().is_none_or(|b| outcome.cost < b.cost) {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one start");
    Ok(TripodRig {
        t: Vec3::new(best.params[0], best.params[1], best.params[2]),
        delta: best.params[3].max(0.0),
    })
}

use crate::optimize::LmOutcome;

/// Closed-form start from the model equation: `T - C = δ·r2 - λ·r3` gives two
/// linear constraints per camera on `(T, δ)`, namely `r1ᵀT = r1ᵀC` and
/// `r2ᵀT - δ = r2ᵀC`. Solved in least squares via SVD (a pure pan sweep
/// leaves a rank-3 system; the pseudo-inverse then picks one member of the
/// unobservable vertical family).
fn plane_intersection_start(cameras: &[CameraState]) -> Option<DVector<f64>> {
    let mut a = nalgebra::Matrix4::<f64>::zeros();
    let mut b = nalgebra::Vector4::<f64>::zeros();
    for cam in cameras {
        let r = cam.rotation();
        let r1 = nalgebra::Vector4::new(r[(0, 0)], r[(0, 1)], r[(0, 2)], 0.0);
        let r2 = nalgebra::Vector4::new(r[(1, 0)], r[(1, 1)], r[(1, 2)], -1.0);
        let c1 = r[(0, 0)] * cam.c.x + r[(0, 1)] * cam.c.y + r[(0, 2)] * cam.c.z;
        let c2 = r[(1, 0)] * cam.c.x + r[(1, 1)] * cam.c.y + r[(1, 2)] * cam.c.z;
        a += r1 * r1.transpose() + r2 * r2.transpose();
        b += r1 * c1 + r2 * c2;
    }
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-9).ok()?;
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(DVector::from_vec(vec![sol[0], sol[1], sol[2], sol[3].max(0.0)]))
}
