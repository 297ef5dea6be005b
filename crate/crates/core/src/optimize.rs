//! Robust nonlinear least squares: Cauchy-weighted residual assembly for the
//! marking, optical-flow, and tripod terms, and a Levenberg-Marquardt loop
//! over the eight camera parameters.
//!
//! The robust kernel is realized as IRLS-within-LM: residuals are grouped in
//! blocks (scalar marking distances, 2-vector flow reprojections, the scalar
//! tripod term), each block gets a weight from its kernel refreshed every
//! iteration, and steps are accepted only when the exact robust cost
//! decreases, so the accepted-cost sequence is non-increasing by
//! construction. Everything is sequential and allocation-order deterministic:
//! identical inputs produce bit-identical outputs.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElementClass, ProjectedPolyline, SampledTemplate};
use crate::geometry::{CameraState, JacProjector, K1_LIMIT, NUM_PARAMS};
use crate::observe::LiftedFlowPoint;
use crate::tripod::{tripod_residual_jacobian, TripodRig};
use crate::Vec2;

/// Solver hyperparameters; all exposed through the run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Weight of the tripod constraint residual (meters-to-pixels balance).
    pub omega: f64,
    /// Cauchy kernel scale for marking and flow residuals, pixels.
    pub cauchy_scale_px: f64,
    /// Residual assigned to geometry that projects behind the camera, pixels.
    pub r_cap_px: f64,
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    /// Relative step-norm tolerance that stops the iteration.
    pub step_tol: f64,
    /// Relative cost-decrease tolerance that stops the iteration.
    pub cost_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            omega: 100.0,
            cauchy_scale_px: 3.0,
            r_cap_px: 50.0,
            max_iterations: 30,
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 10.0,
            step_tol: 1e-10,
            cost_tol: 1e-12,
        }
    }
}

/// Robust kernel applied to a residual block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// Plain least squares: cost `n²/2`, weight 1.
    Quadratic,
    /// Cauchy loss with the given scale: logarithmic cost growth.
    Cauchy(f64),
}

impl Kernel {
    pub fn cost(&self, norm: f64) -> f64 {
        match *self {
            Kernel::Quadratic => 0.5 * norm * norm,
            Kernel::Cauchy(c) => {
                let v = norm / c;
                0.5 * c * c * (1.0 + v * v).ln()
            }
        }
    }

    /// IRLS weight `ρ'(n)/n`, in (0, 1].
    pub fn weight(&self, norm: f64) -> f64 {
        match *self {
            Kernel::Quadratic => 1.0,
            Kernel::Cauchy(c) => {
                let v = norm / c;
                1.0 / (1.0 + v * v)
            }
        }
    }
}

/// Cauchy cost contribution and IRLS weight of a scalar residual.
pub fn robustify(residual: f64, scale: f64) -> (f64, f64) {
    let k = Kernel::Cauchy(scale);
    (k.cost(residual.abs()), k.weight(residual.abs()))
}

/// One residual evaluation: flat residual vector, block structure (offset,
/// length, kernel), and optionally the Jacobian (rows follow the residuals).
pub struct Evaluation {
    pub residuals: DVector<f64>,
    pub blocks: Vec<(usize, usize, Kernel)>,
    pub jacobian: Option<DMatrix<f64>>,
}

impl Evaluation {
    /// Total robust cost.
    pub fn cost(&self) -> f64 {
        self.blocks
            .iter()
            .map(|&(off, len, kernel)| {
                let norm = self.residuals.rows(off, len).norm();
                kernel.cost(norm)
            })
            .sum()
    }

    /// Per-row IRLS weights (block weight repeated over its rows).
    pub fn row_weights(&self) -> DVector<f64> {
        let mut w = DVector::zeros(self.residuals.len());
        for &(off, len, kernel) in &self.blocks {
            let weight = kernel.weight(self.residuals.rows(off, len).norm());
            for i in off..off + len {
                w[i] = weight;
            }
        }
        w
    }

    /// Gradient of the robust cost, `Jᵀ W r`.
    pub fn gradient(&self) -> Option<DVector<f64>> {
        let jac = self.jacobian.as_ref()?;
        let w = self.row_weights();
        Some(jac.transpose() * self.residuals.component_mul(&w))
    }
}

/// A residual problem the LM core can minimize.
pub trait RobustProblem {
    fn num_params(&self) -> usize;
    fn evaluate(&self, params: &DVector<f64>, with_jacobian: bool) -> Evaluation;
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum LmError {
    #[error("cost is not finite")]
    Diverged,
    #[error("normal equations singular even at maximum damping")]
    RankDeficient,
}

pub struct LmOutcome {
    pub params: DVector<f64>,
    pub cost: f64,
    pub iterations: usize,
    /// Accepted costs, starting with the initial one; non-increasing.
    pub cost_history: Vec<f64>,
}

const MU_MAX: f64 = 1e12;
const MU_MIN: f64 = 1e-12;

/// Levenberg-Marquardt with per-iteration IRLS reweighting. Steps are
/// accepted only on exact robust-cost decrease; the returned parameters never
/// cost more than the initial ones.
pub fn solve_lm(
    problem: &impl RobustProblem,
    initial: DVector<f64>,
    settings: &SolverSettings,
) -> Result<LmOutcome, LmError> {
    let n = problem.num_params();
    let mut params = initial;
    let mut eval = problem.evaluate(&params, true);
    let mut cost = eval.cost();
    if !cost.is_finite() {
        return Err(LmError::Diverged);
    }
    let mut history = vec![cost];
    let mut mu = settings.initial_damping;
    let mut iterations = 0;

    'outer: while iterations < settings.max_iterations {
        iterations += 1;
        let jac = eval.jacobian.as_ref().expect("jacobian requested");
        let w = eval.row_weights();
        let mut weighted = jac.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let h = jac.transpose() * &weighted;
        let g = jac.transpose() * eval.residuals.component_mul(&w);
        if !g.iter().all(|v| v.is_finite()) || !h.iter().all(|v| v.is_finite()) {
            return Err(LmError::RankDeficient);
        }

        loop {
            // Marquardt scaling: damp proportionally to the diagonal so the
            // strongly anisotropic focal/position valley still makes progress
            let mut damped = h.clone();
            for d in 0..n {
                damped[(d, d)] += mu * h[(d, d)].max(1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                mu *= settings.damping_up;
                if mu > MU_MAX {
                    return Err(LmError::RankDeficient);
                }
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial = &params + &step;
            let trial_eval = problem.evaluate(&trial, false);
            let trial_cost = trial_eval.cost();
            if trial_cost.is_finite() && trial_cost < cost {
                let small_step = step.norm() < settings.step_tol * (params.norm() + settings.step_tol);
                let small_drop = (cost - trial_cost) < settings.cost_tol * cost.max(1e-300);
                params = trial;
                cost = trial_cost;
                history.push(cost);
                mu = (mu / settings.damping_down).max(MU_MIN);
                if small_step || small_drop {
                    break 'outer;
                }
                eval = problem.evaluate(&params, true);
                break;
            }
            mu *= settings.damping_up;
            if mu > MU_MAX {
                // no descent direction improves the cost: local minimum
                break 'outer;
            }
        }
    }

    Ok(LmOutcome { params, cost, iterations, cost_history: history })
}

/// Which residual groups take part in a solve; `use_k1 = false` freezes the
/// distortion coefficient at its warm-start value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveToggles {
    pub use_flow: bool,
    pub use_tripod: bool,
    pub use_k1: bool,
}

impl Default for SolveToggles {
    fn default() -> Self {
        Self { use_flow: true, use_tripod: true, use_k1: true }
    }
}

pub struct SolveOutcome {
    pub camera: CameraState,
    pub cost: f64,
    pub iterations: usize,
    pub cost_history: Vec<f64>,
}

/// Condensed marking points per class, pixels.
pub type MarkingPoints = BTreeMap<FieldElementClass, Vec<Vec2<f64>>>;

// Parameter conditioning: f in units of 1000 px, k1 in units of 0.1,
// angles in radians, C in meters.
const PARAM_SCALE: [f64; NUM_PARAMS] = [1000.0, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];

/// The per-frame camera refinement problem over markings + flow + tripod.
pub struct CameraProblem<'a> {
    base: CameraState,
    markings: &'a MarkingPoints,
    flow: &'a [LiftedFlowPoint],
    sampled: &'a SampledTemplate,
    rig: Option<&'a TripodRig>,
    settings: &'a SolverSettings,
    free: Vec<usize>,
}

impl<'a> CameraProblem<'a> {
    pub fn new(
        initial: &CameraState,
        markings: &'a MarkingPoints,
        flow: &'a [LiftedFlowPoint],
        sampled: &'a SampledTemplate,
        rig: Option<&'a TripodRig>,
        settings: &'a SolverSettings,
        toggles: SolveToggles,
    ) -> Self {
        let free = (0..NUM_PARAMS)
            .filter(|&i| i != crate::geometry::param::K1 || toggles.use_k1)
            .collect();
        Self {
            base: *initial,
            markings,
            flow: if toggles.use_flow { flow } else { &[] },
            sampled,
            rig: if toggles.use_tripod { rig } else { None },
            settings,
            free,
        }
    }

    pub fn initial_params(&self) -> DVector<f64> {
        let native = native_params(&self.base);
        DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| native[i] / PARAM_SCALE[i]))
    }

    pub fn camera(&self, params: &DVector<f64>) -> CameraState {
        let mut native = native_params(&self.base);
        for (j, &i) in self.free.iter().enumerate() {
            native[i] = params[j] * PARAM_SCALE[i];
        }
        native[crate::geometry::param::K1] = native[crate::geometry::param::K1].clamp(-K1_LIMIT, K1_LIMIT);
        camera_from_native(&self.base, &native)
    }

    fn residual_count(&self) -> usize {
        let marks: usize = self.markings.values().map(Vec::len).sum();
        marks + 2 * self.flow.len() + usize::from(self.rig.is_some())
    }
}

fn native_params(cam: &CameraState) -> [f64; NUM_PARAMS] {
    [cam.f, cam.k1, cam.pan, cam.tilt, cam.roll, cam.c.x, cam.c.y, cam.c.z]
}

fn camera_from_native(base: &CameraState, native: &[f64; NUM_PARAMS]) -> CameraState {
    CameraState::new(
        native[0],
        native[1],
        native[2],
        native[3],
        native[4],
        crate::Vec3::new(native[5], native[6], native[7]),
        base.image_w,
        base.image_h,
    )
}

impl RobustProblem for CameraProblem<'_> {
    fn num_params(&self) -> usize {
        self.free.len()
    }

    fn evaluate(&self, params: &DVector<f64>, with_jacobian: bool) -> Evaluation {
        let cam = self.camera(params);
        let jp = JacProjector::new(&cam);
        let m = self.residual_count();
        let n = self.free.len();
        let mut residuals = DVector::zeros(m);
        let mut jacobian = with_jacobian.then(|| DMatrix::zeros(m, n));
        let mut blocks = Vec::new();
        let cauchy = Kernel::Cauchy(self.settings.cauchy_scale_px);
        let r_cap = self.settings.r_cap_px;
        let mut row = 0;

        let set_row = |jacobian: &mut Option<DMatrix<f64>>, row: usize, native_grad: &[f64; NUM_PARAMS]| {
            if let Some(jac) = jacobian.as_mut() {
                for (j, &i) in self.free.iter().enumerate() {
                    jac[(row, j)] = native_grad[i] * PARAM_SCALE[i];
                }
            }
        };

        for (class, points) in self.markings {
            let Some(world) = self.sampled.samples(*class) else { continue };
            let poly = ProjectedPolyline::project(jp.projector(), world);
            for q in points {
                blocks.push((row, 1, cauchy));
                match poly.closest(q) {
                    Some(cl) if cl.distance > 1e-12 => {
                        residuals[row] = cl.distance;
                        if with_jacobian {
                            let normal = (cl.point - q) / cl.distance;
                            let mut grad = [0.0; NUM_PARAMS];
                            if let Ok((_, ja)) = jp.project_with_jacobian(&world[cl.start]) {
                                let wa = 1.0 - cl.t;
                                for i in 0..NUM_PARAMS {
                                    grad[i] += wa * (normal.x * ja[(0, i)] + normal.y * ja[(1, i)]);
                                }
                            }
                            if cl.end != cl.start {
                                if let Ok((_, jb)) = jp.project_with_jacobian(&world[cl.end]) {
                                    for i in 0..NUM_PARAMS {
                                        grad[i] += cl.t * (normal.x * jb[(0, i)] + normal.y * jb[(1, i)]);
                                    }
                                }
                            }
                            set_row(&mut jacobian, row, &grad);
                        }
                    }
                    Some(cl) => {
                        // exactly on the polyline: flat direction
                        residuals[row] = cl.distance;
                    }
                    None => {
                        // element fully behind the camera: finite, gradient-free
                        residuals[row] = r_cap;
                    }
                }
                row += 1;
            }
        }

        for lifted in self.flow {
            blocks.push((row, 2, cauchy));
            match jp.project_with_jacobian(&lifted.x_prev) {
                Ok((pix, jac2)) => {
                    let e = pix - lifted.x_curr;
                    residuals[row] = e.x;
                    residuals[row + 1] = e.y;
                    if with_jacobian {
                        let mut gx = [0.0; NUM_PARAMS];
                        let mut gy = [0.0; NUM_PARAMS];
                        for i in 0..NUM_PARAMS {
                            gx[i] = jac2[(0, i)];
                            gy[i] = jac2[(1, i)];
                        }
                        set_row(&mut jacobian, row, &gx);
                        set_row(&mut jacobian, row + 1, &gy);
                    }
                }
                Err(_) => {
                    residuals[row] = r_cap;
                }
            }
            row += 2;
        }

        if let Some(rig) = self.rig {
            let (res, grad) = tripod_residual_jacobian(&cam, rig);
            residuals[row] = self.settings.omega * res;
            if with_jacobian {
                let mut scaled = grad;
                for v in &mut scaled {
                    *v *= self.settings.omega;
                }
                set_row(&mut jacobian, row, &scaled);
            }
            blocks.push((row, 1, Kernel::Quadratic));
        }

        Evaluation { residuals, blocks, jacobian }
    }
}

/// Marking residual list: per condensed point, the distance to the closest
/// point of its projected element; fully-behind classes contribute `r_cap`.
pub fn marking_residuals(
    cam: &CameraState,
    markings: &MarkingPoints,
    sampled: &SampledTemplate,
    r_cap: f64,
) -> Vec<f64> {
    let jp = JacProjector::new(cam);
    let mut out = Vec::new();
    for (class, points) in markings {
        let Some(world) = sampled.samples(*class) else { continue };
        let poly = ProjectedPolyline::project(jp.projector(), world);
        for q in points {
            out.push(poly.closest(q).map_or(r_cap, |cl| cl.distance));
        }
    }
    out
}

/// Flow residual list: per lifted match, the 2-vector reprojection error
/// `π(X_prev) - x_curr`; behind-camera projections contribute `(r_cap, 0)`.
pub fn flow_residuals(cam: &CameraState, flow: &[LiftedFlowPoint], r_cap: f64) -> Vec<Vec2<f64>> {
    let projector = crate::geometry::Projector::new(cam);
    flow.iter()
        .map(|l| match projector.project(&l.x_prev) {
            Ok(pix) => pix - l.x_curr,
            Err(_) => Vec2::new(r_cap, 0.0),
        })
        .collect()
}

/// Refines the camera by robust LM over the enabled residual groups.
pub fn solve(
    initial: &CameraState,
    markings: &MarkingPoints,
    flow: &[LiftedFlowPoint],
    sampled: &SampledTemplate,
    rig: Option<&TripodRig>,
    settings: &SolverSettings,
    toggles: SolveToggles,
) -> Result<SolveOutcome, LmError> {
    let problem = CameraProblem::new(initial, markings, flow, sampled, rig, settings, toggles);
    let outcome = solve_lm(&problem, problem.initial_params(), settings)?;
    Ok(SolveOutcome {
        camera: problem.camera(&outcome.params),
        cost: outcome.cost,
        iterations: outcome.iterations,
        cost_history: outcome.cost_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_template, FieldDimensions};
    use crate::geometry::pan_tilt_for_direction;
    use crate::observe::LiftedFlowPoint;
    use crate::Vec3;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn truth_camera() -> CameraState {
        let c = Vec3::new(0.8, 54.6, -11.8);
        let target = Vec3::new(4.0, -2.0, 0.0);
        let (pan, tilt) = pan_tilt_for_direction(&(target - c)).unwrap();
        CameraState::new(2200.0, -0.05, pan, tilt, 0.004, c, 1920, 1080)
    }

    fn sampled_template() -> SampledTemplate {
        let template = build_template(&FieldDimensions::standard()).unwrap();
        SampledTemplate::new(&template, 0.1)
    }

    /// Exact marking observations: projected template samples, thinned.
    fn exact_markings(cam: &CameraState, sampled: &SampledTemplate) -> MarkingPoints {
        let mut out = MarkingPoints::new();
        for class in crate::field::FieldElementClass::ALL {
            let Some(world) = sampled.samples(class) else { continue };
            let mut points = Vec::new();
            for (i, x) in world.iter().enumerate() {
                if i % 40 != 0 {
                    continue;
                }
                if let Ok(pix) = cam.project(x) {
                    if cam.contains_pixel(&pix) {
                        points.push(pix);
                    }
                }
            }
            if points.len() >= 2 {
                out.insert(class, points);
            }
        }
        out
    }

    fn exact_flow(prev: &CameraState, curr: &CameraState) -> Vec<LiftedFlowPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut out = Vec::new();
        while out.len() < 120 {
            let g = Vec3::new(rng.gen_range(-50.0..50.0), rng.gen_range(-33.0..33.0), 0.0);
            let (Ok(p0), Ok(p1)) = (prev.project(&g), curr.project(&g)) else { continue };
            if prev.contains_pixel(&p0) && curr.contains_pixel(&p1) {
                out.push(LiftedFlowPoint { x_prev: g, x_curr: p1 });
            }
        }
        out
    }

    #[test]
    fn robustify_reference_values() {
        let (cost, weight) = robustify(0.0, 3.0);
        assert_eq!(cost, 0.0);
        assert_eq!(weight, 1.0);

        let (_, weight) = robustify(3.0, 3.0);
        assert_relative_eq!(weight, 0.5, epsilon = 1e-15);

        let (cost, weight) = robustify(30.0, 3.0);
        assert_relative_eq!(weight, 1.0 / 101.0, epsilon = 1e-12);
        // logarithmic growth: far below the quadratic 0.5 * 30^2 = 450
        assert_relative_eq!(cost, 0.5 * 9.0 * 101.0f64.ln(), epsilon = 1e-12);
        assert!(cost < 25.0);
    }

    #[test]
    fn marking_residuals_vanish_at_truth() {
        let cam = truth_camera();
        let sampled = sampled_template();
        let markings = exact_markings(&cam, &sampled);
        assert!(!markings.is_empty());
        let residuals = marking_residuals(&cam, &markings, &sampled, 50.0);
        assert!(!residuals.is_empty());
        for r in residuals {
            assert!(r < 1e-9, "residual {r}");
        }
    }

    #[test]
    fn marking_residual_matches_constructed_offset() {
        let cam = truth_camera();
        let sampled = sampled_template();
        // a point 3 px away from the projected halfway line
        let world = Vec3::new(0.0, 5.0, 0.0);
        let pix = cam.project(&world).unwrap();
        let mut markings = MarkingPoints::new();
        markings.insert(FieldElementClass::HalfwayLine, vec![pix + Vec2::new(3.0, 0.0)]);
        let residuals = marking_residuals(&cam, &markings, &sampled, 50.0);
        assert_eq!(residuals.len(), 1);
        // the projected line is not exactly vertical in the image, so allow
        // the sampling slack
        assert!((residuals[0] - 3.0).abs() < 0.05, "residual {}", residuals[0]);
    }

    #[test]
    fn marking_residuals_empty_input() {
        let cam = truth_camera();
        let sampled = sampled_template();
        assert!(marking_residuals(&cam, &MarkingPoints::new(), &sampled, 50.0).is_empty());
    }

    #[test]
    fn marking_residuals_capped_when_behind() {
        let mut cam = truth_camera();
        let sampled = sampled_template();
        // aim straight up: the whole pitch is behind the view direction
        cam.tilt = 3.1;
        cam.pan = 0.0;
        let mut markings = MarkingPoints::new();
        markings.insert(FieldElementClass::CenterMark, vec![Vec2::new(960.0, 540.0)]);
        let residuals = marking_residuals(&cam, &markings, &sampled, 50.0);
        assert_eq!(residuals, vec![50.0]);
    }

    #[test]
    fn flow_residuals_zero_on_round_trip() {
        let cam = truth_camera();
        let flow = exact_flow(&cam, &cam);
        for e in flow_residuals(&cam, &flow, 50.0) {
            assert!(e.norm() < 1e-9);
        }
    }

    #[test]
    fn flow_residuals_match_small_pan_magnitude() {
        let prev = truth_camera();
        let mut curr = prev;
        curr.pan += 0.5_f64.to_radians();
        let flow = exact_flow(&prev, &curr);
        // evaluated at the true current camera: consistent
        for e in flow_residuals(&curr, &flow, 50.0) {
            assert!(e.norm() < 1e-3);
        }
        // evaluated at the stale previous camera: shifted by about f·tan(0.5°)
        let expected = prev.f * 0.5_f64.to_radians().tan();
        let residuals = flow_residuals(&prev, &flow, 50.0);
        let mean: f64 = residuals.iter().map(|e| e.norm()).sum::<f64>() / residuals.len() as f64;
        assert!(
            (mean - expected).abs() < 0.25 * expected,
            "mean {mean} vs expected {expected}"
        );
    }

    fn assert_close_to_truth(solved: &CameraState, truth: &CameraState, scale: f64) {
        assert!((solved.pan - truth.pan).abs() < scale * 0.005_f64.to_radians(), "pan");
        assert!((solved.tilt - truth.tilt).abs() < scale * 0.005_f64.to_radians(), "tilt");
        assert!((solved.f - truth.f).abs() / truth.f < scale * 0.001, "f");
    }

    #[test]
    fn solve_recovers_truth_from_perturbed_start() {
        let truth = truth_camera();
        let sampled = sampled_template();
        let markings = exact_markings(&truth, &sampled);
        let rig = TripodRig { t: truth.c, delta: 0.0 };

        let mut initial = truth;
        initial.pan += 0.2_f64.to_radians();
        initial.tilt += 0.1_f64.to_radians();
        initial.f *= 1.02;

        let settings = SolverSettings::default();
        let outcome = solve(
            &initial,
            &markings,
            &[],
            &sampled,
            Some(&rig),
            &settings,
            SolveToggles { use_flow: false, use_tripod: false, use_k1: true },
        )
        .unwrap();

        assert_close_to_truth(&outcome.camera, &truth, 1.0);
        let residuals = marking_residuals(&outcome.camera, &markings, &sampled, 50.0);
        let mre = residuals.iter().sum::<f64>() / residuals.len() as f64;
        assert!(mre < 0.05, "MRE {mre}");
    }

    #[test]
    fn solve_with_flow_and_tripod_recovers_truth() {
        let rig = TripodRig { t: Vec3::new(0.0, 55.0, -12.0), delta: 0.2 };
        let truth = {
            let r = crate::geometry::rotation_from_angles(0.05, 1.34, 0.002);
            let r2 = Vec3::new(r[(1, 0)], r[(1, 1)], r[(1, 2)]);
            let r3 = Vec3::new(r[(2, 0)], r[(2, 1)], r[(2, 2)]);
            CameraState::new(2400.0, -0.04, 0.05, 1.34, 0.002, rig.t - r2 * rig.delta + r3 * 1.2, 1920, 1080)
        };
        let sampled = sampled_template();
        let markings = exact_markings(&truth, &sampled);
        let mut prev = truth;
        prev.pan -= 0.1_f64.to_radians();
        let flow = exact_flow(&prev, &truth);

        let settings = SolverSettings::default();
        let outcome = solve(&prev, &markings, &flow, &sampled, Some(&rig), &settings, SolveToggles::default())
            .unwrap();
        assert_close_to_truth(&outcome.camera, &truth, 1.0);
        assert!(crate::tripod::tripod_residual(&outcome.camera, &rig).abs() <= 1e-3);
    }

    #[test]
    fn zero_omega_matches_unconstrained_bit_for_bit() {
        let truth = truth_camera();
        let sampled = sampled_template();
        let markings = exact_markings(&truth, &sampled);
        let rig = TripodRig { t: Vec3::new(0.0, 55.0, -12.0), delta: 0.3 };
        let mut initial = truth;
        initial.pan += 0.1_f64.to_radians();

        let mut settings = SolverSettings::default();
        settings.omega = 0.0;
        let with_zero_omega = solve(
            &initial,
            &markings,
            &[],
            &sampled,
            Some(&rig),
            &settings,
            SolveToggles { use_flow: false, use_tripod: true, use_k1: true },
        )
        .unwrap();
        let unconstrained = solve(
            &initial,
            &markings,
            &[],
            &sampled,
            Some(&rig),
            &settings,
            SolveToggles { use_flow: false, use_tripod: false, use_k1: true },
        )
        .unwrap();

        assert_eq!(with_zero_omega.camera, unconstrained.camera);
        assert_eq!(with_zero_omega.cost.to_bits(), unconstrained.cost.to_bits());
        assert_eq!(with_zero_omega.iterations, unconstrained.iterations);
    }

    #[test]
    fn solve_is_robust_to_gross_outliers() {
        let truth = truth_camera();
        let sampled = sampled_template();
        let clean = exact_markings(&truth, &sampled);

        let mut initial = truth;
        initial.pan += 0.2_f64.to_radians();
        initial.tilt += 0.1_f64.to_radians();
        initial.f *= 1.02;
        let settings = SolverSettings::default();
        let toggles = SolveToggles { use_flow: false, use_tripod: false, use_k1: true };

        let clean_solution = solve(&initial, &clean, &[], &sampled, None, &settings, toggles).unwrap();
        let clean_pan_err = (clean_solution.camera.pan - truth.pan).abs();

        // replace 20% of the points with uniform random pixels
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut dirty = clean.clone();
        for points in dirty.values_mut() {
            for p in points.iter_mut() {
                if rng.gen_bool(0.2) {
                    *p = Vec2::new(rng.gen_range(0.0..1920.0), rng.gen_range(0.0..1080.0));
                }
            }
        }
        let dirty_solution = solve(&initial, &dirty, &[], &sampled, None, &settings, toggles).unwrap();

        let pan_err = (dirty_solution.camera.pan - truth.pan).abs();
        let tilt_err = (dirty_solution.camera.tilt - truth.tilt).abs();
        let f_err = (dirty_solution.camera.f - truth.f).abs() / truth.f;
        // within 3x of the noiseless-case tolerances
        assert!(pan_err < 3.0 * 0.005_f64.to_radians().max(clean_pan_err), "pan err {pan_err}");
        assert!(tilt_err < 3.0 * 0.005_f64.to_radians(), "tilt err {tilt_err}");
        assert!(f_err < 3.0 * 0.001, "f err {f_err}");
    }

    #[test]
    fn accepted_costs_are_monotone() {
        let truth = truth_camera();
        let sampled = sampled_template();
        let markings = exact_markings(&truth, &sampled);
        let mut initial = truth;
        initial.pan += 0.3_f64.to_radians();
        initial.f *= 0.97;
        let settings = SolverSettings::default();
        let outcome = solve(
            &initial,
            &markings,
            &[],
            &sampled,
            None,
            &settings,
            SolveToggles { use_flow: false, use_tripod: false, use_k1: true },
        )
        .unwrap();
        assert!(outcome.cost_history.len() > 1);
        for pair in outcome.cost_history.windows(2) {
            assert!(pair[1] <= pair[0], "cost increased: {:?}", pair);
        }
    }

    #[test]
    fn assembled_gradient_matches_finite_differences() {
        let truth = truth_camera();
        let sampled = sampled_template();
        let markings = exact_markings(&truth, &sampled);
        let rig = TripodRig { t: Vec3::new(0.0, 55.0, -12.0), delta: 0.25 };
        let mut prev = truth;
        prev.pan -= 0.05_f64.to_radians();
        let flow = exact_flow(&prev, &truth);
        let settings = SolverSettings::default();

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let mut state = truth;
            state.pan += rng.gen_range(-0.01..0.01);
            state.tilt += rng.gen_range(-0.01..0.01);
            state.f *= rng.gen_range(0.99..1.01);
            state.k1 += rng.gen_range(-0.01..0.01);
            state.c.x += rng.gen_range(-0.2..0.2);

            let problem = CameraProblem::new(
                &state,
                &markings,
                &flow,
                &sampled,
                Some(&rig),
                &settings,
                SolveToggles::default(),
            );
            let params = problem.initial_params();
            let eval = problem.evaluate(&params, true);
            let grad = eval.gradient().unwrap();

            let mut fd = DVector::zeros(params.len());
            for j in 0..params.len() {
                let h = 1e-6 * params[j].abs().max(1.0);
                let mut hi = params.clone();
                hi[j] += h;
                let mut lo = params.clone();
                lo[j] -= h;
                fd[j] = (problem.evaluate(&hi, false).cost() - problem.evaluate(&lo, false).cost())
                    / (2.0 * h);
            }
            let rel = (&grad - &fd).norm() / fd.norm().max(1e-12);
            assert!(rel < 1e-4, "gradient mismatch {rel}\nanalytic {grad}\nfd {fd}");
        }
    }

    #[test]
    fn residual_count_matches_bundle_layout() {
        let truth = truth_camera();
        let sampled = sampled_template();
        let markings = exact_markings(&truth, &sampled);
        let flow = exact_flow(&truth, &truth);
        let rig = TripodRig { t: Vec3::new(0.0, 55.0, -12.0), delta: 0.2 };
        let settings = SolverSettings::default();
        let n_marks: usize = markings.values().map(Vec::len).sum();

        // sum of per-class counts + two rows per flow match + the tripod term
        let problem = CameraProblem::new(
            &truth,
            &markings,
            &flow,
            &sampled,
            Some(&rig),
            &settings,
            SolveToggles::default(),
        );
        let eval = problem.evaluate(&problem.initial_params(), false);
        assert_eq!(eval.residuals.len(), n_marks + 2 * flow.len() + 1);

        let no_tripod = CameraProblem::new(
            &truth,
            &markings,
            &flow,
            &sampled,
            Some(&rig),
            &settings,
            SolveToggles { use_tripod: false, ..Default::default() },
        );
        let eval = no_tripod.evaluate(&no_tripod.initial_params(), false);
        assert_eq!(eval.residuals.len(), n_marks + 2 * flow.len());
    }

    #[test]
    fn solve_is_deterministic() {
        let truth = truth_camera();
        let sampled = sampled_template();
        let markings = exact_markings(&truth, &sampled);
        let mut initial = truth;
        initial.pan += 0.15_f64.to_radians();
        let settings = SolverSettings::default();
        let toggles = SolveToggles { use_flow: false, use_tripod: false, use_k1: true };
        let a = solve(&initial, &markings, &[], &sampled, None, &settings, toggles).unwrap();
        let b = solve(&initial, &markings, &[], &sampled, None, &settings, toggles).unwrap();
        assert_eq!(a.camera, b.camera);
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
    }
}
