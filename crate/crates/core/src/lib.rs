//! Camera calibration and tracking for elevated broadcast cameras filming soccer.
//!
//! The library estimates, per video frame, an eight-parameter camera
//! `{f, k1, pan, tilt, roll, Cx, Cy, Cz}` (focal length in pixels, first-order
//! radial distortion, orientation angles, and the 3-D focal point in meters)
//! from pre-extracted field-marking detections and optical-flow point matches,
//! under a soft tripod constraint that keeps the optical axis at a fixed
//! distance from the pan-tilt head's rotation center.
//!
//! Modules, bottom up:
//!
//! - [`geometry`]: the distorted pinhole camera — rotation convention, forward
//!   projection, undistortion, ray back-projection, analytic Jacobians.
//! - [`field`]: the soccer pitch template (semantic class → 3-D element),
//!   sampling, and point-to-projected-element distances.
//! - [`tripod`]: the pan-tilt head model: rotation center `T`, offset `δ`,
//!   the derived axis point `O*`, the constraint residual, and rig fitting.
//! - [`observe`]: detector output → solver-ready observations (mean-shift
//!   condensation, flow filtering, ground-plane lifting).
//! - [`optimize`]: robust (Cauchy) residual assembly and the Levenberg-Marquardt
//!   loop over the camera parameters.
//! - [`reinit`]: two-point reinitialization with RANSAC.
//! - [`tracker`]: the per-frame state machine and confidence scoring.
//! - [`eval`]: single-frame calibration metrics (JaC_τ, MRE, MedRE, CR).
//! - [`sim`]: synthetic ground-truth scene generator used by the test suite.
//! - [`io`]: the line-delimited record formats shared by all tools.
//! - [`config`]: the run configuration file.
//!
//! The geometric core is generic over the floating-point scalar (see [`Real`]);
//! `f64` is the default type parameter everywhere and the only scalar used by
//! the solver pipeline.
//!
//! World frame convention: origin at the pitch center, x along the pitch
//! length, y along the pitch width, z pointing *down* — cameras above the
//! ground have negative z. The default main-camera position is
//! `(0, 55, -12)` meters: beyond the touchline of a 68 m pitch, 12 m up.

pub mod config;
pub mod eval;
pub mod field;
pub mod geometry;
pub mod io;
pub mod observe;
pub mod optimize;
pub mod raster;
pub mod reinit;
pub mod sim;
pub mod tracker;
pub mod tripod;

mod scalar;

pub use scalar::Real;

/// 2-vector alias; pixels unless stated otherwise.
pub type Vec2<T = f64> = nalgebra::Vector2<T>;
/// 3-vector alias; meters in the world frame unless stated otherwise.
pub type Vec3<T = f64> = nalgebra::Vector3<T>;
/// 3×3 matrix alias.
pub type Mat3<T = f64> = nalgebra::Matrix3<T>;

pub use geometry::{CameraState, GeometryError, Ray};
pub use tripod::{TripodDerived, TripodRig};
