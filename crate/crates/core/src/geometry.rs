//! Distorted pinhole camera model: rotation parameterization, forward
//! projection, undistortion, ray back-projection, and analytic Jacobians.
//!
//! Rotation convention (fixed, world-to-camera): `R = R_z(roll) * R_x(tilt) * R_z(pan)`
//! with the elementary factors
//!
//! ```text
//! R_z(a) = [  cos a  sin a  0 ]      R_x(a) = [ 1    0      0    ]
//!          [ -sin a  cos a  0 ]               [ 0  cos a  sin a  ]
//!          [   0      0     1 ]               [ 0 -sin a  cos a  ]
//! ```
//!
//! A world point projects through `x_cam = R * (X - C)`. The rows of `R`
//! (equivalently the columns of `R^T`) are `r1, r2, r3`; `r3` is the optical
//! axis direction and `-r2` the up-vector. In the z-down world frame this
//! convention places a camera at `(0, 55, -12)` looking at the pitch center
//! with `pan = 0` and `tilt = atan2(55, 12) ≈ 77.7°`; tilt is the angle off
//! the downward vertical and stays inside `(0, π)` for any realistic view.

use nalgebra::SMatrix;
use thiserror::Error;

use crate::{Mat3, Real, Vec2, Vec3};

/// Camera-frame depth (meters) at or below which a point counts as behind.
pub const DEPTH_EPS: f64 = 1e-6;
/// |k1| bound enforced while optimizing; keeps `r·L(r)` monotone over the
/// image for broadcast focal lengths so undistortion stays well posed.
pub const K1_LIMIT: f64 = 0.3;
/// Newton iteration cap for undistortion.
pub const UNDISTORT_MAX_ITERS: usize = 50;
/// Radius tolerance that stops the undistortion iteration.
pub const UNDISTORT_TOL: f64 = 1e-10;

/// Number of optimizable camera parameters.
pub const NUM_PARAMS: usize = 8;

/// Layout of the camera parameter vector used by all Jacobians.
pub mod param {
    pub const F: usize = 0;
    pub const K1: usize = 1;
    pub const PAN: usize = 2;
    pub const TILT: usize = 3;
    pub const ROLL: usize = 4;
    pub const CX: usize = 5;
    pub const CY: usize = 6;
    pub const CZ: usize = 7;
}

/// 2×8 Jacobian of a projected pixel with respect to the camera parameters.
pub type ProjectionJacobian<T> = SMatrix<T, 2, 8>;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    #[error("point is behind the camera")]
    Behind,
    #[error("undistortion did not converge (pixel outside the invertible radius)")]
    NoConvergence,
    #[error("tilt at a rotation pole; pan and roll are indistinguishable")]
    GimbalLock,
    #[error("ray is parallel to the ground plane")]
    ParallelToGround,
    #[error("ground intersection lies behind the ray origin")]
    BehindCamera,
    #[error("direction vector is degenerate")]
    DegenerateDirection,
}

/// The eight estimated camera parameters plus the fixed image geometry.
///
/// `f` is the focal length in pixels, `k1` the first radial distortion
/// coefficient, the angles are radians, and `c` is the focal point in meters
/// (world frame, z-down). The principal point is pinned to the image center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraState<T: Real = f64> {
    pub f: T,
    pub k1: T,
    pub pan: T,
    pub tilt: T,
    pub roll: T,
    pub c: Vec3<T>,
    pub image_w: u32,
    pub image_h: u32,
}

impl<T: Real> CameraState<T> {
    pub fn new(
        f: T,
        k1: T,
        pan: T,
        tilt: T,
        roll: T,
        c: Vec3<T>,
        image_w: u32,
        image_h: u32,
    ) -> Self {
        debug_assert!(f > T::zero(), "focal length must be positive");
        Self { f, k1, pan, tilt, roll, c, image_w, image_h }
    }

    /// Principal point: exactly the image center.
    pub fn principal_point(&self) -> Vec2<T> {
        Vec2::new(
            T::c(self.image_w as f64 * 0.5),
            T::c(self.image_h as f64 * 0.5),
        )
    }

    pub fn rotation(&self) -> Mat3<T> {
        rotation_from_angles(self.pan, self.tilt, self.roll)
    }

    /// Optical axis direction `r3` (unit, world frame).
    pub fn optical_axis(&self) -> Vec3<T> {
        let r = self.rotation();
        Vec3::new(r[(2, 0)], r[(2, 1)], r[(2, 2)])
    }

    /// Up-vector `-r2` (unit, world frame; points up, i.e. toward negative z).
    pub fn up_vector(&self) -> Vec3<T> {
        let r = self.rotation();
        -Vec3::new(r[(1, 0)], r[(1, 1)], r[(1, 2)])
    }

    pub fn project(&self, x: &Vec3<T>) -> Result<Vec2<T>, GeometryError> {
        Projector::new(self).project(x)
    }

    pub fn project_with_jacobian(
        &self,
        x: &Vec3<T>,
    ) -> Result<(Vec2<T>, ProjectionJacobian<T>), GeometryError> {
        JacProjector::new(self).project_with_jacobian(x)
    }

    /// Inverts the intrinsic map `pixel = f·L(r)·x̄ + p` back to normalized
    /// image coordinates by Newton iteration on the radius.
    pub fn undistort(&self, pixel: &Vec2<T>) -> Result<Vec2<T>, GeometryError> {
        let y = (pixel - self.principal_point()) / self.f;
        if self.k1 == T::zero() {
            return Ok(y);
        }
        let rd = y.norm();
        if rd < T::c(1e-14) {
            return Ok(Vec2::zeros());
        }
        let mut r = rd;
        let tol = T::c(UNDISTORT_TOL);
        let mut converged = false;
        for _ in 0..UNDISTORT_MAX_ITERS {
            let g = r + self.k1 * r * r * r - rd;
            let dg = T::one() + T::c(3.0) * self.k1 * r * r;
            if dg.abs() < T::c(1e-14) {
                break;
            }
            let step = g / dg;
            r -= step;
            if !r.is_finite() || r < T::zero() {
                return Err(GeometryError::NoConvergence);
            }
            if step.abs() < tol {
                converged = true;
                break;
            }
        }
        let residual = r + self.k1 * r * r * r - rd;
        if !converged || residual.abs() > T::c(1e-9) * rd.max(T::one()) {
            return Err(GeometryError::NoConvergence);
        }
        Ok(y * (r / rd))
    }

    /// Back-projects a pixel to the world-frame viewing ray through it.
    pub fn unproject(&self, pixel: &Vec2<T>) -> Result<Ray<T>, GeometryError> {
        let xb = self.undistort(pixel)?;
        let dir_cam = Vec3::new(xb.x, xb.y, T::one());
        let dir_world = self.rotation().transpose() * dir_cam;
        Ok(Ray { origin: self.c, direction: dir_world.normalize() })
    }

    /// True when the pixel lies inside the image rectangle (zero margin).
    pub fn contains_pixel(&self, pixel: &Vec2<T>) -> bool {
        pixel.x >= T::zero()
            && pixel.y >= T::zero()
            && pixel.x <= T::c(self.image_w as f64)
            && pixel.y <= T::c(self.image_h as f64)
    }
}

/// World-frame viewing ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T: Real = f64> {
    pub origin: Vec3<T>,
    /// Unit direction.
    pub direction: Vec3<T>,
}

impl<T: Real> Ray<T> {
    /// Intersection with the ground plane z = 0, in front of the origin.
    pub fn intersect_ground(&self) -> Result<Vec3<T>, GeometryError> {
        if self.direction.z.abs() <= T::c(1e-9) {
            return Err(GeometryError::ParallelToGround);
        }
        let t = -self.origin.z / self.direction.z;
        if t <= T::zero() {
            return Err(GeometryError::BehindCamera);
        }
        let p = self.origin + self.direction * t;
        Ok(Vec3::new(p.x, p.y, T::zero()))
    }

    /// Distance from a point to the (infinite) ray line.
    pub fn distance_to_point(&self, p: &Vec3<T>) -> T {
        let v = p - self.origin;
        let along = v.dot(&self.direction);
        (v - self.direction * along).norm()
    }
}

fn rot_z<T: Real>(a: T) -> Mat3<T> {
    let (s, c) = a.sin_cos();
    Mat3::new(c, s, T::zero(), -s, c, T::zero(), T::zero(), T::zero(), T::one())
}

fn rot_x<T: Real>(a: T) -> Mat3<T> {
    let (s, c) = a.sin_cos();
    Mat3::new(T::one(), T::zero(), T::zero(), T::zero(), c, s, T::zero(), -s, c)
}

fn drot_z<T: Real>(a: T) -> Mat3<T> {
    let (s, c) = a.sin_cos();
    let z = T::zero();
    Mat3::new(-s, c, z, -c, -s, z, z, z, z)
}

fn drot_x<T: Real>(a: T) -> Mat3<T> {
    let (s, c) = a.sin_cos();
    let z = T::zero();
    Mat3::new(z, z, z, z, -s, c, z, -c, -s)
}

/// `R = R_z(roll) * R_x(tilt) * R_z(pan)`, expanded.
pub fn rotation_from_angles<T: Real>(pan: T, tilt: T, roll: T) -> Mat3<T> {
    let (sp, cp) = pan.sin_cos();
    let (st, ct) = tilt.sin_cos();
    let (sg, cg) = roll.sin_cos();
    Mat3::new(
        cg * cp - sg * ct * sp,
        cg * sp + sg * ct * cp,
        sg * st,
        -sg * cp - cg * ct * sp,
        -sg * sp + cg * ct * cp,
        cg * st,
        st * sp,
        -st * cp,
        ct,
    )
}

/// Partial derivatives of the rotation matrix: `[dR/dpan, dR/dtilt, dR/droll]`.
pub fn rotation_derivatives<T: Real>(pan: T, tilt: T, roll: T) -> [Mat3<T>; 3] {
    let rz_pan = rot_z(pan);
    let rx_tilt = rot_x(tilt);
    let rz_roll = rot_z(roll);
    [
        rz_roll * rx_tilt * drot_z(pan),
        rz_roll * drot_x(tilt) * rz_pan,
        drot_z(roll) * rx_tilt * rz_pan,
    ]
}

/// Recovers `(pan, tilt, roll)` with tilt in `(0, π)`.
pub fn angles_from_rotation<T: Real>(r: &Mat3<T>) -> Result<(T, T, T), GeometryError> {
    let ct = r[(2, 2)];
    if ct.abs() >= T::one() - T::c(1e-9) {
        return Err(GeometryError::GimbalLock);
    }
    let st = (r[(2, 0)] * r[(2, 0)] + r[(2, 1)] * r[(2, 1)]).sqrt();
    let tilt = st.atan2(ct);
    let pan = r[(2, 0)].atan2(-r[(2, 1)]);
    let roll = r[(0, 2)].atan2(r[(1, 2)]);
    Ok((pan, tilt, roll))
}

/// Pan and tilt that steer the optical axis along `dir` with roll zero.
pub fn pan_tilt_for_direction<T: Real>(dir: &Vec3<T>) -> Result<(T, T), GeometryError> {
    let n = dir.norm();
    if n < T::c(1e-12) {
        return Err(GeometryError::DegenerateDirection);
    }
    let planar = (dir.x * dir.x + dir.y * dir.y).sqrt();
    Ok((dir.x.atan2(-dir.y), planar.atan2(dir.z)))
}

/// Forward projection with the rotation precomputed; use for batches of
/// points under one camera.
pub struct Projector<T: Real> {
    f: T,
    k1: T,
    c: Vec3<T>,
    pp: Vec2<T>,
    r: Mat3<T>,
}

impl<T: Real> Projector<T> {
    pub fn new(cam: &CameraState<T>) -> Self {
        Self {
            f: cam.f,
            k1: cam.k1,
            c: cam.c,
            pp: cam.principal_point(),
            r: cam.rotation(),
        }
    }

    pub fn project(&self, x: &Vec3<T>) -> Result<Vec2<T>, GeometryError> {
        let xc = self.r * (x - self.c);
        if xc.z <= T::c(DEPTH_EPS) {
            return Err(GeometryError::Behind);
        }
        let xb = Vec2::new(xc.x / xc.z, xc.y / xc.z);
        let l = T::one() + self.k1 * xb.norm_squared();
        Ok(self.pp + xb * (self.f * l))
    }
}

/// Forward projection with rotation derivatives precomputed for Jacobians.
pub struct JacProjector<T: Real> {
    base: Projector<T>,
    dr: [Mat3<T>; 3],
}

impl<T: Real> JacProjector<T> {
    pub fn new(cam: &CameraState<T>) -> Self {
        Self {
            base: Projector::new(cam),
            dr: rotation_derivatives(cam.pan, cam.tilt, cam.roll),
        }
    }

    pub fn project(&self, x: &Vec3<T>) -> Result<Vec2<T>, GeometryError> {
        self.base.project(x)
    }

    /// The plain value projector sharing this camera's precomputed rotation.
    pub fn projector(&self) -> &Projector<T> {
        &self.base
    }

    pub fn project_with_jacobian(
        &self,
        x: &Vec3<T>,
    ) -> Result<(Vec2<T>, ProjectionJacobian<T>), GeometryError> {
        let p = &self.base;
        let v = x - p.c;
        let xc = p.r * v;
        if xc.z <= T::c(DEPTH_EPS) {
            return Err(GeometryError::Behind);
        }
        let inv_z = T::one() / xc.z;
        let xb = Vec2::new(xc.x * inv_z, xc.y * inv_z);
        let r2 = xb.norm_squared();
        let l = T::one() + p.k1 * r2;
        let pixel = p.pp + xb * (p.f * l);

        let mut jac = ProjectionJacobian::zeros();
        let df = xb * l;
        jac[(0, param::F)] = df.x;
        jac[(1, param::F)] = df.y;
        let dk1 = xb * (p.f * r2);
        jac[(0, param::K1)] = dk1.x;
        jac[(1, param::K1)] = dk1.y;

        let two = T::c(2.0);
        let mut fill = |col: usize, dxc: Vec3<T>| {
            let dxb = Vec2::new(dxc.x - xb.x * dxc.z, dxc.y - xb.y * dxc.z) * inv_z;
            let dl = p.k1 * two * xb.dot(&dxb);
            let du = (xb * dl + dxb * l) * p.f;
            jac[(0, col)] = du.x;
            jac[(1, col)] = du.y;
        };

        fill(param::PAN, self.dr[0] * v);
        fill(param::TILT, self.dr[1] * v);
        fill(param::ROLL, self.dr[2] * v);
        fill(param::CX, -p.r.column(0).into_owned());
        fill(param::CY, -p.r.column(1).into_owned());
        fill(param::CZ, -p.r.column(2).into_owned());

        Ok((pixel, jac))
    }
}
