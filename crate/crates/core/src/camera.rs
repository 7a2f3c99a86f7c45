//! RGB-D rig calibration and pinhole projection from the depth (TOF) frame
//! onto the RGB image plane.
//!
//! A TOF-frame point is moved into the RGB camera frame with
//! `E_rgb⁻¹ · E_tof`, then projected with the zero-skew intrinsics.

use nalgebra::{Matrix2x3, Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, PointCloud3, PointSet2, SetRole};

/// Points with RGB-frame depth at or below this are treated as behind the camera.
pub const NEAR_PLANE: f64 = 1e-6;

/// Orthonormality tolerance for [`Extrinsics::new`].
pub const ROTATION_TOL: f64 = 1e-9;

/// Orthonormality tolerance when loading calibration files.
pub const FILE_ROTATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::InvalidCalibration(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidCalibration("non-finite principal point".into()));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }
}

/// A rigid 4×4 transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    matrix: Matrix4<f64>,
}

impl Extrinsics {
    pub fn new(matrix: Matrix4<f64>) -> Result<Self> {
        Self::with_tolerance(matrix, ROTATION_TOL)
    }

    /// Validates that `matrix` is rigid: orthonormal rotation block with
    /// determinant +1 (both to `tol`) and bottom row `[0, 0, 0, 1]`.
    pub fn with_tolerance(matrix: Matrix4<f64>, tol: f64) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCalibration("non-finite extrinsic entry".into()));
        }
        let bottom = matrix.row(3);
        if bottom[0] != 0.0 || bottom[1] != 0.0 || bottom[2] != 0.0 || bottom[3] != 1.0 {
            return Err(Error::InvalidCalibration(format!(
                "bottom row must be [0, 0, 0, 1], got {bottom}"
            )));
        }
        let r: Matrix3<f64> = matrix.fixed_view::<3, 3>(0, 0).into_owned();
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if err > tol {
            return Err(Error::InvalidCalibration(format!(
                "rotation block is not orthonormal (max |RᵀR - I| = {err:e})"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > tol {
            return Err(Error::InvalidCalibration(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self {
            matrix: Matrix4::identity(),
        }
    }

    pub fn from_rotation_translation(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        Self::new(m)
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        let mut m = Matrix4::identity();
        m[(0, 3)] = x;
        m[(1, 3)] = y;
        m[(2, 3)] = z;
        Self { matrix: m }
    }

    /// Row-major 16-element form.
    pub fn from_row_major(values: &[f64; 16], tol: f64) -> Result<Self> {
        Self::with_tolerance(Matrix4::from_row_slice(values), tol)
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.matrix[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation_vector(&self) -> Vector3<f64> {
        self.matrix.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Closed-form rigid inverse `[Rᵀ | -Rᵀt]`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation_vector());
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        Self { matrix: m }
    }

    pub fn compose(&self, rhs: &Extrinsics) -> Self {
        Self {
            matrix: self.matrix * rhs.matrix,
        }
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        let v = self.rotation() * Vector3::new(p.x, p.y, p.z) + self.translation_vector();
        Point3::new(v.x, v.y, v.z)
    }
}

/// Calibrated RGB-D rig.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    pub k_rgb: Intrinsics,
    pub e_rgb: Extrinsics,
    pub e_tof: Extrinsics,
    pub width: usize,
    pub height: usize,
    // E_rgb⁻¹ · E_tof, split into rotation and translation
    rot: Matrix3<f64>,
    trans: Vector3<f64>,
}

impl CameraRig {
    pub fn new(
        k_rgb: Intrinsics,
        e_rgb: Extrinsics,
        e_tof: Extrinsics,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidCalibration(format!(
                "image size must be positive, got {width}x{height}"
            )));
        }
        let chain = e_rgb.inverse().compose(&e_tof);
        Ok(Self {
            k_rgb,
            e_rgb,
            e_tof,
            width,
            height,
            rot: chain.rotation(),
            trans: chain.translation_vector(),
        })
    }

    /// Rig with both extrinsics at identity.
    pub fn with_identity_extrinsics(k_rgb: Intrinsics, width: usize, height: usize) -> Result<Self> {
        Self::new(k_rgb, Extrinsics::identity(), Extrinsics::identity(), width, height)
    }

    /// Rotation of the TOF→RGB chain.
    pub fn tof_to_rgb_rotation(&self) -> &Matrix3<f64> {
        &self.rot
    }

    pub fn tof_to_rgb_frame(&self, p: &Point3) -> Point3 {
        let v = self.rot * Vector3::new(p.x, p.y, p.z) + self.trans;
        Point3::new(v.x, v.y, v.z)
    }

    /// Inverse of [`tof_to_rgb_frame`](Self::tof_to_rgb_frame).
    pub fn rgb_to_tof_frame(&self, p: &Point3) -> Point3 {
        let v = self.rot.transpose() * (Vector3::new(p.x, p.y, p.z) - self.trans);
        Point3::new(v.x, v.y, v.z)
    }

    /// Position of the RGB camera center in the TOF frame.
    pub fn rgb_center_in_tof(&self) -> Point3 {
        self.rgb_to_tof_frame(&Point3::default())
    }

    pub fn project(&self, p: &Point3) -> Result<Point2> {
        let q = self.tof_to_rgb_frame(p);
        if !(q.z > NEAR_PLANE) {
            return Err(Error::BehindCamera { depth: q.z });
        }
        let k = &self.k_rgb;
        Ok(Point2::new(k.fx * q.x / q.z + k.cx, k.fy * q.y / q.z + k.cy))
    }

    pub fn in_frame(&self, p: &Point2) -> bool {
        p.u >= 0.0 && p.v >= 0.0 && p.u < self.width as f64 && p.v < self.height as f64
    }

    /// ∂(u, v)/∂(x, y, z) with respect to the TOF-frame point.
    pub fn projection_jacobian(&self, p: &Point3) -> Result<Matrix2x3<f64>> {
        let q = self.tof_to_rgb_frame(p);
        if !(q.z > NEAR_PLANE) {
            return Err(Error::BehindCamera { depth: q.z });
        }
        Ok(self.pinhole_jacobian(&q) * self.rot)
    }

    /// ∂(u, v)/∂(x', y', z') with respect to an RGB-frame point.
    pub fn pinhole_jacobian(&self, q: &Point3) -> Matrix2x3<f64> {
        let k = &self.k_rgb;
        let iz = 1.0 / q.z;
        Matrix2x3::new(
            k.fx * iz,
            0.0,
            -k.fx * q.x * iz * iz,
            0.0,
            k.fy * iz,
            -k.fy * q.y * iz * iz,
        )
    }

    /// Projects every point and keeps those in front of the camera and inside
    /// the image. The index map gives the cloud index of each kept point.
    pub fn project_cloud(&self, cloud: &PointCloud3) -> Result<Projection> {
        let mut points = Vec::with_capacity(cloud.len());
        let mut index_map = Vec::with_capacity(cloud.len());
        let mut culled = 0;
        for (i, p) in cloud.points().iter().enumerate() {
            match self.project(p) {
                Ok(uv) if self.in_frame(&uv) => {
                    points.push(uv);
                    index_map.push(i);
                }
                _ => culled += 1,
            }
        }
        if points.is_empty() {
            return Err(Error::AllPointsCulled {
                width: self.width,
                height: self.height,
            });
        }
        Ok(Projection {
            points: PointSet2::new(points, SetRole::Projection)?,
            index_map,
            culled,
        })
    }

    pub fn to_calibration(&self) -> Calibration {
        Calibration {
            k_rgb: self.k_rgb,
            e_rgb: self.e_rgb.to_row_major(),
            e_tof: self.e_tof.to_row_major(),
            width: self.width,
            height: self.height,
        }
    }
}

/// Output of [`CameraRig::project_cloud`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub points: PointSet2,
    pub index_map: Vec<usize>,
    pub culled: usize,
}

/// On-disk calibration layout: intrinsics, row-major extrinsics, image size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub k_rgb: Intrinsics,
    pub e_rgb: [f64; 16],
    pub e_tof: [f64; 16],
    pub width: usize,
    pub height: usize,
}

impl Calibration {
    pub fn into_rig(self) -> Result<CameraRig> {
        let k = Intrinsics::new(self.k_rgb.fx, self.k_rgb.fy, self.k_rgb.cx, self.k_rgb.cy)?;
        let e_rgb = Extrinsics::from_row_major(&self.e_rgb, FILE_ROTATION_TOL)
            .map_err(|e| Error::InvalidCalibration(format!("e_rgb: {e}")))?;
        let e_tof = Extrinsics::from_row_major(&self.e_tof, FILE_ROTATION_TOL)
            .map_err(|e| Error::InvalidCalibration(format!("e_tof: {e}")))?;
        CameraRig::new(k, e_rgb, e_tof, self.width, self.height)
    }

    pub fn from_json(text: &str) -> Result<CameraRig> {
        let calib: Calibration = serde_json::from_str(text)?;
        calib.into_rig()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes")
    }
}
