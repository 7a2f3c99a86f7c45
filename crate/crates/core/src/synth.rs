//! Synthetic RGB-D scenes: a grid-sampled ground-truth cloud of a simple
//! shape and the silhouette image the RGB camera would see.

use serde::{Deserialize, Serialize};

use crate::camera::{CameraRig, Extrinsics, FILE_ROTATION_TOL};
use crate::edges::GrayImage;
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// Square of side `extent` in the object's z = 0 plane.
    SquarePlane,
    /// Axis-aligned cube of side `extent`.
    Box,
    /// Sphere of diameter `extent`.
    Sphere,
}

/// A shape placed in the depth-camera frame. All shapes are centered on the
/// object origin; `pose` maps object coordinates into the depth-camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub shape: Shape,
    pub pose: Extrinsics,
    pub extent: f64,
    /// Surface samples per square meter.
    pub density: f64,
    pub foreground: f64,
    pub background: f64,
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    shape: Shape,
    #[serde(default = "identity_row_major")]
    pose: [f64; 16],
    extent: f64,
    density: f64,
    #[serde(default = "default_fg")]
    foreground: f64,
    #[serde(default)]
    background: f64,
}

fn identity_row_major() -> [f64; 16] {
    Extrinsics::identity().to_row_major()
}

fn default_fg() -> f64 {
    1.0
}

impl SceneSpec {
    pub fn new(shape: Shape, pose: Extrinsics, extent: f64, density: f64) -> Result<Self> {
        let spec = Self {
            shape,
            pose,
            extent,
            density,
            foreground: 1.0,
            background: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::InvalidParameter(format!("extent must be > 0, got {}", self.extent)));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::InvalidParameter(format!("density must be > 0, got {}", self.density)));
        }
        for (name, v) in [("foreground", self.foreground), ("background", self.background)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} intensity {v} outside [0, 1]")));
            }
        }
        if self.foreground == self.background {
            return Err(Error::InvalidParameter("foreground and background intensities must differ".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: SceneFile = serde_json::from_str(text)?;
        let spec = Self {
            shape: f.shape,
            pose: Extrinsics::from_row_major(&f.pose, FILE_ROTATION_TOL)?,
            extent: f.extent,
            density: f.density,
            foreground: f.foreground,
            background: f.background,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let f = SceneFile {
            shape: self.shape,
            pose: self.pose.to_row_major(),
            extent: self.extent,
            density: self.density,
            foreground: self.foreground,
            background: self.background,
        };
        serde_json::to_string_pretty(&f).expect("scene serializes")
    }

    /// Samples per side of a face of side `extent`.
    fn grid_side(&self) -> usize {
        ((self.extent * self.density.sqrt()).round() as usize).max(1)
    }
}

/// Cell-center grid on the square `[-e/2, e/2]²`, row by row.
fn square_grid(e: f64, n: usize) -> Vec<(f64, f64)> {
    let cell = e / n as f64;
    let c = |i: usize| -0.5 * e + (i as f64 + 0.5) * cell;
    (0..n).flat_map(|j| (0..n).map(move |i| (c(i), c(j)))).collect()
}

/// Object-frame points on the surface visible from `eye` (object frame).
fn sample_surface(spec: &SceneSpec, eye: &Point3) -> Vec<Point3> {
    let h = 0.5 * spec.extent;
    match spec.shape {
        Shape::SquarePlane => square_grid(spec.extent, spec.grid_side())
            .into_iter()
            .map(|(x, y)| Point3::new(x, y, 0.0))
            .collect(),
        Shape::Box => {
            let grid = square_grid(spec.extent, spec.grid_side());
            let mut pts = Vec::new();
            for axis in 0..3 {
                for sign in [-1.0, 1.0] {
                    // a face is visible when the eye is on its outer side
                    let eye_c = eye.to_array()[axis];
                    if sign * (eye_c - sign * h) <= 0.0 {
                        continue;
                    }
                    for &(a, b) in &grid {
                        let mut c = [0.0; 3];
                        c[axis] = sign * h;
                        c[(axis + 1) % 3] = a;
                        c[(axis + 2) % 3] = b;
                        pts.push(Point3::from(c));
                    }
                }
            }
            pts
        }
        Shape::Sphere => {
            // Fibonacci lattice over the full sphere, then the visible cap
            let area = std::f64::consts::PI * spec.extent * spec.extent;
            let total = ((area * spec.density).round() as usize).max(1);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..total)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / total as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    Point3::new(h * r * phi.cos(), h * r * phi.sin(), h * z)
                })
                .filter(|p| p.dot(&(*eye - *p)) > 0.0)
                .collect()
        }
    }
}

/// Distance along the ray `o + t·d` (t > 0) to the shape, if hit.
fn ray_hits(shape: Shape, h: f64, o: &Point3, d: &Point3) -> bool {
    match shape {
        Shape::SquarePlane => {
            if d.z == 0.0 {
                return false;
            }
            let t = -o.z / d.z;
            if t <= 0.0 {
                return false;
            }
            let p = *o + *d * t;
            p.x.abs() <= h && p.y.abs() <= h
        }
        Shape::Box => {
            let (o, d) = (o.to_array(), d.to_array());
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            for k in 0..3 {
                if d[k] == 0.0 {
                    if o[k].abs() > h {
                        return false;
                    }
                    continue;
                }
                let a = (-h - o[k]) / d[k];
                let b = (h - o[k]) / d[k];
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
            t0 <= t1 && t1 > 0.0
        }
        Shape::Sphere => {
            let a = d.dot(d);
            let b = o.dot(d);
            let c = o.dot(o) - h * h;
            let disc = b * b - a * c;
            disc >= 0.0 && (-b + disc.sqrt()) > 0.0
        }
    }
}

/// Ground-truth cloud in the depth-camera frame and the RGB silhouette image.
///
/// The cloud is a uniform grid over the surface visible from the depth
/// camera; the image holds `foreground` wherever the RGB pixel-center ray hits
/// the shape and `background` elsewhere.
pub fn synth_scene(spec: &SceneSpec, rig: &CameraRig) -> Result<(PointCloud3, GrayImage)> {
    spec.validate()?;
    let to_object = spec.pose.inverse();
    let eye = to_object.transform_point(&Point3::default());
    let pts: Vec<Point3> = sample_surface(spec, &eye)
        .iter()
        .map(|p| spec.pose.transform_point(p))
        .collect();
    if pts.is_empty() {
        return Err(Error::ShapeOutOfFrame("no surface faces the camera".into()));
    }
    for p in &pts {
        match rig.project(p) {
            Ok(uv) if rig.in_frame(&uv) => {}
            Ok(uv) => {
                return Err(Error::ShapeOutOfFrame(format!(
                    "point ({}, {}, {}) projects to ({:.1}, {:.1}) outside {}x{}",
                    p.x, p.y, p.z, uv.u, uv.v, rig.width, rig.height
                )))
            }
            Err(_) => {
                return Err(Error::ShapeOutOfFrame(format!(
                    "point ({}, {}, {}) is behind the RGB camera",
                    p.x, p.y, p.z
                )))
            }
        }
    }

    let origin = to_object.transform_point(&rig.rgb_center_in_tof());
    let k = &rig.k_rgb;
    let (w, ht) = (rig.width, rig.height);
    let h = 0.5 * spec.extent;
    let mut mask = vec![false; w * ht];
    for y in 0..ht {
        for x in 0..w {
            let d_rgb = Point3::new((x as f64 - k.cx) / k.fx, (y as f64 - k.cy) / k.fy, 1.0);
            // direction through the RGB pixel center, expressed in the object frame
            let tip = rig.rgb_to_tof_frame(&d_rgb);
            let d = to_object.transform_point(&tip) - origin;
            mask[y * w + x] = ray_hits(spec.shape, h, &origin, &d);
        }
    }
    let touches_border = (0..w).any(|x| mask[x] || mask[(ht - 1) * w + x])
        || (0..ht).any(|y| mask[y * w] || mask[y * w + w - 1]);
    if touches_border {
        return Err(Error::ShapeOutOfFrame("silhouette reaches the image border".into()));
    }
    let pixels = mask
        .into_iter()
        .map(|m| if m { spec.foreground } else { spec.background })
        .collect();
    let img = GrayImage::new(w, ht, pixels)?;
    Ok((PointCloud3::new(pts)?, img))
}
