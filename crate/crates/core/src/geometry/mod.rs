//! Point types, spatial indexing, binning and normalization.

mod downsample;
mod index;
mod normalize;

pub use downsample::{bin_downsample, bin_downsample_anchored, bin_downsample_with_voxel};
pub use index::{IndexPoint, Neighbor, SpatialIndex};
pub use normalize::{denormalize, normalize_to_unit, UnitTransform};

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// A 3D point in camera-frame meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn midpoint(&self, other: &Point3) -> Point3 {
        Point3::new(
            0.5 * (self.x + other.x),
            0.5 * (self.y + other.y),
            0.5 * (self.z + other.z),
        )
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A 2D image-plane point in pixels. `u` grows rightward, `v` downward, and
/// the origin sits on the center of the top-left pixel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub u: f64,
    pub v: f64,
}

impl Point2 {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn dot(&self, other: &Point2) -> f64 {
        self.u * other.u + self.v * other.v
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (*self - *other).norm()
    }

    /// z-component of the cross product of two vectors.
    pub fn cross(&self, other: &Point2) -> f64 {
        self.u * other.v - self.v * other.u
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.u + o.u, self.v + o.v)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.u - o.u, self.v - o.v)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.u * s, self.v * s)
    }
}

/// Non-empty ordered collection of finite 3D points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud3 {
    points: Vec<Point3>,
}

impl PointCloud3 {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point cloud"));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn centroid(&self) -> Point3 {
        let n = self.points.len() as f64;
        let sum = self
            .points
            .iter()
            .fold(Point3::default(), |acc, p| acc + *p);
        sum * (1.0 / n)
    }

    /// Axis-aligned bounds as (min, max).
    pub fn bounds(&self) -> (Point3, Point3) {
        bounds3(&self.points)
    }
}

pub(crate) fn bounds3(points: &[Point3]) -> (Point3, Point3) {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        lo.z = lo.z.min(p.z);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
        hi.z = hi.z.max(p.z);
    }
    (lo, hi)
}

/// What a [`PointSet2`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRole {
    EdgeMap,
    Projection,
    Hull,
}

/// A set of image-plane points tagged with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet2 {
    points: Vec<Point2>,
    role: SetRole,
}

impl PointSet2 {
    pub fn new(points: Vec<Point2>, role: SetRole) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if role == SetRole::Hull && points.len() < 3 {
            return Err(Error::TooFewVertices(points.len()));
        }
        Ok(Self { points, role })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn role(&self) -> SetRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Drops points closer than `eps` to an earlier point. Returns the
    /// deduplicated set and, for each kept point, its index in `self`.
    pub fn dedup(&self, eps: f64) -> (PointSet2, Vec<usize>) {
        let kept = dedup_indices_2d(&self.points, eps);
        let points = kept.iter().map(|&i| self.points[i]).collect();
        (
            PointSet2 {
                points,
                role: self.role,
            },
            kept,
        )
    }
}

/// Edge points detected in an image.
pub type EdgeMap = PointSet2;

/// Indices of the first point of every cluster of points within `eps` of
/// each other, in input order. Uses a hash grid with cell size `eps`.
pub(crate) fn dedup_indices_2d(points: &[Point2], eps: f64) -> Vec<usize> {
    use std::collections::HashMap;
    let cell = if eps > 0.0 { eps } else { f64::MIN_POSITIVE };
    let key = |p: &Point2| ((p.u / cell).floor() as i64, (p.v / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut kept = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let (ku, kv) = key(p);
        let mut dup = false;
        'search: for du in -1..=1 {
            for dv in -1..=1 {
                if let Some(bucket) = grid.get(&(ku + du, kv + dv)) {
                    if bucket.iter().any(|&j| points[j].distance(p) <= eps) {
                        dup = true;
                        break 'search;
                    }
                }
            }
        }
        if !dup {
            grid.entry((ku, kv)).or_default().push(i);
            kept.push(i);
        }
    }
    kept
}

/// 3D counterpart of [`dedup_indices_2d`]. The first `fixed` points are
/// always kept, even when they duplicate each other.
pub(crate) fn dedup_indices_3d(points: &[Point3], fixed: usize, eps: f64) -> Vec<usize> {
    use std::collections::HashMap;
    let cell = if eps > 0.0 { eps } else { f64::MIN_POSITIVE };
    let key = |p: &Point3| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut kept = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let (kx, ky, kz) = key(p);
        let mut dup = false;
        'search: for dx in (-1..=1).filter(|_| i >= fixed) {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                        if bucket.iter().any(|&j| points[j].distance(p) <= eps) {
                            dup = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        if !dup {
            grid.entry((kx, ky, kz)).or_default().push(i);
            kept.push(i);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloud_rejects_empty_and_nan() {
        assert!(matches!(PointCloud3::new(vec![]), Err(Error::EmptyInput(_))));
        let bad = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(f64::NAN, 0.0, 1.0)];
        assert!(matches!(PointCloud3::new(bad), Err(Error::NonFinite(1))));
    }

    #[test]
    fn hull_role_needs_three_points() {
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        assert!(PointSet2::new(pts.clone(), SetRole::Hull).is_err());
        assert!(PointSet2::new(pts, SetRole::EdgeMap).is_ok());
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1e-12),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 0.0),
        ];
        let set = PointSet2::new(pts, SetRole::Projection).unwrap();
        let (d, kept) = set.dedup(1e-9);
        assert_eq!(kept, vec![0, 1, 4]);
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn dedup_3d_respects_eps_across_cells() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.99e-9, 0.0, 0.0),
            Point3::new(3e-9, 0.0, 0.0),
        ];
        assert_eq!(dedup_indices_3d(&pts, 0, 1e-9), vec![0, 2]);
    }
}
