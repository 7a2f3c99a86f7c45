use super::{bounds3, Point3, PointCloud3};

/// The similarity transform applied by [`normalize_to_unit`]:
/// `normalized = (p - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitTransform {
    pub scale: f64,
    pub offset: Point3,
}

impl UnitTransform {
    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::new(
            (p.x - self.offset.x) / self.scale,
            (p.y - self.offset.y) / self.scale,
            (p.z - self.offset.z) / self.scale,
        )
    }

    pub fn invert(&self, p: &Point3) -> Point3 {
        Point3::new(
            p.x * self.scale + self.offset.x,
            p.y * self.scale + self.offset.y,
            p.z * self.scale + self.offset.z,
        )
    }

    pub fn apply_cloud(&self, cloud: &PointCloud3) -> PointCloud3 {
        let pts = cloud.points().iter().map(|p| self.apply(p)).collect();
        PointCloud3::new(pts).expect("transform of a valid cloud is valid")
    }
}

/// Centers the cloud on its bounding-box center and scales it so the largest
/// coordinate magnitude is 1. A cloud with zero extent keeps scale 1.
pub fn normalize_to_unit(cloud: &PointCloud3) -> (PointCloud3, UnitTransform) {
    let (lo, hi) = bounds3(cloud.points());
    let offset = lo.midpoint(&hi);
    let scale = cloud
        .points()
        .iter()
        .map(|p| {
            let d = *p - offset;
            d.x.abs().max(d.y.abs()).max(d.z.abs())
        })
        .fold(0.0_f64, f64::max);
    let scale = if scale > 0.0 && scale.is_finite() {
        scale
    } else {
        1.0
    };
    let t = UnitTransform { scale, offset };
    (t.apply_cloud(cloud), t)
}

pub fn denormalize(cloud: &PointCloud3, t: &UnitTransform) -> PointCloud3 {
    let pts = cloud.points().iter().map(|p| t.invert(p)).collect();
    PointCloud3::new(pts).expect("transform of a valid cloud is valid")
}
