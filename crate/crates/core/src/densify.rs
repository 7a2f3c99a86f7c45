//! Deterministic upsampling by k-nearest-neighbor midpoints.
//!
//! Each round adds the midpoint between every point and each of its
//! `k_interp` nearest neighbors, dropping near-duplicates. Rounds repeat until
//! the cloud holds at least `rate · n` points; the originals are then kept
//! and the generated points binned and thinned to hit `rate · n` exactly.

use crate::error::{Error, Result};
use crate::geometry::{bin_downsample_anchored, dedup_indices_3d, Point3, PointCloud3, SpatialIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensifyConfig {
    pub rate: usize,
    pub k_interp: usize,
    /// Midpoints within this distance (meters) of an existing point are dropped.
    pub dedupe_eps: f64,
}

impl Default for DensifyConfig {
    fn default() -> Self {
        Self {
            rate: 4,
            k_interp: 4,
            dedupe_eps: 1e-9,
        }
    }
}

impl DensifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rate < 2 {
            return Err(Error::InvalidParameter(format!("rate must be >= 2, got {}", self.rate)));
        }
        if self.k_interp < 2 {
            return Err(Error::InvalidParameter(format!(
                "k_interp must be >= 2, got {}",
                self.k_interp
            )));
        }
        if !(self.dedupe_eps >= 0.0 && self.dedupe_eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dedupe_eps must be finite and >= 0, got {}",
                self.dedupe_eps
            )));
        }
        Ok(())
    }
}

pub fn densify(cloud: &PointCloud3, cfg: &DensifyConfig) -> Result<PointCloud3> {
    cfg.validate()?;
    let n = cloud.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let originals = cloud.points();
    if dedup_indices_3d(originals, 0, cfg.dedupe_eps).len() < 2 {
        return Err(Error::TooFewPoints(1));
    }
    let target = cfg.rate * n;

    // originals first, generated points after
    let mut all: Vec<Point3> = originals.to_vec();
    while all.len() < target {
        let index = SpatialIndex::build(&all)?;
        let k = cfg.k_interp.min(all.len() - 1);
        let mut grown = all.clone();
        for p in &all {
            // the first neighbor is the point itself (or an exact duplicate)
            for nb in index.knn(p, k + 1)?.into_iter().skip(1) {
                grown.push(p.midpoint(&all[nb.index]));
            }
        }
        let before = all.len();
        let keep = dedup_indices_3d(&grown, before, cfg.dedupe_eps);
        all = keep.into_iter().map(|i| grown[i]).collect();
        if all.len() == before {
            // only possible when every point is a duplicate of another
            return Err(Error::TooFewPoints(before));
        }
    }

    let generated = &all[n..];
    let out = bin_downsample_anchored(originals, generated, target - n)?;
    PointCloud3::new(out)
}
