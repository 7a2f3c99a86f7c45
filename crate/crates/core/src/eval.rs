//! Evaluation metrics between a predicted and a ground-truth cloud.
//!
//! Unlike the raw training loss, the Chamfer score here is divided by the
//! total point count so clouds of different sizes compare fairly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_to_unit, PointCloud3};
use crate::losses::{chamfer_sum, hausdorff_distance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cd: f64,
    pub hd: f64,
    pub normalized: bool,
    pub pred_count: usize,
    pub gt_count: usize,
    /// Scale applied to both clouds before measuring; 1 when not normalized.
    #[serde(skip, default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Count-normalized Chamfer and symmetric Hausdorff distance. With
/// `normalize`, both clouds are first mapped by the transform that fits `gt`
/// into the unit cube.
pub fn eval_metrics(pred: &PointCloud3, gt: &PointCloud3, normalize: bool) -> Result<EvalReport> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (p, g, scale) = if normalize {
        let (g, t) = normalize_to_unit(gt);
        (t.apply_cloud(pred), g, t.scale)
    } else {
        (pred.clone(), gt.clone(), 1.0)
    };
    let total = (p.len() + g.len()) as f64;
    Ok(EvalReport {
        cd: chamfer_sum(p.points(), g.points())? / total,
        hd: hausdorff_distance(p.points(), g.points())?,
        normalized: normalize,
        pred_count: pred.len(),
        gt_count: gt.len(),
        scale,
    })
}
