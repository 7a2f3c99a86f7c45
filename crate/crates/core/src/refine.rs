//! Edge-guided refinement of a dense cloud.
//!
//! The cloud is projected into the RGB image and its concave hull computed.
//! Hull membership and vertex order are then frozen for a window of
//! iterations. Each iteration evaluates the combined edge loss on the
//! projected hull vertices, pulls its 2D gradient back to 3D through the
//! projection Jacobian, and takes a backtracking step that moves hull-member
//! points only. Windows repeat until the iteration budget runs out, the step
//! underflows, or a window improves the loss by less than `rel_tol`.

use nalgebra::Vector2;
use serde::Serialize;

use crate::camera::CameraRig;
use crate::densify::{densify, DensifyConfig};
use crate::edges::{canny, CannyParams, GrayImage};
use crate::error::{Error, Result};
use crate::geometry::{normalize_to_unit, EdgeMap, Point2, Point3, PointCloud3};
use crate::hull::{concave_hull, HullPolygon, DEFAULT_K};
use crate::losses::{EdgeTarget, LossReport, LossWeights};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub max_iters: usize,
    /// Iterations between hull recomputations.
    pub hull_refresh_period: usize,
    /// Largest per-point displacement of a trial step, as a fraction of the
    /// cloud's half-extent.
    pub initial_step: f64,
    pub backtrack_factor: f64,
    /// Steps below this (same units as `initial_step`) count as underflow.
    pub min_step: f64,
    pub weights: LossWeights,
    pub hull_k: usize,
    /// Stop when a hull window improves the loss by less than this fraction.
    pub rel_tol: f64,
    /// Restrict motion to planes of constant RGB-frame depth.
    pub fixed_depth: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            hull_refresh_period: 10,
            initial_step: 0.01,
            backtrack_factor: 0.5,
            min_step: 1e-8,
            weights: LossWeights::default(),
            hull_k: DEFAULT_K,
            rel_tol: 1e-6,
            fixed_depth: false,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.hull_refresh_period == 0 {
            return Err(Error::InvalidParameter("hull_refresh_period must be positive".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial_step must be positive, got {}",
                self.initial_step
            )));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "backtrack_factor must be in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.initial_step) {
            return Err(Error::InvalidParameter(format!(
                "min_step must be in (0, initial_step], got {}",
                self.min_step
            )));
        }
        if self.hull_k < 3 {
            return Err(Error::InvalidParameter(format!("hull_k must be >= 3, got {}", self.hull_k)));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("rel_tol must be >= 0, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

/// One refinement iteration. Loss values are those after the step when it
/// was accepted, otherwise the unchanged current values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub window: usize,
    pub total: f64,
    pub l_cd: f64,
    pub l_hd: f64,
    pub l_gs: f64,
    /// Accepted step (fraction of half-extent), 0 when rejected.
    pub step: f64,
    pub accepted: bool,
    pub hull_size: usize,
    pub culled: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    StepUnderflow,
    Converged,
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineSummary {
    pub iterations: usize,
    pub accepted_steps: usize,
    pub stop_reason: StopReason,
    pub initial_total: f64,
    pub final_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineTrace {
    pub records: Vec<IterationRecord>,
    pub summary: RefineSummary,
}

impl RefineTrace {
    pub fn accepted_steps(&self) -> usize {
        self.summary.accepted_steps
    }

    /// Loss sequences of accepted steps, grouped by hull window.
    pub fn accepted_by_window(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut last_window = None;
        for r in self.records.iter().filter(|r| r.accepted) {
            if last_window != Some(r.window) {
                out.push(Vec::new());
                last_window = Some(r.window);
            }
            out.last_mut().expect("pushed").push(r.total);
        }
        out
    }

    /// One JSON object per iteration, then a summary object.
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("record serializes"));
            s.push('\n');
        }
        s.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        s.push('\n');
        s
    }
}

/// Projection, hull and loss of `cloud` against `edges`, from scratch.
pub fn edge_loss(
    cloud: &PointCloud3,
    edges: &EdgeMap,
    rig: &CameraRig,
    hull_k: usize,
    weights: &LossWeights,
) -> Result<(HullPolygon, LossReport)> {
    if edges.is_empty() {
        return Err(Error::EmptyEdgeMap);
    }
    let proj = rig.project_cloud(cloud)?;
    let hull = concave_hull(&proj.points, &proj.index_map, hull_k)?;
    let report = EdgeTarget::new(edges)?.report(hull.vertices(), weights)?;
    Ok((hull, report))
}

fn project_members(points: &[Point3], members: &[usize], rig: &CameraRig) -> Option<Vec<Point2>> {
    members.iter().map(|&i| rig.project(&points[i]).ok()).collect()
}

/// Moves hull-member points of `cloud` so the projected hull fits `edges`.
pub fn refine(
    cloud: &PointCloud3,
    edges: &EdgeMap,
    rig: &CameraRig,
    cfg: &RefineConfig,
) -> Result<(PointCloud3, RefineTrace)> {
    cfg.validate()?;
    if edges.is_empty() {
        return Err(Error::EmptyEdgeMap);
    }
    let target = EdgeTarget::new(edges)?;
    let w = &cfg.weights;
    let unit = normalize_to_unit(cloud).1.scale;
    let mut points = cloud.points().to_vec();
    let mut records = Vec::new();
    let mut accepted_steps = 0;
    let mut iteration = 0;
    let mut window = 0;
    let mut initial_total = None;
    let mut underflow_streak = false;

    let stop_reason = 'outer: loop {
        if iteration >= cfg.max_iters {
            break StopReason::MaxIterations;
        }
        let snapshot = PointCloud3::new(points.clone())?;
        let proj = rig.project_cloud(&snapshot)?;
        let hull = concave_hull(&proj.points, &proj.index_map, cfg.hull_k)?;
        let members = hull.source_indices().to_vec();
        let mut verts = hull.vertices().to_vec();
        let (mut cd, mut hd, mut gs, mut total) = target.value(&verts, w)?;
        initial_total.get_or_insert(total);
        let window_start = total;
        let mut window_accepted = 0;

        for _ in 0..cfg.hull_refresh_period {
            if iteration >= cfg.max_iters {
                break 'outer StopReason::MaxIterations;
            }
            let report = target.report(&verts, w)?;
            let grads = pull_back(&points, &members, &report.grad, rig, cfg.fixed_depth)?;
            let gmax = grads.iter().map(|g| g.norm()).fold(0.0, f64::max);
            if gmax == 0.0 {
                records.push(IterationRecord {
                    iteration,
                    window,
                    total,
                    l_cd: cd,
                    l_hd: hd,
                    l_gs: gs,
                    step: 0.0,
                    accepted: false,
                    hull_size: members.len(),
                    culled: proj.culled,
                });
                break 'outer StopReason::Stationary;
            }

            let mut step = cfg.initial_step;
            let mut accepted = None;
            while step >= cfg.min_step {
                let scale = step * unit / gmax;
                let mut trial = points.clone();
                for (&m, g) in members.iter().zip(&grads) {
                    trial[m] = trial[m] - *g * scale;
                }
                if let Some(trial_verts) = project_members(&trial, &members, rig) {
                    let value = target.value(&trial_verts, w)?;
                    if value.3 < total {
                        accepted = Some((trial, trial_verts, value));
                        break;
                    }
                }
                step *= cfg.backtrack_factor;
            }

            let ok = accepted.is_some();
            if let Some((trial, trial_verts, value)) = accepted {
                points = trial;
                verts = trial_verts;
                (cd, hd, gs, total) = value;
                accepted_steps += 1;
                window_accepted += 1;
            }
            records.push(IterationRecord {
                iteration,
                window,
                total,
                l_cd: cd,
                l_hd: hd,
                l_gs: gs,
                step: if ok { step } else { 0.0 },
                accepted: ok,
                hull_size: members.len(),
                culled: proj.culled,
            });
            iteration += 1;
            if !ok {
                // a fresh hull may still allow progress, but only once in a row
                if window_accepted == 0 && underflow_streak {
                    break 'outer StopReason::StepUnderflow;
                }
                underflow_streak = window_accepted == 0;
                break;
            }
            underflow_streak = false;
        }

        window += 1;
        if window_accepted > 0
            && (window_start <= 0.0 || (window_start - total) / window_start < cfg.rel_tol) {
                break StopReason::Converged;
            }
    };

    let out = PointCloud3::new(points)?;
    let final_total = match edge_loss(&out, edges, rig, cfg.hull_k, w) {
        Ok((_, report)) => report.total,
        Err(_) => f64::NAN,
    };
    let initial_total = match initial_total {
        Some(v) => v,
        None => edge_loss(cloud, edges, rig, cfg.hull_k, w)?.1.total,
    };
    Ok((
        out,
        RefineTrace {
            records,
            summary: RefineSummary {
                iterations: iteration,
                accepted_steps,
                stop_reason,
                initial_total,
                final_total,
            },
        },
    ))
}

/// 3D gradients of the hull members: `Jᵀ · ∂L/∂(u, v)`.
fn pull_back(
    points: &[Point3],
    members: &[usize],
    grad2: &[Point2],
    rig: &CameraRig,
    fixed_depth: bool,
) -> Result<Vec<Point3>> {
    let rot_t = rig.tof_to_rgb_rotation().transpose();
    members
        .iter()
        .zip(grad2)
        .map(|(&m, g)| {
            let q = rig.tof_to_rgb_frame(&points[m]);
            if !(q.z > crate::camera::NEAR_PLANE) {
                return Err(Error::BehindCamera { depth: q.z });
            }
            let mut d = rig.pinhole_jacobian(&q).transpose() * Vector2::new(g.u, g.v);
            if fixed_depth {
                d.z = 0.0;
            }
            let d = rot_t * d;
            Ok(Point3::new(d.x, d.y, d.z))
        })
        .collect()
}

/// Densify, detect edges and refine.
pub fn superres(
    sparse: &PointCloud3,
    rgb: &GrayImage,
    rig: &CameraRig,
    dcfg: &DensifyConfig,
    rcfg: &RefineConfig,
    ccfg: &CannyParams,
) -> Result<(PointCloud3, RefineTrace)> {
    if rgb.width() != rig.width || rgb.height() != rig.height {
        return Err(Error::SizeMismatch {
            calib_width: rig.width,
            calib_height: rig.height,
            image_width: rgb.width(),
            image_height: rgb.height(),
        });
    }
    let edges = canny(rgb, ccfg)?;
    if edges.is_empty() {
        return Err(Error::EmptyEdgeMap);
    }
    let dense = densify(sparse, dcfg)?;
    refine(&dense, &edges, rig, rcfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;
    use crate::geometry::{PointSet2, SetRole};

    fn rig() -> CameraRig {
        CameraRig::with_identity_extrinsics(Intrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap(), 100, 100).unwrap()
    }

    fn grid_cloud() -> PointCloud3 {
        // 5x5 grid at z = 1 projecting to integer pixels 30..=70
        let mut pts = Vec::new();
        for j in 0..5 {
            for i in 0..5 {
                pts.push(Point3::new(-0.2 + 0.1 * i as f64, -0.2 + 0.1 * j as f64, 1.0));
            }
        }
        PointCloud3::new(pts).unwrap()
    }

    #[test]
    fn zero_iterations_is_identity() {
        let c = grid_cloud();
        let edges = PointSet2::new(vec![Point2::new(10.0, 10.0)], SetRole::EdgeMap).unwrap();
        let cfg = RefineConfig {
            max_iters: 0,
            ..Default::default()
        };
        let (out, trace) = refine(&c, &edges, &rig(), &cfg).unwrap();
        assert_eq!(out, c);
        assert!(trace.records.is_empty());
    }

    #[test]
    fn stationary_when_hull_sits_on_edges() {
        let c = grid_cloud();
        let r = rig();
        let (hull, _) = edge_loss(&c, &PointSet2::new(vec![Point2::default()], SetRole::EdgeMap).unwrap(), &r, 20, &LossWeights::default()).unwrap();
        let edges = hull.as_point_set();
        let edges = PointSet2::new(edges.points().to_vec(), SetRole::EdgeMap).unwrap();
        let cfg = RefineConfig {
            weights: LossWeights::new(1e-5, 1e-2, 0.0).unwrap(),
            ..Default::default()
        };
        let (out, trace) = refine(&c, &edges, &r, &cfg).unwrap();
        assert_eq!(out, c);
        assert_eq!(trace.accepted_steps(), 0);
        assert_eq!(trace.summary.stop_reason, StopReason::Stationary);
    }

    #[test]
    fn empty_edges_rejected() {
        let edges = PointSet2::new(vec![], SetRole::EdgeMap).unwrap();
        assert!(matches!(
            refine(&grid_cloud(), &edges, &rig(), &RefineConfig::default()),
            Err(Error::EmptyEdgeMap)
        ));
    }

    #[test]
    fn culled_cloud_rejected() {
        let behind = PointCloud3::new(vec![Point3::new(0.0, 0.0, -1.0); 4]).unwrap();
        let edges = PointSet2::new(vec![Point2::new(1.0, 1.0)], SetRole::EdgeMap).unwrap();
        assert!(matches!(
            refine(&behind, &edges, &rig(), &RefineConfig::default()),
            Err(Error::AllPointsCulled { .. })
        ));
    }

    #[test]
    fn pulls_hull_outward_to_edges() {
        // hull on the 30..=70 pixel square; edges are its 16 boundary
        // points scaled by 1.25 about the center, so an exact fit exists
        let mut e = Vec::new();
        for j in 0..5 {
            for i in 0..5 {
                if i == 0 || j == 0 || i == 4 || j == 4 {
                    e.push(Point2::new(25.0 + 12.5 * i as f64, 25.0 + 12.5 * j as f64));
                }
            }
        }
        let edges = PointSet2::new(e, SetRole::EdgeMap).unwrap();
        let c = grid_cloud();
        let r = rig();
        let cfg = RefineConfig {
            weights: LossWeights::new(1e-3, 1e-2, 0.0).unwrap(),
            // k = 20 on 25 points is a convex hull that drops the side points
            hull_k: 4,
            ..Default::default()
        };
        let (out, trace) = refine(&c, &edges, &r, &cfg).unwrap();
        assert!(trace.accepted_steps() > 0);
        assert!(trace.summary.final_total < 0.5 * trace.summary.initial_total);
        for w in trace.accepted_by_window() {
            assert!(w.windows(2).all(|p| p[1] <= p[0]));
        }
        // the center point is never on the hull
        assert_eq!(out.points()[12], c.points()[12]);
    }
}
