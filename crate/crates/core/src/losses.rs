//! Edge-alignment losses between an edge map `R` and hull vertices `P`.
//!
//! * Chamfer: `Σ_a min_b ‖a-b‖² + Σ_b min_a ‖b-a‖²` (squared, unnormalized).
//! * Hausdorff: `max(max_a min_b ‖a-b‖, max_b min_a ‖b-a‖)`.
//! * Smoothness: `Σ ‖g_{i+1} - g_i‖` over the edge vectors `g_i = p_{i+1} - p_i`
//!   of the open vertex list, so the closing edge is not included.
//!
//! Gradients are taken with nearest-neighbor matches and the Hausdorff
//! argmax held fixed, which is the true gradient wherever those selections
//! are locally constant.

use crate::error::{Error, Result};
use crate::geometry::{IndexPoint, Neighbor, Point2, PointSet2, SpatialIndex};
use crate::hull::HullPolygon;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1e-5,
            beta: 1e-2,
            gamma: 1e-2,
        }
    }
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = Self { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "loss weights must be finite and nonnegative, got {all:?}"
            )));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidParameter("at least one loss weight must be positive".into()));
        }
        Ok(())
    }
}

/// Which directed Hausdorff term attained the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HausdorffSide {
    EdgeToHull,
    HullToEdge,
}

/// Correspondences frozen for one gradient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchInfo {
    /// Nearest hull vertex of every edge point.
    pub edge_to_hull: Vec<usize>,
    /// Nearest edge point of every hull vertex.
    pub hull_to_edge: Vec<usize>,
    /// `(edge index, hull index)` realizing the Hausdorff distance.
    pub hausdorff_pair: (usize, usize),
    pub hausdorff_side: HausdorffSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub l_cd: f64,
    pub l_hd: f64,
    pub l_gs: f64,
    pub total: f64,
    /// ∂total/∂(u, v) for every hull vertex.
    pub grad: Vec<Point2>,
    pub match_info: MatchInfo,
}

/// Nearest neighbor in `to` of every point of `from`.
pub fn directed_matches<P: IndexPoint>(from: &[P], to: &SpatialIndex<P>) -> Vec<Neighbor> {
    from.iter().map(|p| to.nearest(p)).collect()
}

/// Chamfer sum (both directions, squared distances) for any point type.
pub fn chamfer_sum<P: IndexPoint>(a: &[P], b: &[P]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let ia = SpatialIndex::build(a)?;
    let ib = SpatialIndex::build(b)?;
    let fwd: f64 = directed_matches(a, &ib).iter().map(|n| n.dist2).sum();
    let bwd: f64 = directed_matches(b, &ia).iter().map(|n| n.dist2).sum();
    Ok(fwd + bwd)
}

/// Symmetric Hausdorff distance for any point type.
pub fn hausdorff_distance<P: IndexPoint>(a: &[P], b: &[P]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let ia = SpatialIndex::build(a)?;
    let ib = SpatialIndex::build(b)?;
    let fwd = max_match(&directed_matches(a, &ib)).1;
    let bwd = max_match(&directed_matches(b, &ia)).1;
    Ok(fwd.max(bwd))
}

/// Index and distance of the largest match, lowest index on ties.
fn max_match(matches: &[Neighbor]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, m) in matches.iter().enumerate() {
        if m.distance > best.1 {
            best = (i, m.distance);
        }
    }
    best
}

pub fn chamfer_loss(r: &PointSet2, p: &PointSet2) -> Result<f64> {
    chamfer_sum(r.points(), p.points())
}

pub fn hausdorff_loss(r: &PointSet2, p: &PointSet2) -> Result<f64> {
    hausdorff_distance(r.points(), p.points())
}

pub fn gradient_smooth_loss(hull: &HullPolygon) -> Result<f64> {
    smoothness(hull.vertices())
}

/// Smoothness term on an open vertex list.
pub fn smoothness(vertices: &[Point2]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::TooFewVertices(vertices.len()));
    }
    let edges: Vec<Point2> = vertices.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(edges.windows(2).map(|g| (g[1] - g[0]).norm()).sum())
}

/// Edge map with a prebuilt spatial index, reusable across evaluations.
#[derive(Debug, Clone)]
pub struct EdgeTarget {
    index: SpatialIndex<Point2>,
}

impl EdgeTarget {
    pub fn new(edges: &PointSet2) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(Self {
            index: SpatialIndex::build(edges.points())?,
        })
    }

    pub fn points(&self) -> &[Point2] {
        self.index.points()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Loss values only.
    pub fn value(&self, vertices: &[Point2], w: &LossWeights) -> Result<(f64, f64, f64, f64)> {
        let (cd, hd, gs, _, _, _) = self.evaluate(vertices)?;
        Ok((cd, hd, gs, w.alpha * cd + w.beta * hd + w.gamma * gs))
    }

    #[allow(clippy::type_complexity)]
    fn evaluate(
        &self,
        vertices: &[Point2],
    ) -> Result<(f64, f64, f64, Vec<Neighbor>, Vec<Neighbor>, (usize, usize, HausdorffSide))> {
        let gs = smoothness(vertices)?;
        let hull_index = SpatialIndex::build(vertices)?;
        let edge_pts = self.index.points();
        let e2h = directed_matches(edge_pts, &hull_index);
        let h2e = directed_matches(vertices, &self.index);
        let cd = e2h.iter().map(|n| n.dist2).sum::<f64>() + h2e.iter().map(|n| n.dist2).sum::<f64>();
        let (ea, ed) = max_match(&e2h);
        let (hb, hdist) = max_match(&h2e);
        let (hd, pair) = if ed >= hdist {
            (ed, (ea, e2h[ea].index, HausdorffSide::EdgeToHull))
        } else {
            (hdist, (h2e[hb].index, hb, HausdorffSide::HullToEdge))
        };
        Ok((cd, hd, gs, e2h, h2e, pair))
    }

    /// Values, weighted total and fixed-match gradient.
    pub fn report(&self, vertices: &[Point2], w: &LossWeights) -> Result<LossReport> {
        let (cd, hd, gs, e2h, h2e, (ha, hb, side)) = self.evaluate(vertices)?;
        let edge_pts = self.index.points();
        let mut grad = vec![Point2::default(); vertices.len()];

        if w.alpha != 0.0 {
            for (a, m) in edge_pts.iter().zip(&e2h) {
                let b = vertices[m.index];
                grad[m.index] = grad[m.index] + (b - *a) * (2.0 * w.alpha);
            }
            for (j, m) in h2e.iter().enumerate() {
                let a = edge_pts[m.index];
                grad[j] = grad[j] + (vertices[j] - a) * (2.0 * w.alpha);
            }
        }
        if w.beta != 0.0 && hd > 0.0 {
            let diff = vertices[hb] - edge_pts[ha];
            grad[hb] = grad[hb] + diff * (w.beta / hd);
        }
        if w.gamma != 0.0 {
            smoothness_gradient(vertices, w.gamma, &mut grad);
        }

        Ok(LossReport {
            l_cd: cd,
            l_hd: hd,
            l_gs: gs,
            total: w.alpha * cd + w.beta * hd + w.gamma * gs,
            grad,
            match_info: MatchInfo {
                edge_to_hull: e2h.iter().map(|n| n.index).collect(),
                hull_to_edge: h2e.iter().map(|n| n.index).collect(),
                hausdorff_pair: (ha, hb),
                hausdorff_side: side,
            },
        })
    }
}

/// Adds `scale · ∂/∂p Σ‖p_i - 2p_{i+1} + p_{i+2}‖`; zero-length terms
/// contribute nothing.
fn smoothness_gradient(v: &[Point2], scale: f64, grad: &mut [Point2]) {
    for i in 0..v.len() - 2 {
        let s = (v[i + 2] - v[i + 1]) - (v[i + 1] - v[i]);
        let norm = s.norm();
        if norm == 0.0 {
            continue;
        }
        let unit = s * (scale / norm);
        grad[i] = grad[i] + unit;
        grad[i + 1] = grad[i + 1] - unit * 2.0;
        grad[i + 2] = grad[i + 2] + unit;
    }
}

pub fn combined_loss(edges: &PointSet2, hull: &HullPolygon, w: &LossWeights) -> Result<LossReport> {
    w.validate()?;
    EdgeTarget::new(edges)?.report(hull.vertices(), w)
}
