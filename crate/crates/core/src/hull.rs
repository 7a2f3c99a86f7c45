//! k-nearest-neighbor concave hull (Moreira & Santos) over projected points.
//!
//! Starting at the point with the lowest `v` (then lowest `u`), the walk
//! repeatedly looks at the `k` nearest unused points, tries them in order of
//! largest right-hand turn from the previous edge, and takes the first one
//! whose new edge crosses no existing hull edge. When a walk gets stuck or
//! leaves a point outside, it restarts with `k + 1`.

use robust::{orient2d, Coord};

use crate::error::{Error, Result};
use crate::geometry::{dedup_indices_2d, IndexPoint, Point2, PointSet2, SetRole};

pub const DEFAULT_K: usize = 20;

/// Points closer than this (in pixels) are merged before the walk.
pub const DEDUP_EPS: f64 = 1e-9;

/// Distance (pixels) within which a point counts as lying on an edge.
pub const ON_EDGE_TOL: f64 = 1e-9;

/// Counter-clockwise simple polygon over a subset of the input points.
#[derive(Debug, Clone, PartialEq)]
pub struct HullPolygon {
    vertices: Vec<Point2>,
    source_indices: Vec<usize>,
    k_used: usize,
}

impl HullPolygon {
    /// Wraps an existing vertex ring. Only the length invariants are checked.
    pub fn new(vertices: Vec<Point2>, source_indices: Vec<usize>, k_used: usize) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        if vertices.len() != source_indices.len() {
            return Err(Error::InvalidParameter(format!(
                "{} vertices but {} source indices",
                vertices.len(),
                source_indices.len()
            )));
        }
        Ok(Self {
            vertices,
            source_indices,
            k_used,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    pub fn k_used(&self) -> usize {
        self.k_used
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area, positive for counter-clockwise order.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn as_point_set(&self) -> PointSet2 {
        PointSet2::new(self.vertices.clone(), SetRole::Hull).expect("hull has at least 3 vertices")
    }

    pub fn with_vertices(&self, vertices: Vec<Point2>) -> Result<Self> {
        Self::new(vertices, self.source_indices.clone(), self.k_used)
    }
}

pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        twice += a.u * b.v - b.u * a.v;
    }
    0.5 * twice
}

#[inline]
fn coord(p: &Point2) -> Coord<f64> {
    Coord { x: p.u, y: p.v }
}

/// Sign of the turn a→b→c: positive for counter-clockwise, exact.
#[inline]
pub fn orientation(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

fn on_segment_collinear(a: &Point2, b: &Point2, p: &Point2) -> bool {
    p.u >= a.u.min(b.u) && p.u <= a.u.max(b.u) && p.v >= a.v.min(b.v) && p.v <= a.v.max(b.v)
}

/// Closed-segment intersection test, touching included.
pub fn segments_intersect(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment_collinear(a, b, c))
        || (o2 == 0.0 && on_segment_collinear(a, b, d))
        || (o3 == 0.0 && on_segment_collinear(c, d, a))
        || (o4 == 0.0 && on_segment_collinear(c, d, b))
}

/// True when no two non-adjacent edges intersect, no vertex repeats, and no
/// pair of adjacent edges folds back over itself.
pub fn polygon_is_simple(poly: &HullPolygon) -> bool {
    ring_is_simple(poly.vertices())
}

pub(crate) fn ring_is_simple(v: &[Point2]) -> bool {
    let m = v.len();
    if m < 3 {
        return false;
    }
    for i in 0..m {
        for j in i + 1..m {
            if v[i] == v[j] {
                return false;
            }
        }
    }
    for i in 0..m {
        // adjacent pair (i, i+1) meeting at v[i+1]
        let a = v[i];
        let b = v[(i + 1) % m];
        let c = v[(i + 2) % m];
        if orientation(&a, &b, &c) == 0.0 && (a - b).dot(&(c - b)) > 0.0 {
            return false;
        }
    }
    if m == 3 {
        return orientation(&v[0], &v[1], &v[2]) != 0.0;
    }
    for i in 0..m {
        let a = v[i];
        let b = v[(i + 1) % m];
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_intersect(&a, &b, &v[j], &v[(j + 1) % m]) {
                return false;
            }
        }
    }
    true
}

fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = *b - *a;
    let len2 = ab.dot(&ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((*p - *a).dot(&ab) / len2).clamp(0.0, 1.0);
    p.distance(&(*a + ab * t))
}

/// Inside-or-on test: on-edge within [`ON_EDGE_TOL`], otherwise even-odd ray casting.
pub fn point_in_polygon(ring: &[Point2], p: &Point2) -> bool {
    let m = ring.len();
    for i in 0..m {
        if point_segment_distance(p, &ring[i], &ring[(i + 1) % m]) <= ON_EDGE_TOL {
            return true;
        }
    }
    let mut inside = false;
    for i in 0..m {
        let a = ring[i];
        let b = ring[(i + 1) % m];
        if (a.v > p.v) != (b.v > p.v) {
            let u_cross = a.u + (p.v - a.v) * (b.u - a.u) / (b.v - a.v);
            if p.u < u_cross {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn contains_all(poly: &HullPolygon, points: &PointSet2) -> bool {
    points
        .points()
        .iter()
        .all(|p| point_in_polygon(poly.vertices(), p))
}

/// Concave hull of `points`. `index_map[i]` is recorded as the source index
/// of input point `i`; `k` is clamped to `3..=count-1`.
pub fn concave_hull(points: &PointSet2, index_map: &[usize], k: usize) -> Result<HullPolygon> {
    if index_map.len() != points.len() {
        return Err(Error::InvalidParameter(format!(
            "index map has {} entries for {} points",
            index_map.len(),
            points.len()
        )));
    }
    let kept = dedup_indices_2d(points.points(), DEDUP_EPS);
    let pts: Vec<Point2> = kept.iter().map(|&i| points.points()[i]).collect();
    let sources: Vec<usize> = kept.iter().map(|&i| index_map[i]).collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    if all_collinear(&pts) {
        return Err(Error::DegenerateCollinear);
    }

    let finish = |ring: Vec<usize>, k_used: usize| {
        let mut ring = ring;
        let verts: Vec<Point2> = ring.iter().map(|&i| pts[i]).collect();
        if signed_area(&verts) < 0.0 {
            ring[1..].reverse();
        }
        HullPolygon {
            vertices: ring.iter().map(|&i| pts[i]).collect(),
            source_indices: ring.iter().map(|&i| sources[i]).collect(),
            k_used,
        }
    };

    if n == 3 {
        return Ok(finish(vec![0, 1, 2], 3));
    }

    let max_k = n - 1;
    let start_k = k.clamp(3, max_k);
    for kk in start_k..=max_k {
        if let Some(ring) = walk(&pts, kk) {
            let verts: Vec<Point2> = ring.iter().map(|&i| pts[i]).collect();
            if ring_is_simple(&verts) && pts.iter().all(|p| point_in_polygon(&verts, p)) {
                return Ok(finish(ring, kk));
            }
        }
    }
    Err(Error::HullFailed { max_k })
}

/// Convenience wrapper using the identity index map.
pub fn concave_hull_of(points: &PointSet2, k: usize) -> Result<HullPolygon> {
    let map: Vec<usize> = (0..points.len()).collect();
    concave_hull(points, &map, k)
}

fn all_collinear(pts: &[Point2]) -> bool {
    let (a, b) = (pts[0], pts[1]);
    pts[2..].iter().all(|c| orientation(&a, &b, c) == 0.0)
}

/// Counter-clockwise angle from `from` to `to`, in `(0, 2π]`.
fn turn_key(from: &Point2, to: &Point2) -> f64 {
    let ang = from.cross(to).atan2(from.dot(to));
    if ang > 0.0 {
        ang
    } else {
        ang + std::f64::consts::TAU
    }
}

/// One boundary walk with a fixed `k`. Returns the vertex ring as indices
/// into `pts`, or `None` if every candidate at some step crosses the hull.
fn walk(pts: &[Point2], k: usize) -> Option<Vec<usize>> {
    let n = pts.len();
    let first = (0..n)
        .min_by(|&a, &b| {
            pts[a]
                .v
                .total_cmp(&pts[b].v)
                .then(pts[a].u.total_cmp(&pts[b].u))
                .then(a.cmp(&b))
        })
        .expect("non-empty");
    let mut used = vec![false; n];
    used[first] = true;
    let mut ring = vec![first];
    let mut back = Point2::new(-1.0, 0.0);
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);

    loop {
        if ring.len() > n {
            return None;
        }
        let cur = *ring.last().expect("non-empty");
        let cp = pts[cur];
        scratch.clear();
        // the start rejoins the pool only after three steps; closing earlier
        // admits sliver triangles that fold back along one side
        let can_close = ring.len() >= 4;
        scratch.extend(
            (0..n)
                .filter(|&i| !used[i] || (can_close && i == first))
                .map(|i| (pts[i].dist2(&cp), i)),
        );
        let take = k.min(scratch.len());
        if take < scratch.len() {
            scratch.select_nth_unstable_by(take, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            scratch.truncate(take);
        }
        if scratch.is_empty() {
            return None;
        }
        let mut cands: Vec<(f64, f64, usize)> = scratch
            .iter()
            .map(|&(d2, i)| (turn_key(&back, &(pts[i] - cp)), d2, i))
            .collect();
        cands.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });

        let mut chosen = None;
        for &(key, _, c) in &cands {
            if key >= std::f64::consts::TAU {
                // straight back along the previous edge
                continue;
            }
            let closing = c == first;
            let cand = pts[c];
            let edges = ring.len().saturating_sub(2);
            let skip_first = usize::from(closing);
            let crosses = (skip_first..edges).any(|j| {
                segments_intersect(&cp, &cand, &pts[ring[j]], &pts[ring[j + 1]])
            });
            if crosses {
                continue;
            }
            if closing && ring.len() >= 2 {
                let second = pts[ring[1]];
                if orientation(&cp, &cand, &second) == 0.0 && on_segment_collinear(&cp, &cand, &second) {
                    continue;
                }
            }
            if closing {
                // closing early (e.g. straight back along one side) leaves
                // points outside; keep walking instead
                let verts: Vec<Point2> = ring.iter().map(|&i| pts[i]).collect();
                if !pts.iter().all(|p| point_in_polygon(&verts, p)) {
                    continue;
                }
            }
            chosen = Some(c);
            break;
        }
        let c = chosen?;
        if c == first {
            return Some(ring);
        }
        used[c] = true;
        back = cp - pts[c];
        ring.push(c);
    }
}
