use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Point2, Point3};
use crate::error::{Error, Result};

/// Points that can be stored in a [`SpatialIndex`].
pub trait IndexPoint: Copy {
    const DIM: usize;
    fn coord(&self, axis: usize) -> f64;
    /// Squared Euclidean distance, summed over axes in order.
    fn dist2(&self, other: &Self) -> f64;
}

impl IndexPoint for Point2 {
    const DIM: usize = 2;
    #[inline]
    fn coord(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.u
        } else {
            self.v
        }
    }
    #[inline]
    fn dist2(&self, o: &Self) -> f64 {
        let du = self.u - o.u;
        let dv = self.v - o.v;
        du * du + dv * dv
    }
}

impl IndexPoint for Point3 {
    const DIM: usize = 3;
    #[inline]
    fn coord(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
    #[inline]
    fn dist2(&self, o: &Self) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        dx * dx + dy * dy + dz * dz
    }
}

/// A neighbor returned by a query: index into the indexed slice, and the
/// (unsquared) distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
    pub dist2: f64,
}

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable kd-tree over a snapshot of points.
///
/// Queries are exact. Among points at the same distance the lowest original
/// index wins, so results match a linear scan that keeps the first minimum.
#[derive(Debug, Clone)]
pub struct SpatialIndex<P: IndexPoint> {
    points: Vec<P>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(PartialEq)]
struct HeapItem {
    dist2: f64,
    index: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P: IndexPoint> SpatialIndex<P> {
    pub fn build(points: &[P]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("spatial index"));
        }
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        index.build_node(0, points.len());
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split along the axis of widest spread
        let mut axis = 0;
        let mut widest = f64::NEG_INFINITY;
        for a in 0..P::DIM {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| self.points[i].coord(a))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                    (lo.min(c), hi.max(c))
                });
            if hi - lo > widest {
                widest = hi - lo;
                axis = a;
            }
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a]
                .coord(axis)
                .total_cmp(&points[b].coord(axis))
                .then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]].coord(axis);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    /// Single nearest neighbor.
    pub fn nearest(&self, query: &P) -> Neighbor {
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_rec(0, query, &mut best);
        Neighbor {
            index: best.1,
            distance: best.0.sqrt(),
            dist2: best.0,
        }
    }

    fn nearest_rec(&self, node: usize, query: &P, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = self.points[i].dist2(query);
                    if d2 < best.0 || (d2 == best.0 && i < best.1) {
                        *best = (d2, i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query.coord(axis) - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.nearest_rec(near, query, best);
                // equality still has to be visited for the index tie rule
                if diff * diff <= best.0 {
                    self.nearest_rec(far, query, best);
                }
            }
        }
    }

    /// The `k` nearest neighbors in ascending (distance, index) order.
    pub fn knn(&self, query: &P, k: usize) -> Result<Vec<Neighbor>> {
        if k > self.points.len() {
            return Err(Error::InsufficientPoints {
                needed: k,
                available: self.points.len(),
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, query, k, &mut heap);
        let mut out: Vec<Neighbor> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|h| Neighbor {
                index: h.index,
                distance: h.dist2.sqrt(),
                dist2: h.dist2,
            })
            .collect();
        out.truncate(k);
        Ok(out)
    }

    fn knn_rec(&self, node: usize, query: &P, k: usize, heap: &mut BinaryHeap<HeapItem>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let item = HeapItem {
                        dist2: self.points[i].dist2(query),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(item);
                    } else if item < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(item);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query.coord(axis) - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_rec(near, query, k, heap);
                let worst = if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().map_or(f64::INFINITY, |h| h.dist2)
                };
                if diff * diff <= worst {
                    self.knn_rec(far, query, k, heap);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_nn(points: &[Point2], q: &Point2) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = p.dist2(q);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            SpatialIndex::<Point2>::build(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn single_point() {
        let idx = SpatialIndex::build(&[Point2::new(1.0, 2.0)]).unwrap();
        let n = idx.nearest(&Point2::new(5.0, 5.0));
        assert_eq!(n.index, 0);
        assert_eq!(n.distance, 5.0);
    }

    #[test]
    fn member_query_has_zero_distance() {
        let pts: Vec<Point2> = (0..50).map(|i| Point2::new(i as f64, (i * i) as f64)).collect();
        let idx = SpatialIndex::build(&pts).unwrap();
        let n = idx.nearest(&pts[17]);
        assert_eq!(n.distance, 0.0);
        assert_eq!(n.index, 17);
    }

    #[test]
    fn knn_on_a_line() {
        let pts: Vec<Point2> = (0..4).map(|i| Point2::new(i as f64, 0.0)).collect();
        let idx = SpatialIndex::build(&pts).unwrap();
        let r = idx.knn(&Point2::new(0.0, 0.0), 2).unwrap();
        assert_eq!(r.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 1]);
        let all = idx.knn(&Point2::new(0.0, 0.0), 4).unwrap();
        assert_eq!(all.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert!(matches!(
            idx.knn(&Point2::new(0.0, 0.0), 5),
            Err(Error::InsufficientPoints { needed: 5, available: 4 })
        ));
    }

    #[test]
    fn equidistant_tie_prefers_lowest_index() {
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)];
        let idx = SpatialIndex::build(&pts).unwrap();
        let q = Point2::new(1.0, 0.0);
        assert_eq!(idx.knn(&q, 1).unwrap()[0].index, 0);
        assert_eq!(idx.nearest(&q).index, 0);
        // same with the order reversed in a larger, duplicated set
        let mut many = vec![Point2::new(5.0, 5.0); 40];
        many.push(Point2::new(0.0, 0.0));
        let idx = SpatialIndex::build(&many).unwrap();
        assert_eq!(idx.nearest(&Point2::new(5.0, 5.0)).index, 0);
        let r = idx.knn(&Point2::new(5.0, 5.0), 3).unwrap();
        assert_eq!(r.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn matches_linear_scan_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point2> = (0..256)
            .map(|_| Point2::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let idx = SpatialIndex::build(&pts).unwrap();
        for _ in 0..1000 {
            let q = Point2::new(rng.gen_range(-10.0..110.0), rng.gen_range(-10.0..110.0));
            let n = idx.nearest(&q);
            let (i, d2) = linear_nn(&pts, &q);
            assert_eq!(n.index, i);
            assert_eq!(n.dist2, d2);
        }
    }
}
