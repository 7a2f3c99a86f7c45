use std::collections::BTreeMap;

use super::{bounds3, index::IndexPoint, Point3, PointCloud3};
use crate::error::{Error, Result};

const BISECTION_STEPS: usize = 60;

/// Downsamples `cloud` to exactly `target` points by voxel binning.
///
/// The voxel edge is bisected to the largest size that still yields at least
/// `target` occupied bins; bin centroids are then thinned to `target` by
/// farthest-point selection.
pub fn bin_downsample(cloud: &PointCloud3, target: usize) -> Result<PointCloud3> {
    bin_downsample_with_voxel(cloud, target).map(|(c, _)| c)
}

/// Like [`bin_downsample`], also returning the voxel edge length used
/// (0 when the input is returned unchanged).
pub fn bin_downsample_with_voxel(cloud: &PointCloud3, target: usize) -> Result<(PointCloud3, f64)> {
    let n = cloud.len();
    if target == 0 || target > n {
        return Err(Error::InvalidTarget {
            target,
            available: n,
        });
    }
    if target == n {
        return Ok((cloud.clone(), 0.0));
    }
    let (edge, centroids) = bracket_voxel(cloud.points(), target)?;
    let picked = farthest_point_select(&centroids, &[], target);
    let out = picked.into_iter().map(|i| centroids[i]).collect();
    Ok((PointCloud3::new(out)?, edge))
}

/// Keeps every anchor and adds `extra` bin centroids of `candidates`, chosen
/// by farthest-point selection seeded with the anchors. Anchors come first in
/// the output, in their original order.
pub fn bin_downsample_anchored(
    anchors: &[Point3],
    candidates: &[Point3],
    extra: usize,
) -> Result<Vec<Point3>> {
    let mut out = anchors.to_vec();
    if extra == 0 {
        return Ok(out);
    }
    if candidates.len() < extra {
        return Err(Error::InvalidTarget {
            target: extra,
            available: candidates.len(),
        });
    }
    let centroids = if candidates.len() == extra {
        candidates.to_vec()
    } else {
        bracket_voxel(candidates, extra)?.1
    };
    let picked = farthest_point_select(&centroids, anchors, extra);
    out.extend(picked.into_iter().map(|i| centroids[i]));
    Ok(out)
}

/// Finds the largest voxel edge giving at least `need` occupied bins, and the
/// centroids of those bins in key order.
fn bracket_voxel(points: &[Point3], need: usize) -> Result<(f64, Vec<Point3>)> {
    let (lo_corner, hi_corner) = bounds3(points);
    let extent = (hi_corner.x - lo_corner.x)
        .max(hi_corner.y - lo_corner.y)
        .max(hi_corner.z - lo_corner.z);
    if extent == 0.0 {
        // every point coincides
        if need <= 1 {
            return Ok((0.0, vec![points[0]]));
        }
        return Err(Error::InvalidTarget {
            target: need,
            available: 1,
        });
    }

    let mut fine = extent;
    let mut fine_bins = voxel_centroids(points, &lo_corner, fine);
    let mut coarse = f64::INFINITY;
    let mut halvings = 0;
    while fine_bins.len() < need {
        coarse = fine;
        fine *= 0.5;
        halvings += 1;
        if halvings > 200 {
            return Err(Error::InvalidTarget {
                target: need,
                available: fine_bins.len(),
            });
        }
        fine_bins = voxel_centroids(points, &lo_corner, fine);
    }
    if coarse.is_finite() {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (fine + coarse);
            if mid <= fine || mid >= coarse {
                break;
            }
            let bins = voxel_centroids(points, &lo_corner, mid);
            if bins.len() >= need {
                fine = mid;
                fine_bins = bins;
            } else {
                coarse = mid;
            }
        }
    }
    Ok((fine, fine_bins))
}

fn voxel_centroids(points: &[Point3], origin: &Point3, edge: f64) -> Vec<Point3> {
    let mut bins: BTreeMap<(i64, i64, i64), (Point3, usize)> = BTreeMap::new();
    for p in points {
        let key = (
            ((p.x - origin.x) / edge).floor() as i64,
            ((p.y - origin.y) / edge).floor() as i64,
            ((p.z - origin.z) / edge).floor() as i64,
        );
        let e = bins.entry(key).or_insert((Point3::default(), 0));
        e.0 = e.0 + *p;
        e.1 += 1;
    }
    bins.into_values()
        .map(|(sum, n)| sum * (1.0 / n as f64))
        .collect()
}

/// Greedy farthest-point selection of `count` indices from `points`. With no
/// seeds the first pick is index 0; ties go to the lowest index.
fn farthest_point_select(points: &[Point3], seeds: &[Point3], count: usize) -> Vec<usize> {
    let count = count.min(points.len());
    let mut min_d2: Vec<f64> = points
        .iter()
        .map(|p| {
            seeds
                .iter()
                .map(|s| p.dist2(s))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut taken = vec![false; points.len()];
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best = usize::MAX;
        let mut best_d2 = f64::NEG_INFINITY;
        for (i, &d2) in min_d2.iter().enumerate() {
            if !taken[i] && d2 > best_d2 {
                best = i;
                best_d2 = d2;
            }
        }
        taken[best] = true;
        picked.push(best);
        let chosen = points[best];
        for (i, p) in points.iter().enumerate() {
            if !taken[i] {
                let d2 = p.dist2(&chosen);
                if d2 < min_d2[i] {
                    min_d2[i] = d2;
                }
            }
        }
    }
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud3 {
        PointCloud3::new(
            (0..n)
                .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_when_target_equals_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_cloud(&mut rng, 37);
        assert_eq!(bin_downsample(&c, 37).unwrap(), c);
    }

    #[test]
    fn cube_corners() {
        let mut pts = Vec::new();
        for &x in &[0.0, 1.0] {
            for &y in &[0.0, 1.0] {
                for &z in &[0.0, 1.0] {
                    pts.push(Point3::new(x, y, z));
                }
            }
        }
        let c = PointCloud3::new(pts.clone()).unwrap();
        let out = bin_downsample(&c, 8).unwrap();
        assert_eq!(out.points(), &pts[..]);
        // with the center added the corners still come back as 8 separate bins
        let mut with_center = pts.clone();
        with_center.push(Point3::new(0.5, 0.5, 0.5));
        let out = bin_downsample(&PointCloud3::new(with_center).unwrap(), 8).unwrap();
        assert_eq!(out.len(), 8);
    }

    #[test]
    fn rejects_bad_targets() {
        let c = PointCloud3::new(vec![Point3::default(), Point3::new(1.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(bin_downsample(&c, 0), Err(Error::InvalidTarget { .. })));
        assert!(matches!(bin_downsample(&c, 3), Err(Error::InvalidTarget { .. })));
    }

    #[test]
    fn centroids_stay_within_a_voxel_diagonal_of_the_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_cloud(&mut rng, 1000);
        let (out, edge) = bin_downsample_with_voxel(&c, 100).unwrap();
        assert_eq!(out.len(), 100);
        let diag = edge * 3f64.sqrt();
        for p in out.points() {
            let nearest = c
                .points()
                .iter()
                .map(|q| q.distance(p))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= diag, "{nearest} > {diag}");
        }
    }

    #[test]
    fn exact_count_for_every_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let n = rng.gen_range(2..200);
            let c = random_cloud(&mut rng, n);
            let target = rng.gen_range(1..=n);
            let out = bin_downsample(&c, target).unwrap();
            assert_eq!(out.len(), target, "trial {trial}");
        }
    }

    #[test]
    fn anchored_keeps_anchors_first() {
        let anchors = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        let cands: Vec<Point3> = (1..10).map(|i| Point3::new(i as f64 / 10.0, 0.0, 0.0)).collect();
        let out = bin_downsample_anchored(&anchors, &cands, 3).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(&out[..2], &anchors[..]);
        for p in &out[2..] {
            assert!(p.x > 0.0 && p.x < 1.0 && p.y == 0.0 && p.z == 0.0);
        }
    }
}
