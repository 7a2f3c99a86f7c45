//! Worked examples through the public API, with frozen expected values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use edgesr_core::camera::{CameraRig, Extrinsics, Intrinsics};
use edgesr_core::densify::{densify, DensifyConfig};
use edgesr_core::edges::{canny, CannyParams, GrayImage};
use edgesr_core::geometry::bin_downsample;
use edgesr_core::hull::concave_hull_of;
use edgesr_core::losses::{chamfer_loss, combined_loss, hausdorff_loss, smoothness};
use edgesr_core::refine::{refine, superres, RefineConfig};
use edgesr_core::synth::{synth_scene, SceneSpec, Shape};
use edgesr_core::{Error, LossWeights, Point2, Point3, PointCloud3, PointSet2, SetRole};

fn set(pts: &[(f64, f64)], role: SetRole) -> PointSet2 {
    PointSet2::new(pts.iter().map(|&(u, v)| Point2::new(u, v)).collect(), role).unwrap()
}

fn rig_640() -> CameraRig {
    CameraRig::with_identity_extrinsics(Intrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap(), 640, 480).unwrap()
}

#[test]
fn projection_chain_values() {
    let rig = CameraRig::with_identity_extrinsics(Intrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap(), 100, 100).unwrap();
    assert_eq!(rig.project(&Point3::new(1.0, 2.0, 10.0)).unwrap(), Point2::new(60.0, 70.0));
    let j = rig.projection_jacobian(&Point3::new(0.0, 0.0, 10.0)).unwrap();
    assert_eq!(j.as_slice(), &[10.0, 0.0, 0.0, 10.0, 0.0, 0.0]);

    let shifted = CameraRig::new(
        Intrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap(),
        Extrinsics::identity(),
        Extrinsics::translation(1.0, 0.0, 0.0),
        100,
        100,
    )
    .unwrap();
    assert_eq!(shifted.tof_to_rgb_frame(&Point3::new(0.0, 0.0, 5.0)), Point3::new(1.0, 0.0, 5.0));
}

#[test]
fn loss_values() {
    let r = set(&[(0.0, 0.0)], SetRole::EdgeMap);
    let p = set(&[(3.0, 4.0)], SetRole::Projection);
    assert_eq!(chamfer_loss(&r, &p).unwrap(), 50.0);

    let r = set(&[(0.0, 0.0), (1.0, 0.0)], SetRole::EdgeMap);
    let p = set(&[(0.0, 0.0)], SetRole::Projection);
    assert_eq!(hausdorff_loss(&r, &p).unwrap(), 1.0);

    let square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(u, v)| Point2::new(u, v));
    assert!((smoothness(&square).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn chamfer_only_weights_mask_other_terms() {
    let edges = set(&[(0.0, 0.0), (5.0, 1.0), (3.0, 7.0), (-2.0, 4.0)], SetRole::EdgeMap);
    let pts = set(&[(0.5, 0.0), (4.0, 0.0), (4.0, 5.0), (0.0, 5.0), (2.0, 2.0)], SetRole::Projection);
    let hull = concave_hull_of(&pts, 3).unwrap();
    let r = combined_loss(&edges, &hull, &LossWeights::new(1.0, 0.0, 0.0).unwrap()).unwrap();
    assert_eq!(r.total, r.l_cd);
}

#[test]
fn densify_2048_to_8192_keeps_originals() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts: Vec<Point3> = (0..2048)
        .map(|_| Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(1.0..2.0)))
        .collect();
    let cloud = PointCloud3::new(pts.clone()).unwrap();
    let out = densify(&cloud, &DensifyConfig::default()).unwrap();
    assert_eq!(out.len(), 8192);
    assert_eq!(&out.points()[..2048], &pts[..]);
}

#[test]
fn densify_two_points() {
    let cloud = PointCloud3::new(vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)]).unwrap();
    let cfg = DensifyConfig {
        rate: 2,
        k_interp: 2,
        ..Default::default()
    };
    let out = densify(&cloud, &cfg).unwrap();
    assert_eq!(out.len(), 4);
    assert!(out.points().iter().all(|p| p.y == 0.0 && p.z == 0.0 && (0.0..=1.0).contains(&p.x)));
}

#[test]
fn rendered_square_edges_follow_the_projected_boundary() {
    let rig = rig_640();
    let spec = SceneSpec::new(Shape::SquarePlane, Extrinsics::translation(0.0, 0.0, 2.0), 0.5, 1e4).unwrap();
    let (_, img) = synth_scene(&spec, &rig).unwrap();
    let edges = canny(&img, &CannyParams::default()).unwrap();
    assert!(!edges.is_empty());
    // the 0.5 m square at 2 m spans 320 ± 62.5 by 240 ± 62.5 pixels
    let (lo_u, hi_u, lo_v, hi_v) = (257.5, 382.5, 177.5, 302.5);
    let boundary_distance = |p: &Point2| {
        let du = (p.u - lo_u).abs().min((p.u - hi_u).abs());
        let dv = (p.v - lo_v).abs().min((p.v - hi_v).abs());
        let inside_u = (lo_u..=hi_u).contains(&p.u);
        let inside_v = (lo_v..=hi_v).contains(&p.v);
        match (inside_u, inside_v) {
            (true, true) => du.min(dv),
            (true, false) => dv,
            (false, true) => du,
            (false, false) => du.hypot(dv),
        }
    };
    let worst = edges.points().iter().map(boundary_distance).fold(0.0, f64::max);
    assert!(worst <= 1.5, "edge {worst:.3} px from the boundary");
}

#[test]
fn smoothness_only_descent_does_not_increase_loss() {
    // ragged ring of points on a plane; only the smoothness term is active
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pts = Vec::new();
    for i in 0..24 {
        let a = i as f64 / 24.0 * std::f64::consts::TAU;
        let r = 0.2 + rng.gen_range(-0.03..0.03);
        pts.push(Point3::new(r * a.cos(), r * a.sin(), 2.0));
    }
    pts.push(Point3::new(0.0, 0.0, 2.0));
    let cloud = PointCloud3::new(pts).unwrap();
    let edges = set(&[(320.0, 240.0)], SetRole::EdgeMap);
    let cfg = RefineConfig {
        weights: LossWeights::new(0.0, 0.0, 1.0).unwrap(),
        hull_k: 24,
        max_iters: 30,
        ..Default::default()
    };
    let (_, trace) = refine(&cloud, &edges, &rig_640(), &cfg).unwrap();
    assert!(trace.accepted_steps() > 0);
    for w in trace.accepted_by_window() {
        assert!(w.windows(2).all(|p| p[1] <= p[0]));
    }
    assert!(trace.summary.final_total < trace.summary.initial_total);
}

#[test]
fn hull_offset_three_pixels_inside_the_edges() {
    let rig = rig_640();
    let spec = SceneSpec::new(Shape::SquarePlane, Extrinsics::translation(0.0, 0.0, 2.0), 0.5, 1e4).unwrap();
    let (_, img) = synth_scene(&spec, &rig).unwrap();
    // the cloud comes from a square 3 px (12 mm at 2 m, f = 500) smaller on every side
    let inner = SceneSpec::new(Shape::SquarePlane, Extrinsics::translation(0.0, 0.0, 2.0), 0.5 - 0.024, 1e5).unwrap();
    let sparse = bin_downsample(&synth_scene(&inner, &rig).unwrap().0, 512).unwrap();
    let (dense, trace) = superres(
        &sparse,
        &img,
        &rig,
        &DensifyConfig::default(),
        &RefineConfig::default(),
        &CannyParams::default(),
    )
    .unwrap();
    assert_eq!(dense.len(), 2048);
    let s = &trace.summary;
    assert!(s.final_total < s.initial_total);
    assert!(s.final_total <= 0.5 * s.initial_total, "{} -> {}", s.initial_total, s.final_total);
}

#[test]
fn constant_image_gives_no_guidance_but_densify_still_works() {
    let rig = rig_640();
    let cloud = PointCloud3::new(
        (0..64)
            .map(|i| Point3::new((i % 8) as f64 * 0.05, (i / 8) as f64 * 0.05, 2.0))
            .collect(),
    )
    .unwrap();
    let flat = GrayImage::constant(640, 480, 0.5).unwrap();
    let err = superres(
        &cloud,
        &flat,
        &rig,
        &DensifyConfig::default(),
        &RefineConfig::default(),
        &CannyParams::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::EmptyEdgeMap));
    assert_eq!(densify(&cloud, &DensifyConfig::default()).unwrap().len(), 256);
}
