use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use edgesr_core::camera::{CameraRig, Extrinsics, Intrinsics};
use edgesr_core::densify::{densify, DensifyConfig};
use edgesr_core::edges::{canny, CannyParams};
use edgesr_core::hull::{concave_hull_of, DEFAULT_K};
use edgesr_core::losses::combined_loss;
use edgesr_core::synth::{synth_scene, SceneSpec, Shape};
use edgesr_core::{LossWeights, Point2, Point3, PointCloud3, PointSet2, SetRole, SpatialIndex};

fn points2(n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point2::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
        .collect()
}

fn cloud(n: usize, seed: u64) -> PointCloud3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud3::new(
        (0..n)
            .map(|_| Point3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(1.8..2.2)))
            .collect(),
    )
    .unwrap()
}

fn bench_knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("knn");
    for n in [1_000, 10_000] {
        let pts = points2(n, 1);
        let queries = points2(1_000, 2);
        let index = SpatialIndex::build(&pts).unwrap();
        group.bench_with_input(BenchmarkId::new("k20", n), &n, |b, _| {
            b.iter(|| {
                for q in &queries {
                    black_box(index.knn(q, 20).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn bench_hull(c: &mut Criterion) {
    let mut group = c.benchmark_group("concave_hull");
    group.sample_size(20);
    for n in [500, 2_000] {
        let set = PointSet2::new(points2(n, 3), SetRole::Projection).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, set| {
            b.iter(|| concave_hull_of(black_box(set), DEFAULT_K).unwrap())
        });
    }
    group.finish();
}

fn bench_canny(c: &mut Criterion) {
    let rig = CameraRig::with_identity_extrinsics(Intrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap(), 640, 480)
        .unwrap();
    let spec = SceneSpec::new(Shape::Sphere, Extrinsics::translation(0.0, 0.0, 2.0), 0.6, 1e4).unwrap();
    let (_, img) = synth_scene(&spec, &rig).unwrap();
    c.bench_function("canny_640x480", |b| {
        b.iter(|| canny(black_box(&img), &CannyParams::default()).unwrap())
    });
}

fn bench_loss(c: &mut Criterion) {
    let set = PointSet2::new(points2(2_000, 4), SetRole::Projection).unwrap();
    let hull = concave_hull_of(&set, DEFAULT_K).unwrap();
    let edges = PointSet2::new(points2(3_000, 5), SetRole::EdgeMap).unwrap();
    let w = LossWeights::default();
    c.bench_function("combined_loss", |b| {
        b.iter(|| combined_loss(black_box(&edges), black_box(&hull), &w).unwrap())
    });
}

fn bench_densify(c: &mut Criterion) {
    let mut group = c.benchmark_group("densify");
    group.sample_size(10);
    let sparse = cloud(2_048, 6);
    group.bench_function("2048_x4", |b| {
        b.iter(|| densify(black_box(&sparse), &DensifyConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_knn, bench_hull, bench_canny, bench_loss, bench_densify);
criterion_main!(benches);
