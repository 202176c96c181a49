//! Parallel kernels against their sequential twins.
//!
//! Run with `cargo bench -p rhm-core --bench parallel`. Without the
//! `parallel` feature both variants run the same loop.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhm_core::geodesic::{GeodesicMethod, GeodesicSolver};
use rhm_core::projection::EmbeddedSurface;
use rhm_core::{par, shapes, RowMatrix};

fn projection(c: &mut Criterion) {
    let mesh = shapes::icosphere(4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // A lifted copy in 8-D, roughly what the P-step sees.
    let dim = 8;
    let lifted = RowMatrix::from_fn(mesh.n_vertices(), dim, |i, k| {
        let p = mesh.vertex(i);
        if k < 3 { p[k] } else { (p[k % 3] * k as f64).sin() * 0.2 }
    });
    let surface = EmbeddedSurface::new(lifted, mesh.faces()).unwrap();
    let queries = RowMatrix::from_fn(4000, dim, |_, _| rng.random_range(-1.2..1.2));

    let mut g = c.benchmark_group("projection");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| surface.project_points(&queries).unwrap()));
    g.bench_function("sequential", |b| b.iter(|| surface.project_points_seq(&queries).unwrap()));
    g.finish();
}

fn geodesic_batch(c: &mut Criterion) {
    let mesh = shapes::icosphere(3);
    let geo = GeodesicSolver::new(&mesh, GeodesicMethod::FastMarching);
    let sources: Vec<usize> = (0..mesh.n_vertices()).step_by(16).collect();

    let mut g = c.benchmark_group("geodesic_fields");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| par::map_indices(sources.len(), |i| geo.single_source(sources[i]).unwrap()))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| par::map_indices_seq(sources.len(), |i| geo.single_source(sources[i]).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, projection, geodesic_batch);
criterion_main!(benches);
