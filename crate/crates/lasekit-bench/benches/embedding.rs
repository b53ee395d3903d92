//! Benchmarks for the embedding hot paths: the two eigensolver routes, the
//! end-to-end locally weighted embedding, and cover assembly.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lasekit::graph::Graph;
use lasekit::latent::{sample_graph_from_latent, sample_latent, KernelSpec, SupportSpec};
use lasekit::local2global::{cover_and_assemble, EmbedCoverOptions};
use lasekit::spectral::eigen::{eigensolve_topk, AdjacencyOp, EigenOptions};
use lasekit::spectral::{ase, lase};
use lasekit::weights::{attribute_weights, WeightVector};

fn er_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn spatial(n: usize, side: f64, seed: u64) -> (Graph, nalgebra::DMatrix<f64>) {
    let support = SupportSpec::UniformBox {
        lo: vec![0.0, 0.0],
        hi: vec![side, side],
    };
    let sample = sample_latent(&support, n, seed).unwrap();
    let g = sample_graph_from_latent(&sample, &KernelSpec::GaussianHalf, seed ^ 1);
    (g, sample.positions().clone())
}

fn bench_eigensolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigensolve_top3");
    group.sample_size(10);
    for &n in &[200usize, 600] {
        let g = er_graph(n, 0.1, 7);
        group.bench_with_input(BenchmarkId::new("dense", n), &g, |b, g| {
            let opts = EigenOptions::default();
            b.iter(|| eigensolve_topk(&AdjacencyOp(g), 3, &opts).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("lanczos", n), &g, |b, g| {
            let opts = EigenOptions {
                dense_cutoff: 0,
                ..EigenOptions::default()
            };
            b.iter(|| eigensolve_topk(&AdjacencyOp(g), 3, &opts).unwrap());
        });
    }
    group.finish();
}

fn bench_embeddings(c: &mut Criterion) {
    let mut group = c.benchmark_group("embedding");
    group.sample_size(10);
    let (g, coords) = spatial(800, 10.0, 3);
    let opts = EigenOptions::default();
    group.bench_function("ase_r3_n800", |b| {
        b.iter(|| ase(&g, 3, &opts).unwrap());
    });
    let w: WeightVector = attribute_weights(&coords, &[5.0, 5.0], 0.4).unwrap();
    group.bench_function("lase_r3_n800", |b| {
        b.iter(|| lase(&g, &w, 3, &opts).unwrap());
    });
    group.finish();
}

fn bench_cover_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("local2global");
    group.sample_size(10);
    let (g, _) = spatial(1000, 25.0, 9);
    group.bench_function("cover_embed_assemble_m3_n1000", |b| {
        b.iter(|| cover_and_assemble(&g, 3, 5, &EmbedCoverOptions::default()).unwrap());
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_eigensolver,
    bench_embeddings,
    bench_cover_assembly
);
criterion_main!(benches);
