use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use voipcell::admission::{run_admission_stream, shuffled_candidates};
use voipcell::coloring::{color, CoTdmaParams, FrequencyPlan};
use voipcell::{build_admission_graph, build_coloring_graph, FrequencyScheme, RadioParams, Topology};

fn grid(per_cell: usize, scheme: &FrequencyScheme) -> Topology {
    Topology::build(5, RadioParams::default(), per_cell, 1).unwrap().assign_frequencies(scheme).unwrap()
}

fn graphs(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    for per_cell in [12usize, 60] {
        let topo = grid(per_cell, &FrequencyScheme::ThreeChannel);
        group.bench_with_input(BenchmarkId::new("admission", per_cell), &topo, |b, t| {
            b.iter(|| build_admission_graph(black_box(t), 550.0))
        });
        group.bench_with_input(BenchmarkId::new("coloring", per_cell), &topo, |b, t| {
            b.iter(|| build_coloring_graph(black_box(t), 1.637 * 250.0))
        });
    }
    group.finish();
}

fn admission(c: &mut Criterion) {
    let topo = grid(12, &FrequencyScheme::Single);
    let order = shuffled_candidates(&topo, 1);
    let mut group = c.benchmark_group("admission_stream");
    group.sample_size(20);
    for c_max in [8usize, 12] {
        group.bench_with_input(BenchmarkId::from_parameter(c_max), &c_max, |b, &c_max| {
            b.iter(|| run_admission_stream(&topo, 550.0, black_box(&order), c_max).unwrap())
        });
    }
    group.finish();
}

fn coloring(c: &mut Criterion) {
    let mut group = c.benchmark_group("color");
    for (per_cell, n) in [(12usize, 3u32), (60, 3), (60, 60)] {
        let topo = grid(per_cell, &FrequencyScheme::ThreeChannel);
        let graph = build_coloring_graph(&topo, 1.637 * 250.0);
        let params = CoTdmaParams { m: 3, n, c_ap_1: per_cell as u32, plan: FrequencyPlan::from_topology(&topo) };
        group.bench_function(BenchmarkId::new(format!("c_ap_1={per_cell}"), n), |b| {
            b.iter(|| color(black_box(&graph), &params).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, graphs, admission, coloring);
criterion_main!(benches);
