//! Sequential vs thread-pool throughput for the batch stages.
//!
//! Without the `parallel` feature every variant runs sequentially, so the
//! numbers collapse onto each other.

use bodymap_core::baseline::{Baseline, BaselineClass};
use bodymap_core::par::map_slice;
use bodymap_core::render::{rasterize_png, SvgRenderer};
use bodymap_core::{defaults, BreedKnowledgeBase, Parallelism, RegionAtlas};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const MODES: [(&str, Parallelism); 3] = [
    ("sequential", Parallelism::Sequential),
    ("threads4", Parallelism::Threads(4)),
    ("auto", Parallelism::Auto),
];

fn baseline(c: &mut Criterion) {
    let atlas = RegionAtlas::load(defaults::atlas_path()).unwrap();
    let kb = BreedKnowledgeBase::load(defaults::kb_path()).unwrap();
    let b = Baseline::new(&atlas).unwrap();
    let n = 2_000;
    let mut group = c.benchmark_group("baseline_batch");
    group.throughput(Throughput::Elements(n as u64));
    for (name, p) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &p, |bench, &p| {
            bench.iter(|| b.batch(BaselineClass::Patellar, n, 7, "b-", Some(&kb), p).unwrap())
        });
    }
    group.finish();
}

fn render(c: &mut Criterion) {
    let atlas = RegionAtlas::load(defaults::atlas_path()).unwrap();
    let b = Baseline::new(&atlas).unwrap();
    let docs = b.batch(BaselineClass::Patellar, 64, 3, "r-", None, Parallelism::Auto).unwrap();
    let renderer = SvgRenderer::new(&atlas).unwrap();

    let mut group = c.benchmark_group("render_svg");
    group.throughput(Throughput::Elements(docs.len() as u64));
    for (name, p) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &p, |bench, &p| {
            bench.iter(|| map_slice(&docs, p, |d| renderer.render(d, d.seed).unwrap()))
        });
    }
    group.finish();

    let svgs: Vec<String> = docs[..16].iter().map(|d| renderer.render(d, d.seed).unwrap()).collect();
    let mut group = c.benchmark_group("rasterize_png");
    group.sample_size(10);
    group.throughput(Throughput::Elements(svgs.len() as u64));
    for (name, p) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &p, |bench, &p| {
            bench.iter(|| map_slice(&svgs, p, |s| rasterize_png(s).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, baseline, render);
criterion_main!(benches);
