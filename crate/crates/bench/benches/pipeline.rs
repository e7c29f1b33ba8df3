use std::hint::black_box;

use cim_bench::{olympic_warehouse, reference_queries};
use cim_core::compiler::compile;
use cim_core::fixtures::olympic;
use cim_core::query::{parse_cql, QueryOptions};
use cim_core::xml::{parse_cdl, parse_mdl, parse_sdl, ParseMode};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn models(c: &mut Criterion) {
    c.bench_function("parse olympic models", |b| {
        b.iter(|| {
            let cdl = parse_cdl(black_box(olympic::CDL_XML.as_bytes()), ParseMode::Strict).unwrap();
            let sdl = parse_sdl(black_box(olympic::SDL_XML.as_bytes()), ParseMode::Strict).unwrap();
            let mdl = parse_mdl(black_box(olympic::MDL_XML.as_bytes()), ParseMode::Strict).unwrap();
            (cdl, sdl, mdl)
        })
    });
    let (cdl, sdl, mdl) = (olympic::cdl(), olympic::sdl(), olympic::mdl());
    c.bench_function("compile olympic views", |b| {
        b.iter(|| compile(black_box(&cdl), &sdl, &mdl))
    });
}

fn queries(c: &mut Criterion) {
    let example = parse_cql(olympic::EXAMPLE_QUERY).unwrap();
    let mut group = c.benchmark_group("example query");
    for scale in [1_000, 10_000] {
        let virtual_views = olympic_warehouse(scale, false);
        let materialized = olympic_warehouse(scale, true);
        group.bench_with_input(BenchmarkId::new("virtual", scale), &scale, |b, _| {
            b.iter(|| {
                virtual_views
                    .query(black_box(&example), QueryOptions::default())
                    .unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("materialized", scale), &scale, |b, _| {
            b.iter(|| {
                materialized
                    .query(black_box(&example), QueryOptions::default())
                    .unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("oracle", scale), &scale, |b, _| {
            b.iter(|| {
                virtual_views
                    .oracle()
                    .execute(black_box(&example), QueryOptions::default())
                    .unwrap()
            })
        });
    }
    group.finish();

    let w = olympic_warehouse(10_000, false);
    let all = reference_queries();
    c.bench_function("reference queries at 10k", |b| {
        b.iter(|| {
            all.iter()
                .map(|q| w.query(q, QueryOptions::default()).map(|r| r.len()).unwrap_or(0))
                .sum::<usize>()
        })
    });
}

fn checks(c: &mut Criterion) {
    let w = olympic_warehouse(10_000, false);
    c.bench_function("check olympic at 10k", |b| b.iter(|| w.check().unwrap()));
}

criterion_group!(benches, models, queries, checks);
criterion_main!(benches);
