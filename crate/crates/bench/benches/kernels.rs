//! Microbenchmarks for the heavy kernels: cover statistics on grids, nerve
//! and coarsening construction, layered-graph shortest paths, and integer
//! normal forms.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use coarsekit_core::arith::rat_int;
use coarsekit_core::coarsening::CoarseningSpace;
use coarsekit_core::complexes::nerve;
use coarsekit_core::kgroups::{hermite_columns, smith_normal_form, IntMatrix};
use coarsekit_core::spaces::{
    brick_cover, build_anticech, lebesgue_lower_bound, r_degree, FilteredMetricSpace,
};

fn bench_cover_statistics(c: &mut Criterion) {
    let line = FilteredMetricSpace::int_interval(-100, 100);
    let ac = build_anticech(&line, &[rat_int(1), rat_int(4)]).unwrap();
    c.bench_function("lebesgue_lower_bound/201pt", |b| {
        b.iter(|| lebesgue_lower_bound(black_box(&line), black_box(&ac.covers[1])).unwrap())
    });

    let plane = FilteredMetricSpace::int_grid(2, -12, 12).unwrap();
    let bricks = brick_cover(&plane, 2, &rat_int(2), 8).unwrap();
    c.bench_function("r_degree/625pt_grid", |b| {
        b.iter(|| r_degree(black_box(&plane), black_box(&bricks.cover), &rat_int(2)).unwrap())
    });
}

fn bench_nerve_and_coarsening(c: &mut Criterion) {
    let line = FilteredMetricSpace::int_interval(-100, 100);
    let ac = build_anticech(&line, &[rat_int(1), rat_int(4), rat_int(16)]).unwrap();
    c.bench_function("nerve/fine_interval_cover", |b| {
        b.iter(|| nerve(black_box(&ac.covers[0])).unwrap())
    });
    c.bench_function("coarsening_build/3_levels", |b| {
        b.iter(|| CoarseningSpace::build(black_box(&line), black_box(&ac.covers), 0).unwrap())
    });
    let x = CoarseningSpace::build(&line, &ac.covers, 0).unwrap();
    c.bench_function("coarsening_all_pairs_dijkstra", |b| {
        b.iter(|| {
            for src in 0..x.node_count() {
                black_box(x.distances_from(src));
            }
        })
    });
}

fn bench_normal_forms(c: &mut Criterion) {
    let mut state = 0x5eed_cafeu64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as i64 % 17 - 8
    };
    let matrices: Vec<IntMatrix> = (0..32)
        .map(|_| IntMatrix::from_fn(8, 8, |_, _| num_bigint::BigInt::from(next())))
        .collect();
    let mut idx = 0usize;
    c.bench_function("smith_normal_form/8x8", |b| {
        b.iter_batched(
            || {
                idx = (idx + 1) % matrices.len();
                matrices[idx].clone()
            },
            |m| smith_normal_form(black_box(&m)),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("hermite_columns/8x8", |b| {
        b.iter_batched(
            || {
                idx = (idx + 1) % matrices.len();
                matrices[idx].clone()
            },
            |m| hermite_columns(black_box(&m)),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_cover_statistics, bench_nerve_and_coarsening, bench_normal_forms);
criterion_main!(benches);
