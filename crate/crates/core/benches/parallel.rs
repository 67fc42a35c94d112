use std::hint::black_box;
use std::time::Duration;

use bitkiln::gen::{gen_uniform, gen_zipf, UniformSpec, ZipfSpec};
use bitkiln::index::{build_index, IndexConfig, IndexReader};
use bitkiln::query::{evaluate_batch, Expr};
use bitkiln::sort::{block_sort_with, sort_table_with, SortPlan, SortStrategy};
use bitkiln::{EwahBitmap, Execution, Histogram, LogicalOp};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn table() -> bitkiln::FactTable {
    gen_uniform(&UniformSpec {
        rows: 200_000,
        independent: 2,
        ratio: 2,
        dependent: 2,
        seed: 1,
    })
    .unwrap()
}

fn sorting(c: &mut Criterion) {
    let t = table();
    let mut g = c.benchmark_group("sort");
    g.sample_size(10);
    for (name, exec) in MODES {
        let plan = SortPlan::new(SortStrategy::Lexicographic);
        g.bench_function(BenchmarkId::new("full-lex", name), |b| {
            b.iter(|| sort_table_with(black_box(t.clone()), &plan, None, exec).unwrap())
        });
        let blocks = plan.clone().with_blocks(16);
        g.bench_function(BenchmarkId::new("16-blocks", name), |b| {
            b.iter(|| block_sort_with(black_box(t.clone()), &blocks, None, exec).unwrap())
        });
    }
    g.finish();
}

fn queries(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let t = gen_zipf(&ZipfSpec {
        rows: 200_000,
        dims: 4,
        s: 1.0,
        range: 1000,
        seed: 2,
    })
    .unwrap();
    let hist = Histogram::from_table(&t);
    let path = dir.path().join("b.idx");
    build_index(
        t.rows().iter().cloned().map(Ok),
        &hist,
        &IndexConfig::default().with_k(2),
        &path,
    )
    .unwrap();
    let reader = IndexReader::open(&path).unwrap();
    let exprs: Vec<Expr> = (0..64)
        .map(|i| {
            let c = i % 4;
            let vals = hist.values(c);
            let a = Expr::eq(format!("d{c}"), vals[i % vals.len()].clone());
            let b = Expr::eq(format!("d{}", (c + 1) % 4), vals[(i * 7) % vals.len()].clone());
            a.or(b)
        })
        .collect();
    let mut g = c.benchmark_group("query-batch");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| evaluate_batch(&reader, black_box(&exprs), exec).unwrap())
        });
    }
    g.finish();
}

fn ewah_ops(c: &mut Criterion) {
    let n = 1 << 22;
    let sparse = EwahBitmap::from_sorted_positions((0..n).step_by(997), n).unwrap();
    let dense = EwahBitmap::from_sorted_positions((0..n).filter(|i| i % 3 != 0), n).unwrap();
    let mut g = c.benchmark_group("ewah");
    for op in LogicalOp::ALL {
        g.bench_function(BenchmarkId::new("sparse-dense", format!("{op:?}")), |b| {
            b.iter(|| black_box(&sparse).logical(op, black_box(&dense)).unwrap())
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().measurement_time(Duration::from_secs(3)).warm_up_time(Duration::from_secs(1));
    targets = sorting, queries, ewah_ops
}
criterion_main!(benches);
