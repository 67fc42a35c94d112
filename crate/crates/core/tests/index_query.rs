use std::path::Path;

use bitkiln::gen::{gen_uniform, gen_zipf, UniformSpec, ZipfSpec};
use bitkiln::index::{build_index, BuildReport, IndexConfig, IndexReader};
use bitkiln::query::{equality_bitmap, evaluate, evaluate_batch, parse, Expr};
use bitkiln::sort::{block_sort, SortPlan, SortStrategy};
use bitkiln::table::FactTable;
use bitkiln::{Allocation, Error, Execution, Histogram};

fn build(t: &FactTable, config: &IndexConfig, dir: &Path, name: &str) -> (IndexReader, BuildReport) {
    let path = dir.join(name);
    let hist = Histogram::from_table(t);
    let rep = build_index(t.rows().iter().cloned().map(Ok), &hist, config, &path).unwrap();
    (IndexReader::open(&path).unwrap(), rep)
}

fn toy() -> FactTable {
    let rows = [
        ["1", "1", "1"],
        ["2", "2", "1"],
        ["3", "1", "2"],
        ["4", "1", "1"],
        ["5", "1", "3"],
        ["1", "2", "1"],
        ["6", "2", "1"],
    ];
    FactTable::new(
        vec!["id-Ville".into(), "id-Véhicule".into(), "id-Couleur".into()],
        rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
    )
    .unwrap()
}

fn synthetic(rows: usize, seed: u64) -> FactTable {
    gen_uniform(&UniformSpec {
        rows,
        independent: 3,
        ratio: 2,
        dependent: 2,
        seed,
    })
    .unwrap()
}

fn scan(t: &FactTable, e: &Expr) -> Vec<u64> {
    (0..t.len())
        .filter(|&i| {
            let r = &t.rows()[i];
            e.matches(&|c: &str| t.column_names().iter().position(|n| n == c).map(|j| r[j].as_str()))
        })
        .map(|i| i as u64)
        .collect()
}

#[test]
fn two_of_n_rows_follow_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = build(
        &toy(),
        &IndexConfig::default().with_k(2).with_columns(vec![0]),
        dir.path(),
        "t.idx",
    );
    let spec = &r.columns()[0];
    assert_eq!((spec.encoding().k, spec.encoding().n), (2, 4));
    let bitmaps: Vec<Vec<bool>> = (0..4).map(|b| r.load_bitmap(0, b).unwrap().to_bits()).collect();
    let rows: Vec<String> = (0..7)
        .map(|i| (0..4).map(|b| if bitmaps[b][i] { '1' } else { '0' }).collect())
        .collect();
    assert_eq!(rows, ["1100", "1010", "1001", "0110", "0101", "1100", "0011"]);

    let (bm, unknown) = equality_bitmap(&r, "id-Ville", "1").unwrap();
    assert!(!unknown);
    assert_eq!(bm.iter_ones().collect::<Vec<_>>(), [0, 5]);
    let (bm, unknown) = equality_bitmap(&r, "id-Ville", "9").unwrap();
    assert!(unknown);
    assert_eq!((bm.cardinality(), bm.bit_len()), (0, 7));
    assert!(matches!(
        equality_bitmap(&r, "Ville", "1"),
        Err(Error::UnknownColumn(_))
    ));
}

#[test]
fn equality_is_exact_for_every_value_and_k() {
    let t = synthetic(3000, 1);
    let dir = tempfile::tempdir().unwrap();
    let hist = Histogram::from_table(&t);
    for k in 1..=4 {
        for alloc in [Allocation::Alphabetic, Allocation::Gray] {
            let (r, _) = build(
                &t,
                &IndexConfig::default().with_k(k).with_allocation(alloc),
                dir.path(),
                "t.idx",
            );
            for c in 0..t.arity() {
                for v in hist.values(c) {
                    let e = Expr::eq(t.column_names()[c].clone(), v.clone());
                    let res = evaluate(&r, &e).unwrap();
                    assert_eq!(res.rows, scan(&t, &e), "k={k} {alloc:?} column {c} value {v}");
                    assert_eq!(res.count, hist.count(c, &v));
                }
            }
        }
    }
}

#[test]
fn partitioned_build_matches_single() {
    let t = synthetic(100_000, 2);
    let dir = tempfile::tempdir().unwrap();
    let config = IndexConfig::default().with_k(2);
    let (one, _) = build(&t, &config, dir.path(), "one.idx");
    let (many, rep) = build(
        &t,
        &config.clone().with_partition_bytes(64 << 10),
        dir.path(),
        "many.idx",
    );
    assert_eq!(one.header().partitions.len(), 1);
    assert!(rep.partitions >= 3, "{} partitions", rep.partitions);
    assert!(rep.sequential_writes);
    for c in 0..t.arity() {
        for b in 0..one.columns()[c].bitmap_count() {
            assert_eq!(one.load_bitmap(c, b).unwrap(), many.load_bitmap(c, b).unwrap());
        }
    }
    for q in ["d0=5 & d1=17", "d2=3 | d3=40 | (d4=100 & d0=1)", "d1=1"] {
        let e = parse(q).unwrap();
        assert_eq!(evaluate(&one, &e).unwrap().rows, evaluate(&many, &e).unwrap().rows);
    }
}

#[test]
fn touches_are_bounded() {
    let t = synthetic(10_000, 3);
    let dir = tempfile::tempdir().unwrap();
    let (r, rep) = build(
        &t,
        &IndexConfig::default().with_k(3).with_partition_bytes(8 << 10),
        dir.path(),
        "t.idx",
    );
    let sum_k: u64 = r.columns().iter().map(|c| c.encoding().k as u64).sum();
    assert_eq!(rep.bitmap_touches, t.len() as u64 * sum_k);
    let l = r.header().bitmap_count as u64;
    assert_eq!(rep.finalize_steps, l * rep.partitions as u64);
    assert!(
        rep.bitmap_touches + rep.finalize_steps <= t.len() as u64 * 3 * t.arity() as u64 + l * rep.partitions as u64
    );
}

#[test]
fn offsets_ascend_and_stats_add_up() {
    let t = synthetic(5000, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.idx");
    let (r, rep) = build(
        &t,
        &IndexConfig::default().with_k(2).with_partition_bytes(4 << 10),
        dir.path(),
        "t.idx",
    );
    let bytes = std::fs::read(&path).unwrap();
    let l = r.header().bitmap_count as usize;
    for p in &r.header().partitions {
        let base = (r.header_bytes() + p.offset) as usize;
        let offs: Vec<u32> = (0..l)
            .map(|i| u32::from_le_bytes(bytes[base + 4 * i..base + 4 * i + 4].try_into().unwrap()))
            .collect();
        assert_eq!(offs[0] as usize, 4 * l);
        assert!(offs.windows(2).all(|w| w[0] < w[1]));
    }
    assert_eq!(rep.file_bytes, bytes.len() as u64);
    let s = r.stats().unwrap();
    assert_eq!(s.bitmaps.len(), l);
    assert_eq!(
        s.total_words(),
        s.bitmaps.iter().map(|b| b.compressed_words).sum::<u64>()
    );
    let n = (t.len() as u64).div_ceil(32);
    assert!(s.bitmaps.iter().all(|b| b.uncompressed_words == n));
    for c in &s.columns {
        let set: u64 = s
            .bitmaps
            .iter()
            .filter(|b| b.column == c.name)
            .map(|b| b.set_bits)
            .sum();
        assert_eq!(set, t.len() as u64 * c.k as u64);
    }
}

#[test]
fn load_reads_only_what_it_needs() {
    let t = synthetic(20_000, 5);
    let dir = tempfile::tempdir().unwrap();
    let (r, rep) = build(
        &t,
        &IndexConfig::default().with_partition_bytes(16 << 10),
        dir.path(),
        "t.idx",
    );
    r.reset_counters();
    let bm = r.load_bitmap(0, 3).unwrap();
    let c = r.counters();
    let segment_bytes = 4 * bm.size_in_words() as u64;
    assert_eq!(c.bitmaps_loaded, 1);
    // One offset entry and one count per partition, plus the words; segments
    // of one bitmap only merge on concatenation, so the stored words can
    // exceed the concatenated size only by markers at partition seams.
    assert!(c.bytes_read >= 8 * rep.partitions as u64 + segment_bytes - 4 * rep.partitions as u64);
    assert!(
        c.bytes_read < rep.file_bytes / 10,
        "{} of {}",
        c.bytes_read,
        rep.file_bytes
    );
}

#[test]
fn idempotence_and_batches() {
    let t = synthetic(4000, 6);
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = build(&t, &IndexConfig::default().with_k(2), dir.path(), "t.idx");
    let x = parse("d0=10 & d1=3").unwrap();
    let xx = x.clone().or(x.clone());
    let a = evaluate(&r, &x).unwrap();
    let b = evaluate(&r, &xx).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(b.bitmap_requests, 2 * a.bitmap_requests);
    assert_eq!(b.bitmaps_loaded, a.bitmaps_loaded);

    let queries: Vec<Expr> = (1..40).map(|v| parse(&format!("d0={v} | d2={v}")).unwrap()).collect();
    let par = evaluate_batch(&r, &queries, Execution::Parallel).unwrap();
    let seq = evaluate_batch(&r, &queries, Execution::Sequential).unwrap();
    assert_eq!(par, seq);
    for (q, res) in queries.iter().zip(&par) {
        assert_eq!(res.rows, scan(&t, q));
    }
    assert!(matches!(
        evaluate(&r, &parse("nope=1").unwrap()),
        Err(Error::UnknownColumn(_))
    ));
}

#[test]
fn query_cost_grows_with_block_count() {
    // Bytes read by twelve equality queries, as a deterministic stand-in for
    // their running time.
    let t = gen_zipf(&ZipfSpec {
        rows: 50_000,
        dims: 3,
        s: 1.0,
        range: 1000,
        seed: 9,
    })
    .unwrap();
    let hist = Histogram::from_table(&t);
    let queries: Vec<Expr> = (0..12)
        .map(|i| {
            let c = i % 3;
            let vals = hist.values(c);
            Expr::eq(t.column_names()[c].clone(), vals[(i * 37) % vals.len()].clone())
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let mut costs = Vec::new();
    for blocks in [1, 5, 10, 500] {
        let sorted = block_sort(
            t.clone(),
            &SortPlan::new(SortStrategy::Lexicographic).with_blocks(blocks),
            None,
        )
        .unwrap();
        let (r, _) = build(&sorted, &IndexConfig::default(), dir.path(), &format!("b{blocks}.idx"));
        let res = evaluate_batch(&r, &queries, Execution::Sequential).unwrap();
        costs.push(res.iter().map(|q| q.bytes_read).sum::<u64>());
    }
    assert!(costs.windows(2).all(|w| w[0] <= w[1]), "{costs:?}");
}

#[test]
fn sorted_index_is_smaller_than_shuffled() {
    let t = synthetic(20_000, 7);
    let dir = tempfile::tempdir().unwrap();
    let lex = block_sort(t.clone(), &SortPlan::new(SortStrategy::Lexicographic), None).unwrap();
    let shuf = block_sort(t, &SortPlan::new(SortStrategy::Shuffle).with_seed(1), None).unwrap();
    let (a, _) = build(&lex, &IndexConfig::default(), dir.path(), "a.idx");
    let (b, _) = build(&shuf, &IndexConfig::default(), dir.path(), "b.idx");
    assert!(a.stats().unwrap().total_words() <= b.stats().unwrap().total_words());
}

#[test]
fn streaming_build_from_file() {
    let t = synthetic(1000, 8);
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    t.write_delimited(std::fs::File::create(&csv).unwrap(), ',', false)
        .unwrap();
    let read = || bitkiln::table::DelimitedRows::new(std::io::BufReader::new(std::fs::File::open(&csv).unwrap()), ',');
    let hist = Histogram::from_rows(bitkiln::table::default_column_names(t.arity()), read()).unwrap();
    let out = dir.path().join("s.idx");
    build_index(read(), &hist, &IndexConfig::default(), &out).unwrap();
    let (mem, _) = build(&t, &IndexConfig::default(), dir.path(), "m.idx");
    assert_eq!(
        std::fs::read(out).unwrap(),
        std::fs::read(dir.path().join("m.idx")).unwrap()
    );
    drop(mem);
}
