//! Fact-table row reordering ahead of indexing.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extsort::{compare_projection, row_bytes, ExternalSorter};
use crate::kofn::ColumnDictionary;
use crate::table::{FactTable, Row};
use crate::Execution;

/// Default memory budget for in-memory sorting, in bytes of row data.
pub const DEFAULT_MEMORY_BUDGET: usize = 256 << 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortStrategy {
    #[default]
    Lexicographic,
    /// Gray-code order of the rows' concatenated attribute codes.
    Gray,
    /// Identical rows made contiguous; groups in seeded-hash order.
    Grouping,
    /// Seeded uniform permutation.
    Shuffle,
    None,
}

impl FromStr for SortStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lex" | "lexicographic" => SortStrategy::Lexicographic,
            "gray" => SortStrategy::Gray,
            "group" | "grouping" => SortStrategy::Grouping,
            "shuffle" => SortStrategy::Shuffle,
            "none" => SortStrategy::None,
            other => return Err(Error::InvalidArgument(format!("unknown sort strategy {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortPlan {
    pub strategy: SortStrategy,
    /// Sort key: columns compared in this order. Empty means all columns in
    /// table order.
    pub column_order: Vec<usize>,
    /// 1 sorts the whole table; more splits it into independently sorted
    /// blocks that are concatenated without merging.
    pub block_count: usize,
    pub seed: u64,
    /// Row data (bytes) sorted in memory before spilling sorted runs.
    pub memory_budget: usize,
}

impl Default for SortPlan {
    fn default() -> Self {
        SortPlan {
            strategy: SortStrategy::Lexicographic,
            column_order: Vec::new(),
            block_count: 1,
            seed: 0,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl SortPlan {
    pub fn new(strategy: SortStrategy) -> Self {
        SortPlan {
            strategy,
            ..Default::default()
        }
    }

    pub fn with_column_order(mut self, order: Vec<usize>) -> Self {
        self.column_order = order;
        self
    }

    pub fn with_blocks(mut self, blocks: usize) -> Self {
        self.block_count = blocks;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_memory_budget(mut self, bytes: usize) -> Self {
        self.memory_budget = bytes;
        self
    }

    /// The sort key for a table of `arity` columns.
    pub fn key(&self, arity: usize) -> Result<Vec<usize>> {
        if self.column_order.is_empty() {
            return Ok((0..arity).collect());
        }
        let mut seen = vec![false; arity];
        for &c in &self.column_order {
            if c >= arity || std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidArgument(format!(
                    "column order {:?} is not a set of distinct columns below {arity}",
                    self.column_order
                )));
            }
        }
        Ok(self.column_order.clone())
    }
}

/// Gray-code comparison of two bit rows.
///
/// At the first differing position `j`, `a` sorts first iff `a[j]` equals the
/// parity of the ones in the shared prefix.
pub fn compare_rows_gray(a: &[bool], b: &[bool]) -> Result<Ordering> {
    if a.len() != b.len() {
        return Err(Error::RowLengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut parity = false;
    for (&x, &y) in a.iter().zip(b) {
        if x != y {
            return Ok(if x == parity { Ordering::Less } else { Ordering::Greater });
        }
        parity ^= x;
    }
    Ok(Ordering::Equal)
}

/// Gray-code comparison of two rows given as ascending set-bit positions
/// (rows of equal, implicit length).
pub fn compare_gray_positions(a: &[u32], b: &[u32]) -> Ordering {
    let mut parity = false;
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(&x), Some(&y)) if x == y => {
                parity = !parity;
                i += 1;
                j += 1;
            }
            // First difference: whichever row has a one at the smaller
            // position; the other has a zero there.
            (Some(&x), Some(&y)) => {
                let a_has_one = x < y;
                return if a_has_one == parity {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
            (Some(_), None) => return if parity { Ordering::Less } else { Ordering::Greater },
            (None, Some(_)) => return if parity { Ordering::Greater } else { Ordering::Less },
        }
    }
}

/// Per-row Gray sort keys: the concatenation, over `key` columns, of each
/// value's code shifted by the widths of the preceding columns.
pub fn gray_keys(rows: &[Row], key: &[usize], dicts: &[ColumnDictionary], names: &[String]) -> Result<Vec<Vec<u32>>> {
    let mut offsets = Vec::with_capacity(key.len());
    let mut width = 0u32;
    for &c in key {
        let d = dicts.get(c).ok_or(Error::MissingDictionaries)?;
        offsets.push(width);
        width += d.choice().n;
    }
    rows.iter()
        .map(|row| {
            let mut k = Vec::new();
            for (&c, &off) in key.iter().zip(&offsets) {
                let code = dicts[c].encode(&names[c], &row[c])?;
                k.extend(code.positions().iter().map(|p| p + off));
            }
            Ok(k)
        })
        .collect()
}

/// Stable permutation sorting `keys` in Gray-code order.
pub fn gray_permutation(keys: &[Vec<u32>], execution: Execution) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    crate::sort_slice_by(&mut idx, execution, |&a, &b| compare_gray_positions(&keys[a], &keys[b]));
    idx
}

fn apply_permutation(rows: Vec<Row>, perm: &[usize]) -> Vec<Row> {
    let mut slots: Vec<Option<Row>> = rows.into_iter().map(Some).collect();
    perm.iter()
        .map(|&i| slots[i].take().expect("permutation repeats an index"))
        .collect()
}

// Seeded FNV-1a over the key fields; stable across platforms and releases.
fn row_hash(seed: u64, row: &[String], key: &[usize]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &c in key {
        for &b in row[c].as_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn group_rows(rows: Vec<Row>, key: &[usize], seed: u64) -> Vec<Row> {
    let mut group_of: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let k: Vec<&str> = key.iter().map(|&c| row[c].as_str()).collect();
        let g = *group_of.entry(k).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[g].push(i);
    }
    drop(group_of);
    let mut order: Vec<(u64, usize)> = members
        .iter()
        .enumerate()
        .map(|(g, m)| (row_hash(seed, &rows[m[0]], key), g))
        .collect();
    order.sort_unstable();
    let perm: Vec<usize> = order.iter().flat_map(|&(_, g)| members[g].iter().copied()).collect();
    apply_permutation(rows, &perm)
}

// Sorts rows held in memory; `dicts` indexed by table column.
fn sort_rows(
    mut rows: Vec<Row>,
    strategy: SortStrategy,
    key: &[usize],
    seed: u64,
    dicts: Option<&[ColumnDictionary]>,
    names: &[String],
    execution: Execution,
) -> Result<Vec<Row>> {
    match strategy {
        SortStrategy::None => Ok(rows),
        SortStrategy::Lexicographic => {
            crate::sort_slice_by(&mut rows, execution, |a, b| compare_projection(key, a, b));
            Ok(rows)
        }
        SortStrategy::Gray => {
            let dicts = dicts.ok_or(Error::MissingDictionaries)?;
            let keys = gray_keys(&rows, key, dicts, names)?;
            let perm = gray_permutation(&keys, execution);
            Ok(apply_permutation(rows, &perm))
        }
        SortStrategy::Grouping => Ok(group_rows(rows, key, seed)),
        SortStrategy::Shuffle => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rows.shuffle(&mut rng);
            Ok(rows)
        }
    }
}

/// Sorts the whole table. Lexicographic sorts of tables larger than the
/// memory budget go through the external two-pass sorter.
pub fn sort_table(table: FactTable, plan: &SortPlan, dicts: Option<&[ColumnDictionary]>) -> Result<FactTable> {
    sort_table_with(table, plan, dicts, Execution::default())
}

pub fn sort_table_with(
    table: FactTable,
    plan: &SortPlan,
    dicts: Option<&[ColumnDictionary]>,
    execution: Execution,
) -> Result<FactTable> {
    let key = plan.key(table.arity())?;
    let names = table.column_names().to_vec();
    if plan.strategy == SortStrategy::Gray && dicts.is_none() {
        return Err(Error::MissingDictionaries);
    }
    let rows = table.into_rows();
    let bytes: usize = rows.iter().map(|r| row_bytes(r)).sum();
    let sorted = if plan.strategy == SortStrategy::Lexicographic && bytes > plan.memory_budget {
        let sorter = ExternalSorter::new(plan.memory_budget, key).with_execution(execution);
        let mut out = Vec::with_capacity(rows.len());
        sorter.sort(rows.into_iter().map(Ok), |r| {
            out.push(r);
            Ok(())
        })?;
        out
    } else {
        sort_rows(rows, plan.strategy, &key, plan.seed, dicts, &names, execution)?
    };
    FactTable::new(names, sorted)
}

/// Splits the table into `plan.block_count` contiguous blocks of near-equal
/// size, sorts each independently and concatenates them.
pub fn block_sort(table: FactTable, plan: &SortPlan, dicts: Option<&[ColumnDictionary]>) -> Result<FactTable> {
    block_sort_with(table, plan, dicts, Execution::default())
}

pub fn block_sort_with(
    table: FactTable,
    plan: &SortPlan,
    dicts: Option<&[ColumnDictionary]>,
    execution: Execution,
) -> Result<FactTable> {
    if plan.block_count == 0 {
        return Err(Error::InvalidArgument("block count must be at least 1".into()));
    }
    if plan.block_count == 1 {
        return sort_table_with(table, plan, dicts, execution);
    }
    if plan.strategy == SortStrategy::Gray && dicts.is_none() {
        return Err(Error::MissingDictionaries);
    }
    let key = plan.key(table.arity())?;
    let names = table.column_names().to_vec();
    let blocks = split_blocks(table.into_rows(), plan.block_count);
    let sort_block = |(i, block): (usize, Vec<Row>)| {
        let seed = plan.seed.wrapping_add(i as u64);
        sort_rows(block, plan.strategy, &key, seed, dicts, &names, Execution::Sequential)
    };
    let sorted: Vec<Vec<Row>> = crate::map_collect(blocks.into_iter().enumerate().collect(), execution, sort_block)?;
    FactTable::new(names, sorted.into_iter().flatten().collect())
}

/// Block sizes differ by at most one; earlier blocks get the extra rows.
pub fn split_blocks(rows: Vec<Row>, block_count: usize) -> Vec<Vec<Row>> {
    let n = rows.len();
    let base = n / block_count;
    let extra = n % block_count;
    let mut it = rows.into_iter();
    (0..block_count)
        .map(|b| it.by_ref().take(base + usize::from(b < extra)).collect())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascending,
    Descending,
}

/// Column permutation by distinct-value count; ties keep column index order.
pub fn order_columns_by_cardinality(cardinalities: &[usize], direction: Direction) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..cardinalities.len()).collect();
    match direction {
        Direction::Ascending => idx.sort_by_key(|&c| cardinalities[c]),
        Direction::Descending => idx.sort_by(|&a, &b| cardinalities[b].cmp(&cardinalities[a])),
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kofn::{gray_codes, Allocation, EncodingChoice};

    fn parse(rows: &[&str]) -> Vec<Vec<bool>> {
        rows.iter().map(|r| r.chars().map(|c| c == '1').collect()).collect()
    }

    fn render(rows: &[Vec<bool>]) -> Vec<String> {
        rows.iter()
            .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect()
    }

    fn positions(row: &[bool]) -> Vec<u32> {
        (0..row.len() as u32).filter(|&i| row[i as usize]).collect()
    }

    fn table(rows: &[&[&str]]) -> FactTable {
        FactTable::from_rows(
            rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
            1,
        )
        .unwrap()
    }

    #[test]
    fn gray_order_three_bits() {
        let mut rows: Vec<Vec<bool>> = (0..8u32)
            .map(|i| (0..3).map(|b| i >> (2 - b) & 1 == 1).collect())
            .collect();
        rows.sort_by(|a, b| compare_rows_gray(a, b).unwrap());
        assert_eq!(render(&rows), ["000", "001", "011", "010", "110", "111", "101", "100"]);
    }

    #[test]
    fn gray_compare_edge_cases() {
        assert_eq!(
            compare_rows_gray(&[true, false], &[true, false]).unwrap(),
            Ordering::Equal
        );
        assert!(compare_rows_gray(&[true], &[true, false]).is_err());
        assert_eq!(compare_gray_positions(&[], &[]), Ordering::Equal);
    }

    #[test]
    fn table_three_orders() {
        let input = parse(&["111", "101", "011", "110", "111", "011", "101", "110", "111"]);
        let mut lex = input.clone();
        lex.sort();
        assert_eq!(
            render(&lex),
            ["011", "011", "101", "101", "110", "110", "111", "111", "111"]
        );

        let mut gray = input.clone();
        gray.sort_by(|a, b| compare_rows_gray(a, b).unwrap());
        let expect = ["011", "011", "110", "110", "111", "111", "111", "101", "101"];
        assert_eq!(render(&gray), expect);

        let keys: Vec<Vec<u32>> = input.iter().map(|r| positions(r)).collect();
        let perm = gray_permutation(&keys, Execution::Sequential);
        let via_keys: Vec<Vec<bool>> = perm.iter().map(|&i| input[i].clone()).collect();
        assert_eq!(render(&via_keys), expect);
    }

    #[test]
    fn gray_allocation_matches_comparator_sort() {
        for n in 1..=10u32 {
            for k in 1..=n {
                let mut all: Vec<Vec<bool>> = (0..1u32 << n)
                    .map(|i| (0..n).map(|b| i >> (n - 1 - b) & 1 == 1).collect::<Vec<bool>>())
                    .filter(|r| r.iter().filter(|&&b| b).count() == k as usize)
                    .collect();
                all.sort_by(|a, b| compare_rows_gray(a, b).unwrap());
                let gen: Vec<Vec<bool>> = gray_codes(k, n, usize::MAX).iter().map(|c| c.to_bit_row(n)).collect();
                assert_eq!(gen, all, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn lexicographic_is_stable_on_key() {
        let t = table(&[&["b", "1"], &["a", "9"], &["b", "0"], &["a", "2"]]);
        let plan = SortPlan::new(SortStrategy::Lexicographic).with_column_order(vec![0]);
        let s = sort_table(t, &plan, None).unwrap();
        assert_eq!(
            s.rows()[..],
            table(&[&["a", "9"], &["a", "2"], &["b", "1"], &["b", "0"]]).rows()[..]
        );
    }

    #[test]
    fn spill_path_matches_in_memory() {
        let rows: Vec<Row> = (0..2000u64)
            .map(|i| vec![((i * 2654435761) % 97).to_string(), (i % 7).to_string()])
            .collect();
        let t = FactTable::from_rows(rows, 2).unwrap();
        let small = SortPlan::new(SortStrategy::Lexicographic).with_memory_budget(100);
        let big = SortPlan::new(SortStrategy::Lexicographic);
        assert_eq!(
            sort_table(t.clone(), &small, None).unwrap(),
            sort_table(t, &big, None).unwrap()
        );
    }

    #[test]
    fn gray_needs_dictionaries() {
        let t = table(&[&["a"]]);
        let plan = SortPlan::new(SortStrategy::Gray);
        assert!(matches!(
            sort_table(t.clone(), &plan, None),
            Err(Error::MissingDictionaries)
        ));
        assert!(matches!(
            sort_table(t, &plan, Some(&[])),
            Err(Error::MissingDictionaries)
        ));
    }

    #[test]
    fn grouping_makes_duplicates_contiguous() {
        let t = table(&[&["x"], &["y"], &["x"], &["z"], &["y"], &["x"]]);
        let s = sort_table(t.clone(), &SortPlan::new(SortStrategy::Grouping).with_seed(3), None).unwrap();
        let vals: Vec<&str> = s.rows().iter().map(|r| r[0].as_str()).collect();
        let mut seen = Vec::new();
        for w in vals.chunk_by(|a, b| a == b) {
            assert!(!seen.contains(&w[0]), "{vals:?}");
            seen.push(w[0]);
        }
        assert_eq!(seen.len(), 3);
        let again = sort_table(t, &SortPlan::new(SortStrategy::Grouping).with_seed(3), None).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let rows: Vec<Row> = (0..100).map(|i| vec![i.to_string()]).collect();
        let t = FactTable::from_rows(rows, 1).unwrap();
        let a = sort_table(t.clone(), &SortPlan::new(SortStrategy::Shuffle).with_seed(9), None).unwrap();
        let b = sort_table(t.clone(), &SortPlan::new(SortStrategy::Shuffle).with_seed(9), None).unwrap();
        let c = sort_table(t.clone(), &SortPlan::new(SortStrategy::Shuffle).with_seed(10), None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, t);
        let mut sorted = a.into_rows();
        sorted.sort_by_key(|r| r[0].parse::<u32>().unwrap());
        assert_eq!(sorted, t.into_rows());
    }

    #[test]
    fn block_sort_edges() {
        let rows: Vec<Row> = (0..10).rev().map(|i| vec![i.to_string()]).collect();
        let t = FactTable::from_rows(rows, 1).unwrap();
        let plan = SortPlan::new(SortStrategy::Lexicographic);
        let full = sort_table(t.clone(), &plan, None).unwrap();
        assert_eq!(block_sort(t.clone(), &plan.clone().with_blocks(1), None).unwrap(), full);
        assert_eq!(block_sort(t.clone(), &plan.clone().with_blocks(10), None).unwrap(), t);
        let two = block_sort(t.clone(), &plan.clone().with_blocks(2), None).unwrap();
        let vals: Vec<&str> = two.rows().iter().map(|r| r[0].as_str()).collect();
        assert_eq!(vals, ["5", "6", "7", "8", "9", "0", "1", "2", "3", "4"]);
        assert!(block_sort(t, &plan.with_blocks(0), None).is_err());
    }

    #[test]
    fn split_blocks_sizes() {
        let rows: Vec<Row> = (0..11).map(|i| vec![i.to_string()]).collect();
        let sizes: Vec<usize> = split_blocks(rows, 4).iter().map(Vec::len).collect();
        assert_eq!(sizes, [3, 3, 3, 2]);
    }

    #[test]
    fn column_order_examples() {
        assert_eq!(
            order_columns_by_cardinality(&[91, 1240, 99800], Direction::Ascending),
            [0, 1, 2]
        );
        assert_eq!(
            order_columns_by_cardinality(&[7, 11, 400000], Direction::Descending),
            [2, 1, 0]
        );
        assert_eq!(
            order_columns_by_cardinality(&[5, 5, 5], Direction::Ascending),
            [0, 1, 2]
        );
        assert_eq!(
            order_columns_by_cardinality(&[5, 5, 5], Direction::Descending),
            [0, 1, 2]
        );
        assert_eq!(
            order_columns_by_cardinality(&[3, 1, 3, 2], Direction::Descending),
            [0, 2, 3, 1]
        );
    }

    #[test]
    fn plan_key_validation() {
        assert_eq!(SortPlan::default().key(3).unwrap(), [0, 1, 2]);
        assert!(SortPlan::default().with_column_order(vec![0, 0]).key(2).is_err());
        assert!(SortPlan::default().with_column_order(vec![2]).key(2).is_err());
    }

    #[test]
    fn gray_sort_on_single_one_of_n_column() {
        let vals = ["1", "2", "3"];
        let dict = ColumnDictionary::allocate(
            vals.iter().map(|s| s.to_string()).collect(),
            EncodingChoice { k: 1, n: 3 },
            Allocation::Alphabetic,
        )
        .unwrap();
        let t = table(&[&["2"], &["1"], &["3"], &["1"]]);
        let s = sort_table(t, &SortPlan::new(SortStrategy::Gray), Some(&[dict])).unwrap();
        let got: Vec<&str> = s.rows().iter().map(|r| r[0].as_str()).collect();
        // Codes 100, 010, 001: ascending bit rows put the last value first.
        assert_eq!(got, ["3", "2", "1", "1"]);
    }
}
