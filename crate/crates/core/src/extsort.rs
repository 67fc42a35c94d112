//! Two-pass external merge sort of rows by a column projection.
//!
//! Pass one cuts the input into runs of at most `budget` bytes of row data,
//! sorts each run in memory and writes it to a temporary file. Pass two reads
//! the first `z` bytes of every run into a heap, repeatedly moves the smallest
//! row to a write buffer of `x` bytes, and refills a run's read buffer when it
//! drains. Both passes read and write strictly sequentially.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::table::Row;
use crate::Execution;

/// Smallest read or write buffer used while merging.
const MIN_BUFFER: usize = 4 << 10;

/// Approximate in-memory footprint of a row's data.
pub fn row_bytes(row: &[String]) -> usize {
    row.iter().map(|f| f.len() + 1).sum()
}

/// What happened during a sort.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SortReport {
    pub rows: u64,
    /// Number of sorted runs written to disk; zero when everything fit.
    pub runs: usize,
    /// Read buffer per run during the merge (`z`), in bytes.
    pub read_buffer: usize,
    /// Write buffer during the merge (`x`), in bytes.
    pub write_buffer: usize,
}

/// Stable external sort on the projection `key` (column indices compared in
/// order, byte-wise).
#[derive(Clone, Debug)]
pub struct ExternalSorter {
    budget: usize,
    key: Vec<usize>,
    tmp_dir: Option<PathBuf>,
    execution: Execution,
}

impl ExternalSorter {
    pub fn new(budget: usize, key: Vec<usize>) -> Self {
        ExternalSorter {
            budget: budget.max(1),
            key,
            tmp_dir: None,
            execution: Execution::default(),
        }
    }

    pub fn with_tmp_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.tmp_dir = Some(dir.into());
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Sorts `rows`, handing them to `sink` in order.
    pub fn sort<I, F>(&self, rows: I, mut sink: F) -> Result<SortReport>
    where
        I: IntoIterator<Item = Result<Row>>,
        F: FnMut(Row) -> Result<()>,
    {
        let mut report = SortReport::default();
        let mut runs: Vec<File> = Vec::new();
        let mut chunk: Vec<Row> = Vec::new();
        let mut chunk_bytes = 0usize;
        for row in rows {
            let row = row?;
            report.rows += 1;
            let b = row_bytes(&row);
            if !chunk.is_empty() && chunk_bytes + b > self.budget {
                self.sort_chunk(&mut chunk);
                runs.push(self.spill(&chunk)?);
                chunk.clear();
                chunk_bytes = 0;
            }
            chunk_bytes += b;
            chunk.push(row);
        }
        self.sort_chunk(&mut chunk);
        if runs.is_empty() {
            for row in chunk {
                sink(row)?;
            }
            return Ok(report);
        }
        if !chunk.is_empty() {
            runs.push(self.spill(&chunk)?);
        }
        drop(chunk);
        report.runs = runs.len();
        report.write_buffer = (self.budget / 4).max(MIN_BUFFER);
        report.read_buffer = (self.budget.saturating_sub(report.write_buffer) / runs.len()).max(MIN_BUFFER);
        self.merge(runs, report.read_buffer, &mut sink)?;
        Ok(report)
    }

    fn compare(&self, a: &Row, b: &Row) -> Ordering {
        compare_projection(&self.key, a, b)
    }

    fn sort_chunk(&self, chunk: &mut [Row]) {
        crate::sort_slice_by(chunk, self.execution, |a, b| self.compare(a, b));
    }

    fn spill(&self, chunk: &[Row]) -> Result<File> {
        let file = match &self.tmp_dir {
            Some(d) => tempfile::tempfile_in(d)?,
            None => tempfile::tempfile()?,
        };
        let mut w = BufWriter::new(file);
        for row in chunk {
            write_record(&mut w, row)?;
        }
        let mut file = w.into_inner().map_err(|e| e.into_error())?;
        use std::io::Seek;
        file.rewind()?;
        Ok(file)
    }

    fn merge<F>(&self, runs: Vec<File>, read_buffer: usize, sink: &mut F) -> Result<()>
    where
        F: FnMut(Row) -> Result<()>,
    {
        let mut readers: Vec<BufReader<File>> = runs
            .into_iter()
            .map(|f| BufReader::with_capacity(read_buffer, f))
            .collect();
        let mut heap = BinaryHeap::with_capacity(readers.len());
        for (i, r) in readers.iter_mut().enumerate() {
            if let Some(row) = read_record(r)? {
                heap.push(Head {
                    row,
                    run: i,
                    key: &self.key,
                });
            }
        }
        while let Some(Head { row, run, .. }) = heap.pop() {
            if let Some(next) = read_record(&mut readers[run])? {
                heap.push(Head {
                    row: next,
                    run,
                    key: &self.key,
                });
            }
            sink(row)?;
        }
        Ok(())
    }
}

/// Byte-wise comparison of two rows restricted to `key` columns.
pub fn compare_projection(key: &[usize], a: &[String], b: &[String]) -> Ordering {
    for &c in key {
        match a[c].as_bytes().cmp(b[c].as_bytes()) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

// Min-heap entry; ties go to the earlier run so the merge stays stable.
struct Head<'k> {
    row: Row,
    run: usize,
    key: &'k [usize],
}

impl Ord for Head<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_projection(self.key, &self.row, &other.row)
            .then(self.run.cmp(&other.run))
            .reverse()
    }
}

impl PartialOrd for Head<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Head<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Head<'_> {}

// Run files: u32 field count, then per field a u32 length and the bytes.
fn write_record<W: Write>(w: &mut W, row: &[String]) -> Result<()> {
    w.write_all(&(row.len() as u32).to_le_bytes())?;
    for f in row {
        w.write_all(&(f.len() as u32).to_le_bytes())?;
        w.write_all(f.as_bytes())?;
    }
    Ok(())
}

fn read_record<R: Read>(r: &mut R) -> Result<Option<Row>> {
    let mut n = [0u8; 4];
    match r.read_exact(&mut n) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let fields = u32::from_le_bytes(n) as usize;
    let mut row = Vec::with_capacity(fields);
    for _ in 0..fields {
        r.read_exact(&mut n)?;
        let mut buf = vec![0u8; u32::from_le_bytes(n) as usize];
        r.read_exact(&mut buf)?;
        row.push(String::from_utf8(buf).map_err(|e| Error::InvalidArgument(format!("spill file: {e}")))?);
    }
    Ok(Some(row))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[(&str, &str)]) -> Vec<Row> {
        v.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]).collect()
    }

    fn run(sorter: &ExternalSorter, input: Vec<Row>) -> (Vec<Row>, SortReport) {
        let mut out = Vec::new();
        let rep = sorter
            .sort(input.into_iter().map(Ok), |r| {
                out.push(r);
                Ok(())
            })
            .unwrap();
        (out, rep)
    }

    #[test]
    fn in_memory_when_it_fits() {
        let s = ExternalSorter::new(1 << 20, vec![0]);
        let (out, rep) = run(&s, rows(&[("b", "1"), ("a", "2"), ("b", "0")]));
        assert_eq!(out, rows(&[("a", "2"), ("b", "1"), ("b", "0")]));
        assert_eq!(rep.runs, 0);
    }

    #[test]
    fn spills_and_merges_stably() {
        let input: Vec<Row> = (0..500)
            .map(|i| vec![format!("{}", (i * 7919) % 13), format!("{i:04}")])
            .collect();
        let s = ExternalSorter::new(64, vec![0]);
        let (out, rep) = run(&s, input.clone());
        assert!(rep.runs > 10);
        assert!(rep.read_buffer >= MIN_BUFFER);
        let mut expect = input;
        expect.sort_by(|a, b| a[0].cmp(&b[0]));
        assert_eq!(out, expect);
    }

    #[test]
    fn key_order_matters() {
        let s = ExternalSorter::new(8, vec![1, 0]);
        let (out, _) = run(&s, rows(&[("a", "2"), ("b", "1"), ("a", "1")]));
        assert_eq!(out, rows(&[("a", "1"), ("b", "1"), ("a", "2")]));
    }

    #[test]
    fn field_wise_not_line_wise() {
        // As whole lines "a+,b" < "a,z" because '+' < ','.
        let s = ExternalSorter::new(1, vec![0, 1]);
        let (out, _) = run(&s, rows(&[("a+", "b"), ("a", "z")]));
        assert_eq!(out, rows(&[("a", "z"), ("a+", "b")]));
    }
}
