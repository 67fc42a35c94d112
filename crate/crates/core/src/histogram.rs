//! Per-column value counts, computed in a first pass over the table and
//! kept beside it so that re-indexing can skip that pass.
//!
//! Sidecar format (UTF-8 text, `\n` line ends):
//!
//! ```text
//! bitkiln-histogram 1
//! rows <n>
//! column <index> <name>
//! <index>\t<count>\t<value>
//! ```
//!
//! All `column` lines come first. Values and names run to the end of the
//! line, so they may contain tabs and spaces.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::table::{FactTable, Row};

const MAGIC_LINE: &str = "bitkiln-histogram 1";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Histogram {
    names: Vec<String>,
    // BTreeMap<String, _> iterates in byte order of the values.
    counts: Vec<BTreeMap<String, u64>>,
    rows: u64,
}

/// `<table>.hist`
pub fn sidecar_path(table: &Path) -> PathBuf {
    let mut s = table.as_os_str().to_owned();
    s.push(".hist");
    PathBuf::from(s)
}

impl Histogram {
    pub fn new(names: Vec<String>) -> Self {
        let counts = vec![BTreeMap::new(); names.len()];
        Histogram { names, counts, rows: 0 }
    }

    pub fn from_table(table: &FactTable) -> Self {
        let mut h = Histogram::new(table.column_names().to_vec());
        for row in table.rows() {
            h.add_row(row).expect("table rows have the table's width");
        }
        h
    }

    /// Counts a stream of rows.
    pub fn from_rows<I>(names: Vec<String>, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Result<Row>>,
    {
        let mut h = Histogram::new(names);
        for row in rows {
            h.add_row(&row?)?;
        }
        Ok(h)
    }

    pub fn add_row(&mut self, row: &[String]) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::RaggedRow {
                line: self.rows + 1,
                expected: self.names.len(),
                found: row.len(),
            });
        }
        for (m, v) in self.counts.iter_mut().zip(row) {
            match m.get_mut(v.as_str()) {
                Some(c) => *c += 1,
                None => {
                    m.insert(v.clone(), 1);
                }
            }
        }
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn counts(&self, column: usize) -> &BTreeMap<String, u64> {
        &self.counts[column]
    }

    pub fn count(&self, column: usize, value: &str) -> u64 {
        self.counts[column].get(value).copied().unwrap_or(0)
    }

    pub fn cardinality(&self, column: usize) -> usize {
        self.counts[column].len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.counts.iter().map(BTreeMap::len).collect()
    }

    /// Distinct values of `column` in ascending byte order.
    pub fn values(&self, column: usize) -> Vec<String> {
        self.counts[column].keys().cloned().collect()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MAGIC_LINE}")?;
        writeln!(out, "rows {}", self.rows)?;
        for (i, name) in self.names.iter().enumerate() {
            check_line(name)?;
            writeln!(out, "column {i} {name}")?;
        }
        for (i, m) in self.counts.iter().enumerate() {
            for (v, c) in m {
                check_line(v)?;
                writeln!(out, "{i}\t{c}\t{v}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::CorruptHistogram(format!("line {line}: {msg}"));
        let mut lines = input.lines();
        let mut line_no = 0usize;
        let mut next = || -> Result<Option<(usize, String)>> {
            line_no += 1;
            Ok(lines.next().transpose()?.map(|l| (line_no, l)))
        };
        let missing = |what: &str| Error::CorruptHistogram(format!("missing {what}"));
        let (_, magic) = next()?.ok_or_else(|| missing("format line"))?;
        if magic != MAGIC_LINE {
            return Err(bad(1, "not a histogram file"));
        }
        let (i, rows_line) = next()?.ok_or_else(|| missing("row count"))?;
        let rows: u64 = rows_line
            .strip_prefix("rows ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(i, "expected `rows <n>`"))?;
        let mut h = Histogram::new(Vec::new());
        h.rows = rows;
        let mut line = next()?;
        while let Some((i, rest)) = line.as_ref().and_then(|(i, l)| Some((*i, l.strip_prefix("column ")?))) {
            let (idx, name) = rest
                .split_once(' ')
                .ok_or_else(|| bad(i, "expected `column <i> <name>`"))?;
            if idx.parse::<usize>().ok() != Some(h.names.len()) {
                return Err(bad(i, "column indices out of sequence"));
            }
            h.names.push(name.to_string());
            h.counts.push(BTreeMap::new());
            line = next()?;
        }
        while let Some((i, l)) = line {
            let mut parts = l.splitn(3, '\t');
            let (Some(c), Some(n), Some(v)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad(i, "expected `<column>\\t<count>\\t<value>`"));
            };
            let c: usize = c.parse().map_err(|_| bad(i, "bad column index"))?;
            let n: u64 = n.parse().map_err(|_| bad(i, "bad count"))?;
            let m = h.counts.get_mut(c).ok_or_else(|| bad(i, "unknown column index"))?;
            if n == 0 || m.insert(v.to_string(), n).is_some() {
                return Err(bad(i, "zero or repeated count"));
            }
            line = next()?;
        }
        for (c, m) in h.counts.iter().enumerate() {
            let total: u64 = m.values().sum();
            if total != h.rows {
                return Err(Error::CorruptHistogram(format!(
                    "column {c} counts sum to {total}, expected {}",
                    h.rows
                )));
            }
        }
        Ok(h)
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        self.write_to(BufWriter::new(tmp.as_file_mut()))?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn check_line(s: &str) -> Result<()> {
    // Line reading drops a trailing '\r'.
    if s.contains('\n') || s.ends_with('\r') {
        return Err(Error::InvalidArgument(format!("{s:?} cannot be stored on one line")));
    }
    Ok(())
}
