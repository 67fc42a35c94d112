//! Delimited fact tables: one row per line, fields split on a single
//! character, no quoting.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub type Row = Vec<String>;

/// Rows of `d` textual attribute values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactTable {
    names: Vec<String>,
    rows: Vec<Row>,
}

/// `d0`, `d1`, ... for tables read without a header line.
pub fn default_column_names(arity: usize) -> Vec<String> {
    (0..arity).map(|i| format!("d{i}")).collect()
}

impl FactTable {
    pub fn new(names: Vec<String>, rows: Vec<Row>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidArgument("a fact table needs at least one column".into()));
        }
        check_widths(names.len(), &rows)?;
        Ok(FactTable { names, rows })
    }

    /// Table with default column names; `arity` is only used when `rows` is
    /// empty.
    pub fn from_rows(rows: Vec<Row>, arity: usize) -> Result<Self> {
        let d = rows.first().map_or(arity, Vec::len);
        Self::new(default_column_names(d), rows)
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Row> {
        self.rows
    }

    /// Same columns, different rows.
    pub fn with_rows(&self, rows: Vec<Row>) -> Result<Self> {
        Self::new(self.names.clone(), rows)
    }

    pub fn read_delimited<R: BufRead>(reader: R, delimiter: char, header: bool) -> Result<Self> {
        let mut rows = DelimitedRows::new(reader, delimiter);
        let names = if header {
            match rows.next() {
                Some(h) => Some(h?),
                None => return Err(Error::InvalidArgument("missing header line".into())),
            }
        } else {
            None
        };
        let body: Vec<Row> = rows.collect::<Result<_>>()?;
        match names {
            Some(n) => Self::new(n, body),
            None => Self::from_rows(body, 1),
        }
    }

    pub fn write_delimited<W: Write>(&self, mut out: W, delimiter: char, header: bool) -> Result<()> {
        if header {
            write_row(&mut out, &self.names, delimiter)?;
        }
        for row in &self.rows {
            write_row(&mut out, row, delimiter)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_widths(d: usize, rows: &[Row]) -> Result<()> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::RaggedRow {
                line: i as u64 + 1,
                expected: d,
                found: r.len(),
            });
        }
    }
    Ok(())
}

pub fn split_line(line: &str, delimiter: char) -> Row {
    let line = line.strip_suffix('\r').unwrap_or(line);
    line.split(delimiter).map(str::to_string).collect()
}

pub fn write_row<W: Write>(out: &mut W, row: &[String], delimiter: char) -> Result<()> {
    let mut buf = [0u8; 4];
    let delim = delimiter.encode_utf8(&mut buf).as_bytes();
    for (i, f) in row.iter().enumerate() {
        if i > 0 {
            out.write_all(delim)?;
        }
        out.write_all(f.as_bytes())?;
    }
    out.write_all(b"\n")?;
    Ok(())
}

/// Streams rows from delimited text, checking that all rows have the width
/// of the first one.
pub struct DelimitedRows<R> {
    lines: std::io::Lines<R>,
    delimiter: char,
    arity: Option<usize>,
    line_no: u64,
}

impl<R: BufRead> DelimitedRows<R> {
    pub fn new(reader: R, delimiter: char) -> Self {
        DelimitedRows {
            lines: reader.lines(),
            delimiter,
            arity: None,
            line_no: 0,
        }
    }

    /// Line number of the last row returned, 1-based.
    pub fn line_no(&self) -> u64 {
        self.line_no
    }
}

impl<R: BufRead> Iterator for DelimitedRows<R> {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Result<Row>> {
        let line = match self.lines.next()? {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        self.line_no += 1;
        let row = split_line(&line, self.delimiter);
        match self.arity {
            None => self.arity = Some(row.len()),
            Some(d) if d != row.len() => {
                return Some(Err(Error::RaggedRow {
                    line: self.line_no,
                    expected: d,
                    found: row.len(),
                }))
            }
            Some(_) => {}
        }
        Some(Ok(row))
    }
}
