//! Equality predicates combined with AND and OR, evaluated on compressed
//! bitmaps.
//!
//! Text syntax: `col=value` leaves, `&` binding tighter than `|`, and
//! parentheses. Whitespace around tokens is ignored; a value runs up to the
//! next `&`, `|` or `)` and is trimmed.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ewah::{EwahBitmap, LogicalOp};
use crate::index::IndexReader;
use crate::Execution;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Eq { column: String, value: String },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eq(column: impl Into<String>, value: impl Into<String>) -> Self {
        Expr::Eq {
            column: column.into(),
            value: value.into(),
        }
    }

    pub fn and(self, other: Expr) -> Self {
        Expr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Expr) -> Self {
        Expr::Or(Box::new(self), Box::new(other))
    }

    /// Equality leaves, left to right.
    pub fn leaves(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            Expr::Eq { column, value } => out.push((column, value)),
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Evaluates the predicate on one row given a column lookup.
    pub fn matches<'r>(&self, get: &impl Fn(&str) -> Option<&'r str>) -> bool {
        match self {
            Expr::Eq { column, value } => get(column) == Some(value.as_str()),
            Expr::And(a, b) => a.matches(get) && b.matches(get),
            Expr::Or(a, b) => a.matches(get) || b.matches(get),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Eq { column, value } => write!(f, "{column}={value}"),
            Expr::And(a, b) => write!(f, "({a} & {b})"),
            Expr::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser { text, pos: 0 };
    let e = p.or()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected input"));
    }
    Ok(e)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::QuerySyntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn or(&mut self) -> Result<Expr> {
        let mut e = self.and()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            e = e.or(self.and()?);
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut e = self.primary()?;
        while self.peek() == Some('&') {
            self.pos += 1;
            e = e.and(self.primary()?);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.or()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some('&' | '|' | ')' | '=') => Err(self.error("expected `column=value`")),
            None => Err(self.error("unexpected end of query")),
            Some(_) => self.leaf(),
        }
    }

    fn leaf(&mut self) -> Result<Expr> {
        let rest = &self.text[self.pos..];
        let end = rest.find(['=', '&', '|', '(', ')']).unwrap_or(rest.len());
        if !rest[end..].starts_with('=') {
            self.pos += end;
            return Err(self.error("expected `=`"));
        }
        let column = rest[..end].trim_end();
        self.pos += end + 1;
        let rest = &self.text[self.pos..];
        let vend = rest.find(['&', '|', '(', ')']).unwrap_or(rest.len());
        let value = rest[..vend].trim();
        if rest[vend..].starts_with('(') {
            self.pos += vend;
            return Err(self.error("unexpected `(` in value"));
        }
        self.pos += vend;
        Ok(Expr::eq(column, value))
    }
}

/// Rows selected by a query, with the work it took.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryResult {
    /// Ascending row ids.
    pub rows: Vec<u64>,
    pub count: u64,
    /// Bitmaps requested by equality leaves: the sum of the leaves' `k`.
    pub bitmap_requests: u64,
    /// Distinct bitmaps read from the index.
    pub bitmaps_loaded: u64,
    pub bytes_read: u64,
    /// Words visited by logical operations.
    pub word_visits: u64,
    /// Leaves whose value is not in the column dictionary; they match nothing.
    pub unknown_values: Vec<(String, String)>,
}

/// Per-query state: a bitmap cache keyed by (column, bitmap) and counters.
pub struct Evaluator<'r> {
    reader: &'r IndexReader,
    cache: HashMap<(usize, u32), Arc<EwahBitmap>>,
    bitmap_requests: u64,
    bytes_read: u64,
    word_visits: u64,
    unknown_values: Vec<(String, String)>,
}

impl<'r> Evaluator<'r> {
    pub fn new(reader: &'r IndexReader) -> Self {
        Evaluator {
            reader,
            cache: HashMap::new(),
            bitmap_requests: 0,
            bytes_read: 0,
            word_visits: 0,
            unknown_values: Vec::new(),
        }
    }

    fn bitmap(&mut self, column: usize, id: u32) -> Result<Arc<EwahBitmap>> {
        self.bitmap_requests += 1;
        if let Some(bm) = self.cache.get(&(column, id)) {
            return Ok(bm.clone());
        }
        let (bm, bytes) = self.reader.load_bitmap_counted(column, id)?;
        self.bytes_read += bytes;
        let bm = Arc::new(bm);
        self.cache.insert((column, id), bm.clone());
        Ok(bm)
    }

    fn combine(&mut self, op: LogicalOp, a: &EwahBitmap, b: &EwahBitmap) -> Result<EwahBitmap> {
        let (r, visits) = a.logical_counted(op, b)?;
        self.word_visits += visits;
        Ok(r)
    }

    /// AND of the bitmaps named by `value`'s code. The flag is set when the
    /// value is not in the dictionary, in which case the result is empty.
    pub fn equality(&mut self, column: &str, value: &str) -> Result<(EwahBitmap, bool)> {
        let c = self.reader.column_index(column)?;
        let dict = &self.reader.columns()[c].dictionary;
        let Some(code) = dict.code_of(value) else {
            self.unknown_values.push((column.to_string(), value.to_string()));
            return Ok((EwahBitmap::zeros(self.reader.rows()), true));
        };
        let positions = code.positions().to_vec();
        let mut acc = (*self.bitmap(c, positions[0])?).clone();
        for &p in &positions[1..] {
            let next = self.bitmap(c, p)?;
            acc = self.combine(LogicalOp::And, &acc, &next)?;
        }
        Ok((acc, false))
    }

    pub fn bitmap_of(&mut self, expr: &Expr) -> Result<EwahBitmap> {
        match expr {
            Expr::Eq { column, value } => Ok(self.equality(column, value)?.0),
            Expr::And(a, b) => {
                let (x, y) = (self.bitmap_of(a)?, self.bitmap_of(b)?);
                self.combine(LogicalOp::And, &x, &y)
            }
            Expr::Or(a, b) => {
                let (x, y) = (self.bitmap_of(a)?, self.bitmap_of(b)?);
                self.combine(LogicalOp::Or, &x, &y)
            }
        }
    }

    pub fn finish(self, result: &EwahBitmap) -> QueryResult {
        let rows: Vec<u64> = result.iter_ones().collect();
        QueryResult {
            count: rows.len() as u64,
            rows,
            bitmap_requests: self.bitmap_requests,
            bitmaps_loaded: self.cache.len() as u64,
            bytes_read: self.bytes_read,
            word_visits: self.word_visits,
            unknown_values: self.unknown_values,
        }
    }
}

/// Equality leaf on its own: the AND of the value's `k` bitmaps, and whether
/// the value was unknown.
pub fn equality_bitmap(reader: &IndexReader, column: &str, value: &str) -> Result<(EwahBitmap, bool)> {
    Evaluator::new(reader).equality(column, value)
}

pub fn evaluate(reader: &IndexReader, expr: &Expr) -> Result<QueryResult> {
    let mut ev = Evaluator::new(reader);
    let bm = ev.bitmap_of(expr)?;
    Ok(ev.finish(&bm))
}

/// Evaluates independent queries, concurrently under `Execution::Parallel`.
pub fn evaluate_batch(reader: &IndexReader, exprs: &[Expr], execution: Execution) -> Result<Vec<QueryResult>> {
    crate::map_collect(exprs.iter().collect(), execution, |e| evaluate(reader, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_precedence() {
        let e = parse("a=1 | b=2 & c=3").unwrap();
        assert_eq!(e, Expr::eq("a", "1").or(Expr::eq("b", "2").and(Expr::eq("c", "3"))));
        let e = parse(" ( a = 1|b=2 )&c=3 ").unwrap();
        assert_eq!(e, Expr::eq("a", "1").or(Expr::eq("b", "2")).and(Expr::eq("c", "3")));
        let e = parse("a=1&b=2&c=3").unwrap();
        assert_eq!(e, Expr::eq("a", "1").and(Expr::eq("b", "2")).and(Expr::eq("c", "3")));
    }

    #[test]
    fn values_keep_inner_spaces() {
        assert_eq!(
            parse("Ville = Nouvelle York").unwrap(),
            Expr::eq("Ville", "Nouvelle York")
        );
        assert_eq!(parse("v=").unwrap(), Expr::eq("v", ""));
        assert_eq!(parse("x=a=b").unwrap(), Expr::eq("x", "a=b"));
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(parse("d0=3&d2=7").unwrap(), parse("  d0 =3 &\td2= 7\n").unwrap());
    }

    #[test]
    fn syntax_errors() {
        for q in [
            "",
            "a",
            "a=1 &",
            "(a=1",
            "a=1)",
            "& a=1",
            "a=1 | | b=2",
            "=1",
            "a=(1)",
            "()",
        ] {
            assert!(matches!(parse(q), Err(Error::QuerySyntax { .. })), "{q:?}");
        }
    }

    #[test]
    fn display_round_trips() {
        let e = parse("a=1 | (b=2 & c=3) | d=4").unwrap();
        assert_eq!(parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn row_matching() {
        let e = parse("a=1 & (b=2 | b=3)").unwrap();
        let row = |a: &'static str, b: &'static str| {
            move |c: &str| match c {
                "a" => Some(a),
                "b" => Some(b),
                _ => None,
            }
        };
        assert!(e.matches(&row("1", "3")));
        assert!(!e.matches(&row("1", "4")));
        assert!(!e.matches(&row("2", "2")));
    }
}
