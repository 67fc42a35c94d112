//! k-of-N attribute encoding.
//!
//! Each distinct value of a column receives a code made of exactly `k` bitmap
//! positions out of `N`. An equality predicate is then the AND of `k` bitmaps.
//! Codes are handed out either in lexicographic order of their position
//! tuples (so that value order and bit-row order agree) or in Gray-code order.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of `k`-subsets of an `n`-set, saturating at `u128::MAX`.
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays exact: acc holds C(n, i).
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Smallest `N >= k` such that `C(N, k) >= cardinality`.
pub fn bitmaps_needed(cardinality: usize, k: u32) -> u32 {
    assert!(k >= 1, "k must be at least 1");
    let target = cardinality as u128;
    let mut n = k;
    while binomial(n, k) < target {
        n += 1;
    }
    n
}

/// Largest `k` worth using for a column of the given cardinality, or `None`
/// when any `k` is acceptable. Few distinct values compress better with
/// sparser codes.
pub fn max_allowed_k(cardinality: usize) -> Option<u32> {
    match cardinality {
        0..=5 => Some(1),
        6..=21 => Some(2),
        22..=85 => Some(3),
        _ => None,
    }
}

pub fn effective_k(cardinality: usize, requested: u32) -> u32 {
    match max_allowed_k(cardinality) {
        Some(cap) => requested.min(cap),
        None => requested,
    }
}

/// Chosen code width for one column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingChoice {
    pub k: u32,
    /// Number of bitmaps.
    pub n: u32,
}

impl EncodingChoice {
    /// Applies the cardinality cap to `requested_k` and picks the minimal `N`.
    pub fn for_cardinality(cardinality: usize, requested_k: u32) -> Result<Self> {
        if requested_k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let k = effective_k(cardinality, requested_k);
        Ok(EncodingChoice {
            k,
            n: bitmaps_needed(cardinality, k),
        })
    }

    pub fn capacity(&self) -> u128 {
        binomial(self.n, self.k)
    }
}

/// Strictly ascending bitmap positions of one value's code.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeCode(Vec<u32>);

impl AttributeCode {
    pub fn new(positions: Vec<u32>) -> Result<Self> {
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "code positions not ascending: {positions:?}"
            )));
        }
        Ok(AttributeCode(positions))
    }

    pub fn positions(&self) -> &[u32] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    /// Renders the code as an `n`-bit row, position 0 first.
    pub fn to_bit_row(&self, n: u32) -> Vec<bool> {
        let mut row = vec![false; n as usize];
        for &p in &self.0 {
            row[p as usize] = true;
        }
        row
    }
}

impl fmt::Display for AttributeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Order in which codes are handed to values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    #[default]
    Alphabetic,
    Gray,
}

/// Lexicographic successor of a `k`-subset of `0..n`, in place. Returns false
/// after the last subset.
pub fn next_combination(a: &mut [u32], n: u32) -> bool {
    let k = a.len();
    if k == 0 {
        return false;
    }
    let mut i = k - 1;
    while a[i] == n - (k - i) as u32 {
        if i == 0 {
            return false;
        }
        i -= 1;
    }
    a[i] += 1;
    for j in i + 1..k {
        a[j] = a[j - 1] + 1;
    }
    true
}

/// The first `count` codes in lexicographic order of position tuples.
pub fn alphabetic_codes(k: u32, n: u32, count: usize) -> Vec<AttributeCode> {
    let mut out = Vec::with_capacity(binomial(n, k).min(count as u128) as usize);
    if count == 0 || k > n {
        return out;
    }
    let mut a: Vec<u32> = (0..k).collect();
    loop {
        out.push(AttributeCode(a.clone()));
        if out.len() == count || !next_combination(&mut a, n) {
            break;
        }
    }
    out
}

/// The first `count` weight-`k` codes of length `n` in Gray-code order.
///
/// Generated directly instead of sorting all `C(n, k)` codes: among rows that
/// share a prefix, those whose next bit equals the prefix parity come first.
pub fn gray_codes(k: u32, n: u32, count: usize) -> Vec<AttributeCode> {
    struct Gen {
        n: u32,
        count: usize,
        prefix: Vec<u32>,
        out: Vec<AttributeCode>,
    }

    impl Gen {
        // Emits all completions of the current prefix from position `pos` on,
        // with `ones` bits still to place.
        fn walk(&mut self, pos: u32, ones: u32, parity: bool) {
            if self.out.len() == self.count {
                return;
            }
            let remaining = self.n - pos;
            if ones == 0 {
                self.out.push(AttributeCode(self.prefix.clone()));
                return;
            }
            if ones > remaining {
                return;
            }
            let visit = |g: &mut Gen, bit: bool| {
                if bit {
                    g.prefix.push(pos);
                    g.walk(pos + 1, ones - 1, !parity);
                    g.prefix.pop();
                } else if ones < remaining {
                    g.walk(pos + 1, ones, parity);
                }
            };
            visit(self, parity);
            visit(self, !parity);
        }
    }

    let mut g = Gen {
        n,
        count,
        prefix: Vec::with_capacity(k as usize),
        out: Vec::with_capacity(binomial(n, k).min(count as u128) as usize),
    };
    if k <= n {
        g.walk(0, k, false);
    }
    g.out
}

/// Attribute values of one column and the codes allocated to them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnDictionary {
    choice: EncodingChoice,
    allocation: Allocation,
    values: Vec<String>,
    // Derived from the allocation; regenerated when loaded.
    #[serde(skip)]
    codes: Vec<AttributeCode>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

impl PartialEq for ColumnDictionary {
    fn eq(&self, other: &Self) -> bool {
        self.choice == other.choice
            && self.allocation == other.allocation
            && self.values == other.values
            && self.codes == other.codes
    }
}

impl ColumnDictionary {
    /// Allocates codes to `values`, which must be strictly ascending in byte
    /// order.
    pub fn allocate(values: Vec<String>, choice: EncodingChoice, allocation: Allocation) -> Result<Self> {
        if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "dictionary values not strictly ascending: {:?} then {:?}",
                w[0], w[1]
            )));
        }
        if (values.len() as u128) > choice.capacity() {
            return Err(Error::CardinalityExceeded {
                cardinality: values.len(),
                k: choice.k,
                n: choice.n,
            });
        }
        let codes = match allocation {
            Allocation::Alphabetic => alphabetic_codes(choice.k, choice.n, values.len()),
            Allocation::Gray => gray_codes(choice.k, choice.n, values.len()),
        };
        debug_assert_eq!(codes.len(), values.len());
        let mut dict = ColumnDictionary {
            choice,
            allocation,
            values,
            codes,
            lookup: HashMap::new(),
        };
        dict.rebuild_lookup();
        Ok(dict)
    }

    /// Chooses `k` and `N` from the number of values, then allocates.
    pub fn build(values: Vec<String>, requested_k: u32, allocation: Allocation) -> Result<Self> {
        let choice = EncodingChoice::for_cardinality(values.len(), requested_k)?;
        Self::allocate(values, choice, allocation)
    }

    /// Restores codes and the value index after deserialization.
    pub(crate) fn restore(&mut self) -> Result<()> {
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::CorruptHeader("dictionary values out of order".into()));
        }
        if self.choice.k == 0 || self.choice.k > self.choice.n || (self.values.len() as u128) > self.choice.capacity() {
            return Err(Error::CorruptHeader(format!(
                "{} values do not fit {}-of-{} codes",
                self.values.len(),
                self.choice.k,
                self.choice.n
            )));
        }
        self.codes = match self.allocation {
            Allocation::Alphabetic => alphabetic_codes(self.choice.k, self.choice.n, self.values.len()),
            Allocation::Gray => gray_codes(self.choice.k, self.choice.n, self.values.len()),
        };
        self.rebuild_lookup();
        Ok(())
    }

    fn rebuild_lookup(&mut self) {
        self.lookup = self.values.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    }

    pub fn choice(&self) -> EncodingChoice {
        self.choice
    }

    pub fn allocation(&self) -> Allocation {
        self.allocation
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn codes(&self) -> &[AttributeCode] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rank of `value` in the dictionary.
    pub fn rank(&self, value: &str) -> Option<usize> {
        self.lookup.get(value).copied()
    }

    pub fn code_of(&self, value: &str) -> Option<&AttributeCode> {
        self.rank(value).map(|i| &self.codes[i])
    }

    pub fn encode(&self, column: &str, value: &str) -> Result<&AttributeCode> {
        self.code_of(value).ok_or_else(|| Error::UnknownValue {
            column: column.to_string(),
            value: value.to_string(),
        })
    }
}

/// Compares bit rows in standard lexicographic order (0 before 1).
pub fn compare_bit_rows(a: &[bool], b: &[bool]) -> Ordering {
    a.cmp(b)
}
