//! Synthetic fact tables.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::table::{FactTable, Row};

/// Chance that an independent column contributes to a dependent one.
pub const DEPENDENCE_PROBABILITY: f64 = 0.2;
/// Dependent values fall back to a uniform draw from `1..=100`.
pub const FALLBACK_RANGE: u64 = 100;
pub const DEFAULT_ZIPF_RANGE: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniformSpec {
    pub rows: usize,
    pub independent: usize,
    /// Growth of the value range between consecutive independent columns
    /// (1 or 2): column `i` draws from `1..=100 * ratio^i`.
    pub ratio: u64,
    pub dependent: usize,
    pub seed: u64,
}

/// Independent uniform columns plus dependent columns that sum a random
/// subset of the row's independent values. Columns are then shuffled.
pub fn gen_uniform(spec: &UniformSpec) -> Result<FactTable> {
    let d = spec.independent + spec.dependent;
    if spec.independent == 0 {
        return Err(Error::InvalidArgument("need at least one independent column".into()));
    }
    let ranges: Vec<u64> = (0..spec.independent)
        .map(|i| {
            u32::try_from(i)
                .ok()
                .and_then(|i| spec.ratio.checked_pow(i))
                .and_then(|m| m.checked_mul(100))
                .ok_or_else(|| Error::InvalidArgument(format!("value range of column {i} overflows")))
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    let mut rows = Vec::with_capacity(spec.rows);
    let mut values = vec![0u64; d];
    for _ in 0..spec.rows {
        for (v, &m) in values.iter_mut().zip(&ranges) {
            *v = rng.random_range(1..=m);
        }
        for j in spec.independent..d {
            let mut sum = 0;
            let mut any = false;
            for &v in &values[..spec.independent] {
                if rng.random_bool(DEPENDENCE_PROBABILITY) {
                    sum += v;
                    any = true;
                }
            }
            values[j] = if any { sum } else { rng.random_range(1..=FALLBACK_RANGE) };
        }
        let row: Row = perm.iter().map(|&c| values[c].to_string()).collect();
        rows.push(row);
    }
    FactTable::from_rows(rows, d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZipfSpec {
    pub rows: usize,
    pub dims: usize,
    /// Exponent `s > 0`.
    pub s: f64,
    /// Values are drawn from `1..=range`.
    pub range: u64,
    pub seed: u64,
}

/// Independent columns where value `v` has probability proportional to
/// `v^-s`.
pub fn gen_zipf(spec: &ZipfSpec) -> Result<FactTable> {
    if spec.dims == 0 {
        return Err(Error::InvalidArgument("need at least one column".into()));
    }
    if spec.s.is_nan() || spec.s <= 0.0 || spec.range == 0 {
        return Err(Error::InvalidArgument(format!(
            "zipf needs s > 0 and a range of at least 1 (got s={}, range={})",
            spec.s, spec.range
        )));
    }
    let dist = Zipf::new(spec.range as f64, spec.s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = (0..spec.rows)
        .map(|_| {
            (0..spec.dims)
                .map(|_| (dist.sample(&mut rng) as u64).to_string())
                .collect()
        })
        .collect();
    FactTable::from_rows(rows, spec.dims)
}
