//! EWAH (Enhanced Word-Aligned Hybrid) compressed bitmaps over 32-bit words.
//!
//! A compressed bitmap is a sequence of 32-bit words. Marker words describe a
//! run of clean words (all zeros or all ones) followed by a number of dirty
//! literal words, which are stored verbatim right after the marker. The
//! sequence always starts with a marker, even when the bitmap begins with a
//! literal.
//!
//! ```text
//!  31            17 16             1    0
//! ┌────────────────┬────────────────┬──────┐
//! │  dirty count   │ clean run len  │ type │
//! │    15 bits     │    16 bits     │ 1 bit│
//! └────────────────┴────────────────┴──────┘
//! ```
//!
//! Row `r` lives in word `r / 32`, bit `r % 32` (least significant bit first).
//! When the bit length is not a multiple of 32 the final word is padded with
//! zeros, so logical operations other than complement never set padding bits.
//!
//! Builders append word by word; clean words fold into the current marker and
//! a new marker is only started when a counter saturates or when the stream
//! alternates between clean runs and literals. Because every bitmap is built
//! through the same greedy path, equal contents always produce equal words.

use std::cmp::min;

use crate::error::{Error, Result};

/// Bits per word.
pub const WORD_BITS: u64 = 32;
/// Largest clean run a single marker can describe.
pub const MAX_CLEAN_RUN: u32 = (1 << 16) - 1;
/// Largest number of literals a single marker can announce.
pub const MAX_DIRTY_COUNT: u32 = (1 << 15) - 1;

const ALL_ONES: u32 = u32::MAX;

#[inline]
pub fn is_clean(word: u32) -> bool {
    word == 0 || word == ALL_ONES
}

/// Decoded marker word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Marker {
    pub clean_bit: bool,
    pub run_len: u32,
    pub dirty_count: u32,
}

impl Marker {
    pub const EMPTY: Marker = Marker {
        clean_bit: false,
        run_len: 0,
        dirty_count: 0,
    };

    #[inline]
    pub fn encode(self) -> u32 {
        debug_assert!(self.run_len <= MAX_CLEAN_RUN);
        debug_assert!(self.dirty_count <= MAX_DIRTY_COUNT);
        (self.clean_bit as u32) | (self.run_len << 1) | (self.dirty_count << 17)
    }

    #[inline]
    pub fn decode(word: u32) -> Marker {
        Marker {
            clean_bit: word & 1 == 1,
            run_len: (word >> 1) & MAX_CLEAN_RUN,
            dirty_count: word >> 17,
        }
    }
}

/// Binary operations supported directly on compressed bitmaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogicalOp {
    And,
    Or,
    Xor,
    /// `a AND NOT b`
    AndNot,
}

impl LogicalOp {
    pub const ALL: [LogicalOp; 4] = [LogicalOp::And, LogicalOp::Or, LogicalOp::Xor, LogicalOp::AndNot];

    #[inline]
    pub fn apply(self, a: u32, b: u32) -> u32 {
        match self {
            LogicalOp::And => a & b,
            LogicalOp::Or => a | b,
            LogicalOp::Xor => a ^ b,
            LogicalOp::AndNot => a & !b,
        }
    }
}

/// Size figures of one bitmap, in 32-bit words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SizeStats {
    pub compressed_words: u64,
    pub uncompressed_words: u64,
    pub set_bits: u64,
    pub dirty_words: u64,
}

impl SizeStats {
    /// `1 - C/N`; zero for an empty bitmap.
    pub fn compression_factor(&self) -> f64 {
        compression_factor(self.compressed_words, self.uncompressed_words)
    }
}

pub fn compression_factor(compressed: u64, uncompressed: u64) -> f64 {
    if uncompressed == 0 {
        0.0
    } else {
        1.0 - compressed as f64 / uncompressed as f64
    }
}

/// Number of uncompressed words needed for `bits` bits.
#[inline]
pub fn words_for_bits(bits: u64) -> u64 {
    bits.div_ceil(WORD_BITS)
}

/// One marker together with the literal words it announces.
#[derive(Clone, Copy, Debug)]
pub struct Run<'a> {
    pub clean_bit: bool,
    pub run_len: u32,
    pub literals: &'a [u32],
}

/// EWAH-compressed bitmap with a cached population count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EwahBitmap {
    words: Vec<u32>,
    bit_len: u64,
    set_bits: u64,
    last_marker: usize,
}

impl Default for EwahBitmap {
    fn default() -> Self {
        Self::new()
    }
}

impl EwahBitmap {
    pub fn new() -> Self {
        EwahBitmap {
            words: vec![Marker::EMPTY.encode()],
            bit_len: 0,
            set_bits: 0,
            last_marker: 0,
        }
    }

    /// An all-zero bitmap of `bit_len` bits.
    pub fn zeros(bit_len: u64) -> Self {
        let mut bm = EwahBitmap::new();
        bm.push_clean_bits(false, bit_len);
        bm
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut bm = EwahBitmap::new();
        for chunk in bits.chunks(WORD_BITS as usize) {
            let mut word = 0u32;
            for (i, &b) in chunk.iter().enumerate() {
                word |= (b as u32) << i;
            }
            bm.push_word_unchecked(word, chunk.len() as u64);
        }
        bm
    }

    /// Compresses an uncompressed word array. Bits at or beyond `bit_len` are
    /// ignored.
    pub fn from_words(words: &[u32], bit_len: u64) -> Result<Self> {
        let needed = words_for_bits(bit_len);
        if (words.len() as u64) < needed {
            return Err(Error::InvalidArgument(format!(
                "{} words cannot hold {bit_len} bits",
                words.len()
            )));
        }
        let mut bm = EwahBitmap::new();
        let full = bit_len / WORD_BITS;
        for &w in &words[..full as usize] {
            bm.push_word_unchecked(w, WORD_BITS);
        }
        let tail = bit_len % WORD_BITS;
        if tail != 0 {
            let mask = (1u32 << tail) - 1;
            bm.push_word_unchecked(words[full as usize] & mask, tail);
        }
        Ok(bm)
    }

    /// Builds a bitmap from strictly ascending set positions.
    pub fn from_sorted_positions<I>(positions: I, bit_len: u64) -> Result<Self>
    where
        I: IntoIterator<Item = u64>,
    {
        let mut bm = EwahBitmap::new();
        let mut current_word = 0u64;
        let mut acc = 0u32;
        let mut prev: Option<u64> = None;
        for p in positions {
            if p >= bit_len || prev.is_some_and(|q| q >= p) {
                return Err(Error::InvalidArgument(format!(
                    "position {p} is out of order or beyond {bit_len} bits"
                )));
            }
            prev = Some(p);
            let w = p / WORD_BITS;
            if w != current_word {
                bm.push_word_unchecked(acc, WORD_BITS);
                bm.push_clean_bits(false, (w - current_word - 1) * WORD_BITS);
                current_word = w;
                acc = 0;
            }
            acc |= 1 << (p % WORD_BITS);
        }
        let total_words = words_for_bits(bit_len);
        if total_words > 0 {
            let last_bits = if current_word + 1 == total_words && !bit_len.is_multiple_of(WORD_BITS) {
                bit_len % WORD_BITS
            } else {
                WORD_BITS
            };
            bm.push_word_unchecked(acc, last_bits);
            if current_word + 1 < total_words {
                bm.push_clean_bits(false, bit_len - (current_word + 1) * WORD_BITS);
            }
        }
        Ok(bm)
    }

    /// Reconstructs a bitmap from its compressed word sequence, validating the
    /// marker structure against `bit_len`.
    pub fn from_compressed(words: Vec<u32>, bit_len: u64) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidEncoding("missing initial marker".into()));
        }
        let expected = words_for_bits(bit_len);
        let mut covered = 0u64;
        let mut set_bits = 0u64;
        let mut pos = 0usize;
        let mut last_marker = 0usize;
        let mut last_literal: Option<u32> = None;
        let mut last_run_bit = false;
        while pos < words.len() {
            let m = Marker::decode(words[pos]);
            last_marker = pos;
            pos += 1;
            let end = pos + m.dirty_count as usize;
            if end > words.len() {
                return Err(Error::InvalidEncoding(format!(
                    "marker at word {last_marker} announces {} literals past the end",
                    m.dirty_count
                )));
            }
            covered += m.run_len as u64 + m.dirty_count as u64;
            if m.clean_bit {
                set_bits += m.run_len as u64 * WORD_BITS;
            }
            for &lit in &words[pos..end] {
                if is_clean(lit) {
                    return Err(Error::InvalidEncoding(format!("clean literal {lit:#010x}")));
                }
                set_bits += lit.count_ones() as u64;
            }
            last_literal = if m.dirty_count > 0 { Some(words[end - 1]) } else { None };
            last_run_bit = m.clean_bit && m.run_len > 0;
            pos = end;
        }
        if covered != expected {
            return Err(Error::InvalidEncoding(format!(
                "words cover {covered} words but {bit_len} bits need {expected}"
            )));
        }
        let tail = bit_len % WORD_BITS;
        if tail != 0 {
            let padding = !((1u32 << tail) - 1);
            let padded_bits = match last_literal {
                Some(lit) => lit & padding,
                None if last_run_bit => padding,
                None => 0,
            };
            if padded_bits != 0 {
                return Err(Error::InvalidEncoding("padding bits are set".into()));
            }
        }
        Ok(EwahBitmap {
            words,
            bit_len,
            set_bits,
            last_marker,
        })
    }

    /// Logical number of bits (rows).
    #[inline]
    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    /// Number of set bits.
    #[inline]
    pub fn cardinality(&self) -> u64 {
        self.set_bits
    }

    /// The compressed word sequence.
    #[inline]
    pub fn words(&self) -> &[u32] {
        &self.words
    }

    #[inline]
    pub fn size_in_words(&self) -> usize {
        self.words.len()
    }

    #[inline]
    fn is_aligned(&self) -> bool {
        self.bit_len.is_multiple_of(WORD_BITS)
    }

    fn check_aligned(&self) -> Result<()> {
        if self.is_aligned() {
            Ok(())
        } else {
            Err(Error::UnalignedAppend { bit_len: self.bit_len })
        }
    }

    /// Appends `word_count` clean words of the given type in constant time.
    pub fn push_clean_run(&mut self, bit: bool, word_count: u64) -> Result<()> {
        self.check_aligned()?;
        self.push_clean_words(bit, word_count);
        self.bit_len += word_count * WORD_BITS;
        if bit {
            self.set_bits += word_count * WORD_BITS;
        }
        Ok(())
    }

    /// Appends one word; clean words are folded into the current run.
    pub fn push_word(&mut self, word: u32) -> Result<()> {
        self.check_aligned()?;
        self.push_word_unchecked(word, WORD_BITS);
        Ok(())
    }

    /// Appends the low `bits` bits of `word` (1 to 32). Fewer than 32 bits
    /// leave the bitmap unaligned, so this must be the final push.
    pub fn push_bits(&mut self, word: u32, bits: u32) -> Result<()> {
        self.check_aligned()?;
        if bits == 0 || bits > 32 || (bits < 32 && word >> bits != 0) {
            return Err(Error::InvalidArgument(format!(
                "word {word:#x} does not fit in {bits} bits"
            )));
        }
        self.push_word_unchecked(word, bits as u64);
        Ok(())
    }

    /// Appends `bits` zero or one bits.
    fn push_clean_bits(&mut self, bit: bool, bits: u64) {
        debug_assert!(self.is_aligned());
        let words = bits / WORD_BITS;
        self.push_clean_words(bit, words);
        self.bit_len += words * WORD_BITS;
        if bit {
            self.set_bits += words * WORD_BITS;
        }
        let rest = bits % WORD_BITS;
        if rest != 0 {
            let w = if bit { (1u32 << rest) - 1 } else { 0 };
            self.push_word_unchecked(w, rest);
        }
    }

    // Appends a word holding `bits` valid bits. A word with fewer than 32
    // valid bits must be the final one.
    fn push_word_unchecked(&mut self, word: u32, bits: u64) {
        debug_assert!(self.is_aligned());
        debug_assert!(bits == WORD_BITS || word >> bits == 0);
        self.push_raw(word);
        self.bit_len += bits;
        self.set_bits += word.count_ones() as u64;
    }

    // The raw pushers below extend the word sequence only; callers maintain
    // bit_len and set_bits.

    fn push_clean_words(&mut self, bit: bool, mut count: u64) {
        while count > 0 {
            let mut m = Marker::decode(self.words[self.last_marker]);
            if m.dirty_count == 0 && (m.run_len == 0 || m.clean_bit == bit) && m.run_len < MAX_CLEAN_RUN {
                let take = min(count, (MAX_CLEAN_RUN - m.run_len) as u64);
                m.clean_bit = bit;
                m.run_len += take as u32;
                self.words[self.last_marker] = m.encode();
                count -= take;
            } else {
                self.last_marker = self.words.len();
                self.words.push(Marker::EMPTY.encode());
            }
        }
    }

    fn push_raw(&mut self, word: u32) {
        if word == 0 {
            self.push_clean_words(false, 1);
        } else if word == ALL_ONES {
            self.push_clean_words(true, 1);
        } else {
            let mut m = Marker::decode(self.words[self.last_marker]);
            if m.dirty_count < MAX_DIRTY_COUNT {
                m.dirty_count += 1;
                self.words[self.last_marker] = m.encode();
            } else {
                self.last_marker = self.words.len();
                self.words.push(
                    Marker {
                        dirty_count: 1,
                        ..Marker::EMPTY
                    }
                    .encode(),
                );
            }
            self.words.push(word);
        }
    }

    /// Appends all bits of `other` after the bits of `self`.
    pub fn append(&mut self, other: &EwahBitmap) -> Result<()> {
        self.check_aligned()?;
        for run in other.runs() {
            self.push_clean_words(run.clean_bit, run.run_len as u64);
            for &lit in run.literals {
                self.push_raw(lit);
            }
        }
        self.bit_len += other.bit_len;
        self.set_bits += other.set_bits;
        Ok(())
    }

    /// Iterates over markers and their literal words.
    pub fn runs(&self) -> Runs<'_> {
        Runs {
            words: &self.words,
            pos: 0,
        }
    }

    /// Count of words that are not all zeros: one-runs plus literals.
    pub fn nonzero_words(&self) -> u64 {
        self.runs()
            .map(|r| if r.clean_bit { r.run_len as u64 } else { 0 } + r.literals.len() as u64)
            .sum()
    }

    pub fn marker_count(&self) -> u64 {
        self.runs().count() as u64
    }

    pub fn stats(&self) -> SizeStats {
        SizeStats {
            compressed_words: self.words.len() as u64,
            uncompressed_words: words_for_bits(self.bit_len),
            set_bits: self.set_bits,
            dirty_words: self.runs().map(|r| r.literals.len() as u64).sum(),
        }
    }

    /// Decompresses into a word array of `ceil(bit_len / 32)` words.
    pub fn to_words(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(words_for_bits(self.bit_len) as usize);
        for run in self.runs() {
            let fill = if run.clean_bit { ALL_ONES } else { 0 };
            out.extend(std::iter::repeat_n(fill, run.run_len as usize));
            out.extend_from_slice(run.literals);
        }
        out
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let words = self.to_words();
        (0..self.bit_len)
            .map(|i| words[(i / WORD_BITS) as usize] >> (i % WORD_BITS) & 1 == 1)
            .collect()
    }

    /// Ascending positions of set bits.
    pub fn iter_ones(&self) -> SetBits<'_> {
        SetBits {
            runs: self.runs(),
            word_index: 0,
            fill_left: 0,
            fill_pos: 0,
            literals: &[],
            current: 0,
            current_base: 0,
        }
    }

    pub fn and(&self, other: &EwahBitmap) -> Result<EwahBitmap> {
        self.logical(LogicalOp::And, other)
    }

    pub fn or(&self, other: &EwahBitmap) -> Result<EwahBitmap> {
        self.logical(LogicalOp::Or, other)
    }

    pub fn xor(&self, other: &EwahBitmap) -> Result<EwahBitmap> {
        self.logical(LogicalOp::Xor, other)
    }

    pub fn and_not(&self, other: &EwahBitmap) -> Result<EwahBitmap> {
        self.logical(LogicalOp::AndNot, other)
    }

    pub fn logical(&self, op: LogicalOp, other: &EwahBitmap) -> Result<EwahBitmap> {
        self.logical_counted(op, other).map(|(bm, _)| bm)
    }

    /// Like [`logical`](Self::logical), also returning the number of input
    /// words (markers and literals) the merge had to read.
    pub fn logical_counted(&self, op: LogicalOp, other: &EwahBitmap) -> Result<(EwahBitmap, u64)> {
        if self.bit_len != other.bit_len {
            return Err(Error::LengthMismatch {
                left: self.bit_len,
                right: other.bit_len,
            });
        }
        let mut out = EwahBitmap::new();
        let mut a = Cursor::new(&self.words);
        let mut b = Cursor::new(&other.words);
        let mut set_bits = 0u64;
        loop {
            if !a.ensure() || !b.ensure() {
                break;
            }
            match (a.run_left > 0, b.run_left > 0) {
                (true, true) => {
                    let n = min(a.run_left, b.run_left);
                    let w = op.apply(fill(a.run_bit), fill(b.run_bit));
                    out.push_clean_words(w == ALL_ONES, n);
                    if w == ALL_ONES {
                        set_bits += n * WORD_BITS;
                    }
                    a.run_left -= n;
                    b.run_left -= n;
                }
                (true, false) => {
                    let n = min(a.run_left, b.lit_left as u64) as usize;
                    let lits = b.take_literals(n);
                    let f = fill(a.run_bit);
                    set_bits += fill_against_literals(&mut out, |l| op.apply(f, l), lits, &mut b.visits);
                    a.run_left -= n as u64;
                }
                (false, true) => {
                    let n = min(b.run_left, a.lit_left as u64) as usize;
                    let lits = a.take_literals(n);
                    let f = fill(b.run_bit);
                    set_bits += fill_against_literals(&mut out, |l| op.apply(l, f), lits, &mut a.visits);
                    b.run_left -= n as u64;
                }
                (false, false) => {
                    let n = min(a.lit_left, b.lit_left);
                    let la = a.take_literals(n);
                    let lb = b.take_literals(n);
                    a.visits += n as u64;
                    b.visits += n as u64;
                    for (&x, &y) in la.iter().zip(lb) {
                        let w = op.apply(x, y);
                        set_bits += w.count_ones() as u64;
                        out.push_raw(w);
                    }
                }
            }
        }
        debug_assert!(a.ensure() == b.ensure());
        out.set_bits = set_bits;
        out.bit_len = self.bit_len;
        Ok((out, a.visits + b.visits))
    }
}

#[inline]
fn fill(bit: bool) -> u32 {
    if bit {
        ALL_ONES
    } else {
        0
    }
}

// A clean run on one side meets literals on the other. When the operation's
// result does not depend on the literal, emit a run without reading them.
// Returns the number of set bits emitted.
fn fill_against_literals(out: &mut EwahBitmap, f: impl Fn(u32) -> u32, lits: &[u32], visits: &mut u64) -> u64 {
    let lo = f(0);
    let n = lits.len() as u64;
    if lo == f(ALL_ONES) {
        out.push_clean_words(lo == ALL_ONES, n);
        if lo == ALL_ONES {
            n * WORD_BITS
        } else {
            0
        }
    } else {
        *visits += n;
        let mut ones = 0;
        for &l in lits {
            let w = f(l);
            ones += w.count_ones() as u64;
            out.push_raw(w);
        }
        ones
    }
}

struct Cursor<'a> {
    words: &'a [u32],
    next: usize,
    run_bit: bool,
    run_left: u64,
    lit_start: usize,
    lit_left: usize,
    visits: u64,
}

impl<'a> Cursor<'a> {
    fn new(words: &'a [u32]) -> Self {
        Cursor {
            words,
            next: 0,
            run_bit: false,
            run_left: 0,
            lit_start: 0,
            lit_left: 0,
            visits: 0,
        }
    }

    // Loads markers until there is something to consume; false at the end.
    fn ensure(&mut self) -> bool {
        while self.run_left == 0 && self.lit_left == 0 {
            if self.next >= self.words.len() {
                return false;
            }
            let m = Marker::decode(self.words[self.next]);
            self.visits += 1;
            self.run_bit = m.clean_bit;
            self.run_left = m.run_len as u64;
            self.lit_start = self.next + 1;
            self.lit_left = m.dirty_count as usize;
            self.next = self.lit_start + self.lit_left;
        }
        true
    }

    fn take_literals(&mut self, n: usize) -> &'a [u32] {
        debug_assert!(self.run_left == 0 && n <= self.lit_left);
        let s = &self.words[self.lit_start..self.lit_start + n];
        self.lit_start += n;
        self.lit_left -= n;
        s
    }
}

/// Iterator over [`Run`]s.
#[derive(Clone)]
pub struct Runs<'a> {
    words: &'a [u32],
    pos: usize,
}

impl<'a> Iterator for Runs<'a> {
    type Item = Run<'a>;

    fn next(&mut self) -> Option<Run<'a>> {
        if self.pos >= self.words.len() {
            return None;
        }
        let m = Marker::decode(self.words[self.pos]);
        let start = self.pos + 1;
        let end = start + m.dirty_count as usize;
        self.pos = end;
        Some(Run {
            clean_bit: m.clean_bit,
            run_len: m.run_len,
            literals: &self.words[start..end],
        })
    }
}

/// Iterator over set positions, see [`EwahBitmap::iter_ones`].
pub struct SetBits<'a> {
    runs: Runs<'a>,
    word_index: u64,
    fill_left: u64,
    fill_pos: u64,
    literals: &'a [u32],
    current: u32,
    current_base: u64,
}

impl Iterator for SetBits<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.current != 0 {
                let tz = self.current.trailing_zeros() as u64;
                self.current &= self.current - 1;
                return Some(self.current_base + tz);
            }
            if self.fill_left > 0 {
                self.fill_left -= 1;
                let p = self.fill_pos;
                self.fill_pos += 1;
                return Some(p);
            }
            if let Some((&first, rest)) = self.literals.split_first() {
                self.current = first;
                self.current_base = self.word_index * WORD_BITS;
                self.word_index += 1;
                self.literals = rest;
                continue;
            }
            let run = self.runs.next()?;
            if run.clean_bit {
                self.fill_pos = self.word_index * WORD_BITS;
                self.fill_left = run.run_len as u64 * WORD_BITS;
            }
            self.word_index += run.run_len as u64;
            self.literals = run.literals;
        }
    }
}
