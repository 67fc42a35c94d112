//! On-disk bitmap index: construction, file format and bitmap retrieval.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! "BKLN"               magic, 4 bytes
//! version              u8, currently 1
//! header length        u32
//! header               UTF-8 JSON (`IndexHeader`)
//! partition 0, 1, ...  back to back
//! ```
//!
//! Bitmaps are numbered across all indexed columns: column `c` owns ids
//! `first_bitmap .. first_bitmap + N_c`. A partition covers a contiguous row
//! range and holds one segment of every bitmap:
//!
//! ```text
//! offset table         L x u32, byte offset of each segment from the
//!                      partition start
//! segment 0 .. L-1     u32 word count, then the EWAH words
//! ```
//!
//! The header's partition directory gives each partition's byte offset from
//! the end of the header, its length and its row range. A partition is closed
//! at the first 32-row boundary where its estimated serialized size reaches
//! the partition budget, so every partition but the last covers a multiple of
//! 32 rows and segments concatenate word-aligned.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read, Seek, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ewah::{compression_factor, words_for_bits, EwahBitmap, WORD_BITS};
use crate::histogram::Histogram;
use crate::kofn::{Allocation, ColumnDictionary, EncodingChoice};
use crate::table::Row;

pub const MAGIC: &[u8; 4] = b"BKLN";
pub const FORMAT_VERSION: u8 = 1;
pub const DEFAULT_PARTITION_BYTES: u64 = 256 << 20;
/// Magic, version byte and header length.
const PREAMBLE_BYTES: u64 = 9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexConfig {
    /// Requested code weight; small columns are capped lower.
    pub k: u32,
    pub allocation: Allocation,
    /// Target serialized size of one partition.
    pub partition_bytes: u64,
    /// Table columns to index, in index order. Empty means all columns.
    pub columns: Vec<usize>,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            k: 1,
            allocation: Allocation::Alphabetic,
            partition_bytes: DEFAULT_PARTITION_BYTES,
            columns: Vec::new(),
        }
    }
}

impl IndexConfig {
    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn with_allocation(mut self, allocation: Allocation) -> Self {
        self.allocation = allocation;
        self
    }

    pub fn with_partition_bytes(mut self, bytes: u64) -> Self {
        self.partition_bytes = bytes;
        self
    }

    pub fn with_columns(mut self, columns: Vec<usize>) -> Self {
        self.columns = columns;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    /// Position of the column in the source table.
    pub source: usize,
    pub cardinality: usize,
    pub first_bitmap: u32,
    pub dictionary: ColumnDictionary,
}

impl ColumnSpec {
    pub fn encoding(&self) -> EncodingChoice {
        self.dictionary.choice()
    }

    pub fn bitmap_count(&self) -> u32 {
        self.dictionary.choice().n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionEntry {
    /// From the start of the partition section.
    pub offset: u64,
    pub bytes: u64,
    pub first_row: u64,
    pub rows: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexHeader {
    pub rows: u64,
    pub word_bits: u32,
    pub bitmap_count: u32,
    pub columns: Vec<ColumnSpec>,
    pub partitions: Vec<PartitionEntry>,
}

/// Counters gathered while building an index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub rows: u64,
    pub bitmaps: u32,
    pub partitions: usize,
    /// Bitmap updates made while scanning rows: one per code position per row.
    pub bitmap_touches: u64,
    /// Per-bitmap steps spent closing partitions.
    pub finalize_steps: u64,
    /// Every write landed at the then-current end of output.
    pub sequential_writes: bool,
    pub header_bytes: u64,
    pub file_bytes: u64,
}

// Buffered byte sink that checks, before each flush, that the underlying
// stream sits exactly where the previous flush ended.
struct Appender<W> {
    inner: W,
    buf: Vec<u8>,
    flushed: u64,
    pos: u64,
    sequential: bool,
}

const APPEND_BUFFER: usize = 1 << 16;

impl<W: Write + Seek> Appender<W> {
    fn new(mut inner: W) -> io::Result<Self> {
        let pos = inner.stream_position()?;
        Ok(Appender {
            inner,
            buf: Vec::with_capacity(APPEND_BUFFER),
            flushed: pos,
            pos,
            sequential: true,
        })
    }

    fn put(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.buf.extend_from_slice(bytes);
        self.pos += bytes.len() as u64;
        if self.buf.len() >= APPEND_BUFFER {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.sequential &= self.inner.stream_position()? == self.flushed;
        self.inner.write_all(&self.buf)?;
        self.flushed += self.buf.len() as u64;
        self.buf.clear();
        self.inner.flush()
    }

    fn finish(mut self) -> io::Result<(W, bool)> {
        self.flush()?;
        Ok((self.inner, self.sequential))
    }
}

/// One partition under construction.
struct PartitionBuilder {
    segments: Vec<EwahBitmap>,
    // Bits of the current 32-row word, per bitmap.
    pending: Vec<u32>,
    touched: Vec<u32>,
    rows: u64,
    stored_words: u64,
}

impl PartitionBuilder {
    fn new(bitmaps: usize) -> Self {
        PartitionBuilder {
            segments: vec![EwahBitmap::new(); bitmaps],
            pending: vec![0; bitmaps],
            touched: Vec::new(),
            rows: 0,
            stored_words: bitmaps as u64,
        }
    }

    fn set(&mut self, bitmap: u32) {
        let b = bitmap as usize;
        if self.pending[b] == 0 {
            self.touched.push(bitmap);
        }
        self.pending[b] |= 1 << (self.rows % WORD_BITS);
    }

    // Writes the pending words of the word that just filled up.
    fn flush_word(&mut self) -> Result<()> {
        let word = self.rows / WORD_BITS - 1;
        for &b in &self.touched {
            let seg = &mut self.segments[b as usize];
            let before = seg.size_in_words() as u64;
            seg.push_clean_run(false, word - seg.bit_len() / WORD_BITS)?;
            seg.push_word(std::mem::take(&mut self.pending[b as usize]))?;
            self.stored_words += seg.size_in_words() as u64 - before;
        }
        self.touched.clear();
        Ok(())
    }

    fn end_row(&mut self) -> Result<()> {
        self.rows += 1;
        if self.rows.is_multiple_of(WORD_BITS) {
            self.flush_word()?;
        }
        Ok(())
    }

    fn estimated_bytes(&self) -> u64 {
        8 * self.segments.len() as u64 + 4 * (self.stored_words + self.touched.len() as u64)
    }

    // Pads every segment to the partition's row count; returns the steps.
    fn finish(&mut self) -> Result<u64> {
        let full = self.rows / WORD_BITS;
        let rest = (self.rows % WORD_BITS) as u32;
        for (seg, pending) in self.segments.iter_mut().zip(&mut self.pending) {
            seg.push_clean_run(false, full - seg.bit_len() / WORD_BITS)?;
            if rest > 0 {
                seg.push_bits(std::mem::take(pending), rest)?;
            }
        }
        self.touched.clear();
        Ok(self.segments.len() as u64)
    }

    fn serialize<W: Write + Seek>(&self, out: &mut Appender<W>) -> Result<u64> {
        let l = self.segments.len() as u64;
        let mut offset = 4 * l;
        let mut table = Vec::with_capacity(4 * l as usize);
        for seg in &self.segments {
            let o = u32::try_from(offset)
                .map_err(|_| Error::InvalidArgument("partition exceeds 4 GiB; lower the partition budget".into()))?;
            table.extend_from_slice(&o.to_le_bytes());
            offset += 4 + 4 * seg.size_in_words() as u64;
        }
        out.put(&table)?;
        let mut buf = Vec::new();
        for seg in &self.segments {
            buf.clear();
            buf.extend_from_slice(&(seg.size_in_words() as u32).to_le_bytes());
            for w in seg.words() {
                buf.extend_from_slice(&w.to_le_bytes());
            }
            out.put(&buf)?;
        }
        Ok(offset)
    }
}

/// Dictionaries and bitmap numbering for the indexed columns.
pub fn plan_columns(hist: &Histogram, config: &IndexConfig) -> Result<Vec<ColumnSpec>> {
    let sources: Vec<usize> = if config.columns.is_empty() {
        (0..hist.arity()).collect()
    } else {
        config.columns.clone()
    };
    let mut seen = vec![false; hist.arity()];
    let mut first_bitmap = 0u32;
    let mut specs = Vec::with_capacity(sources.len());
    for source in sources {
        if source >= hist.arity() || std::mem::replace(&mut seen[source], true) {
            return Err(Error::InvalidArgument(format!(
                "cannot index column {source} of {}",
                hist.arity()
            )));
        }
        let dictionary = ColumnDictionary::build(hist.values(source), config.k, config.allocation)?;
        let n = dictionary.choice().n;
        specs.push(ColumnSpec {
            name: hist.column_names()[source].clone(),
            source,
            cardinality: dictionary.len(),
            first_bitmap,
            dictionary,
        });
        first_bitmap = first_bitmap
            .checked_add(n)
            .ok_or_else(|| Error::InvalidArgument("too many bitmaps".into()))?;
    }
    if specs.is_empty() {
        return Err(Error::InvalidArgument("no columns to index".into()));
    }
    Ok(specs)
}

/// Builds the index for `rows` (already in their final order) into `path`.
/// The file appears only once complete.
pub fn build_index<I>(rows: I, hist: &Histogram, config: &IndexConfig, path: &Path) -> Result<BuildReport>
where
    I: IntoIterator<Item = Result<Row>>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    let report = write_index(rows, hist, config, tmp.as_file_mut(), Some(dir))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(report)
}

/// Writes a complete index to `out`. Partitions are staged in a temporary
/// file in `tmp_dir` until the header is known.
pub fn write_index<I, W>(
    rows: I,
    hist: &Histogram,
    config: &IndexConfig,
    out: W,
    tmp_dir: Option<&Path>,
) -> Result<BuildReport>
where
    I: IntoIterator<Item = Result<Row>>,
    W: Write + Seek,
{
    let columns = plan_columns(hist, config)?;
    let bitmaps = columns.last().map_or(0, |c| c.first_bitmap + c.bitmap_count());
    let spill = match tmp_dir {
        Some(d) => tempfile::tempfile_in(d)?,
        None => tempfile::tempfile()?,
    };
    let mut staged = Appender::new(spill)?;
    let mut report = BuildReport {
        bitmaps,
        ..Default::default()
    };
    let mut partitions: Vec<PartitionEntry> = Vec::new();
    let mut part = PartitionBuilder::new(bitmaps as usize);
    let mut close =
        |part: &mut PartitionBuilder, report: &mut BuildReport, staged: &mut Appender<File>| -> Result<()> {
            report.finalize_steps += part.finish()?;
            let offset = staged.pos;
            let bytes = part.serialize(staged)?;
            partitions.push(PartitionEntry {
                offset,
                bytes,
                first_row: report.rows - part.rows,
                rows: part.rows,
            });
            *part = PartitionBuilder::new(bitmaps as usize);
            Ok(())
        };

    for row in rows {
        let row = row?;
        if row.len() != hist.arity() {
            return Err(Error::RaggedRow {
                line: report.rows + 1,
                expected: hist.arity(),
                found: row.len(),
            });
        }
        if part.rows > 0 && part.rows.is_multiple_of(WORD_BITS) && part.estimated_bytes() >= config.partition_bytes {
            close(&mut part, &mut report, &mut staged)?;
        }
        for col in &columns {
            let value = &row[col.source];
            let code = col.dictionary.code_of(value).ok_or_else(|| Error::NotInHistogram {
                column: col.source,
                value: value.clone(),
            })?;
            for &p in code.positions() {
                part.set(col.first_bitmap + p);
                report.bitmap_touches += 1;
            }
        }
        part.end_row()?;
        report.rows += 1;
    }
    if part.rows > 0 {
        close(&mut part, &mut report, &mut staged)?;
    }
    if report.rows != hist.rows() {
        return Err(Error::InvalidArgument(format!(
            "histogram counts {} rows but the table has {}",
            hist.rows(),
            report.rows
        )));
    }
    report.partitions = partitions.len();
    let (mut spill, sequential) = staged.finish()?;
    report.sequential_writes = sequential;

    let header = IndexHeader {
        rows: report.rows,
        word_bits: WORD_BITS as u32,
        bitmap_count: bitmaps,
        columns,
        partitions,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::InvalidArgument(format!("header: {e}")))?;
    let header_len = u32::try_from(json.len()).map_err(|_| Error::InvalidArgument("header exceeds 4 GiB".into()))?;
    let mut out = Appender::new(out)?;
    out.put(MAGIC)?;
    out.put(&[FORMAT_VERSION])?;
    out.put(&header_len.to_le_bytes())?;
    out.put(&json)?;
    spill.rewind()?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = spill.read(&mut buf)?;
        if n == 0 {
            break;
        }
        out.put(&buf[..n])?;
    }
    let file_bytes = out.pos;
    let (_, sequential) = out.finish()?;
    report.sequential_writes &= sequential;
    report.header_bytes = PREAMBLE_BYTES + json.len() as u64;
    report.file_bytes = file_bytes;
    Ok(report)
}

fn read_at(file: &File, buf: &mut [u8], offset: u64) -> io::Result<()> {
    #[cfg(unix)]
    {
        use std::os::unix::fs::FileExt;
        file.read_exact_at(buf, offset)
    }
    #[cfg(windows)]
    {
        use std::os::windows::fs::FileExt;
        let mut done = 0;
        while done < buf.len() {
            match file.seek_read(&mut buf[done..], offset + done as u64)? {
                0 => return Err(io::ErrorKind::UnexpectedEof.into()),
                n => done += n,
            }
        }
        Ok(())
    }
}

/// I/O performed through a reader.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoCounters {
    pub bytes_read: u64,
    pub bitmaps_loaded: u64,
}

/// Open index. Loads are positioned reads, so one reader serves any number
/// of threads.
#[derive(Debug)]
pub struct IndexReader {
    file: File,
    header: IndexHeader,
    header_bytes: u64,
    file_bytes: u64,
    by_name: HashMap<String, usize>,
    bytes_read: AtomicU64,
    bitmaps_loaded: AtomicU64,
}

impl IndexReader {
    /// Reads and checks the header. No partition data is read.
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let file_bytes = file.metadata()?.len();
        let need = |needed: u64| {
            if file_bytes < needed {
                Err(Error::Truncated {
                    needed,
                    actual: file_bytes,
                })
            } else {
                Ok(())
            }
        };
        need(MAGIC.len() as u64)?;
        let mut pre = [0u8; PREAMBLE_BYTES as usize];
        read_at(&file, &mut pre[..4], 0)?;
        if &pre[..4] != MAGIC {
            return Err(Error::CorruptHeader("not an index file".into()));
        }
        need(5)?;
        read_at(&file, &mut pre[4..5], 4)?;
        if pre[4] != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(pre[4]));
        }
        need(PREAMBLE_BYTES)?;
        read_at(&file, &mut pre[5..], 5)?;
        let len = u32::from_le_bytes(pre[5..9].try_into().unwrap()) as u64;
        let header_bytes = PREAMBLE_BYTES + len;
        need(header_bytes)?;
        let mut json = vec![0u8; len as usize];
        read_at(&file, &mut json, PREAMBLE_BYTES)?;
        let mut header: IndexHeader = serde_json::from_slice(&json).map_err(|e| Error::CorruptHeader(e.to_string()))?;
        validate(&mut header)?;
        let data_bytes = header.partitions.last().map_or(0, |p| p.offset + p.bytes);
        need(header_bytes + data_bytes)?;
        let by_name = header
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), i))
            .collect();
        Ok(IndexReader {
            file,
            header,
            header_bytes,
            file_bytes,
            by_name,
            bytes_read: AtomicU64::new(0),
            bitmaps_loaded: AtomicU64::new(0),
        })
    }

    pub fn header(&self) -> &IndexHeader {
        &self.header
    }

    pub fn rows(&self) -> u64 {
        self.header.rows
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.header.columns
    }

    /// Size of magic, version and metadata block.
    pub fn header_bytes(&self) -> u64 {
        self.header_bytes
    }

    pub fn file_bytes(&self) -> u64 {
        self.file_bytes
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&ColumnSpec> {
        Ok(&self.header.columns[self.column_index(name)?])
    }

    pub fn counters(&self) -> IoCounters {
        IoCounters {
            bytes_read: self.bytes_read.load(Ordering::Relaxed),
            bitmaps_loaded: self.bitmaps_loaded.load(Ordering::Relaxed),
        }
    }

    pub fn reset_counters(&self) {
        self.bytes_read.store(0, Ordering::Relaxed);
        self.bitmaps_loaded.store(0, Ordering::Relaxed);
    }

    /// Bitmap `id` (0-based within the column) over all rows.
    pub fn load_bitmap(&self, column: usize, id: u32) -> Result<EwahBitmap> {
        self.load_bitmap_counted(column, id).map(|(bm, _)| bm)
    }

    /// Like `load_bitmap`, also returning the bytes read.
    pub fn load_bitmap_counted(&self, column: usize, id: u32) -> Result<(EwahBitmap, u64)> {
        let global = self.global_id(column, id)?;
        let mut bm = EwahBitmap::new();
        let mut bytes = 0;
        for p in &self.header.partitions {
            let (seg, n) = self.read_segment(p, global)?;
            bm.append(&seg)?;
            bytes += n;
        }
        self.bytes_read.fetch_add(bytes, Ordering::Relaxed);
        self.bitmaps_loaded.fetch_add(1, Ordering::Relaxed);
        Ok((bm, bytes))
    }

    pub fn load_bitmap_by_name(&self, column: &str, id: u32) -> Result<EwahBitmap> {
        self.load_bitmap(self.column_index(column)?, id)
    }

    fn global_id(&self, column: usize, id: u32) -> Result<u32> {
        let spec = self
            .header
            .columns
            .get(column)
            .ok_or_else(|| Error::UnknownColumn(format!("#{column}")))?;
        if id >= spec.bitmap_count() {
            return Err(Error::BitmapOutOfRange {
                column: spec.name.clone(),
                id,
                count: spec.bitmap_count(),
            });
        }
        Ok(spec.first_bitmap + id)
    }

    // Reads one offset entry and the segment it points to.
    fn read_segment(&self, p: &PartitionEntry, global: u32) -> Result<(EwahBitmap, u64)> {
        let base = self.header_bytes + p.offset;
        let mut b4 = [0u8; 4];
        read_at(&self.file, &mut b4, base + 4 * global as u64)?;
        let off = u32::from_le_bytes(b4) as u64;
        let table = 4 * self.header.bitmap_count as u64;
        if off < table || off + 4 > p.bytes {
            return Err(Error::InvalidEncoding(format!(
                "segment offset {off} outside partition"
            )));
        }
        read_at(&self.file, &mut b4, base + off)?;
        let words = u32::from_le_bytes(b4) as u64;
        if off + 4 + 4 * words > p.bytes {
            return Err(Error::InvalidEncoding(format!(
                "segment of {words} words overruns partition"
            )));
        }
        let mut raw = vec![0u8; 4 * words as usize];
        read_at(&self.file, &mut raw, base + off + 4)?;
        let words = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let seg = EwahBitmap::from_compressed(words, p.rows)?;
        Ok((seg, 8 + raw.len() as u64))
    }

    /// Per-bitmap and per-column sizes. `C` counts stored words summed over
    /// partitions; `N` is one word per 32 rows.
    pub fn stats(&self) -> Result<IndexStats> {
        let n = words_for_bits(self.header.rows);
        let mut bitmaps = Vec::with_capacity(self.header.bitmap_count as usize);
        let mut columns = Vec::with_capacity(self.header.columns.len());
        for (c, spec) in self.header.columns.iter().enumerate() {
            let mut col_words = 0;
            for id in 0..spec.bitmap_count() {
                let global = self.global_id(c, id)?;
                let mut words = 0;
                let mut set_bits = 0;
                for p in &self.header.partitions {
                    let (seg, _) = self.read_segment(p, global)?;
                    words += seg.size_in_words() as u64;
                    set_bits += seg.cardinality();
                }
                if self.header.partitions.is_empty() {
                    words = EwahBitmap::new().size_in_words() as u64;
                }
                col_words += words;
                bitmaps.push(BitmapStats {
                    column: spec.name.clone(),
                    bitmap: id,
                    compressed_words: words,
                    uncompressed_words: n,
                    set_bits,
                });
            }
            columns.push(ColumnStats {
                name: spec.name.clone(),
                cardinality: spec.cardinality,
                k: spec.encoding().k,
                bitmaps: spec.bitmap_count(),
                compressed_words: col_words,
                uncompressed_words: n * spec.bitmap_count() as u64,
            });
        }
        Ok(IndexStats {
            rows: self.header.rows,
            partitions: self.header.partitions.len(),
            header_bytes: self.header_bytes,
            file_bytes: self.file_bytes,
            bitmaps,
            columns,
        })
    }
}

fn validate(h: &mut IndexHeader) -> Result<()> {
    let bad = |m: String| Err(Error::CorruptHeader(m));
    if h.word_bits != WORD_BITS as u32 {
        return bad(format!("word size {} unsupported", h.word_bits));
    }
    let mut next_bitmap = 0u32;
    for c in &mut h.columns {
        c.dictionary.restore()?;
        if c.first_bitmap != next_bitmap || c.cardinality != c.dictionary.len() {
            return bad(format!("column {} layout inconsistent", c.name));
        }
        next_bitmap = match next_bitmap.checked_add(c.bitmap_count()) {
            Some(v) => v,
            None => return bad("bitmap count overflows".into()),
        };
    }
    if next_bitmap != h.bitmap_count {
        return bad(format!(
            "columns use {next_bitmap} bitmaps, header says {}",
            h.bitmap_count
        ));
    }
    let (mut row, mut offset) = (0u64, 0u64);
    for (i, p) in h.partitions.iter().enumerate() {
        let last = i + 1 == h.partitions.len();
        if p.first_row != row || p.offset != offset || p.rows == 0 || (!last && p.rows % WORD_BITS != 0) {
            return bad(format!("partition {i} out of sequence"));
        }
        if p.bytes < 4 * h.bitmap_count as u64 {
            return bad(format!("partition {i} smaller than its offset table"));
        }
        row += p.rows;
        offset += p.bytes;
    }
    if row != h.rows {
        return bad(format!("partitions cover {row} rows, header says {}", h.rows));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BitmapStats {
    pub column: String,
    pub bitmap: u32,
    pub compressed_words: u64,
    pub uncompressed_words: u64,
    pub set_bits: u64,
}

impl BitmapStats {
    /// 1 - C/N, or 0 for an empty bitmap.
    pub fn factor(&self) -> f64 {
        compression_factor(self.compressed_words, self.uncompressed_words)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnStats {
    pub name: String,
    pub cardinality: usize,
    pub k: u32,
    pub bitmaps: u32,
    pub compressed_words: u64,
    pub uncompressed_words: u64,
}

impl ColumnStats {
    pub fn factor(&self) -> f64 {
        compression_factor(self.compressed_words, self.uncompressed_words)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexStats {
    pub rows: u64,
    pub partitions: usize,
    pub header_bytes: u64,
    pub file_bytes: u64,
    pub bitmaps: Vec<BitmapStats>,
    pub columns: Vec<ColumnStats>,
}

impl IndexStats {
    /// Stored bitmap words over all columns; headers and offset tables
    /// excluded.
    pub fn total_words(&self) -> u64 {
        self.columns.iter().map(|c| c.compressed_words).sum()
    }
}
