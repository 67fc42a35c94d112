use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use bitkiln::gen::{gen_uniform, gen_zipf, UniformSpec, ZipfSpec, DEFAULT_ZIPF_RANGE};
use bitkiln::histogram::sidecar_path;
use bitkiln::index::{build_index, plan_columns, IndexReader, DEFAULT_PARTITION_BYTES};
use bitkiln::kofn::ColumnDictionary;
use bitkiln::query::{evaluate_batch, parse};
use bitkiln::sort::{block_sort_with, order_columns_by_cardinality, Direction, DEFAULT_MEMORY_BUDGET};
use bitkiln::{Allocation, Execution, FactTable, Histogram, IndexConfig, SortPlan, SortStrategy};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "bitkiln",
    version,
    about = "Sorted, compressed bitmap indexes for delimited fact tables"
)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

/// Shared settings. Each one can also come from a `BITKILN_*` variable.
#[derive(Args, Debug)]
struct Options {
    /// Code weight: each value sets k of its column's bitmaps.
    #[arg(long, global = true, env = "BITKILN_K", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,

    #[arg(long, global = true, env = "BITKILN_ALLOCATION", value_enum, default_value_t = AllocationArg::Alpha)]
    allocation: AllocationArg,

    /// Row order [default: lex for `sort`, none for `index`].
    #[arg(long, global = true, env = "BITKILN_SORT", value_enum)]
    sort: Option<SortArg>,

    /// Sort this many contiguous blocks independently.
    #[arg(long, global = true, env = "BITKILN_BLOCKS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    blocks: u64,

    /// Sort key: asc or desc by distinct-value count, or given:<perm> such
    /// as given:2,0,1. Defaults to table order.
    #[arg(long, global = true, env = "BITKILN_COLUMN_ORDER")]
    column_order: Option<ColumnOrder>,

    /// Target size of one index partition.
    #[arg(long, global = true, env = "BITKILN_PARTITION_BYTES", default_value_t = DEFAULT_PARTITION_BYTES,
          value_parser = clap::value_parser!(u64).range(1..))]
    partition_bytes: u64,

    /// Field separator: one character, or `tab`.
    #[arg(long, global = true, env = "BITKILN_DELIMITER", default_value = ",", value_parser = parse_delimiter)]
    delimiter: char,

    #[arg(long, global = true, env = "BITKILN_SEED", default_value_t = 0)]
    seed: u64,

    /// Tables carry a header line with column names (otherwise d0, d1, ...).
    #[arg(long, global = true, env = "BITKILN_HEADER")]
    header: bool,

    /// Bytes of rows sorted in memory before spilling runs to disk.
    #[arg(long, global = true, env = "BITKILN_MEMORY_BUDGET", default_value_t = DEFAULT_MEMORY_BUDGET,
          value_parser = parse_budget)]
    memory_budget: usize,

    /// Columns to index, by name or position (comma separated). Defaults to
    /// all columns.
    #[arg(long, global = true, env = "BITKILN_COLUMNS", value_delimiter = ',')]
    columns: Vec<String>,

    /// Run everything on the calling thread.
    #[arg(long, global = true, env = "BITKILN_SEQUENTIAL")]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reorder the rows of a table.
    Sort { input: PathBuf, output: PathBuf },
    /// Build a bitmap index; the value histogram goes to `<input>.hist`.
    Index { input: PathBuf, output: PathBuf },
    /// Count the rows matching each expression, e.g. "d0=3 & (d1=a | d1=b)".
    Query {
        index: PathBuf,
        #[arg(required = true)]
        exprs: Vec<String>,
        /// Also print the matching row ids.
        #[arg(long)]
        rows: bool,
        /// Report bitmap loads and bytes read on standard error.
        #[arg(long)]
        counters: bool,
    },
    /// Per-bitmap compression as CSV.
    Stats {
        index: PathBuf,
        /// One row per column instead of per bitmap.
        #[arg(long)]
        totals: bool,
    },
    /// Uniform table with optional dependent columns.
    GenUniform {
        output: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        independent: usize,
        /// Value range growth between independent columns.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=2))]
        ratio: u64,
        #[arg(long, default_value_t = 0)]
        dependent: usize,
    },
    /// Table of independent Zipf-distributed columns.
    GenZipf {
        output: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        dims: usize,
        /// Zipf exponent.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Values are drawn from 1..=range.
        #[arg(long, default_value_t = DEFAULT_ZIPF_RANGE)]
        range: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AllocationArg {
    Alpha,
    Gray,
}

impl From<AllocationArg> for Allocation {
    fn from(a: AllocationArg) -> Self {
        match a {
            AllocationArg::Alpha => Allocation::Alphabetic,
            AllocationArg::Gray => Allocation::Gray,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SortArg {
    Lex,
    Gray,
    Group,
    Shuffle,
    None,
}

impl From<SortArg> for SortStrategy {
    fn from(s: SortArg) -> Self {
        match s {
            SortArg::Lex => SortStrategy::Lexicographic,
            SortArg::Gray => SortStrategy::Gray,
            SortArg::Group => SortStrategy::Grouping,
            SortArg::Shuffle => SortStrategy::Shuffle,
            SortArg::None => SortStrategy::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum ColumnOrder {
    Ascending,
    Descending,
    Given(Vec<usize>),
}

impl FromStr for ColumnOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "asc" => Ok(ColumnOrder::Ascending),
            "desc" => Ok(ColumnOrder::Descending),
            _ => {
                let perm = s
                    .strip_prefix("given:")
                    .ok_or_else(|| format!("expected asc, desc or given:<perm>, found {s:?}"))?;
                perm.split(',')
                    .map(|c| c.trim().parse::<usize>().map_err(|e| format!("bad column {c:?}: {e}")))
                    .collect::<Result<_, _>>()
                    .map(ColumnOrder::Given)
            }
        }
    }
}

fn parse_delimiter(s: &str) -> Result<char, String> {
    match s {
        "tab" | "\\t" => return Ok('\t'),
        _ => {}
    }
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c != '\n' && c != '\r' => Ok(c),
        _ => Err(format!("delimiter must be a single character, found {s:?}")),
    }
}

fn parse_budget(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("memory budget must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

impl Options {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn index_config(&self) -> IndexConfig {
        IndexConfig::default()
            .with_k(self.k)
            .with_allocation(self.allocation.into())
            .with_partition_bytes(self.partition_bytes)
    }

    fn indexed_columns(&self, names: &[String]) -> Result<Vec<usize>> {
        self.columns
            .iter()
            .map(|c| {
                let c = c.trim();
                names
                    .iter()
                    .position(|n| n == c)
                    .or_else(|| c.parse().ok().filter(|&i| i < names.len()))
                    .with_context(|| format!("no column {c:?} among {names:?}"))
            })
            .collect()
    }

    fn sort_plan(&self, default: SortStrategy, hist: &Histogram) -> Result<SortPlan> {
        let strategy = self.sort.map_or(default, SortStrategy::from);
        let order = match &self.column_order {
            None => Vec::new(),
            Some(ColumnOrder::Ascending) => order_columns_by_cardinality(&hist.cardinalities(), Direction::Ascending),
            Some(ColumnOrder::Descending) => order_columns_by_cardinality(&hist.cardinalities(), Direction::Descending),
            Some(ColumnOrder::Given(p)) => p.clone(),
        };
        let plan = SortPlan::new(strategy)
            .with_column_order(order)
            .with_blocks(usize::try_from(self.blocks).context("block count too large")?)
            .with_seed(self.seed)
            .with_memory_budget(self.memory_budget);
        plan.key(hist.arity())?;
        Ok(plan)
    }

    fn read_table(&self, path: &Path) -> Result<FactTable> {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        FactTable::read_delimited(BufReader::new(file), self.delimiter, self.header)
            .with_context(|| format!("reading {}", path.display()))
    }

    fn write_table(&self, table: &FactTable, path: &Path) -> Result<()> {
        write_atomically(path, |w| Ok(table.write_delimited(w, self.delimiter, self.header)?))
    }

    /// Sorts the table as planned. Gray ordering uses the dictionaries the
    /// index would assign.
    fn sort(&self, table: FactTable, hist: &Histogram, default: SortStrategy) -> Result<FactTable> {
        let plan = self.sort_plan(default, hist)?;
        if plan.strategy == SortStrategy::None {
            return Ok(table);
        }
        let dicts: Option<Vec<ColumnDictionary>> = if plan.strategy == SortStrategy::Gray {
            Some(
                plan_columns(hist, &self.index_config())?
                    .into_iter()
                    .map(|c| c.dictionary)
                    .collect(),
            )
        } else {
            None
        };
        Ok(block_sort_with(table, &plan, dicts.as_deref(), self.execution())?)
    }
}

/// Writes through a temporary file in the target directory so that a failed
/// command leaves nothing behind.
fn write_atomically(path: &Path, f: impl FnOnce(&mut BufWriter<&mut File>) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        f(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// The sidecar histogram when it is at least as new as the table and
/// describes the same columns; otherwise a fresh one, saved for next time.
fn histogram_for(input: &Path, table: &FactTable) -> Result<Histogram> {
    let sidecar = sidecar_path(input);
    let fresh = |p: &Path| -> Option<bool> {
        let t = std::fs::metadata(input).ok()?.modified().ok()?;
        let h = std::fs::metadata(p).ok()?.modified().ok()?;
        Some(h >= t)
    };
    if fresh(&sidecar) == Some(true) {
        if let Ok(h) = Histogram::load(&sidecar) {
            if h.column_names() == table.column_names() && h.rows() == table.len() as u64 {
                return Ok(h);
            }
        }
    }
    let hist = Histogram::from_table(table);
    hist.persist(&sidecar)
        .with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(hist)
}

fn run(cli: Cli) -> Result<()> {
    let opts = &cli.opts;
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match &cli.command {
        Command::Sort { input, output } => {
            let table = opts.read_table(input)?;
            let hist = Histogram::from_table(&table);
            let sorted = opts.sort(table, &hist, SortStrategy::Lexicographic)?;
            opts.write_table(&sorted, output)?;
        }
        Command::Index { input, output } => {
            let table = opts.read_table(input)?;
            let hist = histogram_for(input, &table)?;
            let sorted = opts.sort(table, &hist, SortStrategy::None)?;
            let config = opts
                .index_config()
                .with_columns(opts.indexed_columns(hist.column_names())?);
            let report = build_index(sorted.into_rows().into_iter().map(Ok), &hist, &config, output)
                .with_context(|| format!("building {}", output.display()))?;
            writeln!(
                out,
                "rows={} bitmaps={} partitions={} bytes={}",
                report.rows, report.bitmaps, report.partitions, report.file_bytes
            )?;
        }
        Command::Query {
            index,
            exprs,
            rows,
            counters,
        } => {
            let parsed = exprs
                .iter()
                .map(|e| parse(e).with_context(|| format!("parsing {e:?}")))
                .collect::<Result<Vec<_>>>()?;
            let reader = IndexReader::open(index).with_context(|| format!("opening {}", index.display()))?;
            let results = evaluate_batch(&reader, &parsed, opts.execution())?;
            for (text, r) in exprs.iter().zip(&results) {
                for (c, v) in &r.unknown_values {
                    eprintln!("warning: {c}={v:?} does not occur in the index ({text})");
                }
                if *counters {
                    eprintln!(
                        "{text}: bitmap_requests={} bitmaps_loaded={} bytes_read={} word_visits={}",
                        r.bitmap_requests, r.bitmaps_loaded, r.bytes_read, r.word_visits
                    );
                }
                writeln!(out, "{}", r.count)?;
                if *rows {
                    let ids: Vec<String> = r.rows.iter().map(u64::to_string).collect();
                    writeln!(out, "{}", ids.join(" "))?;
                }
            }
        }
        Command::Stats { index, totals } => {
            let reader = IndexReader::open(index).with_context(|| format!("opening {}", index.display()))?;
            let stats = reader.stats()?;
            let mut csv = csv::Writer::from_writer(&mut out);
            if *totals {
                csv.write_record(["column", "cardinality", "k", "bitmaps", "C", "N", "factor"])?;
                for c in &stats.columns {
                    csv.write_record([
                        c.name.clone(),
                        c.cardinality.to_string(),
                        c.k.to_string(),
                        c.bitmaps.to_string(),
                        c.compressed_words.to_string(),
                        c.uncompressed_words.to_string(),
                        format!("{:.6}", c.factor()),
                    ])?;
                }
            } else {
                csv.write_record(["column", "bitmap", "C", "N", "factor", "set_bits"])?;
                for b in &stats.bitmaps {
                    csv.write_record([
                        b.column.clone(),
                        b.bitmap.to_string(),
                        b.compressed_words.to_string(),
                        b.uncompressed_words.to_string(),
                        format!("{:.6}", b.factor()),
                        b.set_bits.to_string(),
                    ])?;
                }
            }
            csv.flush()?;
        }
        Command::GenUniform {
            output,
            rows,
            independent,
            ratio,
            dependent,
        } => {
            let table = gen_uniform(&UniformSpec {
                rows: *rows,
                independent: *independent,
                ratio: *ratio,
                dependent: *dependent,
                seed: opts.seed,
            })?;
            opts.write_table(&table, output)?;
        }
        Command::GenZipf {
            output,
            rows,
            dims,
            s,
            range,
        } => {
            let table = gen_zipf(&ZipfSpec {
                rows: *rows,
                dims: *dims,
                s: *s,
                range: *range,
                seed: opts.seed,
            })?;
            opts.write_table(&table, output)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bitkiln: {e:#}");
            ExitCode::FAILURE
        }
    }
}
