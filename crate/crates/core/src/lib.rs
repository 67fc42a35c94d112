//! Compressed bitmap indexes over fact tables: EWAH-compressed bitmaps,
//! k-of-N attribute encodings, row reordering ahead of indexing, a
//! partitioned on-disk index and boolean equality queries.

use std::cmp::Ordering;

pub mod error;
pub mod ewah;
pub mod extsort;
pub mod gen;
pub mod histogram;
pub mod index;
pub mod kofn;
pub mod query;
pub mod sort;
pub mod table;

pub use error::{Error, Result};
pub use ewah::{EwahBitmap, LogicalOp, SizeStats};
pub use histogram::Histogram;
pub use index::{build_index, IndexConfig, IndexReader, IndexStats};
pub use kofn::{Allocation, AttributeCode, ColumnDictionary, EncodingChoice};
pub use query::{Expr, QueryResult};
pub use sort::{SortPlan, SortStrategy};
pub use table::FactTable;

/// Whether data-parallel work runs on the rayon pool. Without the `parallel`
/// feature both variants run sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Stable sort honouring `execution`.
pub(crate) fn sort_slice_by<T, F>(slice: &mut [T], execution: Execution, cmp: F)
where
    T: Send,
    F: Fn(&T, &T) -> Ordering + Sync,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::slice::ParallelSliceMut;
        slice.par_sort_by(cmp);
        return;
    }
    let _ = execution;
    slice.sort_by(cmp);
}

/// Maps `items` in order, stopping at the first error.
pub(crate) fn map_collect<T, U, F>(items: Vec<T>, execution: Execution, f: F) -> Result<Vec<U>>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return items.into_par_iter().map(f).collect();
    }
    let _ = execution;
    items.into_iter().map(f).collect()
}
