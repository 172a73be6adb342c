//! Data reduction: quantiles, Tukey filtering, the historical processing
//! schemes, binning and normalization.

mod bin;
mod quantile;
mod schemes;
mod summary;
mod tukey;

pub use bin::{bin_series, Bin, BinStat};
pub use quantile::{mean, median, quantile, std_dev};
pub use schemes::{apply_processing_scheme, LocalOp, ProcessingScheme, RawData, SchemeSummary};
pub use summary::{normalize_to_min, summarize, SummaryRow};
pub use tukey::{tukey_bounds, tukey_filter, TukeyResult};
