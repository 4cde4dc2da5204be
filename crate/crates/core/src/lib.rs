//! Exact dynamic time warping in linear memory.
//!
//! The crate provides:
//!
//! * [`oracle`]: textbook quadratic-memory DTW and a brute-force enumerator.
//! * [`diag`]: the anti-diagonal cost engine holding three diagonals at a time.
//! * [`linmem`]: exact divide-and-conquer alignment in `O(M + N)` memory.
//! * [`approx`]: FastDTW and a memory-restricted multiscale baseline.
//! * [`eval`]: alignment discrepancy metrics and memory estimates.
//! * [`io`] and [`synth`]: feature/path file formats and test-data generation.

pub mod approx;
pub mod diag;
pub mod error;
pub mod eval;
mod instrument;
pub mod io;
pub mod linmem;
pub mod oracle;
pub mod path;
pub mod series;
pub mod synth;

pub use approx::{coarsen, constrained_dtw, expand_window, fastdtw, mrmsdtw, mrmsdtw_with, CellBudget, MrMsConfig, Window};
pub use error::{Error, PathViolation, Result};
pub use eval::{discrepancy, discrepancy_bidirectional, memory_estimate, memreport, Algorithm, DiscrepancyReport, MemoryEstimate, MemoryParams};
pub use instrument::ProgressFn;
pub use io::{load_features, save_features, PathFile};
pub use linmem::{cells_ratio, find_pivot, linmdtw, linmdtw_traced, linmdtw_with_progress, LinMdtwConfig, Pivot, PivotTieRule};
pub use oracle::{dtw_brute_enumerate, dtw_full, OracleOptions, TieRule};
pub use path::{path_cost, validate_path, AlignmentResult, WarpingPath};
pub use series::{euclidean_cost, CostFunction, FeatureSeries, Precision, SeriesView, DEFAULT_FRAME_RATE};
pub use synth::{synth_pair, SynthConfig, SynthKind};
