//! Exact DTW alignment in linear memory by divide and conquer.
//!
//! A forward diagonal sweep from `(0, 0)` and a reverse sweep from
//! `(M-1, N-1)` meet on three central diagonals. Any warping path touches
//! one of them, and for a cell `(i, j)` there,
//! `D_fwd(i, j) + D_bwd(i, j) - C(i, j)` is the cheapest cost of a path
//! through it. The argmin is therefore a cell on an optimal path (the
//! pivot); the problem splits there into two independent sub-blocks.

use std::sync::Mutex;

use crate::diag::{self, first_col, EngineOptions};
use crate::error::Result;
use crate::instrument::{ProgressFn, Tracker};
use crate::oracle::{self, TieRule};
use crate::path::{path_cost_in, AlignmentResult, WarpingPath};
use crate::series::{check_pair, CostFunction, FeatureSeries, Precision, Scalar, SeriesView};

/// Below this side length sub-blocks are solved with the textbook algorithm.
pub const DEFAULT_MIN_DIM: usize = 500;

/// Ordering among central cells with equal combined cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum PivotTieRule {
    /// Lowest diagonal first, then lowest offset (smallest `j`).
    #[default]
    LowestDiagonal,
    /// Highest diagonal first, then highest offset.
    HighestDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinMdtwConfig {
    /// Sub-blocks with a side shorter than this go to the oracle. At least 2.
    pub min_dim: usize,
    pub precision: Precision,
    /// Backpointer precedence inside oracle-solved sub-blocks.
    pub tie_rule: TieRule,
    pub pivot_tie_rule: PivotTieRule,
    /// Run the two recursive halves on separate threads. Each concurrent
    /// branch holds its own buffers, so peak memory is per branch.
    pub parallel_halves: bool,
    /// Split long diagonals across the rayon pool.
    pub parallel_diagonals: bool,
}

impl Default for LinMdtwConfig {
    fn default() -> Self {
        Self {
            min_dim: DEFAULT_MIN_DIM,
            precision: Precision::Double,
            tie_rule: TieRule::DiagFirst,
            pivot_tie_rule: PivotTieRule::LowestDiagonal,
            parallel_halves: false,
            parallel_diagonals: false,
        }
    }
}

impl LinMdtwConfig {
    pub fn with_min_dim(mut self, min_dim: usize) -> Self {
        self.min_dim = min_dim;
        self
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }
}

/// A cell on an optimal path, found on the central diagonals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pivot {
    pub i: usize,
    pub j: usize,
    /// Combined forward + backward − local cost at the pivot.
    pub total: f64,
    pub diagonal_k: usize,
}

/// Diagonals run forward and in reverse so that the last three of each
/// coincide. With `K = M + N - 1` diagonals the forward sweep stops at
/// `ceil(K / 2)`, the reverse one at `K + 1 - ceil(K / 2)`.
fn split_diagonals(m: usize, n: usize) -> (usize, usize) {
    let k = m + n - 1;
    let fwd = k.div_ceil(2);
    (fwd, k + 1 - fwd)
}

/// Locates a pivot for the full series. Requires `M + N >= 4`.
pub fn find_pivot(x: &FeatureSeries, y: &FeatureSeries, cost: CostFunction) -> Result<Pivot> {
    check_pair(x, y)?;
    if x.len() + y.len() < 4 {
        return Err(crate::Error::invalid(format!(
            "a pivot needs at least four diagonals' worth of cells, got {}x{}",
            x.len(),
            y.len()
        )));
    }
    let tracker = Tracker::silent();
    let opts = EngineOptions { retain_raw: true, parallel: false };
    Ok(pivot_in::<f64>(&x.view(), &y.view(), cost, opts, PivotTieRule::default(), &tracker))
}

pub(crate) fn pivot_in<T: Scalar>(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    cost: CostFunction,
    opts: EngineOptions,
    tie: PivotTieRule,
    tracker: &Tracker<'_>,
) -> Pivot {
    let (m, n) = (x.len(), y.len());
    let width = m.min(n);
    let (kf, kb) = split_diagonals(m, n);

    // Forward sweep keeps accumulated and raw diagonals (6 buffers), then
    // folds them into D - C so the raw buffers can go before the reverse
    // sweep allocates its three.
    let mut held = tracker.reserve(6 * width);
    let fwd = diag::run::<T>(x, y, cost, kf, EngineOptions { retain_raw: true, ..opts }, tracker);
    let (mut acc, raw) = fwd.into_parts();
    let raw = raw.expect("forward sweep retains raw costs");
    for (a, r) in acc.iter_mut().zip(&raw) {
        for (d, &c) in a.iter_mut().zip(r) {
            *d = *d - c;
        }
    }
    drop(raw);
    held.shrink_to(3 * width);

    let _bwd_held = tracker.reserve(3 * width);
    let bwd = diag::run::<T>(
        &x.rev(),
        &y.rev(),
        cost,
        kb,
        EngineOptions { retain_raw: false, ..opts },
        tracker,
    );

    let mut best: Option<(T, usize, usize)> = None;
    let mut consider = |slot: usize, idx: usize| {
        let len = acc[slot].len();
        let total = acc[slot][idx] + bwd.accumulated(2 - slot)[len - 1 - idx];
        if best.map_or(true, |(b, _, _)| total < b) {
            best = Some((total, slot, idx));
        }
    };
    match tie {
        PivotTieRule::LowestDiagonal => {
            for slot in 0..3 {
                for idx in 0..acc[slot].len() {
                    consider(slot, idx);
                }
            }
        }
        PivotTieRule::HighestDiagonal => {
            for slot in (0..3).rev() {
                for idx in (0..acc[slot].len()).rev() {
                    consider(slot, idx);
                }
            }
        }
    }
    let (total, slot, idx) = best.expect("central diagonals are never empty");
    let k = kf + slot - 2;
    let i = k.min(m - 1) - idx;
    debug_assert_eq!(k - i - first_col(k, m), idx);
    Pivot { i, j: k - i, total: total.to_f64(), diagonal_k: k }
}

/// Exact DTW alignment using memory linear in `M + N`.
pub fn linmdtw(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    cfg: LinMdtwConfig,
) -> Result<AlignmentResult> {
    run(x, y, cost, cfg, None, false).map(|(r, _)| r)
}

/// As [`linmdtw`], reporting `(cells_processed, 2·M·N)` as work completes.
pub fn linmdtw_with_progress(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    cfg: LinMdtwConfig,
    progress: ProgressFn<'_>,
) -> Result<AlignmentResult> {
    run(x, y, cost, cfg, Some(progress), false).map(|(r, _)| r)
}

/// As [`linmdtw`], also returning every pivot chosen, in grid coordinates
/// of the full problem.
pub fn linmdtw_traced(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    cfg: LinMdtwConfig,
) -> Result<(AlignmentResult, Vec<Pivot>)> {
    run(x, y, cost, cfg, None, true)
}

fn run(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    cfg: LinMdtwConfig,
    progress: Option<ProgressFn<'_>>,
    trace: bool,
) -> Result<(AlignmentResult, Vec<Pivot>)> {
    check_pair(x, y)?;
    if cfg.min_dim < 2 {
        return Err(crate::Error::invalid("min_dim must be at least 2"));
    }
    let (m, n) = (x.len(), y.len());
    let budget = 2 * m as u64 * n as u64;
    let tracker = Tracker::new(budget, progress);
    let ctx = Ctx {
        cost,
        cfg,
        tracker: &tracker,
        pivots: trace.then(|| Mutex::new(Vec::new())),
    };
    let (xv, yv) = (x.view(), y.view());
    let (cost_value, path) = match cfg.precision {
        Precision::Double => {
            let path = ctx.solve::<f64>(xv, yv, (0, 0))?;
            (path_cost_in::<f64>(&xv, &yv, &path, cost).to_f64(), path)
        }
        Precision::Single => {
            let path = ctx.solve::<f32>(xv, yv, (0, 0))?;
            (path_cost_in::<f32>(&xv, &yv, &path, cost).to_f64(), path)
        }
    };
    tracker.finish();
    let pivots = ctx.pivots.map(|p| p.into_inner().unwrap()).unwrap_or_default();
    Ok((
        AlignmentResult {
            cost: cost_value,
            path: WarpingPath::new(path),
            cells_processed: tracker.cells(),
            cells_budget: budget,
            peak_retained: tracker.peak_retained(),
            peak_backpointers: tracker.peak_backpointers(),
            precision: cfg.precision,
        },
        pivots,
    ))
}

struct Ctx<'t, 'a> {
    cost: CostFunction,
    cfg: LinMdtwConfig,
    tracker: &'t Tracker<'a>,
    pivots: Option<Mutex<Vec<Pivot>>>,
}

impl Ctx<'_, '_> {
    /// Optimal path of the block `x`×`y`, offset by `origin` in the full grid.
    fn solve<T: Scalar>(
        &self,
        x: SeriesView<'_>,
        y: SeriesView<'_>,
        origin: (usize, usize),
    ) -> Result<Vec<(usize, usize)>> {
        let (m, n) = (x.len(), y.len());
        // Blocks with M + N <= 5 can only offer a corner as pivot.
        if m < self.cfg.min_dim || n < self.cfg.min_dim || m + n <= 5 {
            let (_, path) = oracle::solve::<T>(&x, &y, self.cost, self.cfg.tie_rule, self.tracker)?;
            return Ok(path.into_iter().map(|(i, j)| (i + origin.0, j + origin.1)).collect());
        }

        let opts = EngineOptions { retain_raw: true, parallel: self.cfg.parallel_diagonals };
        let p = pivot_in::<T>(&x, &y, self.cost, opts, self.cfg.pivot_tie_rule, self.tracker);
        if let Some(log) = &self.pivots {
            log.lock().unwrap().push(Pivot { i: p.i + origin.0, j: p.j + origin.1, ..p });
        }
        let (i, j) = (p.i, p.j);
        let (head_x, head_y) = (x.slice(0, i + 1), y.slice(0, j + 1));
        let (tail_x, tail_y) = (x.slice(i, m - i), y.slice(j, n - j));
        let tail_origin = (origin.0 + i, origin.1 + j);

        let (head, tail) = if self.cfg.parallel_halves {
            let (h, t) = rayon::join(
                || self.solve::<T>(head_x, head_y, origin),
                || self.solve::<T>(tail_x, tail_y, tail_origin),
            );
            (h?, t?)
        } else {
            let h = self.solve::<T>(head_x, head_y, origin)?;
            (h, self.solve::<T>(tail_x, tail_y, tail_origin)?)
        };
        let mut path = head;
        debug_assert_eq!(path.last(), tail.first());
        path.extend_from_slice(&tail[1..]);
        Ok(path)
    }
}

/// Cells evaluated relative to a single full table.
pub fn cells_ratio(result: &AlignmentResult, m: usize, n: usize) -> f64 {
    result.cells_ratio(m, n)
}

/// Worst-case cell count `2MN + (M+N)·log2(M+N)`.
pub fn cell_bound(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    2.0 * m * n + (m + n) * (m + n).log2()
}
