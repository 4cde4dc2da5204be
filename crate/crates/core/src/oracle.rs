//! Textbook quadratic-memory DTW with backpointers, and an exhaustive
//! path enumerator used to certify the other aligners on tiny inputs.

use crate::error::{Error, Result};
use crate::instrument::Tracker;
use crate::path::{AlignmentResult, WarpingPath};
use crate::series::{check_pair, CostFunction, FeatureSeries, Precision, Scalar, SeriesView};

/// Predecessor of a DP cell. `Left` is `(i, j-1)`, `Up` is `(i-1, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Start = 0,
    Left = 1,
    Up = 2,
    Diag = 3,
}

impl Move {
    pub(crate) fn from_code(c: u8) -> Self {
        match c & 3 {
            0 => Move::Start,
            1 => Move::Left,
            2 => Move::Up,
            _ => Move::Diag,
        }
    }
}

/// Precedence among equal-cost predecessors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum TieRule {
    /// DIAG > LEFT > UP
    #[default]
    DiagFirst,
    /// LEFT > DIAG > UP
    LeftFirst,
    /// UP > DIAG > LEFT
    UpFirst,
}

impl TieRule {
    pub(crate) fn order(self) -> [Move; 3] {
        match self {
            TieRule::DiagFirst => [Move::Diag, Move::Left, Move::Up],
            TieRule::LeftFirst => [Move::Left, Move::Diag, Move::Up],
            TieRule::UpFirst => [Move::Up, Move::Diag, Move::Left],
        }
    }

    /// The rule that picks the same cells after swapping the two series.
    fn transposed(self) -> Self {
        match self {
            TieRule::DiagFirst => TieRule::DiagFirst,
            TieRule::LeftFirst => TieRule::UpFirst,
            TieRule::UpFirst => TieRule::LeftFirst,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TieRule::DiagFirst => "diag-first",
            TieRule::LeftFirst => "left-first",
            TieRule::UpFirst => "up-first",
        }
    }
}

impl std::str::FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diag-first" | "diag" => Ok(TieRule::DiagFirst),
            "left-first" | "left" => Ok(TieRule::LeftFirst),
            "up-first" | "up" => Ok(TieRule::UpFirst),
            other => Err(Error::invalid(format!("unknown tie rule {other:?}"))),
        }
    }
}

/// Cheapest available predecessor; earlier entries of `order` win ties.
#[inline]
pub(crate) fn best_move<T: Scalar>(
    order: [Move; 3],
    left: Option<T>,
    up: Option<T>,
    diag: Option<T>,
) -> Option<(T, Move)> {
    let mut best: Option<(T, Move)> = None;
    for mv in order {
        let v = match mv {
            Move::Left => left,
            Move::Up => up,
            Move::Diag => diag,
            Move::Start => None,
        };
        if let Some(v) = v {
            if best.map_or(true, |(b, _)| v < b) {
                best = Some((v, mv));
            }
        }
    }
    best
}

/// M×N grid of moves packed four to a byte.
#[derive(Debug, Clone)]
pub struct BackpointerGrid {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BackpointerGrid {
    fn try_new(rows: usize, cols: usize) -> Result<Self> {
        let cells = rows.checked_mul(cols).ok_or_else(|| resource_error(rows, cols))?;
        let mut bits = Vec::new();
        bits.try_reserve_exact(cells.div_ceil(4)).map_err(|_| resource_error(rows, cols))?;
        bits.resize(cells.div_ceil(4), 0);
        Ok(Self { rows, cols, bits })
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, m: Move) {
        let idx = i * self.cols + j;
        let shift = (idx & 3) * 2;
        self.bits[idx >> 2] = (self.bits[idx >> 2] & !(3 << shift)) | ((m as u8) << shift);
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Move {
        let idx = i * self.cols + j;
        Move::from_code(self.bits[idx >> 2] >> ((idx & 3) * 2))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Follows moves from the last cell back to `(0, 0)`.
    pub fn trace(&self) -> Vec<(usize, usize)> {
        let (mut i, mut j) = (self.rows - 1, self.cols - 1);
        let mut out = Vec::with_capacity(self.rows + self.cols - 1);
        out.push((i, j));
        loop {
            match self.get(i, j) {
                Move::Start => break,
                Move::Left => j -= 1,
                Move::Up => i -= 1,
                Move::Diag => {
                    i -= 1;
                    j -= 1;
                }
            }
            out.push((i, j));
        }
        debug_assert_eq!(out.last(), Some(&(0, 0)));
        out.reverse();
        out
    }
}

fn resource_error(rows: usize, cols: usize) -> Error {
    let cells = rows as u128 * cols as u128;
    Error::Resource { cells, bytes: cells * 4 }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleOptions {
    pub tie_rule: TieRule,
    pub precision: Precision,
    /// Refuse (with a resource error) tables larger than this many cells.
    pub max_cells: Option<u64>,
}

/// Full DTW: optimal cost `D(M-1, N-1)` and a backtraced optimal path.
pub fn dtw_full(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    opts: OracleOptions,
) -> Result<AlignmentResult> {
    check_pair(x, y)?;
    let (m, n) = (x.len(), y.len());
    if let Some(limit) = opts.max_cells {
        if (m as u128) * (n as u128) > limit as u128 {
            return Err(resource_error(m, n));
        }
    }
    let tracker = Tracker::silent();
    let (xv, yv) = (x.view(), y.view());
    let (cost_value, path) = match opts.precision {
        Precision::Double => {
            let (c, p) = solve::<f64>(&xv, &yv, cost, opts.tie_rule, &tracker)?;
            (c.to_f64(), p)
        }
        Precision::Single => {
            let (c, p) = solve::<f32>(&xv, &yv, cost, opts.tie_rule, &tracker)?;
            (c.to_f64(), p)
        }
    };
    Ok(AlignmentResult {
        cost: cost_value,
        path: WarpingPath::new(path),
        cells_processed: tracker.cells(),
        cells_budget: 2 * m as u64 * n as u64,
        peak_retained: tracker.peak_retained(),
        peak_backpointers: tracker.peak_backpointers(),
        precision: opts.precision,
    })
}

/// Solves a (sub-)problem given as views. Accumulated costs live in two
/// rolling rows over the shorter series; only the backpointers are `M·N`.
pub(crate) fn solve<T: Scalar>(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    cost: CostFunction,
    tie: TieRule,
    tracker: &Tracker<'_>,
) -> Result<(T, Vec<(usize, usize)>)> {
    if y.len() > x.len() {
        let (c, path) = solve_tall::<T>(y, x, cost, tie.transposed(), tracker)?;
        Ok((c, path.into_iter().map(|(a, b)| (b, a)).collect()))
    } else {
        solve_tall::<T>(x, y, cost, tie, tracker)
    }
}

// Requires x.len() >= y.len().
fn solve_tall<T: Scalar>(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    cost: CostFunction,
    tie: TieRule,
    tracker: &Tracker<'_>,
) -> Result<(T, Vec<(usize, usize)>)> {
    let (m, n) = (x.len(), y.len());
    let mut grid = BackpointerGrid::try_new(m, n)?;
    let _bp = tracker.reserve_backpointers(m * n);
    let _rows = tracker.reserve(2 * n);
    let mut prev = vec![T::INFINITY; n];
    let mut cur = vec![T::INFINITY; n];
    let order = tie.order();

    for i in 0..m {
        let xi = x.frame(i);
        for j in 0..n {
            let c: T = cost.eval(xi, y.frame(j));
            if i == 0 && j == 0 {
                cur[0] = c;
                continue;
            }
            let left = (j > 0).then(|| cur[j - 1]);
            let up = (i > 0).then(|| prev[j]);
            let diag = (i > 0 && j > 0).then(|| prev[j - 1]);
            let (b, mv) = best_move(order, left, up, diag)
                .expect("every non-origin cell has a predecessor");
            cur[j] = b + c;
            grid.set(i, j, mv);
        }
        std::mem::swap(&mut prev, &mut cur);
        tracker.add_cells(n as u64);
    }
    Ok((prev[n - 1], grid.trace()))
}

/// The full accumulated-cost table `D`, materialized. Test oracle only.
pub fn accumulated_cost_matrix(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
) -> Result<Vec<Vec<f64>>> {
    check_pair(x, y)?;
    let (m, n) = (x.len(), y.len());
    let mut d = vec![vec![0.0f64; n]; m];
    for i in 0..m {
        for j in 0..n {
            let c: f64 = cost.eval(x.frame(i), y.frame(j));
            d[i][j] = c + match (i, j) {
                (0, 0) => 0.0,
                (0, _) => d[0][j - 1],
                (_, 0) => d[i - 1][0],
                _ => d[i - 1][j - 1].min(d[i - 1][j]).min(d[i][j - 1]),
            };
        }
    }
    Ok(d)
}

/// Largest side accepted by [`dtw_brute_enumerate`].
pub const BRUTE_FORCE_MAX_SIDE: usize = 12;

/// Minimum cost over every warping path and all paths attaining it.
#[derive(Debug, Clone)]
pub struct BruteForceOptimum {
    pub cost: f64,
    pub paths: Vec<WarpingPath>,
}

impl BruteForceOptimum {
    pub fn any_path_contains(&self, cell: (usize, usize)) -> bool {
        self.paths.iter().any(|p| p.contains(cell))
    }
}

/// Enumerates warping paths depth-first, summing costs in path order.
/// Branches whose partial sum already exceeds the best complete path are
/// cut; costs are non-negative so this never drops an optimal path.
pub fn dtw_brute_enumerate(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
) -> Result<BruteForceOptimum> {
    check_pair(x, y)?;
    let (m, n) = (x.len(), y.len());
    if m > BRUTE_FORCE_MAX_SIDE || n > BRUTE_FORCE_MAX_SIDE {
        return Err(Error::invalid(format!(
            "brute-force enumeration is limited to {BRUTE_FORCE_MAX_SIDE}x{BRUTE_FORCE_MAX_SIDE}, got {m}x{n}"
        )));
    }
    let c: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..n).map(|j| cost.eval(x.frame(i), y.frame(j))).collect())
        .collect();

    struct Search<'c> {
        c: &'c [Vec<f64>],
        m: usize,
        n: usize,
        best: f64,
        paths: Vec<Vec<(usize, usize)>>,
        stack: Vec<(usize, usize)>,
    }

    impl Search<'_> {
        fn visit(&mut self, i: usize, j: usize, acc: f64) {
            let acc = acc + self.c[i][j];
            if acc > self.best {
                return;
            }
            self.stack.push((i, j));
            if (i, j) == (self.m - 1, self.n - 1) {
                if acc < self.best {
                    self.best = acc;
                    self.paths.clear();
                }
                self.paths.push(self.stack.clone());
            } else {
                if i + 1 < self.m && j + 1 < self.n {
                    self.visit(i + 1, j + 1, acc);
                }
                if j + 1 < self.n {
                    self.visit(i, j + 1, acc);
                }
                if i + 1 < self.m {
                    self.visit(i + 1, j, acc);
                }
            }
            self.stack.pop();
        }
    }

    let mut search =
        Search { c: &c, m, n, best: f64::INFINITY, paths: Vec::new(), stack: Vec::new() };
    search.visit(0, 0, 0.0);
    Ok(BruteForceOptimum {
        cost: search.best,
        paths: search.paths.into_iter().map(WarpingPath::new).collect(),
    })
}
