//! Approximate multiresolution baselines: FastDTW (band radius δ) and a
//! memory-restricted multiscale DTW with a constant cell budget.

use crate::error::{Error, Result};
use crate::instrument::Tracker;
use crate::oracle::{self, best_move, Move, TieRule};
use crate::path::{path_cost_in, AlignmentResult, WarpingPath};
use crate::series::{check_pair, CostFunction, FeatureSeries, Precision, SeriesView};

/// Per-row inclusive column intervals `[lo_i, hi_i]` of admissible cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    cols: usize,
    rows: Vec<(usize, usize)>,
}

impl Window {
    /// Validates that the window is a monotone, connected staircase from
    /// `(0, 0)` to `(M-1, N-1)`.
    pub fn new(rows: Vec<(usize, usize)>, cols: usize) -> Result<Self> {
        let w = Self { cols, rows };
        w.check()?;
        Ok(w)
    }

    pub fn full(m: usize, n: usize) -> Self {
        Self { cols: n, rows: vec![(0, n - 1); m] }
    }

    fn check(&self) -> Result<()> {
        let (m, n) = (self.rows.len(), self.cols);
        if m == 0 || n == 0 {
            return Err(Error::invalid("window needs at least one row and column"));
        }
        if self.rows[0].0 != 0 || self.rows[m - 1].1 != n - 1 {
            return Err(Error::invalid("window must contain both corner cells"));
        }
        for (i, &(lo, hi)) in self.rows.iter().enumerate() {
            if lo > hi || hi >= n {
                return Err(Error::invalid(format!("row {i} has bad interval [{lo}, {hi}]")));
            }
            if i > 0 {
                let (plo, phi) = self.rows[i - 1];
                if lo < plo || hi < phi || lo > phi + 1 {
                    return Err(Error::invalid(format!("row {i} breaks the monotone staircase")));
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> usize {
        self.rows.iter().map(|&(lo, hi)| hi - lo + 1).sum()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows.get(i).is_some_and(|&(lo, hi)| lo <= j && j <= hi)
    }
}

/// Halves the time resolution: each output frame is the mean of a pair of
/// adjacent input frames; an odd trailing frame is dropped.
pub fn coarsen(x: &FeatureSeries) -> Result<FeatureSeries> {
    if x.len() < 2 {
        return Err(Error::invalid("coarsening needs at least two frames"));
    }
    let dim = x.dim();
    let mut data = Vec::with_capacity(x.len() / 2 * dim);
    for p in 0..x.len() / 2 {
        let (a, b) = (x.frame(2 * p), x.frame(2 * p + 1));
        data.extend(a.iter().zip(b).map(|(u, v)| (u + v) / 2.0));
    }
    Ok(FeatureSeries::new(data, dim)?.with_frame_rate(x.frame_rate() / 2.0))
}

/// Means over consecutive blocks of `factor` frames; the last block may be short.
fn block_means(x: &SeriesView<'_>, factor: usize) -> FeatureSeries {
    let dim = x.dim();
    let blocks = x.len().div_ceil(factor);
    let mut data = vec![0.0f32; blocks * dim];
    for b in 0..blocks {
        let (start, end) = (b * factor, ((b + 1) * factor).min(x.len()));
        let out = &mut data[b * dim..(b + 1) * dim];
        for t in start..end {
            for (o, v) in out.iter_mut().zip(x.frame(t)) {
                *o += v;
            }
        }
        let count = (end - start) as f32;
        out.iter_mut().for_each(|o| *o /= count);
    }
    FeatureSeries::new(data, dim).expect("block means of finite frames are finite")
}

/// Projects a half-resolution path onto an `m`×`n` grid, dilates it by
/// `radius` cells along both axes, and closes it into a monotone window.
pub fn expand_window(path: &WarpingPath, radius: usize, m: usize, n: usize) -> Window {
    let mut lo = vec![usize::MAX; m];
    let mut hi = vec![0usize; m];
    for &(a, b) in path.pairs() {
        let (c0, c1) = ((2 * b).min(n - 1), (2 * b + 1).min(n - 1));
        for r in [2 * a, 2 * a + 1] {
            if r < m {
                lo[r] = lo[r].min(c0);
                hi[r] = hi[r].max(c1);
            }
        }
    }
    // Rows past the projection (odd tails) inherit the row above.
    if lo[0] == usize::MAX {
        (lo[0], hi[0]) = (0, 0);
    }
    for r in 1..m {
        if lo[r] == usize::MAX {
            (lo[r], hi[r]) = (lo[r - 1], hi[r - 1]);
        }
    }
    lo[0] = 0;
    hi[m - 1] = n - 1;
    monotonize(&mut lo, &mut hi);

    let lo_c: Vec<usize> = lo.iter().map(|&l| l.saturating_sub(radius)).collect();
    let hi_c: Vec<usize> = hi.iter().map(|&h| (h + radius).min(n - 1)).collect();
    // With monotone bounds the row-dilated interval spans from the row
    // `radius` above to the row `radius` below.
    let mut rows: Vec<(usize, usize)> = (0..m)
        .map(|r| (lo_c[r.saturating_sub(radius)], hi_c[(r + radius).min(m - 1)]))
        .collect();
    for r in 0..m.saturating_sub(1) {
        if rows[r + 1].0 > rows[r].1 + 1 {
            rows[r].1 = rows[r + 1].0 - 1;
        }
    }
    let (mut lo, mut hi): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    monotonize(&mut lo, &mut hi);
    Window { cols: n, rows: lo.into_iter().zip(hi).collect() }
}

// lo becomes its suffix minimum, hi its prefix maximum; both only grow the window.
fn monotonize(lo: &mut [usize], hi: &mut [usize]) {
    for r in (0..lo.len().saturating_sub(1)).rev() {
        lo[r] = lo[r].min(lo[r + 1]);
    }
    for r in 1..hi.len() {
        hi[r] = hi[r].max(hi[r - 1]);
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Stats {
    cells: u64,
    peak: usize,
}

impl Stats {
    fn record(&mut self, cells: usize) {
        self.cells += cells as u64;
        self.peak = self.peak.max(cells);
    }

    fn finish(
        self,
        x: &SeriesView<'_>,
        y: &SeriesView<'_>,
        cost: CostFunction,
        path: Vec<(usize, usize)>,
    ) -> AlignmentResult {
        AlignmentResult {
            cost: path_cost_in::<f64>(x, y, &path, cost),
            path: WarpingPath::new(path),
            cells_processed: self.cells,
            cells_budget: 2 * x.len() as u64 * y.len() as u64,
            peak_retained: self.peak,
            peak_backpointers: self.peak,
            precision: Precision::Double,
        }
    }
}

/// Optimal path among those lying inside `window`. Only in-window cells
/// are evaluated or stored.
pub fn constrained_dtw(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    window: &Window,
) -> Result<AlignmentResult> {
    check_pair(x, y)?;
    if window.num_rows() != x.len() || window.num_cols() != y.len() {
        return Err(Error::invalid(format!(
            "window is {}x{} but the series are {}x{}",
            window.num_rows(),
            window.num_cols(),
            x.len(),
            y.len()
        )));
    }
    window.check()?;
    let (xv, yv) = (x.view(), y.view());
    let mut stats = Stats::default();
    let path = windowed(&xv, &yv, cost, window, &mut stats);
    Ok(stats.finish(&xv, &yv, cost, path))
}

fn windowed(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    cost: CostFunction,
    window: &Window,
    stats: &mut Stats,
) -> Vec<(usize, usize)> {
    let rows = window.rows();
    let mut offsets = Vec::with_capacity(rows.len() + 1);
    offsets.push(0usize);
    for &(lo, hi) in rows {
        offsets.push(offsets.last().unwrap() + hi - lo + 1);
    }
    let total = *offsets.last().unwrap();
    stats.record(total);
    let mut acc = vec![f64::INFINITY; total];
    let mut moves = vec![Move::Start; total];
    let order = TieRule::DiagFirst.order();
    let at = |i: usize, j: usize| -> Option<usize> {
        let (lo, hi) = rows[i];
        (lo <= j && j <= hi).then(|| offsets[i] + j - lo)
    };

    for (i, &(lo, hi)) in rows.iter().enumerate() {
        for j in lo..=hi {
            let here = offsets[i] + j - lo;
            let c: f64 = cost.between(x, y, i, j);
            if i == 0 && j == 0 {
                acc[here] = c;
                continue;
            }
            let left = (j > lo).then(|| acc[here - 1]);
            let up = if i > 0 { at(i - 1, j).map(|p| acc[p]) } else { None };
            let diag = if i > 0 && j > 0 { at(i - 1, j - 1).map(|p| acc[p]) } else { None };
            let (b, mv) = best_move(order, left, up, diag).expect("window rows are connected");
            acc[here] = b + c;
            moves[here] = mv;
        }
    }

    let (mut i, mut j) = (rows.len() - 1, window.num_cols() - 1);
    let mut path = vec![(i, j)];
    loop {
        match moves[at(i, j).unwrap()] {
            Move::Start => break,
            Move::Left => j -= 1,
            Move::Up => i -= 1,
            Move::Diag => {
                i -= 1;
                j -= 1;
            }
        }
        path.push((i, j));
    }
    path.reverse();
    path
}

fn exact(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    cost: CostFunction,
    stats: &mut Stats,
) -> Result<Vec<(usize, usize)>> {
    stats.record(x.len() * y.len());
    let (_, path) = oracle::solve::<f64>(x, y, cost, TieRule::DiagFirst, &Tracker::silent())?;
    Ok(path)
}

/// FastDTW: solve a half-resolution problem recursively, then refine inside
/// the projected path dilated by `radius`. Inputs whose shorter side is at
/// most `radius + 2` are solved exactly.
pub fn fastdtw(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    radius: usize,
) -> Result<AlignmentResult> {
    check_pair(x, y)?;
    let mut stats = Stats::default();
    let path = fastdtw_rec(x, y, cost, radius, &mut stats)?;
    Ok(stats.finish(&x.view(), &y.view(), cost, path))
}

fn fastdtw_rec(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    radius: usize,
    stats: &mut Stats,
) -> Result<Vec<(usize, usize)>> {
    let (m, n) = (x.len(), y.len());
    if m.min(n) <= radius + 2 {
        return exact(&x.view(), &y.view(), cost, stats);
    }
    let (cx, cy) = (coarsen(x)?, coarsen(y)?);
    let coarse = fastdtw_rec(&cx, &cy, cost, radius, stats)?;
    let window = expand_window(&WarpingPath::new(coarse), radius, m, n);
    Ok(windowed(&x.view(), &y.view(), cost, &window, stats))
}

/// Maximum number of DP cells a multiscale alignment may hold at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBudget(u64);

impl CellBudget {
    pub const FLOOR: u64 = 100;

    pub fn new(max_cells: u64) -> Result<Self> {
        if max_cells < Self::FLOOR {
            return Err(Error::invalid(format!(
                "cell budget {max_cells} is below the floor of {}",
                Self::FLOOR
            )));
        }
        Ok(Self(max_cells))
    }

    pub fn max_cells(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrMsConfig {
    pub budget: CellBudget,
    /// Fraction of the budget given to the coarse solve; the rest bounds
    /// each refinement block.
    pub coarse_share: f64,
}

impl MrMsConfig {
    pub fn new(budget: CellBudget) -> Self {
        Self { budget, coarse_share: 0.5 }
    }
}

/// Memory-restricted multiscale DTW with an even coarse/refine budget split.
pub fn mrmsdtw(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    budget: CellBudget,
) -> Result<AlignmentResult> {
    mrmsdtw_with(x, y, cost, MrMsConfig::new(budget))
}

/// Memory-restricted multiscale DTW.
///
/// Inputs with `M·N <= max_cells` are solved exactly. Otherwise both series
/// are averaged over blocks of `τ` frames, `τ` being the smallest power of
/// two that fits the coarse table into the coarse share of the budget. The
/// coarse path's block centres become anchor cells, and consecutive anchors
/// are grouped greedily into rectangles that fit the refinement share; each
/// rectangle is aligned exactly (or recursively, if even one anchor step is
/// too large) and the pieces are chained at the anchors.
pub fn mrmsdtw_with(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    cfg: MrMsConfig,
) -> Result<AlignmentResult> {
    check_pair(x, y)?;
    if !(cfg.coarse_share > 0.0 && cfg.coarse_share < 1.0) {
        return Err(Error::invalid("coarse_share must lie strictly between 0 and 1"));
    }
    let (xv, yv) = (x.view(), y.view());
    let mut stats = Stats::default();
    let path = mrms_rec(&xv, &yv, cost, cfg, &mut stats)?;
    Ok(stats.finish(&xv, &yv, cost, path))
}

fn mrms_rec(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    cost: CostFunction,
    cfg: MrMsConfig,
    stats: &mut Stats,
) -> Result<Vec<(usize, usize)>> {
    let (m, n) = (x.len(), y.len());
    let budget = cfg.budget.max_cells();
    if (m as u64) * (n as u64) <= budget {
        return exact(x, y, cost, stats);
    }
    let coarse_budget = ((budget as f64 * cfg.coarse_share) as u64).max(1);
    let refine_budget = (budget - coarse_budget).max(1);

    let mut tau = 1usize;
    while (m.div_ceil(tau) as u64) * (n.div_ceil(tau) as u64) > coarse_budget {
        tau *= 2;
    }
    let (cx, cy) = (block_means(x, tau), block_means(y, tau));
    let coarse = exact(&cx.view(), &cy.view(), cost, stats)?;

    let centre = |block: usize, len: usize| {
        let start = block * tau;
        (start + (start + tau).min(len) - 1) / 2
    };
    let mut anchors = vec![(0usize, 0usize)];
    for &(a, b) in &coarse {
        anchors.push((centre(a, m), centre(b, n)));
    }
    anchors.push((m - 1, n - 1));
    anchors.dedup();

    let area = |s: (usize, usize), e: (usize, usize)| ((e.0 - s.0 + 1) * (e.1 - s.1 + 1)) as u64;
    let mut path = vec![(0usize, 0usize)];
    let mut s = 0;
    while s + 1 < anchors.len() {
        let mut e = s + 1;
        while e + 1 < anchors.len() && area(anchors[s], anchors[e + 1]) <= refine_budget {
            e += 1;
        }
        let (a, b) = (anchors[s], anchors[e]);
        let sx = x.slice(a.0, b.0 - a.0 + 1);
        let sy = y.slice(a.1, b.1 - a.1 + 1);
        let piece = if area(a, b) <= refine_budget || sx.len() * sy.len() >= m * n {
            exact(&sx, &sy, cost, stats)?
        } else {
            mrms_rec(&sx, &sy, cost, cfg, stats)?
        };
        path.extend(piece.into_iter().skip(1).map(|(i, j)| (i + a.0, j + a.1)));
        s = e;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dtw_full;
    use crate::path::validate_path;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const C: CostFunction = CostFunction::Euclidean;

    fn s(v: &[f32]) -> FeatureSeries {
        FeatureSeries::from_scalars(v).unwrap()
    }

    fn random_series(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> FeatureSeries {
        FeatureSeries::new((0..len * dim).map(|_| rng.gen::<f32>()).collect(), dim).unwrap()
    }

    fn random_walk(rng: &mut ChaCha8Rng, len: usize) -> FeatureSeries {
        let mut v = 0.0f32;
        let data = (0..len)
            .map(|_| {
                v += rng.gen::<f32>() - 0.5;
                v
            })
            .collect();
        FeatureSeries::new(data, 1).unwrap()
    }

    #[test]
    fn coarsen_examples() {
        assert_eq!(coarsen(&s(&[0., 2., 4., 6.])).unwrap().as_slice(), &[1., 5.]);
        assert_eq!(coarsen(&s(&[1.; 5])).unwrap().as_slice(), &[1., 1.]);
        assert_eq!(coarsen(&s(&[0.; 11])).unwrap().len(), 5);
        assert!(coarsen(&s(&[1.])).is_err());
        let two_d = FeatureSeries::from_frames(&[[0., 10.], [2., 20.]]).unwrap();
        assert_eq!(coarsen(&two_d).unwrap().as_slice(), &[1., 15.]);
    }

    #[test]
    fn expand_window_examples() {
        let w = expand_window(&WarpingPath::diagonal(2), 0, 4, 4);
        assert_eq!(w.rows(), &[(0, 1), (0, 1), (2, 3), (2, 3)]);

        let w = expand_window(&WarpingPath::diagonal(2), 4, 4, 4);
        assert_eq!(w, Window::full(4, 4));
        assert_eq!(w.cells(), 16);
    }

    #[test]
    fn expanded_windows_are_valid_and_cover_the_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (m, n) = (rng.gen_range(2..60), rng.gen_range(2..60));
            let (cm, cn) = (m / 2, n / 2);
            if cm == 0 || cn == 0 {
                continue;
            }
            let (a, b) = (random_series(&mut rng, cm, 1), random_series(&mut rng, cn, 1));
            let coarse = dtw_full(&a, &b, C, Default::default()).unwrap().path;
            let radius = rng.gen_range(0..4);
            let w = expand_window(&coarse, radius, m, n);
            w.check().unwrap();
            assert!(w.contains(0, 0) && w.contains(m - 1, n - 1));
            for &(i, j) in coarse.pairs() {
                for (r, c) in [(2 * i, 2 * j), (2 * i + 1, 2 * j + 1), (2 * i, 2 * j + 1)] {
                    if r < m && c < n {
                        assert!(w.contains(r, c), "({r},{c}) missing");
                    }
                }
            }
        }
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(vec![(0, 1), (3, 3)], 4).is_err()); // gap
        assert!(Window::new(vec![(1, 1), (1, 3)], 4).is_err()); // misses (0,0)
        assert!(Window::new(vec![(0, 2), (1, 1)], 4).is_err()); // hi decreases
        assert!(Window::new(vec![(0, 1), (2, 3)], 4).is_ok());
    }

    #[test]
    fn constrained_examples() {
        let (x, y) = (s(&[0., 3.]), s(&[0., 1., 3.]));
        let r = constrained_dtw(&x, &y, C, &Window::full(2, 3)).unwrap();
        assert_eq!(r.cost, 1.0);

        let z = s(&[0., 1., 5., 2., 7.]);
        let diag = Window::new((0..5).map(|i| (i, i)).collect(), 5).unwrap();
        let r = constrained_dtw(&z, &z, C, &diag).unwrap();
        assert_eq!((r.cost, r.path.clone()), (0.0, WarpingPath::diagonal(5)));
        assert_eq!(r.cells_processed, 5);

        assert!(constrained_dtw(&x, &y, C, &Window::full(3, 3)).is_err());
    }

    #[test]
    fn full_window_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (m, n) = (rng.gen_range(1..40), rng.gen_range(1..40));
            let (x, y) = (random_series(&mut rng, m, 2), random_series(&mut rng, n, 2));
            let a = constrained_dtw(&x, &y, C, &Window::full(m, n)).unwrap();
            let b = dtw_full(&x, &y, C, Default::default()).unwrap();
            assert_eq!(a.cost, b.cost);
            assert_eq!(a.path, b.path);
        }
    }

    #[test]
    fn fastdtw_identity_and_saturation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_series(&mut rng, 97, 3);
        for radius in [0, 1, 5] {
            let r = fastdtw(&x, &x, C, radius).unwrap();
            assert_eq!((r.cost, r.path.clone()), (0.0, WarpingPath::diagonal(97)));
        }
        for _ in 0..30 {
            let (m, n) = (rng.gen_range(2..80), rng.gen_range(2..80));
            let (x, y) = (random_series(&mut rng, m, 2), random_series(&mut rng, n, 2));
            let exact = dtw_full(&x, &y, C, Default::default()).unwrap();
            let r = fastdtw(&x, &y, C, m.min(n)).unwrap();
            assert_eq!(r.cost, exact.cost);
        }
    }

    #[test]
    fn fastdtw_is_never_better_than_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, y) = (random_walk(&mut rng, 300), random_walk(&mut rng, 300));
        let exact = dtw_full(&x, &y, C, Default::default()).unwrap();
        for radius in [1, 5, 30] {
            let r = fastdtw(&x, &y, C, radius).unwrap();
            validate_path(&r.path, 300, 300).unwrap();
            assert!(r.cost >= exact.cost);
            assert!(r.peak_retained <= 300 * (4 * radius + 5), "{}", r.peak_retained);
        }
    }

    #[test]
    fn mrms_budget_and_validity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (x, y) = (random_walk(&mut rng, 500), random_walk(&mut rng, 500));
        let exact = dtw_full(&x, &y, C, Default::default()).unwrap();
        let r = mrmsdtw(&x, &y, C, CellBudget::new(10_000).unwrap()).unwrap();
        validate_path(&r.path, 500, 500).unwrap();
        assert!(r.cost >= exact.cost);
        assert!(r.peak_retained <= 10_000);

        let r = mrmsdtw(&x, &y, C, CellBudget::new(250_000).unwrap()).unwrap();
        assert_eq!(r.cost, exact.cost);
    }

    #[test]
    fn mrms_identity_and_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_series(&mut rng, 333, 2);
        for budget in [100, 1000, 20_000] {
            let r = mrmsdtw(&x, &x, C, CellBudget::new(budget).unwrap()).unwrap();
            assert_eq!((r.cost, r.path.clone()), (0.0, WarpingPath::diagonal(333)));
            assert!(r.peak_retained as u64 <= budget);
        }
        assert!(CellBudget::new(99).is_err());
    }

    #[test]
    fn mrms_handles_skewed_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (m, n) in [(1, 700), (700, 1), (3, 900), (40, 2000)] {
            let (x, y) = (random_series(&mut rng, m, 2), random_series(&mut rng, n, 2));
            let r = mrmsdtw(&x, &y, C, CellBudget::new(500).unwrap()).unwrap();
            validate_path(&r.path, m, n).unwrap();
            assert!(r.peak_retained <= 500);
        }
    }
}
