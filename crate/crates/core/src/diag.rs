//! Anti-diagonal ("linear systolic array") DTW cost engine.
//!
//! The DP table is filled one anti-diagonal `k = i + j` at a time. Every
//! cell of diagonal `k` depends only on diagonals `k-1` and `k-2`, so three
//! circularly shifting buffers of length `min(M, N)` suffice, and the cells
//! of one diagonal can be computed in any order or in parallel.
//!
//! Cells on a diagonal are ordered by increasing `j`: position `idx` maps to
//! `i = min(k, M-1) - idx`, `j = k - i`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instrument::Tracker;
use crate::series::{check_pair, CostFunction, FeatureSeries, Scalar, SeriesView};

/// Diagonals at least this long are split across the rayon pool.
const PARALLEL_MIN_LEN: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Direction {
    #[default]
    Forward,
    /// Operates on both series reversed.
    Reverse,
}

/// Position of a cell as (diagonal, offset within the diagonal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiagAddress {
    pub k: usize,
    pub idx: usize,
}

/// Number of cells on diagonal `k` of an `m`×`n` grid.
pub fn diag_length(k: usize, m: usize, n: usize) -> Result<usize> {
    if m == 0 || n == 0 || k > m + n - 2 {
        return Err(Error::invalid(format!("diagonal {k} outside a {m}x{n} grid")));
    }
    Ok(len_unchecked(k, m, n))
}

#[inline]
pub(crate) fn len_unchecked(k: usize, m: usize, n: usize) -> usize {
    k.min(m - 1).min(n - 1).min(m + n - 2 - k) + 1
}

/// Column of the first cell on diagonal `k`.
#[inline]
pub(crate) fn first_col(k: usize, m: usize) -> usize {
    k.saturating_sub(m - 1)
}

pub fn diag_to_grid(addr: DiagAddress, m: usize, n: usize) -> Result<(usize, usize)> {
    let len = diag_length(addr.k, m, n)?;
    if addr.idx >= len {
        return Err(Error::invalid(format!(
            "offset {} outside diagonal {} of length {len}",
            addr.idx, addr.k
        )));
    }
    let i = addr.k.min(m - 1) - addr.idx;
    Ok((i, addr.k - i))
}

pub fn grid_to_diag(i: usize, j: usize, m: usize, n: usize) -> Result<DiagAddress> {
    if i >= m || j >= n {
        return Err(Error::invalid(format!("cell ({i}, {j}) outside a {m}x{n} grid")));
    }
    let k = i + j;
    Ok(DiagAddress { k, idx: j - first_col(k, m) })
}

/// The last three diagonals computed by [`diag_dtw`]: slot 0 holds diagonal
/// `k_current - 2`, slot 1 `k_current - 1`, slot 2 `k_current`. Grid
/// coordinates are those of the (possibly reversed) series that were run.
#[derive(Debug, Clone)]
pub struct DiagBufferSet<T = f64> {
    rows: usize,
    cols: usize,
    k_current: usize,
    direction: Direction,
    acc: [Vec<T>; 3],
    raw: Option<[Vec<T>; 3]>,
}

impl<T: Scalar> DiagBufferSet<T> {
    pub fn k_current(&self) -> usize {
        self.k_current
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Diagonal index held in `slot` (0, 1 or 2).
    pub fn diagonal(&self, slot: usize) -> usize {
        self.k_current + slot - 2
    }

    /// Accumulated costs on the diagonal in `slot`.
    pub fn accumulated(&self, slot: usize) -> &[T] {
        &self.acc[slot]
    }

    /// Raw frame costs on the diagonal in `slot`, if they were retained.
    pub fn raw(&self, slot: usize) -> Option<&[T]> {
        self.raw.as_ref().map(|r| r[slot].as_slice())
    }

    /// Accumulated cost at grid cell `(i, j)` if it lies on a held diagonal.
    pub fn value_at(&self, i: usize, j: usize) -> Option<T> {
        let k = i + j;
        if k + 2 < self.k_current || k > self.k_current || i >= self.rows || j >= self.cols {
            return None;
        }
        let slot = k + 2 - self.k_current;
        self.acc[slot].get(j - first_col(k, self.rows)).copied()
    }

    /// Values kept alive by this set, counting full buffer capacity.
    pub fn retained(&self) -> usize {
        let cap = |b: &[Vec<T>; 3]| b.iter().map(Vec::capacity).sum::<usize>();
        cap(&self.acc) + self.raw.as_ref().map_or(0, cap)
    }

    pub(crate) fn into_parts(self) -> ([Vec<T>; 3], Option<[Vec<T>; 3]>) {
        (self.acc, self.raw)
    }
}

/// Runs the engine on full series up to and including diagonal `kstop`.
/// Returns the buffers and the number of cells evaluated.
pub fn diag_dtw(
    x: &FeatureSeries,
    y: &FeatureSeries,
    cost: CostFunction,
    kstop: usize,
    direction: Direction,
) -> Result<(DiagBufferSet<f64>, u64)> {
    check_pair(x, y)?;
    let (m, n) = (x.len(), y.len());
    if m + n < 4 || kstop < 2 || kstop > m + n - 2 {
        return Err(Error::invalid(format!(
            "kstop {kstop} must lie in [2, {}] for a {m}x{n} grid",
            (m + n).saturating_sub(2)
        )));
    }
    let (xv, yv) = match direction {
        Direction::Forward => (x.view(), y.view()),
        Direction::Reverse => (x.view().rev(), y.view().rev()),
    };
    let tracker = Tracker::silent();
    let opts = EngineOptions { retain_raw: true, parallel: false };
    let mut set = run::<f64>(&xv, &yv, cost, kstop, opts, &tracker);
    set.direction = direction;
    Ok((set, tracker.cells()))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineOptions {
    pub retain_raw: bool,
    pub parallel: bool,
}

/// Accumulated and raw cost of cell `idx` on diagonal `k`, given the two
/// previous diagonals. Reads nothing else.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn cell<T: Scalar>(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    cost: CostFunction,
    k: usize,
    idx: usize,
    back1: &[T],
    back2: &[T],
) -> (T, T) {
    let m = x.len();
    let i = k.min(m - 1) - idx;
    let j = k - i;
    let c: T = cost.between(x, y, i, j);
    if k == 0 {
        return (c, c);
    }
    let f1 = first_col(k - 1, m);
    let mut best = T::INFINITY;
    if j > 0 {
        // LEFT (i, j-1), then DIAG (i-1, j-1)
        best = back1[j - 1 - f1];
        if i > 0 {
            let d = back2[j - 1 - first_col(k - 2, m)];
            if d < best {
                best = d;
            }
        }
    }
    if i > 0 {
        // UP (i-1, j)
        let u = back1[j - f1];
        if u < best {
            best = u;
        }
    }
    (best + c, c)
}

/// Fills diagonals `0..=kstop` and returns the last three.
pub(crate) fn run<T: Scalar>(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    cost: CostFunction,
    kstop: usize,
    opts: EngineOptions,
    tracker: &Tracker<'_>,
) -> DiagBufferSet<T> {
    let (m, n) = (x.len(), y.len());
    debug_assert!(kstop >= 2 && kstop <= m + n - 2);
    let cap = m.min(n);
    let buf = || Vec::<T>::with_capacity(cap);
    // back2 = diagonal k-2, back1 = k-1, out = scratch for k.
    let (mut back2, mut back1, mut out) = (buf(), buf(), buf());
    let (mut raw2, mut raw1, mut raw_out) = if opts.retain_raw {
        (buf(), buf(), buf())
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };

    for k in 0..=kstop {
        let len = len_unchecked(k, m, n);
        out.clear();
        out.resize(len, T::ZERO);
        if opts.retain_raw {
            raw_out.clear();
            raw_out.resize(len, T::ZERO);
        }
        let (b1, b2) = (&back1[..], &back2[..]);
        let eval = |idx: usize| cell(x, y, cost, k, idx, b1, b2);
        let parallel = opts.parallel && len >= PARALLEL_MIN_LEN;
        match (opts.retain_raw, parallel) {
            (true, false) => {
                for (idx, (d, c)) in out.iter_mut().zip(raw_out.iter_mut()).enumerate() {
                    (*d, *c) = eval(idx);
                }
            }
            (true, true) => {
                out.par_iter_mut()
                    .zip(raw_out.par_iter_mut())
                    .enumerate()
                    .for_each(|(idx, (d, c))| (*d, *c) = eval(idx));
            }
            (false, false) => {
                for (idx, d) in out.iter_mut().enumerate() {
                    *d = eval(idx).0;
                }
            }
            (false, true) => {
                out.par_iter_mut().enumerate().for_each(|(idx, d)| *d = eval(idx).0);
            }
        }
        // Circular shift: k becomes k-1, k-1 becomes k-2, k-2 is reused.
        std::mem::swap(&mut back2, &mut back1);
        std::mem::swap(&mut back1, &mut out);
        if opts.retain_raw {
            std::mem::swap(&mut raw2, &mut raw1);
            std::mem::swap(&mut raw1, &mut raw_out);
        }
        tracker.add_cells(len as u64);
    }
    // After the final shift `out` still holds diagonal kstop-2.
    DiagBufferSet {
        rows: m,
        cols: n,
        k_current: kstop,
        direction: Direction::Forward,
        acc: [out, back2, back1],
        raw: opts.retain_raw.then_some([raw_out, raw2, raw1]),
    }
}
