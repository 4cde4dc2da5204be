//! Alignment discrepancy between two warping paths, and DP memory estimates
//! for the aligners in this crate.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::path::WarpingPath;

/// Thresholds in seconds: roughly one frame, two frames, half a second, one second
/// at 22050 Hz with a 512-sample hop.
pub const DEFAULT_THRESHOLDS_SECONDS: [f64; 4] = [0.023, 0.047, 0.510, 1.0];
/// Frame counts matching [`DEFAULT_THRESHOLDS_SECONDS`] at about 43 fps.
pub const DEFAULT_THRESHOLDS_FRAMES: [usize; 4] = [1, 2, 22, 43];

/// Row and column errors, in frames, of one path measured against another.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub errors: Vec<usize>,
    pub fps: f64,
}

impl DiscrepancyReport {
    pub fn new(errors: Vec<usize>, fps: f64) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::invalid(format!("frame rate must be positive, got {fps}")));
        }
        Ok(Self { errors, fps })
    }

    /// Fraction of errors whose duration `error / fps` is at most each threshold.
    pub fn proportion_below(&self, thresholds_seconds: &[f64]) -> Vec<f64> {
        let mut sorted = self.errors.clone();
        sorted.sort_unstable();
        thresholds_seconds
            .iter()
            .map(|&t| {
                let count = sorted.partition_point(|&e| e as f64 / self.fps <= t);
                fraction(count, sorted.len())
            })
            .collect()
    }

    /// Fraction of errors of at most each frame count.
    pub fn proportion_below_frames(&self, thresholds: &[usize]) -> Vec<f64> {
        thresholds
            .iter()
            .map(|&t| fraction(self.errors.iter().filter(|&&e| e <= t).count(), self.errors.len()))
            .collect()
    }

    /// Combines two reports computed at the same frame rate.
    pub fn merge(mut self, other: DiscrepancyReport) -> Result<Self> {
        if self.fps != other.fps {
            return Err(Error::invalid("cannot merge reports with different frame rates"));
        }
        self.errors.extend(other.errors);
        Ok(self)
    }

    pub fn max_error(&self) -> usize {
        self.errors.iter().copied().max().unwrap_or(0)
    }

    /// Header `# fps=.. thresholds=.. proportions=..`, then one error per line.
    pub fn write_to<W: Write>(&self, mut w: W, thresholds_seconds: &[f64]) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        writeln!(
            w,
            "# fps={} thresholds={} proportions={}",
            self.fps,
            join(thresholds_seconds),
            join(&self.proportion_below(thresholds_seconds))
        )?;
        for e in &self.errors {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }

    /// Reads what [`write_to`](Self::write_to) produced. Proportions are
    /// recomputed, not trusted.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut fps = None;
        let mut errors = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if let Some(header) = line.strip_prefix('#') {
                for field in header.split_whitespace() {
                    if let Some(v) = field.strip_prefix("fps=") {
                        fps = Some(v.parse::<f64>().map_err(|_| {
                            Error::invalid(format!("line {}: bad fps {v:?}", n + 1))
                        })?);
                    }
                }
            } else if !line.is_empty() {
                errors.push(line.parse().map_err(|_| {
                    Error::invalid(format!("line {}: bad error value {line:?}", n + 1))
                })?);
            }
        }
        Self::new(errors, fps.ok_or_else(|| Error::invalid("report has no fps header"))?)
    }
}

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        count as f64 / total as f64
    }
}

/// For each `(i, j)` of `w1`: the row error `min |j - k|` over `(i, k)` in
/// `w2`, and the column error `min |i - k|` over `(k, j)` in `w2`.
pub fn discrepancy(w1: &WarpingPath, w2: &WarpingPath, fps: f64) -> Result<DiscrepancyReport> {
    let (a, b) = (w1.pairs(), w2.pairs());
    let (Some(&end1), Some(&end2)) = (a.last(), b.last()) else {
        return Err(Error::invalid("cannot compare empty paths"));
    };
    if end1 != end2 || a[0] != (0, 0) || b[0] != (0, 0) {
        return Err(Error::invalid(format!(
            "paths do not share endpoints: {:?}..{end1:?} vs {:?}..{end2:?}",
            a[0], b[0]
        )));
    }
    let (m, n) = (end1.0 + 1, end1.1 + 1);
    // On a warping path the cells of one row (or column) are contiguous.
    let mut row_span = vec![(usize::MAX, 0usize); m];
    let mut col_span = vec![(usize::MAX, 0usize); n];
    for &(i, j) in b {
        row_span[i] = (row_span[i].0.min(j), row_span[i].1.max(j));
        col_span[j] = (col_span[j].0.min(i), col_span[j].1.max(i));
    }
    let gap = |(lo, hi): (usize, usize), v: usize| {
        if v < lo {
            lo - v
        } else {
            v.saturating_sub(hi)
        }
    };
    let mut errors = Vec::with_capacity(2 * a.len());
    for &(i, j) in a {
        if i >= m || j >= n {
            return Err(Error::invalid(format!("cell ({i}, {j}) lies outside {m}x{n}")));
        }
        if row_span[i].0 == usize::MAX || col_span[j].0 == usize::MAX {
            return Err(Error::invalid("reference path skips a row or column"));
        }
        errors.push(gap(row_span[i], j));
    }
    for &(i, j) in a {
        errors.push(gap(col_span[j], i));
    }
    DiscrepancyReport::new(errors, fps)
}

/// Both directions merged: `w1` against `w2` and `w2` against `w1`.
pub fn discrepancy_bidirectional(
    w1: &WarpingPath,
    w2: &WarpingPath,
    fps: f64,
) -> Result<DiscrepancyReport> {
    discrepancy(w1, w2, fps)?.merge(discrepancy(w2, w1, fps)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Textbook,
    FastDtw,
    LinMdtw,
    MrMsDtw,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::Textbook, Algorithm::FastDtw, Algorithm::LinMdtw, Algorithm::MrMsDtw];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Textbook => "textbook",
            Algorithm::FastDtw => "fastdtw",
            Algorithm::LinMdtw => "linmdtw",
            Algorithm::MrMsDtw => "mrmsdtw",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "textbook" | "dtw" => Ok(Algorithm::Textbook),
            "fastdtw" => Ok(Algorithm::FastDtw),
            "linmdtw" => Ok(Algorithm::LinMdtw),
            "mrmsdtw" => Ok(Algorithm::MrMsDtw),
            _ => Err(Error::invalid(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Bytes per stored DP cell.
pub const BYTES_PER_CELL: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MemoryParams {
    pub radius: usize,
    pub max_cells: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryEstimate {
    pub algorithm: Algorithm,
    pub m: usize,
    pub n: usize,
    pub params: MemoryParams,
    pub cells: u64,
    pub bytes: u64,
}

/// Accumulated-cost cells each aligner keeps: `M·N`, `min(M,N)·(4δ+5)`,
/// `6·min(M,N)`, or the fixed budget.
pub fn memory_estimate(
    algorithm: Algorithm,
    m: usize,
    n: usize,
    params: MemoryParams,
) -> Result<MemoryEstimate> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("memory estimate needs M, N >= 1"));
    }
    let short = m.min(n) as u64;
    let cells = match algorithm {
        Algorithm::Textbook => m as u64 * n as u64,
        Algorithm::FastDtw => short * (4 * params.radius as u64 + 5),
        Algorithm::LinMdtw => 6 * short,
        Algorithm::MrMsDtw => params.max_cells,
    };
    Ok(MemoryEstimate { algorithm, m, n, params, cells, bytes: cells * BYTES_PER_CELL })
}

/// Frame count of `seconds` of audio, rounded to the nearest frame.
pub fn frames_for(seconds: f64, fps: f64) -> usize {
    (seconds * fps).round() as usize
}

/// Memory table for one pair of durations.
#[derive(Debug, Clone, PartialEq)]
pub struct MemReport {
    pub m: usize,
    pub n: usize,
    pub rows: Vec<MemoryEstimate>,
}

impl MemReport {
    pub fn get(&self, algorithm: Algorithm) -> Option<&MemoryEstimate> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }
}

pub fn memreport(
    m_seconds: f64,
    n_seconds: f64,
    fps: f64,
    radius: usize,
    budgets: &[u64],
) -> Result<MemReport> {
    if !(m_seconds > 0.0 && n_seconds > 0.0 && fps > 0.0) {
        return Err(Error::invalid("durations and frame rate must be positive"));
    }
    let (m, n) = (frames_for(m_seconds, fps).max(1), frames_for(n_seconds, fps).max(1));
    let mut rows = Vec::new();
    for algo in [Algorithm::Textbook, Algorithm::FastDtw, Algorithm::LinMdtw] {
        rows.push(memory_estimate(algo, m, n, MemoryParams { radius, max_cells: 0 })?);
    }
    for &max_cells in budgets {
        rows.push(memory_estimate(Algorithm::MrMsDtw, m, n, MemoryParams { radius, max_cells })?);
    }
    Ok(MemReport { m, n, rows })
}

impl fmt::Display for MemReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "M={} N={}", self.m, self.n)?;
        writeln!(f, "{:<10} {:>16} {:>18} {:>14} {:>14}", "algorithm", "param", "cells", "binary", "decimal")?;
        for r in &self.rows {
            let param = match r.algorithm {
                Algorithm::FastDtw => format!("radius={}", r.params.radius),
                Algorithm::MrMsDtw => format!("budget={}", r.params.max_cells),
                _ => "-".to_string(),
            };
            writeln!(
                f,
                "{:<10} {:>16} {:>18} {:>14} {:>14}",
                r.algorithm.name(),
                param,
                r.cells,
                format_bytes_binary(r.bytes),
                format_bytes_decimal(r.bytes)
            )?;
        }
        Ok(())
    }
}

fn format_scaled(bytes: u64, base: f64, units: [&str; 5]) -> String {
    let mut v = bytes as f64;
    let mut unit = 0;
    while v >= base && unit + 1 < units.len() {
        v /= base;
        unit += 1;
    }
    if unit == 0 {
        format!("{bytes} {}", units[0])
    } else {
        format!("{v:.2} {}", units[unit])
    }
}

/// Powers of 1024: `KiB`, `MiB`, ...
pub fn format_bytes_binary(bytes: u64) -> String {
    format_scaled(bytes, 1024.0, ["B", "KiB", "MiB", "GiB", "TiB"])
}

/// Powers of 1000: `KB`, `MB`, ...
pub fn format_bytes_decimal(bytes: u64) -> String {
    format_scaled(bytes, 1000.0, ["B", "KB", "MB", "GB", "TB"])
}
