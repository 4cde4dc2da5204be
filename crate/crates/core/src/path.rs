use crate::error::{Error, PathViolation, Result};
use crate::series::{check_pair, CostFunction, FeatureSeries, Precision, Scalar, SeriesView};

/// Ordered `(i, j)` correspondences between two series, 0-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WarpingPath(Vec<(usize, usize)>);

impl WarpingPath {
    /// Wraps `pairs` without validation; see [`validate_path`].
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self(pairs)
    }

    /// The pure diagonal path of an `n`×`n` grid.
    pub fn diagonal(n: usize) -> Self {
        Self((0..n).map(|i| (i, i)).collect())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn into_pairs(self) -> Vec<(usize, usize)> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, cell: (usize, usize)) -> bool {
        self.0.binary_search(&cell).is_ok()
    }

    /// The same path with the roles of the two series exchanged.
    pub fn transposed(&self) -> Self {
        Self(self.0.iter().map(|&(i, j)| (j, i)).collect())
    }

    pub fn validate(&self, m: usize, n: usize) -> std::result::Result<(), Vec<PathViolation>> {
        validate_path(self, m, n)
    }
}

impl From<Vec<(usize, usize)>> for WarpingPath {
    fn from(v: Vec<(usize, usize)>) -> Self {
        Self(v)
    }
}

/// Checks endpoints, grid bounds and step rules; collects every violation.
pub fn validate_path(
    path: &WarpingPath,
    m: usize,
    n: usize,
) -> std::result::Result<(), Vec<PathViolation>> {
    let pairs = path.pairs();
    let Some((&first, &last)) = pairs.first().zip(pairs.last()) else {
        return Err(vec![PathViolation::Empty]);
    };
    let mut violations = Vec::new();
    if first != (0, 0) {
        violations.push(PathViolation::BadStart { found: first });
    }
    let expected = (m.wrapping_sub(1), n.wrapping_sub(1));
    if last != expected {
        violations.push(PathViolation::BadEnd { found: last, expected });
    }
    for (index, &cell) in pairs.iter().enumerate() {
        if cell.0 >= m || cell.1 >= n {
            violations.push(PathViolation::OutOfRange { index, cell });
        }
    }
    for (index, w) in pairs.windows(2).enumerate() {
        let (from, to) = (w[0], w[1]);
        let ok = matches!(
            (to.0.checked_sub(from.0), to.1.checked_sub(from.1)),
            (Some(0), Some(1)) | (Some(1), Some(0)) | (Some(1), Some(1))
        );
        if !ok {
            violations.push(PathViolation::IllegalStep { index: index + 1, from, to });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Sum of frame costs along `path`, accumulated in path order.
pub fn path_cost(
    x: &FeatureSeries,
    y: &FeatureSeries,
    path: &WarpingPath,
    cost: CostFunction,
) -> Result<f64> {
    check_pair(x, y)?;
    validate_path(path, x.len(), y.len()).map_err(Error::InvalidPath)?;
    Ok(path_cost_in::<f64>(&x.view(), &y.view(), path.pairs(), cost))
}

pub(crate) fn path_cost_in<T: Scalar>(
    x: &SeriesView<'_>,
    y: &SeriesView<'_>,
    pairs: &[(usize, usize)],
    cost: CostFunction,
) -> T {
    pairs.iter().fold(T::ZERO, |acc, &(i, j)| acc + cost.between::<T>(x, y, i, j))
}

/// Output of every aligner in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub cost: f64,
    pub path: WarpingPath,
    /// DP cells evaluated, summed over every sub-solve.
    pub cells_processed: u64,
    /// `2·M·N`, the progress denominator.
    pub cells_budget: u64,
    /// Peak number of accumulated and raw cost values held at once.
    pub peak_retained: usize,
    /// Peak number of 2-bit backpointer codes held at once.
    pub peak_backpointers: usize,
    pub precision: Precision,
}

impl AlignmentResult {
    pub fn cells_ratio(&self, m: usize, n: usize) -> f64 {
        self.cells_processed as f64 / (m as f64 * n as f64)
    }
}
