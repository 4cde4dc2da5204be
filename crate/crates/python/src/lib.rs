//! Python bindings. Built as the `linmdtw` extension module.

use std::path::PathBuf;

use ::linmdtw::{
    self as core, Algorithm, CellBudget, CostFunction, DiscrepancyReport, Error, LinMdtwConfig, MemoryParams,
    OracleOptions, Precision, SynthConfig, SynthKind, TieRule, WarpingPath,
};
use pyo3::exceptions::{PyMemoryError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Resource { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// A sequence of fixed-dimension f32 frames.
#[pyclass(name = "FeatureSeries", module = "linmdtw", frozen, from_py_object)]
#[derive(Clone)]
pub struct PySeries {
    inner: core::FeatureSeries,
}

/// Anything accepted where a series is expected: a `FeatureSeries`, a list
/// of frames, or a flat list of scalars.
#[derive(FromPyObject)]
enum SeriesArg {
    Series(PySeries),
    Frames(Vec<Vec<f32>>),
    Scalars(Vec<f32>),
}

impl SeriesArg {
    fn into_series(self) -> PyResult<core::FeatureSeries> {
        match self {
            SeriesArg::Series(s) => Ok(s.inner),
            SeriesArg::Frames(f) => core::FeatureSeries::from_frames(&f).map_err(to_py),
            SeriesArg::Scalars(v) => core::FeatureSeries::from_scalars(&v).map_err(to_py),
        }
    }
}

#[pymethods]
impl PySeries {
    #[new]
    #[pyo3(signature = (frames, fps = core::DEFAULT_FRAME_RATE))]
    fn new(frames: SeriesArg, fps: f64) -> PyResult<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(PyValueError::new_err(format!("frame rate must be positive, got {fps}")));
        }
        Ok(Self { inner: frames.into_series()?.with_frame_rate(fps) })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: core::load_features(path).map_err(to_py)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        core::save_features(&self.inner, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn fps(&self) -> f64 {
        self.inner.frame_rate()
    }

    fn frames(&self) -> Vec<Vec<f32>> {
        self.inner.frames().map(<[f32]>::to_vec).collect()
    }

    fn __repr__(&self) -> String {
        format!("FeatureSeries(len={}, dim={}, fps={})", self.inner.len(), self.inner.dim(), self.inner.frame_rate())
    }
}

#[pyclass(name = "AlignmentResult", module = "linmdtw", frozen, get_all)]
pub struct PyAlignment {
    cost: f64,
    path: Vec<(usize, usize)>,
    cells_processed: u64,
    peak_retained: usize,
    peak_backpointers: usize,
    precision: u32,
    m: usize,
    n: usize,
}

impl PyAlignment {
    fn from_result(r: core::AlignmentResult, m: usize, n: usize) -> Self {
        Self {
            cost: r.cost,
            cells_processed: r.cells_processed,
            peak_retained: r.peak_retained,
            peak_backpointers: r.peak_backpointers,
            precision: r.precision.bits(),
            path: r.path.into_pairs(),
            m,
            n,
        }
    }
}

#[pymethods]
impl PyAlignment {
    /// Cells evaluated divided by `M·N`.
    #[getter]
    fn cells_ratio(&self) -> f64 {
        self.cells_processed as f64 / (self.m as f64 * self.n as f64)
    }

    fn __repr__(&self) -> String {
        format!(
            "AlignmentResult(cost={}, path_len={}, cells_processed={}, peak_retained={})",
            self.cost,
            self.path.len(),
            self.cells_processed,
            self.peak_retained
        )
    }
}

fn align(
    py: Python<'_>,
    x: SeriesArg,
    y: SeriesArg,
    f: impl FnOnce(&core::FeatureSeries, &core::FeatureSeries) -> core::Result<core::AlignmentResult> + Send,
) -> PyResult<PyAlignment> {
    let (x, y) = (x.into_series()?, y.into_series()?);
    let r = py.detach(|| f(&x, &y)).map_err(to_py)?;
    Ok(PyAlignment::from_result(r, x.len(), y.len()))
}

fn precision(bits: u32) -> PyResult<Precision> {
    Precision::from_bits(bits).map_err(to_py)
}

/// Full-table DTW.
#[pyfunction]
#[pyo3(signature = (x, y, tie_rule = "diag-first", precision = 64, max_cells = None))]
fn dtw(
    py: Python<'_>,
    x: SeriesArg,
    y: SeriesArg,
    tie_rule: &str,
    precision: u32,
    max_cells: Option<u64>,
) -> PyResult<PyAlignment> {
    let opts = OracleOptions { tie_rule: parse(tie_rule)?, precision: self::precision(precision)?, max_cells };
    align(py, x, y, |x, y| core::dtw_full(x, y, CostFunction::Euclidean, opts))
}

/// Exact DTW in memory linear in `M + N`.
#[pyfunction(name = "linmdtw")]
#[pyo3(signature = (x, y, min_dim = core::linmem::DEFAULT_MIN_DIM, precision = 64, tie_rule = "diag-first", parallel = false))]
fn linmdtw_py(
    py: Python<'_>,
    x: SeriesArg,
    y: SeriesArg,
    min_dim: usize,
    precision: u32,
    tie_rule: &str,
    parallel: bool,
) -> PyResult<PyAlignment> {
    let cfg = LinMdtwConfig {
        tie_rule: parse::<TieRule>(tie_rule)?,
        parallel_halves: parallel,
        parallel_diagonals: parallel,
        ..LinMdtwConfig::default().with_min_dim(min_dim).with_precision(self::precision(precision)?)
    };
    align(py, x, y, |x, y| core::linmdtw(x, y, CostFunction::Euclidean, cfg))
}

#[pyfunction]
#[pyo3(signature = (x, y, radius = 30))]
fn fastdtw(py: Python<'_>, x: SeriesArg, y: SeriesArg, radius: usize) -> PyResult<PyAlignment> {
    align(py, x, y, |x, y| core::fastdtw(x, y, CostFunction::Euclidean, radius))
}

#[pyfunction]
#[pyo3(signature = (x, y, budget = 100_000))]
fn mrmsdtw(py: Python<'_>, x: SeriesArg, y: SeriesArg, budget: u64) -> PyResult<PyAlignment> {
    let budget = CellBudget::new(budget).map_err(to_py)?;
    align(py, x, y, |x, y| core::mrmsdtw(x, y, CostFunction::Euclidean, budget))
}

/// Sum of local costs along `path`, which must be a valid warping path.
#[pyfunction]
fn path_cost(x: SeriesArg, y: SeriesArg, path: Vec<(usize, usize)>) -> PyResult<f64> {
    let (x, y) = (x.into_series()?, y.into_series()?);
    core::path_cost(&x, &y, &WarpingPath::new(path), CostFunction::Euclidean).map_err(to_py)
}

#[pyclass(name = "DiscrepancyReport", module = "linmdtw", frozen)]
pub struct PyReport {
    inner: DiscrepancyReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn errors(&self) -> Vec<usize> {
        self.inner.errors.clone()
    }

    #[getter]
    fn fps(&self) -> f64 {
        self.inner.fps
    }

    #[getter]
    fn max_error(&self) -> usize {
        self.inner.max_error()
    }

    #[pyo3(signature = (thresholds = core::eval::DEFAULT_THRESHOLDS_SECONDS.to_vec()))]
    fn proportion_below(&self, thresholds: Vec<f64>) -> Vec<f64> {
        self.inner.proportion_below(&thresholds)
    }

    #[pyo3(signature = (thresholds = core::eval::DEFAULT_THRESHOLDS_FRAMES.to_vec()))]
    fn proportion_below_frames(&self, thresholds: Vec<usize>) -> Vec<f64> {
        self.inner.proportion_below_frames(&thresholds)
    }
}

/// Per-frame distance from each cell of `w1` to the nearest cell of `w2` in
/// the same row or column.
#[pyfunction]
#[pyo3(signature = (w1, w2, fps = core::DEFAULT_FRAME_RATE, bidirectional = false))]
fn discrepancy(w1: Vec<(usize, usize)>, w2: Vec<(usize, usize)>, fps: f64, bidirectional: bool) -> PyResult<PyReport> {
    let (w1, w2) = (WarpingPath::new(w1), WarpingPath::new(w2));
    let r = if bidirectional {
        core::discrepancy_bidirectional(&w1, &w2, fps)
    } else {
        core::discrepancy(&w1, &w2, fps)
    };
    Ok(PyReport { inner: r.map_err(to_py)? })
}

/// `(cells, bytes)` for aligning `m` by `n` frames with `algorithm`.
#[pyfunction]
#[pyo3(signature = (algorithm, m, n, radius = 30, max_cells = 100_000))]
fn memory_estimate(algorithm: &str, m: usize, n: usize, radius: usize, max_cells: u64) -> PyResult<(u64, u64)> {
    let algo: Algorithm = parse(algorithm)?;
    let e = core::memory_estimate(algo, m, n, MemoryParams { radius, max_cells }).map_err(to_py)?;
    Ok((e.cells, e.bytes))
}

#[pyfunction]
#[pyo3(signature = (length, seed = 0, warp_strength = 0.3, kind = "warped-sine", length_b = None, dim = 12))]
fn synth_pair(
    length: usize,
    seed: u64,
    warp_strength: f64,
    kind: &str,
    length_b: Option<usize>,
    dim: usize,
) -> PyResult<(PySeries, PySeries)> {
    let cfg = SynthConfig { length_b, dim, ..SynthConfig::new(parse::<SynthKind>(kind)?, length, seed, warp_strength) };
    let (a, b) = core::synth_pair(&cfg).map_err(to_py)?;
    Ok((PySeries { inner: a }, PySeries { inner: b }))
}

#[pymodule]
#[pyo3(name = "linmdtw")]
pub fn linmdtw_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeries>()?;
    m.add_class::<PyAlignment>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(dtw, m)?)?;
    m.add_function(wrap_pyfunction!(linmdtw_py, m)?)?;
    m.add_function(wrap_pyfunction!(fastdtw, m)?)?;
    m.add_function(wrap_pyfunction!(mrmsdtw, m)?)?;
    m.add_function(wrap_pyfunction!(path_cost, m)?)?;
    m.add_function(wrap_pyfunction!(discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(memory_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(synth_pair, m)?)?;
    Ok(())
}
