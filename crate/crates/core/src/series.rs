//! Feature series, index views into them, and frame-to-frame costs.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Frames per second for 22050 Hz audio analysed with a hop of 512 samples.
pub const DEFAULT_FRAME_RATE: f64 = 22050.0 / 512.0;

/// Floating point type used to accumulate DP costs.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + 'static
{
    const ZERO: Self;
    const INFINITY: Self;

    fn from_f32(v: f32) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const INFINITY: Self = f32::INFINITY;

    #[inline]
    fn from_f32(v: f32) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const INFINITY: Self = f64::INFINITY;

    #[inline]
    fn from_f32(v: f32) -> Self {
        v as f64
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Width of the accumulators used by the DP engines. Features are always
/// stored as `f32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Precision {
    Single,
    #[default]
    Double,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::Single => 32,
            Precision::Double => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            32 => Ok(Precision::Single),
            64 => Ok(Precision::Double),
            other => Err(Error::invalid(format!("precision must be 32 or 64, got {other}"))),
        }
    }

    /// Relative tolerance when comparing costs computed by different
    /// summation orders in this precision.
    pub fn tolerance(self) -> f64 {
        match self {
            Precision::Single => 1e-4,
            Precision::Double => 1e-9,
        }
    }
}

/// A time series of fixed-dimension feature vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    data: Vec<f32>,
    len: usize,
    dim: usize,
    frame_rate: f64,
}

impl FeatureSeries {
    /// Builds a series from row-major `data` holding `data.len() / dim` frames.
    pub fn new(data: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::invalid("a feature series needs at least one frame"));
        }
        if data.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} values do not split into frames of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at frame {}, component {}",
                pos / dim,
                pos % dim
            )));
        }
        let len = data.len() / dim;
        Ok(Self { data, len, dim, frame_rate: DEFAULT_FRAME_RATE })
    }

    pub fn from_frames<F: AsRef<[f32]>>(frames: &[F]) -> Result<Self> {
        let dim = frames.first().map(|f| f.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(frames.len() * dim);
        for (i, f) in frames.iter().enumerate() {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(Error::invalid(format!(
                    "frame {i} has dimension {}, expected {dim}",
                    f.len()
                )));
            }
            data.extend_from_slice(f);
        }
        Self::new(data, dim)
    }

    /// One-dimensional series.
    pub fn from_scalars(values: &[f32]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn with_frame_rate(mut self, fps: f64) -> Self {
        self.frame_rate = fps;
        self
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    #[inline]
    pub fn frame(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn frames(&self) -> impl DoubleEndedIterator<Item = &[f32]> + ExactSizeIterator {
        self.data.chunks_exact(self.dim)
    }

    /// A copy with frames in reverse order.
    pub fn reversed(&self) -> Self {
        let data = self.frames().rev().flatten().copied().collect();
        Self { data, len: self.len, dim: self.dim, frame_rate: self.frame_rate }
    }

    pub fn view(&self) -> SeriesView<'_> {
        SeriesView { series: self, start: 0, len: self.len, reversed: false }
    }
}

/// A contiguous, possibly reversed, window of frames of a [`FeatureSeries`].
/// Sub-problems are expressed as views so frames are never copied.
#[derive(Debug, Clone, Copy)]
pub struct SeriesView<'a> {
    series: &'a FeatureSeries,
    start: usize,
    len: usize,
    reversed: bool,
}

impl<'a> SeriesView<'a> {
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.series.dim
    }

    #[inline]
    pub fn frame(&self, i: usize) -> &'a [f32] {
        debug_assert!(i < self.len);
        let idx = if self.reversed { self.start + self.len - 1 - i } else { self.start + i };
        self.series.frame(idx)
    }

    /// Sub-view of `len` frames starting at view index `start`.
    pub fn slice(&self, start: usize, len: usize) -> SeriesView<'a> {
        assert!(start + len <= self.len, "slice out of range");
        let parent_start =
            if self.reversed { self.start + self.len - start - len } else { self.start + start };
        SeriesView { series: self.series, start: parent_start, len, reversed: self.reversed }
    }

    pub fn rev(&self) -> SeriesView<'a> {
        SeriesView { reversed: !self.reversed, ..*self }
    }
}

/// Distance between two feature frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum CostFunction {
    #[default]
    Euclidean,
}

impl CostFunction {
    #[inline]
    pub fn eval<T: Scalar>(self, u: &[f32], v: &[f32]) -> T {
        match self {
            CostFunction::Euclidean => {
                let mut acc = T::ZERO;
                for (&a, &b) in u.iter().zip(v) {
                    let d = T::from_f32(a) - T::from_f32(b);
                    acc = acc + d * d;
                }
                acc.sqrt()
            }
        }
    }

    #[inline]
    pub(crate) fn between<T: Scalar>(self, x: &SeriesView<'_>, y: &SeriesView<'_>, i: usize, j: usize) -> T {
        self.eval(x.frame(i), y.frame(j))
    }
}

/// ‖u − v‖₂ in 64-bit arithmetic.
pub fn euclidean_cost(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { left: u.len(), right: v.len() });
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite feature component"));
    }
    Ok(CostFunction::Euclidean.eval::<f64>(u, v))
}

pub(crate) fn check_pair(x: &FeatureSeries, y: &FeatureSeries) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    Ok(())
}
