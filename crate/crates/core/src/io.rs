//! Binary feature-matrix files and text warping-path files.
//!
//! Feature file layout (little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `LMDW`                   |
//! | 4      | 2    | version, `u16` = 1             |
//! | 6      | 4    | rows (frames), `u32`           |
//! | 10     | 4    | cols (dimension), `u32`        |
//! | 14     | 4    | frames per second, `f32`       |
//! | 18     | 4·rows·cols | `f32` payload, row-major |
//!
//! Path files are text: a header `# M=.. N=.. fps=.. cost=.. algo=..`
//! followed by one `i,j` pair per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::path::{validate_path, WarpingPath};
use crate::series::FeatureSeries;

pub const FEATURE_MAGIC: [u8; 4] = *b"LMDW";
pub const FEATURE_VERSION: u16 = 1;
pub const FEATURE_HEADER_LEN: usize = 18;

pub fn encode_features(series: &FeatureSeries) -> Result<Vec<u8>> {
    let rows = u32::try_from(series.len())
        .map_err(|_| Error::invalid("too many frames for a feature file"))?;
    let cols = u32::try_from(series.dim())
        .map_err(|_| Error::invalid("feature dimension too large for a feature file"))?;
    let mut out = Vec::with_capacity(FEATURE_HEADER_LEN + 4 * series.as_slice().len());
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    out.extend_from_slice(&(series.frame_rate() as f32).to_le_bytes());
    for v in series.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureSeries> {
    let len = bytes.len() as u64;
    if bytes.len() < 4 {
        return Err(Error::format(len, "file too short for the magic number"));
    }
    if bytes[..4] != FEATURE_MAGIC {
        return Err(Error::format(0, format!("bad magic {:?}, expected \"LMDW\"", &bytes[..4])));
    }
    if bytes.len() < FEATURE_HEADER_LEN {
        return Err(Error::format(len, "truncated header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FEATURE_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let (rows, cols) = (u32_at(6) as usize, u32_at(10) as usize);
    if rows == 0 {
        return Err(Error::format(6, "zero frames"));
    }
    if cols == 0 {
        return Err(Error::format(10, "zero feature dimension"));
    }
    let fps = f32::from_bits(u32_at(14));
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::format(14, format!("frame rate {fps} is not positive")));
    }
    let payload_len = (rows as u64) * (cols as u64) * 4;
    let expected = FEATURE_HEADER_LEN as u64 + payload_len;
    if len < expected {
        return Err(Error::format(
            len,
            format!("truncated payload: {rows}x{cols} needs {expected} bytes, file has {len}"),
        ));
    }
    if len > expected {
        return Err(Error::format(expected, format!("{} trailing bytes", len - expected)));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[FEATURE_HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            let offset = (FEATURE_HEADER_LEN + 4 * k) as u64;
            return Err(Error::format(
                offset,
                format!("non-finite value {v} at frame {}, component {}", k / cols, k % cols),
            ));
        }
        data.push(v);
    }
    Ok(FeatureSeries::new(data, cols)?.with_frame_rate(fps as f64))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureSeries> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_features(&bytes)
}

pub fn save_features(series: &FeatureSeries, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_features(series)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// A warping path together with the problem it solves.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFile {
    pub m: usize,
    pub n: usize,
    pub fps: f64,
    pub cost: f64,
    pub algo: String,
    pub path: WarpingPath,
}

impl PathFile {
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        if self.algo.is_empty() || self.algo.contains(char::is_whitespace) {
            return Err(Error::invalid(format!("algorithm name {:?} must be one word", self.algo)));
        }
        writeln!(
            w,
            "# M={} N={} fps={} cost={} algo={}",
            self.m, self.n, self.fps, self.cost, self.algo
        )?;
        for &(i, j) in self.path.pairs() {
            writeln!(w, "{i},{j}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses and validates the path against the header's `M` and `N`.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(Error::invalid("empty path file")),
        };
        let fields = header
            .strip_prefix('#')
            .ok_or_else(|| Error::invalid("path file must start with a '#' header"))?;
        let (mut m, mut n, mut fps, mut cost, mut algo) = (None, None, None, None, None);
        for field in fields.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("bad header field {field:?}")))?;
            let bad = || Error::invalid(format!("bad header value {field:?}"));
            match key {
                "M" => m = Some(value.parse::<usize>().map_err(|_| bad())?),
                "N" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "fps" => fps = Some(value.parse::<f64>().map_err(|_| bad())?),
                "cost" => cost = Some(value.parse::<f64>().map_err(|_| bad())?),
                "algo" => algo = Some(value.to_string()),
                _ => {}
            }
        }
        let missing = |k: &str| Error::invalid(format!("header lacks {k}="));
        let (m, n) = (m.ok_or_else(|| missing("M"))?, n.ok_or_else(|| missing("N"))?);

        let mut pairs = Vec::new();
        for (no, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
            pairs.push(parsed.ok_or_else(|| {
                Error::invalid(format!("line {}: expected \"i,j\", got {line:?}", no + 1))
            })?);
        }
        let path = WarpingPath::new(pairs);
        validate_path(&path, m, n).map_err(Error::InvalidPath)?;
        Ok(Self {
            m,
            n,
            fps: fps.ok_or_else(|| missing("fps"))?,
            cost: cost.ok_or_else(|| missing("cost"))?,
            algo: algo.ok_or_else(|| missing("algo"))?,
            path,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
