//! Seeded synthetic series pairs where the second is a smooth time warp of
//! the first.

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::FeatureSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SynthKind {
    /// Sums of a few sinusoids per dimension.
    #[default]
    WarpedSine,
    /// Gaussian-ish random walk, linearly interpolated for the warped copy.
    RandomWalk,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::WarpedSine => "warped-sine",
            SynthKind::RandomWalk => "random-walk",
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "warped-sine" | "sine" => Ok(SynthKind::WarpedSine),
            "random-walk" | "walk" => Ok(SynthKind::RandomWalk),
            other => Err(Error::invalid(format!("unknown synth kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub kind: SynthKind,
    pub length: usize,
    /// Length of the warped copy; defaults to `length`.
    pub length_b: Option<usize>,
    pub seed: u64,
    /// Amplitude `a` in `[0, 1)` of the warp `u + a·sin(2πku)/(2πk)`.
    pub warp_strength: f64,
    pub dim: usize,
}

impl SynthConfig {
    pub fn new(kind: SynthKind, length: usize, seed: u64, warp_strength: f64) -> Self {
        Self { kind, length, length_b: None, seed, warp_strength, dim: 1 }
    }
}

/// Returns `(X, Y)` with `Y[j] = X(w(j))` for a monotone warp `w`. With zero
/// warp strength and equal lengths, `Y == X`.
pub fn synth_pair(cfg: &SynthConfig) -> Result<(FeatureSeries, FeatureSeries)> {
    let la = cfg.length;
    let lb = cfg.length_b.unwrap_or(la);
    if la < 2 || lb < 2 {
        return Err(Error::invalid("synthetic series need at least two frames"));
    }
    if cfg.dim == 0 {
        return Err(Error::invalid("feature dimension must be at least 1"));
    }
    if !(0.0..1.0).contains(&cfg.warp_strength) {
        return Err(Error::invalid(format!(
            "warp strength must lie in [0, 1), got {}",
            cfg.warp_strength
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cycles = rng.gen_range(1..=3) as f64;
    let span = (la - 1) as f64;
    // Fractional position in X of each frame of Y.
    let positions: Vec<f64> = (0..lb)
        .map(|j| {
            let base = (j as f64 * span) / (lb - 1) as f64;
            let u = base / span;
            let offset = cfg.warp_strength * (TAU * cycles * u).sin() / (TAU * cycles);
            (base + offset * span).clamp(0.0, span)
        })
        .collect();

    let (a, b) = match cfg.kind {
        SynthKind::WarpedSine => {
            let comps: Vec<Vec<(f64, f64, f64)>> = (0..cfg.dim)
                .map(|_| {
                    (0..3)
                        .map(|_| {
                            (
                                rng.gen_range(0.3..1.0),
                                rng.gen_range(2.0..12.0),
                                rng.gen_range(0.0..TAU),
                            )
                        })
                        .collect()
                })
                .collect();
            let eval = |pos: f64| -> Vec<f32> {
                let u = pos / span;
                comps
                    .iter()
                    .map(|c| c.iter().map(|&(amp, f, ph)| amp * (TAU * f * u + ph).sin()).sum::<f64>() as f32)
                    .collect()
            };
            let a: Vec<f32> = (0..la).flat_map(|i| eval(i as f64)).collect();
            let b: Vec<f32> = positions.iter().flat_map(|&p| eval(p)).collect();
            (a, b)
        }
        SynthKind::RandomWalk => {
            let mut level = vec![0.0f32; cfg.dim];
            let mut a = Vec::with_capacity(la * cfg.dim);
            for _ in 0..la {
                for v in level.iter_mut() {
                    *v += rng.gen_range(-1.0f32..1.0);
                }
                a.extend_from_slice(&level);
            }
            let d = cfg.dim;
            let b = positions
                .iter()
                .flat_map(|&p| {
                    let i0 = (p.floor() as usize).min(la - 1);
                    let t = p - i0 as f64;
                    let a = &a;
                    (0..d).map(move |k| {
                        if t == 0.0 {
                            a[i0 * d + k]
                        } else {
                            let (x0, x1) = (a[i0 * d + k] as f64, a[(i0 + 1) * d + k] as f64);
                            (x0 + t * (x1 - x0)) as f32
                        }
                    })
                })
                .collect();
            (a, b)
        }
    };
    Ok((FeatureSeries::new(a, cfg.dim)?, FeatureSeries::new(b, cfg.dim)?))
}
