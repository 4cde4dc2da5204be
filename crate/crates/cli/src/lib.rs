//! `linmdtw` command line: align feature files, compare paths, print memory
//! tables and generate synthetic test pairs.
//!
//! Exit codes: 0 on success, 2 for bad input, 3 when the textbook aligner
//! cannot get its quadratic table.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use linmdtw::eval::{
    discrepancy, discrepancy_bidirectional, memory_estimate, memreport, Algorithm, MemoryParams,
    DEFAULT_THRESHOLDS_FRAMES, DEFAULT_THRESHOLDS_SECONDS,
};
use linmdtw::io::{load_features, save_features, PathFile};
use linmdtw::linmem::DEFAULT_MIN_DIM;
use linmdtw::{
    dtw_full, fastdtw, linmdtw as align_linmdtw, linmdtw_with_progress, mrmsdtw, synth_pair,
    AlignmentResult, CellBudget, CostFunction, Error, FeatureSeries, LinMdtwConfig,
    OracleOptions, Precision, SynthConfig, SynthKind, TieRule,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "linmdtw", version, about = "Exact DTW alignment in linear memory")]
pub struct Cli {
    /// Worker threads; 0 picks one per core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Dtw,
    Linmdtw,
    Fastdtw,
    Mrmsdtw,
}

impl AlgoArg {
    fn name(self) -> &'static str {
        match self {
            AlgoArg::Dtw => "dtw",
            AlgoArg::Linmdtw => "linmdtw",
            AlgoArg::Fastdtw => "fastdtw",
            AlgoArg::Mrmsdtw => "mrmsdtw",
        }
    }

    fn memory_algorithm(self) -> Algorithm {
        match self {
            AlgoArg::Dtw => Algorithm::Textbook,
            AlgoArg::Linmdtw => Algorithm::LinMdtw,
            AlgoArg::Fastdtw => Algorithm::FastDtw,
            AlgoArg::Mrmsdtw => Algorithm::MrMsDtw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieArg {
    DiagFirst,
    LeftFirst,
    UpFirst,
}

impl From<TieArg> for TieRule {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::DiagFirst => TieRule::DiagFirst,
            TieArg::LeftFirst => TieRule::LeftFirst,
            TieArg::UpFirst => TieRule::UpFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    WarpedSine,
    RandomWalk,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align two feature files and write the warping path.
    Align {
        features_a: PathBuf,
        features_b: PathBuf,
        #[arg(long, value_enum, default_value_t = AlgoArg::Linmdtw)]
        algo: AlgoArg,
        /// FastDTW band radius.
        #[arg(long, default_value_t = 30)]
        radius: usize,
        /// MrMsDTW cell budget.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        /// linmdtw hands blocks with a side below this to the textbook aligner.
        #[arg(long, default_value_t = DEFAULT_MIN_DIM)]
        min_dim: usize,
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(32..=64))]
        precision: u32,
        #[arg(long, value_enum, default_value_t = TieArg::DiagFirst)]
        tie_rule: TieArg,
        /// Refuse textbook DTW tables with more cells than this.
        #[arg(long)]
        max_cells: Option<u64>,
        /// Print progress to stderr as cells processed over 2MN.
        #[arg(long)]
        progress: bool,
        /// Path file to write; defaults to stdout only reporting the summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrepancy between two path files.
    Compare {
        path_a: PathBuf,
        path_b: PathBuf,
        /// Thresholds in seconds, comma separated.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Bucket by whole frames (1, 2, 22, 43) instead of seconds.
        #[arg(long)]
        frames: bool,
        /// Also measure B against A and merge both directions.
        #[arg(long)]
        bidirectional: bool,
        /// Write the error distribution here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Memory needed by each aligner for two recordings of given lengths.
    Memreport {
        m_seconds: f64,
        n_seconds: f64,
        #[arg(long, default_value_t = 43.0664)]
        fps: f64,
        #[arg(long, default_value_t = 30)]
        radius: usize,
        /// MrMsDTW budgets; repeat for several.
        #[arg(long = "budget", default_values_t = [100_000u64, 10_000_000])]
        budgets: Vec<u64>,
    },
    /// Write a synthetic pair `<out>_a.lmdw` and `<out>_b.lmdw`.
    Synth {
        #[arg(long, value_enum, default_value_t = KindArg::WarpedSine)]
        kind: KindArg,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        /// Length of the warped copy; defaults to --length.
        #[arg(long)]
        length_b: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        warp_strength: f64,
        #[arg(long, default_value_t = 12)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Resource { .. } => EXIT_RESOURCE,
        _ => EXIT_INPUT,
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let threads = cli.threads;
    match cli.command {
        Command::Align {
            features_a,
            features_b,
            algo,
            radius,
            budget,
            min_dim,
            precision,
            tie_rule,
            max_cells,
            progress,
            out: path_out,
        } => {
            let opts = AlignOptions {
                algo,
                radius,
                budget,
                min_dim,
                precision: Precision::from_bits(precision)?,
                tie_rule: tie_rule.into(),
                max_cells,
                progress,
                threads,
            };
            cmd_align(&features_a, &features_b, &opts, path_out.as_deref(), out, err)
        }
        Command::Compare { path_a, path_b, thresholds, frames, bidirectional, out: dist } => {
            cmd_compare(&path_a, &path_b, thresholds, frames, bidirectional, dist.as_deref(), out)
        }
        Command::Memreport { m_seconds, n_seconds, fps, radius, budgets } => {
            let rep = memreport(m_seconds, n_seconds, fps, radius, &budgets)?;
            write!(out, "{rep}")?;
            Ok(())
        }
        Command::Synth { kind, length, length_b, seed, warp_strength, dim, out: prefix } => {
            let kind = match kind {
                KindArg::WarpedSine => SynthKind::WarpedSine,
                KindArg::RandomWalk => SynthKind::RandomWalk,
            };
            let cfg = SynthConfig { kind, length, length_b, seed, warp_strength, dim };
            cmd_synth(&cfg, &prefix, out)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AlignOptions {
    pub algo: AlgoArg,
    pub radius: usize,
    pub budget: u64,
    pub min_dim: usize,
    pub precision: Precision,
    pub tie_rule: TieRule,
    pub max_cells: Option<u64>,
    pub progress: bool,
    /// 0 for one per core; 1 disables parallel sweeps.
    pub threads: usize,
}

pub fn align(
    x: &FeatureSeries,
    y: &FeatureSeries,
    opts: &AlignOptions,
) -> Result<AlignmentResult, Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {} threads: {e}", opts.threads)))?;
    pool.install(|| align_on_pool(x, y, opts))
}

fn align_on_pool(
    x: &FeatureSeries,
    y: &FeatureSeries,
    opts: &AlignOptions,
) -> Result<AlignmentResult, Error> {
    let cost = CostFunction::Euclidean;
    let parallel = opts.threads != 1;
    match opts.algo {
        AlgoArg::Dtw => {
            let oracle = OracleOptions {
                tie_rule: opts.tie_rule,
                precision: opts.precision,
                max_cells: opts.max_cells,
            };
            dtw_full(x, y, cost, oracle)
        }
        AlgoArg::Linmdtw => {
            let cfg = LinMdtwConfig {
                min_dim: opts.min_dim,
                precision: opts.precision,
                tie_rule: opts.tie_rule,
                parallel_halves: parallel,
                parallel_diagonals: parallel,
                ..LinMdtwConfig::default()
            };
            if opts.progress {
                // Straight to the process stderr so updates appear while the job runs.
                let report = |done: u64, total: u64| {
                    eprintln!("progress {:.1}% ({done}/{total} cells)", 100.0 * done as f64 / total as f64);
                };
                linmdtw_with_progress(x, y, cost, cfg, &report)
            } else {
                align_linmdtw(x, y, cost, cfg)
            }
        }
        AlgoArg::Fastdtw => fastdtw(x, y, cost, opts.radius),
        AlgoArg::Mrmsdtw => mrmsdtw(x, y, cost, CellBudget::new(opts.budget)?),
    }
}

pub fn cmd_align(
    a: &Path,
    b: &Path,
    opts: &AlignOptions,
    path_out: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Error> {
    let (x, y) = (load_features(a)?, load_features(b)?);
    let (m, n) = (x.len(), y.len());
    let params = MemoryParams { radius: opts.radius, max_cells: opts.budget };
    let estimate = memory_estimate(opts.algo.memory_algorithm(), m, n, params)?;
    let result = match align(&x, &y, opts) {
        Err(e @ Error::Resource { .. }) => {
            let lin = memory_estimate(Algorithm::LinMdtw, m, n, params)?;
            writeln!(
                err,
                "textbook DTW on {m}x{n} frames needs {} bytes; linmdtw needs about {} bytes",
                estimate.bytes, lin.bytes
            )?;
            return Err(e);
        }
        other => other?,
    };
    writeln!(out, "algo: {}", opts.algo.name())?;
    writeln!(out, "M: {m}")?;
    writeln!(out, "N: {n}")?;
    writeln!(out, "cost: {}", result.cost)?;
    writeln!(out, "precision: {}", result.precision.bits())?;
    writeln!(out, "cells_processed: {}", result.cells_processed)?;
    writeln!(out, "cells_ratio: {:.6}", result.cells_ratio(m, n))?;
    writeln!(out, "peak_retained: {}", result.peak_retained)?;
    writeln!(out, "estimated_cells: {}", estimate.cells)?;
    writeln!(out, "estimated_bytes: {}", estimate.bytes)?;
    if let Some(p) = path_out {
        let file = PathFile {
            m,
            n,
            fps: x.frame_rate(),
            cost: result.cost,
            algo: opts.algo.name().to_string(),
            path: result.path,
        };
        file.save(p)?;
        writeln!(out, "path: {}", p.display())?;
    }
    Ok(())
}

pub fn cmd_compare(
    a: &Path,
    b: &Path,
    thresholds: Option<Vec<f64>>,
    frames: bool,
    bidirectional: bool,
    dist_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let (pa, pb) = (PathFile::load(a)?, PathFile::load(b)?);
    if (pa.m, pa.n) != (pb.m, pb.n) {
        return Err(Error::InvalidInput(format!(
            "paths are for {}x{} and {}x{}",
            pa.m, pa.n, pb.m, pb.n
        )));
    }
    let report = if bidirectional {
        discrepancy_bidirectional(&pa.path, &pb.path, pa.fps)?
    } else {
        discrepancy(&pa.path, &pb.path, pa.fps)?
    };
    let seconds = thresholds.unwrap_or_else(|| DEFAULT_THRESHOLDS_SECONDS.to_vec());
    writeln!(out, "errors: {}", report.errors.len())?;
    writeln!(out, "max_error_frames: {}", report.max_error())?;
    if frames {
        for (t, p) in DEFAULT_THRESHOLDS_FRAMES.iter().zip(report.proportion_below_frames(&DEFAULT_THRESHOLDS_FRAMES)) {
            writeln!(out, "<= {t} frames: {p:.6}")?;
        }
    } else {
        for (t, p) in seconds.iter().zip(report.proportion_below(&seconds)) {
            writeln!(out, "<= {t} s: {p:.6}")?;
        }
    }
    if let Some(path) = dist_out {
        let mut w = BufWriter::new(File::create(path)?);
        report.write_to(&mut w, &seconds)?;
        w.flush()?;
    }
    Ok(())
}

pub fn cmd_synth(cfg: &SynthConfig, prefix: &Path, out: &mut dyn Write) -> Result<(), Error> {
    let (a, b) = synth_pair(cfg)?;
    let name = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    let (pa, pb) = (name("_a.lmdw"), name("_b.lmdw"));
    save_features(&a, &pa)?;
    save_features(&b, &pb)?;
    writeln!(
        out,
        "kind={} seed={} warp_strength={} length={} length_b={} dim={}",
        cfg.kind.name(),
        cfg.seed,
        cfg.warp_strength,
        a.len(),
        b.len(),
        cfg.dim
    )?;
    writeln!(out, "{}\n{}", pa.display(), pb.display())?;
    Ok(())
}
