//! `swsc` command-line front end.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 format or I/O error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::archive::{
    read_archive, read_archive_header, read_weight, write_archive, write_weight, Dtype, MAX_CLUSTERS,
};
use crate::baseline::Granularity;
use crate::compressor::{
    compress_with, decompress, CompressOptions, StoragePrecision, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::error::SwscError;
use crate::metrics::{avg_bits, compare, gen_synthetic, CompareParams, StorageReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FORMAT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "swsc",
    version,
    about = "Channel-clustering weight compression with low-rank error compensation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a weight file into an SWSC archive.
    Compress(CompressArgs),
    /// Restore a weight file from an SWSC archive.
    Decompress(DecompressArgs),
    /// Print the storage report of an archive without decoding its payload.
    Stats(StatsArgs),
    /// Compare SWSC against round-to-nearest quantization on one weight file.
    Compare(CompareArgs),
    /// Write a synthetic clustered weight file.
    GenSynthetic(GenSyntheticArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DtypeArg {
    F16,
    F32,
}

impl From<DtypeArg> for Dtype {
    fn from(d: DtypeArg) -> Self {
        match d {
            DtypeArg::F16 => Dtype::F16,
            DtypeArg::F32 => Dtype::F32,
        }
    }
}

impl From<DtypeArg> for StoragePrecision {
    fn from(d: DtypeArg) -> Self {
        Dtype::from(d).into()
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GranularityArg {
    PerColumn,
    PerTensor,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::PerColumn => Granularity::PerColumn,
            GranularityArg::PerTensor => Granularity::PerTensor,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Number of channel clusters k.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=MAX_CLUSTERS as u64))]
    pub clusters: u64,
    /// Retained rank r of the residual compensation.
    #[arg(long, default_value_t = 0)]
    pub rank: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[command(flatten)]
    pub cluster: ClusterArgs,
    /// Storage width for centroids and factors.
    #[arg(long, value_enum, default_value = "f16")]
    pub dtype: DtypeArg,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Seeded K-Means initializations; the lowest objective is kept.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
    /// Run the clustering assignment step on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct DecompressArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Element type of the restored weight file.
    #[arg(long, value_enum, default_value = "f32")]
    pub dtype: DtypeArg,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub archive: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub cluster: ClusterArgs,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=8))]
    pub rtn_bits: u32,
    #[arg(long, value_enum, default_value = "per-column")]
    pub granularity: GranularityArg,
    /// Storage width assumed for SWSC values.
    #[arg(long, value_enum, default_value = "f16")]
    pub dtype: DtypeArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
}

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    pub output: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rows: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub cols: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub true_clusters: u64,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "f32")]
    pub dtype: DtypeArg,
}

pub fn exit_code(err: &SwscError) -> i32 {
    match err {
        SwscError::Parameter(_) | SwscError::Shape(_) => EXIT_USAGE,
        SwscError::Format { .. } | SwscError::Integrity(_) | SwscError::Io { .. } => EXIT_FORMAT,
        SwscError::Numerical { .. } => EXIT_NUMERICAL,
    }
}

fn to_usize(v: u64, what: &str) -> Result<usize, SwscError> {
    usize::try_from(v).map_err(|_| SwscError::Parameter(format!("{what} {v} is too large")))
}

fn print_report(out: &mut dyn Write, table: &str, kv: &str) -> std::io::Result<()> {
    write!(out, "{table}\n{kv}")
}

fn run_command(cmd: Command, out: &mut dyn Write) -> Result<(), SwscError> {
    let io_err = |e: std::io::Error| SwscError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match cmd {
        Command::Compress(args) => {
            if !(args.tol >= 0.0 && args.tol.is_finite()) {
                return Err(SwscError::Parameter(format!(
                    "--tol must be finite and >= 0, got {}",
                    args.tol
                )));
            }
            let w = read_weight(&args.input)?;
            let mut opts = CompressOptions::new(
                to_usize(args.cluster.clusters, "clusters")?,
                args.cluster.rank as usize,
                args.cluster.seed,
                args.dtype.into(),
            );
            opts.max_iter = to_usize(args.max_iter, "max-iter")?;
            opts.tol = args.tol;
            opts.restarts = to_usize(args.restarts, "restarts")?;
            opts.parallel = !args.sequential;
            let compressed = compress_with(&w, &opts)?;
            write_archive(&args.output, &compressed)?;
            let report = StorageReport::for_compressed(&compressed, true)?;
            print_report(out, &report.to_table(), &report.to_key_value()).map_err(io_err)?;
        }
        Command::Decompress(args) => {
            let compressed = read_archive(&args.input)?;
            let w = decompress(&compressed)?;
            write_weight(&args.output, &w, args.dtype.into())?;
        }
        Command::Stats(args) => {
            let h = read_archive_header(&args.archive)?;
            let report = avg_bits(
                h.rows,
                h.cols,
                h.k as u64,
                h.r as u64,
                h.dtype.size() as u32 * 8,
                true,
            )?;
            print_report(out, &report.to_table(), &report.to_key_value()).map_err(io_err)?;
        }
        Command::Compare(args) => {
            let w = read_weight(&args.input)?;
            let mut params = CompareParams::new(
                to_usize(args.cluster.clusters, "clusters")?,
                args.cluster.rank as usize,
                args.cluster.seed,
                args.rtn_bits,
                args.granularity.into(),
            );
            params.precision = args.dtype.into();
            params.restarts = to_usize(args.restarts, "restarts")?;
            params.parallel = true;
            let report = compare(&w, &params)?;
            print_report(out, &report.to_table(), &report.to_key_value()).map_err(io_err)?;
        }
        Command::GenSynthetic(args) => {
            let w = gen_synthetic(
                to_usize(args.rows, "rows")?,
                to_usize(args.cols, "cols")?,
                to_usize(args.true_clusters, "true-clusters")?,
                args.noise,
                args.seed,
            )?;
            write_weight(&args.output, &w, args.dtype.into())?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    match run_command(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
