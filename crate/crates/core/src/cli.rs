//! The `tubal` command line driver.
//!
//! Exit codes: 0 on success, 1 on runtime failures (including an ADMM run that did not
//! converge), 2 on usage errors. `TUBAL_THREADS` caps the worker pool (0 or unset means
//! one worker per core).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Result, TubalError};
use crate::io::{self, MetricsRow};
use crate::linalg::RANK_DROP_TOL;
use crate::rtsvd::rtsvd_fixed;
use crate::synth::{SynthKind, SynthSpec};
use crate::tensor::{FDiagonalTensor, Tensor3};
use crate::trpca::{trpca_admm, InnerSolver, TrpcaParams};
use crate::tsvd::{fourier_spectra, tsvd_truncated};
use crate::turank::{estimated_tube_error, r_turank, RankReport, TurankParams};

#[derive(Parser, Debug)]
#[command(name = "tubal", version, about = "Tubal rank revealing, t-SVD and tensor robust PCA", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic tensor.
    Synth(SynthArgs),
    /// Truncated t-SVD with a fixed number of terms.
    Tsvd(TsvdArgs),
    /// Randomized t-SVD with a fixed truncation and a threshold.
    Rtsvd(RtsvdArgs),
    /// Adaptive randomized tubal rank revealing under a threshold.
    Turank(TurankArgs),
    /// Tensor robust PCA by ADMM; writes the low-rank and sparse parts.
    Trpca(TrpcaArgs),
    /// Benchmarks.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Stack PGM images into a TNS3 tensor.
    Ingest(IngestArgs),
}

#[derive(Subcommand, Debug)]
pub enum BenchCommand {
    /// Compare methods over thresholds and seeds; one CSV row per run.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(name = "tensorI")]
    TensorI,
    #[value(name = "tensorII")]
    TensorII,
    #[value(name = "lowrank")]
    LowRank,
    #[value(name = "sparse")]
    Sparse,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub n1: usize,
    #[arg(long)]
    pub n2: usize,
    #[arg(long)]
    pub n3: usize,
    /// Tubal rank for `lowrank`.
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    /// Fraction of corrupted entries for `sparse`.
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    /// Spike magnitude for `sparse`.
    #[arg(long, default_value_t = 1.0)]
    pub magnitude: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TsvdArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RtsvdArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub tau: f64,
    #[arg(long = "K")]
    pub k_trunc: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TurankArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, required_unless_present = "tau_energy")]
    pub tau: Option<f64>,
    /// Sets the threshold to `rho ||A||_F / n3`, overriding `--tau`.
    #[arg(long)]
    pub tau_energy: Option<f64>,
    #[arg(long)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Estimated and exact singular value tubes, one row per (fiber, entry).
    #[arg(long)]
    pub sv_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InnerArg {
    Exact,
    Rand,
}

#[derive(Args, Debug)]
pub struct TrpcaArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Defaults to `1 / sqrt(max(n1, n2) n3)`.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub mu0: f64,
    #[arg(long, default_value_t = 1.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e10)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = InnerArg::Exact)]
    pub inner: InnerArg,
    #[arg(long, default_value_t = 5)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ground-truth low-rank tensor; when given, `re` is measured against it.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out_l: Option<PathBuf>,
    #[arg(long)]
    pub out_e: Option<PathBuf>,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Tsvd,
    Turank,
    Rtsvd,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub taus: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "tsvd,turank")]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 10)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Truncation for `rtsvd`; defaults to the exact tubal rank at each threshold plus 5.
    #[arg(long = "K")]
    pub k_trunc: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// PGM files or directories of PGM files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = LayoutArg::Lateral)]
    pub layout: LayoutArg,
    /// Treat every input as one colour channel and build the `(h w) x frames x channels` tensor.
    #[arg(long)]
    pub channels: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Lateral,
    Frontal,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("TUBAL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("TUBAL_THREADS={raw:?} is not a worker count"))?;
    // A pool that already exists (repeated calls in one process) is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Synth(a) => synth(a).map(|_| 0),
        Command::Tsvd(a) => {
            let t = io::read_tns3(&a.input)?;
            let row = tsvd_row(&t, a.k)?;
            emit(a.metrics.as_deref(), &[row]).map(|_| 0)
        }
        Command::Rtsvd(a) => {
            let t = io::read_tns3(&a.input)?;
            let row = rtsvd_row(&t, a.tau, a.k_trunc, a.p, a.q, a.seed)?;
            emit(a.metrics.as_deref(), &[row]).map(|_| 0)
        }
        Command::Turank(a) => turank(a).map(|_| 0),
        Command::Trpca(a) => trpca(a),
        Command::Bench { command: BenchCommand::Compare(a) } => compare(a).map(|_| 0),
        Command::Ingest(a) => {
            let t = if a.channels {
                io::read_video_channels(&a.inputs)?
            } else {
                let layout = match a.layout {
                    LayoutArg::Lateral => io::Layout::Lateral,
                    LayoutArg::Frontal => io::Layout::Frontal,
                };
                io::read_pgm_stack(&a.inputs, layout)?
            };
            let (n1, n2, n3) = t.dims();
            io::write_tns3(&t, &a.out)?;
            eprintln!("wrote {n1}x{n2}x{n3} tensor to {}", a.out.display());
            Ok(0)
        }
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    let kind = match a.kind {
        KindArg::TensorI => SynthKind::TensorI,
        KindArg::TensorII => SynthKind::TensorII,
        KindArg::LowRank => SynthKind::LowRank { r: a.rank },
        KindArg::Sparse => SynthKind::Sparse { density: a.density, magnitude: a.magnitude },
    };
    let t = SynthSpec { kind, n1: a.n1, n2: a.n2, n3: a.n3, seed: a.seed }.generate()?;
    io::write_tns3(&t, &a.out)
}

/// Writes to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, rows: &[MetricsRow]) -> Result<()> {
    match path {
        Some(p) => io::write_metrics_file(p, rows),
        None => io::write_metrics(std::io::stdout().lock(), rows),
    }
}

fn relative_error(a: &Tensor3, approx: &Tensor3) -> Result<f64> {
    let norm = a.frobenius_norm();
    let diff = (a - approx).frobenius_norm();
    Ok(if norm > 0.0 { diff / norm } else { diff })
}

fn tsvd_row(t: &Tensor3, k: usize) -> Result<MetricsRow> {
    let start = Instant::now();
    let factors = tsvd_truncated(t, k)?;
    let approx = factors.reconstruct()?;
    let wall = start.elapsed().as_secs_f64();
    let mut row = MetricsRow::new("tsvd", t.dims());
    row.k = Some(k);
    row.multirank = fourier_spectra(t)?
        .iter()
        .map(|s| {
            let floor = RANK_DROP_TOL * s.first().copied().unwrap_or(0.0);
            s.iter().take(k).filter(|&&v| v > floor).count()
        })
        .collect();
    row.re = relative_error(t, &approx)?;
    row.wall_time_s = wall;
    Ok(row)
}

fn rtsvd_row(t: &Tensor3, tau: f64, k_trunc: usize, p: usize, q: usize, seed: u64) -> Result<MetricsRow> {
    let res = rtsvd_fixed(t, tau, k_trunc, p, q, seed)?;
    let mut row = MetricsRow::new("rtsvd", t.dims());
    row.seed = Some(seed);
    row.q = Some(q);
    row.tau = Some(tau);
    row.k = Some(k_trunc);
    row.p = Some(p);
    row.multirank = res.multirank.ranks.clone();
    row.re = relative_error(t, &res.approx)?;
    row.wall_time_s = res.elapsed.as_secs_f64();
    Ok(row)
}

/// Exact singular value tensor of `t`.
fn exact_s(t: &Tensor3) -> Result<FDiagonalTensor> {
    Ok(tsvd_truncated(t, t.n1().min(t.n2()))?.s)
}

fn turank_row(t: &Tensor3, report: &RankReport, params: &TurankParams, exact: &FDiagonalTensor) -> Result<MetricsRow> {
    let mut row = MetricsRow::new("turank", t.dims());
    row.seed = Some(params.seed);
    row.b = Some(params.b);
    row.q = Some(params.q);
    row.tau = Some(params.tau);
    row.multirank = report.multirank.ranks.clone();
    row.re = relative_error(t, &report.approx)?;
    row.re_tubsv = (0..report.tubal_rank())
        .map(|j| estimated_tube_error(&report.s_est, exact, j))
        .collect::<Result<_>>()?;
    row.wall_time_s = report.elapsed.as_secs_f64();
    Ok(row)
}

fn turank(a: &TurankArgs) -> Result<()> {
    let t = io::read_tns3(&a.input)?;
    let tau = match (a.tau_energy, a.tau) {
        (Some(rho), _) => rho * t.frobenius_norm() / t.n3() as f64,
        (None, Some(tau)) => tau,
        (None, None) => return Err(TubalError::Parameter("a threshold is required".into())),
    };
    let params = TurankParams::new(a.b, tau, a.q, a.seed);
    let report = r_turank(&t, &params)?;
    let exact = exact_s(&t)?;
    let row = turank_row(&t, &report, &params, &exact)?;
    if let Some(path) = &a.sv_out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["fiber", "entry", "estimated", "exact"])?;
        for j in 0..report.tubal_rank() {
            for (k, (est, tru)) in report.s_est.tube(j).iter().zip(exact.tube(j)).enumerate() {
                w.write_record([(j + 1).to_string(), (k + 1).to_string(), est.to_string(), tru.to_string()])?;
            }
        }
        w.flush()?;
    }
    emit(a.metrics.as_deref(), &[row])
}

fn trpca(a: &TrpcaArgs) -> Result<i32> {
    let t = io::read_tns3(&a.input)?;
    let (n1, n2, n3) = t.dims();
    let mut params = TrpcaParams::for_shape(n1, n2, n3);
    if let Some(l) = a.lambda {
        params.lambda = l;
    }
    params.mu0 = a.mu0;
    params.rho = a.rho;
    params.mu_max = a.mu_max;
    params.tol = a.tol;
    params.max_iters = a.max_iters;
    if a.inner == InnerArg::Rand {
        params.inner = InnerSolver::Randomized { b: a.b, q: a.q, seed: a.seed };
    }
    let start = Instant::now();
    let state = trpca_admm(&t, &params)?;
    let wall = start.elapsed().as_secs_f64();

    let mut row = MetricsRow::new(if a.inner == InnerArg::Rand { "trpca-rand" } else { "trpca-exact" }, t.dims());
    if a.inner == InnerArg::Rand {
        row.seed = Some(a.seed);
        row.b = Some(a.b);
        row.q = Some(a.q);
    }
    row.lambda = Some(params.lambda);
    row.mu0 = Some(params.mu0);
    row.multirank = crate::tsvd::exact_multirank(&state.l, (RANK_DROP_TOL * state.l.norm(crate::tensor::Norm::Spectral)).max(f64::MIN_POSITIVE))?.ranks;
    row.re = match &a.truth {
        Some(path) => relative_error(&io::read_tns3(path)?, &state.l)?,
        None => state.residuals.last().copied().unwrap_or(0.0),
    };
    row.iterations = Some(state.iterations);
    row.converged = Some(state.converged);
    row.wall_time_s = wall;

    if let Some(p) = &a.out_l {
        io::write_tns3(&state.l, p)?;
    }
    if let Some(p) = &a.out_e {
        io::write_tns3(&state.e, p)?;
    }
    emit(a.metrics.as_deref(), &[row])?;
    if state.converged {
        Ok(0)
    } else {
        eprintln!("error: ADMM stopped after {} iterations without reaching tol {}", state.iterations, params.tol);
        Ok(1)
    }
}

fn compare(a: &CompareArgs) -> Result<()> {
    let t = io::read_tns3(&a.input)?;
    let spectra = fourier_spectra(&t)?;
    let exact = if a.methods.contains(&MethodArg::Turank) { Some(exact_s(&t)?) } else { None };
    let max_k = t.n1().min(t.n2());
    let mut rows = Vec::new();
    for &tau in &a.taus {
        let exact_nu = crate::tsvd::multirank_from_spectra(&spectra, tau).tubal_rank;
        for &seed in &a.seeds {
            let mut matched = exact_nu;
            if let Some(exact) = &exact {
                let params = TurankParams::new(a.b, tau, a.q, seed);
                let report = r_turank(&t, &params)?;
                matched = report.tubal_rank();
                rows.push(turank_row(&t, &report, &params, exact)?);
            }
            if a.methods.contains(&MethodArg::Tsvd) && matched > 0 {
                let mut row = tsvd_row(&t, matched)?;
                row.tau = Some(tau);
                row.seed = Some(seed);
                rows.push(row);
            }
            if a.methods.contains(&MethodArg::Rtsvd) {
                let k_trunc = a.k_trunc.unwrap_or(exact_nu + 5).clamp(1, max_k.saturating_sub(1).max(1));
                let p = a.p.min(t.n2() - k_trunc);
                rows.push(rtsvd_row(&t, tau, k_trunc, p, a.q, seed)?);
            }
        }
    }
    emit(a.metrics.as_deref(), &rows)
}
