//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a cross-check found a disagreement, 2 usage or
//! resource-guard errors, 3 infeasible or out-of-range models, 4 I/O and
//! parse failures. Every error is reported as one `error[kind]: reason`
//! line on the diagnostic stream.
//!
//! `--config FILE` reads `key = value` lines; each becomes `--key value`
//! placed ahead of the explicit flags, so explicit flags win. A value of
//! `true` turns on a switch and `false` leaves it off.

use std::ffi::OsString;
use std::fmt::Debug;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::conditional::{fmt_prob, oracle_deviation, sierpinski_matrix, NumericMode};
use crate::detector::{
    equivalent_efficiency, parse_pair_table, AcquisitionParams, CalibrationCurve,
    DetectorArrayModel, SourceModel,
};
use crate::entropy::{
    classical_model_report, classical_report, conditional_min_entropy,
    conditional_min_entropy_general, no_source_info_entropy, optimize_mu, sweep_mu,
    write_sweep_csv, EntropyReport, TruncationPolicy,
};
use crate::error::{Error, Result};
use crate::extractor::{bits_from_bytes, bits_from_hex, bytes_from_bits, toeplitz_extract, DEFAULT_EPS_SEC};
use crate::frames::{read_frames, write_frames, write_side_info};
use crate::simulator::{empirical_bit_prob, empirical_guess_rate, simulate_frames, SimSeed};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "qrng-entropy", version, about = "Min-entropy certification for gated photon-counting arrays")]
struct Cli {
    /// Worker threads; falls back to QRNG_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat key=value file of default flag values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one entropy report.
    #[command(args_override_self = true)]
    Entropy(EntropyArgs),
    /// Entropies over a grid of illumination levels (CSV).
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Turn a measured `mu,p1` table into a `mu,eta` efficiency curve.
    #[command(args_override_self = true)]
    Calibrate(CalibrateArgs),
    /// Simulate frames into a frame file.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Dense P(x | n, s) matrix (CSV).
    #[command(args_override_self = true)]
    Sierpinski(SierpinskiArgs),
    /// Compare the closed form with arrangement enumeration.
    #[command(args_override_self = true)]
    OracleCheck(OracleArgs),
    /// Play the guessing game and compare with the computed probability.
    #[command(args_override_self = true)]
    GuessSim(GuessArgs),
    /// Toeplitz-hash a frame file.
    #[command(args_override_self = true)]
    Extract(ExtractArgs),
    /// Time the uniform-efficiency evaluation.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    Poisson,
    Fixed,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Adversary knows photon number and activation pattern.
    Conditional,
    /// Adversary knows only the activation pattern.
    NoPhotonInfo,
    /// No adversary.
    Classical,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Numeric {
    Exact,
    Log,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Number of pixels M.
    #[arg(long)]
    pixels: Option<usize>,
    /// Mean photons per pixel per frame.
    #[arg(long)]
    mu_px: Option<f64>,
    /// Uniform equivalent efficiency.
    #[arg(long)]
    eta: Option<f64>,
    /// Per-pixel efficiencies, comma separated.
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    /// `mu,eta` calibration curve file.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SourceKind::Poisson)]
    source: SourceKind,
    /// Photon number of a fixed source.
    #[arg(long)]
    photons: Option<u64>,
    /// Frame rate in Hz.
    #[arg(long, default_value_t = 49_000.0)]
    rate: f64,
    /// Integration time in seconds.
    #[arg(long, default_value_t = 200e-9)]
    integration_time: f64,
}

#[derive(Args, Debug, Clone)]
struct TruncArgs {
    /// Photon-number tail mass left out.
    #[arg(long, default_value_t = 1e-15)]
    eps_n: f64,
    /// Status-weight tail mass left out.
    #[arg(long, default_value_t = 1e-15)]
    eps_s: f64,
    /// Hard cap on the photon number summed.
    #[arg(long)]
    n_max: Option<u64>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    trunc: TruncArgs,
    #[arg(long, value_enum, default_value_t = Mode::Conditional)]
    mode: Mode,
    /// Measured click probability (classical mode only).
    #[arg(long)]
    p1: Option<f64>,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    trunc: TruncArgs,
    /// Explicit grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    mu_grid: Option<Vec<f64>>,
    #[arg(long)]
    mu_start: Option<f64>,
    #[arg(long)]
    mu_stop: Option<f64>,
    #[arg(long)]
    mu_step: Option<f64>,
    /// Search [mu-start, mu-stop] for the best secure rate.
    #[arg(long)]
    optimize: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Table with header `mu,p1`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long)]
    output: PathBuf,
    /// Companion file for photon numbers and activation patterns.
    #[arg(long)]
    side_info: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SierpinskiArgs {
    #[arg(long)]
    pixels: usize,
    #[arg(long)]
    photons: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, default_value_t = 5)]
    max_pixels: usize,
    #[arg(long, default_value_t = 6)]
    max_photons: u64,
    #[arg(long, value_enum, default_value_t = Numeric::Exact)]
    numeric: Numeric,
}

#[derive(Args, Debug)]
struct GuessArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    trunc: TruncArgs,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    trunc: TruncArgs,
    /// Frame file to hash.
    #[arg(long)]
    input: PathBuf,
    /// Raw seed bytes, read most significant bit first.
    #[arg(long, conflicts_with = "seed_hex")]
    seed_file: Option<PathBuf>,
    #[arg(long)]
    seed_hex: Option<String>,
    /// Certified entropy per frame; computed from the model when absent.
    #[arg(long)]
    entropy_per_frame: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPS_SEC)]
    eps_sec: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 256)]
    pixels: usize,
    #[arg(long, default_value_t = 0.1)]
    mu_px: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, default_value_t = 1e-15)]
    eps: f64,
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Done,
    CheckFailed(String),
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

impl ModelArgs {
    fn acquisition(&self) -> Result<AcquisitionParams> {
        AcquisitionParams::new(self.integration_time, self.rate)
    }

    fn pixels(&self) -> Result<usize> {
        match (&self.etas, self.pixels) {
            (Some(e), Some(p)) if e.len() != p => Err(usage(format!(
                "--etas lists {} values but --pixels is {p}",
                e.len()
            ))),
            (Some(e), _) => Ok(e.len()),
            (None, Some(p)) => Ok(p),
            (None, None) => Err(usage("--pixels is required")),
        }
    }

    fn curve(&self) -> Result<Option<CalibrationCurve>> {
        self.calibration.as_deref().map(CalibrationCurve::read).transpose()
    }

    /// Array model at illumination `mu_px` (used only with a calibration curve).
    fn model(&self, mu_px: f64) -> Result<DetectorArrayModel> {
        let acq = self.acquisition()?;
        let pixels = self.pixels()?;
        let given = [self.eta.is_some(), self.etas.is_some(), self.calibration.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(usage("give exactly one of --eta, --etas, --calibration"));
        }
        if let Some(etas) = &self.etas {
            return DetectorArrayModel::per_pixel(etas.clone(), acq);
        }
        let eta = match (self.eta, self.curve()?) {
            (Some(e), _) => e,
            (None, Some(c)) => c.eta_at(mu_px)?,
            (None, None) => unreachable!("checked above"),
        };
        DetectorArrayModel::uniform(pixels, eta, acq)
    }

    fn mu_px(&self) -> Result<f64> {
        self.mu_px.ok_or_else(|| usage("--mu-px is required"))
    }

    fn source(&self, pixels: usize) -> Result<SourceModel> {
        match self.source {
            SourceKind::Fixed => self
                .photons
                .map(SourceModel::fixed)
                .ok_or_else(|| usage("--source fixed needs --photons")),
            SourceKind::Poisson => SourceModel::poisson_per_pixel(self.mu_px()?, pixels),
        }
    }

    /// Model and source for a single evaluation.
    fn resolve(&self) -> Result<(DetectorArrayModel, SourceModel)> {
        let pixels = self.pixels()?;
        let source = self.source(pixels)?;
        let model = self.model(source.mean_per_pixel(pixels))?;
        Ok((model, source))
    }
}

impl TruncArgs {
    fn policy(&self) -> Result<TruncationPolicy> {
        TruncationPolicy::new(self.eps_n, self.eps_s, self.n_max)
    }
}

fn fmt_h(v: f64) -> String {
    format!("{v:.11e}")
}

/// Whole-number rates print as integers, everything else in exponent form.
fn fmt_rate(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        fmt_prob(v)
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Comment lines heading every text artifact.
fn artifact_header(command: &str, config: &impl Debug, inputs: &[&Path]) -> Result<Vec<String>> {
    let mut lines = vec![
        format!("qrng-entropy {VERSION}"),
        format!("command: {command}"),
        format!("config: {config:?}"),
    ];
    for p in inputs {
        lines.push(format!("input: {} sha256={}", p.display(), sha256_file(p)?));
    }
    Ok(lines)
}

fn write_text(path: Option<&Path>, text: &str, out: &mut (dyn Write + Send)) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn with_comments(comments: &[String], body: &str) -> String {
    let mut s: String = comments.iter().map(|c| format!("# {c}\n")).collect();
    s.push_str(body);
    s
}

fn print_report(r: &EntropyReport, out: &mut (dyn Write + Send)) -> Result<()> {
    writeln!(out, "mode: {}", r.mode)?;
    writeln!(out, "pixels: {}", r.pixels)?;
    writeln!(out, "mu_px: {}", fmt_prob(r.mu_px))?;
    match r.eta {
        Some(e) => writeln!(out, "eta: {}", fmt_prob(e))?,
        None => writeln!(out, "eta: per-pixel")?,
    }
    writeln!(out, "h_classical_bits: {}", fmt_h(r.h_classical))?;
    writeln!(out, "h_conditional_bits: {}", fmt_h(r.h_conditional))?;
    writeln!(out, "p_guess: {}", fmt_prob(r.p_guess))?;
    writeln!(out, "truncation_bound: {}", fmt_prob(r.truncation_bound))?;
    writeln!(out, "n_range: {}..={}", r.n_range.0, r.n_range.1)?;
    writeln!(out, "r_range: {}..={}", r.r_range.0, r.r_range.1)?;
    writeln!(out, "terms: {}", r.terms)?;
    writeln!(out, "secure_rate_bps: {}", fmt_rate(r.secure_rate))?;
    writeln!(out, "wall_time_s: {:.6}", r.wall_time.as_secs_f64())?;
    Ok(())
}

fn report_csv(r: &EntropyReport) -> String {
    format!(
        "mode,pixels,mu_px,eta,h_classical,h_conditional,p_guess,truncation_bound,n_lo,n_hi,r_lo,r_hi,terms,secure_rate_bps\n\
         {},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.mode,
        r.pixels,
        fmt_prob(r.mu_px),
        r.eta.map_or("per-pixel".into(), fmt_prob),
        fmt_h(r.h_classical),
        fmt_h(r.h_conditional),
        fmt_prob(r.p_guess),
        fmt_prob(r.truncation_bound),
        r.n_range.0,
        r.n_range.1,
        r.r_range.0,
        r.r_range.1,
        r.terms,
        r.secure_rate
    )
}

fn conditional_report(
    model: &DetectorArrayModel,
    source: &SourceModel,
    policy: &TruncationPolicy,
) -> Result<EntropyReport> {
    if model.uniform_eta().is_some() {
        conditional_min_entropy(model, source, policy)
    } else {
        conditional_min_entropy_general(model, source, policy)
    }
}

fn cmd_entropy(a: &EntropyArgs, out: &mut (dyn Write + Send)) -> Result<Outcome> {
    let policy = a.trunc.policy()?;
    let report = match (a.mode, a.p1) {
        (Mode::Classical, Some(p1)) => classical_report(a.model.pixels()?, p1, a.model.acquisition()?)?,
        (_, Some(_)) => return Err(usage("--p1 applies to --mode classical only")),
        (mode, None) => {
            let (model, source) = a.model.resolve()?;
            match mode {
                Mode::Classical => classical_model_report(&model, &source)?,
                Mode::Conditional => conditional_report(&model, &source, &policy)?,
                Mode::NoPhotonInfo => no_source_info_entropy(&model, &source, &policy)?,
            }
        }
    };
    print_report(&report, out)?;
    if let Some(path) = &a.csv {
        let inputs: Vec<&Path> = a.model.calibration.iter().map(PathBuf::as_path).collect();
        let head = artifact_header("entropy", a, &inputs)?;
        fs::write(path, with_comments(&head, &report_csv(&report)))?;
    }
    Ok(Outcome::Done)
}

fn sweep_grid(a: &SweepArgs) -> Result<Vec<f64>> {
    if let Some(g) = &a.mu_grid {
        return Ok(g.clone());
    }
    match (a.mu_start, a.mu_stop, a.mu_step) {
        (Some(lo), Some(hi), Some(step)) => {
            if !(step > 0.0) || hi < lo {
                return Err(usage("need mu-start <= mu-stop and a positive mu-step"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as u64;
            Ok((0..=count).map(|i| lo + i as f64 * step).collect())
        }
        _ => Err(usage("give --mu-grid or all of --mu-start, --mu-stop, --mu-step")),
    }
}

fn cmd_sweep(a: &SweepArgs, out: &mut (dyn Write + Send)) -> Result<Outcome> {
    let policy = a.trunc.policy()?;
    let grid = sweep_grid(a)?;
    let curve = a.model.curve()?;
    let model = match &curve {
        Some(c) => {
            if a.model.eta.is_some() || a.model.etas.is_some() {
                return Err(usage("give exactly one of --eta, --calibration"));
            }
            DetectorArrayModel::uniform(a.model.pixels()?, c.points()[0].1, a.model.acquisition()?)?
        }
        None => a.model.model(0.0)?,
    };
    let rows = sweep_mu(&grid, &model, &policy, curve.as_ref())?;
    let inputs: Vec<&Path> = a.model.calibration.iter().map(PathBuf::as_path).collect();
    let mut head = artifact_header("sweep", a, &inputs)?;
    if a.optimize {
        if curve.is_some() {
            return Err(usage("--optimize needs a constant --eta"));
        }
        let (lo, hi, step) = match (a.mu_start, a.mu_stop, a.mu_step) {
            (Some(lo), Some(hi), Some(step)) => (lo, hi, step),
            _ => return Err(usage("--optimize needs --mu-start, --mu-stop, --mu-step")),
        };
        let (mu, rate) = optimize_mu(&model, &policy, (lo, hi), step)?;
        head.push(format!("optimum: mu_px={} secure_rate_bps={}", fmt_prob(mu), fmt_prob(rate)));
    }
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &head, &mut buf)?;
    write_text(a.output.as_deref(), &String::from_utf8_lossy(&buf), out)?;
    Ok(Outcome::Done)
}

fn cmd_calibrate(a: &CalibrateArgs, out: &mut (dyn Write + Send)) -> Result<Outcome> {
    let table = parse_pair_table(&fs::read_to_string(&a.input)?, "mu,p1")?;
    let points = table
        .iter()
        .map(|&(mu, p1)| equivalent_efficiency(p1, mu).map(|eta| (mu, eta)))
        .collect::<Result<Vec<_>>>()?;
    let curve = CalibrationCurve::new(points)?;
    let head = artifact_header("calibrate", a, &[&a.input])?;
    write_text(a.output.as_deref(), &with_comments(&head, &curve.to_text()), out)?;
    Ok(Outcome::Done)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut (dyn Write + Send)) -> Result<Outcome> {
    let (model, source) = a.model.resolve()?;
    let seed = SimSeed::new(a.seed, a.stream);
    let batch = simulate_frames(&model, &source, a.frames, seed, a.side_info.is_some())?;
    write_frames(&batch, &a.output)?;
    if let Some(p) = &a.side_info {
        write_side_info(&batch, p)?;
    }
    let stats = empirical_bit_prob(&batch)?;
    let mean = stats.p1.iter().sum::<f64>() / stats.p1.len() as f64;
    writeln!(out, "frames: {}", batch.len())?;
    writeln!(out, "pixels: {}", batch.pixels())?;
    writeln!(out, "mean_p1: {}", fmt_prob(mean))?;
    writeln!(out, "uniformity_p_value: {}", fmt_prob(stats.uniformity_p_value))?;
    Ok(Outcome::Done)
}

fn cmd_sierpinski(a: &SierpinskiArgs, out: &mut (dyn Write + Send)) -> Result<Outcome> {
    let mat = sierpinski_matrix(a.pixels, a.photons)?;
    let mut buf = Vec::new();
    mat.write_csv(&mut buf)?;
    let head = artifact_header("sierpinski", a, &[])?;
    write_text(a.output.as_deref(), &with_comments(&head, &String::from_utf8_lossy(&buf)), out)?;
    Ok(Outcome::Done)
}

fn cmd_oracle(a: &OracleArgs, out: &mut (dyn Write + Send)) -> Result<Outcome> {
    let (mode, tol) = match a.numeric {
        Numeric::Exact => (NumericMode::Exact, 0.0),
        Numeric::Log => (NumericMode::Log, 1e-12),
    };
    let (dev, pairs) = oracle_deviation(a.max_pixels, a.max_photons, mode)?;
    writeln!(out, "pairs: {pairs}")?;
    writeln!(out, "max_deviation: {dev}")?;
    Ok(if dev <= tol {
        Outcome::Done
    } else {
        Outcome::CheckFailed(format!("deviation {dev} exceeds {tol}"))
    })
}

fn cmd_guess(a: &GuessArgs, out: &mut (dyn Write + Send)) -> Result<Outcome> {
    let (model, source) = a.model.resolve()?;
    let policy = a.trunc.policy()?;
    let theory = conditional_report(&model, &source, &policy)?;
    let (freq, se) = empirical_guess_rate(&model, &source, a.trials, SimSeed::new(a.seed, a.stream))?;
    writeln!(out, "trials: {}", a.trials)?;
    writeln!(out, "empirical: {}", fmt_prob(freq))?;
    writeln!(out, "std_err: {}", fmt_prob(se))?;
    writeln!(out, "p_guess: {}", fmt_prob(theory.p_guess))?;
    let z = if se > 0.0 { (freq - theory.p_guess) / se } else { 0.0 };
    writeln!(out, "z_score: {z:.3}")?;
    Ok(Outcome::Done)
}

fn cmd_extract(a: &ExtractArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<Outcome> {
    let batch = read_frames(&a.input)?;
    let seed = match (&a.seed_file, &a.seed_hex) {
        (Some(p), None) => bits_from_bytes(&fs::read(p)?),
        (None, Some(h)) => bits_from_hex(h)?,
        _ => return Err(usage("give --seed-file or --seed-hex")),
    };
    let h = match a.entropy_per_frame {
        Some(h) => h,
        None => {
            if let Some(p) = a.model.pixels {
                if p != batch.pixels() {
                    return Err(usage(format!(
                        "--pixels {p} but the frame file has {} pixels",
                        batch.pixels()
                    )));
                }
            }
            let mut m = a.model.clone();
            m.pixels = Some(batch.pixels());
            let (model, source) = m.resolve()?;
            conditional_report(&model, &source, &a.trunc.policy()?)?.h_conditional
        }
    };
    let bits = toeplitz_extract(&batch, h, a.eps_sec, &seed)?;
    fs::write(&a.output, bytes_from_bits(&bits))?;
    writeln!(err, "output_bits: {}", bits.len())?;
    writeln!(out, "frames: {}", batch.len())?;
    writeln!(out, "entropy_per_frame_bits: {}", fmt_h(h))?;
    writeln!(out, "output_bits: {}", bits.len())?;
    Ok(Outcome::Done)
}

fn cmd_bench(a: &BenchArgs, out: &mut (dyn Write + Send)) -> Result<Outcome> {
    let model = DetectorArrayModel::uniform(a.pixels, a.eta, AcquisitionParams::default())?;
    let source = SourceModel::poisson_per_pixel(a.mu_px, a.pixels)?;
    let policy = TruncationPolicy::new(a.eps, a.eps, None)?;
    let start = Instant::now();
    let r = conditional_min_entropy(&model, &source, &policy)?;
    let secs = start.elapsed().as_secs_f64();
    print_report(&r, out)?;
    writeln!(out, "terms_per_second: {:.3e}", r.terms as f64 / secs.max(1e-9))?;
    Ok(Outcome::Done)
}

fn dispatch(cmd: &Command, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<Outcome> {
    match cmd {
        Command::Entropy(a) => cmd_entropy(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Calibrate(a) => cmd_calibrate(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Sierpinski(a) => cmd_sierpinski(a, out),
        Command::OracleCheck(a) => cmd_oracle(a, out),
        Command::GuessSim(a) => cmd_guess(a, out),
        Command::Extract(a) => cmd_extract(a, out, err),
        Command::Bench(a) => cmd_bench(a, out),
    }
}

fn error_kind(e: &Error) -> (&'static str, i32) {
    match e {
        Error::Parameter(_) | Error::LengthMismatch { .. } | Error::SeedTooShort { .. } => ("usage", 2),
        Error::Resource(_) => ("resource", 2),
        Error::InfeasibleCalibration { .. } | Error::Infeasible(_) => ("infeasible", 3),
        Error::Range(_) => ("range", 3),
        Error::Parse(_) => ("parse", 4),
        Error::Io(_) => ("io", 4),
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Expands `--config FILE` into flags placed right after the subcommand.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" || a == "--threads" {
            if a == "--config" {
                config = args.get(i + 1).cloned();
            }
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.into());
        } else if !a.starts_with('-') && sub.is_none() {
            sub = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (config, sub) else {
        return Ok(args);
    };
    let text = fs::read_to_string(PathBuf::from(&path))?;
    let mut extra: Vec<OsString> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(crate::error::ParseError::Table {
                line: n + 1,
                reason: format!("expected key=value, found {line:?}"),
            })
        })?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        match v {
            "true" => extra.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                extra.push(format!("--{k}").into());
                extra.push(v.into());
            }
        }
    }
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("QRNG_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("QRNG_THREADS={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Runs the command line with explicit output streams; returns the exit code.
pub fn run_with_io<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let fail = |err: &mut (dyn Write + Send), e: &Error| {
        let (kind, code) = error_kind(e);
        let _ = writeln!(err, "error[{kind}]: {}", one_line(&e.to_string()));
        code
    };
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => return fail(err, &e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().next().unwrap_or("bad arguments");
                    let first = first.trim_start_matches("error: ");
                    let _ = writeln!(err, "error[usage]: {}", one_line(first));
                    2
                }
            };
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(e) => return fail(err, &e),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => return fail(err, &usage(format!("thread pool: {e}"))),
    };
    let result = pool.install(|| dispatch(&cli.command, out, err));
    match result {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::CheckFailed(msg)) => {
            let _ = writeln!(err, "error[check]: {}", one_line(&msg));
            1
        }
        Err(e) => fail(err, &e),
    }
}

/// Runs the command line against the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut stdout = io::stdout();
    let code = run_with_io(args, &mut stdout, &mut io::stderr());
    let _ = stdout.flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["qrng-entropy"];
        argv.extend_from_slice(args);
        let code = run_with_io(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn field<'a>(text: &'a str, key: &str) -> &'a str {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}: ")))
            .unwrap_or_else(|| panic!("no {key} in {text}"))
    }

    #[test]
    fn classical_rate_from_measured_p1() {
        let (code, out, _) =
            run_capture(&["entropy", "--pixels", "1024", "--mode", "classical", "--p1", "0.5", "--rate", "49000"]);
        assert_eq!(code, 0);
        assert_eq!(field(&out, "secure_rate_bps"), "50176000");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_capture(&["entropy", "--bogus"]).0, 2);
        assert_eq!(run_capture(&["entropy", "--mu-px", "1", "--eta", "0.5"]).0, 2);
        let (code, _, err) = run_capture(&["calibrate", "--input", "/nonexistent/table.csv"]);
        assert_eq!(code, 4);
        assert!(err.starts_with("error[io]:") && err.lines().count() == 1);
        let (code, _, err) = run_capture(&[
            "entropy", "--pixels", "4", "--mu-px", "5", "--eta", "0.5", "--n-max", "3",
        ]);
        assert_eq!(code, 3, "{err}");
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn oracle_check_reports_zero() {
        let (code, out, _) = run_capture(&["oracle-check", "--max-pixels", "3", "--max-photons", "3"]);
        assert_eq!(code, 0);
        assert_eq!(field(&out, "max_deviation"), "0");
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# defaults\npixels = 3\nmu_px = 1.0\neta = 1.0\nsource = fixed\nphotons = 1\n").unwrap();
        let cfg = cfg.to_str().unwrap();
        let (code, out, err) = run_capture(&["--config", cfg, "entropy"]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(field(&out, "h_conditional_bits"), fmt_h(3f64.log2()));
        let (_, out, _) = run_capture(&["--config", cfg, "entropy", "--pixels", "4"]);
        assert_eq!(field(&out, "h_conditional_bits"), fmt_h(2.0));
    }

    #[test]
    fn artifacts_do_not_depend_on_threads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let run_with = |threads: &str| {
            let args = [
                "--threads", threads, "sweep", "--pixels", "5", "--eta", "0.6", "--mu-grid", "0.2,1,4",
                "--output", path.to_str().unwrap(),
            ];
            assert_eq!(run_capture(&args).0, 0);
            fs::read_to_string(&path).unwrap()
        };
        let one = run_with("1");
        assert_eq!(one, run_with("5"));
        assert!(one.starts_with("# qrng-entropy "));
        assert_eq!(one.lines().filter(|l| !l.starts_with('#')).count(), 4);
    }

    #[test]
    fn calibrate_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("p1.csv");
        let output = dir.path().join("eta.csv");
        fs::write(&input, "mu,p1\n1.0,0.3\n2.0,0.5\n").unwrap();
        let (code, _, err) =
            run_capture(&["calibrate", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let text = fs::read_to_string(&output).unwrap();
        assert!(text.contains("sha256="));
        let curve = CalibrationCurve::parse(&text).unwrap();
        let want = 0.3 / (1.0 - (-1.0f64).exp());
        assert!((curve.eta_at(1.0).unwrap() - want).abs() < 1e-15);
        fs::write(&input, "mu,p1\n1.0,0.9\n").unwrap();
        assert_eq!(run_capture(&["calibrate", "--input", input.to_str().unwrap()]).0, 3);
    }
}
