//! `gobound`: model-bias certificates from the command line.
//!
//! Exit status: 0 on success, 2 for usage or input errors, 3 when an
//! iterative numeric method fails to converge. Errors are reported on
//! stderr as a JSON object `{"error": kind, "message": text}`.

// `!(x < y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gobound::BoundError;

#[derive(Parser, Debug)]
#[command(name = "gobound", version, about = "Certified bias bounds for models within a KL ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bias band valid for every QoI admitted by a concentration envelope.
    Bound(BoundArgs),
    /// Goal-oriented bias band for one QoI, from data, a discrete law or an analytic model.
    Go(GoArgs),
    /// Exponential tilt of a discrete law, at a given tilt or at the optimal one.
    Tilt(TiltArgs),
    /// DKW confidence band for the CDF, widened for model misspecification.
    Band(BandArgs),
    /// Maximum-likelihood Weibull fit of failure times.
    FitWeibull(FitArgs),
    /// Plot data for a worked example.
    Example(ExampleArgs),
}

/// KL radius, as `--eta` or `--eta2` (nats); the two are exclusive.
#[derive(Args, Debug, Clone, Copy)]
#[group(multiple = false)]
pub struct Radius {
    /// Square root of the KL tolerance.
    #[arg(long)]
    eta: Option<f64>,
    /// KL tolerance in nats.
    #[arg(long)]
    eta2: Option<f64>,
}

impl Radius {
    /// Canonical `eta^2`, or `default` when neither flag is given.
    pub fn eta_sq_or(&self, default: Option<f64>) -> gobound::Result<f64> {
        let v = match (self.eta, self.eta2) {
            (Some(e), None) => {
                if !(e >= 0.0) {
                    return Err(BoundError::Parameter(format!("--eta must be >= 0, got {e}")));
                }
                e * e
            }
            (None, Some(e2)) => e2,
            _ => default.ok_or_else(|| BoundError::Parameter("one of --eta or --eta2 is required".into()))?,
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(BoundError::Parameter(format!("eta^2 must be finite and >= 0, got {v}")));
        }
        Ok(v)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Subgaussian,
    IntervalSubgaussian,
    Bennett,
    BennettAb,
    Hoeffding,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Envelope family; alternatively give the envelope as JSON with --bound-json.
    #[arg(long, value_enum, required_unless_present = "bound_json")]
    family: Option<Family>,
    /// Envelope as JSON, e.g. '{"variant":"hoeffding","a":0,"b":1}', or a path to such a file.
    #[arg(long, conflicts_with = "family")]
    bound_json: Option<String>,
    /// Proxy standard deviation (sub-Gaussian families, Bennett).
    #[arg(long, conflicts_with = "sigma2")]
    sigma: Option<f64>,
    /// Proxy variance (sub-Gaussian families, Bennett).
    #[arg(long)]
    sigma2: Option<f64>,
    /// Lower bound of the QoI.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Upper bound of the QoI.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Baseline mean of the QoI.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Validity half-width of an interval sub-Gaussian envelope.
    #[arg(long)]
    c_max: Option<f64>,
    /// Drift removed from an interval sub-Gaussian envelope (recorded only).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    drift: f64,
    #[command(flatten)]
    radius: Radius,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelName {
    Exponential,
    TruncatedNormal,
}

#[derive(Args, Debug)]
#[group(id = "go_source", required = true, multiple = false, args = ["sample", "distribution", "model"])]
pub struct GoSource {
    /// Sample file: one number per line, or CSV with --column.
    #[arg(long)]
    sample: Option<PathBuf>,
    /// Discrete law as JSON {"atoms": [...], "weights": [...]}; the QoI is the atom value.
    #[arg(long)]
    distribution: Option<PathBuf>,
    /// Analytic baseline with QoI f(x) = x.
    #[arg(long, value_enum)]
    model: Option<ModelName>,
}

#[derive(Args, Debug)]
pub struct GoArgs {
    #[command(flatten)]
    source: GoSource,
    /// CSV column (name or 1-based number) holding the sample.
    #[arg(long)]
    column: Option<String>,
    /// Rate of the exponential model.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Truncated normal: location.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    mu: f64,
    /// Truncated normal: scale.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Truncated normal: lower end (may be -inf).
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    lo: f64,
    /// Truncated normal: upper end (may be inf).
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    hi: f64,
    #[command(flatten)]
    radius: Radius,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Args, Debug)]
#[group(id = "tilt_source", required = true, multiple = false, args = ["sample", "distribution"])]
pub struct TiltSource {
    #[arg(long)]
    sample: Option<PathBuf>,
    #[arg(long)]
    distribution: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TiltArgs {
    #[command(flatten)]
    source: TiltSource,
    #[arg(long)]
    column: Option<String>,
    /// Tilt parameter; without it the optimal tilt for --eta/--eta2 is used.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["eta", "eta2"])]
    c: Option<f64>,
    /// Which side of the bias the optimal tilt maximizes.
    #[arg(long, value_enum, default_value_t = Side::Plus)]
    side: Side,
    #[command(flatten)]
    radius: Radius,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct BandArgs {
    /// Sample file: one number per line, or CSV with --column.
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    column: Option<String>,
    /// Failure probability of the band.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Evaluation grid file (one number per line); default is the sorted sample with -inf/inf.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// KL radius; defaults to 0 (pure DKW band).
    #[command(flatten)]
    radius: Radius,
    /// Output file; CSV gets a JSON sidecar with the same stem. Default: stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Failure-time CSV (header row, times in the last column). Default: the bundled battery data.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleName {
    Exponential,
    TruncatedNormal,
    Battery,
    Ising,
}

#[derive(Args, Debug)]
pub struct ExampleArgs {
    #[arg(value_enum)]
    name: ExampleName,
    /// Output directory.
    #[arg(long, default_value = "gobound-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Grid size (exponential: rates; battery: time points).
    #[arg(long)]
    points: Option<usize>,
    /// Master seed of the samplers.
    #[arg(long, env = "GOBOUND_SEED", default_value_t = 0)]
    seed: u64,
    /// Ising: number of sites.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Ising: inverse temperature.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Ising: coupling.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    j: f64,
    /// Ising: external field.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    h: f64,
    /// Ising: half-width of the magnetization window.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Ising: total sweeps per chain, burn-in included.
    #[arg(long, default_value_t = 60_000)]
    sweeps: usize,
    #[arg(long, default_value_t = 10_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 20)]
    batches: usize,
    /// Ising: also enumerate exactly and compare (n <= 22).
    #[arg(long)]
    exact: bool,
    /// Ising: 1-based bond whose coupling is changed to --defect-j.
    #[arg(long, requires = "defect_j")]
    defect_bond: Option<usize>,
    #[arg(long, allow_hyphen_values = true, requires = "defect_bond")]
    defect_j: Option<f64>,
}

fn report(err: &BoundError) -> ExitCode {
    let body = serde_json::json!({ "error": err.kind(), "message": err.to_string() });
    eprintln!("{body}");
    if err.is_numeric() {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bound(a) => commands::bound(&a),
        Command::Go(a) => commands::go(&a),
        Command::Tilt(a) => commands::tilt(&a),
        Command::Band(a) => commands::band(&a),
        Command::FitWeibull(a) => commands::fit_weibull(&a),
        Command::Example(a) => commands::example(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
