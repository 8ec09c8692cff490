//! The `snf` command line. [`run`] parses arguments, dispatches to `snf_core`
//! and returns what the process should print and its exit code.

use std::collections::BTreeMap;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use snf_core::FractalSpec;

mod commands;
pub mod svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Machine-readable record of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandResult {
    pub command: String,
    pub parameters: serde_json::Value,
    /// Named pass/fail checks; any `false` makes the exit code 1.
    pub verdicts: BTreeMap<String, bool>,
    pub result: serde_json::Value,
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Only with `--timing`, so that default output is reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
    pub exit_code: i32,
}

/// What the process prints and returns.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
    /// Absent for artifact commands writing to stdout and for usage errors.
    pub result: Option<CommandResult>,
}

#[derive(Debug, Parser)]
#[command(
    name = "snf",
    version,
    about = "Good labellings, folding projections and reflected walks on planar simple nested fractals"
)]
pub struct Cli {
    /// Report wall-clock time in the JSON result.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spec files: axiom validation and derived data.
    #[command(subcommand)]
    Spec(SpecCommand),
    /// Decide the good labelling property.
    Glp(SpecArg),
    /// Labellings.
    #[command(subcommand)]
    Label(LabelCommand),
    /// Fold a point onto the primary complex.
    Project(PointArgs),
    /// Preimages of a point of the primary complex (CSV).
    Fiber(FiberArgs),
    /// Graph distances d_M (CSV).
    Dist(DistArgs),
    /// Shell sizes around a point (CSV).
    Shells(ShellArgs),
    /// Metric comparison constants and their sampled verification.
    Constants(ConstantsArgs),
    /// Random walks on the grids and their folded images.
    #[command(subcommand)]
    Walk(WalkCommand),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum SpecCommand {
    Validate(ValidateArgs),
    Info(SpecArg),
}

#[derive(Debug, Subcommand)]
pub enum LabelCommand {
    /// Draw a labelled window, a labelling conflict or a path archive as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Subcommand)]
pub enum WalkCommand {
    /// n-step distributions (CSV).
    Kernel(KernelArgs),
    /// Joint law of the j-th hitting time of V_M and the label hit (CSV).
    Hitting(HittingArgs),
    /// Decimation time scale.
    Gamma(GammaArgs),
    /// Quotient kernel and its invariant checks.
    Quotient(QuotientArgs),
    /// Simulated paths (JSONL archive) or a histogram against the exact law.
    Simulate(SimulateArgs),
}

/// `builtin:<name>` or a path to a spec file.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SpecArg {
    #[arg(long)]
    pub spec: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArg {
    /// Write the artifact here and print a JSON result instead.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArg,
    #[arg(long, default_value_t = snf_core::geometry::DEFAULT_NESTING_DEPTH)]
    pub nesting_depth: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArg,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub order: i32,
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    /// Draw the raw paths of a JSONL archive instead of a window.
    #[arg(long)]
    pub paths: Option<String>,
    #[arg(long, default_value_t = 600.0)]
    pub size: f64,
    #[arg(long, default_value_t = 3)]
    pub precision: usize,
    #[arg(long, default_value = "#dde6f0")]
    pub fill: String,
    #[arg(long, default_value = "#1f3a5f")]
    pub stroke: String,
    #[arg(long, default_value = "#c0392b")]
    pub highlight: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArg,
}

/// A point given by its coefficients over `1, ζ, …`, e.g. `"[1,0]"`, which
/// is a vertex of the level-`point_level` grid.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PointArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArg,
    #[arg(long, allow_negative_numbers = true)]
    pub order: i32,
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub point_level: i32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FiberArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub point: PointArgs,
    /// Window `K^<order+depth>` searched for preimages.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArg,
    #[arg(long, allow_negative_numbers = true)]
    pub level: i32,
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    /// Every vertex of the window when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub point_level: i32,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShellArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArg,
    #[arg(long, allow_negative_numbers = true)]
    pub level: i32,
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub point_level: i32,
    #[arg(long, default_value_t = snf_core::metric::DEFAULT_SHELL_NMAX)]
    pub nmax: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArg,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub level: i32,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Sampled pairs and shell bases for the comparison checks.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WalkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArg,
    /// Order of the folding projection.
    #[arg(
        long = "M",
        alias = "order",
        default_value_t = 1,
        allow_negative_numbers = true
    )]
    #[serde(rename = "M")]
    pub big_m: i32,
    /// Grid level of the walk.
    #[arg(long = "m", default_value_t = 0, allow_negative_numbers = true)]
    pub m: i32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub start: String,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value = "exact")]
    pub mode: String,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// Push the distributions forward to the primary complex.
    #[arg(long)]
    pub folded: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HittingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub start: String,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
    #[arg(long, default_value_t = 2)]
    pub j: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GammaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArg,
    #[arg(long = "m", default_value_t = 0, allow_negative_numbers = true)]
    pub m: i32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuotientArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    /// Powers checked for detailed balance.
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub start: String,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long)]
    pub count: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Report folded and hitting-label histograms against the exact laws.
    #[arg(long)]
    pub histogram: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Repeatable; all builtin specs when omitted.
    #[arg(long)]
    pub spec: Vec<String>,
    /// Exact checks only.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: u64,
}

/// Resolves `builtin:<name>` or reads a spec file.
pub fn load_spec(s: &str) -> snf_core::Result<FractalSpec> {
    match s.strip_prefix("builtin:") {
        Some(name) => FractalSpec::builtin(name),
        None => {
            let text = std::fs::read_to_string(s)
                .map_err(|e| snf_core::Error::Parse(format!("reading {s}: {e}")))?;
            FractalSpec::from_json(&text)
        }
    }
}

/// Output of a command body before wrapping.
pub(crate) enum Produced {
    /// JSON report.
    Report {
        verdicts: BTreeMap<String, bool>,
        result: serde_json::Value,
    },
    /// Text artifact with a summary for the JSON form.
    Artifact {
        text: String,
        summary: serde_json::Value,
        verdicts: BTreeMap<String, bool>,
    },
}

fn to_json(r: &CommandResult) -> String {
    serde_json::to_string_pretty(r).expect("serializable") + "\n"
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let (stdout, stderr) = if e.use_stderr() {
                (String::new(), text)
            } else {
                (text, String::new())
            };
            return Outcome {
                stdout,
                stderr,
                code,
                result: None,
            };
        }
    };
    let t = Instant::now();
    let (name, params, out) = commands::describe(&cli.command);
    let mut res = CommandResult {
        command: name,
        parameters: params,
        verdicts: BTreeMap::new(),
        result: serde_json::Value::Null,
        artifacts: Vec::new(),
        error: None,
        wall_clock_s: None,
        exit_code: EXIT_OK,
    };
    let mut stderr = String::new();
    let produced = commands::dispatch(&cli.command, cli.timing);
    let mut artifact_stdout = None;
    match produced {
        Ok(Produced::Report { verdicts, result }) => {
            res.verdicts = verdicts;
            res.result = result;
        }
        Ok(Produced::Artifact {
            text,
            summary,
            verdicts,
        }) => {
            res.verdicts = verdicts;
            res.result = summary;
            match &out {
                Some(path) => match std::fs::write(path, &text) {
                    Ok(()) => res.artifacts.push(path.clone()),
                    Err(e) => res.error = Some(format!("writing {path}: {e}")),
                },
                None => artifact_stdout = Some(text),
            }
        }
        Err(e) => res.error = Some(e.to_string()),
    }
    if let Some(e) = &res.error {
        stderr = format!("error: {e}\n");
    }
    if res.error.is_some() || res.verdicts.values().any(|v| !v) {
        res.exit_code = EXIT_FAILURE;
    }
    if cli.timing {
        res.wall_clock_s = Some(t.elapsed().as_secs_f64());
    }
    let code = res.exit_code;
    match artifact_stdout {
        Some(text) => Outcome {
            stdout: text,
            stderr,
            code,
            result: None,
        },
        None => Outcome {
            stdout: to_json(&res),
            stderr,
            code,
            result: Some(res),
        },
    }
}
