//! Command-line front end for `hodiff`.
//!
//! Exit codes: 0 success (or invariant, for `check`), 1 not invariant,
//! 2 usage error, 3 I/O or file format error, 4 numeric or parameter error.

pub mod pgm;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hodiff::edges::{self, EdgeParams, PatternKind, PatternSpec, Scheme};
use hodiff::hdiff2d::{self, Step2DTrace};
use hodiff::perona_malik::{self, PMParams};
use hodiff::{renormalize_palette, GreyImage};

use crate::pgm::{PgmError, PgmFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "hodiff", version, about = "High-order anisotropic diffusion for grey images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply high-order diffusion steps and write the renormalized result.
    Step(StepArgs),
    /// Diffuse, renormalize and apply the cut-off filter.
    Edges(EdgesArgs),
    /// Run Perona-Malik diffusion and write the renormalized result.
    Pm(PmArgs),
    /// Generate a test pattern.
    Gen(GenArgs),
    /// Run one step and report whether the image is left unchanged.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Ascii,
    Binary,
}

impl From<FormatArg> for PgmFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ascii => PgmFormat::Ascii,
            FormatArg::Binary => PgmFormat::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Highorder,
    Pm,
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Input PGM, `-` for stdin.
    #[arg(long = "in", default_value = "-")]
    input: PathBuf,
    /// Output PGM, `-` for stdout.
    #[arg(long = "out", default_value = "-")]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    format: FormatArg,
    /// Grid spacing.
    #[arg(long, default_value_t = 1.0)]
    h: f64,
}

#[derive(Debug, Args)]
struct PmFlags {
    #[arg(long, default_value_t = 5.0)]
    a: f64,
    #[arg(long, default_value_t = 0.2)]
    dt: f64,
    /// Final time; T / dt steps are taken.
    #[arg(long = "T", default_value_t = 2.0)]
    t_final: f64,
}

#[derive(Debug, Args)]
struct StepArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Comma-separated step sizes, one step each.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    gamma: Vec<f64>,
    /// Directory receiving the intermediate fields of the last step.
    #[arg(long)]
    trace_dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EdgesArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-8")]
    gamma: Vec<f64>,
    #[arg(long, default_value_t = 162)]
    tau: u32,
    #[arg(long, value_enum, default_value = "highorder")]
    method: Method,
    #[command(flatten)]
    pm: PmFlags,
}

#[derive(Debug, Args)]
struct PmArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    pm: PmFlags,
}

#[derive(Debug, Args)]
struct PatternArgs {
    /// checkerboard, v-stripes, h-stripes, half-plane-x, half-plane-y, diagonal or ramp-1d.
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    v1: f64,
    #[arg(long, default_value_t = 256.0, allow_hyphen_values = true)]
    v2: f64,
    #[arg(long, default_value_t = 1)]
    period: usize,
    /// Split row/column (half-planes) or midpoint (ramp); defaults to n / 2.
    #[arg(long)]
    split: Option<usize>,
}

impl PatternArgs {
    fn spec(&self, kind: PatternKind) -> PatternSpec {
        let spec = PatternSpec::new(kind, self.n, self.v1, self.v2).with_period(self.period);
        match self.split {
            Some(s) => spec.with_split(s),
            None => spec,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    pattern: PatternArgs,
    #[arg(long = "out", default_value = "-")]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    pattern: PatternArgs,
    /// Input PGM when no --pattern is given, `-` for stdin.
    #[arg(long = "in", default_value = "-")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "highorder")]
    method: Method,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[command(flatten)]
    pm: PmFlags,
    #[arg(long)]
    trace_dump: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
            Failure::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<hodiff::Error> for Failure {
    fn from(e: hodiff::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<PgmError> for Failure {
    fn from(e: PgmError) -> Self {
        match e {
            PgmError::NotQuantized => Failure::Numeric(e.to_string()),
            other => Failure::Io(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

struct Streams<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

impl Streams<'_> {
    fn read_image(&mut self, path: &Path, h: f64) -> Result<GreyImage, Failure> {
        let img = if is_stdio(path) {
            pgm::read(&mut self.stdin)?
        } else {
            pgm::read_path(path).map_err(|e| match e {
                PgmError::Io(io) => Failure::Io(format!("{}: {io}", path.display())),
                other => other.into(),
            })?
        };
        Ok(img.with_spacing(h)?)
    }

    fn write_bytes(&mut self, path: &Path, bytes: &[u8]) -> Result<(), Failure> {
        if is_stdio(path) {
            self.stdout.write_all(bytes)?;
            self.stdout.flush()?;
        } else {
            std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    fn write_image(&mut self, path: &Path, img: &GreyImage, format: FormatArg) -> Result<(), Failure> {
        let bytes = pgm::encode(img, format.into())?;
        self.write_bytes(path, &bytes)
    }
}

fn pm_params(flags: &PmFlags, h: f64, streams: &mut Streams) -> Result<PMParams, Failure> {
    let params = PMParams::new(flags.a, flags.dt, flags.t_final)?;
    if params.exceeds_stability_bound(h) {
        let _ = writeln!(
            streams.stderr,
            "warning: dt = {} exceeds the explicit stability bound h^2/4 = {}",
            flags.dt,
            h * h / 4.0
        );
    }
    Ok(params)
}

/// Writes the intermediate fields of one high-order step, one matrix per file.
pub fn dump_trace(trace: &Step2DTrace, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let fields = [
        ("d_x.txt", &trace.dx),
        ("d_y.txt", &trace.dy),
        ("l.txt", &trace.laplacian),
        ("D.txt", &trace.magnitude),
        ("R_staggered.txt", &trace.coefficient_ext),
        ("R_integer.txt", &trace.coefficient_nodes),
    ];
    for (name, field) in fields {
        let mut text = String::new();
        field.write_matrix(&mut text).expect("formatting into a String");
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn cmd_step(args: StepArgs, s: &mut Streams) -> Result<i32, Failure> {
    let img = s.read_image(&args.io.input, args.io.h)?;
    if args.gamma.is_empty() {
        return Err(Failure::Usage("--gamma needs at least one value".into()));
    }
    let mut current = img;
    let mut last_trace = None;
    for &g in &args.gamma {
        let trace = hdiff2d::step_traced(&current, g)?;
        current = trace.updated.clone();
        last_trace = Some(trace);
    }
    if let (Some(dir), Some(trace)) = (&args.trace_dump, &last_trace) {
        dump_trace(trace, dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    s.write_image(&args.io.output, &renormalize_palette(&current), args.io.format)?;
    Ok(EXIT_OK)
}

fn cmd_edges(args: EdgesArgs, s: &mut Streams) -> Result<i32, Failure> {
    let img = s.read_image(&args.io.input, args.io.h)?;
    let params = match args.method {
        Method::Highorder => EdgeParams::high_order(args.gamma, args.tau)?,
        Method::Pm => EdgeParams::perona_malik(pm_params(&args.pm, args.io.h, s)?, args.tau)?,
    };
    let out = edges::detect_edges(&img, &params)?;
    s.write_image(&args.io.output, &out, args.io.format)?;
    Ok(EXIT_OK)
}

fn cmd_pm(args: PmArgs, s: &mut Streams) -> Result<i32, Failure> {
    let img = s.read_image(&args.io.input, args.io.h)?;
    let params = pm_params(&args.pm, args.io.h, s)?;
    let out = perona_malik::run(&img, &params)?;
    s.write_image(&args.io.output, &renormalize_palette(&out), args.io.format)?;
    Ok(EXIT_OK)
}

fn parse_kind(name: &str) -> Result<PatternKind, Failure> {
    name.parse().map_err(|e: hodiff::Error| Failure::Usage(e.to_string()))
}

fn cmd_gen(args: GenArgs, s: &mut Streams) -> Result<i32, Failure> {
    let name = args
        .pattern
        .pattern
        .as_deref()
        .ok_or_else(|| Failure::Usage("gen needs --pattern".into()))?;
    let kind = parse_kind(name)?;
    match edges::generate_pattern(&args.pattern.spec(kind))? {
        edges::Pattern::Image(img) => s.write_image(&args.output, &img, args.format)?,
        edges::Pattern::Signal(sig) => {
            let line: Vec<String> = sig.values().iter().map(f64::to_string).collect();
            s.write_bytes(&args.output, format!("{}\n", line.join(" ")).as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_check(args: CheckArgs, s: &mut Streams) -> Result<i32, Failure> {
    let scheme = match args.method {
        Method::Highorder => Scheme::HighOrder,
        Method::Pm => Scheme::PeronaMalik(pm_params(
            &PmFlags {
                t_final: args.pm.dt,
                ..args.pm
            },
            args.h,
            s,
        )?),
    };
    let pattern = match args.pattern.pattern.as_deref() {
        Some(name) => Some(edges::generate_pattern(&args.pattern.spec(parse_kind(name)?))?),
        None => None,
    };
    let report = match pattern {
        Some(edges::Pattern::Signal(sig)) => {
            if !matches!(scheme, Scheme::HighOrder) {
                return Err(Failure::Usage("1D patterns can only be checked with --method highorder".into()));
            }
            edges::check_invariance_1d(&sig, args.gamma)?
        }
        other => {
            let img = match other {
                Some(edges::Pattern::Image(img)) => img.with_spacing(args.h)?,
                _ => s.read_image(&args.input, args.h)?,
            };
            if let (Some(dir), Scheme::HighOrder) = (&args.trace_dump, scheme) {
                let trace = hdiff2d::step_traced(&img, args.gamma)?;
                dump_trace(&trace, dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            }
            edges::check_invariance(&img, &scheme, args.gamma)?
        }
    };
    let mut line = String::new();
    let _ = write!(
        line,
        "invariant={} max_abs_r={} max_abs_change={}",
        report.is_invariant, report.max_abs_r, report.max_abs_change
    );
    writeln!(s.stdout, "{line}")?;
    Ok(if report.is_invariant { EXIT_OK } else { EXIT_NOT_INVARIANT })
}

/// Runs the CLI against explicit streams and returns the exit code.
pub fn run_with_io<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let mut streams = Streams { stdin, stdout, stderr };
    let result = match cli.command {
        Command::Step(a) => cmd_step(a, &mut streams),
        Command::Edges(a) => cmd_edges(a, &mut streams),
        Command::Pm(a) => cmd_pm(a, &mut streams),
        Command::Gen(a) => cmd_gen(a, &mut streams),
        Command::Check(a) => cmd_check(a, &mut streams),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(streams.stderr, "error: {}", f.message());
            f.code()
        }
    }
}

/// Runs the CLI on the process's standard streams.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(argv, &mut stdin.lock(), &mut stdout.lock(), &mut stderr.lock())
}
