//! The `perclab` experiment runner.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;
use perclab::Verdict;

#[derive(Parser, Debug)]
#[command(
    name = "perclab",
    version,
    about = "Bernoulli bond percolation laboratory"
)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "PERCLAB_THREADS")]
    threads: Option<usize>,
    /// JSON experiment config; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for results.csv, results.json and manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo estimate of theta_n(p).
    Estimate(Opts),
    /// Exact theta_n(p) and pi_n(p) by enumeration.
    Exact(Opts),
    /// The parameter map q_n^m and its iterates.
    Qmap(Opts),
    /// Run the coupling: full decision tree (exact) or sampled transcripts (mc).
    Couple(Opts),
    /// Run one verifier.
    Verify(Opts),
    /// theta_n over a p-grid or an n-grid.
    Scan(Opts),
    /// Run the exact acceptance suite.
    Selftest(Opts),
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// Graph family: zd or tree.
    #[arg(long)]
    graph: Option<String>,
    /// Dimension (zd) or degree (tree).
    #[arg(long, alias = "degree")]
    dim: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    i: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma list or start:stop:step.
    #[arg(long)]
    p_grid: Option<String>,
    /// Comma list or start:stop:step.
    #[arg(long)]
    n_grid: Option<String>,
    /// Comma-separated edge parameters in canonical edge order.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// exact or mc.
    #[arg(long)]
    mode: Option<String>,
    /// Confidence level of Monte Carlo intervals.
    #[arg(long)]
    level: Option<f64>,
    /// Largest support enumerated in exact mode.
    #[arg(long)]
    cap: Option<usize>,
    /// Verifier name (verify).
    #[arg(long)]
    check: Option<String>,
    /// standard or product-form (thm-quant).
    #[arg(long)]
    variant: Option<String>,
    /// Floor for the summability check.
    #[arg(long)]
    floor: Option<f64>,
    /// External reference value of the critical point.
    #[arg(long)]
    pc_ref: Option<f64>,
    #[arg(long)]
    pc_ref_provenance: Option<String>,
    #[arg(long)]
    grid_x: Option<usize>,
    #[arg(long)]
    grid_a: Option<usize>,
    #[arg(long)]
    a_max: Option<f64>,
    /// Transcript index to dump (couple, mc).
    #[arg(long)]
    transcript: Option<u64>,
    /// Also run the Monte Carlo criteria (selftest).
    #[arg(long)]
    full: bool,
    /// Exit code used for inconclusive verdicts.
    #[arg(long)]
    inconclusive_exit: Option<i32>,
}

/// Failure modes of the runner; all map to exit code 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(perclab::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Run(perclab::Error::CapExceeded { size, cap }) => write!(
                f,
                "error: {size} edges exceed the enumeration cap {cap}; use a smaller --radius, --mode mc, or a larger --cap"
            ),
            CliError::Run(e @ perclab::Error::RadiusOutOfRange { .. }) => {
                write!(f, "error: {e}; increase --radius")
            }
            CliError::Run(e) => write!(f, "error: {e}"),
            CliError::Io(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl From<perclab::Error> for CliError {
    fn from(e: perclab::Error) -> Self {
        CliError::Run(e)
    }
}

fn split_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_num<T: std::str::FromStr>(s: &str, flag: &str) -> Result<T, CliError> {
    s.parse()
        .map_err(|_| CliError::Usage(format!("cannot parse `{s}` in {flag}")))
}

/// `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
fn parse_f64_grid(raw: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() == 3 {
        let (start, stop, step): (f64, f64, f64) = (
            parse_num(parts[0], flag)?,
            parse_num(parts[1], flag)?,
            parse_num(parts[2], flag)?,
        );
        if step <= 0.0 || stop < start {
            return Err(CliError::Usage(format!(
                "{flag}: need step > 0 and stop >= start"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Round to 12 decimals so 0.1:0.9:0.1 yields 0.3 rather than 0.30000000000000004.
        return Ok((0..count)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    split_list(raw).map(|s| parse_num(s, flag)).collect()
}

fn parse_usize_grid(raw: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() == 3 {
        let (start, stop, step): (usize, usize, usize) = (
            parse_num(parts[0], flag)?,
            parse_num(parts[1], flag)?,
            parse_num(parts[2], flag)?,
        );
        if step == 0 || stop < start {
            return Err(CliError::Usage(format!(
                "{flag}: need step > 0 and stop >= start"
            )));
        }
        return Ok((start..=stop).step_by(step).collect());
    }
    split_list(raw).map(|s| parse_num(s, flag)).collect()
}

impl Opts {
    fn into_config(self, command: &str) -> Result<ExperimentConfig, CliError> {
        Ok(ExperimentConfig {
            command: Some(command.to_string()),
            graph: self.graph,
            dim: self.dim,
            radius: self.radius,
            n: self.n,
            m: self.m,
            i: self.i,
            p: self.p,
            p_grid: self
                .p_grid
                .map(|s| parse_f64_grid(&s, "--p-grid"))
                .transpose()?,
            n_grid: self
                .n_grid
                .map(|s| parse_usize_grid(&s, "--n-grid"))
                .transpose()?,
            params: self
                .params
                .map(|s| {
                    split_list(&s)
                        .map(|x| parse_num(x, "--params"))
                        .collect::<Result<Vec<f64>, _>>()
                })
                .transpose()?,
            samples: self.samples,
            seed: self.seed,
            mode: self.mode,
            level: self.level,
            cap: self.cap,
            check: self.check,
            variant: self.variant,
            floor: self.floor,
            pc_ref: self.pc_ref,
            pc_ref_provenance: self.pc_ref_provenance,
            grid_x: self.grid_x,
            grid_a: self.grid_a,
            a_max: self.a_max,
            transcript: self.transcript,
            full: self.full.then_some(true),
            inconclusive_exit: self.inconclusive_exit,
            out: None,
        })
    }
}

/// What a command produced.
pub(crate) struct Outcome {
    pub csv: String,
    pub json: String,
    /// Extra text artefact `(file name, body)`; printed instead of the CSV when present.
    pub text: Option<(String, String)>,
    pub verdict: Option<Verdict>,
}

fn write_outputs(
    dir: &std::path::Path,
    cfg: &ExperimentConfig,
    outcome: &Outcome,
    seconds: f64,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("results.csv"), &outcome.csv).map_err(io)?;
    std::fs::write(dir.join("results.json"), &outcome.json).map_err(io)?;
    let mut outputs = vec!["results.csv".to_string(), "results.json".to_string()];
    if let Some((name, body)) = &outcome.text {
        std::fs::write(dir.join(name), body).map_err(io)?;
        outputs.push(name.clone());
    }
    let echo = ExperimentConfig {
        out: None,
        ..cfg.clone()
    };
    let manifest = serde_json::json!({
        "tool": "perclab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command,
        "seed": cfg.seed,
        "config": echo,
        "outputs": outputs,
        "verdict": outcome.verdict.map(Verdict::label),
        "wall_time_seconds": seconds,
    });
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(dir.join("manifest.json"), body).map_err(io)
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let (name, opts) = match cli.command {
        Command::Estimate(o) => ("estimate", o),
        Command::Exact(o) => ("exact", o),
        Command::Qmap(o) => ("qmap", o),
        Command::Couple(o) => ("couple", o),
        Command::Verify(o) => ("verify", o),
        Command::Scan(o) => ("scan", o),
        Command::Selftest(o) => ("selftest", o),
    };
    let mut cfg = opts.into_config(name)?;
    if let Some(path) = &cli.config {
        let file = ExperimentConfig::load(path).map_err(CliError::Usage)?;
        if let Some(other) = file.command.as_deref() {
            if other != name {
                return Err(CliError::Usage(format!(
                    "config is for `{other}`, not `{name}`"
                )));
            }
        }
        cfg = cfg.over(file);
    }
    cfg.out = cli.out.or(cfg.out);
    let threads = cli.threads.unwrap_or(0);
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let outcome = pool.install(|| commands::dispatch(&cfg))?;
    let seconds = start.elapsed().as_secs_f64();
    match &outcome.text {
        Some((_, body)) => print!("{body}"),
        None => print!("{}", outcome.csv),
    }
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &cfg, &outcome, seconds)?;
    }
    Ok(match outcome.verdict {
        Some(Verdict::Fail) => 2,
        Some(Verdict::Inconclusive) => cfg.inconclusive_exit.unwrap_or(3),
        _ => 0,
    })
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            1
        }
    }
}
