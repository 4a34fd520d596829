//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gammakit_core::homogenize::effective_tensor_with_fields;
use gammakit_core::physics::catalog;
use gammakit_core::solver::Solver;
use gammakit_core::SolveOptions;

use crate::config::RunConfig;
use crate::error::{io_err, Error, Result};
use crate::report::{self, EffectiveOutput, SolveOutput};
use crate::verify::{self, Context};
use crate::{gfld, RustFft};

/// Writes to stdout, ignoring errors such as a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

macro_rules! sayln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gammakit", version, about = "Spectral solver for linear periodic field problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for FFTs.
    #[arg(long, global = true, env = "GAMMAKIT_THREADS")]
    pub threads: Option<usize>,
    /// Seed for verification sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Relative residual target, overriding the config.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Samples per axis, overriding the config grid.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Omit wall-clock times so identical runs produce identical reports.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one cell problem; writes E.gfld, J.gfld and report.json into --out.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a CSV line profile through the cell center, e.g. `axis=1`.
        #[arg(long, value_parser = parse_profile)]
        profile: Option<usize>,
    },
    /// Effective tensor and source; writes effective.json into --out, or prints it.
    Homogenize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the unit-field solutions of every column as GFLD files (needs --out).
        #[arg(long)]
        fields: bool,
    },
    /// Run an invariant battery: projections, adjoint, dual, nullt, levin, closure, perturb, penalty.
    Verify {
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List supported physics with their layouts and projections.
    Catalog,
}

fn parse_profile(s: &str) -> std::result::Result<usize, String> {
    let v = s.strip_prefix("axis=").ok_or_else(|| format!("expected axis=N, got {s:?}"))?;
    v.parse().map_err(|e| format!("axis: {e}"))
}

fn now() -> f64 {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}

/// Parses arguments and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // Fails only when a pool already exists, e.g. on a second call in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Solve { config, out, profile } => solve(cli, config, out, *profile),
        Command::Homogenize { config, out, fields } => homogenize(cli, config, out.as_deref(), *fields),
        Command::Verify { suite, config, out } => verify_cmd(cli, suite, config.as_deref(), out.as_deref()),
        Command::Catalog => catalog_cmd(cli),
    }
}

fn load(cli: &Cli, path: &Path) -> Result<(RunConfig, SolveOptions)> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(n) = cli.resolution {
        cfg.set_resolution(n)?;
    }
    let mut opts = cfg.solve_options();
    if let Some(t) = cli.tol {
        opts.tolerance = t;
    }
    if !cli.deterministic {
        opts.clock = Some(now);
    }
    Ok((cfg, opts))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn solve(cli: &Cli, config: &Path, out: &Path, profile: Option<usize>) -> Result<i32> {
    let (cfg, opts) = load(cli, config)?;
    let backend = RustFft::new();
    let p = cfg.build(&backend)?;
    let e0 = cfg.applied(p.m())?;
    if let Some(axis) = profile {
        if axis >= p.grid().dim() {
            return Err(Error::Config(format!("--profile axis={axis} on a {}-d grid", p.grid().dim())));
        }
    }
    let sol = Solver::new(&p, &backend, opts)?.solve_cell(&e0)?;
    create_dir(out)?;
    gfld::write_file(&out.join("E.gfld"), &sol.e)?;
    gfld::write_file(&out.join("J.gfld"), &sol.j)?;
    let converged = sol.report.converged;
    let output = SolveOutput { problem: report::ProblemSummary::of(&p), applied: e0, j0: sol.j0.clone(), report: sol.report };
    let text = report::to_json(&output)?;
    write_text(&out.join("report.json"), &text)?;
    if let Some(axis) = profile {
        let path = out.join(format!("profile_axis{axis}.csv"));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        report::write_profile(std::io::BufWriter::new(file), axis, &[("E", &sol.e), ("J", &sol.j)]).map_err(io_err(&path))?;
    }
    if cli.json {
        say!("{text}");
    } else {
        sayln!(
            "{}: {} after {} iterations, relative residual {:e}",
            p.meta.physics,
            if converged { "converged" } else { "NOT converged" },
            output.report.iterations,
            output.report.relative_residual
        );
    }
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn homogenize(cli: &Cli, config: &Path, out: Option<&Path>, fields: bool) -> Result<i32> {
    if fields && out.is_none() {
        return Err(Error::Config("--fields needs --out".into()));
    }
    let (cfg, opts) = load(cli, config)?;
    let backend = RustFft::new();
    let p = cfg.build(&backend)?;
    let (eff, sols) = effective_tensor_with_fields(&p, &opts, &backend)?;
    let ok = eff.all_converged();
    let output = EffectiveOutput::new(&p, eff);
    let text = report::to_json(&output)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_text(&dir.join("effective.json"), &text)?;
        if fields {
            for (j, s) in sols.iter().enumerate() {
                gfld::write_file(&dir.join(format!("column{j}_E.gfld")), &s.e)?;
                gfld::write_file(&dir.join(format!("column{j}_J.gfld")), &s.j)?;
            }
        }
    }
    if cli.json || out.is_none() {
        say!("{text}");
    } else {
        sayln!("L* ({} × {}), basis {:?}", output.basis.len(), output.basis.len(), output.basis);
        for row in &output.l_star {
            let cells: Vec<String> = row.iter().map(|v| format!("{:>14.8e}{:+.2e}i", v.re, v.im)).collect();
            sayln!("  {}", cells.join("  "));
        }
    }
    if !ok {
        let mask: Vec<usize> = output.failed.iter().enumerate().filter(|(_, &f)| f).map(|(j, _)| j).collect();
        eprintln!("non-convergence: failed columns {mask:?}");
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

fn verify_cmd(cli: &Cli, suite: &str, config: Option<&Path>, out: Option<&Path>) -> Result<i32> {
    if !verify::SUITES.contains(&suite) {
        return Err(Error::Config(format!("unknown suite {suite:?}; expected one of {}", verify::SUITES.join(", "))));
    }
    let cfg = match config {
        Some(path) => Some(load(cli, path)?.0),
        None => None,
    };
    let backend = RustFft::new();
    let ctx = Context { backend: &backend, seed: cli.seed, resolution: cli.resolution, tolerance: cli.tol, config: cfg.as_ref() };
    let r = verify::run(suite, &ctx)?;
    let text = report::to_json(&r)?;
    if let Some(path) = out {
        write_text(path, &text)?;
    }
    if cli.json {
        say!("{text}");
    } else {
        for c in &r.checks {
            sayln!("{} {}: {:e} (tolerance {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
        }
    }
    Ok(if r.passed { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn catalog_cmd(cli: &Cli) -> Result<i32> {
    let entries = catalog();
    if cli.json {
        say!("{}", report::to_json(&entries)?);
        return Ok(EXIT_OK);
    }
    for e in &entries {
        let kinds: Vec<String> = e.layout.iter().map(|k| format!("{k:?}")).collect();
        sayln!("{:<22} d={:?}  layout [{}]  gamma {:?}", e.tag, e.dims, kinds.join(", "), e.gamma);
        sayln!("{:<22} {}", "", e.description);
    }
    Ok(EXIT_OK)
}
