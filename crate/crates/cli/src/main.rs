mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{Example, Measure, MethodArg, Problem, Resolved, RuleArg, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Core(#[from] nestot::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use nestot::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(
                E::InvalidGrid(_)
                | E::NegativeDensity { .. }
                | E::ZeroMass
                | E::InvalidTargets(_)
                | E::UnsupportedCost(_)
                | E::Config(_),
            ) => 2,
            CliError::Solver(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nestot", version, about = "Semi-discrete congestion and hedonic transport solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one configuration and write its report row.
    Solve(SolveArgs),
    /// Solve, then test the tessellation(s) for nestedness.
    Check(CommonArgs),
    /// A-priori nestedness certificate (bilinear quadratic profile with --a).
    Certify(CertifyArgs),
    /// Methods × N table for one example.
    Benchmark(BenchmarkArgs),
    /// Error function sampled over a grid of C values.
    Sweep(SweepArgs),
    /// Solve and draw the tessellation(s) as SVG.
    Plot(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<Problem>,
    #[arg(long, value_enum)]
    example: Option<Example>,
    #[arg(long = "n", short = 'n')]
    n: Option<usize>,
    #[arg(long, value_enum)]
    measure: Option<Measure>,
    /// Second population (hedonic problem).
    #[arg(long, value_enum)]
    measure2: Option<Measure>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Grid resolution M (cells per side); default from NESTOT_GRID, else 512.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum)]
    mass_rule: Option<RuleArg>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    #[arg(long = "c0", allow_negative_numbers = true)]
    c0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c_max: Option<f64>,
    /// Hedonic gauge constant C.
    #[arg(long, allow_negative_numbers = true)]
    hedonic_c: Option<f64>,
    /// Report CSV path (stdout when absent).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Include wall-clock times (otherwise 0, for reproducible output).
    #[arg(long)]
    timing: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<(Resolved, RunConfig), CliError> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let c_interval = match (self.c_min, self.c_max) {
            (None, None) => None,
            (lo, hi) => {
                let base = file.c_interval.unwrap_or([-5.0, 0.0]);
                Some([lo.unwrap_or(base[0]), hi.unwrap_or(base[1])])
            }
        };
        let flags = RunConfig {
            problem: self.problem,
            example: self.example,
            n: self.n,
            measure: self.measure,
            measure2: self.measure2,
            method: self.method,
            grid: self.grid,
            mass_rule: self.mass_rule,
            tol: self.tol,
            maxit: self.maxit,
            c0: self.c0,
            c_interval,
            c: self.hedonic_c,
            targets: None,
            csv: self.csv.clone(),
            svg: self.svg.clone(),
            error_curve: None,
        };
        let merged = file.overridden_by(flags);
        Ok((merged.resolve()?, merged))
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Divisor A of the profile F(y) = y²/A; selects the bilinear instance.
    #[arg(long = "A", visible_alias = "a")]
    a: Option<f64>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target counts; pass the flag with no values for an empty matrix.
    #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = vec![3usize, 6, 12])]
    ns: Vec<usize>,
    /// Methods; all four when absent.
    #[arg(long, value_enum, value_delimiter = ',', num_args = 0..)]
    methods: Option<Vec<MethodArg>>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    to: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Explicit C values (overrides --from/--to/--step).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn solver_status(report: &nestot::report::SolveReport) -> Result<(), CliError> {
    if report.is_success() {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "{} finished with status {}{}",
            report.method,
            report.status,
            report.message.as_ref().map(|m| format!(": {m}")).unwrap_or_default()
        )))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => {
            let (cfg, raw) = args.common.resolve()?;
            let report = commands::solve(&cfg, cfg.method)?;
            let out = commands::open_output(raw.csv.as_deref())?;
            commands::write_solve_csv(out, std::slice::from_ref(&report), args.common.timing)?;
            if let Some(path) = &raw.svg {
                if report.potentials.v.len() == cfg.n {
                    std::fs::write(path, commands::render_svg(&cfg, &report)?)?;
                }
            }
            solver_status(&report)
        }
        Command::Check(args) => {
            let (cfg, _) = args.resolve()?;
            let (report, outcome) = commands::check(&cfg, cfg.method)?;
            println!("{}", outcome.verdict);
            eprintln!("{} ({}): {}", report.method, report.status, outcome.detail);
            Ok(())
        }
        Command::Certify(args) => {
            let (cfg, raw) = args.common.resolve()?;
            let cert = commands::certify(&cfg, args.a)?;
            if let Some(path) = &raw.csv {
                cert.write_csv(std::fs::File::create(path)?)?;
            }
            println!("{}", commands::certificate_verdict(&cert));
            eprintln!("M_c = {:.6}", cert.mc);
            Ok(())
        }
        Command::Benchmark(args) => {
            let (cfg, raw) = args.common.resolve()?;
            let methods = args.methods.unwrap_or_else(|| MethodArg::ALL.to_vec());
            let rows = commands::benchmark(&cfg, &args.ns, &methods);
            let out = commands::open_output(raw.csv.as_deref())?;
            commands::write_solve_csv(out, &rows, args.common.timing)
        }
        Command::Sweep(args) => {
            let (cfg, raw) = args.common.resolve()?;
            let cs = match args.values {
                Some(v) => v,
                None => commands::c_grid(args.from, args.to, args.step)?,
            };
            let rows = commands::sweep(&cfg, &cs)?;
            let path = args.out.or(raw.error_curve);
            commands::write_sweep_csv(commands::open_output(path.as_deref())?, &rows)
        }
        Command::Plot(args) => {
            let (cfg, raw) = args.resolve()?;
            let path = raw.svg.ok_or_else(|| CliError::Config("plot needs --svg <path>".into()))?;
            let report = commands::solve(&cfg, cfg.method)?;
            std::fs::write(&path, commands::render_svg(&cfg, &report)?)?;
            eprintln!("{} ({}) -> {}", report.method, report.status, path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
