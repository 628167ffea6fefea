//! `phasemargins` experiment runner.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, Convolver, DataMode, GridSection, Method, RawConfig, RunConfig};
use report::Report;

#[derive(Parser)]
#[command(name = "phasemargins", version, about = "Phase-space observable experiments with machine-checkable reports")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// μ̂ curve, zero table, Weyl field and verdicts for the interval/sinc probe.
    VerifyProp1,
    /// Truncated strip construction: f, f̂, Q*, verdicts on f*Husimi.
    VerifyProp2,
    /// Forward-simulate a margin and reconstruct the position density.
    Reconstruct,
    /// Completeness, regularity and margin verdicts for a preset operator.
    CompletenessCheck,
}

#[derive(Args)]
struct Overrides {
    /// TOML config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// husimi, prop1, prop2:N or remark-f0.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Relative zero threshold for support scans.
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Real Hermite coefficients, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    state: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    convolver: Option<ConvolverArg>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, global = true, value_enum)]
    data: Option<DataArg>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    l1_bound: Option<f64>,
    #[arg(long, global = true)]
    moment_degree: Option<usize>,
    /// Points per axis of the phase-space grid (the line grid for reconstruct).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ConvolverArg {
    Husimi,
    Prop1,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum MethodArg {
    Fourier,
    Moments,
    Both,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum DataArg {
    Exact,
    Sampled,
}

impl Cmd {
    fn command(self) -> Command {
        match self {
            Cmd::VerifyProp1 => Command::VerifyProp1,
            Cmd::VerifyProp2 => Command::VerifyProp2,
            Cmd::Reconstruct => Command::Reconstruct,
            Cmd::CompletenessCheck => Command::CompletenessCheck,
        }
    }
}

impl Overrides {
    fn raw(&self, command: Command) -> RawConfig {
        let mut grid = GridSection::default();
        if command == Command::Reconstruct {
            grid.line_n = self.grid_n;
        } else {
            grid.field_n = self.grid_n;
        }
        RawConfig {
            preset: self.preset.clone(),
            seed: self.seed,
            out: self.out.clone(),
            epsilon: self.eps,
            n_max: self.n_max,
            state: self.state.clone(),
            convolver: self.convolver.map(|c| match c {
                ConvolverArg::Husimi => Convolver::Husimi,
                ConvolverArg::Prop1 => Convolver::Prop1,
            }),
            method: self.method.map(|m| match m {
                MethodArg::Fourier => Method::Fourier,
                MethodArg::Moments => Method::Moments,
                MethodArg::Both => Method::Both,
            }),
            data: self.data.map(|d| match d {
                DataArg::Exact => DataMode::Exact,
                DataArg::Sampled => DataMode::Sampled,
            }),
            samples: self.samples,
            l1_bound: self.l1_bound,
            moment_degree: self.moment_degree,
            expect_completeness: None,
            expect_margins: None,
            grid,
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, config::ConfigError> {
    let command = cli.command.command();
    let file = match &cli.overrides.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    RunConfig::resolve(command, file.overlay(cli.overrides.raw(command)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        eprintln!("configuration error: cannot create {}: {e}", cfg.out.display());
        return ExitCode::from(2);
    }
    let out = cfg.out.clone();
    let mut report = Report::new(cfg);
    if let Err(e) = commands::run(&mut report) {
        report.check("run", false, e.to_string());
    }
    print!("{}", report.summary());
    match report.write(&out) {
        Ok(path) => println!("report: {}", path.display()),
        Err(e) => {
            eprintln!("cannot write report: {e}");
            return ExitCode::from(1);
        }
    }
    if report.verdict.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
