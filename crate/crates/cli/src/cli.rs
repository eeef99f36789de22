use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use excsim_core::experiments::coupler_angle;
use excsim_core::{two_port_oracle, GaussianCoupler};

use crate::config::{parse_config_for, render, RunConfig, Scenario};
use crate::error::{CliError, ConfigError};
use crate::output::fmt_f64;
use crate::run::execute;

#[derive(Debug, Parser)]
#[command(name = "excsim", version, about = "Exciton wave packets on coupled rings")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Integrator step (overrides `integrator.dt`).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// End time (overrides `integrator.t_end`).
    #[arg(long = "t-end", global = true, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Population oscillation under a site-independent coupling.
    Oscillation,
    /// One Gaussian coupler (50/50 splitter by default).
    Split,
    /// Two phased packets recombined by one coupler.
    Interfere,
    /// Two couplers with a phase element in between.
    Mzi,
    /// Parent ring coupled to several daughter rings.
    Multisplit,
    /// Free-form run.
    Custom,
    /// Parse and validate `--config`, print the resolved document.
    Validate,
    /// Print two-port predictions.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Coupler angle; derived from the coupler configuration when omitted.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Phase on channel 2 between two couplers.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// 1 for a single coupler, 2 for a Mach-Zehnder pair.
    #[arg(long)]
    pub stages: Option<u32>,
}

impl Command {
    fn scenario(&self) -> Option<Scenario> {
        match self {
            Command::Oscillation => Some(Scenario::Oscillation),
            Command::Split => Some(Scenario::BeamSplitter),
            Command::Interfere => Some(Scenario::Interference),
            Command::Mzi => Some(Scenario::MachZehnder),
            Command::Multisplit => Some(Scenario::Multichannel),
            Command::Custom => Some(Scenario::Custom),
            Command::Validate | Command::Oracle(_) => None,
        }
    }
}

fn load(global: &GlobalArgs, scenario: Option<Scenario>) -> Result<RunConfig, CliError> {
    let text = match &global.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    let mut config = parse_config_for(&text, scenario)?;
    config.apply_overrides(global.dt, global.t_end, global.out.clone())?;
    Ok(config)
}

fn oracle(global: &GlobalArgs, args: &OracleArgs) -> Result<String, CliError> {
    let theta = match args.theta {
        Some(t) => t,
        None => {
            let text = match &global.config {
                Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
                None => String::new(),
            };
            let c = parse_config_for(&text, None).or_else(|_| parse_config_for(&text, Some(Scenario::BeamSplitter)))?;
            let sigma_chi = c.coupling.sigma_chi.ok_or_else(|| {
                ConfigError::invalid("coupling.sigma_chi", "needed to derive theta; or pass --theta")
            })?;
            let coupler = GaussianCoupler {
                chi0: c.coupling.chi0,
                sigma_chi,
                center: c.coupling.center.unwrap_or(c.lattice.n_sites as f64 / 2.0),
            };
            coupler_angle(&coupler, &c.lattice_params()?, c.packet.wavenumber)?
        }
    };
    let stages = args.stages.unwrap_or(if args.delta.is_some() { 2 } else { 1 });
    let out = two_port_oracle(theta, args.delta, stages)?;
    let mut s = format!("theta = {}\n", fmt_f64(theta));
    for (i, u) in out.iter().enumerate() {
        s.push_str(&format!(
            "u{n} = {} {}i\nP{n} = {}\n",
            fmt_f64(u.re),
            if u.im < 0.0 { fmt_f64(u.im) } else { format!("+{}", fmt_f64(u.im)) },
            fmt_f64(u.norm_sqr()),
            n = i + 1
        ));
    }
    Ok(s)
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Validate => {
            let path = cli
                .global
                .config
                .as_ref()
                .ok_or_else(|| ConfigError::invalid("--config", "validate needs a configuration file"))?;
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let mut config = parse_config_for(&text, None)?;
            config.apply_overrides(cli.global.dt, cli.global.t_end, cli.global.out.clone())?;
            Ok(render(&config))
        }
        Command::Oracle(args) => oracle(&cli.global, args),
        cmd => {
            let config = load(&cli.global, cmd.scenario())?;
            let outcome = execute(&config)?;
            let mut s = String::new();
            for run in &outcome.runs {
                let pops: Vec<String> = run.final_populations.iter().map(|p| format!("{p:.6}")).collect();
                s.push_str(&format!("{}: P = [{}]\n", run.output_dir.display(), pops.join(", ")));
            }
            Ok(s)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
