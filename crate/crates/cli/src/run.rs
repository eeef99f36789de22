//! Turns a [`RunConfig`] into core scenario calls and writes the results.

use std::path::PathBuf;

use excsim_core::experiments::{
    run_beam_splitter, run_custom, run_interference, run_mach_zehnder, run_multichannel_split,
    run_oscillation, CustomSetup, MultichannelSetup, OscillationSetup, ScenarioReport, SplitterSetup,
    StepControl,
};
use excsim_core::{CouplingProfile, PacketSpec, ScheduledPhase, SwitchShape, Topology};
use rayon::prelude::*;

use crate::config::{CouplingKind, RunConfig, Scenario, TopologyKind};
use crate::error::{CliError, ConfigError};
use crate::output;

/// Caps sweep parallelism; unset means one worker per available processor.
pub const THREADS_ENV: &str = "EXCSIM_THREADS";

/// What one `execute` call produced.
#[derive(Debug)]
pub struct Outcome {
    pub output_dir: PathBuf,
    /// One entry for a plain run, one per value for a sweep.
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub final_populations: Vec<f64>,
}

fn step_control(c: &RunConfig) -> StepControl {
    StepControl {
        dt: c.integrator.dt,
        sample_every: c.integrator.sample_every,
        t_end: c.integrator.t_end,
        snapshot_times: c.integrator.snapshot_times.clone(),
    }
}

fn packet_spec(c: &RunConfig) -> Result<PacketSpec, CliError> {
    let center = c
        .packet
        .center
        .ok_or_else(|| ConfigError::invalid("packet.center", "required for this scenario"))?;
    Ok(PacketSpec {
        sigma: c.packet.sigma,
        center,
        wavenumber: c.packet.wavenumber,
        channel: c.packet.channel,
    })
}

fn profile(c: &RunConfig) -> Result<CouplingProfile, CliError> {
    let k = &c.coupling;
    let p = match k.kind {
        CouplingKind::Zero => CouplingProfile::Zero,
        CouplingKind::Uniform => CouplingProfile::uniform(k.chi0)?,
        CouplingKind::ExponentialSwitch => CouplingProfile::switch(k.chi0, k.t0, SwitchShape::Decay)?,
        CouplingKind::ExponentialRamp => CouplingProfile::switch(k.chi0, k.t0, SwitchShape::Ramp)?,
        CouplingKind::SpatialGaussian => {
            let sigma_chi = k
                .sigma_chi
                .ok_or_else(|| ConfigError::invalid("coupling.sigma_chi", "missing"))?;
            let center = k.center.unwrap_or(c.lattice.n_sites as f64 / 2.0);
            CouplingProfile::spatial_gaussian(k.chi0, sigma_chi, center, &c.lattice_params()?)?
        }
    };
    Ok(p)
}

fn splitter_setup(c: &RunConfig) -> Result<SplitterSetup, CliError> {
    Ok(SplitterSetup {
        lattice: c.lattice_params()?,
        chi0: c.coupling.chi0,
        k0: c.packet.wavenumber,
        sigma: c.packet.sigma,
        sigma_chi: c.coupling.sigma_chi,
        center: c.coupling.center,
        launch: c.packet.center,
        input_channel: c.packet.channel,
        step: step_control(c),
    })
}

/// Runs the scenario of a config that has no sweep.
pub fn simulate(c: &RunConfig) -> Result<ScenarioReport, CliError> {
    let report = match c.scenario {
        Scenario::Oscillation => run_oscillation(&OscillationSetup {
            lattice: c.lattice_params()?,
            profile: profile(c)?,
            packet: packet_spec(c)?,
            step: step_control(c),
        })?,
        Scenario::BeamSplitter => run_beam_splitter(&splitter_setup(c)?)?,
        Scenario::Interference => run_interference(&splitter_setup(c)?, c.options.pre_phase)?,
        Scenario::MachZehnder => run_mach_zehnder(
            &splitter_setup(c)?,
            c.options.delta,
            c.options.coupler_separation,
        )?,
        Scenario::Multichannel => run_multichannel_split(&MultichannelSetup {
            lattice: c.lattice_params()?,
            n_daughters: c.options.n_daughters,
            chi: c.coupling.chi0,
            packet: packet_spec(c)?,
            step: step_control(c),
        })?,
        Scenario::Custom => run_custom(&CustomSetup {
            lattice: c.lattice_params()?,
            profile: profile(c)?,
            topology: match c.options.topology {
                TopologyKind::Pair => Topology::Pair,
                TopologyKind::Star => Topology::Star {
                    daughters: c.options.n_daughters,
                },
            },
            packet: packet_spec(c)?,
            phases: c
                .options
                .phases
                .iter()
                .map(|p| ScheduledPhase {
                    time: p.time,
                    channel: p.channel,
                    phase: p.phase,
                })
                .collect(),
            step: step_control(c),
        })?,
    };
    check_finite(&report)?;
    Ok(report)
}

fn check_finite(r: &ScenarioReport) -> Result<(), CliError> {
    if let Some((k, v)) = r.metrics.iter().find(|(_, v)| !v.is_finite()) {
        return Err(CliError::NonFinite(format!("metric {k} = {v}")));
    }
    let t = &r.trajectory;
    let bad = t.times.iter().chain(&t.norms).chain(t.populations.iter().flatten());
    if bad.clone().any(|v| !v.is_finite()) {
        return Err(CliError::NonFinite("trajectory".into()));
    }
    Ok(())
}

fn run_one(c: &RunConfig) -> Result<RunSummary, CliError> {
    let report = simulate(c)?;
    output::write_run(&c.output_dir, c, &report)?;
    Ok(RunSummary {
        output_dir: c.output_dir.clone(),
        final_populations: report.final_populations,
    })
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(ConfigError::invalid(THREADS_ENV, format!("must be a positive integer, got `{s}`")).into()),
        },
    }
}

/// Runs `config` (every child of a sweep, possibly in parallel) and writes
/// all output files under its `output_dir`.
pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    let dir = config.output_dir.clone();
    let Some(sweep) = &config.sweep else {
        let run = run_one(config)?;
        return Ok(Outcome {
            output_dir: dir,
            runs: vec![run],
        });
    };

    let children = config.sweep_children()?;
    output::create_dir(&dir)?;
    output::write_manifest(&dir, config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::io(&dir, std::io::Error::other(e)))?;
    let results: Vec<Result<RunSummary, CliError>> =
        pool.install(|| children.par_iter().map(run_one).collect());
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    output::write_sweep_csv(&dir.join(output::SWEEP_FILE), sweep.column(), &sweep.values, &runs)?;
    Ok(Outcome { output_dir: dir, runs })
}
