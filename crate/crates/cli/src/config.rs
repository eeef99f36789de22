//! TOML run configuration.
//!
//! A document is read into [`RawConfig`] (every field optional, unknown keys
//! rejected), overlaid on the defaults of its scenario, and validated into a
//! [`RunConfig`]. [`render`] writes a resolved config back out; parsing the
//! result gives the same config.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use excsim_core::{calibrate_sigma_chi, LatticeParams, PacketSpec};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Oscillation,
    BeamSplitter,
    Interference,
    MachZehnder,
    Multichannel,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Oscillation,
        Scenario::BeamSplitter,
        Scenario::Interference,
        Scenario::MachZehnder,
        Scenario::Multichannel,
        Scenario::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Oscillation => "oscillation",
            Scenario::BeamSplitter => "beam_splitter",
            Scenario::Interference => "interference",
            Scenario::MachZehnder => "mach_zehnder",
            Scenario::Multichannel => "multichannel",
            Scenario::Custom => "custom",
        }
    }

    fn is_splitter_family(self) -> bool {
        matches!(
            self,
            Scenario::BeamSplitter | Scenario::Interference | Scenario::MachZehnder
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    Zero,
    Uniform,
    ExponentialSwitch,
    ExponentialRamp,
    SpatialGaussian,
}

impl CouplingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CouplingKind::Zero => "zero",
            CouplingKind::Uniform => "uniform",
            CouplingKind::ExponentialSwitch => "exponential_switch",
            CouplingKind::ExponentialRamp => "exponential_ramp",
            CouplingKind::SpatialGaussian => "spatial_gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Pair,
    Star,
}

// ---------------------------------------------------------------------------
// Document layer

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<RawLattice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub packet: Option<RawPacket>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<RawCoupling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<RawIntegrator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<RawOptions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLattice {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hopping: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPacket {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCoupling {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<CouplingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auto_sigma_chi: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrator {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_daughters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupler_separation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<PhaseConfig>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// Resolved layer

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub output_dir: PathBuf,
    pub lattice: LatticeConfig,
    pub packet: PacketConfig,
    pub coupling: CouplingConfig,
    pub integrator: IntegratorSection,
    pub options: OptionsConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub n_sites: usize,
    pub spacing: f64,
    pub site_energy: f64,
    pub hopping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketConfig {
    pub sigma: f64,
    /// `None` places the packet upstream of the coupler (splitter family only).
    pub center: Option<f64>,
    pub wavenumber: f64,
    pub channel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    pub kind: CouplingKind,
    pub chi0: f64,
    pub t0: f64,
    pub sigma_chi: Option<f64>,
    pub auto_sigma_chi: bool,
    /// `None` means the middle of the ring.
    pub center: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSection {
    pub dt: f64,
    /// `None` lets the scenario derive its end time.
    pub t_end: Option<f64>,
    pub sample_every: usize,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionsConfig {
    /// Mach-Zehnder phase on channel 2 between the couplers.
    pub delta: f64,
    /// Phase of the channel-2 packet relative to channel 1 in `interference`.
    pub pre_phase: f64,
    pub n_daughters: usize,
    /// Topology of `custom` runs.
    pub topology: TopologyKind,
    pub coupler_separation: Option<f64>,
    /// Scheduled phase kicks for `custom` runs.
    pub phases: Vec<PhaseConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub time: f64,
    /// Zero-based channel index.
    pub channel: usize,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Dotted key, e.g. `options.delta`.
    pub parameter: String,
    pub values: Vec<f64>,
}

impl SweepConfig {
    /// Column name used in `sweep.csv`: the last segment of the key.
    pub fn column(&self) -> &str {
        self.parameter.rsplit('.').next().unwrap_or(&self.parameter)
    }
}

/// Keys a sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 15] = [
    "lattice.spacing",
    "lattice.site_energy",
    "lattice.hopping",
    "packet.sigma",
    "packet.center",
    "packet.wavenumber",
    "coupling.chi0",
    "coupling.t0",
    "coupling.sigma_chi",
    "coupling.center",
    "integrator.dt",
    "integrator.t_end",
    "options.delta",
    "options.pre_phase",
    "options.coupler_separation",
];

/// Accepts a full key or an unambiguous last segment (`delta`).
pub fn canonical_sweep_parameter(name: &str) -> Result<&'static str> {
    if let Some(p) = SWEEP_PARAMETERS.iter().find(|p| **p == name) {
        return Ok(p);
    }
    let matches: Vec<&'static str> = SWEEP_PARAMETERS
        .iter()
        .copied()
        .filter(|p| p.rsplit('.').next() == Some(name))
        .collect();
    match matches.as_slice() {
        [one] => Ok(one),
        [] => Err(ConfigError::invalid(
            "sweep.parameter",
            format!(
                "unknown parameter `{name}`; expected one of {}",
                SWEEP_PARAMETERS.join(", ")
            ),
        )),
        many => Err(ConfigError::invalid(
            "sweep.parameter",
            format!("`{name}` is ambiguous: {}", many.join(", ")),
        )),
    }
}

fn defaults(scenario: Scenario) -> RunConfig {
    let splitter = scenario.is_splitter_family();
    let (kind, chi0) = match scenario {
        Scenario::Oscillation => (CouplingKind::ExponentialRamp, 0.02),
        Scenario::Multichannel => (CouplingKind::Uniform, 0.02),
        Scenario::Custom => (CouplingKind::Zero, 0.02),
        _ => (CouplingKind::SpatialGaussian, 0.1),
    };
    RunConfig {
        scenario,
        output_dir: PathBuf::from("excsim-out"),
        lattice: LatticeConfig {
            n_sites: 600,
            spacing: 1.0,
            site_energy: 0.0,
            hopping: 1.0,
        },
        packet: PacketConfig {
            sigma: 20.0,
            center: if splitter { None } else { Some(150.0) },
            wavenumber: if splitter { 5.34 } else { 0.942 },
            channel: 0,
        },
        coupling: CouplingConfig {
            kind,
            chi0,
            t0: 25.0,
            sigma_chi: None,
            auto_sigma_chi: false,
            center: None,
        },
        integrator: IntegratorSection {
            dt: 0.01,
            t_end: match scenario {
                Scenario::Oscillation => Some(250.0),
                Scenario::Custom => Some(100.0),
                _ => None,
            },
            sample_every: 10,
            snapshot_times: Vec::new(),
        },
        options: OptionsConfig {
            delta: 0.0,
            pre_phase: -FRAC_PI_2,
            n_daughters: 3,
            topology: TopologyKind::Pair,
            coupler_separation: None,
            phases: Vec::new(),
        },
        sweep: None,
    }
}

/// Parses a document whose `scenario` key is required.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_for(text, None)
}

/// Parses a document; `scenario` comes from the document or from `expected`,
/// and must agree when both are given.
pub fn parse_config_for(text: &str, expected: Option<Scenario>) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    resolve(raw, expected)
}

pub fn resolve(raw: RawConfig, expected: Option<Scenario>) -> Result<RunConfig> {
    let scenario = match (raw.scenario, expected) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::invalid(
                "scenario",
                format!("document says `{}` but `{}` was requested", a.as_str(), b.as_str()),
            ))
        }
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => {
            return Err(ConfigError::invalid(
                "scenario",
                format!(
                    "missing; expected one of {}",
                    Scenario::ALL.map(Scenario::as_str).join(", ")
                ),
            ))
        }
    };
    let mut c = defaults(scenario);
    if let Some(p) = raw.output_dir {
        c.output_dir = p;
    }
    if let Some(l) = raw.lattice {
        set(&mut c.lattice.n_sites, l.n_sites);
        set(&mut c.lattice.spacing, l.spacing);
        set(&mut c.lattice.site_energy, l.site_energy);
        set(&mut c.lattice.hopping, l.hopping);
    }
    if let Some(p) = raw.packet {
        set(&mut c.packet.sigma, p.sigma);
        if p.center.is_some() {
            c.packet.center = p.center;
        }
        set(&mut c.packet.wavenumber, p.wavenumber);
        set(&mut c.packet.channel, p.channel);
    }
    let raw_coupling = raw.coupling.unwrap_or_default();
    set(&mut c.coupling.kind, raw_coupling.kind);
    set(&mut c.coupling.chi0, raw_coupling.chi0);
    set(&mut c.coupling.t0, raw_coupling.t0);
    c.coupling.sigma_chi = raw_coupling.sigma_chi;
    c.coupling.center = raw_coupling.center;
    c.coupling.auto_sigma_chi = raw_coupling
        .auto_sigma_chi
        .unwrap_or(c.coupling.kind == CouplingKind::SpatialGaussian && raw_coupling.sigma_chi.is_none());
    if let Some(i) = raw.integrator {
        set(&mut c.integrator.dt, i.dt);
        if i.t_end.is_some() {
            c.integrator.t_end = i.t_end;
        }
        set(&mut c.integrator.sample_every, i.sample_every);
        set(&mut c.integrator.snapshot_times, i.snapshot_times);
    }
    if let Some(o) = raw.options {
        set(&mut c.options.delta, o.delta);
        set(&mut c.options.pre_phase, o.pre_phase);
        set(&mut c.options.n_daughters, o.n_daughters);
        set(&mut c.options.topology, o.topology);
        if o.coupler_separation.is_some() {
            c.options.coupler_separation = o.coupler_separation;
        }
        set(&mut c.options.phases, o.phases);
    }
    if let Some(s) = raw.sweep {
        let name = s
            .parameter
            .ok_or_else(|| ConfigError::invalid("sweep.parameter", "missing"))?;
        let values = s
            .values
            .ok_or_else(|| ConfigError::invalid("sweep.values", "missing"))?;
        c.sweep = Some(SweepConfig {
            parameter: canonical_sweep_parameter(&name)?.to_string(),
            values,
        });
    }

    validate_lattice(&c)?;
    if c.coupling.auto_sigma_chi {
        let lattice = c.lattice_params()?;
        let cal = calibrate_sigma_chi(c.coupling.chi0, c.packet.wavenumber, &lattice)
            .map_err(|e| ConfigError::invalid("coupling.auto_sigma_chi", e.to_string()))?;
        if let Some(given) = c.coupling.sigma_chi {
            if (given - cal).abs() > 1e-12 * cal.abs() {
                return Err(ConfigError::invalid(
                    "coupling.sigma_chi",
                    format!("{given} conflicts with auto_sigma_chi = true (calibrated value {cal})"),
                ));
            }
        }
        c.coupling.sigma_chi = Some(cal);
    }
    c.validate()?;
    if c.sweep.is_some() {
        c.sweep_children()?;
    }
    Ok(c)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be finite, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be >= 0, got {v}")))
    }
}

fn on_ring(key: &str, v: f64, n: usize) -> Result<()> {
    if v.is_finite() && v >= 0.0 && v < n as f64 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must lie in [0, {n}), got {v}")))
    }
}

fn validate_lattice(c: &RunConfig) -> Result<()> {
    let l = &c.lattice;
    if l.n_sites < 4 {
        return Err(ConfigError::invalid(
            "lattice.n_sites",
            format!("must be >= 4, got {}", l.n_sites),
        ));
    }
    positive("lattice.spacing", l.spacing)?;
    finite("lattice.site_energy", l.site_energy)?;
    finite("lattice.hopping", l.hopping)?;
    if l.hopping == 0.0 {
        return Err(ConfigError::invalid("lattice.hopping", "must be nonzero"));
    }
    Ok(())
}

impl RunConfig {
    pub fn lattice_params(&self) -> Result<LatticeParams> {
        let l = &self.lattice;
        LatticeParams::new(l.n_sites, l.spacing, l.site_energy, l.hopping)
            .map_err(|e| ConfigError::invalid("lattice", e.to_string()))
    }

    pub fn n_channels(&self) -> usize {
        match self.scenario {
            Scenario::Multichannel => self.options.n_daughters + 1,
            Scenario::Custom if self.options.topology == TopologyKind::Star => self.options.n_daughters + 1,
            _ => 2,
        }
    }

    /// Checks every invariant and names the first offending key.
    pub fn validate(&self) -> Result<()> {
        validate_lattice(self)?;
        let n = self.lattice.n_sites;
        let lattice = self.lattice_params()?;

        let p = &self.packet;
        positive("packet.sigma", p.sigma)?;
        finite("packet.wavenumber", p.wavenumber)?;
        if let Some(center) = p.center {
            on_ring("packet.center", center, n)?;
        } else if !self.scenario.is_splitter_family() {
            return Err(ConfigError::invalid("packet.center", "required for this scenario"));
        }
        if p.channel >= self.n_channels() {
            return Err(ConfigError::invalid(
                "packet.channel",
                format!("must be < {} (zero-based), got {}", self.n_channels(), p.channel),
            ));
        }
        if self.scenario.is_splitter_family() && self.scenario != Scenario::BeamSplitter && p.channel != 0 {
            return Err(ConfigError::invalid(
                "packet.channel",
                "only beam_splitter accepts an input channel other than 0",
            ));
        }
        let spec = PacketSpec {
            sigma: p.sigma,
            center: p.center.unwrap_or(0.0),
            wavenumber: p.wavenumber,
            channel: 0,
        };
        spec.validate(&lattice, 1)
            .map_err(|e| ConfigError::invalid("packet.sigma", e.to_string()))?;

        let k = &self.coupling;
        non_negative("coupling.chi0", k.chi0)?;
        positive("coupling.t0", k.t0)?;
        if let Some(s) = k.sigma_chi {
            positive("coupling.sigma_chi", s)?;
        } else if k.kind == CouplingKind::SpatialGaussian {
            return Err(ConfigError::invalid(
                "coupling.sigma_chi",
                "required for spatial_gaussian unless auto_sigma_chi = true",
            ));
        }
        if k.auto_sigma_chi {
            let cal = calibrate_sigma_chi(k.chi0, p.wavenumber, &lattice)
                .map_err(|e| ConfigError::invalid("coupling.auto_sigma_chi", e.to_string()))?;
            if k.sigma_chi.is_none_or(|s| (s - cal).abs() > 1e-12 * cal.abs()) {
                return Err(ConfigError::invalid(
                    "coupling.sigma_chi",
                    format!("does not match the calibrated value {cal}"),
                ));
            }
        }
        if let Some(c) = k.center {
            on_ring("coupling.center", c, n)?;
        }
        let allowed: &[CouplingKind] = match self.scenario {
            Scenario::Oscillation => &[
                CouplingKind::Zero,
                CouplingKind::Uniform,
                CouplingKind::ExponentialSwitch,
                CouplingKind::ExponentialRamp,
            ],
            Scenario::Multichannel => &[CouplingKind::Uniform],
            Scenario::Custom => &[
                CouplingKind::Zero,
                CouplingKind::Uniform,
                CouplingKind::ExponentialSwitch,
                CouplingKind::ExponentialRamp,
                CouplingKind::SpatialGaussian,
            ],
            _ => &[CouplingKind::SpatialGaussian],
        };
        if !allowed.contains(&k.kind) {
            return Err(ConfigError::invalid(
                "coupling.kind",
                format!(
                    "`{}` is not available for {}; use one of {}",
                    k.kind.as_str(),
                    self.scenario.as_str(),
                    allowed.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(", ")
                ),
            ));
        }

        let i = &self.integrator;
        positive("integrator.dt", i.dt)?;
        if let Some(t) = i.t_end {
            non_negative("integrator.t_end", t)?;
        }
        if i.sample_every == 0 {
            return Err(ConfigError::invalid("integrator.sample_every", "must be >= 1"));
        }
        for t in &i.snapshot_times {
            non_negative("integrator.snapshot_times", *t)?;
        }

        let o = &self.options;
        finite("options.delta", o.delta)?;
        finite("options.pre_phase", o.pre_phase)?;
        if o.n_daughters == 0 {
            return Err(ConfigError::invalid("options.n_daughters", "must be >= 1"));
        }
        if let Some(s) = o.coupler_separation {
            positive("options.coupler_separation", s)?;
        }
        let mut last = f64::NEG_INFINITY;
        for ph in &o.phases {
            non_negative("options.phases.time", ph.time)?;
            finite("options.phases.phase", ph.phase)?;
            if ph.channel >= self.n_channels() {
                return Err(ConfigError::invalid(
                    "options.phases.channel",
                    format!("must be < {}, got {}", self.n_channels(), ph.channel),
                ));
            }
            if ph.time < last {
                return Err(ConfigError::invalid("options.phases", "must be sorted by time"));
            }
            last = ph.time;
        }

        if let Some(s) = &self.sweep {
            canonical_sweep_parameter(&s.parameter)?;
            if s.values.is_empty() {
                return Err(ConfigError::invalid("sweep.values", "must not be empty"));
            }
            for v in &s.values {
                finite("sweep.values", *v)?;
            }
        }
        Ok(())
    }

    /// One resolved config per sweep value, in input order, with output
    /// directories `000`, `001`, ... under the parent's.
    pub fn sweep_children(&self) -> Result<Vec<RunConfig>> {
        let Some(sweep) = &self.sweep else {
            return Ok(Vec::new());
        };
        let width = sweep.values.len().saturating_sub(1).to_string().len().max(3);
        sweep
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut raw = to_raw(self);
                raw.sweep = None;
                let coupling = raw.coupling.get_or_insert_with(Default::default);
                if sweep.parameter == "coupling.sigma_chi" {
                    coupling.auto_sigma_chi = Some(false);
                } else if self.coupling.auto_sigma_chi {
                    coupling.sigma_chi = None;
                }
                set_parameter(&mut raw, &sweep.parameter, v);
                raw.output_dir = Some(self.output_dir.join(format!("{i:0width$}")));
                resolve(raw, None).map_err(|e| {
                    ConfigError::invalid(format!("sweep.values[{i}]"), format!("{} = {v}: {e}", sweep.parameter))
                })
            })
            .collect()
    }

    /// Replaces the integrator step, the end time and the output directory.
    pub fn apply_overrides(&mut self, dt: Option<f64>, t_end: Option<f64>, out: Option<PathBuf>) -> Result<()> {
        set(&mut self.integrator.dt, dt);
        if t_end.is_some() {
            self.integrator.t_end = t_end;
        }
        set(&mut self.output_dir, out);
        self.validate()?;
        if self.sweep.is_some() {
            self.sweep_children()?;
        }
        Ok(())
    }
}

fn set_parameter(raw: &mut RawConfig, key: &str, v: f64) {
    match key {
        "lattice.spacing" => raw.lattice.get_or_insert_with(Default::default).spacing = Some(v),
        "lattice.site_energy" => raw.lattice.get_or_insert_with(Default::default).site_energy = Some(v),
        "lattice.hopping" => raw.lattice.get_or_insert_with(Default::default).hopping = Some(v),
        "packet.sigma" => raw.packet.get_or_insert_with(Default::default).sigma = Some(v),
        "packet.center" => raw.packet.get_or_insert_with(Default::default).center = Some(v),
        "packet.wavenumber" => raw.packet.get_or_insert_with(Default::default).wavenumber = Some(v),
        "coupling.chi0" => raw.coupling.get_or_insert_with(Default::default).chi0 = Some(v),
        "coupling.t0" => raw.coupling.get_or_insert_with(Default::default).t0 = Some(v),
        "coupling.sigma_chi" => raw.coupling.get_or_insert_with(Default::default).sigma_chi = Some(v),
        "coupling.center" => raw.coupling.get_or_insert_with(Default::default).center = Some(v),
        "integrator.dt" => raw.integrator.get_or_insert_with(Default::default).dt = Some(v),
        "integrator.t_end" => raw.integrator.get_or_insert_with(Default::default).t_end = Some(v),
        "options.delta" => raw.options.get_or_insert_with(Default::default).delta = Some(v),
        "options.pre_phase" => raw.options.get_or_insert_with(Default::default).pre_phase = Some(v),
        "options.coupler_separation" => {
            raw.options.get_or_insert_with(Default::default).coupler_separation = Some(v)
        }
        other => unreachable!("sweep parameter {other} was validated"),
    }
}

/// Every resolved value, spelled out.
pub fn to_raw(c: &RunConfig) -> RawConfig {
    RawConfig {
        scenario: Some(c.scenario),
        output_dir: Some(c.output_dir.clone()),
        lattice: Some(RawLattice {
            n_sites: Some(c.lattice.n_sites),
            spacing: Some(c.lattice.spacing),
            site_energy: Some(c.lattice.site_energy),
            hopping: Some(c.lattice.hopping),
        }),
        packet: Some(RawPacket {
            sigma: Some(c.packet.sigma),
            center: c.packet.center,
            wavenumber: Some(c.packet.wavenumber),
            channel: Some(c.packet.channel),
        }),
        coupling: Some(RawCoupling {
            kind: Some(c.coupling.kind),
            chi0: Some(c.coupling.chi0),
            t0: Some(c.coupling.t0),
            sigma_chi: c.coupling.sigma_chi,
            auto_sigma_chi: Some(c.coupling.auto_sigma_chi),
            center: c.coupling.center,
        }),
        integrator: Some(RawIntegrator {
            dt: Some(c.integrator.dt),
            t_end: c.integrator.t_end,
            sample_every: Some(c.integrator.sample_every),
            snapshot_times: Some(c.integrator.snapshot_times.clone()),
        }),
        options: Some(RawOptions {
            delta: Some(c.options.delta),
            pre_phase: Some(c.options.pre_phase),
            n_daughters: Some(c.options.n_daughters),
            topology: Some(c.options.topology),
            coupler_separation: c.options.coupler_separation,
            phases: Some(c.options.phases.clone()),
        }),
        sweep: c.sweep.as_ref().map(|s| RawSweep {
            parameter: Some(s.parameter.clone()),
            values: Some(s.values.clone()),
        }),
    }
}

/// TOML document that parses back to `c`.
pub fn render(c: &RunConfig) -> String {
    toml::to_string(&to_raw(c)).expect("resolved configs serialize")
}
