//! Scenario builders (channel oscillation, beam splitter, recombination,
//! Mach-Zehnder, star splitter) and the closed-form two-port oracle they are
//! checked against.
//!
//! The splitter-family scenarios place the packet upstream of the coupler in
//! whatever direction the carrier actually travels, so a `k0` with
//! `sin(k0 a) < 0` simply launches the packet on the other side.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::coupling::{calibrate_sigma_chi, equal_population_time, CouplingProfile, GaussianCoupler};
use crate::error::{Result, SimError};
use crate::integrator::{evolve, IntegratorConfig, ScheduledPhase, Trajectory};
use crate::lattice::{Hamiltonian, LatticeParams, Topology, WaveState, HBAR};
use crate::packets::{
    carrier_velocity, channel_populations, make_gaussian_packet, phase_compensated_difference,
    ring_displacement, total_centroid, PacketSpec,
};

/// Population above which a transfer counts as complete.
const COMPLETE_TRANSFER: f64 = 0.99;

/// Couplers and packets are treated as disjoint beyond this many standard deviations.
const FOOTPRINT_SIGMAS: f64 = 6.0;

// ---------------------------------------------------------------------------
// Two-port oracle

/// Idealized two-channel exchange `i du1/dt = chi u2`, `i du2/dt = chi u1`.
///
/// Its exact propagator over an accumulated angle `theta` is
/// `[[cos theta, -i sin theta], [-i sin theta, cos theta]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortModel {
    pub theta: f64,
    pub input: [C64; 2],
}

impl TwoPortModel {
    pub fn new(theta: f64) -> Self {
        Self::with_input(theta, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    pub fn with_input(theta: f64, input: [C64; 2]) -> Self {
        Self { theta, input }
    }

    pub fn transfer_matrix(&self) -> [[C64; 2]; 2] {
        transfer_matrix(self.theta)
    }

    /// One pass through the coupler.
    pub fn split(&self) -> [C64; 2] {
        apply(&self.transfer_matrix(), self.input)
    }

    /// Coupler, `e^{i delta}` on channel 2, identical coupler.
    pub fn mach_zehnder(&self, delta: f64) -> [C64; 2] {
        cascade(self.input, self.theta, delta, self.theta)
    }
}

pub fn transfer_matrix(theta: f64) -> [[C64; 2]; 2] {
    let c = C64::new(theta.cos(), 0.0);
    let s = C64::new(0.0, -theta.sin());
    [[c, s], [s, c]]
}

fn apply(m: &[[C64; 2]; 2], v: [C64; 2]) -> [C64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Two couplers of angles `theta1`, `theta2` with `e^{i delta}` on channel 2 between them.
pub fn cascade(input: [C64; 2], theta1: f64, delta: f64, theta2: f64) -> [C64; 2] {
    let mut mid = apply(&transfer_matrix(theta1), input);
    mid[1] *= C64::from_polar(1.0, delta);
    apply(&transfer_matrix(theta2), mid)
}

/// Output amplitudes for input `(1, 0)`: one coupler, or coupler-phase-coupler.
pub fn two_port_oracle(theta: f64, delta: Option<f64>, stages: u32) -> Result<[C64; 2]> {
    let model = TwoPortModel::new(theta);
    match stages {
        1 => Ok(model.split()),
        2 => Ok(model.mach_zehnder(delta.unwrap_or(0.0))),
        _ => Err(SimError::usage(format!("stages must be 1 or 2, got {stages}"))),
    }
}

pub fn port_populations(v: [C64; 2]) -> [f64; 2] {
    [v[0].norm_sqr(), v[1].norm_sqr()]
}

/// Two-port angle of a coupler seen by a packet with carrier `k0`:
/// `a * sum_j chi_j / (hbar |v_g|)`.
pub fn coupler_angle(coupler: &GaussianCoupler, p: &LatticeParams, k0: f64) -> Result<f64> {
    let profile = CouplingProfile::gaussian_couplers(vec![*coupler], p)?;
    let speed = carrier_velocity(k0, p).abs();
    if speed < 1e-12 {
        return Err(SimError::Calibration("packet has zero group velocity".into()));
    }
    Ok(profile.density_sum(p.n_sites(), p.spacing(), 0.0) / (HBAR * speed))
}

// ---------------------------------------------------------------------------
// Reports

/// Direction in which the packet envelope travels around the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Increasing site index.
    Right,
    /// Decreasing site index.
    Left,
    Stationary,
}

impl Direction {
    pub fn of_velocity(v: f64) -> Self {
        if v > 0.0 {
            Direction::Right
        } else if v < 0.0 {
            Direction::Left
        } else {
            Direction::Stationary
        }
    }

    fn sign(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
            Direction::Stationary => 0.0,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Right => "right",
            Direction::Left => "left",
            Direction::Stationary => "stationary",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub trajectory: Trajectory,
    pub final_state: WaveState,
    pub final_populations: Vec<f64>,
    /// Named scalar results; keys are stable and sorted.
    pub metrics: BTreeMap<String, f64>,
    pub direction: Direction,
}

impl ScenarioReport {
    fn new(trajectory: Trajectory, final_state: WaveState, direction: Direction) -> Self {
        let final_populations = channel_populations(&final_state);
        let mut metrics = BTreeMap::new();
        metrics.insert("final_norm".into(), final_populations.iter().sum());
        metrics.insert("norm_drift".into(), trajectory.norm_drift());
        Self {
            trajectory,
            final_state,
            final_populations,
            metrics,
            direction,
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    fn set(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn final_norm(&self) -> f64 {
        self.final_populations.iter().sum()
    }
}

/// Step size, sampling and run length shared by the scenario setups.
#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub dt: f64,
    pub sample_every: usize,
    /// `None` lets the scenario derive its own end time.
    pub t_end: Option<f64>,
    pub snapshot_times: Vec<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt: 0.01,
            sample_every: 10,
            t_end: None,
            snapshot_times: Vec::new(),
        }
    }
}

impl StepControl {
    fn config(&self, derived_t_end: f64) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_end: self.t_end.unwrap_or(derived_t_end),
            sample_every: self.sample_every,
            snapshot_times: self.snapshot_times.clone(),
        }
    }
}

fn unit_ring() -> LatticeParams {
    LatticeParams::unit(600).expect("600-site ring is valid")
}

// ---------------------------------------------------------------------------
// Oscillation between channels

/// Packet on channel 1 under a site-independent inter-channel coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationSetup {
    pub lattice: LatticeParams,
    /// Must be site-independent (`Zero`, `Uniform` or `ExponentialSwitch`).
    pub profile: CouplingProfile,
    pub packet: PacketSpec,
    pub step: StepControl,
}

impl Default for OscillationSetup {
    /// `chi0 = tau/50` switched on over `t0 = 25 hbar/tau`, `k0 a = 0.942`, `Delta = 0`.
    fn default() -> Self {
        Self {
            lattice: unit_ring(),
            profile: CouplingProfile::exponential_ramp(0.02, 25.0).expect("valid switch"),
            packet: PacketSpec {
                sigma: 20.0,
                center: 150.0,
                wavenumber: 0.942,
                channel: 0,
            },
            step: StepControl {
                t_end: Some(250.0),
                ..StepControl::default()
            },
        }
    }
}

/// Peak location refined by a parabola through three equally spaced samples.
fn refine_peak(times: &[f64], values: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= values.len() {
        return times[i];
    }
    let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
    let denom = a - 2.0 * b + c;
    let h = times[i + 1] - times[i];
    if denom.abs() < 1e-300 || ((times[i] - times[i - 1]) - h).abs() > 1e-9 * h {
        return times[i];
    }
    let shift = 0.5 * (a - c) / denom;
    times[i] + shift.clamp(-1.0, 1.0) * h
}

/// First local maximum at or above `threshold`, searching from `from`.
fn first_peak_above(values: &[f64], threshold: f64, from: usize) -> Option<usize> {
    (from.max(1)..values.len().saturating_sub(1))
        .find(|&i| values[i] >= threshold && values[i] >= values[i - 1] && values[i] > values[i + 1])
}

pub fn run_oscillation(setup: &OscillationSetup) -> Result<ScenarioReport> {
    if setup.profile.accumulated_angle(0.0).is_none() {
        return Err(SimError::config(
            "oscillation needs a site-independent coupling (zero, uniform or exponential switch)",
        ));
    }
    let hamiltonian = Hamiltonian::new(setup.lattice, setup.profile.clone(), Topology::Pair)?;
    let initial = make_gaussian_packet(&setup.packet, &setup.lattice, 2)?;
    let config = setup.step.config(250.0);
    let run = evolve(&hamiltonian, &initial, &config, &[])?;

    let velocity = setup.packet.velocity(&setup.lattice);
    let mut report = ScenarioReport::new(run.trajectory, run.state, Direction::of_velocity(velocity));
    report.set("packet_velocity", velocity);

    let traj = &report.trajectory;
    let (src, dst) = (setup.packet.channel, 1 - setup.packet.channel);
    let p_src = traj.channel(src);
    let p_dst = traj.channel(dst);
    let max_transfer = p_dst.iter().cloned().fold(0.0, f64::max);

    // Oracle: with a site-independent coupling the channel factorizes exactly.
    let mut sq = 0.0;
    for (t, p) in traj.times.iter().zip(&p_src) {
        let theta = setup.profile.accumulated_angle(*t).expect("checked above");
        sq += (p - theta.cos().powi(2)).powi(2);
    }
    let oracle_rms = (sq / traj.len() as f64).sqrt();

    let mut extra = vec![("max_transfer", max_transfer), ("oracle_rms", oracle_rms)];
    if let Some(i) = first_peak_above(&p_dst, COMPLETE_TRANSFER, 1) {
        let first = refine_peak(&traj.times, &p_dst, i);
        extra.push(("first_transfer_time", first));
        if let CouplingProfile::ExponentialSwitch { t0, .. } = setup.profile {
            extra.push(("first_transfer_after_onset", first - t0));
        }
        if let Some(j) = first_peak_above(&p_src, COMPLETE_TRANSFER, i + 1) {
            let back = refine_peak(&traj.times, &p_src, j);
            extra.push(("return_time", back));
            extra.push(("transfer_interval", back - first));
        }
    }
    for (k, v) in extra {
        report.set(k, v);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Coupler passes: beam splitter, recombination, Mach-Zehnder

/// Gaussian-coupler experiment geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitterSetup {
    pub lattice: LatticeParams,
    pub chi0: f64,
    /// Carrier wavenumber of the packet, in units of `1/a`.
    pub k0: f64,
    /// Packet standard deviation, in sites.
    pub sigma: f64,
    /// `None` calibrates the coupler for a 50/50 split.
    pub sigma_chi: Option<f64>,
    /// Center of the coupler (or of the coupler pair). `None` means `N/2`.
    pub center: Option<f64>,
    /// Launch site. `None` places the packet `6 (sigma + sigma_chi)` upstream.
    pub launch: Option<f64>,
    /// Channel that carries the incoming packet in `run_beam_splitter`.
    pub input_channel: usize,
    pub step: StepControl,
}

impl Default for SplitterSetup {
    /// `sigma = 20 a`, `chi0 = tau/10`, calibrated `sigma_chi`, `k0 a = 5.34`, `Delta = 0`.
    fn default() -> Self {
        Self {
            lattice: unit_ring(),
            chi0: 0.1,
            k0: 5.34,
            sigma: 20.0,
            sigma_chi: None,
            center: None,
            launch: None,
            input_channel: 0,
            step: StepControl::default(),
        }
    }
}

impl SplitterSetup {
    pub fn resolved_sigma_chi(&self) -> Result<f64> {
        match self.sigma_chi {
            Some(s) => Ok(s),
            None => calibrate_sigma_chi(self.chi0, self.k0, &self.lattice),
        }
    }

    fn resolved_center(&self) -> f64 {
        self.center.unwrap_or(self.lattice.n_sites() as f64 / 2.0)
    }

    /// `6 (sigma + sigma_chi / a)`, in sites.
    pub fn clearance(&self) -> Result<f64> {
        Ok(FOOTPRINT_SIGMAS * (self.sigma + self.resolved_sigma_chi()? / self.lattice.spacing()))
    }
}

struct Pass {
    lattice: LatticeParams,
    couplers: Vec<GaussianCoupler>,
    direction: Direction,
    speed: f64,
    launch: f64,
    /// Distance from launch to the exit point past the last coupler.
    travel: f64,
    /// Distance from launch to the midpoint between the first two couplers.
    midpoint: Option<f64>,
}

/// Lays couplers out along the direction of travel, spaced by `separation`.
fn plan_pass(setup: &SplitterSetup, n_couplers: usize, separation: f64) -> Result<Pass> {
    let p = setup.lattice;
    let n = p.n_sites() as f64;
    let sigma_chi = setup.resolved_sigma_chi()?;
    let velocity = carrier_velocity(setup.k0, &p);
    let direction = Direction::of_velocity(velocity);
    if velocity.abs() < 1e-12 {
        return Err(SimError::Calibration(format!(
            "packet at k0 a = {} does not move",
            setup.k0 * p.spacing()
        )));
    }
    let dir = direction.sign();
    let clearance = setup.clearance()?;
    let span = separation * (n_couplers as f64 - 1.0);
    let first = setup.resolved_center() - dir * span / 2.0;
    let couplers: Vec<GaussianCoupler> = (0..n_couplers)
        .map(|i| GaussianCoupler {
            chi0: setup.chi0,
            sigma_chi,
            center: (first + dir * separation * i as f64).rem_euclid(n),
        })
        .collect();

    let launch = match setup.launch {
        Some(l) => l,
        None => (first - dir * clearance).rem_euclid(n),
    };
    let upstream = dir * ring_displacement(launch, first, p.n_sites());
    if upstream < clearance - 1e-9 {
        return Err(SimError::config(format!(
            "packet launched {upstream:.2} sites before the coupler; needs at least {clearance:.2}"
        )));
    }
    let travel = upstream + span + clearance + setup.sigma;
    if travel > n {
        return Err(SimError::config(format!(
            "ring of {} sites is too short for this layout (needs {travel:.1})",
            p.n_sites()
        )));
    }
    Ok(Pass {
        lattice: p,
        couplers,
        direction,
        speed: velocity.abs(),
        launch,
        travel,
        midpoint: (n_couplers > 1).then(|| upstream + separation / 2.0),
    })
}

/// Packet launch with per-channel complex weights, propagated through the pass.
fn run_pass(
    setup: &SplitterSetup,
    pass: &Pass,
    weights: [C64; 2],
    phases: &[ScheduledPhase],
) -> Result<ScenarioReport> {
    let profile = CouplingProfile::gaussian_couplers(pass.couplers.clone(), &pass.lattice)?;
    let hamiltonian = Hamiltonian::new(pass.lattice, profile, Topology::Pair)?;

    let spec = PacketSpec {
        sigma: setup.sigma,
        center: pass.launch,
        wavenumber: setup.k0,
        channel: 0,
    };
    let base = make_gaussian_packet(&spec, &pass.lattice, 2)?;
    let row = base.amplitudes().row(0).to_owned();
    let mut amps = ndarray::Array2::zeros((2, pass.lattice.n_sites()));
    for (ch, w) in weights.iter().enumerate() {
        amps.row_mut(ch).assign(&(&row * *w));
    }
    let initial = WaveState::from_amplitudes(amps, 0.0)?;

    let derived = pass.travel / pass.speed;
    let config = setup.step.config(derived);
    let run = evolve(&hamiltonian, &initial, &config, phases)?;

    let n = pass.lattice.n_sites();
    let last = pass.couplers.last().expect("at least one coupler").center;
    let needed = setup.clearance()?;
    let centroid = total_centroid(&run.state)?;
    let past = pass.direction.sign() * ring_displacement(last, centroid, n);
    if past < needed {
        return Err(SimError::Timeout {
            time: run.state.time(),
            centroid,
            needed,
        });
    }

    let mut report = ScenarioReport::new(run.trajectory, run.state, pass.direction);
    report.set("packet_velocity", carrier_velocity(setup.k0, &pass.lattice));
    report.set("sigma_chi", pass.couplers[0].sigma_chi);
    report.set("launch_site", pass.launch);
    report.set("exit_centroid", centroid);
    for (i, c) in pass.couplers.iter().enumerate() {
        report.set(&format!("coupler{}_center", i + 1), c.center);
    }
    report.set("P1", report.final_populations[0]);
    report.set("P2", report.final_populations[1]);
    Ok(report)
}

fn record_oracle(report: &mut ScenarioReport, predicted: [C64; 2]) {
    let want = port_populations(predicted);
    let dev = report
        .final_populations
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report.set("oracle_P1", want[0]);
    report.set("oracle_P2", want[1]);
    report.set("oracle_deviation", dev);
}

/// Packet on `input_channel` crosses one coupler.
pub fn run_beam_splitter(setup: &SplitterSetup) -> Result<ScenarioReport> {
    if setup.input_channel > 1 {
        return Err(SimError::config(format!(
            "input channel must be 0 or 1, got {}",
            setup.input_channel
        )));
    }
    let pass = plan_pass(setup, 1, 0.0)?;
    let mut weights = [C64::new(0.0, 0.0); 2];
    weights[setup.input_channel] = C64::new(1.0, 0.0);
    let mut report = run_pass(setup, &pass, weights, &[])?;

    let theta = coupler_angle(&pass.couplers[0], &setup.lattice, setup.k0)?;
    record_oracle(&mut report, TwoPortModel::with_input(theta, weights).split());
    let other = 1 - setup.input_channel;
    // The transferred packet lags by pi/2: u_other = -i u_input.
    let phi = if setup.input_channel == 0 { FRAC_PI_2 } else { -FRAC_PI_2 };
    let residual = phase_compensated_difference(&report.final_state, phi)? / report.final_norm().sqrt();
    report.set("theta", theta);
    report.set("split_ratio", report.final_populations[other] / report.final_norm());
    report.set("compensation_phase", phi);
    report.set("phase_residual", residual);
    Ok(report)
}

/// Identical packets on both channels, channel 2 pre-multiplied by
/// `e^{i pre_phase}`, cross one coupler.
pub fn run_interference(setup: &SplitterSetup, pre_phase: f64) -> Result<ScenarioReport> {
    let pass = plan_pass(setup, 1, 0.0)?;
    let w = 1.0 / 2f64.sqrt();
    let weights = [C64::new(w, 0.0), C64::from_polar(w, pre_phase)];
    let mut report = run_pass(setup, &pass, weights, &[])?;

    let theta = coupler_angle(&pass.couplers[0], &setup.lattice, setup.k0)?;
    let predicted = TwoPortModel::with_input(theta, weights).split();
    record_oracle(&mut report, predicted);
    let pops = report.final_populations.clone();
    let total = report.final_norm();
    let dominant = if pops[0] >= pops[1] { 0 } else { 1 };
    let oracle_pops = port_populations(predicted);
    let oracle_dominant = if oracle_pops[0] >= oracle_pops[1] { 0 } else { 1 };
    report.set("theta", theta);
    report.set("pre_phase", pre_phase);
    report.set("concentration", pops[dominant] / total);
    report.set("dominant_channel", (dominant + 1) as f64);
    report.set("oracle_dominant_channel", (oracle_dominant + 1) as f64);
    Ok(report)
}

/// Two couplers with `e^{i delta}` applied to channel 2 while the packet is
/// midway between them.
pub fn run_mach_zehnder(setup: &SplitterSetup, delta: f64, separation: Option<f64>) -> Result<ScenarioReport> {
    let clearance = setup.clearance()?;
    let separation = separation.unwrap_or(clearance);
    if separation < clearance - 1e-9 {
        return Err(SimError::config(format!(
            "coupler separation {separation:.2} overlaps the footprints; needs at least {clearance:.2}"
        )));
    }
    let pass = plan_pass(setup, 2, separation)?;
    let t_mid = pass.midpoint.expect("two couplers") / pass.speed;
    let t_end = setup.step.t_end.unwrap_or(pass.travel / pass.speed);
    if t_mid > t_end {
        return Err(SimError::config(format!(
            "t_end = {t_end} ends before the packet reaches the interferometer arms (t = {t_mid:.2})"
        )));
    }
    let phases = [ScheduledPhase {
        time: t_mid,
        channel: 1,
        phase: delta,
    }];
    let weights = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mut report = run_pass(setup, &pass, weights, &phases)?;

    let theta1 = coupler_angle(&pass.couplers[0], &setup.lattice, setup.k0)?;
    let theta2 = coupler_angle(&pass.couplers[1], &setup.lattice, setup.k0)?;
    record_oracle(&mut report, cascade(weights, theta1, delta, theta2));
    report.set("delta", delta);
    report.set("theta", theta1);
    report.set("separation", separation);
    report.set("phase_time", t_mid);
    report.set("sin2_half_delta", (delta / 2.0).sin().powi(2));
    Ok(report)
}

/// Runs [`run_mach_zehnder`] for each phase in parallel; results keep input order.
pub fn mach_zehnder_sweep(
    setup: &SplitterSetup,
    deltas: &[f64],
    separation: Option<f64>,
) -> Result<Vec<ScenarioReport>> {
    deltas
        .par_iter()
        .map(|&d| run_mach_zehnder(setup, d, separation))
        .collect()
}

// ---------------------------------------------------------------------------
// Star splitter

#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSetup {
    pub lattice: LatticeParams,
    pub n_daughters: usize,
    /// Constant parent-daughter coupling.
    pub chi: f64,
    /// Packet on the parent channel (channel index is ignored).
    pub packet: PacketSpec,
    pub step: StepControl,
}

impl Default for MultichannelSetup {
    fn default() -> Self {
        Self {
            lattice: unit_ring(),
            n_daughters: 3,
            chi: 0.02,
            packet: PacketSpec {
                sigma: 20.0,
                center: 150.0,
                wavenumber: 0.942,
                channel: 0,
            },
            step: StepControl::default(),
        }
    }
}

/// Evolves a parent packet under a uniform star coupling up to the
/// equal-population time (and on to `t_end` if that is later).
pub fn run_multichannel_split(setup: &MultichannelSetup) -> Result<ScenarioReport> {
    let t_eq = equal_population_time(setup.n_daughters, setup.chi)?;
    let t_end = setup.step.t_end.unwrap_or(t_eq);
    if t_end < t_eq {
        return Err(SimError::config(format!(
            "t_end = {t_end} stops before the equal-population time {t_eq:.4}"
        )));
    }
    let topology = Topology::Star {
        daughters: setup.n_daughters,
    };
    let hamiltonian = Hamiltonian::new(setup.lattice, CouplingProfile::uniform(setup.chi)?, topology)?;
    let spec = PacketSpec {
        channel: 0,
        ..setup.packet
    };
    let initial = make_gaussian_packet(&spec, &setup.lattice, topology.n_channels())?;

    let first = evolve(&hamiltonian, &initial, &setup.step.config(t_eq).with_t_end(t_eq), &[])?;
    let at_teq = channel_populations(&first.state);
    let (state, trajectory) = if t_end > t_eq {
        let rest = evolve(&hamiltonian, &first.state, &setup.step.config(t_end), &[])?;
        let mut traj = first.trajectory;
        traj.times.extend(rest.trajectory.times.iter().skip(1));
        traj.norms.extend(rest.trajectory.norms.iter().skip(1));
        traj.populations
            .extend(rest.trajectory.populations.iter().skip(1).cloned());
        traj.snapshots.extend(rest.trajectory.snapshots);
        (rest.state, traj)
    } else {
        (first.state, first.trajectory)
    };

    let velocity = spec.velocity(&setup.lattice);
    let mut report = ScenarioReport::new(trajectory, state, Direction::of_velocity(velocity));
    let target = 1.0 / (setup.n_daughters as f64 + 1.0);
    let dev = at_teq.iter().map(|p| (p - target).abs()).fold(0.0, f64::max);
    report.set("t_eq", t_eq);
    report.set("equal_share", target);
    report.set("max_deviation_at_t_eq", dev);
    for (i, p) in at_teq.iter().enumerate() {
        report.set(&format!("P{}_at_t_eq", i + 1), *p);
    }
    report.set("packet_velocity", velocity);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Free-form run

/// Any coupling, any topology; just evolves and reports.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomSetup {
    pub lattice: LatticeParams,
    pub profile: CouplingProfile,
    pub topology: Topology,
    pub packet: PacketSpec,
    pub phases: Vec<ScheduledPhase>,
    pub step: StepControl,
}

pub fn run_custom(setup: &CustomSetup) -> Result<ScenarioReport> {
    let hamiltonian = Hamiltonian::new(setup.lattice, setup.profile.clone(), setup.topology)?;
    let initial = make_gaussian_packet(&setup.packet, &setup.lattice, setup.topology.n_channels())?;
    let run = evolve(&hamiltonian, &initial, &setup.step.config(100.0), &setup.phases)?;
    let velocity = setup.packet.velocity(&setup.lattice);
    let mut report = ScenarioReport::new(run.trajectory, run.state, Direction::of_velocity(velocity));
    report.set("packet_velocity", velocity);
    if let Ok(c) = total_centroid(&report.final_state) {
        report.set("final_centroid", c);
    }
    for (i, p) in report.final_populations.clone().iter().enumerate() {
        report.set(&format!("P{}", i + 1), *p);
    }
    Ok(report)
}
