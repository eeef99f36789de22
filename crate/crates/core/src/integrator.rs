//! Fixed-step fourth-order Runge-Kutta propagation of a [`WaveState`].
//!
//! The norm is monitored and recorded but never renormalized.

use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::lattice::{Hamiltonian, WaveState};
use crate::packets::channel_populations;

/// Largest `|lambda dt|` on the imaginary axis for which classical RK4 is stable.
const RK4_STABILITY_LIMIT: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record observables every this many steps. The final step is always recorded.
    pub sample_every: usize,
    /// Times at which full states are kept, snapped to step boundaries.
    pub snapshot_times: Vec<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 0.0,
            sample_every: 1,
            snapshot_times: Vec::new(),
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub(crate) fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(SimError::config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(SimError::config("sample_every must be >= 1"));
        }
        if self.snapshot_times.iter().any(|t| !t.is_finite()) {
            return Err(SimError::config("snapshot times must be finite"));
        }
        Ok(())
    }
}

/// Instantaneous `u^(channel) <- e^{i phase} u^(channel)` at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledPhase {
    pub time: f64,
    pub channel: usize,
    pub phase: f64,
}

/// A labeled instant in a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub label: String,
    pub time: f64,
}

/// Sampled observables of one evolution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row per sample, one entry per channel.
    pub populations: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub snapshots: Vec<WaveState>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.populations.first().map_or(0, Vec::len)
    }

    pub fn final_norm(&self) -> Option<f64> {
        self.norms.last().copied()
    }

    /// `norm(t_end) - norm(t_start)`.
    pub fn norm_drift(&self) -> f64 {
        match (self.norms.first(), self.norms.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Population series of one channel.
    pub fn channel(&self, channel: usize) -> Vec<f64> {
        self.populations.iter().map(|row| row[channel]).collect()
    }

    fn record(&mut self, state: &WaveState) {
        let pops = channel_populations(state);
        self.times.push(state.time());
        self.norms.push(pops.iter().sum());
        self.populations.push(pops);
    }
}

/// Final state together with the recorded trajectory.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: WaveState,
    pub trajectory: Trajectory,
}

/// Reusable RK4 stepper with preallocated stage buffers.
pub struct Rk4<'h> {
    hamiltonian: &'h Hamiltonian,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    stage: Vec<C64>,
}

impl<'h> Rk4<'h> {
    pub fn new(hamiltonian: &'h Hamiltonian) -> Self {
        let len = hamiltonian.n_channels() * hamiltonian.lattice().n_sites();
        let zero = vec![C64::new(0.0, 0.0); len];
        Self {
            hamiltonian,
            k1: zero.clone(),
            k2: zero.clone(),
            k3: zero.clone(),
            k4: zero.clone(),
            stage: zero,
        }
    }

    /// Advances `state` in place by `dt` and sets its time to `t_new`.
    fn advance(&mut self, state: &mut WaveState, dt: f64, t_new: f64) -> Result<()> {
        let t = state.time();
        let h = self.hamiltonian;
        let u = state.as_mut_slice();

        h.rhs_into(u, t, &mut self.k1);
        axpy(&mut self.stage, u, 0.5 * dt, &self.k1);
        h.rhs_into(&self.stage, t + 0.5 * dt, &mut self.k2);
        axpy(&mut self.stage, u, 0.5 * dt, &self.k2);
        h.rhs_into(&self.stage, t + 0.5 * dt, &mut self.k3);
        axpy(&mut self.stage, u, dt, &self.k3);
        h.rhs_into(&self.stage, t + dt, &mut self.k4);

        let w = dt / 6.0;
        let mut norm = 0.0;
        let ks = self.k1.iter().zip(&self.k2).zip(&self.k3).zip(&self.k4);
        for (x, (((a, b), c), d)) in u.iter_mut().zip(ks) {
            *x += (a + (b + c) * 2.0 + d) * w;
            norm += x.norm_sqr();
        }
        if !norm.is_finite() {
            return Err(SimError::Numerical {
                time: t_new,
                detail: format!(
                    "non-finite amplitude after step dt = {dt} (spectral bound {:.3e})",
                    h.spectral_bound()
                ),
            });
        }
        state.set_time(t_new);
        Ok(())
    }

    /// One RK4 step of length `dt`.
    pub fn step(&mut self, state: &mut WaveState, dt: f64) -> Result<()> {
        self.hamiltonian.check_shape(state)?;
        let t_new = state.time() + dt;
        self.advance(state, dt, t_new)
    }
}

/// `out = base + scale * k`
fn axpy(out: &mut [C64], base: &[C64], scale: f64, k: &[C64]) {
    for ((o, b), k) in out.iter_mut().zip(base).zip(k) {
        *o = b + k * scale;
    }
}

/// One RK4 step; returns the advanced state.
pub fn step(hamiltonian: &Hamiltonian, state: &WaveState, dt: f64) -> Result<WaveState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::config(format!("dt must be > 0, got {dt}")));
    }
    let mut next = state.clone();
    Rk4::new(hamiltonian).step(&mut next, dt)?;
    Ok(next)
}

/// Step index (from the start time) nearest to `time`.
fn boundary_index(time: f64, t_start: f64, dt: f64, n_steps: usize) -> usize {
    let idx = ((time - t_start) / dt).round();
    (idx.max(0.0) as usize).min(n_steps)
}

/// Integrates from `state.time()` to `config.t_end`, applying the scheduled
/// phases at the step boundaries nearest their times.
pub fn evolve(
    hamiltonian: &Hamiltonian,
    state: &WaveState,
    config: &IntegratorConfig,
    phases: &[ScheduledPhase],
) -> Result<Evolution> {
    config.validate()?;
    hamiltonian.check_shape(state)?;
    let dt = config.dt;
    let bound = hamiltonian.spectral_bound();
    if dt * bound > RK4_STABILITY_LIMIT {
        return Err(SimError::config(format!(
            "dt = {dt} exceeds the RK4 stability limit {:.4} for spectral bound {bound:.4}",
            RK4_STABILITY_LIMIT / bound
        )));
    }
    let t_start = state.time();
    if config.t_end < t_start {
        return Err(SimError::usage(format!(
            "t_end = {} precedes the state time {t_start}",
            config.t_end
        )));
    }
    for w in phases.windows(2) {
        if w[1].time < w[0].time {
            return Err(SimError::usage("scheduled phases must be sorted by time"));
        }
    }
    for ph in phases {
        if !(ph.time >= t_start && ph.time <= config.t_end) {
            return Err(SimError::usage(format!(
                "phase scheduled at t = {} lies outside [{t_start}, {}]",
                ph.time, config.t_end
            )));
        }
        if ph.channel >= hamiltonian.n_channels() {
            return Err(SimError::usage(format!("phase targets missing channel {}", ph.channel)));
        }
    }

    let span = config.t_end - t_start;
    let n_steps = if span <= 0.0 {
        0
    } else {
        ((span / dt) - 1e-9).ceil().max(1.0) as usize
    };
    let time_at = |k: usize| {
        if k == n_steps {
            config.t_end
        } else {
            t_start + k as f64 * dt
        }
    };

    let phase_steps: Vec<usize> = phases
        .iter()
        .map(|p| boundary_index(p.time, t_start, dt, n_steps))
        .collect();
    let mut snapshot_steps: Vec<usize> = config
        .snapshot_times
        .iter()
        .filter(|&&t| t >= t_start && t <= config.t_end)
        .map(|&t| boundary_index(t, t_start, dt, n_steps))
        .collect();
    snapshot_steps.sort_unstable();
    snapshot_steps.dedup();

    let mut current = state.clone();
    let mut trajectory = Trajectory::default();
    let mut rk = Rk4::new(hamiltonian);
    let mut next_phase = 0;
    let mut next_snapshot = 0;

    for k in 0..=n_steps {
        while next_phase < phases.len() && phase_steps[next_phase] == k {
            let ph = phases[next_phase];
            current.apply_phase(ph.channel, ph.phase)?;
            trajectory.events.push(Event {
                label: format!("phase {:.6} on channel {}", ph.phase, ph.channel + 1),
                time: current.time(),
            });
            next_phase += 1;
        }
        while next_snapshot < snapshot_steps.len() && snapshot_steps[next_snapshot] == k {
            trajectory.snapshots.push(current.clone());
            next_snapshot += 1;
        }
        if k % config.sample_every == 0 || k == n_steps {
            trajectory.record(&current);
        }
        if k < n_steps {
            let t_next = time_at(k + 1);
            let h = t_next - current.time();
            rk.advance(&mut current, h, t_next)?;
        }
    }

    Ok(Evolution {
        state: current,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingProfile;
    use crate::lattice::{dispersion_omega, LatticeParams, Topology, WavenumberGrid};
    use crate::packets::{make_gaussian_packet, PacketSpec};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use std::f64::consts::PI;

    fn free(n: usize) -> Hamiltonian {
        Hamiltonian::new(LatticeParams::unit(n).unwrap(), CouplingProfile::Zero, Topology::Pair).unwrap()
    }

    #[test]
    fn pure_site_phase_rotation() {
        let p = LatticeParams::new(4, 1.0, 2.0, 1e-300).unwrap();
        let h = Hamiltonian::new(p, CouplingProfile::Zero, Topology::Pair).unwrap();
        let mut s = WaveState::zeros(2, 4);
        s.as_mut_slice()[0] = C64::new(1.0, 0.0);
        let out = evolve(&h, &s, &IntegratorConfig::new(0.01, PI), &[]).unwrap();
        assert!((out.state.amplitude(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-8);
        assert_eq!(out.state.time(), PI);
    }

    #[test]
    fn zero_state_stays_zero() {
        let h = free(8);
        let s = WaveState::zeros(2, 8);
        let next = step(&h, &s, 0.01).unwrap();
        assert!(next.amplitudes().iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert_abs_diff_eq!(next.time(), 0.01);
    }

    #[test]
    fn plane_wave_picks_up_dispersion_phase() {
        let n = 16;
        let p = LatticeParams::unit(n).unwrap();
        let grid = WavenumberGrid::new(&p);
        let h = free(n);
        let m = 5;
        let k = grid.wavenumber(m);
        let amps = Array2::from_shape_fn((2, n), |(c, j)| {
            if c == 0 {
                C64::from_polar(0.25, -k * j as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let s = WaveState::from_amplitudes(amps, 0.0).unwrap();
        let t = 7.3;
        let out = evolve(&h, &s, &IntegratorConfig::new(0.01, t), &[]).unwrap();
        let rot = C64::from_polar(1.0, -dispersion_omega(k, &p) * t);
        for j in 0..n {
            assert!((out.state.amplitude(0, j) - s.amplitude(0, j) * rot).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_duration_gives_one_sample() {
        let h = free(16);
        let s = make_gaussian_packet(
            &PacketSpec {
                sigma: 1.0,
                center: 8.0,
                wavenumber: 1.0,
                channel: 0,
            },
            h.lattice(),
            2,
        )
        .unwrap();
        let out = evolve(&h, &s, &IntegratorConfig::new(0.01, 0.0), &[]).unwrap();
        assert_eq!(out.trajectory.len(), 1);
        assert_abs_diff_eq!(out.trajectory.populations[0][0], 1.0, epsilon = 1e-14);
        assert_eq!(out.trajectory.populations[0][1], 0.0);
        assert_eq!(out.state, s);
    }

    #[test]
    fn sampling_and_partial_last_step() {
        let h = free(16);
        let mut s = WaveState::zeros(2, 16);
        s.as_mut_slice()[3] = C64::new(1.0, 0.0);
        let cfg = IntegratorConfig {
            dt: 0.1,
            t_end: 1.05,
            sample_every: 3,
            snapshot_times: vec![0.5, 2.0],
        };
        let out = evolve(&h, &s, &cfg, &[]).unwrap();
        // 11 steps: samples at 0, 3, 6, 9 and the final step.
        assert_eq!(out.trajectory.len(), 5);
        assert_abs_diff_eq!(*out.trajectory.times.last().unwrap(), 1.05);
        assert!(out.trajectory.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(out.trajectory.snapshots.len(), 1);
        assert_abs_diff_eq!(out.trajectory.snapshots[0].time(), 0.5, epsilon = 1e-12);
        for (row, norm) in out.trajectory.populations.iter().zip(&out.trajectory.norms) {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), *norm, epsilon = 1e-15);
        }
    }

    #[test]
    fn phase_leaves_populations_unchanged() {
        let h = Hamiltonian::new(
            LatticeParams::unit(32).unwrap(),
            CouplingProfile::uniform(0.2).unwrap(),
            Topology::Pair,
        )
        .unwrap();
        let s = make_gaussian_packet(
            &PacketSpec {
                sigma: 2.0,
                center: 16.0,
                wavenumber: 1.0,
                channel: 0,
            },
            h.lattice(),
            2,
        )
        .unwrap();
        let cfg = IntegratorConfig::new(0.01, 2.0);
        let plain = evolve(&h, &s, &IntegratorConfig::new(0.01, 1.0), &[]).unwrap();
        let phased = evolve(
            &h,
            &s,
            &cfg,
            &[ScheduledPhase {
                time: 1.0,
                channel: 1,
                phase: 1.234,
            }],
        )
        .unwrap();
        assert_eq!(phased.trajectory.events.len(), 1);
        assert_abs_diff_eq!(phased.trajectory.events[0].time, 1.0, epsilon = 1e-12);
        let idx = phased
            .trajectory
            .times
            .iter()
            .position(|t| (t - 1.0).abs() < 1e-9)
            .unwrap();
        let before = plain.trajectory.populations.last().unwrap();
        let at = &phased.trajectory.populations[idx];
        for (a, b) in before.iter().zip(at) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_schedules() {
        let h = free(8);
        let s = WaveState::zeros(2, 8);
        let cfg = IntegratorConfig::new(0.01, 1.0);
        let ph = |time| ScheduledPhase {
            time,
            channel: 1,
            phase: 0.1,
        };
        assert!(matches!(evolve(&h, &s, &cfg, &[ph(0.5), ph(0.2)]), Err(SimError::Usage(_))));
        assert!(matches!(evolve(&h, &s, &cfg, &[ph(1.5)]), Err(SimError::Usage(_))));
        assert!(evolve(&h, &s, &IntegratorConfig::new(0.0, 1.0), &[]).is_err());
        assert!(evolve(&h, &s, &IntegratorConfig::new(2.0, 1.0), &[]).is_err());
        let cfg = IntegratorConfig {
            sample_every: 0,
            ..IntegratorConfig::new(0.01, 1.0)
        };
        assert!(evolve(&h, &s, &cfg, &[]).is_err());
    }

    #[test]
    fn non_finite_state_is_reported() {
        let h = free(8);
        let mut s = WaveState::zeros(2, 8);
        s.as_mut_slice()[2] = C64::new(f64::NAN, 0.0);
        let err = evolve(&h, &s, &IntegratorConfig::new(0.01, 0.1), &[]).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn evolution_is_deterministic() {
        let h = Hamiltonian::new(
            LatticeParams::unit(64).unwrap(),
            CouplingProfile::exponential_ramp(0.05, 3.0).unwrap(),
            Topology::Pair,
        )
        .unwrap();
        let s = make_gaussian_packet(
            &PacketSpec {
                sigma: 4.0,
                center: 20.0,
                wavenumber: 0.9,
                channel: 0,
            },
            h.lattice(),
            2,
        )
        .unwrap();
        let cfg = IntegratorConfig::new(0.01, 5.0);
        let a = evolve(&h, &s, &cfg, &[]).unwrap();
        let b = evolve(&h, &s, &cfg, &[]).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.state, b.state);
    }
}
