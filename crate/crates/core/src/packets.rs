//! Gaussian wave packets and the observables read off a [`WaveState`].
//!
//! Packets carry the phase `e^{-i k0 j}`, so their spectral weight sits at
//! `-k0` and they travel at `group_velocity(-k0)`. For `tau > 0` that is
//! rightward when `sin(k0 a) > 0` and leftward when `sin(k0 a) < 0`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::lattice::{group_velocity, LatticeParams, WaveState};

/// Relative envelope amplitude allowed at the antipode of the packet center.
const WRAP_TOLERANCE: f64 = 1e-12;

/// Gaussian packet parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    /// Standard deviation of the envelope, in sites.
    pub sigma: f64,
    /// Site coordinate of the envelope peak.
    pub center: f64,
    /// Carrier wavenumber `k0`, in units of `1/a`.
    pub wavenumber: f64,
    pub channel: usize,
}

impl PacketSpec {
    pub fn validate(&self, p: &LatticeParams, n_channels: usize) -> Result<()> {
        let n = p.n_sites() as f64;
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(SimError::config(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.center.is_finite() && self.center >= 0.0 && self.center < n) {
            return Err(SimError::config(format!(
                "center must lie in [0, {n}), got {}",
                self.center
            )));
        }
        if !self.wavenumber.is_finite() {
            return Err(SimError::config("wavenumber must be finite"));
        }
        if self.channel >= n_channels {
            return Err(SimError::config(format!(
                "channel {} out of range for {n_channels} channels",
                self.channel
            )));
        }
        let half = n / 2.0;
        let tail = (-half * half / (2.0 * self.sigma * self.sigma)).exp();
        if tail > WRAP_TOLERANCE {
            return Err(SimError::config(format!(
                "sigma = {} is too wide for a ring of {} sites (wrap-around tail {tail:.2e})",
                self.sigma,
                p.n_sites()
            )));
        }
        Ok(())
    }

    /// Velocity of the packet's envelope on a decoupled ring.
    pub fn velocity(&self, p: &LatticeParams) -> f64 {
        carrier_velocity(self.wavenumber, p)
    }
}

/// Group velocity of a packet carrying `e^{-i k0 j}`.
pub fn carrier_velocity(k0: f64, p: &LatticeParams) -> f64 {
    group_velocity(-k0, p)
}

/// Fills `channel` of `state` with an unnormalized Gaussian packet.
fn gaussian_amplitudes(spec: &PacketSpec, n: usize) -> Vec<C64> {
    let nf = n as f64;
    (0..n)
        .map(|j| {
            // Minimal-image displacement keeps the envelope centered on the ring;
            // the carrier is evaluated at the unwrapped coordinate, so the only
            // phase seam sits at the antipode where the envelope vanishes.
            let mut d = j as f64 - spec.center;
            d -= nf * (d / nf).round();
            let x = spec.center + d;
            let envelope = (-d * d / (2.0 * spec.sigma * spec.sigma)).exp();
            C64::from_polar(envelope, -spec.wavenumber * x)
        })
        .collect()
}

/// Normalized Gaussian packet on one channel, zero elsewhere, at `t = 0`.
///
/// The prefactor is fixed by the discrete sum so the norm is one on any grid.
pub fn make_gaussian_packet(spec: &PacketSpec, p: &LatticeParams, n_channels: usize) -> Result<WaveState> {
    spec.validate(p, n_channels)?;
    let n = p.n_sites();
    let mut amps = gaussian_amplitudes(spec, n);
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut amps {
        *z /= norm;
    }
    let mut state = WaveState::zeros(n_channels, n);
    state.as_mut_slice()[spec.channel * n..(spec.channel + 1) * n].copy_from_slice(&amps);
    Ok(state)
}

/// `P_nu = sum_j |u_j^(nu)|^2` for every channel.
pub fn channel_populations(state: &WaveState) -> Vec<f64> {
    state
        .amplitudes()
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// `sqrt(sum_j |u_j^(1) - e^{i phi} u_j^(2)|^2)` for a two-channel state.
pub fn phase_compensated_difference(state: &WaveState, phi: f64) -> Result<f64> {
    if state.n_channels() != 2 {
        return Err(SimError::usage(format!(
            "phase-compensated difference needs 2 channels, state has {}",
            state.n_channels()
        )));
    }
    let rot = C64::from_polar(1.0, phi);
    let a = state.amplitudes();
    let sum: f64 = a
        .row(0)
        .iter()
        .zip(a.row(1).iter())
        .map(|(u1, u2)| (u1 - rot * u2).norm_sqr())
        .sum();
    Ok(sum.sqrt())
}

/// Population-weighted circular mean of the site index on `channel`, in `[0, N)`.
pub fn packet_centroid(state: &WaveState, channel: usize) -> Result<f64> {
    if channel >= state.n_channels() {
        return Err(SimError::usage(format!(
            "channel {channel} out of range for {} channels",
            state.n_channels()
        )));
    }
    let n = state.n_sites();
    let row = state.amplitudes().row(channel);
    let population: f64 = row.iter().map(|z| z.norm_sqr()).sum();
    if population <= 1e-12 {
        return Err(SimError::EmptyChannel { channel, population });
    }
    let step = 2.0 * PI / n as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for (j, z) in row.iter().enumerate() {
        let w = z.norm_sqr();
        let angle = step * j as f64;
        c += w * angle.cos();
        s += w * angle.sin();
    }
    if c.hypot(s) <= 1e-12 * population {
        return Err(SimError::EmptyChannel { channel, population });
    }
    Ok((s.atan2(c) / step).rem_euclid(n as f64))
}

/// Centroid of the whole state, summing all channels' populations.
pub fn total_centroid(state: &WaveState) -> Result<f64> {
    let n = state.n_sites();
    let step = 2.0 * PI / n as f64;
    let (mut c, mut s, mut total) = (0.0, 0.0, 0.0);
    for row in state.amplitudes().rows() {
        for (j, z) in row.iter().enumerate() {
            let w = z.norm_sqr();
            total += w;
            c += w * (step * j as f64).cos();
            s += w * (step * j as f64).sin();
        }
    }
    if total <= 1e-12 || c.hypot(s) <= 1e-12 * total {
        return Err(SimError::EmptyChannel {
            channel: 0,
            population: total,
        });
    }
    Ok((s.atan2(c) / step).rem_euclid(n as f64))
}

/// Signed shortest displacement `to - from` on a ring of `n` sites.
pub fn ring_displacement(from: f64, to: f64, n: usize) -> f64 {
    let nf = n as f64;
    let d = (to - from).rem_euclid(nf);
    if d > nf / 2.0 {
        d - nf
    } else {
        d
    }
}
