//! Ring lattices, the single-excitation state and the tight-binding
//! Hamiltonian acting on it.
//!
//! Units are natural: `hbar = 1`, energies are in units of the hopping `tau`
//! when `hopping = 1`, lengths are in units of the site spacing `a`, and
//! times are in `hbar / tau`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::coupling::CouplingProfile;
use crate::error::{Result, SimError};

/// Reduced Planck constant in the natural unit system used throughout.
pub const HBAR: f64 = 1.0;

/// Physical parameters of one ring. Every channel in a simulation shares them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams {
    n_sites: usize,
    spacing: f64,
    site_energy: f64,
    hopping: f64,
}

impl LatticeParams {
    pub fn new(n_sites: usize, spacing: f64, site_energy: f64, hopping: f64) -> Result<Self> {
        if n_sites < 4 {
            return Err(SimError::config(format!(
                "n_sites must be at least 4, got {n_sites}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(SimError::config(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        if !site_energy.is_finite() {
            return Err(SimError::config("site_energy must be finite"));
        }
        if !hopping.is_finite() || hopping == 0.0 {
            return Err(SimError::config(format!(
                "hopping must be nonzero and finite, got {hopping}"
            )));
        }
        Ok(Self {
            n_sites,
            spacing,
            site_energy,
            hopping,
        })
    }

    /// Ring of `n_sites` with `a = tau = 1` and zero site energy.
    pub fn unit(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, 1.0, 0.0, 1.0)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn site_energy(&self) -> f64 {
        self.site_energy
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn hbar(&self) -> f64 {
        HBAR
    }
}

/// Angular frequency of the plane wave `e^{i k x}` on a decoupled ring.
pub fn dispersion_omega(k: f64, p: &LatticeParams) -> f64 {
    (p.site_energy + 2.0 * p.hopping * (k * p.spacing).cos()) / HBAR
}

/// `d omega / dk` for the plane wave `e^{i k x}`.
///
/// A packet built with carrier `e^{-i k0 j}` has its spectral weight at
/// `-k0`, so it travels at `group_velocity(-k0, p)`.
pub fn group_velocity(k: f64, p: &LatticeParams) -> f64 {
    -2.0 * p.spacing * p.hopping * (k * p.spacing).sin() / HBAR
}

/// The `N` allowed wavenumbers `k_j = 2 pi j / (N a)` of a ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavenumberGrid {
    n_sites: usize,
    spacing: f64,
}

impl WavenumberGrid {
    pub fn new(p: &LatticeParams) -> Self {
        Self {
            n_sites: p.n_sites,
            spacing: p.spacing,
        }
    }

    pub fn len(&self) -> usize {
        self.n_sites
    }

    pub fn is_empty(&self) -> bool {
        self.n_sites == 0
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / (self.n_sites as f64 * self.spacing)
    }

    pub fn wavenumber(&self, index: usize) -> f64 {
        index as f64 * self.step()
    }

    /// Index of the grid wavenumber closest to `k` modulo `2 pi / a`.
    pub fn nearest_index(&self, k: f64) -> usize {
        let period = 2.0 * PI / self.spacing;
        let wrapped = k.rem_euclid(period);
        ((wrapped / self.step()).round() as usize) % self.n_sites
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_sites).map(move |j| self.wavenumber(j))
    }
}

/// Single-excitation wavefunction: one complex amplitude per site per channel.
///
/// Row `nu` of `amplitudes` holds `u_j^(nu)` for `j = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    amplitudes: Array2<C64>,
    time: f64,
}

impl WaveState {
    pub fn zeros(n_channels: usize, n_sites: usize) -> Self {
        Self {
            amplitudes: Array2::zeros((n_channels, n_sites)),
            time: 0.0,
        }
    }

    pub fn from_amplitudes(amplitudes: Array2<C64>, time: f64) -> Result<Self> {
        if amplitudes.nrows() == 0 || amplitudes.ncols() == 0 {
            return Err(SimError::config("state must have at least one channel and site"));
        }
        // RHS code works on the flat slice.
        let amplitudes = if amplitudes.is_standard_layout() {
            amplitudes
        } else {
            amplitudes.as_standard_layout().into_owned()
        };
        Ok(Self { amplitudes, time })
    }

    pub fn n_channels(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn amplitudes(&self) -> &Array2<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, channel: usize, site: usize) -> C64 {
        self.amplitudes[[channel, site]]
    }

    pub(crate) fn as_slice(&self) -> &[C64] {
        self.amplitudes
            .as_slice()
            .expect("wave state is kept in standard layout")
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [C64] {
        self.amplitudes
            .as_slice_mut()
            .expect("wave state is kept in standard layout")
    }

    /// `sum |u|^2` over every site and channel.
    pub fn norm_sqr(&self) -> f64 {
        self.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &WaveState) -> Result<C64> {
        if self.amplitudes.dim() != other.amplitudes.dim() {
            return Err(SimError::config(format!(
                "state shapes differ: {:?} vs {:?}",
                self.amplitudes.dim(),
                other.amplitudes.dim()
            )));
        }
        Ok(self
            .as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiply one channel by `e^{i phase}`.
    pub fn apply_phase(&mut self, channel: usize, phase: f64) -> Result<()> {
        if channel >= self.n_channels() {
            return Err(SimError::usage(format!(
                "channel {channel} out of range for {} channels",
                self.n_channels()
            )));
        }
        let factor = C64::from_polar(1.0, phase);
        self.amplitudes.row_mut(channel).mapv_inplace(|z| z * factor);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Which channel pairs share the inter-channel coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Two identical rings coupled site by site.
    Pair,
    /// Parent ring 0 coupled identically to `daughters` rings that do not
    /// couple to each other.
    Star { daughters: usize },
}

impl Topology {
    pub fn n_channels(&self) -> usize {
        self.daughters() + 1
    }

    pub fn daughters(&self) -> usize {
        match *self {
            Topology::Pair => 1,
            Topology::Star { daughters } => daughters,
        }
    }
}

/// Tight-binding Hamiltonian on `C` coupled rings.
///
/// `H u` on channel `nu`, site `j` is
/// `Delta u_j + tau (u_{j-1} + u_{j+1}) + sum_mu chi_j(t) u_j^(mu)`
/// with periodic site indices and `mu` running over the channels coupled to `nu`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    lattice: LatticeParams,
    profile: CouplingProfile,
    topology: Topology,
    site_profile: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(lattice: LatticeParams, profile: CouplingProfile, topology: Topology) -> Result<Self> {
        if topology.daughters() == 0 {
            return Err(SimError::config("star topology needs at least one daughter channel"));
        }
        let site_profile = (0..lattice.n_sites)
            .map(|j| profile.site_factor(j))
            .collect();
        Ok(Self {
            lattice,
            profile,
            topology,
            site_profile,
        })
    }

    pub fn lattice(&self) -> &LatticeParams {
        &self.lattice
    }

    pub fn profile(&self) -> &CouplingProfile {
        &self.profile
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn n_channels(&self) -> usize {
        self.topology.n_channels()
    }

    /// `chi_j(t)` as seen by this Hamiltonian.
    pub fn chi(&self, site: usize, t: f64) -> f64 {
        self.site_profile[site] * self.profile.time_factor(t)
    }

    /// Upper bound on the spectral radius of `H / hbar` over all times.
    pub fn spectral_bound(&self) -> f64 {
        let chi_max = self.site_profile.iter().cloned().fold(0.0, f64::max)
            * self.profile.max_time_factor();
        let cross = chi_max * (self.topology.daughters() as f64).sqrt();
        (self.lattice.site_energy.abs() + 2.0 * self.lattice.hopping.abs() + cross) / HBAR
    }

    pub(crate) fn check_shape(&self, state: &WaveState) -> Result<()> {
        let want = (self.n_channels(), self.lattice.n_sites);
        if state.amplitudes.dim() != want {
            return Err(SimError::config(format!(
                "state has shape {:?}, Hamiltonian expects {:?}",
                state.amplitudes.dim(),
                want
            )));
        }
        Ok(())
    }

    /// Writes `H u` into `out`. Both slices are flattened `C x N` arrays.
    pub(crate) fn apply_into(&self, amps: &[C64], t: f64, out: &mut [C64]) {
        let n = self.lattice.n_sites;
        let c = self.n_channels();
        debug_assert_eq!(amps.len(), n * c);
        debug_assert_eq!(out.len(), n * c);
        let delta = self.lattice.site_energy;
        let tau = self.lattice.hopping;

        for ch in 0..c {
            let u = &amps[ch * n..(ch + 1) * n];
            let o = &mut out[ch * n..(ch + 1) * n];
            o[0] = u[0] * delta + (u[n - 1] + u[1]) * tau;
            for j in 1..n - 1 {
                o[j] = u[j] * delta + (u[j - 1] + u[j + 1]) * tau;
            }
            o[n - 1] = u[n - 1] * delta + (u[n - 2] + u[0]) * tau;
        }

        let g = self.profile.time_factor(t);
        if g == 0.0 {
            return;
        }
        let (parent_out, daughters_out) = out.split_at_mut(n);
        let parent = &amps[..n];
        for d in 1..c {
            let u = &amps[d * n..(d + 1) * n];
            let o = &mut daughters_out[(d - 1) * n..d * n];
            for j in 0..n {
                let chi = self.site_profile[j] * g;
                parent_out[j] += u[j] * chi;
                o[j] += parent[j] * chi;
            }
        }
    }

    /// Writes `du/dt = -i H u / hbar` into `out`.
    pub(crate) fn rhs_into(&self, amps: &[C64], t: f64, out: &mut [C64]) {
        self.apply_into(amps, t, out);
        for z in out.iter_mut() {
            *z = C64::new(z.im, -z.re) / HBAR;
        }
    }

    /// `H u` for a full state.
    pub fn apply(&self, state: &WaveState, t: f64) -> Result<Array2<C64>> {
        self.check_shape(state)?;
        let mut out = Array2::zeros(state.amplitudes.dim());
        self.apply_into(
            state.as_slice(),
            t,
            out.as_slice_mut().expect("fresh array is contiguous"),
        );
        Ok(out)
    }

    /// Time derivative of the amplitudes at time `t`.
    pub fn rhs(&self, state: &WaveState, t: f64) -> Result<Array2<C64>> {
        self.check_shape(state)?;
        let mut out = Array2::zeros(state.amplitudes.dim());
        self.rhs_into(
            state.as_slice(),
            t,
            out.as_slice_mut().expect("fresh array is contiguous"),
        );
        Ok(out)
    }
}

/// Free-function form of [`Hamiltonian::rhs`].
pub fn hamiltonian_rhs(state: &WaveState, hamiltonian: &Hamiltonian, t: f64) -> Result<Array2<C64>> {
    hamiltonian.rhs(state, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn plane_wave(n: usize, m: usize) -> WaveState {
        let grid = WavenumberGrid::new(&LatticeParams::unit(n).unwrap());
        let k = grid.wavenumber(m);
        let norm = (n as f64).sqrt();
        let amps = Array2::from_shape_fn((2, n), |(c, j)| {
            if c == 0 {
                C64::from_polar(1.0 / norm, -k * j as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        WaveState::from_amplitudes(amps, 0.0).unwrap()
    }

    #[test]
    fn lattice_params_validation() {
        assert!(LatticeParams::new(3, 1.0, 0.0, 1.0).is_err());
        assert!(LatticeParams::new(4, 1.0, 0.0, 0.0).is_err());
        assert!(LatticeParams::new(4, 0.0, 0.0, 1.0).is_err());
        assert!(LatticeParams::new(4, 1.0, f64::NAN, 1.0).is_err());
        let p = LatticeParams::new(4, 1.0, 0.0, -1.0).unwrap();
        assert_eq!(p.hbar(), 1.0);
    }

    #[test]
    fn dispersion_examples() {
        let p = LatticeParams::unit(16).unwrap();
        assert_abs_diff_eq!(dispersion_omega(PI / 2.0, &p), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dispersion_omega(0.0, &p), 2.0, epsilon = 1e-15);
        // Frozen from an independent scalar evaluation of 2 cos(0.942).
        assert_abs_diff_eq!(dispersion_omega(0.942, &p), 1.17634346066275, epsilon = 1e-12);
        // Periodic in k with period 2 pi / a.
        assert_abs_diff_eq!(
            dispersion_omega(0.3, &p),
            dispersion_omega(0.3 + 2.0 * PI, &p),
            epsilon = 1e-12
        );
    }

    #[test]
    fn group_velocity_examples() {
        let p = LatticeParams::unit(16).unwrap();
        assert_eq!(group_velocity(0.0, &p), 0.0);
        assert_abs_diff_eq!(group_velocity(PI / 2.0, &p), -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(group_velocity(5.34, &p), 1.6188653128932389, epsilon = 1e-12);
    }

    #[test]
    fn group_velocity_is_dispersion_slope() {
        let p = LatticeParams::new(32, 1.3, 0.4, 0.7).unwrap();
        let h = 1e-5;
        for i in 0..50 {
            let k = -3.0 + 0.13 * i as f64;
            let fd = (dispersion_omega(k + h, &p) - dispersion_omega(k - h, &p)) / (2.0 * h);
            assert!((fd - group_velocity(k, &p)).abs() < 1e-8, "k = {k}");
        }
    }

    #[test]
    fn wavenumber_grid_is_even() {
        let p = LatticeParams::new(10, 0.5, 0.0, 1.0).unwrap();
        let grid = WavenumberGrid::new(&p);
        let ks: Vec<f64> = grid.iter().collect();
        assert_eq!(ks.len(), 10);
        for w in ks.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], 2.0 * PI / 5.0, epsilon = 1e-12);
        }
        assert_eq!(grid.nearest_index(-grid.wavenumber(3)), 7);
    }

    #[test]
    fn site_term_only() {
        let p = LatticeParams::new(8, 1.0, 2.0, 1e-300).unwrap();
        let h = Hamiltonian::new(p, CouplingProfile::Zero, Topology::Pair).unwrap();
        let mut s = WaveState::zeros(2, 8);
        s.as_mut_slice()[0] = C64::new(1.0, 0.0);
        let d = h.rhs(&s, 0.0).unwrap();
        assert_abs_diff_eq!(d[[0, 0]].im, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[[0, 0]].re, 0.0, epsilon = 1e-15);
        let rest: f64 = d.iter().skip(1).map(|z| z.norm()).sum();
        assert!(rest < 1e-290);
    }

    #[test]
    fn plane_waves_are_eigenvectors() {
        for n in [4usize, 16, 32] {
            let p = LatticeParams::unit(n).unwrap();
            let grid = WavenumberGrid::new(&p);
            let h = Hamiltonian::new(p, CouplingProfile::Zero, Topology::Pair).unwrap();
            for m in 0..n {
                let s = plane_wave(n, m);
                let hu = h.apply(&s, 0.0).unwrap();
                // e^{-i k j} has eigenvalue omega(-k) = omega(k).
                let e = dispersion_omega(grid.wavenumber(m), &p);
                for (a, b) in hu.iter().zip(s.amplitudes().iter()) {
                    assert!((a - b * e).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rhs_of_plane_wave_matches_dispersion() {
        let n = 16;
        let p = LatticeParams::unit(n).unwrap();
        let grid = WavenumberGrid::new(&p);
        let h = Hamiltonian::new(p, CouplingProfile::Zero, Topology::Pair).unwrap();
        let s = plane_wave(n, 3);
        let d = h.rhs(&s, 0.0).unwrap();
        let w = dispersion_omega(grid.wavenumber(3), &p);
        for (a, b) in d.iter().zip(s.amplitudes().iter()) {
            assert!((a - b * C64::new(0.0, -w)).norm() < 1e-12);
        }
    }

    #[test]
    fn two_site_limit_reduces_to_pair_equations() {
        // With tau ~ 0 and Delta = 0 every site is an isolated two-port:
        // i du1/dt = chi u2, i du2/dt = chi u1.
        let p = LatticeParams::new(4, 1.0, 0.0, 1e-300).unwrap();
        let chi = 0.3;
        let h = Hamiltonian::new(p, CouplingProfile::uniform(chi).unwrap(), Topology::Pair).unwrap();
        let amps = Array2::from_shape_fn((2, 4), |(c, j)| C64::new(c as f64 + 1.0, j as f64));
        let s = WaveState::from_amplitudes(amps.clone(), 0.0).unwrap();
        let d = h.rhs(&s, 0.0).unwrap();
        for j in 0..4 {
            let i = C64::i();
            assert!((i * d[[0, j]] - amps[[1, j]] * chi).norm() < 1e-12);
            assert!((i * d[[1, j]] - amps[[0, j]] * chi).norm() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let p = LatticeParams::unit(8).unwrap();
        let h = Hamiltonian::new(p, CouplingProfile::Zero, Topology::Star { daughters: 2 }).unwrap();
        let s = WaveState::zeros(2, 8);
        assert!(matches!(h.rhs(&s, 0.0), Err(SimError::Config(_))));
        assert!(Hamiltonian::new(p, CouplingProfile::Zero, Topology::Star { daughters: 0 }).is_err());
    }

    #[test]
    fn star_couples_parent_to_every_daughter() {
        let p = LatticeParams::new(4, 1.0, 0.0, 1e-300).unwrap();
        let h = Hamiltonian::new(
            p,
            CouplingProfile::uniform(1.0).unwrap(),
            Topology::Star { daughters: 3 },
        )
        .unwrap();
        let mut s = WaveState::zeros(4, 4);
        s.as_mut_slice()[4 + 2] = C64::new(1.0, 0.0); // daughter 1, site 2
        let hu = h.apply(&s, 0.0).unwrap();
        assert_abs_diff_eq!(hu[[0, 2]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hu[[2, 2]].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hu[[3, 2]].norm(), 0.0, epsilon = 1e-15);
    }

    fn arb_state(c: usize, n: usize) -> impl Strategy<Value = WaveState> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), c * n).prop_map(move |v| {
            let amps = Array2::from_shape_vec((c, n), v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
                .unwrap();
            WaveState::from_amplitudes(amps, 0.0).unwrap()
        })
    }

    fn arb_hamiltonian() -> impl Strategy<Value = Hamiltonian> {
        (4usize..=8, -1.0f64..1.0, 0.2f64..1.5, 0.0f64..0.5, 1usize..=3).prop_map(
            |(n, delta, tau, chi0, daughters)| {
                let p = LatticeParams::new(n, 1.0, delta, tau).unwrap();
                let profile = CouplingProfile::spatial_gaussian(chi0, 1.3, n as f64 / 2.0, &p).unwrap();
                let topology = if daughters == 1 {
                    Topology::Pair
                } else {
                    Topology::Star { daughters }
                };
                Hamiltonian::new(p, profile, topology).unwrap()
            },
        )
    }

    fn arb_pair() -> impl Strategy<Value = (Hamiltonian, WaveState, WaveState)> {
        arb_hamiltonian().prop_flat_map(|h| {
            let (c, n) = (h.n_channels(), h.lattice().n_sites());
            (Just(h), arb_state(c, n), arb_state(c, n))
        })
    }

    proptest! {
        #[test]
        fn hamiltonian_is_hermitian((h, phi, psi) in arb_pair()) {
            let h_psi = WaveState::from_amplitudes(h.apply(&psi, 0.0).unwrap(), 0.0).unwrap();
            let h_phi = WaveState::from_amplitudes(h.apply(&phi, 0.0).unwrap(), 0.0).unwrap();
            let lhs = phi.inner(&h_psi).unwrap();
            let rhs = h_phi.inner(&psi).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn rhs_is_linear(
            (h, u, v) in arb_pair(),
            ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, bi in -2.0f64..2.0,
        ) {
            let (alpha, beta) = (C64::new(ar, ai), C64::new(br, bi));
            let combo = u.amplitudes() * alpha + v.amplitudes() * beta;
            let combo = WaveState::from_amplitudes(combo, 0.0).unwrap();
            let lhs = h.rhs(&combo, 0.0).unwrap();
            let rhs = h.rhs(&u, 0.0).unwrap() * alpha + h.rhs(&v, 0.0).unwrap() * beta;
            for (a, b) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
