//! Inter-channel coupling profiles and splitter calibration.
//!
//! Every profile factorizes as `chi_j(t) = s_j * g(t)`: a site shape and a
//! time envelope. The Hamiltonian caches `s_j` once and evaluates `g(t)` per
//! right-hand-side call.

use std::f64::consts::PI;

use crate::error::{Result, SimError};
use crate::lattice::{group_velocity, LatticeParams, HBAR};

/// Time envelope of a uniform exponential switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchShape {
    /// `chi0 * exp(-t / t0)`: full strength at `t = 0`, then decays.
    Decay,
    /// `chi0 * (1 - exp(-t / t0))`: smooth turn-on that saturates at `chi0`.
    Ramp,
}

/// One Gaussian coupler: `chi0 * exp(-(a (j - center))^2 / (2 sigma_chi^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCoupler {
    pub chi0: f64,
    /// Standard deviation, in units of length.
    pub sigma_chi: f64,
    /// Site coordinate of the peak; need not be an integer.
    pub center: f64,
}

impl GaussianCoupler {
    fn validate(&self) -> Result<()> {
        if !(self.chi0.is_finite() && self.chi0 >= 0.0) {
            return Err(SimError::config(format!("chi0 must be >= 0, got {}", self.chi0)));
        }
        if !(self.sigma_chi.is_finite() && self.sigma_chi > 0.0) {
            return Err(SimError::config(format!(
                "sigma_chi must be > 0, got {}",
                self.sigma_chi
            )));
        }
        if !self.center.is_finite() {
            return Err(SimError::config("coupler center must be finite"));
        }
        Ok(())
    }

    fn value(&self, site: usize, spacing: f64) -> f64 {
        let x = spacing * (site as f64 - self.center);
        self.chi0 * (-x * x / (2.0 * self.sigma_chi * self.sigma_chi)).exp()
    }
}

/// Inter-channel coupling `chi_j(t)` as a function of site and time.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingProfile {
    Zero,
    /// Constant `chi0` on every site at every time.
    Uniform { chi0: f64 },
    /// Same value on every site, switched in time. Zero for `t < 0`.
    ExponentialSwitch { chi0: f64, t0: f64, shape: SwitchShape },
    /// Static sum of Gaussian couplers.
    SpatialGaussian {
        couplers: Vec<GaussianCoupler>,
        spacing: f64,
    },
}

impl CouplingProfile {
    pub fn uniform(chi0: f64) -> Result<Self> {
        check_chi0(chi0)?;
        Ok(CouplingProfile::Uniform { chi0 })
    }

    /// `chi0 * exp(-t / t0)` for `t >= 0`.
    pub fn exponential_switch(chi0: f64, t0: f64) -> Result<Self> {
        Self::switch(chi0, t0, SwitchShape::Decay)
    }

    /// `chi0 * (1 - exp(-t / t0))` for `t >= 0`.
    pub fn exponential_ramp(chi0: f64, t0: f64) -> Result<Self> {
        Self::switch(chi0, t0, SwitchShape::Ramp)
    }

    pub fn switch(chi0: f64, t0: f64, shape: SwitchShape) -> Result<Self> {
        check_chi0(chi0)?;
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(SimError::config(format!("t0 must be > 0, got {t0}")));
        }
        Ok(CouplingProfile::ExponentialSwitch { chi0, t0, shape })
    }

    pub fn spatial_gaussian(chi0: f64, sigma_chi: f64, center: f64, p: &LatticeParams) -> Result<Self> {
        Self::gaussian_couplers(
            vec![GaussianCoupler {
                chi0,
                sigma_chi,
                center,
            }],
            p,
        )
    }

    pub fn gaussian_couplers(couplers: Vec<GaussianCoupler>, p: &LatticeParams) -> Result<Self> {
        if couplers.is_empty() {
            return Err(SimError::config("at least one coupler is required"));
        }
        for c in &couplers {
            c.validate()?;
        }
        Ok(CouplingProfile::SpatialGaussian {
            couplers,
            spacing: p.spacing(),
        })
    }

    /// Site-dependent factor `s_j`.
    pub fn site_factor(&self, site: usize) -> f64 {
        match self {
            CouplingProfile::Zero => 0.0,
            CouplingProfile::Uniform { chi0 } | CouplingProfile::ExponentialSwitch { chi0, .. } => *chi0,
            CouplingProfile::SpatialGaussian { couplers, spacing } => {
                couplers.iter().map(|c| c.value(site, *spacing)).sum()
            }
        }
    }

    /// Time envelope `g(t)`, in `[0, 1]`.
    pub fn time_factor(&self, t: f64) -> f64 {
        match *self {
            CouplingProfile::ExponentialSwitch { t0, shape, .. } => {
                if t < 0.0 {
                    0.0
                } else {
                    match shape {
                        SwitchShape::Decay => (-t / t0).exp(),
                        SwitchShape::Ramp => -(-t / t0).exp_m1(),
                    }
                }
            }
            _ => 1.0,
        }
    }

    pub(crate) fn max_time_factor(&self) -> f64 {
        match self {
            CouplingProfile::Zero => 0.0,
            _ => 1.0,
        }
    }

    /// `a * sum_j chi_j` over a ring of `n_sites`, at time `t`.
    pub fn density_sum(&self, n_sites: usize, spacing: f64, t: f64) -> f64 {
        let g = self.time_factor(t);
        spacing * (0..n_sites).map(|j| self.site_factor(j)).sum::<f64>() * g
    }

    /// `(1/hbar) * integral_0^t chi(t') dt'` for the site-independent kinds.
    ///
    /// This is the two-port rotation angle: with a site-independent coupling
    /// the channel populations are exactly `cos^2` and `sin^2` of it.
    pub fn accumulated_angle(&self, t: f64) -> Option<f64> {
        let t = t.max(0.0);
        let angle = match *self {
            CouplingProfile::Zero => 0.0,
            CouplingProfile::Uniform { chi0 } => chi0 * t,
            CouplingProfile::ExponentialSwitch { chi0, t0, shape } => match shape {
                SwitchShape::Decay => -chi0 * t0 * (-t / t0).exp_m1(),
                SwitchShape::Ramp => chi0 * (t + t0 * (-t / t0).exp_m1()),
            },
            CouplingProfile::SpatialGaussian { .. } => return None,
        };
        Some(angle / HBAR)
    }
}

fn check_chi0(chi0: f64) -> Result<()> {
    if chi0.is_finite() && chi0 >= 0.0 {
        Ok(())
    } else {
        Err(SimError::config(format!("chi0 must be >= 0, got {chi0}")))
    }
}

/// Free-function form of `chi_j(t)`.
pub fn evaluate_chi(profile: &CouplingProfile, site: usize, t: f64) -> f64 {
    profile.site_factor(site) * profile.time_factor(t)
}

/// Width of a 50/50 Gaussian coupler for a packet at wavenumber `k0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerCalibration {
    /// Length `L` of a flat coupler of height `chi0` that rotates by `pi/4`.
    pub coupler_width: f64,
    /// Target `integral rho dx = pi |v_g| / 4`.
    pub density_integral: f64,
    /// Gaussian standard deviation giving the same integral: `L / sqrt(2 pi)`.
    pub sigma_chi: f64,
}

pub fn calibrate(chi0: f64, k0: f64, p: &LatticeParams) -> Result<CouplerCalibration> {
    if !(chi0.is_finite() && chi0 > 0.0) {
        return Err(SimError::Calibration(format!("chi0 must be > 0, got {chi0}")));
    }
    let speed = group_velocity(k0, p).abs();
    if speed < 1e-12 * p.spacing() * p.hopping().abs() {
        return Err(SimError::Calibration(format!(
            "group velocity vanishes at k0 a = {}; the packet never crosses the coupler",
            k0 * p.spacing()
        )));
    }
    let density_integral = PI * speed * HBAR / 4.0;
    let coupler_width = density_integral / chi0;
    Ok(CouplerCalibration {
        coupler_width,
        density_integral,
        sigma_chi: coupler_width / (2.0 * PI).sqrt(),
    })
}

/// `a tau sqrt(2 pi) |sin(k0 a)| / (4 chi0 hbar)`.
pub fn calibrate_sigma_chi(chi0: f64, k0: f64, p: &LatticeParams) -> Result<f64> {
    calibrate(chi0, k0, p).map(|c| c.sigma_chi)
}

/// Time at which a parent and `n_daughters` identically coupled daughters
/// first hold equal populations: `arcsec(sqrt(N + 1)) / (chi sqrt(N))`.
pub fn equal_population_time(n_daughters: usize, chi: f64) -> Result<f64> {
    if n_daughters == 0 {
        return Err(SimError::usage("need at least one daughter channel"));
    }
    if !(chi.is_finite() && chi > 0.0) {
        return Err(SimError::usage(format!("chi must be > 0, got {chi}")));
    }
    let n = n_daughters as f64;
    // arcsec(x) = arccos(1/x)
    Ok(HBAR * (1.0 / (n + 1.0).sqrt()).acos() / (chi * n.sqrt()))
}

/// Population cycle period `pi hbar / chi`. A one-way transfer takes half.
pub fn rabi_period(chi: f64) -> Result<f64> {
    if !(chi.is_finite() && chi > 0.0) {
        return Err(SimError::usage(format!("chi must be > 0, got {chi}")));
    }
    Ok(PI * HBAR / chi)
}
