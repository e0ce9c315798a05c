//! Bath spectra, modulation-engineered dissipation rates, and the two
//! collective storage channels.
//!
//! The energy-shift modulation redistributes the battery-bath coupling over
//! sidebands at `omega0 + l nu` with weights `J_l(xi)^2`, so the effective
//! decay rate is `Gamma(xi, nu) = 2 pi sum_l J_l(xi)^2 D(omega0 + l nu)`.
//! For modulation faster than the bath width this collapses to
//! `J0(xi)^2 Gamma0`; at a zero of `J0` the battery decouples entirely.

use std::f64::consts::PI;

use crate::dynamics::LindbladSpec;
use crate::hilbert::{collective_spin_ops, SpinSector};
use crate::model::{bessel_j, Hamiltonian, ModulationParams};
use crate::{C64, Error, Result};

/// Lorentzian spectral density
/// `D(omega) = Omega^2 lambda / (2 pi [(omega - omega_a)^2 + (lambda/2)^2])`
/// clamped to zero for non-positive frequencies (physical baths carry only
/// positive-frequency modes).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzianSpectrum {
    coupling: f64,
    width: f64,
    center: f64,
}

impl LorentzianSpectrum {
    pub fn new(coupling: f64, width: f64, center: f64) -> Result<Self> {
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::InvalidParam(format!("coupling Omega must be >= 0, got {coupling}")));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParam(format!("width lambda must be > 0, got {width}")));
        }
        if !(center.is_finite() && center > 0.0) {
            return Err(Error::InvalidParam(format!("center omega_a must be > 0, got {center}")));
        }
        Ok(Self { coupling, width, center })
    }

    /// Characteristic coupling `Omega`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Width `lambda`.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Center frequency `omega_a`.
    pub fn center(&self) -> f64 {
        self.center
    }
}

/// `D(omega)`; zero for `omega <= 0`.
pub fn spectral_density(s: &LorentzianSpectrum, omega: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let half_width = s.width / 2.0;
    s.coupling * s.coupling * s.width
        / (2.0 * PI * ((omega - s.center).powi(2) + half_width * half_width))
}

/// Unmodulated decay rate `Gamma0 = 2 pi D(omega0)`.
pub fn bare_rate(s: &LorentzianSpectrum, omega0: f64) -> f64 {
    2.0 * PI * spectral_density(s, omega0)
}

/// Default sideband cutoff: `J_l(xi)^2` tails are below `1e-12` beyond it.
pub fn sideband_cutoff(xi: f64) -> i32 {
    xi.abs().ceil() as i32 + 20
}

/// Modulation-engineered rate `2 pi sum_{|l| <= L} J_l(xi)^2 D(omega0 + l nu)`.
/// With `xi = 0` or `nu = 0` this is exactly `Gamma0`.
pub fn effective_rate(m: &ModulationParams, s: &LorentzianSpectrum, omega0: f64) -> Result<f64> {
    effective_rate_truncated(m, s, omega0, sideband_cutoff(m.xi()))
}

/// [`effective_rate`] with an explicit sideband cutoff, for convergence
/// checks.
pub fn effective_rate_truncated(
    m: &ModulationParams,
    s: &LorentzianSpectrum,
    omega0: f64,
    cutoff: i32,
) -> Result<f64> {
    if m.xi() == 0.0 || m.nu() == 0.0 {
        return Ok(bare_rate(s, omega0));
    }
    let mut rate = 0.0;
    for l in -cutoff..=cutoff {
        let weight = bessel_j(l, m.xi())?.powi(2);
        rate += weight * spectral_density(s, omega0 + l as f64 * m.nu());
    }
    Ok(2.0 * PI * rate)
}

/// Collective pure dephasing: precession `omega Sz` plus jump `Sz` at rate
/// `gamma`. Destroys coherences between Dicke levels while leaving every
/// population untouched.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DephasingChannel {
    gamma: f64,
    omega: f64,
}

impl DephasingChannel {
    pub fn new(gamma: f64, omega: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParam(format!("dephasing rate must be >= 0, got {gamma}")));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidParam(format!("precession frequency must be finite, got {omega}")));
        }
        Ok(Self { gamma, omega })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

pub fn dephasing_spec(ch: &DephasingChannel, sector: SpinSector) -> Result<LindbladSpec> {
    let ops = collective_spin_ops(sector);
    let h = Hamiltonian::from_static(ops.sz.scale(C64::from(ch.omega)))?;
    LindbladSpec::new(Some(h), vec![(ops.sz, ch.gamma)])
}

/// Collective dissipation: jump `S-` at a fixed or spectrum-derived rate.
/// Interaction picture, no Hamiltonian part (the Lamb shift is dropped).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationChannel {
    rate: f64,
}

impl DissipationChannel {
    pub fn from_rate(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidParam(format!("dissipation rate must be >= 0, got {rate}")));
        }
        Ok(Self { rate })
    }

    /// Rate engineered by the modulation acting against a Lorentzian bath.
    pub fn from_spectrum(
        m: &ModulationParams,
        s: &LorentzianSpectrum,
        omega0: f64,
    ) -> Result<Self> {
        Self::from_rate(effective_rate(m, s, omega0)?)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

pub fn dissipation_spec(ch: &DissipationChannel, sector: SpinSector) -> Result<LindbladSpec> {
    let ops = collective_spin_ops(sector);
    LindbladSpec::new(None, vec![(ops.sm, ch.rate)])
}
