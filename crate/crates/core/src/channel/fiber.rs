//! Birefringent fiber model: a fiber of length `L` and index difference
//! `Δn` delays `|V⟩` relative to `|H⟩` by `τ(ω) = κω`, `κ = LΔn/c`.
//! Averaged over a Gaussian spectrum this dephases the H/V coherence.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{dephasing_channel, Axis, ChiMatrix};
use crate::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberParams {
    /// Length in meters.
    pub length: f64,
    pub delta_n: f64,
}

impl FiberParams {
    pub fn new(length: f64, delta_n: f64) -> Result<Self> {
        let f = Self { length, delta_n };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fiber length must be positive, got {}",
                self.length
            )));
        }
        if !(self.delta_n > 0.0 && self.delta_n < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "index difference must lie in (0, 1), got {}",
                self.delta_n
            )));
        }
        Ok(())
    }

    /// Differential group delay `κ = LΔn/c` in seconds.
    pub fn kappa(&self) -> f64 {
        self.length * self.delta_n / SPEED_OF_LIGHT
    }
}

pub fn kappa(f: &FiberParams) -> f64 {
    f.kappa()
}

/// Gaussian spectrum `f(ω) = (2/(√π σ)) exp(−4(ω−ω₀)²/σ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralProfile {
    /// Center angular frequency, rad/s.
    pub omega0: f64,
    /// Width parameter, rad/s.
    pub sigma: f64,
}

impl SpectralProfile {
    pub fn new(omega0: f64, sigma: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spectrum needs omega0 > 0 and sigma > 0, got {omega0}, {sigma}"
            )));
        }
        Ok(Self { omega0, sigma })
    }

    /// From a center wavelength and filter FWHM, both in nm. The intensity
    /// FWHM of `f` is `σ√ln2`, matched to `Δω = 2πcΔλ/λ²`.
    pub fn from_wavelength(lambda_nm: f64, fwhm_nm: f64) -> Result<Self> {
        if !(lambda_nm > 0.0) || !(fwhm_nm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wavelength and filter width must be positive, got {lambda_nm}, {fwhm_nm}"
            )));
        }
        let lambda = lambda_nm * 1e-9;
        let omega0 = 2.0 * PI * SPEED_OF_LIGHT / lambda;
        let d_omega = 2.0 * PI * SPEED_OF_LIGHT * fwhm_nm * 1e-9 / (lambda * lambda);
        Self::new(omega0, d_omega / 2f64.ln().sqrt())
    }

    pub fn density(&self, omega: f64) -> f64 {
        let d = omega - self.omega0;
        2.0 / (PI.sqrt() * self.sigma) * (-4.0 * d * d / (self.sigma * self.sigma)).exp()
    }

    /// `ω` at reduced coordinate `x = 2(ω − ω₀)/σ`.
    pub fn omega_at(&self, x: f64) -> f64 {
        self.omega0 + 0.5 * self.sigma * x
    }
}

/// Coherence length `λ²/Δλ` in μm, from wavelengths in nm.
pub fn coherence_length(lambda_nm: f64, fwhm_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) || !(fwhm_nm > 0.0) {
        return Err(Error::InvalidParameter(
            "wavelength and filter width must be positive".into(),
        ));
    }
    Ok(lambda_nm * lambda_nm / fwhm_nm * 1e-3)
}

/// Fiber length in m after which the birefringent delay exceeds the
/// coherence length `ΔL` (μm).
pub fn decoherence_fiber_length(coherence_um: f64, delta_n: f64) -> Result<f64> {
    if !(coherence_um > 0.0) || !(delta_n > 0.0) {
        return Err(Error::InvalidParameter(
            "coherence length and index difference must be positive".into(),
        ));
    }
    Ok(coherence_um * 1e-6 / delta_n)
}

/// Spectrum-averaged coherence multiplier, `|Γ| ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceFactor(Complex64);

impl CoherenceFactor {
    pub fn new(gamma: Complex64) -> Result<Self> {
        let g = gamma.norm();
        if !g.is_finite() || g > 1.0 + 1e-12 {
            return Err(Error::InvalidCoherence(g));
        }
        Ok(Self(gamma))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }
}

/// `Γ = ∫ f(ω) e^{iκω} dω = exp(−κ²σ²/16)·e^{iκω₀}`, the factor acquired by
/// `ρ_VH`. The H/V element `ρ_HV` picks up the conjugate.
pub fn single_fiber_gamma(f: &FiberParams, s: &SpectralProfile) -> CoherenceFactor {
    gamma_for_kappa(f.kappa(), s)
}

pub fn gamma_for_kappa(kappa: f64, s: &SpectralProfile) -> CoherenceFactor {
    let decay = (-(kappa * kappa) * s.sigma * s.sigma / 16.0).exp();
    CoherenceFactor(Complex64::from_polar(decay, kappa * s.omega0))
}

/// Channel of one fiber: the coherence of the fiber's H/V basis is
/// multiplied by `Γ*` (on `ρ_HV`), expressed in the eigenbasis of `axis`
/// (`Z` for the bare fiber, `X` when sandwiched between 22.5° wave plates).
pub fn fiber_channel(f: &FiberParams, s: &SpectralProfile, axis: Axis) -> Result<ChiMatrix> {
    dephasing_channel(single_fiber_gamma(f, s).value().conj(), axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::quadrature::spectral_integral;

    #[test]
    fn kappa_values() {
        let k = FiberParams::new(0.61, 3.5e-4).unwrap().kappa();
        assert!((k - 7.12e-13).abs() / 7.12e-13 < 1e-3);
        let k = FiberParams::new(120.0, 3.5e-4).unwrap().kappa();
        assert!((k - 1.401e-10).abs() / 1.401e-10 < 1e-3);
    }

    #[test]
    fn fiber_params_validation() {
        assert!(FiberParams::new(0.0, 3.5e-4).is_err());
        assert!(FiberParams::new(1.0, 1.0).is_err());
        assert!(FiberParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn coherence_arithmetic() {
        assert!((coherence_length(800.0, 3.0).unwrap() - 213.333_333_333).abs() < 1e-6);
        assert!((coherence_length(800.0, 800.0).unwrap() - 0.8).abs() < 1e-12);
        assert!((coherence_length(1550.0, 1.0).unwrap() - 2402.5).abs() < 1e-9);
        assert!((decoherence_fiber_length(100.0, 1e-4).unwrap() - 1.0).abs() < 1e-12);
        assert!((decoherence_fiber_length(213.33, 3.5e-4).unwrap() - 0.6095).abs() < 1e-4);
        assert!(coherence_length(-1.0, 3.0).is_err());
    }

    #[test]
    fn profile_is_normalised() {
        let s = SpectralProfile::from_wavelength(800.0, 3.0).unwrap();
        let v = spectral_integral(&s, |_| Complex64::new(1.0, 0.0), 1e-13);
        assert!((v.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fwhm_matches_filter_width() {
        let s = SpectralProfile::from_wavelength(800.0, 3.0).unwrap();
        let half = s.sigma * 2f64.ln().sqrt() / 2.0;
        let ratio = s.density(s.omega0 + half) / s.density(s.omega0);
        assert!((ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn long_fiber_is_completely_dephasing() {
        let s = SpectralProfile::from_wavelength(800.0, 3.0).unwrap();
        let f = FiberParams::new(120.0, 3.5e-4).unwrap();
        assert!(single_fiber_gamma(&f, &s).magnitude() < 1e-6);
    }
}
