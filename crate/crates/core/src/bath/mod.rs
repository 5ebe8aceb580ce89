//! Harmonic-bath statistics: Ohmic-family spectral densities, the finite
//! temperature bath correlation function, discretised influence coefficients
//! (with every boundary case), and the integral diagnostics `L(t)`, `L̇(t)`.

mod eta;

pub use eta::{
    eta_dephasing, eta_general, l_of_t, truncate_eta, EtaCase, EtaTable, LDiagnostic, LMode,
};

use crate::quad::{self, QuadError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum BathError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Which Pauli matrix couples the bath to the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CouplingAxis {
    /// Pure-dephasing bath, commutes with the system Hamiltonian.
    X,
    /// General bath, non-commuting.
    Z,
}

/// Ohmic-family spectral density `J(ω) = γ ω_c (ω/ω_c)^s exp(-ω/ω_c)`.
///
/// `s = 1` is the plain Ohmic form `γ ω exp(-ω/ω_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    /// Dimensionless coupling strength γ.
    pub coupling: f64,
    /// Cut-off angular frequency ω_c, in units of the tunneling amplitude.
    pub cutoff: f64,
    /// Ohmicity exponent s.
    pub ohmicity: f64,
}

impl SpectralDensity {
    pub fn new(coupling: f64, cutoff: f64, ohmicity: f64) -> Result<Self, BathError> {
        if coupling < 0.0 {
            return Err(BathError::Domain("coupling must be >= 0".into()));
        }
        if cutoff <= 0.0 {
            return Err(BathError::Domain("cutoff must be > 0".into()));
        }
        if ohmicity <= 0.0 {
            return Err(BathError::Domain("ohmicity must be > 0".into()));
        }
        Ok(Self {
            coupling,
            cutoff,
            ohmicity,
        })
    }

    pub fn ohmic(coupling: f64, cutoff: f64) -> Result<Self, BathError> {
        Self::new(coupling, cutoff, 1.0)
    }

    /// `J(ω)` for `ω >= 0`.
    pub fn value(&self, omega: f64) -> Result<f64, BathError> {
        if omega < 0.0 {
            return Err(BathError::Domain(format!(
                "spectral density evaluated at negative frequency {omega}"
            )));
        }
        Ok(self.signed(omega))
    }

    /// Odd extension `J(-ω) = -J(ω)`, used internally by the frequency
    /// integrals over the whole real line.
    pub(crate) fn signed(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return 0.0;
        }
        let a = omega.abs();
        self.coupling
            * self.cutoff
            * (a / self.cutoff).powf(self.ohmicity)
            * (-a / self.cutoff).exp()
            * omega.signum()
    }
}

/// A bath attached to the system along one coupling axis at fixed inverse
/// temperature β (units of Δ⁻¹).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub spectral: SpectralDensity,
    pub inverse_temperature: f64,
    pub axis: CouplingAxis,
}

impl BathSpec {
    pub fn new(
        spectral: SpectralDensity,
        inverse_temperature: f64,
        axis: CouplingAxis,
    ) -> Result<Self, BathError> {
        if !(inverse_temperature > 0.0) || !inverse_temperature.is_finite() {
            return Err(BathError::Domain(
                "inverse temperature must be finite and > 0".into(),
            ));
        }
        Ok(Self {
            spectral,
            inverse_temperature,
            axis,
        })
    }

    /// Two-sided kernel `J(ω) e^{βω/2} / sinh(βω/2)` with `J` extended oddly.
    ///
    /// The thermal ratio is evaluated as `2 / (1 - e^{-2y})` for `y > 0`
    /// (and the mirrored form for `y < 0`) to avoid overflow, and by series
    /// near `y = 0`, where the kernel tends to `2 J(ω)/(β ω)`.
    pub(crate) fn kernel(&self, omega: f64) -> f64 {
        let beta = self.inverse_temperature;
        let y = 0.5 * beta * omega;
        if y.abs() < 1e-4 {
            // J(ω)·(1/y + 1 + y/3 - y³/45 + …); the 1/y term reduces to
            // (2γ/β)(|ω|/ω_c)^{s-1} e^{-|ω|/ω_c}, finite at ω = 0 for s >= 1
            let sd = &self.spectral;
            let a = omega.abs();
            let inv = (2.0 * sd.coupling / beta)
                * (a / sd.cutoff).powf(sd.ohmicity - 1.0)
                * (-a / sd.cutoff).exp();
            let j = sd.signed(omega);
            return inv + j * (1.0 + y / 3.0 - y * y * y / 45.0);
        }
        let e = (-2.0 * y.abs()).exp();
        let ratio = if y > 0.0 {
            2.0 / (1.0 - e)
        } else {
            -2.0 * e / (1.0 - e)
        };
        self.spectral.signed(omega) * ratio
    }

    /// Frequency window [-Ω, Ω] outside which the kernel is negligible.
    pub(crate) fn omega_window(&self) -> f64 {
        (40.0 * self.spectral.cutoff).max(40.0 / self.inverse_temperature)
    }
}

/// Bath correlation function
/// `C(t) = (1/2π) ∫ dω J(ω) e^{βω/2}/sinh(βω/2) e^{-iωt}`
/// with `J` extended oddly to negative frequencies.
///
/// Satisfies `C(-t) = conj(C(t))`; `C(0)` is real and positive for γ > 0.
pub fn correlation_function(bath: &BathSpec, t: f64) -> Result<Complex64, BathError> {
    if bath.spectral.coupling == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w = bath.omega_window();
    let f = |omega: f64| {
        let phase = Complex64::new(0.0, -omega * t).exp();
        bath.kernel(omega) * phase
    };
    // resolve both the kernel decay and the e^{-iωt} oscillation
    let panels = (32.0 + w * t.abs() / 2.0).ceil() as usize;
    let val = quad::integrate(&f, -w, w, panels, 1e-11)?;
    Ok(val / (2.0 * std::f64::consts::PI))
}
