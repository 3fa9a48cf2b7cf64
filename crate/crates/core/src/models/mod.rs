//! Builders for the (spectrum, operator) pairs studied here.

mod anharmonic;
mod boxes;
mod oscillator;
mod random;
mod semiclassical;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{EigenbasisOperator, Spectrum};

pub use anharmonic::{anharmonic_solve, AnharmonicConfig};
pub use boxes::{box_element, box_position_1d, box_position_2d};
pub use oscillator::{binomial, gaussian_decay_estimate, harmonic_position, harmonic_power, uq_binomial};
pub use random::random_ensemble;
pub use semiclassical::{
    bohr_sommerfeld_energy, bohr_sommerfeld_scale, g_factor, j_factor, semiclassical_log_element,
    semiclassical_operator, wkb_integrand, wkb_integrand_quadrature, NearestElements, SemiclassicalElement,
};

/// A model: its spectrum, the observable in its eigenbasis, and build notes.
#[derive(Debug, Clone)]
pub struct Model {
    pub spectrum: Spectrum,
    pub operator: EigenbasisOperator,
    pub warnings: Vec<String>,
}

impl Model {
    pub fn new(spectrum: Spectrum, operator: EigenbasisOperator) -> Result<Self> {
        crate::error::ensure_dim(spectrum.dimension(), operator.dimension())?;
        Ok(Self { spectrum, operator, warnings: Vec::new() })
    }

    pub fn into_parts(self) -> (Spectrum, EigenbasisOperator) {
        (self.spectrum, self.operator)
    }

    /// Keep the lowest `n` eigenstates.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Ok(Self {
            spectrum: self.spectrum.truncated(n)?,
            operator: self.operator.truncated(n)?,
            warnings: self.warnings.clone(),
        })
    }
}

/// Envelope of off-diagonal matrix elements as a function of `|ω|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum DecayLaw {
    Flat,
    /// `(1 + |ω|)^{-a}`
    Power { a: f64 },
    /// `exp(-γ |ω|)`
    Exponential { gamma: f64 },
    /// `exp(-ω² / 2σ²)`
    Gaussian { sigma: f64 },
}

/// The structure function prescribed for a random ensemble.
pub type StructureSpec = DecayLaw;

impl DecayLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DecayLaw::Flat => true,
            DecayLaw::Power { a } => a > 0.0 && a.is_finite(),
            DecayLaw::Exponential { gamma } => gamma > 0.0 && gamma.is_finite(),
            DecayLaw::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("decay parameter must be positive: {self:?}")))
        }
    }

    /// `ln f(ω)`
    pub fn log_amplitude(&self, omega: f64) -> f64 {
        let w = omega.abs();
        match *self {
            DecayLaw::Flat => 0.0,
            DecayLaw::Power { a } => -a * w.ln_1p(),
            DecayLaw::Exponential { gamma } => -gamma * w,
            DecayLaw::Gaussian { sigma } => -w * w / (2.0 * sigma * sigma),
        }
    }

    pub fn amplitude(&self, omega: f64) -> f64 {
        self.log_amplitude(omega).exp()
    }

    pub fn name(&self) -> &'static str {
        match self {
            DecayLaw::Flat => "flat",
            DecayLaw::Power { .. } => "power",
            DecayLaw::Exponential { .. } => "exponential",
            DecayLaw::Gaussian { .. } => "gaussian",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_validation() {
        assert!(DecayLaw::Exponential { gamma: -1.0 }.validate().is_err());
        assert!(DecayLaw::Gaussian { sigma: 0.0 }.validate().is_err());
        assert!(DecayLaw::Power { a: 2.0 }.validate().is_ok());
        assert!(DecayLaw::Flat.validate().is_ok());
    }

    #[test]
    fn envelopes() {
        assert_eq!(DecayLaw::Flat.amplitude(7.0), 1.0);
        assert!((DecayLaw::Exponential { gamma: 0.5 }.amplitude(2.0) - (-1f64).exp()).abs() < 1e-15);
        assert!((DecayLaw::Gaussian { sigma: 2.0 }.amplitude(2.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((DecayLaw::Power { a: 2.0 }.amplitude(1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn serde_tagged() {
        let j = serde_json::to_string(&DecayLaw::Exponential { gamma: 1.0 }).unwrap();
        assert_eq!(j, r#"{"law":"exponential","gamma":1.0}"#);
    }
}
