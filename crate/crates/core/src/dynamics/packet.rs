use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::spectral::{Grid1D, GridFunction, Space};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum PacketShape {
    /// `(σ²πε)^(−1/4) exp(−(k−p₀)²/(2σ²ε))`.
    Gaussian { p0: f64, sigma2: f64 },
    /// `exp(−(k−p₀)⁶/(4ε))/Z`.
    Sextic { p0: f64 },
}

/// Upper-band incoming packet, given by its real momentum profile at t = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub shape: PacketShape,
    pub epsilon: f64,
}

impl PacketSpec {
    pub fn gaussian(p0: f64, sigma2: f64, epsilon: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::Config(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        Self::checked(PacketShape::Gaussian { p0, sigma2 }, epsilon)
    }

    pub fn sextic(p0: f64, epsilon: f64) -> Result<Self> {
        Self::checked(PacketShape::Sextic { p0 }, epsilon)
    }

    fn checked(shape: PacketShape, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(Self { shape, epsilon })
    }

    pub fn p0(&self) -> f64 {
        match self.shape {
            PacketShape::Gaussian { p0, .. } | PacketShape::Sextic { p0 } => p0,
        }
    }

    /// `M(k)` with `|ψ̂(k)| ∝ exp(−M(k)/ε)`; minimal (zero) at `p₀`.
    pub fn log_modulus(&self, k: f64) -> f64 {
        match self.shape {
            PacketShape::Gaussian { p0, sigma2 } => (k - p0).powi(2) / (2.0 * sigma2),
            PacketShape::Sextic { p0 } => (k - p0).powi(6) / 4.0,
        }
    }

    fn normalization(&self) -> f64 {
        let eps = self.epsilon;
        match self.shape {
            PacketShape::Gaussian { sigma2, .. } => (sigma2 * PI * eps).powf(-0.25),
            // ∫ exp(−x⁶/(2ε)) dx = 2Γ(7/6)(2ε)^(1/6)
            PacketShape::Sextic { .. } => {
                (2.0 * gamma(7.0 / 6.0) * (2.0 * eps).powf(1.0 / 6.0)).powf(-0.5)
            }
        }
    }

    /// Normalized momentum profile at t = 0.
    pub fn hat(&self, k: f64) -> f64 {
        self.normalization() * (-self.log_modulus(k) / self.epsilon).exp()
    }

    pub fn hat_on(&self, grid: &Arc<Grid1D>) -> GridFunction {
        GridFunction::from_real(grid, Space::Momentum, |k| self.hat(k))
    }

    /// Standard deviation of `|ψ̂|²` in k.
    pub fn momentum_width(&self) -> f64 {
        match self.shape {
            PacketShape::Gaussian { sigma2, .. } => (sigma2 * self.epsilon / 2.0).sqrt(),
            // ⟨x²⟩ for exp(−x⁶/(2ε)) is (2ε)^(1/3) Γ(1/2)/Γ(1/6)
            PacketShape::Sextic { .. } => {
                ((2.0 * self.epsilon).powf(1.0 / 3.0) * gamma(0.5) / gamma(1.0 / 6.0)).sqrt()
            }
        }
    }

    /// Position spread at t = 0, from the minimal-uncertainty relation.
    pub fn position_width(&self) -> f64 {
        self.epsilon / (2.0 * self.momentum_width())
    }
}
