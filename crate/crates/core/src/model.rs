//! The four request-probability models the crate knows about.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subordinator::{Exponent, GammaExponent, GenGammaExponent, StableExponent, GAMMA_MAX, GAMMA_MIN};

/// Request probabilities as normalized increments of ...
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Model {
    /// ... a gamma subordinator with total mass `θ` (Dirichlet process).
    #[serde(rename = "gamma")]
    Dirichlet { theta: f64 },
    /// ... a `γ`-stable subordinator.
    #[serde(rename = "stable")]
    Stable { gamma: f64 },
    /// ... a generalized gamma subordinator with tilt `u`.
    #[serde(rename = "gg")]
    GenGamma { gamma: f64, u: f64 },
    /// ... a generalized gamma subordinator (`u = 1`) run for a random
    /// `Gamma(θ/γ, 1)` time (two-parameter Poisson–Dirichlet).
    #[serde(rename = "py")]
    PitmanYor { gamma: f64, theta: f64 },
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (GAMMA_MIN..=GAMMA_MAX).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "gamma must lie in [{GAMMA_MIN}, {GAMMA_MAX}], got {gamma}"
        )))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("theta must be finite and > 0, got {theta}")))
    }
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Model::Dirichlet { theta } => check_theta(theta),
            Model::Stable { gamma } => check_gamma(gamma),
            Model::GenGamma { gamma, u } => {
                check_gamma(gamma)?;
                if u >= 0.0 && u.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("u must be finite and >= 0, got {u}")))
                }
            }
            Model::PitmanYor { gamma, theta } => {
                check_gamma(gamma)?;
                check_theta(theta)
            }
        }
    }

    /// Stability index, `None` for the Dirichlet model.
    pub fn index(&self) -> Option<f64> {
        match *self {
            Model::Dirichlet { .. } => None,
            Model::Stable { gamma } | Model::GenGamma { gamma, .. } | Model::PitmanYor { gamma, .. } => {
                Some(gamma)
            }
        }
    }

    /// Laplace exponent driving the weights. `None` for Pitman–Yor, whose
    /// weights are a mixture over the random time `Z`.
    pub fn exponent(&self) -> Result<Option<Exponent>> {
        self.validate()?;
        Ok(match *self {
            Model::Dirichlet { theta } => Some(GammaExponent::new(theta)?.into()),
            Model::Stable { gamma } => Some(StableExponent::new(gamma)?.into()),
            Model::GenGamma { gamma, u } => Some(GenGammaExponent::new(gamma, u)?.into()),
            Model::PitmanYor { .. } => None,
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Model::Dirichlet { .. } => "gamma",
            Model::Stable { .. } => "stable",
            Model::GenGamma { .. } => "gg",
            Model::PitmanYor { .. } => "py",
        }
    }
}
