//! Laplace exponents of the generalized gamma family and its two limits.
//!
//! A subordinator `ξ` is identified by `E[e^{-s ξ_t}] = e^{-t ψ(s)}`. Each
//! family below carries a `mass` multiplier `c`, so the exponent actually
//! represented is `c ψ(s)`; this is the same as running the unit-mass process
//! on a time axis stretched by `c`.
//!
//! | family      | `ψ(s)`                          |
//! |-------------|---------------------------------|
//! | generalized gamma | `c ((u+s)^γ - u^γ) / γ`   |
//! | gamma       | `c log(1+s)`                    |
//! | stable      | `c s^γ`                         |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Admissible range for the stability index.
pub const GAMMA_MIN: f64 = 1e-4;
pub const GAMMA_MAX: f64 = 1.0 - 1e-4;

/// A Laplace exponent with closed-form derivatives and inverses.
///
/// The unchecked methods (`value`, `first`, ...) assume their argument lies
/// in the valid range and are what the numerical routines call in inner
/// loops. The `psi*` methods validate first.
pub trait LaplaceExponent: Send + Sync {
    /// `ψ(s)`, `s >= 0`.
    fn value(&self, s: f64) -> f64;
    /// `ψ'(s)`, `s > 0`; may be `+inf` at `0`.
    fn first(&self, s: f64) -> f64;
    /// `ψ''(s)`, `s > 0`; may be `-inf` at `0`.
    fn second(&self, s: f64) -> f64;
    /// `ψ^{-1}(e)`, `e >= 0`.
    fn value_inverse(&self, e: f64) -> f64;
    /// `(ψ')^{-1}(v)` for `0 < v <= ψ'(0+)`.
    fn first_inverse(&self, v: f64) -> f64;
    /// `ψ'(0+)`, `+inf` for the stable-like families.
    fn first_at_zero(&self) -> f64;

    /// `-ψ''(s) / ψ'(s)`, the log-derivative of `ψ'` with the sign flipped.
    fn curvature_ratio(&self, s: f64) -> f64 {
        -self.second(s) / self.first(s)
    }

    fn psi(&self, s: f64) -> Result<f64> {
        check_arg(s, "psi")?;
        Ok(self.value(s))
    }

    fn psi_prime(&self, s: f64) -> Result<f64> {
        check_arg(s, "psi_prime")?;
        let d = self.first(s);
        if !d.is_finite() {
            return Err(Error::domain(format!("psi_prime is singular at s = {s}")));
        }
        Ok(d)
    }

    fn psi_second(&self, s: f64) -> Result<f64> {
        check_arg(s, "psi_second")?;
        let d = self.second(s);
        if !d.is_finite() {
            return Err(Error::domain(format!("psi_second is singular at s = {s}")));
        }
        Ok(d)
    }

    fn psi_inverse(&self, e: f64) -> Result<f64> {
        check_arg(e, "psi_inverse")?;
        Ok(self.value_inverse(e))
    }

    fn psi_prime_inverse(&self, v: f64) -> Result<f64> {
        let top = self.first_at_zero();
        if !(v > 0.0) || v > top || !v.is_finite() {
            return Err(Error::domain(format!(
                "psi_prime_inverse needs 0 < v <= {top}, got {v}"
            )));
        }
        Ok(self.first_inverse(v))
    }
}

fn check_arg(s: f64, what: &str) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} needs a finite argument >= 0, got {s}")))
    }
}

fn check_index(gamma: f64) -> Result<()> {
    if (GAMMA_MIN..=GAMMA_MAX).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "stability index must lie in [{GAMMA_MIN}, {GAMMA_MAX}], got {gamma}"
        )))
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass > 0.0 && mass.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("mass must be finite and > 0, got {mass}")))
    }
}

fn default_mass() -> f64 {
    1.0
}

/// Generalized gamma exponent `c ((u+s)^γ - u^γ) / γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GenGammaParams")]
pub struct GenGammaExponent {
    gamma: f64,
    u: f64,
    mass: f64,
}

#[derive(Deserialize)]
struct GenGammaParams {
    gamma: f64,
    #[serde(default)]
    u: f64,
    #[serde(default = "default_mass")]
    mass: f64,
}

impl TryFrom<GenGammaParams> for GenGammaExponent {
    type Error = Error;
    fn try_from(p: GenGammaParams) -> Result<Self> {
        Self::with_mass(p.gamma, p.u, p.mass)
    }
}

impl GenGammaExponent {
    pub fn new(gamma: f64, u: f64) -> Result<Self> {
        Self::with_mass(gamma, u, 1.0)
    }

    pub fn with_mass(gamma: f64, u: f64, mass: f64) -> Result<Self> {
        check_index(gamma)?;
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::domain(format!("tilt u must be finite and >= 0, got {u}")));
        }
        check_mass(mass)?;
        Ok(Self { gamma, u, mass })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl LaplaceExponent for GenGammaExponent {
    fn value(&self, s: f64) -> f64 {
        let g = self.gamma;
        if self.u == 0.0 {
            self.mass * s.powf(g) / g
        } else {
            // u^γ (e^{γ log(1+s/u)} - 1) / γ keeps relative accuracy for small γ log(1+s/u)
            self.mass * self.u.powf(g) * (g * (s / self.u).ln_1p()).exp_m1() / g
        }
    }

    fn first(&self, s: f64) -> f64 {
        self.mass * (self.u + s).powf(self.gamma - 1.0)
    }

    fn second(&self, s: f64) -> f64 {
        self.mass * (self.gamma - 1.0) * (self.u + s).powf(self.gamma - 2.0)
    }

    fn value_inverse(&self, e: f64) -> f64 {
        let g = self.gamma;
        if self.u == 0.0 {
            (g * e / self.mass).powf(1.0 / g)
        } else {
            let a = g * e / (self.mass * self.u.powf(g));
            self.u * (a.ln_1p() / g).exp_m1()
        }
    }

    fn first_inverse(&self, v: f64) -> f64 {
        let g = self.gamma;
        if self.u == 0.0 {
            (v / self.mass).powf(1.0 / (g - 1.0))
        } else {
            let ratio = v / self.first_at_zero();
            (self.u * (ratio.ln() / (g - 1.0)).exp_m1()).max(0.0)
        }
    }

    fn first_at_zero(&self) -> f64 {
        if self.u == 0.0 {
            f64::INFINITY
        } else {
            self.mass * self.u.powf(self.gamma - 1.0)
        }
    }

    fn curvature_ratio(&self, s: f64) -> f64 {
        (1.0 - self.gamma) / (self.u + s)
    }
}

/// Gamma subordinator exponent `c log(1+s)`; `c = θ` gives the Dirichlet(θ)
/// normalized process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaParams")]
pub struct GammaExponent {
    mass: f64,
}

#[derive(Deserialize)]
struct GammaParams {
    #[serde(default = "default_mass")]
    mass: f64,
}

impl TryFrom<GammaParams> for GammaExponent {
    type Error = Error;
    fn try_from(p: GammaParams) -> Result<Self> {
        Self::new(p.mass)
    }
}

impl GammaExponent {
    pub fn new(mass: f64) -> Result<Self> {
        check_mass(mass)?;
        Ok(Self { mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl LaplaceExponent for GammaExponent {
    fn value(&self, s: f64) -> f64 {
        self.mass * s.ln_1p()
    }

    fn first(&self, s: f64) -> f64 {
        self.mass / (1.0 + s)
    }

    fn second(&self, s: f64) -> f64 {
        -self.mass / ((1.0 + s) * (1.0 + s))
    }

    fn value_inverse(&self, e: f64) -> f64 {
        (e / self.mass).exp_m1()
    }

    fn first_inverse(&self, v: f64) -> f64 {
        (self.mass / v - 1.0).max(0.0)
    }

    fn first_at_zero(&self) -> f64 {
        self.mass
    }

    fn curvature_ratio(&self, s: f64) -> f64 {
        1.0 / (1.0 + s)
    }
}

/// Positive stable exponent `c s^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StableParams")]
pub struct StableExponent {
    gamma: f64,
    mass: f64,
}

#[derive(Deserialize)]
struct StableParams {
    gamma: f64,
    #[serde(default = "default_mass")]
    mass: f64,
}

impl TryFrom<StableParams> for StableExponent {
    type Error = Error;
    fn try_from(p: StableParams) -> Result<Self> {
        Self::with_mass(p.gamma, p.mass)
    }
}

impl StableExponent {
    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_mass(gamma, 1.0)
    }

    pub fn with_mass(gamma: f64, mass: f64) -> Result<Self> {
        check_index(gamma)?;
        check_mass(mass)?;
        Ok(Self { gamma, mass })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl LaplaceExponent for StableExponent {
    fn value(&self, s: f64) -> f64 {
        self.mass * s.powf(self.gamma)
    }

    fn first(&self, s: f64) -> f64 {
        self.mass * self.gamma * s.powf(self.gamma - 1.0)
    }

    fn second(&self, s: f64) -> f64 {
        self.mass * self.gamma * (self.gamma - 1.0) * s.powf(self.gamma - 2.0)
    }

    fn value_inverse(&self, e: f64) -> f64 {
        (e / self.mass).powf(1.0 / self.gamma)
    }

    fn first_inverse(&self, v: f64) -> f64 {
        (v / (self.mass * self.gamma)).powf(1.0 / (self.gamma - 1.0))
    }

    fn first_at_zero(&self) -> f64 {
        f64::INFINITY
    }

    fn curvature_ratio(&self, s: f64) -> f64 {
        (1.0 - self.gamma) / s
    }
}

/// Any of the shipped exponents. Serializes as
/// `{"family": "gen_gamma" | "gamma" | "stable", "gamma": .., "u": .., "mass": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Exponent {
    GenGamma(GenGammaExponent),
    Gamma(GammaExponent),
    Stable(StableExponent),
}

impl Exponent {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::domain(format!("bad exponent JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("exponent serializes")
    }

    /// Stability index, `None` for the gamma family.
    pub fn index(&self) -> Option<f64> {
        match self {
            Exponent::GenGamma(e) => Some(e.gamma()),
            Exponent::Stable(e) => Some(e.gamma()),
            Exponent::Gamma(_) => None,
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Exponent::GenGamma(e) => e.mass(),
            Exponent::Gamma(e) => e.mass(),
            Exponent::Stable(e) => e.mass(),
        }
    }

    fn inner(&self) -> &dyn LaplaceExponent {
        match self {
            Exponent::GenGamma(e) => e,
            Exponent::Gamma(e) => e,
            Exponent::Stable(e) => e,
        }
    }
}

impl From<GenGammaExponent> for Exponent {
    fn from(e: GenGammaExponent) -> Self {
        Exponent::GenGamma(e)
    }
}

impl From<GammaExponent> for Exponent {
    fn from(e: GammaExponent) -> Self {
        Exponent::Gamma(e)
    }
}

impl From<StableExponent> for Exponent {
    fn from(e: StableExponent) -> Self {
        Exponent::Stable(e)
    }
}

impl LaplaceExponent for Exponent {
    fn value(&self, s: f64) -> f64 {
        self.inner().value(s)
    }
    fn first(&self, s: f64) -> f64 {
        self.inner().first(s)
    }
    fn second(&self, s: f64) -> f64 {
        self.inner().second(s)
    }
    fn value_inverse(&self, e: f64) -> f64 {
        self.inner().value_inverse(e)
    }
    fn first_inverse(&self, v: f64) -> f64 {
        self.inner().first_inverse(v)
    }
    fn first_at_zero(&self) -> f64 {
        self.inner().first_at_zero()
    }
    fn curvature_ratio(&self, s: f64) -> f64 {
        self.inner().curvature_ratio(s)
    }
}
