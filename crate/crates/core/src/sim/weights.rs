//! Subordinator increments over a time step `dt`.
//!
//! Everything is produced as a logarithm: gamma increments with shape
//! `mass/n` and stable increments with small index routinely fall below the
//! smallest positive double, while only their ratios matter downstream.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, Gamma, Open01};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::subordinator::{Exponent, GenGammaExponent};

use super::REJECTION_CAP;

/// Weights of one system, stored relative to their maximum.
///
/// `weights[i] * exp(ln_scale)` is the raw increment. Weights whose ratio to
/// the maximum is below the smallest positive double are held at
/// `f64::MIN_POSITIVE`; such items carry probability under `1e-300`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub total: f64,
    pub ln_scale: f64,
}

impl WeightVector {
    /// From raw positive weights.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("weight vector is empty"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::domain(format!("weights must be finite and > 0, got {w}")));
        }
        let total = weights.iter().sum();
        Ok(Self {
            weights,
            total,
            ln_scale: 0.0,
        })
    }

    /// From logarithms of the raw weights.
    pub fn from_ln(ln_weights: &[f64]) -> Result<Self> {
        if ln_weights.is_empty() {
            return Err(Error::domain("weight vector is empty"));
        }
        if ln_weights.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::numeric("increment sampler produced a non-finite log weight", None));
        }
        let top = ln_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(Error::numeric("all increments are zero", None));
        }
        let weights: Vec<f64> = ln_weights
            .iter()
            .map(|v| (v - top).exp().max(f64::MIN_POSITIVE))
            .collect();
        let total = weights.iter().sum();
        Ok(Self {
            weights,
            total,
            ln_scale: top,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.total).collect()
    }

    /// Raw increment `i`; may under- or overflow.
    pub fn raw(&self, i: usize) -> f64 {
        self.weights[i] * self.ln_scale.exp()
    }
}

/// `log X` for `X ~ Gamma(shape, 1)`, valid for any shape > 0.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).map_err(|e| Error::domain(e.to_string()))?;
        return Ok(rng.sample(g).ln());
    }
    // X = Y U^{1/a} with Y ~ Gamma(1 + a)
    let g = Gamma::new(1.0 + shape, 1.0).map_err(|e| Error::domain(e.to_string()))?;
    let y: f64 = rng.sample(g);
    let u: f64 = rng.sample(Open01);
    Ok(y.ln() + u.ln() / shape)
}

/// `log X` where `E[e^{-sX}] = e^{-scale s^γ}` (Kanter's representation).
pub fn ln_stable_variate<R: Rng + ?Sized>(gamma: f64, scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let e: f64 = rng.sample(Exp1);
    let q = 1.0 - u;
    // sines written to stay accurate as u -> 1
    let ln_a = gamma / (1.0 - gamma) * (gamma * PI * u).sin().ln()
        + (PI * (q + gamma * u)).sin().ln()
        - (PI * q.min(u)).sin().ln() / (1.0 - gamma);
    (1.0 - gamma) / gamma * (ln_a - e.ln()) + scale.ln() / gamma
}

fn ln_tempered_variate<R: Rng + ?Sized>(ex: &GenGammaExponent, dt: f64, rng: &mut R) -> Result<f64> {
    let g = ex.gamma();
    let scale = dt * ex.mass() / g;
    if ex.u() == 0.0 {
        return Ok(ln_stable_variate(g, scale, rng));
    }
    for _ in 0..REJECTION_CAP {
        let lx = ln_stable_variate(g, scale, rng);
        let accept: f64 = rng.random();
        if accept < (-ex.u() * lx.exp()).exp() {
            return Ok(lx);
        }
    }
    Err(Error::numeric(
        format!("tempered stable rejection exceeded {REJECTION_CAP} proposals"),
        None,
    ))
}

/// `log` of one increment `ξ_{t+dt} - ξ_t` of the subordinator with
/// exponent `exponent`.
pub fn sample_increment_ln<R: Rng + ?Sized>(exponent: &Exponent, dt: f64, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("time step must be finite and > 0, got {dt}")));
    }
    match exponent {
        Exponent::Gamma(ex) => ln_gamma_variate(dt * ex.mass(), rng),
        Exponent::Stable(ex) => Ok(ln_stable_variate(ex.gamma(), dt * ex.mass(), rng)),
        Exponent::GenGamma(ex) => ln_tempered_variate(ex, dt, rng),
    }
}

/// `n` increments over consecutive intervals of length `1/n`.
pub fn sample_weights<R: Rng + ?Sized>(exponent: &Exponent, n: usize, rng: &mut R) -> Result<WeightVector> {
    if n < 2 {
        return Err(Error::domain(format!("need n >= 2 items, got {n}")));
    }
    let dt = 1.0 / n as f64;
    let ln_w = (0..n)
        .map(|_| sample_increment_ln(exponent, dt, rng))
        .collect::<Result<Vec<f64>>>()?;
    WeightVector::from_ln(&ln_w)
}

/// Pitman–Yor weights: `Z ~ Gamma(θ/γ, 1)` once per vector, then increments
/// of the generalized gamma process (`u = 1`) run on `[0, Z]`.
pub fn sample_weights_pitman_yor<R: Rng + ?Sized>(
    gamma: f64,
    theta: f64,
    n: usize,
    rng: &mut R,
) -> Result<WeightVector> {
    let z = sample_pitman_yor_time(gamma, theta, rng)?;
    let ex = crate::quad::mixture::pitman_yor_conditional(gamma, z)?;
    sample_weights(&ex, n, rng)
}

/// `Z ~ Gamma(θ/γ, 1)`, floored at the smallest positive double.
pub fn sample_pitman_yor_time<R: Rng + ?Sized>(gamma: f64, theta: f64, rng: &mut R) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(ln_gamma_variate(theta / gamma, rng)?.exp().max(f64::MIN_POSITIVE))
}
