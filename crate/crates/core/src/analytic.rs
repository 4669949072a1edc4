//! Closed-form limiting moments of the stationary search cost.
//!
//! The limiting law is a Poisson mixture, so `lim E[S_n^k] = Σ_l S(k,l) Ψ(l)`
//! where `S(k,l)` are Stirling numbers of the second kind and `Ψ(l)` is the
//! `l`-th factorial moment. For the families shipped here `Ψ(l)` is explicit:
//!
//! * generalized gamma: `(l!)^2 / (1/γ - l - 1)_l · Σ_{m<=l} u^{mγ} / (m! γ^m)`
//! * Pitman–Yor: `l! (θ/γ + 1)_l / (1/γ - l - 1)_l`
//! * Dirichlet(θ): `l! θ^l`
//!
//! For `γ`-indexed models the `k`-th moment is finite only when `γ < 1/(k+1)`;
//! divergence is reported through [`MomentValue::finite`], never as an error.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::special_fn::{factorial, ln_pochhammer, pochhammer, stirling2_row};

/// Rising factorials with a first argument above this go through logs.
const LOG_POCHHAMMER_ABOVE: f64 = 1e3;

fn rising(a: f64, l: u32) -> f64 {
    if a > LOG_POCHHAMMER_ABOVE {
        ln_pochhammer(a, l).map(f64::exp).unwrap_or(f64::NAN)
    } else {
        pochhammer(a, l)
    }
}

/// Index threshold below which the `k`-th moment exists.
pub fn finiteness_bound(k: u32) -> f64 {
    1.0 / (k as f64 + 1.0)
}

fn check_orders(l: u32, k: u32) -> Result<()> {
    if l == 0 || l > k {
        return Err(Error::domain(format!("need 1 <= l <= k, got l = {l}, k = {k}")));
    }
    Ok(())
}

/// `Ψ(l)` for the generalized gamma model, `+inf` unless `γ < 1/(k+1)`.
pub fn psi_l_gengamma(gamma: f64, u: f64, l: u32, k: u32) -> Result<f64> {
    check_orders(l, k)?;
    Model::GenGamma { gamma, u }.validate()?;
    if gamma >= finiteness_bound(k) {
        return Ok(f64::INFINITY);
    }
    let ratio = u.powf(gamma) / gamma;
    let mut term = 1.0;
    let mut series = 1.0;
    for m in 1..=l {
        term *= ratio / m as f64;
        series += term;
    }
    let lf = factorial(l);
    Ok(lf * lf / pochhammer(1.0 / gamma - l as f64 - 1.0, l) * series)
}

/// `Ψ(l)` for the two-parameter Poisson–Dirichlet model.
pub fn psi_l_pitman_yor(gamma: f64, theta: f64, l: u32, k: u32) -> Result<f64> {
    check_orders(l, k)?;
    Model::PitmanYor { gamma, theta }.validate()?;
    if gamma >= finiteness_bound(k) {
        return Ok(f64::INFINITY);
    }
    Ok(factorial(l) * rising(theta / gamma + 1.0, l) / pochhammer(1.0 / gamma - l as f64 - 1.0, l))
}

/// `Ψ(l)` for the Dirichlet(θ) model.
pub fn psi_l_dirichlet(theta: f64, l: u32) -> Result<f64> {
    if l == 0 {
        return Err(Error::domain("Ψ(l) needs l >= 1"));
    }
    Model::Dirichlet { theta }.validate()?;
    Ok(factorial(l) * theta.powi(l as i32))
}

/// Limiting `E[S^k]` for the Dirichlet(θ) model; always finite.
pub fn moment_dirichlet(theta: f64, k: u32) -> Result<f64> {
    let row = stirling2_row(k as usize)?;
    row.iter().enumerate().try_fold(0.0, |acc, (idx, &a)| {
        Ok(acc + a as f64 * psi_l_dirichlet(theta, idx as u32 + 1)?)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRequest {
    pub model: Model,
    pub k: u32,
}

fn non_finite_as_null<S: Serializer>(values: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    let mapped: Vec<Option<f64>> = values.iter().map(|v| v.is_finite().then_some(*v)).collect();
    mapped.serialize(ser)
}

/// Result of [`limit_moment`]. Infinite `Ψ(l)` serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentValue {
    pub finite: bool,
    pub value: Option<f64>,
    #[serde(serialize_with = "non_finite_as_null")]
    pub psi_terms: Vec<f64>,
    /// `1/(k+1)`, the bound applied to every term (`None` for Dirichlet).
    pub index_bound: Option<f64>,
    /// Whether each `Ψ(l)` alone would be finite, i.e. `γ < 1/(l+1)`.
    pub term_integrable: Vec<bool>,
}

/// `lim E[S_n^k] = Σ_{l=1}^k S(k,l) Ψ(l)`.
pub fn limit_moment(request: &MomentRequest) -> Result<MomentValue> {
    let k = request.k;
    if k == 0 {
        return Err(Error::domain("moment order must be >= 1"));
    }
    request.model.validate()?;
    let row = stirling2_row(k as usize)?;
    let psi_terms = (1..=k)
        .map(|l| match request.model {
            Model::Dirichlet { theta } => psi_l_dirichlet(theta, l),
            Model::Stable { gamma } => psi_l_gengamma(gamma, 0.0, l, k),
            Model::GenGamma { gamma, u } => psi_l_gengamma(gamma, u, l, k),
            Model::PitmanYor { gamma, theta } => psi_l_pitman_yor(gamma, theta, l, k),
        })
        .collect::<Result<Vec<f64>>>()?;
    let finite = psi_terms.iter().all(|v| v.is_finite());
    let value = finite.then(|| {
        row.iter()
            .zip(&psi_terms)
            .map(|(&a, &psi)| a as f64 * psi)
            .sum()
    });
    let index = request.model.index();
    Ok(MomentValue {
        finite,
        value,
        psi_terms,
        index_bound: index.map(|_| finiteness_bound(k)),
        term_integrable: (1..=k)
            .map(|l| index.is_none_or(|g| g < finiteness_bound(l)))
            .collect(),
    })
}
