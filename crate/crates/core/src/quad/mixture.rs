//! Pitman–Yor quantities as `Z`-mixtures of generalized gamma ones.
//!
//! Given `Z = z`, the weights are increments of a generalized gamma process
//! with `u = 1` run on `[0, z]`, i.e. exponent `z ((1+s)^γ - 1)`, which is
//! [`GenGammaExponent`] with `mass = z γ`. `Z ~ Gamma(θ/γ, 1)`.

use crate::error::{Error, Result};
use crate::special_fn::ln_gamma;
use crate::subordinator::{Exponent, GenGammaExponent};

use super::integrate::{integrate_to_infinity, Tolerance};
use super::{laplace_finite_n, laplace_limit, psi_l_numeric, QuadSpec};

/// Generalized gamma exponent conditional on the random time `z`.
pub fn pitman_yor_conditional(gamma: f64, z: f64) -> Result<Exponent> {
    Ok(GenGammaExponent::with_mass(gamma, 1.0, z * gamma)?.into())
}

fn check(gamma: f64, theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    // validates the index range
    GenGammaExponent::new(gamma, 1.0)?;
    Ok(())
}

/// `E[G(Z)]` for `Z ~ Gamma(θ/γ, 1)`.
fn mix_over_z<G>(gamma: f64, theta: f64, spec: &QuadSpec, conditional: G) -> Result<f64>
where
    G: Fn(&Exponent) -> Result<f64>,
{
    check(gamma, theta)?;
    spec.validate()?;
    let shape = theta / gamma;
    let tol = Tolerance {
        rel: spec.rel_tol * 10.0,
        abs: spec.abs_tol,
        max_subdivisions: spec.max_subdivisions,
    };
    let est = if shape < 1.0 {
        // z = w^{1/a} absorbs the z^{a-1} singularity: dens(z) dz = e^{-z} dw / Γ(a+1)
        let norm = (-ln_gamma(shape + 1.0)).exp();
        integrate_to_infinity(
            |w| {
                let z = w.powf(1.0 / shape);
                if z <= 0.0 {
                    return Ok(0.0);
                }
                let weight = (-z).exp();
                if weight == 0.0 {
                    return Ok(0.0);
                }
                Ok(norm * weight * conditional(&pitman_yor_conditional(gamma, z)?)?)
            },
            0.0,
            1.0,
            1.0,
            &tol,
        )?
    } else {
        let ln_norm = ln_gamma(shape);
        integrate_to_infinity(
            |z| {
                if z <= 0.0 {
                    return Ok(0.0);
                }
                let weight = ((shape - 1.0) * z.ln() - z - ln_norm).exp();
                if weight == 0.0 {
                    return Ok(0.0);
                }
                Ok(weight * conditional(&pitman_yor_conditional(gamma, z)?)?)
            },
            0.0,
            shape,
            1.0,
            &tol,
        )?
    };
    Ok(est.value)
}

/// Pitman–Yor `Ψ(l)` by quadrature of the conditional generalized gamma
/// integral followed by quadrature over `Z`.
pub fn psi_l_pitman_yor_numeric(gamma: f64, theta: f64, l: u32, spec: &QuadSpec) -> Result<f64> {
    mix_over_z(gamma, theta, spec, |e| psi_l_numeric(e, l, spec))
}

pub fn laplace_limit_pitman_yor(gamma: f64, theta: f64, s: f64, spec: &QuadSpec) -> Result<f64> {
    mix_over_z(gamma, theta, spec, |e| laplace_limit(e, s, spec))
}

pub fn laplace_finite_n_pitman_yor(
    gamma: f64,
    theta: f64,
    n: usize,
    s: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    mix_over_z(gamma, theta, spec, |e| laplace_finite_n(e, n, s, spec))
}
