//! Numerical quadrature of the double integrals behind the search-cost law.
//!
//! Every integral here has the form `∬_{(0,∞)^2} g(x, y) dx dy` with a weight
//! that decays like `e^{-ψ(x)}` in `x` and depends on `y` through
//! `ψ(x+y) - ψ(x)`. Both axes are moved onto the exponent scale before
//! integrating:
//!
//! ```text
//! e = ψ(x),   v = ψ(x+y) - ψ(x),   dx dy = de dv / (ψ'(x) ψ'(x+y))
//! ```
//!
//! The outer weight becomes `e^{-e}`, which is truncated at
//! [`QuadSpec::outer_cutoff`] whatever the family. The inner `v` axis is split
//! at a family-adapted scale and its tail mapped algebraically (see
//! [`integrate::integrate_to_infinity`]).

pub mod integrate;
pub mod mixture;

use crate::error::{Error, Result};
use crate::special_fn::stirling2_row;
use crate::subordinator::{Exponent, LaplaceExponent};
use integrate::{integrate_fallible, integrate_to_infinity, Tolerance};

pub use mixture::{laplace_finite_n_pitman_yor, laplace_limit_pitman_yor, psi_l_pitman_yor_numeric};

/// Largest list length accepted by [`laplace_finite_n`].
pub const MAX_FINITE_N: usize = 200;

/// Tolerances and truncation rule for the nested quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Upper limit of the outer `e = ψ(x)` axis; the discarded weight is
    /// at most `e^{-cutoff}` times a polynomial in `cutoff`.
    pub outer_cutoff: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            outer_cutoff: 40.0,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::domain("rel_tol and abs_tol must be > 0"));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::domain("max_subdivisions must be >= 10"));
        }
        if !(self.outer_cutoff > 0.0) {
            return Err(Error::domain("outer_cutoff must be > 0"));
        }
        Ok(())
    }

    fn outer(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }

    // The inner integral is an integrand of the outer one, so it runs tighter.
    fn inner(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol * 0.1,
            abs: self.abs_tol * 0.1,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Point of the transformed domain handed to an integrand.
#[derive(Debug, Clone, Copy)]
struct Node {
    /// `ψ(x)`
    e: f64,
    /// `ψ(x+y) - ψ(x)`
    v: f64,
    /// `ψ'(x)`
    slope_x: f64,
    /// `x + y`
    r: f64,
}

/// Power for the algebraic tail map given a `v^{-α}` decay; exponential tails
/// (gamma family, or `α <= 1` where only an exponential cutoff saves the
/// integral) use 1.
fn tail_power(exponent: &Exponent, shift: f64) -> f64 {
    match exponent.index() {
        Some(g) => {
            let alpha = 1.0 / g - shift;
            if alpha > 1.0 {
                (2.0 / (alpha - 1.0)).clamp(1.0, 16.0)
            } else {
                1.0
            }
        }
        None => 1.0,
    }
}

/// Width in `v` over which `ψ'` changes by a fixed factor around `x`.
fn inner_scale(exponent: &Exponent, x: f64, e: f64) -> f64 {
    let length = 1.0 / exponent.curvature_ratio(x);
    let scale = if length.is_finite() {
        exponent.value(x + length) - e
    } else {
        0.0
    };
    scale.max(1e-3 * e).max(f64::MIN_POSITIVE)
}

fn nested<F>(exponent: &Exponent, spec: &QuadSpec, power: f64, integrand: F) -> Result<f64>
where
    F: Fn(&Node) -> f64,
{
    spec.validate()?;
    let inner_tol = spec.inner();
    let outer = |e: f64| -> Result<f64> {
        let x = exponent.value_inverse(e);
        let slope_x = exponent.first(x);
        let scale = inner_scale(exponent, x, e);
        let est = integrate_to_infinity(
            |v| {
                let r = exponent.value_inverse(e + v);
                let value = integrand(&Node { e, v, slope_x, r });
                Ok(if value.is_nan() { 0.0 } else { value })
            },
            0.0,
            scale,
            power,
            &inner_tol,
        )?;
        Ok(est.value)
    };
    integrate_fallible(outer, 0.0, spec.outer_cutoff, &spec.outer()).map(|est| est.value)
}

fn check_index_bound(exponent: &Exponent, l: u32) -> Result<()> {
    if let Some(g) = exponent.index() {
        if g >= 1.0 / (l as f64 + 1.0) {
            return Err(Error::domain(format!(
                "Ψ({l}) diverges for index {g} >= 1/{}",
                l + 1
            )));
        }
    }
    Ok(())
}

/// Limiting Laplace transform `φ_S(s) = E[e^{-sS}]` as the Poisson mixture
/// `∬ f(x,y) e^{-(1-e^{-s})[ψ(x+y)-ψ(x)]}` with mixing density
/// `f(x,y) = -ψ''(x+y) e^{-ψ(x)}`.
pub fn laplace_limit(exponent: &Exponent, s: f64, spec: &QuadSpec) -> Result<f64> {
    if !(s >= 0.0) || s.is_infinite() {
        return Err(Error::domain(format!("Laplace argument must be finite and >= 0, got {s}")));
    }
    let rate = -(-s).exp_m1();
    nested(exponent, spec, tail_power(exponent, 0.0), |n| {
        exponent.curvature_ratio(n.r) * (-n.e - rate * n.v).exp() / n.slope_x
    })
}

/// Same transform, integrand arranged as
/// `-ψ''(x+y) e^{-ψ(x+y)} e^{-e^{-s}[ψ(x) - ψ(x+y)]}`.
pub fn laplace_limit_as_printed(exponent: &Exponent, s: f64, spec: &QuadSpec) -> Result<f64> {
    if !(s >= 0.0) || s.is_infinite() {
        return Err(Error::domain(format!("Laplace argument must be finite and >= 0, got {s}")));
    }
    let damp = (-s).exp();
    nested(exponent, spec, tail_power(exponent, 0.0), |n| {
        let psi_x = n.e;
        let psi_xy = n.e + n.v;
        let jac = 1.0 / (n.slope_x * exponent.first(n.r));
        -exponent.second(n.r) * (-psi_xy - damp * (psi_x - psi_xy)).exp() * jac
    })
}

/// `Ψ(l) = -∬ [ψ(x+y) - ψ(x)]^l ψ''(x+y) e^{-ψ(x)} dx dy`, the `l`-th factorial
/// moment of the limiting search cost.
pub fn psi_l_numeric(exponent: &Exponent, l: u32, spec: &QuadSpec) -> Result<f64> {
    if l == 0 {
        return Err(Error::domain("Ψ(l) needs l >= 1"));
    }
    check_index_bound(exponent, l)?;
    nested(exponent, spec, tail_power(exponent, l as f64), |n| {
        exponent.curvature_ratio(n.r) * n.v.powi(l as i32) * (-n.e).exp() / n.slope_x
    })
}

/// Total mass of the mixing density `-ψ''(x+y) e^{-ψ(x)}`; equals 1 for an
/// infinite-activity exponent.
pub fn mixing_density_mass(exponent: &Exponent, spec: &QuadSpec) -> Result<f64> {
    nested(exponent, spec, tail_power(exponent, 0.0), |n| {
        exponent.curvature_ratio(n.r) * (-n.e).exp() / n.slope_x
    })
}

/// `E[e^{-s S_n}]` for `n` items with equal-spacing increments:
/// `n ∬ φ_n''(x+y) h(x, y)^{n-1} dx dy`, `φ_n = e^{-ψ/n}`,
/// `h = φ_n(x+y) + e^{-s} (φ_n(x) - φ_n(x+y))`.
pub fn laplace_finite_n(exponent: &Exponent, n: usize, s: f64, spec: &QuadSpec) -> Result<f64> {
    if !(2..=MAX_FINITE_N).contains(&n) {
        return Err(Error::domain(format!("finite-n transform needs 2 <= n <= {MAX_FINITE_N}, got {n}")));
    }
    if !(s >= 0.0) || s.is_infinite() {
        return Err(Error::domain(format!("Laplace argument must be finite and >= 0, got {s}")));
    }
    let nf = n as f64;
    let rate = -(-s).exp_m1();
    nested(exponent, spec, tail_power(exponent, 0.0), |p| {
        // n φ_n''(r) / (ψ'(x) ψ'(r)) = [ψ'(r)/n - ψ''(r)/ψ'(r)] e^{-ψ(r)/n} / ψ'(x)
        let curvature = exponent.first(p.r) / nf + exponent.curvature_ratio(p.r);
        // log h = -e/n + log(1 - (1-e^{-s})(1-e^{-v/n}))
        let log_h = -p.e / nf + (-rate * -(-p.v / nf).exp_m1()).ln_1p();
        let log_weight = -(p.e + p.v) / nf + (nf - 1.0) * log_h;
        curvature * log_weight.exp() / p.slope_x
    })
}

/// `(n-1)(n-2)...(n-l) / n`
fn falling_ratio(n: usize, l: u32) -> f64 {
    let nf = n as f64;
    (1..=l).fold(1.0 / nf, |acc, j| acc * (nf - j as f64))
}

/// `M_{l,n}(0) = E[S_n (S_n - 1) ... (S_n - l + 1)]`:
///
/// ```text
/// l (n-1)...(n-l)/n ∫∫ e^{-(n-2)ψ(r)/n} ψ'(r+t)^2 e^{-2ψ(r+t)/n}
///                       [1 - e^{-(ψ(r+t)-ψ(r))/n}]^{l-1} dt dr
/// ```
pub fn finite_n_moment_kernel(exponent: &Exponent, n: usize, l: u32, spec: &QuadSpec) -> Result<f64> {
    if l == 0 || (l as usize) >= n {
        return Err(Error::domain(format!("moment kernel needs 1 <= l < n, got l = {l}, n = {n}")));
    }
    let nf = n as f64;
    let prefactor = l as f64 * falling_ratio(n, l);
    let integral = nested(exponent, spec, tail_power(exponent, l as f64), |p| {
        let gap = -(-p.v / nf).exp_m1();
        exponent.first(p.r) / p.slope_x
            * (-p.e - 2.0 * p.v / nf).exp()
            * gap.powi(l as i32 - 1)
    })?;
    Ok(prefactor * integral)
}

/// `E[S_n^k] = Σ_l S(k,l) M_{l,n}(0)`; kernels with `l >= n` vanish since
/// `S_n <= n - 1`.
pub fn finite_n_moment(exponent: &Exponent, n: usize, k: u32, spec: &QuadSpec) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("finite-n moments need n >= 2"));
    }
    let row = stirling2_row(k as usize)?;
    let mut total = 0.0;
    for (idx, &a) in row.iter().enumerate() {
        let l = idx as u32 + 1;
        if (l as usize) < n {
            total += a as f64 * finite_n_moment_kernel(exponent, n, l, spec)?;
        }
    }
    Ok(total)
}

/// `I_n(l) = ∫∫ e^{-(n-2)ψ(r)/n} ψ'(r+t)^2 e^{-2ψ(r+t)/n} [ψ(r+t)-ψ(r)]^{l-1} dt dr`,
/// whose boundedness in `n` guarantees that the finite-n moments converge.
pub fn integrability_diagnostic(exponent: &Exponent, n: usize, l: u32, spec: &QuadSpec) -> Result<f64> {
    if l == 0 || (l as usize) >= n {
        return Err(Error::domain(format!("I_n(l) needs 1 <= l < n, got l = {l}, n = {n}")));
    }
    let nf = n as f64;
    nested(exponent, spec, tail_power(exponent, l as f64), |p| {
        exponent.first(p.r) / p.slope_x * (-p.e - 2.0 * p.v / nf).exp() * p.v.powi(l as i32 - 1)
    })
}
