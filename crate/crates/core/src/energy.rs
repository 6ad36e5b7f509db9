//! The grain boundary energy `E[u, α] = σ(α) ∫ sqrt(1 + u_x²) dx` and its
//! first and second variations on `X = H^1_{per.ave} x R`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{self, antiderivative, integrate, integrate_squares, GridFunction, XVector};
use crate::sigma::SigmaModel;

/// Tolerance for membership in the critical manifold.
pub const CRITICAL_MANIFOLD_TOLERANCE: f64 = 1e-10;

/// Arc length `∫ sqrt(1 + u_x²) dx` of one period of the graph.
pub fn length(u: &GridFunction) -> f64 {
    length_from_slope(&u.derivative())
}

pub(crate) fn length_from_slope(ux: &[f64]) -> f64 {
    integrate(&ux.iter().map(|s| (1.0 + s * s).sqrt()).collect::<Vec<_>>())
}

/// `L - 1` computed as `∫ u_x² / (1 + sqrt(1 + u_x²))`, free of cancellation.
pub fn length_excess(u: &GridFunction) -> f64 {
    length_excess_from_slope(&u.derivative())
}

pub(crate) fn length_excess_from_slope(ux: &[f64]) -> f64 {
    integrate(
        &ux.iter()
            .map(|s| {
                let s2 = s * s;
                s2 / (1.0 + (1.0 + s2).sqrt())
            })
            .collect::<Vec<_>>(),
    )
}

pub fn energy(u: &GridFunction, alpha: f64, model: &SigmaModel) -> f64 {
    model.value(alpha) * length(u)
}

/// `E[u, α] - E[0, ᾱ]`, evaluated as `(σ(α) - σ(ᾱ)) L + σ(ᾱ) (L - 1)` so that
/// tiny gaps near the equilibrium keep their relative precision.
pub fn energy_gap(u: &GridFunction, alpha: f64, alpha_bar: f64, model: &SigmaModel) -> f64 {
    let ux = u.derivative();
    energy_gap_from_slope(&ux, alpha, alpha_bar, model)
}

pub(crate) fn energy_gap_from_slope(
    ux: &[f64],
    alpha: f64,
    alpha_bar: f64,
    model: &SigmaModel,
) -> f64 {
    let excess = length_excess_from_slope(ux);
    model.difference(alpha, alpha_bar) * (1.0 + excess) + model.value(alpha_bar) * excess
}

/// `Ė(u, α)` as an element of `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyGradient {
    pub u_part: GridFunction,
    pub alpha_part: f64,
}

impl EnergyGradient {
    pub fn to_xvector(&self) -> XVector {
        XVector::new(self.u_part.clone(), self.alpha_part)
    }

    pub fn x_norm(&self) -> f64 {
        (integrate_squares(&self.u_part.derivative()) + self.alpha_part * self.alpha_part).sqrt()
    }

    pub fn y_norm(&self) -> f64 {
        (integrate_squares(&self.u_part.derivative())
            + integrate_squares(&self.u_part.second_derivative())
            + self.alpha_part * self.alpha_part)
            .sqrt()
    }

    /// `(Ė, (h, β))_X`, the directional derivative of `E` along `(h, β)`.
    pub fn pair(&self, direction: &XVector) -> Result<f64> {
        grid::x_inner(&self.to_xvector(), direction)
    }

    /// `self - other` in `X`.
    pub fn sub(&self, other: &EnergyGradient) -> Result<EnergyGradient> {
        Ok(EnergyGradient {
            u_part: self.u_part.add_scaled(-1.0, &other.u_part)?,
            alpha_part: self.alpha_part - other.alpha_part,
        })
    }
}

/// Fréchet derivative of `E` on `X`:
///
/// `Ė = ( σ(α) [∫_0^x w dy - ∫_0^1 ∫_0^x w dy dx], σ'(α) ∫ sqrt(1 + u_x²) dx )`
/// with `w = u_x / sqrt(1 + u_x²)`.
///
/// The `x`-antiderivative is taken in Fourier space. The mean of `w` is
/// dropped there; it pairs to zero against every `h_x` with `h` periodic, so
/// the result is the `X`-Riesz representative of `dE`.
pub fn frechet_derivative(u: &GridFunction, alpha: f64, model: &SigmaModel) -> EnergyGradient {
    let ux = u.derivative();
    let mut w = Vec::with_capacity(ux.len());
    let mut area = Vec::with_capacity(ux.len());
    for &s in &ux {
        let v = (1.0 + s * s).sqrt();
        w.push(s / v);
        area.push(v);
    }
    let sigma = model.value(alpha);
    let u_part: Vec<f64> = antiderivative(&w).into_iter().map(|p| sigma * p).collect();
    EnergyGradient {
        u_part: GridFunction::from_zero_mean(u_part),
        alpha_part: model.d1(alpha) * integrate(&area),
    }
}

/// Gâteaux derivative `DĖ((u, α), (h, β))` of the gradient map.
///
/// First component: zero-mean antiderivative of
/// `σ'(α) β u_x / v + σ(α) h_x / v³`; second component:
/// `∫ σ''(α) β v + σ'(α) u_x h_x / v dx`, where `v = sqrt(1 + u_x²)`.
pub fn gateaux_second_derivative(
    u: &GridFunction,
    alpha: f64,
    h: &GridFunction,
    beta: f64,
    model: &SigmaModel,
) -> Result<EnergyGradient> {
    u.check_same_grid(h)?;
    let ux = u.derivative();
    let hx = h.derivative();
    let s0 = model.value(alpha);
    let s1 = model.d1(alpha);
    let s2 = model.d2(alpha);
    let n = ux.len();
    let mut integrand = Vec::with_capacity(n);
    let mut scalar = Vec::with_capacity(n);
    for (&a, &b) in ux.iter().zip(&hx) {
        let v = (1.0 + a * a).sqrt();
        integrand.push(s1 * beta * a / v + s0 * b / (v * v * v));
        scalar.push(s2 * beta * v + s1 * a * b / v);
    }
    Ok(EnergyGradient {
        u_part: GridFunction::from_zero_mean(antiderivative(&integrand)),
        alpha_part: integrate(&scalar),
    })
}

/// Membership in `S = {0} x {α : σ'(α) = 0}`.
pub fn critical_manifold_check(u: &GridFunction, alpha: f64, model: &SigmaModel) -> bool {
    u.h2_norm() <= CRITICAL_MANIFOLD_TOLERANCE
        && (model.is_constant() || model.d1(alpha).abs() <= CRITICAL_MANIFOLD_TOLERANCE)
}
