//! The ground state W(ρ) = (1 + ρ²/3)^{-1/2} of ΔW + W⁵ = 0, its scaling
//! generator W₁ = (1/2 + ρ∂_ρ)W, and the explicit zero-energy solutions of
//! the linearized operators
//!
//! L₊ = -Δ - 5W⁴ (kernel: Φ₊ = W₁ and the singular Θ₊),
//! L₋ = -Δ - W⁴  (kernel: Φ₋ = W  and the singular Θ₋).
//!
//! Both pairs are normalized so the radial Wronskian ρ²(Θ'Φ - ΘΦ') ≡ 1,
//! which is what the variation-of-parameters kernels assume.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{differentiate, ComplexField, Parity, FOUR_PI};
use crate::grid::RadialGrid;

/// Which closed-form profile to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroundKind {
    W,
    W1,
    PhiPlus,
    PhiMinus,
    ThetaPlus,
    ThetaMinus,
}

#[inline]
fn q(rho: f64) -> f64 {
    1.0 + rho * rho / 3.0
}

/// W(ρ) = (1 + ρ²/3)^{-1/2}.
pub fn w(rho: f64) -> f64 {
    q(rho).powf(-0.5)
}

/// W'(ρ) = -(ρ/3)(1 + ρ²/3)^{-3/2}.
pub fn w_prime(rho: f64) -> f64 {
    -(rho / 3.0) * q(rho).powf(-1.5)
}

/// W₁ = (1/2 + ρ∂_ρ)W = (1 + ρ²/3)^{-3/2}(1/2 - ρ²/6).
pub fn w1(rho: f64) -> f64 {
    q(rho).powf(-1.5) * (0.5 - rho * rho / 6.0)
}

/// W₁'(ρ) = (1 + ρ²/3)^{-5/2}(-5ρ/6 + ρ³/18).
pub fn w1_prime(rho: f64) -> f64 {
    q(rho).powf(-2.5) * (-5.0 * rho / 6.0 + rho.powi(3) / 18.0)
}

/// Θ₋ = (1 + ρ²/3)^{-1/2}(ρ/3 - 1/ρ), the growing L₋ zero mode.
pub fn theta_minus(rho: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(CoreError::Domain("Θ₋ is singular at ρ = 0".into()));
    }
    Ok(q(rho).powf(-0.5) * (rho / 3.0 - 1.0 / rho))
}

/// Θ₋'(ρ) = (1 + ρ²/3)^{-3/2}(1 + 1/ρ²).
pub fn theta_minus_prime(rho: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(CoreError::Domain("Θ₋ is singular at ρ = 0".into()));
    }
    Ok(q(rho).powf(-1.5) * (1.0 + 1.0 / (rho * rho)))
}

/// Θ₊ = -2(1 + ρ²/3)^{-3/2}(1/ρ - 2ρ + ρ³/9), the growing L₊ zero mode.
pub fn theta_plus(rho: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(CoreError::Domain("Θ₊ is singular at ρ = 0".into()));
    }
    Ok(-2.0 * q(rho).powf(-1.5) * (1.0 / rho - 2.0 * rho + rho.powi(3) / 9.0))
}

/// Θ₊'(ρ) = -2(1 + ρ²/3)^{-5/2}(-1/ρ² - 10/3 + 5ρ²/3).
pub fn theta_plus_prime(rho: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(CoreError::Domain("Θ₊ is singular at ρ = 0".into()));
    }
    Ok(-2.0 * q(rho).powf(-2.5) * (-1.0 / (rho * rho) - 10.0 / 3.0 + 5.0 * rho * rho / 3.0))
}

/// ρ²Θ₋ = (1 + ρ²/3)^{-1/2}(ρ³/3 - ρ), finite down to ρ = 0.
///
/// The ρ² factor is folded in algebraically so the variation-of-parameters
/// kernels never form the 0·∞ product near the origin.
pub fn rho2_theta_minus(rho: f64) -> f64 {
    q(rho).powf(-0.5) * (rho.powi(3) / 3.0 - rho)
}

/// ρ²Θ₊ = -2(1 + ρ²/3)^{-3/2}(ρ - 2ρ³ + ρ⁵/9), finite down to ρ = 0.
pub fn rho2_theta_plus(rho: f64) -> f64 {
    -2.0 * q(rho).powf(-1.5) * (rho - 2.0 * rho.powi(3) + rho.powi(5) / 9.0)
}

/// Closed-form evaluation of any of the six profiles.
pub fn eval_ground(which: GroundKind, rho: f64) -> Result<f64> {
    if rho < 0.0 {
        return Err(CoreError::Domain("ρ must be nonnegative".into()));
    }
    match which {
        GroundKind::W | GroundKind::PhiMinus => Ok(w(rho)),
        GroundKind::W1 | GroundKind::PhiPlus => Ok(w1(rho)),
        GroundKind::ThetaMinus => theta_minus(rho),
        GroundKind::ThetaPlus => theta_plus(rho),
    }
}

/// Linearized operator sign: L₊ has the 5W⁴ well, L₋ the W⁴ well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LSign {
    Plus,
    Minus,
}

/// Apply `L± f = -Δf - (5 or 1) W⁴ f` on the grid.
pub fn apply_l(sign: LSign, grid: &RadialGrid, f: &ComplexField) -> Result<ComplexField> {
    let coeff = match sign {
        LSign::Plus => 5.0,
        LSign::Minus => 1.0,
    };
    let lap = f.laplacian(grid)?;
    let values = lap
        .values
        .iter()
        .zip(f.values.iter())
        .zip(grid.nodes())
        .map(|((l, v), &r)| -l - coeff * w(r).powi(4) * v)
        .collect();
    Ok(ComplexField::new(values, f.parity))
}

/// Conserved energy `E(ψ) = ∫ (|∇ψ|² - |ψ|⁶/3) dx` by radial quadrature.
pub fn energy_functional(grid: &RadialGrid, psi: &ComplexField) -> Result<f64> {
    let d = differentiate(grid, &psi.values, psi.parity, 1)?;
    let density: Vec<f64> = d
        .iter()
        .zip(psi.values.iter())
        .map(|(dp, v)| dp.norm_sqr() - v.norm_sqr().powi(3) / 3.0)
        .collect();
    let e = FOUR_PI * grid.quad_r2(&density);
    if !e.is_finite() {
        return Err(CoreError::Numeric("non-finite energy".into()));
    }
    Ok(e)
}

/// Sample W as a field on the grid.
pub fn w_field(grid: &RadialGrid) -> ComplexField {
    ComplexField::from_fn(grid, Parity::Even, |r| Complex64::new(w(r), 0.0))
}
