//! Radial fields sampled on a [`RadialGrid`], their derivatives and norms.
//!
//! A radial function on ℝ³ is stored by its samples `f(ρ_i)`.  Derivatives
//! at the origin use parity: the even/odd extension across ρ = 0 closes the
//! finite-difference windows without one-sided loss of order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::{fornberg_weights, RadialGrid};

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Behaviour of a radial sample vector under ρ → -ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    /// No symmetry assumed; one-sided stencils are used near the left edge.
    None,
}

impl Parity {
    fn sign(self) -> Option<f64> {
        match self {
            Parity::Even => Some(1.0),
            Parity::Odd => Some(-1.0),
            Parity::None => None,
        }
    }
}

/// Norms used throughout: all volume integrals carry the `4π ρ² dρ` factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    Hdot1,
    Hdot2,
    H1,
    H2,
    SupWeighted(f64),
}

const STENCIL: usize = 7;

/// Derivative of order `order` (1 or 2) of the samples `f` on `grid`,
/// using 7-point windows and parity closure at the origin.
pub fn differentiate(
    grid: &RadialGrid,
    f: &[Complex64],
    parity: Parity,
    order: usize,
) -> Result<Vec<Complex64>> {
    if order == 0 || order > 2 {
        return Err(CoreError::Unsupported(format!(
            "derivative order {order} (only 1 and 2)"
        )));
    }
    let r = grid.nodes();
    let n = r.len();
    if f.len() != n {
        return Err(CoreError::Domain("sample count != grid size".into()));
    }
    if n < STENCIL {
        return Err(CoreError::Domain("grid too small for 7-point stencils".into()));
    }
    let origin = r[0] == 0.0;
    let mirror = parity.sign().filter(|_| origin);
    let half = STENCIL / 2;
    let mut out = vec![Complex64::default(); n];
    let mut xs = [0.0; STENCIL];
    let mut vs = [Complex64::default(); STENCIL];
    for i in 0..n {
        if let (Some(sign), true) = (mirror, i < half) {
            // window centred at node i using ghosts at -ρ_j, value sign*f_j
            let ghosts = half - i;
            for g in 0..ghosts {
                let j = ghosts - g; // ρ_j > 0 mirrored
                xs[g] = -r[j];
                vs[g] = sign * f[j];
            }
            for (slot, j) in (ghosts..STENCIL).zip(0..) {
                xs[slot] = r[j];
                vs[slot] = f[j];
            }
        } else {
            let lo = i.saturating_sub(half).min(n - STENCIL);
            for (slot, j) in (0..STENCIL).zip(lo..) {
                xs[slot] = r[j];
                vs[slot] = f[j];
            }
        }
        let w = fornberg_weights(r[i], &xs, order);
        let row = &w[order * STENCIL..(order + 1) * STENCIL];
        let mut acc = Complex64::default();
        for (c, v) in row.iter().zip(vs.iter()) {
            acc += v * c;
        }
        out[i] = acc;
    }
    Ok(out)
}

/// 3-D radial Laplacian `Δf = f'' + (2/ρ) f'`.
///
/// At ρ = 0 (even fields) the limit `Δf(0) = 3 f''(0)` is used.
pub fn laplacian(grid: &RadialGrid, f: &[Complex64], parity: Parity) -> Result<Vec<Complex64>> {
    let d1 = differentiate(grid, f, parity, 1)?;
    let d2 = differentiate(grid, f, parity, 2)?;
    let r = grid.nodes();
    let mut out = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        if r[i] == 0.0 {
            match parity {
                Parity::Even => out.push(3.0 * d2[i]),
                Parity::Odd | Parity::None => {
                    return Err(CoreError::Domain(
                        "laplacian at ρ=0 requires an even field".into(),
                    ))
                }
            }
        } else {
            out.push(d2[i] + 2.0 / r[i] * d1[i]);
        }
    }
    Ok(out)
}

/// Scalar complex radial field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub values: Vec<Complex64>,
    pub parity: Parity,
}

impl ComplexField {
    pub fn new(values: Vec<Complex64>, parity: Parity) -> Self {
        ComplexField { values, parity }
    }

    pub fn from_real(values: &[f64], parity: Parity) -> Self {
        ComplexField {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            parity,
        }
    }

    pub fn from_fn(grid: &RadialGrid, parity: Parity, f: impl Fn(f64) -> Complex64) -> Self {
        ComplexField {
            values: grid.nodes().iter().map(|&r| f(r)).collect(),
            parity,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn derivative(&self, grid: &RadialGrid, order: usize) -> Result<ComplexField> {
        let parity = match (self.parity, order) {
            (Parity::None, _) => Parity::None,
            (p, 2) => p,
            (Parity::Even, 1) => Parity::Odd,
            (Parity::Odd, 1) => Parity::Even,
            (p, _) => p,
        };
        Ok(ComplexField {
            values: differentiate(grid, &self.values, self.parity, order)?,
            parity,
        })
    }

    pub fn laplacian(&self, grid: &RadialGrid) -> Result<ComplexField> {
        Ok(ComplexField {
            values: laplacian(grid, &self.values, self.parity)?,
            parity: self.parity,
        })
    }

    pub fn norm(&self, grid: &RadialGrid, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => {
                let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
                Ok((FOUR_PI * grid.quad_r2(&sq)).sqrt())
            }
            NormKind::Hdot1 => {
                let d = differentiate(grid, &self.values, self.parity, 1)?;
                let sq: Vec<f64> = d.iter().map(|v| v.norm_sqr()).collect();
                Ok((FOUR_PI * grid.quad_r2(&sq)).sqrt())
            }
            NormKind::Hdot2 => {
                let l = laplacian(grid, &self.values, self.parity)?;
                let sq: Vec<f64> = l.iter().map(|v| v.norm_sqr()).collect();
                Ok((FOUR_PI * grid.quad_r2(&sq)).sqrt())
            }
            NormKind::H1 => {
                let a = self.norm(grid, NormKind::L2)?;
                let b = self.norm(grid, NormKind::Hdot1)?;
                Ok((a * a + b * b).sqrt())
            }
            NormKind::H2 => {
                let a = self.norm(grid, NormKind::H1)?;
                let b = self.norm(grid, NormKind::Hdot2)?;
                Ok((a * a + b * b).sqrt())
            }
            NormKind::SupWeighted(a) => Ok(self
                .values
                .iter()
                .zip(grid.nodes())
                .map(|(v, &r)| v.norm() * (1.0 + r * r).powf(-a / 2.0))
                .fold(0.0, f64::max)),
        }
    }

    /// `⟨f, g⟩ = 4π ∫ f ḡ ρ² dρ`.
    pub fn inner(&self, grid: &RadialGrid, other: &ComplexField) -> Complex64 {
        let mut acc = Complex64::default();
        for ((a, b), w) in self
            .values
            .iter()
            .zip(other.values.iter())
            .zip(grid.weights())
        {
            acc += a * b.conj() * w;
        }
        acc * FOUR_PI
    }
}

/// Two-component field (ζ, ζ̄)-type spinor used by the linearized machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorField {
    pub up: ComplexField,
    pub dn: ComplexField,
}

impl SpinorField {
    pub fn new(up: ComplexField, dn: ComplexField) -> Self {
        SpinorField { up, dn }
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    /// σ₁ swaps components and conjugates nothing.
    pub fn sigma1(&self) -> SpinorField {
        SpinorField {
            up: self.dn.clone(),
            dn: self.up.clone(),
        }
    }

    /// σ₃ flips the sign of the lower component.
    pub fn sigma3(&self) -> SpinorField {
        SpinorField {
            up: self.up.clone(),
            dn: ComplexField {
                values: self.dn.values.iter().map(|v| -v).collect(),
                parity: self.dn.parity,
            },
        }
    }

    pub fn conj(&self) -> SpinorField {
        SpinorField {
            up: ComplexField {
                values: self.up.values.iter().map(|v| v.conj()).collect(),
                parity: self.up.parity,
            },
            dn: ComplexField {
                values: self.dn.values.iter().map(|v| v.conj()).collect(),
                parity: self.dn.parity,
            },
        }
    }

    /// `⟨f, g⟩ = 4π ∫ (f₁ḡ₁ + f₂ḡ₂) ρ² dρ`.
    pub fn inner(&self, grid: &RadialGrid, other: &SpinorField) -> Complex64 {
        self.up.inner(grid, &other.up) + self.dn.inner(grid, &other.dn)
    }

    pub fn norm_l2(&self, grid: &RadialGrid) -> f64 {
        self.inner(grid, self).re.sqrt()
    }

    pub fn scale(&self, c: Complex64) -> SpinorField {
        SpinorField {
            up: ComplexField {
                values: self.up.values.iter().map(|v| v * c).collect(),
                parity: self.up.parity,
            },
            dn: ComplexField {
                values: self.dn.values.iter().map(|v| v * c).collect(),
                parity: self.dn.parity,
            },
        }
    }

    pub fn add_scaled(&self, other: &SpinorField, c: Complex64) -> SpinorField {
        SpinorField {
            up: ComplexField {
                values: self
                    .up
                    .values
                    .iter()
                    .zip(&other.up.values)
                    .map(|(a, b)| a + b * c)
                    .collect(),
                parity: self.up.parity,
            },
            dn: ComplexField {
                values: self
                    .dn
                    .values
                    .iter()
                    .zip(&other.dn.values)
                    .map(|(a, b)| a + b * c)
                    .collect(),
                parity: self.dn.parity,
            },
        }
    }
}
