//! Variational lower bounds for the quadratic form ⟨Hf, σ₃f⟩.
//!
//! The form is indefinite on the full radial space: the imaginary eigenpair
//! contributes genuinely negative directions and the zero-energy resonance
//! contributes near-flat ones.  Orthogonality to σ₃ζ± removes the first;
//! orthogonality to σ₃h_κ and σ₃σ₁h̄_κ (or, alternatively, a penalty
//! κ‖𝔼*_κσ₃f‖² added to the form) removes the second, after which the form
//! controls ‖∇f‖² with a constant ∝ κ, respectively ‖f‖²_{H¹} with a
//! constant ∝ κ³.
//!
//! Numerically this is a constrained generalized eigenvalue problem: both
//! the form and the norm are assembled as Hermitian matrices over the
//! spinor samples (Dirichlet at the outer edge), the norm is factored by
//! Cholesky, the constraint functionals are orthonormalized in the factored
//! frame, and the minimal eigenvalue of the projected form is the reported
//! quotient.  Constraint functionals that fail to be independent at the
//! discrete level are rejected rather than silently dropped.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{differentiate, laplacian, Parity, SpinorField, FOUR_PI};
use crate::ground_state::w;

use super::operator::EigenData;
use super::transform::{quasi_resonant, DistortedTransform};

#[derive(Debug, Clone, Default)]
pub struct CoercivityConstraints {
    /// Orthogonality to the discrete modes: ⟨f, σ₃ζ±⟩ = 0.
    pub modes: bool,
    /// Orthogonality to the quasi-resonant pair: ⟨f, σ₃h_κ⟩ = ⟨f, σ₃σ₁h̄_κ⟩ = 0.
    pub resonance: bool,
    /// Additional functionals ⟨f, σ₃g⟩ = 0.
    pub extra: Vec<SpinorField>,
}

impl CoercivityConstraints {
    pub fn none() -> Self {
        CoercivityConstraints::default()
    }

    pub fn modes_only() -> Self {
        CoercivityConstraints {
            modes: true,
            ..Default::default()
        }
    }

    /// The full filtered set: discrete modes plus the quasi-resonant pair.
    pub fn filtered() -> Self {
        CoercivityConstraints {
            modes: true,
            resonance: true,
            extra: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum CoercivityForm {
    /// min ⟨Hf, σ₃f⟩ / ‖∇f‖².
    GradientQuotient,
    /// min (⟨Hf, σ₃f⟩ + weight·‖𝔼*_κσ₃f‖²) / ‖f‖²_{H¹}.
    PenalizedH1 { weight: f64 },
}

#[derive(Debug, Clone)]
pub struct CoercivityReport {
    pub kappa: f64,
    pub min_quotient: f64,
    pub n_constraints: usize,
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

pub fn coercivity_check(
    tr: &DistortedTransform,
    modes: &EigenData,
    constraints: &CoercivityConstraints,
    form: CoercivityForm,
) -> Result<CoercivityReport> {
    let grid = tr.grid();
    let n = grid.len();
    if modes.zeta_plus.len() != n {
        return Err(CoreError::Config(
            "eigenmode fields live on a different grid than the transform".into(),
        ));
    }
    // Dirichlet closure: the last few nodes are frozen at zero so the
    // one-sided stencils at the edge cannot feed the minimizer.
    let kept = n - 3;
    let ndof = 2 * kept;
    let m: Vec<f64> = grid.weights().iter().map(|w| FOUR_PI * w).collect();
    let w4: Vec<f64> = grid.nodes().iter().map(|&r| w(r).powi(4)).collect();

    // scalar Laplacian and first-derivative matrices on the kept columns
    let mut lap = DMatrix::<f64>::zeros(kept, kept);
    let mut der = DMatrix::<f64>::zeros(n, kept);
    let mut unit = vec![Complex64::default(); n];
    for j in 0..kept {
        unit[j] = Complex64::new(1.0, 0.0);
        let l = laplacian(grid, &unit, Parity::Even)?;
        let d = differentiate(grid, &unit, Parity::Even, 1)?;
        unit[j] = Complex64::default();
        for i in 0..kept {
            lap[(i, j)] = l[i].re;
        }
        for i in 0..n {
            der[(i, j)] = d[i].re;
        }
    }

    // ⟨Hf, σ₃f⟩ = Σ_c (‖∇f_c‖² - 3∫W⁴|f_c|²) - 4∫W⁴ Re(f₂ f̄₁)
    let mut a = DMatrix::<f64>::zeros(ndof, ndof);
    for i in 0..kept {
        for j in 0..kept {
            let v = -m[i] * lap[(i, j)];
            a[(i, j)] = v;
            a[(kept + i, kept + j)] = v;
        }
        a[(i, i)] -= 3.0 * m[i] * w4[i];
        a[(kept + i, kept + i)] -= 3.0 * m[i] * w4[i];
        a[(i, kept + i)] -= 2.0 * m[i] * w4[i];
        a[(kept + i, i)] -= 2.0 * m[i] * w4[i];
    }
    let a = (&a + a.transpose()) * 0.5;

    // gradient Gram DᵀMD per component
    let mut grad = DMatrix::<f64>::zeros(kept, kept);
    for i in 0..kept {
        for j in i..kept {
            let mut acc = 0.0;
            for l in 0..n {
                acc += m[l] * der[(l, i)] * der[(l, j)];
            }
            grad[(i, j)] = acc;
            grad[(j, i)] = acc;
        }
    }

    let mut num = to_complex(&a);
    let mut den = DMatrix::<Complex64>::zeros(ndof, ndof);
    match form {
        CoercivityForm::GradientQuotient => {
            for i in 0..kept {
                for j in 0..kept {
                    let g = Complex64::new(grad[(i, j)], 0.0);
                    den[(i, j)] = g;
                    den[(kept + i, kept + j)] = g;
                }
                let reg = Complex64::new(1e-10 * m[i] + 1e-12, 0.0);
                den[(i, i)] += reg;
                den[(kept + i, kept + i)] += reg;
            }
        }
        CoercivityForm::PenalizedH1 { weight } => {
            for i in 0..kept {
                for j in 0..kept {
                    let g = Complex64::new(grad[(i, j)], 0.0);
                    den[(i, j)] = g;
                    den[(kept + i, kept + j)] = g;
                }
                let l2 = Complex64::new(m[i] + 1e-12, 0.0);
                den[(i, i)] += l2;
                den[(kept + i, kept + i)] += l2;
            }
            // weight · ‖𝔼*σ₃f‖²: low-rank Gram of the adjoint rows
            let nk = tr.k_grid().len();
            let mut rows = DMatrix::<Complex64>::zeros(2 * nk, ndof);
            let mut f = SpinorField::new(
                crate::field::ComplexField::new(vec![Complex64::default(); n], Parity::Even),
                crate::field::ComplexField::new(vec![Complex64::default(); n], Parity::Even),
            );
            for dof in 0..ndof {
                let (c, j) = (dof / kept, dof % kept);
                let comp = if c == 0 { &mut f.up } else { &mut f.dn };
                comp.values[j] = Complex64::new(1.0, 0.0);
                let out = tr.adjoint(&f.sigma3())?;
                let comp = if c == 0 { &mut f.up } else { &mut f.dn };
                comp.values[j] = Complex64::default();
                for (i, o) in out.iter().enumerate() {
                    rows[(2 * i, dof)] = o[0];
                    rows[(2 * i + 1, dof)] = o[1];
                }
            }
            for i in 0..nk {
                let wk = Complex64::new(weight * tr.k_weights()[i], 0.0);
                for rr in [2 * i, 2 * i + 1] {
                    let row = rows.row(rr).clone_owned();
                    for p in 0..ndof {
                        for q in 0..ndof {
                            num[(p, q)] += row[p].conj() * row[q] * wk;
                        }
                    }
                }
            }
        }
    }

    // constraint functionals v with v*x = ⟨f, σ₃g⟩
    let mut gs: Vec<SpinorField> = Vec::new();
    if constraints.modes {
        gs.push(modes.zeta_plus.clone());
        gs.push(modes.zeta_minus.clone());
    }
    if constraints.resonance {
        let q = quasi_resonant(tr)?;
        gs.push(q.h.clone());
        gs.push(q.h.conj().sigma1());
    }
    gs.extend(constraints.extra.iter().cloned());
    let mut vs: Vec<Vec<Complex64>> = Vec::with_capacity(gs.len());
    for g in &gs {
        if g.len() != n {
            return Err(CoreError::Config(
                "constraint field lives on a different grid".into(),
            ));
        }
        let sg = g.sigma3();
        let mut v = vec![Complex64::default(); ndof];
        for i in 0..kept {
            v[i] = sg.up.values[i] * m[i];
            v[kept + i] = sg.dn.values[i] * m[i];
        }
        vs.push(v);
    }

    let chol = den
        .clone()
        .cholesky()
        .ok_or_else(|| CoreError::Numeric("norm Gram matrix is not positive definite".into()))?;
    let l = chol.l();

    // orthonormalize the constraints in the factored frame
    let mut q_cols: Vec<nalgebra::DVector<Complex64>> = Vec::new();
    for v in &vs {
        let rhs = nalgebra::DVector::from_column_slice(v);
        let ct = l
            .solve_lower_triangular(&rhs)
            .ok_or_else(|| CoreError::Numeric("triangular solve failed".into()))?;
        let orig = ct.norm();
        let mut r = ct;
        for q in &q_cols {
            let c = q.dotc(&r);
            r -= q * c;
        }
        let left = r.norm();
        if left < 1e-8 * orig.max(1e-300) {
            return Err(CoreError::Config(
                "constraint projector is rank-deficient: functionals are not independent".into(),
            ));
        }
        q_cols.push(r / Complex64::new(left, 0.0));
    }

    // Ã = L⁻¹ A L⁻*, then project out the constraint directions and push
    // them to a large positive shift
    let z = l
        .solve_lower_triangular(&num)
        .ok_or_else(|| CoreError::Numeric("triangular solve failed".into()))?;
    let at = l
        .solve_lower_triangular(&z.adjoint())
        .ok_or_else(|| CoreError::Numeric("triangular solve failed".into()))?
        .adjoint();
    let mut at = (&at + at.adjoint()) * Complex64::new(0.5, 0.0);
    let beta = Complex64::new(at.norm().max(1.0), 0.0);
    for q in &q_cols {
        // (I - qq*) Ã (I - qq*) + β qq*, applied one direction at a time
        let aq = &at * q;
        let qa = aq.adjoint();
        let s = q.dotc(&aq);
        for p in 0..ndof {
            for r in 0..ndof {
                at[(p, r)] +=
                    -q[p] * qa[r] - aq[p] * q[r].conj() + q[p] * s * q[r].conj() + q[p] * beta * q[r].conj();
            }
        }
    }

    let eig = at.symmetric_eigen();
    let min_quotient = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport {
        kappa: tr.kappa(),
        min_quotient,
        n_constraints: vs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    use crate::grid::{GridSpec, RadialGrid};
    use crate::spectral::jost::{JostControls, JostWorkspace};
    use crate::spectral::operator::{eigenpairs, LinearizedOperator};
    use crate::spectral::transform::TransformControls;

    const KAPPA: f64 = 0.1;

    fn setup() -> &'static (DistortedTransform, EigenData) {
        static S: OnceLock<(DistortedTransform, EigenData)> = OnceLock::new();
        S.get_or_init(|| {
            let ws = JostWorkspace::new(JostControls {
                r_dense: 50.0,
                h_dense: 0.1,
                r_far: 1000.0,
                h_far: 1.0,
                ..JostControls::default()
            })
            .unwrap();
            let grid = RadialGrid::new(&GridSpec::uniform(40.0, 321)).unwrap();
            let tr = DistortedTransform::new(
                &ws,
                &grid,
                TransformControls { kappa: KAPPA, k_step: KAPPA / 8.0 },
            )
            .unwrap();
            let ed = eigenpairs(&LinearizedOperator::new(grid)).unwrap();
            (tr, ed)
        })
    }

    #[test]
    fn unconstrained_form_is_indefinite() {
        let (tr, ed) = setup();
        let rep = coercivity_check(
            tr,
            ed,
            &CoercivityConstraints::none(),
            CoercivityForm::GradientQuotient,
        )
        .unwrap();
        assert!(rep.min_quotient < 0.0, "expected a negative direction, got {}", rep.min_quotient);
    }

    #[test]
    fn filtered_form_controls_the_gradient() {
        let (tr, ed) = setup();
        let rep = coercivity_check(
            tr,
            ed,
            &CoercivityConstraints::filtered(),
            CoercivityForm::GradientQuotient,
        )
        .unwrap();
        assert_eq!(rep.n_constraints, 4);
        assert!(
            rep.min_quotient > 1e-4,
            "filtered quotient {} is not safely positive",
            rep.min_quotient
        );
        let c_fit = rep.min_quotient / KAPPA;
        assert!(c_fit < 100.0, "implausible coercivity constant {c_fit}");
    }

    #[test]
    fn penalized_form_controls_h1() {
        let (tr, ed) = setup();
        let rep = coercivity_check(
            tr,
            ed,
            &CoercivityConstraints::modes_only(),
            CoercivityForm::PenalizedH1 { weight: KAPPA },
        )
        .unwrap();
        assert!(
            rep.min_quotient > 0.0,
            "penalized quotient {} is not positive",
            rep.min_quotient
        );
        let c_fit = rep.min_quotient / KAPPA.powi(3);
        assert!(c_fit > 0.0 && c_fit.is_finite(), "bad κ³ constant {c_fit}");
    }

    #[test]
    fn dependent_constraints_are_rejected() {
        let (tr, ed) = setup();
        let mut cs = CoercivityConstraints::modes_only();
        cs.extra.push(ed.zeta_plus.clone());
        let out = coercivity_check(tr, ed, &cs, CoercivityForm::GradientQuotient);
        assert!(matches!(out, Err(CoreError::Config(_))));
    }
}
