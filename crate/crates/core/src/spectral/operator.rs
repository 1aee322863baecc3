//! The linearized operator H and its discrete eigenvalue pair ±iλ₀.
//!
//! H acts on radial 2-spinors ζ = (ζ₁, ζ₂) as
//!
//!   H = -Δσ₃ - 3W⁴σ₃ - 2W⁴σ₃σ₁,
//!
//! and the substitution f = ρζ turns the radial problem into the line form
//! H̃ = -∂²_ρσ₃ + V on odd functions, with V₁ = -3W⁴, V₂ = -2W⁴.  The
//! eigenvalue λ₀ is located by a dense eigensolve of the discretized line
//! operator and then refined by shooting: the decaying solution at +∞ is
//! integrated inward and λ₀ is the root of the 2×2 matching determinant at
//! the origin.  The refined value no longer depends on the grid, which is
//! what makes the refinement-stability oracle meaningful.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{ComplexField, Parity, SpinorField};
use crate::grid::RadialGrid;
use crate::ground_state;
use crate::ode::{integrate_to_nodes, OdeOptions};

/// H on radial spinors over a [`RadialGrid`].
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    grid: RadialGrid,
    w4: Vec<f64>,
}

impl LinearizedOperator {
    pub fn new(grid: RadialGrid) -> Self {
        let w4 = grid
            .nodes()
            .iter()
            .map(|&r| ground_state::w(r).powi(4))
            .collect();
        LinearizedOperator { grid, w4 }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn w4(&self) -> &[f64] {
        &self.w4
    }

    /// H f.
    pub fn apply(&self, f: &SpinorField) -> Result<SpinorField> {
        let lu = f.up.laplacian(&self.grid)?;
        let ld = f.dn.laplacian(&self.grid)?;
        let mut up = Vec::with_capacity(f.len());
        let mut dn = Vec::with_capacity(f.len());
        for i in 0..f.len() {
            let w4 = self.w4[i];
            up.push(-lu.values[i] - 3.0 * w4 * f.up.values[i] - 2.0 * w4 * f.dn.values[i]);
            dn.push(ld.values[i] + 3.0 * w4 * f.dn.values[i] + 2.0 * w4 * f.up.values[i]);
        }
        Ok(SpinorField::new(
            ComplexField::new(up, f.up.parity),
            ComplexField::new(dn, f.dn.parity),
        ))
    }

    /// H* f, assembled directly; equals σ₃ H σ₃ f node for node.
    pub fn apply_adjoint(&self, f: &SpinorField) -> Result<SpinorField> {
        let lu = f.up.laplacian(&self.grid)?;
        let ld = f.dn.laplacian(&self.grid)?;
        let mut up = Vec::with_capacity(f.len());
        let mut dn = Vec::with_capacity(f.len());
        for i in 0..f.len() {
            let w4 = self.w4[i];
            up.push(-lu.values[i] - 3.0 * w4 * f.up.values[i] + 2.0 * w4 * f.dn.values[i]);
            dn.push(ld.values[i] + 3.0 * w4 * f.dn.values[i] - 2.0 * w4 * f.up.values[i]);
        }
        Ok(SpinorField::new(
            ComplexField::new(up, f.up.parity),
            ComplexField::new(dn, f.dn.parity),
        ))
    }
}

/// Dense 2n×2n matrix of the line form H̃ on (0, r_max) with Dirichlet ends
/// (the odd restriction), second-order Laplacian; block layout [u; v].
fn line_matrix(r_max: f64, n: usize) -> DMatrix<f64> {
    let h = r_max / (n + 1) as f64;
    let s = 1.0 / (h * h);
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        let rho = (i + 1) as f64 * h;
        let w4 = ground_state::w(rho).powi(4);
        // -u'' - 3W⁴u - 2W⁴v
        a[(i, i)] = 2.0 * s - 3.0 * w4;
        a[(i, n + i)] = -2.0 * w4;
        // +v'' + 3W⁴v + 2W⁴u
        a[(n + i, n + i)] = -2.0 * s + 3.0 * w4;
        a[(n + i, i)] = 2.0 * w4;
        if i + 1 < n {
            a[(i, i + 1)] = -s;
            a[(i + 1, i)] = -s;
            a[(n + i, n + i + 1)] = s;
            a[(n + i + 1, n + i)] = s;
        }
    }
    a
}

/// The `count` smallest-|λ| eigenvalues of the discretized line operator,
/// sorted by modulus.  Used for symmetry checks and as the coarse locator.
pub fn line_spectrum(r_max: f64, n: usize, count: usize) -> Result<Vec<Complex64>> {
    let a = line_matrix(r_max, n);
    let eig = a.complex_eigenvalues();
    let mut all: Vec<Complex64> = eig.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    all.sort_by(|p, q| p.norm().total_cmp(&q.norm()));
    all.truncate(count);
    Ok(all)
}

/// The discrete eigenvalue pair and its eigenfunctions.
#[derive(Debug, Clone)]
pub struct EigenData {
    pub lambda0: f64,
    /// H ζ₊ = +iλ₀ ζ₊, ‖ζ₊‖_{L²} = 1, and ζ₋ = σ₁ζ₊ = conj ζ₊ exactly.
    pub zeta_plus: SpinorField,
    pub zeta_minus: SpinorField,
    /// ⟨ζ₊, σ₃ζ₋⟩ (purely imaginary under the conjugation convention).
    pub pairing: Complex64,
    /// ‖Hζ₊ - iλ₀ζ₊‖_{L²} relative to λ₀ on the operator's grid.
    pub residual: f64,
}

impl EigenData {
    /// P₊f + P₋f, the discrete-spectrum part of f.
    pub fn project_discrete(&self, grid: &RadialGrid, f: &SpinorField) -> SpinorField {
        let cp = f.inner(grid, &self.zeta_minus.sigma3()) / self.pairing;
        let pm_pair = self.zeta_minus.inner(grid, &self.zeta_plus.sigma3());
        let cm = f.inner(grid, &self.zeta_plus.sigma3()) / pm_pair;
        self.zeta_plus
            .scale(cp)
            .add_scaled(&self.zeta_minus, cm)
    }

    /// P f = f - P₊f - P₋f, the essential-spectrum projection.
    pub fn project_essential(&self, grid: &RadialGrid, f: &SpinorField) -> SpinorField {
        let d = self.project_discrete(grid, f);
        f.add_scaled(&d, Complex64::new(-1.0, 0.0))
    }

    /// Scalar coordinates (⟨f,σ₃ζ₋⟩/⟨ζ₊,σ₃ζ₋⟩, ⟨f,σ₃ζ₊⟩/⟨ζ₋,σ₃ζ₊⟩).
    pub fn mode_coords(&self, grid: &RadialGrid, f: &SpinorField) -> (Complex64, Complex64) {
        let cp = f.inner(grid, &self.zeta_minus.sigma3()) / self.pairing;
        let pm_pair = self.zeta_minus.inner(grid, &self.zeta_plus.sigma3());
        let cm = f.inner(grid, &self.zeta_plus.sigma3()) / pm_pair;
        (cp, cm)
    }
}

/// State of the inward shooting sweep: one complex solution of the 4-dim
/// first-order system for (u, u', v, v') at eigenvalue parameter λ.
fn shoot_rhs(lam: f64) -> impl Fn(f64, &[Complex64], &mut [Complex64]) {
    move |rho: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let w4 = ground_state::w(rho).powi(4);
        let ila = Complex64::new(0.0, lam);
        dy[0] = y[1];
        dy[1] = -3.0 * w4 * y[0] - 2.0 * w4 * y[2] - ila * y[0];
        dy[2] = y[3];
        dy[3] = ila * y[2] - 3.0 * w4 * y[2] - 2.0 * w4 * y[0];
    }
}

fn shoot_opts() -> OdeOptions {
    OdeOptions {
        rtol: 1e-12,
        atol: 1e-14,
        h_init: 1e-2,
        ..OdeOptions::default()
    }
}

/// Start radius: far enough out that the free head e^{μρ}(1, μ, 0, 0) is
/// accurate to ~1e-9 relative (the potential decays like 9/ρ⁴).
fn start_radius(lam: f64) -> f64 {
    (9.0e9 / lam).powf(0.25).clamp(60.0, 400.0)
}

/// Integrate the decaying solution from `r1` down through `targets`
/// (descending, last entry 0), renormalizing between chunks.  Returns the
/// recorded states and per-record log-scales: true(ρ) = state · e^{logscale}
/// up to one global factor.
fn shoot_sweep(
    lam: f64,
    r1: f64,
    targets: &[f64],
) -> Result<(Vec<[Complex64; 4]>, Vec<f64>)> {
    let mu = -lam.sqrt() * Complex64::new(0.5f64.sqrt(), -(0.5f64.sqrt()));
    let mut y = vec![
        Complex64::new(1.0, 0.0),
        mu,
        Complex64::default(),
        Complex64::default(),
    ];
    let rhs = shoot_rhs(lam);
    let opts = shoot_opts();
    let mut states = Vec::with_capacity(targets.len());
    let mut scales = Vec::with_capacity(targets.len());
    let mut log_scale = 0.0f64;
    let mut pos = r1;
    let mut idx = 0usize;
    const CHUNK: f64 = 4.0;
    while idx < targets.len() {
        let chunk_end = (pos - CHUNK).max(0.0);
        // descending node list: targets inside this chunk, then the chunk end
        let mut nodes = vec![pos];
        let mut rec = Vec::new();
        while idx < targets.len() && targets[idx] >= chunk_end - 1e-12 {
            nodes.push(targets[idx]);
            rec.push(nodes.len() - 1);
            idx += 1;
        }
        if *nodes.last().unwrap() > chunk_end + 1e-12 {
            nodes.push(chunk_end);
        }
        let sol = integrate_to_nodes(&rhs, &nodes, &y, &opts)?;
        for &ri in &rec {
            let s = &sol[ri];
            states.push([s[0], s[1], s[2], s[3]]);
            scales.push(log_scale);
        }
        y = sol.last().unwrap().clone();
        pos = *nodes.last().unwrap();
        let sup = y.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if sup > 0.0 {
            for z in y.iter_mut() {
                *z /= sup;
            }
            log_scale += sup.ln();
        }
    }
    Ok((states, scales))
}

/// Matching determinant at the origin; real by the σ₁-conjugation symmetry.
fn shoot_det(lam: f64) -> Result<f64> {
    let r1 = start_radius(lam);
    let (states, _) = shoot_sweep(lam, r1, &[0.0])?;
    let s = states[0];
    Ok(s[0].norm_sqr() - s[2].norm_sqr())
}

/// Locate and refine the eigenvalue pair ±iλ₀ of H, returning λ₀ with the
/// eigenfunctions sampled on the operator's grid.
pub fn eigenpairs(op: &LinearizedOperator) -> Result<EigenData> {
    // coarse dense locator on the line form
    let r_c = op.grid.r_max().min(40.0);
    let eigs = {
        let a = line_matrix(r_c, 260);
        a.complex_eigenvalues()
    };
    let mut lam = 0.0f64;
    let mut best_im = 0.0f64;
    for z in eigs.iter() {
        if z.im.abs() > best_im {
            best_im = z.im.abs();
            lam = z.im.abs();
            if z.re.abs() > 1e-6 * z.im.abs().max(1.0) {
                return Err(CoreError::Numeric(format!(
                    "spurious complex eigenvalue {z} fails the symmetry gate"
                )));
            }
        }
    }
    if lam < 1e-8 {
        return Err(CoreError::Numeric(
            "no imaginary eigenvalue located by the dense solve".into(),
        ));
    }

    // secant refinement of the matching determinant
    let mut a = lam * 0.98;
    let mut b = lam * 1.02;
    let mut fa = shoot_det(a)?;
    let mut fb = shoot_det(b)?;
    for _ in 0..80 {
        if (fb - fa).abs() < 1e-300 {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        let c = c.clamp(0.2 * lam, 5.0 * lam);
        a = b;
        fa = fb;
        b = c;
        fb = shoot_det(b)?;
        if (b - a).abs() < 1e-12 * b.abs() {
            break;
        }
    }
    let lambda0 = b;

    // final sweep through the grid nodes
    let r1 = start_radius(lambda0);
    let n = op.grid.len();
    let mut targets = Vec::with_capacity(n);
    let mut grid_idx = Vec::with_capacity(n);
    for (j, &r) in op.grid.nodes().iter().enumerate().rev() {
        if r < r1 {
            targets.push(r);
            grid_idx.push(j);
        }
    }
    if targets.last().copied() != Some(0.0) {
        return Err(CoreError::Domain(
            "eigenpairs needs a grid that starts at ρ = 0".into(),
        ));
    }
    let (states, scales) = shoot_sweep(lambda0, r1, &targets)?;
    let l0 = *scales.last().unwrap();
    // combination vanishing at the origin: f = c_a g + c_b σ₁ḡ
    let s0 = states.last().unwrap();
    let (ca, cb) = (s0[2].conj(), -s0[0]);
    let mut fu = vec![Complex64::default(); n];
    let mut fv = vec![Complex64::default(); n];
    for (k, &j) in grid_idx.iter().enumerate() {
        // nodes beyond the start radius stay zero: the mode is below underflow
        let fac = (scales[k] - l0).exp();
        let g = states[k];
        fu[j] = (ca * g[0] + cb * g[2].conj()) * fac;
        fv[j] = (ca * g[2] + cb * g[0].conj()) * fac;
    }
    // phase so that σ₁ f̄ = f, then enforce it exactly
    let j_star = (0..n).max_by(|&p, &q| fu[p].norm().total_cmp(&fu[q].norm())).unwrap();
    let c = fv[j_star].conj() / fu[j_star];
    let phase = Complex64::from_polar(1.0, 0.5 * c.arg());
    for j in 0..n {
        fu[j] *= phase;
        fv[j] *= phase;
        fu[j] = 0.5 * (fu[j] + fv[j].conj());
        fv[j] = fu[j].conj();
    }

    // ζ = f/ρ with the origin value from even extrapolation in ρ²
    let mut zu = vec![Complex64::default(); n];
    for j in 1..n {
        zu[j] = fu[j] / op.grid.nodes()[j];
    }
    zu[0] = extrapolate_even(op.grid.nodes(), &zu);
    let mut zv: Vec<Complex64> = zu.iter().map(|z| z.conj()).collect();

    // normalize and pin the sign
    let zp = SpinorField::new(
        ComplexField::new(zu.clone(), Parity::Even),
        ComplexField::new(zv.clone(), Parity::Even),
    );
    let nrm = zp.norm_l2(&op.grid);
    if nrm == 0.0 {
        return Err(CoreError::Numeric("vanishing eigenfunction".into()));
    }
    let mut sign = 1.0;
    if zu[0].re < 0.0 {
        sign = -1.0;
    }
    for z in zu.iter_mut() {
        *z *= sign / nrm;
    }
    for z in zv.iter_mut() {
        *z *= sign / nrm;
    }
    let zeta_plus = SpinorField::new(
        ComplexField::new(zu, Parity::Even),
        ComplexField::new(zv, Parity::Even),
    );
    let zeta_minus = zeta_plus.sigma1();
    let pairing = zeta_plus.inner(&op.grid, &zeta_minus.sigma3());
    if pairing.norm() < 1e-10 {
        return Err(CoreError::Numeric(
            "degenerate ⟨ζ₊, σ₃ζ₋⟩ pairing".into(),
        ));
    }

    let hz = op.apply(&zeta_plus)?;
    let res = hz
        .add_scaled(&zeta_plus, Complex64::new(0.0, -lambda0))
        .norm_l2(&op.grid)
        / lambda0;

    Ok(EigenData {
        lambda0,
        zeta_plus,
        zeta_minus,
        pairing,
        residual: res,
    })
}

/// Even extrapolation to ρ = 0: Lagrange in s = ρ² through nodes 1..=6.
fn extrapolate_even(nodes: &[f64], v: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::default();
    for a in 1..=6 {
        let sa = nodes[a] * nodes[a];
        let mut w = 1.0;
        for b in 1..=6 {
            if a != b {
                let sb = nodes[b] * nodes[b];
                w *= sb / (sb - sa);
            }
        }
        acc += v[a] * w;
    }
    acc
}
