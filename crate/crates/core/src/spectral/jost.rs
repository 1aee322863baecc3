//! Jost solutions of the line problem H̃f = k²f obtained by product
//! integration of the defining Volterra equations.  The kernels are
//! decomposed into exponentials e^{μ(ρ-s)}; each exponent gets a running
//! carry integral updated node by node, with panel contributions computed
//! exactly against local polynomial interpolation of the integrand.  This
//! keeps the discretization uniform in k down to k = 0, where the kernels
//! degenerate to linear functions of ρ-s and a dedicated path takes over.
//!
//! Three solutions are produced:
//!   J₃ ~ e^{-kρ}(0,1)ᵀ, the channel-two decaying solution, valid on all ρ;
//!   J₁ ~ e^{ikρ}(1,0)ᵀ, built through the reduced first-order system once
//!        J₃ is known, then continued below the matching radius as a Cauchy
//!        problem;
//!   J₄ ~ e^{kρ}(0,1)ᵀ, the channel-two growing solution, valid beyond a
//!        contraction radius and stored in envelope form so the growing
//!        exponential is never materialized.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::ground_state;
use crate::ode::{integrate_to_nodes, OdeOptions};

/// Maximum panel stencil width (quartic interpolation of the integrand).
const STENCIL: usize = 5;

#[derive(Debug, Clone)]
pub struct JostControls {
    /// Extent and step of the dense grid zone starting at ρ = 0.
    pub r_dense: f64,
    pub h_dense: f64,
    /// Extent and step of the coarse far zone, where only the potential
    /// tails ~ρ⁻⁴ remain.
    pub r_far: f64,
    pub h_far: f64,
    /// Matching radius for the reduced system behind J₁; the effective
    /// potentials are smooth beyond it.
    pub r_match: f64,
    /// Override for the J₄ contraction radius (testing hook).
    pub j4_start: Option<f64>,
    /// Zero the potential entirely; every solution collapses to its free
    /// asymptotic head (testing hook).
    pub zero_potential: bool,
}

impl Default for JostControls {
    fn default() -> Self {
        JostControls {
            r_dense: 400.0,
            h_dense: 0.05,
            r_far: 3000.0,
            h_far: 1.0,
            r_match: 5.0,
            j4_start: None,
            zero_potential: false,
        }
    }
}

#[derive(Debug)]
pub struct JostWorkspace {
    ctl: JostControls,
    nodes: Vec<f64>,
    /// V₁ = -3W⁴ and V₂ = -2W⁴ at the nodes (zeroed by the test hook).
    v1: Vec<f64>,
    v2: Vec<f64>,
    pot_scale: f64,
    i_match: usize,
    const0: OnceLock<Complex64>,
}

impl JostWorkspace {
    pub fn new(ctl: JostControls) -> Result<Self> {
        if ctl.h_dense <= 0.0 || ctl.h_far <= 0.0 {
            return Err(CoreError::Config("jost grid steps must be positive".into()));
        }
        let n1 = (ctl.r_dense / ctl.h_dense).round() as usize;
        let n2 = ((ctl.r_far - ctl.r_dense) / ctl.h_far).round() as usize;
        if n1 < 2 * STENCIL
            || n2 < 2 * STENCIL
            || (n1 as f64 * ctl.h_dense - ctl.r_dense).abs() > 1e-9
            || (n2 as f64 * ctl.h_far - (ctl.r_far - ctl.r_dense)).abs() > 1e-9
        {
            return Err(CoreError::Config(
                "jost zone extents must be multiples of their steps".into(),
            ));
        }
        let im = (ctl.r_match / ctl.h_dense).round() as usize;
        if im == 0 || im >= n1 || (im as f64 * ctl.h_dense - ctl.r_match).abs() > 1e-9 {
            return Err(CoreError::Config(
                "matching radius must be a dense-zone node".into(),
            ));
        }
        let mut nodes = Vec::with_capacity(n1 + n2 + 1);
        for i in 0..=n1 {
            nodes.push(i as f64 * ctl.h_dense);
        }
        for i in 1..=n2 {
            nodes.push(ctl.r_dense + i as f64 * ctl.h_far);
        }
        let pot_scale = if ctl.zero_potential { 0.0 } else { 1.0 };
        let mut v1 = Vec::with_capacity(nodes.len());
        let mut v2 = Vec::with_capacity(nodes.len());
        for &r in &nodes {
            let w4 = pot_scale * ground_state::w(r).powi(4);
            v1.push(-3.0 * w4);
            v2.push(-2.0 * w4);
        }
        Ok(JostWorkspace {
            ctl,
            nodes,
            v1,
            v2,
            pot_scale,
            i_match: im,
            const0: OnceLock::new(),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn controls(&self) -> &JostControls {
        &self.ctl
    }

    fn w4_at(&self, r: f64) -> f64 {
        self.pot_scale * ground_state::w(r).powi(4)
    }

    /// ∫_r^∞ W⁴ ds, closed form from W⁴ = 9/(3+s²)².
    fn i0_tail(&self, r: f64) -> f64 {
        let s3 = 3.0f64.sqrt();
        let f = r / (6.0 * (3.0 + r * r)) + (r / s3).atan() / (6.0 * s3);
        self.pot_scale * 9.0 * (PI / (12.0 * s3) - f)
    }

    /// ∫_r^∞ s W⁴ ds.
    fn i1_tail(&self, r: f64) -> f64 {
        self.pot_scale * 4.5 / (3.0 + r * r)
    }

    /// ∫_r^∞ e^{μ(r-s)} W⁴(s) ds for Re μ ≥ 0.
    fn exp_tail(&self, mu: Complex64, r: f64) -> Complex64 {
        if mu.norm() == 0.0 {
            return Complex64::new(self.i0_tail(r), 0.0);
        }
        if mu.norm() * r > 20.0 {
            // integration by parts against the decaying exponential
            let q = 3.0 + r * r;
            let g0 = 9.0 / (q * q);
            let g1 = -36.0 * r / q.powi(3);
            let g2 = -36.0 / q.powi(3) + 216.0 * r * r / q.powi(4);
            let g3 = 648.0 * r / q.powi(4) - 1728.0 * r.powi(3) / q.powi(5);
            let inv = 1.0 / mu;
            return self.pot_scale * inv * (g0 - inv * (g1 - inv * (g2 - inv * g3)));
        }
        // first-order expansion of the exponential against the exact tails
        let i0 = self.i0_tail(r);
        let i1 = self.i1_tail(r);
        Complex64::new(i0, 0.0) + mu * (r * i0 - i1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JostKind {
    J1,
    J3,
    J4,
}

/// One Jost solution in envelope form: the actual solution is e^{expo·ρ}χ
/// with χ and χ' tabulated on the workspace nodes from index `start` on.
#[derive(Debug, Clone)]
pub struct JostSolution {
    pub kind: JostKind,
    pub k: f64,
    pub expo: f64,
    pub start: usize,
    nodes: Vec<f64>,
    pub chi: Vec<[Complex64; 2]>,
    pub chi_d: Vec<[Complex64; 2]>,
}

impl JostSolution {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Solution value at node `j`; forms e^{expo·ρ}, so avoid it for J₄ at
    /// large ρ and use [`JostSolution::wronskian_with`] instead.
    pub fn value(&self, j: usize) -> [Complex64; 2] {
        let e = (self.expo * self.nodes[j]).exp();
        [self.chi[j][0] * e, self.chi[j][1] * e]
    }

    pub fn derivative(&self, j: usize) -> [Complex64; 2] {
        let e = (self.expo * self.nodes[j]).exp();
        [
            (self.chi_d[j][0] + self.expo * self.chi[j][0]) * e,
            (self.chi_d[j][1] + self.expo * self.chi[j][1]) * e,
        ]
    }

    /// Bilinear Wronskian w(f, g) = ⟨f', g⟩ - ⟨f, g'⟩ at node `j`, with the
    /// envelope exponentials combined analytically.
    pub fn wronskian_with(&self, other: &JostSolution, j: usize) -> Complex64 {
        let rho = self.nodes[j];
        let scale = ((self.expo + other.expo) * rho).exp();
        let mut w = Complex64::default();
        for c in 0..2 {
            let fd = self.chi_d[j][c] + self.expo * self.chi[j][c];
            let gd = other.chi_d[j][c] + other.expo * other.chi[j][c];
            w += fd * other.chi[j][c] - self.chi[j][c] * gd;
        }
        w * scale
    }

    /// Componentwise conjugate; for real k this sends J₁ to its partner
    /// solution with asymptotic head e^{-ikρ}(1,0)ᵀ.
    pub fn conjugate(&self) -> JostSolution {
        JostSolution {
            kind: self.kind,
            k: self.k,
            expo: self.expo,
            start: self.start,
            nodes: self.nodes.clone(),
            chi: self.chi.iter().map(|v| [v[0].conj(), v[1].conj()]).collect(),
            chi_d: self
                .chi_d
                .iter()
                .map(|v| [v[0].conj(), v[1].conj()])
                .collect(),
        }
    }
}

/// m_n = ∫_0^h x^n e^{-μx} dx for n < count.
fn moments(mu: Complex64, h: f64, count: usize) -> Vec<Complex64> {
    let z = mu * h;
    let mut m = vec![Complex64::default(); count];
    if z.norm() <= 2.0 {
        for (n, slot) in m.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = term / (n as f64 + 1.0);
            for j in 1..60 {
                term *= -z / j as f64;
                let add = term / (n + j + 1) as f64;
                sum += add;
                if add.norm() < 1e-18 * sum.norm().max(1e-300) {
                    break;
                }
            }
            *slot = sum * h.powi(n as i32 + 1);
        }
    } else {
        let e = (-z).exp();
        m[0] = (Complex64::new(1.0, 0.0) - e) / mu;
        for n in 1..count {
            m[n] = (m[n - 1] * n as f64 - e * h.powi(n as i32)) / mu;
        }
    }
    m
}

/// Weights w_m with Σ_m w_m Q(x_m) ≈ ∫_0^h x^{xw} e^{-μx} p(x) dx, where p
/// interpolates Q on the offsets.  Exact for polynomials of the stencil
/// degree; offsets[0] = 0 and offsets[1] = h.
fn panel_weights(mu: Complex64, offsets: &[f64], xw: usize) -> Result<Vec<Complex64>> {
    let p = offsets.len();
    let h = offsets[1];
    let mom = moments(mu, h, p + xw);
    let mut a = vec![vec![Complex64::default(); p]; p];
    let mut b = vec![Complex64::default(); p];
    for n in 0..p {
        for (m, &d) in offsets.iter().enumerate() {
            a[n][m] = Complex64::new((d / h).powi(n as i32), 0.0);
        }
        b[n] = mom[n + xw] / h.powi(n as i32);
    }
    solve_small(&mut a, &mut b)?;
    Ok(b)
}

/// Gaussian elimination with partial pivoting for the small panel systems.
fn solve_small(a: &mut [Vec<Complex64>], b: &mut [Complex64]) -> Result<()> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].norm() > a[piv][col].norm() {
                piv = r;
            }
        }
        if a[piv][col].norm() < 1e-13 {
            return Err(CoreError::Conditioning(
                "degenerate panel interpolation stencil".into(),
            ));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f.norm() == 0.0 {
                continue;
            }
            for c in col..n {
                let t = a[col][c] * f;
                a[r][c] -= t;
            }
            let t = b[col] * f;
            b[r] -= t;
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= a[col][c] * b[c];
        }
        b[col] = s / a[col][col];
    }
    Ok(())
}

/// Precomputed panel for one integration step of a carry with exponent μ.
#[derive(Debug, Clone)]
struct Panel {
    w: Vec<Complex64>,
    decay: Complex64,
    h: f64,
}

/// Panels for a backward sweep over nodes[lo..]: entry j-lo covers the step
/// from node j+1 down to node j with stencil j..j+p.
fn backward_panels(nodes: &[f64], lo: usize, mu: Complex64, xw: usize) -> Result<Vec<Panel>> {
    let n = nodes.len();
    let mut out = Vec::with_capacity(n - 1 - lo);
    for j in lo..n - 1 {
        let p = STENCIL.min(n - j);
        let offsets: Vec<f64> = (0..p).map(|i| nodes[j + i] - nodes[j]).collect();
        let h = offsets[1];
        out.push(Panel {
            w: panel_weights(mu, &offsets, xw)?,
            decay: (-mu * h).exp(),
            h,
        });
    }
    Ok(out)
}

/// Panels for a forward sweep over nodes[lo..=hi]: entry j-lo-1 covers the
/// step from node j-1 up to node j with stencil j, j-1, ..., j-p+1.
fn forward_panels(nodes: &[f64], lo: usize, hi: usize, mu: Complex64, xw: usize) -> Result<Vec<Panel>> {
    let mut out = Vec::with_capacity(hi - lo);
    for j in lo + 1..=hi {
        let p = STENCIL.min(j - lo + 1);
        let offsets: Vec<f64> = (0..p).map(|i| nodes[j] - nodes[j - i]).collect();
        let h = offsets[1];
        out.push(Panel {
            w: panel_weights(mu, &offsets, xw)?,
            decay: (-mu * h).exp(),
            h,
        });
    }
    Ok(out)
}

/// Entry point: solve the requested Jost solution at wave number k ≥ 0.
pub fn jost_solve(ws: &JostWorkspace, kind: JostKind, k: f64) -> Result<JostSolution> {
    if k < 0.0 || !k.is_finite() {
        return Err(CoreError::Domain("jost_solve needs k ≥ 0".into()));
    }
    match kind {
        JostKind::J3 => solve_j3(ws, k),
        JostKind::J1 => solve_j1(ws, k),
        JostKind::J4 => solve_j4(ws, k),
    }
}

/// σ₃V at node j: -W⁴ [[3,2],[2,3]], expressed through the stored V₁, V₂.
fn sigma3_v(ws: &JostWorkspace, j: usize) -> [[f64; 2]; 2] {
    [[ws.v1[j], ws.v2[j]], [ws.v2[j], ws.v1[j]]]
}

fn solve_j3(ws: &JostWorkspace, k: f64) -> Result<JostSolution> {
    let (chi, chi_d) = if k == 0.0 {
        chi3_zero(ws)?
    } else {
        chi3_positive(ws, k)?
    };
    Ok(JostSolution {
        kind: JostKind::J3,
        k,
        expo: -k,
        start: 0,
        nodes: ws.nodes.clone(),
        chi,
        chi_d,
    })
}

/// χ₃ for k > 0: backward product integration with carries for the four
/// kernel exponents k(1±i) (channel one) and 2k, 0 (channel two).
#[allow(clippy::type_complexity)]
fn chi3_positive(
    ws: &JostWorkspace,
    k: f64,
) -> Result<(Vec<[Complex64; 2]>, Vec<[Complex64; 2]>)> {
    let n = ws.nodes.len();
    let mu_a = Complex64::new(k, k);
    let mu_b = Complex64::new(k, -k);
    let mu_c = Complex64::new(2.0 * k, 0.0);
    let mu_d = Complex64::default();
    let pan_a = backward_panels(&ws.nodes, 0, mu_a, 0)?;
    let pan_b = backward_panels(&ws.nodes, 0, mu_b, 0)?;
    let pan_c = backward_panels(&ws.nodes, 0, mu_c, 0)?;
    let pan_d = backward_panels(&ws.nodes, 0, mu_d, 0)?;
    let two_ik = Complex64::new(0.0, 2.0 * k);
    let two_k = Complex64::new(2.0 * k, 0.0);

    let r_far = *ws.nodes.last().unwrap();
    // tail carries assuming χ₃ ≈ (0,1) beyond the grid
    let mut ca = -2.0 * ws.exp_tail(mu_a, r_far);
    let mut cb = -2.0 * ws.exp_tail(mu_b, r_far);
    let mut cc = -3.0 * ws.exp_tail(mu_c, r_far);
    let mut cd = Complex64::new(-3.0 * ws.i0_tail(r_far), 0.0);

    let mut chi = vec![[Complex64::default(); 2]; n];
    let mut chi_d = vec![[Complex64::default(); 2]; n];
    let mut q1 = vec![Complex64::default(); n];
    let mut q2 = vec![Complex64::default(); n];
    let mut car_a = vec![Complex64::default(); n];
    let mut car_b = vec![Complex64::default(); n];
    let mut car_c = vec![Complex64::default(); n];

    // top node straight from the equation with the tail carries
    {
        let j = n - 1;
        let a1 = -(ca - cb) / two_ik;
        let a2 = -(cc - cd) / two_k;
        chi[j] = [a1, Complex64::new(1.0, 0.0) + a2];
        let m = sigma3_v(ws, j);
        q1[j] = m[0][0] * chi[j][0] + m[0][1] * chi[j][1];
        q2[j] = m[1][0] * chi[j][0] + m[1][1] * chi[j][1];
        car_a[j] = ca;
        car_b[j] = cb;
        car_c[j] = cc;
        chi_d[j] = [-(mu_a * ca - mu_b * cb) / two_ik, -cc];
    }

    for j in (0..n - 1).rev() {
        let pa = &pan_a[j];
        let pb = &pan_b[j];
        let pc = &pan_c[j];
        let pd = &pan_d[j];
        let mut ka = pa.decay * ca;
        let mut kb = pb.decay * cb;
        let mut kc = pc.decay * cc;
        let mut kd = pd.decay * cd;
        for i in 1..pa.w.len() {
            ka += pa.w[i] * q1[j + i];
            kb += pb.w[i] * q1[j + i];
            kc += pc.w[i] * q2[j + i];
            kd += pd.w[i] * q2[j + i];
        }
        let g1 = (pa.w[0] - pb.w[0]) / two_ik;
        let g2 = (pc.w[0] - pd.w[0]) / two_k;
        let b1 = -(ka - kb) / two_ik;
        let b2 = Complex64::new(1.0, 0.0) - (kc - kd) / two_k;
        let m = sigma3_v(ws, j);
        // (I + diag(g) M) χ = b
        let a11 = Complex64::new(1.0, 0.0) + g1 * m[0][0];
        let a12 = g1 * m[0][1];
        let a21 = g2 * m[1][0];
        let a22 = Complex64::new(1.0, 0.0) + g2 * m[1][1];
        let det = a11 * a22 - a12 * a21;
        let x1 = (a22 * b1 - a12 * b2) / det;
        let x2 = (a11 * b2 - a21 * b1) / det;
        chi[j] = [x1, x2];
        q1[j] = m[0][0] * x1 + m[0][1] * x2;
        q2[j] = m[1][0] * x1 + m[1][1] * x2;
        ca = ka + pa.w[0] * q1[j];
        cb = kb + pb.w[0] * q1[j];
        cc = kc + pc.w[0] * q2[j];
        cd = kd + pd.w[0] * q2[j];
        car_a[j] = ca;
        car_b[j] = cb;
        car_c[j] = cc;
        chi_d[j] = [-(mu_a * ca - mu_b * cb) / two_ik, -cc];
    }
    Ok((chi, chi_d))
}

/// χ₃ at k = 0: both kernel components degenerate to ρ-s, handled with a
/// pair of vector carries ∫Q and ∫(ρ-s)Q.
#[allow(clippy::type_complexity)]
fn chi3_zero(ws: &JostWorkspace) -> Result<(Vec<[Complex64; 2]>, Vec<[Complex64; 2]>)> {
    let n = ws.nodes.len();
    let zero = Complex64::default();
    let pan0 = backward_panels(&ws.nodes, 0, zero, 0)?;
    let pan1 = backward_panels(&ws.nodes, 0, zero, 1)?;

    let r_far = *ws.nodes.last().unwrap();
    let i0 = ws.i0_tail(r_far);
    let t = ws.i1_tail(r_far) - r_far * i0; // ∫ (s-R) W⁴ ds
    let mut c0 = [Complex64::new(-2.0 * i0, 0.0), Complex64::new(-3.0 * i0, 0.0)];
    let mut cl = [Complex64::new(2.0 * t, 0.0), Complex64::new(3.0 * t, 0.0)];

    let mut chi = vec![[Complex64::default(); 2]; n];
    let mut chi_d = vec![[Complex64::default(); 2]; n];
    let mut q = vec![[Complex64::default(); 2]; n];

    {
        let j = n - 1;
        chi[j] = [-cl[0], Complex64::new(1.0, 0.0) - cl[1]];
        let m = sigma3_v(ws, j);
        q[j] = [
            m[0][0] * chi[j][0] + m[0][1] * chi[j][1],
            m[1][0] * chi[j][0] + m[1][1] * chi[j][1],
        ];
        chi_d[j] = [-c0[0], -c0[1]];
    }

    for j in (0..n - 1).rev() {
        let p0 = &pan0[j];
        let p1 = &pan1[j];
        let h = p0.h;
        // C_lin(ρ_j) = C_lin(ρ_{j+1}) - h C_0(ρ_{j+1}) - ∫_0^h x Q(ρ_j+x) dx
        let mut kl = [cl[0] - h * c0[0], cl[1] - h * c0[1]];
        let mut k0 = c0;
        for i in 1..p0.w.len() {
            for c in 0..2 {
                kl[c] -= p1.w[i] * q[j + i][c];
                k0[c] += p0.w[i] * q[j + i][c];
            }
        }
        let g = -p1.w[0]; // coefficient of Q_j inside C_lin
        let b1 = -kl[0];
        let b2 = Complex64::new(1.0, 0.0) - kl[1];
        let m = sigma3_v(ws, j);
        // χ = b - (-g)·... equation: χ = b + (-g)... assembled as (I - w̃₀M)χ = b
        let a11 = Complex64::new(1.0, 0.0) + g * m[0][0];
        let a12 = g * m[0][1];
        let a21 = g * m[1][0];
        let a22 = Complex64::new(1.0, 0.0) + g * m[1][1];
        let det = a11 * a22 - a12 * a21;
        let x1 = (a22 * b1 - a12 * b2) / det;
        let x2 = (a11 * b2 - a21 * b1) / det;
        chi[j] = [x1, x2];
        q[j] = [m[0][0] * x1 + m[0][1] * x2, m[1][0] * x1 + m[1][1] * x2];
        for c in 0..2 {
            cl[c] = kl[c] - p1.w[0] * q[j][c];
            c0[c] = k0[c] + p0.w[0] * q[j][c];
        }
        chi_d[j] = [-c0[0], -c0[1]];
    }
    Ok((chi, chi_d))
}

/// Effective 2×2 potential of the reduced first-order system behind J₁,
/// expressed through the J₃ envelope; smooth beyond the matching radius.
fn reduced_potential(ws: &JostWorkspace, chi3: &JostSolution, j: usize) -> [[Complex64; 2]; 2] {
    let c = chi3.chi[j];
    let cd = chi3.chi_d[j];
    let ratio = c[0] / c[1];
    let v11 = ws.v1[j] - ws.v2[j] * ratio;
    let v12 = 2.0 * (c[0] * cd[1] - cd[0] * c[1]) / (c[1] * c[1]);
    let v21 = Complex64::new(ws.v2[j], 0.0);
    let v22 = -cd[1] / c[1];
    [[v11, v12], [v21, v22]]
}

/// Solve the reduced system for z on nodes ≥ i_match (entries below are
/// zero): z = e^{ikρ}(1,0)ᵀ minus the kernel applied to V̂z.
#[allow(clippy::type_complexity)]
fn solve_z(
    ws: &JostWorkspace,
    k: f64,
    chi3: &JostSolution,
) -> Result<(Vec<[Complex64; 2]>, Vec<[Complex64; 2]>)> {
    let n = ws.nodes.len();
    let lo = ws.i_match;
    let vh: Vec<[[Complex64; 2]; 2]> = (0..n)
        .map(|j| {
            if j >= lo {
                reduced_potential(ws, chi3, j)
            } else {
                [[Complex64::default(); 2]; 2]
            }
        })
        .collect();
    let mut z = vec![[Complex64::default(); 2]; n];
    let mut zd = vec![[Complex64::default(); 2]; n];
    let mut q1 = vec![Complex64::default(); n];
    let mut q2 = vec![Complex64::default(); n];

    if k > 0.0 {
        let mu_a = Complex64::new(0.0, k);
        let mu_b = Complex64::new(0.0, -k);
        let mu_c = Complex64::new(k, 0.0);
        let pan_a = backward_panels(&ws.nodes, lo, mu_a, 0)?;
        let pan_b = backward_panels(&ws.nodes, lo, mu_b, 0)?;
        let pan_c = backward_panels(&ws.nodes, lo, mu_c, 0)?;
        let two_ik = Complex64::new(0.0, 2.0 * k);
        // tail carries assuming z ≈ e^{iks}(1,0) beyond the grid, where the
        // reduced potential column one is ≈ (-3W⁴, -2W⁴)
        let r_far = *ws.nodes.last().unwrap();
        let head = Complex64::from_polar(1.0, k * r_far);
        let mut ca = -3.0 * head * ws.exp_tail(Complex64::default(), r_far);
        let mut cb = -3.0 * head * ws.exp_tail(Complex64::new(0.0, -2.0 * k), r_far);
        let mut cc = -2.0 * head * ws.exp_tail(Complex64::new(k, -k), r_far);
        {
            let j = n - 1;
            let e = Complex64::from_polar(1.0, k * ws.nodes[j]);
            z[j] = [e - (ca - cb) / two_ik, -cc];
            let m = &vh[j];
            q1[j] = m[0][0] * z[j][0] + m[0][1] * z[j][1];
            q2[j] = m[1][0] * z[j][0] + m[1][1] * z[j][1];
            zd[j] = [
                Complex64::new(0.0, k) * e - (ca + cb) * 0.5,
                q2[j] + k * z[j][1],
            ];
        }
        for j in (lo..n - 1).rev() {
            let pa = &pan_a[j - lo];
            let pb = &pan_b[j - lo];
            let pc = &pan_c[j - lo];
            let mut ka = pa.decay * ca;
            let mut kb = pb.decay * cb;
            let mut kc = pc.decay * cc;
            for i in 1..pa.w.len() {
                ka += pa.w[i] * q1[j + i];
                kb += pb.w[i] * q1[j + i];
                kc += pc.w[i] * q2[j + i];
            }
            let g1 = (pa.w[0] - pb.w[0]) / two_ik;
            let g2 = pc.w[0];
            let e = Complex64::from_polar(1.0, k * ws.nodes[j]);
            let b1 = e - (ka - kb) / two_ik;
            let b2 = -kc;
            let m = &vh[j];
            let a11 = Complex64::new(1.0, 0.0) + g1 * m[0][0];
            let a12 = g1 * m[0][1];
            let a21 = g2 * m[1][0];
            let a22 = Complex64::new(1.0, 0.0) + g2 * m[1][1];
            let det = a11 * a22 - a12 * a21;
            let x1 = (a22 * b1 - a12 * b2) / det;
            let x2 = (a11 * b2 - a21 * b1) / det;
            z[j] = [x1, x2];
            q1[j] = m[0][0] * x1 + m[0][1] * x2;
            q2[j] = m[1][0] * x1 + m[1][1] * x2;
            ca = ka + pa.w[0] * q1[j];
            cb = kb + pb.w[0] * q1[j];
            cc = kc + pc.w[0] * q2[j];
            zd[j] = [
                Complex64::new(0.0, k) * e - (ca + cb) * 0.5,
                q2[j] + k * z[j][1],
            ];
        }
    } else {
        // k = 0: channel-one kernel is ρ-s, channel-two kernel is 1
        let zero = Complex64::default();
        let pan0 = backward_panels(&ws.nodes, lo, zero, 0)?;
        let pan1 = backward_panels(&ws.nodes, lo, zero, 1)?;
        let one = Complex64::new(1.0, 0.0);
        // tail carries assuming z ≈ (1,0) beyond the grid
        let r_far = *ws.nodes.last().unwrap();
        let i0 = ws.i0_tail(r_far);
        let t = ws.i1_tail(r_far) - r_far * i0;
        let mut c0_1 = Complex64::new(-3.0 * i0, 0.0);
        let mut cl_1 = Complex64::new(3.0 * t, 0.0);
        let mut c0_2 = Complex64::new(-2.0 * i0, 0.0);
        {
            let j = n - 1;
            z[j] = [one - cl_1, -c0_2];
            let m = &vh[j];
            q1[j] = m[0][0] * z[j][0] + m[0][1] * z[j][1];
            q2[j] = m[1][0] * z[j][0] + m[1][1] * z[j][1];
            zd[j] = [-c0_1, q2[j]];
        }
        for j in (lo..n - 1).rev() {
            let p0 = &pan0[j - lo];
            let p1 = &pan1[j - lo];
            let h = p0.h;
            let mut kl = cl_1 - h * c0_1;
            let mut k0 = c0_1;
            let mut kc = c0_2;
            for i in 1..p0.w.len() {
                kl -= p1.w[i] * q1[j + i];
                k0 += p0.w[i] * q1[j + i];
                kc += p0.w[i] * q2[j + i];
            }
            let g1 = -p1.w[0];
            let g2 = p0.w[0];
            let b1 = one - kl;
            let b2 = -kc;
            let m = &vh[j];
            let a11 = one + g1 * m[0][0];
            let a12 = g1 * m[0][1];
            let a21 = g2 * m[1][0];
            let a22 = one + g2 * m[1][1];
            let det = a11 * a22 - a12 * a21;
            let x1 = (a22 * b1 - a12 * b2) / det;
            let x2 = (a11 * b2 - a21 * b1) / det;
            z[j] = [x1, x2];
            q1[j] = m[0][0] * x1 + m[0][1] * x2;
            q2[j] = m[1][0] * x1 + m[1][1] * x2;
            cl_1 = kl - p1.w[0] * q1[j];
            c0_1 = k0 + p0.w[0] * q1[j];
            c0_2 = kc + p0.w[0] * q2[j];
            zd[j] = [-c0_1, q2[j]];
        }
    }
    Ok((z, zd))
}

/// The ρ-independent constant in the z₀ reconstruction, fixed at k = 0:
/// ∫_{R}^{∞} z₂(s,0)/χ₃₂(s,0) ds, with the analytic tail beyond the grid.
fn z0_constant(ws: &JostWorkspace) -> Result<Complex64> {
    if let Some(c) = ws.const0.get() {
        return Ok(*c);
    }
    let chi3 = solve_j3(ws, 0.0)?;
    let (z, _) = solve_z(ws, 0.0, &chi3)?;
    let n = ws.nodes.len();
    let lo = ws.i_match;
    let zero = Complex64::default();
    let pans = forward_panels(&ws.nodes, lo, n - 1, zero, 0)?;
    let q: Vec<Complex64> = (0..n)
        .map(|j| {
            if j >= lo {
                z[j][1] / chi3.chi[j][1]
            } else {
                Complex64::default()
            }
        })
        .collect();
    let mut acc = Complex64::default();
    for j in lo + 1..n {
        let p = &pans[j - lo - 1];
        for (i, w) in p.w.iter().enumerate() {
            acc += w * q[j - i];
        }
    }
    // tail: z₂(s,0) ≈ 2∫_s^∞ W⁴ ≈ 6/s³ against χ₃₂ ≈ 1
    let r_far = *ws.nodes.last().unwrap();
    acc += Complex64::new(ws.pot_scale * 3.0 / (r_far * r_far), 0.0);
    Ok(*ws.const0.get_or_init(|| acc))
}

fn solve_j1(ws: &JostWorkspace, k: f64) -> Result<JostSolution> {
    let chi3 = solve_j3(ws, k)?;
    let (z, zd) = solve_z(ws, k, &chi3)?;
    let const0 = z0_constant(ws)?;
    let n = ws.nodes.len();
    let lo = ws.i_match;

    // p(ρ) = e^{-kρ} z₀(ρ), built by a damped forward sweep of z₂/χ₃₂
    let mu = Complex64::new(k, 0.0);
    let pans = forward_panels(&ws.nodes, lo, n - 1, mu, 0)?;
    let q: Vec<Complex64> = (0..n)
        .map(|j| {
            if j >= lo {
                z[j][1] / chi3.chi[j][1]
            } else {
                Complex64::default()
            }
        })
        .collect();
    let mut p = vec![Complex64::default(); n];
    p[lo] = -(-k * ws.nodes[lo]).exp() * const0;
    for j in lo + 1..n {
        let pan = &pans[j - lo - 1];
        let mut acc = pan.decay * p[j - 1];
        for (i, w) in pan.w.iter().enumerate() {
            acc += w * q[j - i];
        }
        p[j] = acc;
    }

    let mut f = vec![[Complex64::default(); 2]; n];
    let mut fd = vec![[Complex64::default(); 2]; n];
    for j in lo..n {
        let c3 = chi3.chi[j];
        let c3d = chi3.chi_d[j];
        f[j] = [p[j] * c3[0] + z[j][0], p[j] * c3[1]];
        let ratio = c3[0] / c3[1];
        fd[j] = [
            z[j][1] * ratio + p[j] * (c3d[0] - k * c3[0]) + zd[j][0],
            z[j][1] + p[j] * (c3d[1] - k * c3[1]),
        ];
    }

    // continue below the matching radius as a Cauchy problem for H̃f = k²f
    let k2 = k * k;
    let pot = |r: f64| {
        let w4 = ws.w4_at(r);
        (-3.0 * w4, -2.0 * w4)
    };
    let rhs = move |r: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let (p1, p2) = pot(r);
        dy[0] = y[1];
        dy[1] = (p1 - k2) * y[0] + p2 * y[2];
        dy[2] = y[3];
        dy[3] = (p1 + k2) * y[2] + p2 * y[0];
    };
    let mut targets: Vec<f64> = ws.nodes[..lo].iter().rev().copied().collect();
    targets.insert(0, ws.nodes[lo]);
    let y0 = vec![f[lo][0], fd[lo][0], f[lo][1], fd[lo][1]];
    let opts = OdeOptions {
        rtol: 1e-12,
        atol: 1e-14,
        h_init: 1e-3,
        ..OdeOptions::default()
    };
    let sol = integrate_to_nodes(&rhs, &targets, &y0, &opts)?;
    for (m, row) in sol.iter().enumerate().skip(1) {
        let j = lo - m;
        f[j] = [row[0], row[2]];
        fd[j] = [row[1], row[3]];
    }

    Ok(JostSolution {
        kind: JostKind::J1,
        k,
        expo: 0.0,
        start: 0,
        nodes: ws.nodes.clone(),
        chi: f,
        chi_d: fd,
    })
}

/// J₄ via fixed-point iteration of its defining equation, valid beyond a
/// contraction radius R₁ chosen so the Volterra operator has small norm.
fn solve_j4(ws: &JostWorkspace, k: f64) -> Result<JostSolution> {
    if k <= 0.0 {
        return Err(CoreError::Domain(
            "the growing channel-two solution needs k > 0".into(),
        ));
    }
    let n = ws.nodes.len();
    let r1 = ws
        .ctl
        .j4_start
        .unwrap_or_else(|| (60.0 / k).powf(1.0 / 3.0).max(10.0));
    if r1 >= ws.ctl.r_dense {
        return Err(CoreError::Config("J₄ start radius beyond the dense zone".into()));
    }
    let lo = (r1 / ws.ctl.h_dense).ceil() as usize;
    let r1 = ws.nodes[lo];
    // operator norm estimate: both kernel rows are bounded by C/k and the
    // potential tail integrates to 5·I₀(R₁)
    if (2.0 / k) * 5.0 * ws.i0_tail(r1) >= 0.9 {
        return Err(CoreError::Domain(format!(
            "J₄ fixed point not contractive at k = {k}, R₁ = {r1}; enlarge the start radius"
        )));
    }

    let mu_a = Complex64::new(k, -k); // forward panel exponent for e^{(-k+ik)η}
    let mu_b = Complex64::new(k, k);
    let mu_c = Complex64::new(2.0 * k, 0.0);
    let pan_a = forward_panels(&ws.nodes, lo, n - 1, mu_a, 0)?;
    let pan_b = forward_panels(&ws.nodes, lo, n - 1, mu_b, 0)?;
    let pan_c = forward_panels(&ws.nodes, lo, n - 1, mu_c, 0)?;
    let pan_back = backward_panels(&ws.nodes, lo, Complex64::default(), 0)?;
    let two_ik = Complex64::new(0.0, 2.0 * k);
    let two_k = 2.0 * k;
    let r_far = *ws.nodes.last().unwrap();
    let back_tail = Complex64::new(3.0 * ws.i0_tail(r_far), 0.0);

    let one = Complex64::new(1.0, 0.0);
    let mut chi = vec![[Complex64::default(); 2]; n];
    for slot in chi.iter_mut().skip(lo) {
        *slot = [Complex64::default(), one];
    }
    let mut fa = vec![Complex64::default(); n];
    let mut fb = vec![Complex64::default(); n];
    let mut fc = vec![Complex64::default(); n];
    let mut back = vec![Complex64::default(); n];
    let mut q1 = vec![Complex64::default(); n];
    let mut q2 = vec![Complex64::default(); n];

    let mut converged = false;
    for _ in 0..60 {
        for j in lo..n {
            q1[j] = ws.v1[j] * chi[j][0] + ws.v2[j] * chi[j][1];
            q2[j] = -ws.v2[j] * chi[j][0] - ws.v1[j] * chi[j][1];
        }
        // backward plain integral of Q₂ (channel two, first term)
        back[n - 1] = back_tail;
        for j in (lo..n - 1).rev() {
            let p = &pan_back[j - lo];
            let mut acc = back[j + 1];
            for (i, w) in p.w.iter().enumerate() {
                acc += w * q2[j + i];
            }
            back[j] = acc;
        }
        // forward damped carries from R₁
        fa[lo] = Complex64::default();
        fb[lo] = Complex64::default();
        fc[lo] = Complex64::default();
        for j in lo + 1..n {
            let (pa, pb, pc) = (&pan_a[j - lo - 1], &pan_b[j - lo - 1], &pan_c[j - lo - 1]);
            let mut aa = pa.decay * fa[j - 1];
            let mut ab = pb.decay * fb[j - 1];
            let mut ac = pc.decay * fc[j - 1];
            for (i, w) in pa.w.iter().enumerate() {
                aa += w * q1[j - i];
            }
            for (i, w) in pb.w.iter().enumerate() {
                ab += w * q1[j - i];
            }
            for (i, w) in pc.w.iter().enumerate() {
                ac += w * q2[j - i];
            }
            fa[j] = aa;
            fb[j] = ab;
            fc[j] = ac;
        }
        let mut delta = 0.0f64;
        let mut scale = 0.0f64;
        for j in lo..n {
            let new = [
                (fa[j] - fb[j]) / two_ik,
                one + (back[j] + fc[j]) / two_k,
            ];
            delta = delta
                .max((new[0] - chi[j][0]).norm())
                .max((new[1] - chi[j][1]).norm());
            scale = scale.max(new[0].norm()).max(new[1].norm());
            chi[j] = new;
        }
        if delta < 1e-13 * (1.0 + scale) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(CoreError::Convergence(
            "J₄ fixed point failed to settle".into(),
        ));
    }

    let nu_a = Complex64::new(-k, k);
    let nu_b = Complex64::new(-k, -k);
    let mut chi_d = vec![[Complex64::default(); 2]; n];
    for j in lo..n {
        chi_d[j] = [(nu_a * fa[j] - nu_b * fb[j]) / two_ik, -fc[j]];
    }

    Ok(JostSolution {
        kind: JostKind::J4,
        k,
        expo: k,
        start: lo,
        nodes: ws.nodes.clone(),
        chi,
        chi_d,
    })
}
