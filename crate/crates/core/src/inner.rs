//! Inner-region corrections χ_k of the modulated profile
//! u = W + Σ_k t^{-k(1+2ν)} χ_k(ρ), built recursively: each order solves
//! L₊ Re χ_k = Re D_k, L₋ Im χ_k = Im D_k with zero conditions at ρ = 0,
//! via the variation-of-parameters kernels of the explicit zero modes.
//!
//! The forcing splits as D_k = D_k^{(1)} + D_k^{(2)}: a first-order part
//! carried by χ_{k-1},
//!
//!   D_k^{(1)} = -i(1+2ν)(k-1) χ_{k-1} - α₀ χ_{k-1} + iν(1/2 + ρ∂_ρ) χ_{k-1},
//!
//! and the order-k coefficient D_k^{(2)} of the quintic remainder
//! |W+χ|⁴(W+χ) - W⁵ - 3W⁴χ - 2W⁴χ̄, collected exactly by truncated
//! series multiplication in powers of t^{-(1+2ν)} (no numerical
//! differentiation of the nonlinearity).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{differentiate, ComplexField, Parity, SpinorField, FOUR_PI};
use crate::grid::{GridSpec, RadialGrid, SpacingLaw, Zone};
use crate::ground_state::{self, LSign};

/// Modulation parameters of the blow-down ansatz λ = t^ν, α = α₀ ln t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerParams {
    pub nu: f64,
    pub alpha0: f64,
}

impl InnerParams {
    pub fn beta(&self) -> f64 {
        self.nu.abs() + self.alpha0.abs()
    }
}

/// Truncation order and matching exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerConfig {
    /// Truncation order N of the χ series.
    pub order: usize,
    /// Matching exponent ε₁ delimiting the inner region ρ ≤ 10 t^{1/2+ν-ε₁}.
    pub eps1: f64,
    /// Window [ρ_a, ρ_b] for the large-ρ tail fits.
    pub fit_window: (f64, f64),
}

impl InnerConfig {
    pub fn with_defaults(nu: f64) -> Self {
        InnerConfig {
            order: 8,
            eps1: (1.0 + 2.0 * nu) / 27.0,
            // a wide window keeps the log columns of the tail basis
            // distinguishable from neighboring pure powers
            fit_window: (20.0, 380.0),
        }
    }

    pub fn validate(&self, nu: f64) -> Result<()> {
        if self.order == 0 || self.order > 27 {
            return Err(CoreError::Config("order must be in 1..=27".into()));
        }
        let cap = (1.0 + 2.0 * nu) / 20.0;
        if !(self.eps1 > 0.0 && self.eps1 < cap) {
            return Err(CoreError::Config(format!(
                "ε₁ = {} outside (0, {cap})",
                self.eps1
            )));
        }
        if !(self.fit_window.1 > self.fit_window.0 && self.fit_window.0 > 1.0) {
            return Err(CoreError::Config("bad fit window".into()));
        }
        Ok(())
    }

    /// Whether (2N+3)ε₁ > 3(1+2ν)/2 holds, i.e. the truncation is deep
    /// enough for the full target residual rate.  Attainable only for
    /// N ≥ 14 given the ε₁ < (1+2ν)/20 cap; smaller N still produces a
    /// valid profile with a correspondingly weaker rate.
    pub fn meets_matching_rate(&self, nu: f64) -> bool {
        (2.0 * self.order as f64 + 3.0) * self.eps1 > 1.5 * (1.0 + 2.0 * nu)
    }

    /// Outer edge of the inner region at time t.
    pub fn rho_limit(&self, nu: f64, t: f64) -> f64 {
        10.0 * t.powf(0.5 + nu - self.eps1)
    }
}

/// Default inner grid: dense core, geometric stretch, covering the inner
/// region up to its outer edge at `t_max`.
pub fn inner_grid_spec(cfg: &InnerConfig, params: &InnerParams, t_max: f64) -> GridSpec {
    let rho_max = cfg.rho_limit(params.nu, t_max).max(200.0);
    GridSpec {
        zones: vec![
            Zone { start: 0.0, end: 20.0, count: 2001, law: SpacingLaw::Uniform },
            Zone { start: 20.0, end: rho_max, count: 3001, law: SpacingLaw::Geometric },
        ],
    }
}

/// The recursively built inner series.
#[derive(Debug, Clone)]
pub struct InnerSeries {
    pub params: InnerParams,
    pub config: InnerConfig,
    pub grid: RadialGrid,
    /// `chi[k-1]` holds χ_k.
    pub chi: Vec<ComplexField>,
}

/// D_k as a conjugation-antisymmetric spinor (D_k, -conj D_k).
fn to_spinor(d: ComplexField) -> SpinorField {
    let dn = ComplexField::new(d.values.iter().map(|v| -v.conj()).collect(), d.parity);
    SpinorField::new(d, dn)
}

/// Forcing D_k from the previously computed χ_1..χ_{k-1}.
pub fn build_forcing(
    grid: &RadialGrid,
    params: &InnerParams,
    prev: &[ComplexField],
    k: usize,
) -> Result<SpinorField> {
    if k == 0 {
        return Err(CoreError::Domain("orders start at k = 1".into()));
    }
    if prev.len() + 1 < k {
        return Err(CoreError::Dependency(format!(
            "need χ_1..χ_{} before D_{k}",
            k - 1
        )));
    }
    let n = grid.len();
    let (nu, a0) = (params.nu, params.alpha0);
    if k == 1 {
        // D₁ = -α₀ W + iν W₁
        let d = ComplexField::from_fn(grid, Parity::Even, |r| {
            Complex64::new(-a0 * ground_state::w(r), nu * ground_state::w1(r))
        });
        return Ok(to_spinor(d));
    }
    // first-order part from χ_{k-1}
    let chi_prev = &prev[k - 2];
    let dchi = differentiate(grid, &chi_prev.values, chi_prev.parity, 1)?;
    let mut d = vec![Complex64::default(); n];
    let c1 = Complex64::new(-a0, -(1.0 + 2.0 * nu) * (k as f64 - 1.0));
    let inu = Complex64::new(0.0, nu);
    for i in 0..n {
        let scaled = 0.5 * chi_prev.values[i] + grid.nodes()[i] * dchi[i];
        d[i] = c1 * chi_prev.values[i] + inu * scaled;
    }
    // quintic part: order-k coefficient of (W+χ)³(W+χ̄)² with χ truncated
    // at order k-1 (the linear-in-χ_k terms cancel against 3W⁴χ + 2W⁴χ̄)
    let m = k - 1;
    let mut p = vec![vec![Complex64::default(); m + 1]; n];
    let mut qq = vec![vec![Complex64::default(); m + 1]; n];
    for i in 0..n {
        let wv = Complex64::new(ground_state::w(grid.nodes()[i]), 0.0);
        p[i][0] = wv;
        qq[i][0] = wv;
        for j in 1..=m {
            p[i][j] = prev[j - 1].values[i];
            qq[i][j] = prev[j - 1].values[i].conj();
        }
    }
    let conv = |a: &[Complex64], b: &[Complex64], keep: usize| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); keep + 1];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if i + j <= keep {
                    out[i + j] += ai * bj;
                }
            }
        }
        out
    };
    for i in 0..n {
        let p2 = conv(&p[i], &p[i], k);
        let p3 = conv(&p2, &p[i], k);
        let q2 = conv(&qq[i], &qq[i], k);
        let s = conv(&p3, &q2, k);
        d[i] += s[k];
    }
    Ok(to_spinor(ComplexField::new(d, Parity::Even)))
}

const GL4_X: [f64; 4] = [
    -0.861136311594053,
    -0.339981043584856,
    0.339981043584856,
    0.861136311594053,
];
const GL4_W: [f64; 4] = [
    0.347854845137454,
    0.652145154862546,
    0.652145154862546,
    0.347854845137454,
];

/// Cumulative ∫₀^{ρ_i} κ(s) g(s) ds where the kernel κ is known in closed
/// form and only the smooth forcing g is interpolated (cubic, per-panel).
///
/// Interpolating g rather than the product κg keeps the relative accuracy
/// of the integral near the origin, where κ vanishes like a power.
fn kernel_cumulative(grid: &RadialGrid, g: &[f64], kernel: impl Fn(f64) -> f64) -> Vec<f64> {
    let r = grid.nodes();
    let n = r.len();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..n - 1 {
        let lo = if i == 0 { 0 } else { (i - 1).min(n - 4) };
        let xs = &r[lo..lo + 4];
        let gs = &g[lo..lo + 4];
        let mid = 0.5 * (r[i] + r[i + 1]);
        let half = 0.5 * (r[i + 1] - r[i]);
        let mut panel = 0.0;
        for (xg, wg) in GL4_X.iter().zip(GL4_W.iter()) {
            let s = mid + half * xg;
            // cubic Lagrange interpolation of g at s
            let mut gi = 0.0;
            for j in 0..4 {
                let mut l = 1.0;
                for m in 0..4 {
                    if m != j {
                        l *= (s - xs[m]) / (xs[j] - xs[m]);
                    }
                }
                gi += l * gs[j];
            }
            panel += wg * kernel(s) * gi;
        }
        acc += panel * half;
        out.push(acc);
    }
    out
}

/// Variation of parameters for `L± v = g` with zero conditions at ρ = 0:
/// v(ρ) = -∫₀^ρ s²(Θ(ρ)Φ(s) - Θ(s)Φ(ρ)) g(s) ds.
pub fn vop_solve(grid: &RadialGrid, sign: LSign, g: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let (phi, rho2_theta, theta): (fn(f64) -> f64, fn(f64) -> f64, _) = match sign {
        LSign::Plus => (
            ground_state::w1,
            ground_state::rho2_theta_plus,
            ground_state::theta_plus as fn(f64) -> Result<f64>,
        ),
        LSign::Minus => (
            ground_state::w,
            ground_state::rho2_theta_minus,
            ground_state::theta_minus as fn(f64) -> Result<f64>,
        ),
    };
    let c_phi = kernel_cumulative(grid, g, |s| s * s * phi(s));
    let c_theta = kernel_cumulative(grid, g, rho2_theta);
    let mut v = vec![0.0; n];
    for i in 0..n {
        let r = grid.nodes()[i];
        if r == 0.0 {
            continue;
        }
        v[i] = -(theta(r).unwrap() * c_phi[i] - phi(r) * c_theta[i]);
    }
    v
}

/// Solve one order: χ_k = v_k⁺ + i v_k⁻ from the split forcing.
pub fn solve_chi_k(grid: &RadialGrid, forcing: &SpinorField) -> Result<ComplexField> {
    let d = &forcing.up;
    if d.len() != grid.len() {
        return Err(CoreError::Domain("forcing not on this grid".into()));
    }
    let g_plus: Vec<f64> = d.values.iter().map(|v| v.re).collect();
    let g_minus: Vec<f64> = d.values.iter().map(|v| v.im).collect();
    let vp = vop_solve(grid, LSign::Plus, &g_plus);
    let vm = vop_solve(grid, LSign::Minus, &g_minus);
    let values = vp
        .iter()
        .zip(vm.iter())
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    Ok(ComplexField::new(values, Parity::Even))
}

impl InnerSeries {
    /// Build χ_1..χ_N recursively on the given grid.
    pub fn build(grid: RadialGrid, params: InnerParams, config: InnerConfig) -> Result<Self> {
        config.validate(params.nu)?;
        let mut chi: Vec<ComplexField> = Vec::with_capacity(config.order);
        for k in 1..=config.order {
            let d = build_forcing(&grid, &params, &chi, k)?;
            chi.push(solve_chi_k(&grid, &d)?);
        }
        Ok(InnerSeries {
            params,
            config,
            grid,
            chi,
        })
    }

    /// u_in^ap(·, t) = W + Σ_{k≤N} t^{-k(1+2ν)} χ_k on the grid.
    pub fn assemble(&self, t: f64) -> Result<ComplexField> {
        if t < 10.0 {
            return Err(CoreError::Domain(format!(
                "t = {t} below the validity range of the expansion"
            )));
        }
        let tau = t.powf(-(1.0 + 2.0 * self.params.nu));
        let mut values: Vec<Complex64> = self
            .grid
            .nodes()
            .iter()
            .map(|&r| Complex64::new(ground_state::w(r), 0.0))
            .collect();
        let mut f = tau;
        for chi_k in &self.chi {
            for (v, c) in values.iter_mut().zip(chi_k.values.iter()) {
                *v += f * c;
            }
            f *= tau;
        }
        Ok(ComplexField::new(values, Parity::Even))
    }

    /// The correction χ^ap alone (no W), same truncation.
    pub fn assemble_chi(&self, t: f64) -> Result<ComplexField> {
        let u = self.assemble(t)?;
        let values = u
            .values
            .iter()
            .zip(self.grid.nodes())
            .map(|(v, &r)| v - ground_state::w(r))
            .collect();
        Ok(ComplexField::new(values, Parity::Even))
    }

    /// Pointwise residual of the modulated equation at time t,
    ///
    /// 𝓡 = -i t^{-2ν} ∂_t u - Δu + α₀ t^{-1-2ν} u
    ///     - iν t^{-1-2ν}(1/2 + ρ∂_ρ)u - |u|⁴u,
    ///
    /// with ∂_t taken analytically from the power-law time dependence.
    /// Returns the residual field together with the weighted norms
    /// ‖ρ^{-k}∂_ρ^l 𝓡‖_{L²(ρ²dρ)} over ρ ≤ 10 t^{1/2+ν-ε₁} for k+l ≤ 2.
    pub fn residual(&self, t: f64) -> Result<(ComplexField, Vec<ResidualNorm>)> {
        let u = self.assemble(t)?;
        let (nu, a0) = (self.params.nu, self.params.alpha0);
        let tau = t.powf(-(1.0 + 2.0 * nu));
        let n = self.grid.len();
        // analytic ∂_t u = Σ -k(1+2ν) t^{-k(1+2ν)-1} χ_k
        let mut ut = vec![Complex64::default(); n];
        let mut f = tau / t;
        for (k, chi_k) in self.chi.iter().enumerate() {
            let c = -((k + 1) as f64) * (1.0 + 2.0 * nu) * f;
            for (o, v) in ut.iter_mut().zip(chi_k.values.iter()) {
                *o += c * v;
            }
            f *= tau;
        }
        let du = differentiate(&self.grid, &u.values, Parity::Even, 1)?;
        let lap = u.laplacian(&self.grid)?;
        let t2nu = t.powf(-2.0 * nu);
        let tm = t.powf(-1.0 - 2.0 * nu);
        let mut res = vec![Complex64::default(); n];
        for i in 0..n {
            let r = self.grid.nodes()[i];
            let scaling = 0.5 * u.values[i] + r * du[i];
            res[i] = -Complex64::i() * t2nu * ut[i] - lap.values[i]
                + a0 * tm * u.values[i]
                - Complex64::i() * nu * tm * scaling
                - u.values[i].norm_sqr().powi(2) * u.values[i];
        }
        let field = ComplexField::new(res, Parity::Even);
        let rho_lim = self.config.rho_limit(nu, t);
        let norms = weighted_residual_norms(&self.grid, &field, rho_lim)?;
        Ok((field, norms))
    }
}

/// One entry of the residual report: ‖ρ^{-k}∂_ρ^l 𝓡‖_{L²(ρ²dρ, ρ≤ρ_lim)}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualNorm {
    pub weight_k: usize,
    pub deriv_l: usize,
    pub value: f64,
}

/// Weighted L² norms of a field for all k+l ≤ 2, restricted to ρ ≤ ρ_lim.
pub fn weighted_residual_norms(
    grid: &RadialGrid,
    f: &ComplexField,
    rho_lim: f64,
) -> Result<Vec<ResidualNorm>> {
    let d1 = differentiate(grid, &f.values, f.parity, 1)?;
    let d2 = differentiate(grid, &f.values, f.parity, 2)?;
    let pick = |l: usize, i: usize| match l {
        0 => f.values[i],
        1 => d1[i],
        _ => d2[i],
    };
    let mut out = Vec::new();
    for k in 0..=2usize {
        for l in 0..=(2 - k) {
            let mut sq = vec![0.0; grid.len()];
            for i in 0..grid.len() {
                let r = grid.nodes()[i];
                if r > rho_lim {
                    break;
                }
                if r == 0.0 && k > 0 {
                    // ρ^{-k} weight: the origin node carries zero measure
                    continue;
                }
                let w = if k == 0 { 1.0 } else { r.powi(-(k as i32)) };
                sq[i] = (pick(l, i) * w).norm_sqr();
            }
            let val = (FOUR_PI * grid.quad_r2(&sq)).sqrt();
            if !val.is_finite() {
                return Err(CoreError::Numeric(format!(
                    "non-finite weighted norm k={k} l={l}"
                )));
            }
            out.push(ResidualNorm {
                weight_k: k,
                deriv_l: l,
                value: val,
            });
        }
    }
    Ok(out)
}

/// Result of a large-ρ tail fit against the basis {(ln ρ)^l ρ^j}.
#[derive(Debug, Clone)]
pub struct TailFit {
    /// (l, j) → fitted coefficient.
    pub coeffs: BTreeMap<(usize, i32), Complex64>,
    /// Root-mean-square misfit over the window, relative to the field scale.
    pub rel_residual: f64,
}

impl TailFit {
    pub fn coeff(&self, l: usize, j: i32) -> Complex64 {
        self.coeffs.get(&(l, j)).copied().unwrap_or_default()
    }
}

/// Least-squares fit of `f` on [ρ_a, ρ_b] against (ln ρ)^l ρ^j,
/// l = 0..=l_max, j from `j_top(l)` down to `j_top(l) - depth + 1`.
///
/// For order-k profiles use `l_max = k`, `j_top(l) = 2k - 2l - 1`.
pub fn fit_tail_coeffs(
    grid: &RadialGrid,
    f: &ComplexField,
    l_max: usize,
    j_top: impl Fn(usize) -> i32,
    depth: usize,
    window: (f64, f64),
) -> Result<TailFit> {
    fit_tail_coeffs_filtered(grid, f, l_max, j_top, depth, window, |_, _| true)
}

/// [`fit_tail_coeffs`] with a column filter: only basis functions with
/// `keep(l, j)` participate.  Dropping columns that the expansion claims
/// are absent and checking that the misfit stays at the data-noise level is
/// a far better identifiability test than inspecting individual fitted
/// coefficients, which are strongly correlated on any finite window.
pub fn fit_tail_coeffs_filtered(
    grid: &RadialGrid,
    f: &ComplexField,
    l_max: usize,
    j_top: impl Fn(usize) -> i32,
    depth: usize,
    window: (f64, f64),
    keep: impl Fn(usize, i32) -> bool,
) -> Result<TailFit> {
    let (ra, rb) = window;
    let idx: Vec<usize> = grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r >= ra && r <= rb)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 8 {
        return Err(CoreError::Domain("fit window contains too few nodes".into()));
    }
    // requested (l, j) pairs, then the per-power closure over log orders
    let mut lmax_of_j: BTreeMap<i32, usize> = BTreeMap::new();
    for l in 0..=l_max {
        let top = j_top(l);
        for d in 0..depth {
            let j = top - d as i32;
            let e = lmax_of_j.entry(j).or_insert(l);
            *e = (*e).max(l);
        }
    }
    // centered basis L̂^m ρ̂^j with ρ̂ = ρ/c, L̂ = ln(ρ/c): the centering
    // removes the near-collinearity of (ln ρ)^l against pure powers
    let c = (ra * rb).sqrt();
    let lc = c.ln();
    let mut labels: Vec<(usize, i32)> = Vec::new();
    for (&j, &lm) in &lmax_of_j {
        for m in 0..=lm {
            if keep(m, j) {
                labels.push((m, j));
            }
        }
    }
    if labels.is_empty() {
        return Err(CoreError::Domain("column filter removed every basis function".into()));
    }
    let m_rows = idx.len();
    let ncols = labels.len();
    let mut a = nalgebra::DMatrix::<Complex64>::zeros(m_rows, ncols);
    let mut scales = vec![0.0f64; ncols];
    for (jc, &(m, j)) in labels.iter().enumerate() {
        let mut nrm = 0.0;
        for (ir, &i) in idx.iter().enumerate() {
            let r = grid.nodes()[i];
            let v = (r / c).ln().powi(m as i32) * (r / c).powi(j);
            a[(ir, jc)] = Complex64::new(v, 0.0);
            nrm += v * v;
        }
        let s = nrm.sqrt().max(1e-300);
        scales[jc] = s;
        for ir in 0..m_rows {
            a[(ir, jc)] /= Complex64::new(s, 0.0);
        }
    }
    let bv = nalgebra::DVector::<Complex64>::from_iterator(
        m_rows,
        idx.iter().map(|&i| f.values[i]),
    );
    let svd = a.clone().svd(true, true);
    let sol = svd
        .solve(&bv, 1e-14)
        .map_err(|e| CoreError::Conditioning(format!("tail fit: {e}")))?;
    let fit = &a * &sol;
    let scale_b = bv.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let rel_residual = (&fit - &bv).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / scale_b;
    // centered coefficients b_{m,j}, then the triangular back-transform
    // a_{l,j} = b_{l,j}/c^j - Σ_{l'>l} a_{l',j} C(l',l) (ln c)^{l'-l}
    let mut b_cent: BTreeMap<(usize, i32), Complex64> = BTreeMap::new();
    for (i, &(m, j)) in labels.iter().enumerate() {
        b_cent.insert((m, j), sol[i] / scales[i]);
    }
    let binom = |n: usize, k: usize| -> f64 {
        let mut v = 1.0;
        for i in 0..k {
            v *= (n - i) as f64 / (k - i) as f64;
        }
        v
    };
    let mut coeffs = BTreeMap::new();
    for (&j, &lm) in &lmax_of_j {
        let cj = c.powi(j);
        for l in (0..=lm).rev() {
            let mut v = b_cent.get(&(l, j)).copied().unwrap_or_default() / cj;
            for lp in l + 1..=lm {
                let prev: Complex64 = coeffs[&(lp, j)];
                v -= prev * binom(lp, l) * lc.powi((lp - l) as i32);
            }
            coeffs.insert((l, j), v);
        }
    }
    Ok(TailFit {
        coeffs,
        rel_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NormKind;

    fn test_grid() -> RadialGrid {
        RadialGrid::new(&GridSpec {
            zones: vec![
                Zone { start: 0.0, end: 20.0, count: 2001, law: SpacingLaw::Uniform },
                Zone { start: 20.0, end: 400.0, count: 1501, law: SpacingLaw::Geometric },
            ],
        })
        .unwrap()
    }

    fn cfg() -> InnerConfig {
        InnerConfig {
            order: 3,
            eps1: 1.0 / 27.0,
            fit_window: (40.0, 120.0),
        }
    }

    #[test]
    fn forcing_order_one() {
        let g = test_grid();
        // both parameters zero: D₁ = 0
        let p0 = InnerParams { nu: 0.0, alpha0: 0.0 };
        let d = build_forcing(&g, &p0, &[], 1).unwrap();
        assert!(d.up.values.iter().all(|v| v.norm() == 0.0));
        // α₀ only: D₁ = -0.1 W, purely real
        let p = InnerParams { nu: 0.0, alpha0: 0.1 };
        let d = build_forcing(&g, &p, &[], 1).unwrap();
        for (v, &r) in d.up.values.iter().zip(g.nodes()) {
            assert!((v.re + 0.1 * ground_state::w(r)).abs() < 1e-14);
            assert_eq!(v.im, 0.0);
        }
        // spinor structure: lower component is -conj(upper)
        for (u, dn) in d.up.values.iter().zip(d.dn.values.iter()) {
            assert_eq!(*dn, -u.conj());
        }
    }

    #[test]
    fn forcing_order_two_vanishes_without_chi1() {
        let g = test_grid();
        let p = InnerParams { nu: 0.05, alpha0: 0.1 };
        let zero_chi1 = ComplexField::from_fn(&g, Parity::Even, |_| Complex64::default());
        let d2 = build_forcing(&g, &p, &[zero_chi1], 2).unwrap();
        let sup = d2.up.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(sup < 1e-13, "D₂ sup {sup}");
    }

    #[test]
    fn zero_forcing_gives_zero_chi() {
        let g = test_grid();
        let zero = to_spinor(ComplexField::from_fn(&g, Parity::Even, |_| Complex64::default()));
        let chi = solve_chi_k(&g, &zero).unwrap();
        assert!(chi.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn chi1_solves_its_equation() {
        let g = test_grid();
        let p = InnerParams { nu: 0.05, alpha0: 0.1 };
        let d = build_forcing(&g, &p, &[], 1).unwrap();
        let chi1 = solve_chi_k(&g, &d).unwrap();
        // L₊ Re χ₁ - Re D₁ and L₋ Im χ₁ - Im D₁ vanish on the grid interior
        let re = ComplexField::new(
            chi1.values.iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
            Parity::Even,
        );
        let im = ComplexField::new(
            chi1.values.iter().map(|v| Complex64::new(v.im, 0.0)).collect(),
            Parity::Even,
        );
        let lp = ground_state::apply_l(LSign::Plus, &g, &re).unwrap();
        let lm = ground_state::apply_l(LSign::Minus, &g, &im).unwrap();
        let mut sup = 0.0f64;
        for i in 0..g.len() {
            if g.nodes()[i] > 150.0 {
                break; // geometric zone too coarse for the 1e-7 target
            }
            sup = sup.max((lp.values[i] - Complex64::new(d.up.values[i].re, 0.0)).norm());
            sup = sup.max((lm.values[i] - Complex64::new(d.up.values[i].im, 0.0)).norm());
        }
        assert!(sup < 1e-7, "defining ODE residual {sup}");
    }

    #[test]
    fn chi1_matches_explicit_integral() {
        // ν=0, α₀=0.1: Im χ₁ = 0 and Re χ₁ is the Θ₊/Φ₊ kernel integral of 0.1 W
        let g = test_grid();
        let p = InnerParams { nu: 0.0, alpha0: 0.1 };
        let d = build_forcing(&g, &p, &[], 1).unwrap();
        let chi1 = solve_chi_k(&g, &d).unwrap();
        for v in &chi1.values {
            assert_eq!(v.im, 0.0);
        }
        // spot check the quoted representation at a few radii by direct
        // fine-step quadrature
        for &rho in &[1.0f64, 5.0, 17.0] {
            let m = 20_000;
            let h = rho / m as f64;
            let mut acc = 0.0;
            for i in 0..m {
                let s0 = i as f64 * h;
                let s1 = s0 + h;
                let f = |s: f64| {
                    if s == 0.0 {
                        return 0.0;
                    }
                    s * s
                        * (ground_state::theta_plus(rho).unwrap() * ground_state::w1(s)
                            - ground_state::theta_plus(s).unwrap() * ground_state::w1(rho))
                        * ground_state::w(s)
                };
                acc += 0.5 * h * (f(s0) + f(s1));
            }
            let want = 0.1 * acc;
            let i = g.lower_bound(rho);
            assert!((g.nodes()[i] - rho).abs() < 1e-9);
            assert!(
                (chi1.values[i].re - want).abs() < 1e-6 * want.abs().max(1.0),
                "ρ={rho}: {} vs {want}",
                chi1.values[i].re
            );
        }
    }

    #[test]
    fn series_collapses_at_zero_parameters() {
        let g = test_grid();
        let p = InnerParams { nu: 0.0, alpha0: 0.0 };
        let s = InnerSeries::build(g, p, cfg()).unwrap();
        for chi_k in &s.chi {
            assert!(chi_k.values.iter().all(|v| v.norm() == 0.0));
        }
        let u = s.assemble(1000.0).unwrap();
        for (v, &r) in u.values.iter().zip(s.grid.nodes()) {
            assert_eq!(v.re, ground_state::w(r));
        }
        // and the residual reduces to the profile equation, identically small
        let (res, norms) = s.residual(1000.0).unwrap();
        let sup = res.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(sup < 1e-7, "residual sup {sup}");
        assert!(norms.iter().all(|n| n.value.is_finite()));
    }

    #[test]
    fn chi_k_starts_at_order_2k() {
        let g = test_grid();
        let p = InnerParams { nu: 0.05, alpha0: 0.1 };
        let s = InnerSeries::build(g, p, cfg()).unwrap();
        for (k0, chi_k) in s.chi.iter().enumerate() {
            let k = k0 + 1;
            // log-log slope over [0.02, 0.2]: close enough to the origin
            // that the ρ^{2k+2} curvature of the even series is negligible,
            // far enough that quadrature noise does not contaminate the ratio
            let i1 = s.grid.lower_bound(0.02);
            let i2 = s.grid.lower_bound(10.0 * s.grid.nodes()[i1]);
            let (r1, r2) = (s.grid.nodes()[i1], s.grid.nodes()[i2]);
            let (v1, v2) = (chi_k.values[i1].norm(), chi_k.values[i2].norm());
            let slope = (v2 / v1).ln() / (r2 / r1).ln();
            assert!(
                slope >= 2.0 * k as f64 - 0.1,
                "k={k}: origin slope {slope}"
            );
        }
    }

    #[test]
    fn zero_mode_freedom_is_absent() {
        // uniqueness: the homogeneous solutions Φ± are even but start at
        // order 0; any admixture would break the ρ^{2k} origin behavior
        // checked above.  Here just pin χ₁(0) = ∂χ₁(0) = 0 directly.
        let g = test_grid();
        let p = InnerParams { nu: 0.03, alpha0: -0.08 };
        let s = InnerSeries::build(g, p, cfg()).unwrap();
        let chi1 = &s.chi[0];
        assert_eq!(chi1.values[0], Complex64::default());
        let d = differentiate(&s.grid, &chi1.values, Parity::Even, 1).unwrap();
        assert!(d[0].norm() < 1e-10);
    }

    #[test]
    fn synthetic_tail_fit() {
        let g = test_grid();
        // χ = ρ + ρ^{-1} ln ρ exactly
        let f = ComplexField::from_fn(&g, Parity::None, |r| {
            if r == 0.0 {
                Complex64::default()
            } else {
                Complex64::new(r + r.ln() / r, 0.0)
            }
        });
        // the log columns are strongly correlated with neighboring powers on
        // any finite window, so recovery of those coefficients saturates
        // around the conditioning floor ~1e-7 even on a wide window
        let fit = fit_tail_coeffs(&g, &f, 1, |l| if l == 0 { 1 } else { -1 }, 5, (20.0, 380.0))
            .unwrap();
        assert!((fit.coeff(0, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        assert!((fit.coeff(1, -1) - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        // spurious coefficients are judged by their contribution over the
        // window: the min-norm solution can park a visible coefficient on a
        // deep negative power whose term is still at the noise floor
        for (&(l, j), c) in &fit.coeffs {
            if (l, j) != (0, 1) && (l, j) != (1, -1) {
                let contrib = [20.0f64, 380.0]
                    .iter()
                    .map(|&r| c.norm() * r.ln().powi(l as i32).abs() * r.powi(j))
                    .fold(0.0, f64::max);
                assert!(contrib < 1e-6, "spurious ({l},{j}) = {c}, contrib {contrib}");
            }
        }
    }

    #[test]
    fn w_tail_has_no_even_powers() {
        // W = √3/ρ - (3√3/2)ρ^{-3} + ... : fitted even-power coefficients ≈ 0
        let g = test_grid();
        let f = ComplexField::from_fn(&g, Parity::Even, |r| Complex64::new(ground_state::w(r), 0.0));
        let fit = fit_tail_coeffs(&g, &f, 0, |_| -1, 8, (20.0, 380.0)).unwrap();
        let sqrt3 = 3.0f64.sqrt();
        assert!((fit.coeff(0, -1) - Complex64::new(sqrt3, 0.0)).norm() < 1e-9);
        assert!((fit.coeff(0, -3) + Complex64::new(1.5 * sqrt3, 0.0)).norm() < 1e-6);
        // the absence of even powers is best seen structurally: a fit
        // restricted to odd powers still reproduces W to the noise floor
        let odd = fit_tail_coeffs_filtered(&g, &f, 0, |_| -1, 8, (20.0, 380.0), |_, j| {
            j.rem_euclid(2) == 1
        })
        .unwrap();
        assert!(odd.rel_residual < 1e-11, "odd-only misfit {}", odd.rel_residual);
        assert!((odd.coeff(0, -1) - Complex64::new(sqrt3, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn chi1_tail_log_structure() {
        // χ₁ tail: powers ρ^j, j ≤ 1, plus ln ρ times odd negative powers
        // only.  Individual subleading log coefficients are not identifiable
        // on a finite window, so the structural claim is tested by exclusion:
        // the basis without even-power log columns still fits to the noise
        // floor of the computed profile.
        let g = test_grid();
        let p = InnerParams { nu: 0.04, alpha0: 0.07 };
        let s = InnerSeries::build(g, p, cfg()).unwrap();
        let fit = fit_tail_coeffs_filtered(
            &s.grid,
            &s.chi[0],
            1,
            |l| 1 - 2 * l as i32,
            8,
            (20.0, 380.0),
            |l, j| l == 0 || j.rem_euclid(2) == 1,
        )
        .unwrap();
        assert!(fit.rel_residual < 1e-9, "fit residual {}", fit.rel_residual);
        // the leading linear growth is present and real-dominated
        let lead = fit.coeff(0, 1);
        assert!(lead.norm() > 1e-2, "leading ρ coefficient {lead}");
    }

    #[test]
    fn inner_sup_decay_rate() {
        // sup|χ^ap| ~ t^{-1/2-ν}: fit the slope over a decade of t
        let p = InnerParams { nu: 0.05, alpha0: 0.1 };
        let c = InnerConfig { order: 4, ..cfg() };
        let g = RadialGrid::new(&inner_grid_spec(&c, &p, 1e4)).unwrap();
        let s = InnerSeries::build(g, p, c).unwrap();
        let mut pts = Vec::new();
        for &t in &[1e2, 1e3, 1e4] {
            let chi = s.assemble_chi(t).unwrap();
            let lim = s.config.rho_limit(p.nu, t);
            let sup = chi
                .values
                .iter()
                .zip(s.grid.nodes())
                .filter(|(_, &r)| r <= lim)
                .map(|(v, _)| v.norm())
                .fold(0.0, f64::max);
            pts.push((t.ln(), sup.ln()));
        }
        let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
        // sup bound exponent -(1/2+ν): at desk-scale t the outer edge is
        // dominated by the highest retained order, which decays faster, so
        // the measured slope must sit at or below the bound
        let expect = -(0.5 + p.nu);
        assert!(
            slope <= expect + 0.05,
            "sup decay slope {slope} exceeds bound {expect}"
        );
    }

    #[test]
    fn residual_decay_rate() {
        let p = InnerParams { nu: 0.05, alpha0: 0.1 };
        let c = InnerConfig { order: 4, ..cfg() };
        let g = RadialGrid::new(&inner_grid_spec(&c, &p, 1e4)).unwrap();
        let s = InnerSeries::build(g, p, c).unwrap();
        let norm_at = |t: f64| {
            let (_, norms) = s.residual(t).unwrap();
            norms
                .iter()
                .find(|n| n.weight_k == 0 && n.deriv_l == 0)
                .unwrap()
                .value
        };
        let (n2, n4) = (norm_at(1e2), norm_at(1e4));
        let slope = (n4 / n2).ln() / (1e4f64 / 1e2).ln();
        let bound = -3.0 * (1.0 + 2.0 * p.nu) / 4.0
            - s.config.eps1 * (2.0 * s.config.order as f64 + 0.5)
            + 0.05;
        assert!(slope <= bound, "residual slope {slope} vs bound {bound}");
    }

    #[test]
    fn deeper_truncation_shrinks_residual() {
        let p = InnerParams { nu: 0.05, alpha0: 0.1 };
        let t = 1e2;
        // compare low orders on the core window ρ ≤ 3: at the outer edge
        // the extra order is amplified by the tail growth, and beyond order
        // ≈3 the residual hits the discretization floor, masking the
        // asymptotic t^{-(1+2ν)} gain
        let res_norm = |order: usize| {
            let c = InnerConfig { order, ..cfg() };
            let g = RadialGrid::new(&inner_grid_spec(&c, &p, t)).unwrap();
            let s = InnerSeries::build(g, p, c).unwrap();
            let (field, _) = s.residual(t).unwrap();
            weighted_residual_norms(&s.grid, &field, 3.0)
                .unwrap()
                .iter()
                .find(|n| n.weight_k == 0 && n.deriv_l == 0)
                .unwrap()
                .value
        };
        let (r1, r2) = (res_norm(1), res_norm(2));
        // one more order gains roughly a factor t^{-(1+2ν)}
        let gain = r2 / r1;
        let expect = t.powf(-(1.0 + 2.0 * p.nu));
        assert!(
            gain < 10.0 * expect && gain > 0.1 * expect,
            "gain {gain}, expected ≈ {expect}"
        );
    }

    #[test]
    fn chi_polynomial_in_parameters() {
        // χ₂ is a polynomial of joint degree ≤ 2 in (α₀, ν): interpolate on
        // a 4x4 parameter lattice and check an off-lattice point
        let g = RadialGrid::new(&GridSpec::uniform(30.0, 601)).unwrap();
        let c = InnerConfig { order: 2, ..cfg() };
        let lat: Vec<f64> = vec![-0.09, -0.03, 0.03, 0.09];
        let probe = 12.0;
        let ip = g.lower_bound(probe);
        let mut vals = vec![vec![Complex64::default(); 4]; 4];
        for (i, &a) in lat.iter().enumerate() {
            for (j, &nv) in lat.iter().enumerate() {
                let s = InnerSeries::build(
                    g.clone(),
                    InnerParams { nu: nv, alpha0: a },
                    c,
                )
                .unwrap();
                vals[i][j] = s.chi[1].values[ip];
            }
        }
        // 2-D Lagrange interpolation to (α₀,ν) = (0.05, -0.06)
        let (a_t, n_t) = (0.05, -0.06);
        let lag = |x: f64, m: usize| -> f64 {
            let mut p = 1.0;
            for q in 0..4 {
                if q != m {
                    p *= (x - lat[q]) / (lat[m] - lat[q]);
                }
            }
            p
        };
        let mut interp = Complex64::default();
        for i in 0..4 {
            for j in 0..4 {
                interp += vals[i][j] * lag(a_t, i) * lag(n_t, j);
            }
        }
        let s = InnerSeries::build(
            g.clone(),
            InnerParams { nu: n_t, alpha0: a_t },
            c,
        )
        .unwrap();
        let direct = s.chi[1].values[ip];
        assert!(
            (interp - direct).norm() < 1e-10 * direct.norm().max(1e-10),
            "interp {interp} direct {direct}"
        );
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate(0.05).is_ok());
        let bad = InnerConfig { eps1: 0.2, ..cfg() };
        assert!(bad.validate(0.0).is_err());
        let c27 = InnerConfig { order: 27, eps1: 1.0 / 27.0, fit_window: (40.0, 120.0) };
        assert!(c27.meets_matching_rate(0.0));
        assert!(!cfg().meets_matching_rate(0.0));
    }

    #[test]
    fn inner_l2_weighted_slopes() {
        // ‖ρ^{-k}∂^l χ^ap‖_{L²} ~ t^{-(1/2+ν)(k+l-1/2)}
        let p = InnerParams { nu: 0.05, alpha0: 0.1 };
        let c = InnerConfig { order: 4, ..cfg() };
        let g = RadialGrid::new(&inner_grid_spec(&c, &p, 1e4)).unwrap();
        let s = InnerSeries::build(g, p, c).unwrap();
        let norms_at = |t: f64| {
            let chi = s.assemble_chi(t).unwrap();
            weighted_residual_norms(&s.grid, &chi, s.config.rho_limit(p.nu, t)).unwrap()
        };
        let n2 = norms_at(1e2);
        let n4 = norms_at(1e4);
        for (a, b) in n2.iter().zip(n4.iter()) {
            let kl = (a.weight_k + a.deriv_l) as f64;
            let slope = (b.value / a.value).ln() / (1e4f64 / 1e2f64).ln();
            // upper-bound exponent; decay can only be faster at desk scale
            let expect = -(0.5 + p.nu) * (kl - 0.5);
            assert!(
                slope <= expect + 0.1,
                "k={} l={}: slope {slope} exceeds bound {expect}",
                a.weight_k,
                a.deriv_l
            );
        }
    }

    #[test]
    fn sup_norm_report_is_consistent() {
        let g = test_grid();
        let p = InnerParams { nu: 0.02, alpha0: 0.05 };
        let s = InnerSeries::build(g, p, cfg()).unwrap();
        let chi = s.assemble_chi(200.0).unwrap();
        let n = chi.norm(&s.grid, NormKind::SupWeighted(0.0)).unwrap();
        let sup = chi.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((n - sup).abs() < 1e-14);
    }
}
