//! Remote region and global assembly.
//!
//! The remote profile is v₁ + v₂ + v₃ built from the oscillatory basis at
//! the self-similar μ's, the forced tail g₁ and the multiplier
//! z(ξ) = d₂⁰|ξ|^{-2iα₀-2+ν} + d₂¹|ξ|^{-2iα₀-1+3ν}
//!        - (d₂²(2ν+1)ln|ξ| - λ₂)|ξ|^{-2iα₀+5ν}.
//! The three regions are glued by smooth radial cutoffs into a single
//! approximate solution whose residual R = -iψ_t - Δψ - |ψ|⁴ψ is computed
//! with analytic time derivatives and split into the seam/region/nonlinear
//! diagnostics E₁..E₄.
//!
//! Everything that oscillates like e^{iy²/4} is stored and interpolated as
//! a smooth envelope with the phase reattached exactly; otherwise the
//! interpolation sawtooth, amplified by the finite-difference Laplacian,
//! drowns the residual.

use num_complex::Complex64;

use crate::cutoff::ScaledBump;
use crate::error::{CoreError, Result};
use crate::field::{differentiate, ComplexField, Parity, FOUR_PI};
use crate::grid::{GridSpec, RadialGrid, SpacingLaw, Zone};
use crate::ground_state;
use crate::inner::{InnerParams, InnerSeries};
use crate::jet::Jet4;
use crate::oscquad::filon;
use crate::self_similar::{mu_n, AsymBasis, BasisSamples, SSSystem};

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Six-point local Lagrange interpolation on the grid (quintic accuracy,
/// clamped at the ends).
fn interp6(grid: &RadialGrid, v: &[Complex64], y: f64) -> Complex64 {
    let nodes = grid.nodes();
    let n = nodes.len();
    let i = grid.lower_bound(y);
    let lo = i.saturating_sub(2).min(n - 6);
    let xs = &nodes[lo..lo + 6];
    let fs = &v[lo..lo + 6];
    let mut acc = Complex64::default();
    for j in 0..6 {
        let mut w = 1.0;
        for k in 0..6 {
            if k != j {
                w *= (y - xs[k]) / (xs[j] - xs[k]);
            }
        }
        acc += fs[j] * w;
    }
    acc
}

/// Connection constants feeding the remote profiles, imported from the
/// self-similar matching.
#[derive(Debug, Clone, Copy)]
pub struct RemoteCoeffs {
    pub d1_0: Complex64,
    pub d1_1: Complex64,
    pub d2_0: Complex64,
    pub d2_1: Complex64,
    pub d2_2: Complex64,
    pub lambda2: Complex64,
}

impl RemoteCoeffs {
    pub fn from_system(sys: &SSSystem) -> Self {
        RemoteCoeffs {
            d1_0: sys.a00.d1,
            d1_1: sys.a10.d1,
            d2_0: sys.a00.d2,
            d2_1: sys.a10.d2,
            d2_2: sys.a21.d2,
            lambda2: sys.lambda2,
        }
    }

    pub fn zero() -> Self {
        RemoteCoeffs {
            d1_0: Complex64::default(),
            d1_1: Complex64::default(),
            d2_0: Complex64::default(),
            d2_1: Complex64::default(),
            d2_2: Complex64::default(),
            lambda2: Complex64::default(),
        }
    }
}

/// Basis pair at one μ: M₁ sampled directly (smooth), M₂ as the envelope
/// M₂ e^{-iy²/4}, both (value, derivative) on the module grid, continued by
/// the asymptotic series beyond it.
#[derive(Debug, Clone)]
struct BasisTab {
    mu: Complex64,
    m1: Vec<(Complex64, Complex64)>,
    m2env: Vec<(Complex64, Complex64)>,
}

/// Quintic smoothstep weight toward the asymptotic route over the last
/// stretch of the tabulated grid.  A hard switch at the grid edge leaves a
/// defect at the series-truncation level (~1e-12) which the assembled
/// Laplacian amplifies into a grid-scale residual spike.
const BLEND_WIDTH: f64 = 4.0;

fn route_blend(y: f64, ymax: f64) -> Option<(f64, f64)> {
    let y0 = ymax - BLEND_WIDTH;
    if y <= y0 {
        return None;
    }
    let u = ((y - y0) / BLEND_WIDTH).min(1.0);
    let s = u * u * u * (10.0 + u * (6.0 * u - 15.0));
    let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u) / BLEND_WIDTH;
    Some((s, ds))
}

fn blend_jets(
    tab: (Complex64, Complex64),
    asym: (Complex64, Complex64),
    sw: (f64, f64),
) -> (Complex64, Complex64) {
    let (s, ds) = sw;
    let dv = asym.0 - tab.0;
    (tab.0 + s * dv, tab.1 + s * (asym.1 - tab.1) + ds * dv)
}

impl BasisTab {
    fn fill_envelope(&mut self, grid: &RadialGrid, m2: &[(Complex64, Complex64)]) {
        self.m2env = grid
            .nodes()
            .iter()
            .zip(m2.iter())
            .map(|(&y, &(v, d))| {
                let ph = Complex64::new(0.0, -y * y / 4.0).exp();
                (v * ph, (d - Complex64::new(0.0, 0.5 * y) * v) * ph)
            })
            .collect();
    }

    fn m1_at(&self, grid: &RadialGrid, y: f64) -> Result<(Complex64, Complex64)> {
        if y > grid.r_max() {
            return AsymBasis { mu: self.mu }.m1(y);
        }
        let v = interp6(grid, &self.m1.iter().map(|p| p.0).collect::<Vec<_>>(), y);
        let d = interp6(grid, &self.m1.iter().map(|p| p.1).collect::<Vec<_>>(), y);
        match route_blend(y, grid.r_max()) {
            None => Ok((v, d)),
            Some(sw) => Ok(blend_jets((v, d), AsymBasis { mu: self.mu }.m1(y)?, sw)),
        }
    }

    fn m2_at(&self, grid: &RadialGrid, y: f64) -> Result<(Complex64, Complex64)> {
        let (env, denv) = if y <= grid.r_max() {
            let tab = (
                interp6(grid, &self.m2env.iter().map(|p| p.0).collect::<Vec<_>>(), y),
                interp6(grid, &self.m2env.iter().map(|p| p.1).collect::<Vec<_>>(), y),
            );
            match route_blend(y, grid.r_max()) {
                None => tab,
                Some(sw) => blend_jets(tab, AsymBasis { mu: self.mu }.m2_envelope(y)?, sw),
            }
        } else {
            AsymBasis { mu: self.mu }.m2_envelope(y)?
        };
        let ph = Complex64::new(0.0, y * y / 4.0).exp();
        Ok((env * ph, (denv + Complex64::new(0.0, 0.5 * y) * env) * ph))
    }
}

/// The remote-region evaluator ψ^ap_out = v₁ + v₂ + v₃.
#[derive(Debug, Clone)]
pub struct RemoteProfile {
    pub params: InnerParams,
    pub delta: f64,
    pub eps2: f64,
    pub coeffs: RemoteCoeffs,
    grid: RadialGrid,
    tabs: [BasisTab; 3],
    g1env: Vec<(Complex64, Complex64)>,
}

impl RemoteProfile {
    pub fn from_system(sys: &SSSystem, delta: f64) -> Result<Self> {
        let b1 = BasisSamples::build(&sys.grid, mu_n(&sys.params, 1))?;
        Self::from_parts(sys, delta, &b1)
    }

    fn from_parts(sys: &SSSystem, delta: f64, b1: &BasisSamples) -> Result<Self> {
        if delta <= 0.0 || delta > 1.0 {
            return Err(CoreError::Config(format!("delta = {delta} out of (0, 1]")));
        }
        let tab = |b: &BasisSamples| {
            let mut t = BasisTab {
                mu: b.mu,
                m1: b.m1.clone(),
                m2env: Vec::new(),
            };
            t.fill_envelope(&sys.grid, &b.m2);
            t
        };
        let g1env = sys
            .grid
            .nodes()
            .iter()
            .zip(sys.g1.iter())
            .map(|(&y, &(v, d))| {
                let ph = Complex64::new(0.0, -y * y / 4.0).exp();
                (v * ph, (d - Complex64::new(0.0, 0.5 * y) * v) * ph)
            })
            .collect();
        Ok(RemoteProfile {
            params: sys.params,
            delta,
            eps2: sys.config.eps2,
            coeffs: RemoteCoeffs::from_system(sys),
            grid: sys.grid.clone(),
            tabs: [tab(&sys.basis0), tab(b1), tab(&sys.basis2)],
            g1env,
        })
    }

    /// Replace the connection constants (test hook; zeroed coefficients give
    /// an identically vanishing profile).
    pub fn with_coeffs(mut self, coeffs: RemoteCoeffs) -> Self {
        self.coeffs = coeffs;
        self
    }

    fn bump(&self) -> ScaledBump {
        ScaledBump::new(self.delta)
    }

    /// Power-law envelope continuation y^{-2+5ν-2iα₀} anchored at the top
    /// of the grid.
    fn g1_tail(&self, y: f64) -> (Complex64, Complex64) {
        let itop = self.grid.len() - 1;
        let ytop = self.grid.r_max();
        let pw = Complex64::new(-2.0 + 5.0 * self.params.nu, -2.0 * self.params.alpha0);
        let env = self.g1env[itop].0 * (cplx((y / ytop).ln()) * pw).exp();
        (env, env * pw / y)
    }

    fn g1_at(&self, y: f64) -> (Complex64, Complex64) {
        let (env, denv) = if y <= self.grid.r_max() {
            let tab = (
                interp6(
                    &self.grid,
                    &self.g1env.iter().map(|p| p.0).collect::<Vec<_>>(),
                    y,
                ),
                interp6(
                    &self.grid,
                    &self.g1env.iter().map(|p| p.1).collect::<Vec<_>>(),
                    y,
                ),
            );
            match route_blend(y, self.grid.r_max()) {
                None => tab,
                Some(sw) => blend_jets(tab, self.g1_tail(y), sw),
            }
        } else {
            self.g1_tail(y)
        };
        let ph = Complex64::new(0.0, y * y / 4.0).exp();
        (env * ph, (denv + Complex64::new(0.0, 0.5 * y) * env) * ph)
    }

    /// The multiplier z and its first two ξ-derivatives.
    pub fn z_jet(&self, xi: f64) -> (Complex64, Complex64, Complex64) {
        let nu = self.params.nu;
        let a0 = self.params.alpha0;
        let c = &self.coeffs;
        let mut v = Complex64::default();
        let mut d1 = Complex64::default();
        let mut d2 = Complex64::default();
        let mut power = |coef: Complex64, a: Complex64| {
            let p = (a * xi.ln()).exp();
            v += coef * p;
            d1 += coef * a * p / xi;
            d2 += coef * a * (a - 1.0) * p / (xi * xi);
        };
        let tw = Complex64::new(0.0, -2.0 * a0);
        power(c.d2_0, tw + cplx(-2.0 + nu));
        power(c.d2_1, tw + cplx(-1.0 + 3.0 * nu));
        // -(d₂²(2ν+1)ln ξ - λ₂) ξ^{-2iα₀+5ν}
        let a3 = tw + cplx(5.0 * nu);
        let lc = -c.d2_2 * (2.0 * nu + 1.0);
        power(lc * xi.ln() + c.lambda2, a3);
        // extra pieces from differentiating the logarithm
        let p3 = (a3 * xi.ln()).exp();
        d1 += lc * p3 / xi;
        d2 += lc * p3 / (xi * xi) * (2.0 * a3 - 1.0);
        (v, d1, d2)
    }

    pub fn z(&self, xi: f64) -> Complex64 {
        self.z_jet(xi).0
    }

    /// v̂₃(ξ) = -i z ΔΘ_δ - 2i z' Θ_δ'.
    pub fn v_hat3(&self, xi: f64) -> Complex64 {
        let j = self.bump().jet(xi);
        if j.deriv(1) == 0.0 && j.deriv(2) == 0.0 {
            return Complex64::default();
        }
        let (z, zp, _) = self.z_jet(xi);
        let lap = j.deriv(2) + 2.0 * j.deriv(1) / xi;
        -Complex64::i() * (z * lap + 2.0 * zp * j.deriv(1))
    }

    fn v_hat3_jet(&self, xi: f64) -> (Complex64, Complex64) {
        let j = self.bump().jet(xi);
        if (1..=3).all(|k| j.deriv(k) == 0.0) {
            return (Complex64::default(), Complex64::default());
        }
        let (z, zp, zpp) = self.z_jet(xi);
        let lap = j.deriv(2) + 2.0 * j.deriv(1) / xi;
        let lap_p = j.deriv(3) + 2.0 * j.deriv(2) / xi - 2.0 * j.deriv(1) / (xi * xi);
        let v = -Complex64::i() * (z * lap + 2.0 * zp * j.deriv(1));
        let d = -Complex64::i()
            * (zp * lap + z * lap_p + 2.0 * zpp * j.deriv(1) + 2.0 * zp * j.deriv(2));
        (v, d)
    }

    /// v₁ and its analytic time derivative at radius r.
    pub fn v1(&self, r: f64, t: f64) -> Result<(Complex64, Complex64)> {
        let a0 = self.params.alpha0;
        let nu = self.params.nu;
        let c = &self.coeffs;
        if c.d1_0.norm() == 0.0 && c.d1_1.norm() == 0.0 {
            return Ok((Complex64::default(), Complex64::default()));
        }
        let y = r / t.sqrt();
        let ph = Complex64::new(0.0, a0 * t.ln()).exp();
        let (p0, p1) = (-(1.0 + nu) / 2.0, -(2.0 + 3.0 * nu) / 2.0);
        let (f0, f0d) = self.tabs[0].m1_at(&self.grid, y)?;
        let (f1, f1d) = self.tabs[1].m1_at(&self.grid, y)?;
        let a = c.d1_0 * t.powf(p0);
        let b = c.d1_1 * t.powf(p1);
        let v = ph * (a * f0 + b * f1);
        let vt = ph
            * (Complex64::new(0.0, a0 / t) * (a * f0 + b * f1)
                + (p0 * a * f0 + p1 * b * f1) / t
                + (a * f0d + b * f1d) * (-y / (2.0 * t)));
        Ok((v, vt))
    }

    /// v₂ and its analytic time derivative.
    pub fn v2(&self, r: f64, t: f64) -> Result<(Complex64, Complex64)> {
        let a0 = self.params.alpha0;
        let nu = self.params.nu;
        let c = &self.coeffs;
        let xi = r / t;
        let th = self.bump().jet(xi);
        if th.value() == 0.0 {
            return Ok((Complex64::default(), Complex64::default()));
        }
        let y = r / t.sqrt();
        let ph = Complex64::new(0.0, a0 * t.ln()).exp();
        let (p0, p1, p2) = (
            -(1.0 + nu) / 2.0,
            -(2.0 + 3.0 * nu) / 2.0,
            -(3.0 + 5.0 * nu) / 2.0,
        );
        let (f0, f0d) = self.tabs[0].m2_at(&self.grid, y)?;
        let (f1, f1d) = self.tabs[1].m2_at(&self.grid, y)?;
        let (f2, f2d) = self.tabs[2].m2_at(&self.grid, y)?;
        let (g1, g1d) = self.g1_at(y);
        let a = c.d2_0 * t.powf(p0);
        let b = c.d2_1 * t.powf(p1);
        let t2 = t.powf(p2);
        let lnc = c.d2_2 * (2.0 * nu + 1.0);
        let logf = lnc * xi.ln() - c.lambda2;
        let bracket = a * f0 + b * f1 + t2 * (c.d2_2 * g1 - logf * f2);
        let dydt = -y / (2.0 * t);
        let bracket_t = (p0 * a * f0 + p1 * b * f1 + p2 * t2 * (c.d2_2 * g1 - logf * f2)) / t
            + (a * f0d + b * f1d) * dydt
            + t2 * (c.d2_2 * g1d * dydt + lnc / t * f2 - logf * f2d * dydt);
        let v = cplx(th.value()) * ph * bracket;
        let theta_t = -th.deriv(1) * xi / t;
        let vt = cplx(theta_t) * ph * bracket
            + cplx(th.value()) * ph * (Complex64::new(0.0, a0 / t) * bracket + bracket_t);
        Ok((v, vt))
    }

    /// v₃ and its analytic time derivative.
    pub fn v3(&self, r: f64, t: f64) -> (Complex64, Complex64) {
        let xi = r / t;
        let (h, hd) = self.v_hat3_jet(xi);
        if h.norm() == 0.0 && hd.norm() == 0.0 {
            return (Complex64::default(), Complex64::default());
        }
        let osc = Complex64::new(0.0, r * r / (4.0 * t)).exp();
        let pre = t.powf(-2.5) * osc;
        let v = pre * h;
        let vt = v * Complex64::new(-2.5 / t, -r * r / (4.0 * t * t)) + pre * hd * (-r / (t * t));
        (v, vt)
    }

    /// The stationary-phase principal part v_{2,0} of v₂.
    pub fn v20(&self, r: f64, t: f64) -> Complex64 {
        self.v20_jet(r, t).0
    }

    /// v_{2,0} together with its radial derivative.
    pub fn v20_jet(&self, r: f64, t: f64) -> (Complex64, Complex64) {
        let xi = r / t;
        let th = self.bump().jet(xi);
        if th.value() == 0.0 && th.deriv(1) == 0.0 {
            return (Complex64::default(), Complex64::default());
        }
        let (z, zp, _) = self.z_jet(xi);
        let pre = Complex64::new(0.0, r * r / (4.0 * t)).exp() * t.powf(-1.5);
        let v = pre * th.value() * z;
        let d = v * Complex64::new(0.0, r / (2.0 * t))
            + pre * (th.deriv(1) * z + th.value() * zp) / t;
        (v, d)
    }

    /// ψ^ap_out in the remote region (domain-checked).
    pub fn eval(&self, r: f64, t: f64) -> Result<Complex64> {
        if r < 0.05 * t.powf(0.5 + self.eps2) {
            return Err(CoreError::Domain(format!(
                "r = {r} below the remote region at t = {t}"
            )));
        }
        Ok(self.eval_jet(r, t)?.0)
    }

    /// Value and time derivative without the domain gate (gluing internals).
    pub fn eval_jet(&self, r: f64, t: f64) -> Result<(Complex64, Complex64)> {
        let (a, at) = self.v1(r, t)?;
        let (b, bt) = self.v2(r, t)?;
        let (c, ct) = self.v3(r, t);
        Ok((a + b + c, at + bt + ct))
    }
}

/// Frequency-side data of ζ* and its spatial samples.
#[derive(Debug, Clone)]
pub struct ZetaStar {
    pub x_grid: RadialGrid,
    pub values: Vec<Complex64>,
    /// (s, ‖ζ*‖_{Ḣ^s}) rows.
    pub hs_norms: Vec<(f64, f64)>,
}

fn zeta_k_grid(delta: f64, t: f64) -> Result<RadialGrid> {
    let n2 = ((10.0 * t * delta * delta / (2.0 * std::f64::consts::PI)).ceil() as usize)
        .clamp(3000, 200_000);
    RadialGrid::new(&GridSpec {
        zones: vec![
            Zone {
                start: 1e-9 * delta,
                end: 0.05 * delta,
                count: 2201,
                law: SpacingLaw::Geometric,
            },
            Zone {
                start: 0.05 * delta,
                end: delta,
                count: n2,
                law: SpacingLaw::Uniform,
            },
        ],
    })
}

/// Radial Fourier synthesis (4π/r)·c·∫ sin(kr) e^{-itk²} G(k) k dk with
/// G(k) = Θ_δ(2k) z(2k) and c = π^{-3/2} e^{3iπ/4}; t = 0 gives ζ* itself.
/// Returns (value, radial derivative) pairs.
fn fourier_synthesis(
    profile: &RemoteProfile,
    x_grid: &RadialGrid,
    t: f64,
) -> Result<(RadialGrid, Vec<(Complex64, Complex64)>)> {
    let kg = zeta_k_grid(profile.delta, t)?;
    let nodes = kg.nodes();
    let bump = ScaledBump::new(profile.delta);
    let f: Vec<Complex64> = nodes
        .iter()
        .map(|&k| {
            let g = bump.value(2.0 * k) * profile.z(2.0 * k);
            g * k * Complex64::new(0.0, -t * k * k).exp()
        })
        .collect();
    let fk: Vec<Complex64> = nodes.iter().zip(f.iter()).map(|(&k, &v)| v * k).collect();
    let c = std::f64::consts::PI.powf(-1.5)
        * Complex64::new(0.0, 3.0 * std::f64::consts::FRAC_PI_4).exp();
    let mut out = Vec::with_capacity(x_grid.len());
    for &r in x_grid.nodes() {
        let sine = (filon(nodes, &f, r)? - filon(nodes, &f, -r)?) / Complex64::new(0.0, 2.0);
        let cosine = (filon(nodes, &fk, r)? + filon(nodes, &fk, -r)?) / 2.0;
        let v = c * FOUR_PI / r * sine;
        let d = -v / r + c * FOUR_PI / r * cosine;
        out.push((v, d));
    }
    Ok((kg, out))
}

/// ζ*(x) = π^{-3/2} e^{3iπ/4} ∫ dξ e^{ixξ} Θ_δ(2ξ) z(2ξ), sampled on the
/// given radial grid, with Ḣ^s norms computed on the frequency side.
pub fn zeta_star(profile: &RemoteProfile, x_grid: &RadialGrid) -> Result<ZetaStar> {
    let (kg, pairs) = fourier_synthesis(profile, x_grid, 0.0)?;
    let values = pairs.into_iter().map(|p| p.0).collect();
    let bump = ScaledBump::new(profile.delta);
    let mut hs_norms = Vec::new();
    for s in [0.5 - profile.params.nu + 0.1, 1.0, 2.0] {
        let integrand: Vec<f64> = kg
            .nodes()
            .iter()
            .map(|&k| {
                let g = bump.value(2.0 * k) * profile.z(2.0 * k);
                k.powf(2.0 * s + 2.0) * g.norm_sqr()
            })
            .collect();
        let val = (32.0 * std::f64::consts::PI * kg.quad_dr(&integrand)).sqrt();
        hs_norms.push((s, val));
    }
    Ok(ZetaStar {
        x_grid: x_grid.clone(),
        values,
        hs_norms,
    })
}

/// e^{itΔ}ζ* on the given radial grid (oscillatory quadrature in k).
pub fn free_evolution(
    profile: &RemoteProfile,
    x_grid: &RadialGrid,
    t: f64,
) -> Result<Vec<Complex64>> {
    Ok(free_evolution_jet(profile, x_grid, t)?
        .into_iter()
        .map(|p| p.0)
        .collect())
}

/// e^{itΔ}ζ* together with its radial derivative.
pub fn free_evolution_jet(
    profile: &RemoteProfile,
    x_grid: &RadialGrid,
    t: f64,
) -> Result<Vec<(Complex64, Complex64)>> {
    Ok(fourier_synthesis(profile, x_grid, t)?.1)
}

/// Demodulated self-similar profile tabs: each A_{n,l} minus its sampled
/// M₂ (and g₁) content, leaving smooth tables, with the subtracted parts
/// reattached through the exact phase at evaluation time.
#[derive(Debug, Clone)]
struct DemodSS {
    a00s: Vec<(Complex64, Complex64)>,
    a10s: Vec<(Complex64, Complex64)>,
    a21s: Vec<(Complex64, Complex64)>,
    a20r: Vec<(Complex64, Complex64)>,
}

impl DemodSS {
    fn build(sys: &SSSystem, b1: &BasisSamples) -> Self {
        let sub = |samples: &[Complex64],
                   dsamples: &[Complex64],
                   d2: Complex64,
                   m2: &[(Complex64, Complex64)]| {
            samples
                .iter()
                .zip(dsamples.iter())
                .zip(m2.iter())
                .map(|((&v, &d), &(m, dm))| (v - d2 * m, d - d2 * dm))
                .collect::<Vec<_>>()
        };
        let a00s = sub(
            &sys.a00.samples,
            &sys.a00.dsamples,
            sys.a00.d2,
            &sys.basis0.m2,
        );
        let a10s = sub(&sys.a10.samples, &sys.a10.dsamples, sys.a10.d2, &b1.m2);
        let a21s = sub(
            &sys.a21.samples,
            &sys.a21.dsamples,
            sys.a21.d2,
            &sys.basis2.m2,
        );
        let nu = sys.params.nu;
        let c2 = -2.0 * (nu + 1.0) * sys.a21.d2;
        let d22 = sys.a21.d2;
        let a20r = sys
            .grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let (m2, dm2) = sys.basis2.m2[i];
                let (g1, dg1) = sys.g1[i];
                let log = c2 * y.ln() + sys.lambda2;
                (
                    sys.a20.samples[i] - (log * m2 + d22 * g1),
                    sys.a20.dsamples[i] - (c2 / y * m2 + log * dm2 + d22 * dg1),
                )
            })
            .collect();
        DemodSS {
            a00s,
            a10s,
            a21s,
            a20r,
        }
    }
}

/// The glued global approximation.
#[derive(Debug, Clone)]
pub struct GlobalApprox {
    pub params: InnerParams,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
    /// Grid-density multiplier for refinement studies.
    pub res_factor: f64,
    pub inner: InnerSeries,
    pub ss: SSSystem,
    pub remote: RemoteProfile,
    demod: DemodSS,
}

impl GlobalApprox {
    pub fn new(inner: InnerSeries, ss: SSSystem, delta: f64) -> Result<Self> {
        if (inner.params.nu - ss.params.nu).abs() > 1e-14
            || (inner.params.alpha0 - ss.params.alpha0).abs() > 1e-14
        {
            return Err(CoreError::Config(
                "inner and self-similar parameter packs differ".into(),
            ));
        }
        let b1 = BasisSamples::build(&ss.grid, mu_n(&ss.params, 1))?;
        let remote = RemoteProfile::from_parts(&ss, delta, &b1)?;
        let demod = DemodSS::build(&ss, &b1);
        Ok(GlobalApprox {
            params: inner.params,
            eps1: inner.config.eps1,
            eps2: ss.config.eps2,
            delta,
            res_factor: 1.0,
            inner,
            ss,
            remote,
            demod,
        })
    }

    /// Earliest time with ordered region boundaries t^{1/2-ε₁} < t^{1/2+ε₂} < δt.
    pub fn t_valid(&self) -> f64 {
        (1.0 / self.delta).powf(1.0 / (0.5 - self.eps2))
    }

    fn seam_radii(&self, t: f64) -> (f64, f64) {
        (t.powf(0.5 - self.eps1), t.powf(0.5 + self.eps2))
    }

    /// A_{n,l} and its y-derivative via the demodulated tabs (origin series
    /// below y = 1, asymptotic representation beyond the module grid).
    fn profile_jet_ss(&self, which: (usize, usize), y: f64) -> Result<(Complex64, Complex64)> {
        let grid = &self.ss.grid;
        if y <= 1.0 || y > grid.r_max() {
            return self.ss.profile_jet(which, y);
        }
        let blend = route_blend(y, grid.r_max());
        let pick = |tab: &[(Complex64, Complex64)]| {
            (
                interp6(grid, &tab.iter().map(|p| p.0).collect::<Vec<_>>(), y),
                interp6(grid, &tab.iter().map(|p| p.1).collect::<Vec<_>>(), y),
            )
        };
        let base = match which {
            (0, 0) => {
                let (s, sd) = pick(&self.demod.a00s);
                let (m2, dm2) = self.remote.tabs[0].m2_at(grid, y)?;
                (s + self.ss.a00.d2 * m2, sd + self.ss.a00.d2 * dm2)
            }
            (1, 0) => {
                let (s, sd) = pick(&self.demod.a10s);
                let (m2, dm2) = self.remote.tabs[1].m2_at(grid, y)?;
                (s + self.ss.a10.d2 * m2, sd + self.ss.a10.d2 * dm2)
            }
            (2, 1) => {
                let (s, sd) = pick(&self.demod.a21s);
                let (m2, dm2) = self.remote.tabs[2].m2_at(grid, y)?;
                (s + self.ss.a21.d2 * m2, sd + self.ss.a21.d2 * dm2)
            }
            (2, 0) => {
                let (s, sd) = pick(&self.demod.a20r);
                let (m2, dm2) = self.remote.tabs[2].m2_at(grid, y)?;
                let (g1, dg1) = self.remote.g1_at(y);
                let nu = self.params.nu;
                let c2 = -2.0 * (nu + 1.0) * self.ss.a21.d2;
                let d22 = self.ss.a21.d2;
                let log = c2 * y.ln() + self.ss.lambda2;
                (
                    s + log * m2 + d22 * g1,
                    sd + c2 / y * m2 + log * dm2 + d22 * dg1,
                )
            }
            _ => return Err(CoreError::Domain("unknown profile label".into())),
        };
        match blend {
            None => Ok(base),
            Some(sw) => Ok(blend_jets(base, self.ss.profile_jet_asym(which, y)?, sw)),
        }
    }

    /// w^ap_ss with (∂_y w, ∂_t w) through the demodulated profile route.
    fn w_jet(&self, y: f64, t: f64) -> Result<(Complex64, Complex64, Complex64)> {
        let nu = self.params.nu;
        let opc = 1.0 + 2.0 * nu;
        let tq = t.powf(-opc / 4.0);
        let (t1, t3, t5) = (tq, tq.powi(3), tq.powi(5));
        let (dt1, dt3, dt5) = (
            t1 * (-opc / 4.0) / t,
            t3 * (-3.0 * opc / 4.0) / t,
            t5 * (-5.0 * opc / 4.0) / t,
        );
        let log_arg = y.ln() + (0.5 + nu) * t.ln();
        let (a00, a00d) = self.profile_jet_ss((0, 0), y)?;
        let (a10, a10d) = self.profile_jet_ss((1, 0), y)?;
        let (a21, a21d) = self.profile_jet_ss((2, 1), y)?;
        let (a20, a20d) = self.profile_jet_ss((2, 0), y)?;
        let w = t1 * a00 + t3 * a10 + t5 * (a20 + log_arg * a21);
        let wy = t1 * a00d + t3 * a10d + t5 * (a20d + log_arg * a21d + a21 / y);
        let wt =
            dt1 * a00 + dt3 * a10 + dt5 * (a20 + log_arg * a21) + t5 * (0.5 + nu) / t * a21;
        Ok((w, wy, wt))
    }

    /// Global radial grid at time t: fine in the bubble core, then dense
    /// enough that the 5-point Laplacian resolves e^{ir²/4t} to ~(kh)⁴ with
    /// kh ≈ 0.1, power-law tail beyond the support of the remote cutoffs.
    pub fn grid_for(&self, t: f64) -> Result<RadialGrid> {
        let (ra, rb) = self.seam_radii(t);
        let b1 = 2.6 * ra;
        let b2 = (2.2 * rb).max(1.2 * b1);
        let b3 = (2.5 * self.delta * t).max(1.2 * b2);
        let b4 = 3.0 * b3;
        // zone 1 nodes sit exactly on the λ-mapped inner grid: the core has
        // |ψ| ~ 1 and the Laplacian amplifies node-level interpolation noise
        // by 1/h², which otherwise floors the Ḣ² residual norm.  The zone is
        // therefore pinned to the inner spacing and exempt from res_factor.
        let h_in = self.inner.grid.nodes()[1] - self.inner.grid.nodes()[0];
        let dr1 = h_in / t.powf(self.params.nu);
        let m1 = (b1 / dr1).ceil() as usize;
        let b1 = m1 as f64 * dr1;
        // kh <= 0.1 with k = r/2t at the zone's outer edge
        let n2 = ((b2 * (b2 - b1) / (0.2 * t)).ceil() * self.res_factor) as usize + 10;
        let n3 = ((b3 * (b3 - b2) / (0.2 * t)).ceil() * self.res_factor) as usize + 10;
        let n4 = (600.0 * self.res_factor) as usize;
        RadialGrid::new(&GridSpec {
            zones: vec![
                Zone { start: 0.0, end: b1, count: (m1 + 1).min(400_000), law: SpacingLaw::Uniform },
                Zone { start: b1, end: b2, count: n2.min(400_000), law: SpacingLaw::Uniform },
                Zone { start: b2, end: b3, count: n3.min(400_000), law: SpacingLaw::Uniform },
                Zone { start: b3, end: b4, count: n4, law: SpacingLaw::Geometric },
            ],
        })
    }

    /// Assemble ψ^ap, its residual, the E-split and the bound statistics.
    /// Glued ψ^ap sampled on an arbitrary target grid (values only; no
    /// residual machinery).  Used for seeding evolution runs.
    pub fn psi_field(&self, grid: &RadialGrid, t: f64) -> Result<ComplexField> {
        let nu = self.params.nu;
        let a0 = self.params.alpha0;
        let (ra, rb) = self.seam_radii(t);
        let in_band = 2.5 * ra;
        let ss_band = (0.7 * ra, 2.05 * rb);
        let out_band = 0.7 * rb;
        let u_in = self.inner.assemble(t)?;
        let rho_cap = self.inner.grid.r_max();
        if in_band * t.powf(nu) > rho_cap {
            return Err(CoreError::Domain(format!(
                "inner grid (ρ ≤ {rho_cap}) does not cover the core band at t = {t}"
            )));
        }
        let ph = Complex64::new(0.0, a0 * t.ln()).exp();
        let tn = t.powf(0.5 * nu);
        let sa = t.powf(-0.5 + self.eps1);
        let sb = t.powf(-0.5 - self.eps2);
        let bump = ScaledBump::new(1.0);
        let mut psi = Vec::with_capacity(grid.len());
        for &r in grid.nodes() {
            let wa = bump.value(sa * r);
            let wb = bump.value(sb * r);
            let (p, q, s) = (wa, (1.0 - wa) * wb, 1.0 - wb);
            let mut v = Complex64::default();
            if p > 0.0 && r <= in_band {
                let rho = r * t.powf(nu);
                v += p * ph * tn * interp6(&self.inner.grid, &u_in.values, rho);
            }
            if q > 0.0 && r >= ss_band.0 && r <= ss_band.1 {
                let y = r / t.sqrt();
                let (w, _, _) = self.w_jet(y, t)?;
                v += q * ph * t.powf(-0.25) * w;
            }
            if s > 0.0 && r >= out_band {
                v += s * self.remote.eval(r, t)?;
            }
            psi.push(v);
        }
        Ok(ComplexField::new(psi, Parity::Even))
    }

    pub fn assemble(&self, t: f64) -> Result<GlobalAssembly> {
        let nu = self.params.nu;
        let a0 = self.params.alpha0;
        let grid = self.grid_for(t)?;
        let n = grid.len();
        let nodes = grid.nodes().to_vec();
        let (ra, rb) = self.seam_radii(t);

        // region tables (value, time derivative), zero outside their bands
        let in_band = 2.5 * ra;
        let ss_band = (0.7 * ra, 2.05 * rb);
        let out_band = 0.7 * rb;

        // inner: u, ∂_ρ u, analytic ∂_t u on the inner grid, then interp
        let u_in = self.inner.assemble(t)?;
        let u_rho = differentiate(&self.inner.grid, &u_in.values, Parity::Even, 1)?;
        let tau = t.powf(-(1.0 + 2.0 * nu));
        let mut u_t = vec![Complex64::default(); self.inner.grid.len()];
        let mut fpow = tau / t;
        for (k, chi_k) in self.inner.chi.iter().enumerate() {
            let c = -((k + 1) as f64) * (1.0 + 2.0 * nu) * fpow;
            for (o, v) in u_t.iter_mut().zip(chi_k.values.iter()) {
                *o += c * v;
            }
            fpow *= tau;
        }
        let rho_cap = self.inner.grid.r_max();
        if in_band * t.powf(nu) > rho_cap {
            return Err(CoreError::Domain(format!(
                "inner grid (ρ ≤ {rho_cap}) does not cover the core band at t = {t}"
            )));
        }

        let ph = Complex64::new(0.0, a0 * t.ln()).exp();
        let mut psi_in = vec![Complex64::default(); n];
        let mut psi_in_t = vec![Complex64::default(); n];
        let mut psi_ss = vec![Complex64::default(); n];
        let mut psi_ss_t = vec![Complex64::default(); n];
        let mut psi_out = vec![Complex64::default(); n];
        let mut psi_out_t = vec![Complex64::default(); n];
        let tn = t.powf(0.5 * nu);
        for (i, &r) in nodes.iter().enumerate() {
            if r <= in_band {
                let rho = r * t.powf(nu);
                let (u, ur, ut) = (
                    interp6(&self.inner.grid, &u_in.values, rho),
                    interp6(&self.inner.grid, &u_rho, rho),
                    interp6(&self.inner.grid, &u_t, rho),
                );
                psi_in[i] = ph * tn * u;
                psi_in_t[i] = ph
                    * (Complex64::new(0.5 * nu / t, a0 / t) * tn * u
                        + tn * (nu / t * rho * ur + ut));
            }
            if r >= ss_band.0 && r <= ss_band.1 {
                let y = r / t.sqrt();
                let (w, wy, wt) = self.w_jet(y, t)?;
                let tq = t.powf(-0.25);
                psi_ss[i] = ph * tq * w;
                psi_ss_t[i] = ph
                    * (Complex64::new(-0.25 / t, a0 / t) * tq * w
                        + tq * (wt - wy * y / (2.0 * t)));
            }
            if r >= out_band {
                let (v, vt) = self.remote.eval_jet(r, t)?;
                psi_out[i] = v;
                psi_out_t[i] = vt;
            }
        }

        // cutoff weights and their time derivatives
        let sa = t.powf(-0.5 + self.eps1);
        let sb = t.powf(-0.5 - self.eps2);
        let bump = ScaledBump::new(1.0);
        let mut wa = vec![0.0f64; n];
        let mut wb = vec![0.0f64; n];
        let mut ja = vec![Jet4::constant(0.0); n];
        let mut jb = vec![Jet4::constant(0.0); n];
        for (i, &r) in nodes.iter().enumerate() {
            ja[i] = bump.jet(sa * r);
            jb[i] = bump.jet(sb * r);
            wa[i] = ja[i].value();
            wb[i] = jb[i].value();
        }

        let mut psi = vec![Complex64::default(); n];
        let mut psi_t = vec![Complex64::default(); n];
        for i in 0..n {
            let (p, q) = (wa[i], (1.0 - wa[i]) * wb[i]);
            let s = 1.0 - wb[i];
            psi[i] = p * psi_in[i] + q * psi_ss[i] + s * psi_out[i];
            // ∂_t of the weights: ∂_t Θ(t^{-1/2+ε₁} r) = (-1/2+ε₁) t^{-1} Θ̃;
            // the two transitions are disjoint (wb = 1 where wa_t ≠ 0)
            let wa_t = (-0.5 + self.eps1) / t * (sa * nodes[i]) * ja[i].deriv(1);
            let wb_t = (-0.5 - self.eps2) / t * (sb * nodes[i]) * jb[i].deriv(1);
            psi_t[i] = p * psi_in_t[i] + q * psi_ss_t[i] + s * psi_out_t[i]
                + wa_t * (psi_in[i] - psi_ss[i])
                + wb_t * ((1.0 - wa[i]) * psi_ss[i] - psi_out[i]);
        }

        // direct residual
        let lap = laplacian_masked(&grid, &psi, 0.0, f64::INFINITY)?;
        let quintic = |v: Complex64| v.norm_sqr().powi(2) * v;
        let mut residual = vec![Complex64::default(); n];
        for i in 0..n {
            residual[i] = -Complex64::i() * psi_t[i] - lap[i] - quintic(psi[i]);
        }

        // per-region residuals (band-masked Laplacians)
        let lap_in = laplacian_masked(&grid, &psi_in, 0.0, in_band)?;
        let lap_ss = laplacian_masked(&grid, &psi_ss, ss_band.0, ss_band.1)?;
        let lap_out = laplacian_masked(&grid, &psi_out, out_band, f64::INFINITY)?;
        let d_in = differentiate(&grid, &psi_in, Parity::Even, 1)?;
        let d_ss = differentiate(&grid, &psi_ss, Parity::None, 1)?;
        let d_out = differentiate(&grid, &psi_out, Parity::None, 1)?;

        let mut e1 = vec![Complex64::default(); n];
        let mut e2 = vec![Complex64::default(); n];
        let mut e3 = vec![Complex64::default(); n];
        let mut e4 = vec![Complex64::default(); n];
        for i in 0..n {
            let r = nodes[i];
            let (p, q) = (wa[i], (1.0 - wa[i]) * wb[i]);
            let s = 1.0 - wb[i];
            // seam terms
            if ja[i].deriv(1) != 0.0 {
                let xi = sa * r;
                let dif = psi_in[i] - psi_ss[i];
                let ddif = d_in[i] - d_ss[i];
                let lap_theta = ja[i].deriv(2) + 2.0 * ja[i].deriv(1) / xi;
                e1[i] = Complex64::i() * (0.5 - self.eps1) / t * dif * (xi * ja[i].deriv(1))
                    - 2.0 * sa * ddif * ja[i].deriv(1)
                    - sa * sa * dif * lap_theta;
            }
            if jb[i].deriv(1) != 0.0 {
                let xi = sb * r;
                let dif = psi_ss[i] - psi_out[i];
                let ddif = d_ss[i] - d_out[i];
                let lap_theta = jb[i].deriv(2) + 2.0 * jb[i].deriv(1) / xi;
                e2[i] = Complex64::i() * (0.5 + self.eps2) / t * dif * (xi * jb[i].deriv(1))
                    - 2.0 * sb * ddif * jb[i].deriv(1)
                    - sb * sb * dif * lap_theta;
            }
            // region residuals
            let r_in = if p > 0.0 {
                -Complex64::i() * psi_in_t[i] - lap_in[i] - quintic(psi_in[i])
            } else {
                Complex64::default()
            };
            let r_ss = if q > 0.0 {
                -Complex64::i() * psi_ss_t[i] - lap_ss[i] - quintic(psi_ss[i])
            } else {
                Complex64::default()
            };
            let r_out = if s > 0.0 {
                -Complex64::i() * psi_out_t[i] - lap_out[i] - quintic(psi_out[i])
            } else {
                Complex64::default()
            };
            e3[i] = p * r_in + q * r_ss + s * r_out;
            e4[i] = p * (quintic(psi_in[i]) - quintic(psi[i]))
                + q * (quintic(psi_ss[i]) - quintic(psi[i]))
                + s * (quintic(psi_out[i]) - quintic(psi[i]));
            let _ = r;
        }

        // norms
        let view = norm_view(&grid)?;
        let r_norms = seminorms_filtered(&grid, &view, &residual)?;
        let mut e_norms = [0.0f64; 4];
        for (j, e) in [&e1, &e2, &e3, &e4].into_iter().enumerate() {
            let s = seminorms_filtered(&grid, &view, e)?;
            e_norms[j] = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        }
        let mut split_gap = vec![Complex64::default(); n];
        for i in 0..n {
            split_gap[i] = residual[i] - e1[i] - e2[i] - e3[i] - e4[i];
        }
        let gap_sq: Vec<f64> = split_gap.iter().map(|c| c.norm_sqr()).collect();
        let gap = (FOUR_PI * grid.quad_r2(&gap_sq)).sqrt();
        let split_consistency = gap / r_norms[0].max(1e-300);

        // bound statistics from ζ = ψ - e^{iα₀ ln t} λ^{1/2} W(λ·)
        let lam = t.powf(nu);
        let mut zeta = vec![Complex64::default(); n];
        let mut zeta_sup = 0.0f64;
        let mut zeta_weighted_sup = 0.0f64;
        for i in 0..n {
            let r = nodes[i];
            zeta[i] = psi[i] - ph * lam.sqrt() * ground_state::w(lam * r);
            zeta_sup = zeta_sup.max(zeta[i].norm());
            zeta_weighted_sup =
                zeta_weighted_sup.max(zeta[i].norm() / (1.0 + lam * lam * r * r).sqrt());
        }
        let zs = seminorms_filtered(&grid, &view, &zeta)?;
        let zeta_h1h2 = zs[1].max(zs[2]);
        let chi_sup = zeta_sup / lam.sqrt();
        let chi_grad_l2 = [zs[1], zs[2] / lam];

        Ok(GlobalAssembly {
            t,
            grid,
            psi: ComplexField::new(psi, Parity::Even),
            psi_t: ComplexField::new(psi_t, Parity::Even),
            residual: ComplexField::new(residual, Parity::Even),
            e_fields: [
                ComplexField::new(e1, Parity::None),
                ComplexField::new(e2, Parity::None),
                ComplexField::new(e3, Parity::None),
                ComplexField::new(e4, Parity::None),
            ],
            zeta: ComplexField::new(zeta, Parity::Even),
            r_norms,
            e_norms,
            split_consistency,
            chi_sup,
            chi_grad_l2,
            zeta_h1h2,
            zeta_sup,
            zeta_weighted_sup,
        })
    }
}

/// One assembled global snapshot with its diagnostics.
#[derive(Debug, Clone)]
pub struct GlobalAssembly {
    pub t: f64,
    pub grid: RadialGrid,
    pub psi: ComplexField,
    pub psi_t: ComplexField,
    pub residual: ComplexField,
    pub e_fields: [ComplexField; 4],
    pub zeta: ComplexField,
    /// ‖R‖ in Ḣ⁰, Ḣ¹, Ḣ².
    pub r_norms: [f64; 3],
    /// ‖E_i‖_{H²}.
    pub e_norms: [f64; 4],
    /// ‖R - ΣE_i‖_{L²} / ‖R‖_{L²}.
    pub split_consistency: f64,
    /// sup |χ^ap| in rescaled variables.
    pub chi_sup: f64,
    /// ‖∇^l χ^ap‖_{L²} in rescaled variables, l = 1, 2.
    pub chi_grad_l2: [f64; 2],
    pub zeta_h1h2: f64,
    pub zeta_sup: f64,
    pub zeta_weighted_sup: f64,
}

/// Strided measurement view of the core zone.  A second difference of a
/// field carrying ~1 ulp of node-level noise floors at ε/h², so the Ḣ¹/Ḣ²
/// seminorms are read on a subgrid whose spacing stays near 0.1 across the
/// fine core zone (where |ψ| ~ 1 and the genuine content varies on the
/// soliton scale); the outer zones keep their native spacing.
fn norm_view(grid: &RadialGrid) -> Result<(RadialGrid, Vec<usize>)> {
    let nodes = grid.nodes();
    let b1 = grid.segments()[0].end;
    let h1 = nodes[1] - nodes[0];
    let m = ((0.125 / h1).ceil().max(1.0)) as usize;
    let n = nodes.len();
    let mut idx = Vec::new();
    let mut i = 0;
    while i < n {
        idx.push(i);
        i += if nodes[i] < b1 { m } else { 1 };
    }
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let sub = RadialGrid::from_nodes(idx.iter().map(|&j| nodes[j]).collect())?;
    Ok((sub, idx))
}

/// Ḣ⁰ on the full grid, Ḣ¹/Ḣ² on the measurement view.
fn seminorms_filtered(
    grid: &RadialGrid,
    view: &(RadialGrid, Vec<usize>),
    f: &[Complex64],
) -> Result<[f64; 3]> {
    let sub: Vec<Complex64> = view.1.iter().map(|&i| f[i]).collect();
    let s = sobolev_seminorms(&view.0, &sub)?;
    let sq: Vec<f64> = f.iter().map(|c| c.norm_sqr()).collect();
    Ok([(FOUR_PI * grid.quad_r2(&sq)).sqrt(), s[1], s[2]])
}

/// Ḣ⁰, Ḣ¹, Ḣ² seminorms with the 4π r² dr measure.
fn sobolev_seminorms(grid: &RadialGrid, f: &[Complex64]) -> Result<[f64; 3]> {
    let d1 = differentiate(grid, f, Parity::None, 1)?;
    let d2 = differentiate(grid, f, Parity::None, 2)?;
    let norm = |v: &[Complex64]| -> f64 {
        let sq: Vec<f64> = v.iter().map(|c| c.norm_sqr()).collect();
        (FOUR_PI * grid.quad_r2(&sq)).sqrt()
    };
    // radial Ḣ²: |∂²f|² + 2|∂f/r|² integrates |∇²f|² for radial f
    let sq2: Vec<f64> = (0..grid.len())
        .map(|i| {
            let r = grid.nodes()[i];
            if r == 0.0 {
                3.0 * d2[i].norm_sqr()
            } else {
                d2[i].norm_sqr() + 2.0 * (d1[i] / r).norm_sqr()
            }
        })
        .collect();
    Ok([norm(f), norm(&d1), (FOUR_PI * grid.quad_r2(&sq2)).sqrt()])
}

/// Radial Laplacian by finite differences, zeroed outside [lo, hi] so that
/// band-limited region tables never difference across their support edge.
fn laplacian_masked(
    grid: &RadialGrid,
    f: &[Complex64],
    lo: f64,
    hi: f64,
) -> Result<Vec<Complex64>> {
    let d1 = differentiate(grid, f, Parity::Even, 1)?;
    let d2 = differentiate(grid, f, Parity::Even, 2)?;
    Ok((0..grid.len())
        .map(|i| {
            let r = grid.nodes()[i];
            if r < lo || r > hi {
                return Complex64::default();
            }
            if r == 0.0 {
                3.0 * d2[i]
            } else {
                d2[i] + 2.0 / r * d1[i]
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::InnerConfig;
    use crate::self_similar::{ss_grid_spec, InnerTailData, SSConfig};
    use std::sync::OnceLock;

    fn params() -> InnerParams {
        InnerParams { nu: 0.02, alpha0: 0.01 }
    }

    fn inner_grid() -> RadialGrid {
        RadialGrid::new(&GridSpec {
            zones: vec![
                Zone { start: 0.0, end: 20.0, count: 2001, law: SpacingLaw::Uniform },
                Zone { start: 20.0, end: 400.0, count: 1501, law: SpacingLaw::Geometric },
            ],
        })
        .unwrap()
    }

    fn build_glob(p: InnerParams) -> GlobalApprox {
        let c = InnerConfig {
            order: 3,
            eps1: 1.0 / 27.0,
            fit_window: (20.0, 380.0),
        };
        let inner = InnerSeries::build(inner_grid(), p, c).unwrap();
        let tail = if p.nu == 0.0 && p.alpha0 == 0.0 {
            InnerTailData::trivial()
        } else {
            InnerTailData::from_inner(&inner).unwrap()
        };
        let grid = RadialGrid::new(&ss_grid_spec()).unwrap();
        let ss = SSSystem::solve(grid, p, SSConfig::default(), &tail).unwrap();
        GlobalApprox::new(inner, ss, 0.5).unwrap()
    }

    fn glob() -> &'static GlobalApprox {
        static CELL: OnceLock<GlobalApprox> = OnceLock::new();
        CELL.get_or_init(|| build_glob(params()))
    }

    fn glob0() -> &'static GlobalApprox {
        static CELL: OnceLock<GlobalApprox> = OnceLock::new();
        CELL.get_or_init(|| build_glob(InnerParams { nu: 0.0, alpha0: 0.0 }))
    }

    const SWEEP_TS: [f64; 5] = [1e2, 316.22776601683796, 1e3, 3162.2776601683795, 1e4];

    fn sweep() -> &'static Vec<GlobalAssembly> {
        static CELL: OnceLock<Vec<GlobalAssembly>> = OnceLock::new();
        CELL.get_or_init(|| {
            SWEEP_TS
                .iter()
                .map(|&t| glob().assemble(t).unwrap())
                .collect()
        })
    }

    #[test]
    fn psi_field_matches_assembly() {
        let asm = &sweep()[2];
        let psi = glob().psi_field(&asm.grid, asm.t).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in psi.values.iter().zip(&asm.psi.values) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-12, "gap {worst:.3e}");
    }

    /// Least-squares slope of ln v against ln t.
    fn fit_slope(ts: &[f64], vs: &[f64]) -> f64 {
        let n = ts.len() as f64;
        let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        num / den
    }

    fn uniform(a: f64, b: f64, count: usize) -> RadialGrid {
        RadialGrid::new(&GridSpec {
            zones: vec![Zone { start: a, end: b, count, law: SpacingLaw::Uniform }],
        })
        .unwrap()
    }

    #[test]
    fn zeroed_coefficients_vanish_identically() {
        let p = glob().remote.clone().with_coeffs(RemoteCoeffs::zero());
        for (r, t) in [(300.0, 500.0), (50.0, 200.0), (2000.0, 900.0)] {
            let (v, vt) = p.eval_jet(r, t).unwrap();
            assert_eq!(v, Complex64::default());
            assert_eq!(vt, Complex64::default());
        }
        let xg = uniform(1.0, 20.0, 21);
        let zs = zeta_star(&p, &xg).unwrap();
        assert!(zs.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn z_jet_value_and_derivatives() {
        let p = &glob().remote;
        let c = p.coeffs;
        let (nu, a0) = (p.params.nu, p.params.alpha0);
        let xi: f64 = 0.7;
        // value assembled independently term by term
        let pw = |a: Complex64| (a * xi.ln()).exp();
        let tw = Complex64::new(0.0, -2.0 * a0);
        let want = c.d2_0 * pw(tw + cplx(-2.0 + nu))
            + c.d2_1 * pw(tw + cplx(-1.0 + 3.0 * nu))
            - (c.d2_2 * (2.0 * nu + 1.0) * xi.ln() - c.lambda2) * pw(tw + cplx(5.0 * nu));
        let (v, d1, d2) = p.z_jet(xi);
        assert!((v - want).norm() < 1e-14 * want.norm());
        // derivatives against central differences
        let h = 1e-5;
        let fd1 = (p.z(xi + h) - p.z(xi - h)) / (2.0 * h);
        let fd2 = (p.z(xi + h) - 2.0 * v + p.z(xi - h)) / (h * h);
        assert!((d1 - fd1).norm() < 1e-7 * d1.norm(), "{}", (d1 - fd1).norm());
        assert!((d2 - fd2).norm() < 1e-4 * d2.norm(), "{}", (d2 - fd2).norm());
    }

    #[test]
    fn v_hat3_supported_on_cutoff_shell() {
        let p = &glob().remote;
        let d = p.delta;
        for xi in [0.3 * d, 0.9 * d, 2.1 * d, 3.0 * d] {
            assert_eq!(p.v_hat3(xi), Complex64::default());
        }
        assert!(p.v_hat3(1.5 * d).norm() > 0.0);
    }

    /// Away from the cutoff transitions the linear free equation
    /// iv_t = -Δv holds: inside Θ_δ ≡ 1 this exercises the engineered
    /// cancellation between g₁'s forcing and the ln(|x|/t) commutator.
    #[test]
    fn linear_free_equation_in_remote_region() {
        let p = &glob().remote;
        let t = 400.0;
        for (a, b, count) in [(28.0, 122.0, 1201), (440.0, 570.0, 1501)] {
            let g = uniform(a, b, count);
            let mut v = Vec::with_capacity(g.len());
            let mut vt = Vec::with_capacity(g.len());
            for &r in g.nodes() {
                let (val, d) = p.eval_jet(r, t).unwrap();
                v.push(val);
                vt.push(d);
            }
            let lap = laplacian_masked(&g, &v, 0.0, f64::INFINITY).unwrap();
            let interior = 3..g.len() - 3;
            let mut res_max = 0.0f64;
            let mut lap_max = 0.0f64;
            for i in interior {
                res_max = res_max.max((Complex64::i() * vt[i] + lap[i]).norm());
                lap_max = lap_max.max(lap[i].norm());
            }
            assert!(
                res_max < 2e-5 * lap_max,
                "window [{a}, {b}]: residual {res_max:.3e} vs Δv scale {lap_max:.3e}"
            );
        }
    }

    #[test]
    fn v1_envelope_decay() {
        let p = &glob().remote;
        let t: f64 = 400.0;
        let nu = p.params.nu;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for j in 0..=60 {
            let r = 5.0 * t.sqrt() * 10f64.powf(j as f64 / 60.0);
            let (v, _) = p.v1(r, t).unwrap();
            let q = v.norm() * r.powf(1.0 + nu);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        assert!(hi / lo < 1.15, "envelope ratio {}", hi / lo);
    }

    #[test]
    fn v3_norm_delta_scaling() {
        // with only the leading connection constant kept, z is a pure power
        // and v̂₃ is exactly self-similar in δ, so ‖v₃‖_{L²} ∝ δ^{-5/2+ν}
        let t = 1000.0;
        let nu = glob().params.nu;
        let mut coeffs = RemoteCoeffs::zero();
        coeffs.d2_0 = cplx(1.0);
        let mut ds = Vec::new();
        let mut ns = Vec::new();
        for delta in [0.2, 0.4, 0.8] {
            let p = RemoteProfile::from_system(&glob().ss, delta)
                .unwrap()
                .with_coeffs(coeffs.clone());
            let g = uniform(0.9 * delta * t, 2.1 * delta * t, 3001);
            let sq: Vec<f64> = g.nodes().iter().map(|&r| p.v3(r, t).0.norm_sqr()).collect();
            ds.push(delta);
            ns.push((FOUR_PI * g.quad_r2(&sq)).sqrt());
        }
        let slope = fit_slope(&ds, &ns);
        let want = -2.5 + nu;
        assert!(
            (slope - want).abs() < 0.01,
            "δ-scaling slope {slope:.4} vs {want:.4}"
        );
    }

    #[test]
    fn zeta_star_matches_trapezoid_route() {
        let p = &glob().remote;
        let xg = uniform(2.0, 50.0, 4);
        let zs = zeta_star(p, &xg).unwrap();
        let bump = ScaledBump::new(p.delta);
        let c = std::f64::consts::PI.powf(-1.5)
            * Complex64::new(0.0, 3.0 * std::f64::consts::FRAC_PI_4).exp();
        // independent route: trapezoid on a dense geometric k-grid
        let m = 200_000;
        let (k0, k1) = (1e-9 * p.delta, p.delta);
        let ratio = (k1 / k0).powf(1.0 / m as f64);
        for (j, &r) in xg.nodes().iter().enumerate() {
            let mut acc = Complex64::default();
            let mut k = k0;
            let f = |k: f64| bump.value(2.0 * k) * p.z(2.0 * k) * k * (k * r).sin();
            let mut fk = f(k);
            for _ in 0..m {
                let kn = k * ratio;
                let fn_ = f(kn);
                acc += (fk + fn_) * 0.5 * (kn - k);
                k = kn;
                fk = fn_;
            }
            let want = c * FOUR_PI / r * acc;
            let err = (zs.values[j] - want).norm() / want.norm();
            assert!(err < 1e-5, "r = {r}: relative gap {err:.2e}");
        }
    }

    #[test]
    fn zeta_star_sobolev_norms() {
        let p = &glob().remote;
        let xg = RadialGrid::new(&GridSpec {
            zones: vec![Zone {
                start: 0.2,
                end: 2000.0,
                count: 3501,
                law: SpacingLaw::Geometric,
            }],
        })
        .unwrap();
        let zs = zeta_star(p, &xg).unwrap();
        for &(s, v) in &zs.hs_norms {
            assert!(v.is_finite() && v > 0.0, "Ḣ^{s} norm {v}");
        }
        // cross-check the frequency-side Ḣ¹ norm against spatial samples
        let d1 = differentiate(&xg, &zs.values, Parity::None, 1).unwrap();
        let sq: Vec<f64> = d1.iter().map(|c| c.norm_sqr()).collect();
        let spatial = (FOUR_PI * xg.quad_r2(&sq)).sqrt();
        let freq = zs.hs_norms[1].1;
        assert!(
            (spatial - freq).abs() < 0.15 * freq,
            "spatial {spatial:.4e} vs frequency {freq:.4e}"
        );
    }

    /// ‖∇(e^{itΔ}ζ* - v_{2,0})‖_{L²(r ≥ t^γ)} decays in t (the comparison
    /// holds for gradients only: in value the slowly decaying static tail
    /// of ζ* dominates the principal part pointwise).
    #[test]
    fn free_evolution_approaches_principal_part() {
        let p = &glob().remote;
        let gamma = 0.48;
        let mut errs = Vec::new();
        let mut refs = Vec::new();
        for t in [200.0f64, 800.0] {
            let xg = RadialGrid::new(&GridSpec {
                zones: vec![Zone {
                    start: t.powf(gamma),
                    end: 4.0 * p.delta * t,
                    count: 8001,
                    law: SpacingLaw::Geometric,
                }],
            })
            .unwrap();
            let ev = free_evolution_jet(p, &xg, t).unwrap();
            let mut dsq = Vec::with_capacity(xg.len());
            let mut vsq = Vec::with_capacity(xg.len());
            for (j, &r) in xg.nodes().iter().enumerate() {
                let w = p.v20_jet(r, t).1;
                dsq.push((ev[j].1 - w).norm_sqr());
                vsq.push(w.norm_sqr());
            }
            errs.push((FOUR_PI * xg.quad_r2(&dsq)).sqrt());
            refs.push((FOUR_PI * xg.quad_r2(&vsq)).sqrt());
        }
        assert!(
            errs[1] < 0.9 * errs[0],
            "gradient gaps {errs:?} (principal parts {refs:?}) should decay"
        );
        assert!(
            errs[1] < 0.5 * refs[1],
            "gradient gap {:.3e} not below the principal part {:.3e}",
            errs[1],
            refs[1]
        );
    }

    #[test]
    fn degenerate_assembly_is_ground_state() {
        let asm = glob0().assemble(1000.0).unwrap();
        let mut sup = 0.0f64;
        for (i, &r) in asm.grid.nodes().iter().enumerate() {
            sup = sup.max((asm.psi.values[i] - cplx(ground_state::w(r))).norm());
        }
        assert!(sup < 1e-4, "sup |ψ - W| = {sup:.3e}");
        assert!(
            asm.r_norms[0] < 1e-4,
            "residual L² norm {:.3e}",
            asm.r_norms[0]
        );
    }

    #[test]
    fn split_routes_agree() {
        let asm = &sweep()[2];
        assert!(
            asm.split_consistency < 0.02,
            "‖R - ΣE‖/‖R‖ = {:.3e}",
            asm.split_consistency
        );
    }

    #[test]
    fn residual_norm_time_slopes() {
        let opc = 1.0 + 2.0 * glob().params.nu;
        let nu = glob().params.nu;
        for k in 0..3 {
            let vs: Vec<f64> = sweep().iter().map(|a| a.r_norms[k]).collect();
            let slope = fit_slope(&SWEEP_TS, &vs);
            let bound = -(2.0 + 0.125) * opc + nu * (k as f64 + 1.0) + 0.05;
            assert!(
                slope <= bound,
                "Ḣ^{k} slope {slope:.4} exceeds {bound:.4} (norms {vs:?})"
            );
        }
    }

    #[test]
    fn seam_error_time_slopes() {
        let g = glob();
        let opc = 1.0 + 2.0 * g.params.nu;
        // the stated rates carry a ln t factor; divide it out before fitting
        let e1: Vec<f64> = sweep().iter().map(|a| a.e_norms[0] / a.t.ln()).collect();
        let e2: Vec<f64> = sweep().iter().map(|a| a.e_norms[1] / a.t.ln()).collect();
        let s1 = fit_slope(&SWEEP_TS, &e1);
        let s2 = fit_slope(&SWEEP_TS, &e2);
        let b1 = -2.25 * opc + g.params.nu + 2.5 * g.eps1 + 0.05;
        let b2 = -2.25 * opc + 0.05;
        assert!(s1 <= b1, "inner seam slope {s1:.4} vs {b1:.4} ({e1:?})");
        assert!(s2 <= b2, "outer seam slope {s2:.4} vs {b2:.4} ({e2:?})");
    }

    #[test]
    fn soliton_difference_statistics() {
        let g = glob();
        let nu = g.params.nu;
        for a in sweep() {
            assert!(a.zeta_h1h2 < 0.5, "Ḣ¹∩Ḣ² size {} at t = {}", a.zeta_h1h2, a.t);
        }
        let sups: Vec<f64> = sweep().iter().map(|a| a.zeta_sup).collect();
        let wsups: Vec<f64> = sweep().iter().map(|a| a.zeta_weighted_sup).collect();
        let csups: Vec<f64> = sweep().iter().map(|a| a.chi_sup).collect();
        let s_sup = fit_slope(&SWEEP_TS, &sups);
        let s_w = fit_slope(&SWEEP_TS, &wsups);
        let s_c = fit_slope(&SWEEP_TS, &csups);
        assert!(s_sup <= -(1.0 + nu) / 2.0 + 0.05, "sup slope {s_sup:.4} ({sups:?})");
        assert!(s_w <= -1.0 - 1.5 * nu + 0.05, "weighted slope {s_w:.4} ({wsups:?})");
        assert!(s_c <= -(1.0 + 2.0 * nu) / 2.0 + 0.05, "χ slope {s_c:.4} ({csups:?})");
    }

    #[test]
    fn refinement_leaves_residual_norm_unchanged() {
        let mut finer = glob().clone();
        finer.res_factor = 1.6;
        let a = finer.assemble(1000.0).unwrap();
        let base = &sweep()[2];
        let rel = (a.r_norms[0] - base.r_norms[0]).abs() / base.r_norms[0];
        assert!(rel < 0.03, "refinement moved ‖R‖ by {rel:.3e}");
    }

    #[test]
    fn construction_guards() {
        let g = glob();
        // mismatched parameter packs are rejected
        let other = glob0();
        let err = GlobalApprox::new(other.inner.clone(), g.ss.clone(), 0.5);
        assert!(matches!(err, Err(CoreError::Config(_))));
        // ordering threshold for δ = 1/2, ε₂ = 3/8: t ≥ 2⁸
        assert!((g.t_valid() - 256.0).abs() < 1e-9);
        // remote evaluation below its region is refused
        assert!(matches!(
            g.remote.eval(1.0, 1000.0),
            Err(CoreError::Domain(_))
        ));
    }
}
