//! Low-energy scattering data of the line problem.  All Wronskians against
//! the reflected solutions g_j(ρ) = f_j(-ρ) are evaluated at ρ = 0, where
//! g_j(0) = f_j(0) and g_j'(0) = -f_j'(0), so no second solve is needed.
//!
//! From F = (f₁, f₃) the matrix Wronskian D(k) = W(F, G) determines the
//! transmission-like coefficients s(k) = (Dᵗ)⁻¹(2ik, 0)ᵀ, the reflection
//! coefficients r₁, r₂ of the scattered wave 𝓕 = F s = r₁g₁ + g₂ + r₂g₃,
//! and the coefficients a_j = r_j - s_j of the even-odd difference
//! e(ρ, k) = a₁f₁ + f₂ + a₂f₃ that feeds the distorted Fourier transform.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::lstsq;

use super::jost::{jost_solve, JostKind, JostSolution, JostWorkspace};

#[derive(Debug, Clone)]
pub struct ScatteringPoint {
    pub k: f64,
    /// Matrix Wronskian D(k) at the origin, row index over (f₁, f₃).
    pub d: [[Complex64; 2]; 2],
    pub s: [Complex64; 2],
    /// Reflection coefficients from the least-squares match at the origin.
    pub r: [Complex64; 2],
    /// r₁ recomputed through the Wronskian identity, as a cross-check.
    pub r1_alt: Complex64,
    pub a: [Complex64; 2],
    /// Worst unitarity residual of the pair (|s₁|²+|r₁|²-1, 2Re r₁s̄₁).
    pub unitarity: f64,
    /// Relative misfit of w(𝓕, g₁) = 2ik.
    pub w_check: f64,
    /// |det D| / ‖D‖², the relative distance from singularity.
    pub sing: f64,
}

#[derive(Debug, Clone)]
pub struct ScatteringTable {
    pub points: Vec<ScatteringPoint>,
}

/// Bilinear pairing ⟨u, v⟩ of two 2-spinors.
fn dot(u: [Complex64; 2], v: [Complex64; 2]) -> Complex64 {
    u[0] * v[0] + u[1] * v[1]
}

fn point_and_waves(
    ws: &JostWorkspace,
    k: f64,
) -> Result<(ScatteringPoint, JostSolution, JostSolution)> {
    if k <= 0.0 {
        return Err(CoreError::Domain(
            "scattering data needs k > 0; the origin is the resonance".into(),
        ));
    }
    let j1 = jost_solve(ws, JostKind::J1, k)?;
    let j3 = jost_solve(ws, JostKind::J3, k)?;
    let f1 = j1.value(0);
    let f1d = j1.derivative(0);
    let f3 = j3.value(0);
    let f3d = j3.derivative(0);
    let f2 = [f1[0].conj(), f1[1].conj()];
    let f2d = [f1d[0].conj(), f1d[1].conj()];

    // D_{mn} = ⟨f_m', f_n⟩ + ⟨f_m, f_n'⟩ over the pair (f₁, f₃)
    let cols = [(f1, f1d), (f3, f3d)];
    let mut d = [[Complex64::default(); 2]; 2];
    for m in 0..2 {
        for n in 0..2 {
            d[m][n] = dot(cols[m].1, cols[n].0) + dot(cols[m].0, cols[n].1);
        }
    }
    let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
    let norm2 = d.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
    let sing = det.norm() / norm2.max(1e-300);
    if sing < 1e-8 {
        return Err(CoreError::Conditioning(format!(
            "matrix Wronskian nearly singular at k = {k}"
        )));
    }

    // Dᵗ s = (2ik, 0)ᵀ
    let rhs = Complex64::new(0.0, 2.0 * k);
    let s = [d[1][1] * rhs / det, -d[0][1] * rhs / det];

    // least-squares reflection coefficients from 𝓕 = r₁g₁ + g₂ + r₂g₃ at 0
    let fs = [
        f1[0] * s[0] + f3[0] * s[1],
        f1[1] * s[0] + f3[1] * s[1],
    ];
    let fsd = [
        f1d[0] * s[0] + f3d[0] * s[1],
        f1d[1] * s[0] + f3d[1] * s[1],
    ];
    let col1 = vec![f1[0], f1[1], -f1d[0], -f1d[1]];
    let col2 = vec![f3[0], f3[1], -f3d[0], -f3d[1]];
    let b = vec![fs[0] - f2[0], fs[1] - f2[1], fsd[0] + f2d[0], fsd[1] + f2d[1]];
    let sol = lstsq(&[col1, col2], &b)?;
    let r = [sol[0], sol[1]];

    // Wronskian route for r₁: w(g₂, f_j) = -⟨f₂', f_j⟩ - ⟨f₂, f_j'⟩
    let wg2f1 = -dot(f2d, f1) - dot(f2, f1d);
    let wg2f3 = -dot(f2d, f3) - dot(f2, f3d);
    let r1_alt = (s[0] * wg2f1 + s[1] * wg2f3) / rhs;

    let a = [r[0] - s[0], r[1] - s[1]];
    let u1 = (s[0].norm_sqr() + r[0].norm_sqr() - 1.0).abs();
    let u2 = 2.0 * (r[0] * s[0].conj()).re.abs();
    let w_fs = dot(fsd, f1) + dot(fs, f1d);
    let w_check = (w_fs - rhs).norm() / (2.0 * k);

    Ok((
        ScatteringPoint {
            k,
            d,
            s,
            r,
            r1_alt,
            a,
            unitarity: u1.max(u2),
            w_check,
            sing,
        },
        j1,
        j3,
    ))
}

pub fn scattering_data(ws: &JostWorkspace, ks: &[f64]) -> Result<ScatteringTable> {
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        points.push(point_and_waves(ws, k)?.0);
    }
    Ok(ScatteringTable { points })
}

/// The even-odd difference wave e(ρ, k) = a₁f₁ + f₂ + a₂f₃ on the
/// workspace nodes, together with the scattering data it came from.
pub(crate) fn scattering_wave(
    ws: &JostWorkspace,
    k: f64,
) -> Result<(ScatteringPoint, Vec<[Complex64; 2]>)> {
    let (pt, j1, j3) = point_and_waves(ws, k)?;
    let n = ws.nodes().len();
    let mut e = Vec::with_capacity(n);
    for j in 0..n {
        let v1 = j1.value(j);
        let v3 = j3.value(j);
        e.push([
            pt.a[0] * v1[0] + v1[0].conj() + pt.a[1] * v3[0],
            pt.a[0] * v1[1] + v1[1].conj() + pt.a[1] * v3[1],
        ]);
    }
    Ok((pt, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    use super::super::jost::JostControls;

    fn shared() -> &'static JostWorkspace {
        static WS: OnceLock<JostWorkspace> = OnceLock::new();
        WS.get_or_init(|| JostWorkspace::new(JostControls::default()).unwrap())
    }

    #[test]
    fn wronskian_slope_matches_richardson() {
        let ws = shared();
        let t = scattering_data(ws, &[0.02, 0.01, 0.005]).unwrap();
        let v: Vec<[[Complex64; 2]; 2]> = t
            .points
            .iter()
            .map(|p| {
                let mut m = p.d;
                for row in m.iter_mut() {
                    for z in row.iter_mut() {
                        *z /= p.k;
                    }
                }
                m
            })
            .collect();
        // linear Richardson step from the two smallest k
        let extrap = |m: usize, n: usize| 2.0 * v[2][m][n] - v[1][m][n];
        let d11 = extrap(0, 0);
        let d22 = extrap(1, 1);
        assert!(
            (d11 - Complex64::new(0.0, -2.0)).norm() < 0.1,
            "D₁₁/k → {d11}"
        );
        assert!((d22 - Complex64::new(2.0, 0.0)).norm() < 0.1, "D₂₂/k → {d22}");
        assert!(extrap(0, 1).norm() < 0.1, "off-diagonal {:?}", extrap(0, 1));
        assert!(extrap(1, 0).norm() < 0.1, "off-diagonal {:?}", extrap(1, 0));
    }

    #[test]
    fn low_energy_limits() {
        // s and a carry O(k) corrections, so the k → 0 values come from the
        // same linear Richardson step as the Wronskian slope above
        let ws = shared();
        let t = scattering_data(ws, &[0.01, 0.005]).unwrap();
        let extrap = |f: fn(&ScatteringPoint) -> Complex64| {
            2.0 * f(&t.points[1]) - f(&t.points[0])
        };
        let s1 = extrap(|p| p.s[0]);
        let s2 = extrap(|p| p.s[1]);
        let a1 = extrap(|p| p.a[0]);
        let a2 = extrap(|p| p.a[1]);
        assert!((s1 - Complex64::new(-1.0, 0.0)).norm() < 0.02, "s₁(0⁺) = {s1}");
        assert!(s2.norm() < 0.05, "s₂(0⁺) = {s2}");
        assert!((a1 - Complex64::new(1.0, 0.0)).norm() < 0.02, "a₁(0⁺) = {a1}");
        assert!(a2.norm() < 0.02, "a₂(0⁺) = {a2}");
    }

    #[test]
    fn unitarity_and_consistency() {
        let ws = shared();
        let t = scattering_data(ws, &[0.05, 0.1, 0.2, 0.3, 0.4]).unwrap();
        for p in &t.points {
            assert!(p.unitarity < 1e-4, "unitarity {} at k={}", p.unitarity, p.k);
            assert!(p.w_check < 1e-6, "w(𝓕,g₁) misfit {} at k={}", p.w_check, p.k);
            assert!(
                (p.r[0] - p.r1_alt).norm() < 5e-7,
                "r₁ routes differ by {} at k={}",
                (p.r[0] - p.r1_alt).norm(),
                p.k
            );
            assert!(p.sing > 1e-3, "near-singular D at k={}", p.k);
        }
    }

    #[test]
    fn difference_wave_stays_square_integrable() {
        // e₁ = e - a₁e^{ikρ}(1,0)ᵀ - e^{-ikρ}(1,0)ᵀ keeps a bounded L² norm
        let ws = shared();
        for &k in &[0.05, 0.1, 0.2, 0.3, 0.4] {
            let (pt, e) = scattering_wave(ws, k).unwrap();
            let nodes = ws.nodes();
            let mut acc = 0.0;
            for j in 0..nodes.len() - 1 {
                let h = nodes[j + 1] - nodes[j];
                let mut val = 0.0;
                for &jj in &[j, j + 1] {
                    let rho = nodes[jj];
                    let free = pt.a[0] * Complex64::from_polar(1.0, k * rho)
                        + Complex64::from_polar(1.0, -k * rho);
                    let e1 = [e[jj][0] - free, e[jj][1]];
                    val += e1[0].norm_sqr() + e1[1].norm_sqr();
                }
                acc += 0.5 * h * val;
            }
            let norm = acc.sqrt();
            assert!(norm < 5.0, "‖e₁‖ = {norm} at k = {k}");
        }
    }

    #[test]
    fn resonant_origin_is_rejected() {
        let ws = shared();
        assert!(matches!(
            scattering_data(ws, &[0.0]),
            Err(CoreError::Domain(_))
        ));
    }
}
