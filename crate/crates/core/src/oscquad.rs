//! Filon-type quadrature: ∫ f(u) e^{iωu} du for a smooth slowly-varying f
//! sampled on (possibly non-uniform) nodes, with the oscillation integrated
//! exactly against a piecewise-quadratic interpolant of f.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Moments `I_n = ∫_0^h x^n e^{iωx} dx` for n = 0, 1, 2.
fn moments(omega: f64, h: f64) -> [Complex64; 3] {
    let z = Complex64::new(0.0, omega * h);
    if z.norm() < 1e-3 {
        // Taylor in z = iωh: I_n = h^{n+1} Σ_k z^k / (k! (n+k+1))
        let mut out = [Complex64::default(); 3];
        for (n, o) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::default();
            for k in 0..12 {
                acc += term / (n as f64 + k as f64 + 1.0);
                term = term * z / (k as f64 + 1.0);
            }
            *o = acc * h.powi(n as i32 + 1);
        }
        out
    } else {
        let iw = Complex64::new(0.0, omega);
        let e = (iw * h).exp();
        let i0 = (e - 1.0) / iw;
        let i1 = (e * h - i0) / iw;
        let i2 = (e * h * h - 2.0 * i1) / iw;
        [i0, i1, i2]
    }
}

/// ∫_{nodes[0]}^{nodes[last]} f(u) e^{iωu} du with piecewise-quadratic f.
///
/// Consecutive node triples form one panel; a trailing odd interval is
/// handled with the last full triple extrapolated onto it.
pub fn filon(nodes: &[f64], f: &[Complex64], omega: f64) -> Result<Complex64> {
    let n = nodes.len();
    if n != f.len() {
        return Err(CoreError::Domain("node/sample length mismatch".into()));
    }
    if n < 3 {
        return Err(CoreError::Domain("need at least 3 nodes".into()));
    }
    let mut total = Complex64::default();
    let mut i = 0;
    while i + 2 < n {
        total += panel(&nodes[i..i + 3], &f[i..i + 3], omega, nodes[i], nodes[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        // one interval left: reuse the last triple's quadratic on it
        total += panel(
            &nodes[n - 3..n],
            &f[n - 3..n],
            omega,
            nodes[n - 2],
            nodes[n - 1],
        );
    }
    Ok(total)
}

/// Integrate the quadratic through `(xs, fs)` times `e^{iωu}` over `[a, b]`.
fn panel(xs: &[f64], fs: &[Complex64], omega: f64, a: f64, b: f64) -> Complex64 {
    // shift to x = u - a so the phase factor splits off as e^{iωa}
    let x0 = xs[0] - a;
    let x1 = xs[1] - a;
    let x2 = xs[2] - a;
    // Lagrange quadratic coefficients in powers of x
    let d0 = (x0 - x1) * (x0 - x2);
    let d1 = (x1 - x0) * (x1 - x2);
    let d2 = (x2 - x0) * (x2 - x1);
    let c2 = fs[0] / d0 + fs[1] / d1 + fs[2] / d2;
    let c1 = -(fs[0] * (x1 + x2) / d0 + fs[1] * (x0 + x2) / d1 + fs[2] * (x0 + x1) / d2);
    let c0 = fs[0] * x1 * x2 / d0 + fs[1] * x0 * x2 / d1 + fs[2] * x0 * x1 / d2;
    let h = b - a;
    let m = moments(omega, h);
    (c0 * m[0] + c1 * m[1] + c2 * m[2]) * Complex64::new(0.0, omega * a).exp()
}

/// Per-interval integrals `∫_{u_i}^{u_{i+1}} f(u) e^{iωu} du`, each taken
/// against the same panel quadratic `filon` uses, so prefix or suffix sums
/// reproduce the total exactly.
pub fn filon_intervals(nodes: &[f64], f: &[Complex64], omega: f64) -> Result<Vec<Complex64>> {
    let n = nodes.len();
    if n != f.len() {
        return Err(CoreError::Domain("node/sample length mismatch".into()));
    }
    if n < 3 {
        return Err(CoreError::Domain("need at least 3 nodes".into()));
    }
    let mut out = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let lo = (2 * (i / 2)).min(n - 3);
        out.push(panel(
            &nodes[lo..lo + 3],
            &f[lo..lo + 3],
            omega,
            nodes[i],
            nodes[i + 1],
        ));
    }
    Ok(out)
}

/// Tail `∫_a^∞ f(u) e^{iωu} du` by two integrations by parts, given f and
/// its first two derivatives at `a`.  Valid when f and its derivatives decay.
pub fn tail_by_parts(a: f64, omega: f64, f: Complex64, fp: Complex64, fpp: Complex64) -> Complex64 {
    let iw = Complex64::new(0.0, omega);
    let e = (iw * a).exp();
    e * (-f / iw + fp / (iw * iw) - fpp / (iw * iw * iw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn against_closed_form() {
        // ∫_0^10 e^{-u} e^{iωu} du = (1 - e^{(iω-1)10}) / (1 - iω)
        let omega = 7.3;
        let nodes: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        let f: Vec<Complex64> = nodes.iter().map(|&u| Complex64::new((-u).exp(), 0.0)).collect();
        let got = filon(&nodes, &f, omega).unwrap();
        let a = Complex64::new(-1.0, omega);
        let want = ((a * 10.0).exp() - 1.0) / a;
        assert!((got - want).norm() < 1e-8, "err {}", (got - want).norm());
    }

    #[test]
    fn zero_frequency_reduces_to_simpson() {
        let nodes: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let f: Vec<Complex64> = nodes.iter().map(|&u| Complex64::new(u * u, 0.0)).collect();
        let got = filon(&nodes, &f, 0.0).unwrap();
        assert!((got.re - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn high_frequency_cancellation() {
        // constant f: ∫_0^1 e^{iωu} du, handled exactly whatever ω
        let omega = 500.0;
        let nodes: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let f = vec![Complex64::new(1.0, 0.0); nodes.len()];
        let got = filon(&nodes, &f, omega).unwrap();
        let iw = Complex64::new(0.0, omega);
        let want = ((iw).exp() - 1.0) / iw;
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn intervals_sum_to_total() {
        let omega = 4.7;
        let nodes: Vec<f64> = (0..=301).map(|i| i as f64 * 0.02).collect();
        let f: Vec<Complex64> = nodes
            .iter()
            .map(|&u| Complex64::new((-0.5 * u).exp(), 0.1 * u.sin()))
            .collect();
        let total = filon(&nodes, &f, omega).unwrap();
        let parts = filon_intervals(&nodes, &f, omega).unwrap();
        let sum: Complex64 = parts.iter().sum();
        assert!((sum - total).norm() < 1e-9, "err {}", (sum - total).norm());
        // and a mid-range cumulative matches a direct filon over the subrange
        let k = 150;
        let partial: Complex64 = parts[..k].iter().sum();
        let direct = filon(&nodes[..=k], &f[..=k], omega).unwrap();
        assert!((partial - direct).norm() < 1e-9);
    }

    #[test]
    fn nonuniform_nodes() {
        let mut nodes = vec![0.0];
        let mut x = 0.0;
        let mut h = 0.002;
        while x < 5.0 {
            x += h;
            h *= 1.01;
            nodes.push(x);
        }
        let f: Vec<Complex64> = nodes
            .iter()
            .map(|&u| Complex64::new(1.0 / (1.0 + u * u), 0.0))
            .collect();
        let omega = 3.0;
        let got = filon(&nodes, &f, omega).unwrap();
        // reference by very fine Simpson on uniform grid
        let nfine = 200_000;
        let b = *nodes.last().unwrap();
        let hh = b / nfine as f64;
        let mut acc = Complex64::default();
        for i in 0..nfine {
            let u0 = i as f64 * hh;
            let um = u0 + 0.5 * hh;
            let u1 = u0 + hh;
            let g = |u: f64| Complex64::new(0.0, omega * u).exp() / (1.0 + u * u);
            acc += (g(u0) + g(um) * 4.0 + g(u1)) * (hh / 6.0);
        }
        assert!((got - acc).norm() < 1e-7);
    }
}
