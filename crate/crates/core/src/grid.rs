//! Graded radial grids with composite quadrature and high-order
//! finite-difference stencils.
//!
//! All 3-D integrals of radial functions use the `4π ρ² dρ` convention;
//! the grid stores both the bare `dρ` weights and the `ρ² dρ` weights.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Node-placement law inside one zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingLaw {
    /// Equispaced nodes.
    Uniform,
    /// Node spacing grows geometrically from `start` to `end`.
    Geometric,
    /// Chebyshev points of the second kind mapped to `[start, end]`;
    /// clusters nodes at both zone ends.
    ChebyshevMapped,
}

/// One graded zone `[start, end]` with `count` nodes (both ends included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub law: SpacingLaw,
}

/// Grid specification as read from the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub zones: Vec<Zone>,
}

impl GridSpec {
    /// Single uniform zone `[0, r_max]` with `count` nodes.
    pub fn uniform(r_max: f64, count: usize) -> Self {
        GridSpec {
            zones: vec![Zone {
                start: 0.0,
                end: r_max,
                count,
                law: SpacingLaw::Uniform,
            }],
        }
    }

    /// The three-scale default: dense uniform core, geometric stretch,
    /// coarse uniform tail.
    pub fn three_zone(r_core: f64, r_mid: f64, r_max: f64, n_core: usize, n_mid: usize, n_tail: usize) -> Self {
        GridSpec {
            zones: vec![
                Zone { start: 0.0, end: r_core, count: n_core, law: SpacingLaw::Uniform },
                Zone { start: r_core, end: r_mid, count: n_mid, law: SpacingLaw::Geometric },
                Zone { start: r_mid, end: r_max, count: n_tail, law: SpacingLaw::Uniform },
            ],
        }
    }
}

/// Graded one-dimensional radial grid with quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    /// Weights for `∫ g(ρ) ρ² dρ` (the `ρ²` factor is folded in).
    weights: Vec<f64>,
    /// Bare weights for `∫ f(ρ) dρ`.
    dr_weights: Vec<f64>,
    segments: Vec<Zone>,
}

/// Generate the nodes of a single zone, including both endpoints.
fn zone_nodes(z: &Zone) -> Result<Vec<f64>> {
    if z.count < 2 {
        return Err(CoreError::Config(format!(
            "zone [{}, {}] needs at least 2 nodes",
            z.start, z.end
        )));
    }
    if !(z.end > z.start) {
        return Err(CoreError::Config(format!(
            "zone end {} must exceed start {}",
            z.end, z.start
        )));
    }
    let n = z.count;
    let mut out = Vec::with_capacity(n);
    match z.law {
        SpacingLaw::Uniform => {
            let h = (z.end - z.start) / (n - 1) as f64;
            for i in 0..n {
                out.push(z.start + h * i as f64);
            }
        }
        SpacingLaw::Geometric => {
            // Spacing ratio chosen so that h_last/h_first == end/start when
            // start > 0 (log-uniform); falls back to a fixed stretch of 20x
            // per zone when start == 0.
            let ratio_total = if z.start > 0.0 { z.end / z.start } else { 20.0 };
            let q = ratio_total.powf(1.0 / (n - 1) as f64);
            // first spacing h0 with sum h0 (q^{n-1}-1)/(q-1) = end-start
            let len = z.end - z.start;
            let denom = (q.powi((n - 1) as i32) - 1.0) / (q - 1.0);
            let h0 = len / denom;
            let mut x = z.start;
            out.push(x);
            let mut h = h0;
            for _ in 1..n {
                x += h;
                out.push(x);
                h *= q;
            }
            // kill accumulated round-off at the seam
            *out.last_mut().unwrap() = z.end;
        }
        SpacingLaw::ChebyshevMapped => {
            let n1 = (n - 1) as f64;
            for i in 0..n {
                let theta = std::f64::consts::PI * (n1 - i as f64) / n1;
                let c = theta.cos(); // -1 .. 1
                out.push(z.start + (z.end - z.start) * 0.5 * (c + 1.0));
            }
            out[0] = z.start;
            out[n - 1] = z.end;
        }
    }
    Ok(out)
}

/// Integral of the Lagrange basis polynomial through `xs` associated with
/// node `j`, taken over `[a, b]`, by 6-point Gauss-Legendre (exact for the
/// cubic bases used here).
fn lagrange_basis_integral(xs: &[f64], j: usize, a: f64, b: f64) -> f64 {
    const GL_X: [f64; 6] = [
        -0.932469514203152,
        -0.661209386466265,
        -0.238619186083197,
        0.238619186083197,
        0.661209386466265,
        0.932469514203152,
    ];
    const GL_W: [f64; 6] = [
        0.171324492379170,
        0.360761573048139,
        0.467913934572691,
        0.467913934572691,
        0.360761573048139,
        0.171324492379170,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (xg, wg) in GL_X.iter().zip(GL_W.iter()) {
        let x = mid + half * xg;
        let mut l = 1.0;
        for (m, xm) in xs.iter().enumerate() {
            if m != j {
                l *= (x - xm) / (xs[j] - xm);
            }
        }
        acc += wg * l;
    }
    acc * half
}

/// For interval `i` (between nodes i and i+1) pick the 4-node stencil used
/// to integrate across it.
fn panel_stencil(n: usize, i: usize) -> std::ops::Range<usize> {
    if n < 4 {
        return 0..n;
    }
    let lo = if i == 0 { 0 } else { (i - 1).min(n - 4) };
    lo..lo + 4
}

impl RadialGrid {
    /// Build a grid from a zone specification.
    ///
    /// Zones must tile an interval `[0, R_max]` without gaps or overlaps.
    pub fn new(spec: &GridSpec) -> Result<Self> {
        if spec.zones.is_empty() {
            return Err(CoreError::Config("no zones given".into()));
        }
        if spec.zones[0].start < 0.0 {
            return Err(CoreError::Config("first zone must start at ρ >= 0".into()));
        }
        for w in spec.zones.windows(2) {
            let gap = w[1].start - w[0].end;
            if gap.abs() > 1e-12 * w[0].end.abs().max(1.0) {
                return Err(CoreError::Config(format!(
                    "zones not contiguous: {} -> {}",
                    w[0].end, w[1].start
                )));
            }
        }
        let mut nodes: Vec<f64> = Vec::new();
        for (iz, z) in spec.zones.iter().enumerate() {
            let zn = zone_nodes(z)?;
            if iz == 0 {
                nodes.extend_from_slice(&zn);
            } else {
                // zone start coincides with previous zone end
                nodes.extend_from_slice(&zn[1..]);
            }
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::Config("nodes not strictly increasing".into()));
            }
        }
        Self::from_nodes_with_segments(nodes, spec.zones.clone())
    }

    /// Build a grid directly from an increasing node list (e.g. a strided
    /// view of another grid).
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(CoreError::Config("no nodes given".into()));
        }
        let seg = Zone {
            start: nodes[0],
            end: *nodes.last().unwrap(),
            count: nodes.len(),
            law: SpacingLaw::Uniform,
        };
        Self::from_nodes_with_segments(nodes, vec![seg])
    }

    fn from_nodes_with_segments(nodes: Vec<f64>, segments: Vec<Zone>) -> Result<Self> {
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::Config("nodes not strictly increasing".into()));
            }
        }
        let n = nodes.len();
        if n < 4 {
            return Err(CoreError::Config("grid needs at least 4 nodes".into()));
        }
        let mut dr_weights = vec![0.0; n];
        for i in 0..n - 1 {
            let st = panel_stencil(n, i);
            let xs = &nodes[st.clone()];
            for (jj, gj) in st.clone().enumerate() {
                dr_weights[gj] += lagrange_basis_integral(xs, jj, nodes[i], nodes[i + 1]);
            }
        }
        let weights = dr_weights
            .iter()
            .zip(nodes.iter())
            .map(|(w, r)| w * r * r)
            .collect();
        Ok(RadialGrid {
            nodes,
            weights,
            dr_weights,
            segments,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn segments(&self) -> &[Zone] {
        &self.segments
    }

    /// Weights for the measure `ρ² dρ`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Bare `dρ` weights.
    pub fn dr_weights(&self) -> &[f64] {
        &self.dr_weights
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `∫ g ρ² dρ` for real samples.
    pub fn quad_r2(&self, g: &[f64]) -> f64 {
        g.iter().zip(self.weights.iter()).map(|(a, w)| a * w).sum()
    }

    /// `∫ f dρ` for real samples.
    pub fn quad_dr(&self, f: &[f64]) -> f64 {
        f.iter().zip(self.dr_weights.iter()).map(|(a, w)| a * w).sum()
    }

    /// Cumulative integral `I_i = ∫_{ρ_0}^{ρ_i} f dρ` by per-panel cubic
    /// integration (values at the grid nodes).
    pub fn cumulative_dr<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy
            + std::ops::Add<Output = T>
            + std::ops::Mul<f64, Output = T>
            + num_complex::ComplexFloat<Real = f64>
            + Default,
    {
        let n = self.nodes.len();
        let mut out = Vec::with_capacity(n);
        let mut acc = T::default();
        out.push(acc);
        for i in 0..n - 1 {
            let st = panel_stencil(n, i);
            let xs = &self.nodes[st.clone()];
            let mut panel = T::default();
            for (jj, gj) in st.clone().enumerate() {
                let bi = lagrange_basis_integral(xs, jj, self.nodes[i], self.nodes[i + 1]);
                panel = panel + f[gj] * bi;
            }
            acc = acc + panel;
            out.push(acc);
        }
        out
    }

    /// Index of the first node `>= r` (clamped to the last node).
    pub fn lower_bound(&self, r: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&r).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.min(self.nodes.len() - 1),
        }
    }
}

/// Fornberg's algorithm: weights of the finite-difference approximation of
/// derivatives `0..=m` at `z` from samples at `x`.
///
/// Returns a `(m+1) x x.len()` row-major matrix.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![0.0; (m + 1) * n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k * n + i] = c1 * (k as f64 * c[(k - 1) * n + i - 1] - c5 * c[k * n + i - 1]) / c2;
                }
                c[i] = -c1 * c5 * c[i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k * n + j] = (c4 * c[k * n + j] - k as f64 * c[(k - 1) * n + j]) / c3;
            }
            c[j] = c4 * c[j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_zone_spacing() {
        let spec = GridSpec::uniform(10.0, 101);
        let g = RadialGrid::new(&spec).unwrap();
        assert_eq!(g.len(), 101);
        let h = g.nodes()[1] - g.nodes()[0];
        assert!((h - 0.1).abs() < 1e-12);
        for w in g.nodes().windows(2) {
            assert!((w[1] - w[0] - 0.1).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_rho2_of_one() {
        // ∫_0^1 ρ² dρ = 1/3, exact for the cubic panel rule
        let g = RadialGrid::new(&GridSpec::uniform(1.0, 51)).unwrap();
        let ones = vec![1.0; g.len()];
        assert!((g.quad_r2(&ones) - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_exp_decay() {
        // ∫_0^∞ e^{-ρ} ρ² dρ = Γ(3) = 2
        let g = RadialGrid::new(&GridSpec::uniform(40.0, 4001)).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| (-r).exp()).collect();
        assert!((g.quad_r2(&f) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn quadrature_polynomial_exactness() {
        // cubic integrand in ρ (weight included) must be exact
        let g = RadialGrid::new(&GridSpec::uniform(2.0, 21)).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| 3.0 * r + 1.0).collect();
        // ∫_0^2 (3ρ+1) dρ = 6 + 2 = 8
        assert!((g.quad_dr(&f) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_zone_contiguous() {
        let spec = GridSpec::three_zone(5.0, 100.0, 1000.0, 101, 200, 100);
        let g = RadialGrid::new(&spec).unwrap();
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!((g.r_max() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn gapped_zones_rejected() {
        let spec = GridSpec {
            zones: vec![
                Zone { start: 0.0, end: 1.0, count: 11, law: SpacingLaw::Uniform },
                Zone { start: 1.5, end: 2.0, count: 11, law: SpacingLaw::Uniform },
            ],
        };
        assert!(RadialGrid::new(&spec).is_err());
    }

    #[test]
    fn fornberg_first_derivative() {
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fornberg_weights(0.0, &x, 2);
        // classic 4th-order centred first derivative: [1/12, -2/3, 0, 2/3, -1/12]
        let d1 = &w[5..10];
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in d1.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_matches_total() {
        let g = RadialGrid::new(&GridSpec::uniform(3.0, 301)).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| r.sin()).collect();
        let cum = g.cumulative_dr(&f);
        assert!((cum.last().unwrap() - g.quad_dr(&f)).abs() < 1e-13);
        // ∫_0^3 sin = 1 - cos 3
        assert!((cum.last().unwrap() - (1.0 - 3.0_f64.cos())).abs() < 1e-9);
    }
}
