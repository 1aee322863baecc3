//! Adaptive Dormand-Prince 5(4) integration for complex first-order systems.
//!
//! Output is recorded at caller-supplied nodes; the controller clamps steps
//! so every node is hit exactly, which keeps the recorded values free of
//! interpolation error.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `nodes[0]` through each node in order
/// (monotone increasing or decreasing), returning the state at every node.
pub fn integrate_to_nodes<F>(
    mut f: F,
    nodes: &[f64],
    y0: &[Complex64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<Complex64>>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    if nodes.len() < 2 {
        return Ok(vec![y0.to_vec()]);
    }
    let dir = (nodes[nodes.len() - 1] - nodes[0]).signum();
    if dir == 0.0 {
        return Err(CoreError::Domain("degenerate node span".into()));
    }
    for w in nodes.windows(2) {
        if (w[1] - w[0]) * dir <= 0.0 {
            return Err(CoreError::Domain("output nodes not monotone".into()));
        }
    }
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut t = nodes[0];
    let mut out = Vec::with_capacity(nodes.len());
    out.push(y.clone());

    let mut k: [Vec<Complex64>; 7] = Default::default();
    for kk in k.iter_mut() {
        *kk = vec![Complex64::default(); dim];
    }
    let mut ytmp = vec![Complex64::default(); dim];
    let mut h = opts.h_init.min(opts.h_max).abs() * dir;
    f(t, &y, &mut k[0]);
    let mut steps = 0usize;

    for &target in &nodes[1..] {
        loop {
            if (target - t) * dir <= 1e-14 * t.abs().max(1.0) {
                break;
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(CoreError::Convergence(format!(
                    "step budget exhausted at t = {t}"
                )));
            }
            if (t + h - target) * dir > 0.0 {
                h = target - t;
            }
            // stages
            for s in 0..6 {
                for i in 0..dim {
                    let mut acc = Complex64::default();
                    for (j, kj) in k.iter().enumerate().take(s + 1) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * A[s][j];
                        }
                    }
                    ytmp[i] = y[i] + acc * h;
                }
                let ts = t + C[s] * h;
                let (head, tail) = k.split_at_mut(s + 1);
                let _ = head;
                f(ts, &ytmp, &mut tail[0]);
            }
            // 5th-order solution is stage 6's ytmp (FSAL layout): recompute
            let mut err: f64 = 0.0;
            for i in 0..dim {
                let mut y5 = Complex64::default();
                for (j, kj) in k.iter().enumerate().take(6) {
                    if A[5][j] != 0.0 {
                        y5 += kj[i] * A[5][j];
                    }
                }
                let ynew = y[i] + y5 * h;
                let mut e = Complex64::default();
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += kj[i] * E[j];
                    }
                }
                let e = (e * h).norm();
                let sc = opts.atol + opts.rtol * y[i].norm().max(ynew.norm());
                err = err.max(e / sc);
                ytmp[i] = ynew;
            }
            if err <= 1.0 {
                t += h;
                y.copy_from_slice(&ytmp);
                k.swap(0, 6); // FSAL: k7 becomes k1
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                h = (h * fac).abs().min(opts.h_max) * dir;
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                h *= fac;
                if h.abs() < 1e-15 * t.abs().max(1.0) {
                    return Err(CoreError::Convergence(format!(
                        "step size underflow at t = {t}"
                    )));
                }
                // redo from the same k1
                continue;
            }
        }
        out.push(y.clone());
        f(t, &y, &mut k[0]);
    }
    Ok(out)
}
