//! Smooth radial cutoffs and their exact derivatives.
//!
//! The basic bump is Θ(r) = h(2-r) / (h(2-r) + h(r-1)) with h(s) = e^{-1/s}
//! for s > 0 and h = 0 otherwise: identically 1 on r ≤ 1, identically 0 on
//! r ≥ 2, C^∞ in between.  Derivatives come from degree-4 Taylor jets, not
//! finite differences.

use crate::jet::Jet4;

fn h_jet(s: Jet4) -> Jet4 {
    if s.value() <= 0.0 {
        Jet4::constant(0.0)
    } else {
        (-(Jet4::constant(1.0) / s)).exp()
    }
}

/// Θ and its first four derivatives at `r`.
pub fn bump_jet(r: f64) -> Jet4 {
    if r <= 1.0 {
        return Jet4::constant(1.0);
    }
    if r >= 2.0 {
        return Jet4::constant(0.0);
    }
    let x = Jet4::variable(r);
    let a = h_jet(Jet4::constant(2.0) - x);
    let b = h_jet(x - Jet4::constant(1.0));
    a / (a + b)
}

/// Θ(r).
pub fn bump(r: f64) -> f64 {
    bump_jet(r).value()
}

/// Radial bump rescaled to turn off across `[scale, 2*scale]`:
/// `Θ_s(r) = Θ(r / scale)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledBump {
    pub scale: f64,
}

impl ScaledBump {
    pub fn new(scale: f64) -> Self {
        assert!(scale > 0.0);
        ScaledBump { scale }
    }

    pub fn value(&self, r: f64) -> f64 {
        bump(r / self.scale)
    }

    /// Value plus derivatives in `r` up to order 4.
    pub fn jet(&self, r: f64) -> Jet4 {
        let inner = bump_jet(r / self.scale);
        let mut c = inner.c;
        let mut p = 1.0;
        for k in 0..5 {
            c[k] *= p;
            p /= self.scale;
        }
        Jet4 { c }
    }

    /// `ξ·∇Θ_s` evaluated radially: `r Θ_s'(r)`.
    pub fn tilde(&self, r: f64) -> f64 {
        r * self.jet(r).deriv(1)
    }
}

/// Fourier-side cutoff θ_κ(k) = θ(k/κ) with θ(k) = Θ(4|k|):
/// equals 1 on |k| ≤ κ/4 and 0 on |k| ≥ κ/2.
pub fn theta_kappa(kappa: f64, k: f64) -> f64 {
    bump(4.0 * k.abs() / kappa)
}
