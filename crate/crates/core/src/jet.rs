//! Truncated Taylor series (value + derivatives up to order 4) in one
//! variable, used to get exact derivatives of the smooth cutoffs.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Degree-4 Taylor jet: `c[k]` is the k-th derivative divided by k!.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet4 {
    pub c: [f64; 5],
}

impl Jet4 {
    pub fn constant(v: f64) -> Self {
        Jet4 { c: [v, 0.0, 0.0, 0.0, 0.0] }
    }

    /// The identity function at base point `x`.
    pub fn variable(x: f64) -> Self {
        Jet4 { c: [x, 1.0, 0.0, 0.0, 0.0] }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative (not the Taylor coefficient).
    pub fn deriv(&self, k: usize) -> f64 {
        const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];
        self.c[k] * FACT[k]
    }

    pub fn exp(self) -> Jet4 {
        // e^f: g' = f' g, recursion on Taylor coefficients
        let e0 = self.c[0].exp();
        let mut g = [0.0; 5];
        g[0] = e0;
        for k in 1..5 {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * g[k - j];
            }
            g[k] = acc / k as f64;
        }
        Jet4 { c: g }
    }

    pub fn recip(self) -> Jet4 {
        // 1/f: leading term must be nonzero
        let inv = 1.0 / self.c[0];
        let mut g = [0.0; 5];
        g[0] = inv;
        for k in 1..5 {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * g[k - j];
            }
            g[k] = -inv * acc;
        }
        Jet4 { c: g }
    }
}

impl Add for Jet4 {
    type Output = Jet4;
    fn add(self, o: Jet4) -> Jet4 {
        let mut c = self.c;
        for k in 0..5 {
            c[k] += o.c[k];
        }
        Jet4 { c }
    }
}

impl Sub for Jet4 {
    type Output = Jet4;
    fn sub(self, o: Jet4) -> Jet4 {
        let mut c = self.c;
        for k in 0..5 {
            c[k] -= o.c[k];
        }
        Jet4 { c }
    }
}

impl Neg for Jet4 {
    type Output = Jet4;
    fn neg(self) -> Jet4 {
        let mut c = self.c;
        for v in c.iter_mut() {
            *v = -*v;
        }
        Jet4 { c }
    }
}

impl Mul for Jet4 {
    type Output = Jet4;
    fn mul(self, o: Jet4) -> Jet4 {
        let mut c = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet4 { c }
    }
}

impl Div for Jet4 {
    type Output = Jet4;
    fn div(self, o: Jet4) -> Jet4 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet4 {
    type Output = Jet4;
    fn mul(self, s: f64) -> Jet4 {
        let mut c = self.c;
        for v in c.iter_mut() {
            *v *= s;
        }
        Jet4 { c }
    }
}
