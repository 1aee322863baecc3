//! Truncated power series in a radial variable with exponent step 2
//! (Laurent tails like `y^{-5}, y^{-3}, y^{-1}, y, ...`), used for the
//! algebra of matched expansions.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Series Σ_j c[j] y^{e0 + 2j} with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTwoSeries {
    pub e0: i32,
    pub c: Vec<Complex64>,
}

impl StepTwoSeries {
    pub fn new(e0: i32, c: Vec<Complex64>) -> Self {
        StepTwoSeries { e0, c }
    }

    pub fn zero() -> Self {
        StepTwoSeries { e0: 0, c: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Largest exponent present.
    pub fn e_max(&self) -> i32 {
        self.e0 + 2 * (self.c.len() as i32 - 1)
    }

    /// Coefficient of `y^e` (zero if absent or off-parity).
    pub fn coeff(&self, e: i32) -> Complex64 {
        let d = e - self.e0;
        if d < 0 || d % 2 != 0 {
            return Complex64::default();
        }
        self.c.get((d / 2) as usize).copied().unwrap_or_default()
    }

    pub fn eval(&self, y: f64) -> Complex64 {
        let mut acc = Complex64::default();
        let y2 = y * y;
        // Horner from the top, then multiply by the leading power
        for &ck in self.c.iter().rev() {
            acc = acc * y2 + ck;
        }
        acc * y.powi(self.e0)
    }

    /// Termwise derivative d/dy.
    pub fn derivative(&self) -> StepTwoSeries {
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(j, ck)| ck * (self.e0 + 2 * j as i32) as f64)
            .collect();
        StepTwoSeries { e0: self.e0 - 1, c }
    }

    /// Complex conjugate of the series evaluated on the real axis.
    pub fn conj(&self) -> StepTwoSeries {
        StepTwoSeries {
            e0: self.e0,
            c: self.c.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> StepTwoSeries {
        StepTwoSeries {
            e0: self.e0,
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    /// Sum; both series must live on the same exponent parity.
    pub fn add(&self, other: &StepTwoSeries) -> Result<StepTwoSeries> {
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        if (self.e0 - other.e0) % 2 != 0 {
            return Err(CoreError::Domain(
                "cannot add series of opposite exponent parity".into(),
            ));
        }
        let e0 = self.e0.min(other.e0);
        let e_max = self.e_max().max(other.e_max());
        let n = ((e_max - e0) / 2 + 1) as usize;
        let mut c = vec![Complex64::default(); n];
        for (j, v) in c.iter_mut().enumerate() {
            let e = e0 + 2 * j as i32;
            *v = self.coeff(e) + other.coeff(e);
        }
        Ok(StepTwoSeries { e0, c })
    }

    /// Product truncated to at most `keep` terms.
    pub fn mul(&self, other: &StepTwoSeries, keep: usize) -> StepTwoSeries {
        if self.is_empty() || other.is_empty() {
            return StepTwoSeries::zero();
        }
        let e0 = self.e0 + other.e0;
        let n = (self.c.len() + other.c.len() - 1).min(keep);
        let mut c = vec![Complex64::default(); n];
        for (i, a) in self.c.iter().enumerate() {
            if i >= n {
                break;
            }
            for (j, b) in other.c.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                c[i + j] += a * b;
            }
        }
        StepTwoSeries { e0, c }
    }

    /// `self^p` truncated to `keep` terms.
    pub fn pow(&self, p: u32, keep: usize) -> StepTwoSeries {
        let mut acc = StepTwoSeries::new(0, vec![Complex64::new(1.0, 0.0)]);
        for _ in 0..p {
            acc = acc.mul(self, keep);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_laurent() {
        // 2/y + 3y
        let s = StepTwoSeries::new(-1, vec![c(2.0, 0.0), c(3.0, 0.0)]);
        let v = s.eval(2.0);
        assert!((v.re - 7.0).abs() < 1e-14);
        assert_eq!(s.coeff(-1), c(2.0, 0.0));
        assert_eq!(s.coeff(1), c(3.0, 0.0));
        assert_eq!(s.coeff(0), c(0.0, 0.0));
    }

    #[test]
    fn product_matches_pointwise() {
        let a = StepTwoSeries::new(-1, vec![c(1.0, 0.5), c(-0.3, 0.1), c(0.02, 0.0)]);
        let b = StepTwoSeries::new(1, vec![c(2.0, -1.0), c(0.4, 0.4)]);
        let p = a.mul(&b, 16);
        for y in [0.7, 1.3, 2.9] {
            let want = a.eval(y) * b.eval(y);
            assert!((p.eval(y) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn conj_on_real_axis() {
        let a = StepTwoSeries::new(-3, vec![c(1.0, 2.0), c(0.5, -0.25)]);
        for y in [0.5, 1.5] {
            assert!((a.conj().eval(y) - a.eval(y).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn fifth_power_of_tail() {
        // (1/y)^5 = y^{-5}
        let a = StepTwoSeries::new(-1, vec![c(1.0, 0.0)]);
        let p = a.pow(5, 8);
        assert_eq!(p.e0, -5);
        assert_eq!(p.coeff(-5), c(1.0, 0.0));
    }

    #[test]
    fn derivative_termwise() {
        let a = StepTwoSeries::new(-1, vec![c(2.0, 0.0), c(3.0, 0.0)]);
        let d = a.derivative();
        // d/dy (2/y + 3y) = -2/y² + 3
        assert!((d.eval(2.0).re - (3.0 - 0.5)).abs() < 1e-14);
    }
}
