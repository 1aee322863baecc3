//! Complex banded LU with partial pivoting and small dense helpers.
//!
//! The band factorization follows the classic LAPACK `gbtf2` layout: a
//! column-major band store with `kl` extra super-diagonal rows that receive
//! fill-in from row pivoting.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// General complex band matrix, `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major, `ldab = 2*kl + ku + 1` rows per column;
    /// `A[i][j]` lives at `data[j*ldab + kl + ku + i - j]`.
    data: Vec<Complex64>,
}

/// LU factors of a [`BandedMatrix`] ready for repeated solves.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    data: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            data: vec![Complex64::default(); ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = (i as isize, j as isize);
        let d = i - j;
        if d > self.kl as isize || -d > self.ku as isize {
            return None;
        }
        let ldab = (2 * self.kl + self.ku + 1) as isize;
        Some((j * ldab + (self.kl + self.ku) as isize + d) as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.slot(i, j).map(|s| self.data[s]).unwrap_or_default()
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let s = self
            .slot(i, j)
            .expect("entry outside the declared bandwidth");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let s = self
            .slot(i, j)
            .expect("entry outside the declared bandwidth");
        self.data[s] += v;
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::default(); self.n];
        for j in 0..self.n {
            let ilo = j.saturating_sub(self.ku);
            let ihi = (j + self.kl).min(self.n - 1);
            for i in ilo..=ihi {
                y[i] += self.get(i, j) * x[j];
            }
        }
        y
    }

    /// LU factorization with partial pivoting; consumes the matrix.
    pub fn factorize(self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut data = self.data;
        let mut ipiv = vec![0usize; n];
        let mut ju: usize = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // pivot search among band rows kv..=kv+km of column j
            let mut p = 0usize;
            let mut best = data[j * ldab + kv].norm_sqr();
            for q in 1..=km {
                let m = data[j * ldab + kv + q].norm_sqr();
                if m > best {
                    best = m;
                    p = q;
                }
            }
            ipiv[j] = j + p;
            let piv = data[j * ldab + kv + p];
            if piv == Complex64::default() {
                return Err(CoreError::Conditioning(format!(
                    "exactly singular band matrix at column {j}"
                )));
            }
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let a = c * ldab + kv + j - c;
                    let b = c * ldab + kv + j + p - c;
                    data.swap(a, b);
                }
            }
            if km > 0 {
                let inv = 1.0 / data[j * ldab + kv];
                for i in 1..=km {
                    data[j * ldab + kv + i] *= inv;
                }
                for c in j + 1..=ju {
                    let u = data[c * ldab + kv + j - c];
                    if u != Complex64::default() {
                        for i in 1..=km {
                            let l = data[j * ldab + kv + i];
                            data[c * ldab + kv + j + i - c] -= l * u;
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            kv,
            ldab,
            data,
            ipiv,
        })
    }
}

impl BandedLu {
    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        // L has unit diagonal; apply permutations and multipliers
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(self.n - 1 - j);
            let bj = b[j];
            for i in 1..=km {
                b[j + i] -= self.data[j * self.ldab + self.kv + i] * bj;
            }
        }
        // back substitution with U (band rows 0..=kv)
        for j in (0..self.n).rev() {
            let x = b[j] / self.data[j * self.ldab + self.kv];
            b[j] = x;
            let lm = self.kv.min(j);
            for i in 1..=lm {
                b[j - i] -= self.data[j * self.ldab + self.kv - i] * x;
            }
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Least squares `min ‖A c - b‖₂` for a tall dense complex system via the
/// normal equations (intended for a handful of columns).
pub fn lstsq(cols: &[Vec<Complex64>], b: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = cols.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let n = b.len();
    for c in cols {
        if c.len() != n {
            return Err(CoreError::Domain("column length mismatch".into()));
        }
    }
    let mut g = nalgebra::DMatrix::<Complex64>::zeros(m, m);
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = Complex64::default();
            for k in 0..n {
                acc += cols[i][k].conj() * cols[j][k];
            }
            g[(i, j)] = acc;
        }
        let mut acc = Complex64::default();
        for k in 0..n {
            acc += cols[i][k].conj() * b[k];
        }
        rhs[i] = acc;
    }
    let lu = g.lu();
    lu.solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| CoreError::Conditioning("singular normal equations".into()))
}
