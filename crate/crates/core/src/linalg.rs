//! Small dense linear algebra: LU with partial pivoting for the collocation
//! and Jacobian systems. Matrices are row-major `Vec<f64>`.

use crate::{Error, Result};

/// LU factorization with partial pivoting, stored in place.
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut max = a[k * n + k].abs();
            for r in (k + 1)..n {
                let v = a[r * n + k].abs();
                if v > max {
                    max = v;
                    p = r;
                }
            }
            if max == 0.0 {
                return Err(Error::Solver(format!(
                    "singular dense matrix: zero pivot at column {k} of {n}"
                )));
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let pivot = a[k * n + k];
            for r in (k + 1)..n {
                let f = a[r * n + k] / pivot;
                a[r * n + k] = f;
                for c in (k + 1)..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
        Ok(Self { n, lu: a, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for k in 0..n {
            for r in (k + 1)..n {
                x[r] -= self.lu[r * n + k] * x[k];
            }
        }
        for k in (0..n).rev() {
            for c in (k + 1)..n {
                x[k] -= self.lu[k * n + c] * x[c];
            }
            x[k] /= self.lu[k * n + k];
        }
        x
    }
}

/// Inverse and determinant of a small square matrix (row-major).
pub fn invert(a: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let lu = DenseLu::factor(a.to_vec(), n)?;
    let mut det = 1.0;
    for k in 0..n {
        det *= lu.lu[k * n + k];
    }
    // piv records final row origins; the permutation parity fixes the sign.
    let mut seen = vec![false; n];
    let mut parity = 0usize;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = lu.piv[i];
            len += 1;
        }
        parity += len - 1;
    }
    if parity % 2 == 1 {
        det = -det;
    }
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for c in 0..n {
        e.fill(0.0);
        e[c] = 1.0;
        let col = lu.solve(&e);
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    Ok((inv, det))
}
