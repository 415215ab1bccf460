//! Dense symmetric matrices and cyclic Jacobi eigendecomposition.

use std::ops::{Index, IndexMut};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Matrix {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix rows must be square");
        Matrix { n, data: rows.concat() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute difference between `self[i][j]` and `self[j][i]`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in i + 1..self.n {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues and eigenvectors of a symmetric matrix.
///
/// Column `k` of `vectors` is the unit eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
///
/// The input is symmetrized first, so tiny round-off asymmetry is harmless.
pub fn symmetric_eigen(m: &Matrix) -> Eigen {
    let n = m.dim();
    let mut a = m.clone();
    a.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius();
    if scale == 0.0 {
        return Eigen { values: vec![0.0; n], vectors: v };
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * a[(i, j)]).sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s, t);
            }
        }
    }

    Eigen { values: (0..n).map(|i| a[(i, i)]).collect(), vectors: v }
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = a.dim();
    let apq = a[(p, q)];
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let akp = a[(k, p)];
            let akq = a[(k, q)];
            let new_p = c * akp - s * akq;
            let new_q = s * akp + c * akq;
            a[(k, p)] = new_p;
            a[(p, k)] = new_p;
            a[(k, q)] = new_q;
            a[(q, k)] = new_q;
        }
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Relative tolerance for negative eigenvalues of a nominally PSD matrix.
pub const PSD_TOLERANCE: f64 = 1e-6;

/// Clamps small negative eigenvalues to zero.
///
/// Returns the most negative eigenvalue as the error when it falls below
/// `-PSD_TOLERANCE * max|λ|`.
pub fn clamp_psd(values: &mut [f64]) -> Result<(), f64> {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE * max {
        return Err(min);
    }
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(())
}

/// Reassembles `V diag(f(λ)) Vᵀ`.
pub fn spectral_map(e: &Eigen, f: impl Fn(f64) -> f64) -> Matrix {
    let n = e.values.len();
    let mapped: Vec<f64> = e.values.iter().map(|&x| f(x)).collect();
    let mut out = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| e.vectors[(i, k)] * mapped[k] * e.vectors[(j, k)]).sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    out
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &Matrix) -> Result<Matrix, f64> {
    let mut e = symmetric_eigen(m);
    clamp_psd(&mut e.values)?;
    Ok(spectral_map(&e, f64::sqrt))
}

/// Singular values by one-sided (Hestenes) Jacobi rotations.
///
/// Rows are orthogonalized in place; the singular values are the final row
/// norms, unsorted.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let n = m.dim();
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (head, tail) = rows.split_at_mut(q);
                let (u, w) = (&mut head[p], &mut tail[0]);
                let alpha: f64 = u.iter().map(|x| x * x).sum();
                let beta: f64 = w.iter().map(|x| x * x).sum();
                let gamma: f64 = u.iter().zip(w.iter()).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in u.iter_mut().zip(w.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
}
