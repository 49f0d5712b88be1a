//! Small dense symmetric eigen-solvers: Cholesky factorization, cyclic
//! Jacobi diagonalization, and the symmetric-definite generalized problem
//! `A x = lambda B x` reduced through `C^-1 A C^-T` with `B = C C^T`.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InputShape("matrix rows must form a square".into()));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// `self + c I`
    pub fn add_diagonal(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] += c;
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `v^T M v`
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular `C` with `B = C C^T`.
pub fn cholesky(b: &Matrix) -> Result<Matrix> {
    let n = b.dim();
    let mut c = Matrix::zeros(n);
    for j in 0..n {
        let mut d = b[(j, j)];
        for k in 0..j {
            d -= c[(j, k)] * c[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NumericDegeneracy(format!(
                "matrix is not positive definite (pivot {j} = {d:e})"
            )));
        }
        let djj = d.sqrt();
        c[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)];
            }
            c[(i, j)] = s / djj;
        }
    }
    Ok(c)
}

/// Solves `C x = rhs` for lower-triangular `C`.
fn forward_solve(c: &Matrix, rhs: &[f64]) -> Vec<f64> {
    let n = c.dim();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= c[(i, k)] * x[k];
        }
        x[i] = s / c[(i, i)];
    }
    x
}

/// Solves `C^T x = rhs` for lower-triangular `C`.
fn backward_solve_transposed(c: &Matrix, rhs: &[f64]) -> Vec<f64> {
    let n = c.dim();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in i + 1..n {
            s -= c[(k, i)] * x[k];
        }
        x[i] = s / c[(i, i)];
    }
    x
}

/// Eigen-decomposition result, eigenvalues ascending. `vectors[k]` pairs with `values[k]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

pub const MAX_JACOBI_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization of a symmetric matrix.
pub fn jacobi_eigen(s: &Matrix) -> Result<EigenPairs> {
    let n = s.dim();
    let mut a = s.clone();
    // Symmetrize from the upper triangle; rotations assume exact symmetry.
    for i in 0..n {
        for j in i + 1..n {
            a[(j, i)] = a[(i, j)];
        }
    }
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        (2.0 * s).sqrt()
    };
    let mut sweeps = 0;
    while off(&a) > f64::EPSILON * scale {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off(&a),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    Ok(EigenPairs {
        values: order.iter().map(|&i| a[(i, i)]).collect(),
        vectors: order
            .iter()
            .map(|&i| (0..n).map(|k| v[(k, i)]).collect())
            .collect(),
        sweeps,
    })
}

/// Solves `A x = lambda B x` for symmetric `A` and symmetric positive-definite
/// `B`. Eigenvectors come back B-orthonormal (`x^T B x = 1`).
pub fn generalized_eigen(a: &Matrix, b: &Matrix) -> Result<EigenPairs> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::InputShape(format!(
            "pencil dimensions differ: {n} vs {}",
            b.dim()
        )));
    }
    let c = cholesky(b)?;
    // S = C^-1 A C^-T, built column by column: first Y = C^-1 A, then S = C^-1 Y^T.
    let mut y = Matrix::zeros(n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| a[(i, j)]).collect();
        let x = forward_solve(&c, &col);
        for i in 0..n {
            y[(i, j)] = x[i];
        }
    }
    let mut s = Matrix::zeros(n);
    for j in 0..n {
        let col: Vec<f64> = y.row(j).to_vec();
        let x = forward_solve(&c, &col);
        for i in 0..n {
            s[(i, j)] = x[i];
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = m;
            s[(j, i)] = m;
        }
    }
    let eig = jacobi_eigen(&s)?;
    let vectors = eig
        .vectors
        .iter()
        .map(|u| backward_solve_transposed(&c, u))
        .collect();
    Ok(EigenPairs {
        values: eig.values,
        vectors,
        sweeps: eig.sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Matrix {
        let m = Matrix::from_fn(n, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 0.5 } else { 0.0 }
        });
        // M M^T + I
        Matrix::from_fn(n, |i, j| {
            m.row(i)
                .iter()
                .zip(m.row(j))
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + if i == j { 1.0 } else { 0.0 }
        })
    }

    #[test]
    fn cholesky_reconstructs() {
        let b = spd(6);
        let c = cholesky(&b).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let s: f64 = (0..6).map(|k| c[(i, k)] * c[(j, k)]).sum();
                assert!((s - b[(i, j)]).abs() < 1e-10);
            }
        }
        assert!(cholesky(&Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap()).is_err());
    }

    #[test]
    fn jacobi_diagonalizes() {
        let s = spd(8);
        let e = jacobi_eigen(&s).unwrap();
        for (lam, v) in e.values.iter().zip(&e.vectors) {
            let sv = s.mul_vec(v);
            let r: f64 = sv
                .iter()
                .zip(v)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-12 * s.frobenius_norm());
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(e.sweeps <= 10);
    }

    #[test]
    fn generalized_is_b_orthonormal() {
        let a = Matrix::from_fn(5, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let b = spd(5);
        let e = generalized_eigen(&a, &b).unwrap();
        for (k, x) in e.vectors.iter().enumerate() {
            assert!((b.quadratic_form(x) - 1.0).abs() < 1e-10);
            let ax = a.mul_vec(x);
            let bx = b.mul_vec(x);
            let r: f64 = ax
                .iter()
                .zip(&bx)
                .map(|(p, q)| (p - e.values[k] * q).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-10);
        }
    }
}
