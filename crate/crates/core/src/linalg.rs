//! Small dense linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition `A = V diag(values) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let d = a.nrows();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm is at
/// most `1e-12` times the Frobenius norm of the input.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let d = a.nrows();
    if d != a.ncols() {
        return Err(Error::domain("jacobi_eigen needs a square matrix"));
    }
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(d, d);
    let scale = a.norm();
    let target = JACOBI_TOL * scale.max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    while off_diagonal_norm(&m) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::numerical(
                "cyclic Jacobi did not converge",
                off_diagonal_norm(&m),
            ));
        }
        sweeps += 1;
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns
                for k in 0..d {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                // rows
                for k in 0..d {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..d).map(|i| m[(i, i)]).collect();
    Ok(SymmetricEigen {
        values,
        vectors: v,
        sweeps,
    })
}

/// Largest absolute deviation from symmetry.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Spectral (operator) norm induced by the Euclidean norm.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if asymmetry(a) == 0.0 {
        if let Ok(e) = jacobi_eigen(a) {
            return e.values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
    }
    let ata = a.transpose() * a;
    match jacobi_eigen(&ata) {
        Ok(e) => e.values.iter().fold(0.0f64, |m, v| m.max(*v)).max(0.0).sqrt(),
        Err(_) => a.norm(),
    }
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(a.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::numerical("matrix is not positive definite", asymmetry(a)))
}

pub fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_reconstructs_input() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0]);
        let e = jacobi_eigen(&a).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let back = &e.vectors * d * e.vectors.transpose();
        assert!((back - &a).abs().max() < 1e-12);
        let orth = e.vectors.transpose() * &e.vectors - DMatrix::identity(3, 3);
        assert!(orth.abs().max() < 1e-12);
    }

    #[test]
    fn jacobi_on_diagonal_is_immediate() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let e = jacobi_eigen(&a).unwrap();
        assert_eq!(e.sweeps, 0);
        assert_eq!(e.values, vec![4.0, 9.0]);
    }

    #[test]
    fn operator_norm_of_nonsymmetric() {
        // [[0, 2], [0, 0]] has singular values 2 and 0.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert_abs_diff_eq!(operator_norm(&a), 2.0, epsilon = 1e-12);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -3.0]);
        assert_abs_diff_eq!(operator_norm(&s), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::default();
        c.add(1e16);
        c.add(1.0);
        c.add(-1e16);
        assert_eq!(c.value(), 1.0);
    }
}
