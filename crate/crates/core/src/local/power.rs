use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, jacobi_eigen};

/// `A^α = U D^α Uᵀ` for a symmetric positive-definite `A`.
pub fn fractional_power(a: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::domain("fractional_power needs a square matrix"));
    }
    let skew = asymmetry(a);
    if skew > 1e-10 * a.amax().max(1.0) {
        return Err(Error::domain(format!("matrix is not symmetric (asymmetry {skew:e})")));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = jacobi_eigen(&sym)?;
    if let Some(bad) = eig.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::domain(format!("matrix has non-positive eigenvalue {bad}")));
    }
    let powered = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|v| v.powf(alpha)));
    let u = &eig.vectors;
    let out = u * DMatrix::from_diagonal(&powered) * u.transpose();
    Ok((&out + out.transpose()) * 0.5)
}
