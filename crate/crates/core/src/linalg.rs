//! Small dense linear-algebra helpers not covered by nalgebra.

use crate::{CMatrix, CVector, Complex64, Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Kronecker product `a ⊗ b` of two column vectors.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Khatri-Rao (column-wise Kronecker) product: column `j` is `a_j ⊗ b_j`.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "khatri-rao operands have {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let rows = a.nrows() * b.nrows();
    let mut out = CMatrix::zeros(rows, a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aij = a[(i, j)];
            for r in 0..b.nrows() {
                out[(i * b.nrows() + r, j)] = aij * b[(r, j)];
            }
        }
    }
    Ok(out)
}

/// Column-major vectorization.
pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Squared Frobenius norm.
pub fn energy(m: &[Complex64]) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Inner product `xᴴ y` over flat slices.
pub fn dot_h(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Matrix `a diag(d) b` without forming the diagonal matrix.
pub fn scale_mul(a: &CMatrix, d: &CVector, b: &CMatrix) -> CMatrix {
    let mut scaled = b.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= d[i];
    }
    a * scaled
}

/// Circularly-symmetric complex normal draw with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. unit-variance complex normal entries.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Least-squares solution of `a x ≈ y` via SVD with a relative cutoff.
pub fn least_squares(a: &CMatrix, y: &CVector) -> Result<CVector> {
    if a.ncols() == 0 {
        return Ok(CVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok(CVector::zeros(a.ncols()));
    }
    svd.solve(y, smax * 1e-12)
        .map_err(|e| Error::SingularSystem(e.to_string()))
}
