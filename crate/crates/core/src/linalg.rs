//! Small dense complex-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

#[cfg(test)]
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest modulus among complex entries.
pub fn max_abs<'a>(entries: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    entries.into_iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// max |A − A†|
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitian_part(a))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Nearest unit-trace positive semidefinite matrix in the eigenbasis of the
/// Hermitian part: negative eigenvalues are clipped, then the trace is
/// rescaled. `None` when nothing positive remains.
pub fn project_psd(a: &CMatrix) -> Option<CMatrix> {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&clipped.map(|l| Complex64::new(l / total, 0.0)));
    Some(hermitian_part(&(v * d * v.adjoint())))
}

/// exp(−i t H) for Hermitian H via its eigendecomposition.
pub fn unitary_from_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = SymmetricEigen::new(hermitian_part(h));
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::from_polar(1.0, -t * l)),
    );
    v * phases * v.adjoint()
}

/// Tr(A B) without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_projection() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.9, 0.0),
            Complex64::new(0.2, 0.0),
            Complex64::new(-0.1, 0.0),
        ]));
        let p = project_psd(&a).unwrap();
        let ev = hermitian_eigenvalues(&p);
        assert!(ev[0].abs() < 1e-15);
        assert!((ev[1] - 0.2 / 1.1).abs() < 1e-15 && (ev[2] - 0.9 / 1.1).abs() < 1e-15);
        assert!(project_psd(&(-a)).is_some());
        assert!(project_psd(&CMatrix::zeros(2, 2)).is_none());
    }
}
