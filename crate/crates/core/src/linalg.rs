//! Small dense helpers on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
///
/// nalgebra returns eigenpairs in no particular order; every caller here
/// wants them ordered, and column signs are left as computed.
pub fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Symmetric inverse square root of a symmetric positive definite matrix.
///
/// Returns `None` when an eigenvalue is not strictly positive.
pub fn inverse_sqrt_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (w, u) = sorted_symmetric_eigen(m.clone());
    if w.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let n = m.nrows();
    let scaled = DMatrix::from_fn(n, n, |r, c| u[(r, c)] / w[c].sqrt());
    Some(symmetrize(&(&scaled * u.transpose())))
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite()) && m.clone().cholesky().is_some()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Kronecker product `a ⊗ b`, row index of the result is `ia * b.nrows() + ib`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Truncated position-like operator `a + a†` on `n` Fock states.
pub fn ladder_sum(n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    for k in 1..n {
        let s = (k as f64).sqrt();
        x[(k - 1, k)] = s;
        x[(k, k - 1)] = s;
    }
    x
}

/// `cos(s X)` and `sin(s X)` of a symmetric matrix via its eigenbasis.
pub fn cos_sin_of_symmetric(x: &DMatrix<f64>, s: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let (w, u) = sorted_symmetric_eigen(x.clone());
    let uc = DMatrix::from_fn(n, n, |r, c| u[(r, c)] * (s * w[c]).cos());
    let us = DMatrix::from_fn(n, n, |r, c| u[(r, c)] * (s * w[c]).sin());
    let ut = u.transpose();
    (symmetrize(&(uc * &ut)), symmetrize(&(us * &ut)))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Largest off-diagonal magnitude of `a - a^T`, relative to the largest entry.
pub fn hermiticity_defect(m: &DMatrix<f64>) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(m - m.transpose())) / scale
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// `v^T M v / v^T v` with compensated sums. For an approximate
/// eigenvector the error is quadratic in its residual, so this sharpens
/// eigenvalues beyond the `eps * |M|` of the dense solver.
pub fn rayleigh_quotient(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        let mut row = CompensatedSum::default();
        for (j, &vj) in v.iter().enumerate() {
            row.add(m[(i, j)] * vj);
        }
        num.add(vi * row.value());
        den.add(vi * vi);
    }
    num.value() / den.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_quotient_of_exact_eigenvector() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((rayleigh_quotient(&m, &[3.0, 3.0]) - 3.0).abs() < 1e-15);
        assert!((rayleigh_quotient(&m, &[1.0, -1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_sqrt_squares_back() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let r = inverse_sqrt_spd(&m).unwrap();
        let back = &r * &m * &r;
        assert!((back - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        assert!(hermiticity_defect(&r) == 0.0);
    }

    #[test]
    fn inverse_sqrt_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(inverse_sqrt_spd(&m).is_none());
        assert!(!is_positive_definite(&m));
    }

    #[test]
    fn cosine_of_zero_is_identity() {
        let (c, s) = cos_sin_of_symmetric(&ladder_sum(6), 0.0);
        assert!((c - DMatrix::identity(6, 6)).abs().max() < 1e-14);
        assert!(s.abs().max() < 1e-14);
    }

    #[test]
    fn ladder_sum_entries() {
        let x = ladder_sum(4);
        assert_eq!(x[(0, 1)], 1.0);
        assert!((x[(2, 3)] - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(x[(0, 2)], 0.0);
    }
}
