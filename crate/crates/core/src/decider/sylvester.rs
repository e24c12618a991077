//! The linear space `{A : A = Aᵀ, T A = A Tᵀ}` in which every certificate lives.

use crate::linalg::{nullspace_with_gap, CMatrix, ONE};

/// Frobenius-orthonormal basis of the symmetric solutions of `T A = A Tᵀ`.
#[derive(Clone, Debug)]
pub struct SylvesterSpace {
    basis: Vec<CMatrix>,
    /// Number of free parameters of a symmetric `n × n` matrix.
    pub unknowns: usize,
    pub smallest_kept: Option<f64>,
    pub largest_dropped: Option<f64>,
}

impl SylvesterSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Wraps an explicit basis; the caller vouches for orthonormality and symmetry.
    pub fn from_basis(basis: Vec<CMatrix>) -> Self {
        let unknowns = basis.first().map_or(0, |b| b.nrows() * (b.nrows() + 1) / 2);
        SylvesterSpace {
            basis,
            unknowns,
            smallest_kept: None,
            largest_dropped: None,
        }
    }

    /// `Σ c_i B_i`.
    pub fn combine(&self, coeffs: &[num_complex::Complex64]) -> CMatrix {
        let n = self.basis.first().map_or(0, CMatrix::nrows);
        let mut a = CMatrix::zeros(n, n);
        for (b, &ci) in self.basis.iter().zip(coeffs) {
            a += b * ci;
        }
        a
    }
}

/// Orthonormal basis of the symmetric `n × n` matrices: `E_ii` and `(E_ij + E_ji)/√2`.
fn symmetric_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    if i == j {
        e[(i, i)] = ONE;
    } else {
        let s = num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        e[(i, j)] = s;
        e[(j, i)] = s;
    }
    e
}

/// Nullspace of `A ↦ T A − A Tᵀ` restricted to symmetric `A`.
///
/// Parameterizing symmetric matrices directly makes the `A = Aᵀ` half of the
/// stacked system hold by construction.
pub fn sylvester_space(t: &CMatrix, rank_tol: f64) -> SylvesterSpace {
    let n = t.nrows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let tt = t.transpose();
    let mut l = CMatrix::zeros(n * n, pairs.len());
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let e = symmetric_unit(n, i, j);
        let img = t * &e - &e * &tt;
        for (r, z) in img.iter().enumerate() {
            l[(r, k)] = *z;
        }
    }
    let (null, smallest_kept, largest_dropped) = nullspace_with_gap(&l, rank_tol);
    let basis = null
        .column_iter()
        .map(|v| {
            let mut a = CMatrix::zeros(n, n);
            for (k, &(i, j)) in pairs.iter().enumerate() {
                a += symmetric_unit(n, i, j) * v[k];
            }
            a
        })
        .collect();
    SylvesterSpace {
        basis,
        unknowns: pairs.len(),
        smallest_kept,
        largest_dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, ZERO};

    fn check_space(t: &CMatrix, s: &SylvesterSpace) {
        for (a, b) in s.basis().iter().enumerate() {
            assert!(frobenius(&(b - b.transpose())) < 1e-12);
            assert!(frobenius(&(t * b - b * t.transpose())) < 1e-10);
            for c in &s.basis()[a..] {
                let ip = (b.adjoint() * c).trace();
                let expected = if std::ptr::eq(b, c) { 1.0 } else { 0.0 };
                assert!((ip.re - expected).abs() < 1e-12 && ip.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_operator_gives_all_symmetric_matrices() {
        let t = CMatrix::zeros(2, 2);
        let s = sylvester_space(&t, 1e-10);
        assert_eq!(s.dim(), 3);
        check_space(&t, &s);
    }

    #[test]
    fn jordan_cell_space_is_flip_plus_corner() {
        let t = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        let s = sylvester_space(&t, 1e-10);
        assert_eq!(s.dim(), 2);
        check_space(&t, &s);
        // Expected span: exchange matrix and e_top e_topᵀ, where T e_0 = e_1 puts the top at index 1.
        let flip = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let mut corner = CMatrix::zeros(2, 2);
        corner[(1, 1)] = ONE;
        for target in [flip, corner] {
            let proj: CMatrix = s
                .basis()
                .iter()
                .map(|b| b * (b.adjoint() * &target).trace())
                .fold(CMatrix::zeros(2, 2), |acc, x| acc + x);
            assert!(frobenius(&(proj - &target)) < 1e-12);
        }
    }
}
