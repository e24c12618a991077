//! Dense complex linear-algebra helpers shared by the operator modules.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`.
//! Numerical rank and nullspaces use a relative singular-value threshold:
//! a singular value `σ` counts as zero when `σ <= rel_tol * σ_max`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default relative singular-value threshold for rank and nullspace decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn basis_vector(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = ONE;
    v
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// `m^power`, with `m^0 = I`.
pub fn matrix_power(m: &CMatrix, power: usize) -> CMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..power {
        out = &out * m;
    }
    out
}

/// Singular values plus the full right-singular basis (rows of `V*`).
///
/// Wide matrices are padded with zero rows so that `V*` is always square.
fn full_svd(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (rows, cols) = m.shape();
    let padded;
    let source = if rows < cols {
        padded = {
            let mut p = CMatrix::zeros(cols, cols);
            p.view_mut((0, 0), (rows, cols)).copy_from(m);
            p
        };
        &padded
    } else {
        m
    };
    if cols == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let svd = source.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    (svd.singular_values.iter().copied().collect(), v_t)
}

fn threshold(sigmas: &[f64], rel_tol: f64) -> f64 {
    let max = sigmas.iter().copied().fold(0.0_f64, f64::max);
    rel_tol * max
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let max = s.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * max).count()
}

/// Orthonormal basis (as columns) of the numerical nullspace of `m`.
pub fn nullspace(m: &CMatrix, rel_tol: f64) -> CMatrix {
    split_row_space(m, rel_tol).1
}

/// Orthonormal basis (as columns) of the row space of `m`, i.e. `(ker m)^⊥`.
pub fn kernel_complement(m: &CMatrix, rel_tol: f64) -> CMatrix {
    split_row_space(m, rel_tol).0
}

/// Splits the domain of `m` into `(ker m)^⊥` and `ker m`, both as orthonormal columns.
fn split_row_space(m: &CMatrix, rel_tol: f64) -> (CMatrix, CMatrix) {
    let n = m.ncols();
    let (sigmas, v_t) = full_svd(m);
    let thr = threshold(&sigmas, rel_tol);
    let mut keep = Vec::new();
    let mut null = Vec::new();
    for (i, &s) in sigmas.iter().enumerate() {
        let col: CVector = v_t.row(i).adjoint();
        if s > thr && s > 0.0 {
            keep.push(col);
        } else {
            null.push(col);
        }
    }
    (columns(n, &keep), columns(n, &null))
}

/// Same as [`nullspace`] but also returns the smallest singular value that was kept
/// and the largest that was discarded, for diagnostics.
pub fn nullspace_with_gap(m: &CMatrix, rel_tol: f64) -> (CMatrix, Option<f64>, Option<f64>) {
    let n = m.ncols();
    let (sigmas, v_t) = full_svd(m);
    let thr = threshold(&sigmas, rel_tol);
    let mut null = Vec::new();
    let mut smallest_kept: Option<f64> = None;
    let mut largest_null: Option<f64> = None;
    for (i, &s) in sigmas.iter().enumerate() {
        if s > thr && s > 0.0 {
            smallest_kept = Some(smallest_kept.map_or(s, |k| k.min(s)));
        } else {
            largest_null = Some(largest_null.map_or(s, |k| k.max(s)));
            null.push(v_t.row(i).adjoint());
        }
    }
    (columns(n, &null), smallest_kept, largest_null)
}

pub fn columns(n: usize, cols: &[CVector]) -> CMatrix {
    let mut out = CMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Orthogonal projector onto the span of the orthonormal columns of `q`.
pub fn projector(q: &CMatrix) -> CMatrix {
    q * q.adjoint()
}

/// Spectral-norm distance between the orthogonal projectors onto two subspaces.
///
/// Zero iff the subspaces coincide; at least one when their dimensions differ.
pub fn subspace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = projector(a) - projector(b);
    singular_values(&d).first().copied().unwrap_or(0.0)
}

/// Gram–Schmidt (two passes) of `candidates` against the orthonormal set `against`.
/// Vectors whose remaining norm falls below `drop_tol` are skipped.
pub fn gram_schmidt(against: &[CVector], candidates: &[CVector], drop_tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = against.to_vec();
    let mut out = Vec::new();
    for cand in candidates {
        let mut v = cand.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > drop_tol {
            v /= real(norm);
            basis.push(v.clone());
            out.push(v);
        }
    }
    out
}

/// `‖Q* Q − I‖_F` for the columns of `q`.
pub fn orthonormality_residual(q: &CMatrix) -> f64 {
    frobenius(&(q.adjoint() * q - identity(q.ncols())))
}

/// Row-major `[re, im]` pairs, the wire form used by every matrix-carrying document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowMajor(pub Vec<[f64; 2]>);

impl RowMajor {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut out = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                out.push([z.re, z.im]);
            }
        }
        RowMajor(out)
    }

    pub fn to_matrix(&self, rows: usize, cols: usize) -> Result<CMatrix> {
        if self.0.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: self.0.len(),
            });
        }
        Ok(CMatrix::from_row_iterator(
            rows,
            cols,
            self.0.iter().map(|p| c(p[0], p[1])),
        ))
    }
}

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn unpair(p: [f64; 2]) -> Complex64 {
    c(p[0], p[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_jordan_block() {
        let mut j = CMatrix::zeros(3, 3);
        j[(1, 0)] = ONE;
        j[(2, 1)] = ONE;
        assert_eq!(numerical_rank(&j, DEFAULT_RANK_TOL), 2);
        assert_eq!(numerical_rank(&CMatrix::zeros(3, 3), DEFAULT_RANK_TOL), 0);
    }

    #[test]
    fn nullspace_of_wide_matrix_is_complete() {
        let m = CMatrix::from_row_slice(1, 3, &[ONE, ONE, ZERO]);
        let k = nullspace(&m, DEFAULT_RANK_TOL);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).norm() < 1e-14);
        assert!(orthonormality_residual(&k) < 1e-14);
        let r = kernel_complement(&m, DEFAULT_RANK_TOL);
        assert_eq!(r.ncols(), 1);
    }

    #[test]
    fn subspace_distance_detects_equal_and_distinct() {
        let a = columns(2, &[basis_vector(2, 0)]);
        let b = columns(2, &[basis_vector(2, 0) * c(0.0, 1.0)]);
        assert!(subspace_distance(&a, &b) < 1e-15);
        let e = columns(2, &[basis_vector(2, 1)]);
        assert!((subspace_distance(&a, &e) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn row_major_round_trip() {
        let m = CMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        let rm = RowMajor::from_matrix(&m);
        assert_eq!(rm.0[1], [0.0, 1.0]);
        assert_eq!(rm.to_matrix(2, 3).unwrap(), m);
        assert!(rm.to_matrix(3, 3).is_err());
    }
}
