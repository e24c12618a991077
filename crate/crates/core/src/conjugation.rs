//! Conjugations on `ℓ²(V)` stored as symmetric unitary matrices.
//!
//! A conjugation `C` acts as `C f = A · conj(f)`. `C² = I` together with
//! `⟨Cf, Cg⟩ = ⟨g, f⟩` holds exactly when `A` is unitary and `A = Aᵀ`.
//! An operator `T` is `C`-symmetric (`T = C T* C`) iff `T A = A Tᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, identity, CMatrix, CVector, RowMajor};
use crate::tree::VertexId;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Conjugation {
    matrix: CMatrix,
    basis: Vec<VertexId>,
    residual_unitary: f64,
    residual_symmetric: f64,
}

pub fn unitary_residual(a: &CMatrix) -> f64 {
    frobenius(&(a * a.adjoint() - identity(a.nrows())))
}

pub fn symmetric_residual(a: &CMatrix) -> f64 {
    frobenius(&(a - a.transpose()))
}

impl Conjugation {
    /// Wraps `a` after checking both residuals against `tol`.
    pub fn from_matrix(a: CMatrix, basis: Vec<VertexId>, tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        if basis.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: basis.len(),
            });
        }
        let ru = unitary_residual(&a);
        let rs = symmetric_residual(&a);
        if ru > tol || rs > tol || !ru.is_finite() || !rs.is_finite() {
            return Err(Error::NotConjugation {
                unitary: ru,
                symmetric: rs,
            });
        }
        Ok(Conjugation {
            matrix: a,
            basis,
            residual_unitary: ru,
            residual_symmetric: rs,
        })
    }

    /// Assembles `C` from its values on an orthonormal basis: `C u_k = w_k`.
    ///
    /// Antilinearity gives `A conj(U) = W`, hence `A = W Uᵀ`.
    pub fn from_basis_images(
        basis: Vec<VertexId>,
        domain: &[CVector],
        images: &[CVector],
        tol: f64,
    ) -> Result<Self> {
        let n = basis.len();
        if domain.len() != n || images.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: domain.len().min(images.len()),
            });
        }
        let u = crate::linalg::columns(n, domain);
        let w = crate::linalg::columns(n, images);
        let ortho = crate::linalg::orthonormality_residual(&u);
        if ortho > tol {
            return Err(Error::NotOrthonormal(ortho));
        }
        Self::from_matrix(w * u.transpose(), basis, tol)
    }

    /// `C e_v` given for every basis vertex `v`.
    pub fn from_vertex_images(
        basis: Vec<VertexId>,
        images: &[(VertexId, CVector)],
        tol: f64,
    ) -> Result<Self> {
        let n = basis.len();
        let mut a = CMatrix::zeros(n, n);
        let mut seen = vec![false; n];
        for (v, img) in images {
            let k = basis
                .iter()
                .position(|b| b == v)
                .ok_or_else(|| Error::UnknownVertex(v.to_string()))?;
            if img.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: img.len(),
                });
            }
            a.set_column(k, img);
            seen[k] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::MissingWeight(format!("image of e_{}", basis[k])));
        }
        Self::from_matrix(a, basis, tol)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &[VertexId] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn residual_unitary(&self) -> f64 {
        self.residual_unitary
    }

    pub fn residual_symmetric(&self) -> f64 {
        self.residual_symmetric
    }

    pub fn apply(&self, f: &CVector) -> CVector {
        &self.matrix * f.conjugate()
    }

    pub fn to_document(&self) -> ConjugationDocument {
        ConjugationDocument {
            a: RowMajor::from_matrix(&self.matrix),
            basis: self.basis.iter().map(ToString::to_string).collect(),
            residual_unitary: self.residual_unitary,
            residual_symmetric: self.residual_symmetric,
        }
    }

    pub fn from_document(doc: &ConjugationDocument, tol: f64) -> Result<Self> {
        let n = doc.basis.len();
        let a = doc.a.to_matrix(n, n)?;
        Self::from_matrix(a, doc.basis.iter().map(VertexId::new).collect(), tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationDocument {
    #[serde(rename = "A")]
    pub a: RowMajor,
    pub basis: Vec<String>,
    pub residual_unitary: f64,
    pub residual_symmetric: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `‖T A − A Tᵀ‖_F`.
    pub residual: f64,
    pub pass: bool,
    /// Basis index `k` maximizing `‖(T C − C T*) e_k‖`.
    pub worst_basis_index: usize,
    pub worst_basis_residual: f64,
}

/// `T = C T* C` in matrix form: residual `‖T A − A Tᵀ‖_F ≤ tol`.
pub fn verify_c_symmetry(t: &CMatrix, c: &Conjugation, tol: f64) -> Result<SymmetryReport> {
    let a = c.matrix();
    if t.nrows() != a.nrows() || t.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: t.nrows(),
        });
    }
    let diff = t * a - a * t.transpose();
    let residual = frobenius(&diff);
    let (worst_basis_index, worst_basis_residual) = diff
        .column_iter()
        .map(|col| col.norm())
        .enumerate()
        .fold((0, 0.0), |best, (k, r)| if r > best.1 { (k, r) } else { best });
    Ok(SymmetryReport {
        residual,
        pass: residual <= tol,
        worst_basis_index,
        worst_basis_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, c, real, ONE, ZERO};

    fn labels(n: usize) -> Vec<VertexId> {
        (0..n as i64).map(VertexId::int).collect()
    }

    #[test]
    fn identity_images_give_identity() {
        let n = 3;
        let imgs: Vec<_> = (0..n).map(|k| basis_vector(n, k)).collect();
        let conj = Conjugation::from_basis_images(labels(n), &imgs, &imgs, DEFAULT_TOL).unwrap();
        assert_eq!(conj.matrix(), &identity(n));
        let f = CVector::from_vec(vec![c(1.0, 2.0), c(0.0, -1.0), ONE]);
        assert_eq!(conj.apply(&f), f.conjugate());
    }

    #[test]
    fn antisymmetric_images_are_rejected() {
        let e = |k| basis_vector(2, k);
        let images = [e(1), -e(0)];
        let err = Conjugation::from_basis_images(labels(2), &[e(0), e(1)], &images, DEFAULT_TOL)
            .unwrap_err();
        match err {
            Error::NotConjugation { unitary, symmetric } => {
                assert!(unitary < 1e-15);
                // A − Aᵀ = [[0, −2], [2, 0]].
                assert!((symmetric - 8f64.sqrt()).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_operator_is_symmetric_for_any_conjugation() {
        let conj = Conjugation::from_matrix(identity(3), labels(3), DEFAULT_TOL).unwrap();
        let r = verify_c_symmetry(&CMatrix::zeros(3, 3), &conj, DEFAULT_TOL).unwrap();
        assert!(r.pass);
        assert_eq!(r.residual, 0.0);
        assert!(verify_c_symmetry(&CMatrix::zeros(2, 2), &conj, DEFAULT_TOL).is_err());
    }

    #[test]
    fn non_orthonormal_domain_rejected() {
        let e = |k| basis_vector(2, k);
        let domain = [e(0), e(0) + e(1)];
        assert!(matches!(
            Conjugation::from_basis_images(labels(2), &domain, &domain, DEFAULT_TOL),
            Err(Error::NotOrthonormal(_))
        ));
    }

    #[test]
    fn general_orthonormal_domain() {
        // C defined on a rotated basis still yields a symmetric unitary when it is a conjugation.
        let s = 0.5f64.sqrt();
        let u0 = CVector::from_vec(vec![real(s), real(s)]);
        let u1 = CVector::from_vec(vec![real(s), real(-s)]);
        let conj = Conjugation::from_basis_images(
            labels(2),
            &[u0.clone(), u1.clone()],
            &[u0.clone(), u1.clone() * c(0.0, 1.0)],
            DEFAULT_TOL,
        )
        .unwrap();
        assert!((conj.apply(&u1) - u1 * c(0.0, 1.0)).norm() < 1e-15);
        assert!(conj.matrix()[(0, 1)] != ZERO);
    }
}
