//! Conjugation data for the shift on a broom (root `0` with leaves `1..M`) and
//! the kernel structure of a two-level broom.
//!
//! A conjugation `C` with `C S* = S C` on the broom must send `e_0` to the
//! normalized weight vector `f_0` and each `e_i` to `g_i = λ_i (e_0 + h_i)`,
//! where the `h_i` lie in `ker S ⊖ ℂ f_0` and satisfy
//! `‖h_i‖² = (1 − λ_i²)/λ_i²` and `⟨h_i, h_j⟩ = −1` for `i ≠ j`.
//! The sequence is built inductively: `h_{n+1} = Σ_j t_{n+1,j} h_j + s_{n+1} f_{n+1}`
//! with `G t = −𝟙` for the Gram matrix `G` of `h_1..h_n`.
//!
//! Norms grow like `1/λ_i`, so for fast-decaying schedules the Gram constraints
//! cancel catastrophically in `f64`. The induction and the Gram checks run in
//! double-double arithmetic.
//!
//! Weights are taken in `(0, 1)`: `‖h_i‖² ≥ 0` forces `λ_i ≤ 1`. Every step is
//! feasible exactly when `Σ_{i ≤ N} λ_i² < 1`.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, columns, gram_schmidt, kernel_complement, nullspace, real, subspace_distance,
    CMatrix, CVector, ZERO,
};
use crate::shift::{build_shift, WeightAssignment};
use crate::tree::{generate_broom, generate_two_level_broom, VertexId};
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BroomSchedule {
    weights: Vec<f64>,
}

impl BroomSchedule {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSchedule("schedule is empty".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| !(w > 0.0 && w < 1.0))
        {
            return Err(Error::InvalidSchedule(format!(
                "λ_{} = {w} is outside (0, 1)",
                i + 1
            )));
        }
        Ok(BroomSchedule { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(1 − λ_i²)/λ_i²`, the required `‖h_i‖²`.
    pub fn target(&self, i: usize) -> f64 {
        let l2 = self.weights[i] * self.weights[i];
        (1.0 - l2) / l2
    }

    /// Per-step feasibility from the closed form `s_{n+1}² > 0 ⇔ Σ_{i≤n+1} λ_i² < 1`.
    pub fn feasibility(&self) -> Vec<bool> {
        let mut sigma = 0.0;
        self.weights
            .iter()
            .map(|w| {
                sigma += w * w;
                sigma < 1.0
            })
            .collect()
    }
}

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

fn dd_target(l: f64) -> TwoFloat {
    let l2 = dd(l) * dd(l);
    (dd(1.0) - l2) / l2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HStep {
    /// 1-based index of the vector produced at this step.
    pub step: usize,
    /// `t_{step, j}` for `j < step`.
    pub t: Vec<f64>,
    pub s_squared: f64,
    pub s: f64,
}

/// `h_1..h_N` as coordinates in `f_1..f_N` (row `i` is `h_{i+1}`, lower triangular).
#[derive(Clone, Debug, PartialEq)]
pub struct HSequence {
    lambdas: Vec<f64>,
    coords: Vec<Vec<TwoFloat>>,
    pub steps: Vec<HStep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramResiduals {
    /// `max_{i≠j} |⟨h_i, h_j⟩ + 1|`.
    pub off_diagonal: f64,
    /// `max_i |‖h_i‖² − (1 − λ_i²)/λ_i²|`.
    pub diagonal: f64,
}

impl HSequence {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Coordinates of `h_i` (0-based `i`) in `f_1..f_N`, rounded to `f64`.
    pub fn coords(&self, i: usize) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| self.coords[i].get(k).copied().map_or(0.0, f64::from))
            .collect()
    }

    fn dot(&self, i: usize, j: usize) -> TwoFloat {
        self.coords[i]
            .iter()
            .zip(&self.coords[j])
            .fold(dd(0.0), |acc, (a, b)| acc + *a * *b)
    }

    /// Gram matrix `⟨h_i, h_j⟩`, rounded to `f64`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| f64::from(self.dot(i, j))).collect())
            .collect()
    }

    /// Residuals of the defining constraints, evaluated in double-double.
    pub fn gram_residuals(&self) -> GramResiduals {
        let mut r = GramResiduals {
            off_diagonal: 0.0,
            diagonal: 0.0,
        };
        for i in 0..self.len() {
            let d = self.dot(i, i) - dd_target(self.lambdas[i]);
            r.diagonal = r.diagonal.max(f64::from(d).abs());
            for j in 0..i {
                let o = self.dot(i, j) + dd(1.0);
                r.off_diagonal = r.off_diagonal.max(f64::from(o).abs());
            }
        }
        r
    }
}

/// Cholesky factor of a symmetric matrix, or the index of the first non-positive pivot.
fn cholesky(g: &[Vec<TwoFloat>]) -> std::result::Result<Vec<Vec<TwoFloat>>, usize> {
    let n = g.len();
    let mut l = vec![vec![dd(0.0); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= dd(0.0) {
                    return Err(i);
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[Vec<TwoFloat>], b: &[TwoFloat]) -> Vec<TwoFloat> {
    let n = l.len();
    let mut y = vec![dd(0.0); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![dd(0.0); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Runs the induction. Fails at the first step whose Gram matrix is not positive
/// definite or whose `s²` is not positive.
pub fn solve_h_sequence(schedule: &BroomSchedule) -> Result<HSequence> {
    let lambdas = schedule.weights().to_vec();
    let n = lambdas.len();
    let mut coords: Vec<Vec<TwoFloat>> = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    let mut gram: Vec<Vec<TwoFloat>> = Vec::new();
    for step in 0..n {
        let target = dd_target(lambdas[step]);
        let (t, tgt) = if step == 0 {
            (Vec::new(), dd(0.0))
        } else {
            let l = cholesky(&gram).map_err(|_| Error::GramNotPositive(step + 1))?;
            let t = cholesky_solve(&l, &vec![dd(-1.0); step]);
            // tᵀ G t = −Σ t_j because G t = −𝟙.
            let tgt = t.iter().fold(dd(0.0), |acc, x| acc - *x);
            (t, tgt)
        };
        let s2 = target - tgt;
        if s2 <= dd(0.0) {
            return Err(Error::InfeasibleStep {
                step: step + 1,
                s_squared: f64::from(s2),
                deficit: -f64::from(s2),
            });
        }
        let s = s2.sqrt();
        let mut h = vec![dd(0.0); step + 1];
        for (j, tj) in t.iter().enumerate() {
            for (k, c) in coords[j].iter().enumerate() {
                h[k] += *tj * *c;
            }
        }
        h[step] = s;
        steps.push(HStep {
            step: step + 1,
            t: t.iter().map(|x| f64::from(*x)).collect(),
            s_squared: f64::from(s2),
            s: f64::from(s),
        });
        coords.push(h);
        // Extend the Gram matrix with the new row.
        let new_row: Vec<TwoFloat> = (0..=step)
            .map(|j| {
                coords[step]
                    .iter()
                    .zip(&coords[j])
                    .fold(dd(0.0), |acc, (a, b)| acc + *a * *b)
            })
            .collect();
        for (j, row) in gram.iter_mut().enumerate() {
            row.push(new_row[j]);
        }
        gram.push(new_row);
    }
    Ok(HSequence {
        lambdas,
        coords,
        steps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BroomReport {
    pub teeth: usize,
    /// Weights on all `M` teeth; teeth past `N` share the remaining mass so that `Σ λ² = 1`.
    pub weights: Vec<f64>,
    pub steps: Vec<HStep>,
    pub gram: GramResiduals,
    /// `max_i |‖g_i‖ − 1|`.
    pub g_norm: f64,
    /// `max_{i≠j} |⟨g_i, g_j⟩|`.
    pub g_orthogonality: f64,
    /// `max_i |⟨g_i, f_0⟩|`.
    pub g_f0: f64,
    /// `‖(S C − C S*) e_j‖` for `j = 0..=N`.
    pub intertwining: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct BroomConjugation {
    pub basis: Vec<VertexId>,
    pub f0: CVector,
    /// `f_1..f_N`, orthonormal in `ker S ⊖ ℂ f_0`.
    pub f: Vec<CVector>,
    /// `C e_0 = f_0`, then `C e_i = g_i` for `i = 1..=N`.
    pub images: Vec<CVector>,
    pub shift: CMatrix,
    pub report: BroomReport,
}

/// Builds `C` on `span{e_0, …, e_N}` inside a broom with `teeth = M ≥ 2N+1`
/// leaves and checks every invariant against `tol`.
pub fn build_broom_conjugation(
    schedule: &BroomSchedule,
    h: &HSequence,
    teeth: usize,
    tol: f64,
) -> Result<BroomConjugation> {
    let n = schedule.len();
    if h.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: h.len(),
        });
    }
    if teeth < 2 * n + 1 {
        return Err(Error::InvalidSchedule(format!(
            "need at least {} teeth for N = {n}, got {teeth}",
            2 * n + 1
        )));
    }
    let sigma: f64 = schedule.weights().iter().map(|w| w * w).sum();
    if sigma >= 1.0 {
        return Err(Error::InvalidSchedule(format!("Σ λ_i² = {sigma} is not below 1")));
    }
    let fill = ((1.0 - sigma) / (teeth - n) as f64).sqrt();
    let mut weights = schedule.weights().to_vec();
    weights.resize(teeth, fill);

    let tree = generate_broom(teeth)?;
    let assignment = WeightAssignment::from_fn(&tree, |i| real(weights[i - 1]));
    let s = build_shift(&tree, &assignment)?;
    let dim = teeth + 1;
    let e = |k| basis_vector(dim, k);

    let mut f0 = CVector::zeros(dim);
    for (i, w) in weights.iter().enumerate() {
        f0[i + 1] = real(*w);
    }
    let f0 = f0.normalize();
    let candidates: Vec<CVector> = (n + 1..=teeth).map(e).collect();
    let f: Vec<CVector> = gram_schmidt(std::slice::from_ref(&f0), &candidates, 1e-8)
        .into_iter()
        .take(n)
        .collect();

    let mut images = vec![f0.clone()];
    for i in 0..n {
        let lam = schedule.weights()[i];
        let mut g = e(0) * real(lam);
        for (k, fk) in f.iter().enumerate() {
            let coef = h.coords[i].get(k).map_or(0.0, |c| f64::from(*c * dd(lam)));
            g += fk * real(coef);
        }
        images.push(g);
    }

    let mut report = BroomReport {
        teeth,
        weights: weights.clone(),
        steps: h.steps.clone(),
        gram: h.gram_residuals(),
        g_norm: 0.0,
        g_orthogonality: 0.0,
        g_f0: 0.0,
        intertwining: Vec::with_capacity(n + 1),
        tol,
        pass: false,
    };
    let fail = |check, i, j, residual| Error::BroomCheck {
        check,
        i,
        j,
        residual,
    };
    let mut first_failure = None;
    let mut note = |err: Error| {
        if first_failure.is_none() {
            first_failure = Some(err);
        }
    };
    if report.gram.diagonal > tol {
        note(fail("h_norm", 0, 0, report.gram.diagonal));
    }
    if report.gram.off_diagonal > tol {
        note(fail("h_inner", 0, 0, report.gram.off_diagonal));
    }
    for i in 1..=n {
        let r = (images[i].norm() - 1.0).abs();
        report.g_norm = report.g_norm.max(r);
        if r > tol {
            note(fail("g_norm", i, i, r));
        }
        let r = f0.dotc(&images[i]).norm();
        report.g_f0 = report.g_f0.max(r);
        if r > tol {
            note(fail("g_f0", i, 0, r));
        }
        for j in 1..i {
            let r = images[j].dotc(&images[i]).norm();
            report.g_orthogonality = report.g_orthogonality.max(r);
            if r > tol {
                note(fail("g_orthogonal", j, i, r));
            }
        }
    }
    let sm = s.matrix();
    let adj = s.adjoint();
    let apply_c = |v: &CVector| -> CVector {
        // C is antilinear and known on e_0..e_N only.
        let mut out = CVector::zeros(dim);
        for (k, img) in images.iter().enumerate() {
            let coef = v[k].conj();
            if coef != ZERO {
                out += img * coef;
            }
        }
        out
    };
    for j in 0..=n {
        let lhs = sm * &images[j];
        let rhs = apply_c(&(&adj * e(j)));
        let r = (lhs - rhs).norm();
        if r > tol {
            note(fail("intertwining", j, j, r));
        }
        report.intertwining.push(r);
    }
    match first_failure {
        Some(err) => Err(err),
        None => {
            report.pass = true;
            Ok(BroomConjugation {
                basis: tree.vertices().to_vec(),
                f0,
                f,
                images,
                shift: sm.clone(),
                report,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceCheck {
    pub name: String,
    pub computed_dim: usize,
    pub expected_dim: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelReport {
    pub teeth: usize,
    pub checks: Vec<SubspaceCheck>,
    pub tol: f64,
    pub pass: bool,
}

/// Compares `ker S`, `ker S*` and their complements on a two-level broom with
/// `H_2`, `e_0 ⊕ (H_1 ⊖ f_1)`, `e_0 ⊕ H_1` and `f_1 ⊕ H_2`, where
/// `f_1 ∝ Σ λ_{1,i} e_{1,i}`.
pub fn two_level_kernel_structure(
    level1: &[Complex64],
    level2: &[Complex64],
    rank_tol: f64,
    tol: f64,
) -> Result<TwoLevelReport> {
    let teeth = level1.len();
    if level2.len() != teeth {
        return Err(Error::LengthMismatch {
            expected: teeth,
            got: level2.len(),
        });
    }
    let tree = generate_two_level_broom(teeth)?;
    let mut w = WeightAssignment::new();
    for j in 0..teeth {
        for (level, z) in [(1, level1[j]), (2, level2[j])] {
            let v = VertexId::pair(level, j as i64 + 1);
            if z == ZERO {
                return Err(Error::ZeroWeight(v.to_string()));
            }
            w.insert(v, z);
        }
    }
    let s = build_shift(&tree, &w)?;
    let dim = tree.len();
    let idx = |v: VertexId| tree.index_of(&v).expect("generated label");
    let e = |k| basis_vector(dim, k);
    let h1: Vec<CVector> = (1..=teeth as i64).map(|j| e(idx(VertexId::pair(1, j)))).collect();
    let h2: Vec<CVector> = (1..=teeth as i64).map(|j| e(idx(VertexId::pair(2, j)))).collect();
    let e0 = e(tree.root());
    let mut f1 = CVector::zeros(dim);
    for (j, z) in level1.iter().enumerate() {
        f1[idx(VertexId::pair(1, j as i64 + 1))] = *z;
    }
    let f1 = f1.normalize();
    let h1_minus_f1 = gram_schmidt(std::slice::from_ref(&f1), &h1, 1e-8);

    let join = |parts: &[&[CVector]]| -> CMatrix {
        let all: Vec<CVector> = parts.iter().flat_map(|p| p.iter().cloned()).collect();
        columns(dim, &all)
    };
    let expected = [
        ("ker S", join(&[&h2])),
        ("ker S*", join(&[std::slice::from_ref(&e0), &h1_minus_f1])),
        ("(ker S)^perp", join(&[std::slice::from_ref(&e0), &h1])),
        ("(ker S*)^perp", join(&[std::slice::from_ref(&f1), &h2])),
    ];
    let t = s.matrix();
    let adj = s.adjoint();
    let computed = [
        nullspace(t, rank_tol),
        nullspace(&adj, rank_tol),
        kernel_complement(t, rank_tol),
        kernel_complement(&adj, rank_tol),
    ];
    let checks: Vec<SubspaceCheck> = expected
        .iter()
        .zip(&computed)
        .map(|((name, want), got)| SubspaceCheck {
            name: name.to_string(),
            computed_dim: got.ncols(),
            expected_dim: want.ncols(),
            distance: subspace_distance(got, want),
        })
        .collect();
    let pass = checks
        .iter()
        .all(|c| c.computed_dim == c.expected_dim && c.distance <= tol);
    Ok(TwoLevelReport {
        teeth,
        checks,
        tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_step() {
        let sched = BroomSchedule::new(vec![0.5]).unwrap();
        let h = solve_h_sequence(&sched).unwrap();
        assert_relative_eq!(h.coords(0)[0], 3f64.sqrt(), epsilon = 1e-15);
        let c = build_broom_conjugation(&sched, &h, 3, 1e-12).unwrap();
        assert!((c.images[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_equal_weights() {
        let sched = BroomSchedule::new(vec![0.5, 0.5]).unwrap();
        let h = solve_h_sequence(&sched).unwrap();
        assert_relative_eq!(h.steps[1].t[0], -1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(h.steps[1].s_squared, 8.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn slow_decay_is_infeasible_at_step_two() {
        let sched = BroomSchedule::new(vec![0.9; 3]).unwrap();
        match solve_h_sequence(&sched) {
            Err(Error::InfeasibleStep { step, s_squared, deficit }) => {
                assert_eq!(step, 2);
                let expected = 0.19 / 0.81 - 0.81 / 0.19;
                assert_relative_eq!(s_squared, expected, epsilon = 1e-12);
                assert_relative_eq!(deficit, -expected, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(sched.feasibility(), vec![true, false, false]);
    }

    #[test]
    fn schedule_range() {
        assert!(BroomSchedule::new(vec![]).is_err());
        assert!(BroomSchedule::new(vec![1.5]).is_err());
        assert!(BroomSchedule::new(vec![0.0]).is_err());
    }

    #[test]
    fn teeth_lower_bound() {
        let sched = BroomSchedule::new(vec![0.1, 0.01]).unwrap();
        let h = solve_h_sequence(&sched).unwrap();
        assert!(matches!(
            build_broom_conjugation(&sched, &h, 4, 1e-8),
            Err(Error::InvalidSchedule(_))
        ));
        assert!(build_broom_conjugation(&sched, &h, 5, 1e-8).is_ok());
    }

    #[test]
    fn two_level_unit_weights() {
        let ones = vec![real(1.0); 2];
        let r = two_level_kernel_structure(&ones, &ones, 1e-10, 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.checks[0].computed_dim, 2);
        assert_eq!(r.checks[1].computed_dim, 2);
    }

    #[test]
    fn two_level_single_tooth() {
        let r = two_level_kernel_structure(&[real(2.0)], &[real(0.5)], 1e-10, 1e-10).unwrap();
        assert!(r.pass);
        assert_eq!(r.checks[3].computed_dim, 2);
        assert_eq!(r.checks[1].computed_dim, 1);
        assert!(two_level_kernel_structure(&[ZERO], &[real(1.0)], 1e-10, 1e-10).is_err());
    }
}
