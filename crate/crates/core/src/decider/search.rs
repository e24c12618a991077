//! Multi-start search for a unitary inside a Sylvester space.
//!
//! Minimizes `f(c) = ‖A A* − I‖_F²` for `A = Σ c_i B_i`. Each restart runs
//! projected gradient descent on the sphere `‖c‖ = √n` (the Frobenius norm of
//! any `n × n` unitary), then Gauss–Newton steps on the residual `A A* − I`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sylvester::SylvesterSpace;
use crate::conjugation::{verify_c_symmetry, Conjugation};
use crate::linalg::{frobenius, identity, CMatrix};
use crate::tree::VertexId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Restarts evaluated together; results are merged by restart index.
    pub batch: usize,
    pub descent_iters: usize,
    pub newton_iters: usize,
    pub armijo: f64,
    pub initial_step: f64,
    /// Below this value of `f` descent hands over to Gauss–Newton early.
    pub handover: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            batch: 8,
            descent_iters: 400,
            newton_iters: 40,
            armijo: 1e-4,
            initial_step: 0.1,
            handover: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub conjugation: Option<Conjugation>,
    pub winning_restart: Option<usize>,
    pub restarts_run: usize,
    /// Smallest `‖A A* − I‖_F` reached over every restart that ran.
    pub best_unitary_residual: f64,
}

struct Restart {
    matrix: CMatrix,
    residual: f64,
}

fn objective(space: &SylvesterSpace, c: &[Complex64]) -> (CMatrix, CMatrix, f64) {
    let a = space.combine(c);
    let e = &a * a.adjoint() - identity(a.nrows());
    let f = e.norm_squared();
    (a, e, f)
}

fn norm(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rescale(c: &mut [Complex64], radius: f64) {
    let r = norm(c);
    if r > 0.0 {
        for z in c.iter_mut() {
            *z *= radius / r;
        }
    }
}

fn descend(space: &SylvesterSpace, c: &mut [Complex64], radius: f64, cfg: &SearchConfig) -> f64 {
    let (mut a, mut e, mut f) = objective(space, c);
    let mut step = cfg.initial_step;
    for _ in 0..cfg.descent_iters {
        if f < cfg.handover {
            break;
        }
        let m = &e * &a;
        // ∂f/∂conj(c_i) up to the factor absorbed in the step: 4 tr(B_i* E A).
        let mut g: Vec<Complex64> = space
            .basis()
            .iter()
            .map(|b| (b.adjoint() * &m).trace() * 4.0)
            .collect();
        // Tangent part on the sphere.
        let radial: Complex64 = c.iter().zip(&g).map(|(ci, gi)| ci.conj() * gi).sum();
        let radial = radial.re / (radius * radius);
        for (gi, ci) in g.iter_mut().zip(c.iter()) {
            *gi -= ci * radial;
        }
        let gnorm2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        if gnorm2 < 1e-28 {
            break;
        }
        let mut accepted = false;
        step *= 2.0;
        for _ in 0..40 {
            let mut trial: Vec<Complex64> = c.iter().zip(&g).map(|(ci, gi)| ci - gi * step).collect();
            rescale(&mut trial, radius);
            let (ta, te, tf) = objective(space, &trial);
            if tf <= f - cfg.armijo * step * gnorm2 {
                c.copy_from_slice(&trial);
                a = ta;
                e = te;
                f = tf;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    f
}

fn gauss_newton(space: &SylvesterSpace, c: &mut [Complex64], cfg: &SearchConfig) -> f64 {
    let d = space.dim();
    let (mut a, mut e, mut f) = objective(space, c);
    for _ in 0..cfg.newton_iters {
        if f < 1e-30 {
            break;
        }
        let n = a.nrows();
        let rows = 2 * n * n;
        let mut jac = DMatrix::<f64>::zeros(rows, 2 * d);
        let a_adj = a.adjoint();
        for (k, b) in space.basis().iter().enumerate() {
            let ba = b * &a_adj;
            let ab = &a * b.adjoint();
            let re_dir = &ba + &ab;
            let im_dir = (&ba - &ab) * Complex64::i();
            for (r, (x, y)) in re_dir.iter().zip(im_dir.iter()).enumerate() {
                jac[(2 * r, 2 * k)] = x.re;
                jac[(2 * r + 1, 2 * k)] = x.im;
                jac[(2 * r, 2 * k + 1)] = y.re;
                jac[(2 * r + 1, 2 * k + 1)] = y.im;
            }
        }
        let mut rhs = DVector::<f64>::zeros(rows);
        for (r, z) in e.iter().enumerate() {
            rhs[2 * r] = -z.re;
            rhs[2 * r + 1] = -z.im;
        }
        let svd = jac.svd(true, true);
        let cutoff = svd.singular_values.max() * 1e-12;
        let Ok(delta) = svd.solve(&rhs, cutoff) else {
            break;
        };
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let trial: Vec<Complex64> = c
                .iter()
                .enumerate()
                .map(|(k, ck)| ck + Complex64::new(delta[2 * k], delta[2 * k + 1]) * scale)
                .collect();
            let (ta, te, tf) = objective(space, &trial);
            if tf < f {
                c.copy_from_slice(&trial);
                a = ta;
                e = te;
                f = tf;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    f
}

fn run_restart(space: &SylvesterSpace, seed: u64, index: usize, cfg: &SearchConfig) -> Restart {
    let n = space.basis()[0].nrows();
    let radius = (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut c: Vec<Complex64> = (0..space.dim())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    rescale(&mut c, radius);
    descend(space, &mut c, radius, cfg);
    gauss_newton(space, &mut c, cfg);
    let a = space.combine(&c);
    let a = (&a + a.transpose()) * Complex64::new(0.5, 0.0);
    let residual = frobenius(&(&a * a.adjoint() - identity(n)));
    Restart {
        matrix: a,
        residual,
    }
}

/// Searches `space` for a symmetric unitary and verifies it against `t` at `tol`.
///
/// Restarts are seeded by `(seed, restart index)` and the lowest successful
/// index wins, so the outcome does not depend on thread scheduling.
pub fn unitary_search(
    t: &CMatrix,
    space: &SylvesterSpace,
    basis: &[VertexId],
    seed: u64,
    restarts: usize,
    tol: f64,
    cfg: &SearchConfig,
) -> SearchOutcome {
    let mut outcome = SearchOutcome {
        conjugation: None,
        winning_restart: None,
        restarts_run: 0,
        best_unitary_residual: f64::INFINITY,
    };
    if space.is_empty() {
        return outcome;
    }
    let batch = cfg.batch.max(1);
    let mut start = 0;
    while start < restarts {
        let end = (start + batch).min(restarts);
        let results: Vec<Restart> = (start..end)
            .into_par_iter()
            .map(|i| run_restart(space, seed, i, cfg))
            .collect();
        outcome.restarts_run = end;
        for (offset, r) in results.into_iter().enumerate() {
            outcome.best_unitary_residual = outcome.best_unitary_residual.min(r.residual);
            if outcome.conjugation.is_some() || r.residual > tol {
                continue;
            }
            let Ok(conj) = Conjugation::from_matrix(r.matrix, basis.to_vec(), tol) else {
                continue;
            };
            match verify_c_symmetry(t, &conj, tol) {
                Ok(rep) if rep.pass => {
                    outcome.conjugation = Some(conj);
                    outcome.winning_restart = Some(start + offset);
                }
                _ => {}
            }
        }
        if outcome.conjugation.is_some() {
            break;
        }
        start = end;
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decider::sylvester::sylvester_space;
    use crate::linalg::{real, ONE, ZERO};

    fn labels(n: usize) -> Vec<VertexId> {
        (0..n as i64).map(VertexId::int).collect()
    }

    #[test]
    fn jordan_cell_yields_flip() {
        let t = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        let space = sylvester_space(&t, 1e-10);
        let out = unitary_search(&t, &space, &labels(2), 0, 64, 1e-10, &SearchConfig::default());
        let conj = out.conjugation.expect("flip exists");
        let a = conj.matrix();
        assert!(a[(0, 0)].norm() < 1e-9 && a[(1, 1)].norm() < 1e-9);
        assert!((a[(0, 1)].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_only_space() {
        let t = CMatrix::from_diagonal(&DVector::from_vec(vec![real(1.0), real(2.0)]));
        let space = SylvesterSpace::from_basis(vec![identity(2) * real(std::f64::consts::FRAC_1_SQRT_2)]);
        let out = unitary_search(&t, &space, &labels(2), 3, 4, 1e-10, &SearchConfig::default());
        let a = out.conjugation.unwrap().matrix().clone();
        // Only unimodular multiples of I are unitary in this space.
        assert!((a[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(frobenius(&(&a - identity(2) * a[(0, 0)])) < 1e-12);
    }

    #[test]
    fn uneven_path_has_no_unitary() {
        let mut t = CMatrix::zeros(3, 3);
        t[(1, 0)] = ONE;
        t[(2, 1)] = real(2.0);
        let space = sylvester_space(&t, 1e-10);
        let out = unitary_search(&t, &space, &labels(3), 0, 64, 1e-10, &SearchConfig::default());
        assert!(out.conjugation.is_none());
        assert_eq!(out.restarts_run, 64);
        assert!(out.best_unitary_residual > 1e-3);
    }

    #[test]
    fn deterministic_across_calls() {
        let t = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        let space = sylvester_space(&t, 1e-10);
        let cfg = SearchConfig::default();
        let a = unitary_search(&t, &space, &labels(2), 7, 16, 1e-10, &cfg);
        let b = unitary_search(&t, &space, &labels(2), 7, 16, 1e-10, &cfg);
        assert_eq!(a.conjugation, b.conjugation);
        assert_eq!(a.winning_restart, b.winning_restart);
    }
}
