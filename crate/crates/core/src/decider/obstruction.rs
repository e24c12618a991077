//! Necessary conditions for complex symmetry that can be re-checked from `T` alone.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{frobenius, identity, numerical_rank, pair, unpair, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    #[serde(rename = "T")]
    T,
    #[serde(rename = "T*")]
    TStar,
}

impl Letter {
    fn matrix<'a>(self, t: &'a CMatrix, adj: &'a CMatrix) -> &'a CMatrix {
        match self {
            Letter::T => t,
            Letter::TStar => adj,
        }
    }
}

/// A word over `{T, T*}`, read left to right as a matrix product.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn is_palindrome(&self) -> bool {
        self.0.iter().eq(self.0.iter().rev())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn evaluate(&self, t: &CMatrix) -> CMatrix {
        let adj = t.adjoint();
        let mut out = identity(t.nrows());
        for l in &self.0 {
            out = &out * l.matrix(t, &adj);
        }
        out
    }

    pub fn trace(&self, t: &CMatrix) -> Complex64 {
        self.evaluate(t).trace()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|l| match l {
                Letter::T => "T",
                Letter::TStar => "T*",
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelWitness {
    pub power: usize,
    pub ker: usize,
    pub ker_adjoint: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordWitness {
    pub word: Word,
    pub trace: [f64; 2],
    pub trace_reversed: [f64; 2],
    pub difference: f64,
    pub threshold: f64,
}

impl WordWitness {
    pub fn trace(&self) -> Complex64 {
        unpair(self.trace)
    }

    pub fn trace_reversed(&self) -> Complex64 {
        unpair(self.trace_reversed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmptySpaceWitness {
    pub unknowns: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "witness", rename_all = "snake_case")]
pub enum ObstructionReport {
    KernelDim(KernelWitness),
    WordTrace(WordWitness),
    EmptySylvesterSpace(EmptySpaceWitness),
}

impl ObstructionReport {
    pub fn kind(&self) -> &'static str {
        match self {
            ObstructionReport::KernelDim(_) => "kernel_dim",
            ObstructionReport::WordTrace(_) => "word_trace",
            ObstructionReport::EmptySylvesterSpace(_) => "empty_sylvester_space",
        }
    }

    /// Recomputes the witness from `t` and confirms it still exhibits a violation.
    ///
    /// Word witnesses must clear `10 · tol · scale`.
    pub fn recheck(&self, t: &CMatrix, tol: f64, rank_tol: f64) -> bool {
        match self {
            ObstructionReport::KernelDim(w) => {
                let adj = t.adjoint();
                let p = crate::linalg::matrix_power(t, w.power);
                let pa = crate::linalg::matrix_power(&adj, w.power);
                numerical_rank(&p, rank_tol) != numerical_rank(&pa, rank_tol)
            }
            ObstructionReport::WordTrace(w) => {
                let a = w.word.trace(t);
                let b = w.word.reversed().trace(t);
                (a - b).norm() > trace_threshold(t, w.word.len(), tol)
            }
            ObstructionReport::EmptySylvesterSpace(_) => {
                super::sylvester::sylvester_space(t, rank_tol).dim() == 0
            }
        }
    }
}

/// `10 · tol · max(1, ‖T‖_F^len)`.
pub fn trace_threshold(t: &CMatrix, len: usize, tol: f64) -> f64 {
    let scale = frobenius(t).powi(len as i32).max(1.0);
    10.0 * tol * scale
}

/// Smallest `m ≤ n` with `dim ker T^m ≠ dim ker T*^m`.
///
/// For square matrices these always agree (rank of `M` equals rank of `M*`), so
/// in exact arithmetic this never fires; it stays in the pipeline as a cheap
/// guard and for non-square-rank numerical edge cases.
pub fn kernel_obstruction(t: &CMatrix, rank_tol: f64) -> Option<KernelWitness> {
    let n = t.nrows();
    let adj = t.adjoint();
    let mut p = identity(n);
    let mut pa = identity(n);
    for m in 1..=n {
        p = &p * t;
        pa = &pa * &adj;
        let k = n - numerical_rank(&p, rank_tol);
        let ka = n - numerical_rank(&pa, rank_tol);
        if k != ka {
            return Some(KernelWitness {
                power: m,
                ker: k,
                ker_adjoint: ka,
            });
        }
        if k == n {
            break;
        }
    }
    None
}

/// First word, by length and then lexicographically with `T < T*`, whose trace
/// differs from that of its reversal by more than [`trace_threshold`].
pub fn word_trace_obstruction(t: &CMatrix, max_len: usize, tol: f64) -> Option<WordWitness> {
    let adj = t.adjoint();
    // Each entry: (word, product of the word, product of the reversed word).
    let mut level: Vec<(Vec<Letter>, CMatrix, CMatrix)> = vec![(Vec::new(), identity(t.nrows()), identity(t.nrows()))];
    for len in 1..=max_len {
        let threshold = trace_threshold(t, len, tol);
        let mut next = Vec::with_capacity(level.len() * 2);
        for (word, fwd, rev) in &level {
            for letter in [Letter::T, Letter::TStar] {
                let m = letter.matrix(t, &adj);
                let mut w = word.clone();
                w.push(letter);
                let f = fwd * m;
                let r = m * rev;
                let word = Word(w);
                if !word.is_palindrome() {
                    let (a, b) = (f.trace(), r.trace());
                    let difference = (a - b).norm();
                    if difference > threshold {
                        return Some(WordWitness {
                            word,
                            trace: pair(a),
                            trace_reversed: pair(b),
                            difference,
                            threshold,
                        });
                    }
                }
                next.push((word.0, f, r));
            }
        }
        level = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real, ONE};
    use Letter::{TStar, T};

    fn path3(a: f64, b: f64) -> CMatrix {
        let mut m = CMatrix::zeros(3, 3);
        m[(1, 0)] = real(a);
        m[(2, 1)] = real(b);
        m
    }

    #[test]
    fn first_witness_for_uneven_path() {
        let t = path3(1.0, 2.0);
        let w = word_trace_obstruction(&t, 8, 1e-10).unwrap();
        assert_eq!(w.word, Word(vec![T, T, TStar, T, TStar, TStar]));
        assert!((w.trace() - real(4.0)).norm() < 1e-12);
        assert!((w.trace_reversed() - real(16.0)).norm() < 1e-12);
        // The word written (T*T)²(TT*) is a rotation of the reversal: same pair, swapped.
        let other = Word(vec![TStar, T, TStar, T, T, TStar]);
        assert!((other.trace(&t) - real(16.0)).norm() < 1e-12);
        assert!((other.reversed().trace(&t) - real(4.0)).norm() < 1e-12);
    }

    #[test]
    fn palindromic_path_and_zero_have_no_witness() {
        assert!(word_trace_obstruction(&path3(1.0, 1.0), 8, 1e-10).is_none());
        assert!(word_trace_obstruction(&CMatrix::zeros(3, 3), 8, 1e-10).is_none());
    }

    #[test]
    fn kernel_dims_agree_for_square_matrices() {
        let mut t = CMatrix::zeros(4, 4);
        t[(1, 0)] = ONE;
        t[(2, 0)] = c(0.0, 2.0);
        t[(3, 2)] = real(0.5);
        assert!(kernel_obstruction(&t, 1e-10).is_none());
    }

    #[test]
    fn witness_rechecks_and_serializes() {
        let t = path3(1.0, 2.0);
        let rep = ObstructionReport::WordTrace(word_trace_obstruction(&t, 8, 1e-10).unwrap());
        assert!(rep.recheck(&t, 1e-10, 1e-10));
        assert!(!rep.recheck(&path3(1.0, 1.0), 1e-10, 1e-10));
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["kind"], "word_trace");
        assert_eq!(json["witness"]["word"][2], "T*");
        let back: ObstructionReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, rep);
    }
}
