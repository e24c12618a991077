//! Certified complex-symmetry decisions for finite matrices.
//!
//! The pipeline runs the cheap necessary conditions first (kernel dimensions,
//! word traces) and only then looks for a certificate in the Sylvester space.
//! A `Cs` verdict always carries a verified conjugation and a `NotCs` verdict
//! always carries a witness that [`ObstructionReport::recheck`] confirms.

pub mod obstruction;
pub mod search;
pub mod sylvester;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::conjugation::{verify_c_symmetry, Conjugation, ConjugationDocument, DEFAULT_TOL};
use crate::linalg::{CMatrix, DEFAULT_RANK_TOL};
use crate::shift::ShiftMatrix;
use crate::tree::VertexId;

pub use obstruction::{
    kernel_obstruction, trace_threshold, word_trace_obstruction, EmptySpaceWitness, KernelWitness,
    Letter, ObstructionReport, Word, WordWitness,
};
pub use search::{unitary_search, SearchConfig, SearchOutcome};
pub use sylvester::{sylvester_space, SylvesterSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecideOptions {
    pub tol: f64,
    pub rank_tol: f64,
    pub word_len: usize,
    pub seed: u64,
    pub restarts: usize,
    pub search: SearchConfig,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            tol: DEFAULT_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            word_len: 8,
            seed: 0,
            restarts: 64,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Cs(Conjugation),
    NotCs(ObstructionReport),
    Undetermined,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intertwining: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitary: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<f64>,
    /// Dimension of the Sylvester space, when it was computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sylvester_dim: Option<usize>,
    /// Best `‖A A* − I‖_F` the search reached.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_unitary: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts_run: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub residuals: Residuals,
    pub options: DecideOptions,
    pub elapsed: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Cs,
    NotCs,
    Undetermined,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Cs => "cs",
            VerdictKind::NotCs => "not_cs",
            VerdictKind::Undetermined => "undetermined",
        }
    }
}

/// Serialized verdict. Wall-clock time is deliberately left out so that
/// repeated runs produce identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub verdict: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ConjugationDocument>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<ObstructionReport>,
    pub residuals: Residuals,
    pub seed: u64,
    pub options: DecideOptions,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self.outcome {
            Outcome::Cs(_) => VerdictKind::Cs,
            Outcome::NotCs(_) => VerdictKind::NotCs,
            Outcome::Undetermined => VerdictKind::Undetermined,
        }
    }

    pub fn certificate(&self) -> Option<&Conjugation> {
        match &self.outcome {
            Outcome::Cs(c) => Some(c),
            _ => None,
        }
    }

    pub fn obstruction(&self) -> Option<&ObstructionReport> {
        match &self.outcome {
            Outcome::NotCs(o) => Some(o),
            _ => None,
        }
    }

    pub fn to_document(&self) -> VerdictDocument {
        VerdictDocument {
            verdict: self.kind(),
            certificate: self.certificate().map(Conjugation::to_document),
            obstruction: self.obstruction().cloned(),
            residuals: self.residuals.clone(),
            seed: self.options.seed,
            options: self.options.clone(),
        }
    }

    /// Re-checks the attached certificate or witness against `t`.
    pub fn recheck(&self, t: &CMatrix) -> bool {
        match &self.outcome {
            Outcome::Cs(c) => verify_c_symmetry(t, c, self.options.tol).is_ok_and(|r| r.pass),
            Outcome::NotCs(o) => o.recheck(t, self.options.tol, self.options.rank_tol),
            Outcome::Undetermined => true,
        }
    }
}

/// Decides whether `t` is complex symmetric, labelling certificate rows by `basis`.
pub fn decide_cs(t: &CMatrix, basis: &[VertexId], options: &DecideOptions) -> Verdict {
    let start = Instant::now();
    let finish = |outcome, residuals| Verdict {
        outcome,
        residuals,
        options: options.clone(),
        elapsed: start.elapsed(),
    };
    if let Some(w) = kernel_obstruction(t, options.rank_tol) {
        return finish(Outcome::NotCs(ObstructionReport::KernelDim(w)), Residuals::default());
    }
    if let Some(w) = word_trace_obstruction(t, options.word_len, options.tol) {
        return finish(Outcome::NotCs(ObstructionReport::WordTrace(w)), Residuals::default());
    }
    let space = sylvester_space(t, options.rank_tol);
    let mut residuals = Residuals {
        sylvester_dim: Some(space.dim()),
        ..Residuals::default()
    };
    if space.is_empty() {
        let w = EmptySpaceWitness {
            unknowns: space.unknowns,
            rank: space.unknowns,
        };
        return finish(Outcome::NotCs(ObstructionReport::EmptySylvesterSpace(w)), residuals);
    }
    let found = unitary_search(
        t,
        &space,
        basis,
        options.seed,
        options.restarts,
        options.tol,
        &options.search,
    );
    residuals.restarts_run = Some(found.restarts_run);
    residuals.best_unitary = Some(found.best_unitary_residual);
    match found.conjugation {
        Some(c) => {
            let report = verify_c_symmetry(t, &c, options.tol).expect("dimensions match");
            residuals.intertwining = Some(report.residual);
            residuals.unitary = Some(c.residual_unitary());
            residuals.symmetric = Some(c.residual_symmetric());
            finish(Outcome::Cs(c), residuals)
        }
        None => finish(Outcome::Undetermined, residuals),
    }
}

/// [`decide_cs`] on a shift, with the tree's vertex labels as basis.
pub fn decide_shift(s: &ShiftMatrix, options: &DecideOptions) -> Verdict {
    decide_cs(s.matrix(), s.basis(), options)
}
