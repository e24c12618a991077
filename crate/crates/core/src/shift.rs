//! Weighted shifts on a finite directed tree as dense complex matrices.
//!
//! The basis is the tree's vertex order. Column `u` of the shift holds
//! `λ_v` in the row of every child `v` of `u`, so `S e_u = Σ λ_v e_v`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_power, numerical_rank, pair, unpair, CMatrix, RowMajor, ONE, ZERO};
use crate::tree::{DirectedTree, VertexId};

/// Weights `λ_v` indexed by non-root vertex.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightAssignment(BTreeMap<VertexId, Complex64>);

impl WeightAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same weight on every non-root vertex.
    pub fn uniform(tree: &DirectedTree, w: Complex64) -> Self {
        Self::from_fn(tree, |_| w)
    }

    /// Weight of each non-root vertex from its basis index.
    pub fn from_fn(tree: &DirectedTree, mut f: impl FnMut(usize) -> Complex64) -> Self {
        WeightAssignment(
            tree.non_root()
                .map(|i| (tree.vertex(i).clone(), f(i)))
                .collect(),
        )
    }

    pub fn insert(&mut self, v: VertexId, w: Complex64) {
        self.0.insert(v, w);
    }

    pub fn get(&self, v: &VertexId) -> Option<Complex64> {
        self.0.get(v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, &Complex64)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_nonzero(&self) -> bool {
        self.0.values().all(|w| w.norm() > 0.0)
    }

    /// Checks the assignment covers exactly the non-root vertices of `tree`.
    pub fn check_against(&self, tree: &DirectedTree) -> Result<()> {
        for v in self.0.keys() {
            match tree.index_of(v) {
                None => return Err(Error::UnknownVertex(v.to_string())),
                Some(i) if i == tree.root() => return Err(Error::RootWeight(v.to_string())),
                Some(_) => {}
            }
        }
        for i in tree.non_root() {
            if !self.0.contains_key(tree.vertex(i)) {
                return Err(Error::MissingWeight(tree.vertex(i).to_string()));
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> WeightsDocument {
        WeightsDocument {
            weights: self
                .0
                .iter()
                .map(|(k, v)| (k.to_string(), pair(*v)))
                .collect(),
        }
    }

    pub fn from_document(doc: &WeightsDocument) -> Self {
        WeightAssignment(
            doc.weights
                .iter()
                .map(|(k, v)| (VertexId::new(k), unpair(*v)))
                .collect(),
        )
    }
}

/// `{"weights": {"label": [re, im], ...}}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightsDocument {
    pub weights: BTreeMap<String, [f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftMatrix {
    basis: Vec<VertexId>,
    matrix: CMatrix,
    depth: usize,
}

impl ShiftMatrix {
    pub fn basis(&self) -> &[VertexId] {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Conjugate transpose; `S* e_v = conj(λ_v) e_{parent(v)}`.
    pub fn adjoint(&self) -> CMatrix {
        self.matrix.adjoint()
    }

    pub fn dump(&self) -> MatrixDump {
        MatrixDump {
            basis: self.basis.iter().map(ToString::to_string).collect(),
            matrix: RowMajor::from_matrix(&self.matrix),
        }
    }
}

/// Matrix dump: basis labels plus row-major `[re, im]` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub basis: Vec<String>,
    pub matrix: RowMajor,
}

pub fn build_shift(tree: &DirectedTree, weights: &WeightAssignment) -> Result<ShiftMatrix> {
    weights.check_against(tree)?;
    let n = tree.len();
    let mut m = CMatrix::zeros(n, n);
    for (p, c) in tree.edges() {
        m[(c, p)] = weights
            .get(tree.vertex(c))
            .ok_or_else(|| Error::MissingWeight(tree.vertex(c).to_string()))?;
    }
    Ok(ShiftMatrix {
        basis: tree.vertices().to_vec(),
        matrix: m,
        depth: tree.depth(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelRow {
    pub power: usize,
    pub ker: usize,
    pub ker_adjoint: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelTable {
    pub dim: usize,
    pub rows: Vec<KernelRow>,
}

impl KernelTable {
    pub fn row(&self, power: usize) -> Option<KernelRow> {
        self.rows.iter().copied().find(|r| r.power == power)
    }
}

/// `dim ker T^m` and `dim ker T*^m` for `m = 1..=max_power`, by numerical rank.
pub fn kernel_table(t: &CMatrix, max_power: usize, rel_tol: f64) -> Result<KernelTable> {
    if max_power < 1 {
        return Err(Error::ParameterOutOfRange("max_power must be >= 1".into()));
    }
    let n = t.nrows();
    let adj = t.adjoint();
    let mut p = CMatrix::identity(n, n);
    let mut pa = CMatrix::identity(n, n);
    let mut rows = Vec::with_capacity(max_power);
    for m in 1..=max_power {
        p = &p * t;
        pa = &pa * &adj;
        rows.push(KernelRow {
            power: m,
            ker: n - numerical_rank(&p, rel_tol),
            ker_adjoint: n - numerical_rank(&pa, rel_tol),
        });
    }
    Ok(KernelTable { dim: n, rows })
}

/// Diagonal unimodular basis change, stored as its diagonal in basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gauge(pub Vec<Complex64>);

impl Gauge {
    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.0.clone()))
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&d| d == ONE)
    }
}

/// Replaces every weight by its modulus and returns the gauge `D` with `D* S_λ D = S_|λ|`.
///
/// `D` is built from the root down: `d_root = 1`, `d_v = d_{parent(v)} · λ_v / |λ_v|`.
pub fn positivize_weights(
    tree: &DirectedTree,
    weights: &WeightAssignment,
) -> Result<(WeightAssignment, Gauge)> {
    weights.check_against(tree)?;
    let n = tree.len();
    let mut d = vec![ZERO; n];
    d[tree.root()] = ONE;
    let mut stack = vec![tree.root()];
    let mut positive = WeightAssignment::new();
    while let Some(u) = stack.pop() {
        for &c in tree.children(u) {
            let v = tree.vertex(c);
            let w = weights.get(v).expect("checked above");
            let m = w.norm();
            if m == 0.0 {
                return Err(Error::ZeroWeight(v.to_string()));
            }
            d[c] = d[u] * (w / m);
            positive.insert(v.clone(), Complex64::new(m, 0.0));
            stack.push(c);
        }
    }
    Ok((positive, Gauge(d)))
}

/// Exact nilpotency check: `S^(depth+1)` has every entry exactly zero.
pub fn is_nilpotent_at_depth(s: &ShiftMatrix) -> bool {
    matrix_power(&s.matrix, s.depth + 1).iter().all(|z| *z == ZERO)
}
