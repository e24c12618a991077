//! Criteria and explicit conjugations for generation-constant weights on the
//! two-branch and binary trees, plus the chain decomposition both rest on.
//!
//! Two-branch weights are indexed by the target vertex depth relative to the
//! branching vertex `0`: `λ_j` for `j = -κ+1, …, 0` lives on the trunk and
//! `λ_j = λ_{1,j} = λ_{2,j}` for `j = 1, …, θ` on both branches.
//!
//! The `*_condition` functions evaluate the published statements literally,
//! including index sets that cannot be met, and report every clause so the
//! outcome can be audited against a certified verdict. The literal two-branch
//! clause (iii) ranges over `j ∈ {1, …, κ+θ} ∖ {κ}`; its entry `j = κ + 1`
//! demands `|λ_1| = |λ_{θ-κ}|`, which contradicts `√2 |λ_1| = |λ_{θ-κ}|`, so
//! (iii) never holds. [`chain_palindrome_relations`] gives the relations that
//! actually characterize the family.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conjugation::{verify_c_symmetry, Conjugation};
use crate::error::{Error, Result};
use crate::linalg::{basis_vector, columns, frobenius, pair, real, CMatrix, CVector, ONE, ZERO};
use crate::shift::{build_shift, positivize_weights, WeightAssignment};
use crate::tree::{generate_binary, generate_two_branch, DirectedTree, TreeFamily, VertexId};

/// Relative tolerance for the modulus equalities in the printed conditions.
pub const CONDITION_TOL: f64 = 1e-9;

fn moduli_equal(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBranchWeights {
    /// `λ_{-κ+1}, …, λ_0`.
    pub trunk: Vec<Complex64>,
    /// `λ_1, …, λ_θ`.
    pub branch: Vec<Complex64>,
}

impl TwoBranchWeights {
    pub fn new(trunk: Vec<Complex64>, branch: Vec<Complex64>) -> Result<Self> {
        if branch.is_empty() {
            return Err(Error::ParameterOutOfRange("two-branch tree needs theta >= 1".into()));
        }
        let w = TwoBranchWeights { trunk, branch };
        if let Some(j) = (w.first_index()..=w.theta() as i64).find(|&j| w.lambda(j) == Some(ZERO)) {
            return Err(Error::ZeroWeight(j.to_string()));
        }
        Ok(w)
    }

    /// Splits `λ_{-κ+1}, …, λ_θ` given as one list.
    pub fn from_flat(kappa: usize, theta: usize, flat: &[Complex64]) -> Result<Self> {
        if flat.len() != kappa + theta {
            return Err(Error::LengthMismatch {
                expected: kappa + theta,
                got: flat.len(),
            });
        }
        Self::new(flat[..kappa].to_vec(), flat[kappa..].to_vec())
    }

    pub fn flat(&self) -> Vec<Complex64> {
        self.trunk.iter().chain(&self.branch).copied().collect()
    }

    pub fn kappa(&self) -> usize {
        self.trunk.len()
    }

    pub fn theta(&self) -> usize {
        self.branch.len()
    }

    fn first_index(&self) -> i64 {
        1 - self.kappa() as i64
    }

    /// `λ_j`, or `None` outside `-κ+1 ..= θ`.
    pub fn lambda(&self, j: i64) -> Option<Complex64> {
        let k = self.kappa() as i64;
        if j <= -k || j > self.theta() as i64 {
            None
        } else if j <= 0 {
            Some(self.trunk[(j + k - 1) as usize])
        } else {
            Some(self.branch[(j - 1) as usize])
        }
    }

    pub fn tree(&self) -> DirectedTree {
        generate_two_branch(self.kappa(), self.theta()).expect("theta >= 1 checked")
    }

    pub fn to_assignment(&self) -> WeightAssignment {
        let mut w = WeightAssignment::new();
        for j in self.first_index()..=0 {
            w.insert(VertexId::int(j), self.lambda(j).unwrap());
        }
        for j in 1..=self.theta() as i64 {
            for i in 1..=2 {
                w.insert(VertexId::pair(i, j), self.lambda(j).unwrap());
            }
        }
        w
    }

    /// Reads generation-constant weights off a two-branch tree.
    pub fn from_assignment(kappa: usize, theta: usize, w: &WeightAssignment) -> Result<Self> {
        let tree = generate_two_branch(kappa, theta)?;
        w.check_against(&tree)?;
        let trunk = (1 - kappa as i64..=0)
            .map(|j| w.get(&VertexId::int(j)).unwrap())
            .collect();
        let mut branch = Vec::with_capacity(theta);
        for j in 1..=theta as i64 {
            let a = w.get(&VertexId::pair(1, j)).unwrap();
            let b = w.get(&VertexId::pair(2, j)).unwrap();
            if a != b {
                return Err(Error::NotGenerationConstant(kappa + j as usize));
            }
            branch.push(a);
        }
        Self::new(trunk, branch)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryWeights {
    /// `λ_1, …, λ_κ`, one per generation.
    pub levels: Vec<Complex64>,
}

impl BinaryWeights {
    pub fn new(levels: Vec<Complex64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::ParameterOutOfRange("binary tree needs kappa >= 2".into()));
        }
        if let Some(k) = levels.iter().position(|z| *z == ZERO) {
            return Err(Error::ZeroWeight(format!("level {}", k + 1)));
        }
        Ok(BinaryWeights { levels })
    }

    pub fn kappa(&self) -> usize {
        self.levels.len()
    }

    pub fn lambda(&self, k: i64) -> Option<Complex64> {
        if k < 1 || k > self.kappa() as i64 {
            None
        } else {
            Some(self.levels[(k - 1) as usize])
        }
    }

    pub fn tree(&self) -> Result<DirectedTree> {
        generate_binary(self.kappa())
    }

    pub fn to_assignment(&self) -> Result<WeightAssignment> {
        let tree = self.tree()?;
        Ok(WeightAssignment::from_fn(&tree, |i| {
            self.levels[tree.depth_of(i) - 1]
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub index: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedIndex {
    pub clause: String,
    pub index: i64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBranchCondition {
    pub kappa: usize,
    pub theta: usize,
    pub clause_i: bool,
    /// Evaluated only when `θ − κ = 1`.
    pub clause_ii: Option<bool>,
    /// Evaluated only when `θ − κ ≠ 1`.
    pub clause_iii: Option<bool>,
    pub checks: Vec<ClauseCheck>,
    pub skipped: Vec<SkippedIndex>,
    pub satisfied: bool,
}

impl TwoBranchCondition {
    pub fn first_failure(&self) -> Option<&ClauseCheck> {
        self.checks.iter().find(|c| !c.holds)
    }
}

struct Checker<'a> {
    lambda: &'a dyn Fn(i64) -> Option<Complex64>,
    checks: Vec<ClauseCheck>,
    skipped: Vec<SkippedIndex>,
    tol: f64,
}

impl Checker<'_> {
    /// Records `lf · |λ_a| = rf · |λ_b|` for clause `clause` at index `index`.
    fn check(&mut self, clause: &str, index: i64, (lf, a): (f64, i64), (rf, b): (f64, i64)) -> bool {
        match ((self.lambda)(a), (self.lambda)(b)) {
            (Some(x), Some(y)) => {
                let (lhs, rhs) = (lf * x.norm(), rf * y.norm());
                let holds = moduli_equal(lhs, rhs, self.tol);
                self.checks.push(ClauseCheck {
                    clause: clause.into(),
                    index,
                    lhs,
                    rhs,
                    holds,
                });
                holds
            }
            _ => {
                let missing = if (self.lambda)(a).is_none() { a } else { b };
                self.skipped.push(SkippedIndex {
                    clause: clause.into(),
                    index,
                    reason: format!("λ_{missing} is not defined"),
                });
                true
            }
        }
    }
}

/// The published two-branch criterion, evaluated literally.
pub fn two_branch_condition(w: &TwoBranchWeights, tol: f64) -> TwoBranchCondition {
    let (kappa, theta) = (w.kappa() as i64, w.theta() as i64);
    let lambda = |j| w.lambda(j);
    let mut ck = Checker {
        lambda: &lambda,
        checks: Vec::new(),
        skipped: Vec::new(),
        tol,
    };
    let mut clause_i = true;
    for j in 1..theta {
        clause_i &= ck.check("i", j, (1.0, 1 + j), (1.0, theta + 1 - j));
    }
    let (mut clause_ii, mut clause_iii) = (None, None);
    if theta - kappa == 1 {
        let mut ok = true;
        for j in 1..=kappa + theta {
            ok &= ck.check("ii", j, (1.0, -kappa + j), (1.0, theta - j + 1));
        }
        clause_ii = Some(ok);
    } else {
        let mut ok = ck.check("iii", 0, (2f64.sqrt(), 1), (1.0, theta - kappa));
        for j in (1..=kappa + theta).filter(|&j| j != kappa) {
            ok &= ck.check("iii", j, (1.0, -kappa + j), (1.0, theta - j + 1));
        }
        clause_iii = Some(ok);
    }
    let satisfied = clause_i && clause_ii.unwrap_or(true) && clause_iii.unwrap_or(true);
    TwoBranchCondition {
        kappa: w.kappa(),
        theta: w.theta(),
        clause_i,
        clause_ii,
        clause_iii,
        checks: ck.checks,
        skipped: ck.skipped,
        satisfied,
    }
}

/// A relation `|λ_a| = ratio · |λ_b|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusRelation {
    pub a: i64,
    pub b: i64,
    pub ratio: f64,
}

/// Relations equivalent to both symmetrized chains of the two-branch tree being
/// palindromic: `|λ_{1+j}| = |λ_{θ+1-j}|` for `1 ≤ j < θ`, and
/// `ν_j |λ_{-κ+j}| = μ_j |λ_{θ-j+1}|` for `1 ≤ j ≤ κ+θ`, where `μ_j = √2` only
/// at `j = θ` and `ν_j = √2` only at `j = κ+1`.
pub fn chain_palindrome_relations(kappa: usize, theta: usize) -> Vec<ModulusRelation> {
    let (k, t) = (kappa as i64, theta as i64);
    let s2 = 2f64.sqrt();
    let mut out = Vec::new();
    for j in 1..t {
        out.push(ModulusRelation {
            a: 1 + j,
            b: t + 1 - j,
            ratio: 1.0,
        });
    }
    for j in 1..=k + t {
        let mu = if j == t { s2 } else { 1.0 };
        let nu = if j == k + 1 { s2 } else { 1.0 };
        out.push(ModulusRelation {
            a: -k + j,
            b: t - j + 1,
            ratio: mu / nu,
        });
    }
    out
}

pub fn chain_palindrome_holds(w: &TwoBranchWeights, tol: f64) -> bool {
    chain_palindrome_relations(w.kappa(), w.theta())
        .iter()
        .all(|r| {
            let a = w.lambda(r.a).unwrap().norm();
            let b = w.lambda(r.b).unwrap().norm();
            moduli_equal(a, r.ratio * b, tol)
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryCondition {
    pub kappa: usize,
    pub checks: Vec<ClauseCheck>,
    pub skipped: Vec<SkippedIndex>,
    pub satisfied: bool,
}

impl BinaryCondition {
    pub fn first_failure(&self) -> Option<&ClauseCheck> {
        self.checks.iter().find(|c| !c.holds)
    }
}

/// The published binary-tree criterion `2|λ_{l+1}| = |λ_{κ-l}|` for `l = 0, …, κ`,
/// evaluated literally. `l = κ` references `λ_{κ+1}` and `λ_0` and is skipped.
pub fn binary_condition(w: &BinaryWeights, tol: f64) -> BinaryCondition {
    let kappa = w.kappa() as i64;
    let lambda = |k| w.lambda(k);
    let mut ck = Checker {
        lambda: &lambda,
        checks: Vec::new(),
        skipped: Vec::new(),
        tol,
    };
    let mut satisfied = true;
    for l in 0..=kappa {
        satisfied &= ck.check("binary", l, (2.0, l + 1), (1.0, kappa - l));
    }
    BinaryCondition {
        kappa: w.kappa(),
        checks: ck.checks,
        skipped: ck.skipped,
        satisfied,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormLink {
    pub l: usize,
    /// `‖f_l‖ / ‖f_{κ-l}‖ = √(2^{2l-κ})` for the level sums `f_k = Σ_l e_{k,l}`.
    pub modulus: f64,
}

/// Moduli forced on the scalars carrying `ℂ f_{κ-l}` onto `ℂ f_l`.
pub fn binary_norm_chain(kappa: usize) -> Vec<NormLink> {
    (0..=kappa)
        .map(|l| NormLink {
            l,
            modulus: 2f64.powf((2.0 * l as f64 - kappa as f64) / 2.0),
        })
        .collect()
}

/// `|w_j| = |w_{n+1-j}|` for every `j`, to relative tolerance `tol`.
pub fn palindrome_condition(w: &[Complex64], tol: f64) -> bool {
    let n = w.len();
    (0..n / 2).all(|j| moduli_equal(w[j].norm(), w[n - 1 - j].norm(), tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBranchConjugation {
    /// `δ_0, …, δ_{θ-1}` as `[re, im]`.
    pub delta: Vec<[f64; 2]>,
    /// `γ_0, …, γ_{κ+θ}` as `[re, im]`.
    pub gamma: Vec<[f64; 2]>,
    pub intertwining_residual: f64,
    #[serde(skip)]
    pub conjugation: Option<Conjugation>,
}

/// Symmetrized two-branch basis: `f_{-κ}, …, f_θ` then `g_1, …, g_θ`.
fn two_branch_basis(tree: &DirectedTree, kappa: usize, theta: usize) -> (Vec<CVector>, Vec<CVector>) {
    let n = tree.len();
    let e = |v: VertexId| basis_vector(n, tree.index_of(&v).expect("generated label"));
    let h = real(std::f64::consts::FRAC_1_SQRT_2);
    let mut f: Vec<CVector> = (-(kappa as i64)..=0).map(|j| e(VertexId::int(j))).collect();
    let mut g = Vec::with_capacity(theta);
    for j in 1..=theta as i64 {
        let (a, b) = (e(VertexId::pair(1, j)), e(VertexId::pair(2, j)));
        f.push((&a + &b) * h);
        g.push((a - b) * h);
    }
    (f, g)
}

/// Builds the two-branch conjugation from the phase recursions
/// `δ_j λ_{θ-j+1} = δ_{j-1} λ_{1+j}` and `γ_j μ_j λ_{θ-j+1} = γ_{j-1} ν_j λ_{-κ+j}`
/// on positivized weights with `δ_0 = γ_0 = 1`, then undoes the gauge.
pub fn two_branch_conjugation(w: &TwoBranchWeights, tol: f64) -> Result<TwoBranchConjugation> {
    let (kappa, theta) = (w.kappa(), w.theta());
    let (k, t) = (kappa as i64, theta as i64);
    let tree = w.tree();
    let weights = w.to_assignment();
    let (positive, gauge) = positivize_weights(&tree, &weights)?;
    let p = TwoBranchWeights::from_assignment(kappa, theta, &positive)?;
    let lam = |j: i64| p.lambda(j).unwrap();
    let s2 = real(2f64.sqrt());
    let unimodular = |z: Complex64| (z.norm() - 1.0).abs() <= tol;

    let mut delta = vec![ONE];
    for j in 1..t {
        let d = delta[(j - 1) as usize] * lam(1 + j) / lam(t - j + 1);
        if !unimodular(d) {
            return Err(Error::PhaseRecursion {
                sequence: "delta",
                step: j as usize,
                modulus: d.norm(),
            });
        }
        delta.push(d);
    }
    let mut gamma = vec![ONE];
    for j in 1..=k + t {
        let mu = if j == t { s2 } else { ONE };
        let nu = if j == k + 1 { s2 } else { ONE };
        let g = gamma[(j - 1) as usize] * nu * lam(-k + j) / (mu * lam(t - j + 1));
        if !unimodular(g) {
            return Err(Error::PhaseRecursion {
                sequence: "gamma",
                step: j as usize,
                modulus: g.norm(),
            });
        }
        gamma.push(g);
    }

    let (f, g) = two_branch_basis(&tree, kappa, theta);
    let n = tree.len();
    // f[i] is f_{i-κ}; g[i] is g_{i+1}.
    let fi = |j: i64| &f[(j + k) as usize];
    let gi = |j: i64| &g[(j - 1) as usize];
    let mut a = CMatrix::zeros(n, n);
    for (j, &gam) in gamma.iter().enumerate() {
        let j = j as i64;
        a += fi(t - j) * fi(-k + j).transpose() * gam;
    }
    for (j, &del) in delta.iter().enumerate() {
        let j = j as i64;
        a += gi(t - j) * gi(1 + j).transpose() * del;
    }
    let d = gauge.matrix();
    let a = &d * a * d.transpose();
    let conj = Conjugation::from_matrix(a, tree.vertices().to_vec(), tol)?;
    let s = build_shift(&tree, &weights)?;
    let report = verify_c_symmetry(s.matrix(), &conj, tol)?;
    if !report.pass {
        return Err(Error::Verification(report.residual));
    }
    Ok(TwoBranchConjugation {
        delta: delta.into_iter().map(pair).collect(),
        gamma: gamma.into_iter().map(pair).collect(),
        intertwining_residual: report.residual,
        conjugation: Some(conj),
    })
}

/// One truncated-shift block: `J v_i = weights[i] · v_{i+1}` on columns
/// `offset .. offset + weights.len() + 1` of the decomposition's unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub offset: usize,
    pub weights: Vec<[f64; 2]>,
}

impl Chain {
    /// Number of basis vectors in the chain.
    pub fn dim(&self) -> usize {
        self.weights.len() + 1
    }

    pub fn complex_weights(&self) -> Vec<Complex64> {
        self.weights.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.complex_weights().iter().map(|z| z.norm()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecomposition {
    /// Columns are the chain vectors, chain after chain.
    pub unitary: CMatrix,
    pub chains: Vec<Chain>,
    /// `‖U* T U − ⊕ J_chain‖_F`.
    pub residual: f64,
    pub family: TreeFamily,
}

impl BlockDecomposition {
    pub fn block_matrix(&self) -> CMatrix {
        let n = self.unitary.ncols();
        let mut b = CMatrix::zeros(n, n);
        for c in &self.chains {
            for (i, w) in c.complex_weights().into_iter().enumerate() {
                b[(c.offset + i + 1, c.offset + i)] = w;
            }
        }
        b
    }
}

fn assemble(t: &CMatrix, chains: Vec<Vec<CVector>>, family: TreeFamily) -> BlockDecomposition {
    let n = t.nrows();
    let mut cols = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(chains.len());
    for vecs in chains {
        let offset = cols.len();
        let weights = vecs
            .windows(2)
            .map(|p| pair(p[1].dotc(&(t * &p[0]))))
            .collect();
        cols.extend(vecs);
        out.push(Chain { offset, weights });
    }
    let u = columns(n, &cols);
    let mut d = BlockDecomposition {
        unitary: u,
        chains: out,
        residual: 0.0,
        family,
    };
    let b = d.block_matrix();
    d.residual = frobenius(&(d.unitary.adjoint() * t * &d.unitary - b));
    d
}

fn require_generation_constant(tree: &DirectedTree, w: &WeightAssignment) -> Result<()> {
    let mut by_depth: Vec<Option<Complex64>> = vec![None; tree.depth() + 1];
    for i in tree.non_root() {
        let z = w.get(tree.vertex(i)).expect("checked");
        let d = tree.depth_of(i);
        match by_depth[d] {
            None => by_depth[d] = Some(z),
            Some(prev) if prev == z => {}
            Some(_) => return Err(Error::NotGenerationConstant(d)),
        }
    }
    Ok(())
}

/// Orthogonal decomposition of a shift with generation-constant weights into
/// truncated-shift chains, for path, two-branch and binary trees.
pub fn decompose_equal_weight_tree(tree: &DirectedTree, w: &WeightAssignment) -> Result<BlockDecomposition> {
    let family = TreeFamily::recognize(tree)
        .ok_or_else(|| Error::UnsupportedTree("not a path, two-branch or binary tree".into()))?;
    let s = build_shift(tree, w)?;
    let t = s.matrix();
    let n = tree.len();
    let e = |i: usize| basis_vector(n, i);
    match family {
        TreeFamily::Path { .. } => {
            let mut chain = Vec::with_capacity(n);
            let mut v = tree.root();
            loop {
                chain.push(e(v));
                match tree.children(v).first() {
                    Some(&c) => v = c,
                    None => break,
                }
            }
            Ok(assemble(t, vec![chain], family))
        }
        TreeFamily::TwoBranch { kappa, theta } => {
            TwoBranchWeights::from_assignment(kappa, theta, w)?;
            let (f, g) = two_branch_basis(tree, kappa, theta);
            Ok(assemble(t, vec![f, g], family))
        }
        TreeFamily::Binary { kappa } => {
            require_generation_constant(tree, w)?;
            let level_sum = |vs: &[usize]| -> CVector {
                let mut v = CVector::zeros(n);
                for &i in vs {
                    v[i] = ONE;
                }
                v.normalize()
            };
            let mut chains = vec![(0..=kappa)
                .map(|k| level_sum(&tree.descendants_at(tree.root(), k)))
                .collect::<Vec<_>>()];
            for v in 0..n {
                let k = tree.depth_of(v);
                if k >= kappa {
                    continue;
                }
                let (l, r) = (tree.children(v)[0], tree.children(v)[1]);
                let chain = (0..kappa - k)
                    .map(|m| {
                        let a = level_sum(&tree.descendants_at(l, m));
                        let b = level_sum(&tree.descendants_at(r, m));
                        (a - b) * real(std::f64::consts::FRAC_1_SQRT_2)
                    })
                    .collect();
                chains.push(chain);
            }
            Ok(assemble(t, chains, family))
        }
        _ => Err(Error::UnsupportedTree(format!("{family:?}"))),
    }
}

/// Exchange matrix of size `n`.
fn flip(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { ONE } else { ZERO })
}

/// Diagonal gauge taking a chain with positive weights `|w|` to weights `w`.
fn chain_gauge(w: &[Complex64]) -> Vec<Complex64> {
    let mut d = vec![ONE];
    for z in w {
        let last = *d.last().unwrap();
        d.push(last * (z / z.norm()));
    }
    d
}

/// Conjugation assembled from flips: each palindromic chain is flipped onto
/// itself and each chain is flipped onto a partner whose moduli are its
/// reversal. Returns `None` when no such pairing exists or the result fails
/// verification against `t` at `tol`.
pub fn reversal_pairing_cs(
    t: &CMatrix,
    basis: &[VertexId],
    blocks: &BlockDecomposition,
    tol: f64,
) -> Option<Conjugation> {
    let chains = &blocks.chains;
    if chains.iter().any(|c| c.complex_weights().iter().any(|z| z.norm() == 0.0)) {
        return None;
    }
    let n = blocks.unitary.ncols();
    let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| moduli_equal(*x, *y, CONDITION_TOL));
    let mut used = vec![false; chains.len()];
    let mut a_blocks = CMatrix::zeros(n, n);
    for i in 0..chains.len() {
        if used[i] {
            continue;
        }
        let m = chains[i].moduli();
        let rev: Vec<f64> = m.iter().rev().copied().collect();
        let len = chains[i].dim();
        let oi = chains[i].offset;
        if same(&m, &rev) {
            used[i] = true;
            a_blocks.view_mut((oi, oi), (len, len)).copy_from(&flip(len));
            continue;
        }
        let partner = (i + 1..chains.len()).find(|&j| !used[j] && same(&chains[j].moduli(), &rev))?;
        used[i] = true;
        used[partner] = true;
        let oj = chains[partner].offset;
        a_blocks.view_mut((oi, oj), (len, len)).copy_from(&flip(len));
        a_blocks.view_mut((oj, oi), (len, len)).copy_from(&flip(len));
    }
    let mut gauge = Vec::with_capacity(n);
    for c in chains {
        gauge.extend(chain_gauge(&c.complex_weights()));
    }
    let d = CMatrix::from_diagonal(&CVector::from_vec(gauge));
    let u = &blocks.unitary;
    let a = u * (&d * a_blocks * d.transpose()) * u.transpose();
    let conj = Conjugation::from_matrix(a, basis.to_vec(), tol).ok()?;
    verify_c_symmetry(t, &conj, tol)
        .ok()
        .filter(|r| r.pass)
        .map(|_| conj)
}

/// Decomposes and pairs in one go; `None` for unsupported trees or when no pairing exists.
pub fn pairing_certificate(tree: &DirectedTree, w: &WeightAssignment, tol: f64) -> Option<Conjugation> {
    let blocks = decompose_equal_weight_tree(tree, w).ok()?;
    let s = build_shift(tree, w).ok()?;
    reversal_pairing_cs(s.matrix(), s.basis(), &blocks, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::tree::generate_path;
    use approx::assert_relative_eq;

    fn r(xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| real(x)).collect()
    }

    #[test]
    fn two_branch_printed_examples() {
        let w = TwoBranchWeights::from_flat(1, 2, &r(&[1.0, 5.0, 1.0])).unwrap();
        let cond = two_branch_condition(&w, CONDITION_TOL);
        assert!(cond.satisfied && cond.clause_i && cond.clause_ii == Some(true));
        assert!(cond.skipped.is_empty());

        let w = TwoBranchWeights::from_flat(1, 2, &r(&[1.0, 5.0, 2.0])).unwrap();
        let cond = two_branch_condition(&w, CONDITION_TOL);
        assert!(!cond.satisfied);
        let fail = cond.first_failure().unwrap();
        assert_eq!((fail.clause.as_str(), fail.index), ("ii", 1));

        let w = TwoBranchWeights::from_flat(0, 2, &r(&[1.0, 2f64.sqrt()])).unwrap();
        let cond = two_branch_condition(&w, CONDITION_TOL);
        assert!(cond.checks[1].holds, "√2·|λ_1| = |λ_2| part");
        assert!(!cond.satisfied);
        let fail = cond.first_failure().unwrap();
        assert_eq!((fail.clause.as_str(), fail.index), ("iii", 1));
        assert!(chain_palindrome_holds(&w, CONDITION_TOL));
    }

    #[test]
    fn clause_iii_is_never_satisfiable() {
        let s2 = 2f64.sqrt();
        // Weights meeting the √2 relation (and everything else the chains need) still fail.
        for (k, t, flat) in [
            (0, 2, vec![1.0, s2]),
            (0, 3, vec![1.0, s2, s2]),
            (1, 3, vec![s2, 1.0, s2, s2]),
            (2, 1, vec![1.0, 1.0, 1.0 / s2]),
        ] {
            let w = TwoBranchWeights::from_flat(k, t, &r(&flat)).unwrap();
            assert!(chain_palindrome_holds(&w, CONDITION_TOL), "{k} {t}");
            let cond = two_branch_condition(&w, CONDITION_TOL);
            assert_eq!(cond.clause_iii, Some(false), "{k} {t}");
            let j = k as i64 + 1;
            assert!(cond.checks.iter().any(|c| c.clause == "iii" && c.index == j && !c.holds));
        }
    }

    #[test]
    fn binary_printed_examples() {
        let cond = binary_condition(&BinaryWeights::new(r(&[1.0, 2.0])).unwrap(), CONDITION_TOL);
        assert!(cond.checks[0].holds && !cond.checks[1].holds && !cond.satisfied);
        assert_eq!(cond.first_failure().unwrap().index, 1);
        assert_eq!(cond.skipped.len(), 1);
        assert_eq!(cond.skipped[0].index, 2);
        let cond = binary_condition(&BinaryWeights::new(r(&[1.0, 1.0])).unwrap(), CONDITION_TOL);
        assert!(!cond.checks[0].holds);
        let cond = binary_condition(&BinaryWeights::new(r(&[1.0, 3.0, 0.25])).unwrap(), CONDITION_TOL);
        assert!(!cond.checks[1].holds, "2|λ_2| = |λ_2| forces λ_2 = 0");
    }

    #[test]
    fn norm_chain() {
        let ch = binary_norm_chain(2);
        assert_relative_eq!(ch[0].modulus, 0.5);
        assert_relative_eq!(ch[1].modulus, 1.0);
        assert_relative_eq!(binary_norm_chain(3)[0].modulus, 1.0 / 8f64.sqrt());
    }

    #[test]
    fn palindromes() {
        assert!(palindrome_condition(&r(&[1.0, 2.0, 1.0]), 1e-12));
        assert!(!palindrome_condition(&r(&[1.0, 2.0]), 1e-12));
        assert!(palindrome_condition(&[c(0.3, 4.0)], 1e-12));
        assert!(palindrome_condition(&[c(0.0, 1.0), real(-1.0)], 1e-12));
    }

    #[test]
    fn conjugation_for_unit_weights() {
        let w = TwoBranchWeights::from_flat(1, 2, &r(&[1.0, 1.0, 1.0])).unwrap();
        let out = two_branch_conjugation(&w, 1e-10).unwrap();
        assert!(out.intertwining_residual <= 1e-12);
        assert!(out.delta.iter().chain(&out.gamma).all(|p| *p == [1.0, 0.0]));
    }

    #[test]
    fn conjugation_with_phases() {
        let w = TwoBranchWeights::from_flat(1, 2, &[c(0.0, 1.0), c(-1.0, 1.0), c(0.6, 0.8)]).unwrap();
        let out = two_branch_conjugation(&w, 1e-10).unwrap();
        assert!(out.intertwining_residual <= 1e-12);
    }

    #[test]
    fn conjugation_failure_reports_gamma_step() {
        let w = TwoBranchWeights::from_flat(1, 2, &r(&[1.0, 1.0, 2.0])).unwrap();
        match two_branch_conjugation(&w, 1e-10) {
            Err(Error::PhaseRecursion { sequence, step, modulus }) => {
                assert_eq!((sequence, step), ("gamma", 1));
                assert_relative_eq!(modulus, 0.5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_branch_chains() {
        let w = TwoBranchWeights::from_flat(1, 2, &r(&[1.0, 1.0, 1.0])).unwrap();
        let tree = w.tree();
        let d = decompose_equal_weight_tree(&tree, &w.to_assignment()).unwrap();
        assert!(d.residual <= 1e-12);
        let m: Vec<Vec<f64>> = d.chains.iter().map(Chain::moduli).collect();
        assert_eq!(m.len(), 2);
        for (got, want) in m[0].iter().zip([1.0, 2f64.sqrt(), 1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
        assert_eq!(m[1].len(), 1);
        assert_relative_eq!(m[1][0], 1.0, epsilon = 1e-14);
        assert!(crate::linalg::orthonormality_residual(&d.unitary) < 1e-12);
    }

    #[test]
    fn binary_chains() {
        let tree = generate_binary(2).unwrap();
        let w = BinaryWeights::new(r(&[1.0, 1.0])).unwrap().to_assignment().unwrap();
        let d = decompose_equal_weight_tree(&tree, &w).unwrap();
        assert!(d.residual <= 1e-12);
        let m: Vec<Vec<f64>> = d.chains.iter().map(Chain::moduli).collect();
        let s2 = 2f64.sqrt();
        assert_eq!(m.len(), 4);
        assert!(m[0].iter().all(|x| (x - s2).abs() < 1e-14) && m[0].len() == 2);
        assert!(m[1].len() == 1 && (m[1][0] - s2).abs() < 1e-14);
        assert!(m[2].is_empty() && m[3].is_empty());
        let mut w2 = w.clone();
        w2.insert(VertexId::pair(2, 3), real(5.0));
        assert!(matches!(
            decompose_equal_weight_tree(&tree, &w2),
            Err(Error::NotGenerationConstant(2))
        ));
    }

    #[test]
    fn path_is_one_chain() {
        let tree = generate_path(4).unwrap();
        let w = WeightAssignment::from_fn(&tree, |i| real(i as f64));
        let d = decompose_equal_weight_tree(&tree, &w).unwrap();
        assert_eq!(d.chains.len(), 1);
        assert_eq!(d.chains[0].moduli(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pairing_on_synthetic_blocks() {
        // Two chains (1,2) and (2,1) on a 6-dimensional space, identity basis change.
        let mut t = CMatrix::zeros(6, 6);
        t[(1, 0)] = real(1.0);
        t[(2, 1)] = real(2.0);
        t[(4, 3)] = real(2.0);
        t[(5, 4)] = real(1.0);
        let blocks = BlockDecomposition {
            unitary: CMatrix::identity(6, 6),
            chains: vec![
                Chain { offset: 0, weights: vec![[1.0, 0.0], [2.0, 0.0]] },
                Chain { offset: 3, weights: vec![[2.0, 0.0], [1.0, 0.0]] },
            ],
            residual: 0.0,
            family: TreeFamily::Path { n: 6 },
        };
        let basis: Vec<VertexId> = (0..6).map(VertexId::int).collect();
        assert!(reversal_pairing_cs(&t, &basis, &blocks, 1e-12).is_some());

        let mut lone = blocks.clone();
        lone.chains = vec![Chain { offset: 0, weights: vec![[2f64.sqrt(), 0.0], [8f64.sqrt(), 0.0]] }];
        lone.unitary = CMatrix::identity(3, 3);
        let mut t3 = CMatrix::zeros(3, 3);
        t3[(1, 0)] = real(2f64.sqrt());
        t3[(2, 1)] = real(8f64.sqrt());
        assert!(reversal_pairing_cs(&t3, &basis[..3], &lone, 1e-12).is_none());
    }

    #[test]
    fn pairing_on_two_branch_and_binary() {
        let w = TwoBranchWeights::from_flat(1, 2, &r(&[1.0, 1.0, 1.0])).unwrap();
        assert!(pairing_certificate(&w.tree(), &w.to_assignment(), 1e-10).is_some());
        let b = BinaryWeights::new(vec![c(0.0, 1.0), real(-1.0)]).unwrap();
        assert!(pairing_certificate(&b.tree().unwrap(), &b.to_assignment().unwrap(), 1e-10).is_some());
        let b = BinaryWeights::new(r(&[1.0, 2.0])).unwrap();
        assert!(pairing_certificate(&b.tree().unwrap(), &b.to_assignment().unwrap(), 1e-10).is_none());
    }
}
