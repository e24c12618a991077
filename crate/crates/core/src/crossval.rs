//! Audits the published family criteria against certified verdicts.
//!
//! Each instance is judged three ways: the literal criterion, [`decide_cs`]
//! and the reversal pairing on the chain decomposition. Disagreements between
//! the criterion and the decider are listed together with whether both
//! certified oracles back the decider's answer.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decider::{decide_shift, DecideOptions, VerdictDocument, VerdictKind};
use crate::error::{Error, Result};
use crate::family::{
    binary_condition, binary_norm_chain, chain_palindrome_relations, pairing_certificate,
    two_branch_condition, two_branch_conjugation, BinaryCondition, BinaryWeights, NormLink,
    TwoBranchCondition, TwoBranchWeights, CONDITION_TOL,
};
use crate::linalg::{pair, unpair};
use crate::shift::{build_shift, WeightAssignment};
use crate::tree::{DirectedTree, TreeFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFamily {
    TwoBranch,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub family: GridFamily,
    pub kappa_max: usize,
    /// Ignored for binary trees.
    pub theta_max: usize,
    /// When set, only cells with `θ = κ + offset` are used.
    pub theta_offset: Option<usize>,
    pub samples: usize,
}

impl GridSpec {
    pub fn cells(&self) -> Vec<TreeFamily> {
        match self.family {
            GridFamily::TwoBranch => (0..=self.kappa_max)
                .flat_map(|kappa| {
                    (1..=self.theta_max)
                        .filter(move |&theta| self.theta_offset.is_none_or(|o| theta == kappa + o))
                        .map(move |theta| TreeFamily::TwoBranch { kappa, theta })
                })
                .collect(),
            GridFamily::Binary => (2..=self.kappa_max)
                .map(|kappa| TreeFamily::Binary { kappa })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// Moduli chosen so that every symmetrized chain is palindromic.
    Palindromic,
    /// A palindromic sample with one modulus scaled away from its partners.
    Perturbed,
    Given,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub params: TreeFamily,
    /// Two-branch: `λ_{-κ+1}, …, λ_θ`; binary: `λ_1, …, λ_κ`.
    pub weights: Vec<[f64; 2]>,
    pub kind: SampleKind,
}

impl Instance {
    pub fn new(params: TreeFamily, weights: &[Complex64], kind: SampleKind) -> Self {
        Instance {
            params,
            weights: weights.iter().copied().map(pair).collect(),
            kind,
        }
    }

    fn complex_weights(&self) -> Vec<Complex64> {
        self.weights.iter().copied().map(unpair).collect()
    }

    fn build(&self) -> Result<(DirectedTree, WeightAssignment, Family)> {
        let w = self.complex_weights();
        match self.params {
            TreeFamily::TwoBranch { kappa, theta } => {
                let tb = TwoBranchWeights::from_flat(kappa, theta, &w)?;
                Ok((tb.tree(), tb.to_assignment(), Family::TwoBranch(tb)))
            }
            TreeFamily::Binary { kappa } => {
                if w.len() != kappa {
                    return Err(Error::LengthMismatch {
                        expected: kappa,
                        got: w.len(),
                    });
                }
                let b = BinaryWeights::new(w)?;
                Ok((b.tree()?, b.to_assignment()?, Family::Binary(b)))
            }
            other => Err(Error::UnsupportedTree(format!("{other:?}"))),
        }
    }
}

enum Family {
    TwoBranch(TwoBranchWeights),
    Binary(BinaryWeights),
}

/// Multiplicative union-find: tracks `|λ_x| = ratio(x) · |λ_root(x)|`.
struct RatioClasses {
    parent: Vec<usize>,
    ratio: Vec<f64>,
}

impl RatioClasses {
    fn new(n: usize) -> Self {
        RatioClasses {
            parent: (0..n).collect(),
            ratio: vec![1.0; n],
        }
    }

    fn find(&mut self, x: usize) -> (usize, f64) {
        if self.parent[x] == x {
            return (x, 1.0);
        }
        let (root, r) = self.find(self.parent[x]);
        self.parent[x] = root;
        self.ratio[x] *= r;
        (root, self.ratio[x])
    }

    /// Records `|λ_a| = q · |λ_b|`.
    fn union(&mut self, a: usize, b: usize, q: f64) {
        let (ra, xa) = self.find(a);
        let (rb, xb) = self.find(b);
        if ra != rb {
            // |λ_ra| = |λ_a| / xa = q xb |λ_rb| / xa.
            self.parent[ra] = rb;
            self.ratio[ra] = q * xb / xa;
        }
    }
}

fn random_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
}

/// Palindromic moduli (random class representatives in `[0.5, 2]`) with random
/// phases, optionally perturbing one modulus that has a partner.
fn sample_weights(params: TreeFamily, rng: &mut ChaCha8Rng, perturb: bool) -> (Vec<Complex64>, SampleKind) {
    let (n, relations): (usize, Vec<(usize, usize, f64)>) = match params {
        TreeFamily::TwoBranch { kappa, theta } => {
            let off = kappa as i64 - 1;
            let rel = chain_palindrome_relations(kappa, theta)
                .into_iter()
                .map(|r| ((r.a + off) as usize, (r.b + off) as usize, r.ratio))
                .collect();
            (kappa + theta, rel)
        }
        TreeFamily::Binary { kappa } => (kappa, (1..kappa).map(|k| (0, k, 1.0)).collect()),
        _ => unreachable!("grid families only"),
    };
    let mut classes = RatioClasses::new(n);
    for &(a, b, q) in &relations {
        classes.union(a, b, q);
    }
    let mut base = vec![0.0; n];
    let mut moduli = vec![0.0; n];
    let mut sizes = vec![0usize; n];
    for x in 0..n {
        let (root, _) = classes.find(x);
        sizes[root] += 1;
    }
    for x in 0..n {
        let (root, r) = classes.find(x);
        if base[root] == 0.0 {
            base[root] = rng.random_range(0.5..2.0);
        }
        moduli[x] = r * base[root];
    }
    let mut kind = SampleKind::Palindromic;
    if perturb {
        let movable: Vec<usize> = (0..n).filter(|&x| sizes[classes.find(x).0] >= 2).collect();
        if !movable.is_empty() {
            let x = movable[rng.random_range(0..movable.len())];
            let factor: f64 = rng.random_range(1.5..2.5);
            moduli[x] *= if rng.random_bool(0.5) { factor } else { 1.0 / factor };
            kind = SampleKind::Perturbed;
        }
    }
    let weights = moduli.iter().map(|&m| random_phase(rng) * m).collect();
    (weights, kind)
}

/// Instances for every grid cell: even samples palindromic, odd samples perturbed.
/// Instance `i` draws from the ChaCha stream `i` of `seed`.
pub fn sample_grid(spec: &GridSpec, seed: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    for cell in spec.cells() {
        for s in 0..spec.samples {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(out.len() as u64);
            let (w, kind) = sample_weights(cell, &mut rng, s % 2 == 1);
            out.push(Instance::new(cell, &w, kind));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PrintedCondition {
    TwoBranch(TwoBranchCondition),
    Binary(BinaryCondition),
}

impl PrintedCondition {
    pub fn satisfied(&self) -> bool {
        match self {
            PrintedCondition::TwoBranch(c) => c.satisfied,
            PrintedCondition::Binary(c) => c.satisfied,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingSummary {
    pub verdict: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intertwining_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSummary {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intertwining_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub index: usize,
    pub params: TreeFamily,
    pub weights: Vec<[f64; 2]>,
    pub kind: SampleKind,
    pub printed_condition: PrintedCondition,
    pub decider: VerdictDocument,
    /// The decider's certificate or witness re-verified from the matrix alone.
    pub decider_rechecked: bool,
    /// `Cs` when a reversal pairing certificate exists, else `Undetermined`.
    pub pairing: PairingSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_chain: Option<Vec<NormLink>>,
    /// `None` when the decider was undetermined.
    pub agree: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub index: usize,
    pub printed: bool,
    pub oracle: VerdictKind,
    pub decider_rechecked: bool,
    pub pairing: VerdictKind,
    /// Decider witness re-verified and the pairing oracle consistent with it.
    pub double_certified: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub instances: usize,
    pub agree: usize,
    pub disagree: usize,
    pub undetermined: usize,
    pub cs: usize,
    pub not_cs: usize,
    pub all_rechecked: bool,
    pub disagreements: Vec<Disagreement>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub seed: u64,
    pub options: DecideOptions,
    pub instances: Vec<InstanceReport>,
    pub summary: Summary,
}

fn evaluate(index: usize, inst: &Instance, options: &DecideOptions) -> Result<InstanceReport> {
    let (tree, weights, family) = inst.build()?;
    let s = build_shift(&tree, &weights)?;
    let (printed, construction, norm_chain) = match &family {
        Family::TwoBranch(w) => {
            let construction = match two_branch_conjugation(w, options.tol) {
                Ok(c) => ConstructionSummary {
                    ok: true,
                    intertwining_residual: Some(c.intertwining_residual),
                    error: None,
                },
                Err(e) => ConstructionSummary {
                    ok: false,
                    intertwining_residual: None,
                    error: Some(e.to_string()),
                },
            };
            (
                PrintedCondition::TwoBranch(two_branch_condition(w, CONDITION_TOL)),
                Some(construction),
                None,
            )
        }
        Family::Binary(w) => (
            PrintedCondition::Binary(binary_condition(w, CONDITION_TOL)),
            None,
            Some(binary_norm_chain(w.kappa())),
        ),
    };
    let verdict = decide_shift(&s, options);
    let rechecked = verdict.recheck(s.matrix());
    let pairing = match pairing_certificate(&tree, &weights, options.tol) {
        Some(c) => PairingSummary {
            verdict: VerdictKind::Cs,
            intertwining_residual: crate::conjugation::verify_c_symmetry(s.matrix(), &c, options.tol)
                .ok()
                .map(|r| r.residual),
        },
        None => PairingSummary {
            verdict: VerdictKind::Undetermined,
            intertwining_residual: None,
        },
    };
    let kind = verdict.kind();
    let agree = match kind {
        VerdictKind::Undetermined => None,
        k => Some(printed.satisfied() == (k == VerdictKind::Cs)),
    };
    Ok(InstanceReport {
        index,
        params: inst.params,
        weights: inst.weights.clone(),
        kind: inst.kind,
        printed_condition: printed,
        decider: verdict.to_document(),
        decider_rechecked: rechecked,
        pairing,
        construction,
        norm_chain,
        agree,
    })
}

fn summarize(reports: &[InstanceReport]) -> Summary {
    let mut s = Summary {
        instances: reports.len(),
        all_rechecked: true,
        ..Summary::default()
    };
    for r in reports {
        s.all_rechecked &= r.decider_rechecked;
        match r.decider.verdict {
            VerdictKind::Cs => s.cs += 1,
            VerdictKind::NotCs => s.not_cs += 1,
            VerdictKind::Undetermined => s.undetermined += 1,
        }
        match r.agree {
            Some(true) => s.agree += 1,
            Some(false) => {
                s.disagree += 1;
                let oracle = r.decider.verdict;
                let pairing_consistent = match oracle {
                    VerdictKind::Cs => r.pairing.verdict == VerdictKind::Cs,
                    _ => r.pairing.verdict != VerdictKind::Cs,
                };
                s.disagreements.push(Disagreement {
                    index: r.index,
                    printed: r.printed_condition.satisfied(),
                    oracle,
                    decider_rechecked: r.decider_rechecked,
                    pairing: r.pairing.verdict,
                    double_certified: r.decider_rechecked && pairing_consistent,
                });
            }
            None => {}
        }
    }
    s
}

/// Evaluates explicit instances in parallel; the report keeps input order.
pub fn cross_validate(instances: &[Instance], options: &DecideOptions) -> Result<CrossvalReport> {
    let reports = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| evaluate(i, inst, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossvalReport {
        grid: None,
        seed: options.seed,
        summary: summarize(&reports),
        options: options.clone(),
        instances: reports,
    })
}

/// Samples a grid with [`sample_grid`] and cross-validates it.
pub fn cross_validate_grid(spec: &GridSpec, options: &DecideOptions) -> Result<CrossvalReport> {
    let instances = sample_grid(spec, options.seed);
    let mut report = cross_validate(&instances, options)?;
    report.grid = Some(spec.clone());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::chain_palindrome_holds;

    #[test]
    fn ratio_classes_propagate() {
        let mut c = RatioClasses::new(3);
        c.union(0, 1, 2.0);
        c.union(1, 2, 3.0);
        let (r0, x0) = c.find(0);
        let (r2, x2) = c.find(2);
        assert_eq!(r0, r2);
        assert!((x0 / x2 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn palindromic_samples_meet_the_chain_relations() {
        let spec = GridSpec {
            family: GridFamily::TwoBranch,
            kappa_max: 3,
            theta_max: 4,
            theta_offset: None,
            samples: 4,
        };
        for inst in sample_grid(&spec, 11) {
            let TreeFamily::TwoBranch { kappa, theta } = inst.params else {
                unreachable!()
            };
            let w = TwoBranchWeights::from_flat(kappa, theta, &inst.complex_weights()).unwrap();
            let holds = chain_palindrome_holds(&w, 1e-12);
            assert_eq!(holds, inst.kind == SampleKind::Palindromic, "{inst:?}");
        }
    }

    #[test]
    fn unperturbable_cell_stays_palindromic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, kind) = sample_weights(TreeFamily::TwoBranch { kappa: 0, theta: 1 }, &mut rng, true);
        assert_eq!(kind, SampleKind::Palindromic);
    }

    #[test]
    fn empty_grid_gives_empty_report() {
        let spec = GridSpec {
            family: GridFamily::Binary,
            kappa_max: 1,
            theta_max: 0,
            theta_offset: None,
            samples: 5,
        };
        let report = cross_validate_grid(&spec, &DecideOptions::default()).unwrap();
        assert!(report.instances.is_empty());
        assert_eq!(report.summary.instances, 0);
    }
}
