use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use treeshift::broom::{build_broom_conjugation, solve_h_sequence, BroomSchedule};
use treeshift::crossval::{cross_validate_grid, GridFamily, GridSpec, PrintedCondition};
use treeshift::decider::{ObstructionReport, Verdict, VerdictKind};
use treeshift::family::{
    binary_condition, pairing_certificate, two_branch_condition, two_branch_conjugation, BinaryWeights,
    ClauseCheck, SkippedIndex, TwoBranchWeights,
};
use treeshift::linalg::{pair, real};
use treeshift::{
    build_shift, decide_shift, kernel_table, verify_c_symmetry, ConjugationDocument, DecideOptions,
    TreeFamily, WeightAssignment,
};

use crate::input::{load_instance, parse_complex, parse_weights, write_file, InstanceDocument};
use crate::{CliError, Common, FamilyArg, FamilyParams, GenerateFamily};

/// Seventeen significant digits, so text reports diff cleanly.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn options(common: &Common) -> DecideOptions {
    DecideOptions {
        tol: common.tol,
        rank_tol: common.rank_tol,
        word_len: common.word_len as usize,
        seed: common.seed,
        restarts: common.restarts as usize,
        ..DecideOptions::default()
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

/// Writes the JSON report to `--out` if requested and prints JSON or text.
fn emit<T: Serialize>(report: &T, text: impl FnOnce() -> String, common: &Common) -> Result<(), CliError> {
    let json = to_json(report);
    if let Some(path) = &common.out {
        write_file(path, &json)?;
    }
    if common.json {
        println!("{json}");
    } else {
        print!("{}", text());
    }
    Ok(())
}

fn verdict_text(v: &Verdict) -> String {
    let mut s = format!("verdict: {}\n", v.kind().as_str());
    let r = &v.residuals;
    match v.obstruction() {
        Some(ObstructionReport::KernelDim(w)) => {
            let _ = writeln!(
                s,
                "obstruction: kernel_dim at m={}: dim ker T^m = {}, dim ker T*^m = {}",
                w.power, w.ker, w.ker_adjoint
            );
        }
        Some(ObstructionReport::WordTrace(w)) => {
            let _ = writeln!(s, "obstruction: word_trace `{}`", w.word);
            let _ = writeln!(s, "  tr w     = {} {}i", num(w.trace[0]), num(w.trace[1]));
            let _ = writeln!(s, "  tr w_rev = {} {}i", num(w.trace_reversed[0]), num(w.trace_reversed[1]));
            let _ = writeln!(s, "  |difference| {} > threshold {}", num(w.difference), num(w.threshold));
        }
        Some(ObstructionReport::EmptySylvesterSpace(w)) => {
            let _ = writeln!(
                s,
                "obstruction: empty Sylvester space ({} unknowns, rank {})",
                w.unknowns, w.rank
            );
        }
        None => {}
    }
    let mut line = |name: &str, x: Option<f64>| {
        if let Some(x) = x {
            let _ = writeln!(s, "{name}: {}", num(x));
        }
    };
    line("intertwining residual", r.intertwining);
    line("unitary residual", r.unitary);
    line("symmetric residual", r.symmetric);
    line("best unitary residual", r.best_unitary);
    if let Some(d) = r.sylvester_dim {
        let _ = writeln!(s, "sylvester dim: {d}");
    }
    if let Some(n) = r.restarts_run {
        let _ = writeln!(s, "restarts run: {n}");
    }
    s
}

pub fn check(input: &str, weights: Option<&str>, dump: Option<&Path>, common: &Common) -> Result<u8, CliError> {
    let (tree, w) = load_instance(input, weights)?;
    let s = build_shift(&tree, &w)?;
    if let Some(path) = dump {
        write_file(path, &to_json(&s.dump()))?;
    }
    let v = decide_shift(&s, &options(common));
    emit(&v.to_document(), || verdict_text(&v), common)?;
    Ok(match v.kind() {
        VerdictKind::Cs => 0,
        VerdictKind::NotCs => 1,
        VerdictKind::Undetermined => 2,
    })
}

enum FamilyInstance {
    TwoBranch(TwoBranchWeights),
    Binary(BinaryWeights),
}

fn family_instance(p: &FamilyParams) -> Result<FamilyInstance, CliError> {
    let w = parse_weights(&p.weights)?;
    match p.family {
        FamilyArg::TwoBranch => {
            let theta = p
                .theta
                .ok_or_else(|| CliError::Input("--theta is required for --family two-branch".into()))?;
            Ok(FamilyInstance::TwoBranch(TwoBranchWeights::from_flat(p.kappa, theta, &w)?))
        }
        FamilyArg::Binary => {
            if w.len() != p.kappa {
                return Err(CliError::Input(format!(
                    "binary tree of depth {} needs {} weights, got {}",
                    p.kappa,
                    p.kappa,
                    w.len()
                )));
            }
            Ok(FamilyInstance::Binary(BinaryWeights::new(w)?))
        }
    }
}

fn condition_text(satisfied: bool, first: Option<&ClauseCheck>, skipped: &[SkippedIndex], var: &str) -> String {
    let mut s = match (satisfied, first) {
        (true, _) => "satisfied\n".to_string(),
        (false, Some(c)) if c.clause == "binary" => format!("not satisfied ({var}={})\n", c.index),
        (false, Some(c)) => format!("not satisfied (clause {}, {var}={})\n", c.clause, c.index),
        (false, None) => "not satisfied\n".to_string(),
    };
    if let Some(c) = first {
        let _ = writeln!(s, "  lhs {} vs rhs {}", num(c.lhs), num(c.rhs));
    }
    for k in skipped {
        let _ = writeln!(s, "  skipped {var}={} in clause {}: {}", k.index, k.clause, k.reason);
    }
    s
}

pub fn classify(p: &FamilyParams, common: &Common) -> Result<u8, CliError> {
    let report = match family_instance(p)? {
        FamilyInstance::TwoBranch(w) => PrintedCondition::TwoBranch(two_branch_condition(&w, common.tol)),
        FamilyInstance::Binary(w) => PrintedCondition::Binary(binary_condition(&w, common.tol)),
    };
    let text = || match &report {
        PrintedCondition::TwoBranch(c) => condition_text(c.satisfied, c.first_failure(), &c.skipped, "j"),
        PrintedCondition::Binary(c) => condition_text(c.satisfied, c.first_failure(), &c.skipped, "l"),
    };
    emit(&report, text, common)?;
    Ok(0)
}

#[derive(Serialize)]
struct ConjugateReport {
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<[f64; 2]>>,
    intertwining_residual: f64,
    certificate: ConjugationDocument,
}

pub fn conjugate(p: &FamilyParams, common: &Common) -> Result<u8, CliError> {
    let report = match family_instance(p)? {
        FamilyInstance::TwoBranch(w) => {
            let k = two_branch_conjugation(&w, common.tol).map_err(|e| CliError::Failed(e.to_string()))?;
            let c = k.conjugation.as_ref().expect("successful construction carries C");
            ConjugateReport {
                method: "phase_recursion",
                intertwining_residual: k.intertwining_residual,
                certificate: c.to_document(),
                delta: Some(k.delta.clone()),
                gamma: Some(k.gamma.clone()),
            }
        }
        FamilyInstance::Binary(w) => {
            let tree = w.tree()?;
            let wa = w.to_assignment()?;
            let c = pairing_certificate(&tree, &wa, common.tol)
                .ok_or_else(|| CliError::Failed("no chain reversal pairing: the chains are not mutually reversible".into()))?;
            let s = build_shift(&tree, &wa)?;
            let r = verify_c_symmetry(s.matrix(), &c, common.tol)?;
            ConjugateReport {
                method: "reversal_pairing",
                delta: None,
                gamma: None,
                intertwining_residual: r.residual,
                certificate: c.to_document(),
            }
        }
    };
    let text = || {
        let mut s = format!("conjugation via {}\n", report.method);
        let _ = writeln!(s, "intertwining residual: {}", num(report.intertwining_residual));
        for (name, seq) in [("delta", &report.delta), ("gamma", &report.gamma)] {
            if let Some(seq) = seq {
                let parts: Vec<String> = seq.iter().map(|z| format!("{}{:+.16e}i", num(z[0]), z[1])).collect();
                let _ = writeln!(s, "{name}: {}", parts.join(", "));
            }
        }
        let _ = writeln!(s, "basis: {}", report.certificate.basis.join(" "));
        s
    };
    emit(&report, text, common)?;
    Ok(0)
}

pub fn kernels(input: &str, weights: Option<&str>, max_power: usize, common: &Common) -> Result<u8, CliError> {
    let (tree, w) = load_instance(input, weights)?;
    let s = build_shift(&tree, &w)?;
    let table = kernel_table(s.matrix(), max_power, common.rank_tol)?;
    let text = || {
        let mut s = format!("dim {}\n{:>3} {:>8} {:>9}\n", table.dim, "m", "ker T^m", "ker T*^m");
        for r in &table.rows {
            let _ = writeln!(s, "{:>3} {:>8} {:>9}", r.power, r.ker, r.ker_adjoint);
        }
        s
    };
    emit(&table, text, common)?;
    Ok(0)
}

pub fn crossval(
    family: FamilyArg,
    kappa_max: usize,
    theta_max: usize,
    theta_offset: Option<usize>,
    samples: usize,
    common: &Common,
) -> Result<u8, CliError> {
    let spec = GridSpec {
        family: match family {
            FamilyArg::TwoBranch => GridFamily::TwoBranch,
            FamilyArg::Binary => GridFamily::Binary,
        },
        kappa_max,
        theta_max,
        theta_offset,
        samples,
    };
    let report = cross_validate_grid(&spec, &options(common))?;
    let text = || {
        let m = &report.summary;
        let mut s = format!(
            "instances {}  agree {}  disagree {}  undetermined {}  (cs {}, not_cs {})\nall verdicts rechecked: {}\n",
            m.instances, m.agree, m.disagree, m.undetermined, m.cs, m.not_cs, m.all_rechecked
        );
        for d in &m.disagreements {
            let _ = writeln!(
                s,
                "  #{}: printed {} / oracle {} / pairing {}; double-certified {}",
                d.index,
                d.printed,
                d.oracle.as_str(),
                d.pairing.as_str(),
                d.double_certified
            );
        }
        s
    };
    emit(&report, text, common)?;
    Ok(0)
}

pub fn broom(weights: Option<Vec<f64>>, n: Option<usize>, teeth: Option<usize>, common: &Common) -> Result<u8, CliError> {
    let mut w = match weights {
        Some(w) => w,
        None => (1..=n.unwrap_or(6) as i32).map(|i| 10f64.powi(-i)).collect(),
    };
    if let Some(n) = n {
        if n > w.len() {
            return Err(CliError::Input(format!("--n {n} exceeds the {} weights given", w.len())));
        }
        w.truncate(n);
    }
    let sched = BroomSchedule::new(w)?;
    let failed = |e: treeshift::Error| CliError::Failed(e.to_string());
    let h = solve_h_sequence(&sched).map_err(failed)?;
    let teeth = teeth.unwrap_or(2 * sched.len() + 1);
    let b = build_broom_conjugation(&sched, &h, teeth, common.tol).map_err(|e| match e {
        treeshift::Error::BroomCheck { .. } => failed(e),
        other => other.into(),
    })?;
    let r = &b.report;
    let text = || {
        let mut s = format!("broom with {} teeth, {} steps\n", r.teeth, r.steps.len());
        for st in &r.steps {
            let t: Vec<String> = st.t.iter().map(|x| num(*x)).collect();
            let _ = writeln!(s, "step {}: s^2 = {}, s = {}, t = [{}]", st.step, num(st.s_squared), num(st.s), t.join(", "));
        }
        let _ = writeln!(s, "gram residuals: off-diagonal {}, diagonal {}", num(r.gram.off_diagonal), num(r.gram.diagonal));
        let _ = writeln!(s, "g residuals: norm {}, orthogonality {}, f0 {}", num(r.g_norm), num(r.g_orthogonality), num(r.g_f0));
        for (j, x) in r.intertwining.iter().enumerate() {
            let _ = writeln!(s, "intertwining e_{j}: {}", num(*x));
        }
        let _ = writeln!(s, "pass: {}", r.pass);
        s
    };
    emit(r, text, common)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn generate(
    family: GenerateFamily,
    n: Option<usize>,
    kappa: Option<usize>,
    theta: Option<usize>,
    teeth: Option<usize>,
    weight: &str,
    no_weights: bool,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let need = |x: Option<usize>, flag: &str| x.ok_or_else(|| CliError::Input(format!("--{flag} is required for this family")));
    let params = match family {
        GenerateFamily::Path => TreeFamily::Path { n: need(n, "n")? },
        GenerateFamily::TwoBranch => TreeFamily::TwoBranch {
            kappa: need(kappa, "kappa")?,
            theta: need(theta, "theta")?,
        },
        GenerateFamily::Binary => TreeFamily::Binary {
            kappa: need(kappa, "kappa")?,
        },
        GenerateFamily::Broom => TreeFamily::Broom {
            teeth: need(teeth, "teeth")?,
        },
        GenerateFamily::TwoLevelBroom => TreeFamily::TwoLevelBroom {
            teeth: need(teeth, "teeth")?,
        },
    };
    let tree = params.generate()?;
    let weights = if no_weights {
        None
    } else {
        let z = parse_complex(weight)?;
        if z == real(0.0) {
            return Err(CliError::Input("--weight must be nonzero".into()));
        }
        let wa = WeightAssignment::uniform(&tree, z);
        Some(wa.iter().map(|(v, z)| (v.to_string(), pair(*z))).collect())
    };
    let doc = InstanceDocument {
        tree: tree.to_document(),
        weights,
    };
    let json = to_json(&doc);
    match out {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    Ok(0)
}
