//! Fixed workloads shared by the benchmarks.

use num_complex::Complex64;
use treeshift::broom::BroomSchedule;
use treeshift::family::TwoBranchWeights;
use treeshift::tree::generate_path;
use treeshift::{build_shift, ShiftMatrix, WeightAssignment};

/// Two-branch shift with θ = κ + 1 and moduli meeting every chain relation, so the decider
/// has to find a certificate rather than a witness.
pub fn symmetric_two_branch(kappa: usize) -> ShiftMatrix {
    let theta = kappa + 1;
    let s2 = 2f64.sqrt();
    // Flat order is λ_{-κ+1}, …, λ_θ; λ_1 is unconstrained when θ = κ + 1.
    let mut flat = vec![Complex64::new(1.0, 0.0); kappa + theta];
    flat[kappa] = Complex64::new(s2, 0.0);
    let w = TwoBranchWeights::from_flat(kappa, theta, &flat).expect("valid parameters");
    build_shift(&w.tree(), &w.to_assignment()).expect("complete weights")
}

/// Path shift with weights `1, 2, …`: never complex symmetric.
pub fn uneven_path(n: usize) -> ShiftMatrix {
    let tree = generate_path(n).expect("n >= 1");
    let w = WeightAssignment::from_fn(&tree, |k| Complex64::new(k as f64, 0.0));
    build_shift(&tree, &w).expect("complete weights")
}

/// `λ_i = 10^-i` for `i = 1..=n`.
pub fn decaying_schedule(n: usize) -> BroomSchedule {
    BroomSchedule::new((1..=n as i32).map(|i| 10f64.powi(-i)).collect()).expect("weights in (0, 1)")
}
