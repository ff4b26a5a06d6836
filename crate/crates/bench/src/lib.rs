//! Shared fixtures for the criterion benchmarks.

use etdfem_core::fem::{Mesh1D, SemiDiscreteSystem};
use etdfem_core::problems::{problem, ProblemId};
use etdfem_core::tfrac::{QuadratureRule, TemperedParams};
use etdfem_core::DVector;

/// Assembled system and initial vector for one benchmark problem.
pub fn setup(id: ProblemId, alpha: f64, n: usize) -> (SemiDiscreteSystem, DVector<f64>) {
    let p = TemperedParams::new(alpha, 1.0).expect("alpha in (1, 2)");
    let prob = problem(id, &p).expect("problem");
    let mesh = Mesh1D::new(n).expect("mesh");
    let sys = prob.build_system(&mesh, &QuadratureRule::default(), None).expect("assembly");
    let u0 = prob.initial_vector(&mesh);
    (sys, u0)
}
