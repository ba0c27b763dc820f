//! Dense interior-point solver for small block-diagonal SDPs.

mod ipm;
mod problem;

use serde::{Deserialize, Serialize};

pub use problem::{LinearConstraint, PsdEntry, SdpProblem};

use crate::error::{Error, Result};
use crate::polyalg::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Accepted for interface symmetry; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
    InfeasibleSuspected,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::NumericalFailure => "numerical-failure",
            SolveStatus::InfeasibleSuspected => "infeasible-suspected",
        }
    }
}

/// Primal-dual result. "Primal" is the moment side (the problem as posed),
/// "dual" the SOS side: `dual_blocks` are the Gram matrices and
/// `dual_vector` the multipliers of the equality constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    /// Decision vector.
    pub x: Vec<f64>,
    pub primal_blocks: Vec<SymMatrix>,
    pub dual_vector: Vec<f64>,
    pub dual_blocks: Vec<SymMatrix>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rel_gap: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solves `problem`. Non-optimal outcomes are reported through
/// [`SdpSolution::status`] together with the best iterate seen; `Err` is
/// reserved for malformed input.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    if !(1e-12..=1e-2).contains(&opts.tol) {
        return Err(Error::Usage(format!(
            "solver tolerance {} outside [1e-12, 1e-2]",
            opts.tol
        )));
    }
    problem.validate()?;
    ipm::solve_problem(problem, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// minimize x11 over 1x1 PSD matrices.
    fn scalar_problem() -> SdpProblem {
        let mut p = SdpProblem::new(1);
        p.set_objective(vec![(0, 1.0)], 0.0);
        let b = p.add_block(1);
        p.add_psd_entry(b, 0, 0, 0, 1.0);
        p
    }

    /// minimize trace(X) s.t. x12 = 1, X 2x2 PSD. Variables (x11, x12, x22).
    fn trace_problem() -> SdpProblem {
        let mut p = SdpProblem::new(3);
        p.set_objective(vec![(0, 1.0), (2, 1.0)], 0.0);
        p.add_constraint(vec![(1, 1.0)], 1.0);
        let b = p.add_block(2);
        p.add_psd_entry(b, 0, 0, 0, 1.0);
        p.add_psd_entry(b, 1, 0, 1, 1.0);
        p.add_psd_entry(b, 2, 1, 1, 1.0);
        p
    }

    #[test]
    fn scalar_optimum_is_zero() {
        let sol = solve(&scalar_problem(), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.primal_obj.abs() < 1e-8);
        assert!(sol.primal_blocks[0].get(0, 0) < 1e-8);
    }

    #[test]
    fn trace_optimum_is_two() {
        let sol = solve(&trace_problem(), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_obj - 2.0).abs() < 1e-8, "{}", sol.primal_obj);
        assert!((sol.dual_obj - 2.0).abs() < 1e-8);
        let x = &sol.primal_blocks[0];
        for (r, c) in [(0, 0), (0, 1), (1, 1)] {
            assert!((x.get(r, c) - 1.0).abs() < 1e-6);
        }
        assert_eq!(sol.dual_vector.len(), 1);
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let p = trace_problem();
        let a = solve(&p, &SolverOptions::default()).unwrap();
        let b = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.primal_obj.to_bits(), b.primal_obj.to_bits());
        assert_eq!(a.dual_obj.to_bits(), b.dual_obj.to_bits());
    }

    #[test]
    fn tolerance_range_enforced() {
        let opts = SolverOptions { tol: 0.5, ..Default::default() };
        assert!(matches!(solve(&trace_problem(), &opts), Err(Error::Usage(_))));
    }
}
