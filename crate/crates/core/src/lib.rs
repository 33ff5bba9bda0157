//! Radial solutions of the k-Hessian problem
//!
//! ```text
//! S_k(D²u) = λ (1-u)^q  in B,   u < 0 in B,   u = 0 on ∂B,
//! ```
//!
//! on the unit ball of ℝⁿ: critical exponents, the Emden–Fowler phase plane,
//! the bifurcation diagram `λ ↦ u(0)`, solution counts, closed-form solutions
//! at the critical exponent, and the fixed-point iteration for maximal
//! solutions.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod closed_forms;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod ivp;
pub mod ode;
pub mod params;
pub mod phase;
pub mod quadrature;
pub mod solution;

pub use bvp::{
    bifurcation_curve, count_solutions, estimate_lambda_star, log_grid, picard_maximal, reconstruct_u, solve_all,
    BifurcationCurve, BranchPoint, LambdaStarEstimate, LambdaStarOptions, Multiplicity, PicardOptions, PicardOutcome,
};
pub use closed_forms::{
    critical_solutions, homoclinic_orbit, phi_transform, singular_solution, solve_d, BlissParams, DRootKind, DRoots,
    SingularSolution,
};
pub use diagnostics::{residuals, Residuals};
pub use error::{Error, Result};
pub use ivp::{integrate_ivp, integrate_ivp_with, series_start, IvpOptions, ProfilePoint, VProfile};
pub use params::{
    c_nk, c_nk_exact, classify_regime, f_k, lambda_tilde, make_params, mu_star, mu_star_exact, q_jl, q_star,
    q_star_exact, DerivedConstants, ProblemParams, QJl, Regime, RegimeTag,
};
pub use phase::{dulac_divergence, equilibria, to_phase, Equilibria, PhaseOrbit, PhaseSample};
pub use solution::{RadialSolution, SolutionSource};
