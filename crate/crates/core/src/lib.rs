// negated comparisons are used on purpose: `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Solvers for unconstrained smooth convex-concave saddle point problems
//! built on generalized Bregman distances.
//!
//! The crate provides:
//!
//! * [`bregman`] — distance generators (Euclidean, augmented ℓ1,
//!   prox-regularized), their mirror maps, and the three-point /
//!   conjugate-duality calculus;
//! * [`operators`] — monotone operator handles, the saddle-point operator
//!   F(z) = [∇ₓf; -∇ᵧf], and Lipschitz-constant machinery;
//! * [`problems`] — bilinear and quadratic saddle instances with exact
//!   saddle oracles from dense solves, plus seeded random instances;
//! * [`solvers`] — the Bregman extragradient (BEG) and Bregman extrapolation
//!   (BEP) iterations, step schedules, ergodic averaging, and classical
//!   EG/OGDA reference oracles;
//! * [`diagnostics`] — numerical verification of the per-iteration regret
//!   bounds, telescoped bounds, distance non-increase, and the O(1/k)
//!   ergodic gap bounds;
//! * [`experiment`] — config-driven experiment runner with CSV/JSON output
//!   and golden-file-friendly determinism.
//!
//! ```
//! use bregmax::{
//!     constant_beg_schedule, lipschitz_from_blocks, random_instance, run, saddle_operator,
//!     BregmanGenerator, DualPair, Method, ProblemKind, StoppingRule,
//! };
//!
//! // seeded 5x5 bilinear game with a saddle point known by construction
//! let problem = random_instance(ProblemKind::Bilinear, (5, 5), 7, 1.0);
//! let op = saddle_operator(&problem);
//!
//! // sparse geometry: the mirror map is soft-thresholding
//! let gen = BregmanGenerator::augmented_l1(10, 0.5)?;
//! let lambda = lipschitz_from_blocks(&problem.blocks())? / gen.modulus();
//! let schedule = constant_beg_schedule(lambda, 1.0)?;
//!
//! let init = DualPair::from_primal(&gen, &vec![1.0; 10])?;
//! let trace = run(Method::Beg, &gen, &op, &schedule, init, 200, StoppingRule::none(), 1)?;
//!
//! // the Bregman distance to the saddle point never grew
//! let z_bar = problem.saddle_joint().unwrap();
//! let series = bregmax::diagnostics::distance_series(&gen, &trace, &z_bar);
//! assert!(series.iter().all(|(_, d)| *d <= series[0].1 + 1e-9));
//! # Ok::<(), bregmax::Error>(())
//! ```

pub mod bregman;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use bregman::{shrinkage, BregmanGenerator, DualPair, GeneratorKind};
pub use error::{Error, Result};
pub use operators::{
    estimate_lipschitz, lipschitz_from_blocks, monotonicity_residual, relative_lipschitz_lambda,
    relative_lipschitz_residual, saddle_operator, BlockConstants, OperatorHandle, SaddleProblem,
};
pub use problems::{make_bilinear, make_quadratic, random_instance, InstanceDoc, ProblemKind};
pub use solvers::{
    beg_step, bep_step, classical_eg_step, constant_beg_schedule, constant_bep_schedule, ogda_step,
    run, run_reference, update_average, validate_schedule, Method, ScheduleSeq, SolverState,
    StepSchedule, StoppingRule, Trace,
};
