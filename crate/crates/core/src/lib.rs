//! Rectangle packing through polynomial moment systems.
//!
//! A set of rectangles perfectly packs an `A × B` box exactly when the corner
//! coordinates of the placed rectangles satisfy, for every pair of exponents
//! `s1, s2 ≥ 1`,
//!
//! ```text
//! Σ_n (x_hi^s1 − x_lo^s1)(y_hi^s2 − y_lo^s2) = A^s1 B^s2
//! ```
//!
//! together with `Δx + Δy = w + l` and `Δx·Δy = w·l` for each rectangle. This
//! crate builds finite truncations of that system, solves them with a damped
//! least-squares method, and checks every candidate with an independent
//! geometric verifier (floating point or exact rational) and, for small
//! integer instances, against a brute-force oracle.
//!
//! Modules:
//! - [`instance`]: instances, layouts, JSON formats and fixture generators
//! - [`moment`]: the truncated moment system, residuals and Jacobians
//! - [`solver`]: Levenberg–Marquardt with deterministic multi-start
//! - [`verifier`]: geometric and exact checks, corner cancellation
//! - [`oracle`]: exhaustive grid search for small integer instances
//! - [`harmonic`]: moment identities of the `(1/n, 1/(n+1))` family

pub mod error;
pub mod harmonic;
pub mod instance;
pub mod moment;
pub mod oracle;
pub mod solver;
pub mod verifier;

pub use error::{PackError, Result};
pub use harmonic::{IdentityEval, IdentityId};
pub use instance::{
    check_area, gen_guillotine, harmonic_prefix, parse_instance, parse_layout, serialize_instance,
    serialize_layout, AreaVerdict, BoxSpec, Instance, Layout, Placement, RectSpec,
};
pub use moment::{Mode, MomentSystem, ResidualVector};
pub use oracle::{enumerate_small_family, oracle_feasible, OracleOutcome};
pub use solver::{
    init_shelf_greedy, solve_multistart, solve_single, InitStrategy, SingleSolve, SolveConfig,
    SolveReport, SolveStatus,
};
pub use verifier::{
    corner_cancellation, moment_residual_of_layout, verify_exact, verify_layout, ExactInstance,
    ExactLayout, VerificationReport,
};
