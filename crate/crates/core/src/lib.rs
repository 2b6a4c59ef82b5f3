//! Security-constrained unit commitment laboratory.
//!
//! The crate builds the day-ahead SCUC mixed-integer program, solves it with
//! iterative N-1 transmission screening, and learns three kinds of hints from
//! previously solved variations of the same system:
//!
//! * which transmission/security constraints to enforce up front,
//! * warm starts for the commitment variables,
//! * affine subspaces (variable fixings) that optimal commitments tend to lie in.
//!
//! Module map:
//!
//! * [`powergrid`]: instance data model, JSON schema, solution validation.
//! * [`sensitivity`]: injection shift factors, outage factors, violation scan.
//! * [`formulation`]: the MIP model and its LP-format export.
//! * [`solve`]: backend contract, the HiGHS backend and the screening loop.
//! * [`learn`]: kNN, SVM, cross-validation and the three predictors.
//! * [`sampling`]: seeded instance variations and load-profile statistics.
//! * [`harness`]: training/test orchestration, metrics and reports.

pub mod formulation;
pub mod harness;
pub mod learn;
pub mod powergrid;
pub mod sampling;
pub mod sensitivity;
pub mod solve;

pub use formulation::{build_model, objective_value, Hyperplane, HyperplaneKind, MipModel};
pub use powergrid::{
    load_instance, save_instance, validate_solution, ConstraintKey, Generator, PowerNetwork,
    Scenario, TransmissionLine, UCInstance, UCSolution, HORIZON,
};
pub use sensitivity::{ScreeningConfig, Sensitivities, ViolationSet};
pub use solve::{
    solve_scuc, BackendOptions, HighsBackend, Hints, MipBackend, SolveError, SolveOptions,
    SolveOutcome, SolveStats, WarmStart,
};
