//! Exact finite-depth witnesses for sequences of bounded functions whose
//! integrals stay away from zero.
//!
//! Given step functions `f_n : [0, 1] -> [0, 1]` with `integral(f_n) > 2 eps`,
//! the crate extracts open sets `U_n` where `f_n > eps`, forms the nested
//! tail unions `V_n`, organizes their components into an interval tree,
//! prunes it, and produces a point lying in every inspected `V_n` together
//! with a certificate that is re-checked in exact rational arithmetic.

// Errors carry the exact offending rationals.
#![allow(clippy::result_large_err)]

pub mod error;
pub mod extraction;
pub mod functions;
pub mod interval;
pub mod pipeline;
pub mod rat;
pub mod tree;

pub use error::{Error, Result};
pub use extraction::{
    build_tail_unions, select_subsequence, tall_support, tall_support_of_term, truncate_enumerated,
    truncate_levels, ExtractionConfig, TailUnion, TallSupport, Truncation,
};
pub use functions::{
    make_family, reduce_to_unit, Family, FamilyParams, FunctionSequence, SampledFunction,
    StepFunction,
};
pub use interval::{IntervalSet, OpenInterval};
pub use pipeline::{run_witness, WitnessOutcome, WitnessParams};
pub use rat::Rat;
pub use tree::{
    build_tree, exact_intersection_oracle, verify_certificate, IntervalTree, WitnessCertificate,
};

#[cfg(feature = "testkit")]
pub mod testkit;
