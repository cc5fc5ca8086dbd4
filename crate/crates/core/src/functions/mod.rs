//! Exact function sequences: step functions, built-in families, the
//! reduction of a bounded sequence with a limit to unit form, and sampled
//! black-box functions with lower sums.

mod sampled;
mod sequence;
mod step;

pub use sampled::{uniform_partition, LowerSumClaim, SampledFunction};
pub use sequence::{
    make_family, reduce_to_unit, typewriter_slot, Family, FamilyParams, FunctionSequence,
    ReductionNote,
};
pub use step::StepFunction;

use crate::rat::Rat;

/// Exact integral of a step function.
pub fn integral(f: &StepFunction) -> Rat {
    f.integral()
}
