//! Finite-stage, exactly certified approximants of halting-probability
//! operators.
//!
//! The crate builds up from exact rational Hermitian algebra ([`linalg`])
//! through a self-delimiting register machine ([`machine`]) to monotone
//! approximant streams of sub-probability measures ([`semimeasure`]) and
//! operator-valued measurements ([`semipovm`]), a dovetailed universal
//! mixture with certified scalar floors ([`dovetail`]), and interval upper
//! bounds on the operator information content ([`hhat`]).
//!
//! Everything on a certified path is exact rational arithmetic; intervals
//! with rational endpoints carry the only approximations, and floats appear
//! solely in test oracles and display helpers.

pub mod dovetail;
pub mod hhat;
pub mod json;
pub mod machine;
pub mod linalg;
pub mod rational;
pub mod rng;
pub mod semimeasure;
pub mod semipovm;

pub use dovetail::{
    checkpoint_roundtrip, decode_emitter, floor_certificate, guarded_stream, scalar_floor, scalar_mixture,
    shift_mix, universal_stream, DovetailState, EmitterMachine,
};
pub use hhat::{
    hhat_derived, hhat_upper, pair_words, psi_transport, state_pairing, unpair_word,
    DerivedKind, HhatBound, PsiMap,
};
pub use linalg::{
    BlockScalarOperator, IntervalHermitian, RatInterval, RationalComplex, RationalHermitian,
    StateVector,
};
pub use machine::{Enumerator, PrefixMachine, Program, RunOutcome, TableMachine, Vm, Word};
pub use semimeasure::{
    corroborate_domination, from_increasing_sequence, to_increasing_sequence,
    validate_semimeasure, IncreasingSequence, SemiMeasureStream,
};
pub use semipovm::{
    from_hilbert_schmidt, measurement_distribution, projective_stream, renormalize_schedule,
    sample_batch, sample_outcome, scalar_embed, validate_semipovm, HilbertSchmidtFamily,
    MeasurementDistribution, MeasurementOutcome, SemiPovmStream,
};
