//! Finite differential-privacy specifications, exhaustive verification, and
//! Five Safes risk assessment.
//!
//! A specification is a quintuple: a finite **domain** of datasets, a
//! **multiverse** of data universes the guarantee quantifies over, an input
//! **premetric** grading dataset pairs, an output **divergence** grading
//! distribution pairs, and a per-universe protection-loss **budget**. A
//! mechanism — an exact stochastic kernel over the domain — *satisfies* the
//! specification when, for every ordered pair of datasets inside every
//! universe, the divergence of the two kernel rows is at most budget × input
//! distance. Because domains are finite and kernels are exact rational
//! tables, that universal statement is decided by exhaustive computation,
//! not estimated.
//!
//! On top of the verification core sit budget accounting (same-flavor
//! composition, allocation across projects), invariant statistics and the
//! multiverses their level sets induce, and a typed Five Safes regime model
//! that situates verified results as evidence on the data and outputs
//! dimensions of a broader disclosure-risk assessment.
//!
//! Arithmetic is exact wherever a comparison depends on it: probabilities
//! are rationals, divergence values are kept as symbolic `q + Σ c·ln(a)`
//! forms, and the verifier never reports "satisfied" because of rounding.
//!
//! Start with the runnable programs under `examples/`; each walks one
//! capability end to end. The `privspec` binary wraps the same operations
//! for files on disk.

pub mod accountant;
pub mod cli;
pub mod divergences;
pub mod error;
pub mod five_safes;
pub mod invariants;
pub mod mechanisms;
pub mod privacy_core;
pub mod value;
pub mod verifier;

pub use error::{Error, Result};
pub use value::{ExtReal, ValueCmp};

pub use divergences::{
    hockey_stick, max_divergence, renyi_divergence, smoothed_max_divergence, total_variation,
    Distribution, OutputDivergence,
};
pub use privacy_core::{
    input_distance, make_domain, make_domain_with_cap, validate_flavor, validate_spec, BudgetMap,
    DataUniverse, DatasetDomain, DatasetId, DomainMode, DpSpecification, Flavor,
    FlavorFingerprint, InputPremetric, Multiverse,
};

pub use accountant::{allocate, check_composition_bound, BudgetLedger};
pub use invariants::{invariant_margin_report, partition_by_invariant, InvariantStatistic};
pub use mechanisms::{
    exact_release, geometric_count, kernel_from_document, product, randomized_response, Mechanism,
};
pub use verifier::{
    satisfies, tightest_epsilon, tightest_epsilon_with_notes, verify_invariant_release,
    VerificationResult,
};

pub use five_safes::{
    assess, attach_dp, map_to_ci, preset, CiNormAssignment, Flow, PresetKind, SafeDimension,
    SafesRegime, SafesReport, SafetyLabel,
};

#[cfg(test)]
mod concurrency_contract {
    // Everything is immutable after construction and freely shareable
    // across threads; keep that a compile-time fact.
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn core_types_are_send_and_sync() {
        assert_send_sync::<crate::ExtReal>();
        assert_send_sync::<crate::DatasetDomain>();
        assert_send_sync::<crate::DpSpecification>();
        assert_send_sync::<crate::Distribution>();
        assert_send_sync::<crate::Mechanism>();
        assert_send_sync::<crate::VerificationResult>();
        assert_send_sync::<crate::BudgetLedger>();
        assert_send_sync::<crate::InvariantStatistic>();
        assert_send_sync::<crate::SafesRegime>();
        assert_send_sync::<crate::SafesReport>();
    }
}
