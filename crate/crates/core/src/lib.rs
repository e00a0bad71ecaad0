//! Unfair Pólya urns.
//!
//! A two-or-more colour urn where drawing colour `i` returns the ball with
//! `m[i]` extra balls of the same colour. The crate covers
//!
//! * the discrete chain and dominance criteria ([`urn`]),
//! * its continuous-time branching embedding ([`embed`]),
//! * exact laws and survival probabilities on the reachable lattice ([`exact`]),
//! * replicated Monte Carlo estimators ([`mc`]),
//! * intervals and goodness-of-fit checks ([`stats`]).

pub mod embed;
pub mod error;
pub mod exact;
pub mod mc;
pub mod stats;
pub mod urn;
pub mod variates;

pub use error::{Result, UrnError};
pub use urn::{
    check_dominance_prefix, construct_proof_path, draw_step, new_urn, run_trajectory,
    CriterionKind, DominanceCheck, DominanceCriterion, ProofPath, ReplacementRule, Trajectory,
    UrnState,
};
pub use variates::{seeded_rng, ScriptedVariates, SimRng, VariateSource};
