//! Exact tools for arbitrarily varying multiple-access channels (AV-MACs).
//!
//! Symmetrizability and overwritability are decided by rational linear feasibility.
//! Zero-error γ partial-correction codes over the adder channel can be verified, searched
//! for, extended in block length and evaluated against adversaries.

pub mod adversary;
pub mod channel;
pub mod cli;
pub mod codebook;
pub mod decoder;
pub mod extension;
pub mod feasibility;
pub mod format;
pub mod lp;
pub mod rational;
pub mod search;
pub mod structure;
pub mod util;
pub mod verifier;

pub use channel::{make_adder_channel, ChannelSpec, StateSequence};
pub use codebook::CodebookTuple;
pub use decoder::{CanonicalDecoder, Decoder};
pub use feasibility::{StateConditionalWitness, WitnessKind};
pub use rational::{Gamma, Rational};
pub use verifier::{verify_zero_error, PartialCorrectionReport};
