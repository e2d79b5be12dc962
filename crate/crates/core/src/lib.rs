//! BB84 key distribution with pluggable eavesdroppers.
//!
//! The crate is `no_std` and needs only `alloc`. All randomness comes from a
//! caller-supplied [`rand::Rng`], so a seeded generator makes every session
//! reproducible bit for bit.
//!
//! * [`quantum`]: real polarization states, Born-rule measurement and the
//!   ancilla overlap table used by the indirect-copy attack.
//! * [`adversary`]: eavesdropper strategies.
//! * [`protocol`]: preparation, transit, sifting, parity verification and the
//!   full session driver.
//! * [`amplification`]: Toeplitz privacy amplification and Eve's residual
//!   advantage on the final key.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod amplification;
mod bits;
pub mod protocol;
pub mod quantum;

pub use adversary::{intercept, EveKind, EveRecord, EveStrategy, Observation, ResendRule, SiftedGuess};
pub use amplification::{
    compress, eve_residual_information, sample_hash, AmplificationError, AmplifiedKey,
    HashDescriptor, PrivacyParams,
};
pub use protocol::{
    parity_verify, prepare_pulses, run_session, sift, transmit, ParityRound, ProtocolError,
    PulseRecord, SessionConfig, SessionTranscript, SiftedKey,
};
pub use quantum::{
    bb84_states, born_probability, build_reference_list, measure, overlap, Basis, HilbertAngle,
    QuantumError, QuantumState, ReferenceList,
};
