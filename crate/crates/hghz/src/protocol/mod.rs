//! Message-passing protocols, games and attacks.

pub mod attacks;
pub mod auth;
pub mod combine;
pub mod engine;
pub mod games;
pub mod message;
pub mod nizk;
pub mod runs;
pub mod tcp;

use thiserror::Error;

use crate::family::FamilyError;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("circuit key does not match the registered trapdoors")]
    Physics,
    #[error("no quiescent round within {0} rounds")]
    RoundLimit(u32),
    #[error("unexpected message: {0}")]
    Unexpected(&'static str),
    #[error("configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub use auth::AuthPredicate;
pub use engine::Schedule;
pub use message::{PartyId, Transcript};
pub use nizk::{NizkBackend, TransparentNizk};
pub use runs::{ApplicantBehavior, ApplicantSpec, RunOptions, RunOutcome};
