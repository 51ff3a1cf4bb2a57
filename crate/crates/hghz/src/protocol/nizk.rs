//! Pluggable NIZK interface and a transparent stub.
//!
//! The stub checks the relation directly when proving and emits a
//! commitment-sized token; verification recomputes the accepting token.
//! Completeness and soundness are perfect by construction of the check.

use sha2::{Digest, Sha256};

use super::auth::AuthPredicate;
use crate::family::{self, io, HghzKey, HghzTrapdoor};

/// Public statement: the key and the authorization predicate's name.
pub struct Statement<'a> {
    pub key: &'a HghzKey,
    pub auth: &'a AuthPredicate,
}

pub struct Witness<'a> {
    pub d0: &'a [bool],
    pub trapdoor: &'a HghzTrapdoor,
    pub w: &'a [u8],
}

pub trait NizkBackend: Sync {
    fn prove(&self, st: &Statement<'_>, wit: &Witness<'_>) -> Vec<u8>;
    fn verify(&self, st: &Statement<'_>, proof: &[u8]) -> bool;
}

/// Relation: CheckTrapdoor(d0, t, k) ∧ Auth(d0, w) = 1.
pub fn relation_holds(st: &Statement<'_>, wit: &Witness<'_>) -> bool {
    family::check_trapdoor(wit.d0, wit.trapdoor, st.key) && st.auth.eval(wit.d0, wit.w)
}

pub struct TransparentNizk {
    secret: [u8; 32],
}

impl TransparentNizk {
    pub fn new(seed: u64) -> Self {
        let secret = Sha256::new()
            .chain_update(b"nizk-stub")
            .chain_update(seed.to_le_bytes())
            .finalize();
        Self {
            secret: secret.into(),
        }
    }

    fn token(&self, st: &Statement<'_>, verdict: &[u8]) -> Vec<u8> {
        Sha256::new()
            .chain_update(self.secret)
            .chain_update(statement_digest(st))
            .chain_update(verdict)
            .finalize()
            .to_vec()
    }
}

pub fn statement_digest(st: &Statement<'_>) -> [u8; 32] {
    Sha256::new()
        .chain_update(io::write_key(st.key))
        .chain_update(st.auth.name().as_bytes())
        .finalize()
        .into()
}

impl NizkBackend for TransparentNizk {
    fn prove(&self, st: &Statement<'_>, wit: &Witness<'_>) -> Vec<u8> {
        let verdict: &[u8] = if relation_holds(st, wit) {
            b"ok"
        } else {
            b"no"
        };
        self.token(st, verdict)
    }

    fn verify(&self, st: &Statement<'_>, proof: &[u8]) -> bool {
        proof == self.token(st, b"ok").as_slice()
    }
}
