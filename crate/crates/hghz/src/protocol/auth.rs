//! Authorization predicates Auth(d0, w).

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::bits;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthPredicate {
    AllowAll,
    /// Support of size exactly two that contains qubit 0.
    Hamming2First,
    /// Supported choices need w with sha256(w) = target; unsupported ones always pass.
    HashPreimage([u8; 32]),
}

impl AuthPredicate {
    pub fn hash_preimage_of(secret: &[u8]) -> Self {
        Self::HashPreimage(Sha256::digest(secret).into())
    }

    pub fn name(&self) -> String {
        match self {
            Self::AllowAll => "allow_all".into(),
            Self::Hamming2First => "hamming2_first".into(),
            Self::HashPreimage(t) => format!("hash_preimage:{}", hex(t)),
        }
    }

    pub fn eval(&self, d0: &[bool], w: &[u8]) -> bool {
        match self {
            Self::AllowAll => true,
            Self::Hamming2First => bits::weight(d0) == 2 && d0.first() == Some(&true),
            Self::HashPreimage(t) => !d0.iter().any(|&b| b) || Sha256::digest(w).as_slice() == t,
        }
    }
}

impl fmt::Display for AuthPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for AuthPredicate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "allow_all" => Ok(Self::AllowAll),
            "hamming2_first" => Ok(Self::Hamming2First),
            _ => {
                let h = s
                    .strip_prefix("hash_preimage:")
                    .ok_or_else(|| format!("unknown predicate {s:?}"))?;
                let bytes = unhex(h)
                    .filter(|b| b.len() == 32)
                    .ok_or("target must be 32 hex bytes")?;
                Ok(Self::HashPreimage(bytes.try_into().expect("32 bytes")))
            }
        }
    }
}

pub fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

fn unhex(s: &str) -> Option<Vec<u8>> {
    if s.len() % 2 != 0 {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok())
        .collect()
}
