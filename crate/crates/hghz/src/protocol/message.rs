//! Wire messages, transcripts and per-round padding.

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartyId {
    Cupid,
    Server,
    Applicant(usize),
    Functionality,
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Cupid => write!(f, "cupid"),
            PartyId::Server => write!(f, "server"),
            PartyId::Applicant(i) => write!(f, "applicant:{i}"),
            PartyId::Functionality => write!(f, "functionality"),
        }
    }
}

impl FromStr for PartyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cupid" => Ok(PartyId::Cupid),
            "server" => Ok(PartyId::Server),
            "functionality" => Ok(PartyId::Functionality),
            _ => s
                .strip_prefix("applicant:")
                .and_then(|i| i.parse().ok())
                .map(PartyId::Applicant)
                .ok_or_else(|| format!("unknown party {s:?}")),
        }
    }
}

impl Serialize for PartyId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PartyId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Binary field carried as base64.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Blob(pub Vec<u8>);

impl Serialize for Blob {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for Blob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD
            .decode(s)
            .map(Blob)
            .map_err(serde::de::Error::custom)
    }
}

impl Blob {
    pub fn from_u64s(v: &[u64]) -> Self {
        Blob(v.iter().flat_map(|x| x.to_le_bytes()).collect())
    }

    pub fn to_u64s(&self) -> Option<Vec<u64>> {
        (self.0.len() % 8 == 0).then(|| {
            self.0
                .chunks(8)
                .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect()
        })
    }
}

/// Bit string carried as text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bits(pub Vec<bool>);

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&bits::to_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        bits::parse(&s)
            .map(Bits)
            .ok_or_else(|| serde::de::Error::custom("not a bit string"))
    }
}

/// Correction symbol as sent to an applicant; a local abort has no encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrectionSymbol {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "x")]
    Cross,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaliciousReport {
    pub party: PartyId,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpcResult {
    Accept,
    Share(bool),
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Key {
        key: Blob,
    },
    LocalKey {
        key: Blob,
    },
    NizkProof {
        proof: Blob,
    },
    Image {
        y: Blob,
        b: Bits,
    },
    Qubit {
        store: usize,
        qubit: usize,
    },
    Correction {
        alpha_share: bool,
        v: CorrectionSymbol,
    },
    SupportBit {
        bit: bool,
    },
    Abort {
        malicious: Vec<MaliciousReport>,
    },
    MpcInput {
        digest: String,
    },
    MpcOutput {
        result: MpcResult,
    },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Key { .. } => "key",
            Payload::LocalKey { .. } => "local_key",
            Payload::NizkProof { .. } => "nizk_proof",
            Payload::Image { .. } => "image",
            Payload::Qubit { .. } => "qubit",
            Payload::Correction { .. } => "correction",
            Payload::SupportBit { .. } => "support_bit",
            Payload::Abort { .. } => "abort",
            Payload::MpcInput { .. } => "mpc_input",
            Payload::MpcOutput { .. } => "mpc_output",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub round: u32,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub payload: Payload,
    #[serde(default)]
    pub pad: String,
}

impl Message {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

/// Pads every message so all serialized lengths in the slice are equal.
pub fn pad_round(msgs: &mut [Message]) {
    for m in msgs.iter_mut() {
        m.pad.clear();
    }
    let max = msgs.iter().map(|m| m.to_json().len()).max().unwrap_or(0);
    for m in msgs.iter_mut() {
        let len = m.to_json().len();
        m.pad = "=".repeat(max - len);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    pub fn to_jsonl(&self) -> String {
        self.messages.iter().map(|m| m.to_json() + "\n").collect()
    }

    pub fn from_jsonl(s: &str) -> Result<Self, serde_json::Error> {
        let messages = s
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { messages })
    }

    pub fn rounds(&self) -> u32 {
        self.messages.iter().map(|m| m.round + 1).max().unwrap_or(0)
    }

    pub fn round(&self, r: u32) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.round == r)
    }

    /// Every round's messages share one serialized length.
    pub fn padding_holds(&self) -> bool {
        (0..self.rounds()).all(|r| {
            let mut lens = self.round(r).map(|m| m.to_json().len());
            match lens.next() {
                Some(first) => lens.all(|l| l == first),
                None => true,
            }
        })
    }

    /// Messages visible to one party: those it sent or received.
    pub fn view(&self, party: PartyId) -> Vec<&Message> {
        self.messages
            .iter()
            .filter(|m| m.sender == party || m.receiver == party)
            .collect()
    }

    /// No transmitted payload carries a local-abort marker.
    pub fn free_of_local_aborts(&self) -> bool {
        self.messages.iter().all(|m| {
            let json = serde_json::to_value(&m.payload).expect("payload serializes");
            !contains_abort_marker(&json)
        })
    }
}

fn contains_abort_marker(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::String(s) => s == "bot" || s.contains('⊥'),
        serde_json::Value::Array(a) => a.iter().any(contains_abort_marker),
        serde_json::Value::Object(o) => o
            .iter()
            .any(|(k, v)| k.contains("local_abort") || contains_abort_marker(v)),
        _ => false,
    }
}
