//! Round-based message bus, engine-held qubits and the simulated physics.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::combine::CombineInput;
use super::message::{pad_round, Message, PartyId, Payload, Transcript};
use super::ProtocolError;
use crate::dist::{DistKey, LocalTrapdoor};
use crate::family::{HghzKey, HghzTrapdoor};
use crate::qsim::{
    run_server_circuit_exact, CircuitOutcome, DistInstance, MonoInstance, OutcomeState,
};
use crate::rng::{self, HRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    #[default]
    RoundRobin,
    /// Seeded random order of party steps within each round.
    Random,
}

/// A state held by the engine; parties refer to it by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredState {
    pub state: OutcomeState,
}

#[derive(Debug, Clone, Default)]
pub struct QubitStore {
    states: Vec<StoredState>,
}

impl QubitStore {
    pub fn insert(&mut self, state: OutcomeState) -> usize {
        self.states.push(StoredState { state });
        self.states.len() - 1
    }

    pub fn get(&self, idx: usize) -> Option<&StoredState> {
        self.states.get(idx)
    }

    pub fn apply_x(&mut self, idx: usize, qubit: usize) {
        match &mut self.states[idx].state {
            OutcomeState::Hghz(d) => d.apply_x(qubit),
            OutcomeState::Singleton(d) => d[qubit] ^= true,
            OutcomeState::Abort => {}
        }
    }

    pub fn apply_z(&mut self, idx: usize, qubit: usize) {
        if let OutcomeState::Hghz(d) = &mut self.states[idx].state {
            d.apply_z(qubit);
        }
    }
}

/// Preimage oracle behind the circuit simulation. It holds whatever trapdoors
/// the key owners generated and is never visible to a party.
#[derive(Debug, Clone, Default)]
pub enum Physics {
    #[default]
    None,
    Mono(HghzTrapdoor),
    Dist(Vec<LocalTrapdoor>),
}

/// Key material the server submits to its circuit.
pub enum CircuitKey<'a> {
    Mono(&'a HghzKey),
    Dist(&'a DistKey),
}

pub struct Ctx {
    pub store: QubitStore,
    pub physics: Physics,
    /// Private inputs to the ideal functionality, keyed by sender.
    pub mpc_inputs: BTreeMap<PartyId, CombineInput>,
}

impl Ctx {
    pub fn new(physics: Physics) -> Self {
        Self {
            store: QubitStore::default(),
            physics,
            mpc_inputs: BTreeMap::new(),
        }
    }

    /// Runs the server's circuit and keeps the post-measurement state.
    pub fn run_circuit(
        &mut self,
        key: CircuitKey<'_>,
        rng: &mut HRng,
    ) -> Result<(CircuitOutcome, usize), ProtocolError> {
        let outcome = match (key, &self.physics) {
            (CircuitKey::Mono(k), Physics::Mono(t)) => {
                run_server_circuit_exact(&MonoInstance::new(k, t), rng)
            }
            (CircuitKey::Dist(k), Physics::Dist(ts)) if ts.len() == k.parties() => {
                run_server_circuit_exact(&DistInstance::new(k, ts), rng)
            }
            _ => return Err(ProtocolError::Physics),
        };
        let idx = self.store.insert(outcome.state.clone());
        Ok((outcome, idx))
    }
}

pub type Outbox = Vec<(PartyId, Payload)>;

pub trait Party {
    fn id(&self) -> PartyId;
    fn step(
        &mut self,
        round: u32,
        inbox: &[Message],
        ctx: &mut Ctx,
    ) -> Result<Outbox, ProtocolError>;
    /// Called once after the last round, like a timeout firing.
    fn finish(&mut self, _ctx: &mut Ctx) {}
}

/// Runs rounds until one produces no messages, then finishes every party. Messages sent in round r are
/// delivered at the start of round r + 1.
pub fn run_parties(
    parties: &mut [&mut dyn Party],
    ctx: &mut Ctx,
    schedule: Schedule,
    seed: u64,
    max_rounds: u32,
) -> Result<Transcript, ProtocolError> {
    let mut transcript = Transcript::default();
    let mut inbox: Vec<Message> = Vec::new();
    let mut order_rng = rng::labeled(seed, "scheduler", 0);
    for round in 0..max_rounds {
        let mut order: Vec<usize> = (0..parties.len()).collect();
        if schedule == Schedule::Random {
            order.shuffle(&mut order_rng);
        }
        let mut sent = Vec::new();
        for &p in &order {
            let id = parties[p].id();
            let mine: Vec<Message> = inbox.iter().filter(|m| m.receiver == id).cloned().collect();
            for (receiver, payload) in parties[p].step(round, &mine, ctx)? {
                sent.push(Message {
                    round,
                    sender: id,
                    receiver,
                    payload,
                    pad: String::new(),
                });
            }
        }
        if sent.is_empty() {
            for p in parties.iter_mut() {
                p.finish(ctx);
            }
            return Ok(transcript);
        }
        // step order must not show in the transcript
        sent.sort_by_key(|m| (m.sender, m.receiver));
        pad_round(&mut sent);
        transcript.messages.extend(sent.iter().cloned());
        inbox = sent;
    }
    Err(ProtocolError::RoundLimit(max_rounds))
}
