//! Party state machines and the five protocol runs.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::auth::{hex, AuthPredicate};
use super::combine::{combine_alpha, ApplicantInput, CombineInput, ServerInput};
use super::engine::{run_parties, CircuitKey, Ctx, Outbox, Party, Physics, Schedule};
use super::message::{
    Bits, Blob, CorrectionSymbol, MaliciousReport, Message, MpcResult, PartyId, Payload, Transcript,
};
use super::nizk::{NizkBackend, Statement, Witness};
use super::ProtocolError;
use crate::dist::{self, DistKey, LocalKey, LocalTrapdoor, PartInfoSymbol};
use crate::family::{self, io, HghzKey, HghzTrapdoor, Params};
use crate::qsim::OutcomeState;
use crate::rng::{self, HRng};
use crate::{bits, modq::ZqMatrix};

const MAX_ROUNDS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub schedule: Schedule,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            schedule: Schedule::RoundRobin,
        }
    }

    fn party_rng(&self, label: &str, index: u64) -> HRng {
        rng::labeled(self.seed, label, index)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplicantOutput {
    pub index: usize,
    /// (store index, qubit index) of the qubit received from the server.
    pub qubit: Option<(usize, usize)>,
    pub corrected: bool,
    pub support_bit: Option<bool>,
    pub local_abort: bool,
    pub rejected: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerOutput {
    pub y: Option<Vec<u64>>,
    pub b: Option<Vec<bool>>,
    pub accepted: bool,
    pub malicious: Vec<MaliciousReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CupidOutput {
    pub y: Option<Vec<u64>>,
    pub b: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub transcript_rounds: u32,
    pub applicants: Vec<ApplicantOutput>,
    pub server: ServerOutput,
    pub cupid: Option<CupidOutput>,
    pub state: Option<OutcomeState>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
}

impl RunOutcome {
    pub fn twin(&self) -> bool {
        matches!(self.state, Some(OutcomeState::Hghz(_)))
    }

    /// Canonical GHZ on the supported sub-state; `None` without a twin state.
    pub fn canonical_ghz(&self) -> Option<bool> {
        match &self.state {
            Some(OutcomeState::Hghz(d)) => Some(d.is_canonical_ghz()),
            _ => None,
        }
    }
}

fn key_blob(k: &HghzKey) -> Blob {
    Blob(io::write_key(k))
}

fn dist_key_blob(k: &DistKey) -> Blob {
    Blob(io::write_container(
        &k.parts()
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u64, io::write_key(p)))
            .collect::<Vec<_>>(),
    ))
}

fn read_dist_key(b: &Blob) -> Result<DistKey, ProtocolError> {
    let parts = io::read_container(&b.0)?;
    let keys = parts
        .iter()
        .map(|(_, blob)| io::read_key(blob))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DistKey::new(keys)?)
}

fn image_payload(y: &[u64], b: &[bool]) -> Payload {
    Payload::Image {
        y: Blob::from_u64s(y),
        b: Bits(b.to_vec()),
    }
}

fn read_image(m: &Message) -> Option<(Vec<u64>, Vec<bool>)> {
    match &m.payload {
        Payload::Image { y, b } => Some((y.to_u64s()?, b.0.clone())),
        _ => None,
    }
}

fn broadcast(n: usize, payload: impl Fn(usize) -> Payload) -> Outbox {
    (0..n)
        .map(|i| (PartyId::Applicant(i), payload(i)))
        .collect()
}

// ---------------------------------------------------------------- BLIND family

struct ZkSetup<'a> {
    auth: AuthPredicate,
    w: Vec<u8>,
    nizk: &'a dyn NizkBackend,
}

struct MonoCupid<'a> {
    d0: Vec<bool>,
    params: Params,
    rng: HRng,
    reveal_support: bool,
    zk: Option<&'a ZkSetup<'a>>,
    key_override: Option<(HghzKey, HghzTrapdoor)>,
    out: CupidOutput,
}

impl Party for MonoCupid<'_> {
    fn id(&self) -> PartyId {
        PartyId::Cupid
    }

    fn step(
        &mut self,
        round: u32,
        inbox: &[Message],
        ctx: &mut Ctx,
    ) -> Result<Outbox, ProtocolError> {
        match round {
            0 => {
                let (k, t) = match self.key_override.take() {
                    Some(kt) => kt,
                    None => {
                        let (k, t, _) = family::gen_checked(&self.params, &self.d0, &mut self.rng)?;
                        (k, t)
                    }
                };
                ctx.physics = Physics::Mono(t.clone());
                let mut out = vec![(PartyId::Server, Payload::Key { key: key_blob(&k) })];
                if let Some(zk) = self.zk {
                    let st = Statement {
                        key: &k,
                        auth: &zk.auth,
                    };
                    let proof = zk.nizk.prove(
                        &st,
                        &Witness {
                            d0: &self.d0,
                            trapdoor: &t,
                            w: &zk.w,
                        },
                    );
                    out.push((PartyId::Server, Payload::NizkProof { proof: Blob(proof) }));
                }
                Ok(out)
            }
            _ => {
                let Some((y, b)) = inbox.iter().find_map(read_image) else {
                    return Ok(vec![]);
                };
                self.out = CupidOutput {
                    y: Some(y),
                    b: Some(b),
                };
                Ok(if self.reveal_support {
                    let d0 = self.d0.clone();
                    broadcast(d0.len(), |i| Payload::SupportBit { bit: d0[i] })
                } else {
                    vec![]
                })
            }
        }
    }
}

enum ServerMode<'a> {
    Mono { zk: Option<&'a ZkSetup<'a>> },
    Can,
}

struct SimpleServer<'a> {
    n: usize,
    mode: ServerMode<'a>,
    rng: HRng,
    out: ServerOutput,
}

impl Party for SimpleServer<'_> {
    fn id(&self) -> PartyId {
        PartyId::Server
    }

    fn step(
        &mut self,
        _round: u32,
        inbox: &[Message],
        ctx: &mut Ctx,
    ) -> Result<Outbox, ProtocolError> {
        let Some(key) = inbox.iter().find_map(|m| match &m.payload {
            Payload::Key { key } => Some(key.clone()),
            _ => None,
        }) else {
            return Ok(vec![]);
        };
        let outcome = match &self.mode {
            ServerMode::Mono { zk } => {
                let k = io::read_key(&key.0)?;
                if let Some(zk) = zk {
                    let proof = inbox.iter().find_map(|m| match &m.payload {
                        Payload::NizkProof { proof } => Some(proof.0.clone()),
                        _ => None,
                    });
                    let ok = proof.is_some_and(|p| {
                        zk.nizk.verify(
                            &Statement {
                                key: &k,
                                auth: &zk.auth,
                            },
                            &p,
                        )
                    });
                    if !ok {
                        let report = vec![MaliciousReport {
                            party: PartyId::Cupid,
                            reason: "nizk_rejected".into(),
                        }];
                        self.out.malicious = report.clone();
                        return Ok(broadcast(self.n, |_| Payload::Abort {
                            malicious: report.clone(),
                        }));
                    }
                }
                ctx.run_circuit(CircuitKey::Mono(&k), &mut self.rng)?
            }
            ServerMode::Can => {
                let k = read_dist_key(&key)?;
                ctx.run_circuit(CircuitKey::Dist(&k), &mut self.rng)?
            }
        };
        let (o, store) = outcome;
        self.out.accepted = true;
        self.out.y = Some(o.y.clone());
        self.out.b = Some(o.b.clone());
        let mut out = vec![(PartyId::Cupid, image_payload(&o.y, &o.b))];
        out.extend(broadcast(self.n, |i| Payload::Qubit { store, qubit: i }));
        Ok(out)
    }
}

/// Applicant for BLIND, BLIND^sup and BLIND^sup_can.
struct SimpleApplicant {
    out: ApplicantOutput,
    expects_correction: bool,
    got_correction: bool,
}

impl Party for SimpleApplicant {
    fn id(&self) -> PartyId {
        PartyId::Applicant(self.out.index)
    }

    fn step(
        &mut self,
        _round: u32,
        inbox: &[Message],
        ctx: &mut Ctx,
    ) -> Result<Outbox, ProtocolError> {
        for m in inbox {
            match &m.payload {
                Payload::Qubit { store, qubit } => self.out.qubit = Some((*store, *qubit)),
                Payload::SupportBit { bit } => self.out.support_bit = Some(*bit),
                Payload::Abort { .. } => self.out.rejected = true,
                Payload::Correction { alpha_share, v } => {
                    self.got_correction = true;
                    let (store, q) = self
                        .out
                        .qubit
                        .ok_or(ProtocolError::Unexpected("correction before qubit"))?;
                    match v {
                        CorrectionSymbol::Cross => self.out.support_bit = Some(false),
                        sym => {
                            self.out.support_bit = Some(true);
                            if *sym == CorrectionSymbol::One {
                                ctx.store.apply_x(store, q);
                            }
                            if *alpha_share {
                                ctx.store.apply_z(store, q);
                            }
                            self.out.corrected = true;
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(vec![])
    }

    fn finish(&mut self, _ctx: &mut Ctx) {
        // no correction by the end is a local abort, kept private
        if self.expects_correction && self.out.qubit.is_some() && !self.got_correction {
            self.out.local_abort = true;
        }
    }
}

struct CanCupid {
    d0: Vec<bool>,
    params: Params,
    rng: HRng,
    key: Option<(DistKey, Vec<LocalTrapdoor>)>,
    out: CupidOutput,
    v: Vec<PartInfoSymbol>,
}

impl Party for CanCupid {
    fn id(&self) -> PartyId {
        PartyId::Cupid
    }

    fn step(
        &mut self,
        round: u32,
        inbox: &[Message],
        ctx: &mut Ctx,
    ) -> Result<Outbox, ProtocolError> {
        if round == 0 {
            let (k, ts) = dist::gen_dist(&self.params, &self.d0, &mut self.rng)?;
            ctx.physics = Physics::Dist(ts.clone());
            let blob = dist_key_blob(&k);
            self.key = Some((k, ts));
            return Ok(vec![(PartyId::Server, Payload::Key { key: blob })]);
        }
        let Some((y, b)) = inbox.iter().find_map(read_image) else {
            return Ok(vec![]);
        };
        let (k, ts) = self
            .key
            .as_ref()
            .ok_or(ProtocolError::Unexpected("image before key"))?;
        let v = dist::part_info(k, ts, &y);
        let alpha = if v.contains(&PartInfoSymbol::Bot) {
            self.rng.gen()
        } else {
            let (x0, x1) = dist::invert_dist(k, ts, &y)
                .ok_or(ProtocolError::Unexpected("twin without preimages"))?;
            let codec = k.codec();
            bits::inner(&b, &bits::xor(&codec.encode(&x0), &codec.encode(&x1)))
        };
        let mut shares = bits::random(v.len(), &mut self.rng);
        let support: Vec<usize> = (0..v.len()).filter(|&i| v[i].bit().is_some()).collect();
        if let Some(&j) = support.last() {
            let current = support.iter().fold(false, |acc, &i| acc ^ shares[i]);
            shares[j] ^= current ^ alpha;
        }
        self.out = CupidOutput {
            y: Some(y),
            b: Some(b),
        };
        let out = v
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let sym = match s {
                    PartInfoSymbol::Zero => CorrectionSymbol::Zero,
                    PartInfoSymbol::One => CorrectionSymbol::One,
                    PartInfoSymbol::Cross => CorrectionSymbol::Cross,
                    PartInfoSymbol::Bot => return None,
                };
                Some((
                    PartyId::Applicant(i),
                    Payload::Correction {
                        alpha_share: shares[i],
                        v: sym,
                    },
                ))
            })
            .collect();
        self.v = v;
        Ok(out)
    }
}

fn finish(
    transcript: &Transcript,
    ctx: &Ctx,
    applicants: Vec<ApplicantOutput>,
    server: ServerOutput,
    cupid: Option<CupidOutput>,
) -> RunOutcome {
    let state = ctx.store.get(0).map(|s| s.state.clone());
    let abort_reason = if !server.malicious.is_empty() || applicants.iter().any(|a| a.rejected) {
        Some("rejected".to_string())
    } else if !server.accepted {
        Some("server_aborted".to_string())
    } else if applicants.iter().any(|a| a.local_abort) {
        Some("local_abort".to_string())
    } else {
        None
    };
    RunOutcome {
        transcript_rounds: transcript.rounds(),
        applicants,
        server,
        cupid,
        state,
        aborted: abort_reason.is_some(),
        abort_reason,
    }
}

fn run_mono(
    d0: &[bool],
    params: &Params,
    opts: RunOptions,
    reveal_support: bool,
    zk: Option<&ZkSetup<'_>>,
    key_override: Option<(HghzKey, HghzTrapdoor)>,
) -> Result<(Transcript, RunOutcome), ProtocolError> {
    if d0.len() != params.n {
        return Err(ProtocolError::Config(format!(
            "support has {} bits, parameters expect {}",
            d0.len(),
            params.n
        )));
    }
    let n = d0.len();
    let mut cupid = MonoCupid {
        d0: d0.to_vec(),
        params: *params,
        rng: opts.party_rng("cupid", 0),
        reveal_support,
        zk,
        key_override,
        out: CupidOutput::default(),
    };
    let mut server = SimpleServer {
        n,
        mode: ServerMode::Mono { zk },
        rng: opts.party_rng("server", 0),
        out: ServerOutput::default(),
    };
    let mut apps: Vec<SimpleApplicant> = (0..n)
        .map(|i| SimpleApplicant {
            out: ApplicantOutput {
                index: i,
                ..Default::default()
            },
            expects_correction: false,
            got_correction: false,
        })
        .collect();
    let mut ctx = Ctx::new(Physics::None);
    let transcript = {
        let mut parties: Vec<&mut dyn Party> = vec![&mut cupid, &mut server];
        parties.extend(apps.iter_mut().map(|a| a as &mut dyn Party));
        run_parties(&mut parties, &mut ctx, opts.schedule, opts.seed, MAX_ROUNDS)?
    };
    let outcome = finish(
        &transcript,
        &ctx,
        apps.into_iter().map(|a| a.out).collect(),
        server.out,
        Some(cupid.out),
    );
    Ok((transcript, outcome))
}

/// BLIND: Cupid's key, the server's circuit, qubits to the applicants.
pub fn run_blind(
    d0: &[bool],
    params: &Params,
    opts: RunOptions,
) -> Result<(Transcript, RunOutcome), ProtocolError> {
    run_mono(d0, params, opts, false, None, None)
}

/// BLIND followed by Cupid revealing each support bit.
pub fn run_blind_sup(
    d0: &[bool],
    params: &Params,
    opts: RunOptions,
) -> Result<(Transcript, RunOutcome), ProtocolError> {
    run_mono(d0, params, opts, true, None, None)
}

/// BLIND with a proof of CheckTrapdoor ∧ Auth. `key_override` lets a test
/// submit a crafted key with its own trapdoor.
pub fn run_blind_zk(
    d0: &[bool],
    witness: &[u8],
    auth: &AuthPredicate,
    nizk: &dyn NizkBackend,
    params: &Params,
    opts: RunOptions,
    key_override: Option<(HghzKey, HghzTrapdoor)>,
) -> Result<(Transcript, RunOutcome), ProtocolError> {
    let zk = ZkSetup {
        auth: auth.clone(),
        w: witness.to_vec(),
        nizk,
    };
    run_mono(d0, params, opts, false, Some(&zk), key_override)
}

/// BLIND^sup_can over the compiled family with Cupid computing PartInfo and the α shares.
pub fn run_blind_can_sup(
    d0: &[bool],
    local: &Params,
    opts: RunOptions,
) -> Result<(Transcript, RunOutcome, Vec<PartInfoSymbol>), ProtocolError> {
    if local.n != 1 {
        return Err(ProtocolError::Config(
            "local parameters must have n = 1".into(),
        ));
    }
    let n = d0.len();
    let mut cupid = CanCupid {
        d0: d0.to_vec(),
        params: *local,
        rng: opts.party_rng("cupid", 0),
        key: None,
        out: CupidOutput::default(),
        v: vec![],
    };
    let mut server = SimpleServer {
        n,
        mode: ServerMode::Can,
        rng: opts.party_rng("server", 0),
        out: ServerOutput::default(),
    };
    let mut apps: Vec<SimpleApplicant> = (0..n)
        .map(|i| SimpleApplicant {
            out: ApplicantOutput {
                index: i,
                ..Default::default()
            },
            expects_correction: true,
            got_correction: false,
        })
        .collect();
    let mut ctx = Ctx::new(Physics::None);
    let transcript = {
        let mut parties: Vec<&mut dyn Party> = vec![&mut cupid, &mut server];
        parties.extend(apps.iter_mut().map(|a| a as &mut dyn Party));
        run_parties(&mut parties, &mut ctx, opts.schedule, opts.seed, MAX_ROUNDS)?
    };
    let v = std::mem::take(&mut cupid.v);
    let outcome = finish(
        &transcript,
        &ctx,
        apps.into_iter().map(|a| a.out).collect(),
        server.out,
        Some(cupid.out),
    );
    Ok((transcript, outcome, v))
}

// ------------------------------------------------------- AUTH-BLIND^dist_can

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApplicantBehavior {
    Honest,
    /// Submits a key whose y0 is uniform, so no valid trapdoor exists.
    InjectiveKey,
}

#[derive(Debug, Clone)]
pub struct ApplicantSpec {
    pub d0_bit: bool,
    pub witness: Vec<u8>,
    pub auth: AuthPredicate,
    pub behavior: ApplicantBehavior,
}

impl ApplicantSpec {
    pub fn honest(d0_bit: bool) -> Self {
        Self {
            d0_bit,
            witness: vec![],
            auth: AuthPredicate::AllowAll,
            behavior: ApplicantBehavior::Honest,
        }
    }
}

struct AuthApplicant<'a> {
    index: usize,
    n: usize,
    spec: ApplicantSpec,
    params: Params,
    nizk: &'a dyn NizkBackend,
    rng: HRng,
    keys: Option<(LocalKey, LocalTrapdoor)>,
    v: Option<PartInfoSymbol>,
    out: ApplicantOutput,
}

fn input_digest(party: PartyId, y: &[u64], b: &[bool], extra: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(party.to_string().as_bytes());
    for v in y {
        h.update(v.to_le_bytes());
    }
    h.update(bits::to_string(b).as_bytes());
    h.update(extra);
    hex(&h.finalize())
}

impl Party for AuthApplicant<'_> {
    fn id(&self) -> PartyId {
        PartyId::Applicant(self.index)
    }

    fn step(
        &mut self,
        round: u32,
        inbox: &[Message],
        ctx: &mut Ctx,
    ) -> Result<Outbox, ProtocolError> {
        if round == 0 {
            let (mut k, t) = dist::gen_loc_checked(&self.params, self.spec.d0_bit, &mut self.rng)?;
            if self.spec.behavior == ApplicantBehavior::InjectiveKey {
                k.y0 = self.params.modulus.uniform_vec(k.y0.len(), &mut self.rng);
            }
            if let Physics::Dist(ts) = &mut ctx.physics {
                ts[self.index] = t.clone();
            }
            let st = Statement {
                key: &k,
                auth: &self.spec.auth,
            };
            let proof = self.nizk.prove(
                &st,
                &Witness {
                    d0: &[self.spec.d0_bit],
                    trapdoor: &t,
                    w: &self.spec.witness,
                },
            );
            let out = vec![
                (PartyId::Server, Payload::LocalKey { key: key_blob(&k) }),
                (PartyId::Server, Payload::NizkProof { proof: Blob(proof) }),
            ];
            self.keys = Some((k, t));
            return Ok(out);
        }
        let mut out = vec![];
        for m in inbox {
            match &m.payload {
                Payload::Abort { .. } => self.out.rejected = true,
                Payload::Qubit { store, qubit } => self.out.qubit = Some((*store, *qubit)),
                Payload::Image { .. } => {
                    let (y, b) = read_image(m).ok_or(ProtocolError::Unexpected("bad image"))?;
                    let (k, t) = self
                        .keys
                        .clone()
                        .ok_or(ProtocolError::Unexpected("image before key"))?;
                    let len = k.params.m_rows() + k.params.n;
                    let block = y
                        .get(self.index * len..(self.index + 1) * len)
                        .ok_or(ProtocolError::Unexpected("short image"))?;
                    self.v = Some(dist::part_info_loc(&t, block));
                    let r = bits::random(self.n, &mut self.rng);
                    let digest = input_digest(self.id(), &y, &b, bits::to_string(&r).as_bytes());
                    ctx.mpc_inputs.insert(
                        self.id(),
                        CombineInput::Applicant(
                            self.index,
                            ApplicantInput {
                                key: k,
                                trapdoor: t,
                                d0_bit: self.spec.d0_bit,
                                y,
                                b,
                                r,
                            },
                        ),
                    );
                    out.push((PartyId::Functionality, Payload::MpcInput { digest }));
                }
                Payload::MpcOutput { result } => {
                    let v = self.v.unwrap_or(PartInfoSymbol::Bot);
                    self.out.support_bit = match v {
                        PartInfoSymbol::Cross => Some(false),
                        PartInfoSymbol::Zero | PartInfoSymbol::One => Some(true),
                        _ => None,
                    };
                    match (v, result) {
                        (PartInfoSymbol::Bot, _) => self.out.local_abort = true,
                        (_, MpcResult::Reject) => self.out.rejected = true,
                        (PartInfoSymbol::Zero | PartInfoSymbol::One, MpcResult::Share(share)) => {
                            let (store, q) = self
                                .out
                                .qubit
                                .ok_or(ProtocolError::Unexpected("no qubit"))?;
                            if v == PartInfoSymbol::One {
                                ctx.store.apply_x(store, q);
                            }
                            if *share {
                                ctx.store.apply_z(store, q);
                            }
                            self.out.corrected = true;
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        Ok(out)
    }
}

struct AuthServer<'a> {
    n: usize,
    auths: Vec<AuthPredicate>,
    nizk: &'a dyn NizkBackend,
    rng: HRng,
    out: ServerOutput,
}

impl Party for AuthServer<'_> {
    fn id(&self) -> PartyId {
        PartyId::Server
    }

    fn step(
        &mut self,
        round: u32,
        inbox: &[Message],
        ctx: &mut Ctx,
    ) -> Result<Outbox, ProtocolError> {
        if round == 1 {
            let mut keys: Vec<Option<LocalKey>> = vec![None; self.n];
            let mut proofs: Vec<Option<Vec<u8>>> = vec![None; self.n];
            for m in inbox {
                let PartyId::Applicant(i) = m.sender else {
                    continue;
                };
                match &m.payload {
                    Payload::LocalKey { key } if i < self.n => keys[i] = io::read_key(&key.0).ok(),
                    Payload::NizkProof { proof } if i < self.n => proofs[i] = Some(proof.0.clone()),
                    _ => {}
                }
            }
            let mut malicious = Vec::new();
            for i in 0..self.n {
                let reason = match (&keys[i], &proofs[i]) {
                    (None, _) => Some("malformed_key"),
                    (_, None) => Some("missing_proof"),
                    (Some(k), Some(p)) => (!self.nizk.verify(
                        &Statement {
                            key: k,
                            auth: &self.auths[i],
                        },
                        p,
                    ))
                    .then_some("nizk_rejected"),
                };
                if let Some(reason) = reason {
                    malicious.push(MaliciousReport {
                        party: PartyId::Applicant(i),
                        reason: reason.into(),
                    });
                }
            }
            let key = if malicious.is_empty() {
                DistKey::new(keys.into_iter().map(|k| k.expect("checked")).collect()).ok()
            } else {
                None
            };
            let Some(key) = key else {
                if malicious.is_empty() {
                    malicious.push(MaliciousReport {
                        party: PartyId::Server,
                        reason: "inconsistent_parameters".into(),
                    });
                }
                self.out.malicious = malicious.clone();
                return Ok(broadcast(self.n, |_| Payload::Abort {
                    malicious: malicious.clone(),
                }));
            };
            let (o, store) = ctx.run_circuit(CircuitKey::Dist(&key), &mut self.rng)?;
            self.out.y = Some(o.y.clone());
            self.out.b = Some(o.b.clone());
            let digest = input_digest(PartyId::Server, &o.y, &o.b, &[]);
            let mut out = Vec::new();
            for i in 0..self.n {
                out.push((PartyId::Applicant(i), image_payload(&o.y, &o.b)));
                out.push((PartyId::Applicant(i), Payload::Qubit { store, qubit: i }));
            }
            out.push((PartyId::Functionality, Payload::MpcInput { digest }));
            ctx.mpc_inputs.insert(
                PartyId::Server,
                CombineInput::Server(ServerInput {
                    key,
                    y: o.y,
                    b: o.b,
                }),
            );
            return Ok(out);
        }
        for m in inbox {
            if let Payload::MpcOutput { result } = &m.payload {
                self.out.accepted = *result == MpcResult::Accept;
            }
        }
        Ok(vec![])
    }
}

struct Functionality {
    n: usize,
    rng: HRng,
    received: Vec<PartyId>,
    done: bool,
}

impl Party for Functionality {
    fn id(&self) -> PartyId {
        PartyId::Functionality
    }

    fn step(
        &mut self,
        _round: u32,
        inbox: &[Message],
        ctx: &mut Ctx,
    ) -> Result<Outbox, ProtocolError> {
        for m in inbox {
            if matches!(m.payload, Payload::MpcInput { .. }) && !self.received.contains(&m.sender) {
                self.received.push(m.sender);
            }
        }
        if self.done || self.received.len() < self.n + 1 {
            return Ok(vec![]);
        }
        self.done = true;
        let server = match ctx.mpc_inputs.get(&PartyId::Server) {
            Some(CombineInput::Server(s)) => s.clone(),
            _ => return Err(ProtocolError::Unexpected("missing server input")),
        };
        let apps: Vec<ApplicantInput> = (0..self.n)
            .map(|i| match ctx.mpc_inputs.get(&PartyId::Applicant(i)) {
                Some(CombineInput::Applicant(_, a)) => Ok(a.clone()),
                _ => Err(ProtocolError::Unexpected("missing applicant input")),
            })
            .collect::<Result<_, _>>()?;
        let res = combine_alpha(&server, &apps, &mut self.rng);
        let server_result = if res.accepted {
            MpcResult::Accept
        } else {
            MpcResult::Reject
        };
        let mut out = vec![(
            PartyId::Server,
            Payload::MpcOutput {
                result: server_result,
            },
        )];
        out.extend(broadcast(self.n, |i| Payload::MpcOutput {
            result: res.shares[i].map_or(MpcResult::Reject, MpcResult::Share),
        }));
        Ok(out)
    }
}

/// AUTH-BLIND^dist_can: applicants generate and prove their local keys, the
/// server verifies and runs the circuit, CombineAlpha distributes α shares.
pub fn run_auth_blind_dist_can(
    specs: &[ApplicantSpec],
    nizk: &dyn NizkBackend,
    local: &Params,
    opts: RunOptions,
) -> Result<(Transcript, RunOutcome), ProtocolError> {
    if local.n != 1 {
        return Err(ProtocolError::Config(
            "local parameters must have n = 1".into(),
        ));
    }
    let n = specs.len();
    let mut apps: Vec<AuthApplicant<'_>> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| AuthApplicant {
            index: i,
            n,
            spec: s.clone(),
            params: *local,
            nizk,
            rng: opts.party_rng("applicant", i as u64),
            keys: None,
            v: None,
            out: ApplicantOutput {
                index: i,
                ..Default::default()
            },
        })
        .collect();
    let mut server = AuthServer {
        n,
        auths: specs.iter().map(|s| s.auth.clone()).collect(),
        nizk,
        rng: opts.party_rng("server", 0),
        out: ServerOutput::default(),
    };
    let mut func = Functionality {
        n,
        rng: opts.party_rng("functionality", 0),
        received: vec![],
        done: false,
    };
    let placeholder = placeholder_trapdoor(local);
    let mut ctx = Ctx::new(Physics::Dist(vec![placeholder; n]));
    let transcript = {
        let mut parties: Vec<&mut dyn Party> = vec![&mut server, &mut func];
        parties.extend(apps.iter_mut().map(|a| a as &mut dyn Party));
        run_parties(&mut parties, &mut ctx, opts.schedule, opts.seed, MAX_ROUNDS)?
    };
    let outcome = finish(
        &transcript,
        &ctx,
        apps.into_iter().map(|a| a.out).collect(),
        server.out,
        None,
    );
    Ok((transcript, outcome))
}

/// Slot filler replaced by each applicant's trapdoor at registration.
fn placeholder_trapdoor(p: &Params) -> LocalTrapdoor {
    let rows = p.m_rows() + p.n;
    HghzTrapdoor {
        params: *p,
        r: crate::modq::IntMatrix::zeros(p.n_dim * p.k() as usize, 2 * p.n_dim),
        d0: vec![false; p.n],
        s0: vec![0u64; p.n_dim],
        e0: vec![0u64; rows],
        a: ZqMatrix::zeros(rows, p.n_dim),
    }
}
