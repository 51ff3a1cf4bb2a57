//! Indistinguishability games with pluggable adversaries.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::dist::{self, DistKey, LocalTrapdoor, PartInfoSymbol};
use crate::family::{self, HghzKey, HghzTrapdoor, Params};
use crate::rng::{self, HRng};
use crate::stats::{binomial_sigma, Proportion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    IndD0,
    IndPartial,
    IndBlind,
    IndBlindSup,
    IndBlindCanSup,
}

impl GameKind {
    pub const ALL: [GameKind; 5] = [
        Self::IndD0,
        Self::IndPartial,
        Self::IndBlind,
        Self::IndBlindSup,
        Self::IndBlindCanSup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::IndD0 => "ind-d0",
            Self::IndPartial => "ind-partial",
            Self::IndBlind => "ind-blind",
            Self::IndBlindSup => "ind-blind-sup",
            Self::IndBlindCanSup => "ind-blind-can-sup",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }

    /// Games whose first stage names a corrupted set M.
    pub fn has_corruptions(self) -> bool {
        matches!(
            self,
            Self::IndPartial | Self::IndBlindSup | Self::IndBlindCanSup
        )
    }

    fn uses_compiled_family(self) -> bool {
        matches!(self, Self::IndPartial | Self::IndBlindCanSup)
    }
}

/// First-stage output: corrupted set and the two candidate supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub corrupted: Vec<usize>,
    pub d0: [Vec<bool>; 2],
}

pub enum PublicKey<'a> {
    Mono(&'a HghzKey),
    Dist(&'a DistKey),
}

/// Trapdoor material handed out-of-band to oracle adversaries only.
pub enum Leak<'a> {
    Mono(&'a HghzTrapdoor),
    Dist(&'a [LocalTrapdoor]),
}

impl Leak<'_> {
    pub fn d0(&self) -> Vec<bool> {
        match self {
            Leak::Mono(t) => t.d0.clone(),
            Leak::Dist(ts) => ts.iter().map(|t| t.d0[0]).collect(),
        }
    }
}

/// What Cupid sends to corrupted applicants in the final stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum View {
    Nothing,
    SupportBits(Vec<(usize, bool)>),
    PartInfo(Vec<(usize, PartInfoSymbol)>),
    Corrections(Vec<(usize, bool, PartInfoSymbol)>),
}

pub trait Adversary {
    fn choose(&mut self, kind: GameKind, n: usize, rng: &mut dyn RngCore) -> Choice;
    fn wants_trapdoor(&self) -> bool {
        false
    }
    /// Second stage: sees the key, answers with (y, b). Games that ignore
    /// (y, b) still ask for it.
    fn on_key(
        &mut self,
        key: PublicKey<'_>,
        leak: Option<Leak<'_>>,
        rng: &mut dyn RngCore,
    ) -> (Vec<u64>, Vec<bool>);
    /// `None` is malformed output and counts as a loss.
    fn guess(&mut self, view: &View, rng: &mut dyn RngCore) -> Option<bool>;
}

/// Which check ended the trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// d0 differs on a corrupted index.
    CorruptedDiffer,
    /// A corrupted party is supported while no honest one is.
    NoHonestSupport,
    Malformed,
    /// Played to the end with ⊥ ∈ v (α drawn uniformly).
    PlayedBot,
    Played,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trial {
    pub win: bool,
    pub branch: Branch,
}

/// (y, b) an honest server would produce: a uniform domain point and a uniform b.
pub fn honest_image(key: &PublicKey<'_>, rng: &mut dyn RngCore) -> (Vec<u64>, Vec<bool>) {
    match key {
        PublicKey::Mono(k) => {
            let x = family::sample_domain(&k.params, rng);
            let y = family::eval(k, &x).expect("sampled point is in the domain");
            let len = crate::qsim::codec::BitCodec::new(&k.params).len();
            (y, bits::random(len, rng))
        }
        PublicKey::Dist(k) => {
            let x = dist::sample_dist(k.params(), k.parties(), rng);
            let y = dist::eval_dist(k, &x).expect("sampled point is in the domain");
            (y, bits::random(k.codec().len(), rng))
        }
    }
}

fn uniform_image(key: &PublicKey<'_>, rng: &mut dyn RngCore) -> (Vec<u64>, Vec<bool>) {
    let (y, b) = honest_image(key, rng);
    let q = match key {
        PublicKey::Mono(k) => k.params.modulus,
        PublicKey::Dist(k) => k.params().modulus,
    };
    (q.uniform_vec(y.len(), rng), b)
}

/// Guesses uniformly; picks distinct random supports agreeing on M.
pub struct RandomGuess {
    pub corrupted: Vec<usize>,
    /// Answer the key with a uniform y, which almost never has a twin.
    pub uniform_y: bool,
}

impl RandomGuess {
    pub fn new() -> Self {
        Self {
            corrupted: vec![],
            uniform_y: false,
        }
    }
}

impl Default for RandomGuess {
    fn default() -> Self {
        Self::new()
    }
}

impl Adversary for RandomGuess {
    fn choose(&mut self, kind: GameKind, n: usize, rng: &mut dyn RngCore) -> Choice {
        let corrupted = if kind.has_corruptions() {
            self.corrupted.clone()
        } else {
            vec![]
        };
        let d0a = bits::random(n, rng);
        let mut d0b = bits::random(n, rng);
        for &i in &corrupted {
            d0b[i] = d0a[i];
        }
        Choice {
            corrupted,
            d0: [d0a, d0b],
        }
    }

    fn on_key(
        &mut self,
        key: PublicKey<'_>,
        _leak: Option<Leak<'_>>,
        rng: &mut dyn RngCore,
    ) -> (Vec<u64>, Vec<bool>) {
        if self.uniform_y {
            uniform_image(&key, rng)
        } else {
            honest_image(&key, rng)
        }
    }

    fn guess(&mut self, _view: &View, rng: &mut dyn RngCore) -> Option<bool> {
        Some(rng.gen())
    }
}

/// Reads d0 straight from a leaked trapdoor.
pub struct TrapdoorOracle {
    d0: [Vec<bool>; 2],
    learned: Option<Vec<bool>>,
}

impl TrapdoorOracle {
    pub fn new() -> Self {
        Self {
            d0: [vec![], vec![]],
            learned: None,
        }
    }
}

impl Default for TrapdoorOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl Adversary for TrapdoorOracle {
    fn choose(&mut self, _kind: GameKind, n: usize, _rng: &mut dyn RngCore) -> Choice {
        self.d0 = [vec![true; n], vec![false; n]];
        Choice {
            corrupted: vec![],
            d0: self.d0.clone(),
        }
    }

    fn wants_trapdoor(&self) -> bool {
        true
    }

    fn on_key(
        &mut self,
        key: PublicKey<'_>,
        leak: Option<Leak<'_>>,
        rng: &mut dyn RngCore,
    ) -> (Vec<u64>, Vec<bool>) {
        self.learned = leak.map(|l| l.d0());
        honest_image(&key, rng)
    }

    fn guess(&mut self, _view: &View, _rng: &mut dyn RngCore) -> Option<bool> {
        let d0 = self.learned.as_ref()?;
        Some(*d0 == self.d0[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// Supports differ on the corrupted party 0.
    DifferOnCorrupted,
    /// Only the corrupted party 0 is supported, in both candidates.
    OnlyCorruptedSupported,
}

/// Breaks one of the game's admissibility conditions; would otherwise win
/// outright by reading its own corrupted view.
pub struct ConditionViolating {
    pub violation: Violation,
    d0: [Vec<bool>; 2],
}

impl ConditionViolating {
    pub fn new(violation: Violation) -> Self {
        Self {
            violation,
            d0: [vec![], vec![]],
        }
    }
}

impl Adversary for ConditionViolating {
    fn choose(&mut self, _kind: GameKind, n: usize, _rng: &mut dyn RngCore) -> Choice {
        let mut a = vec![false; n];
        let mut b = vec![false; n];
        match self.violation {
            Violation::DifferOnCorrupted => {
                b[0] = true;
            }
            Violation::OnlyCorruptedSupported => {
                a[0] = true;
                b[0] = true;
                b[n - 1] = true;
            }
        }
        self.d0 = [a, b];
        Choice {
            corrupted: vec![0],
            d0: self.d0.clone(),
        }
    }

    fn on_key(
        &mut self,
        key: PublicKey<'_>,
        _leak: Option<Leak<'_>>,
        rng: &mut dyn RngCore,
    ) -> (Vec<u64>, Vec<bool>) {
        honest_image(&key, rng)
    }

    fn guess(&mut self, view: &View, rng: &mut dyn RngCore) -> Option<bool> {
        let seen = match view {
            View::SupportBits(v) => v.first().map(|&(_, b)| b),
            View::PartInfo(v) => v.first().map(|&(_, s)| s.bit().is_some()),
            View::Corrections(v) => v.first().map(|&(_, _, s)| s.bit().is_some()),
            View::Nothing => None,
        };
        Some(match seen {
            Some(supported) => supported == self.d0[1][0],
            None => rng.gen(),
        })
    }
}

/// Returns a malformed first stage or guess.
pub struct Malformed {
    pub bad_choice: bool,
}

impl Adversary for Malformed {
    fn choose(&mut self, _kind: GameKind, n: usize, _rng: &mut dyn RngCore) -> Choice {
        let len = if self.bad_choice { n + 1 } else { n };
        Choice {
            corrupted: vec![],
            d0: [vec![true; len], vec![false; len]],
        }
    }

    fn on_key(
        &mut self,
        key: PublicKey<'_>,
        _leak: Option<Leak<'_>>,
        rng: &mut dyn RngCore,
    ) -> (Vec<u64>, Vec<bool>) {
        honest_image(&key, rng)
    }

    fn guess(&mut self, _view: &View, _rng: &mut dyn RngCore) -> Option<bool> {
        None
    }
}

/// Parameters a game instantiates its family with.
#[derive(Debug, Clone, Copy)]
pub struct GameSetup {
    pub n: usize,
    pub mono: Params,
    pub local: Params,
}

impl GameSetup {
    pub fn toy(n: usize) -> Self {
        Self {
            n,
            mono: Params::toy_default(n),
            local: Params::toy_default(1),
        }
    }
}

fn well_formed(c: &Choice, n: usize) -> bool {
    c.d0.iter().all(|d| d.len() == n) && c.corrupted.iter().all(|&i| i < n)
}

/// One trial: the adversary chooses, the challenger runs, the adversary guesses.
pub fn play(kind: GameKind, setup: &GameSetup, adv: &mut dyn Adversary, rng: &mut HRng) -> Trial {
    let n = setup.n;
    let loss = |branch| Trial { win: false, branch };
    let choice = adv.choose(kind, n, rng);
    if !well_formed(&choice, n) {
        return loss(Branch::Malformed);
    }
    let m = &choice.corrupted;
    if kind.has_corruptions() && m.iter().any(|&i| choice.d0[0][i] != choice.d0[1][i]) {
        return loss(Branch::CorruptedDiffer);
    }
    if kind == GameKind::IndBlindCanSup {
        let honest_unsupported = |d: &[bool]| (0..n).filter(|i| !m.contains(i)).all(|i| !d[i]);
        if m.iter().any(|&i| choice.d0[0][i])
            && (honest_unsupported(&choice.d0[0]) || honest_unsupported(&choice.d0[1]))
        {
            return loss(Branch::NoHonestSupport);
        }
    }
    let c: bool = rng.gen();
    let d0 = &choice.d0[c as usize];
    let mut branch = Branch::Played;

    let view = if kind.uses_compiled_family() {
        let Ok((key, traps)) = dist::gen_dist(&setup.local, d0, rng) else {
            return loss(Branch::Malformed);
        };
        let leak = adv.wants_trapdoor().then_some(Leak::Dist(&traps));
        let (y, b) = adv.on_key(PublicKey::Dist(&key), leak, rng);
        if y.len() != key.image_len() || b.len() != key.codec().len() {
            return loss(Branch::Malformed);
        }
        let v = dist::part_info(&key, &traps, &y);
        if kind == GameKind::IndPartial {
            View::PartInfo(m.iter().map(|&i| (i, v[i])).collect())
        } else {
            let alpha = match dist::invert_dist(&key, &traps, &y) {
                Some((x0, x1)) if !v.contains(&PartInfoSymbol::Bot) => {
                    let codec = key.codec();
                    bits::inner(&b, &bits::xor(&codec.encode(&x0), &codec.encode(&x1)))
                }
                _ => {
                    branch = Branch::PlayedBot;
                    rng.gen()
                }
            };
            let mut shares = bits::random(n, rng);
            let support: Vec<usize> = (0..n).filter(|&i| d0[i]).collect();
            if let Some(&j) = support.last() {
                let cur = support.iter().fold(false, |acc, &i| acc ^ shares[i]);
                shares[j] ^= cur ^ alpha;
            }
            View::Corrections(m.iter().map(|&i| (i, shares[i], v[i])).collect())
        }
    } else {
        let Ok((key, t)) = family::gen(&setup.mono, d0, rng) else {
            return loss(Branch::Malformed);
        };
        let leak = adv.wants_trapdoor().then_some(Leak::Mono(&t));
        // IND-D0 stops at the key; the BLIND games take (y, b) and discard it
        let _ = adv.on_key(PublicKey::Mono(&key), leak, rng);
        match kind {
            GameKind::IndBlindSup => View::SupportBits(m.iter().map(|&i| (i, d0[i])).collect()),
            _ => View::Nothing,
        }
    };
    match adv.guess(&view, rng) {
        Some(g) => Trial {
            win: g == c,
            branch,
        },
        None => loss(Branch::Malformed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameStats {
    pub game: GameKind,
    pub trials: u64,
    pub wins: Proportion,
    pub sigma_at_half: f64,
    pub branches: Vec<(Branch, u64)>,
}

/// Runs `trials` independent plays in parallel, each with its own stream
/// and a fresh adversary.
pub fn run_game(
    kind: GameKind,
    setup: &GameSetup,
    make: &(dyn Fn() -> Box<dyn Adversary> + Sync),
    trials: u64,
    seed: u64,
) -> GameStats {
    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::labeled(seed, kind.name(), t);
            play(kind, setup, make().as_mut(), &mut r)
        })
        .collect();
    let wins = results.iter().filter(|t| t.win).count() as u64;
    let mut branches: Vec<(Branch, u64)> = Vec::new();
    for t in &results {
        match branches.iter_mut().find(|(b, _)| *b == t.branch) {
            Some((_, c)) => *c += 1,
            None => branches.push((t.branch, 1)),
        }
    }
    branches.sort_by_key(|(b, _)| *b as u8);
    GameStats {
        game: kind,
        trials,
        wins: Proportion::new(wins, trials, 0.99),
        sigma_at_half: binomial_sigma(0.5, trials),
        branches,
    }
}
