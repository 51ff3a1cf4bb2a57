//! The server's circuit: superpose, evaluate, measure the image, then
//! Hadamard-measure the input register. Two simulators share one outcome type.

pub mod codec;
pub mod dense;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits;
use crate::dist::{self, DistCodec, DistKey, DistPoint, LocalTrapdoor, PartInfoSymbol};
use crate::family::{self, DomainPoint, HghzKey, HghzTrapdoor};
use codec::BitCodec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QsimError {
    #[error("correction vector has {got} entries for {expected} qubits")]
    Length { expected: usize, got: usize },
    #[error("correction symbol at qubit {0} disagrees with the support")]
    Inconsistent(usize),
    #[error("correction vector contains a local abort at qubit {0}")]
    Abort(usize),
    #[error("expected {expected} phase shares, got {got}")]
    Shares { expected: usize, got: usize },
    #[error("register of {0} bits exceeds the dense simulator limit")]
    TooLarge(usize),
}

/// |d⟩ + (−1)^α |d′⟩, up to normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HiddenGhzDescription {
    pub alpha: bool,
    pub d: Vec<bool>,
    pub d_prime: Vec<bool>,
}

impl HiddenGhzDescription {
    pub fn new(alpha: bool, d: Vec<bool>, d_prime: Vec<bool>) -> Self {
        Self { alpha, d, d_prime }
    }

    pub fn qubits(&self) -> usize {
        self.d.len()
    }

    /// Indices where d and d′ differ.
    pub fn support(&self) -> Vec<usize> {
        (0..self.d.len())
            .filter(|&i| self.d[i] != self.d_prime[i])
            .collect()
    }

    pub fn support_mask(&self) -> Vec<bool> {
        bits::xor(&self.d, &self.d_prime)
    }

    /// X on qubit i.
    pub fn apply_x(&mut self, i: usize) {
        self.d[i] ^= true;
        self.d_prime[i] ^= true;
    }

    /// Z on qubit i; only the relative phase is tracked.
    pub fn apply_z(&mut self, i: usize) {
        self.alpha ^= self.d[i] ^ self.d_prime[i];
    }

    /// α = 0, d = 0…0 and d′ = 1…1 on the support (or swapped), off-support bits equal.
    pub fn is_canonical_ghz(&self) -> bool {
        if self.alpha || self.d.len() != self.d_prime.len() {
            return false;
        }
        let support = self.support();
        let Some(&first) = support.first() else {
            return true;
        };
        let lead = self.d[first];
        support.iter().all(|&i| self.d[i] == lead)
    }

    /// Dense amplitudes over the 2^n computational basis (bit i of the index is qubit i).
    pub fn amplitudes(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.qubits()];
        let i0 = bits::to_u64(&self.d) as usize;
        let i1 = bits::to_u64(&self.d_prime) as usize;
        let sign = if self.alpha { -1.0 } else { 1.0 };
        if i0 == i1 {
            out[i0] = 1.0 + sign;
        } else {
            out[i0] = 1.0;
            out[i1] = sign;
        }
        let norm = out.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|a| *a /= norm);
        }
        out
    }

    /// Computational-basis measurement of every qubit.
    pub fn measure_computational<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        if self.d == self.d_prime || rng.gen() {
            self.d.clone()
        } else {
            self.d_prime.clone()
        }
    }

    /// Hadamard-basis measurement of every qubit: outcomes m with ⟨m, d ⊕ d′⟩ = α, uniformly.
    pub fn measure_hadamard<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let mut m = bits::random(self.qubits(), rng);
        let delta = self.support_mask();
        if let Some(j) = delta.iter().position(|&x| x) {
            if bits::inner(&m, &delta) != self.alpha {
                m[j] ^= true;
            }
        }
        m
    }
}

/// Z^{α̂_i} X^{v[i]} on every supported qubit. `shares` lists α̂_i for the
/// qubits with v[i] ∈ {0, 1}, in index order.
pub fn apply_corrections(
    desc: &HiddenGhzDescription,
    v: &[PartInfoSymbol],
    shares: &[bool],
) -> Result<HiddenGhzDescription, QsimError> {
    if v.len() != desc.qubits() {
        return Err(QsimError::Length {
            expected: desc.qubits(),
            got: v.len(),
        });
    }
    let support = desc.support_mask();
    let supported = v.iter().filter(|s| s.bit().is_some()).count();
    if shares.len() != supported {
        return Err(QsimError::Shares {
            expected: supported,
            got: shares.len(),
        });
    }
    let mut out = desc.clone();
    let mut share = shares.iter();
    for (i, s) in v.iter().enumerate() {
        match s {
            PartInfoSymbol::Bot => return Err(QsimError::Abort(i)),
            PartInfoSymbol::Cross if support[i] => return Err(QsimError::Inconsistent(i)),
            PartInfoSymbol::Cross => {}
            _ if !support[i] => return Err(QsimError::Inconsistent(i)),
            _ => {
                if s.bit() == Some(true) {
                    out.apply_x(i);
                }
                if *share.next().expect("counted above") {
                    out.apply_z(i);
                }
            }
        }
    }
    Ok(out)
}

pub fn hghz_from_preimages(
    enc_x: &[bool],
    enc_x2: &[bool],
    h_x: Vec<bool>,
    h_x2: Vec<bool>,
    b: &[bool],
) -> HiddenGhzDescription {
    HiddenGhzDescription::new(bits::inner(b, &bits::xor(enc_x, enc_x2)), h_x, h_x2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeState {
    Hghz(HiddenGhzDescription),
    Singleton(Vec<bool>),
    Abort,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitOutcome {
    pub y: Vec<u64>,
    pub b: Vec<bool>,
    pub state: OutcomeState,
}

/// What the exact sampler needs from a function: uniform domain sampling,
/// evaluation, register encoding, h, and the complete preimage set of an image.
pub trait CircuitInstance: Sync {
    type Point: Clone + PartialEq;
    fn register_len(&self) -> usize;
    fn sample(&self, rng: &mut dyn RngCore) -> Self::Point;
    fn eval(&self, x: &Self::Point) -> Vec<u64>;
    fn encode(&self, x: &Self::Point) -> Vec<bool>;
    fn h(&self, x: &Self::Point) -> Vec<bool>;
    /// `None` when the oracle itself fails.
    fn preimages(&self, y: &[u64]) -> Option<Vec<Self::Point>>;
}

/// Measurement statistics of the circuit without a state vector.
///
/// Two preimages with distinct h give a uniform b and α = ⟨b, Δ⟩. With equal
/// h the branch ⟨b, Δ⟩ = 1 has zero amplitude, so b is uniform on ⟨b, Δ⟩ = 0.
pub fn run_server_circuit_exact<I: CircuitInstance + ?Sized>(
    inst: &I,
    rng: &mut dyn RngCore,
) -> CircuitOutcome {
    let x = inst.sample(rng);
    let y = inst.eval(&x);
    let mut b = bits::random(inst.register_len(), rng);
    let state = match inst.preimages(&y).as_deref() {
        Some([only]) => OutcomeState::Singleton(inst.h(only)),
        Some([x0, x1]) => {
            let delta = bits::xor(&inst.encode(x0), &inst.encode(x1));
            let (h0, h1) = (inst.h(x0), inst.h(x1));
            if h0 == h1 && bits::inner(&b, &delta) {
                let j = delta.iter().position(|&v| v).expect("distinct preimages");
                b[j] ^= true;
            }
            OutcomeState::Hghz(HiddenGhzDescription::new(bits::inner(&b, &delta), h0, h1))
        }
        _ => OutcomeState::Abort,
    };
    CircuitOutcome { y, b, state }
}

/// The monolithic family with the trapdoor as preimage oracle.
pub struct MonoInstance<'a> {
    pub key: &'a HghzKey,
    pub trapdoor: &'a HghzTrapdoor,
    codec: BitCodec,
}

impl<'a> MonoInstance<'a> {
    pub fn new(key: &'a HghzKey, trapdoor: &'a HghzTrapdoor) -> Self {
        Self {
            key,
            trapdoor,
            codec: BitCodec::new(&key.params),
        }
    }
}

impl CircuitInstance for MonoInstance<'_> {
    type Point = DomainPoint;

    fn register_len(&self) -> usize {
        self.codec.len()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> DomainPoint {
        family::sample_domain(&self.key.params, rng)
    }

    fn eval(&self, x: &DomainPoint) -> Vec<u64> {
        family::eval(self.key, x).expect("sampled points lie in the domain")
    }

    fn encode(&self, x: &DomainPoint) -> Vec<bool> {
        self.codec.encode(x).expect("domain points encode")
    }

    fn h(&self, x: &DomainPoint) -> Vec<bool> {
        family::h(x)
    }

    fn preimages(&self, y: &[u64]) -> Option<Vec<DomainPoint>> {
        Some(family::preimages(self.key, self.trapdoor, y))
    }
}

/// The compiled family with the per-party trapdoors as preimage oracle.
pub struct DistInstance<'a> {
    pub key: &'a DistKey,
    pub traps: &'a [LocalTrapdoor],
    codec: DistCodec,
}

impl<'a> DistInstance<'a> {
    pub fn new(key: &'a DistKey, traps: &'a [LocalTrapdoor]) -> Self {
        Self {
            key,
            traps,
            codec: key.codec(),
        }
    }
}

impl CircuitInstance for DistInstance<'_> {
    type Point = DistPoint;

    fn register_len(&self) -> usize {
        self.codec.len()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> DistPoint {
        dist::sample_dist(self.key.params(), self.key.parties(), rng)
    }

    fn eval(&self, x: &DistPoint) -> Vec<u64> {
        dist::eval_dist(self.key, x).expect("sampled points lie in the domain")
    }

    fn encode(&self, x: &DistPoint) -> Vec<bool> {
        self.codec.encode(x)
    }

    fn h(&self, x: &DistPoint) -> Vec<bool> {
        dist::h_dist(x)
    }

    fn preimages(&self, y: &[u64]) -> Option<Vec<DistPoint>> {
        Some(dist::preimages_dist(self.key, self.traps, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Params;
    use crate::rng;
    use crate::stats::Proportion;
    use proptest::prelude::*;

    fn desc(alpha: bool, d: &str, dp: &str) -> HiddenGhzDescription {
        HiddenGhzDescription::new(alpha, bits::parse(d).unwrap(), bits::parse(dp).unwrap())
    }

    #[test]
    fn canonical_examples() {
        assert!(desc(false, "00", "11").is_canonical_ghz());
        assert!(!desc(true, "00", "11").is_canonical_ghz());
        assert!(desc(false, "001", "111").is_canonical_ghz());
        assert!(desc(false, "111", "000").is_canonical_ghz());
        assert!(!desc(false, "110", "001").is_canonical_ghz());
        assert!(!desc(false, "01", "10").is_canonical_ghz());
        assert_eq!(desc(false, "001", "111").support(), vec![0, 1]);
    }

    #[test]
    fn correction_example() {
        use PartInfoSymbol::*;
        let out = apply_corrections(&desc(true, "01", "10"), &[Zero, One], &[false, true]).unwrap();
        assert_eq!(out, desc(false, "00", "11"));
        assert!(out.is_canonical_ghz());
        let same = desc(true, "101", "101");
        assert_eq!(
            apply_corrections(&same, &[Cross, Cross, Cross], &[]).unwrap(),
            same
        );
        assert_eq!(
            apply_corrections(&same, &[Cross, One, Cross], &[true]),
            Err(QsimError::Inconsistent(1))
        );
        assert_eq!(
            apply_corrections(&same, &[Cross, Bot, Cross], &[]),
            Err(QsimError::Abort(1))
        );
        assert!(apply_corrections(&desc(false, "01", "10"), &[Zero, Zero], &[true]).is_err());
    }

    proptest! {
        #[test]
        fn corrections_canonicalize(d in proptest::collection::vec(any::<bool>(), 1..8),
                                    mask in proptest::collection::vec(any::<bool>(), 8),
                                    alpha: bool, pick: bool, seed: u64) {
            let n = d.len();
            let d0: Vec<bool> = mask[..n].to_vec();
            let dp = bits::xor(&d, &d0);
            let state = HiddenGhzDescription::new(alpha, d.clone(), dp.clone());
            let u = if pick { d } else { dp };
            let v: Vec<PartInfoSymbol> = (0..n)
                .map(|i| if d0[i] { PartInfoSymbol::from_bit(u[i]) } else { PartInfoSymbol::Cross })
                .collect();
            let m = bits::weight(&d0);
            let mut r = rng::stream(seed, 0);
            let mut shares = bits::random(m, &mut r);
            if m > 0 && shares.iter().fold(false, |a, &s| a ^ s) != alpha {
                shares[m - 1] ^= true;
            }
            let out = apply_corrections(&state, &v, &shares).unwrap();
            prop_assert_eq!(out.alpha, m == 0 && alpha);
            if m > 0 || !alpha {
                prop_assert!(out.is_canonical_ghz());
            }
        }
    }

    #[test]
    fn hadamard_outcomes_satisfy_the_phase() {
        let s = desc(true, "0110", "1100");
        let mut r = rng::stream(1, 0);
        for _ in 0..200 {
            let m = s.measure_hadamard(&mut r);
            assert!(bits::inner(&m, &s.support_mask()));
            let c = s.measure_computational(&mut r);
            assert!(c == s.d || c == s.d_prime);
        }
    }

    #[test]
    fn hghz_from_preimages_phase() {
        let ex = bits::parse("1010").unwrap();
        let ex2 = bits::parse("0110").unwrap();
        let zero = vec![false; 4];
        assert!(!hghz_from_preimages(&ex, &ex2, vec![false], vec![true], &zero).alpha);
        let mut b = zero.clone();
        b[0] = true;
        assert!(hghz_from_preimages(&ex, &ex2, vec![false], vec![true], &b).alpha);
    }

    #[test]
    fn exact_sampler_support_law_and_twin_rate() {
        let d0 = bits::parse("101").unwrap();
        let p = Params::toy_default(3);
        let (k, t, _) = family::gen_checked(&p, &d0, &mut rng::stream(2, 0)).unwrap();
        let inst = MonoInstance::new(&k, &t);
        let mut r = rng::stream(2, 1);
        let shots = 4000;
        let mut twins = 0;
        for _ in 0..shots {
            let out = run_server_circuit_exact(&inst, &mut r);
            assert_eq!(out.b.len(), inst.register_len());
            match out.state {
                OutcomeState::Hghz(s) => {
                    assert_eq!(s.support_mask(), d0);
                    twins += 1;
                }
                OutcomeState::Singleton(_) => {}
                OutcomeState::Abort => panic!("oracle failure"),
            }
        }
        let est = family::estimate_delta(&t, 100_000, 3);
        let rate = Proportion::new(shots - twins, shots, 0.99);
        let gap = (rate.estimate - est.delta_hat.estimate).abs();
        assert!(
            gap < 4.0 * rate.sigma_at(est.delta_hat.estimate) + 0.01,
            "{gap}"
        );
    }

    #[test]
    fn compiled_instance_twins_have_full_support() {
        let d0 = bits::parse("110").unwrap();
        let p = Params::toy_default(1);
        let (k, traps) = dist::gen_dist(&p, &d0, &mut rng::stream(4, 0)).unwrap();
        let inst = DistInstance::new(&k, &traps);
        let mut r = rng::stream(4, 1);
        for _ in 0..300 {
            if let OutcomeState::Hghz(s) = run_server_circuit_exact(&inst, &mut r).state {
                assert_eq!(s.support_mask(), d0);
            }
        }
    }
}
