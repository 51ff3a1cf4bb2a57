//! State-vector simulation of the circuit on small synthetic functions.
//!
//! The input register has L ≤ 14 qubits. After the image is measured the
//! residual state is Σ_{x ∈ f⁻¹(y)} |x⟩|h(x)⟩; a Walsh–Hadamard transform of
//! that vector gives every Hadamard outcome b at once.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::{CircuitInstance, CircuitOutcome, HiddenGhzDescription, OutcomeState, QsimError};
use crate::{bits, rng};

pub const MAX_REGISTER: usize = 14;

/// f: {0,1}^L ⊇ D → images, with an n-bit label h. Points mapped to `None`
/// lie outside D and are removed by post-selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticFunction {
    l: usize,
    n: usize,
    f: Vec<Option<u64>>,
    h: Vec<u64>,
    domain: Vec<usize>,
    fibers: BTreeMap<u64, Vec<usize>>,
}

impl SyntheticFunction {
    pub fn new(l: usize, n: usize, f: Vec<Option<u64>>, h: Vec<u64>) -> Result<Self, QsimError> {
        if l > MAX_REGISTER {
            return Err(QsimError::TooLarge(l));
        }
        if f.len() != 1 << l || h.len() != 1 << l || n >= 16 {
            return Err(QsimError::Length {
                expected: 1 << l,
                got: f.len(),
            });
        }
        let domain: Vec<usize> = (0..f.len()).filter(|&x| f[x].is_some()).collect();
        let mut fibers: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for &x in &domain {
            fibers.entry(f[x].expect("in domain")).or_default().push(x);
        }
        Ok(Self {
            l,
            n,
            f,
            h,
            domain,
            fibers,
        })
    }

    /// A random mixture: a `pair_fraction` share of D is matched into twins
    /// with h(x′) = h(x) ⊕ d0, the rest is injective, and `excluded` points
    /// fall outside D.
    pub fn random<R: Rng + ?Sized>(
        l: usize,
        n: usize,
        pair_fraction: f64,
        d0: u64,
        excluded: usize,
        rng: &mut R,
    ) -> Self {
        let size = 1usize << l;
        let mut order: Vec<usize> = (0..size).collect();
        order.shuffle(rng);
        let mut f = vec![None; size];
        let mut h = vec![0u64; size];
        let (outside, inside) = order.split_at(excluded.min(size));
        let pairs = ((inside.len() as f64 * pair_fraction) as usize / 2).min(inside.len() / 2);
        let mut image = 0u64;
        for chunk in inside[..2 * pairs].chunks(2) {
            let label = rng.gen_range(0..1u64 << n);
            f[chunk[0]] = Some(image);
            f[chunk[1]] = Some(image);
            h[chunk[0]] = label;
            h[chunk[1]] = label ^ d0;
            image += 1;
        }
        for &x in &inside[2 * pairs..] {
            f[x] = Some(image);
            h[x] = rng.gen_range(0..1u64 << n);
            image += 1;
        }
        for &x in outside {
            h[x] = rng.gen_range(0..1u64 << n);
        }
        Self::new(l, n, f, h).expect("sizes are consistent")
    }

    pub fn register_len(&self) -> usize {
        self.l
    }

    pub fn label_len(&self) -> usize {
        self.n
    }

    pub fn domain_size(&self) -> usize {
        self.domain.len()
    }

    pub fn fibers(&self) -> &BTreeMap<u64, Vec<usize>> {
        &self.fibers
    }

    pub fn label(&self, x: usize) -> u64 {
        self.h[x]
    }

    pub fn image(&self, x: usize) -> Option<u64> {
        self.f[x]
    }
}

impl CircuitInstance for SyntheticFunction {
    type Point = usize;

    fn register_len(&self) -> usize {
        self.l
    }

    fn sample(&self, rng: &mut dyn RngCore) -> usize {
        self.domain[rng.gen_range(0..self.domain.len())]
    }

    fn eval(&self, x: &usize) -> Vec<u64> {
        vec![self.f[*x].expect("sampled inside the domain")]
    }

    fn encode(&self, x: &usize) -> Vec<bool> {
        bits::from_u64(*x as u64, self.l)
    }

    fn h(&self, x: &usize) -> Vec<bool> {
        bits::from_u64(self.h[*x], self.n)
    }

    fn preimages(&self, y: &[u64]) -> Option<Vec<usize>> {
        match y {
            [v] => Some(self.fibers.get(v).cloned().unwrap_or_default()),
            _ => None,
        }
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
pub fn fwht(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Post-measurement register state for one image y: for each label present,
/// the transformed amplitude table over all b.
#[derive(Debug, Clone)]
pub struct Branch {
    pub y: u64,
    pub preimages: Vec<usize>,
    tables: Vec<(u64, Vec<f64>)>,
    scale: f64,
}

impl Branch {
    /// P(b | y) for every b.
    pub fn b_distribution(&self) -> Vec<f64> {
        let len = self.tables[0].1.len();
        (0..len)
            .map(|b| self.tables.iter().map(|(_, t)| t[b] * t[b]).sum::<f64>() * self.scale)
            .collect()
    }

    /// Normalized label-register amplitudes after outcome b, or `None` if b has probability 0.
    pub fn residual(&self, b: usize, n: usize) -> Option<Vec<f64>> {
        let mut out = vec![0.0; 1 << n];
        for (label, t) in &self.tables {
            out[*label as usize] = t[b];
        }
        let norm = out.iter().map(|a| a * a).sum::<f64>().sqrt();
        (norm > 1e-12).then(|| out.into_iter().map(|a| a / norm).collect())
    }
}

pub struct DenseSimulator<'a> {
    f: &'a SyntheticFunction,
}

impl<'a> DenseSimulator<'a> {
    pub fn new(f: &'a SyntheticFunction) -> Self {
        Self { f }
    }

    /// Measurement of the image register: P(y) = |f⁻¹(y)| / |D|.
    pub fn image_distribution(&self) -> Vec<(u64, f64)> {
        let total = self.f.domain_size() as f64;
        self.f
            .fibers
            .iter()
            .map(|(&y, pre)| (y, pre.len() as f64 / total))
            .collect()
    }

    pub fn branch(&self, y: u64) -> Option<Branch> {
        let pre = self.f.fibers.get(&y)?.clone();
        let size = 1usize << self.f.l;
        let mut by_label: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for &x in &pre {
            by_label
                .entry(self.f.h[x])
                .or_insert_with(|| vec![0.0; size])[x] += 1.0;
        }
        let tables: Vec<(u64, Vec<f64>)> = by_label
            .into_iter()
            .map(|(label, mut v)| {
                fwht(&mut v);
                (label, v)
            })
            .collect();
        // |x⟩ amplitudes 1/√|f⁻¹(y)| and the Hadamard layer's 2^{-L/2}
        let scale = 1.0 / (pre.len() as f64 * size as f64);
        Some(Branch {
            y,
            preimages: pre,
            tables,
            scale,
        })
    }

    fn outcome(&self, branch: &Branch, b: usize) -> CircuitOutcome {
        let n = self.f.n;
        let state = match branch.preimages.as_slice() {
            [x] => OutcomeState::Singleton(bits::from_u64(self.f.h[*x], n)),
            [x0, x1] => {
                let residual = branch.residual(b, n).expect("sampled outcomes have weight");
                OutcomeState::Hghz(description_from_residual(
                    &residual,
                    self.f.h[*x0],
                    self.f.h[*x1],
                    n,
                ))
            }
            _ => OutcomeState::Abort,
        };
        CircuitOutcome {
            y: vec![branch.y],
            b: bits::from_u64(b as u64, self.f.l),
            state,
        }
    }

    /// One shot: sample y, build its branch, sample b.
    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> CircuitOutcome {
        let y = sample_weighted(&self.image_distribution(), rng);
        let branch = self.branch(y).expect("sampled image has a fiber");
        let b = sample_index(&branch.b_distribution(), rng);
        self.outcome(&branch, b)
    }

    /// `count` shots grouped by image so each branch is transformed once.
    /// Deterministic in `seed` regardless of thread count.
    pub fn shots(&self, count: usize, seed: u64) -> Vec<CircuitOutcome> {
        let images = self.image_distribution();
        let mut r = rng::labeled(seed, "dense-images", 0);
        let ys: Vec<u64> = (0..count)
            .map(|_| sample_weighted(&images, &mut r))
            .collect();
        let mut slots: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, &y) in ys.iter().enumerate() {
            slots.entry(y).or_default().push(i);
        }
        let mut groups: Vec<(u64, Vec<usize>)> = slots.into_iter().collect();
        groups.sort_unstable_by_key(|(y, _)| *y);
        let filled: Vec<Vec<(usize, CircuitOutcome)>> = groups
            .par_iter()
            .map(|(y, idx)| {
                let branch = self.branch(*y).expect("sampled image has a fiber");
                let probs = branch.b_distribution();
                let mut r = rng::labeled(seed, "dense-b", *y);
                idx.iter()
                    .map(|&i| (i, self.outcome(&branch, sample_index(&probs, &mut r))))
                    .collect()
            })
            .collect();
        let mut out: Vec<Option<CircuitOutcome>> = vec![None; count];
        for (i, o) in filled.into_iter().flatten() {
            out[i] = Some(o);
        }
        out.into_iter()
            .map(|o| o.expect("every shot filled"))
            .collect()
    }
}

/// Reads (α, d, d′) off a two-label residual; equal labels give α = 0.
fn description_from_residual(residual: &[f64], h0: u64, h1: u64, n: usize) -> HiddenGhzDescription {
    let d = bits::from_u64(h0, n);
    let dp = bits::from_u64(h1, n);
    let alpha = h0 != h1 && residual[h0 as usize] * residual[h1 as usize] < 0.0;
    HiddenGhzDescription::new(alpha, d, dp)
}

fn sample_weighted<R: Rng + ?Sized>(items: &[(u64, f64)], rng: &mut R) -> u64 {
    let mut u: f64 = rng.gen();
    for &(y, p) in items {
        if u < p {
            return y;
        }
        u -= p;
    }
    items.last().expect("nonempty").0
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let mut u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            if u < p {
                return i;
            }
            u -= p;
            last = i;
        }
    }
    last
}

/// |⟨a|b⟩|² for real vectors.
pub fn fidelity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    dot * dot / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::run_server_circuit_exact;

    #[test]
    fn fwht_matches_definition() {
        let mut r = rng::stream(1, 0);
        let v: Vec<f64> = (0..16).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut t = v.clone();
        fwht(&mut t);
        for (b, &tb) in t.iter().enumerate() {
            let direct: f64 = v
                .iter()
                .enumerate()
                .map(|(x, &a)| if (b & x).count_ones() % 2 == 0 { a } else { -a })
                .sum();
            assert!((tb - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn twin_residuals_match_the_closed_form() {
        let f = SyntheticFunction::random(8, 2, 0.8, 0b11, 5, &mut rng::stream(2, 0));
        let sim = DenseSimulator::new(&f);
        for (&y, pre) in f.fibers() {
            let branch = sim.branch(y).unwrap();
            let probs = branch.b_distribution();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if pre.len() != 2 {
                continue;
            }
            for b in 0..1usize << 8 {
                let expect = super::super::hghz_from_preimages(
                    &f.encode(&pre[0]),
                    &f.encode(&pre[1]),
                    f.h(&pre[0]),
                    f.h(&pre[1]),
                    &bits::from_u64(b as u64, 8),
                );
                let got = branch.residual(b, 2).unwrap();
                assert!(fidelity(&got, &expect.amplitudes()) > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn injective_function_gives_singletons_and_uniform_b() {
        let f = SyntheticFunction::random(6, 2, 0.0, 0, 0, &mut rng::stream(3, 0));
        let sim = DenseSimulator::new(&f);
        for &(y, _) in &sim.image_distribution() {
            let probs = sim.branch(y).unwrap().b_distribution();
            assert!(probs.iter().all(|&p| (p - 1.0 / 64.0).abs() < 1e-12));
        }
        for o in sim.shots(200, 4) {
            assert!(matches!(o.state, OutcomeState::Singleton(_)));
        }
        let mut r = rng::stream(3, 1);
        for _ in 0..200 {
            assert!(matches!(
                run_server_circuit_exact(&f, &mut r).state,
                OutcomeState::Singleton(_)
            ));
        }
    }

    #[test]
    fn equal_labels_restrict_b() {
        let f = SyntheticFunction::random(6, 2, 1.0, 0, 0, &mut rng::stream(5, 0));
        let sim = DenseSimulator::new(&f);
        for o in sim.shots(500, 6) {
            let OutcomeState::Hghz(s) = &o.state else {
                panic!()
            };
            assert!(!s.alpha);
            let pre = f.preimages(&o.y).unwrap();
            let delta = bits::xor(&f.encode(&pre[0]), &f.encode(&pre[1]));
            assert!(!bits::inner(&o.b, &delta));
        }
    }

    #[test]
    fn shots_are_seed_deterministic() {
        let f = SyntheticFunction::random(7, 3, 0.5, 0b101, 3, &mut rng::stream(7, 0));
        let sim = DenseSimulator::new(&f);
        assert_eq!(sim.shots(300, 9), sim.shots(300, 9));
        let single = sim.shot(&mut rng::stream(7, 1));
        assert_eq!(single.b.len(), 7);
    }

    #[test]
    fn rejects_large_registers() {
        assert_eq!(
            SyntheticFunction::new(15, 1, vec![], vec![]),
            Err(QsimError::TooLarge(15))
        );
    }
}
