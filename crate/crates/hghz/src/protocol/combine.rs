//! CombineAlpha as an ideal functionality.

use rand::Rng;

use crate::dist::{self, DistKey, LocalKey, LocalTrapdoor};

#[derive(Debug, Clone)]
pub struct ServerInput {
    pub key: DistKey,
    pub y: Vec<u64>,
    pub b: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ApplicantInput {
    pub key: LocalKey,
    pub trapdoor: LocalTrapdoor,
    pub d0_bit: bool,
    pub y: Vec<u64>,
    pub b: Vec<bool>,
    /// Randomizer r^{(i)} ∈ {0,1}^n.
    pub r: Vec<bool>,
}

#[derive(Debug, Clone)]
pub enum CombineInput {
    Server(ServerInput),
    Applicant(usize, ApplicantInput),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombineOutput {
    /// ⊤ for the server, or ⊥ for everyone.
    pub accepted: bool,
    pub shares: Vec<Option<bool>>,
}

impl CombineOutput {
    fn reject(n: usize) -> Self {
        Self {
            accepted: false,
            shares: vec![None; n],
        }
    }
}

/// Checks the inputs are consistent and honestly prepared, then returns
/// XOR-shares of α = ⊕_i PartAlpha_Loc whose XOR over the support S is α.
/// If any party's PartAlpha_Loc aborts, α is drawn uniformly instead.
pub fn combine_alpha<R: Rng + ?Sized>(
    server: &ServerInput,
    apps: &[ApplicantInput],
    rng: &mut R,
) -> CombineOutput {
    let n = apps.len();
    let consistent = server.key.parties() == n
        && apps
            .iter()
            .zip(server.key.parts())
            .all(|(a, k)| a.key == *k && a.y == server.y && a.b == server.b && a.r.len() == n)
        && apps
            .iter()
            .all(|a| dist::check_trapdoor_dist(a.d0_bit, &a.trapdoor, &a.key));
    if !consistent {
        return CombineOutput::reject(n);
    }
    let codec = server.key.codec();
    let Some((b_c, b_parts)) = codec.split(&server.b) else {
        return CombineOutput::reject(n);
    };
    let parts: Option<Vec<bool>> = apps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            dist::part_alpha_loc(
                i,
                &a.trapdoor,
                server.key.block(&server.y, i)?,
                b_c,
                b_parts[i],
            )
        })
        .collect();
    let alpha = match parts {
        Some(p) => p.into_iter().fold(false, |acc, x| acc ^ x),
        None => rng.gen(),
    };
    let mut shares: Vec<bool> = (0..n)
        .map(|i| apps.iter().fold(false, |acc, a| acc ^ a.r[i]))
        .collect();
    let support: Vec<usize> = (0..n).filter(|&i| apps[i].d0_bit).collect();
    if let Some(&j) = support.last() {
        let current = support.iter().fold(false, |acc, &i| acc ^ shares[i]);
        shares[j] ^= current ^ alpha;
    }
    CombineOutput {
        accepted: true,
        shares: shares.into_iter().map(Some).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::sample_dist;
    use crate::family::Params;
    use crate::{bits, rng};

    fn setup(d0: &[bool], seed: u64) -> (ServerInput, Vec<ApplicantInput>, bool) {
        let p = Params::toy_default(1);
        let mut r = rng::stream(seed, 0);
        let (key, traps) = dist::gen_dist(&p, d0, &mut r).unwrap();
        // retry until the sampled point has a twin so α is defined
        loop {
            let x = sample_dist(&p, d0.len(), &mut r);
            let y = dist::eval_dist(&key, &x).unwrap();
            let Some((x0, x1)) = dist::invert_dist(&key, &traps, &y) else {
                continue;
            };
            let codec = key.codec();
            let b = bits::random(codec.len(), &mut r);
            let alpha = bits::inner(&b, &bits::xor(&codec.encode(&x0), &codec.encode(&x1)));
            let apps = key
                .parts()
                .iter()
                .zip(&traps)
                .zip(d0)
                .map(|((k, t), &bit)| ApplicantInput {
                    key: k.clone(),
                    trapdoor: t.clone(),
                    d0_bit: bit,
                    y: y.clone(),
                    b: b.clone(),
                    r: bits::random(d0.len(), &mut r),
                })
                .collect();
            return (ServerInput { key, y, b }, apps, alpha);
        }
    }

    #[test]
    fn honest_shares_recombine_to_alpha() {
        let d0 = bits::parse("1011").unwrap();
        for seed in 0..10 {
            let (s, a, alpha) = setup(&d0, seed);
            let out = combine_alpha(&s, &a, &mut rng::stream(seed, 9));
            assert!(out.accepted);
            let xor = [0, 2, 3]
                .iter()
                .fold(false, |acc, &i| acc ^ out.shares[i].unwrap());
            assert_eq!(xor, alpha);
        }
    }

    #[test]
    fn mismatched_image_rejects_everyone() {
        let (s, mut a, _) = setup(&[true, false, true], 1);
        a[1].y[0] ^= 1;
        let out = combine_alpha(&s, &a, &mut rng::stream(1, 9));
        assert!(!out.accepted);
        assert!(out.shares.iter().all(Option::is_none));
    }

    #[test]
    fn empty_support_leaves_shares_unconstrained() {
        let (s, a, _) = setup(&[false, false], 2);
        let out = combine_alpha(&s, &a, &mut rng::stream(2, 9));
        let expect: Vec<Option<bool>> = (0..2).map(|i| Some(a[0].r[i] ^ a[1].r[i])).collect();
        assert_eq!(out.shares, expect);
    }

    #[test]
    fn wrong_support_bit_fails_the_check() {
        let (s, mut a, _) = setup(&[true, true], 3);
        a[0].d0_bit = false;
        assert!(!combine_alpha(&s, &a, &mut rng::stream(3, 9)).accepted);
    }
}
