//! The two concrete attacks: support distinguishing against canonical GHZ
//! protocols without support disclosure, and the per-party α leak that
//! CombineAlpha prevents.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::combine::{combine_alpha, ApplicantInput, ServerInput};
use super::runs::{run_blind_can_sup, RunOptions};
use super::ProtocolError;
use crate::bits;
use crate::dist::{self, DistKey};
use crate::family::{self, Params};
use crate::qsim::{run_server_circuit_exact, DistInstance, HiddenGhzDescription, OutcomeState};
use crate::rng;
use crate::stats::{binomial_sigma, Proportion};

/// Where the measured state comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateModel {
    /// Output of an engine run of BLIND^sup_can: off-support qubits carry
    /// independent h(x) bits.
    #[default]
    Engine,
    /// Idealized correct protocol whose off-support qubits all agree.
    Aligned,
}

/// The distinguisher's two candidate supports: all ones, and ones on the
/// first half only.
pub fn blind_can_supports(n: usize) -> [Vec<bool>; 2] {
    [vec![true; n], (0..n).map(|i| i < n.div_ceil(2)).collect()]
}

/// Guess after a computational-basis measurement: any disagreement means
/// some qubit is off-support, so c = 1; otherwise a coin flip.
fn blind_can_guess(z: &[bool], coin: bool) -> bool {
    if z.iter().all(|&v| v == z[0]) {
        coin
    } else {
        true
    }
}

fn constant(bits: impl Iterator<Item = bool>) -> bool {
    let v: Vec<bool> = bits.collect();
    v.windows(2).all(|w| w[0] == w[1])
}

/// Probability of observing `z` after measuring the final state of branch `d0`.
fn outcome_probability(d0: &[bool], z: &[bool], model: StateModel) -> f64 {
    let on: Vec<bool> = (0..d0.len()).filter(|&i| d0[i]).map(|i| z[i]).collect();
    let off: Vec<bool> = (0..d0.len()).filter(|&i| !d0[i]).map(|i| z[i]).collect();
    let ghz = match on.len() {
        0 => 1.0,
        _ if constant(on.iter().copied()) => 0.5,
        _ => 0.0,
    };
    let rest = match model {
        StateModel::Engine => 0.5f64.powi(off.len() as i32),
        StateModel::Aligned => match off.len() {
            0 => 1.0,
            _ if constant(off.iter().copied()) => 0.5,
            _ => 0.0,
        },
    };
    ghz * rest
}

/// Exact win probability by enumerating every measurement outcome of both branches.
pub fn blind_can_p_star(d0: &[Vec<bool>; 2], model: StateModel) -> f64 {
    let n = d0[0].len();
    assert!(n <= 20, "enumeration over 2^{n} outcomes");
    let mut win = 0.0;
    for code in 0..1u64 << n {
        let z = bits::from_u64(code, n);
        for (c, d) in d0.iter().enumerate() {
            let p = outcome_probability(d, &z, model);
            if p == 0.0 {
                continue;
            }
            let guess_c = if constant(z.iter().copied()) {
                0.5
            } else if c == 1 {
                1.0
            } else {
                0.0
            };
            win += 0.5 * p * guess_c;
        }
    }
    win
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindCanReport {
    pub n: usize,
    pub model: StateModel,
    pub d0: [String; 2],
    pub win: Proportion,
    pub p_star: f64,
    pub sigma: f64,
    pub within_3_sigma: bool,
    /// Protocol runs discarded because some applicant aborted locally.
    pub reruns: u64,
}

fn measured_state(
    d0: &[bool],
    local: &Params,
    model: StateModel,
    seed: u64,
    rng: &mut dyn RngCore,
) -> Result<(HiddenGhzDescription, u64), ProtocolError> {
    match model {
        StateModel::Aligned => {
            let a: bool = rng.gen();
            let d = d0.iter().map(|&s| if s { false } else { a }).collect();
            let d2 = d0.iter().map(|&s| if s { true } else { a }).collect();
            Ok((HiddenGhzDescription::new(false, d, d2), 0))
        }
        StateModel::Engine => {
            // honest reruns until no local abort; the adversary sees only successes
            for attempt in 0..10_000u64 {
                let (_, out, _) = run_blind_can_sup(
                    d0,
                    local,
                    RunOptions::new(seed.wrapping_add(attempt << 32)),
                )?;
                if out.aborted {
                    continue;
                }
                match out.state {
                    Some(OutcomeState::Hghz(s)) => return Ok((s, attempt)),
                    _ => {
                        return Err(ProtocolError::Unexpected(
                            "non-aborting run without a twin state",
                        ))
                    }
                }
            }
            Err(ProtocolError::Unexpected("every rerun aborted"))
        }
    }
}

/// Runs the support distinguisher `trials` times against the chosen state model.
pub fn attack_blind_can(
    d0: &[Vec<bool>; 2],
    local: &Params,
    model: StateModel,
    trials: u64,
    seed: u64,
) -> Result<BlindCanReport, ProtocolError> {
    let n = d0[0].len();
    if n < 2 || d0[1].len() != n {
        return Err(ProtocolError::Config(
            "need two supports of equal length n >= 2".into(),
        ));
    }
    let results: Vec<(bool, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::labeled(seed, "attack-blind-can", t);
            let c: bool = r.gen();
            let run_seed = r.next_u64();
            let (state, reruns) = measured_state(&d0[c as usize], local, model, run_seed, &mut r)?;
            let z = state.measure_computational(&mut r);
            Ok((blind_can_guess(&z, r.gen()) == c, reruns))
        })
        .collect::<Result<_, ProtocolError>>()?;
    let wins = results.iter().filter(|r| r.0).count() as u64;
    let p_star = blind_can_p_star(d0, model);
    let win = Proportion::new(wins, trials, 0.99);
    let sigma = binomial_sigma(p_star, trials);
    Ok(BlindCanReport {
        n,
        model,
        d0: [bits::to_string(&d0[0]), bits::to_string(&d0[1])],
        within_3_sigma: (win.estimate - p_star).abs() <= 3.0 * sigma,
        win,
        p_star,
        sigma,
        reruns: results.iter().map(|r| r.1).sum(),
    })
}

/// Exact win probability of the α-leak rule for one target key. A supported
/// target always matches, so the rule falls back to a coin. An unsupported
/// one mismatches half the time when its image has a twin and is then ruled
/// out; without a twin nothing leaks and the coin decides.
pub fn alpha_leak_exact_win(target: bool, twin_probability: f64) -> f64 {
    if target {
        0.5
    } else {
        twin_probability * (0.5 + 0.5 * 0.5) + (1.0 - twin_probability) * 0.5
    }
}

/// Win rate with a uniform target and twins guaranteed: 0.625.
pub fn alpha_leak_twin_limit() -> f64 {
    0.5 * alpha_leak_exact_win(true, 1.0) + 0.5 * alpha_leak_exact_win(false, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaLeakReport {
    pub trials: u64,
    pub unprotected: Proportion,
    pub protected: Proportion,
    pub oracle: Proportion,
    /// 2·Pr[win] − 1 for each variant.
    pub advantage_unprotected: f64,
    pub advantage_protected: f64,
    pub advantage_oracle: f64,
    /// Mean over trials of the exact per-key advantage.
    pub exact_unprotected_advantage: f64,
    /// Advantage when every image has a twin.
    pub twin_limit_advantage: f64,
    pub sigma_advantage: f64,
    pub unprotected_within_3_sigma: bool,
    pub protected_within_3_sigma: bool,
    /// Trials whose single-party run had no twin.
    pub singleton_runs: u64,
}

/// Leak rule: differing bits prove the target unsupported; otherwise guess.
fn leak_guess(measured: bool, compared: Option<bool>, coin: bool) -> bool {
    match compared {
        Some(a) if a != measured => false,
        _ => coin,
    }
}

struct LeakTrial {
    exact: f64,
    unprotected: bool,
    protected: bool,
    oracle: bool,
    singleton: bool,
}

fn alpha_leak_trial(local: &Params, seed: u64, t: u64) -> Result<LeakTrial, ProtocolError> {
    let mut r = rng::labeled(seed, "attack-alpha-leak", t);
    let target: bool = r.gen();
    let (k0, t0) = dist::gen_loc_checked(local, target, &mut r)?;
    let (k1, t1) = dist::gen_loc_checked(local, false, &mut r)?;

    // the server runs the circuit on the target's key alone
    let single = DistKey::new(vec![k0.clone()])?;
    let traps0 = [t0.clone()];
    let out = run_server_circuit_exact(&DistInstance::new(&single, &traps0), &mut r);
    let (measured, singleton) = match &out.state {
        OutcomeState::Hghz(s) => (s.measure_hadamard(&mut r)[0], false),
        _ => (r.gen(), true),
    };
    let (b_c, parts) = single
        .codec()
        .split(&out.b)
        .ok_or(ProtocolError::Unexpected("register split"))?;
    let leaked = dist::part_alpha_loc(0, &t0, &out.y, b_c, parts[0]);
    let unprotected = leak_guess(measured, leaked, r.gen()) == target;

    // with CombineAlpha the server only sees the share of a corrupted, unsupported applicant
    let key = DistKey::new(vec![k0.clone(), k1.clone()])?;
    let traps = [t0.clone(), t1.clone()];
    let full = run_server_circuit_exact(&DistInstance::new(&key, &traps), &mut r);
    let apps: Vec<ApplicantInput> = [(k0, t0, target), (k1, t1, false)]
        .into_iter()
        .map(|(key, trapdoor, d0_bit)| ApplicantInput {
            key,
            trapdoor,
            d0_bit,
            y: full.y.clone(),
            b: full.b.clone(),
            r: bits::random(2, &mut r),
        })
        .collect();
    let res = combine_alpha(
        &ServerInput {
            key,
            y: full.y,
            b: full.b,
        },
        &apps,
        &mut r,
    );
    let protected = leak_guess(measured, res.shares[1], r.gen()) == target;

    let exact = alpha_leak_exact_win(target, family::twin_fraction_exact(&traps[0]));
    Ok(LeakTrial {
        exact,
        unprotected,
        protected,
        oracle: true,
        singleton,
    })
}

pub fn attack_alpha_leak(
    local: &Params,
    trials: u64,
    seed: u64,
) -> Result<AlphaLeakReport, ProtocolError> {
    if local.n != 1 {
        return Err(ProtocolError::Config(
            "local parameters must have n = 1".into(),
        ));
    }
    let results: Vec<LeakTrial> = (0..trials)
        .into_par_iter()
        .map(|t| alpha_leak_trial(local, seed, t))
        .collect::<Result<_, _>>()?;
    let count = |f: fn(&LeakTrial) -> bool| results.iter().filter(|r| f(r)).count() as u64;
    let unprotected = Proportion::new(count(|r| r.unprotected), trials, 0.99);
    let protected = Proportion::new(count(|r| r.protected), trials, 0.99);
    let oracle = Proportion::new(count(|r| r.oracle), trials, 0.99);
    let exact_win = results.iter().map(|r| r.exact).sum::<f64>() / trials.max(1) as f64;
    let exact = 2.0 * exact_win - 1.0;
    let adv = |p: &Proportion| 2.0 * p.estimate - 1.0;
    // the advantage is an affine image of the win rate, so its σ doubles
    let sigma_adv = |p: f64| 2.0 * binomial_sigma(p, trials);
    Ok(AlphaLeakReport {
        trials,
        advantage_unprotected: adv(&unprotected),
        advantage_protected: adv(&protected),
        advantage_oracle: adv(&oracle),
        exact_unprotected_advantage: exact,
        twin_limit_advantage: 2.0 * alpha_leak_twin_limit() - 1.0,
        sigma_advantage: sigma_adv(exact_win),
        unprotected_within_3_sigma: (adv(&unprotected) - exact).abs() <= 3.0 * sigma_adv(exact_win),
        protected_within_3_sigma: adv(&protected).abs() <= 3.0 * sigma_adv(0.5),
        unprotected,
        protected,
        oracle,
        singleton_runs: count(|r| r.singleton),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_star_closed_forms() {
        // engine model: c = 1 shows a disagreement unless n/2 free bits match the GHZ value
        for n in [2usize, 4, 6] {
            let free = 0.5f64.powi((n - n.div_ceil(2)) as i32);
            let expect = 0.25 + 0.5 * ((1.0 - free) + free * 0.5);
            assert!(
                (blind_can_p_star(&blind_can_supports(n), StateModel::Engine) - expect).abs()
                    < 1e-12
            );
        }
        assert!(
            (blind_can_p_star(&blind_can_supports(4), StateModel::Aligned) - 0.625).abs() < 1e-12
        );
        let same = [vec![true; 4], vec![true; 4]];
        assert_eq!(blind_can_p_star(&same, StateModel::Engine), 0.5);
    }

    #[test]
    fn blind_can_small_batch() {
        let p = Params::toy_default(1);
        let r = attack_blind_can(&blind_can_supports(4), &p, StateModel::Engine, 400, 3).unwrap();
        assert!(r.reruns > 0);
        assert!((r.win.estimate - r.p_star).abs() <= 4.0 * r.sigma);
    }

    #[test]
    fn alpha_leak_small_batch() {
        assert_eq!(alpha_leak_twin_limit(), 0.625);
        let r = attack_alpha_leak(&Params::toy_default(1), 400, 5).unwrap();
        assert_eq!(r.advantage_oracle, 1.0);
        assert!(r.advantage_unprotected > r.advantage_protected);
    }
}
