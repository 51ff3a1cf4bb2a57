//! Acceptance suite: one PASS/FAIL line per criterion, each judged against
//! values computed here rather than read back from the library. Runs without
//! the test harness so the lines always reach stdout.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use hghz::bits;
use hghz::dist::{self, DistKey, DistPoint, LocalBlock};
use hghz::family::{self, CheckFailure, DomainPoint, Params};
use hghz::modq::{IntMatrix, Modulus, ZqMatrix};
use hghz::mp;
use hghz::protocol::attacks::{self, StateModel};
use hghz::protocol::games::{self, Adversary, GameKind, GameSetup, Violation};
use hghz::protocol::runs::{self, RunOutcome};
use hghz::protocol::{ApplicantSpec, RunOptions, TransparentNizk};
use hghz::qsim::dense::{fidelity, DenseSimulator, SyntheticFunction};
use hghz::qsim::{hghz_from_preimages, run_server_circuit_exact, CircuitOutcome, OutcomeState};
use hghz::rng;
use hghz::stats::clopper_pearson;
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let v = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    verdict(
        v.pass && in_time,
        format!(
            "{} [{:.2}s of {}s{}]",
            v.detail,
            took.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", too slow" }
        ),
    )
}

// ---------------------------------------------------------------------- 1

fn planner_anchor() -> Verdict {
    let big = family::plan_params(6_000_000, 1.0 / 3.0, 3).expect("valid inputs");
    // 181³ = 5 929 741 ≤ 6·10⁶ < 182³ = 6 028 568
    let k_ok = big.derived.k == 181 && 181u64.pow(3) <= 6_000_000 && 182u64.pow(3) > 6_000_000;
    let delta = big.derived.log2_delta_m;
    let delta_ok = delta.is_some_and(|d| d < -80.0);
    let small = family::plan_params(700_000, 1.0 / 3.0, 3).expect("valid inputs");
    let tiny = family::plan_params(100, 1.0 / 3.0, 2).expect("valid inputs");
    verdict(
        k_ok && delta_ok
            && big.feasible
            && small.feasible
            && !tiny.feasible
            && tiny.first_violation.is_some(),
        format!(
            "k={} log2(delta_m)={:?} feasible(6e6)={} feasible(7e5)={} feasible(100)={} ({:?})",
            big.derived.k, delta, big.feasible, small.feasible, tiny.feasible, tiny.first_violation
        ),
    )
}

// ---------------------------------------------------------------------- 2

fn gadget_inversion() -> Verdict {
    let q = Modulus::new(4).unwrap();
    let k = 4usize;
    let mut failures = 0u64;
    let mut cases = 0u64;
    // N = 2 so the block-diagonal gadget is exercised too; covers every s ∈ Z_16 per block
    for s0 in 0..16u64 {
        for s1 in 0..16u64 {
            for noise in 0..3u64.pow(2 * k as u32) {
                let mut rest = noise;
                let y: Vec<u64> = (0..2 * k)
                    .map(|row| {
                        let e = (rest % 3) as i64 - 1;
                        rest /= 3;
                        let s = if row < k { s0 } else { s1 };
                        ((((1u64 << (row % k)) * s) as i64 + e).rem_euclid(16)) as u64
                    })
                    .collect();
                cases += 1;
                failures += u64::from(mp::invert_gadget(&y, &q) != [s0, s1]);
            }
        }
    }
    for s in 0..16u64 {
        for noise in 0..3u64.pow(k as u32) {
            let mut rest = noise;
            let y: Vec<u64> = mp::gadget_vec(&q)
                .iter()
                .map(|&g| {
                    let e = (rest % 3) as i64 - 1;
                    rest /= 3;
                    ((g * s) as i64 + e).rem_euclid(16) as u64
                })
                .collect();
            cases += 1;
            failures += u64::from(mp::invert_small_gadget(&y, &q) != s);
        }
    }
    verdict(
        failures == 0,
        format!("{cases} (s, e) pairs with |e|_inf <= 1, {failures} failures"),
    )
}

// ---------------------------------------------------------------------- 3

/// Micro key with zero R and a single ±1 shift coordinate at `pos`.
fn micro_key(
    p: &Params,
    d0: &[bool],
    pos: Option<usize>,
    seed: u64,
) -> (family::HghzKey, family::HghzTrapdoor) {
    let q = p.modulus;
    let mut r = rng::stream(seed, 0);
    let a_hat = ZqMatrix::uniform(p.n_dim, p.n_dim, &q, &mut r);
    let a_l = ZqMatrix::uniform(p.n, p.n_dim, &q, &mut r);
    let zero_r = IntMatrix::zeros(p.n_dim * p.k() as usize, 2 * p.n_dim);
    let mut s0 = vec![0i64; p.n_dim];
    let mut e0 = vec![0i64; p.m_rows() + p.n];
    match pos {
        Some(0) => s0[0] = 1,
        Some(i) => e0[i - 1] = -1,
        None => {}
    }
    family::from_parts(p, &a_hat, &zero_r, &a_l, d0, &s0, &e0).unwrap()
}

/// Every point of the micro domain X = [−μ, μ]^{N+M+n} × {0,1} × {0,1}^n.
fn micro_domain(p: &Params) -> Vec<DomainPoint> {
    let q = p.modulus;
    let coords = p.n_dim + p.m_rows() + p.n;
    let side = 2 * p.mu + 1;
    let mut out = Vec::new();
    for idx in 0..side.pow(coords as u32) {
        for c in [false, true] {
            for d in 0..1u64 << p.n {
                let mut rest = idx;
                let mut v: Vec<u64> = (0..coords)
                    .map(|_| {
                        let x = (rest % side) as i64 - p.mu as i64;
                        rest /= side;
                        q.from_i64(x)
                    })
                    .collect();
                let e = v.split_off(p.n_dim);
                out.push(DomainPoint {
                    s: v,
                    e,
                    c,
                    d: bits::from_u64(d, p.n),
                });
            }
        }
    }
    out
}

fn micro_exhaustive() -> Verdict {
    let p = Params::micro(1, 0.4).unwrap();
    if p.n_dim != 1 || p.k() != 4 || p.n != 1 || p.mu != 1 {
        return verdict(
            false,
            format!(
                "micro params drifted: N={} k={} n={} mu={}",
                p.n_dim,
                p.k(),
                p.n,
                p.mu
            ),
        );
    }
    let domain = micro_domain(&p);
    let side = (2 * p.mu + 1) as f64;
    let mut notes = Vec::new();
    let mut pass = true;
    for (case, (d0, pos)) in [
        (true, None),
        (true, Some(0)),
        (false, Some(3)),
        (true, Some(6)),
    ]
    .into_iter()
    .enumerate()
    {
        let (key, t) = micro_key(&p, &[d0], pos, 40 + case as u64);
        if !family::check_trapdoor(&[d0], &t, &key) {
            return verdict(
                false,
                format!("crafted micro key {case} fails its own check"),
            );
        }
        let mut fibers: HashMap<Vec<u64>, Vec<&DomainPoint>> = HashMap::new();
        for x in &domain {
            fibers
                .entry(family::eval(&key, x).unwrap())
                .or_default()
                .push(x);
        }
        let max_fiber = fibers.values().map(Vec::len).max().unwrap_or(0);
        let mut twins = 0usize;
        let mut xor_ok = true;
        let mut invert_ok = true;
        for (y, pre) in &fibers {
            if pre.len() == 2 {
                twins += 2;
                xor_ok &= bits::xor(&pre[0].d, &pre[1].d) == vec![d0] && pre[0].c != pre[1].c;
                invert_ok &= family::invert(&t, y).is_some_and(|(a, b)| {
                    (a == *pre[0] && b == *pre[1]) || (a == *pre[1] && b == *pre[0])
                });
            }
        }
        let frac = twins as f64 / domain.len() as f64;
        // one nonzero shift coordinate leaves 2 of 3 positions with a partner
        let expect = if pos.is_some() {
            (side - 1.0) / side
        } else {
            1.0
        };
        let ok = max_fiber <= 2
            && xor_ok
            && invert_ok
            && frac >= 1.0 - p.delta_m()
            && (frac - expect).abs() < 1e-12;
        pass &= ok;
        notes.push(format!(
            "key{case}: max fiber {max_fiber}, twin fraction {frac:.4} (expect {expect:.4})"
        ));
    }
    notes.push(format!("|X|={}, delta_m={:.2}", domain.len(), p.delta_m()));
    verdict(pass, notes.join("; "))
}

// ---------------------------------------------------------------------- 4

fn toy_round_trips() -> Verdict {
    let p = Params::toy(2, 12, 3, 2.0).unwrap();
    let d0 = vec![true, false, true];
    let (key, t, _) = family::gen_checked(&p, &d0, &mut rng::stream(4, 0)).unwrap();
    let radius = family::margin_radius(&p);
    let trials = 100_000u64;
    let failures: u64 = (0..64u64)
        .map(|chunk| {
            let mut r = rng::labeled(4, "acceptance-roundtrip", chunk);
            let mut bad = 0u64;
            for _ in 0..trials / 64 + u64::from(chunk < trials % 64) {
                let x = family::sample_box(&p, radius, &mut r);
                let y = family::eval(&key, &x).unwrap();
                let ok = match family::invert(&t, &y) {
                    Some((a, b)) => {
                        (a == x || b == x)
                            && family::eval(&key, &a).ok().as_ref() == Some(&y)
                            && family::eval(&key, &b).ok().as_ref() == Some(&y)
                            && bits::xor(&a.d, &b.d) == d0
                    }
                    None => false,
                };
                bad += u64::from(!ok);
            }
            bad
        })
        .sum();
    let est = family::estimate_delta(&t, 100_000, 4);
    let upper = est.delta_hat.ci_high;
    verdict(
        failures == 0 && upper <= p.delta_m(),
        format!(
            "{trials} margin round trips, {failures} failures; delta_hat={:.4} 99% upper {:.4} <= delta_m {:.2}",
            est.delta_hat.estimate,
            upper,
            p.delta_m()
        ),
    )
}

// ---------------------------------------------------------------------- 5

fn parity(a: u64, b: u64) -> bool {
    (a & b).count_ones() % 2 == 1
}

/// P(b | y) straight from the amplitudes Σ_{x ∈ f⁻¹(y)} (−1)^{b·x} |x⟩|h(x)⟩ / √(|f⁻¹(y)| 2^L).
fn oracle_b_law(f: &SyntheticFunction, pre: &[usize]) -> Vec<f64> {
    let size = 1usize << f.register_len();
    let norm = (pre.len() * size) as f64;
    (0..size)
        .map(|b| {
            let mut by_label: HashMap<u64, f64> = HashMap::new();
            for &x in pre {
                *by_label.entry(f.label(x)).or_default() += if parity(b as u64, x as u64) {
                    -1.0
                } else {
                    1.0
                };
            }
            by_label.values().map(|a| a * a).sum::<f64>() / norm
        })
        .collect()
}

/// Label-register residual after (y, b), unnormalized.
fn oracle_residual(f: &SyntheticFunction, pre: &[usize], b: usize) -> Vec<f64> {
    let mut v = vec![0.0; 1 << f.label_len()];
    for &x in pre {
        v[f.label(x) as usize] += if parity(b as u64, x as u64) {
            -1.0
        } else {
            1.0
        };
    }
    v
}

fn histogram(shots: &[CircuitOutcome]) -> HashMap<(u64, u64), f64> {
    let mut h = HashMap::new();
    for s in shots {
        *h.entry((s.y[0], bits::to_u64(&s.b))).or_insert(0.0) += 1.0 / shots.len() as f64;
    }
    h
}

fn tv(a: &HashMap<(u64, u64), f64>, b: &HashMap<(u64, u64), f64>) -> f64 {
    let mut keys: Vec<&(u64, u64)> = a.keys().chain(b.keys()).collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

struct SimCheck {
    min_fidelity: f64,
    branches: usize,
    law_tv: f64,
    shot_tv: Option<f64>,
}

fn check_function(f: &SyntheticFunction, shots: Option<usize>, seed: u64) -> SimCheck {
    let sim = DenseSimulator::new(f);
    let l = f.register_len();
    let n = f.label_len();
    let total = f.domain_size() as f64;
    let mut min_fidelity = 1.0f64;
    let mut branches = 0;
    let mut law_tv = 0.0;
    for (&y, pre) in f.fibers() {
        let branch = sim.branch(y).expect("image has a fiber");
        let dense_law = branch.b_distribution();
        let oracle_law = oracle_b_law(f, pre);
        let py = pre.len() as f64 / total;
        law_tv += py
            * 0.5
            * dense_law
                .iter()
                .zip(&oracle_law)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        if pre.len() != 2 {
            continue;
        }
        let (x0, x1) = (pre[0], pre[1]);
        for (b, &pb) in oracle_law.iter().enumerate() {
            if pb < 1e-15 {
                continue;
            }
            branches += 1;
            let residual = branch.residual(b, n).expect("outcome has weight");
            let desc = hghz_from_preimages(
                &bits::from_u64(x0 as u64, l),
                &bits::from_u64(x1 as u64, l),
                bits::from_u64(f.label(x0), n),
                bits::from_u64(f.label(x1), n),
                &bits::from_u64(b as u64, l),
            );
            let exact = desc.amplitudes();
            let oracle = oracle_residual(f, pre, b);
            min_fidelity = min_fidelity
                .min(fidelity(&residual, &exact))
                .min(fidelity(&exact, &oracle));
        }
    }
    let shot_tv = shots.map(|count| {
        let dense = sim.shots(count, seed);
        let mut r = rng::labeled(seed, "acceptance-exact-sampler", 0);
        let exact: Vec<CircuitOutcome> = (0..count)
            .map(|_| run_server_circuit_exact(f, &mut r))
            .collect();
        tv(&histogram(&dense), &histogram(&exact))
    });
    SimCheck {
        min_fidelity,
        branches,
        law_tv,
        shot_tv,
    }
}

fn simulator_equivalence() -> Verdict {
    let mut r = rng::stream(5, 0);
    // (L, n, pair fraction, d0, excluded); d0 = 0 gives equal-label twins
    // shot comparisons need few (y, b) cells: two 10^5-shot histograms over
    // 128 equiprobable cells already differ by about 0.02 in TV from noise alone
    let shot_set = [
        (2, 1, 1.0, 1, 0),
        (3, 1, 1.0, 1, 0),
        (3, 2, 0.75, 3, 0),
        (3, 2, 1.0, 0, 0),
        (3, 3, 1.0, 5, 2),
    ];
    let wide_set = [
        (4, 2, 1.0, 2, 0),
        (4, 3, 0.75, 5, 2),
        (8, 3, 0.9, 5, 8),
        (10, 4, 0.8, 9, 0),
        (12, 4, 0.9, 6, 64),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (i, &(l, n, frac, d0, excl)) in shot_set.iter().chain(&wide_set).enumerate() {
        let f = SyntheticFunction::random(l, n, frac, d0, excl, &mut r);
        let shots = (i < shot_set.len()).then_some(100_000);
        let c = check_function(&f, shots, 50 + i as u64);
        let ok =
            c.min_fidelity >= 1.0 - 1e-9 && c.law_tv <= 0.02 && c.shot_tv.is_none_or(|t| t <= 0.02);
        pass &= ok;
        notes.push(format!(
            "L={l}: {} branches, min F={:.12}, law TV={:.1e}{}",
            c.branches,
            c.min_fidelity,
            c.law_tv,
            c.shot_tv
                .map(|t| format!(", shot TV={t:.4}"))
                .unwrap_or_default()
        ));
    }
    verdict(pass, notes.join("; "))
}

// ---------------------------------------------------------------------- 6

/// Canonical GHZ on the support of d0: α = 0, d constant on the support,
/// d′ its complement there, and d = d′ off the support.
fn canonical_on(d0: &[bool], out: &RunOutcome) -> bool {
    let Some(OutcomeState::Hghz(desc)) = &out.state else {
        return false;
    };
    if desc.alpha || desc.d.len() != d0.len() {
        return false;
    }
    let lead = d0.iter().position(|&s| s).map(|i| desc.d[i]);
    (0..d0.len()).all(|i| {
        if d0[i] {
            Some(desc.d[i]) == lead && desc.d_prime[i] != desc.d[i]
        } else {
            desc.d[i] == desc.d_prime[i]
        }
    })
}

fn end_to_end() -> Verdict {
    let local = Params::toy_default(1);
    let d0 = vec![true, false, true, true];
    let runs_each = 1000u64;

    // δ̂ over fresh local keys with the same support bits, composed over n parties
    let keys_per_party = 64u64;
    let (mut fails, mut trials) = (0u64, 0u64);
    for (i, &bit) in d0.iter().enumerate() {
        for j in 0..keys_per_party {
            let mut r = rng::labeled(6, "acceptance-delta-keys", (i as u64) << 32 | j);
            let (_, t) = dist::gen_loc_checked(&local, bit, &mut r).unwrap();
            let est = family::estimate_delta(&t, 1000, r.gen());
            fails += est.delta_hat.successes;
            trials += est.delta_hat.trials;
        }
    }
    let delta = fails as f64 / trials as f64;
    let (_, delta_hi) = clopper_pearson(fails, trials, 0.99);
    let n = d0.len() as i32;
    let composed = 1.0 - (1.0 - delta).powi(n);
    let composed_hi = 1.0 - (1.0 - delta_hi).powi(n);
    let sigma = (composed * (1.0 - composed) / runs_each as f64).sqrt();
    let bound = composed_hi + 3.0 * sigma;

    let nizk = TransparentNizk::new(6);
    let specs: Vec<ApplicantSpec> = d0.iter().map(|&b| ApplicantSpec::honest(b)).collect();
    let mut notes = vec![format!(
        "delta_hat={delta:.4}, delta'={composed:.4}, bound={bound:.4}"
    )];
    let mut pass = true;
    for name in ["can_sup", "auth_dist"] {
        let (mut aborts, mut bad) = (0u64, 0u64);
        for i in 0..runs_each {
            let opts = RunOptions::new(rng::stream_id(name, i) ^ 6);
            let out = match name {
                "can_sup" => runs::run_blind_can_sup(&d0, &local, opts).unwrap().1,
                _ => {
                    runs::run_auth_blind_dist_can(&specs, &nizk, &local, opts)
                        .unwrap()
                        .1
                }
            };
            if out.aborted {
                aborts += 1;
                bad += u64::from(out.abort_reason.as_deref() != Some("local_abort"));
            } else if !canonical_on(&d0, &out) || out.canonical_ghz() != Some(true) {
                bad += 1;
            }
        }
        let frac = aborts as f64 / runs_each as f64;
        pass &= bad == 0 && frac <= bound;
        notes.push(format!(
            "{name}: {} ok, {aborts} aborted ({frac:.3}), {bad} bad",
            runs_each - aborts - bad
        ));
    }
    verdict(pass, notes.join("; "))
}

// ---------------------------------------------------------------------- 7

/// Local images of every (c, block) for one party, with fiber counts per c.
struct LocalTable {
    ids: [Vec<usize>; 2],
    counts: [Vec<u64>; 2],
}

fn local_table(
    key: &family::HghzKey,
    blocks: &[DomainPoint],
) -> (LocalTable, HashMap<Vec<u64>, usize>) {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut ids = [Vec::new(), Vec::new()];
    for c in [false, true] {
        for x in blocks {
            let mut x = x.clone();
            x.c = c;
            let y = family::eval(key, &x).unwrap();
            let next = index.len();
            ids[c as usize].push(*index.entry(y).or_insert(next));
        }
    }
    let mut counts = [vec![0u64; index.len()], vec![0u64; index.len()]];
    for c in 0..2 {
        for &id in &ids[c] {
            counts[c][id] += 1;
        }
    }
    (LocalTable { ids, counts }, index)
}

fn compiler_law() -> Verdict {
    let p = Params::micro(1, 0.4).unwrap();
    let shifts = [Some(2), Some(0)];
    let bits0 = [true, false];
    let parts: Vec<_> = (0..2)
        .map(|i| micro_key(&p, &[bits0[i]], shifts[i], 70 + i as u64))
        .collect();
    if !parts
        .iter()
        .enumerate()
        .all(|(i, (k, t))| dist::check_trapdoor_dist(bits0[i], t, k))
    {
        return verdict(false, "crafted local keys fail the local check");
    }
    let blocks: Vec<DomainPoint> = micro_domain(&p).into_iter().filter(|x| !x.c).collect();
    let tables: Vec<LocalTable> = parts
        .iter()
        .map(|(k, _)| local_table(k, &blocks).0)
        .collect();
    let local_size = 2 * blocks.len() as u64;

    // local twin fractions: a local point has a twin when its image has two preimages across both c
    let deltas: Vec<f64> = tables
        .iter()
        .map(|t| {
            let twins: u64 = (0..2)
                .flat_map(|c| {
                    t.ids[c]
                        .iter()
                        .map(move |&id| t.counts[0][id] + t.counts[1][id])
                })
                .filter(|&m| m == 2)
                .count() as u64;
            1.0 - twins as f64 / local_size as f64
        })
        .collect();

    // the compiled image of (c, b1, b2) is (y1, y2); its fiber size is Σ_c′ N1(c′, y1) N2(c′, y2)
    let (t1, t2) = (&tables[0], &tables[1]);
    let mut compiled_twins = 0u64;
    let mut max_fiber = 0u64;
    for c in 0..2 {
        for &i1 in &t1.ids[c] {
            for &i2 in &t2.ids[c] {
                let m = t1.counts[0][i1] * t2.counts[0][i2] + t1.counts[1][i1] * t2.counts[1][i2];
                max_fiber = max_fiber.max(m);
                compiled_twins += u64::from(m == 2);
            }
        }
    }
    let compiled_size = 2 * (blocks.len() as u64).pow(2);
    let frac = compiled_twins as f64 / compiled_size as f64;
    let product = (1.0 - deltas[0]) * (1.0 - deltas[1]);

    // spot check that the compiled evaluation is the block concatenation counted above
    let key = DistKey::new(parts.iter().map(|(k, _)| k.clone()).collect()).unwrap();
    let mut r = rng::stream(7, 0);
    let concat_ok = (0..2000).all(|_| {
        let c: bool = r.gen();
        let pick = |r: &mut rng::HRng| {
            let x = &blocks[r.gen_range(0..blocks.len())];
            LocalBlock {
                s: x.s.clone(),
                e: x.e.clone(),
                d: x.d[0],
            }
        };
        let pt = DistPoint {
            c,
            blocks: vec![pick(&mut r), pick(&mut r)],
        };
        let y = dist::eval_dist(&key, &pt).unwrap();
        let mut want = Vec::new();
        for (i, b) in pt.blocks.iter().enumerate() {
            let x = DomainPoint {
                s: b.s.clone(),
                e: b.e.clone(),
                c,
                d: vec![b.d],
            };
            want.extend(family::eval(&parts[i].0, &x).unwrap());
        }
        y == want
    });

    let composed = dist::delta_compose(0.1, 5);
    let composed_ok = (composed - 0.40951).abs() < 1e-12 && composed <= 0.5;
    let law_ok = (frac - product).abs() < 1e-12
        && (1.0 - frac - dist::delta_compose(deltas[0], 2)).abs() < 1e-12;
    verdict(
        law_ok && max_fiber <= 2 && concat_ok && composed_ok && deltas[0] > 0.0,
        format!(
            "|X'|={compiled_size}, compiled twin fraction {frac:.6} vs product {product:.6} (delta_i={:.4},{:.4}); max fiber {max_fiber}; delta_compose(0.1,5)={composed:.5}",
            deltas[0], deltas[1]
        ),
    )
}

// ---------------------------------------------------------------------- 8

/// Win probability of the support distinguisher, by hand. Under the all-ones
/// support every measurement is constant, so the coin decides. Under the
/// half support the off-support bits are free; a constant outcome needs all
/// of them to match the GHZ value.
fn blind_can_reference(n: usize, model: StateModel) -> f64 {
    let free = n - n.div_ceil(2);
    let constant = match model {
        StateModel::Engine => 0.5f64.powi(free as i32),
        StateModel::Aligned => 0.5,
    };
    0.5 * 0.5 + 0.5 * ((1.0 - constant) + constant * 0.5)
}

fn attack_reproduction() -> Verdict {
    let local = Params::toy_default(1);
    let trials = 10_000u64;
    let mut notes = Vec::new();
    let mut pass = true;
    for model in [StateModel::Engine, StateModel::Aligned] {
        let rep =
            attacks::attack_blind_can(&attacks::blind_can_supports(4), &local, model, trials, 8)
                .unwrap();
        let reference = blind_can_reference(4, model);
        let sigma = (reference * (1.0 - reference) / trials as f64).sqrt();
        let ok = (rep.win.estimate - reference).abs() <= 3.0 * sigma
            && reference > 0.55
            && (rep.p_star - reference).abs() < 1e-12;
        pass &= ok;
        notes.push(format!(
            "blind-can/{model:?}: win {:.4} vs p*={reference:.4} (3 sigma {:.4})",
            rep.win.estimate,
            3.0 * sigma
        ));
    }

    // twin probability of unsupported local keys, measured by inversion
    let mut twins = 0u64;
    let mut samples = 0u64;
    for j in 0..400u64 {
        let mut r = rng::labeled(8, "acceptance-twin-rate", j);
        let (k, t) = dist::gen_loc_checked(&local, false, &mut r).unwrap();
        for _ in 0..250 {
            let x = family::sample_domain(&local, &mut r);
            twins += u64::from(family::invert(&t, &family::eval(&k, &x).unwrap()).is_some());
            samples += 1;
        }
    }
    let p_twin = twins as f64 / samples as f64;
    // uniform target: supported → coin; unsupported → α disagrees half the time when twinned
    let win = 0.5 * 0.5 + 0.5 * (p_twin * 0.75 + (1.0 - p_twin) * 0.5);
    let reference = 2.0 * win - 1.0;
    let sigma_adv = 2.0 * (win * (1.0 - win) / trials as f64).sqrt();
    let sigma_zero = 2.0 * (0.25 / trials as f64).sqrt();
    let rep = attacks::attack_alpha_leak(&local, trials, 8).unwrap();
    let ok = (rep.advantage_unprotected - reference).abs() <= 3.0 * sigma_adv
        && rep.advantage_protected.abs() <= 3.0 * sigma_zero
        && rep.advantage_unprotected <= 0.25 + 3.0 * sigma_adv;
    pass &= ok;
    notes.push(format!(
        "alpha-leak: unprotected adv {:.4} vs {reference:.4} (twin rate {p_twin:.4}), protected adv {:.4} (3 sigma {:.4})",
        rep.advantage_unprotected,
        rep.advantage_protected,
        3.0 * sigma_zero
    ));
    verdict(pass, notes.join("; "))
}

// ---------------------------------------------------------------------- 9

fn game_sanity() -> Verdict {
    let trials = 10_000u64;
    let setup = GameSetup::toy(4);
    let sigma = (0.25 / trials as f64).sqrt();
    let mut notes = Vec::new();
    let mut pass = true;
    for kind in [GameKind::IndD0, GameKind::IndPartial] {
        let s = games::run_game(
            kind,
            &setup,
            &|| Box::new(games::RandomGuess::new()) as Box<dyn Adversary>,
            trials,
            9,
        );
        let ok = (s.wins.estimate - 0.5).abs() <= 3.0 * sigma;
        pass &= ok;
        notes.push(format!("{} random {:.4}", kind.name(), s.wins.estimate));
    }
    for kind in GameKind::ALL {
        let s = games::run_game(
            kind,
            &setup,
            &|| Box::new(games::TrapdoorOracle::new()) as Box<dyn Adversary>,
            trials,
            9,
        );
        pass &= s.wins.estimate >= 0.99;
        notes.push(format!("{} oracle {:.4}", kind.name(), s.wins.estimate));
    }
    // each violation only against the games that state the matching condition
    let violations = GameKind::ALL
        .into_iter()
        .filter(|k| k.has_corruptions())
        .map(|k| (k, Violation::DifferOnCorrupted))
        .chain([(GameKind::IndBlindCanSup, Violation::OnlyCorruptedSupported)]);
    for (kind, v) in violations {
        let s = games::run_game(
            kind,
            &setup,
            &move || Box::new(games::ConditionViolating::new(v)) as Box<dyn Adversary>,
            trials,
            9,
        );
        pass &= s.wins.successes == 0;
        notes.push(format!("{} {v:?} wins {}", kind.name(), s.wins.successes));
    }
    verdict(pass, notes.join("; "))
}

// ---------------------------------------------------------------------- 10

fn check_soundness() -> Verdict {
    let p = Params::toy_default(3);
    let q = p.modulus;
    let d0 = vec![true, false, true];
    let mut caught = 0u32;
    let mut notes = Vec::new();
    for i in 0..100u64 {
        let mut r = rng::labeled(10, "acceptance-malicious", i);
        let (key, t) = family::gen(&p, &d0, &mut r).unwrap();
        let (bad_key, bad_t, kind) = match i % 3 {
            0 => {
                let mut k = key.clone();
                k.y0 = q.uniform_vec(k.y0.len(), &mut r);
                (k, t, CheckFailure::KeyEquation)
            }
            1 => {
                // R scaled far beyond the singular-value bound, key rebuilt consistently
                let a_hat = key.a.row_block(0, p.n_dim);
                let a_l = key.a.row_block(p.m_rows(), p.m_rows() + p.n);
                let s0: Vec<i64> = t.s0.iter().map(|&v| q.center(v)).collect();
                let e0: Vec<i64> = t.e0.iter().map(|&v| q.center(v)).collect();
                let (k, tt) =
                    family::from_parts(&p, &a_hat, &t.r.scaled(64), &a_l, &d0, &s0, &e0).unwrap();
                (k, tt, CheckFailure::SingularValue)
            }
            _ => {
                // μ past the ℓ₂ radius r_safe / √(N+M+n)
                let mut big = p;
                big.mu = p.mu * 4 + 1 + i;
                let a_hat = key.a.row_block(0, p.n_dim);
                let a_l = key.a.row_block(p.m_rows(), p.m_rows() + p.n);
                let s0: Vec<i64> = t.s0.iter().map(|&v| q.center(v)).collect();
                let e0: Vec<i64> = t.e0.iter().map(|&v| q.center(v)).collect();
                let (k, tt) = family::from_parts(&big, &a_hat, &t.r, &a_l, &d0, &s0, &e0).unwrap();
                (k, tt, CheckFailure::Radius)
            }
        };
        // the rejection must come from the defect that was planted
        match family::check_trapdoor_detail(&d0, &bad_t, &bad_key) {
            Err(why) if why == kind => caught += 1,
            got => notes.push(format!("#{i}: expected {kind:?}, got {got:?}")),
        }
    }
    let accepted = (0..100u64)
        .filter(|&i| {
            let mut r = rng::labeled(10, "acceptance-honest", i);
            let (k, t) = family::gen(&p, &d0, &mut r).unwrap();
            family::check_trapdoor(&d0, &t, &k)
        })
        .count();
    notes.insert(
        0,
        format!("{caught}/100 malicious rejected, {accepted}/100 honest accepted"),
    );
    verdict(caught == 100 && accepted >= 95, notes.join("; "))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Verdict); 10] = [
        ("planner anchor", Duration::from_secs(1), planner_anchor),
        ("gadget inversion", Duration::from_secs(1), gadget_inversion),
        (
            "micro exhaustive 2-to-1 and XOR",
            Duration::from_secs(10),
            micro_exhaustive,
        ),
        ("toy Monte-Carlo", Duration::from_secs(60), toy_round_trips),
        (
            "simulator equivalence",
            Duration::from_secs(300),
            simulator_equivalence,
        ),
        (
            "end-to-end canonical GHZ",
            Duration::from_secs(300),
            end_to_end,
        ),
        ("compiler law", Duration::from_secs(60), compiler_law),
        (
            "attack reproduction",
            Duration::from_secs(120),
            attack_reproduction,
        ),
        ("game-harness sanity", Duration::from_secs(120), game_sanity),
        (
            "check_trapdoor soundness",
            Duration::from_secs(60),
            check_soundness,
        ),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let v = timed(limit, f);
        println!(
            "criterion {:>2} {}: {}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            name,
            v.detail
        );
        if !v.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
