//! The LWE hidden-GHZ trapdoor family.
//!
//! f_k(s, e, c, d) = A s + e + (q/2)[0; d] + c · y0 over the hypercube
//! X = {‖(s, e)‖∞ ≤ μ} × {0,1} × {0,1}^n. Each in-range image has the twin
//! pair (s, e, 0, d) and (s − s0, e − e0, 1, d ⊕ d0), so h(x) ⊕ h(x′) = d0.

pub mod io;
mod params;

pub use params::{plan_params, Params, Plan, PlanDerived, PlanInputs, Regime, Violation};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits;
use crate::modq::{GaussianSampler, IntMatrix, ModqError, Modulus, ZqMatrix};
use crate::mp;
use crate::rng;
use crate::stats::Proportion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error(transparent)]
    Modq(#[from] ModqError),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("k = {0} is too large to materialize (limit 62)")]
    TooLarge(u64),
    #[error("point outside the domain")]
    OutOfDomain,
    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("malformed container: {0}")]
    Format(String),
}

/// Public key (A, y0) with A = [A_u; A_l].
#[derive(Debug, Clone, PartialEq)]
pub struct HghzKey {
    pub params: Params,
    pub a: ZqMatrix,
    pub y0: Vec<u64>,
}

/// Trapdoor (R, d0, s0, e0, A).
#[derive(Debug, Clone, PartialEq)]
pub struct HghzTrapdoor {
    pub params: Params,
    pub r: IntMatrix,
    pub d0: Vec<bool>,
    pub s0: Vec<u64>,
    pub e0: Vec<u64>,
    pub a: ZqMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainPoint {
    pub s: Vec<u64>,
    pub e: Vec<u64>,
    pub c: bool,
    pub d: Vec<bool>,
}

impl DomainPoint {
    pub fn zero(p: &Params) -> Self {
        Self {
            s: vec![0; p.n_dim],
            e: vec![0; p.m_rows() + p.n],
            c: false,
            d: vec![false; p.n],
        }
    }
}

/// Which clause of [`check_trapdoor`] failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckFailure {
    Shape,
    ParamsMismatch,
    MatrixMismatch,
    GadgetStructure,
    KeyEquation,
    SingularValue,
    ShiftNorm,
    Radius,
    SupportMismatch,
}

pub fn gen<R: Rng + ?Sized>(
    p: &Params,
    d0: &[bool],
    rng: &mut R,
) -> Result<(HghzKey, HghzTrapdoor), FamilyError> {
    if d0.len() != p.n {
        return Err(FamilyError::Length {
            what: "d0",
            expected: p.n,
            got: d0.len(),
        });
    }
    let q = p.modulus;
    let kp = mp::mp_gen(&p.mp(), rng)?;
    let a_l = ZqMatrix::uniform(p.n, p.n_dim, &q, rng);
    let g = GaussianSampler::new(p.alpha_q)?;
    let s0 = g.sample_vec(p.n_dim, rng);
    let e0 = g.sample_vec(p.m_rows() + p.n, rng);
    from_parts(p, &kp.a_hat, &kp.r, &a_l, d0, &s0, &e0)
}

/// Assembles a key and trapdoor from explicit parts, with signed shifts.
pub fn from_parts(
    p: &Params,
    a_hat: &ZqMatrix,
    r: &IntMatrix,
    a_l: &ZqMatrix,
    d0: &[bool],
    s0: &[i64],
    e0: &[i64],
) -> Result<(HghzKey, HghzTrapdoor), FamilyError> {
    let q = p.modulus;
    let m = p.m_rows();
    expect_len("d0", p.n, d0.len())?;
    expect_len("s0", p.n_dim, s0.len())?;
    expect_len("e0", m + p.n, e0.len())?;
    expect_len("R rows", p.n_dim * p.k() as usize, r.rows())?;
    expect_len("R cols", 2 * p.n_dim, r.cols())?;
    expect_len("A_l rows", p.n, a_l.rows())?;
    let a_u = mp::assemble_a_u(a_hat, r, &q)?;
    let a = ZqMatrix::vstack(&a_u, a_l)?;
    let s0: Vec<u64> = s0.iter().map(|&x| q.from_i64(x)).collect();
    let e0: Vec<u64> = e0.iter().map(|&x| q.from_i64(x)).collect();
    let y0 = key_equation(p, &a, &s0, &e0, d0)?;
    let key = HghzKey {
        params: *p,
        a: a.clone(),
        y0,
    };
    let trapdoor = HghzTrapdoor {
        params: *p,
        r: r.clone(),
        d0: d0.to_vec(),
        s0,
        e0,
        a,
    };
    Ok((key, trapdoor))
}

fn expect_len(what: &'static str, expected: usize, got: usize) -> Result<(), FamilyError> {
    if expected != got {
        return Err(FamilyError::Length {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// y0 = A s0 + e0 + (q/2)[0^M; d0].
fn key_equation(
    p: &Params,
    a: &ZqMatrix,
    s0: &[u64],
    e0: &[u64],
    d0: &[bool],
) -> Result<Vec<u64>, FamilyError> {
    let q = p.modulus;
    let mut y = mp::g_eval(a, s0, e0, &q)?;
    add_half_d(p, &mut y, d0);
    Ok(y)
}

fn add_half_d(p: &Params, y: &mut [u64], d: &[bool]) {
    let q = p.modulus;
    let m = p.m_rows();
    for (yi, &di) in y[m..].iter_mut().zip(d) {
        if di {
            *yi = q.add(*yi, q.half());
        }
    }
}

pub fn in_domain(p: &Params, x: &DomainPoint) -> bool {
    x.s.len() == p.n_dim
        && x.e.len() == p.m_rows() + p.n
        && x.d.len() == p.n
        && x.s
            .iter()
            .chain(&x.e)
            .all(|&v| v < p.q() && p.modulus.center(v).unsigned_abs() <= p.mu)
}

/// f_k(x); rejects points outside X.
pub fn eval(key: &HghzKey, x: &DomainPoint) -> Result<Vec<u64>, FamilyError> {
    if !in_domain(&key.params, x) {
        return Err(FamilyError::OutOfDomain);
    }
    Ok(eval_unchecked(key, x))
}

fn eval_unchecked(key: &HghzKey, x: &DomainPoint) -> Vec<u64> {
    let p = &key.params;
    let q = p.modulus;
    let mut y = mp::g_eval(&key.a, &x.s, &x.e, &q).expect("dimensions checked by caller");
    add_half_d(p, &mut y, &x.d);
    if x.c {
        y = q.vec_add(&y, &key.y0).expect("same length");
    }
    y
}

pub fn h(x: &DomainPoint) -> Vec<bool> {
    x.d.clone()
}

/// The c = 0 candidate for y: MP inversion of the top block, then rounding of the bottom.
fn invert_c0(t: &HghzTrapdoor, y: &[u64]) -> Option<DomainPoint> {
    let p = &t.params;
    let q = p.modulus;
    let m = p.m_rows();
    if y.len() != m + p.n {
        return None;
    }
    let a_u = t.a.row_block(0, m);
    let a_l = t.a.row_block(m, m + p.n);
    let (s, e_u) = mp::mp_invert(&t.r, &a_u, &y[..m], p.r_max, &q)?;
    let resid = q.vec_sub(&y[m..], &a_l.matvec(&q, &s).ok()?).ok()?;
    let d = q.round_vec(&resid);
    let e_l: Vec<u64> = resid
        .iter()
        .zip(&d)
        .map(|(&r, &di)| if di { q.sub(r, q.half()) } else { r })
        .collect();
    let mut e = e_u;
    e.extend(e_l);
    Some(DomainPoint { s, e, c: false, d })
}

/// Twin of a c = 0 point: (s − s0, e − e0, 1, d ⊕ d0).
pub fn twin_of(t: &HghzTrapdoor, x: &DomainPoint) -> DomainPoint {
    let q = t.params.modulus;
    if !x.c {
        DomainPoint {
            s: q.vec_sub(&x.s, &t.s0).expect("len"),
            e: q.vec_sub(&x.e, &t.e0).expect("len"),
            c: true,
            d: bits::xor(&x.d, &t.d0),
        }
    } else {
        DomainPoint {
            s: q.vec_add(&x.s, &t.s0).expect("len"),
            e: q.vec_add(&x.e, &t.e0).expect("len"),
            c: false,
            d: bits::xor(&x.d, &t.d0),
        }
    }
}

/// Both preimages (c = 0 first) when y has exactly two in X, else `None`.
pub fn invert(t: &HghzTrapdoor, y: &[u64]) -> Option<(DomainPoint, DomainPoint)> {
    let x = invert_c0(t, y)?;
    let x2 = twin_of(t, &x);
    (in_domain(&t.params, &x) && in_domain(&t.params, &x2)).then_some((x, x2))
}

/// Every preimage of y in X, c = 0 first. Complete whenever the trapdoor passes [`check_trapdoor`].
pub fn preimages(key: &HghzKey, t: &HghzTrapdoor, y: &[u64]) -> Vec<DomainPoint> {
    let p = &key.params;
    let q = p.modulus;
    let mut out = Vec::with_capacity(2);
    if let Some(x) = invert_c0(t, y) {
        if in_domain(p, &x) && eval_unchecked(key, &x) == y {
            out.push(x);
        }
    }
    if y.len() == key.y0.len() {
        let shifted = q.vec_sub(y, &key.y0).expect("len");
        if let Some(mut x) = invert_c0(t, &shifted) {
            x.c = true;
            if in_domain(p, &x) && eval_unchecked(key, &x) == y {
                out.push(x);
            }
        }
    }
    out
}

pub fn check_trapdoor(d0: &[bool], t: &HghzTrapdoor, key: &HghzKey) -> bool {
    check_trapdoor_detail(d0, t, key).is_ok()
}

pub fn check_trapdoor_detail(
    d0: &[bool],
    t: &HghzTrapdoor,
    key: &HghzKey,
) -> Result<(), CheckFailure> {
    let p = &key.params;
    let q = p.modulus;
    let m = p.m_rows();
    if t.params != *p {
        return Err(CheckFailure::ParamsMismatch);
    }
    let shape_ok = key.a.rows() == m + p.n
        && key.a.cols() == p.n_dim
        && key.y0.len() == m + p.n
        && t.r.rows() == p.n_dim * p.k() as usize
        && t.r.cols() == 2 * p.n_dim
        && t.s0.len() == p.n_dim
        && t.e0.len() == m + p.n
        && t.d0.len() == p.n
        && d0.len() == p.n
        && key.a.data().iter().chain(&key.y0).all(|&v| v < p.q());
    if !shape_ok {
        return Err(CheckFailure::Shape);
    }
    if t.a != key.a {
        return Err(CheckFailure::MatrixMismatch);
    }
    let a_hat = key.a.row_block(0, p.n_dim);
    match mp::assemble_a_u(&a_hat, &t.r, &q) {
        Ok(a_u) if a_u == key.a.row_block(0, m) => {}
        _ => return Err(CheckFailure::GadgetStructure),
    }
    if key_equation(p, &key.a, &t.s0, &t.e0, &t.d0).ok().as_deref() != Some(&key.y0[..]) {
        return Err(CheckFailure::KeyEquation);
    }
    if !mp::injectivity_holds(&t.r, &q, p.r_max) {
        return Err(CheckFailure::SingularValue);
    }
    let shift: Vec<u64> = t.s0.iter().chain(&t.e0).copied().collect();
    if q.norm2(&shift) > p.shift_budget() {
        return Err(CheckFailure::ShiftNorm);
    }
    if p.mu as f64 * (p.dim() as f64).sqrt() > p.r_safe {
        return Err(CheckFailure::Radius);
    }
    if d0 != t.d0.as_slice() {
        return Err(CheckFailure::SupportMismatch);
    }
    Ok(())
}

pub fn sample_domain<R: Rng + ?Sized>(p: &Params, rng: &mut R) -> DomainPoint {
    sample_box(p, p.mu, rng)
}

/// Uniform over ‖(s, e)‖∞ ≤ `radius`, with uniform c and d.
pub fn sample_box<R: Rng + ?Sized>(p: &Params, radius: u64, rng: &mut R) -> DomainPoint {
    let q = p.modulus;
    let r = radius as i64;
    let coord = |rng: &mut R| q.from_i64(rng.gen_range(-r..=r));
    let s = (0..p.n_dim).map(|_| coord(rng)).collect();
    let e = (0..p.m_rows() + p.n).map(|_| coord(rng)).collect();
    DomainPoint {
        s,
        e,
        c: rng.gen(),
        d: bits::random(p.n, rng),
    }
}

/// Box radius μ − ⌈αq √(N+M+n)⌉ inside which every twin stays in X.
pub fn margin_radius(p: &Params) -> u64 {
    p.mu.saturating_sub(p.shift_budget().ceil() as u64)
}

/// Exact twin probability of a uniform x ∈ X under this trapdoor's shift.
pub fn twin_fraction_exact(t: &HghzTrapdoor) -> f64 {
    let p = &t.params;
    let side = 2 * p.mu as i64 + 1;
    t.s0.iter()
        .chain(&t.e0)
        .map(|&v| (side - p.modulus.center(v).abs()).max(0) as f64 / side as f64)
        .product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    /// Fraction of samples without an in-domain twin, with a 99% interval.
    pub delta_hat: Proportion,
    /// 1 − twin fraction computed coordinate by coordinate for this key.
    pub delta_key_exact: f64,
    /// Hypercube bound 1 − ((2μ′+1)/(2μ+1))^{N+M+n}, when μ′ ≥ 0.
    pub delta_hypercube: Option<f64>,
    pub delta_m: f64,
    pub ci_upper_within_delta_m: bool,
}

const DELTA_CHUNKS: u64 = 64;

/// Monte-Carlo δ̂ over `trials` uniform points, split into fixed chunks so the
/// result depends only on `seed`.
pub fn estimate_delta(t: &HghzTrapdoor, trials: u64, seed: u64) -> DeltaEstimate {
    let p = t.params;
    let failures: u64 = (0..DELTA_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut r = rng::labeled(seed, "estimate-delta", chunk);
            let count = trials / DELTA_CHUNKS + u64::from(chunk < trials % DELTA_CHUNKS);
            (0..count)
                .filter(|_| {
                    let x = sample_domain(&p, &mut r);
                    !in_domain(&p, &twin_of(t, &x))
                })
                .count() as u64
        })
        .sum();
    let delta_hat = Proportion::new(failures, trials, 0.99);
    let delta_m = p.delta_m();
    DeltaEstimate {
        delta_hat,
        delta_key_exact: 1.0 - twin_fraction_exact(t),
        delta_hypercube: p.delta_hypercube(),
        delta_m,
        ci_upper_within_delta_m: delta_hat.ci_high <= delta_m,
    }
}

/// Generates until the trapdoor passes [`check_trapdoor`], returning the attempt count.
pub fn gen_checked<R: Rng + ?Sized>(
    p: &Params,
    d0: &[bool],
    rng: &mut R,
) -> Result<(HghzKey, HghzTrapdoor, u32), FamilyError> {
    for attempt in 1..=64 {
        let (k, t) = gen(p, d0, rng)?;
        if check_trapdoor(d0, &t, &k) {
            return Ok((k, t, attempt));
        }
    }
    Err(FamilyError::Params(
        "no key passed the trapdoor check in 64 attempts".into(),
    ))
}

/// Signed view of a residue vector.
pub fn centered(q: &Modulus, v: &[u64]) -> Vec<i64> {
    v.iter().map(|&x| q.center(x)).collect()
}
