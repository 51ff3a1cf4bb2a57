//! Parameter sets and the feasibility planner.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::FamilyError;
use crate::fixed::Fx;
use crate::modq::Modulus;
use crate::mp::{self, MpParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Secure,
    Toy,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Secure => "secure",
            Regime::Toy => "toy",
        }
    }
}

/// Materialized parameters (k ≤ 62).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub modulus: Modulus,
    pub n_dim: usize,
    pub n: usize,
    pub alpha_q: f64,
    pub r_max: f64,
    pub r_safe: f64,
    pub mu: u64,
    pub regime: Regime,
}

impl Params {
    /// Toy parameters with r_max from the σ_max tail bound at width `alpha_q`.
    pub fn toy(n_dim: usize, k: u32, n: usize, alpha_q: f64) -> Result<Self, FamilyError> {
        let modulus = Modulus::new(k)?;
        let r_max = mp::r_max_for_sigma(&modulus, mp::sigma_tail_bound(alpha_q, n_dim, k));
        Self::with_bounds(n_dim, k, n, alpha_q, r_max)
    }

    /// Toy parameters with an explicit r_max.
    pub fn with_bounds(
        n_dim: usize,
        k: u32,
        n: usize,
        alpha_q: f64,
        r_max: f64,
    ) -> Result<Self, FamilyError> {
        let modulus = Modulus::new(k)?;
        if n_dim == 0 || n == 0 {
            return Err(FamilyError::Params("N and n must be positive".into()));
        }
        if !(alpha_q > 0.0 && alpha_q.is_finite()) {
            return Err(FamilyError::Params(format!(
                "gaussian width {alpha_q} must be positive"
            )));
        }
        if !(r_max > 0.0 && r_max < modulus.q() as f64 / 4.0) {
            return Err(FamilyError::Params(format!(
                "r_max {r_max} must lie in (0, q/4)"
            )));
        }
        let dim = (n_dim + n_dim * (1 + k as usize) + n) as f64;
        let r_safe = r_max - alpha_q * dim.sqrt();
        let mu = (r_safe / dim.sqrt()).floor();
        if mu < 1.0 {
            return Err(FamilyError::Params(format!(
                "hypercube radius {mu} below 1"
            )));
        }
        Ok(Self {
            modulus,
            n_dim,
            n,
            alpha_q,
            r_max,
            r_safe,
            mu: mu as u64,
            regime: Regime::Toy,
        })
    }

    /// Default toy set used throughout the tests: N = 2, k = 12, width 2.
    pub fn toy_default(n: usize) -> Self {
        Self::toy(2, 12, n, 2.0).expect("toy parameters are valid")
    }

    /// Micro set for exhaustive enumeration: N = 1, k = 4, μ = 1 (needs a small width).
    pub fn micro(n: usize, alpha_q: f64) -> Result<Self, FamilyError> {
        Self::with_bounds(1, 4, n, alpha_q, 3.99)
    }

    pub fn from_plan(plan: &Plan) -> Result<Self, FamilyError> {
        if !plan.feasible {
            return Err(FamilyError::Params("plan is infeasible".into()));
        }
        if plan.derived.k > Modulus::MAX_K as u64 {
            return Err(FamilyError::TooLarge(plan.derived.k));
        }
        let k = plan.derived.k as u32;
        let n_dim = plan.inputs.n_dim as usize;
        let modulus = Modulus::new(k)?;
        let mu = plan
            .derived
            .mu
            .parse::<u64>()
            .map_err(|e| FamilyError::Params(e.to_string()))?;
        let dim = (n_dim + n_dim * (1 + k as usize) + plan.inputs.n as usize) as f64;
        let r_max = 2f64.powf(plan.derived.log2_r_max);
        Ok(Self {
            modulus,
            n_dim,
            n: plan.inputs.n as usize,
            alpha_q: plan.derived.alpha_q,
            r_max,
            r_safe: r_max - plan.derived.alpha_q * dim.sqrt(),
            mu,
            regime: Regime::Secure,
        })
    }

    pub fn k(&self) -> u32 {
        self.modulus.k()
    }

    pub fn q(&self) -> u64 {
        self.modulus.q()
    }

    /// M = N (1 + k).
    pub fn m_rows(&self) -> usize {
        self.n_dim * (1 + self.k() as usize)
    }

    /// Number of centered coordinates N + M + n.
    pub fn dim(&self) -> usize {
        self.n_dim + self.m_rows() + self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_q / self.q() as f64
    }

    pub fn mp(&self) -> MpParams {
        MpParams {
            modulus: self.modulus,
            n_dim: self.n_dim,
            alpha_q: self.alpha_q,
            r_max: self.r_max,
        }
    }

    /// Worst-case bound (αq + 1)(N+M+n)^{3/2} / (μ + 1/2).
    pub fn delta_m(&self) -> f64 {
        (self.alpha_q + 1.0) * (self.dim() as f64).powf(1.5) / (self.mu as f64 + 0.5)
    }

    /// μ′ = ⌊μ − αq √(N+M+n)⌋.
    pub fn mu_prime(&self) -> i64 {
        (self.mu as f64 - self.alpha_q * (self.dim() as f64).sqrt()).floor() as i64
    }

    /// 1 − ((2μ′+1)/(2μ+1))^{N+M+n}, the hypercube bound valid when μ′ ≥ 0.
    pub fn delta_hypercube(&self) -> Option<f64> {
        let mp = self.mu_prime();
        (mp >= 0).then(|| {
            let ratio = (2 * mp + 1) as f64 / (2 * self.mu + 1) as f64;
            1.0 - ratio.powi(self.dim() as i32)
        })
    }

    /// Noise budget the honest (s0, e0) must respect: αq √(N+M+n).
    pub fn shift_budget(&self) -> f64 {
        self.alpha_q * (self.dim() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    #[serde(rename = "N")]
    pub n_dim: u64,
    pub epsilon: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDerived {
    pub k: u64,
    pub log2_q: f64,
    pub alpha_q: f64,
    pub log2_r_max: f64,
    pub log2_r_safe: Option<f64>,
    /// μ as a decimal integer (it may exceed 64 bits).
    pub mu: String,
    pub log2_mu: Option<f64>,
    pub log2_delta_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// ⌊μ − αq √(N+M+n)⌋ ≥ 0
    MuPrimeNonnegative,
    /// α ∈ (0, 1)
    AlphaInUnitInterval,
    /// α₀ q > 2 √N
    Alpha0QExceeds2SqrtN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub inputs: PlanInputs,
    pub derived: PlanDerived,
    pub feasible: bool,
    pub first_violation: Option<Violation>,
    pub violations: Vec<Violation>,
}

/// Picks k, q and the noise widths for (N, ε, n) and checks the security
/// conditions in high-precision fixed point.
pub fn plan_params(n_dim: u64, epsilon: f64, n: u64) -> Result<Plan, FamilyError> {
    if n_dim < 2 {
        return Err(FamilyError::Params("N must be at least 2".into()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(FamilyError::Params(format!(
            "epsilon {epsilon} outside (0, 1/2)"
        )));
    }
    if n == 0 {
        return Err(FamilyError::Params("n must be positive".into()));
    }
    let nf = Fx::from_int(n_dim);
    let ln_n = nf.ln();
    let eps = Fx::from_f64(epsilon);
    let k = floor_pow(n_dim, epsilon, &eps.mul(&ln_n));

    let m_rows = BigInt::from(n_dim) * BigInt::from(1 + k);
    let dim = Fx::from_int(BigInt::from(n_dim) + &m_rows + BigInt::from(n));
    let sqrt_dim = dim.sqrt();
    let omega_sq = ln_n.mul(&ln_n);
    let alpha_q = Fx::from_int(4 * n_dim + 1).add(&omega_sq).sqrt();

    let c = Fx::from_ratio(39_894_228, 100_000_000);
    let spread = Fx::from_int(k)
        .sqrt()
        .add(&Fx::from_int(2).sqrt())
        .add(&Fx::from_int(1));
    let sigma = c.mul(&alpha_q).mul(&nf.sqrt()).mul(&spread);
    let denom = Fx::from_int(4).mul(&sigma.mul(&sigma).add(&Fx::from_int(1)).sqrt());
    let q = Fx::pow2(k);
    let r_max = q.div(&denom);
    let noise = alpha_q.mul(&sqrt_dim);
    let r_safe = r_max.sub(&noise);
    let mu = r_safe.div(&sqrt_dim).floor();
    let mu_fx = Fx::from_int(mu.clone());
    let mu_half = mu_fx.add(&Fx::from_ratio(1, 2));

    let log2_delta_m = mu_half.is_positive().then(|| {
        alpha_q
            .add(&Fx::from_int(1))
            .log2()
            .add(&dim.log2().mul(&Fx::from_ratio(3, 2)))
            .sub(&mu_half.log2())
            .to_f64()
    });

    let mut violations = Vec::new();
    if mu_fx.sub(&noise).floor().is_negative() {
        violations.push(Violation::MuPrimeNonnegative);
    }
    if !(alpha_q.is_positive() && alpha_q < q) {
        violations.push(Violation::AlphaInUnitInterval);
    }
    let alpha0_q = alpha_q.mul(&alpha_q).sub(&omega_sq).sqrt();
    if alpha0_q <= Fx::from_int(2).mul(&nf.sqrt()) {
        violations.push(Violation::Alpha0QExceeds2SqrtN);
    }

    Ok(Plan {
        inputs: PlanInputs { n_dim, epsilon, n },
        derived: PlanDerived {
            k,
            log2_q: k as f64,
            alpha_q: alpha_q.to_f64(),
            log2_r_max: r_max.log2().to_f64(),
            log2_r_safe: r_safe.is_positive().then(|| r_safe.log2().to_f64()),
            mu: mu.to_string(),
            log2_mu: mu.is_positive().then(|| mu_fx.log2().to_f64()),
            log2_delta_m,
        },
        feasible: violations.is_empty(),
        first_violation: violations.first().copied(),
        violations,
    })
}

/// ⌊N^ε⌋ given ε ln N, corrected against the high-precision logarithm at the boundary.
fn floor_pow(n_dim: u64, epsilon: f64, eps_ln_n: &Fx) -> u64 {
    let mut k = (epsilon * (n_dim as f64).ln()).exp().floor().max(1.0) as u64;
    while Fx::from_int(k + 1).ln() <= *eps_ln_n {
        k += 1;
    }
    while k > 1 && Fx::from_int(k).ln() > *eps_ln_n {
        k -= 1;
    }
    k
}

impl PlanDerived {
    pub fn mu_big(&self) -> BigInt {
        self.mu.parse().unwrap_or_default()
    }

    pub fn mu_u64(&self) -> Option<u64> {
        self.mu_big().to_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_defaults() {
        let p = Params::toy_default(3);
        assert_eq!(p.q(), 4096);
        assert_eq!(p.m_rows(), 26);
        assert_eq!(p.dim(), 31);
        assert_eq!(p.mu, 25);
        assert!((p.r_max - 152.65).abs() < 0.05, "{}", p.r_max);
        assert_eq!(p.regime, Regime::Toy);
    }

    #[test]
    fn micro_defaults() {
        let p = Params::micro(1, 0.4).unwrap();
        assert_eq!(p.mu, 1);
        assert_eq!(p.dim(), 7);
        assert!(Params::micro(1, 2.0).is_err());
    }

    #[test]
    fn anchors() {
        let p = plan_params(6_000_000, 1.0 / 3.0, 3).unwrap();
        assert_eq!(p.derived.k, 181);
        assert!(p.derived.log2_delta_m.unwrap() < -80.0);
        assert!(p.feasible);
        assert!(plan_params(700_000, 1.0 / 3.0, 3).unwrap().feasible);
        let bad = plan_params(100, 1.0 / 3.0, 2).unwrap();
        assert!(!bad.feasible);
        assert_eq!(bad.first_violation, Some(Violation::MuPrimeNonnegative));
    }

    #[test]
    fn k_is_exact_at_perfect_powers() {
        // (2^30)^0.3 = 2^9, but the double nearest 0.3 is slightly smaller
        let p = plan_params(1 << 30, 0.3, 1).unwrap();
        assert_eq!(p.derived.k, 511);
        let p = plan_params(1 << 30, 0.30000000000000004, 1).unwrap();
        assert_eq!(p.derived.k, 512);
        let cube = plan_params(1_000_000, 0.25, 1).unwrap();
        assert_eq!(cube.derived.k, 31);
    }

    #[test]
    fn input_validation() {
        assert!(plan_params(1, 0.3, 1).is_err());
        assert!(plan_params(10, 0.5, 1).is_err());
        assert!(plan_params(10, 0.3, 0).is_err());
    }

    #[test]
    fn from_plan_rejects_large_k() {
        let p = plan_params(6_000_000, 1.0 / 3.0, 3).unwrap();
        assert!(matches!(
            Params::from_plan(&p),
            Err(FamilyError::TooLarge(181))
        ));
    }
}
