//! Binary fixed-point reals on big integers, enough for the parameter planner
//! to work with q = 2^181 and beyond without losing the low-order bits.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Fractional bits carried by every value.
const FRAC: u64 = 320;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fx(BigInt);

impl Fx {
    pub fn zero() -> Self {
        Fx(BigInt::zero())
    }

    pub fn from_int(x: impl Into<BigInt>) -> Self {
        Fx(x.into() << FRAC)
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Fx((BigInt::from(num) << FRAC) / BigInt::from(den))
    }

    pub fn pow2(e: u64) -> Self {
        Fx(BigInt::one() << (FRAC + e))
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let m = BigInt::from(mant) * sign;
        let shift = FRAC as i64 + e;
        Fx(if shift >= 0 {
            m << shift as u64
        } else {
            m >> (-shift) as u64
        })
    }

    pub fn add(&self, o: &Self) -> Self {
        Fx(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Fx(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Fx((&self.0 * &o.0) >> FRAC)
    }

    pub fn div(&self, o: &Self) -> Self {
        Fx((&self.0 << FRAC) / &o.0)
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.0.is_negative());
        Fx((&self.0 << FRAC).sqrt())
    }

    pub fn floor(&self) -> BigInt {
        &self.0 >> FRAC
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// Natural logarithm; requires a positive argument.
    pub fn ln(&self) -> Self {
        assert!(self.is_positive());
        let (m, y) = self.split_pow2();
        Self::ln2().mul(&Self::from_int(m)).add(&ln_near_one(&y))
    }

    pub fn log2(&self) -> Self {
        assert!(self.is_positive());
        let (m, y) = self.split_pow2();
        Self::from_int(m).add(&ln_near_one(&y).div(&Self::ln2()))
    }

    pub fn ln2() -> Self {
        // ln 2 = 2 atanh(1/3)
        atanh2(&Fx::from_ratio(1, 3))
    }

    /// Writes self = 2^m · y with y ∈ [1, 2).
    fn split_pow2(&self) -> (i64, Self) {
        let m = self.0.bits() as i64 - 1 - FRAC as i64;
        let y = if m >= 0 {
            &self.0 >> m as u64
        } else {
            &self.0 << (-m) as u64
        };
        (m, Fx(y))
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.0.bits() as i64;
        let keep = 62;
        let (head, shift) = if bits > keep {
            (&self.0 >> (bits - keep) as u64, bits - keep)
        } else {
            (self.0.clone(), 0)
        };
        let h = head.to_f64().unwrap_or(f64::NAN);
        h * 2f64.powi((shift - FRAC as i64) as i32)
    }
}

/// ln y for y ∈ [1, 2) via 2 atanh((y − 1)/(y + 1)).
fn ln_near_one(y: &Fx) -> Fx {
    let one = Fx::from_int(1);
    atanh2(&y.sub(&one).div(&y.add(&one)))
}

/// 2 atanh(t) for |t| ≤ 1/3.
fn atanh2(t: &Fx) -> Fx {
    let t2 = t.mul(t);
    let mut term = t.clone();
    let mut sum = Fx::zero();
    let mut j: i64 = 0;
    while !term.0.is_zero() {
        sum = sum.add(&Fx(&term.0 / BigInt::from(2 * j + 1)));
        term = term.mul(&t2);
        j += 1;
    }
    sum.add(&sum)
}
