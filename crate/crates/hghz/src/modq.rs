//! Arithmetic over Z_q for q = 2^k, centered lifts, modular rounding and norms,
//! a discrete Gaussian sampler and largest-singular-value estimation.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModqError {
    #[error("modulus exponent {0} outside 1..=62")]
    BadExponent(u32),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("gaussian width must be positive and finite, got {0}")]
    BadWidth(f64),
}

/// The ring modulus q = 2^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Modulus {
    k: u32,
}

impl Modulus {
    pub const MAX_K: u32 = 62;

    pub fn new(k: u32) -> Result<Self, ModqError> {
        if k == 0 || k > Self::MAX_K {
            return Err(ModqError::BadExponent(k));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn q(&self) -> u64 {
        1u64 << self.k
    }

    pub fn half(&self) -> u64 {
        1u64 << (self.k - 1)
    }

    fn mask(&self) -> u64 {
        self.q() - 1
    }

    pub fn reduce(&self, x: u64) -> u64 {
        x & self.mask()
    }

    pub fn from_i64(&self, x: i64) -> u64 {
        (x as u64) & self.mask()
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask()
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask()
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a.wrapping_mul(b) & self.mask()
    }

    pub fn neg(&self, a: u64) -> u64 {
        a.wrapping_neg() & self.mask()
    }

    /// Representative of `x` in [-q/2, q/2).
    pub fn center(&self, x: u64) -> i64 {
        let x = self.reduce(x);
        if x >= self.half() {
            x as i64 - self.q() as i64
        } else {
            x as i64
        }
    }

    /// 0 iff the centered value lies in [-q/4, q/4).
    pub fn round_mod(&self, x: u64) -> bool {
        let c = self.center(x);
        let quarter = (self.q() / 4) as i64;
        !(-quarter <= c && c < quarter)
    }

    pub fn round_vec(&self, v: &[u64]) -> Vec<bool> {
        v.iter().map(|&x| self.round_mod(x)).collect()
    }

    pub fn norm_inf(&self, v: &[u64]) -> u64 {
        v.iter()
            .map(|&x| self.center(x).unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn norm2(&self, v: &[u64]) -> f64 {
        self.norm2_sq(v).sqrt()
    }

    fn norm2_sq(&self, v: &[u64]) -> f64 {
        v.iter()
            .map(|&x| {
                let c = self.center(x) as f64;
                c * c
            })
            .sum()
    }

    pub fn uniform_vec<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<u64> {
        (0..len).map(|_| rng.gen::<u64>() & self.mask()).collect()
    }

    pub fn vec_add(&self, a: &[u64], b: &[u64]) -> Result<Vec<u64>, ModqError> {
        check_len(a.len(), b.len())?;
        Ok(a.iter().zip(b).map(|(&x, &y)| self.add(x, y)).collect())
    }

    pub fn vec_sub(&self, a: &[u64], b: &[u64]) -> Result<Vec<u64>, ModqError> {
        check_len(a.len(), b.len())?;
        Ok(a.iter().zip(b).map(|(&x, &y)| self.sub(x, y)).collect())
    }

    pub fn vec_scale(&self, a: &[u64], c: u64) -> Vec<u64> {
        a.iter().map(|&x| self.mul(x, c)).collect()
    }
}

/// Free-function form of [`Modulus::center`].
pub fn center(x: u64, q: &Modulus) -> i64 {
    q.center(x)
}

/// Free-function form of [`Modulus::round_mod`].
pub fn round_mod(x: u64, q: &Modulus) -> bool {
    q.round_mod(x)
}

/// Infinity norm of the centered lift.
pub fn norm_inf_mod(v: &[u64], q: &Modulus) -> u64 {
    q.norm_inf(v)
}

/// Euclidean norm of the centered lift.
pub fn norm2_mod(v: &[u64], q: &Modulus) -> f64 {
    q.norm2(v)
}

fn check_len(expected: usize, got: usize) -> Result<(), ModqError> {
    if expected != got {
        return Err(ModqError::Dimension { expected, got });
    }
    Ok(())
}

/// Dense row-major matrix of residues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZqMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ZqMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<u64>) -> Result<Self, ModqError> {
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, ModqError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, q: &Modulus, rng: &mut R) -> Self {
        Self {
            rows,
            cols,
            data: q.uniform_vec(rows * cols, rng),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn vstack(top: &Self, bottom: &Self) -> Result<Self, ModqError> {
        check_len(top.cols, bottom.cols)?;
        let mut data = top.data.clone();
        data.extend_from_slice(&bottom.data);
        Ok(Self {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        })
    }

    pub fn matvec(&self, q: &Modulus, v: &[u64]) -> Result<Vec<u64>, ModqError> {
        check_len(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(0u64, |acc, (&a, &x)| acc.wrapping_add(a.wrapping_mul(x)))
                    & (q.q() - 1)
            })
            .collect())
    }

    pub fn matmul(&self, q: &Modulus, other: &Self) -> Result<Self, ModqError> {
        check_len(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0 {
                    continue;
                }
                let orow = other.row(l);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = d.wrapping_add(a.wrapping_mul(b));
                }
            }
        }
        for d in &mut out.data {
            *d = q.reduce(*d);
        }
        Ok(out)
    }

    pub fn add(&self, q: &Modulus, other: &Self) -> Result<Self, ModqError> {
        check_len(self.rows, other.rows)?;
        check_len(self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: q.vec_add(&self.data, &other.data)?,
        })
    }

    pub fn sub(&self, q: &Modulus, other: &Self) -> Result<Self, ModqError> {
        check_len(self.rows, other.rows)?;
        check_len(self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: q.vec_sub(&self.data, &other.data)?,
        })
    }

    pub fn scale(&self, q: &Modulus, c: u64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: q.vec_scale(&self.data, c),
        }
    }
}

/// Dense row-major matrix of signed integers, not reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self, ModqError> {
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self, ModqError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn gaussian<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        g: &GaussianSampler,
        rng: &mut R,
    ) -> Self {
        Self {
            rows,
            cols,
            data: g.sample_vec(rows * cols, rng),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    /// Columns `start..end` as a new matrix.
    pub fn col_block(&self, start: usize, end: usize) -> Self {
        let mut data = Vec::with_capacity(self.rows * (end - start));
        for i in 0..self.rows {
            data.extend_from_slice(&self.data[i * self.cols + start..i * self.cols + end]);
        }
        Self {
            rows: self.rows,
            cols: end - start,
            data,
        }
    }

    pub fn scaled(&self, c: i64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn to_zq(&self, q: &Modulus) -> ZqMatrix {
        ZqMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| q.from_i64(x)).collect(),
        }
    }

    pub fn sigma_max(&self) -> SigmaEstimate {
        sigma_max(self)
    }
}

/// Discrete Gaussian D_{Z,s} with mass ∝ exp(-π x² / s²), truncated at |x| ≤ ⌈12 s⌉.
///
/// Sampling is table inverse-CDF over the truncated support.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    s: f64,
    tail: i64,
    cdf: Vec<f64>,
}

impl GaussianSampler {
    pub fn new(s: f64) -> Result<Self, ModqError> {
        if !(s.is_finite() && s > 0.0) {
            return Err(ModqError::BadWidth(s));
        }
        let tail = (12.0 * s).ceil() as i64;
        let weights: Vec<f64> = (-tail..=tail).map(|x| rho(s, x)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Ok(Self { s, tail, cdf })
    }

    pub fn width(&self) -> f64 {
        self.s
    }

    pub fn tail(&self) -> i64 {
        self.tail
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.gen();
        let idx = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        idx as i64 - self.tail
    }

    pub fn sample_vec<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<i64> {
        (0..len).map(|_| self.sample(rng)).collect()
    }
}

/// ρ_s(x) = exp(-π x² / s²).
pub fn rho(s: f64, x: i64) -> f64 {
    let x = x as f64;
    (-std::f64::consts::PI * x * x / (s * s)).exp()
}

/// One draw from the truncated D_{Z,s}.
pub fn gauss_sample<R: Rng + ?Sized>(s: f64, rng: &mut R) -> Result<i64, ModqError> {
    Ok(GaussianSampler::new(s)?.sample(rng))
}

/// Power-iteration estimate of the largest singular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub value: f64,
    /// ‖G v − λ v‖ for the final unit iterate, G the Gram matrix.
    pub residual: f64,
    pub iterations: usize,
}

impl SigmaEstimate {
    /// Estimate inflated by the Gram residual, for conservative comparisons.
    pub fn certified_upper(&self) -> f64 {
        (self.value * self.value + self.residual).sqrt()
    }
}

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 10_000;

/// Largest singular value of the real lift of `r`.
pub fn sigma_max(r: &IntMatrix) -> SigmaEstimate {
    let gram = gram_matrix(r);
    let dim = gram.len();
    if dim == 0 || gram.iter().all(|row| row.iter().all(|&x| x == 0.0)) {
        return SigmaEstimate {
            value: 0.0,
            residual: 0.0,
            iterations: 0,
        };
    }
    // Fixed, non-symmetric start so the top eigenvector is not orthogonal to it in practice.
    let mut v: Vec<f64> = (0..dim)
        .map(|i| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3)
        .collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    let mut iterations = 0;
    while iterations < POWER_MAX_ITERS {
        iterations += 1;
        let mut w = sym_mul(&gram, &v);
        let next = dot(&v, &w);
        let norm = normalize(&mut w);
        if norm == 0.0 {
            break;
        }
        v = w;
        let converged = (next - lambda).abs() <= POWER_TOL * next.abs().max(1.0);
        lambda = next;
        if converged {
            break;
        }
    }
    let gv = sym_mul(&gram, &v);
    let rayleigh = dot(&v, &gv);
    let residual = gv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - rayleigh * b).powi(2))
        .sum::<f64>()
        .sqrt();
    SigmaEstimate {
        value: rayleigh.max(0.0).sqrt(),
        residual,
        iterations,
    }
}

fn gram_matrix(r: &IntMatrix) -> Vec<Vec<f64>> {
    // Use the smaller of RᵀR and RRᵀ; both share the nonzero spectrum.
    let (outer, inner, transpose) = if r.cols <= r.rows {
        (r.cols, r.rows, false)
    } else {
        (r.rows, r.cols, true)
    };
    let at = |a: usize, b: usize| -> f64 {
        if transpose {
            r.get(a, b) as f64
        } else {
            r.get(b, a) as f64
        }
    };
    let mut g = vec![vec![0.0; outer]; outer];
    for i in 0..outer {
        for j in i..outer {
            let s: f64 = (0..inner).map(|l| at(i, l) * at(j, l)).sum();
            g[i][j] = s;
            g[j][i] = s;
        }
    }
    g
}

fn sym_mul(g: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    g.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}
