//! Gadget-trapdoor lattice functions: key generation, g_A(s, e) = A s + e and
//! noise-tolerant inversion through the gadget matrix.

use rand::Rng;

use crate::modq::{GaussianSampler, IntMatrix, ModqError, Modulus, ZqMatrix};

/// Constant in the σ_max tail bound, ≈ 1/√(2π).
pub const SIGMA_CONST: f64 = 0.39894228;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpParams {
    pub modulus: Modulus,
    pub n_dim: usize,
    pub alpha_q: f64,
    pub r_max: f64,
}

impl MpParams {
    pub fn k(&self) -> usize {
        self.modulus.k() as usize
    }

    pub fn m_rows(&self) -> usize {
        self.n_dim * (1 + self.k())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpKeyPair {
    pub a_u: ZqMatrix,
    /// Nk × 2N, split as [R1 | R2].
    pub r: IntMatrix,
    pub a_hat: ZqMatrix,
}

pub fn gadget_vec(q: &Modulus) -> Vec<u64> {
    (0..q.k()).map(|j| 1u64 << j).collect()
}

/// G = I_N ⊗ g, an (N k) × N matrix.
pub fn gadget_mat(n_dim: usize, q: &Modulus) -> ZqMatrix {
    let k = q.k() as usize;
    let mut g = ZqMatrix::zeros(n_dim * k, n_dim);
    for i in 0..n_dim {
        for j in 0..k {
            g.set(i * k + j, i, 1u64 << j);
        }
    }
    g
}

/// Bound C·s·√N·(√k + √2 + 1) on σ_max of an (N k) × 2N Gaussian matrix of width s.
pub fn sigma_tail_bound(alpha_q: f64, n_dim: usize, k: u32) -> f64 {
    SIGMA_CONST * alpha_q * (n_dim as f64).sqrt() * ((k as f64).sqrt() + 2f64.sqrt() + 1.0)
}

/// Largest r_max satisfying √(σ² + 1) ≤ q / (4 r_max) for σ = `sigma`.
pub fn r_max_for_sigma(q: &Modulus, sigma: f64) -> f64 {
    q.q() as f64 / (4.0 * (sigma * sigma + 1.0).sqrt())
}

/// A_u = [Â ; G − R2 Â − R1].
pub fn assemble_a_u(a_hat: &ZqMatrix, r: &IntMatrix, q: &Modulus) -> Result<ZqMatrix, ModqError> {
    let n = a_hat.cols();
    let r1 = r.col_block(0, n).to_zq(q);
    let r2 = r.col_block(n, 2 * n).to_zq(q);
    let g = gadget_mat(n, q);
    let bottom = g.sub(q, &r2.matmul(q, a_hat)?)?.sub(q, &r1)?;
    ZqMatrix::vstack(a_hat, &bottom)
}

pub fn mp_gen<R: Rng + ?Sized>(p: &MpParams, rng: &mut R) -> Result<MpKeyPair, ModqError> {
    let q = &p.modulus;
    let gauss = GaussianSampler::new(p.alpha_q)?;
    let a_hat = ZqMatrix::uniform(p.n_dim, p.n_dim, q, rng);
    let r = IntMatrix::gaussian(p.n_dim * p.k(), 2 * p.n_dim, &gauss, rng);
    let a_u = assemble_a_u(&a_hat, &r, q)?;
    Ok(MpKeyPair { a_u, r, a_hat })
}

/// g_A(s, e) = A s + e.
pub fn g_eval(a: &ZqMatrix, s: &[u64], e: &[u64], q: &Modulus) -> Result<Vec<u64>, ModqError> {
    q.vec_add(&a.matvec(q, s)?, e)
}

/// Recovers s from y = g·s + e, one bit at a time from the most significant end.
pub fn invert_small_gadget(y: &[u64], q: &Modulus) -> u64 {
    let k = q.k() as usize;
    debug_assert_eq!(y.len(), k);
    let quarter = (q.q() / 4) as i64;
    let mut s = 0u64;
    for i in (0..k).rev() {
        let t = q.center(q.sub(y[i], q.mul(1u64 << i, s)));
        if !(-quarter <= t && t < quarter) {
            s += 1u64 << (k - 1 - i);
        }
    }
    s
}

pub fn invert_gadget(y: &[u64], q: &Modulus) -> Vec<u64> {
    y.chunks(q.k() as usize)
        .map(|block| invert_small_gadget(block, q))
        .collect()
}

/// Returns the (s, e) with y = A_u s + e when one exists with ‖(s, e)‖₂ ≤ r_max, else `None`.
pub fn mp_invert(
    r: &IntMatrix,
    a_u: &ZqMatrix,
    y: &[u64],
    r_max: f64,
    q: &Modulus,
) -> Option<(Vec<u64>, Vec<u64>)> {
    let n = a_u.cols();
    if y.len() != a_u.rows() || r.cols() != 2 * n || r.rows() + n != a_u.rows() {
        return None;
    }
    let (y_top, y_bot) = y.split_at(n);
    // [R2 | I] y = G s + (small)
    let r2 = r.col_block(n, 2 * n).to_zq(q);
    let z = q.vec_add(&r2.matvec(q, y_top).ok()?, y_bot).ok()?;
    let s = invert_gadget(&z, q);
    let e = q.vec_sub(y, &a_u.matvec(q, &s).ok()?).ok()?;
    let norm_sq: f64 = s
        .iter()
        .chain(&e)
        .map(|&x| (q.center(x) as f64).powi(2))
        .sum();
    (norm_sq.sqrt() <= r_max).then_some((s, e))
}

/// Certified check of √(σ_max(R)² + 1) ≤ q / (4 r_max).
pub fn injectivity_holds(r: &IntMatrix, q: &Modulus, r_max: f64) -> bool {
    let est = r.sigma_max();
    let upper = est.certified_upper();
    (upper * upper + 1.0).sqrt() <= q.q() as f64 / (4.0 * r_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn q(k: u32) -> Modulus {
        Modulus::new(k).unwrap()
    }

    #[test]
    fn gadget_shapes() {
        assert_eq!(gadget_vec(&q(3)), vec![1, 2, 4]);
        let g = gadget_mat(2, &q(2));
        let expect =
            ZqMatrix::from_rows(&[vec![1, 0], vec![2, 0], vec![0, 1], vec![0, 2]]).unwrap();
        assert_eq!(g, expect);
        let m = q(5);
        let s = vec![7, 30];
        let gs = gadget_mat(2, &m).matvec(&m, &s).unwrap();
        for i in 0..2 {
            for j in 0..5 {
                assert_eq!(gs[i * 5 + j], m.mul(1 << j, s[i]));
            }
        }
    }

    #[test]
    fn small_gadget_examples() {
        let m = q(3);
        assert_eq!(invert_small_gadget(&[5, 2, 4], &m), 5);
        assert_eq!(invert_small_gadget(&[0, 0, 0], &m), 0);
        assert_eq!(invert_small_gadget(&[6, 1, 5], &m), 5);
    }

    fn all_noise(k: usize, bound: i64) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (-bound..=bound).map(move |x| {
                        let mut w = v.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn small_gadget_exhaustive_q8() {
        let m = q(3);
        let g = gadget_vec(&m);
        for s in 0..8u64 {
            for e in all_noise(3, 1) {
                let y: Vec<u64> = g
                    .iter()
                    .zip(&e)
                    .map(|(&gi, &ei)| m.add(m.mul(gi, s), m.from_i64(ei)))
                    .collect();
                assert_eq!(invert_small_gadget(&y, &m), s, "s={s} e={e:?}");
            }
        }
    }

    #[test]
    fn gadget_blocks() {
        let m = q(4);
        assert_eq!(invert_gadget(&[0; 8], &m), vec![0, 0]);
        let g = gadget_mat(2, &m);
        let y = g.matvec(&m, &[3, 11]).unwrap();
        assert_eq!(invert_gadget(&y, &m), vec![3, 11]);
    }

    fn toy() -> MpParams {
        let modulus = q(12);
        let alpha_q = 2.0;
        let r_max = r_max_for_sigma(&modulus, sigma_tail_bound(alpha_q, 2, 12));
        MpParams {
            modulus,
            n_dim: 2,
            alpha_q,
            r_max,
        }
    }

    #[test]
    fn gen_structure_and_determinism() {
        let p = toy();
        let a = mp_gen(&p, &mut rng::stream(9, 0)).unwrap();
        let b = mp_gen(&p, &mut rng::stream(9, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.a_u.rows(), p.m_rows());
        assert_eq!(assemble_a_u(&a.a_hat, &a.r, &p.modulus).unwrap(), a.a_u);
    }

    #[test]
    fn sigma_tail_bound_holds_empirically() {
        let p = toy();
        let bound = sigma_tail_bound(p.alpha_q, p.n_dim, 12);
        let ok = (0..200)
            .filter(|&i| {
                mp_gen(&p, &mut rng::stream(21, i))
                    .unwrap()
                    .r
                    .sigma_max()
                    .value
                    <= bound
            })
            .count();
        // 1 − 2e^{-N} ≈ 0.73 is the guaranteed floor at N = 2
        assert!(ok as f64 >= 200.0 * (1.0 - 2.0 * (-2f64).exp()), "{ok}");
    }

    #[test]
    fn linearity_and_zero() {
        let p = toy();
        let m = p.modulus;
        let kp = mp_gen(&p, &mut rng::stream(1, 1)).unwrap();
        let zero = g_eval(&kp.a_u, &[0, 0], &vec![0; p.m_rows()], &m).unwrap();
        assert!(zero.iter().all(|&x| x == 0));
        let mut r = rng::stream(1, 2);
        let s1 = m.uniform_vec(2, &mut r);
        let s2 = m.uniform_vec(2, &mut r);
        let e1 = m.uniform_vec(p.m_rows(), &mut r);
        let e2 = m.uniform_vec(p.m_rows(), &mut r);
        let lhs = g_eval(
            &kp.a_u,
            &m.vec_add(&s1, &s2).unwrap(),
            &m.vec_add(&e1, &e2).unwrap(),
            &m,
        )
        .unwrap();
        let rhs = m
            .vec_add(
                &g_eval(&kp.a_u, &s1, &e1, &m).unwrap(),
                &g_eval(&kp.a_u, &s2, &e2, &m).unwrap(),
            )
            .unwrap();
        assert_eq!(lhs, rhs);
        assert!(g_eval(&kp.a_u, &[0], &e1, &m).is_err());
    }

    #[test]
    fn invert_round_trip_and_uniform_rejection() {
        let p = toy();
        let m = p.modulus;
        let mut r = rng::stream(3, 0);
        let kp = loop {
            let kp = mp_gen(&p, &mut r).unwrap();
            if injectivity_holds(&kp.r, &m, p.r_max) {
                break kp;
            }
        };
        let dim = p.n_dim + p.m_rows();
        let bound = (p.r_max / (dim as f64).sqrt()).floor() as i64;
        for _ in 0..10_000 {
            let s: Vec<u64> = (0..p.n_dim)
                .map(|_| m.from_i64(r.gen_range(-bound..=bound)))
                .collect();
            let e: Vec<u64> = (0..p.m_rows())
                .map(|_| m.from_i64(r.gen_range(-bound..=bound)))
                .collect();
            let y = g_eval(&kp.a_u, &s, &e, &m).unwrap();
            assert_eq!(mp_invert(&kp.r, &kp.a_u, &y, p.r_max, &m), Some((s, e)));
        }
        let rejected = (0..1000)
            .filter(|_| {
                mp_invert(
                    &kp.r,
                    &kp.a_u,
                    &m.uniform_vec(p.m_rows(), &mut r),
                    p.r_max,
                    &m,
                )
                .is_none()
            })
            .count();
        assert!(rejected >= 995, "{rejected}");
        let zero = vec![0; p.m_rows()];
        assert_eq!(
            mp_invert(&kp.r, &kp.a_u, &zero, p.r_max, &m),
            Some((vec![0, 0], zero.clone()))
        );
    }

    #[test]
    fn injective_on_ball_exhaustive_micro() {
        // N = 1, k = 4, R = 0 meets the injectivity check for r_max = 4.
        let m = q(4);
        let r = IntMatrix::zeros(4, 2);
        assert!(injectivity_holds(&r, &m, 4.0));
        let mut rr = rng::stream(4, 0);
        for _ in 0..20 {
            let a_hat = ZqMatrix::uniform(1, 1, &m, &mut rr);
            let a_u = assemble_a_u(&a_hat, &r, &m).unwrap();
            let mut seen = std::collections::HashMap::new();
            for s in -1i64..=1 {
                for e in all_noise(5, 1) {
                    let sv = vec![m.from_i64(s)];
                    let ev: Vec<u64> = e.iter().map(|&x| m.from_i64(x)).collect();
                    let norm =
                        ((s * s) as f64 + e.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
                    if norm > 4.0 {
                        continue;
                    }
                    let y = g_eval(&a_u, &sv, &ev, &m).unwrap();
                    if let Some(prev) = seen.insert(y.clone(), (sv.clone(), ev.clone())) {
                        panic!("collision {prev:?} vs {:?}", (sv, ev));
                    }
                    assert_eq!(mp_invert(&r, &a_u, &y, 4.0, &m), Some((sv, ev)));
                }
            }
        }
    }
}
