//! Bit layout of the Hadamard-measured register.
//!
//! `[c][d: n][s: N×k][e: (M+n)×k]`, every Z_q coordinate as a k-bit
//! little-endian residue. Since q = 2^k the map is a bijection onto {0,1}^L.

use thiserror::Error;

use crate::family::{DomainPoint, Params};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("expected {expected} bits, got {got}")]
    Length { expected: usize, got: usize },
    #[error("coordinate {value} is not below 2^{k}")]
    Coordinate { value: u64, k: u32 },
    #[error("point has the wrong shape")]
    Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitCodec {
    pub k: u32,
    pub n_dim: usize,
    pub e_len: usize,
    pub n: usize,
}

impl BitCodec {
    pub fn new(p: &Params) -> Self {
        Self {
            k: p.k(),
            n_dim: p.n_dim,
            e_len: p.m_rows() + p.n,
            n: p.n,
        }
    }

    /// Total register length L.
    pub fn len(&self) -> usize {
        1 + self.n + (self.n_dim + self.e_len) * self.k as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, x: &DomainPoint) -> Result<Vec<bool>, CodecError> {
        if x.s.len() != self.n_dim || x.e.len() != self.e_len || x.d.len() != self.n {
            return Err(CodecError::Shape);
        }
        let mut out = Vec::with_capacity(self.len());
        out.push(x.c);
        out.extend_from_slice(&x.d);
        for &v in x.s.iter().chain(&x.e) {
            if self.k < 64 && v >> self.k != 0 {
                return Err(CodecError::Coordinate {
                    value: v,
                    k: self.k,
                });
            }
            out.extend((0..self.k).map(|j| (v >> j) & 1 == 1));
        }
        Ok(out)
    }

    pub fn decode(&self, bits: &[bool]) -> Result<DomainPoint, CodecError> {
        if bits.len() != self.len() {
            return Err(CodecError::Length {
                expected: self.len(),
                got: bits.len(),
            });
        }
        let k = self.k as usize;
        let coord = |i: usize| {
            let start = 1 + self.n + i * k;
            bits[start..start + k]
                .iter()
                .enumerate()
                .fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j))
        };
        Ok(DomainPoint {
            c: bits[0],
            d: bits[1..1 + self.n].to_vec(),
            s: (0..self.n_dim).map(coord).collect(),
            e: (self.n_dim..self.n_dim + self.e_len).map(coord).collect(),
        })
    }
}
