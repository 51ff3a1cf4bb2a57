//! Binary key (`.hghzk`) and trapdoor (`.hghzt`) containers.
//!
//! Layout: magic `HGHZ1`, a kind byte (`K` or `T`), then u64 LE fields
//! regime, k, N, n, μ, the f64 bit patterns of αq and r_max, then A row-major
//! and y0 for keys; A, R (i64), d0, s0, e0 for trapdoors.

use super::{FamilyError, HghzKey, HghzTrapdoor, Params, Regime};
use crate::modq::{IntMatrix, Modulus, ZqMatrix};

const MAGIC: &[u8; 5] = b"HGHZ1";
const KIND_KEY: u8 = b'K';
const KIND_TRAPDOOR: u8 = b'T';

fn put_header(out: &mut Vec<u8>, kind: u8, p: &Params) {
    out.extend_from_slice(MAGIC);
    out.push(kind);
    let regime = match p.regime {
        Regime::Secure => 0u64,
        Regime::Toy => 1,
    };
    for v in [
        regime,
        p.k() as u64,
        p.n_dim as u64,
        p.n as u64,
        p.mu,
        p.alpha_q.to_bits(),
        p.r_max.to_bits(),
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FamilyError> {
        if self.buf.len() < n {
            return Err(FamilyError::Format("truncated".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64, FamilyError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn residues(&mut self, n: usize, q: &Modulus) -> Result<Vec<u64>, FamilyError> {
        (0..n)
            .map(|_| {
                let v = self.u64()?;
                if v >= q.q() {
                    return Err(FamilyError::Format(format!("entry {v} not reduced mod q")));
                }
                Ok(v)
            })
            .collect()
    }

    fn finish(&self) -> Result<(), FamilyError> {
        if !self.buf.is_empty() {
            return Err(FamilyError::Format(format!(
                "{} trailing bytes",
                self.buf.len()
            )));
        }
        Ok(())
    }
}

fn get_header(r: &mut Reader<'_>, kind: u8) -> Result<Params, FamilyError> {
    if r.take(5)? != MAGIC {
        return Err(FamilyError::Format("bad magic".into()));
    }
    let got = r.take(1)?[0];
    if got != kind {
        return Err(FamilyError::Format(format!(
            "expected kind {}, found {}",
            kind as char, got as char
        )));
    }
    let regime = match r.u64()? {
        0 => Regime::Secure,
        1 => Regime::Toy,
        other => return Err(FamilyError::Format(format!("unknown regime {other}"))),
    };
    let k = r.u64()?;
    let n_dim = r.u64()? as usize;
    let n = r.u64()? as usize;
    let mu = r.u64()?;
    let alpha_q = f64::from_bits(r.u64()?);
    let r_max = f64::from_bits(r.u64()?);
    if k == 0 || k > Modulus::MAX_K as u64 {
        return Err(FamilyError::Format(format!("k = {k} out of range")));
    }
    // guard the allocation sizes before trusting the dimensions
    if n_dim == 0 || n == 0 || n_dim > 1 << 16 || n > 1 << 16 || mu == 0 {
        return Err(FamilyError::Format("dimensions out of range".into()));
    }
    let modulus = Modulus::new(k as u32)?;
    if !(alpha_q > 0.0 && alpha_q.is_finite() && r_max > 0.0 && r_max < modulus.q() as f64 / 4.0) {
        return Err(FamilyError::Format("width or radius out of range".into()));
    }
    let dim = (n_dim + n_dim * (1 + k as usize) + n) as f64;
    Ok(Params {
        modulus,
        n_dim,
        n,
        alpha_q,
        r_max,
        r_safe: r_max - alpha_q * dim.sqrt(),
        mu,
        regime,
    })
}

pub fn write_key(key: &HghzKey) -> Vec<u8> {
    let mut out = Vec::new();
    put_header(&mut out, KIND_KEY, &key.params);
    for &v in key.a.data().iter().chain(&key.y0) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_key(bytes: &[u8]) -> Result<HghzKey, FamilyError> {
    let mut r = Reader { buf: bytes };
    let p = get_header(&mut r, KIND_KEY)?;
    let rows = p.m_rows() + p.n;
    let a = ZqMatrix::from_data(rows, p.n_dim, r.residues(rows * p.n_dim, &p.modulus)?)?;
    let y0 = r.residues(rows, &p.modulus)?;
    r.finish()?;
    Ok(HghzKey { params: p, a, y0 })
}

pub fn write_trapdoor(t: &HghzTrapdoor) -> Vec<u8> {
    let mut out = Vec::new();
    put_header(&mut out, KIND_TRAPDOOR, &t.params);
    for &v in t.a.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in t.r.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &b in &t.d0 {
        out.extend_from_slice(&(b as u64).to_le_bytes());
    }
    for &v in t.s0.iter().chain(&t.e0) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_trapdoor(bytes: &[u8]) -> Result<HghzTrapdoor, FamilyError> {
    let mut r = Reader { buf: bytes };
    let p = get_header(&mut r, KIND_TRAPDOOR)?;
    let rows = p.m_rows() + p.n;
    let a = ZqMatrix::from_data(rows, p.n_dim, r.residues(rows * p.n_dim, &p.modulus)?)?;
    let r_rows = p.n_dim * p.k() as usize;
    let r_data = (0..r_rows * 2 * p.n_dim)
        .map(|_| r.u64().map(|v| v as i64))
        .collect::<Result<Vec<_>, _>>()?;
    let rm = IntMatrix::from_data(r_rows, 2 * p.n_dim, r_data)?;
    let d0 = (0..p.n)
        .map(|_| match r.u64()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(FamilyError::Format(format!("support bit {v}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let s0 = r.residues(p.n_dim, &p.modulus)?;
    let e0 = r.residues(rows, &p.modulus)?;
    r.finish()?;
    Ok(HghzTrapdoor {
        params: p,
        r: rm,
        d0,
        s0,
        e0,
        a,
    })
}

const DIST_MAGIC: &[u8; 6] = b"HGHZD1";

/// Container of per-party blobs: magic, count, then (party index, length, bytes) records.
pub fn write_container(parts: &[(u64, Vec<u8>)]) -> Vec<u8> {
    let mut out = DIST_MAGIC.to_vec();
    out.extend_from_slice(&(parts.len() as u64).to_le_bytes());
    for (idx, blob) in parts {
        out.extend_from_slice(&idx.to_le_bytes());
        out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
        out.extend_from_slice(blob);
    }
    out
}

pub fn read_container(bytes: &[u8]) -> Result<Vec<(u64, Vec<u8>)>, FamilyError> {
    let mut r = Reader { buf: bytes };
    if r.take(6)? != DIST_MAGIC {
        return Err(FamilyError::Format("bad container magic".into()));
    }
    let count = r.u64()?;
    let mut out = Vec::new();
    for _ in 0..count {
        let idx = r.u64()?;
        let len = r.u64()? as usize;
        out.push((idx, r.take(len)?.to_vec()));
    }
    r.finish()?;
    Ok(out)
}
