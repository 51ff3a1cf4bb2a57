//! Compiled family: n single-bit instances sharing the bit c.
//!
//! Party i holds (k^{(i)}, t^{(i)}) with a one-bit support d0[i]. The image is
//! the concatenation of local images, and the global register layout is
//! `[c][block_1]…[block_n]` with `block_i = [d_i][s_i][e_i]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::family::{self, DomainPoint, FamilyError, HghzKey, HghzTrapdoor, Params};
use crate::qsim::codec::BitCodec;

pub type LocalKey = HghzKey;
pub type LocalTrapdoor = HghzTrapdoor;

/// Per-party symbol: correction bit, off-support marker ✗, or local abort ⊥.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartInfoSymbol {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "x")]
    Cross,
    #[serde(rename = "bot")]
    Bot,
}

impl PartInfoSymbol {
    pub fn from_bit(b: bool) -> Self {
        if b {
            Self::One
        } else {
            Self::Zero
        }
    }

    /// The correction bit for 0/1 symbols.
    pub fn bit(self) -> Option<bool> {
        match self {
            Self::Zero => Some(false),
            Self::One => Some(true),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Self::Zero => '0',
            Self::One => '1',
            Self::Cross => 'x',
            Self::Bot => '⊥',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalBlock {
    pub s: Vec<u64>,
    pub e: Vec<u64>,
    pub d: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistPoint {
    pub c: bool,
    pub blocks: Vec<LocalBlock>,
}

impl DistPoint {
    pub fn local(&self, i: usize) -> DomainPoint {
        to_local(self.c, &self.blocks[i])
    }
}

fn to_local(c: bool, b: &LocalBlock) -> DomainPoint {
    DomainPoint {
        s: b.s.clone(),
        e: b.e.clone(),
        c,
        d: vec![b.d],
    }
}

fn to_block(x: DomainPoint) -> LocalBlock {
    LocalBlock {
        s: x.s,
        e: x.e,
        d: x.d[0],
    }
}

/// Ordered local keys sharing one single-bit parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct DistKey {
    parts: Vec<LocalKey>,
}

impl DistKey {
    pub fn new(parts: Vec<LocalKey>) -> Result<Self, FamilyError> {
        let first = parts
            .first()
            .ok_or_else(|| FamilyError::Params("no parties".into()))?;
        if first.params.n != 1 {
            return Err(FamilyError::Params(
                "local keys must carry a single support bit".into(),
            ));
        }
        if parts.iter().any(|k| k.params != first.params) {
            return Err(FamilyError::Params(
                "local keys use different parameters".into(),
            ));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[LocalKey] {
        &self.parts
    }

    pub fn params(&self) -> &Params {
        &self.parts[0].params
    }

    pub fn parties(&self) -> usize {
        self.parts.len()
    }

    pub fn local_image_len(&self) -> usize {
        self.params().m_rows() + 1
    }

    pub fn image_len(&self) -> usize {
        self.parties() * self.local_image_len()
    }

    pub fn codec(&self) -> DistCodec {
        DistCodec::new(self.params(), self.parties())
    }

    /// Party i's block of a concatenated image.
    pub fn block<'a>(&self, y: &'a [u64], i: usize) -> Option<&'a [u64]> {
        let len = self.local_image_len();
        (y.len() == self.image_len() && i < self.parties()).then(|| &y[i * len..(i + 1) * len])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistCodec {
    pub local: BitCodec,
    pub parties: usize,
}

impl DistCodec {
    pub fn new(local: &Params, parties: usize) -> Self {
        Self {
            local: BitCodec::new(local),
            parties,
        }
    }

    pub fn block_len(&self) -> usize {
        self.local.len() - 1
    }

    pub fn len(&self) -> usize {
        1 + self.parties * self.block_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = 1 + i * self.block_len();
        start..start + self.block_len()
    }

    pub fn encode_block(&self, b: &LocalBlock) -> Vec<bool> {
        let mut enc = self
            .local
            .encode(&to_local(false, b))
            .expect("block shape matches the codec");
        enc.remove(0);
        enc
    }

    pub fn encode(&self, x: &DistPoint) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.len());
        out.push(x.c);
        for b in &x.blocks {
            out.extend(self.encode_block(b));
        }
        out
    }

    pub fn decode(&self, bits: &[bool]) -> Option<DistPoint> {
        if bits.len() != self.len() {
            return None;
        }
        let blocks = (0..self.parties)
            .map(|i| {
                let mut local = vec![false];
                local.extend_from_slice(&bits[self.block_range(i)]);
                self.local.decode(&local).map(to_block).ok()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(DistPoint { c: bits[0], blocks })
    }

    /// Splits b into (b_c, b^{(1)}, …, b^{(n)}).
    pub fn split<'a>(&self, b: &'a [bool]) -> Option<(bool, Vec<&'a [bool]>)> {
        (b.len() == self.len()).then(|| {
            (
                b[0],
                (0..self.parties).map(|i| &b[self.block_range(i)]).collect(),
            )
        })
    }
}

pub fn gen_loc<R: Rng + ?Sized>(
    p: &Params,
    d0_bit: bool,
    rng: &mut R,
) -> Result<(LocalKey, LocalTrapdoor), FamilyError> {
    if p.n != 1 {
        return Err(FamilyError::Params(
            "local parameters must have n = 1".into(),
        ));
    }
    family::gen(p, &[d0_bit], rng)
}

/// Honest per-party generation retried until the local check passes.
pub fn gen_loc_checked<R: Rng + ?Sized>(
    p: &Params,
    d0_bit: bool,
    rng: &mut R,
) -> Result<(LocalKey, LocalTrapdoor), FamilyError> {
    if p.n != 1 {
        return Err(FamilyError::Params(
            "local parameters must have n = 1".into(),
        ));
    }
    family::gen_checked(p, &[d0_bit], rng).map(|(k, t, _)| (k, t))
}

pub fn gen_dist<R: Rng + ?Sized>(
    p: &Params,
    d0: &[bool],
    rng: &mut R,
) -> Result<(DistKey, Vec<LocalTrapdoor>), FamilyError> {
    let (keys, traps): (Vec<_>, Vec<_>) = d0
        .iter()
        .map(|&b| gen_loc_checked(p, b, rng))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    Ok((DistKey::new(keys)?, traps))
}

pub fn eval_dist(key: &DistKey, x: &DistPoint) -> Result<Vec<u64>, FamilyError> {
    if x.blocks.len() != key.parties() {
        return Err(FamilyError::Length {
            what: "blocks",
            expected: key.parties(),
            got: x.blocks.len(),
        });
    }
    let mut y = Vec::with_capacity(key.image_len());
    for (k, b) in key.parts().iter().zip(&x.blocks) {
        y.extend(family::eval(k, &to_local(x.c, b))?);
    }
    Ok(y)
}

pub fn h_dist(x: &DistPoint) -> Vec<bool> {
    x.blocks.iter().map(|b| b.d).collect()
}

/// PartInfo for one party from its own block: ⊥ unless the block has a local
/// twin, then ✗ off-support or the h-bit of the c = 0 preimage.
pub fn part_info_loc(t: &LocalTrapdoor, y_i: &[u64]) -> PartInfoSymbol {
    match family::invert(t, y_i) {
        None => PartInfoSymbol::Bot,
        Some(_) if !t.d0[0] => PartInfoSymbol::Cross,
        Some((x0, _)) => PartInfoSymbol::from_bit(x0.d[0]),
    }
}

/// Party i's share of ⟨b, enc(x) ⊕ enc(x′)⟩; party 0 also absorbs b_c.
pub fn part_alpha_loc(
    i: usize,
    t: &LocalTrapdoor,
    y_i: &[u64],
    b_c: bool,
    b_i: &[bool],
) -> Option<bool> {
    let (x0, x1) = family::invert(t, y_i)?;
    let codec = DistCodec::new(&t.params, 1);
    if b_i.len() != codec.block_len() {
        return None;
    }
    let diff = bits::xor(
        &codec.encode_block(&to_block(x0)),
        &codec.encode_block(&to_block(x1)),
    );
    Some(bits::inner(b_i, &diff) ^ (i == 0 && b_c))
}

/// v = (PartInfo_Loc(t_i, y^{(i)}))_i.
pub fn part_info(key: &DistKey, traps: &[LocalTrapdoor], y: &[u64]) -> Vec<PartInfoSymbol> {
    traps
        .iter()
        .enumerate()
        .map(|(i, t)| {
            key.block(y, i)
                .map_or(PartInfoSymbol::Bot, |yi| part_info_loc(t, yi))
        })
        .collect()
}

pub fn check_trapdoor_dist(d0_bit: bool, t: &LocalTrapdoor, k: &LocalKey) -> bool {
    family::check_trapdoor(&[d0_bit], t, k)
}

/// δ′ = 1 − (1 − δ)^n.
pub fn delta_compose(delta: f64, n: u32) -> f64 {
    1.0 - (1.0 - delta).powi(n as i32)
}

pub fn sample_dist<R: Rng + ?Sized>(p: &Params, parties: usize, rng: &mut R) -> DistPoint {
    let c = rng.gen();
    let blocks = (0..parties)
        .map(|_| to_block(family::sample_domain(p, rng)))
        .collect();
    DistPoint { c, blocks }
}

pub fn twin_of_dist(traps: &[LocalTrapdoor], x: &DistPoint) -> DistPoint {
    let blocks = traps
        .iter()
        .zip(&x.blocks)
        .map(|(t, b)| to_block(family::twin_of(t, &to_local(x.c, b))))
        .collect();
    DistPoint { c: !x.c, blocks }
}

/// Both compiled preimages (c = 0 first) when every block has a local twin.
pub fn invert_dist(
    key: &DistKey,
    traps: &[LocalTrapdoor],
    y: &[u64],
) -> Option<(DistPoint, DistPoint)> {
    let mut b0 = Vec::with_capacity(traps.len());
    let mut b1 = Vec::with_capacity(traps.len());
    for (i, t) in traps.iter().enumerate() {
        let (x0, x1) = family::invert(t, key.block(y, i)?)?;
        b0.push(to_block(x0));
        b1.push(to_block(x1));
    }
    Some((
        DistPoint {
            c: false,
            blocks: b0,
        },
        DistPoint {
            c: true,
            blocks: b1,
        },
    ))
}

/// Every compiled preimage of y, c = 0 first.
pub fn preimages_dist(key: &DistKey, traps: &[LocalTrapdoor], y: &[u64]) -> Vec<DistPoint> {
    let mut by_c: [Option<Vec<LocalBlock>>; 2] = [Some(Vec::new()), Some(Vec::new())];
    for (i, (k, t)) in key.parts().iter().zip(traps).enumerate() {
        let Some(yi) = key.block(y, i) else {
            return Vec::new();
        };
        let local = family::preimages(k, t, yi);
        for (c, slot) in by_c.iter_mut().enumerate() {
            let found = local.iter().find(|x| x.c == (c == 1)).cloned();
            match (slot.as_mut(), found) {
                (Some(v), Some(x)) => v.push(to_block(x)),
                _ => *slot = None,
            }
        }
    }
    by_c.into_iter()
        .enumerate()
        .filter_map(|(c, blocks)| blocks.map(|blocks| DistPoint { c: c == 1, blocks }))
        .collect()
}

pub fn twin_fraction_exact_dist(traps: &[LocalTrapdoor]) -> f64 {
    traps.iter().map(family::twin_fraction_exact).product()
}
