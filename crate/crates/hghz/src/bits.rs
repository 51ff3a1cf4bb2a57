//! Bit-string helpers. Bit strings are `Vec<bool>` with index 0 first.

pub fn xor(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// ⟨a, b⟩ over GF(2).
pub fn inner(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).fold(false, |acc, (x, y)| acc ^ (x & y))
}

pub fn weight(a: &[bool]) -> usize {
    a.iter().filter(|&&x| x).count()
}

pub fn to_string(a: &[bool]) -> String {
    a.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

pub fn parse(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn random<R: rand::Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<bool> {
    (0..len).map(|_| rng.gen()).collect()
}

pub fn to_u64(a: &[bool]) -> u64 {
    a.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
}

pub fn from_u64(x: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| (x >> i) & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let b = parse("0101").unwrap();
        assert_eq!(to_string(&b), "0101");
        assert!(parse("01x").is_none());
        assert_eq!(from_u64(to_u64(&b), 4), b);
        assert!(inner(&b, &parse("0100").unwrap()));
        assert_eq!(weight(&b), 2);
    }
}
