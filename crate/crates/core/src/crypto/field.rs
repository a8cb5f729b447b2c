//! Prime-field arithmetic over Z_q.
//!
//! The modulus is a runtime parameter: desk-scale runs use a small prime so
//! that exhaustive counting oracles can sweep the whole field, while the
//! large-parameter mode uses a 256-bit prime. Elements are reduced
//! representatives stored as big integers; the canonical encoding is
//! fixed-width big-endian with width `ceil(bits(q)/8)`.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::wire::{WireError, WireResult};

/// A reduced element of Z_q. Arithmetic goes through [`Field`], which holds
/// the modulus; mixing elements from different fields is a logic error that
/// debug assertions in [`Field`] catch by range.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Fe(BigUint);

impl Fe {
    pub fn to_u64(&self) -> u64 {
        let d = self.0.to_u64_digits();
        match d.len() {
            0 => 0,
            1 => d[0],
            _ => panic!("field element does not fit in u64"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub(crate) fn repr(&self) -> &BigUint {
        &self.0
    }
}

#[derive(Clone, Debug)]
pub struct Field {
    q: BigUint,
    width: usize,
}

impl Field {
    pub fn new(q: BigUint) -> Self {
        assert!(q > BigUint::from(2u8), "modulus too small");
        let width = ((q.bits() as usize) + 7) / 8;
        Self { q, width }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.q
    }

    /// Canonical encoding width in bytes.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn zero(&self) -> Fe {
        Fe(BigUint::zero())
    }

    pub fn one(&self) -> Fe {
        Fe(BigUint::one())
    }

    pub fn from_u64(&self, v: u64) -> Fe {
        Fe(BigUint::from(v) % &self.q)
    }

    pub fn from_biguint(&self, v: BigUint) -> Fe {
        Fe(v % &self.q)
    }

    /// Uniform element via rejection sampling on the canonical width.
    pub fn rand(&self, rng: &mut impl RngCore) -> Fe {
        let bits = self.q.bits();
        let nbytes = ((bits as usize) + 7) / 8;
        let shift = (nbytes * 8) as u64 - bits;
        loop {
            let mut buf = vec![0u8; nbytes];
            rng.fill_bytes(&mut buf);
            let mut v = BigUint::from_bytes_be(&buf);
            v >>= shift as usize;
            if v < self.q {
                return Fe(v);
            }
        }
    }

    pub fn add(&self, a: &Fe, b: &Fe) -> Fe {
        let mut v = &a.0 + &b.0;
        if v >= self.q {
            v -= &self.q;
        }
        Fe(v)
    }

    pub fn sub(&self, a: &Fe, b: &Fe) -> Fe {
        if a.0 >= b.0 {
            Fe(&a.0 - &b.0)
        } else {
            Fe(&self.q - &b.0 + &a.0)
        }
    }

    pub fn neg(&self, a: &Fe) -> Fe {
        if a.0.is_zero() {
            self.zero()
        } else {
            Fe(&self.q - &a.0)
        }
    }

    pub fn mul(&self, a: &Fe, b: &Fe) -> Fe {
        Fe((&a.0 * &b.0) % &self.q)
    }

    /// Multiplicative inverse via Fermat; panics on zero (callers guard).
    pub fn inv(&self, a: &Fe) -> Fe {
        assert!(!a.0.is_zero(), "inverse of zero");
        let e = &self.q - BigUint::from(2u8);
        Fe(a.0.modpow(&e, &self.q))
    }

    pub fn pow_u64(&self, a: &Fe, e: u64) -> Fe {
        Fe(a.0.modpow(&BigUint::from(e), &self.q))
    }

    pub fn encode(&self, a: &Fe) -> Vec<u8> {
        let mut bytes = a.0.to_bytes_be();
        assert!(bytes.len() <= self.width);
        let mut out = vec![0u8; self.width - bytes.len()];
        out.append(&mut bytes);
        out
    }

    pub fn decode(&self, buf: &[u8]) -> WireResult<Fe> {
        if buf.len() != self.width {
            return Err(WireError::Invalid("field element width"));
        }
        let v = BigUint::from_bytes_be(buf);
        if v >= self.q {
            return Err(WireError::Invalid("field element out of range"));
        }
        Ok(Fe(v))
    }

    /// Reduce arbitrary bytes into the field (used for hash-to-scalar).
    pub fn from_bytes_reduced(&self, buf: &[u8]) -> Fe {
        Fe(BigUint::from_bytes_be(buf) % &self.q)
    }

    /// Iterate the whole field; only sensible for small moduli in counting
    /// oracles. Panics if q does not fit in u64.
    pub fn iter_all(&self) -> impl Iterator<Item = Fe> + '_ {
        let q = self
            .q
            .to_u64_digits()
            .first()
            .copied()
            .expect("modulus must fit in u64 for exhaustive iteration");
        assert!(self.q.bits() <= 64);
        (0..q).map(|v| Fe(BigUint::from(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f97() -> Field {
        Field::new(BigUint::from(97u8))
    }

    #[test]
    fn arithmetic_mod_97() {
        let f = f97();
        let a = f.from_u64(90);
        let b = f.from_u64(10);
        assert_eq!(f.add(&a, &b), f.from_u64(3));
        assert_eq!(f.sub(&b, &a), f.from_u64(17));
        assert_eq!(f.mul(&a, &b), f.from_u64(900 % 97));
        assert_eq!(f.neg(&f.zero()), f.zero());
    }

    #[test]
    fn inverse_is_inverse_everywhere() {
        let f = f97();
        for v in 1..97u64 {
            let a = f.from_u64(v);
            assert_eq!(f.mul(&a, &f.inv(&a)), f.one(), "v={v}");
        }
    }

    #[test]
    fn encoding_is_fixed_width_and_rejects_out_of_range() {
        let f = f97();
        assert_eq!(f.width(), 1);
        assert_eq!(f.encode(&f.from_u64(5)), vec![5]);
        assert!(f.decode(&[97]).is_err());
        assert!(f.decode(&[5, 0]).is_err());
        assert_eq!(f.decode(&[96]).unwrap(), f.from_u64(96));
    }

    #[test]
    fn rand_is_in_range_and_covers_field() {
        let f = Field::new(BigUint::from(31u8));
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut seen = [false; 31];
        for _ in 0..2000 {
            let v = f.rand(&mut rng).to_u64();
            assert!(v < 31);
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }
}
