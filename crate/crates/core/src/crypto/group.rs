//! Commitment group with two generators.
//!
//! Two backends share one interface:
//!
//! * **Mock**: the additive group Z_q with "exponentiation" g^a := a·g mod q.
//!   Discrete logs are trivial by design — counting oracles exploit that —
//!   so the mock group gives perfect hiding but no binding.
//! * **Real**: the order-q subgroup of Z_p* for a 1024-bit prime p = 2mq+1
//!   with a 256-bit prime q. Parameters are derived deterministically from a
//!   fixed label and cached process-wide; the second generator comes from
//!   hash-to-group so its discrete log w.r.t. the first is unknown.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

use super::field::{Fe, Field};
use crate::wire::{WireError, WireResult};

/// A group element; internally a reduced residue (mod q in mock mode, mod p
/// in real mode).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Ge(BigUint);

#[derive(Clone, Debug, PartialEq, Eq)]
enum Backend {
    /// Additive Z_q.
    Mock { q: BigUint },
    /// Multiplicative subgroup of Z_p* of prime order q.
    Real { p: BigUint, q: BigUint },
}

#[derive(Clone, Debug)]
pub struct GroupCtx {
    backend: Backend,
    g1: Ge,
    g2: Ge,
    width: usize,
}

impl GroupCtx {
    /// Mock group over the same q as the scalar field. Default generators are
    /// 2 and 3 (any nonzero residue generates the additive group).
    pub fn mock(q: u64) -> Self {
        assert!(q > 3);
        let qq = BigUint::from(q);
        let width = ((qq.bits() as usize) + 7) / 8;
        Self {
            backend: Backend::Mock { q: qq },
            g1: Ge(BigUint::from(2u8)),
            g2: Ge(BigUint::from(3u8)),
            width,
        }
    }

    pub fn real() -> Self {
        let p = real_params();
        let width = ((p.p.bits() as usize) + 7) / 8;
        Self {
            backend: Backend::Real { p: p.p.clone(), q: p.q.clone() },
            g1: Ge(p.g1.clone()),
            g2: Ge(p.g2.clone()),
            width,
        }
    }

    /// Order of the group = modulus of the paired scalar field.
    pub fn order(&self) -> &BigUint {
        match &self.backend {
            Backend::Mock { q } => q,
            Backend::Real { q, .. } => q,
        }
    }

    pub fn is_mock(&self) -> bool {
        matches!(self.backend, Backend::Mock { .. })
    }

    pub fn g1(&self) -> &Ge {
        &self.g1
    }

    pub fn g2(&self) -> &Ge {
        &self.g2
    }

    pub fn identity(&self) -> Ge {
        match &self.backend {
            Backend::Mock { .. } => Ge(BigUint::zero()),
            Backend::Real { .. } => Ge(BigUint::one()),
        }
    }

    /// Group operation (written multiplicatively throughout the codebase).
    pub fn op(&self, a: &Ge, b: &Ge) -> Ge {
        match &self.backend {
            Backend::Mock { q } => {
                let mut v = &a.0 + &b.0;
                if v >= *q {
                    v -= q;
                }
                Ge(v)
            }
            Backend::Real { p, .. } => Ge((&a.0 * &b.0) % p),
        }
    }

    pub fn invert(&self, a: &Ge) -> Ge {
        match &self.backend {
            Backend::Mock { q } => {
                if a.0.is_zero() {
                    Ge(BigUint::zero())
                } else {
                    Ge(q - &a.0)
                }
            }
            Backend::Real { p, q } => {
                // a^(q-1) since a has order dividing q.
                Ge(a.0.modpow(&(q - BigUint::one()), p))
            }
        }
    }

    /// Exponentiation by a scalar of the paired field.
    pub fn exp(&self, base: &Ge, e: &Fe) -> Ge {
        match &self.backend {
            Backend::Mock { q } => Ge((&base.0 * e.repr()) % q),
            Backend::Real { p, .. } => Ge(base.0.modpow(e.repr(), p)),
        }
    }

    /// g1^a · g2^b, the two-generator commitment form.
    pub fn commit2(&self, a: &Fe, b: &Fe) -> Ge {
        self.op(&self.exp(&self.g1, a), &self.exp(&self.g2, b))
    }

    /// Mock-only discrete log of an element w.r.t. g1 (used by counting
    /// oracles and to lift mock group values back into the field).
    pub fn mock_dlog_g1(&self, field: &Field, a: &Ge) -> Fe {
        match &self.backend {
            Backend::Mock { .. } => {
                let g1 = field.from_biguint(self.g1.0.clone());
                let v = field.from_biguint(a.0.clone());
                field.mul(&v, &field.inv(&g1))
            }
            Backend::Real { .. } => panic!("discrete log only available in mock mode"),
        }
    }

    /// Mock-only discrete log w.r.t. g2.
    pub fn mock_dlog_g2(&self, field: &Field, a: &Ge) -> Fe {
        match &self.backend {
            Backend::Mock { .. } => {
                let g2 = field.from_biguint(self.g2.0.clone());
                let v = field.from_biguint(a.0.clone());
                field.mul(&v, &field.inv(&g2))
            }
            Backend::Real { .. } => panic!("discrete log only available in mock mode"),
        }
    }

    pub fn encode(&self, a: &Ge) -> Vec<u8> {
        let mut bytes = a.0.to_bytes_be();
        assert!(bytes.len() <= self.width);
        let mut out = vec![0u8; self.width - bytes.len()];
        out.append(&mut bytes);
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn decode(&self, buf: &[u8]) -> WireResult<Ge> {
        if buf.len() != self.width {
            return Err(WireError::Invalid("group element width"));
        }
        let v = BigUint::from_bytes_be(buf);
        match &self.backend {
            Backend::Mock { q } => {
                if v >= *q {
                    return Err(WireError::Invalid("group element out of range"));
                }
                Ok(Ge(v))
            }
            Backend::Real { p, q } => {
                if v.is_zero() || v >= *p {
                    return Err(WireError::Invalid("group element out of range"));
                }
                // Subgroup membership check: order must divide q.
                if v.modpow(q, p) != BigUint::one() {
                    return Err(WireError::Invalid("not in the prime-order subgroup"));
                }
                Ok(Ge(v))
            }
        }
    }

    /// Derive a group element from arbitrary bytes. In real mode this maps
    /// into the subgroup by cofactor exponentiation; the result's discrete
    /// log is unknown to everyone.
    pub fn hash_to_group(&self, domain: &str, data: &[u8]) -> Ge {
        let mut ctr = 0u32;
        loop {
            let mut h = Sha256::new();
            h.update((domain.len() as u32).to_be_bytes());
            h.update(domain.as_bytes());
            h.update((data.len() as u32).to_be_bytes());
            h.update(data);
            h.update(ctr.to_be_bytes());
            let digest = h.finalize();
            match &self.backend {
                Backend::Mock { q } => {
                    let v = BigUint::from_bytes_be(&digest) % q;
                    if !v.is_zero() {
                        return Ge(v);
                    }
                }
                Backend::Real { p, q } => {
                    // Stretch the digest to the width of p, then clear the
                    // cofactor.
                    let mut wide = Vec::with_capacity(self.width + 32);
                    let mut c2 = 0u32;
                    while wide.len() < self.width {
                        let mut h2 = Sha256::new();
                        h2.update(digest);
                        h2.update(c2.to_be_bytes());
                        wide.extend_from_slice(&h2.finalize());
                        c2 += 1;
                    }
                    let x = BigUint::from_bytes_be(&wide[..self.width]) % p;
                    if !x.is_zero() {
                        let cofactor = (p - BigUint::one()) / q;
                        let e = x.modpow(&cofactor, p);
                        if e != BigUint::one() {
                            return Ge(e);
                        }
                    }
                }
            }
            ctr += 1;
        }
    }
}

struct RealParams {
    p: BigUint,
    q: BigUint,
    g1: BigUint,
    g2: BigUint,
}

static REAL_PARAMS: OnceLock<RealParams> = OnceLock::new();

/// Deterministic Schnorr-group parameters: 256-bit prime q, 1024-bit prime
/// p = 2mq + 1, generators of the order-q subgroup. Derivation is a fixed
/// hash stream, so every build agrees on the constants; generation runs once
/// per process and only when large-parameter mode is used.
fn real_params() -> &'static RealParams {
    REAL_PARAMS.get_or_init(|| {
        let stream = |label: &str, ctr: u64, nbytes: usize| -> BigUint {
            let mut out = Vec::with_capacity(nbytes + 32);
            let mut i = 0u32;
            while out.len() < nbytes {
                let mut h = Sha256::new();
                h.update(b"bulletin-bft group params v1");
                h.update((label.len() as u32).to_be_bytes());
                h.update(label.as_bytes());
                h.update(ctr.to_be_bytes());
                h.update(i.to_be_bytes());
                out.extend_from_slice(&h.finalize());
                i += 1;
            }
            BigUint::from_bytes_be(&out[..nbytes])
        };

        // 256-bit prime q.
        let one = BigUint::one();
        let mut ctr = 0u64;
        let q = loop {
            let mut cand = stream("q", ctr, 32);
            cand |= BigUint::one() << 255usize; // force full width
            cand |= &one; // force odd
            if is_probable_prime(&cand) {
                break cand;
            }
            ctr += 1;
        };

        // p = 2mq + 1 with a 767-bit multiplier stream -> p has 1024 bits.
        let mut ctr = 0u64;
        let (p, m2) = loop {
            let mut m = stream("p", ctr, 96);
            m |= BigUint::one() << 766usize;
            let m2 = &m << 1usize;
            let cand = &m2 * &q + &one;
            if is_probable_prime(&cand) {
                break (cand, m2);
            }
            ctr += 1;
        };

        // Generators: random residues raised to the cofactor.
        let find_gen = |label: &str| -> BigUint {
            let mut ctr = 0u64;
            loop {
                let x = stream(label, ctr, 128) % &p;
                if !x.is_zero() {
                    let g = x.modpow(&m2, &p);
                    if g != one {
                        return g;
                    }
                }
                ctr += 1;
            }
        };
        let g1 = find_gen("g1");
        let g2 = find_gen("g2");
        RealParams { p, q, g1, g2 }
    })
}

/// Miller-Rabin with fixed deterministic bases; 40 rounds keeps the error
/// probability far below anything a test run could observe.
fn is_probable_prime(n: &BigUint) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u8);
    if *n < two {
        return false;
    }
    for small in [2u8, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let s = BigUint::from(small);
        if *n == s {
            return true;
        }
        if (n % &s).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - &one;
    let trailing = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> trailing;
    'base: for i in 0u32..40 {
        // Derive the base from the candidate itself: deterministic, with
        // independent bases per candidate.
        let mut h = Sha256::new();
        h.update(b"miller-rabin base");
        h.update(n.to_bytes_be());
        h.update(i.to_be_bytes());
        let a = BigUint::from_bytes_be(&h.finalize()) % (n - &two - &one) + &two;
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..trailing {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'base;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_commitment_matches_hand_computation() {
        // Z_31 with g1 = 2, g2 = 3: commit(5, 7) = 5*2 + 7*3 = 31 = 0.
        let g = GroupCtx::mock(31);
        let field = Field::new(BigUint::from(31u8));
        let c = g.commit2(&field.from_u64(5), &field.from_u64(7));
        assert_eq!(c, g.identity());
    }

    #[test]
    fn mock_ops_form_a_group() {
        let g = GroupCtx::mock(97);
        let field = Field::new(BigUint::from(97u8));
        let a = g.exp(g.g1(), &field.from_u64(13));
        let b = g.exp(g.g2(), &field.from_u64(29));
        let ab = g.op(&a, &b);
        assert_eq!(g.op(&ab, &g.invert(&b)), a);
        assert_eq!(g.op(&a, &g.identity()), a);
    }

    #[test]
    fn mock_dlog_inverts_exponentiation() {
        let g = GroupCtx::mock(31);
        let field = Field::new(BigUint::from(31u8));
        for v in 0..31u64 {
            let e = field.from_u64(v);
            let x = g.exp(g.g1(), &e);
            assert_eq!(g.mock_dlog_g1(&field, &x), e);
        }
    }

    #[test]
    fn mock_decode_rejects_out_of_range() {
        let g = GroupCtx::mock(97);
        assert!(g.decode(&[98]).is_err());
        assert!(g.decode(&[5, 5]).is_err());
        assert_eq!(g.decode(&[42]).unwrap(), Ge(BigUint::from(42u8)));
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division_on_small_numbers() {
        let naive = |n: u64| -> bool {
            if n < 2 {
                return false;
            }
            let mut d = 2;
            while d * d <= n {
                if n % d == 0 {
                    return false;
                }
                d += 1;
            }
            true
        };
        for n in 2..2000u64 {
            assert_eq!(is_probable_prime(&BigUint::from(n)), naive(n), "n={n}");
        }
    }

    // Real-parameter generation is exercised by the slower suite below; the
    // group laws are checked via the same interface as mock.
    #[test]
    fn real_group_basic_laws() {
        let g = GroupCtx::real();
        let field = Field::new(g.order().clone());
        assert_eq!(g.order().bits(), 256);
        let a = g.exp(g.g1(), &field.from_u64(123456789));
        let b = g.exp(g.g1(), &field.from_u64(987654321));
        // g1^a * g1^b = g1^(a+b)
        let lhs = g.op(&a, &b);
        let rhs = g.exp(g.g1(), &field.from_u64(123456789 + 987654321));
        assert_eq!(lhs, rhs);
        // Round-trip encoding, subgroup check included.
        let enc = g.encode(&a);
        assert_eq!(enc.len(), 128);
        assert_eq!(g.decode(&enc).unwrap(), a);
        // Hash-to-group lands in the subgroup and is deterministic.
        let h1 = g.hash_to_group("test", b"data");
        let h2 = g.hash_to_group("test", b"data");
        assert_eq!(h1, h2);
        assert!(g.decode(&g.encode(&h1)).is_ok());
        assert_ne!(h1, g.hash_to_group("test", b"other"));
    }
}
