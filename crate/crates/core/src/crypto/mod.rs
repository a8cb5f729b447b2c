//! Cryptographic toolkit: field and group arithmetic, polynomial sharing,
//! two-generator commitments, signatures, a VRF, discrete-log equality
//! proofs, and key material.
//!
//! Everything is parameterised by a [`Suite`] in one of two modes:
//!
//! * **mock** — a small prime field (default q = 97), the additive group
//!   Z_q, 32-bit digests, hash-based signatures/VRF with no secrets. Fast,
//!   fully deterministic, and transparent to exhaustive counting oracles;
//!   gives none of the computational properties.
//! * **real** — a 256-bit prime field, a 1024-bit Schnorr group, 256-bit
//!   digests, Schnorr signatures and a DLEQ-based VRF. Slow but actually
//!   binding/unforgeable; used for spot checks, not for bulk statistics.

pub mod dleq;
pub mod field;
pub mod group;
pub mod keys;
pub mod pedersen;
pub mod poly;
pub mod sig;
pub mod vrf;

use sha2::{Digest, Sha256};

use field::Field;
use group::GroupCtx;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Mock,
    Real,
}

/// Bundle of parameters every protocol object holds (behind an Arc).
#[derive(Clone, Debug)]
pub struct Suite {
    pub mode: Mode,
    pub field: Field,
    pub group: GroupCtx,
    /// Digest / VRF-output width in bytes: 4 in mock mode, 32 in real mode.
    pub lambda: usize,
}

impl Suite {
    pub fn mock() -> Self {
        Self::mock_with_q(97)
    }

    /// Mock suite over a caller-chosen small prime (counting oracles use 31).
    pub fn mock_with_q(q: u64) -> Self {
        Self {
            mode: Mode::Mock,
            field: Field::new(q.into()),
            group: GroupCtx::mock(q),
            lambda: 4,
        }
    }

    pub fn real() -> Self {
        let group = GroupCtx::real();
        let field = Field::new(group.order().clone());
        Self { mode: Mode::Real, field, group, lambda: 32 }
    }

    pub fn by_mode(mode: Mode) -> Self {
        match mode {
            Mode::Mock => Self::mock(),
            Mode::Real => Self::real(),
        }
    }

    /// Domain-separated digest truncated to λ bytes. All protocol-visible
    /// hashes (commitment digests, signing inputs, VRF outputs) go through
    /// here so that mock and real runs carry digests of their advertised
    /// width.
    pub fn hash(&self, domain: &str, parts: &[&[u8]]) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(b"bulletin-bft v1");
        h.update((domain.len() as u32).to_be_bytes());
        h.update(domain.as_bytes());
        for p in parts {
            h.update((p.len() as u64).to_be_bytes());
            h.update(p);
        }
        h.finalize()[..self.lambda].to_vec()
    }

    /// Digest reduced into the scalar field (Fiat-Shamir challenges).
    pub fn hash_to_field(&self, domain: &str, parts: &[&[u8]]) -> field::Fe {
        let mut h = Sha256::new();
        h.update(b"bulletin-bft v1 scalar");
        h.update((domain.len() as u32).to_be_bytes());
        h.update(domain.as_bytes());
        for p in parts {
            h.update((p.len() as u64).to_be_bytes());
            h.update(p);
        }
        self.field.from_bytes_reduced(&h.finalize())
    }

    /// Counter-mode keystream: stretches key material to `len` bytes.
    pub fn stretch(&self, key: &[u8], len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(len + 32);
        let mut ctr = 0u32;
        while out.len() < len {
            let mut h = Sha256::new();
            h.update(b"bulletin-bft keystream");
            h.update((key.len() as u32).to_be_bytes());
            h.update(key);
            h.update(ctr.to_be_bytes());
            out.extend_from_slice(&h.finalize());
            ctr += 1;
        }
        out.truncate(len);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_width_tracks_mode() {
        assert_eq!(Suite::mock().hash("t", &[b"x"]).len(), 4);
        assert_eq!(Suite::mock().lambda * 8, 32);
    }

    #[test]
    fn hash_is_injective_over_part_boundaries() {
        // ("ab", "c") and ("a", "bc") must differ: length framing matters.
        let s = Suite::mock();
        assert_ne!(s.hash("t", &[b"ab", b"c"]), s.hash("t", &[b"a", b"bc"]));
        assert_ne!(s.hash("t1", &[b"ab"]), s.hash("t2", &[b"ab"]));
    }

    #[test]
    fn stretch_is_deterministic_prefix_stable() {
        let s = Suite::mock();
        let a = s.stretch(b"key", 100);
        let b = s.stretch(b"key", 40);
        assert_eq!(&a[..40], &b[..]);
        assert_eq!(a.len(), 100);
        assert_ne!(a, s.stretch(b"other", 100));
    }
}
