//! Digital signatures over registered verification keys.
//!
//! Real mode is a derandomised Schnorr signature in the commitment group.
//! Mock mode is a keyed digest: the "verification key" is public material
//! and anyone can recompute a signature, which preserves every protocol
//! code path (quorum counting, invalid-signature rejection) at zero cost
//! but provides no unforgeability — the adversarial test programs respect
//! the signature abstraction rather than exploiting this.

use super::field::Fe;
use super::{Mode, Suite};
use crate::wire::{Reader, Writer};

#[derive(Clone, Debug)]
pub struct SigKeypair {
    /// Secret: 32 bytes of seed material in mock mode, an encoded scalar in
    /// real mode.
    sk: Vec<u8>,
    pub vk: Vec<u8>,
}

impl SigKeypair {
    /// Deterministic keypair from seed material.
    pub fn derive(suite: &Suite, seed: &[u8]) -> Self {
        match suite.mode {
            Mode::Mock => {
                let sk = suite.stretch(&[b"mock-sig-sk", seed].concat(), 32);
                let vk = suite.stretch(&[b"mock-sig-vk", &sk[..]].concat(), 8);
                Self { sk, vk }
            }
            Mode::Real => {
                let x = derive_scalar(suite, "sig-sk", seed);
                let vk = suite.group.encode(&suite.group.exp(suite.group.g1(), &x));
                Self { sk: suite.field.encode(&x), vk }
            }
        }
    }
}

pub(crate) fn derive_scalar(suite: &Suite, label: &str, seed: &[u8]) -> Fe {
    // Secret scalars get inverted (decryption keys) or exponentiated into
    // public keys; zero is degenerate either way, so it is resampled away.
    let mut wide = suite.stretch(&[label.as_bytes(), seed].concat(), suite.field.width() + 16);
    let mut ctr = 0u8;
    loop {
        let x = suite.field.from_bytes_reduced(&wide);
        if !x.is_zero() {
            return x;
        }
        wide = suite.stretch(
            &[label.as_bytes(), seed, &[ctr]].concat(),
            suite.field.width() + 16,
        );
        ctr = ctr.wrapping_add(1);
    }
}

/// Sign a message. Mock signatures are 4 bytes, real signatures are two
/// field elements (challenge-response form).
pub fn sign(suite: &Suite, kp: &SigKeypair, msg: &[u8]) -> Vec<u8> {
    match suite.mode {
        Mode::Mock => suite.hash("mocksig", &[&kp.vk, msg]),
        Mode::Real => {
            let x = suite.field.decode(&kp.sk).expect("stored scalar");
            let k = suite.hash_to_field("schnorr-nonce", &[&kp.sk, msg]);
            let r = suite.group.exp(suite.group.g1(), &k);
            let c = suite.hash_to_field("schnorr", &[&kp.vk, &suite.group.encode(&r), msg]);
            let z = suite.field.add(&k, &suite.field.mul(&c, &x));
            let mut w = Writer::new();
            w.raw(&suite.field.encode(&c));
            w.raw(&suite.field.encode(&z));
            w.finish()
        }
    }
}

pub fn verify(suite: &Suite, vk: &[u8], msg: &[u8], sig: &[u8]) -> bool {
    match suite.mode {
        Mode::Mock => sig == suite.hash("mocksig", &[vk, msg]).as_slice(),
        Mode::Real => {
            let width = suite.field.width();
            if sig.len() != 2 * width {
                return false;
            }
            let mut rd = Reader::new(sig);
            let (c, z) = match (
                suite.field.decode(rd.raw(width).unwrap()),
                suite.field.decode(rd.raw(width).unwrap()),
            ) {
                (Ok(c), Ok(z)) => (c, z),
                _ => return false,
            };
            let pk = match suite.group.decode(vk) {
                Ok(pk) => pk,
                Err(_) => return false,
            };
            // R' = g^z · pk^{-c}
            let r = suite.group.op(
                &suite.group.exp(suite.group.g1(), &z),
                &suite.group.exp(&pk, &suite.field.neg(&c)),
            );
            suite.hash_to_field("schnorr", &[vk, &suite.group.encode(&r), msg]) == c
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(suite: &Suite) {
        let kp = SigKeypair::derive(suite, b"party 1 seed");
        let sig = sign(suite, &kp, b"hello");
        assert!(verify(suite, &kp.vk, b"hello", &sig));
        assert!(!verify(suite, &kp.vk, b"hellp", &sig));
        let mut bad = sig.clone();
        bad[0] ^= 1;
        assert!(!verify(suite, &kp.vk, b"hello", &bad));
        let other = SigKeypair::derive(suite, b"party 2 seed");
        assert!(!verify(suite, &other.vk, b"hello", &sig));
    }

    #[test]
    fn sign_verify_mock() {
        roundtrip(&Suite::mock());
    }

    #[test]
    fn sign_verify_real() {
        roundtrip(&Suite::real());
    }

    #[test]
    fn real_mode_forgery_spot_checks() {
        // Without the secret, derived guesses must not verify: random bytes,
        // a signature under another key, and a signature on another message.
        let suite = Suite::real();
        let kp = SigKeypair::derive(&suite, b"target");
        let width = suite.field.width();
        for i in 0..50u32 {
            let guess = suite.stretch(&[b"forgery attempt", &i.to_be_bytes()[..]].concat(), 2 * width);
            assert!(!verify(&suite, &kp.vk, b"msg", &guess));
        }
        let other = SigKeypair::derive(&suite, b"other");
        let transplanted = sign(&suite, &other, b"msg");
        assert!(!verify(&suite, &kp.vk, b"msg", &transplanted));
        let replayed = sign(&suite, &kp, b"other msg");
        assert!(!verify(&suite, &kp.vk, b"msg", &replayed));
    }

    #[test]
    fn signatures_are_deterministic() {
        let suite = Suite::real();
        let kp = SigKeypair::derive(&suite, b"seed");
        assert_eq!(sign(&suite, &kp, b"m"), sign(&suite, &kp, b"m"));
    }
}
