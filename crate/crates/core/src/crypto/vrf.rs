//! Verifiable random function.
//!
//! Real mode: gamma = H2G(input)^sk with a discrete-log-equality proof
//! against the registered public key; the output is a digest of gamma and
//! the input. Unique (gamma is determined by sk and input), verifiable, and
//! pseudorandom under DDH.
//!
//! Mock mode: output = truncated hash of (public key, input) with an empty
//! proof. Deterministic, unique and verifiable — but computable by anyone,
//! so mock runs get no unpredictability. Statistical fairness suites only
//! need uniformity and uniqueness, which this provides.

use super::sig::derive_scalar;
use super::{Mode, Suite};
use crate::wire::{Reader, Writer};

#[derive(Clone, Debug)]
pub struct VrfKeypair {
    sk: Vec<u8>,
    pub pk: Vec<u8>,
}

impl VrfKeypair {
    pub fn derive(suite: &Suite, seed: &[u8]) -> Self {
        match suite.mode {
            Mode::Mock => {
                let pk = suite.stretch(&[b"mock-vrf-pk", seed].concat(), 8);
                Self { sk: vec![], pk }
            }
            Mode::Real => {
                let x = derive_scalar(suite, "vrf-sk", seed);
                let pk = suite.group.encode(&suite.group.exp(suite.group.g1(), &x));
                Self { sk: suite.field.encode(&x), pk }
            }
        }
    }
}

/// Evaluate the VRF: returns (output, proof). The output is λ bytes and is
/// compared as a big-endian unsigned integer where ordering matters.
pub fn eval(suite: &Suite, kp: &VrfKeypair, input: &[u8]) -> (Vec<u8>, Vec<u8>) {
    match suite.mode {
        Mode::Mock => (suite.hash("vrf", &[&kp.pk, input]), Vec::new()),
        Mode::Real => {
            let x = suite.field.decode(&kp.sk).expect("stored scalar");
            let base = suite.group.hash_to_group("vrf-base", input);
            let gamma = suite.group.exp(&base, &x);
            let pk_elem = suite.group.decode(&kp.pk).expect("own pk");
            let proof = super::dleq::prove(
                suite,
                "vrf",
                suite.group.g1(),
                &pk_elem,
                &base,
                &gamma,
                &x,
                input,
            );
            let gamma_enc = suite.group.encode(&gamma);
            let out = suite.hash("vrf-out", &[&gamma_enc, input]);
            let mut w = Writer::new();
            w.raw(&gamma_enc);
            proof.encode_with(suite, &mut w);
            (out, w.finish())
        }
    }
}

pub fn verify(suite: &Suite, pk: &[u8], input: &[u8], output: &[u8], proof: &[u8]) -> bool {
    if output.len() != suite.lambda {
        return false;
    }
    match suite.mode {
        Mode::Mock => proof.is_empty() && output == suite.hash("vrf", &[pk, input]).as_slice(),
        Mode::Real => {
            let gw = suite.group.width();
            if proof.len() != gw + super::dleq::DleqProof::byte_len(suite) {
                return false;
            }
            let mut r = Reader::new(proof);
            let gamma = match suite.group.decode(r.raw(gw).unwrap()) {
                Ok(g) => g,
                Err(_) => return false,
            };
            let dleq = match super::dleq::DleqProof::decode_with(suite, &mut r) {
                Ok(p) => p,
                Err(_) => return false,
            };
            let pk_elem = match suite.group.decode(pk) {
                Ok(p) => p,
                Err(_) => return false,
            };
            let base = suite.group.hash_to_group("vrf-base", input);
            if !super::dleq::verify(suite, "vrf", suite.group.g1(), &pk_elem, &base, &gamma, &dleq, input)
            {
                return false;
            }
            output == suite.hash("vrf-out", &[&suite.group.encode(&gamma), input]).as_slice()
        }
    }
}

/// Compare two VRF outputs as big-endian unsigned integers.
pub fn output_gt(a: &[u8], b: &[u8]) -> bool {
    a > b // equal-length big-endian lexicographic == numeric
}

/// Lowest bit of a VRF output.
pub fn output_low_bit(out: &[u8]) -> u8 {
    out.last().map(|b| b & 1).unwrap_or(0)
}
