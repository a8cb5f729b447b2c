//! Key material and the bulletin-board registry.
//!
//! The trust model is a public bulletin: before a run starts, every party
//! registers a signature verification key, a VRF public key, and a share
//! encryption key. No correctness proof accompanies registration — corrupted
//! parties may register arbitrary (even malformed) bytes, and all protocol
//! code treats registry entries as untrusted input.

use std::sync::Arc;

use super::field::Fe;
use super::group::Ge;
use super::sig::SigKeypair;
use super::vrf::VrfKeypair;
use super::Suite;

/// 1-based party identifier, stable across a run.
pub type PartyId = u16;

/// One party's private key material.
#[derive(Clone, Debug)]
pub struct KeyStore {
    pub party: PartyId,
    pub sig: SigKeypair,
    pub vrf: VrfKeypair,
    /// Share-decryption scalar.
    pub dec: Fe,
}

/// The public bulletin: one row per party.
#[derive(Clone, Debug)]
pub struct Registry {
    pub n: usize,
    sig_vks: Vec<Vec<u8>>,
    vrf_pks: Vec<Vec<u8>>,
    enc_eks: Vec<Ge>,
}

impl Registry {
    pub fn sig_vk(&self, p: PartyId) -> &[u8] {
        &self.sig_vks[p as usize - 1]
    }

    pub fn vrf_pk(&self, p: PartyId) -> &[u8] {
        &self.vrf_pks[p as usize - 1]
    }

    pub fn enc_ek(&self, p: PartyId) -> &Ge {
        &self.enc_eks[p as usize - 1]
    }

    /// Replace a row with adversarially chosen keys (corrupted registrants).
    pub fn register_arbitrary(&mut self, p: PartyId, sig_vk: Vec<u8>, vrf_pk: Vec<u8>, enc_ek: Ge) {
        let i = p as usize - 1;
        self.sig_vks[i] = sig_vk;
        self.vrf_pks[i] = vrf_pk;
        self.enc_eks[i] = enc_ek;
    }
}

/// Derive all key material for parties 1..=n from a run seed.
pub fn gen_parties(suite: &Suite, n: usize, run_seed: &[u8]) -> (Vec<KeyStore>, Registry) {
    let mut stores = Vec::with_capacity(n);
    let mut sig_vks = Vec::with_capacity(n);
    let mut vrf_pks = Vec::with_capacity(n);
    let mut enc_eks = Vec::with_capacity(n);
    for p in 1..=n as u16 {
        let seed = |label: &str| -> Vec<u8> {
            suite.stretch(
                &[b"party-keys", run_seed, &p.to_be_bytes()[..], label.as_bytes()].concat(),
                32,
            )
        };
        let sig = SigKeypair::derive(suite, &seed("sig"));
        let vrf = VrfKeypair::derive(suite, &seed("vrf"));
        let dec = super::sig::derive_scalar(suite, "enc-dk", &seed("enc"));
        let ek = suite.group.exp(suite.group.g2(), &dec);
        sig_vks.push(sig.vk.clone());
        vrf_pks.push(vrf.pk.clone());
        enc_eks.push(ek);
        stores.push(KeyStore { party: p, sig, vrf, dec });
    }
    (stores, Registry { n, sig_vks, vrf_pks, enc_eks })
}

/// Everything a protocol instance needs besides its own keys: committee
/// size, fault bound, crypto parameters, and the bulletin.
#[derive(Clone, Debug)]
pub struct Env {
    pub suite: Arc<Suite>,
    pub registry: Arc<Registry>,
    pub n: usize,
    pub f: usize,
}

impl Env {
    pub fn new(suite: Arc<Suite>, registry: Arc<Registry>, f: usize) -> Arc<Self> {
        let n = registry.n;
        assert!(n >= 3 * f + 1, "need n >= 3f+1 (n={n}, f={f})");
        Arc::new(Self { suite, registry, n, f })
    }

    /// Quorum size n - f (equals 2f+1 when n = 3f+1).
    pub fn quorum(&self) -> usize {
        self.n - self.f
    }

    pub fn parties(&self) -> impl Iterator<Item = PartyId> {
        1..=self.n as PartyId
    }
}
