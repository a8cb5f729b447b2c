//! Asynchronous verifiable secret sharing with a signature-vouched cipher.
//!
//! The dealer Shamir-shares a one-time key under a two-polynomial commitment
//! and sends each party its openings (`KeyShare`). Parties that verify their
//! opening return a signature over the commitment digest (`Stored`). Once a
//! quorum of `n−f` signatures vouches that enough parties hold consistent
//! shares, the dealer releases the ciphertext of the actual secret under the
//! shared key (`Cipher`), carrying the signature set as evidence. `Echo` and
//! `Ready` rounds then lock every honest party onto one `(digest, cipher)`
//! pair exactly as in reliable broadcast, so the sharing phase ends with all
//! honest parties agreeing on what was shared even when the dealer is
//! Byzantine — parties the dealer skipped output with their shares absent.
//!
//! Reconstruction reverses the pipeline: share-holders multicast verified
//! openings (`KeyRec`); `f+1` verified openings interpolate the key, which is
//! multicast (`Key`); `f+1` identical keys decrypt the ciphertext. A party
//! counts its own `Key` toward that threshold (self-deliveries flow through
//! the network like any other message).
//!
//! Two cipher modes are provided. The default stretches a hash of the key
//! into a pad as long as the message, so the key space never constrains the
//! message length. The alternative `Pad` mode adds the key itself to the
//! message inside the field — an information-theoretic one-time pad used by
//! the secrecy counting tests, at the price of requiring the message to be a
//! field element.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::crypto::field::Fe;
use crate::crypto::keys::{Env, KeyStore, PartyId};
use crate::crypto::pedersen::{self, PolyCommitment};
use crate::crypto::poly::{interpolate_at_zero, Poly};
use crate::crypto::{sig, Suite};
use crate::simnet::{multicast, unicast, Envelope, InstanceId, Out, Reactor, Step, Tag};
use crate::wire::{Reader, Writer};

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum AvssError {
    #[error("secret must be supplied by the dealer and nobody else")]
    InputArity,
    #[error("secret has the wrong length for the cipher mode")]
    SecretArity,
}

/// How the dealer's secret is bound to the shared key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CipherMode {
    /// c = stretch(H(key)) xor m — any message length, default.
    #[default]
    RoXor,
    /// c = key + m in the field — information-theoretic, m must be a
    /// canonically encoded field element.
    Pad,
}

pub fn encrypt(suite: &Suite, mode: CipherMode, key: &Fe, m: &[u8]) -> Vec<u8> {
    match mode {
        CipherMode::RoXor => {
            let pad = suite.stretch(&suite.field.encode(key), m.len());
            m.iter().zip(pad).map(|(a, b)| a ^ b).collect()
        }
        CipherMode::Pad => {
            let m_fe = suite.field.decode(m).expect("pad-mode message must be a field element");
            suite.field.encode(&suite.field.add(key, &m_fe))
        }
    }
}

pub fn decrypt(suite: &Suite, mode: CipherMode, key: &Fe, c: &[u8]) -> Option<Vec<u8>> {
    match mode {
        CipherMode::RoXor => {
            let pad = suite.stretch(&suite.field.encode(key), c.len());
            Some(c.iter().zip(pad).map(|(a, b)| a ^ b).collect())
        }
        CipherMode::Pad => {
            let c_fe = suite.field.decode(c).ok()?;
            Some(suite.field.encode(&suite.field.sub(&c_fe, key)))
        }
    }
}

/// What the sharing phase hands to each party. `h` and `c` agree across all
/// honest parties of one instance; the share fields are present exactly when
/// this party's verified opening matches the agreed digest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShOutput {
    pub h: Vec<u8>,
    pub c: Vec<u8>,
    pub share_a: Option<Fe>,
    pub share_b: Option<Fe>,
    pub cmt: Option<PolyCommitment>,
}

impl ShOutput {
    pub fn has_shares(&self) -> bool {
        self.cmt.is_some() && self.share_a.is_some() && self.share_b.is_some()
    }
}

/// Message a party signs to vouch that it holds a verified opening of the
/// commitment with digest `h`.
pub(crate) fn stored_msg(suite: &Suite, instance: &InstanceId, h: &[u8]) -> Vec<u8> {
    use crate::wire::Encode;
    suite.hash("vss-stored", &[&instance.encode(), h])
}

pub(crate) fn cmt_digest(suite: &Suite, cmt: &PolyCommitment) -> Vec<u8> {
    suite.hash("vss-cmt", &[&cmt.encode_with(&suite.group)])
}

fn hc_encode(h: &[u8], c: &[u8]) -> Vec<u8> {
    let mut w = Writer::new();
    w.raw(h);
    w.bytes(c);
    w.finish()
}

fn hc_decode(suite: &Suite, payload: &[u8]) -> Option<(Vec<u8>, Vec<u8>)> {
    let mut r = Reader::new(payload);
    let h = r.raw(suite.lambda).ok()?.to_vec();
    let c = r.bytes().ok()?;
    r.expect_end().ok()?;
    Some((h, c))
}

pub(crate) fn keyshare_payload(suite: &Suite, cmt: &PolyCommitment, a: &Fe, b: &Fe) -> Vec<u8> {
    let mut w = Writer::new();
    cmt.encode_into_with(&suite.group, &mut w);
    w.raw(&suite.field.encode(a));
    w.raw(&suite.field.encode(b));
    w.finish()
}

pub(crate) fn cipher_payload(h: &[u8], c: &[u8], sigs: &BTreeMap<PartyId, Vec<u8>>) -> Vec<u8> {
    let mut w = Writer::new();
    w.raw(h);
    w.bytes(c);
    let entries: Vec<_> = sigs.iter().collect();
    w.list(&entries, |w, (j, s)| {
        w.u16(**j);
        w.bytes(s);
    });
    w.finish()
}

struct Deal {
    key: Fe,
    secret: Vec<u8>,
    h: Vec<u8>,
    cmt: PolyCommitment,
    a: Poly,
    b: Poly,
    sigs: BTreeMap<PartyId, Vec<u8>>,
    cipher_sent: bool,
}

enum CipherSlot {
    Empty,
    /// Arrived before our opening verified; held until then.
    Buffered(Vec<u8>),
    Consumed,
}

/// Sharing-phase reactor. The dealer role is layered on top of the
/// participant role, so the dealer's reactor also stores, signs and echoes.
pub struct AvssSh {
    env: Arc<Env>,
    ks: Arc<KeyStore>,
    instance: InstanceId,
    me: PartyId,
    dealer: PartyId,
    mode: CipherMode,
    deal: Option<Deal>,
    cmt: Option<PolyCommitment>,
    share_a: Option<Fe>,
    share_b: Option<Fe>,
    my_h: Option<Vec<u8>>,
    cipher: CipherSlot,
    ready_sent: bool,
    done: bool,
    echoes: BTreeMap<(Vec<u8>, Vec<u8>), BTreeSet<PartyId>>,
    readies: BTreeMap<(Vec<u8>, Vec<u8>), BTreeSet<PartyId>>,
    seen_keyshare: bool,
    seen_stored: BTreeSet<PartyId>,
    seen_echo: BTreeSet<PartyId>,
    seen_ready: BTreeSet<PartyId>,
}

impl AvssSh {
    /// `secret` present iff this party is the dealer; `seed` drives the
    /// dealer's polynomial sampling and must be fresh per instance.
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        dealer: PartyId,
        secret: Option<Vec<u8>>,
        mode: CipherMode,
        seed: u64,
    ) -> Result<Self, AvssError> {
        let me = ks.party;
        if (me == dealer) != secret.is_some() {
            return Err(AvssError::InputArity);
        }
        let deal = match secret {
            None => None,
            Some(m) => {
                let ok = match mode {
                    CipherMode::RoXor => !m.is_empty(),
                    CipherMode::Pad => env.suite.field.decode(&m).is_ok(),
                };
                if !ok {
                    return Err(AvssError::SecretArity);
                }
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                let field = &env.suite.field;
                let key = field.rand(&mut rng);
                let a = Poly::random_with_constant(field, key.clone(), env.f, &mut rng);
                let blind = field.rand(&mut rng);
                let b = Poly::random_with_constant(field, blind, env.f, &mut rng);
                let cmt = pedersen::commit(&env.suite.group, &a, &b);
                let h = cmt_digest(&env.suite, &cmt);
                Some(Deal {
                    key,
                    secret: m,
                    h,
                    cmt,
                    a,
                    b,
                    sigs: BTreeMap::new(),
                    cipher_sent: false,
                })
            }
        };
        Ok(AvssSh {
            env,
            ks,
            instance,
            me,
            dealer,
            mode,
            deal,
            cmt: None,
            share_a: None,
            share_b: None,
            my_h: None,
            cipher: CipherSlot::Empty,
            ready_sent: false,
            done: false,
            echoes: BTreeMap::new(),
            readies: BTreeMap::new(),
            seen_keyshare: false,
            seen_stored: BTreeSet::new(),
            seen_echo: BTreeSet::new(),
            seen_ready: BTreeSet::new(),
        })
    }

    fn on_keyshare(&mut self, env: &Envelope) -> Step {
        if env.from != self.dealer || self.seen_keyshare {
            return Step::none();
        }
        self.seen_keyshare = true;
        let suite = &self.env.suite;
        let mut r = Reader::new(&env.payload);
        let parsed = (|| {
            let cmt = PolyCommitment::decode_from_with(&suite.group, &mut r).ok()?;
            let a = suite.field.decode(r.raw(suite.field.width()).ok()?).ok()?;
            let b = suite.field.decode(r.raw(suite.field.width()).ok()?).ok()?;
            r.expect_end().ok()?;
            Some((cmt, a, b))
        })();
        let Some((cmt, a, b)) = parsed else { return Step::none() };
        if cmt.degree_bound() != self.env.f
            || !pedersen::verify_opening(&suite.group, &suite.field, &cmt, self.me as u64, &a, &b)
        {
            return Step::none();
        }
        let h = cmt_digest(suite, &cmt);
        let signature = sig::sign(suite, &self.ks.sig, &stored_msg(suite, &self.instance, &h));
        self.cmt = Some(cmt);
        self.share_a = Some(a);
        self.share_b = Some(b);
        self.my_h = Some(h);
        let mut step =
            Step::send(unicast(self.me, self.dealer, &self.instance, Tag::Stored, signature));
        if let CipherSlot::Buffered(payload) = std::mem::replace(&mut self.cipher, CipherSlot::Empty)
        {
            let held = payload;
            step.merge(self.accept_cipher(&held));
        }
        step
    }

    fn on_stored(&mut self, env: &Envelope) -> Step {
        if self.me != self.dealer || !self.seen_stored.insert(env.from) {
            return Step::none();
        }
        let Some(deal) = self.deal.as_mut() else { return Step::none() };
        let suite = &self.env.suite;
        let msg = stored_msg(suite, &self.instance, &deal.h);
        if !sig::verify(suite, self.env.registry.sig_vk(env.from), &msg, &env.payload) {
            return Step::none();
        }
        deal.sigs.insert(env.from, env.payload.clone());
        if deal.sigs.len() >= self.env.quorum() && !deal.cipher_sent {
            deal.cipher_sent = true;
            let c = encrypt(suite, self.mode, &deal.key, &deal.secret);
            let payload = cipher_payload(&deal.h, &c, &deal.sigs);
            return Step::send(multicast(self.env.n, self.me, &self.instance, Tag::Cipher, payload));
        }
        Step::none()
    }

    /// Validate a Cipher we are ready to judge (opening already verified).
    fn accept_cipher(&mut self, payload: &[u8]) -> Step {
        self.cipher = CipherSlot::Consumed;
        let suite = &self.env.suite;
        let my_h = self.my_h.as_ref().expect("cipher judged before opening verified");
        let mut r = Reader::new(payload);
        let parsed = (|| {
            let h = r.raw(suite.lambda).ok()?.to_vec();
            let c = r.bytes().ok()?;
            let sigs = r
                .list(|r| {
                    let j = r.u16()?;
                    let s = r.bytes()?;
                    Ok((j, s))
                })
                .ok()?;
            r.expect_end().ok()?;
            Some((h, c, sigs))
        })();
        let Some((h, c, sigs)) = parsed else { return Step::none() };
        if &h != my_h {
            return Step::none();
        }
        let msg = stored_msg(suite, &self.instance, &h);
        let valid: BTreeSet<PartyId> = sigs
            .iter()
            .filter(|(j, s)| {
                (1..=self.env.n as PartyId).contains(j)
                    && sig::verify(suite, self.env.registry.sig_vk(*j), &msg, s)
            })
            .map(|(j, _)| *j)
            .collect();
        if valid.len() < self.env.quorum() {
            return Step::none();
        }
        Step::send(multicast(self.env.n, self.me, &self.instance, Tag::Echo, hc_encode(&h, &c)))
    }

    fn progress(&mut self) -> Step {
        let mut step = Step::none();
        if !self.ready_sent {
            let quorum_echo = self
                .echoes
                .iter()
                .find(|(_, s)| s.len() >= self.env.quorum())
                .map(|(k, _)| k.clone());
            let amplify = self
                .readies
                .iter()
                .find(|(_, s)| s.len() >= self.env.f + 1)
                .map(|(k, _)| k.clone());
            if let Some((h, c)) = quorum_echo.or(amplify) {
                self.ready_sent = true;
                step.out.extend(multicast(
                    self.env.n,
                    self.me,
                    &self.instance,
                    Tag::Ready,
                    hc_encode(&h, &c),
                ));
            }
        }
        if !self.done {
            let won = self
                .readies
                .iter()
                .find(|(_, s)| s.len() >= self.env.quorum())
                .map(|(k, _)| k.clone());
            if let Some((h, c)) = won {
                self.done = true;
                let mine = self.my_h.as_deref() == Some(&h[..]);
                step.output = Some(Out::AvssShared(ShOutput {
                    h,
                    c,
                    share_a: if mine { self.share_a.clone() } else { None },
                    share_b: if mine { self.share_b.clone() } else { None },
                    cmt: if mine { self.cmt.clone() } else { None },
                }));
            }
        }
        step
    }
}

impl Reactor for AvssSh {
    fn on_activate(&mut self) -> Step {
        let Some(deal) = self.deal.as_ref() else { return Step::none() };
        let suite = &self.env.suite;
        let out = (1..=self.env.n as PartyId)
            .map(|j| {
                let a = deal.a.eval_u64(&suite.field, j as u64);
                let b = deal.b.eval_u64(&suite.field, j as u64);
                Envelope {
                    from: self.me,
                    to: j,
                    instance: self.instance.clone(),
                    tag: Tag::KeyShare,
                    payload: keyshare_payload(suite, &deal.cmt, &a, &b),
                }
            })
            .collect();
        Step::send(out)
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        debug_assert_eq!(env.instance, self.instance);
        match env.tag {
            Tag::KeyShare => self.on_keyshare(env),
            Tag::Stored => self.on_stored(env),
            Tag::Cipher => {
                if env.from != self.dealer {
                    return Step::none();
                }
                match (&self.cipher, self.my_h.is_some()) {
                    (CipherSlot::Empty, false) => {
                        self.cipher = CipherSlot::Buffered(env.payload.clone());
                        Step::none()
                    }
                    (CipherSlot::Empty, true) => {
                        let payload = env.payload.clone();
                        self.accept_cipher(&payload)
                    }
                    _ => Step::none(),
                }
            }
            Tag::Echo => {
                if !self.seen_echo.insert(env.from) {
                    return Step::none();
                }
                let Some(hc) = hc_decode(&self.env.suite, &env.payload) else {
                    return Step::none();
                };
                self.echoes.entry(hc).or_default().insert(env.from);
                self.progress()
            }
            Tag::Ready => {
                if !self.seen_ready.insert(env.from) {
                    return Step::none();
                }
                let Some(hc) = hc_decode(&self.env.suite, &env.payload) else {
                    return Step::none();
                };
                self.readies.entry(hc).or_default().insert(env.from);
                self.progress()
            }
            _ => Step::none(),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Reconstruction-phase reactor: runs on one party's `ShOutput`.
pub struct AvssRec {
    env: Arc<Env>,
    instance: InstanceId,
    me: PartyId,
    input: ShOutput,
    mode: CipherMode,
    phi: BTreeMap<u64, Fe>,
    key_sent: bool,
    done: bool,
    key_tally: BTreeMap<Vec<u8>, BTreeSet<PartyId>>,
    seen_keyrec: BTreeSet<PartyId>,
    seen_key: BTreeSet<PartyId>,
}

impl AvssRec {
    pub fn new(
        env: Arc<Env>,
        instance: InstanceId,
        me: PartyId,
        input: ShOutput,
        mode: CipherMode,
    ) -> Self {
        AvssRec {
            env,
            instance,
            me,
            input,
            mode,
            phi: BTreeMap::new(),
            key_sent: false,
            done: false,
            key_tally: BTreeMap::new(),
            seen_keyrec: BTreeSet::new(),
            seen_key: BTreeSet::new(),
        }
    }

    fn keyrec_payload(&self) -> Vec<u8> {
        let suite = &self.env.suite;
        let mut w = Writer::new();
        w.raw(&suite.field.encode(self.input.share_a.as_ref().unwrap()));
        w.raw(&suite.field.encode(self.input.share_b.as_ref().unwrap()));
        w.raw(&self.input.h);
        w.finish()
    }
}

impl Reactor for AvssRec {
    fn on_activate(&mut self) -> Step {
        if !self.input.has_shares() {
            return Step::none();
        }
        Step::send(multicast(self.env.n, self.me, &self.instance, Tag::KeyRec, self.keyrec_payload()))
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        debug_assert_eq!(env.instance, self.instance);
        let suite = &self.env.suite;
        match env.tag {
            Tag::KeyRec => {
                if !self.seen_keyrec.insert(env.from) {
                    return Step::none();
                }
                let Some(cmt) = self.input.cmt.as_ref() else { return Step::none() };
                let mut r = Reader::new(&env.payload);
                let parsed = (|| {
                    let a = suite.field.decode(r.raw(suite.field.width()).ok()?).ok()?;
                    let b = suite.field.decode(r.raw(suite.field.width()).ok()?).ok()?;
                    let h = r.raw(suite.lambda).ok()?.to_vec();
                    r.expect_end().ok()?;
                    Some((a, b, h))
                })();
                let Some((a, b, h)) = parsed else { return Step::none() };
                if h != self.input.h
                    || !pedersen::verify_opening(
                        &suite.group,
                        &suite.field,
                        cmt,
                        env.from as u64,
                        &a,
                        &b,
                    )
                {
                    return Step::none();
                }
                self.phi.insert(env.from as u64, a);
                if self.phi.len() == self.env.f + 1 && !self.key_sent {
                    self.key_sent = true;
                    let points: Vec<(u64, Fe)> =
                        self.phi.iter().map(|(j, a)| (*j, a.clone())).collect();
                    let key = interpolate_at_zero(&suite.field, &points, self.env.f)
                        .expect("f+1 distinct verified shares interpolate");
                    return Step::send(multicast(
                        self.env.n,
                        self.me,
                        &self.instance,
                        Tag::Key,
                        suite.field.encode(&key),
                    ));
                }
                Step::none()
            }
            Tag::Key => {
                if !self.seen_key.insert(env.from) {
                    return Step::none();
                }
                let votes = self.key_tally.entry(env.payload.clone()).or_default();
                votes.insert(env.from);
                if votes.len() >= self.env.f + 1 && !self.done {
                    let Ok(key) = suite.field.decode(&env.payload) else { return Step::none() };
                    let Some(m) = decrypt(suite, self.mode, &key, &self.input.c) else {
                        return Step::none();
                    };
                    self.done = true;
                    return Step { out: vec![], output: Some(Out::AvssSecret(m)) };
                }
                Step::none()
            }
            _ => Step::none(),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keys::gen_parties;
    use crate::simnet::run::{run, NetConfig};
    use crate::simnet::sched::SchedulerSpec;

    fn setup(n: usize, f: usize) -> (Arc<Env>, Vec<Arc<KeyStore>>) {
        let suite = Arc::new(Suite::mock());
        let (keys, registry) = gen_parties(&suite, n, b"avss test");
        let env = Env::new(suite, Arc::new(registry), f);
        (env, keys.into_iter().map(Arc::new).collect())
    }

    fn honest_net(
        env: &Arc<Env>,
        keys: &[Arc<KeyStore>],
        dealer: PartyId,
        secret: &[u8],
        seed: u64,
    ) -> Vec<Box<dyn Reactor>> {
        keys.iter()
            .map(|ks| {
                let input = (ks.party == dealer).then(|| secret.to_vec());
                Box::new(
                    AvssSh::new(
                        env.clone(),
                        ks.clone(),
                        InstanceId::root(2),
                        dealer,
                        input,
                        CipherMode::RoXor,
                        seed,
                    )
                    .unwrap(),
                ) as Box<dyn Reactor>
            })
            .collect()
    }

    fn shared_outputs(report: &crate::simnet::run::RunReport) -> BTreeMap<PartyId, ShOutput> {
        report
            .outputs
            .iter()
            .map(|(p, (o, _))| match o {
                Out::AvssShared(s) => (*p, s.clone()),
                other => panic!("unexpected output {other:?}"),
            })
            .collect()
    }

    #[test]
    fn constructor_enforces_arity() {
        let (env, keys) = setup(4, 1);
        let err = AvssSh::new(
            env.clone(),
            keys[1].clone(),
            InstanceId::root(2),
            1,
            Some(vec![0; 4]),
            CipherMode::RoXor,
            0,
        )
        .err().unwrap();
        assert_eq!(err, AvssError::InputArity);
        // Stream mode takes any non-empty secret; only emptiness is malformed.
        let err = AvssSh::new(
            env.clone(),
            keys[0].clone(),
            InstanceId::root(2),
            1,
            Some(vec![]),
            CipherMode::RoXor,
            0,
        )
        .err().unwrap();
        assert_eq!(err, AvssError::SecretArity);
        // Pad mode wants exactly one canonical field element.
        let err = AvssSh::new(
            env,
            keys[0].clone(),
            InstanceId::root(2),
            1,
            Some(vec![255]),
            CipherMode::Pad,
            0,
        )
        .err().unwrap();
        assert_eq!(err, AvssError::SecretArity);
    }

    #[test]
    fn cipher_modes_round_trip() {
        let suite = Suite::mock();
        let key = suite.field.from_u64(42);
        let m = vec![1, 2, 3, 4];
        let c = encrypt(&suite, CipherMode::RoXor, &key, &m);
        assert_ne!(c, m);
        assert_eq!(decrypt(&suite, CipherMode::RoXor, &key, &c), Some(m.clone()));
        let other = suite.field.from_u64(43);
        assert_ne!(decrypt(&suite, CipherMode::RoXor, &other, &c), Some(m));

        let m = suite.field.encode(&suite.field.from_u64(9));
        let c = encrypt(&suite, CipherMode::Pad, &key, &m);
        assert_eq!(decrypt(&suite, CipherMode::Pad, &key, &c), Some(m));
    }

    #[test]
    fn every_keyshare_verifies_at_its_recipient() {
        let (env, keys) = setup(4, 1);
        let mut dealer = AvssSh::new(
            env.clone(),
            keys[0].clone(),
            InstanceId::root(2),
            1,
            Some(vec![9; 4]),
            CipherMode::RoXor,
            7,
        )
        .unwrap();
        let step = dealer.on_activate();
        assert_eq!(step.out.len(), 4);
        let suite = &env.suite;
        for e in &step.out {
            assert_eq!(e.tag, Tag::KeyShare);
            let mut r = Reader::new(&e.payload);
            let cmt = PolyCommitment::decode_from_with(&suite.group, &mut r).unwrap();
            let a = suite.field.decode(r.raw(suite.field.width()).unwrap()).unwrap();
            let b = suite.field.decode(r.raw(suite.field.width()).unwrap()).unwrap();
            assert!(pedersen::verify_opening(&suite.group, &suite.field, &cmt, e.to as u64, &a, &b));
            assert_eq!(cmt.degree_bound(), 1);
        }
    }

    /// n=4, f=1: Cipher on the 3rd Stored; Ready on the 3rd Echo; output on
    /// the 3rd Ready.
    #[test]
    fn thresholds_fire_exactly_at_quorum() {
        let (env, keys) = setup(4, 1);
        let inst = InstanceId::root(2);
        let suite = env.suite.clone();
        let mut dealer = AvssSh::new(
            env.clone(),
            keys[0].clone(),
            inst.clone(),
            1,
            Some(vec![5; 4]),
            CipherMode::RoXor,
            3,
        )
        .unwrap();
        let shares = dealer.on_activate().out;

        // Feed the dealer its own KeyShare; it answers Stored to itself.
        let own = shares.iter().find(|e| e.to == 1).unwrap().clone();
        let step = dealer.on_envelope(&own);
        assert_eq!(step.out.len(), 1);
        assert_eq!(step.out[0].tag, Tag::Stored);

        // Second parties' Stored signatures, built exactly as they would.
        let h = {
            let mut r = Reader::new(&own.payload);
            let cmt = PolyCommitment::decode_from_with(&suite.group, &mut r).unwrap();
            cmt_digest(&suite, &cmt)
        };
        let stored = |j: usize| Envelope {
            from: j as PartyId,
            to: 1,
            instance: inst.clone(),
            tag: Tag::Stored,
            payload: sig::sign(&suite, &keys[j - 1].sig, &stored_msg(&suite, &inst, &h)),
        };
        let first = dealer.on_envelope(&step.out[0]);
        assert!(first.out.is_empty(), "one Stored is not a quorum");
        assert!(dealer.on_envelope(&stored(2)).out.is_empty(), "two Stored are not a quorum");
        let cipher_step = dealer.on_envelope(&stored(3));
        assert_eq!(cipher_step.out.len(), 4, "third Stored releases the Cipher");
        assert!(cipher_step.out.iter().all(|e| e.tag == Tag::Cipher));

        // A participant: KeyShare, then Cipher, then Echo/Ready quorums.
        let mut p2 = AvssSh::new(
            env.clone(),
            keys[1].clone(),
            inst.clone(),
            1,
            None,
            CipherMode::RoXor,
            0,
        )
        .unwrap();
        let ks2 = shares.iter().find(|e| e.to == 2).unwrap();
        assert_eq!(p2.on_envelope(ks2).out[0].tag, Tag::Stored);
        let cipher_to_2 =
            cipher_step.out.iter().find(|e| e.to == 2).unwrap().clone();
        let echo = p2.on_envelope(&cipher_to_2);
        assert_eq!(echo.out.len(), 4);
        assert!(echo.out.iter().all(|e| e.tag == Tag::Echo));
        let hc = echo.out[0].payload.clone();
        let fwd = |from: PartyId, tag: Tag| Envelope {
            from,
            to: 2,
            instance: inst.clone(),
            tag,
            payload: hc.clone(),
        };
        assert!(p2.on_envelope(&fwd(1, Tag::Echo)).out.is_empty());
        assert!(p2.on_envelope(&fwd(2, Tag::Echo)).out.is_empty());
        let ready = p2.on_envelope(&fwd(3, Tag::Echo));
        assert!(ready.out.iter().all(|e| e.tag == Tag::Ready), "third Echo triggers Ready");
        assert_eq!(ready.out.len(), 4);
        assert!(p2.on_envelope(&fwd(1, Tag::Ready)).output.is_none());
        assert!(p2.on_envelope(&fwd(2, Tag::Ready)).output.is_none());
        let out = p2.on_envelope(&fwd(4, Tag::Ready)).output.expect("third Ready completes");
        match out {
            Out::AvssShared(s) => {
                assert!(s.has_shares());
                assert_eq!(cmt_digest(&suite, s.cmt.as_ref().unwrap()), s.h);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn honest_run_completes_with_exact_budget_and_depth() {
        let (env, keys) = setup(4, 1);
        let mut rs = honest_net(&env, &keys, 1, &[7; 4], 11);
        let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Fifo, 0));
        assert!(report.stall.is_none());
        let outs = shared_outputs(&report);
        assert_eq!(outs.len(), 4);
        let h0 = &outs[&1].h;
        let c0 = &outs[&1].c;
        for s in outs.values() {
            assert_eq!((&s.h, &s.c), (h0, c0));
            assert!(s.has_shares(), "honest dealer leaves nobody short");
        }
        // KeyShare n + Stored n + Cipher n + Echo n² + Ready n².
        assert_eq!(report.metrics.total.msgs, 3 * 4 + 2 * 16);
        // KeyShare → Stored → Cipher → Echo → Ready: five causal hops.
        assert_eq!(report.metrics.rounds, 5);
    }

    #[test]
    fn sharing_then_reconstruction_returns_the_secret() {
        let (env, keys) = setup(4, 1);
        let secret = vec![0xAB, 0xCD, 0xEF, 0x01];
        for seed in 0..10 {
            let mut rs = honest_net(&env, &keys, 2, &secret, seed);
            let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Random, seed));
            let outs = shared_outputs(&report);

            let mut recs: Vec<Box<dyn Reactor>> = outs
                .iter()
                .map(|(p, s)| {
                    Box::new(AvssRec::new(
                        env.clone(),
                        InstanceId::root(3),
                        *p,
                        s.clone(),
                        CipherMode::RoXor,
                    )) as Box<dyn Reactor>
                })
                .collect();
            let rec_report = run(&mut recs, &NetConfig::new(SchedulerSpec::Random, seed + 100));
            assert!(rec_report.stall.is_none());
            assert_eq!(rec_report.outputs.len(), 4);
            for (o, _) in rec_report.outputs.values() {
                assert_eq!(*o, Out::AvssSecret(secret.clone()), "seed {seed}");
            }
        }
    }

    #[test]
    fn reconstruction_has_two_hops_and_fires_on_second_key() {
        let (env, keys) = setup(4, 1);
        let mut rs = honest_net(&env, &keys, 1, &[1; 4], 5);
        let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Fifo, 0));
        let outs = shared_outputs(&report);
        let mut recs: Vec<Box<dyn Reactor>> = outs
            .iter()
            .map(|(p, s)| {
                Box::new(AvssRec::new(
                    env.clone(),
                    InstanceId::root(3),
                    *p,
                    s.clone(),
                    CipherMode::RoXor,
                )) as Box<dyn Reactor>
            })
            .collect();
        let rec_report = run(&mut recs, &NetConfig::new(SchedulerSpec::Fifo, 0));
        // KeyRec → Key: two causal hops; n² + n² messages.
        assert_eq!(rec_report.metrics.rounds, 2);
        assert_eq!(rec_report.metrics.total.msgs, 2 * 16);

        // Direct drive: the output fires exactly on the 2nd identical Key.
        let s = outs[&2].clone();
        let mut rec = AvssRec::new(env.clone(), InstanceId::root(3), 2, s.clone(), CipherMode::RoXor);
        rec.on_activate();
        let mk = |from: PartyId, payload: Vec<u8>| Envelope {
            from,
            to: 2,
            instance: InstanceId::root(3),
            tag: Tag::Key,
            payload,
        };
        // Recover the true key from the full share set.
        let points: Vec<(u64, Fe)> = outs
            .iter()
            .take(2)
            .map(|(p, s)| (*p as u64, s.share_a.clone().unwrap()))
            .collect();
        let key = interpolate_at_zero(&env.suite.field, &points, 1).unwrap();
        let enc = env.suite.field.encode(&key);
        assert!(rec.on_envelope(&mk(1, enc.clone())).output.is_none());
        let out = rec.on_envelope(&mk(3, enc)).output.expect("second identical Key decrypts");
        assert_eq!(out, Out::AvssSecret(vec![1; 4]));
    }

    #[test]
    fn wrong_key_votes_are_filtered() {
        let (env, keys) = setup(4, 1);
        let mut rs = honest_net(&env, &keys, 1, &[2; 4], 8);
        let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Fifo, 0));
        let outs = shared_outputs(&report);
        let mut rec =
            AvssRec::new(env.clone(), InstanceId::root(3), 2, outs[&2].clone(), CipherMode::RoXor);
        rec.on_activate();
        let junk = env.suite.field.encode(&env.suite.field.from_u64(13));
        let mk = |from: PartyId, payload: Vec<u8>| Envelope {
            from,
            to: 2,
            instance: InstanceId::root(3),
            tag: Tag::Key,
            payload,
        };
        assert!(rec.on_envelope(&mk(4, junk)).output.is_none(), "one vote is not f+1");
        // And a KeyRec that fails the opening check leaves no trace.
        let mut w = Writer::new();
        w.raw(&env.suite.field.encode(&env.suite.field.from_u64(1)));
        w.raw(&env.suite.field.encode(&env.suite.field.from_u64(2)));
        w.raw(&outs[&2].h);
        let bad = Envelope {
            from: 4,
            to: 2,
            instance: InstanceId::root(3),
            tag: Tag::KeyRec,
            payload: w.finish(),
        };
        rec.on_envelope(&bad);
        assert!(rec.phi.is_empty());
    }

    #[test]
    fn duplicate_messages_are_inert() {
        let (env, keys) = setup(4, 1);
        let inst = InstanceId::root(2);
        let mut dealer = AvssSh::new(
            env.clone(),
            keys[0].clone(),
            inst.clone(),
            1,
            Some(vec![3; 4]),
            CipherMode::RoXor,
            1,
        )
        .unwrap();
        let shares = dealer.on_activate().out;
        let own = shares.iter().find(|e| e.to == 1).unwrap().clone();
        let stored = dealer.on_envelope(&own).out;
        assert_eq!(stored.len(), 1);
        assert!(dealer.on_envelope(&own).out.is_empty(), "second KeyShare ignored");
        assert!(dealer.on_envelope(&stored[0]).out.is_empty());
        assert!(dealer.on_envelope(&stored[0]).out.is_empty(), "second Stored from same party");
    }

    /// Information-theoretic secrecy at the sharing layer, by exhaustive
    /// counting in a tiny field: the corrupted party's view (its opening, the
    /// commitment, the pad-mode ciphertext) is consistent with *every*
    /// candidate secret through exactly the same number of completions.
    #[test]
    fn corrupt_view_underdetermines_the_secret() {
        let suite = Arc::new(Suite::mock_with_q(31));
        let (keys, registry) = gen_parties(&suite, 4, b"count");
        let env = Env::new(suite.clone(), Arc::new(registry), 1);
        let secret_fe = suite.field.from_u64(9);
        let secret = suite.field.encode(&secret_fe);
        let mut dealer = AvssSh::new(
            env.clone(),
            Arc::new(keys[0].clone()),
            InstanceId::root(2),
            1,
            Some(secret),
            CipherMode::Pad,
            21,
        )
        .unwrap();
        let shares = dealer.on_activate().out;

        // Corrupt party 2's view of the dealing.
        let to_u64 = |bytes: &[u8]| {
            bytes.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64)
        };
        let (c0, c1, sh_a2, sh_b2) = {
            let mut r = Reader::new(&shares[1].payload);
            let cmt = PolyCommitment::decode_from_with(&suite.group, &mut r).unwrap();
            let a = suite.field.decode(r.raw(suite.field.width()).unwrap()).unwrap();
            let b = suite.field.decode(r.raw(suite.field.width()).unwrap()).unwrap();
            (
                to_u64(&suite.group.encode(&cmt.coeffs[0])),
                to_u64(&suite.group.encode(&cmt.coeffs[1])),
                a.to_u64(),
                b.to_u64(),
            )
        };
        // Drive the dealer to the Cipher so the view includes the ciphertext.
        let mut cipher = None;
        let own = shares.iter().find(|e| e.to == 1).unwrap().clone();
        let self_stored = dealer.on_envelope(&own).out;
        let h = {
            let mut r = Reader::new(&own.payload);
            let cmt = PolyCommitment::decode_from_with(&suite.group, &mut r).unwrap();
            cmt_digest(&suite, &cmt)
        };
        let mut feed = |e: &Envelope, dealer: &mut AvssSh| {
            for o in dealer.on_envelope(e).out {
                if o.tag == Tag::Cipher && o.to == 1 {
                    cipher = Some(o.payload.clone());
                }
            }
        };
        feed(&self_stored[0], &mut dealer);
        for j in [2u16, 3] {
            let e = Envelope {
                from: j,
                to: 1,
                instance: InstanceId::root(2),
                tag: Tag::Stored,
                payload: sig::sign(
                    &suite,
                    &keys[j as usize - 1].sig,
                    &stored_msg(&suite, &InstanceId::root(2), &h),
                ),
            };
            feed(&e, &mut dealer);
        }
        let cipher = cipher.expect("dealer released the cipher");
        let c_fe = {
            let mut r = Reader::new(&cipher);
            r.raw(suite.lambda).unwrap();
            to_u64(&r.bytes().unwrap())
        };

        // Count completions (a0,a1,b0,b1) consistent with the view, per
        // candidate secret. Mock group: commit2(a,b) = 2a + 3b mod q.
        let q = 31u64;
        let mut per_secret = vec![0u64; q as usize];
        for a0 in 0..q {
            for a1 in 0..q {
                if (a0 + 2 * a1) % q != sh_a2 {
                    continue;
                }
                for b0 in 0..q {
                    if (2 * a0 + 3 * b0) % q != c0 {
                        continue;
                    }
                    for b1 in 0..q {
                        if (2 * a1 + 3 * b1) % q != c1 {
                            continue;
                        }
                        if (b0 + 2 * b1) % q != sh_b2 {
                            continue;
                        }
                        let m = (c_fe + q - a0) % q;
                        per_secret[m as usize] += 1;
                    }
                }
            }
        }
        assert!(per_secret.iter().all(|&n| n == per_secret[0] && n > 0),
            "every candidate secret must be equally consistent: {per_secret:?}");
    }
}
