//! Adversarial party programs for the property suites. Each implements
//! [`Reactor`] like an honest party but plays a named attack; runs wire them
//! in at corrupt indices so the honest modules face live misbehavior rather
//! than hand-mutated messages alone.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::avss::{self, AvssError, AvssSh, CipherMode};
use crate::crypto::field::Fe;
use crate::crypto::keys::{Env, KeyStore, PartyId};
use crate::crypto::pedersen::{self, PolyCommitment};
use crate::crypto::poly::Poly;
use crate::crypto::sig;
use crate::pvss::{self, PvssScript, PvssShare};
use crate::seeding::{commit_payload, confirm_msg, seed_payload};
use crate::simnet::{multicast, unicast, Envelope, InstanceId, Reactor, Step, Tag};
use crate::wire::Reader;

/// Crash-from-birth: sends nothing, ever.
pub struct SilentParty;

impl Reactor for SilentParty {
    fn on_activate(&mut self) -> Step {
        Step::none()
    }

    fn on_envelope(&mut self, _env: &Envelope) -> Step {
        Step::none()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

struct SeedBranch {
    agg: PvssScript,
    h: Vec<u8>,
    sigs: BTreeMap<PartyId, Vec<u8>>,
    cert: Option<Vec<(PartyId, Vec<u8>)>>,
    shares: BTreeMap<PartyId, PvssShare>,
    seeded: bool,
}

/// A seeding leader that runs two parallel sessions over two different
/// aggregates, locking one on the first `2f` honest parties and the other
/// on the rest, endorsing both itself, and driving each branch toward
/// commitment as far as its split allows. With `amplify` set it also feeds
/// echo/ready amplification for whichever seed it manages to produce,
/// pulling even the minority branch to an output — the honest modules must
/// end with at most one seed value either way.
pub struct SeedEquivLeader {
    env: Arc<Env>,
    ks: Arc<KeyStore>,
    instance: InstanceId,
    amplify: bool,
    scripts: BTreeMap<PartyId, PvssScript>,
    branches: Option<[SeedBranch; 2]>,
}

impl SeedEquivLeader {
    pub fn new(env: Arc<Env>, ks: Arc<KeyStore>, instance: InstanceId, amplify: bool) -> Self {
        SeedEquivLeader { env, ks, instance, amplify, scripts: BTreeMap::new(), branches: None }
    }

    fn me(&self) -> PartyId {
        self.ks.party
    }

    fn build_branches(&mut self) -> Step {
        let t = 2 * self.env.f + 1;
        let honest: Vec<PartyId> = self.scripts.keys().copied().collect();
        let me = self.me();
        let mut branches = Vec::new();
        for (pick, seed) in [(&honest[..t - 1], 9001u64), (&honest[honest.len() - (t - 1)..], 9002)]
        {
            let mut agg = pvss::deal(&self.env, &self.ks, None, seed);
            for p in pick {
                agg = pvss::agg_scripts(&self.env, &agg, &self.scripts[p])
                    .expect("verified contributions aggregate");
            }
            let h = agg.digest(&self.env.suite);
            let own_sig = sig::sign(
                &self.env.suite,
                &self.ks.sig,
                &confirm_msg(&self.env.suite, &self.instance, &h),
            );
            let own_share = pvss::get_share(&self.env, &self.ks, &agg);
            branches.push(SeedBranch {
                agg,
                h,
                sigs: [(me, own_sig)].into(),
                cert: None,
                shares: [(me, own_share)].into(),
                seeded: false,
            });
        }
        let [a, b] = <[SeedBranch; 2]>::try_from(branches).ok().expect("two branches");
        let mut out = Vec::new();
        for (i, p) in honest.iter().enumerate() {
            let branch = if i < t - 1 { &a } else { &b };
            out.extend(unicast(
                me,
                *p,
                &self.instance,
                Tag::LockAggPvss,
                branch.agg.encode_with(&self.env.suite),
            ));
        }
        self.branches = Some([a, b]);
        Step::send(out)
    }
}

impl Reactor for SeedEquivLeader {
    fn on_activate(&mut self) -> Step {
        // Baseless ready spam: below the amplification threshold on its own,
        // so honest parties must shrug it off.
        Step::send(multicast(self.env.n, self.me(), &self.instance, Tag::SeedReady, b"junk".to_vec()))
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        let me = self.me();
        match env.tag {
            Tag::PvssScript if env.from != me => {
                if self.branches.is_some() || self.scripts.contains_key(&env.from) {
                    return Step::none();
                }
                let Ok(script) = PvssScript::decode_with(&self.env.suite, &env.payload) else {
                    return Step::none();
                };
                if !pvss::vrfy_script(&self.env, &script) {
                    return Step::none();
                }
                self.scripts.insert(env.from, script);
                if self.scripts.len() == self.env.n - 1 {
                    self.build_branches()
                } else {
                    Step::none()
                }
            }
            Tag::ConfirmAggPvss => {
                let t = 2 * self.env.f + 1;
                let Some(branches) = self.branches.as_mut() else { return Step::none() };
                let mut out = Vec::new();
                for branch in branches.iter_mut() {
                    let msg = confirm_msg(&self.env.suite, &self.instance, &branch.h);
                    if branch.cert.is_some()
                        || branch.sigs.contains_key(&env.from)
                        || !sig::verify(
                            &self.env.suite,
                            self.env.registry.sig_vk(env.from),
                            &msg,
                            &env.payload,
                        )
                    {
                        continue;
                    }
                    branch.sigs.insert(env.from, env.payload.clone());
                    if branch.sigs.len() >= t {
                        let cert: Vec<(PartyId, Vec<u8>)> =
                            branch.sigs.iter().map(|(p, s)| (*p, s.clone())).collect();
                        out.extend(multicast(
                            self.env.n,
                            me,
                            &self.instance,
                            Tag::CommitAggPvss,
                            commit_payload(&branch.h, &cert),
                        ));
                        branch.cert = Some(cert);
                    }
                }
                Step::send(out)
            }
            Tag::SeedShare => {
                let t = 2 * self.env.f + 1;
                let Some(branches) = self.branches.as_mut() else { return Step::none() };
                let Ok(share) = PvssShare::decode_with(&self.env.suite, &env.payload) else {
                    return Step::none();
                };
                let mut out = Vec::new();
                for branch in branches.iter_mut() {
                    if branch.seeded
                        || branch.shares.contains_key(&env.from)
                        || share.party != env.from
                        || !pvss::vrfy_share(&self.env, env.from, &share, &branch.agg)
                    {
                        continue;
                    }
                    branch.shares.insert(env.from, share.clone());
                    let Some(cert) = branch.cert.clone() else { continue };
                    if branch.shares.len() < t {
                        continue;
                    }
                    branch.seeded = true;
                    let witness: Vec<(PartyId, PvssShare)> =
                        branch.shares.iter().take(t).map(|(p, s)| (*p, s.clone())).collect();
                    let secret = pvss::agg_shares(&self.env, &branch.agg, &witness)
                        .expect("quorum of verified shares");
                    let seed = self.env.suite.group.encode(&secret.point);
                    let shares: Vec<PvssShare> = witness.into_iter().map(|(_, s)| s).collect();
                    out.extend(multicast(
                        self.env.n,
                        me,
                        &self.instance,
                        Tag::Seed,
                        seed_payload(&self.env.suite, &branch.h, &cert, &seed, &shares),
                    ));
                    if self.amplify {
                        out.extend(multicast(self.env.n, me, &self.instance, Tag::SeedEcho, seed.clone()));
                        out.extend(multicast(self.env.n, me, &self.instance, Tag::SeedReady, seed));
                    }
                }
                Step::send(out)
            }
            _ => Step::none(),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Secret-sharing dealer that hands verified key shares to a chosen subset
/// and then disappears — no cipher ever follows. Honest parties must stall
/// without phantom outputs rather than complete a sharing nobody finished.
pub struct CrashingDealer {
    inner: AvssSh,
    recipients: BTreeSet<PartyId>,
}

impl CrashingDealer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        secret: Vec<u8>,
        mode: CipherMode,
        seed: u64,
        recipients: BTreeSet<PartyId>,
    ) -> Result<Self, AvssError> {
        let dealer = ks.party;
        let inner = AvssSh::new(env, ks, instance, dealer, Some(secret), mode, seed)?;
        Ok(CrashingDealer { inner, recipients })
    }
}

impl Reactor for CrashingDealer {
    fn on_activate(&mut self) -> Step {
        let mut step = self.inner.on_activate();
        step.out.retain(|e| self.recipients.contains(&e.to));
        step
    }

    fn on_envelope(&mut self, _env: &Envelope) -> Step {
        Step::none()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// One branch of an equivocating dealer's double life: a complete,
/// internally consistent deal plus the signatures gathered for it.
struct EquivDeal {
    key: Fe,
    secret: Vec<u8>,
    h: Vec<u8>,
    cmt: PolyCommitment,
    a: Poly,
    b: Poly,
    sigs: BTreeMap<PartyId, Vec<u8>>,
    cipher_sent: bool,
}

/// Dealer that runs two fully valid sharings in parallel, giving one half of
/// the parties openings of one commitment and the other half openings of the
/// other. It counts its own signature toward either branch and pushes
/// whichever branch reaches a cipher over the echo threshold too, so the
/// minority side gets dragged along. Honest parties must still converge on a
/// single `(digest, cipher)` pair or stall — never split.
pub struct SplitDealer {
    env: Arc<Env>,
    ks: Arc<KeyStore>,
    instance: InstanceId,
    mode: CipherMode,
    deals: [EquivDeal; 2],
    echoed: bool,
}

impl SplitDealer {
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        secrets: [Vec<u8>; 2],
        mode: CipherMode,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let field = &env.suite.field;
        let deals = secrets.map(|secret| {
            let key = field.rand(&mut rng);
            let a = Poly::random_with_constant(field, key.clone(), env.f, &mut rng);
            let blind = field.rand(&mut rng);
            let b = Poly::random_with_constant(field, blind, env.f, &mut rng);
            let cmt = pedersen::commit(&env.suite.group, &a, &b);
            let h = avss::cmt_digest(&env.suite, &cmt);
            EquivDeal { key, secret, h, cmt, a, b, sigs: BTreeMap::new(), cipher_sent: false }
        });
        SplitDealer { env, ks, instance, mode, deals, echoed: false }
    }

    fn me(&self) -> PartyId {
        self.ks.party
    }
}

impl Reactor for SplitDealer {
    fn on_activate(&mut self) -> Step {
        let suite = &self.env.suite;
        let half = self.env.n / 2;
        let out = (1..=self.env.n as PartyId)
            .map(|j| {
                let deal = &self.deals[usize::from(j as usize > half)];
                let a = deal.a.eval_u64(&suite.field, j as u64);
                let b = deal.b.eval_u64(&suite.field, j as u64);
                Envelope {
                    from: self.me(),
                    to: j,
                    instance: self.instance.clone(),
                    tag: Tag::KeyShare,
                    payload: avss::keyshare_payload(suite, &deal.cmt, &a, &b),
                }
            })
            .collect();
        Step::send(out)
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        if env.tag != Tag::Stored || env.from == self.me() {
            return Step::none();
        }
        let me = self.me();
        let quorum = self.env.quorum();
        let n = self.env.n;
        let mut step = Step::none();
        for deal in self.deals.iter_mut() {
            let suite = &self.env.suite;
            let msg = avss::stored_msg(suite, &self.instance, &deal.h);
            if deal.sigs.contains_key(&env.from)
                || !sig::verify(suite, self.env.registry.sig_vk(env.from), &msg, &env.payload)
            {
                continue;
            }
            deal.sigs.insert(env.from, env.payload.clone());
            // Own signature rides along only at release time, so each branch
            // needs quorum − 1 honest endorsements of its own.
            if deal.sigs.len() + 1 < quorum || deal.cipher_sent {
                continue;
            }
            deal.cipher_sent = true;
            let mut sigs = deal.sigs.clone();
            sigs.insert(me, sig::sign(suite, &self.ks.sig, &msg));
            let c = avss::encrypt(suite, self.mode, &deal.key, &deal.secret);
            step.out.extend(multicast(
                n,
                me,
                &self.instance,
                Tag::Cipher,
                avss::cipher_payload(&deal.h, &c, &sigs),
            ));
            if !self.echoed {
                self.echoed = true;
                let mut w = crate::wire::Writer::new();
                w.raw(&deal.h);
                w.bytes(&c);
                let hc = w.finish();
                step.out.extend(multicast(n, me, &self.instance, Tag::Echo, hc.clone()));
                step.out.extend(multicast(n, me, &self.instance, Tag::Ready, hc));
            }
        }
        step
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Dealer that shares honestly but releases its cipher the moment `f + 1`
/// signatures are in — a genuine but sub-quorum evidence set. Every honest
/// party must refuse the cipher, so the sharing stalls without output.
pub struct LameQuorumDealer {
    env: Arc<Env>,
    ks: Arc<KeyStore>,
    instance: InstanceId,
    mode: CipherMode,
    deal: EquivDeal,
}

impl LameQuorumDealer {
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        secret: Vec<u8>,
        mode: CipherMode,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let field = &env.suite.field;
        let key = field.rand(&mut rng);
        let a = Poly::random_with_constant(field, key.clone(), env.f, &mut rng);
        let blind = field.rand(&mut rng);
        let b = Poly::random_with_constant(field, blind, env.f, &mut rng);
        let cmt = pedersen::commit(&env.suite.group, &a, &b);
        let h = avss::cmt_digest(&env.suite, &cmt);
        let deal = EquivDeal { key, secret, h, cmt, a, b, sigs: BTreeMap::new(), cipher_sent: false };
        LameQuorumDealer { env, ks, instance, mode, deal }
    }
}

impl Reactor for LameQuorumDealer {
    fn on_activate(&mut self) -> Step {
        let suite = &self.env.suite;
        let me = self.ks.party;
        let out = (1..=self.env.n as PartyId)
            .map(|j| {
                let a = self.deal.a.eval_u64(&suite.field, j as u64);
                let b = self.deal.b.eval_u64(&suite.field, j as u64);
                Envelope {
                    from: me,
                    to: j,
                    instance: self.instance.clone(),
                    tag: Tag::KeyShare,
                    payload: avss::keyshare_payload(suite, &self.deal.cmt, &a, &b),
                }
            })
            .collect();
        Step::send(out)
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        if env.tag != Tag::Stored {
            return Step::none();
        }
        let suite = &self.env.suite;
        let msg = avss::stored_msg(suite, &self.instance, &self.deal.h);
        if self.deal.sigs.contains_key(&env.from)
            || !sig::verify(suite, self.env.registry.sig_vk(env.from), &msg, &env.payload)
        {
            return Step::none();
        }
        self.deal.sigs.insert(env.from, env.payload.clone());
        if self.deal.sigs.len() < self.env.f + 1 || self.deal.cipher_sent {
            return Step::none();
        }
        self.deal.cipher_sent = true;
        let c = avss::encrypt(suite, self.mode, &self.deal.key, &self.deal.secret);
        let sub: BTreeMap<PartyId, Vec<u8>> =
            self.deal.sigs.iter().take(self.env.f + 1).map(|(p, s)| (*p, s.clone())).collect();
        Step::send(multicast(
            self.env.n,
            self.ks.party,
            &self.instance,
            Tag::Cipher,
            avss::cipher_payload(&self.deal.h, &c, &sub),
        ))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Dealer that commits honestly but mails selected victims openings that do
/// not lie on the committed polynomials. Victims must refuse to endorse, yet
/// still finish via the echo path with their shares absent; everyone else
/// proceeds as if the dealer were honest.
pub struct WrongShareDealer {
    env: Arc<Env>,
    inner: AvssSh,
    victims: BTreeSet<PartyId>,
}

impl WrongShareDealer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        secret: Vec<u8>,
        mode: CipherMode,
        seed: u64,
        victims: BTreeSet<PartyId>,
    ) -> Result<Self, AvssError> {
        let dealer = ks.party;
        let inner =
            AvssSh::new(env.clone(), ks, instance, dealer, Some(secret), mode, seed)?;
        Ok(WrongShareDealer { env, inner, victims })
    }
}

impl Reactor for WrongShareDealer {
    fn on_activate(&mut self) -> Step {
        let mut step = self.inner.on_activate();
        let suite = &self.env.suite;
        for e in step.out.iter_mut() {
            if !self.victims.contains(&e.to) {
                continue;
            }
            let mut r = Reader::new(&e.payload);
            let cmt = PolyCommitment::decode_from_with(&suite.group, &mut r)
                .expect("own keyshare payload parses");
            let a = suite.field.decode(r.raw(suite.field.width()).unwrap()).unwrap();
            let b = suite.field.decode(r.raw(suite.field.width()).unwrap()).unwrap();
            let bad_a = suite.field.add(&a, &suite.field.one());
            e.payload = avss::keyshare_payload(suite, &cmt, &bad_a, &b);
        }
        step
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        self.inner.on_envelope(env)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Dealer that shares and gathers signatures honestly, then releases two
/// different ciphertexts under the same (legitimately endorsed) commitment
/// digest — one to a chosen subset, the original to everyone else. The echo
/// and ready rounds vote on the digest–cipher *pair*, so honest parties must
/// converge on one ciphertext regardless.
pub struct SplitCipherDealer {
    env: Arc<Env>,
    inner: AvssSh,
    flip: BTreeSet<PartyId>,
}

impl SplitCipherDealer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        secret: Vec<u8>,
        mode: CipherMode,
        seed: u64,
        mut flip: BTreeSet<PartyId>,
    ) -> Result<Self, AvssError> {
        let dealer = ks.party;
        flip.remove(&dealer);
        let inner =
            AvssSh::new(env.clone(), ks, instance, dealer, Some(secret), mode, seed)?;
        Ok(SplitCipherDealer { env, inner, flip })
    }

    fn fork_cipher(&self, payload: &[u8]) -> Vec<u8> {
        let suite = &self.env.suite;
        let mut r = Reader::new(payload);
        let h = r.raw(suite.lambda).expect("own cipher payload parses").to_vec();
        let mut c = r.bytes().unwrap();
        let sigs: BTreeMap<PartyId, Vec<u8>> = r
            .list(|r| {
                let j = r.u16()?;
                let s = r.bytes()?;
                Ok((j, s))
            })
            .unwrap()
            .into_iter()
            .collect();
        c[0] ^= 0xff;
        avss::cipher_payload(&h, &c, &sigs)
    }
}

impl Reactor for SplitCipherDealer {
    fn on_activate(&mut self) -> Step {
        self.inner.on_activate()
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        let mut step = self.inner.on_envelope(env);
        for e in step.out.iter_mut() {
            if e.tag == Tag::Cipher && self.flip.contains(&e.to) {
                e.payload = self.fork_cipher(&e.payload);
            }
        }
        step
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Binary-agreement saboteur: floods every early round with contradictory
/// votes — opposite bits to odd and even receivers across Val, Aux, Conf
/// and even Finish — then goes silent (it never serves coin traffic).
pub struct AbaContradictor {
    env: Arc<Env>,
    me: PartyId,
    instance: InstanceId,
    rounds: u32,
}

impl AbaContradictor {
    pub fn new(env: Arc<Env>, ks: Arc<KeyStore>, instance: InstanceId, rounds: u32) -> Self {
        AbaContradictor { env, me: ks.party, instance, rounds }
    }
}

impl Reactor for AbaContradictor {
    fn on_activate(&mut self) -> Step {
        use crate::aba::{conf_payload, finish_payload, round_bit_payload};
        let mut step = Step::none();
        for r in 0..self.rounds {
            for p in 1..=self.env.n as PartyId {
                let b = (p % 2) as u8;
                step.out.extend(unicast(self.me, p, &self.instance, Tag::Val, round_bit_payload(r, b)));
                step.out.extend(unicast(self.me, p, &self.instance, Tag::Aux, round_bit_payload(r, b)));
                step.out.extend(unicast(
                    self.me,
                    p,
                    &self.instance,
                    Tag::Conf,
                    conf_payload(r, &[b].into()),
                ));
                if r == 0 {
                    step.out.extend(unicast(self.me, p, &self.instance, Tag::Finish, finish_payload(b)));
                }
            }
        }
        step
    }

    fn on_envelope(&mut self, _env: &Envelope) -> Step {
        Step::none()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// The five scripted dealer misbehaviors the sharing property suites sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DealerScript {
    /// Hand out shares to a subset, never release a cipher.
    Crash,
    /// Two fully valid parallel deals, one per half of the parties.
    Equivocate,
    /// One honest deal, cipher released on `f + 1` signatures only.
    LameQuorum,
    /// Honest commitment, off-polynomial openings for selected victims.
    WrongShares,
    /// Honest deal and endorsement, two different ciphertexts at release.
    SplitCipher,
}

impl DealerScript {
    pub const ALL: [DealerScript; 5] = [
        DealerScript::Crash,
        DealerScript::Equivocate,
        DealerScript::LameQuorum,
        DealerScript::WrongShares,
        DealerScript::SplitCipher,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DealerScript::Crash => "crash-after-shares",
            DealerScript::Equivocate => "split-deal",
            DealerScript::LameQuorum => "under-endorsed-cipher",
            DealerScript::WrongShares => "off-polynomial-shares",
            DealerScript::SplitCipher => "forked-cipher",
        }
    }
}

/// Instantiate one scripted dealer at `ks.party`. The `seed` both drives the
/// deal sampling and rotates which honest parties the script targets, so a
/// sweep over seeds also sweeps victim subsets.
pub fn scripted_dealer(
    env: &Arc<Env>,
    ks: &Arc<KeyStore>,
    instance: &InstanceId,
    mode: CipherMode,
    secret: Vec<u8>,
    script: DealerScript,
    seed: u64,
) -> Box<dyn Reactor> {
    let me = ks.party;
    let others: Vec<PartyId> = (1..=env.n as PartyId).filter(|p| *p != me).collect();
    let rot = |k: usize| -> BTreeSet<PartyId> {
        (0..k.min(others.len())).map(|i| others[(seed as usize + i) % others.len()]).collect()
    };
    match script {
        DealerScript::Crash => Box::new(
            CrashingDealer::new(
                env.clone(),
                ks.clone(),
                instance.clone(),
                secret,
                mode,
                seed,
                rot(seed as usize % env.n),
            )
            .expect("dealer arity"),
        ),
        DealerScript::Equivocate => {
            let second = match mode {
                CipherMode::RoXor => {
                    let mut s = secret.clone();
                    s[0] ^= 1;
                    s
                }
                CipherMode::Pad => {
                    let field = &env.suite.field;
                    let v = field.decode(&secret).expect("pad secret is a field element");
                    field.encode(&field.add(&v, &field.one()))
                }
            };
            Box::new(SplitDealer::new(
                env.clone(),
                ks.clone(),
                instance.clone(),
                [secret, second],
                mode,
                seed,
            ))
        }
        DealerScript::LameQuorum => Box::new(LameQuorumDealer::new(
            env.clone(),
            ks.clone(),
            instance.clone(),
            secret,
            mode,
            seed,
        )),
        DealerScript::WrongShares => Box::new(
            WrongShareDealer::new(
                env.clone(),
                ks.clone(),
                instance.clone(),
                secret,
                mode,
                seed,
                rot(env.f),
            )
            .expect("dealer arity"),
        ),
        DealerScript::SplitCipher => Box::new(
            SplitCipherDealer::new(
                env.clone(),
                ks.clone(),
                instance.clone(),
                secret,
                mode,
                seed,
                rot(env.f),
            )
            .expect("dealer arity"),
        ),
    }
}

/// Election saboteur: plays no protocol role itself, just scavenges the
/// evaluation triples other parties broadcast and mails everyone fabricated
/// votes built from them — a real-looking subset, one with a doctored
/// maximal evaluation, an undersized one, and raw junk. Parties retain at
/// most one vote per sender, so whichever forgery lands first at each party
/// is the one that must come to nothing.
pub struct VoteForger {
    env: Arc<Env>,
    me: PartyId,
    instance: InstanceId,
    entries: BTreeMap<PartyId, crate::election::GEntry>,
    fired: bool,
}

impl VoteForger {
    pub fn new(env: Arc<Env>, ks: Arc<KeyStore>, instance: InstanceId) -> Self {
        VoteForger { env, me: ks.party, instance, entries: BTreeMap::new(), fired: false }
    }
}

impl Reactor for VoteForger {
    fn on_activate(&mut self) -> Step {
        Step::none()
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        use crate::election::{vote_payload, GEntry};
        use crate::simnet::ns;
        use crate::wire::Decode;

        let depth = self.instance.0.len();
        if self.fired
            || env.tag != Tag::Send
            || env.instance.seg_after(depth) != Some(ns::ELECTION_RBC)
        {
            return Step::none();
        }
        let Some(broadcaster) = env.instance.seg_after(depth + 1) else { return Step::none() };
        let broadcaster = broadcaster as PartyId;
        let Ok(m) = crate::coin::RndMax::decode(&env.payload) else { return Step::none() };
        self.entries.entry(broadcaster).or_insert(GEntry {
            broadcaster,
            owner: m.party,
            rand: m.rand,
            proof: m.proof,
        });
        let quorum = self.env.quorum();
        if self.entries.len() < quorum {
            return Step::none();
        }
        self.fired = true;
        let real: Vec<GEntry> = self.entries.values().take(quorum).cloned().collect();
        let mut doctored = real.clone();
        doctored[0].rand = vec![0xff; doctored[0].rand.len().max(1)];
        let short = real[..quorum - 1].to_vec();
        let mut step = Step::none();
        for payload in
            [vote_payload(&real), vote_payload(&doctored), vote_payload(&short), b"forged".to_vec()]
        {
            step.out.extend(multicast(self.env.n, self.me, &self.instance, Tag::Vote, payload));
        }
        step
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
