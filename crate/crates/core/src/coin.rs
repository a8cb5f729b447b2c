//! A common coin that is unpredictable before anyone asks for it and lands
//! on the same bit at every honest party a constant fraction of the time —
//! with no trusted dealer and no private setup.
//!
//! Every party seals a verifiable-random value: it evaluates its VRF on a
//! per-dealer seed and deals the evaluation through verifiable secret
//! sharing, so the value is fixed — but hidden — once the sharing completes.
//! Seeds come either from a public genesis nonce or from one seeding
//! instance per dealer run on the fly (each party leading its own).
//!
//! The reveal is quorum-gated so the adversary cannot peek before honest
//! parties are locked in. A party that sees `n−f` completed sharings
//! freezes that set (`Lock`) and gathers `n−f` signatures over it
//! (`Confirm`); the signature set is its commitment certificate (`Commit`).
//! Only a valid certificate opens the reconstruction phase: each party then
//! asks for the sharings it has seen complete (`RecRequest`), reconstructs
//! them, keeps the VRF evaluations that verify, and nominates the largest
//! as its `Candidate` — or `⊥` if it verified none. On `n−f` candidate
//! resolutions a party outputs the lowest bit of the largest nominated
//! evaluation (or, in the election-facing variant, the winning evaluation
//! itself with its owner and proof).
//!
//! Child protocol instances — n seeding runs and n sharings with their
//! reconstructions — live inside the coin reactor, which routes envelopes
//! to them by instance path and feeds their outputs back into its own state
//! machine. Envelopes for children that do not exist yet (a sharing whose
//! seed has not arrived, a reconstruction not yet requested) are parked and
//! replayed on activation, in arrival order.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::avss::{AvssRec, AvssSh, CipherMode, ShOutput};
use crate::crypto::keys::{Env, KeyStore, PartyId};
use crate::crypto::{sig, vrf, Suite};
use crate::seeding::Seeding;
use crate::simnet::{
    multicast, ns, unicast, Envelope, InstanceId, Out, Reactor, Step, Tag,
};
use crate::wire::{Decode, Encode, Reader, WireResult, Writer};

/// The strongest verifiable-random candidate a party saw: the owning party,
/// its random value and the proof that lets anyone re-check it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RndMax {
    pub party: PartyId,
    pub rand: Vec<u8>,
    pub proof: Vec<u8>,
}

impl Encode for RndMax {
    fn encode_into(&self, w: &mut Writer) {
        w.u16(self.party);
        w.bytes(&self.rand);
        w.bytes(&self.proof);
    }
}

impl Decode for RndMax {
    fn decode_from(r: &mut Reader<'_>) -> WireResult<RndMax> {
        Ok(RndMax { party: r.u16()?, rand: r.bytes()?, proof: r.bytes()? })
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum CoinError {
    #[error("a genesis nonce is required exactly when seeds are not grown on the fly")]
    NonceArity,
}

/// Where per-dealer seeds come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeedMode {
    /// A public nonce seeds every dealer immediately.
    Genesis(Vec<u8>),
    /// One led seeding instance per dealer, run inside the coin.
    Grown,
}

/// What the coin emits when it resolves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CoinGoal {
    /// The lowest bit of the winning evaluation.
    #[default]
    Bit,
    /// The winning evaluation itself, for leader election.
    Max,
}

/// VRF input: the coin instance and the dealer's seed, so distinct coins
/// over the same seeds stay independent. Consumers verifying a coin's
/// evaluations (the election does) must reconstruct the same binding.
pub fn vrf_input(instance: &InstanceId, seed: &[u8]) -> Vec<u8> {
    let mut w = Writer::new();
    instance.encode_into(&mut w);
    w.bytes(seed);
    w.finish()
}

/// What a party signs when it endorses a frozen completion set.
fn lock_digest(suite: &Suite, instance: &InstanceId, set_payload: &[u8]) -> Vec<u8> {
    use crate::wire::Encode;
    suite.hash("coin-lock", &[&instance.encode(), set_payload])
}

fn set_payload(set: &BTreeSet<PartyId>) -> Vec<u8> {
    let mut w = Writer::new();
    let items: Vec<PartyId> = set.iter().copied().collect();
    w.list(&items, |w, k| w.u16(*k));
    w.finish()
}

fn parse_set(buf: &[u8]) -> Option<BTreeSet<PartyId>> {
    let mut r = Reader::new(buf);
    let items = r.list(|r| r.u16()).ok()?;
    r.expect_end().ok()?;
    let set: BTreeSet<PartyId> = items.iter().copied().collect();
    (set.len() == items.len()).then_some(set)
}

fn commit_payload(h: &[u8], sigs: &[(PartyId, Vec<u8>)]) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(h);
    w.list(sigs, |w, (p, s)| {
        w.u16(*p);
        w.bytes(s);
    });
    w.finish()
}

fn parse_commit(buf: &[u8]) -> Option<(Vec<u8>, Vec<(PartyId, Vec<u8>)>)> {
    let mut r = Reader::new(buf);
    let h = r.bytes().ok()?;
    let sigs = r.list(|r| Ok((r.u16()?, r.bytes()?))).ok()?;
    r.expect_end().ok()?;
    Some((h, sigs))
}

fn candidate_payload(c: Option<&RndMax>) -> Vec<u8> {
    let mut w = Writer::new();
    match c {
        None => w.u8(0),
        Some(m) => {
            w.u8(1);
            m.encode_into(&mut w);
        }
    }
    w.finish()
}

fn parse_candidate(buf: &[u8]) -> Option<Option<RndMax>> {
    let mut r = Reader::new(buf);
    let tag = r.u8().ok()?;
    let out = match tag {
        0 => None,
        1 => Some(RndMax::decode_from(&mut r).ok()?),
        _ => return None,
    };
    r.expect_end().ok()?;
    Some(out)
}

/// The secret a dealer seals: its VRF evaluation and proof.
fn sealed_payload(rand: &[u8], proof: &[u8]) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(rand);
    w.bytes(proof);
    w.finish()
}

fn parse_sealed(buf: &[u8]) -> Option<(Vec<u8>, Vec<u8>)> {
    let mut r = Reader::new(buf);
    let rand = r.bytes().ok()?;
    let proof = r.bytes().ok()?;
    r.expect_end().ok()?;
    Some((rand, proof))
}

pub struct Coin {
    env: Arc<Env>,
    ks: Arc<KeyStore>,
    instance: InstanceId,
    me: PartyId,
    mode: SeedMode,
    goal: CoinGoal,
    /// Fresh randomness for this party's own dealing inside the coin.
    deal_seed: u64,
    // -- children ----------------------------------------------------------
    seeding: BTreeMap<PartyId, Seeding>,
    sh: BTreeMap<PartyId, AvssSh>,
    rec: BTreeMap<PartyId, AvssRec>,
    sh_buf: BTreeMap<PartyId, Vec<Envelope>>,
    rec_buf: BTreeMap<PartyId, Vec<Envelope>>,
    // -- protocol state ----------------------------------------------------
    seeds: BTreeMap<PartyId, Vec<u8>>,
    sh_out: BTreeMap<PartyId, ShOutput>,
    /// S̃: the completion set frozen at n−f, with its signed digest.
    snapshot: Option<(BTreeSet<PartyId>, Vec<u8>)>,
    sigma: BTreeMap<PartyId, Vec<u8>>,
    commit_sent: bool,
    /// Ŝ: the completion set adopted on the first valid certificate.
    committed: Option<BTreeSet<PartyId>>,
    recon: BTreeMap<PartyId, (Vec<u8>, Vec<u8>)>,
    candidate_sent: bool,
    /// Locks from parties whose sets outrun our own completions.
    pending_locks: BTreeMap<PartyId, BTreeSet<PartyId>>,
    seen_lock: BTreeSet<PartyId>,
    seen_confirm: BTreeSet<PartyId>,
    accepted_commit: bool,
    seen_commit: BTreeSet<PartyId>,
    /// Reconstruction indices requested but not yet activatable.
    pending_recreq: BTreeSet<PartyId>,
    seen_recreq: BTreeSet<PartyId>,
    seen_candidate: BTreeSet<PartyId>,
    /// Candidates naming a dealer whose seed we do not know yet.
    pending_candidates: Vec<(PartyId, RndMax)>,
    /// C: resolved, verified candidates by nominating sender.
    candidates: BTreeMap<PartyId, RndMax>,
    /// X: resolved ⊥ nominations.
    bot_count: usize,
    /// Deferred-output flag: the tally filled up while C was still empty,
    /// a case the quorum intersection argument rules out for real runs but
    /// the handler still defines (visible to probes for flagging).
    pub awaiting_candidate: bool,
    done: bool,
}

enum ChildKind {
    Seeding,
    Sh,
    Rec,
}

impl Coin {
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        mode: SeedMode,
        goal: CoinGoal,
        deal_seed: u64,
    ) -> Result<Self, CoinError> {
        // Both modes carry their own payload, so arity is by construction;
        // an empty genesis nonce is the one degenerate case to reject.
        if matches!(&mode, SeedMode::Genesis(nonce) if nonce.is_empty()) {
            return Err(CoinError::NonceArity);
        }
        let me = ks.party;
        Ok(Coin {
            env,
            ks,
            instance,
            me,
            mode,
            goal,
            deal_seed,
            seeding: BTreeMap::new(),
            sh: BTreeMap::new(),
            rec: BTreeMap::new(),
            sh_buf: BTreeMap::new(),
            rec_buf: BTreeMap::new(),
            seeds: BTreeMap::new(),
            sh_out: BTreeMap::new(),
            snapshot: None,
            sigma: BTreeMap::new(),
            commit_sent: false,
            committed: None,
            recon: BTreeMap::new(),
            candidate_sent: false,
            pending_locks: BTreeMap::new(),
            seen_lock: BTreeSet::new(),
            seen_confirm: BTreeSet::new(),
            accepted_commit: false,
            seen_commit: BTreeSet::new(),
            pending_recreq: BTreeSet::new(),
            seen_recreq: BTreeSet::new(),
            seen_candidate: BTreeSet::new(),
            pending_candidates: Vec::new(),
            candidates: BTreeMap::new(),
            bot_count: 0,
            awaiting_candidate: false,
            done: false,
        })
    }

    /// The set of sharings this party has seen complete (S).
    pub fn completions(&self) -> BTreeSet<PartyId> {
        self.sh_out.keys().copied().collect()
    }

    /// The frozen snapshot (S̃), once taken.
    pub fn snapshot_set(&self) -> Option<&BTreeSet<PartyId>> {
        self.snapshot.as_ref().map(|(s, _)| s)
    }

    /// The committed set (Ŝ), once adopted.
    pub fn committed_set(&self) -> Option<&BTreeSet<PartyId>> {
        self.committed.as_ref()
    }

    /// The j-th dealer's seed, once known.
    pub fn seed_of(&self, j: PartyId) -> Option<&[u8]> {
        self.seeds.get(&j).map(Vec::as_slice)
    }

    fn quorum(&self) -> usize {
        self.env.quorum()
    }

    fn seeding_instance(&self, j: PartyId) -> InstanceId {
        self.instance.child2(ns::COIN_SEEDING, j as u32)
    }

    fn avss_instance(&self, j: PartyId) -> InstanceId {
        self.instance.child2(ns::COIN_AVSS, j as u32)
    }

    /// Feed one envelope to a child and fold its emissions into `step`.
    fn step_child(&mut self, kind: ChildKind, j: PartyId, env: &Envelope, step: &mut Step) {
        let child_step = match kind {
            ChildKind::Seeding => match self.seeding.get_mut(&j) {
                Some(c) => c.on_envelope(env),
                None => return,
            },
            ChildKind::Sh => match self.sh.get_mut(&j) {
                Some(c) => c.on_envelope(env),
                None => return,
            },
            ChildKind::Rec => match self.rec.get_mut(&j) {
                Some(c) => c.on_envelope(env),
                None => return,
            },
        };
        step.out.extend(child_step.out);
        if let Some(out) = child_step.output {
            self.on_child_output(j, out, step);
        }
    }

    fn on_child_output(&mut self, j: PartyId, out: Out, step: &mut Step) {
        match out {
            Out::Seeded(seed) => self.on_seed(j, seed, step),
            Out::AvssShared(sh) => self.on_sharing_complete(j, sh, step),
            Out::AvssSecret(m) => self.on_reconstruction(j, &m, step),
            other => debug_assert!(false, "unexpected child output {other:?}"),
        }
    }

    /// seed_j became known: start the j-th sharing (dealing if it is ours),
    /// replay parked sharing traffic, and retry candidates naming j.
    fn on_seed(&mut self, j: PartyId, seed: Vec<u8>, step: &mut Step) {
        if self.seeds.contains_key(&j) {
            return;
        }
        self.seeds.insert(j, seed.clone());
        let inst = self.avss_instance(j);
        let secret = (j == self.me).then(|| {
            let (rand, proof) = vrf::eval(&self.env.suite, &self.ks.vrf, &vrf_input(&self.instance, &seed));
            sealed_payload(&rand, &proof)
        });
        let mut child = AvssSh::new(
            self.env.clone(),
            self.ks.clone(),
            inst,
            j,
            secret,
            CipherMode::RoXor,
            self.deal_seed ^ j as u64,
        )
        .expect("coin-internal sharing parameters are well-formed");
        let activation = child.on_activate();
        debug_assert!(activation.output.is_none());
        step.out.extend(activation.out);
        self.sh.insert(j, child);
        for env in self.sh_buf.remove(&j).unwrap_or_default() {
            self.step_child(ChildKind::Sh, j, &env, step);
        }
        self.retry_pending_candidates(step);
    }

    /// A sharing completed: grow S, freeze S̃ at the quorum, revisit locks
    /// and reconstruction requests that were waiting on S.
    fn on_sharing_complete(&mut self, j: PartyId, sh: ShOutput, step: &mut Step) {
        if self.sh_out.contains_key(&j) {
            return;
        }
        self.sh_out.insert(j, sh);
        if self.snapshot.is_none() && self.sh_out.len() == self.quorum() {
            let set = self.completions();
            let payload = set_payload(&set);
            let digest = lock_digest(&self.env.suite, &self.instance, &payload);
            self.snapshot = Some((set, digest));
            step.out.extend(multicast(self.env.n, self.me, &self.instance, Tag::Lock, payload));
        }
        // Locks whose sets we have now caught up with.
        let ready: Vec<PartyId> = self
            .pending_locks
            .iter()
            .filter(|(_, set)| set.iter().all(|k| self.sh_out.contains_key(k)))
            .map(|(p, _)| *p)
            .collect();
        for p in ready {
            let set = self.pending_locks.remove(&p).expect("listed above");
            self.endorse_lock(p, &set, step);
        }
        if self.pending_recreq.remove(&j) {
            self.activate_rec(j, step);
        }
    }

    fn endorse_lock(&mut self, requester: PartyId, set: &BTreeSet<PartyId>, step: &mut Step) {
        let digest = lock_digest(&self.env.suite, &self.instance, &set_payload(set));
        let endorsement = sig::sign(&self.env.suite, &self.ks.sig, &digest);
        step.out.extend(unicast(self.me, requester, &self.instance, Tag::Confirm, endorsement));
    }

    /// Start the j-th reconstruction, replaying parked traffic. Parks the
    /// index until the commitment gate has opened and our own sharing
    /// output for j exists.
    fn activate_rec(&mut self, j: PartyId, step: &mut Step) {
        if self.rec.contains_key(&j) {
            return;
        }
        if self.committed.is_none() || !self.sh_out.contains_key(&j) {
            self.pending_recreq.insert(j);
            return;
        }
        let input = self.sh_out[&j].clone();
        let mut child =
            AvssRec::new(self.env.clone(), self.avss_instance(j), self.me, input, CipherMode::RoXor);
        let activation = child.on_activate();
        debug_assert!(activation.output.is_none());
        step.out.extend(activation.out);
        self.rec.insert(j, child);
        for env in self.rec_buf.remove(&j).unwrap_or_default() {
            self.step_child(ChildKind::Rec, j, &env, step);
        }
    }

    /// A reconstruction yielded the dealer's sealed value.
    fn on_reconstruction(&mut self, k: PartyId, m: &[u8], step: &mut Step) {
        if self.recon.contains_key(&k) {
            return;
        }
        // A Byzantine dealer may have sealed garbage; record it as present
        // but unusable, so the candidate step can still conclude.
        let sealed = parse_sealed(m).unwrap_or_default();
        self.recon.insert(k, sealed);
        self.try_candidate(step);
    }

    /// Once every committed index is reconstructed, nominate the largest
    /// verified evaluation (or ⊥).
    fn try_candidate(&mut self, step: &mut Step) {
        if self.candidate_sent {
            return;
        }
        let Some(committed) = &self.committed else { return };
        if !committed.iter().all(|k| self.recon.contains_key(k)) {
            return;
        }
        self.candidate_sent = true;
        let mut best: Option<RndMax> = None;
        for k in committed {
            let (rand, proof) = &self.recon[k];
            let Some(seed) = self.seeds.get(k) else { continue };
            if !vrf::verify(
                &self.env.suite,
                self.env.registry.vrf_pk(*k),
                &vrf_input(&self.instance, seed),
                rand,
                proof,
            ) {
                continue;
            }
            if best.as_ref().is_none_or(|b| vrf::output_gt(rand, &b.rand)) {
                best = Some(RndMax { party: *k, rand: rand.clone(), proof: proof.clone() });
            }
        }
        step.out.extend(multicast(
            self.env.n,
            self.me,
            &self.instance,
            Tag::Candidate,
            candidate_payload(best.as_ref()),
        ));
    }

    /// Resolve a verified (or ⊥) nomination into the tally and output at
    /// the quorum.
    fn resolve_candidate(&mut self, sender: PartyId, c: Option<RndMax>, step: &mut Step) {
        match c {
            None => self.bot_count += 1,
            Some(m) => {
                self.candidates.insert(sender, m);
            }
        }
        self.try_output(step);
    }

    fn try_output(&mut self, step: &mut Step) {
        if self.done || self.candidates.len() + self.bot_count < self.quorum() {
            return;
        }
        let Some(best) = self.candidates.values().max_by(|a, b| {
            if a.rand == b.rand {
                std::cmp::Ordering::Equal
            } else if vrf::output_gt(&a.rand, &b.rand) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Less
            }
        }) else {
            // Tally full of ⊥: impossible when a core set exists, but the
            // handler still waits for a verifiable nomination.
            self.awaiting_candidate = true;
            return;
        };
        self.done = true;
        self.awaiting_candidate = false;
        step.output = Some(match self.goal {
            CoinGoal::Bit => Out::CoinBit(vrf::output_low_bit(&best.rand)),
            CoinGoal::Max => Out::CoinMax(best.clone()),
        });
    }

    /// Candidates parked on unknown seeds, retried after each new seed.
    fn retry_pending_candidates(&mut self, step: &mut Step) {
        let mut still_pending = Vec::new();
        for (sender, m) in std::mem::take(&mut self.pending_candidates) {
            match self.seeds.get(&m.party) {
                None => still_pending.push((sender, m)),
                Some(seed) => {
                    let ok = vrf::verify(
                        &self.env.suite,
                        self.env.registry.vrf_pk(m.party),
                        &vrf_input(&self.instance, seed),
                        &m.rand,
                        &m.proof,
                    );
                    if ok {
                        self.resolve_candidate(sender, Some(m), step);
                    }
                    // An invalid nomination proves its sender faulty and
                    // counts toward neither tally.
                }
            }
        }
        self.pending_candidates = still_pending;
    }

    // ---- own-instance message handlers ------------------------------------

    fn on_lock(&mut self, env: &Envelope, step: &mut Step) {
        if !self.seen_lock.insert(env.from) {
            return;
        }
        let Some(set) = parse_set(&env.payload) else { return };
        if set.is_empty() || set.iter().any(|k| *k == 0 || *k as usize > self.env.n) {
            return;
        }
        if set.iter().all(|k| self.sh_out.contains_key(k)) {
            self.endorse_lock(env.from, &set, step);
        } else {
            self.pending_locks.insert(env.from, set);
        }
    }

    fn on_confirm(&mut self, env: &Envelope, step: &mut Step) {
        if self.commit_sent || !self.seen_confirm.insert(env.from) {
            return;
        }
        let Some((_, digest)) = &self.snapshot else { return };
        if !sig::verify(&self.env.suite, self.env.registry.sig_vk(env.from), digest, &env.payload)
        {
            return;
        }
        self.sigma.insert(env.from, env.payload.clone());
        if self.sigma.len() < self.quorum() {
            return;
        }
        self.commit_sent = true;
        let cert: Vec<(PartyId, Vec<u8>)> = self.sigma.iter().map(|(p, s)| (*p, s.clone())).collect();
        step.out.extend(multicast(
            self.env.n,
            self.me,
            &self.instance,
            Tag::Commit,
            commit_payload(digest, &cert),
        ));
    }

    fn on_commit(&mut self, env: &Envelope, step: &mut Step) {
        if self.accepted_commit || !self.seen_commit.insert(env.from) {
            return;
        }
        let Some((h, sigs)) = parse_commit(&env.payload) else { return };
        let mut signers = BTreeSet::new();
        for (p, s) in &sigs {
            if *p >= 1
                && *p as usize <= self.env.n
                && !signers.contains(p)
                && sig::verify(&self.env.suite, self.env.registry.sig_vk(*p), &h, s)
            {
                signers.insert(*p);
            }
        }
        if signers.len() < self.quorum() {
            return;
        }
        self.accepted_commit = true;
        let committed = self.completions();
        self.committed = Some(committed.clone());
        for k in &committed {
            let mut w = Writer::new();
            w.u16(*k);
            step.out.extend(multicast(self.env.n, self.me, &self.instance, Tag::RecRequest, w.finish()));
        }
        // Requests that arrived before the gate opened.
        for k in std::mem::take(&mut self.pending_recreq) {
            self.activate_rec(k, step);
        }
        self.try_candidate(step);
    }

    fn on_recrequest(&mut self, env: &Envelope, step: &mut Step) {
        let k = {
            let mut r = Reader::new(&env.payload);
            let Ok(k) = r.u16() else { return };
            if r.expect_end().is_err() || k == 0 || k as usize > self.env.n {
                return;
            }
            k
        };
        if !self.seen_recreq.insert(k) {
            return;
        }
        self.activate_rec(k, step);
    }

    fn on_candidate(&mut self, env: &Envelope, step: &mut Step) {
        if !self.seen_candidate.insert(env.from) {
            return;
        }
        let Some(cand) = parse_candidate(&env.payload) else { return };
        match cand {
            None => self.resolve_candidate(env.from, None, step),
            Some(m) => {
                if m.party == 0 || m.party as usize > self.env.n {
                    return;
                }
                match self.seeds.get(&m.party) {
                    None => self.pending_candidates.push((env.from, m)),
                    Some(seed) => {
                        let ok = vrf::verify(
                            &self.env.suite,
                            self.env.registry.vrf_pk(m.party),
                            &vrf_input(&self.instance, seed),
                            &m.rand,
                            &m.proof,
                        );
                        if ok {
                            self.resolve_candidate(env.from, Some(m), step);
                        }
                    }
                }
            }
        }
    }
}

impl Reactor for Coin {
    fn on_activate(&mut self) -> Step {
        let mut step = Step::none();
        match self.mode.clone() {
            SeedMode::Genesis(nonce) => {
                for j in 1..=self.env.n as PartyId {
                    self.on_seed(j, nonce.clone(), &mut step);
                }
            }
            SeedMode::Grown => {
                let mut rng = ChaCha12Rng::seed_from_u64(self.deal_seed);
                for j in 1..=self.env.n as PartyId {
                    let mut child = Seeding::new(
                        self.env.clone(),
                        self.ks.clone(),
                        self.seeding_instance(j),
                        j,
                        rng.next_u64(),
                    );
                    let activation = child.on_activate();
                    debug_assert!(activation.output.is_none());
                    step.out.extend(activation.out);
                    self.seeding.insert(j, child);
                }
            }
        }
        step
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        let mut step = Step::none();
        if env.instance == self.instance {
            match env.tag {
                Tag::Lock => self.on_lock(env, &mut step),
                Tag::Confirm => self.on_confirm(env, &mut step),
                Tag::Commit => self.on_commit(env, &mut step),
                Tag::RecRequest => self.on_recrequest(env, &mut step),
                Tag::Candidate => self.on_candidate(env, &mut step),
                _ => {}
            }
            return step;
        }
        // Child traffic: the two segments after our prefix name the
        // namespace and the dealer index.
        let depth = self.instance.0.len();
        let (Some(space), Some(j)) = (env.instance.seg_after(depth), env.instance.seg_after(depth + 1))
        else {
            return step;
        };
        if !env.instance.starts_with(&self.instance) || j == 0 || j as usize > self.env.n {
            return step;
        }
        let j = j as PartyId;
        match space {
            ns::COIN_SEEDING => self.step_child(ChildKind::Seeding, j, env, &mut step),
            ns::COIN_AVSS => match env.tag {
                Tag::KeyRec | Tag::Key => {
                    if self.rec.contains_key(&j) {
                        self.step_child(ChildKind::Rec, j, env, &mut step);
                    } else {
                        self.rec_buf.entry(j).or_default().push(env.clone());
                    }
                }
                _ => {
                    if self.sh.contains_key(&j) {
                        self.step_child(ChildKind::Sh, j, env, &mut step);
                    } else {
                        self.sh_buf.entry(j).or_default().push(env.clone());
                    }
                }
            },
            _ => {}
        }
        step
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
