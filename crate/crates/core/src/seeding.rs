//! Led reliable seeding: one designated leader turns everybody's secret
//! contributions into a single unpredictable seed that all honest parties
//! output in common — or, if the leader is faulty, possibly no seed at all,
//! but never two different ones.
//!
//! The run has a committing phase and a revealing phase. Every party deals a
//! fresh verifiable sharing of a random secret to the leader. The leader
//! aggregates `2f+1` of them (so at least `f+1` honest secrets are folded
//! in) and multicasts the aggregate (`LockAggPvss`). Parties verify it —
//! including that its weight vector names exactly `2f+1` distinct unit
//! contributions — and return a signature over its digest
//! (`ConfirmAggPvss`). A quorum of `2f+1` signatures forms the commitment
//! certificate (`CommitAggPvss`): only on seeing it does a party decrypt and
//! release its share (`SeedShare`), so the aggregate — hence the seed — is
//! fixed before any honest share leaves its owner. The leader reconstructs
//! from `2f+1` verified shares and multicasts `Seed` carrying the digest,
//! the certificate, the seed point, and the very shares that produced it,
//! so any party holding the aggregate re-derives the seed instead of
//! trusting the leader.
//!
//! Output goes through an echo/ready exchange (`SeedEcho` on a verified
//! `Seed`; `SeedReady` on `2f+1` matching echoes or `f+1` matching readies;
//! output on `2f+1` matching readies), which carries parties that never saw
//! a usable `Seed` — or even the aggregate — to the same output as everyone
//! else.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::crypto::keys::{Env, KeyStore, PartyId};
use crate::crypto::sig;
use crate::crypto::Suite;
use crate::pvss::{self, PvssScript, PvssShare};
use crate::simnet::{multicast, unicast, Envelope, InstanceId, Out, Reactor, Step, Tag};
use crate::wire::{Reader, Writer};

/// Message a participant signs to endorse an aggregate: bound to the
/// instance so certificates cannot travel between seeding runs.
pub fn confirm_msg(suite: &Suite, instance: &InstanceId, h: &[u8]) -> Vec<u8> {
    use crate::wire::Encode;
    suite.hash("seed-confirm", &[&instance.encode(), h])
}

pub fn commit_payload(h: &[u8], sigs: &[(PartyId, Vec<u8>)]) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(h);
    w.list(sigs, |w, (p, s)| {
        w.u16(*p);
        w.bytes(s);
    });
    w.finish()
}

pub fn parse_commit(buf: &[u8]) -> Option<(Vec<u8>, Vec<(PartyId, Vec<u8>)>)> {
    let mut r = Reader::new(buf);
    let h = r.bytes().ok()?;
    let sigs = r.list(|r| Ok((r.u16()?, r.bytes()?))).ok()?;
    r.expect_end().ok()?;
    Some((h, sigs))
}

pub fn seed_payload(
    suite: &Suite,
    h: &[u8],
    sigs: &[(PartyId, Vec<u8>)],
    seed: &[u8],
    witness: &[PvssShare],
) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(h);
    w.list(sigs, |w, (p, s)| {
        w.u16(*p);
        w.bytes(s);
    });
    w.bytes(seed);
    w.list(witness, |w, sh| sh.encode_into_with(suite, w));
    w.finish()
}

type SeedMsg = (Vec<u8>, Vec<(PartyId, Vec<u8>)>, Vec<u8>, Vec<PvssShare>);

pub fn parse_seed(suite: &Suite, buf: &[u8]) -> Option<SeedMsg> {
    let mut r = Reader::new(buf);
    let h = r.bytes().ok()?;
    let sigs = r.list(|r| Ok((r.u16()?, r.bytes()?))).ok()?;
    let seed = r.bytes().ok()?;
    let witness = r.list(|r| PvssShare::decode_from_with(suite, r)).ok()?;
    r.expect_end().ok()?;
    Some((h, sigs, seed, witness))
}

/// Leader-only collection state.
struct Lead {
    scripts: BTreeMap<PartyId, PvssScript>,
    agg: Option<(PvssScript, Vec<u8>)>,
    sigs: BTreeMap<PartyId, Vec<u8>>,
    cert: Option<Vec<(PartyId, Vec<u8>)>>,
    shares: BTreeMap<PartyId, PvssShare>,
    seeded: bool,
}

pub struct Seeding {
    env: Arc<Env>,
    ks: Arc<KeyStore>,
    instance: InstanceId,
    me: PartyId,
    leader: PartyId,
    /// Dealing randomness; must be fresh per instance.
    seed: u64,
    lead: Option<Lead>,
    /// Aggregate adopted from the leader's lock, with its digest.
    adopted: Option<(PvssScript, Vec<u8>)>,
    seen_lock: bool,
    revealed: bool,
    echoed: bool,
    ready_sent: bool,
    done: bool,
    /// Commit/Seed that raced ahead of the lock, parked until it lands.
    pending_commit: Option<Vec<u8>>,
    pending_seed: Option<Vec<u8>>,
    echoes: BTreeMap<Vec<u8>, BTreeSet<PartyId>>,
    readies: BTreeMap<Vec<u8>, BTreeSet<PartyId>>,
    seen_echo: BTreeSet<PartyId>,
    seen_ready: BTreeSet<PartyId>,
}

impl Seeding {
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        leader: PartyId,
        seed: u64,
    ) -> Self {
        let me = ks.party;
        Seeding {
            lead: (me == leader).then(|| Lead {
                scripts: BTreeMap::new(),
                agg: None,
                sigs: BTreeMap::new(),
                cert: None,
                shares: BTreeMap::new(),
                seeded: false,
            }),
            env,
            ks,
            instance,
            me,
            leader,
            seed,
            adopted: None,
            seen_lock: false,
            revealed: false,
            echoed: false,
            ready_sent: false,
            done: false,
            pending_commit: None,
            pending_seed: None,
            echoes: BTreeMap::new(),
            readies: BTreeMap::new(),
            seen_echo: BTreeSet::new(),
            seen_ready: BTreeSet::new(),
        }
    }

    /// Contribution threshold: the sharing threshold itself.
    fn t(&self) -> usize {
        2 * self.env.f + 1
    }

    /// Count distinct in-range parties whose signature over `msg` verifies.
    fn valid_sigs(&self, msg: &[u8], sigs: &[(PartyId, Vec<u8>)]) -> usize {
        let mut ok = BTreeSet::new();
        for (p, s) in sigs {
            if *p >= 1
                && *p as usize <= self.env.n
                && !ok.contains(p)
                && sig::verify(&self.env.suite, self.env.registry.sig_vk(*p), msg, s)
            {
                ok.insert(*p);
            }
        }
        ok.len()
    }

    /// Exactly `2f+1` unit contributions and nothing else.
    fn quorum_weights(&self, w: &[u32]) -> bool {
        w.iter().all(|&x| x <= 1) && w.iter().filter(|&&x| x == 1).count() == self.t()
    }

    // ---- leader side -----------------------------------------------------

    fn on_script(&mut self, env: &Envelope) -> Step {
        let t = self.t();
        let Some(lead) = self.lead.as_mut() else { return Step::none() };
        if lead.agg.is_some() || lead.scripts.contains_key(&env.from) {
            return Step::none();
        }
        let Ok(script) = PvssScript::decode_with(&self.env.suite, &env.payload) else {
            return Step::none();
        };
        if !pvss::vrfy_script(&self.env, &script) {
            return Step::none();
        }
        // One fresh unit-weight contribution, attested by its sender.
        let unit = script.total_weight() == 1 && script.weights()[env.from as usize - 1] == 1;
        if !unit {
            return Step::none();
        }
        lead.scripts.insert(env.from, script);
        if lead.scripts.len() < t {
            return Step::none();
        }
        let mut it = lead.scripts.values();
        let first = it.next().expect("nonempty").clone();
        let agg = it
            .try_fold(first, |acc, s| pvss::agg_scripts(&self.env, &acc, s))
            .expect("verified contributions aggregate");
        let h = agg.digest(&self.env.suite);
        let payload = agg.encode_with(&self.env.suite);
        lead.agg = Some((agg, h));
        Step::send(multicast(self.env.n, self.me, &self.instance, Tag::LockAggPvss, payload))
    }

    fn on_confirm(&mut self, env: &Envelope) -> Step {
        let t = self.t();
        let msg = match &self.lead {
            Some(Lead { agg: Some((_, h)), cert: None, .. }) => {
                confirm_msg(&self.env.suite, &self.instance, h)
            }
            _ => return Step::none(),
        };
        if !sig::verify(&self.env.suite, self.env.registry.sig_vk(env.from), &msg, &env.payload) {
            return Step::none();
        }
        let lead = self.lead.as_mut().expect("leader state");
        lead.sigs.entry(env.from).or_insert_with(|| env.payload.clone());
        if lead.sigs.len() < t {
            return Step::none();
        }
        let cert: Vec<(PartyId, Vec<u8>)> =
            lead.sigs.iter().map(|(p, s)| (*p, s.clone())).collect();
        lead.cert = Some(cert.clone());
        let h = lead.agg.as_ref().expect("aggregate before confirms").1.clone();
        Step::send(multicast(
            self.env.n,
            self.me,
            &self.instance,
            Tag::CommitAggPvss,
            commit_payload(&h, &cert),
        ))
    }

    fn on_share(&mut self, env: &Envelope) -> Step {
        let t = self.t();
        let Some(lead) = self.lead.as_mut() else { return Step::none() };
        let Some((agg, _)) = &lead.agg else { return Step::none() };
        if lead.seeded || lead.shares.contains_key(&env.from) {
            return Step::none();
        }
        let Ok(share) = PvssShare::decode_with(&self.env.suite, &env.payload) else {
            return Step::none();
        };
        if share.party != env.from || !pvss::vrfy_share(&self.env, env.from, &share, agg) {
            return Step::none();
        }
        lead.shares.insert(env.from, share);
        if lead.shares.len() < t {
            return Step::none();
        }
        lead.seeded = true;
        let witness: Vec<(PartyId, PvssShare)> =
            lead.shares.iter().map(|(p, s)| (*p, s.clone())).collect();
        let secret =
            pvss::agg_shares(&self.env, agg, &witness).expect("quorum of verified shares");
        let seed = self.env.suite.group.encode(&secret.point);
        let h = lead.agg.as_ref().expect("aggregate before shares").1.clone();
        let cert = lead.cert.clone().expect("certificate before shares");
        let shares: Vec<PvssShare> = witness.into_iter().map(|(_, s)| s).collect();
        Step::send(multicast(
            self.env.n,
            self.me,
            &self.instance,
            Tag::Seed,
            seed_payload(&self.env.suite, &h, &cert, &seed, &shares),
        ))
    }

    // ---- participant side ------------------------------------------------

    fn on_lock(&mut self, env: &Envelope) -> Step {
        if env.from != self.leader || self.seen_lock {
            return Step::none();
        }
        self.seen_lock = true;
        let Ok(script) = PvssScript::decode_with(&self.env.suite, &env.payload) else {
            return Step::none();
        };
        if !self.quorum_weights(script.weights()) || !pvss::vrfy_script(&self.env, &script) {
            return Step::none();
        }
        let h = script.digest(&self.env.suite);
        let endorsement = sig::sign(
            &self.env.suite,
            &self.ks.sig,
            &confirm_msg(&self.env.suite, &self.instance, &h),
        );
        self.adopted = Some((script, h));
        let mut step = Step::send(unicast(
            self.me,
            self.leader,
            &self.instance,
            Tag::ConfirmAggPvss,
            endorsement,
        ));
        // Judge anything that raced ahead of the lock.
        if let Some(buf) = self.pending_commit.take() {
            step.merge(self.try_commit(&buf));
        }
        if let Some(buf) = self.pending_seed.take() {
            step.merge(self.try_seed(&buf));
        }
        step
    }

    /// Release the share iff the certificate pins the adopted aggregate.
    fn try_commit(&mut self, payload: &[u8]) -> Step {
        if self.revealed {
            return Step::none();
        }
        let Some((script, h)) = &self.adopted else {
            if self.pending_commit.is_none() {
                self.pending_commit = Some(payload.to_vec());
            }
            return Step::none();
        };
        let Some((ch, sigs)) = parse_commit(payload) else { return Step::none() };
        if ch != *h
            || self.valid_sigs(&confirm_msg(&self.env.suite, &self.instance, h), &sigs) < self.t()
        {
            return Step::none();
        }
        let share = pvss::get_share(&self.env, &self.ks, script);
        self.revealed = true;
        Step::send(unicast(
            self.me,
            self.leader,
            &self.instance,
            Tag::SeedShare,
            share.encode_with(&self.env.suite),
        ))
    }

    /// Echo the seed iff it is certified and re-derivable from its witness.
    fn try_seed(&mut self, payload: &[u8]) -> Step {
        if self.echoed {
            return Step::none();
        }
        let Some((script, h)) = &self.adopted else {
            if self.pending_seed.is_none() {
                self.pending_seed = Some(payload.to_vec());
            }
            return Step::none();
        };
        let Some((sh, sigs, seed, witness)) = parse_seed(&self.env.suite, payload) else {
            return Step::none();
        };
        if sh != *h
            || self.valid_sigs(&confirm_msg(&self.env.suite, &self.instance, h), &sigs) < self.t()
        {
            return Step::none();
        }
        let Ok(point) = self.env.suite.group.decode(&seed) else { return Step::none() };
        let pairs: Vec<(PartyId, PvssShare)> =
            witness.into_iter().map(|s| (s.party, s)).collect();
        if !pvss::vrfy_secret(&self.env, &point, script, &pairs) {
            return Step::none();
        }
        self.echoed = true;
        Step::send(multicast(self.env.n, self.me, &self.instance, Tag::SeedEcho, seed))
    }

    /// Re-evaluate ready and output conditions after any tally change.
    fn progress(&mut self) -> Step {
        let mut step = Step::none();
        if !self.ready_sent {
            let by_echo = self
                .echoes
                .iter()
                .find(|(_, s)| s.len() >= self.t())
                .map(|(b, _)| b.clone());
            let by_ready = self
                .readies
                .iter()
                .find(|(_, s)| s.len() >= self.env.f + 1)
                .map(|(b, _)| b.clone());
            if let Some(b) = by_echo.or(by_ready) {
                self.ready_sent = true;
                step.out.extend(multicast(self.env.n, self.me, &self.instance, Tag::SeedReady, b));
            }
        }
        if !self.done {
            let won = self
                .readies
                .iter()
                .find(|(_, s)| s.len() >= self.t())
                .map(|(b, _)| b.clone());
            if let Some(b) = won {
                self.done = true;
                step.output = Some(Out::Seeded(b));
            }
        }
        step
    }
}

impl Reactor for Seeding {
    fn on_activate(&mut self) -> Step {
        let script = pvss::deal(&self.env, &self.ks, None, self.seed);
        Step::send(unicast(
            self.me,
            self.leader,
            &self.instance,
            Tag::PvssScript,
            script.encode_with(&self.env.suite),
        ))
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        debug_assert_eq!(env.instance, self.instance);
        match env.tag {
            Tag::PvssScript => self.on_script(env),
            Tag::ConfirmAggPvss => self.on_confirm(env),
            Tag::SeedShare => self.on_share(env),
            Tag::LockAggPvss => self.on_lock(env),
            Tag::CommitAggPvss => {
                if env.from != self.leader {
                    return Step::none();
                }
                self.try_commit(&env.payload)
            }
            Tag::Seed => {
                if env.from != self.leader {
                    return Step::none();
                }
                self.try_seed(&env.payload)
            }
            Tag::SeedEcho => {
                if !self.seen_echo.insert(env.from) {
                    return Step::none();
                }
                self.echoes.entry(env.payload.clone()).or_default().insert(env.from);
                self.progress()
            }
            Tag::SeedReady => {
                if !self.seen_ready.insert(env.from) {
                    return Step::none();
                }
                self.readies.entry(env.payload.clone()).or_default().insert(env.from);
                self.progress()
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
    use crate::byz::{SeedEquivLeader, SilentParty};
    use crate::crypto::keys::gen_parties;
    use crate::simnet::run::{run, run_with_probe, NetConfig};
    use crate::simnet::sched::SchedulerSpec;

    fn setup(q: u64) -> (Arc<Env>, Vec<Arc<KeyStore>>) {
        let suite = Arc::new(Suite::mock_with_q(q));
        let (keys, registry) = gen_parties(&suite, 4, b"seeding test");
        let env = Env::new(suite, Arc::new(registry), 1);
        (env, keys.into_iter().map(Arc::new).collect())
    }

    fn honest_net(
        env: &Arc<Env>,
        keys: &[Arc<KeyStore>],
        leader: PartyId,
        seed0: u64,
    ) -> Vec<Box<dyn Reactor>> {
        keys.iter()
            .map(|ks| {
                Box::new(Seeding::new(
                    env.clone(),
                    ks.clone(),
                    InstanceId::root(7),
                    leader,
                    seed0 + ks.party as u64,
                )) as Box<dyn Reactor>
            })
            .collect()
    }

    fn seeds_of(report: &crate::simnet::run::RunReport) -> BTreeSet<Vec<u8>> {
        report
            .outputs
            .values()
            .map(|(o, _)| match o {
                Out::Seeded(b) => b.clone(),
                other => panic!("unexpected output {other:?}"),
            })
            .collect()
    }

    #[test]
    fn honest_run_seeds_everyone_with_exact_budget() {
        let (env, keys) = setup(97);
        let mut rs = honest_net(&env, &keys, 2, 100);
        let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Fifo, 0));
        assert!(report.stall.is_none());
        let seeds = seeds_of(&report);
        assert_eq!(report.outputs.len(), 4);
        assert_eq!(seeds.len(), 1);
        // Script + Lock + Confirm + Commit + Share + Seed are n each;
        // SeedEcho and SeedReady are n² each.
        assert_eq!(report.metrics.total.msgs, 6 * 4 + 2 * 16);
        // Script → Lock → Confirm → Commit → Share → Seed → Echo → Ready.
        assert_eq!(report.metrics.rounds, 8);
    }

    #[test]
    fn every_schedule_agrees_with_the_same_message_budget() {
        let (env, keys) = setup(97);
        for seed in 0..60 {
            let mut rs = honest_net(&env, &keys, 1, 300);
            let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Random, seed));
            assert!(report.all_output(4, &Default::default()), "seed {seed}");
            // Which 2f+1 scripts get locked — hence the seed value — depends
            // on arrival order, but agreement and the message complement
            // never do.
            assert_eq!(seeds_of(&report).len(), 1, "seed {seed}");
            assert_eq!(report.metrics.total.msgs, 6 * 4 + 2 * 16);
        }
    }

    /// Thresholds, driven by hand: Lock on the 3rd script, Commit on the 3rd
    /// endorsement, Seed on the 3rd share, output on the 3rd ready.
    #[test]
    fn leader_thresholds_fire_exactly_at_quorum() {
        let (env, keys) = setup(97);
        let inst = InstanceId::root(7);
        let mut leader = Seeding::new(env.clone(), keys[0].clone(), inst.clone(), 1, 50);
        let mk = |from: PartyId, tag: Tag, payload: Vec<u8>| Envelope {
            from,
            to: 1,
            instance: inst.clone(),
            tag,
            payload,
        };

        let scripts: Vec<PvssScript> =
            keys.iter().map(|ks| pvss::deal(&env, ks, None, 60 + ks.party as u64)).collect();
        for (i, p) in [2u16, 3].iter().enumerate() {
            let s = scripts[*p as usize - 1].encode_with(&env.suite);
            let step = leader.on_envelope(&mk(*p, Tag::PvssScript, s));
            assert!(step.out.is_empty(), "script {i}");
        }
        let s = scripts[3].encode_with(&env.suite);
        let step = leader.on_envelope(&mk(4, Tag::PvssScript, s));
        assert_eq!(step.out.len(), 4);
        assert!(step.out.iter().all(|e| e.tag == Tag::LockAggPvss));

        let agg = PvssScript::decode_with(&env.suite, &step.out[0].payload).unwrap();
        assert_eq!(agg.weights(), &[0, 1, 1, 1]);
        let h = agg.digest(&env.suite);
        let msg = confirm_msg(&env.suite, &inst, &h);

        // The leader's own lock comes back to it like anyone else's.
        let lock = step.out[0].clone();
        let step = leader.on_envelope(&lock);
        assert_eq!(step.out.len(), 1);
        assert_eq!(step.out[0].tag, Tag::ConfirmAggPvss);
        let own_confirm = step.out[0].clone();

        assert!(leader.on_envelope(&own_confirm).out.is_empty());
        let c2 = sig::sign(&env.suite, &keys[1].sig, &msg);
        assert!(leader.on_envelope(&mk(2, Tag::ConfirmAggPvss, c2)).out.is_empty());
        // A bad signature never counts.
        assert!(leader.on_envelope(&mk(3, Tag::ConfirmAggPvss, vec![0; 8])).out.is_empty());
        let c4 = sig::sign(&env.suite, &keys[3].sig, &msg);
        let step = leader.on_envelope(&mk(4, Tag::ConfirmAggPvss, c4));
        assert_eq!(step.out.len(), 4);
        assert!(step.out.iter().all(|e| e.tag == Tag::CommitAggPvss));

        // Commit loops back; the leader releases its own share to itself.
        let commit = step.out[0].clone();
        let step = leader.on_envelope(&commit);
        assert_eq!(step.out.len(), 1);
        assert_eq!(step.out[0].tag, Tag::SeedShare);
        let own_share = step.out[0].clone();

        assert!(leader.on_envelope(&own_share).out.is_empty());
        let sh2 = pvss::get_share(&env, &keys[1], &agg);
        assert!(leader
            .on_envelope(&mk(2, Tag::SeedShare, sh2.encode_with(&env.suite)))
            .out
            .is_empty());
        let sh3 = pvss::get_share(&env, &keys[2], &agg);
        let step = leader.on_envelope(&mk(3, Tag::SeedShare, sh3.encode_with(&env.suite)));
        assert_eq!(step.out.len(), 4);
        assert!(step.out.iter().all(|e| e.tag == Tag::Seed));

        // Seed loops back: echo; echoes and readies drive the output.
        let seed_env = step.out[0].clone();
        let step = leader.on_envelope(&seed_env);
        assert!(step.out.iter().all(|e| e.tag == Tag::SeedEcho));
        let seed = step.out[0].payload.clone();

        assert!(leader.on_envelope(&mk(1, Tag::SeedEcho, seed.clone())).out.is_empty());
        assert!(leader.on_envelope(&mk(2, Tag::SeedEcho, seed.clone())).out.is_empty());
        let step = leader.on_envelope(&mk(3, Tag::SeedEcho, seed.clone()));
        assert!(step.out.iter().all(|e| e.tag == Tag::SeedReady));
        assert!(leader.on_envelope(&mk(1, Tag::SeedReady, seed.clone())).output.is_none());
        assert!(leader.on_envelope(&mk(2, Tag::SeedReady, seed.clone())).output.is_none());
        let step = leader.on_envelope(&mk(3, Tag::SeedReady, seed.clone()));
        assert_eq!(step.output, Some(Out::Seeded(seed)));
    }

    /// A certificate that races ahead of the lock is parked, not dropped.
    #[test]
    fn commit_before_lock_is_buffered() {
        let (env, keys) = setup(97);
        let inst = InstanceId::root(7);
        let mut p = Seeding::new(env.clone(), keys[2].clone(), inst.clone(), 1, 80);

        let scripts: Vec<PvssScript> =
            keys.iter().map(|ks| pvss::deal(&env, ks, None, 90 + ks.party as u64)).collect();
        let agg = pvss::agg_scripts(
            &env,
            &pvss::agg_scripts(&env, &scripts[0], &scripts[1]).unwrap(),
            &scripts[2],
        )
        .unwrap();
        let h = agg.digest(&env.suite);
        let msg = confirm_msg(&env.suite, &inst, &h);
        let cert: Vec<(PartyId, Vec<u8>)> =
            (1..=3u16).map(|j| (j, sig::sign(&env.suite, &keys[j as usize - 1].sig, &msg))).collect();

        let commit = Envelope {
            from: 1,
            to: 3,
            instance: inst.clone(),
            tag: Tag::CommitAggPvss,
            payload: commit_payload(&h, &cert),
        };
        assert!(p.on_envelope(&commit).out.is_empty());

        let lock = Envelope {
            from: 1,
            to: 3,
            instance: inst,
            tag: Tag::LockAggPvss,
            payload: agg.encode_with(&env.suite),
        };
        let step = p.on_envelope(&lock);
        let tags: Vec<Tag> = step.out.iter().map(|e| e.tag).collect();
        assert_eq!(tags, vec![Tag::ConfirmAggPvss, Tag::SeedShare]);
    }

    /// Locks that fail verification draw no endorsement: wrong contribution
    /// count, inflated weight, or garbled bytes.
    #[test]
    fn invalid_locks_are_ignored() {
        let (env, keys) = setup(97);
        let inst = InstanceId::root(7);
        let scripts: Vec<PvssScript> =
            keys.iter().map(|ks| pvss::deal(&env, ks, None, 70 + ks.party as u64)).collect();
        let pair = pvss::agg_scripts(&env, &scripts[0], &scripts[1]).unwrap();
        let quad = pvss::agg_scripts(
            &env,
            &pvss::agg_scripts(&env, &pair, &scripts[2]).unwrap(),
            &scripts[3],
        )
        .unwrap();
        let dup = pvss::agg_scripts(
            &env,
            &pvss::agg_scripts(&env, &scripts[0], &scripts[1]).unwrap(),
            &pvss::deal(&env, &keys[0], None, 99),
        )
        .unwrap();
        assert_eq!(dup.weights(), &[2, 1, 0, 0]);

        for bad in [pair.encode_with(&env.suite), quad.encode_with(&env.suite), dup.encode_with(&env.suite), vec![1, 2, 3]] {
            let mut p = Seeding::new(env.clone(), keys[1].clone(), inst.clone(), 1, 81);
            let lock =
                Envelope { from: 1, to: 2, instance: inst.clone(), tag: Tag::LockAggPvss, payload: bad };
            assert!(p.on_envelope(&lock).out.is_empty());
            assert!(p.adopted.is_none());
        }
    }

    /// No honest party releases its share before some valid certificate
    /// exists: watched over full runs by a delivery probe.
    #[test]
    fn shares_release_only_after_commitment() {
        let (env, keys) = setup(97);
        for seed in 0..40 {
            let mut rs = honest_net(&env, &keys, 3, 500);
            let mut commit_seen = false;
            let mut violations = 0u32;
            let report = run_with_probe(
                &mut rs,
                &NetConfig::new(SchedulerSpec::Random, seed),
                &mut |ctx| {
                    match ctx.delivered.tag {
                        Tag::CommitAggPvss => commit_seen = true,
                        Tag::SeedShare if !commit_seen => violations += 1,
                        _ => {}
                    }
                },
            );
            assert_eq!(violations, 0, "seed {seed}");
            assert_eq!(report.outputs.len(), 4);
        }
    }

    /// The seed that comes out is the one the counting oracle pins from the
    /// committed aggregate, and holding only f shares leaves it open.
    #[test]
    fn output_seed_matches_the_sharing_and_stays_hidden_from_f_views() {
        let (env, keys) = setup(31);
        let mut rs = honest_net(&env, &keys, 1, 700);
        let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Fifo, 0));
        let seeds = seeds_of(&report);
        assert_eq!(seeds.len(), 1);
        let seed = seeds.into_iter().next().unwrap();

        let adopted = rs[1]
            .as_any()
            .downcast_ref::<Seeding>()
            .unwrap()
            .adopted
            .clone()
            .expect("party 2 adopted the aggregate");
        let (agg, _) = adopted;

        // The exact evaluation each party's released share reveals.
        let field = &env.suite.field;
        let eval_of = |j: u16| {
            let sh = pvss::get_share(&env, &keys[j as usize - 1], &agg);
            (j as u64, env.suite.group.mock_dlog_g2(field, &sh.point).to_u64())
        };
        let q = 31u64;
        let counts = |evals: &[(u64, u64)]| {
            let mut per_secret = vec![0u64; q as usize];
            for c0 in 0..q {
                for c1 in 0..q {
                    for c2 in 0..q {
                        if evals.iter().all(|&(x, y)| (c0 + c1 * x + c2 * x * x) % q == y) {
                            per_secret[c0 as usize] += 1;
                        }
                    }
                }
            }
            per_secret
        };
        // f = 1 share (say a corrupt party 4's own): every candidate seed is
        // equally consistent.
        let open = counts(&[eval_of(4)]);
        assert!(open.iter().all(|&c| c == open[0] && c > 0));
        // A full quorum of 2f+1 pins exactly one value — the output seed.
        let pinned = counts(&[eval_of(4), eval_of(1), eval_of(2)]);
        assert_eq!(pinned.iter().sum::<u64>(), 1);
        let s = pinned.iter().position(|&c| c == 1).unwrap() as u64;
        let point = env.suite.group.exp(env.suite.group.g2(), &field.from_u64(s));
        assert_eq!(env.suite.group.encode(&point), seed);
    }

    #[test]
    fn equivocating_leader_cannot_split_honest_seeds() {
        let (env, keys) = setup(97);
        for amplify in [false, true] {
            for seed in 0..150 {
                let mut rs: Vec<Box<dyn Reactor>> =
                    vec![Box::new(SeedEquivLeader::new(env.clone(), keys[0].clone(), InstanceId::root(7), amplify))];
                for ks in &keys[1..] {
                    rs.push(Box::new(Seeding::new(
                        env.clone(),
                        ks.clone(),
                        InstanceId::root(7),
                        1,
                        900 + ks.party as u64,
                    )));
                }
                let mut cfg = NetConfig::new(SchedulerSpec::Random, seed);
                cfg.corrupt = [1].into();
                let report = run(&mut rs, &cfg);
                let seeds = seeds_of(&report);
                assert!(seeds.len() <= 1, "split at seed {seed} amplify {amplify}");
                // Totality at quiescence: one honest output means all three.
                if !report.outputs.is_empty() {
                    assert_eq!(report.outputs.len(), 3, "partial output at seed {seed}");
                }
            }
        }
    }

    /// Without the leader nothing happens — and nothing breaks.
    #[test]
    fn crashed_leader_means_no_output_and_no_stall() {
        let (env, keys) = setup(97);
        let mut rs: Vec<Box<dyn Reactor>> = vec![Box::new(SilentParty)];
        for ks in &keys[1..] {
            rs.push(Box::new(Seeding::new(
                env.clone(),
                ks.clone(),
                InstanceId::root(7),
                1,
                40 + ks.party as u64,
            )));
        }
        let mut cfg = NetConfig::new(SchedulerSpec::Random, 5);
        cfg.corrupt = [1].into();
        let report = run(&mut rs, &cfg);
        assert!(report.outputs.is_empty());
        assert!(report.stall.is_none());
    }
}
