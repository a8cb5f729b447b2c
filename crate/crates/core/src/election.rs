//! Leader election with perfect agreement: every honest party ends on the
//! same index in [1, n], and with constant probability that index was
//! uniform and unpredictable before the protocol began.
//!
//! The coin variant underneath already surfaces, at each party, the largest
//! verified random evaluation it resolved — but different parties may
//! resolve different winners. Three moves close that gap:
//!
//! 1. *Commit.* Each party reliably broadcasts its speculative winner
//!    (owner, evaluation, proof), so it cannot show different winners to
//!    different peers. Incoming broadcasts are verified against the
//!    owner's seed (waiting for the seed if necessary) and collected into
//!    a growing set G.
//! 2. *Vote.* At the instant G reaches n−f entries, the party checks
//!    whether one evaluation is simultaneously the majority (at least f+1
//!    of the entries) and the largest in G. If so it snapshots G, sends
//!    it to everyone as a `Vote`, and enters binary agreement with 1;
//!    otherwise with 0. At most one evaluation can ever satisfy the
//!    predicate — majorities in two quorums must share an honest
//!    broadcaster — which is what makes the final step safe.
//! 3. *Decide.* If agreement lands on 1, some honest party voted, so a
//!    satisfying snapshot exists: each party waits for any `Vote` whose
//!    n−f entries all sit inside its own (still growing) G and contain a
//!    majority-and-largest evaluation r*, then outputs (r* mod n) + 1.
//!    If agreement lands on 0, everyone falls back to index 1.
//!
//! Children — the coin variant, n reliable broadcasts, and one binary
//! agreement — are nested instances routed by namespace, with the usual
//! park-and-replay for traffic that arrives before its child exists.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigUint;

use crate::aba::{Aba, CoinSource};
use crate::coin::{vrf_input, Coin, CoinGoal, RndMax, SeedMode};
use crate::crypto::keys::{Env, KeyStore, PartyId};
use crate::crypto::vrf;
use crate::rbc::Rbc;
use crate::simnet::{multicast, ns, Envelope, InstanceId, Out, Reactor, Step, Tag};
use crate::wire::{Decode, Encode, Reader, Writer};

/// One verified broadcast in G: which broadcast carried it, whose
/// evaluation it is, and the evaluation with its proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GEntry {
    pub broadcaster: PartyId,
    pub owner: PartyId,
    pub rand: Vec<u8>,
    pub proof: Vec<u8>,
}

impl GEntry {
    fn matches(&self, other: &GEntry) -> bool {
        self.owner == other.owner && self.rand == other.rand
    }
}

pub fn vote_payload(entries: &[GEntry]) -> Vec<u8> {
    let mut w = Writer::new();
    w.list(entries, |w, e| {
        w.u16(e.broadcaster);
        w.u16(e.owner);
        w.bytes(&e.rand);
        w.bytes(&e.proof);
    });
    w.finish()
}

fn parse_vote(buf: &[u8]) -> Option<Vec<GEntry>> {
    let mut r = Reader::new(buf);
    let entries = r
        .list(|r| {
            Ok(GEntry { broadcaster: r.u16()?, owner: r.u16()?, rand: r.bytes()?, proof: r.bytes()? })
        })
        .ok()?;
    r.expect_end().ok()?;
    Some(entries)
}

/// The evaluation that is both the majority of `entries` (≥ f+1 of them
/// carry the same owner and value) and the largest among them, if any.
/// Uniqueness: a competing majority would need f+1 of the same 2f+1 slots.
pub fn winning_eval<'a>(entries: &'a [GEntry], f: usize) -> Option<&'a GEntry> {
    entries.iter().find(|e| {
        entries.iter().filter(|x| x.matches(e)).count() > f
            && entries.iter().all(|x| !vrf::output_gt(&x.rand, &e.rand))
    })
}

/// Map the winning evaluation to an index: its big-endian integer value
/// mod n, one-based.
pub fn eval_to_index(rand: &[u8], n: usize) -> PartyId {
    let r = BigUint::from_bytes_be(rand) % n;
    (u64::try_from(r).expect("residue < n") + 1) as PartyId
}

pub struct Election {
    env: Arc<Env>,
    ks: Arc<KeyStore>,
    instance: InstanceId,
    me: PartyId,
    mode: SeedMode,
    deal_seed: u64,
    coin: Coin,
    rbc: BTreeMap<PartyId, Rbc>,
    /// Traffic for our own (not yet dealt) broadcast.
    own_rbc_buf: Vec<Envelope>,
    aba: Option<Aba>,
    aba_buf: Vec<Envelope>,
    own_rnd: Option<RndMax>,
    g: Vec<GEntry>,
    delivered_rbc: BTreeSet<PartyId>,
    /// Deliveries whose owner's seed is still unknown.
    pending_rbc: Vec<GEntry>,
    ballot: Option<u8>,
    aba_out: Option<u8>,
    votes: Vec<Vec<GEntry>>,
    seen_vote: BTreeSet<PartyId>,
    done: bool,
}

impl Election {
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        mode: SeedMode,
        deal_seed: u64,
    ) -> Result<Self, crate::coin::CoinError> {
        let me = ks.party;
        let coin = Coin::new(
            env.clone(),
            ks.clone(),
            instance.child(ns::ELECTION_COIN),
            mode.clone(),
            CoinGoal::Max,
            deal_seed,
        )?;
        Ok(Election {
            env,
            ks,
            instance,
            me,
            mode,
            deal_seed,
            coin,
            rbc: BTreeMap::new(),
            own_rbc_buf: Vec::new(),
            aba: None,
            aba_buf: Vec::new(),
            own_rnd: None,
            g: Vec::new(),
            delivered_rbc: BTreeSet::new(),
            pending_rbc: Vec::new(),
            ballot: None,
            aba_out: None,
            votes: Vec::new(),
            seen_vote: BTreeSet::new(),
            done: false,
        })
    }

    /// The verified broadcast set, for probes.
    pub fn g_set(&self) -> &[GEntry] {
        &self.g
    }

    /// The bit this party fed to agreement, once its G filled.
    /// Which way the embedded agreement went once it has: `Some(true)` when
    /// the vote path was confirmed, `Some(false)` on the fallback to index 1.
    pub fn vote_path_confirmed(&self) -> Option<bool> {
        self.aba_out.map(|b| b == 1)
    }

    pub fn ballot(&self) -> Option<u8> {
        self.ballot
    }

    fn quorum(&self) -> usize {
        self.env.quorum()
    }

    fn rbc_instance(&self, j: PartyId) -> InstanceId {
        self.instance.child2(ns::ELECTION_RBC, j as u32)
    }

    fn step_rbc(&mut self, j: PartyId, env: &Envelope, step: &mut Step) {
        let Some(child) = self.rbc.get_mut(&j) else { return };
        let child_step = child.on_envelope(env);
        step.out.extend(child_step.out);
        if let Some(Out::Delivered(bytes)) = child_step.output {
            self.on_rbc_delivery(j, &bytes, step);
        }
    }

    fn step_coin(&mut self, env: &Envelope, step: &mut Step) {
        let child_step = self.coin.on_envelope(env);
        step.out.extend(child_step.out);
        if let Some(out) = child_step.output {
            match out {
                Out::CoinMax(m) => self.on_own_winner(m, step),
                other => debug_assert!(false, "unexpected coin output {other:?}"),
            }
        }
        // The coin may have learned new seeds; parked deliveries can now
        // be verified.
        self.drain_pending_rbc(step);
    }

    fn step_aba(&mut self, env: &Envelope, step: &mut Step) {
        let Some(child) = self.aba.as_mut() else { return };
        let child_step = child.on_envelope(env);
        step.out.extend(child_step.out);
        if let Some(Out::Decided(b)) = child_step.output {
            self.on_aba_output(b, step);
        }
    }

    /// Our coin resolved: commit the speculative winner over our own
    /// reliable broadcast.
    fn on_own_winner(&mut self, m: RndMax, step: &mut Step) {
        if self.own_rnd.is_some() {
            return;
        }
        self.own_rnd = Some(m.clone());
        let mut child = Rbc::new(
            self.env.clone(),
            self.rbc_instance(self.me),
            self.me,
            self.me,
            Some(m.encode()),
        )
        .expect("sender arity holds by construction");
        let activation = child.on_activate();
        debug_assert!(activation.output.is_none());
        step.out.extend(activation.out);
        self.rbc.insert(self.me, child);
        for env in std::mem::take(&mut self.own_rbc_buf) {
            self.step_rbc(self.me, &env, step);
        }
    }

    fn on_rbc_delivery(&mut self, j: PartyId, bytes: &[u8], step: &mut Step) {
        if !self.delivered_rbc.insert(j) {
            return;
        }
        let Ok(m) = RndMax::decode(bytes) else { return };
        if m.party == 0 || m.party as usize > self.env.n {
            return;
        }
        let entry =
            GEntry { broadcaster: j, owner: m.party, rand: m.rand, proof: m.proof };
        self.pending_rbc.push(entry);
        self.drain_pending_rbc(step);
    }

    /// Verify parked deliveries whose owner's seed is now known; valid ones
    /// join G, invalid ones are dropped for good.
    fn drain_pending_rbc(&mut self, step: &mut Step) {
        let mut still_pending = Vec::new();
        for entry in std::mem::take(&mut self.pending_rbc) {
            let Some(seed) = self.coin.seed_of(entry.owner) else {
                still_pending.push(entry);
                continue;
            };
            let input = vrf_input(&self.instance.child(ns::ELECTION_COIN), seed);
            if vrf::verify(
                &self.env.suite,
                self.env.registry.vrf_pk(entry.owner),
                &input,
                &entry.rand,
                &entry.proof,
            ) {
                self.g.push(entry);
            }
        }
        self.pending_rbc = still_pending;
        self.after_g_growth(step);
    }

    fn after_g_growth(&mut self, step: &mut Step) {
        if self.ballot.is_none() && self.g.len() >= self.quorum() {
            // The ballot question is asked of exactly the first n−f entries.
            let snapshot = &self.g[..self.quorum()];
            let ballot = match winning_eval(snapshot, self.env.f) {
                Some(_) => {
                    step.out.extend(multicast(
                        self.env.n,
                        self.me,
                        &self.instance,
                        Tag::Vote,
                        vote_payload(snapshot),
                    ));
                    1
                }
                None => 0,
            };
            self.ballot = Some(ballot);
            let mut child = Aba::new(
                self.env.clone(),
                self.ks.clone(),
                self.instance.child(ns::ELECTION_ABA),
                ballot,
                CoinSource::Protocol(self.mode.clone()),
                self.deal_seed ^ 0xE1EC_7104,
            )
            .expect("ballot is a bit");
            let activation = child.on_activate();
            debug_assert!(activation.output.is_none());
            step.out.extend(activation.out);
            self.aba = Some(child);
            for env in std::mem::take(&mut self.aba_buf) {
                self.step_aba(&env, step);
            }
        }
        self.try_output(step);
    }

    fn on_aba_output(&mut self, b: u8, step: &mut Step) {
        if self.aba_out.is_some() {
            return;
        }
        self.aba_out = Some(b);
        if b == 0 {
            self.emit(1, step);
            return;
        }
        self.try_output(step);
    }

    fn on_vote(&mut self, env: &Envelope, step: &mut Step) {
        if !self.seen_vote.insert(env.from) {
            return;
        }
        let Some(entries) = parse_vote(&env.payload) else { return };
        if entries.len() != self.quorum() {
            return;
        }
        self.votes.push(entries);
        self.try_output(step);
    }

    /// Output path: agreement said 1 and some retained vote's snapshot sits
    /// entirely inside our G with a majority-and-largest evaluation.
    fn try_output(&mut self, step: &mut Step) {
        if self.done || self.aba_out != Some(1) {
            return;
        }
        for entries in &self.votes {
            if !entries.iter().all(|e| self.g.contains(e)) {
                continue;
            }
            if let Some(win) = winning_eval(entries, self.env.f) {
                let index = eval_to_index(&win.rand, self.env.n);
                self.emit(index, step);
                return;
            }
        }
    }

    fn emit(&mut self, index: PartyId, step: &mut Step) {
        if self.done {
            return;
        }
        self.done = true;
        debug_assert!(step.output.is_none());
        step.output = Some(Out::Elected(index));
    }
}

impl Reactor for Election {
    fn on_activate(&mut self) -> Step {
        let mut step = Step::none();
        let coin_step = self.coin.on_activate();
        debug_assert!(coin_step.output.is_none());
        step.out.extend(coin_step.out);
        for j in 1..=self.env.n as PartyId {
            if j == self.me {
                continue; // dealt lazily, once the coin hands us a winner
            }
            let mut child = Rbc::new(self.env.clone(), self.rbc_instance(j), self.me, j, None)
                .expect("receiver arity holds by construction");
            let activation = child.on_activate();
            debug_assert!(activation.out.is_empty() && activation.output.is_none());
            self.rbc.insert(j, child);
        }
        step
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        let mut step = Step::none();
        if env.instance == self.instance {
            if env.tag == Tag::Vote {
                self.on_vote(env, &mut step);
            }
            return step;
        }
        if !env.instance.starts_with(&self.instance) {
            return step;
        }
        let depth = self.instance.0.len();
        let Some(space) = env.instance.seg_after(depth) else { return step };
        match space {
            ns::ELECTION_COIN => self.step_coin(env, &mut step),
            ns::ELECTION_RBC => {
                let Some(j) = env.instance.seg_after(depth + 1) else { return step };
                if j == 0 || j as usize > self.env.n {
                    return step;
                }
                let j = j as PartyId;
                if j == self.me && !self.rbc.contains_key(&j) {
                    self.own_rbc_buf.push(env.clone());
                } else {
                    self.step_rbc(j, env, &mut step);
                }
            }
            ns::ELECTION_ABA => {
                if self.aba.is_some() {
                    self.step_aba(env, &mut step);
                } else {
                    self.aba_buf.push(env.clone());
                }
            }
            _ => {}
        }
        step
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keys::gen_parties;
    use crate::crypto::Suite;
    use crate::simnet::run::{run, NetConfig};
    use crate::simnet::sched::SchedulerSpec;

    fn setup(n: usize) -> (Arc<Env>, Vec<Arc<KeyStore>>) {
        let suite = Arc::new(Suite::mock());
        let (keys, registry) = gen_parties(&suite, n, b"election test");
        let f = (n - 1) / 3;
        let env = Env::new(suite, Arc::new(registry), f);
        (env, keys.into_iter().map(Arc::new).collect())
    }

    fn net(
        env: &Arc<Env>,
        keys: &[Arc<KeyStore>],
        mode: SeedMode,
        salt: u64,
    ) -> Vec<Box<dyn Reactor>> {
        keys.iter()
            .map(|ks| {
                Box::new(
                    Election::new(
                        env.clone(),
                        ks.clone(),
                        InstanceId::root(5),
                        mode.clone(),
                        salt.wrapping_mul(65_537) + ks.party as u64,
                    )
                    .unwrap(),
                ) as Box<dyn Reactor>
            })
            .collect()
    }

    fn elected(report: &crate::simnet::run::RunReport) -> Vec<PartyId> {
        report
            .outputs
            .values()
            .map(|(o, _)| match o {
                Out::Elected(i) => *i,
                other => panic!("unexpected output {other:?}"),
            })
            .collect()
    }

    #[test]
    fn winning_eval_demands_majority_and_maximum() {
        let e = |b: PartyId, o: PartyId, r: u8| GEntry {
            broadcaster: b,
            owner: o,
            rand: vec![r],
            proof: vec![],
        };
        // Majority (2 of 3 at f=1) and largest: wins.
        let g = vec![e(1, 9, 7), e(2, 9, 7), e(3, 5, 3)];
        assert_eq!(winning_eval(&g, 1).map(|w| w.owner), Some(9));
        // Majority but not largest: no winner.
        let g = vec![e(1, 9, 7), e(2, 9, 7), e(3, 5, 8)];
        assert!(winning_eval(&g, 1).is_none());
        // Largest but no majority: no winner.
        let g = vec![e(1, 9, 7), e(2, 5, 3), e(3, 6, 1)];
        assert!(winning_eval(&g, 1).is_none());
    }

    #[test]
    fn index_mapping_is_big_endian_mod_n_one_based() {
        assert_eq!(eval_to_index(&[0], 4), 1);
        assert_eq!(eval_to_index(&[7], 4), 4);
        // 0x0100 = 256 ≡ 0 mod 4 → 1.
        assert_eq!(eval_to_index(&[1, 0], 4), 1);
        assert_eq!(eval_to_index(&[1, 1], 4), 2);
    }

    #[test]
    fn all_honest_runs_elect_one_common_index() {
        let (env, keys) = setup(4);
        let mut histogram = BTreeMap::new();
        for seed in 0..25u64 {
            let mut rs = net(&env, &keys, SeedMode::Genesis(seed.to_be_bytes().to_vec()), seed);
            let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Random, seed));
            assert!(report.stall.is_none(), "seed {seed}");
            let idx = elected(&report);
            assert_eq!(idx.len(), 4, "seed {seed}");
            assert_eq!(idx.iter().collect::<BTreeSet<_>>().len(), 1, "seed {seed}: {idx:?}");
            assert!((1..=4).contains(&idx[0]), "seed {seed}");
            *histogram.entry(idx[0]).or_insert(0u32) += 1;
        }
        assert!(histogram.len() > 1, "the elected index never varied: {histogram:?}");
    }

    #[test]
    fn grown_seed_mode_terminates_end_to_end() {
        let (env, keys) = setup(4);
        let mut rs = net(&env, &keys, SeedMode::Grown, 3);
        let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Fifo, 0));
        assert!(report.stall.is_none());
        let idx = elected(&report);
        assert_eq!(idx.len(), 4);
        assert_eq!(idx.iter().collect::<BTreeSet<_>>().len(), 1);
    }

    #[test]
    fn fifo_run_takes_the_unanimous_vote_path() {
        let (env, keys) = setup(4);
        let mut rs = net(&env, &keys, SeedMode::Genesis(b"fifo".to_vec()), 11);
        let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Fifo, 0));
        let idx = elected(&report);
        assert_eq!(idx.len(), 4);
        for r in &rs {
            let e = r.as_any().downcast_ref::<Election>().unwrap();
            // Symmetric schedule: everyone saw the same winner, voted 1,
            // and agreement confirmed it.
            assert_eq!(e.ballot(), Some(1));
            assert_eq!(e.aba_out, Some(1));
            assert_eq!(e.g_set().len(), 4);
        }
        // The elected index derives from the common winning evaluation.
        let e = rs[0].as_any().downcast_ref::<Election>().unwrap();
        let win = winning_eval(&e.g_set()[..3], env.f).expect("unanimous winner");
        assert_eq!(idx[0], eval_to_index(&win.rand, env.n));
    }

    #[test]
    fn forged_votes_cannot_move_the_output() {
        let (env, keys) = setup(4);
        let inst = InstanceId::root(5);
        let mut e = Election::new(
            env.clone(),
            keys[1].clone(),
            inst.clone(),
            SeedMode::Genesis(b"forge".to_vec()),
            7,
        )
        .unwrap();
        e.on_activate();
        // An out-of-thin-air vote: wrong size, then right size but entries
        // that are not in our (empty) G.
        let fake = |n_entries: usize| {
            vote_payload(
                &(0..n_entries)
                    .map(|i| GEntry {
                        broadcaster: i as PartyId + 1,
                        owner: 1,
                        rand: vec![9; 4],
                        proof: vec![],
                    })
                    .collect::<Vec<_>>(),
            )
        };
        let mk = |from: PartyId, payload: Vec<u8>| Envelope {
            from,
            to: 2,
            instance: inst.clone(),
            tag: Tag::Vote,
            payload,
        };
        let step = e.on_envelope(&mk(3, fake(2)));
        assert!(step.output.is_none());
        assert!(e.votes.is_empty(), "wrong-cardinality vote retained");
        let step = e.on_envelope(&mk(4, fake(3)));
        assert!(step.output.is_none());
        assert_eq!(e.votes.len(), 1, "well-formed vote parked for later");
        // Even with agreement forced to 1, a vote outside G cannot fire.
        e.aba_out = Some(1);
        let mut step = Step::none();
        e.try_output(&mut step);
        assert!(step.output.is_none());
        assert!(!e.done);
    }

    #[test]
    fn default_path_elects_index_one() {
        let (env, keys) = setup(4);
        let inst = InstanceId::root(5);
        let mut e = Election::new(
            env.clone(),
            keys[0].clone(),
            inst,
            SeedMode::Genesis(b"dflt".to_vec()),
            9,
        )
        .unwrap();
        e.on_activate();
        let mut step = Step::none();
        e.on_aba_output(0, &mut step);
        assert_eq!(step.output, Some(Out::Elected(1)));
        // A later 1 cannot re-open the decision.
        let mut step = Step::none();
        e.on_aba_output(1, &mut step);
        assert!(step.output.is_none());
    }
}
