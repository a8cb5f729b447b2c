//! Asynchronous binary agreement from a round-based rating game plus a
//! per-round common coin.
//!
//! Each round filters the candidate bits in three waves. `Val` is a
//! support-amplified vote: a bit backed by f+1 distinct senders is relayed,
//! and one backed by 2f+1 is admitted to the round's bin. `Aux` announces
//! one admitted bit; once n−f announcements all name admitted bits, `Conf`
//! publishes the sender's whole bin. Once n−f bins, all covered by our own,
//! have arrived, their union is this round's candidate set and the round's
//! coin is asked for a bit. A singleton candidate set decides when it
//! matches the coin and becomes the next estimate when it does not; a
//! two-element set hands the estimate to the coin. The confirmation wave
//! exists because the coin is only reasonably fair: it pins every party's
//! candidate set before the coin can be revealed, so the adversary cannot
//! pick the set after seeing the bit.
//!
//! Deciding does not silence a party — peers may need several more rounds,
//! and the thresholds above need every honest voice. A decided party
//! multicasts `Finish(b)` and keeps playing rounds with its estimate pinned
//! to b. f+1 `Finish(b)` messages are themselves evidence worth joining
//! (at least one honest party decided b), and 2f+1 let a party output b
//! and retire outright: the joining rule guarantees everyone else reaches
//! the same tally, so halting is safe without any further round traffic.
//!
//! Coins are children — full protocol instances nested one namespace
//! below, one per round. In trusted-nonce mode every round shares the
//! nonce (coin inputs are domain-separated by the child id); in grown mode
//! each coin bootstraps its own seeds. A fixture source that returns a
//! perfect shared coin without any messages can be swapped in to measure
//! the round logic in isolation.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::coin::{Coin, CoinGoal, SeedMode};
use crate::crypto::keys::{Env, KeyStore, PartyId};
use crate::simnet::{multicast, ns, Envelope, InstanceId, Out, Reactor, Step, Tag};
use crate::wire::{Reader, Writer};

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum AbaError {
    #[error("the input must be a single bit")]
    NonBitInput,
}

/// Where each round's coin bit comes from.
#[derive(Clone, Debug)]
pub enum CoinSource {
    /// A real coin instance per round.
    Protocol(SeedMode),
    /// A perfect shared coin derived from a seed everyone was handed out
    /// of band: messageless, always common. Test fixture only.
    Fixture(u64),
}

pub fn round_bit_payload(r: u32, b: u8) -> Vec<u8> {
    let mut w = Writer::new();
    w.u32(r);
    w.u8(b);
    w.finish()
}

fn parse_round_bit(buf: &[u8]) -> Option<(u32, u8)> {
    let mut r = Reader::new(buf);
    let round = r.u32().ok()?;
    let b = r.u8().ok()?;
    r.expect_end().ok()?;
    (b <= 1).then_some((round, b))
}

pub fn conf_payload(r: u32, set: &BTreeSet<u8>) -> Vec<u8> {
    let mut w = Writer::new();
    w.u32(r);
    w.u8(set.iter().fold(0, |m, b| m | (1 << b)));
    w.finish()
}

fn parse_conf(buf: &[u8]) -> Option<(u32, BTreeSet<u8>)> {
    let mut r = Reader::new(buf);
    let round = r.u32().ok()?;
    let mask = r.u8().ok()?;
    r.expect_end().ok()?;
    if mask == 0 || mask > 3 {
        return None;
    }
    Some((round, (0..2).filter(|b| mask & (1 << b) != 0).collect()))
}

pub fn finish_payload(b: u8) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(b);
    w.finish()
}

fn parse_finish(buf: &[u8]) -> Option<u8> {
    let mut r = Reader::new(buf);
    let b = r.u8().ok()?;
    r.expect_end().ok()?;
    (b <= 1).then_some(b)
}

#[derive(Default)]
struct Round {
    val_rcvd: [BTreeSet<PartyId>; 2],
    val_sent: [bool; 2],
    /// Admitted bits in admission order (the first is the Aux value).
    bin: Vec<u8>,
    aux_sent: bool,
    aux_rcvd: BTreeMap<PartyId, u8>,
    conf_sent: bool,
    conf_rcvd: BTreeMap<PartyId, BTreeSet<u8>>,
    coin_invoked: bool,
    /// The round's candidate set, fixed when the coin is invoked.
    candidates: BTreeSet<u8>,
    coin_out: Option<u8>,
}

pub struct Aba {
    env: Arc<Env>,
    ks: Arc<KeyStore>,
    instance: InstanceId,
    me: PartyId,
    coin_source: CoinSource,
    deal_seed: u64,
    round: u32,
    est: u8,
    rounds: BTreeMap<u32, Round>,
    coins: BTreeMap<u32, Coin>,
    coin_buf: BTreeMap<u32, Vec<Envelope>>,
    decided: Option<u8>,
    /// Round counter at the moment of decision, for round-cost statistics.
    decided_round: Option<u32>,
    output_emitted: bool,
    finish_sent: bool,
    finish_rcvd: BTreeMap<PartyId, u8>,
    finishes: [BTreeSet<PartyId>; 2],
    halted: bool,
}

impl Aba {
    pub fn new(
        env: Arc<Env>,
        ks: Arc<KeyStore>,
        instance: InstanceId,
        input: u8,
        coin_source: CoinSource,
        deal_seed: u64,
    ) -> Result<Self, AbaError> {
        if input > 1 {
            return Err(AbaError::NonBitInput);
        }
        let me = ks.party;
        Ok(Aba {
            env,
            ks,
            instance,
            me,
            coin_source,
            deal_seed,
            round: 0,
            est: input,
            rounds: BTreeMap::new(),
            coins: BTreeMap::new(),
            coin_buf: BTreeMap::new(),
            decided: None,
            decided_round: None,
            output_emitted: false,
            finish_sent: false,
            finish_rcvd: BTreeMap::new(),
            finishes: [BTreeSet::new(), BTreeSet::new()],
            halted: false,
        })
    }

    pub fn decided(&self) -> Option<u8> {
        self.decided
    }

    /// The round in which this party decided (0-based); the number of coin
    /// invocations it consumed is one more.
    pub fn decided_round(&self) -> Option<u32> {
        self.decided_round
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    fn quorum(&self) -> usize {
        self.env.quorum()
    }

    fn coin_instance(&self, r: u32) -> InstanceId {
        self.instance.child2(ns::ABA_COIN, r)
    }

    fn enter_round(&mut self, step: &mut Step) {
        let r = self.round;
        let est = self.est;
        let state = self.rounds.entry(r).or_default();
        if !state.val_sent[est as usize] {
            state.val_sent[est as usize] = true;
            step.out.extend(multicast(
                self.env.n,
                self.me,
                &self.instance,
                Tag::Val,
                round_bit_payload(r, est),
            ));
        }
        self.progress(step);
    }

    /// Support amplification and admission run for any round the instant a
    /// tally moves: laggards peering into old rounds depend on everyone
    /// still relaying there.
    fn relay_and_admit(&mut self, r: u32, step: &mut Step) {
        let f = self.env.f;
        let quorum = self.quorum();
        let state = self.rounds.entry(r).or_default();
        for b in 0..2u8 {
            let support = state.val_rcvd[b as usize].len();
            if support > f && !state.val_sent[b as usize] {
                state.val_sent[b as usize] = true;
                step.out.extend(multicast(
                    self.env.n,
                    self.me,
                    &self.instance,
                    Tag::Val,
                    round_bit_payload(r, b),
                ));
            }
            if support >= quorum && !state.bin.contains(&b) {
                state.bin.push(b);
            }
        }
    }

    /// The current round's gated waves: Aux once the bin is non-empty,
    /// Conf once n−f Aux values are covered, the coin once n−f bins are.
    fn progress(&mut self, step: &mut Step) {
        let r = self.round;
        let quorum = self.quorum();
        let state = self.rounds.entry(r).or_default();
        if !state.aux_sent && !state.bin.is_empty() {
            state.aux_sent = true;
            let v = state.bin[0];
            step.out.extend(multicast(
                self.env.n,
                self.me,
                &self.instance,
                Tag::Aux,
                round_bit_payload(r, v),
            ));
        }
        if !state.conf_sent
            && state.aux_rcvd.values().filter(|v| state.bin.contains(v)).count() >= quorum
        {
            state.conf_sent = true;
            let set: BTreeSet<u8> = state.bin.iter().copied().collect();
            step.out.extend(multicast(
                self.env.n,
                self.me,
                &self.instance,
                Tag::Conf,
                conf_payload(r, &set),
            ));
        }
        if !state.coin_invoked {
            let covered: Vec<&BTreeSet<u8>> = state
                .conf_rcvd
                .values()
                .filter(|set| set.iter().all(|b| state.bin.contains(b)))
                .collect();
            if covered.len() >= quorum {
                state.coin_invoked = true;
                state.candidates = covered.into_iter().flatten().copied().collect();
                self.invoke_coin(r, step);
            }
        }
    }

    fn invoke_coin(&mut self, r: u32, step: &mut Step) {
        match self.coin_source.clone() {
            CoinSource::Fixture(seed) => {
                use crate::wire::Encode;
                let digest = self.env.suite.hash(
                    "aba-fixture-coin",
                    &[&seed.to_be_bytes(), &self.instance.encode(), &r.to_be_bytes()],
                );
                self.on_coin_bit(r, digest[0] & 1, step);
            }
            CoinSource::Protocol(mode) => {
                let mut child = Coin::new(
                    self.env.clone(),
                    self.ks.clone(),
                    self.coin_instance(r),
                    mode,
                    CoinGoal::Bit,
                    self.deal_seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                )
                .expect("round coin parameters are well-formed");
                let activation = child.on_activate();
                debug_assert!(activation.output.is_none());
                step.out.extend(activation.out);
                self.coins.insert(r, child);
                for env in self.coin_buf.remove(&r).unwrap_or_default() {
                    self.step_coin(r, &env, step);
                }
            }
        }
    }

    fn step_coin(&mut self, r: u32, env: &Envelope, step: &mut Step) {
        let Some(child) = self.coins.get_mut(&r) else { return };
        let child_step = child.on_envelope(env);
        step.out.extend(child_step.out);
        if let Some(out) = child_step.output {
            match out {
                Out::CoinBit(c) => self.on_coin_bit(r, c, step),
                other => debug_assert!(false, "unexpected coin output {other:?}"),
            }
        }
    }

    fn on_coin_bit(&mut self, r: u32, c: u8, step: &mut Step) {
        let state = self.rounds.entry(r).or_default();
        if state.coin_out.is_some() {
            return;
        }
        state.coin_out = Some(c);
        if r != self.round {
            return;
        }
        let candidates = state.candidates.clone();
        if candidates.len() == 1 {
            let x = *candidates.first().expect("non-empty");
            if x == c {
                self.decide(x, step);
            }
            self.est = x;
        } else {
            self.est = c;
        }
        if let Some(b) = self.decided {
            self.est = b;
        }
        self.round = r + 1;
        self.enter_round(step);
    }

    fn decide(&mut self, b: u8, step: &mut Step) {
        if self.decided.is_some() {
            return;
        }
        self.decided = Some(b);
        self.decided_round = Some(self.round);
        if !self.output_emitted {
            self.output_emitted = true;
            debug_assert!(step.output.is_none());
            step.output = Some(Out::Decided(b));
        }
        if !self.finish_sent {
            self.finish_sent = true;
            step.out.extend(multicast(
                self.env.n,
                self.me,
                &self.instance,
                Tag::Finish,
                finish_payload(b),
            ));
        }
    }

    fn on_val(&mut self, env: &Envelope, step: &mut Step) {
        let Some((r, b)) = parse_round_bit(&env.payload) else { return };
        let state = self.rounds.entry(r).or_default();
        if !state.val_rcvd[b as usize].insert(env.from) {
            return;
        }
        self.relay_and_admit(r, step);
        if r == self.round {
            self.progress(step);
        }
    }

    fn on_aux(&mut self, env: &Envelope, step: &mut Step) {
        let Some((r, b)) = parse_round_bit(&env.payload) else { return };
        let state = self.rounds.entry(r).or_default();
        state.aux_rcvd.entry(env.from).or_insert(b);
        if r == self.round {
            self.progress(step);
        }
    }

    fn on_conf(&mut self, env: &Envelope, step: &mut Step) {
        let Some((r, set)) = parse_conf(&env.payload) else { return };
        let state = self.rounds.entry(r).or_default();
        state.conf_rcvd.entry(env.from).or_insert(set);
        if r == self.round {
            self.progress(step);
        }
    }

    fn on_finish(&mut self, env: &Envelope, step: &mut Step) {
        let Some(b) = parse_finish(&env.payload) else { return };
        if self.finish_rcvd.contains_key(&env.from) {
            return;
        }
        self.finish_rcvd.insert(env.from, b);
        self.finishes[b as usize].insert(env.from);
        let tally = self.finishes[b as usize].len();
        if tally > self.env.f && !self.finish_sent {
            self.finish_sent = true;
            step.out.extend(multicast(
                self.env.n,
                self.me,
                &self.instance,
                Tag::Finish,
                finish_payload(b),
            ));
        }
        if tally >= self.quorum() {
            if self.decided.is_none() {
                self.decided = Some(b);
                self.decided_round = Some(self.round);
            }
            if !self.output_emitted {
                self.output_emitted = true;
                debug_assert!(step.output.is_none());
                step.output = Some(Out::Decided(b));
            }
            self.halted = true;
        }
    }
}

impl Reactor for Aba {
    fn on_activate(&mut self) -> Step {
        let mut step = Step::none();
        self.enter_round(&mut step);
        step
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        let mut step = Step::none();
        if self.halted {
            return step;
        }
        if env.instance == self.instance {
            match env.tag {
                Tag::Val => self.on_val(env, &mut step),
                Tag::Aux => self.on_aux(env, &mut step),
                Tag::Conf => self.on_conf(env, &mut step),
                Tag::Finish => self.on_finish(env, &mut step),
                _ => {}
            }
            return step;
        }
        let depth = self.instance.0.len();
        if !env.instance.starts_with(&self.instance) {
            return step;
        }
        let (Some(space), Some(r)) = (env.instance.seg_after(depth), env.instance.seg_after(depth + 1))
        else {
            return step;
        };
        if space != ns::ABA_COIN {
            return step;
        }
        if self.coins.contains_key(&r) {
            self.step_coin(r, env, &mut step);
        } else if matches!(self.coin_source, CoinSource::Protocol(_)) {
            self.coin_buf.entry(r).or_default().push(env.clone());
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
        let (keys, registry) = gen_parties(&suite, n, b"aba test");
        let f = (n - 1) / 3;
        let env = Env::new(suite, Arc::new(registry), f);
        (env, keys.into_iter().map(Arc::new).collect())
    }

    fn net(
        env: &Arc<Env>,
        keys: &[Arc<KeyStore>],
        inputs: &[u8],
        source: CoinSource,
        salt: u64,
    ) -> Vec<Box<dyn Reactor>> {
        keys.iter()
            .zip(inputs)
            .map(|(ks, input)| {
                Box::new(
                    Aba::new(
                        env.clone(),
                        ks.clone(),
                        InstanceId::root(4),
                        *input,
                        source.clone(),
                        salt.wrapping_mul(10_007) + ks.party as u64,
                    )
                    .unwrap(),
                ) as Box<dyn Reactor>
            })
            .collect()
    }

    fn decisions(report: &crate::simnet::run::RunReport) -> Vec<u8> {
        report
            .outputs
            .values()
            .map(|(o, _)| match o {
                Out::Decided(b) => *b,
                other => panic!("unexpected output {other:?}"),
            })
            .collect()
    }

    #[test]
    fn non_bit_input_is_rejected() {
        let (env, keys) = setup(4);
        let err = Aba::new(
            env,
            keys[0].clone(),
            InstanceId::root(4),
            2,
            CoinSource::Fixture(0),
            1,
        )
        .err()
        .unwrap();
        assert_eq!(err, AbaError::NonBitInput);
    }

    #[test]
    fn unanimous_inputs_decide_that_value() {
        let (env, keys) = setup(4);
        for input in [0u8, 1] {
            for seed in 0..20 {
                let mut rs = net(
                    &env,
                    &keys,
                    &[input; 4],
                    CoinSource::Protocol(SeedMode::Genesis(vec![seed as u8 + 1])),
                    seed,
                );
                let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Random, seed));
                assert!(report.stall.is_none(), "input {input} seed {seed}");
                let ds = decisions(&report);
                assert_eq!(ds.len(), 4, "input {input} seed {seed}");
                assert!(ds.iter().all(|b| *b == input), "input {input} seed {seed}: {ds:?}");
            }
        }
    }

    #[test]
    fn mixed_inputs_agree_on_a_common_bit() {
        let (env, keys) = setup(4);
        let mut zeros = 0u32;
        let mut ones = 0u32;
        for seed in 0..40 {
            let mut rs = net(
                &env,
                &keys,
                &[0, 1, 0, 1],
                CoinSource::Protocol(SeedMode::Genesis(vec![seed as u8 + 1, 7])),
                seed,
            );
            let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Random, seed));
            assert!(report.stall.is_none(), "seed {seed}");
            let ds = decisions(&report);
            assert_eq!(ds.len(), 4, "seed {seed}");
            assert_eq!(ds.iter().collect::<BTreeSet<_>>().len(), 1, "seed {seed}: {ds:?}");
            match ds[0] {
                0 => zeros += 1,
                _ => ones += 1,
            }
        }
        assert!(zeros > 0 && ones > 0, "decisions never varied ({zeros} vs {ones})");
    }

    #[test]
    fn fixture_coin_isolates_round_logic_and_decides_fast() {
        let (env, keys) = setup(4);
        let mut total_rounds = 0u32;
        let trials = 60u64;
        for seed in 0..trials {
            let mut rs = net(&env, &keys, &[0, 1, 1, 0], CoinSource::Fixture(seed), seed);
            let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Random, seed));
            assert!(report.stall.is_none(), "seed {seed}");
            let ds = decisions(&report);
            assert_eq!(ds.len(), 4, "seed {seed}");
            assert_eq!(ds.iter().collect::<BTreeSet<_>>().len(), 1, "seed {seed}");
            for r in &rs {
                let aba = r.as_any().downcast_ref::<Aba>().unwrap();
                total_rounds += aba.decided_round().expect("decided") + 1;
            }
        }
        let mean = f64::from(total_rounds) / (trials as f64 * 4.0);
        assert!(mean <= 4.0, "perfect-coin mean rounds {mean}");
    }

    #[test]
    fn relay_admit_aux_conf_fire_exactly_at_their_thresholds() {
        let (env, keys) = setup(4);
        let inst = InstanceId::root(4);
        let mut a = Aba::new(
            env.clone(),
            keys[1].clone(),
            inst.clone(),
            1,
            CoinSource::Protocol(SeedMode::Genesis(b"x".to_vec())),
            5,
        )
        .unwrap();
        let act = a.on_activate();
        assert_eq!(act.out.len(), 4, "own Val to everyone");
        assert_eq!(act.out[0].tag, Tag::Val);

        let val = |from: PartyId, b: u8| Envelope {
            from,
            to: 2,
            instance: inst.clone(),
            tag: Tag::Val,
            payload: round_bit_payload(0, b),
        };
        // One foreign Val(0) is below the f+1 relay bar.
        assert!(a.on_envelope(&val(3, 0)).out.is_empty());
        // The second triggers the relay.
        let step = a.on_envelope(&val(4, 0));
        assert_eq!(step.out.len(), 4);
        assert!(step.out.iter().all(|e| e.tag == Tag::Val));
        // The third admits 0 to the bin and releases Aux(0).
        let step = a.on_envelope(&val(1, 0));
        let auxes: Vec<_> = step.out.iter().filter(|e| e.tag == Tag::Aux).collect();
        assert_eq!(auxes.len(), 4);
        assert_eq!(parse_round_bit(&auxes[0].payload), Some((0, 0)));

        // Aux coverage: two more foreign Aux(0) plus our own loopback reach
        // n−f = 3 and release Conf({0}).
        let aux = |from: PartyId| Envelope {
            from,
            to: 2,
            instance: inst.clone(),
            tag: Tag::Aux,
            payload: round_bit_payload(0, 0),
        };
        assert!(a.on_envelope(&aux(2)).out.is_empty(), "self loopback alone");
        assert!(a.on_envelope(&aux(3)).out.is_empty(), "two Aux below quorum");
        let step = a.on_envelope(&aux(4));
        let confs: Vec<_> = step.out.iter().filter(|e| e.tag == Tag::Conf).collect();
        assert_eq!(confs.len(), 4);
        assert_eq!(parse_conf(&confs[0].payload), Some((0, [0u8].into())));

        // Conf coverage: the third covered bin invokes the round-0 coin,
        // whose activation traffic (its children's dealings) appears.
        let conf = |from: PartyId| Envelope {
            from,
            to: 2,
            instance: inst.clone(),
            tag: Tag::Conf,
            payload: conf_payload(0, &[0u8].into()),
        };
        assert!(a.on_envelope(&conf(2)).out.is_empty());
        assert!(a.on_envelope(&conf(3)).out.is_empty());
        assert!(a.coins.is_empty());
        let step = a.on_envelope(&conf(4));
        assert!(a.coins.contains_key(&0));
        assert_eq!(a.rounds[&0].candidates, [0u8].into());
        assert!(!step.out.is_empty(), "coin activation involves dealing traffic");
        assert!(step.out.iter().all(|e| e.instance.starts_with(&inst)));
    }

    #[test]
    fn finish_gadget_joins_at_f_plus_one_and_halts_at_quorum() {
        let (env, keys) = setup(4);
        let inst = InstanceId::root(4);
        let mut a = Aba::new(
            env.clone(),
            keys[1].clone(),
            inst.clone(),
            0,
            CoinSource::Fixture(1),
            6,
        )
        .unwrap();
        a.on_activate();
        let fin = |from: PartyId| Envelope {
            from,
            to: 2,
            instance: inst.clone(),
            tag: Tag::Finish,
            payload: finish_payload(1),
        };
        assert!(a.on_envelope(&fin(3)).out.is_empty(), "one Finish is not evidence");
        // f+1 = 2 matching: join without deciding.
        let step = a.on_envelope(&fin(4));
        let joins: Vec<_> = step.out.iter().filter(|e| e.tag == Tag::Finish).collect();
        assert_eq!(joins.len(), 4);
        assert_eq!(a.decided(), None);
        // Our own join loops back: 2f+1 = 3 total, output and retire.
        let step = a.on_envelope(&fin(2));
        assert_eq!(step.output, Some(Out::Decided(1)));
        assert_eq!(a.decided(), Some(1));
        assert!(a.halted());
        // Retired means inert.
        assert!(a.on_envelope(&fin(1)).out.is_empty());
        let val = Envelope {
            from: 1,
            to: 2,
            instance: inst,
            tag: Tag::Val,
            payload: round_bit_payload(0, 0),
        };
        let step = a.on_envelope(&val);
        assert!(step.out.is_empty() && step.output.is_none());
    }

    #[test]
    fn contradictory_byzantine_votes_never_split_honest_decisions() {
        use crate::byz::AbaContradictor;
        let (env, keys) = setup(4);
        for seed in 0..40 {
            let mut rs: Vec<Box<dyn Reactor>> = Vec::new();
            for ks in &keys {
                if ks.party == 4 {
                    rs.push(Box::new(AbaContradictor::new(
                        env.clone(),
                        ks.clone(),
                        InstanceId::root(4),
                        8,
                    )));
                } else {
                    rs.push(Box::new(
                        Aba::new(
                            env.clone(),
                            ks.clone(),
                            InstanceId::root(4),
                            1,
                            CoinSource::Protocol(SeedMode::Genesis(vec![seed as u8 + 1, 9])),
                            (seed as u64).wrapping_mul(37) + ks.party as u64,
                        )
                        .unwrap(),
                    ));
                }
            }
            let report = run(&mut rs, &NetConfig::new(SchedulerSpec::Random, seed));
            assert!(report.stall.is_none(), "seed {seed}");
            // All three honest parties decide, agree, and the decided bit
            // was an honest input (all honest input 1; the planted 0-votes
            // never reach the 2f+1 admission bar).
            let honest: Vec<u8> = (1..=3)
                .map(|p| match &report.outputs.get(&p) {
                    Some((Out::Decided(b), _)) => *b,
                    other => panic!("party {p} seed {seed}: {other:?}"),
                })
                .collect();
            assert_eq!(honest, vec![1, 1, 1], "seed {seed}");
        }
    }

    #[test]
    fn duplicate_and_malformed_votes_are_inert() {
        let (env, keys) = setup(4);
        let inst = InstanceId::root(4);
        let mut a = Aba::new(
            env.clone(),
            keys[1].clone(),
            inst.clone(),
            1,
            CoinSource::Fixture(2),
            7,
        )
        .unwrap();
        a.on_activate();
        let mk = |tag: Tag, payload: Vec<u8>| Envelope {
            from: 3,
            to: 2,
            instance: inst.clone(),
            tag,
            payload,
        };
        // Byte 2 is not a bit; a short buffer is not a vote.
        assert!(a.on_envelope(&mk(Tag::Val, round_bit_payload(0, 2))).out.is_empty());
        assert!(a.on_envelope(&mk(Tag::Val, vec![0, 0])).out.is_empty());
        assert!(a.on_envelope(&mk(Tag::Conf, conf_payload(0, &BTreeSet::new()))).out.is_empty());
        assert_eq!(a.rounds[&0].val_rcvd[0].len(), 0);
        // The same Val twice counts once.
        a.on_envelope(&mk(Tag::Val, round_bit_payload(0, 0)));
        a.on_envelope(&mk(Tag::Val, round_bit_payload(0, 0)));
        assert_eq!(a.rounds[&0].val_rcvd[0].len(), 1);
        // A second Aux from the same sender keeps the first value.
        a.on_envelope(&mk(Tag::Aux, round_bit_payload(0, 1)));
        a.on_envelope(&mk(Tag::Aux, round_bit_payload(0, 0)));
        assert_eq!(a.rounds[&0].aux_rcvd[&3], 1);
    }
}
