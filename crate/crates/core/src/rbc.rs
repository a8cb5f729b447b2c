//! Reliable broadcast: a designated sender distributes one value so that
//! honest parties never deliver conflicting values (agreement), all deliver
//! once any one does (totality), and an honest sender's value is the value
//! delivered (validity).
//!
//! The message pattern is the classic three-phase one: the sender multicasts
//! `Send(v)`; on the first valid `Send` a party multicasts `Echo(v)`; on a
//! quorum of matching `Echo` — or `f+1` matching `Ready`, the amplification
//! step that gives totality — a party multicasts `Ready(digest)`; on a quorum
//! of matching `Ready` it delivers. `Echo` carries the full value so parties
//! the sender skipped can still learn it; `Ready` carries only the digest.
//! Tallies are keyed by digest to bound memory under spam, with the full
//! value retained from the first `Send`/`Echo` that supplied it.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::crypto::keys::{Env, PartyId};
use crate::simnet::{multicast, Envelope, InstanceId, Out, Reactor, Step, Tag};

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum RbcError {
    #[error("broadcast input must be supplied by the sender and nobody else")]
    InputArity,
}

pub struct Rbc {
    env: Arc<Env>,
    instance: InstanceId,
    me: PartyId,
    sender: PartyId,
    input: Option<Vec<u8>>,
    echoed: bool,
    readied: bool,
    delivered: bool,
    /// Full values learned from Send/Echo, keyed by digest.
    values: BTreeMap<Vec<u8>, Vec<u8>>,
    echoes: BTreeMap<Vec<u8>, BTreeSet<PartyId>>,
    readies: BTreeMap<Vec<u8>, BTreeSet<PartyId>>,
    seen_send: bool,
    seen_echo: BTreeSet<PartyId>,
    seen_ready: BTreeSet<PartyId>,
}

impl Rbc {
    pub fn new(
        env: Arc<Env>,
        instance: InstanceId,
        me: PartyId,
        sender: PartyId,
        input: Option<Vec<u8>>,
    ) -> Result<Self, RbcError> {
        if (me == sender) != input.is_some() {
            return Err(RbcError::InputArity);
        }
        Ok(Rbc {
            env,
            instance,
            me,
            sender,
            input,
            echoed: false,
            readied: false,
            delivered: false,
            values: BTreeMap::new(),
            echoes: BTreeMap::new(),
            readies: BTreeMap::new(),
            seen_send: false,
            seen_echo: BTreeSet::new(),
            seen_ready: BTreeSet::new(),
        })
    }

    fn digest(&self, value: &[u8]) -> Vec<u8> {
        self.env.suite.hash("rbc-value", &[value])
    }

    /// Re-evaluate the Ready and deliver conditions after any tally change.
    fn progress(&mut self) -> Step {
        let mut step = Step::none();
        if !self.readied {
            let quorum_echo = self
                .echoes
                .iter()
                .find(|(_, s)| s.len() >= self.env.quorum())
                .map(|(h, _)| h.clone());
            let amplify = self
                .readies
                .iter()
                .find(|(_, s)| s.len() >= self.env.f + 1)
                .map(|(h, _)| h.clone());
            if let Some(h) = quorum_echo.or(amplify) {
                self.readied = true;
                step.out.extend(multicast(
                    self.env.n,
                    self.me,
                    &self.instance,
                    Tag::Ready,
                    h,
                ));
            }
        }
        if !self.delivered {
            let done = self
                .readies
                .iter()
                .find(|(h, s)| s.len() >= self.env.quorum() && self.values.contains_key(*h))
                .map(|(h, _)| h.clone());
            if let Some(h) = done {
                self.delivered = true;
                step.output = Some(Out::Delivered(self.values[&h].clone()));
            }
        }
        step
    }
}

impl Reactor for Rbc {
    fn on_activate(&mut self) -> Step {
        match self.input.take() {
            Some(v) => Step::send(multicast(self.env.n, self.me, &self.instance, Tag::Send, v)),
            None => Step::none(),
        }
    }

    fn on_envelope(&mut self, env: &Envelope) -> Step {
        debug_assert_eq!(env.instance, self.instance);
        match env.tag {
            Tag::Send => {
                if env.from != self.sender || self.seen_send {
                    return Step::none();
                }
                self.seen_send = true;
                let h = self.digest(&env.payload);
                self.values.entry(h).or_insert_with(|| env.payload.clone());
                let mut step = if self.echoed {
                    Step::none()
                } else {
                    self.echoed = true;
                    Step::send(multicast(
                        self.env.n,
                        self.me,
                        &self.instance,
                        Tag::Echo,
                        env.payload.clone(),
                    ))
                };
                step.merge(self.progress());
                step
            }
            Tag::Echo => {
                if !self.seen_echo.insert(env.from) {
                    return Step::none();
                }
                let h = self.digest(&env.payload);
                self.values.entry(h.clone()).or_insert_with(|| env.payload.clone());
                self.echoes.entry(h).or_default().insert(env.from);
                self.progress()
            }
            Tag::Ready => {
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
