//! Delivery schedulers, including adversarial ones.
//!
//! A scheduler inspects the pending pool through [`PendingView`] — metadata
//! only, no payloads — and names the envelope to deliver next. The runner
//! overrules it in exactly one case: an envelope older than the fairness cap
//! must be delivered first, which is what makes every strategy here a valid
//! asynchronous adversary rather than a message-dropping one.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{InstanceId, Tag};
use crate::crypto::keys::PartyId;

/// Scheduler-visible view of a pending envelope.
#[derive(Debug)]
pub struct PendingView<'a> {
    pub from: PartyId,
    pub to: PartyId,
    pub instance: &'a InstanceId,
    pub tag: Tag,
    pub len: u64,
    /// Deliveries that have happened since this envelope was injected.
    pub age: u64,
}

/// Predicate over envelope metadata; `None` fields match anything.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct MatchRule {
    pub from: Option<PartyId>,
    pub to: Option<PartyId>,
    pub tag: Option<u8>,
    /// Matches if the instance path contains this (namespace, index) pair —
    /// the shape of "all traffic of dealer j's sub-instance".
    pub instance_pair: Option<(u32, u32)>,
    /// Matches if the instance path starts with this prefix.
    pub instance_prefix: Option<Vec<u32>>,
}

impl MatchRule {
    pub fn matches(&self, v: &PendingView<'_>) -> bool {
        if let Some(f) = self.from {
            if v.from != f {
                return false;
            }
        }
        if let Some(t) = self.to {
            if v.to != t {
                return false;
            }
        }
        if let Some(t) = self.tag {
            if v.tag as u8 != t {
                return false;
            }
        }
        if let Some((ns, idx)) = self.instance_pair {
            if !v.instance.contains_pair(ns, idx) {
                return false;
            }
        }
        if let Some(p) = &self.instance_prefix {
            if v.instance.0.len() < p.len() || v.instance.0[..p.len()] != p[..] {
                return false;
            }
        }
        true
    }

    pub fn involving_party(p: PartyId) -> (MatchRule, MatchRule) {
        (
            MatchRule { from: Some(p), ..Default::default() },
            MatchRule { to: Some(p), ..Default::default() },
        )
    }
}

/// Declarative scheduler configuration (serializable for experiment specs).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerSpec {
    /// Deliver in injection order.
    Fifo,
    /// Uniformly random among pending.
    Random,
    /// Hold back everything matching the rules for as long as the fairness
    /// cap allows; schedule the rest by `base`.
    Starve { rules: Vec<MatchRule>, base: BaseOrder },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BaseOrder {
    Fifo,
    Random,
}

pub struct Scheduler {
    spec: SchedulerSpec,
    rng: ChaCha12Rng,
}

impl Scheduler {
    pub fn new(spec: SchedulerSpec, rng: ChaCha12Rng) -> Self {
        Self { spec, rng }
    }

    /// Choose the index (into `pending`) of the next envelope to deliver.
    /// `pending` is never empty.
    pub fn pick(&mut self, pending: &[PendingView<'_>]) -> usize {
        debug_assert!(!pending.is_empty());
        match &self.spec {
            SchedulerSpec::Fifo => oldest(pending),
            SchedulerSpec::Random => self.rng.gen_range(0..pending.len()),
            SchedulerSpec::Starve { rules, base } => {
                let normal: Vec<usize> = (0..pending.len())
                    .filter(|&i| !rules.iter().any(|r| r.matches(&pending[i])))
                    .collect();
                match (normal.is_empty(), base) {
                    (true, _) => oldest(pending),
                    (false, BaseOrder::Fifo) => {
                        *normal.iter().max_by_key(|&&i| pending[i].age).unwrap()
                    }
                    (false, BaseOrder::Random) => normal[self.rng.gen_range(0..normal.len())],
                }
            }
        }
    }
}

fn oldest(pending: &[PendingView<'_>]) -> usize {
    // Highest age = injected earliest; ties broken by pool order, which the
    // runner keeps in injection order, so index 0 of max age is stable.
    let mut best = 0;
    for (i, v) in pending.iter().enumerate() {
        if v.age > pending[best].age {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn view(from: PartyId, to: PartyId, inst: &InstanceId, age: u64) -> PendingView<'_> {
        PendingView { from, to, instance: inst, tag: Tag::Echo, len: 8, age }
    }

    #[test]
    fn fifo_picks_the_oldest() {
        let i = InstanceId::root(1);
        let pending = vec![view(1, 2, &i, 3), view(2, 3, &i, 9), view(3, 1, &i, 1)];
        let mut s = Scheduler::new(SchedulerSpec::Fifo, ChaCha12Rng::seed_from_u64(0));
        assert_eq!(s.pick(&pending), 1);
    }

    #[test]
    fn starve_avoids_matches_until_forced() {
        let i1 = InstanceId::root(1).child2(2, 3);
        let i2 = InstanceId::root(1).child2(2, 4);
        let rule = MatchRule { instance_pair: Some((2, 3)), ..Default::default() };
        let mut s = Scheduler::new(
            SchedulerSpec::Starve { rules: vec![rule], base: BaseOrder::Fifo },
            ChaCha12Rng::seed_from_u64(0),
        );
        let pending = vec![view(1, 2, &i1, 9), view(2, 3, &i2, 1)];
        // The older envelope matches the starve rule: pick the other one.
        assert_eq!(s.pick(&pending), 1);
        // Only starved envelopes left: deliver the oldest of them.
        let pending = vec![view(1, 2, &i1, 9), view(2, 3, &i1, 12)];
        assert_eq!(s.pick(&pending), 1);
    }

    #[test]
    fn match_rules_compose_fields() {
        let i = InstanceId::root(5).child(1);
        let v = view(2, 4, &i, 0);
        assert!(MatchRule::default().matches(&v));
        assert!(MatchRule { from: Some(2), ..Default::default() }.matches(&v));
        assert!(!MatchRule { from: Some(3), ..Default::default() }.matches(&v));
        assert!(MatchRule { instance_prefix: Some(vec![5]), ..Default::default() }.matches(&v));
        assert!(!MatchRule { instance_prefix: Some(vec![5, 2]), ..Default::default() }.matches(&v));
        assert!(
            !MatchRule { from: Some(2), tag: Some(Tag::Send as u8), ..Default::default() }
                .matches(&v)
        );
    }

    #[test]
    fn random_is_seed_deterministic() {
        let i = InstanceId::root(1);
        let pending = vec![view(1, 2, &i, 0), view(2, 3, &i, 0), view(3, 1, &i, 0)];
        let picks1: Vec<usize> = {
            let mut s = Scheduler::new(SchedulerSpec::Random, ChaCha12Rng::seed_from_u64(9));
            (0..10).map(|_| s.pick(&pending)).collect()
        };
        let mut s = Scheduler::new(SchedulerSpec::Random, ChaCha12Rng::seed_from_u64(9));
        let picks2: Vec<usize> = (0..10).map(|_| s.pick(&pending)).collect();
        assert_eq!(picks1, picks2);
    }
}
