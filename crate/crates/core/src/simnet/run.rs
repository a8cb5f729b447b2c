//! The event loop: activation, scheduling, delivery, metering, transcripts.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::metrics::RunMetrics;
use super::rounds::RoundTracker;
use super::sched::{PendingView, Scheduler, SchedulerSpec};
use super::transcript::{EventRecord, Transcript};
use super::{Envelope, Out, Reactor, Step};
use crate::crypto::keys::PartyId;

#[derive(Clone, Debug)]
pub struct NetConfig {
    pub scheduler: SchedulerSpec,
    /// Seed for the scheduler's randomness (protocol randomness is derived
    /// from key material and payload hashes, not from the network RNG).
    pub seed: u64,
    /// Hard limit on delivered events; exceeding it is reported as a stall.
    pub step_cap: u64,
    /// No envelope may wait while this many newer deliveries happen.
    pub fairness_cap: u64,
    pub corrupt: BTreeSet<PartyId>,
    pub record_transcript: bool,
    /// Opaque descriptor copied into the transcript header.
    pub meta: Vec<u8>,
}

impl NetConfig {
    pub fn new(scheduler: SchedulerSpec, seed: u64) -> Self {
        Self {
            scheduler,
            seed,
            step_cap: 10_000_000,
            fairness_cap: 10_000,
            corrupt: BTreeSet::new(),
            record_transcript: false,
            meta: Vec::new(),
        }
    }

    pub fn with_corrupt(mut self, corrupt: impl IntoIterator<Item = PartyId>) -> Self {
        self.corrupt = corrupt.into_iter().collect();
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_transcript = true;
        self
    }
}

/// Liveness failure: the step cap was hit with work outstanding.
#[derive(Clone, Debug)]
pub struct StallReport {
    pub delivered: u64,
    pub pending: usize,
    pub honest_without_output: Vec<PartyId>,
}

#[derive(Debug)]
pub struct RunReport {
    /// First output of each party, with the delivery seq that produced it.
    /// Corrupt parties' outputs are not recorded.
    pub outputs: BTreeMap<PartyId, (Out, u64)>,
    pub metrics: RunMetrics,
    pub transcript: Option<Transcript>,
    pub stall: Option<StallReport>,
}

impl RunReport {
    /// All honest parties produced an output.
    pub fn all_output(&self, n: usize, corrupt: &BTreeSet<PartyId>) -> bool {
        (1..=n as PartyId).filter(|p| !corrupt.contains(p)).all(|p| self.outputs.contains_key(&p))
    }
}

/// Cross-party inspection hook, called after every delivery. Tests use this
/// to assert instant-in-time properties that no single reactor can see.
pub struct ProbeCtx<'a> {
    pub seq: u64,
    pub delivered: &'a Envelope,
    pub reactors: &'a [Box<dyn Reactor>],
    pub outputs: &'a BTreeMap<PartyId, (Out, u64)>,
}

struct Pending {
    env: Envelope,
    /// Value of the delivery counter when this envelope was injected.
    injected_at: u64,
    round_label: u32,
}

/// Drive `reactors` (index p-1 = party p) to quiescence or the step cap.
pub fn run(reactors: &mut [Box<dyn Reactor>], cfg: &NetConfig) -> RunReport {
    run_with_probe(reactors, cfg, &mut |_| {})
}

pub fn run_with_probe(
    reactors: &mut [Box<dyn Reactor>],
    cfg: &NetConfig,
    probe: &mut dyn FnMut(ProbeCtx<'_>),
) -> RunReport {
    let n = reactors.len();
    let mut scheduler = Scheduler::new(cfg.scheduler.clone(), ChaCha12Rng::seed_from_u64(cfg.seed));
    let mut rounds = RoundTracker::new(n);
    let mut metrics = RunMetrics::default();
    let mut outputs: BTreeMap<PartyId, (Out, u64)> = BTreeMap::new();
    let mut pool: Vec<Pending> = Vec::new();
    let mut events: Vec<EventRecord> = Vec::new();
    let mut delivered: u64 = 0;

    let absorb = |step: Step,
                      party: PartyId,
                      seq: u64,
                      pool: &mut Vec<Pending>,
                      outputs: &mut BTreeMap<PartyId, (Out, u64)>,
                      metrics: &mut RunMetrics,
                      rounds: &mut RoundTracker| {
        let honest = !cfg.corrupt.contains(&party);
        for env in step.out {
            assert_eq!(env.from, party, "reactors cannot spoof the sender field");
            assert!(env.to >= 1 && env.to as usize <= n, "recipient out of range");
            let label = rounds.on_inject(party, honest);
            if honest {
                metrics.record_send(&env.instance, env.wire_len());
            }
            pool.push(Pending { env, injected_at: delivered_snapshot(seq), round_label: label });
        }
        if let Some(out) = step.output {
            if honest {
                outputs.entry(party).or_insert((out, seq));
            }
        }
    };

    // Activation pass, in party order.
    for p in 1..=n as PartyId {
        let step = reactors[p as usize - 1].on_activate();
        absorb(step, p, 0, &mut pool, &mut outputs, &mut metrics, &mut rounds);
    }

    let mut stall = None;
    while !pool.is_empty() {
        if delivered >= cfg.step_cap {
            stall = Some(StallReport {
                delivered,
                pending: pool.len(),
                honest_without_output: (1..=n as PartyId)
                    .filter(|p| !cfg.corrupt.contains(p) && !outputs.contains_key(p))
                    .collect(),
            });
            break;
        }

        // Fairness first: any envelope at or past the cap is delivered
        // oldest-first, regardless of the scheduler's wishes.
        let idx = {
            let mut forced: Option<usize> = None;
            for (i, p) in pool.iter().enumerate() {
                if delivered - p.injected_at >= cfg.fairness_cap {
                    match forced {
                        Some(j) if pool[j].injected_at <= p.injected_at => {}
                        _ => forced = Some(i),
                    }
                }
            }
            match forced {
                Some(i) => i,
                None => {
                    let views: Vec<PendingView<'_>> = pool
                        .iter()
                        .map(|p| PendingView {
                            from: p.env.from,
                            to: p.env.to,
                            instance: &p.env.instance,
                            tag: p.env.tag,
                            len: p.env.wire_len(),
                            age: delivered - p.injected_at,
                        })
                        .collect();
                    scheduler.pick(&views)
                }
            }
        };

        let Pending { env, round_label, .. } = pool.remove(idx);
        delivered += 1;
        rounds.on_deliver(env.to, round_label);
        let step = reactors[env.to as usize - 1].on_envelope(&env);
        absorb(step, env.to, delivered, &mut pool, &mut outputs, &mut metrics, &mut rounds);
        if cfg.record_transcript {
            events.push(EventRecord { seq: delivered, env: env.clone() });
        }
        probe(ProbeCtx { seq: delivered, delivered: &env, reactors, outputs: &outputs });
    }

    metrics.rounds = rounds.honest_max();
    metrics.events = delivered;
    RunReport {
        outputs,
        metrics,
        transcript: cfg.record_transcript.then(|| Transcript {
            meta: cfg.meta.clone(),
            seed: cfg.seed,
            events,
        }),
        stall,
    }
}

// `absorb` runs both at activation (seq 0) and during deliveries; the
// injection bookkeeping needs the *current* delivery counter, which the
// closure receives through its `seq` argument (equal to `delivered`).
fn delivered_snapshot(seq: u64) -> u64 {
    seq
}
