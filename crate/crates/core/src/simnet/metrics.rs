//! Run metrics: message and bit counts for honest senders, virtual rounds,
//! and a per-instance breakdown. Metrics form a monoid so per-trial values
//! aggregate associatively across worker threads.

use std::collections::BTreeMap;

use super::InstanceId;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub msgs: u64,
    pub bits: u64,
}

impl Counters {
    pub fn add(&mut self, other: &Counters) {
        self.msgs += other.msgs;
        self.bits += other.bits;
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunMetrics {
    /// Envelopes sent by honest parties (any recipient, self included).
    pub total: Counters,
    /// Breakdown keyed by the full instance path of each envelope. The sum
    /// over all entries equals `total` by construction.
    pub per_instance: BTreeMap<InstanceId, Counters>,
    /// Maximum virtual-round label over honest-sent envelopes.
    pub rounds: u32,
    /// Delivered events (all senders).
    pub events: u64,
}

impl RunMetrics {
    pub fn record_send(&mut self, instance: &InstanceId, wire_len: u64) {
        self.total.msgs += 1;
        self.total.bits += 8 * wire_len;
        let c = self.per_instance.entry(instance.clone()).or_default();
        c.msgs += 1;
        c.bits += 8 * wire_len;
    }

    /// Aggregate counters for every instance path starting with `prefix`.
    pub fn instance_rollup(&self, prefix: &InstanceId) -> Counters {
        let mut out = Counters::default();
        for (k, v) in &self.per_instance {
            if k.starts_with(prefix) {
                out.add(v);
            }
        }
        out
    }

    pub fn merge(&mut self, other: &RunMetrics) {
        self.total.add(&other.total);
        for (k, v) in &other.per_instance {
            self.per_instance.entry(k.clone()).or_default().add(v);
        }
        self.rounds = self.rounds.max(other.rounds);
        self.events += other.events;
    }
}
