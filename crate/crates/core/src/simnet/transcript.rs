//! Execution transcripts: the full delivery stream of a run in a canonical
//! binary form, with a human-readable rendering and a divergence check for
//! replays. Two runs of the same configuration and seed must produce
//! byte-identical transcripts.

use super::{Envelope, InstanceId};
use crate::wire::{Decode, Encode, Reader, WireError, WireResult, Writer};

pub const FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"BBTX";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventRecord {
    /// 1-based delivery sequence number.
    pub seq: u64,
    pub env: Envelope,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    /// Opaque run descriptor (the harness stores its JSON spec here so a
    /// transcript is self-contained for replay).
    pub meta: Vec<u8>,
    pub seed: u64,
    pub events: Vec<EventRecord>,
}

impl Encode for Transcript {
    fn encode_into(&self, w: &mut Writer) {
        w.raw(MAGIC);
        w.u16(FORMAT_VERSION);
        w.u64(self.seed);
        w.bytes(&self.meta);
        w.list(&self.events, |w, e| {
            w.u64(e.seq);
            e.env.encode_into(w);
        });
    }
}

impl Decode for Transcript {
    fn decode_from(r: &mut Reader<'_>) -> WireResult<Transcript> {
        if r.raw(4)? != MAGIC {
            return Err(WireError::Invalid("not a transcript file"));
        }
        if r.u16()? != FORMAT_VERSION {
            return Err(WireError::Invalid("unsupported transcript version"));
        }
        let seed = r.u64()?;
        let meta = r.bytes()?;
        let events = r.list(|r| {
            let seq = r.u64()?;
            let env = Envelope::decode_from(r)?;
            Ok(EventRecord { seq, env })
        })?;
        Ok(Transcript { meta, seed, events })
    }
}

/// First difference between a recorded transcript and a re-execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Divergence {
    Meta,
    Seed { recorded: u64, replayed: u64 },
    /// Streams agree up to `matching` events, then one is shorter.
    Length { recorded: usize, replayed: usize },
    /// Event `seq` differs; `field` names the first differing field.
    Event { seq: u64, field: &'static str },
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Divergence::Meta => write!(f, "run descriptors differ"),
            Divergence::Seed { recorded, replayed } => {
                write!(f, "seeds differ: recorded {recorded}, replayed {replayed}")
            }
            Divergence::Length { recorded, replayed } => write!(
                f,
                "event streams differ in length: recorded {recorded}, replayed {replayed}"
            ),
            Divergence::Event { seq, field } => {
                write!(f, "event {seq} differs in {field}")
            }
        }
    }
}

pub fn compare(recorded: &Transcript, replayed: &Transcript) -> Option<Divergence> {
    if recorded.meta != replayed.meta {
        return Some(Divergence::Meta);
    }
    if recorded.seed != replayed.seed {
        return Some(Divergence::Seed { recorded: recorded.seed, replayed: replayed.seed });
    }
    for (a, b) in recorded.events.iter().zip(replayed.events.iter()) {
        if a != b {
            let field = if a.seq != b.seq {
                "seq"
            } else if a.env.from != b.env.from {
                "from"
            } else if a.env.to != b.env.to {
                "to"
            } else if a.env.instance != b.env.instance {
                "instance"
            } else if a.env.tag != b.env.tag {
                "tag"
            } else {
                "payload"
            };
            return Some(Divergence::Event { seq: a.seq, field });
        }
    }
    if recorded.events.len() != replayed.events.len() {
        return Some(Divergence::Length {
            recorded: recorded.events.len(),
            replayed: replayed.events.len(),
        });
    }
    None
}

/// Render one event per line: `seq from->to instance tag payload-bytes`.
pub fn render_text(t: &Transcript) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "# transcript v{FORMAT_VERSION} seed={} events={}", t.seed, t.events.len());
    if let Ok(meta) = std::str::from_utf8(&t.meta) {
        if !meta.is_empty() {
            let _ = writeln!(s, "# {meta}");
        }
    }
    for e in &t.events {
        let _ = writeln!(
            s,
            "{:>8} {:>3} -> {:<3} {:<16} {:<14} {}B",
            e.seq,
            e.env.from,
            e.env.to,
            e.env.instance.to_string(),
            e.env.tag.to_string(),
            e.env.payload.len()
        );
    }
    s
}

#[allow(dead_code)]
fn _instance_display(i: &InstanceId) -> String {
    i.to_string()
}
