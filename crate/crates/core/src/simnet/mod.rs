//! Deterministic discrete-event network simulation.
//!
//! Protocol logic is written as *reactors*: state machines that receive one
//! envelope at a time and emit envelopes and at most one output. The runner
//! owns a single pending-message pool; a scheduler (possibly adversarial)
//! picks the next envelope to deliver. Determinism is total: same seed and
//! configuration, same event stream, byte for byte.
//!
//! Model guarantees enforced here rather than by convention:
//!
//! * envelopes between honest parties are never dropped or modified, only
//!   reordered;
//! * the scheduler sees source, destination, instance path, tag and length
//!   of honest traffic — never payloads;
//! * no envelope can be deferred past a fairness cap of newer deliveries;
//! * corruptions are static: the corrupt set is fixed before the run.

pub mod metrics;
pub mod rounds;
pub mod run;
pub mod sched;
pub mod transcript;

use std::any::Any;
use std::fmt;

use crate::crypto::keys::PartyId;
use crate::wire::{Decode, Encode, Reader, WireError, WireResult, Writer};

/// Hierarchical protocol-instance path, e.g. `election/coin/avss[3]`.
/// Composite protocols append namespace and index segments for children.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct InstanceId(pub Vec<u32>);

impl InstanceId {
    pub fn root(v: u32) -> Self {
        InstanceId(vec![v])
    }

    pub fn child(&self, seg: u32) -> Self {
        let mut v = self.0.clone();
        v.push(seg);
        InstanceId(v)
    }

    pub fn child2(&self, ns: u32, idx: u32) -> Self {
        let mut v = self.0.clone();
        v.push(ns);
        v.push(idx);
        InstanceId(v)
    }

    pub fn starts_with(&self, prefix: &InstanceId) -> bool {
        self.0.len() >= prefix.0.len() && self.0[..prefix.0.len()] == prefix.0[..]
    }

    /// Segment after the given prefix, if any.
    pub fn seg_after(&self, prefix_len: usize) -> Option<u32> {
        self.0.get(prefix_len).copied()
    }

    pub fn contains_pair(&self, ns: u32, idx: u32) -> bool {
        self.0.windows(2).any(|w| w == [ns, idx])
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl Encode for InstanceId {
    fn encode_into(&self, w: &mut Writer) {
        w.u8(self.0.len() as u8);
        for s in &self.0 {
            w.u32(*s);
        }
    }
}

impl Decode for InstanceId {
    fn decode_from(r: &mut Reader<'_>) -> WireResult<InstanceId> {
        let n = r.u8()? as usize;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(r.u32()?);
        }
        Ok(InstanceId(v))
    }
}

/// Child namespaces used by composite protocols when extending instance
/// paths. Kept global so transcript renderings are unambiguous.
pub mod ns {
    /// Seeding child j of a coin.
    pub const COIN_SEEDING: u32 = 1;
    /// Secret-sharing child j of a coin.
    pub const COIN_AVSS: u32 = 2;
    /// The coin child of an election.
    pub const ELECTION_COIN: u32 = 3;
    /// Broadcast child j of an election.
    pub const ELECTION_RBC: u32 = 4;
    /// The binary-agreement child of an election.
    pub const ELECTION_ABA: u32 = 5;
    /// Per-round coin child of binary agreement.
    pub const ABA_COIN: u32 = 6;
}

/// Message type. One flat enum across all protocols; instance paths do the
/// namespacing, tags identify the handler within a protocol.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
#[repr(u8)]
pub enum Tag {
    // Reliable broadcast.
    Send = 1,
    Echo = 2,
    Ready = 3,
    // Verifiable secret sharing (share phase).
    KeyShare = 10,
    Stored = 11,
    Cipher = 12,
    CipherEcho = 13,
    CipherReady = 14,
    // Verifiable secret sharing (reconstruct phase).
    KeyRec = 15,
    Key = 16,
    // Seeding.
    PvssScript = 20,
    LockAggPvss = 21,
    ConfirmAggPvss = 22,
    CommitAggPvss = 23,
    SeedShare = 24,
    Seed = 25,
    SeedEcho = 26,
    SeedReady = 27,
    // Common coin.
    Lock = 30,
    Confirm = 31,
    Commit = 32,
    RecRequest = 33,
    Candidate = 34,
    // Binary agreement.
    Val = 40,
    Aux = 41,
    Conf = 42,
    Finish = 43,
    // Election.
    Vote = 50,
}

impl Tag {
    pub fn from_u8(v: u8) -> Option<Tag> {
        use Tag::*;
        Some(match v {
            1 => Send,
            2 => Echo,
            3 => Ready,
            10 => KeyShare,
            11 => Stored,
            12 => Cipher,
            13 => CipherEcho,
            14 => CipherReady,
            15 => KeyRec,
            16 => Key,
            20 => PvssScript,
            21 => LockAggPvss,
            22 => ConfirmAggPvss,
            23 => CommitAggPvss,
            24 => SeedShare,
            25 => Seed,
            26 => SeedEcho,
            27 => SeedReady,
            30 => Lock,
            31 => Confirm,
            32 => Commit,
            33 => RecRequest,
            34 => Candidate,
            40 => Val,
            41 => Aux,
            42 => Conf,
            43 => Finish,
            50 => Vote,
            _ => return None,
        })
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A message in flight.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Envelope {
    pub from: PartyId,
    pub to: PartyId,
    pub instance: InstanceId,
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl Envelope {
    /// Metered size: canonical header plus payload.
    pub fn wire_len(&self) -> u64 {
        // from(2) + to(2) + path(1 + 4*len) + tag(1) + payload(4 + len)
        (2 + 2 + 1 + 4 * self.instance.0.len() + 1 + 4 + self.payload.len()) as u64
    }
}

impl Encode for Envelope {
    fn encode_into(&self, w: &mut Writer) {
        w.u16(self.from);
        w.u16(self.to);
        self.instance.encode_into(w);
        w.u8(self.tag as u8);
        w.bytes(&self.payload);
    }
}

impl Decode for Envelope {
    fn decode_from(r: &mut Reader<'_>) -> WireResult<Envelope> {
        let from = r.u16()?;
        let to = r.u16()?;
        let instance = InstanceId::decode_from(r)?;
        let tag = Tag::from_u8(r.u8()?).ok_or(WireError::Invalid("unknown tag"))?;
        let payload = r.bytes()?;
        Ok(Envelope { from, to, instance, tag, payload })
    }
}

/// What a reactor hands back after processing one event.
#[derive(Default)]
pub struct Step {
    pub out: Vec<Envelope>,
    pub output: Option<Out>,
}

impl Step {
    pub fn none() -> Step {
        Step::default()
    }

    pub fn send(out: Vec<Envelope>) -> Step {
        Step { out, output: None }
    }

    pub fn merge(&mut self, other: Step) {
        self.out.extend(other.out);
        if other.output.is_some() {
            debug_assert!(self.output.is_none(), "two outputs in one step");
            self.output = other.output;
        }
    }
}

/// Top-level protocol outputs, one variant per protocol family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Out {
    /// Reliable broadcast delivered a value.
    Delivered(Vec<u8>),
    /// Share phase finished: digest, ciphertext, optional local shares.
    AvssShared(crate::avss::ShOutput),
    /// Reconstruction finished with the dealer's secret.
    AvssSecret(Vec<u8>),
    /// Seeding finished with the common seed bytes.
    Seeded(Vec<u8>),
    /// Coin flipped a bit.
    CoinBit(u8),
    /// Coin (election variant) produced the strongest candidate it saw.
    CoinMax(crate::coin::RndMax),
    /// Binary agreement decided a bit.
    Decided(u8),
    /// Election elected a party.
    Elected(PartyId),
}

impl Out {
    pub fn as_bit(&self) -> Option<u8> {
        match self {
            Out::CoinBit(b) | Out::Decided(b) => Some(*b),
            _ => None,
        }
    }
}

/// One party's protocol state machine. `on_activate` runs once at startup
/// (inputs are provided at construction); afterwards the runner feeds
/// envelopes addressed to this party. Reactors must never block: every wait
/// is expressed by buffering and re-checking on later events.
pub trait Reactor {
    fn on_activate(&mut self) -> Step;
    fn on_envelope(&mut self, env: &Envelope) -> Step;
    /// Introspection hook for cross-party probes in tests.
    fn as_any(&self) -> &dyn Any;
}

/// Broadcast helper: one envelope per party, self included (self-delivery
/// goes through the scheduler like any other message, and counts toward
/// message/bit totals exactly as the complexity bounds do).
pub fn multicast(
    n: usize,
    from: PartyId,
    instance: &InstanceId,
    tag: Tag,
    payload: Vec<u8>,
) -> Vec<Envelope> {
    (1..=n as PartyId)
        .map(|to| Envelope { from, to, instance: instance.clone(), tag, payload: payload.clone() })
        .collect()
}

pub fn unicast(from: PartyId, to: PartyId, instance: &InstanceId, tag: Tag, payload: Vec<u8>) -> Vec<Envelope> {
    vec![Envelope { from, to, instance: instance.clone(), tag, payload }]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_paths_nest_and_match() {
        let root = InstanceId::root(7);
        let child = root.child2(ns::COIN_AVSS, 3);
        assert!(child.starts_with(&root));
        assert!(!root.starts_with(&child));
        assert_eq!(child.seg_after(1), Some(ns::COIN_AVSS));
        assert!(child.contains_pair(ns::COIN_AVSS, 3));
        assert!(!child.contains_pair(ns::COIN_AVSS, 2));
        assert_eq!(child.to_string(), "7.2.3");
    }

    #[test]
    fn envelope_round_trips_and_meters() {
        let e = Envelope {
            from: 1,
            to: 4,
            instance: InstanceId::root(9).child(2),
            tag: Tag::Echo,
            payload: vec![1, 2, 3],
        };
        let enc = e.encode();
        assert_eq!(Envelope::decode(&enc).unwrap(), e);
        assert_eq!(e.wire_len(), (2 + 2 + 1 + 8 + 1 + 4 + 3) as u64);
        assert_eq!(enc.len() as u64, e.wire_len());
    }

    #[test]
    fn unknown_tags_fail_decode() {
        let mut w = Writer::new();
        w.u16(1);
        w.u16(2);
        InstanceId::root(0).encode_into(&mut w);
        w.u8(99);
        w.bytes(b"");
        assert!(Envelope::decode(&w.finish()).is_err());
    }

    #[test]
    fn multicast_includes_self() {
        let out = multicast(4, 2, &InstanceId::root(1), Tag::Send, vec![7]);
        assert_eq!(out.len(), 4);
        assert!(out.iter().any(|e| e.to == 2));
        assert!(out.iter().all(|e| e.from == 2 && e.payload == vec![7]));
    }

    #[test]
    fn all_tags_round_trip() {
        for v in 0..=255u8 {
            if let Some(t) = Tag::from_u8(v) {
                assert_eq!(t as u8, v);
            }
        }
        assert_eq!(Tag::from_u8(Tag::Vote as u8), Some(Tag::Vote));
    }
}
