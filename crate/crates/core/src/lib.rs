//! Asynchronous BFT building blocks that need no private setup, plus a
//! deterministic simulator to run and measure them.
//!
//! The stack, bottom to top:
//!
//! * [`crypto`] — fields, groups, Shamir sharing, two-generator polynomial
//!   commitments, signatures, a VRF, and DLEQ proofs, in a fast `mock` mode
//!   and a computationally real mode.
//! * [`pvss`] — aggregatable publicly verifiable secret sharing with
//!   weight-attestation bookkeeping.
//! * [`rbc`] — Bracha reliable broadcast.
//! * [`avss`] — asynchronous verifiable secret sharing (share + reconstruct)
//!   with signature-certified ciphertext dissemination.
//! * [`seeding`] — leader-aggregated PVSS that equips every party with a
//!   fresh, unpredictable seed.
//! * [`coin`] — a common coin from per-party VRF evaluations sealed inside
//!   secret sharings; genesis-nonce and self-seeding variants.
//! * [`aba`] — asynchronous binary agreement driven by the coin.
//! * [`election`] — committee leader election on top of broadcast, the coin
//!   machinery, and binary agreement.
//! * [`simnet`] — deterministic discrete-event network: schedulers, static
//!   corruptions, metrics, transcripts, virtual-round accounting.
//! * [`harness`] — experiment configs, trial drivers, complexity fits, and
//!   the CLI entry points (`run`, `fit`, `replay`).
//!
//! Every runnable capability has a worked example under `examples/`; start
//! with `cargo run --example avss_share_reconstruct`.

pub mod aba;
pub mod avss;
pub mod byz;
pub mod coin;
pub mod crypto;
pub mod election;
pub mod harness;
pub mod pvss;
pub mod rbc;
pub mod seeding;
pub mod simnet;
pub mod wire;

pub use crypto::keys::{Env, PartyId};
pub use crypto::{Mode, Suite};
