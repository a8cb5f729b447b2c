//! Experiment driver: named protocol networks, parallel trial sweeps,
//! summary statistics, log-log complexity fits, transcript replay, and the
//! named presets that gate a release.
//!
//! A sweep is described by an [`ExperimentConfig`]; each (size, trial) pair
//! becomes a [`RunSpec`] — a fully self-contained run descriptor that is
//! also embedded as JSON in every recorded transcript, so `replay` can
//! rebuild the exact network from the file alone. Trials fan out across a
//! thread pool; per-trial seeds derive from the master seed by index, and
//! aggregation folds results in index order, so summaries are byte-stable
//! across thread schedules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aba::{Aba, CoinSource};
use crate::avss::{AvssRec, AvssSh, CipherMode, ShOutput};
use crate::byz::{
    scripted_dealer, AbaContradictor, DealerScript, SeedEquivLeader, SilentParty, VoteForger,
};
use crate::coin::{Coin, CoinGoal, SeedMode};
use crate::crypto::keys::{gen_parties, Env, KeyStore, PartyId};
use crate::crypto::Suite;
use crate::election::Election;
use crate::rbc::Rbc;
use crate::seeding::Seeding;
use crate::simnet::run::{run, run_with_probe, NetConfig, RunReport};
use crate::simnet::sched::{BaseOrder, MatchRule, SchedulerSpec};
use crate::simnet::transcript::{compare, Divergence, Transcript};
use crate::simnet::{InstanceId, Out, Reactor};
use crate::wire::{Decode, Encode};

#[derive(thiserror::Error, Debug)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fit needs at least 3 distinct sizes, got {0}")]
    FitPoints(usize),
    #[error("transcript integrity: {0}")]
    Integrity(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Rbc,
    Avss,
    Seeding,
    Coin,
    Aba,
    Election,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Rbc => "rbc",
            Protocol::Avss => "avss",
            Protocol::Seeding => "seeding",
            Protocol::Coin => "coin",
            Protocol::Aba => "aba",
            Protocol::Election => "election",
        }
    }

    fn instance(self) -> InstanceId {
        InstanceId::root(match self {
            Protocol::Rbc => 1,
            Protocol::Avss => 2,
            Protocol::Seeding => 3,
            Protocol::Coin => 4,
            Protocol::Election => 5,
            Protocol::Aba => 6,
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rbc" => Ok(Protocol::Rbc),
            "avss" => Ok(Protocol::Avss),
            "seeding" => Ok(Protocol::Seeding),
            "coin" => Ok(Protocol::Coin),
            "aba" => Ok(Protocol::Aba),
            "election" => Ok(Protocol::Election),
            other => Err(HarnessError::Config(format!("unknown protocol `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CryptoMode {
    #[default]
    Mock,
    Real,
}

/// Where composite protocols get their coin seeds from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoinSetup {
    /// A public per-run nonce stands in for grown seeds.
    #[default]
    Genesis,
    /// Seeds are grown by per-party seeding children (the full protocol).
    Seeding,
    /// Agreement only: a perfect, messageless shared coin for isolating
    /// round logic.
    Fixture,
}

/// Which scripted misbehavior, if any, runs at the corrupt indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdversarySpec {
    #[default]
    None,
    /// `count` parties (the top indices) crash from birth.
    Silent { count: usize },
    /// The sharing dealer (party n) plays the named [`DealerScript`].
    Dealer { script: String },
    /// The seeding leader (party 1) equivocates between two aggregates.
    EquivLeader { amplify: bool },
    /// Party n floods binary agreement with contradictory votes.
    Contradictor,
    /// Party n mails fabricated election votes scavenged from broadcasts.
    VoteForger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    /// Party counts to sweep.
    pub n: Vec<usize>,
    /// Fault budget; `None` applies ⌊(n−1)/3⌋ per swept size.
    #[serde(default)]
    pub f: Option<usize>,
    #[serde(default)]
    pub crypto: CryptoMode,
    #[serde(default)]
    pub coin: CoinSetup,
    pub scheduler: SchedulerSpec,
    #[serde(default)]
    pub adversary: AdversarySpec,
    pub trials: u64,
    pub master_seed: u64,
    /// Record the first trial of each size as a transcript.
    #[serde(default)]
    pub record_transcripts: bool,
}

impl ExperimentConfig {
    pub fn f_for(&self, n: usize) -> usize {
        self.f.unwrap_or((n - 1) / 3)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n.is_empty() {
            return Err(HarnessError::Config("n: at least one size required".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials: must be positive".into()));
        }
        for &n in &self.n {
            let f = self.f_for(n);
            if n < 3 * f + 1 {
                return Err(HarnessError::Config(format!("n: {n} < 3f+1 with f = {f}")));
            }
            spec_check(&RunSpec {
                protocol: self.protocol,
                n,
                f,
                crypto: self.crypto,
                coin: self.coin,
                scheduler: self.scheduler.clone(),
                adversary: self.adversary.clone(),
                seed: 0,
            })?;
        }
        Ok(())
    }
}

/// One fully described run: everything needed to rebuild and re-execute it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSpec {
    pub protocol: Protocol,
    pub n: usize,
    pub f: usize,
    pub crypto: CryptoMode,
    pub coin: CoinSetup,
    pub scheduler: SchedulerSpec,
    pub adversary: AdversarySpec,
    /// Trial seed: drives the scheduler and every protocol-level salt.
    pub seed: u64,
}

fn spec_check(spec: &RunSpec) -> Result<(), HarnessError> {
    let bad = |msg: &str| Err(HarnessError::Config(msg.into()));
    match (&spec.adversary, spec.protocol) {
        (AdversarySpec::None, _) => {}
        (AdversarySpec::Silent { count }, _) => {
            if *count > spec.f {
                return bad("adversary: silent count exceeds the fault budget f");
            }
        }
        (AdversarySpec::Dealer { script }, Protocol::Avss) => {
            if !DealerScript::ALL.iter().any(|s| s.name() == script) {
                return Err(HarnessError::Config(format!(
                    "adversary: unknown dealer script `{script}`"
                )));
            }
        }
        (AdversarySpec::EquivLeader { .. }, Protocol::Seeding) => {}
        (AdversarySpec::Contradictor, Protocol::Aba) => {}
        (AdversarySpec::VoteForger, Protocol::Election) => {}
        (a, p) => {
            return Err(HarnessError::Config(format!(
                "adversary: {a:?} does not apply to protocol {}",
                p.name()
            )));
        }
    }
    if spec.coin == CoinSetup::Fixture && spec.protocol != Protocol::Aba {
        return bad("coin: the fixture coin applies to binary agreement only");
    }
    if spec.adversary != AdversarySpec::None && spec.f == 0 {
        return bad("adversary: requires f >= 1");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Setting and per-trial network construction
// ---------------------------------------------------------------------------

/// Key material shared by every trial of one (crypto, n, f) setting.
pub struct Setting {
    pub env: Arc<Env>,
    pub keys: Vec<Arc<KeyStore>>,
}

pub fn setting(crypto: CryptoMode, n: usize, f: usize) -> Setting {
    setting_from(
        match crypto {
            CryptoMode::Mock => Suite::mock(),
            CryptoMode::Real => Suite::real(),
        },
        n,
        f,
        b"harness-v1",
    )
}

pub fn setting_from(suite: Suite, n: usize, f: usize, tag: &[u8]) -> Setting {
    let suite = Arc::new(suite);
    let (keys, registry) = gen_parties(&suite, n, tag);
    let env = Env::new(suite, Arc::new(registry), f);
    Setting { env, keys: keys.into_iter().map(Arc::new).collect() }
}

/// splitmix64: the standard 64-bit finalizer, used to spread trial indices
/// into independent seeds.
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn trial_seed(master: u64, n: usize, trial: u64) -> u64 {
    splitmix(splitmix(master ^ (n as u64).rotate_left(48)) ^ trial)
}

fn mix(seed: u64, salt: u64) -> u64 {
    splitmix(seed ^ salt)
}

/// Deterministic per-trial payload of suite-width λ bytes.
fn trial_secret(suite: &Suite, seed: u64) -> Vec<u8> {
    let mut v = suite.hash("trial-secret", &[&seed.to_be_bytes()]);
    v.truncate(suite.lambda.max(1));
    v
}

fn seed_mode(spec: &RunSpec) -> SeedMode {
    match spec.coin {
        CoinSetup::Genesis | CoinSetup::Fixture => {
            SeedMode::Genesis(spec.seed.to_be_bytes().to_vec())
        }
        CoinSetup::Seeding => SeedMode::Grown,
    }
}

fn corrupt_set(spec: &RunSpec) -> BTreeSet<PartyId> {
    let n = spec.n as PartyId;
    match &spec.adversary {
        AdversarySpec::None => BTreeSet::new(),
        AdversarySpec::Silent { count } => (n - *count as PartyId + 1..=n).collect(),
        AdversarySpec::Dealer { .. }
        | AdversarySpec::Contradictor
        | AdversarySpec::VoteForger => [n].into(),
        AdversarySpec::EquivLeader { .. } => [1].into(),
    }
}

/// The party each one-sided protocol pivots on: the broadcast sender, the
/// sharing dealer, the seeding leader. Honest by default (party 1); the
/// scripted dealer convention puts a corrupt dealer at party n instead.
fn pivot(spec: &RunSpec) -> PartyId {
    match (&spec.adversary, spec.protocol) {
        (AdversarySpec::Dealer { .. }, Protocol::Avss) => spec.n as PartyId,
        _ => 1,
    }
}

pub fn build_net(
    st: &Setting,
    spec: &RunSpec,
) -> Result<(Vec<Box<dyn Reactor>>, BTreeSet<PartyId>), HarnessError> {
    spec_check(spec)?;
    if st.env.n != spec.n || st.env.f != spec.f {
        return Err(HarnessError::Config("setting does not match the run spec".into()));
    }
    let env = &st.env;
    let inst = spec.protocol.instance();
    let corrupt = corrupt_set(spec);
    let pivot = pivot(spec);
    let secret = trial_secret(&env.suite, spec.seed);

    let reactors = st
        .keys
        .iter()
        .map(|ks| -> Result<Box<dyn Reactor>, HarnessError> {
            let p = ks.party;
            if corrupt.contains(&p) {
                return Ok(match &spec.adversary {
                    AdversarySpec::Silent { .. } => Box::new(SilentParty),
                    AdversarySpec::Dealer { script } => {
                        let script = *DealerScript::ALL
                            .iter()
                            .find(|s| s.name() == script)
                            .expect("validated above");
                        scripted_dealer(
                            env,
                            ks,
                            &inst,
                            CipherMode::RoXor,
                            secret.clone(),
                            script,
                            spec.seed,
                        )
                    }
                    AdversarySpec::EquivLeader { amplify } => {
                        Box::new(SeedEquivLeader::new(env.clone(), ks.clone(), inst.clone(), *amplify))
                    }
                    AdversarySpec::Contradictor => {
                        Box::new(AbaContradictor::new(env.clone(), ks.clone(), inst.clone(), 4))
                    }
                    AdversarySpec::VoteForger => {
                        Box::new(VoteForger::new(env.clone(), ks.clone(), inst.clone()))
                    }
                    AdversarySpec::None => unreachable!("empty corrupt set"),
                });
            }
            let salt = mix(spec.seed, p as u64);
            Ok(match spec.protocol {
                Protocol::Rbc => Box::new(
                    Rbc::new(
                        env.clone(),
                        inst.clone(),
                        p,
                        pivot,
                        (p == pivot).then(|| secret.clone()),
                    )
                    .expect("arity by construction"),
                ),
                Protocol::Avss => Box::new(
                    AvssSh::new(
                        env.clone(),
                        ks.clone(),
                        inst.clone(),
                        pivot,
                        (p == pivot).then(|| secret.clone()),
                        CipherMode::RoXor,
                        mix(spec.seed, 0xDEA1),
                    )
                    .expect("arity by construction"),
                ),
                Protocol::Seeding => {
                    Box::new(Seeding::new(env.clone(), ks.clone(), inst.clone(), pivot, salt))
                }
                Protocol::Coin => Box::new(
                    Coin::new(env.clone(), ks.clone(), inst.clone(), seed_mode(spec), CoinGoal::Bit, salt)
                        .expect("nonce non-empty"),
                ),
                Protocol::Aba => {
                    let input = (mix(spec.seed, 0xAB0 + p as u64) & 1) as u8;
                    let source = match spec.coin {
                        CoinSetup::Fixture => CoinSource::Fixture(spec.seed),
                        _ => CoinSource::Protocol(seed_mode(spec)),
                    };
                    Box::new(
                        Aba::new(env.clone(), ks.clone(), inst.clone(), input, source, salt)
                            .expect("bit input"),
                    )
                }
                Protocol::Election => Box::new(
                    Election::new(env.clone(), ks.clone(), inst.clone(), seed_mode(spec), salt)
                        .expect("nonce non-empty"),
                ),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((reactors, corrupt))
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

/// Per-trial signals extracted from a finished run.
#[derive(Clone, Debug, Default)]
pub struct TrialStats {
    /// Every honest party produced an output.
    pub terminated: bool,
    /// Terminated and all honest outputs are the same value.
    pub agreed: bool,
    pub msgs: u64,
    pub bits: u64,
    pub rounds: u32,
    /// Coin runs: the common bit, when agreed.
    pub coin_bit: Option<u8>,
    /// Agreement runs: the decided bit, when agreed.
    pub decided: Option<u8>,
    /// Agreement runs: max coin invocations any honest party needed.
    pub coin_rounds: Option<u32>,
    /// Election runs: the elected index, when agreed.
    pub elected: Option<PartyId>,
    /// Election runs: whether the vote path (rather than the fallback
    /// index) produced the output.
    pub vote_path: Option<bool>,
}

pub struct Trial {
    pub report: RunReport,
    pub stats: TrialStats,
    pub reactors: Vec<Box<dyn Reactor>>,
    pub corrupt: BTreeSet<PartyId>,
}

/// Canonical byte form of an output for cross-party equality checks.
fn out_key(o: &Out) -> Vec<u8> {
    match o {
        Out::Delivered(v) => [&[1u8][..], v].concat(),
        Out::AvssShared(s) => [&[2u8][..], &s.h, &s.c].concat(),
        Out::AvssSecret(m) => [&[3u8][..], m].concat(),
        Out::Seeded(s) => [&[4u8][..], s].concat(),
        Out::CoinBit(b) => vec![5, *b],
        Out::CoinMax(m) => [&[6u8][..], &m.encode()].concat(),
        Out::Decided(b) => vec![7, *b],
        Out::Elected(i) => [&[8u8][..], &i.to_be_bytes()].concat(),
    }
}

pub fn run_trial(st: &Setting, spec: &RunSpec, record: bool) -> Result<Trial, HarnessError> {
    let (mut reactors, corrupt) = build_net(st, spec)?;
    let mut cfg = NetConfig::new(spec.scheduler.clone(), spec.seed).with_corrupt(corrupt.clone());
    cfg.record_transcript = record;
    cfg.meta = serde_json::to_vec(spec).expect("spec serializes");
    let report = run(&mut reactors, &cfg);

    let honest: Vec<PartyId> =
        (1..=spec.n as PartyId).filter(|p| !corrupt.contains(p)).collect();
    let mut stats = TrialStats {
        terminated: report.all_output(spec.n, &corrupt),
        msgs: report.metrics.total.msgs,
        bits: report.metrics.total.bits,
        rounds: report.metrics.rounds,
        ..TrialStats::default()
    };
    let keys: BTreeSet<Vec<u8>> =
        honest.iter().filter_map(|p| report.outputs.get(p)).map(|(o, _)| out_key(o)).collect();
    stats.agreed = stats.terminated && keys.len() == 1;
    if stats.agreed {
        let (out, _) = &report.outputs[&honest[0]];
        match out {
            Out::CoinBit(b) => stats.coin_bit = Some(*b),
            Out::Decided(b) => {
                stats.decided = Some(*b);
                stats.coin_rounds = honest
                    .iter()
                    .map(|p| {
                        reactors[*p as usize - 1]
                            .as_any()
                            .downcast_ref::<Aba>()
                            .and_then(|a| a.decided_round())
                            .map(|r| r + 1)
                    })
                    .collect::<Option<Vec<_>>>()
                    .map(|v| v.into_iter().max().unwrap_or(0));
            }
            Out::Elected(i) => {
                stats.elected = Some(*i);
                stats.vote_path = reactors[honest[0] as usize - 1]
                    .as_any()
                    .downcast_ref::<Election>()
                    .and_then(|e| e.vote_path_confirmed());
            }
            _ => {}
        }
    }
    Ok(Trial { report, stats, reactors, corrupt })
}

// ---------------------------------------------------------------------------
// Sweeps and summaries
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub n: usize,
    pub f: usize,
    pub trials: u64,
    pub termination_rate: f64,
    pub agreement_rate: f64,
    pub mean_msgs: f64,
    pub max_msgs: u64,
    pub mean_bits: f64,
    pub max_bits: u64,
    pub mean_rounds: f64,
    pub max_rounds: u32,
    /// Protocol-specific statistics (bit shares, vote-path rates, elected
    /// index histogram), keyed for stable serialization.
    pub extra: BTreeMap<String, f64>,
}

pub fn spec_for(cfg: &ExperimentConfig, n: usize, seed: u64) -> RunSpec {
    RunSpec {
        protocol: cfg.protocol,
        n,
        f: cfg.f_for(n),
        crypto: cfg.crypto,
        coin: cfg.coin,
        scheduler: cfg.scheduler.clone(),
        adversary: cfg.adversary.clone(),
        seed,
    }
}

/// Run the full sweep. Returns one row per size plus any recorded
/// transcripts as (file-stem, transcript) pairs.
pub fn sweep(
    cfg: &ExperimentConfig,
) -> Result<(Vec<SummaryRow>, Vec<(String, Transcript)>), HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut transcripts = Vec::new();
    for &n in &cfg.n {
        let f = cfg.f_for(n);
        let st = setting(cfg.crypto, n, f);
        let outcomes: Vec<TrialStats> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let spec = spec_for(cfg, n, trial_seed(cfg.master_seed, n, i));
                run_trial(&st, &spec, false).map(|t| t.stats)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if cfg.record_transcripts {
            let spec = spec_for(cfg, n, trial_seed(cfg.master_seed, n, 0));
            let trial = run_trial(&st, &spec, true)?;
            let t = trial.report.transcript.expect("recording was requested");
            transcripts.push((format!("{}-n{}-seed{}", cfg.protocol.name(), n, spec.seed), t));
        }
        rows.push(summarize(cfg, n, f, &outcomes));
    }
    Ok((rows, transcripts))
}

fn summarize(cfg: &ExperimentConfig, n: usize, f: usize, trials: &[TrialStats]) -> SummaryRow {
    let count = trials.len() as f64;
    let mean = |sel: &dyn Fn(&TrialStats) -> f64| trials.iter().map(sel).sum::<f64>() / count;
    let mut extra = BTreeMap::new();
    match cfg.protocol {
        Protocol::Coin => {
            let agreeing: Vec<u8> = trials.iter().filter_map(|t| t.coin_bit).collect();
            if !agreeing.is_empty() {
                let ones = agreeing.iter().filter(|b| **b == 1).count() as f64;
                extra.insert("bit_one_share".into(), ones / agreeing.len() as f64);
            }
        }
        Protocol::Aba => {
            let rounds: Vec<u32> = trials.iter().filter_map(|t| t.coin_rounds).collect();
            if !rounds.is_empty() {
                extra.insert(
                    "mean_coin_rounds".into(),
                    rounds.iter().map(|r| *r as f64).sum::<f64>() / rounds.len() as f64,
                );
            }
        }
        Protocol::Election => {
            let confirmed =
                trials.iter().filter(|t| t.vote_path == Some(true)).count() as f64;
            extra.insert("vote_path_rate".into(), confirmed / count);
            let mut hist: BTreeMap<PartyId, u64> = BTreeMap::new();
            for t in trials {
                if let Some(i) = t.elected {
                    *hist.entry(i).or_default() += 1;
                }
            }
            for (i, c) in hist {
                extra.insert(format!("elected_{i}"), c as f64);
            }
        }
        _ => {}
    }
    SummaryRow {
        protocol: cfg.protocol.name().into(),
        n,
        f,
        trials: trials.len() as u64,
        termination_rate: trials.iter().filter(|t| t.terminated).count() as f64 / count,
        agreement_rate: trials.iter().filter(|t| t.agreed).count() as f64 / count,
        mean_msgs: mean(&|t| t.msgs as f64),
        max_msgs: trials.iter().map(|t| t.msgs).max().unwrap_or(0),
        mean_bits: mean(&|t| t.bits as f64),
        max_bits: trials.iter().map(|t| t.bits).max().unwrap_or(0),
        mean_rounds: mean(&|t| t.rounds as f64),
        max_rounds: trials.iter().map(|t| t.rounds).max().unwrap_or(0),
        extra,
    }
}

pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<9} {:>3} {:>2} {:>7} {:>6} {:>6} {:>11} {:>12} {:>7}  extra",
        "protocol", "n", "f", "trials", "term", "agree", "mean-msgs", "mean-bits", "rounds"
    );
    for r in rows {
        let extra = r
            .extra
            .iter()
            .map(|(k, v)| format!("{k}={v:.4}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            s,
            "{:<9} {:>3} {:>2} {:>7} {:>6.3} {:>6.3} {:>11.1} {:>12.1} {:>7.2}  {}",
            r.protocol,
            r.n,
            r.f,
            r.trials,
            r.termination_rate,
            r.agreement_rate,
            r.mean_msgs,
            r.mean_bits,
            r.mean_rounds,
            extra
        );
    }
    s
}

/// Serialize rows as line-delimited JSON (one row per line, stable order).
pub fn rows_to_jsonl(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r).expect("row serializes"));
        s.push('\n');
    }
    s
}

pub fn rows_from_jsonl(text: &str) -> Result<Vec<SummaryRow>, HarnessError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| HarnessError::Config(format!("summary line does not parse: {e}")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Complexity fits
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Msgs,
    Bits,
    Rounds,
}

impl std::str::FromStr for Metric {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "msgs" | "messages" => Ok(Metric::Msgs),
            "bits" => Ok(Metric::Bits),
            "rounds" => Ok(Metric::Rounds),
            other => Err(HarnessError::Config(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through (ln n, ln metric).
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<Fit, HarnessError> {
    let distinct: BTreeSet<u64> = points.iter().map(|(x, _)| x.to_bits()).collect();
    if distinct.len() < 3 {
        return Err(HarnessError::FitPoints(distinct.len()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    Ok(Fit { slope, intercept })
}

pub fn fit_rows(rows: &[SummaryRow], metric: Metric) -> Result<Fit, HarnessError> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let y = match metric {
                Metric::Msgs => r.mean_msgs,
                Metric::Bits => r.mean_bits,
                Metric::Rounds => r.mean_rounds,
            };
            (r.n as f64, y)
        })
        .collect();
    loglog_fit(&points)
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct ReplayOutcome {
    pub spec: RunSpec,
    pub events: usize,
    pub divergence: Option<Divergence>,
}

/// Decode a recorded transcript, rebuild its network from the embedded run
/// descriptor, re-execute, and report the first divergence (if any).
pub fn replay(bytes: &[u8]) -> Result<ReplayOutcome, HarnessError> {
    let recorded = Transcript::decode(bytes)
        .map_err(|e| HarnessError::Integrity(format!("transcript does not parse: {e}")))?;
    let spec: RunSpec = serde_json::from_slice(&recorded.meta).map_err(|e| {
        HarnessError::Integrity(format!("embedded run descriptor does not parse: {e}"))
    })?;
    let st = setting(spec.crypto, spec.n, spec.f);
    let trial = run_trial(&st, &spec, true)?;
    let replayed = trial.report.transcript.expect("recording was requested");
    Ok(ReplayOutcome {
        spec,
        events: recorded.events.len(),
        divergence: compare(&recorded, &replayed),
    })
}

// ---------------------------------------------------------------------------
// Presets: the release gate, one named check per acceptance criterion
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("{} {} — {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub const PRESETS: [&str; 11] = [
    "sharing-safety",
    "sharing-rounds",
    "sharing-complexity",
    "seeding-suite",
    "aggregation-suite",
    "coin-fairness",
    "coin-complexity",
    "agreement-suite",
    "election-suite",
    "replay-determinism",
    "scope-note",
];

pub fn run_preset(name: &str) -> Result<CriterionResult, HarnessError> {
    match name {
        "sharing-safety" => preset_sharing_safety(),
        "sharing-rounds" => preset_sharing_rounds(),
        "sharing-complexity" => preset_sharing_complexity(),
        "seeding-suite" => preset_seeding_suite(),
        "aggregation-suite" => preset_aggregation_suite(),
        "coin-fairness" => preset_coin_fairness(),
        "coin-complexity" => preset_coin_complexity(),
        "agreement-suite" => preset_agreement_suite(),
        "election-suite" => preset_election_suite(),
        "replay-determinism" => preset_replay_determinism(),
        "scope-note" => Ok(preset_scope_note()),
        other => Err(HarnessError::UnknownPreset(other.into())),
    }
}

pub fn run_all_presets() -> Result<Vec<CriterionResult>, HarnessError> {
    PRESETS.iter().map(|p| run_preset(p)).collect()
}

fn base_config(protocol: Protocol, n: Vec<usize>, trials: u64, master: u64) -> ExperimentConfig {
    ExperimentConfig {
        protocol,
        n,
        f: None,
        crypto: CryptoMode::Mock,
        coin: CoinSetup::Genesis,
        scheduler: SchedulerSpec::Random,
        adversary: AdversarySpec::None,
        trials,
        master_seed: master,
        record_transcripts: false,
    }
}

/// Scheduler that holds back everything touching party 1 for as long as
/// fairness allows — the maximal starvation of one honest participant.
fn starve_party_one() -> SchedulerSpec {
    let (a, b) = MatchRule::involving_party(1);
    SchedulerSpec::Starve { rules: vec![a, b], base: BaseOrder::Random }
}

/// Run the sharing phase and, when it completed, the reconstruction phase;
/// check every cross-party invariant. Returns a violation description, or
/// None when the trial upheld them all. `require_all` additionally demands
/// termination (the honest-dealer guarantee); without it a unanimous stall
/// is acceptable.
fn sharing_trial(
    st: &Setting,
    spec: &RunSpec,
    expect: Option<&[Vec<u8>]>,
    require_all: bool,
) -> Result<Option<String>, HarnessError> {
    let trial = run_trial(st, spec, false)?;
    let n = spec.n;
    let f = spec.f;
    if trial.report.stall.is_some() {
        return Ok(Some("live-lock: step cap exhausted".into()));
    }
    let outs: BTreeMap<PartyId, ShOutput> = trial
        .report
        .outputs
        .iter()
        .filter(|(p, _)| !trial.corrupt.contains(p))
        .filter_map(|(p, (o, _))| match o {
            Out::AvssShared(s) => Some((*p, s.clone())),
            _ => None,
        })
        .collect();
    let honest = n - trial.corrupt.len();
    if outs.is_empty() {
        if require_all {
            return Ok(Some("sharing did not complete anywhere".into()));
        }
        return Ok(None); // a unanimous stall is allowed under a bad dealer
    }
    if outs.len() != honest {
        return Ok(Some(format!("partial completion: {}/{} honest", outs.len(), honest)));
    }
    let first = outs.values().next().unwrap();
    if !outs.values().all(|s| s.h == first.h && s.c == first.c) {
        return Ok(Some("honest parties locked different (digest, cipher) pairs".into()));
    }
    let holders = outs.values().filter(|s| s.has_shares()).count();
    if holders < f + 1 {
        return Ok(Some(format!("only {holders} honest share-holders")));
    }
    // Reconstruction must succeed among the honest and yield one value.
    let rec_inst = spec.protocol.instance().child(1);
    let mut rec: Vec<Box<dyn Reactor>> = st
        .keys
        .iter()
        .map(|ks| {
            if trial.corrupt.contains(&ks.party) {
                Box::new(SilentParty) as Box<dyn Reactor>
            } else {
                Box::new(AvssRec::new(
                    st.env.clone(),
                    rec_inst.clone(),
                    ks.party,
                    outs[&ks.party].clone(),
                    CipherMode::RoXor,
                ))
            }
        })
        .collect();
    let cfg = NetConfig::new(spec.scheduler.clone(), mix(spec.seed, 0x4EC))
        .with_corrupt(trial.corrupt.clone());
    let report = run(&mut rec, &cfg);
    if !report.all_output(n, &trial.corrupt) {
        return Ok(Some("reconstruction did not complete at every honest party".into()));
    }
    let values: BTreeSet<Vec<u8>> = report
        .outputs
        .values()
        .map(|(o, _)| match o {
            Out::AvssSecret(m) => m.clone(),
            _ => Vec::new(),
        })
        .collect();
    if values.len() != 1 {
        return Ok(Some("reconstruction produced disagreeing values".into()));
    }
    if let Some(allowed) = expect {
        let got = values.iter().next().unwrap();
        if !allowed.contains(got) {
            return Ok(Some("reconstructed value is not one the dealer committed".into()));
        }
    }
    Ok(None)
}

/// Candidate-secret counting at q = 97: from a corrupt party's view of an
/// honest dealing (its f shares, the public commitment, the ciphertext),
/// count how many candidate secrets admit a fully consistent completion.
/// Information-theoretic hiding demands all q of them do.
fn count_consistent_candidates() -> (u64, u64) {
    const Q: u64 = 97;
    let suite = Arc::new(Suite::mock_with_q(Q));
    let (keys, registry) = gen_parties(&suite, 4, b"count97");
    let env = Env::new(suite.clone(), Arc::new(registry), 1);
    let secret_fe = suite.field.from_u64(41);
    let secret = suite.field.encode(&secret_fe);
    let inst = InstanceId::root(2);
    let mut dealer = AvssSh::new(
        env.clone(),
        Arc::new(keys[0].clone()),
        inst.clone(),
        1,
        Some(secret),
        CipherMode::Pad,
        2024,
    )
    .expect("dealer arity");
    let shares = dealer.on_activate().out;

    use crate::avss::{cmt_digest, stored_msg};
    use crate::crypto::pedersen::PolyCommitment;
    use crate::crypto::sig;
    use crate::simnet::{Envelope, Tag};
    use crate::wire::Reader;

    let to_u64 = |bytes: &[u8]| bytes.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64);
    // The adversary's view: party 2's opening, the commitment, the cipher.
    let (c0, c1, a2, b2) = {
        let mut r = Reader::new(&shares[1].payload);
        let cmt = PolyCommitment::decode_from_with(&suite.group, &mut r).unwrap();
        let a = suite.field.decode(r.raw(suite.field.width()).unwrap()).unwrap();
        let b = suite.field.decode(r.raw(suite.field.width()).unwrap()).unwrap();
        (
            to_u64(&suite.group.encode(&cmt.coeffs[0])),
            to_u64(&suite.group.encode(&cmt.coeffs[1])),
            a.to_u64(),
            b.to_u64(),
        )
    };
    // Drive the dealer to the cipher release: its own share loops back and
    // yields its own endorsement; two more endorsements reach quorum.
    let mut cipher = None;
    let own = shares.iter().find(|e| e.to == 1).unwrap().clone();
    let h = {
        let mut r = Reader::new(&own.payload);
        let cmt = PolyCommitment::decode_from_with(&suite.group, &mut r).unwrap();
        cmt_digest(&suite, &cmt)
    };
    let self_stored = dealer.on_envelope(&own).out;
    let mut feed = |e: &Envelope, dealer: &mut AvssSh| {
        for o in dealer.on_envelope(e).out {
            if o.tag == Tag::Cipher && o.to == 1 {
                cipher = Some(o.payload.clone());
            }
        }
    };
    feed(&self_stored[0], &mut dealer);
    for j in [2u16, 3] {
        let e = Envelope {
            from: j,
            to: 1,
            instance: inst.clone(),
            tag: Tag::Stored,
            payload: sig::sign(&suite, &keys[j as usize - 1].sig, &stored_msg(&suite, &inst, &h)),
        };
        feed(&e, &mut dealer);
    }
    let cipher = cipher.expect("cipher released");
    let c_fe = {
        let mut r = Reader::new(&cipher);
        r.raw(suite.lambda).unwrap();
        to_u64(&r.bytes().unwrap())
    };

    // Independent arithmetic oracle over Z_97 (mock group: commit2(a, b) =
    // 2a + 3b, opening at j: value(j) = v0 + j·v1).
    let sub = |a: u64, b: u64| (a + Q - b % Q) % Q;
    let inv = |a: u64| {
        // Fermat: a^(Q-2) mod Q.
        let mut acc = 1u64;
        let mut base = a % Q;
        let mut e = Q - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % Q;
            }
            base = base * base % Q;
            e >>= 1;
        }
        acc
    };
    let mut consistent = 0u64;
    for m in 0..Q {
        let k = sub(c_fe, m); // Pad cipher: c = key + m.
        let a1 = sub(a2, k) * inv(2) % Q; // A(2) = k + 2·a1.
        let b0 = sub(c0, 2 * k % Q) * inv(3) % Q; // c0 = 2k + 3·b0.
        let b1 = sub(c1, 2 * a1 % Q) * inv(3) % Q; // c1 = 2a1 + 3·b1.
        if (b0 + 2 * b1) % Q == b2 {
            consistent += 1;
        }
    }
    (consistent, Q)
}

fn preset_sharing_safety() -> Result<CriterionResult, HarnessError> {
    const TRIALS: u64 = 1_000;
    let st = setting(CryptoMode::Mock, 4, 1);
    let mut violations: Vec<String> = Vec::new();
    let mut arms = 0usize;

    // Honest-dealer arm: termination is also required, and the value must
    // be exactly what the dealer shared.
    let honest: Vec<Option<String>> = (0..TRIALS)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(0xA11CE, 4, i);
            let spec = RunSpec {
                protocol: Protocol::Avss,
                n: 4,
                f: 1,
                crypto: CryptoMode::Mock,
                coin: CoinSetup::Genesis,
                scheduler: SchedulerSpec::Random,
                adversary: AdversarySpec::None,
                seed,
            };
            let expect = vec![trial_secret(&st.env.suite, seed)];
            match sharing_trial(&st, &spec, Some(&expect), true) {
                Ok(v) => v,
                Err(e) => Some(format!("harness error: {e}")),
            }
        })
        .collect();
    violations.extend(honest.into_iter().flatten());
    arms += 1;

    // One arm per scripted dealer misbehavior.
    for script in DealerScript::ALL {
        let arm: Vec<Option<String>> = (0..TRIALS)
            .into_par_iter()
            .map(|i| {
                let seed = trial_seed(0xB0B + script as u64, 4, i);
                let spec = RunSpec {
                    protocol: Protocol::Avss,
                    n: 4,
                    f: 1,
                    crypto: CryptoMode::Mock,
                    coin: CoinSetup::Genesis,
                    scheduler: SchedulerSpec::Random,
                    adversary: AdversarySpec::Dealer { script: script.name().into() },
                    seed,
                };
                let base = trial_secret(&st.env.suite, seed);
                let mut flipped = base.clone();
                flipped[0] ^= 1;
                // The equivocator deals two values; either may legitimately
                // win. Every other script reuses the honest dealing.
                let allowed: Vec<Vec<u8>> = match script {
                    DealerScript::Equivocate => vec![base, flipped],
                    _ => vec![base],
                };
                match sharing_trial(&st, &spec, Some(&allowed), false) {
                    Ok(v) => v.map(|v| format!("{}: {v}", script.name())),
                    Err(e) => Some(format!("harness error: {e}")),
                }
            })
            .collect();
        violations.extend(arm.into_iter().flatten());
        arms += 1;
    }

    let (consistent, q) = count_consistent_candidates();
    let pass = violations.is_empty() && consistent == q;
    let detail = format!(
        "{arms}×{TRIALS} schedules, {} violations{}; secrecy counting: {consistent}/{q} candidate secrets consistent",
        violations.len(),
        violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default(),
    );
    Ok(CriterionResult { name: "sharing-safety", pass, detail })
}

fn preset_sharing_rounds() -> Result<CriterionResult, HarnessError> {
    let st = setting(CryptoMode::Mock, 4, 1);
    let spec = RunSpec {
        protocol: Protocol::Avss,
        n: 4,
        f: 1,
        crypto: CryptoMode::Mock,
        coin: CoinSetup::Genesis,
        scheduler: SchedulerSpec::Fifo,
        adversary: AdversarySpec::None,
        seed: 7,
    };
    let trial = run_trial(&st, &spec, false)?;
    let sh_rounds = trial.report.metrics.rounds;
    let outs: BTreeMap<PartyId, ShOutput> = trial
        .report
        .outputs
        .iter()
        .map(|(p, (o, _))| match o {
            Out::AvssShared(s) => (*p, s.clone()),
            _ => unreachable!("sharing outputs sharing"),
        })
        .collect();
    let mut rec: Vec<Box<dyn Reactor>> = st
        .keys
        .iter()
        .map(|ks| {
            Box::new(AvssRec::new(
                st.env.clone(),
                spec.protocol.instance().child(1),
                ks.party,
                outs[&ks.party].clone(),
                CipherMode::RoXor,
            )) as Box<dyn Reactor>
        })
        .collect();
    let report = run(&mut rec, &NetConfig::new(SchedulerSpec::Fifo, 7));
    let rec_rounds = report.metrics.rounds;
    let pass = sh_rounds == 5 && rec_rounds == 2;
    Ok(CriterionResult {
        name: "sharing-rounds",
        pass,
        detail: format!("share phase {sh_rounds} rounds (target 5), reconstruction {rec_rounds} (target 2)"),
    })
}

fn preset_sharing_complexity() -> Result<CriterionResult, HarnessError> {
    let cfg = base_config(Protocol::Avss, vec![4, 7, 10, 13], 25, 0x5109E);
    let (rows, _) = sweep(&cfg)?;
    let fit = fit_rows(&rows, Metric::Bits)?;
    let pass = (1.6..=2.3).contains(&fit.slope);
    Ok(CriterionResult {
        name: "sharing-complexity",
        pass,
        detail: format!("honest-bits slope {:.3} over n ∈ {{4,7,10,13}} (window [1.6, 2.3])", fit.slope),
    })
}

fn preset_seeding_suite() -> Result<CriterionResult, HarnessError> {
    let st = setting(CryptoMode::Mock, 4, 1);
    let mut violations: Vec<String> = Vec::new();

    let arms: [(AdversarySpec, u64, u64); 3] = [
        (AdversarySpec::None, 400, 0x5EED0),
        (AdversarySpec::EquivLeader { amplify: false }, 300, 0x5EED1),
        (AdversarySpec::EquivLeader { amplify: true }, 300, 0x5EED2),
    ];
    for (adversary, trials, salt) in arms {
        let honest_leader = adversary == AdversarySpec::None;
        let arm: Vec<Option<String>> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let spec = RunSpec {
                    protocol: Protocol::Seeding,
                    n: 4,
                    f: 1,
                    crypto: CryptoMode::Mock,
                    coin: CoinSetup::Genesis,
                    scheduler: SchedulerSpec::Random,
                    adversary: adversary.clone(),
                    seed: trial_seed(salt, 4, i),
                };
                let t = match run_trial(&st, &spec, false) {
                    Ok(t) => t,
                    Err(e) => return Some(format!("harness error: {e}")),
                };
                if t.report.stall.is_some() {
                    return Some("live-lock".into());
                }
                let honest = 4 - t.corrupt.len();
                let seeded: Vec<&Vec<u8>> = t
                    .report
                    .outputs
                    .iter()
                    .filter(|(p, _)| !t.corrupt.contains(p))
                    .filter_map(|(_, (o, _))| match o {
                        Out::Seeded(s) => Some(s),
                        _ => None,
                    })
                    .collect();
                if honest_leader && seeded.len() != honest {
                    return Some("honest leader failed to seed everyone".into());
                }
                if !seeded.is_empty() && seeded.len() != honest {
                    return Some(format!("partial seeding: {}/{honest}", seeded.len()));
                }
                if seeded.iter().collect::<BTreeSet<_>>().len() > 1 {
                    return Some("two different seed values among honest parties".into());
                }
                None
            })
            .collect();
        violations.extend(arm.into_iter().flatten());
    }

    let cfg = base_config(Protocol::Seeding, vec![4, 7, 10, 13], 25, 0x5EED3);
    let (rows, _) = sweep(&cfg)?;
    let fit = fit_rows(&rows, Metric::Msgs)?;
    let slope_ok = (1.6..=2.3).contains(&fit.slope);
    let pass = violations.is_empty() && slope_ok;
    Ok(CriterionResult {
        name: "seeding-suite",
        pass,
        detail: format!(
            "1000 schedules (incl. equivocating leaders), {} violations{}; message slope {:.3} (window [1.6, 2.3])",
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default(),
            fit.slope
        ),
    })
}

fn preset_aggregation_suite() -> Result<CriterionResult, HarnessError> {
    use crate::pvss;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const TRIALS: u64 = 500;
    // The wide-modulus mock: rejection checks need negligible false-accept
    // odds, which the default small field cannot give.
    let st = setting_from(Suite::mock_with_q((1 << 31) - 1), 4, 1, b"harness-v1");
    let env = &st.env;
    let failures: Vec<Option<String>> = (0..TRIALS)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(0xA99, 4, i);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let field = &env.suite.field;
            let k = rng.gen_range(1..=4usize);
            let mut contributors: Vec<usize> = (0..4).collect();
            contributors.shuffle(&mut rng);
            let contributors = &contributors[..k];
            let mut parts = Vec::new();
            let mut sum = field.zero();
            for (j, &c) in contributors.iter().enumerate() {
                let s = field.rand(&mut rng);
                sum = field.add(&sum, &s);
                parts.push(pvss::deal(env, &st.keys[c], Some(s), mix(seed, j as u64)));
            }
            let mut agg = parts[0].clone();
            for p in &parts[1..] {
                agg = match pvss::agg_scripts(env, &agg, p) {
                    Ok(a) => a,
                    Err(e) => return Some(format!("aggregation rejected honest input: {e}")),
                };
            }
            if !pvss::vrfy_script(env, &agg) {
                return Some("aggregate script failed public verification".into());
            }
            let mut want = vec![0u32; 4];
            for &c in contributors {
                want[c] += 1;
            }
            if agg.weights() != want || agg.total_weight() != k as u64 {
                return Some("weight vector does not match the contributor set".into());
            }
            let mut all: Vec<(PartyId, pvss::PvssShare)> = st
                .keys
                .iter()
                .map(|ks| (ks.party, pvss::get_share(env, ks, &agg)))
                .collect();
            if !all.iter().all(|(j, sh)| pvss::vrfy_share(env, *j, sh, &agg)) {
                return Some("a decrypted share failed verification".into());
            }
            all.shuffle(&mut rng);
            let witness = &all[..3];
            let secret = match pvss::agg_shares(env, &agg, witness) {
                Ok(s) => s,
                Err(e) => return Some(format!("reconstruction rejected a valid quorum: {e}")),
            };
            if secret.value.as_ref() != Some(&sum) {
                return Some("reconstructed value is not the sum of contributions".into());
            }
            if !pvss::vrfy_secret(env, &secret.point, &agg, witness) {
                return Some("witnessed secret failed public re-verification".into());
            }
            // A corrupted share must be rejected end to end.
            let mut bad = witness.to_vec();
            let nudge = env.suite.group.commit2(&field.one(), &field.zero());
            bad[0].1.point = env.suite.group.op(&bad[0].1.point, &nudge);
            if pvss::agg_shares(env, &agg, &bad).is_ok() {
                return Some("a corrupted share slipped through reconstruction".into());
            }
            None
        })
        .collect();
    let failures: Vec<String> = failures.into_iter().flatten().collect();
    Ok(CriterionResult {
        name: "aggregation-suite",
        pass: failures.is_empty(),
        detail: format!(
            "{TRIALS} randomized pipelines, {} failures{}",
            failures.len(),
            failures.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    })
}

fn preset_coin_fairness() -> Result<CriterionResult, HarnessError> {
    let st = setting(CryptoMode::Mock, 4, 1);
    let coin_spec = |scheduler: SchedulerSpec, seed: u64| RunSpec {
        protocol: Protocol::Coin,
        n: 4,
        f: 1,
        crypto: CryptoMode::Mock,
        coin: CoinSetup::Seeding,
        scheduler,
        adversary: AdversarySpec::None,
        seed,
    };

    // All-honest common-output rate and bit bias. Keys are refreshed per
    // trial: with the narrow mock field, fixed keys would pin every party's
    // nomination to a 97-value pool and the max would keep landing on the
    // same handful of values, letting their accidental parities masquerade
    // as coin bias.
    const HONEST: u64 = 2_000;
    let honest: Vec<TrialStats> = (0..HONEST)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(0xC01, 4, i);
            let st = setting_from(Suite::mock(), 4, 1, &seed.to_be_bytes());
            run_trial(&st, &coin_spec(SchedulerSpec::Random, seed), false).map(|t| t.stats)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let common = honest.iter().filter(|t| t.agreed).count() as f64 / HONEST as f64;
    let bits: Vec<u8> = honest.iter().filter_map(|t| t.coin_bit).collect();
    let bias = bits.iter().filter(|b| **b == 1).count() as f64 / bits.len().max(1) as f64;

    // Starving adversary: hold back one party's traffic as long as fairness
    // allows.
    const STARVED: u64 = 500;
    let starved: Vec<TrialStats> = (0..STARVED)
        .into_par_iter()
        .map(|i| {
            run_trial(&st, &coin_spec(starve_party_one(), trial_seed(0xC02, 4, i)), false)
                .map(|t| t.stats)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let starved_common = starved.iter().filter(|t| t.agreed).count() as f64 / STARVED as f64;

    // Core-set instrumentation: at the instant an honest party accepts a
    // commitment certificate, the certified snapshot must already sit
    // inside ≥ f+1 honest parties' completion sets — the quorum behind the
    // certificate only signed after checking exactly that, so the property
    // must never be observed broken.
    const PROBED: u64 = 300;
    let core_violations: u64 = (0..PROBED)
        .into_par_iter()
        .map(|i| {
            use crate::simnet::Tag;
            let spec = coin_spec(SchedulerSpec::Random, trial_seed(0xC03, 4, i));
            let (mut reactors, corrupt) = build_net(&st, &spec).expect("spec validated");
            let cfg = NetConfig::new(spec.scheduler.clone(), spec.seed).with_corrupt(corrupt);
            let mut accepted: BTreeSet<PartyId> = BTreeSet::new();
            let mut violations = 0u64;
            run_with_probe(&mut reactors, &cfg, &mut |ctx| {
                if ctx.delivered.tag != Tag::Commit {
                    return;
                }
                let to = ctx.delivered.to;
                let receiver =
                    ctx.reactors[to as usize - 1].as_any().downcast_ref::<Coin>().unwrap();
                if receiver.committed_set().is_none() || !accepted.insert(to) {
                    return;
                }
                let committer = ctx.reactors[ctx.delivered.from as usize - 1]
                    .as_any()
                    .downcast_ref::<Coin>()
                    .unwrap();
                let carried = committer.snapshot_set().expect("committers have snapshots");
                let holders = ctx
                    .reactors
                    .iter()
                    .filter_map(|r| r.as_any().downcast_ref::<Coin>())
                    .filter(|c| {
                        let s = c.completions();
                        carried.iter().all(|k| s.contains(k))
                    })
                    .count();
                if holders < 2 {
                    violations += 1;
                }
            });
            violations
        })
        .sum();

    let pass = common >= 0.60
        && (0.47..=0.53).contains(&bias)
        && starved_common >= 1.0 / 3.0 - 0.05
        && core_violations == 0;
    Ok(CriterionResult {
        name: "coin-fairness",
        pass,
        detail: format!(
            "common rate {common:.3} (≥0.60); bit bias {bias:.3} (0.5±0.03); starved rate {starved_common:.3} (≥{:.3}); core-set violations {core_violations}/{PROBED} probed runs",
            1.0 / 3.0 - 0.05
        ),
    })
}

fn preset_coin_complexity() -> Result<CriterionResult, HarnessError> {
    let mut cfg = base_config(Protocol::Coin, vec![4, 7, 10, 13], 8, 0xC0C0);
    cfg.coin = CoinSetup::Seeding;
    let (rows, _) = sweep(&cfg)?;
    let fit = fit_rows(&rows, Metric::Bits)?;
    let pass = (2.5..=3.3).contains(&fit.slope);
    Ok(CriterionResult {
        name: "coin-complexity",
        pass,
        detail: format!("honest-bits slope {:.3} over n ∈ {{4,7,10,13}} (window [2.5, 3.3])", fit.slope),
    })
}

fn preset_agreement_suite() -> Result<CriterionResult, HarnessError> {
    let st = setting(CryptoMode::Mock, 4, 1);
    let spec = |adversary: AdversarySpec, coin: CoinSetup, seed: u64| RunSpec {
        protocol: Protocol::Aba,
        n: 4,
        f: 1,
        crypto: CryptoMode::Mock,
        coin,
        scheduler: SchedulerSpec::Random,
        adversary,
        seed,
    };
    // Reconstruct the input each honest party was given (must match
    // build_net's derivation).
    let input_of = |seed: u64, p: PartyId| (mix(seed, 0xAB0 + p as u64) & 1) as u8;

    let mut violations: Vec<String> = Vec::new();
    let mut real_rounds: Vec<u32> = Vec::new();
    for (adversary, trials, salt) in [
        (AdversarySpec::None, 500u64, 0xABA0u64),
        (AdversarySpec::Contradictor, 500, 0xABA1),
    ] {
        let arm: Vec<(Option<String>, Option<u32>)> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let seed = trial_seed(salt, 4, i);
                let s = spec(adversary.clone(), CoinSetup::Genesis, seed);
                let t = match run_trial(&st, &s, false) {
                    Ok(t) => t,
                    Err(e) => return (Some(format!("harness error: {e}")), None),
                };
                if t.report.stall.is_some() {
                    return (Some("live-lock".into()), None);
                }
                if !t.stats.terminated {
                    return (Some("an honest party never decided".into()), None);
                }
                if !t.stats.agreed {
                    return (Some("honest parties decided different bits".into()), None);
                }
                let decided = t.stats.decided.expect("agreed agreement run");
                let honest_inputs: BTreeSet<u8> = (1..=4u16)
                    .filter(|p| !t.corrupt.contains(p))
                    .map(|p| input_of(seed, p))
                    .collect();
                if !honest_inputs.contains(&decided) {
                    return (Some("decided a bit nobody honest proposed".into()), None);
                }
                (None, t.stats.coin_rounds)
            })
            .collect();
        for (v, r) in arm {
            if let Some(v) = v {
                violations.push(v);
            }
            if let Some(r) = r {
                real_rounds.push(r);
            }
        }
    }
    let mean_real =
        real_rounds.iter().map(|r| *r as f64).sum::<f64>() / real_rounds.len().max(1) as f64;

    const FIXTURE: u64 = 300;
    let fixture_rounds: Vec<u32> = (0..FIXTURE)
        .into_par_iter()
        .map(|i| {
            let s = spec(AdversarySpec::None, CoinSetup::Fixture, trial_seed(0xABA2, 4, i));
            run_trial(&st, &s, false).map(|t| t.stats.coin_rounds.unwrap_or(u32::MAX))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean_fixture =
        fixture_rounds.iter().map(|r| *r as f64).sum::<f64>() / FIXTURE as f64;

    let pass = violations.is_empty() && mean_real <= 9.0 && mean_fixture <= 4.0;
    Ok(CriterionResult {
        name: "agreement-suite",
        pass,
        detail: format!(
            "1000 adversarial schedules, {} violations{}; mean coin invocations {mean_real:.2} (≤9) real, {mean_fixture:.2} (≤4) perfect-coin fixture",
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    })
}

fn preset_election_suite() -> Result<CriterionResult, HarnessError> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    let st = setting(CryptoMode::Mock, 4, 1);
    let spec = |adversary: AdversarySpec, scheduler: SchedulerSpec, seed: u64| RunSpec {
        protocol: Protocol::Election,
        n: 4,
        f: 1,
        crypto: CryptoMode::Mock,
        coin: CoinSetup::Genesis,
        scheduler,
        adversary,
        seed,
    };
    let mut violations: Vec<String> = Vec::new();

    // All-honest trials double as the chi-square sample.
    const HONEST: u64 = 5_000;
    let honest: Vec<Result<TrialStats, String>> = (0..HONEST)
        .into_par_iter()
        .map(|i| {
            let s = spec(AdversarySpec::None, SchedulerSpec::Random, trial_seed(0xE1E, 4, i));
            match run_trial(&st, &s, false) {
                Ok(t) if !t.stats.terminated => Err("an honest party never elected".into()),
                Ok(t) if !t.stats.agreed => Err("honest parties elected different indices".into()),
                Ok(t) => Ok(t.stats),
                Err(e) => Err(format!("harness error: {e}")),
            }
        })
        .collect();
    let mut hist = [0u64; 4];
    for r in honest {
        match r {
            Ok(s) => hist[s.elected.expect("agreed election") as usize - 1] += 1,
            Err(v) => violations.push(v),
        }
    }

    // Forged-vote trials.
    const FORGED: u64 = 800;
    let forged: Vec<Option<String>> = (0..FORGED)
        .into_par_iter()
        .map(|i| {
            let s = spec(AdversarySpec::VoteForger, SchedulerSpec::Random, trial_seed(0xF0E, 4, i));
            match run_trial(&st, &s, false) {
                Ok(t) if !t.stats.terminated => Some("stalled under forged votes".into()),
                Ok(t) if !t.stats.agreed => Some("forged votes split the election".into()),
                Ok(_) => None,
                Err(e) => Some(format!("harness error: {e}")),
            }
        })
        .collect();
    violations.extend(forged.into_iter().flatten());

    // Starved trials: the vote path must still confirm at the advertised
    // rate.
    const STARVED: u64 = 400;
    let starved: Vec<Result<TrialStats, String>> = (0..STARVED)
        .into_par_iter()
        .map(|i| {
            let s = spec(AdversarySpec::None, starve_party_one(), trial_seed(0x57A, 4, i));
            match run_trial(&st, &s, false) {
                Ok(t) if !t.stats.terminated => Err("stalled under starvation".into()),
                Ok(t) if !t.stats.agreed => Err("starvation split the election".into()),
                Ok(t) => Ok(t.stats),
                Err(e) => Err(format!("harness error: {e}")),
            }
        })
        .collect();
    let mut confirmed = 0u64;
    for r in starved {
        match r {
            Ok(s) if s.vote_path == Some(true) => confirmed += 1,
            Ok(_) => {}
            Err(v) => violations.push(v),
        }
    }
    let vote_rate = confirmed as f64 / STARVED as f64;

    let expected = HONEST as f64 / 4.0;
    let chi2: f64 = hist.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(3.0).expect("dof 3").cdf(chi2);

    let pass = violations.is_empty() && vote_rate >= 1.0 / 3.0 - 0.05 && p > 0.001;
    Ok(CriterionResult {
        name: "election-suite",
        pass,
        detail: format!(
            "{} trials, {} violations{}; starved vote-path rate {vote_rate:.3} (≥{:.3}); index histogram {hist:?}, chi-square p {p:.4} (>0.001)",
            HONEST + FORGED + STARVED,
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default(),
            1.0 / 3.0 - 0.05
        ),
    })
}

fn preset_replay_determinism() -> Result<CriterionResult, HarnessError> {
    let mut checked = 0usize;
    let mut failures: Vec<String> = Vec::new();
    let cases: Vec<RunSpec> = vec![
        RunSpec {
            protocol: Protocol::Rbc,
            n: 4,
            f: 1,
            crypto: CryptoMode::Mock,
            coin: CoinSetup::Genesis,
            scheduler: SchedulerSpec::Random,
            adversary: AdversarySpec::None,
            seed: 11,
        },
        RunSpec {
            protocol: Protocol::Avss,
            n: 4,
            f: 1,
            crypto: CryptoMode::Mock,
            coin: CoinSetup::Genesis,
            scheduler: SchedulerSpec::Random,
            adversary: AdversarySpec::Dealer { script: "split-deal".into() },
            seed: 12,
        },
        RunSpec {
            protocol: Protocol::Seeding,
            n: 4,
            f: 1,
            crypto: CryptoMode::Mock,
            coin: CoinSetup::Genesis,
            scheduler: SchedulerSpec::Random,
            adversary: AdversarySpec::EquivLeader { amplify: true },
            seed: 13,
        },
        RunSpec {
            protocol: Protocol::Coin,
            n: 4,
            f: 1,
            crypto: CryptoMode::Mock,
            coin: CoinSetup::Seeding,
            scheduler: SchedulerSpec::Random,
            adversary: AdversarySpec::None,
            seed: 14,
        },
        RunSpec {
            protocol: Protocol::Aba,
            n: 4,
            f: 1,
            crypto: CryptoMode::Mock,
            coin: CoinSetup::Genesis,
            scheduler: SchedulerSpec::Random,
            adversary: AdversarySpec::Contradictor,
            seed: 15,
        },
        RunSpec {
            protocol: Protocol::Election,
            n: 4,
            f: 1,
            crypto: CryptoMode::Mock,
            coin: CoinSetup::Genesis,
            scheduler: SchedulerSpec::Random,
            adversary: AdversarySpec::VoteForger,
            seed: 16,
        },
    ];
    for spec in cases {
        let st = setting(spec.crypto, spec.n, spec.f);
        let a = run_trial(&st, &spec, true)?.report.transcript.expect("recorded");
        let b = run_trial(&st, &spec, true)?.report.transcript.expect("recorded");
        let bytes = a.encode();
        if bytes != b.encode() {
            failures.push(format!("{}: two identical runs differ", spec.protocol.name()));
            continue;
        }
        match replay(&bytes) {
            Ok(out) if out.divergence.is_none() => {}
            Ok(out) => {
                failures.push(format!(
                    "{}: replay diverged: {}",
                    spec.protocol.name(),
                    out.divergence.unwrap()
                ));
                continue;
            }
            Err(e) => {
                failures.push(format!("{}: replay failed: {e}", spec.protocol.name()));
                continue;
            }
        }
        // A tampered payload byte must surface as a divergence.
        let mut tampered = a.clone();
        if let Some(ev) = tampered.events.iter_mut().rev().find(|e| !e.env.payload.is_empty()) {
            ev.env.payload[0] ^= 0xff;
            match replay(&tampered.encode()) {
                Ok(out) if out.divergence.is_some() => {}
                Ok(_) => failures
                    .push(format!("{}: tampering went unnoticed", spec.protocol.name())),
                Err(_) => {} // rejecting outright is also acceptable
            }
        }
        checked += 1;
    }

    // Identical sweeps must serialize to identical bytes.
    let cfg = base_config(Protocol::Rbc, vec![4, 7], 20, 0xD17);
    let (rows_a, _) = sweep(&cfg)?;
    let (rows_b, _) = sweep(&cfg)?;
    if rows_to_jsonl(&rows_a) != rows_to_jsonl(&rows_b) {
        failures.push("identical sweeps produced different summaries".into());
    }

    Ok(CriterionResult {
        name: "replay-determinism",
        pass: failures.is_empty(),
        detail: format!(
            "{checked} protocol transcripts byte-stable, replays empty, tampering detected; {}",
            if failures.is_empty() {
                "summaries byte-identical".to_string()
            } else {
                failures.join("; ")
            }
        ),
    })
}

pub const SCOPE_NOTE: &str = "Asymptotic constants and large-parameter real-crypto performance \
are not reproduced at desk scale; fitted log-log slopes and zero-violation property sweeps over \
n ≤ 13 with mock primitives stand in for them. The real-group mode exists for correctness, not \
for benchmarks.";

fn preset_scope_note() -> CriterionResult {
    CriterionResult { name: "scope-note", pass: true, detail: SCOPE_NOTE.into() }
}
