//! Aggregatable publicly verifiable secret sharing with contribution
//! weights.
//!
//! A dealer Shamir-shares a secret under threshold `t = 2f+1` (so the
//! underlying polynomial has degree `2f`), publishes per-coefficient
//! commitments `g1^{F_k}`, encrypts each party's evaluation under that
//! party's key as `ek_j^{F(j)}`, and proves share-by-share (discrete-log
//! equality against the commitment evaluation) that the ciphertexts carry
//! the committed polynomial. Anyone can verify a fresh script with no
//! interaction.
//!
//! Scripts add: multiplying two scripts componentwise yields a script for
//! the *sum* of the committed secrets, because both the commitments and the
//! encrypted shares are exponentials of the shared evaluations. Contribution
//! bookkeeping rides along as a weight vector plus one signature per
//! contribution over the contributed component's digest. Share-level proofs
//! do not survive aggregation (each proof is bound to its own statement), so
//! aggregates are vouched for by their attestations and by the aggregating
//! protocol verifying every component before multiplying; the committed
//! polynomial itself stays publicly bound through the commitment vector.
//!
//! Decryption raises the encrypted share to `1/dk`, landing on `g2^{F(j)}`,
//! with a decryption-correctness proof. `t` verified decryptions interpolate
//! `g2^{F(0)}` in the exponent — the group-encoded secret. The field
//! representative is recoverable only in mock mode (that is the point: real
//! groups hide it), and a reconstructed secret is re-checkable by anyone
//! from the same `t` verified shares.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::crypto::dleq::{self, DleqProof};
use crate::crypto::field::Fe;
use crate::crypto::group::Ge;
use crate::crypto::keys::{Env, KeyStore, PartyId};
use crate::crypto::poly::{lagrange_at_zero, Poly};
use crate::crypto::{sig, Suite};
use crate::wire::{Reader, WireError, WireResult, Writer};

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum PvssError {
    #[error("expected exactly {want} shares from distinct parties, got {got}")]
    Cardinality { want: usize, got: usize },
    #[error("share from party {0} does not verify against the script")]
    InvalidShare(PartyId),
    #[error("input script does not verify")]
    InvalidScript,
    #[error("scripts sized for different committees cannot be aggregated")]
    ShapeMismatch,
}

/// One contribution voucher: `party` signed the digest of the component it
/// contributed. Aggregation concatenates these; weights count them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Attestation {
    pub party: PartyId,
    pub digest: Vec<u8>,
    pub sig: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PvssScript {
    /// Coefficient commitments g1^{F_k}, length t = 2f+1.
    pub cmt: Vec<Ge>,
    /// Encrypted shares ek_j^{F(j)}, index j-1, length n.
    pub enc_shares: Vec<Ge>,
    /// Per-share dealing proofs; present on fresh scripts, dropped by
    /// aggregation.
    pub share_proofs: Option<Vec<DleqProof>>,
    /// Contribution count per party, length n.
    pub weights: Vec<u32>,
    pub attest: Vec<Attestation>,
}

/// A decrypted share g2^{F(j)} with its decryption-correctness proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PvssShare {
    pub party: PartyId,
    pub point: Ge,
    pub proof: DleqProof,
}

/// Reconstruction result: the group-encoded secret, plus its field
/// representative when the group is the mock one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggSecret {
    pub point: Ge,
    pub value: Option<Fe>,
}

impl PvssShare {
    pub fn encode_into_with(&self, suite: &Suite, w: &mut Writer) {
        w.u16(self.party);
        w.raw(&suite.group.encode(&self.point));
        self.proof.encode_with(suite, w);
    }

    pub fn decode_from_with(suite: &Suite, r: &mut Reader<'_>) -> WireResult<Self> {
        let party = r.u16()?;
        let point = suite.group.decode(r.raw(suite.group.width())?)?;
        let proof = DleqProof::decode_with(suite, r)?;
        Ok(PvssShare { party, point, proof })
    }

    pub fn encode_with(&self, suite: &Suite) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_into_with(suite, &mut w);
        w.finish()
    }

    pub fn decode_with(suite: &Suite, buf: &[u8]) -> WireResult<Self> {
        let mut r = Reader::new(buf);
        let sh = Self::decode_from_with(suite, &mut r)?;
        r.expect_end()?;
        Ok(sh)
    }
}

impl PvssScript {
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().map(|w| *w as u64).sum()
    }

    /// Digest of the algebraic core (commitments and encrypted shares) —
    /// what a contributor attests to. Excludes proofs, weights and
    /// attestations: proofs are dropped by aggregation, and the rest is
    /// bookkeeping about this very digest.
    pub fn core_digest(&self, suite: &Suite) -> Vec<u8> {
        let mut w = Writer::new();
        w.list(&self.cmt, |w, c| w.raw(&suite.group.encode(c)));
        w.list(&self.enc_shares, |w, c| w.raw(&suite.group.encode(c)));
        suite.hash("pvss-core", &[&w.finish()])
    }

    /// Digest of the complete canonical encoding, the thing protocols sign
    /// when they commit to an aggregate.
    pub fn digest(&self, suite: &Suite) -> Vec<u8> {
        suite.hash("pvss-script", &[&self.encode_with(suite)])
    }

    pub fn encode_with(&self, suite: &Suite) -> Vec<u8> {
        let mut w = Writer::new();
        w.list(&self.cmt, |w, c| w.raw(&suite.group.encode(c)));
        w.list(&self.enc_shares, |w, c| w.raw(&suite.group.encode(c)));
        match &self.share_proofs {
            None => w.u8(0),
            Some(proofs) => {
                w.u8(1);
                w.list(proofs, |w, p| p.encode_with(suite, w));
            }
        }
        w.list(&self.weights, |w, x| w.u32(*x));
        w.list(&self.attest, |w, a| {
            w.u16(a.party);
            w.bytes(&a.digest);
            w.bytes(&a.sig);
        });
        w.finish()
    }

    pub fn decode_with(suite: &Suite, buf: &[u8]) -> WireResult<Self> {
        let mut r = Reader::new(buf);
        let width = suite.group.width();
        let cmt = r.list(|r| suite.group.decode(r.raw(width)?))?;
        let enc_shares = r.list(|r| suite.group.decode(r.raw(width)?))?;
        let share_proofs = match r.u8()? {
            0 => None,
            1 => Some(r.list(|r| DleqProof::decode_with(suite, r))?),
            _ => return Err(WireError::Invalid("share-proof marker")),
        };
        let weights = r.list(|r| r.u32())?;
        let attest = r.list(|r| {
            Ok(Attestation { party: r.u16()?, digest: r.bytes()?, sig: r.bytes()? })
        })?;
        r.expect_end()?;
        Ok(PvssScript { cmt, enc_shares, share_proofs, weights, attest })
    }
}

/// g1^{F(j)} from the commitment vector.
fn commit_eval(suite: &Suite, cmt: &[Ge], j: u64) -> Ge {
    let field = &suite.field;
    let x = field.from_u64(j);
    let mut acc = suite.group.identity();
    let mut power = field.one();
    for c in cmt {
        acc = suite.group.op(&acc, &suite.group.exp(c, &power));
        power = field.mul(&power, &x);
    }
    acc
}

fn attest_msg(suite: &Suite, digest: &[u8]) -> Vec<u8> {
    suite.hash("pvss-attest", &[digest])
}

/// Deal a fresh script. `secret` defaults to a random field element; `seed`
/// drives all sampling and must be fresh per dealing.
pub fn deal(env: &Env, ks: &KeyStore, secret: Option<Fe>, seed: u64) -> PvssScript {
    let suite = &env.suite;
    let field = &suite.field;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let s = secret.unwrap_or_else(|| field.rand(&mut rng));
    let poly = Poly::random_with_constant(field, s, 2 * env.f, &mut rng);
    let cmt: Vec<Ge> = poly.coeffs.iter().map(|c| suite.group.exp(suite.group.g1(), c)).collect();
    let enc_shares: Vec<Ge> = (1..=env.n as u64)
        .map(|j| suite.group.exp(env.registry.enc_ek(j as PartyId), &poly.eval_u64(field, j)))
        .collect();
    let mut script = PvssScript {
        cmt,
        enc_shares,
        share_proofs: None,
        weights: vec![0; env.n],
        attest: vec![],
    };
    let ctx = script.core_digest(suite);
    let proofs = (1..=env.n as u64)
        .map(|j| {
            let fj = poly.eval_u64(field, j);
            dleq::prove(
                suite,
                "pvss-deal",
                suite.group.g1(),
                &commit_eval(suite, &script.cmt, j),
                env.registry.enc_ek(j as PartyId),
                &script.enc_shares[j as usize - 1],
                &fj,
                &ctx,
            )
        })
        .collect();
    script.share_proofs = Some(proofs);
    script.weights[ks.party as usize - 1] = 1;
    script.attest = vec![Attestation {
        party: ks.party,
        digest: ctx.clone(),
        sig: sig::sign(suite, &ks.sig, &attest_msg(suite, &ctx)),
    }];
    script
}

/// Full public verification. Fresh scripts (share proofs present) get the
/// complete algebraic check: every encrypted share proven consistent with
/// the commitment vector, unit weight at the attested dealer, digest match.
/// Aggregates get the structural check: shapes, and one valid attestation
/// signature per unit of claimed weight.
pub fn vrfy_script(env: &Env, script: &PvssScript) -> bool {
    let suite = &env.suite;
    let (n, t) = (env.n, 2 * env.f + 1);
    if script.cmt.len() != t || script.enc_shares.len() != n || script.weights.len() != n {
        return false;
    }
    // Weights must be exactly the attestation multiset, every voucher valid.
    let mut counted = vec![0u32; n];
    for a in &script.attest {
        if a.party == 0 || a.party as usize > n {
            return false;
        }
        if !sig::verify(
            suite,
            env.registry.sig_vk(a.party),
            &attest_msg(suite, &a.digest),
            &a.sig,
        ) {
            return false;
        }
        counted[a.party as usize - 1] += 1;
    }
    if counted != script.weights {
        return false;
    }
    if let Some(proofs) = &script.share_proofs {
        if proofs.len() != n {
            return false;
        }
        let ctx = script.core_digest(suite);
        // A fresh script is one dealer's single contribution over this very
        // core.
        if script.attest.len() != 1 || script.attest[0].digest != ctx {
            return false;
        }
        for (j, proof) in (1..=n as u64).zip(proofs) {
            if !dleq::verify(
                suite,
                "pvss-deal",
                suite.group.g1(),
                &commit_eval(suite, &script.cmt, j),
                env.registry.enc_ek(j as PartyId),
                &script.enc_shares[j as usize - 1],
                proof,
                &ctx,
            ) {
                return false;
            }
        }
    }
    true
}

/// Decrypt this party's share and prove the decryption.
pub fn get_share(env: &Env, ks: &KeyStore, script: &PvssScript) -> PvssShare {
    let suite = &env.suite;
    let enc = &script.enc_shares[ks.party as usize - 1];
    let point = suite.group.exp(enc, &suite.field.inv(&ks.dec));
    let proof = dleq::prove(
        suite,
        "pvss-dec",
        suite.group.g2(),
        env.registry.enc_ek(ks.party),
        &point,
        enc,
        &ks.dec,
        &script.core_digest(suite),
    );
    PvssShare { party: ks.party, point, proof }
}

pub fn vrfy_share(env: &Env, j: PartyId, share: &PvssShare, script: &PvssScript) -> bool {
    if share.party != j || j == 0 || j as usize > env.n {
        return false;
    }
    let suite = &env.suite;
    dleq::verify(
        suite,
        "pvss-dec",
        suite.group.g2(),
        env.registry.enc_ek(j),
        &share.point,
        &script.enc_shares[j as usize - 1],
        &share.proof,
        &script.core_digest(suite),
    )
}

/// Interpolate the secret in the exponent from exactly `t = 2f+1` verified
/// shares of distinct parties.
pub fn agg_shares(
    env: &Env,
    script: &PvssScript,
    shares: &[(PartyId, PvssShare)],
) -> Result<AggSecret, PvssError> {
    let t = 2 * env.f + 1;
    let distinct: BTreeSet<PartyId> = shares.iter().map(|(j, _)| *j).collect();
    if shares.len() != t || distinct.len() != t {
        return Err(PvssError::Cardinality { want: t, got: distinct.len().min(shares.len()) });
    }
    for (j, sh) in shares {
        if !vrfy_share(env, *j, sh, script) {
            return Err(PvssError::InvalidShare(*j));
        }
    }
    let suite = &env.suite;
    let indices: Vec<u64> = shares.iter().map(|(j, _)| *j as u64).collect();
    let coeffs = lagrange_at_zero(&suite.field, &indices).expect("distinct nonzero indices");
    let mut point = suite.group.identity();
    for ((_, sh), l) in shares.iter().zip(coeffs) {
        point = suite.group.op(&point, &suite.group.exp(&sh.point, &l));
    }
    let value = suite
        .group
        .is_mock()
        .then(|| suite.group.mock_dlog_g2(&suite.field, &point));
    Ok(AggSecret { point, value })
}

/// Re-check a claimed secret from the same kind of witness that produced
/// it: `t` verified shares. This is the public path — the witness travels
/// with the claim, so any third party can rerun it.
pub fn vrfy_secret(
    env: &Env,
    point: &Ge,
    script: &PvssScript,
    witness: &[(PartyId, PvssShare)],
) -> bool {
    match agg_shares(env, script, witness) {
        Ok(secret) => secret.point == *point,
        Err(_) => false,
    }
}

/// Componentwise product: commits the sum of the committed secrets, adds
/// the weights, concatenates the vouchers. Inputs must verify.
pub fn agg_scripts(env: &Env, a: &PvssScript, b: &PvssScript) -> Result<PvssScript, PvssError> {
    if a.cmt.len() != b.cmt.len()
        || a.enc_shares.len() != b.enc_shares.len()
        || a.weights.len() != b.weights.len()
    {
        return Err(PvssError::ShapeMismatch);
    }
    if !vrfy_script(env, a) || !vrfy_script(env, b) {
        return Err(PvssError::InvalidScript);
    }
    let group = &env.suite.group;
    let cmt = a.cmt.iter().zip(&b.cmt).map(|(x, y)| group.op(x, y)).collect();
    let enc_shares =
        a.enc_shares.iter().zip(&b.enc_shares).map(|(x, y)| group.op(x, y)).collect();
    let weights = a.weights.iter().zip(&b.weights).map(|(x, y)| x + y).collect();
    let mut attest: Vec<Attestation> = a.attest.iter().chain(&b.attest).cloned().collect();
    attest.sort();
    Ok(PvssScript { cmt, enc_shares, share_proofs: None, weights, attest })
}

/// Test environments and the protocol stack above both need keystores in
/// shared form.
pub type SharedKeys = Vec<Arc<KeyStore>>;
