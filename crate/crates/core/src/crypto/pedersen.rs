//! Two-generator polynomial commitments.
//!
//! A dealer holding polynomials A, B of equal degree publishes
//! `c_k = g1^{a_k} · g2^{b_k}` per coefficient pair. The opening for index i
//! is the evaluation pair (A(i), B(i)), checked against
//! `prod_k c_k^{i^k} = g1^{A(i)} · g2^{B(i)}`.
//!
//! With a uniformly random B every commitment vector is equally likely for
//! any A (perfect hiding); binding rests on the discrete log between the
//! generators being unknown, which holds only in real mode.

use super::field::{Fe, Field};
use super::group::{Ge, GroupCtx};
use super::poly::Poly;
use crate::wire::{Reader, WireResult, Writer};

/// Commitment to a pair of polynomials, one group element per coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyCommitment {
    pub coeffs: Vec<Ge>,
}

impl PolyCommitment {
    pub fn degree_bound(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn encode_with(&self, group: &GroupCtx) -> Vec<u8> {
        let mut w = Writer::new();
        w.list(&self.coeffs, |w, c| w.raw(&group.encode(c)));
        w.finish()
    }

    pub fn decode_with(group: &GroupCtx, buf: &[u8]) -> WireResult<Self> {
        let mut r = Reader::new(buf);
        let v = Self::decode_from_with(group, &mut r)?;
        r.expect_end()?;
        Ok(v)
    }

    pub fn encode_into_with(&self, group: &GroupCtx, w: &mut Writer) {
        w.list(&self.coeffs, |w, c| w.raw(&group.encode(c)));
    }

    pub fn decode_from_with(group: &GroupCtx, r: &mut Reader<'_>) -> WireResult<Self> {
        let width = group.width();
        let coeffs = r.list(|r| group.decode(r.raw(width)?))?;
        Ok(Self { coeffs })
    }
}

/// Commit to polynomials A (payload) and B (blinding), coefficient-wise.
pub fn commit(group: &GroupCtx, a: &Poly, b: &Poly) -> PolyCommitment {
    assert_eq!(a.coeffs.len(), b.coeffs.len(), "polynomials must have equal length");
    let coeffs = a
        .coeffs
        .iter()
        .zip(b.coeffs.iter())
        .map(|(ak, bk)| group.commit2(ak, bk))
        .collect();
    PolyCommitment { coeffs }
}

/// Evaluate the commitment at index i in the exponent: prod_k c_k^{i^k}.
pub fn eval_commitment(group: &GroupCtx, field: &Field, cmt: &PolyCommitment, i: u64) -> Ge {
    let xi = field.from_u64(i);
    let mut acc = group.identity();
    let mut power = field.one();
    for c in &cmt.coeffs {
        acc = group.op(&acc, &group.exp(c, &power));
        power = field.mul(&power, &xi);
    }
    acc
}

/// Check an opening (A(i), B(i)) against the commitment.
pub fn verify_opening(
    group: &GroupCtx,
    field: &Field,
    cmt: &PolyCommitment,
    i: u64,
    share_a: &Fe,
    share_b: &Fe,
) -> bool {
    if cmt.coeffs.is_empty() || i == 0 {
        return false;
    }
    group.commit2(share_a, share_b) == eval_commitment(group, field, cmt, i)
}
