//! Polynomial sharing and interpolation over Z_q.
//!
//! Shares are evaluations at the fixed points x = 1..n (party indices);
//! recovery interpolates at zero. A degree-f polynomial needs f+1 points, so
//! any f evaluations leave the constant term information-theoretically free —
//! the counting oracles in the test suites rely on that exactly.

use rand::RngCore;

use super::field::{Fe, Field};

/// Coefficients in ascending order; `coeffs[0]` is the constant term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub coeffs: Vec<Fe>,
}

impl Poly {
    /// Uniformly random polynomial of the given degree with a fixed constant
    /// term.
    pub fn random_with_constant(field: &Field, constant: Fe, degree: usize, rng: &mut impl RngCore) -> Self {
        let mut coeffs = Vec::with_capacity(degree + 1);
        coeffs.push(constant);
        for _ in 0..degree {
            coeffs.push(field.rand(rng));
        }
        Self { coeffs }
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval_u64(&self, field: &Field, x: u64) -> Fe {
        let xf = field.from_u64(x);
        let mut acc = field.zero();
        for c in self.coeffs.iter().rev() {
            acc = field.add(&field.mul(&acc, &xf), c);
        }
        acc
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ShareError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("duplicate evaluation index {0}")]
    DuplicateIndex(u64),
    #[error("evaluation index 0 is reserved for the secret")]
    ZeroIndex,
}

/// Split `secret` into `n` shares with threshold f+1 (degree f).
/// Returns the shares at x = 1..=n.
pub fn shamir_share(
    field: &Field,
    secret: &Fe,
    f: usize,
    n: usize,
    rng: &mut impl RngCore,
) -> Vec<Fe> {
    let poly = Poly::random_with_constant(field, secret.clone(), f, rng);
    (1..=n as u64).map(|x| poly.eval_u64(field, x)).collect()
}

/// Lagrange coefficients for interpolating at x = 0 from the given distinct
/// evaluation indices. Exposed separately because exponent-side recombination
/// uses the same coefficients on group elements.
pub fn lagrange_at_zero(field: &Field, indices: &[u64]) -> Result<Vec<Fe>, ShareError> {
    for (k, &i) in indices.iter().enumerate() {
        if i == 0 {
            return Err(ShareError::ZeroIndex);
        }
        if indices[..k].contains(&i) {
            return Err(ShareError::DuplicateIndex(i));
        }
    }
    let mut out = Vec::with_capacity(indices.len());
    for &i in indices {
        let xi = field.from_u64(i);
        let mut num = field.one();
        let mut den = field.one();
        for &j in indices {
            if j == i {
                continue;
            }
            let xj = field.from_u64(j);
            num = field.mul(&num, &xj);
            den = field.mul(&den, &field.sub(&xj, &xi));
        }
        out.push(field.mul(&num, &field.inv(&den)));
    }
    Ok(out)
}

/// Recover the secret from at least f+1 distinct shares `(index, value)`.
pub fn interpolate_at_zero(field: &Field, points: &[(u64, Fe)], f: usize) -> Result<Fe, ShareError> {
    if points.len() < f + 1 {
        return Err(ShareError::TooFewPoints { need: f + 1, got: points.len() });
    }
    let pts = &points[..f + 1];
    let indices: Vec<u64> = pts.iter().map(|(i, _)| *i).collect();
    let lam = lagrange_at_zero(field, &indices)?;
    let mut acc = field.zero();
    for ((_, y), l) in pts.iter().zip(lam.iter()) {
        acc = field.add(&acc, &field.mul(y, l));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f31() -> Field {
        Field::new(BigUint::from(31u8))
    }

    #[test]
    fn degree_zero_sharing_repeats_the_secret() {
        // f = 0: the polynomial is constant, every share equals the secret.
        let f = f31();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let shares = shamir_share(&f, &f.from_u64(5), 0, 3, &mut rng);
        assert_eq!(shares, vec![f.from_u64(5), f.from_u64(5), f.from_u64(5)]);
    }

    #[test]
    fn fixed_polynomial_evaluations() {
        // A(x) = 5 + 3x over Z_31 at x = 1..4.
        let f = f31();
        let poly = Poly { coeffs: vec![f.from_u64(5), f.from_u64(3)] };
        let shares: Vec<u64> = (1..=4).map(|x| poly.eval_u64(&f, x).to_u64()).collect();
        assert_eq!(shares, vec![8, 11, 14, 17]);
    }

    #[test]
    fn two_points_recover_a_degree_one_secret() {
        let f = f31();
        let pts = vec![(1u64, f.from_u64(8)), (2u64, f.from_u64(11))];
        assert_eq!(interpolate_at_zero(&f, &pts, 1).unwrap(), f.from_u64(5));
    }

    #[test]
    fn single_point_recovers_a_constant() {
        let f = f31();
        let pts = vec![(3u64, f.from_u64(7))];
        assert_eq!(interpolate_at_zero(&f, &pts, 0).unwrap(), f.from_u64(7));
    }

    #[test]
    fn duplicate_indices_are_rejected() {
        let f = f31();
        let pts = vec![(2u64, f.from_u64(8)), (2u64, f.from_u64(11))];
        assert_eq!(
            interpolate_at_zero(&f, &pts, 1),
            Err(ShareError::DuplicateIndex(2))
        );
    }

    #[test]
    fn too_few_points_is_an_error() {
        let f = f31();
        let pts = vec![(1u64, f.from_u64(8))];
        assert!(matches!(
            interpolate_at_zero(&f, &pts, 1),
            Err(ShareError::TooFewPoints { need: 2, got: 1 })
        ));
    }

    #[test]
    fn share_then_recover_round_trips_for_all_small_degrees() {
        let f = Field::new(BigUint::from(97u8));
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for deg in 0..5usize {
            for trial in 0..100 {
                let secret = f.rand(&mut rng);
                let n = deg + 1 + (trial % 3);
                let shares = shamir_share(&f, &secret, deg, n, &mut rng);
                // Take an arbitrary (f+1)-subset: the last f+1 shares.
                let pts: Vec<(u64, Fe)> = shares
                    .iter()
                    .enumerate()
                    .skip(n - (deg + 1))
                    .map(|(i, s)| ((i + 1) as u64, s.clone()))
                    .collect();
                assert_eq!(interpolate_at_zero(&f, &pts, deg).unwrap(), secret);
            }
        }
    }

    #[test]
    fn f_shares_leave_every_secret_possible() {
        // Counting oracle: with q = 31 and f = 1, fix one share (x=1, y=8).
        // For every candidate secret s there is exactly one degree-1
        // polynomial through (0, s) and (1, 8): candidates are equally
        // consistent, i.e. one share reveals nothing.
        let f = f31();
        for s in 0..31u64 {
            let mut count = 0;
            for a1 in 0..31u64 {
                let poly = Poly { coeffs: vec![f.from_u64(s), f.from_u64(a1)] };
                if poly.eval_u64(&f, 1).to_u64() == 8 {
                    count += 1;
                }
            }
            assert_eq!(count, 1, "candidate secret {s}");
        }
    }
}
