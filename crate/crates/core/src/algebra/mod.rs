//! Exact integer and rational arithmetic: dense matrices, integer vectors
//! and cyclotomic polynomial data.

mod matrix;
mod poly;

pub use matrix::{IntMatrix, Matrix, RatMatrix};
pub use poly::{cyclotomic, euler_phi, expand, params_to_factorization, CycFactorization, IntPoly};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number with a positive, coprime denominator.
pub type Rat = BigRational;

/// Column vector of arbitrary-precision integers.
pub type IntVec = Vec<BigInt>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("polynomial is not monic")]
    NotMonic,
    #[error("parameters with denominator {0} are not Galois stable")]
    NotGaloisStable(u64),
    #[error("invalid parameter {0}: expected a reduced fraction in [0,1)")]
    InvalidParameter(String),
}

pub fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = BigInt::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

pub fn is_zero_vec(v: &[BigInt]) -> bool {
    v.iter().all(Zero::is_zero)
}

/// Divides out the gcd of the entries. Direction is preserved; the zero
/// vector is returned unchanged.
pub fn make_primitive(mut v: IntVec) -> IntVec {
    let mut g = BigInt::zero();
    for x in &v {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                return v;
            }
        }
    }
    if g.is_zero() || g.is_one() {
        return v;
    }
    for x in v.iter_mut() {
        *x = &*x / &g;
    }
    v
}

/// Scales a rational vector by the positive lcm of its denominators and
/// returns the primitive integer vector on the same ray.
pub fn clear_denominators(v: &[Rat]) -> IntVec {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints = v
        .iter()
        .map(|x| x.numer() * (&l / x.denom()))
        .collect::<Vec<_>>();
    make_primitive(ints)
}

pub fn to_rat_vec(v: &[BigInt]) -> Vec<Rat> {
    v.iter().map(|x| Rat::from_integer(x.clone())).collect()
}

pub fn neg_vec(v: &[BigInt]) -> IntVec {
    v.iter().map(|x| -x).collect()
}

pub fn max_abs(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
}

pub fn int_vec(v: &[i64]) -> IntVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_preserves_direction() {
        assert_eq!(make_primitive(int_vec(&[-4, 6, 0])), int_vec(&[-2, 3, 0]));
        assert_eq!(make_primitive(int_vec(&[0, 0])), int_vec(&[0, 0]));
    }

    #[test]
    fn clearing_denominators() {
        let v = vec![
            Rat::new(1.into(), 2.into()),
            Rat::new((-1).into(), 3.into()),
        ];
        assert_eq!(clear_denominators(&v), int_vec(&[3, -2]));
    }
}
