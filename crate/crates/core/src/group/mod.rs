//! Prime-order groups used by linkable ring signatures and stealth addresses.
//!
//! Two backends implement [`Group`]: [`Ristretto`] for real use and
//! [`ToySchnorr`], a quadratic-residue subgroup of `Z_p^*` with `p = 2q + 1`
//! small enough that every discrete log can be found by enumeration.

mod ristretto;
mod toy;

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ristretto::Ristretto;
pub use toy::{ToyElement, ToyScalar, ToySchnorr};

/// Identifies a backend (and, for the toy group, its parameters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupTag {
    Ristretto,
    ToySchnorr { p: u64 },
}

impl GroupTag {
    pub fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            GroupTag::Ristretto => {
                w.put_u8(0);
            }
            GroupTag::ToySchnorr { p } => {
                w.put_u8(1).put_u64(*p);
            }
        }
    }

    pub fn decode(r: &mut crate::codec::Reader<'_>) -> Result<Self, crate::codec::DecodeError> {
        match r.u8()? {
            0 => Ok(GroupTag::Ristretto),
            1 => Ok(GroupTag::ToySchnorr { p: r.u64()? }),
            _ => Err(crate::codec::DecodeError::Invalid("group tag")),
        }
    }
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupTag::Ristretto => f.write_str("ristretto255"),
            GroupTag::ToySchnorr { p } => write!(f, "toy-schnorr({p})"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("toy group order {0} is not prime")]
    OrderNotPrime(u64),
    #[error("2q + 1 = {0} is not prime")]
    ModulusNotPrime(u64),
    #[error("toy group order {0} is out of the supported range")]
    OrderOutOfRange(u64),
}

/// A cyclic group of prime order with the hashing primitives the protocols need.
///
/// Scalars and points are small `Copy` values; all arithmetic goes through the
/// group instance so that parameterised backends can carry their modulus.
pub trait Group: Clone + fmt::Debug + PartialEq + Eq + Send + Sync {
    type Scalar: Copy + Eq + fmt::Debug + Send + Sync;
    type Point: Copy + Eq + fmt::Debug + Send + Sync;

    fn tag(&self) -> GroupTag;

    fn generator(&self) -> Self::Point;
    fn identity(&self) -> Self::Point;
    fn add(&self, a: &Self::Point, b: &Self::Point) -> Self::Point;
    fn mul(&self, point: &Self::Point, scalar: &Self::Scalar) -> Self::Point;

    fn mul_generator(&self, scalar: &Self::Scalar) -> Self::Point {
        self.mul(&self.generator(), scalar)
    }

    fn scalar_from_u64(&self, value: u64) -> Self::Scalar;
    fn scalar_add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_sub(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;

    fn scalar_is_zero(&self, s: &Self::Scalar) -> bool {
        *s == self.scalar_from_u64(0)
    }

    /// Uniform scalar, possibly zero.
    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar;

    /// Uniform non-zero scalar; zero draws are discarded and redrawn.
    fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar {
        loop {
            let s = self.random_scalar(rng);
            if !self.scalar_is_zero(&s) {
                return s;
            }
        }
    }

    fn hash_to_scalar(&self, data: &[u8]) -> Self::Scalar;
    /// Hashes onto a non-identity element with unknown discrete log.
    fn hash_to_point(&self, data: &[u8]) -> Self::Point;

    fn encode_point(&self, point: &Self::Point) -> Vec<u8>;
    fn decode_point(&self, bytes: &[u8]) -> Option<Self::Point>;

    /// Width of the fixed big-endian scalar encoding.
    fn scalar_width(&self) -> usize;
    fn encode_scalar(&self, scalar: &Self::Scalar) -> Vec<u8>;
    fn decode_scalar(&self, bytes: &[u8]) -> Option<Self::Scalar>;
}
