use rand::RngCore;

use super::{Group, GroupError, GroupTag};
use crate::hashing::sha256_concat;

/// Exponent modulo the toy group order `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyScalar(pub u64);

/// Residue modulo `p` lying in the order-`q` subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyElement(pub u64);

/// The subgroup of quadratic residues mod a safe prime `p = 2q + 1`,
/// generated by `4`. Orders up to `2^31` keep every product inside `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToySchnorr {
    p: u64,
    q: u64,
    g: u64,
}

impl ToySchnorr {
    pub fn new(q: u64) -> Result<Self, GroupError> {
        if !(3..(1 << 31)).contains(&q) {
            return Err(GroupError::OrderOutOfRange(q));
        }
        if !is_prime(q) {
            return Err(GroupError::OrderNotPrime(q));
        }
        let p = 2 * q + 1;
        if !is_prime(p) {
            return Err(GroupError::ModulusNotPrime(p));
        }
        Ok(Self { p, q, g: 4 })
    }

    /// `p = 23`, `q = 11`.
    pub fn order_11() -> Self {
        Self::new(11).expect("23 is a safe prime")
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    fn mulmod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    fn powmod(&self, base: u64, mut exp: u64) -> u64 {
        let mut result = 1u64;
        let mut base = base % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mulmod(result, base);
            }
            base = self.mulmod(base, base);
            exp >>= 1;
        }
        result
    }

    fn reduce_digest(digest: &[u8], modulus: u64) -> u64 {
        digest.iter().fold(0u64, |acc, &b| ((acc as u128 * 256 + b as u128) % modulus as u128) as u64)
    }

    fn width(value: u64) -> usize {
        ((64 - value.leading_zeros()) as usize).div_ceil(8)
    }
}

impl Group for ToySchnorr {
    type Scalar = ToyScalar;
    type Point = ToyElement;

    fn tag(&self) -> GroupTag {
        GroupTag::ToySchnorr { p: self.p }
    }

    fn generator(&self) -> ToyElement {
        ToyElement(self.g)
    }

    fn identity(&self) -> ToyElement {
        ToyElement(1)
    }

    fn add(&self, a: &ToyElement, b: &ToyElement) -> ToyElement {
        ToyElement(self.mulmod(a.0, b.0))
    }

    fn mul(&self, point: &ToyElement, scalar: &ToyScalar) -> ToyElement {
        ToyElement(self.powmod(point.0, scalar.0))
    }

    fn scalar_from_u64(&self, value: u64) -> ToyScalar {
        ToyScalar(value % self.q)
    }

    fn scalar_add(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar((a.0 + b.0) % self.q)
    }

    fn scalar_sub(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar((a.0 + self.q - b.0) % self.q)
    }

    fn scalar_mul(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar(((a.0 as u128 * b.0 as u128) % self.q as u128) as u64)
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> ToyScalar {
        ToyScalar(((rng.next_u64() as u128 * self.q as u128) >> 64) as u64)
    }

    fn hash_to_scalar(&self, data: &[u8]) -> ToyScalar {
        ToyScalar(Self::reduce_digest(&sha256_concat(&[data]), self.q))
    }

    /// Hash into `[1, p - 1]`, square into the residue subgroup, and retry
    /// with the next counter if that lands on the identity.
    fn hash_to_point(&self, data: &[u8]) -> ToyElement {
        (0u32..)
            .map(|counter| {
                let digest = sha256_concat(&[data, &counter.to_be_bytes()]);
                let h = Self::reduce_digest(&digest, self.p - 1) + 1;
                self.mulmod(h, h)
            })
            .find(|&point| point != 1)
            .map(ToyElement)
            .expect("non-identity residue exists")
    }

    fn encode_point(&self, point: &ToyElement) -> Vec<u8> {
        let width = Self::width(self.p);
        point.0.to_be_bytes()[8 - width..].to_vec()
    }

    fn decode_point(&self, bytes: &[u8]) -> Option<ToyElement> {
        if bytes.len() != Self::width(self.p) {
            return None;
        }
        let value = bytes.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b));
        (value >= 1 && value < self.p && self.powmod(value, self.q) == 1).then_some(ToyElement(value))
    }

    fn scalar_width(&self) -> usize {
        Self::width(self.q)
    }

    fn encode_scalar(&self, scalar: &ToyScalar) -> Vec<u8> {
        scalar.0.to_be_bytes()[8 - self.scalar_width()..].to_vec()
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Option<ToyScalar> {
        if bytes.len() != self.scalar_width() {
            return None;
        }
        let value = bytes.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b));
        (value < self.q).then_some(ToyScalar(value))
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}
