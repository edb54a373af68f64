use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use rand::RngCore;
use sha2::Sha512;

use super::{Group, GroupTag};

/// The ristretto255 group over Curve25519.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Ristretto;

impl Group for Ristretto {
    type Scalar = Scalar;
    type Point = RistrettoPoint;

    fn tag(&self) -> GroupTag {
        GroupTag::Ristretto
    }

    fn generator(&self) -> RistrettoPoint {
        RISTRETTO_BASEPOINT_POINT
    }

    fn identity(&self) -> RistrettoPoint {
        RistrettoPoint::identity()
    }

    fn add(&self, a: &RistrettoPoint, b: &RistrettoPoint) -> RistrettoPoint {
        a + b
    }

    fn mul(&self, point: &RistrettoPoint, scalar: &Scalar) -> RistrettoPoint {
        point * scalar
    }

    fn mul_generator(&self, scalar: &Scalar) -> RistrettoPoint {
        RistrettoPoint::mul_base(scalar)
    }

    fn scalar_from_u64(&self, value: u64) -> Scalar {
        Scalar::from(value)
    }

    fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a + b
    }

    fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a - b
    }

    fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a * b
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar::from_bytes_mod_order_wide(&wide)
    }

    fn hash_to_scalar(&self, data: &[u8]) -> Scalar {
        Scalar::hash_from_bytes::<Sha512>(data)
    }

    fn hash_to_point(&self, data: &[u8]) -> RistrettoPoint {
        RistrettoPoint::hash_from_bytes::<Sha512>(data)
    }

    fn encode_point(&self, point: &RistrettoPoint) -> Vec<u8> {
        point.compress().to_bytes().to_vec()
    }

    fn decode_point(&self, bytes: &[u8]) -> Option<RistrettoPoint> {
        CompressedRistretto::from_slice(bytes).ok()?.decompress()
    }

    fn scalar_width(&self) -> usize {
        32
    }

    /// Big-endian, unlike dalek's native little-endian layout.
    fn encode_scalar(&self, scalar: &Scalar) -> Vec<u8> {
        let mut bytes = scalar.to_bytes();
        bytes.reverse();
        bytes.to_vec()
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Option<Scalar> {
        let mut le: [u8; 32] = bytes.try_into().ok()?;
        le.reverse();
        Option::from(Scalar::from_canonical_bytes(le))
    }
}
