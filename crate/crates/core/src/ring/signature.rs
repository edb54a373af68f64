use num_bigint::{BigUint, RandBigInt};

use super::prp::{fixed_width, prp_decrypt, prp_encrypt};
use super::trapdoor::{extended_apply, extended_invert, RingPublicKey, TrapdoorKeyPair};
use super::RingError;
use crate::codec::{DecodeError, Reader, Writer};
use crate::hashing::{seeded_rng, sha256, Hash256};

/// Extra bits added on top of the widest modulus in the ring so that the
/// fixed tail of every extended permutation is a negligible fraction of the domain.
pub const DOMAIN_SLACK_BITS: u64 = 16;

/// A ring signature: the ring, the glue value `v` and one `x` per member.
///
/// Nothing in this record identifies the signing member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingSignature {
    ring: Vec<RingPublicKey>,
    glue: BigUint,
    x_values: Vec<BigUint>,
    domain_bits: u16,
}

impl RingSignature {
    /// Assembles a signature from parts, checking the structural invariants.
    pub fn from_parts(
        ring: Vec<RingPublicKey>,
        glue: BigUint,
        x_values: Vec<BigUint>,
        domain_bits: u16,
    ) -> Result<Self, RingError> {
        let sig = Self { ring, glue, x_values, domain_bits };
        sig.check_structure()?;
        Ok(sig)
    }

    pub fn ring(&self) -> &[RingPublicKey] {
        &self.ring
    }

    pub fn glue(&self) -> &BigUint {
        &self.glue
    }

    pub fn x_values(&self) -> &[BigUint] {
        &self.x_values
    }

    pub fn domain_bits(&self) -> u16 {
        self.domain_bits
    }

    /// The ring outputs `y_i = g_i(x_i)` that the combining function consumes.
    pub fn ring_outputs(&self) -> Result<Vec<BigUint>, RingError> {
        self.check_structure()?;
        let bits = u64::from(self.domain_bits);
        self.ring
            .iter()
            .zip(&self.x_values)
            .map(|(pk, x)| extended_apply(pk, x, bits))
            .collect()
    }

    fn check_structure(&self) -> Result<(), RingError> {
        if self.ring.is_empty() {
            return Err(RingError::Malformed("empty ring"));
        }
        if self.ring.len() != self.x_values.len() {
            return Err(RingError::Malformed("ring and x-value counts differ"));
        }
        if self.ring.len() > usize::from(u16::MAX) {
            return Err(RingError::Malformed("ring too large"));
        }
        let bits = u64::from(self.domain_bits);
        if bits < required_domain_bits(&self.ring) {
            return Err(RingError::Malformed("domain narrower than widest modulus plus slack"));
        }
        if bits % 2 != 0 {
            return Err(RingError::Malformed("odd domain width"));
        }
        if self.glue.bits() > bits || self.x_values.iter().any(|x| x.bits() > bits) {
            return Err(RingError::Malformed("value exceeds domain"));
        }
        Ok(())
    }

    /// Canonical encoding: `domain_bits` (u16), ring length (u16), each key as
    /// u16-length-prefixed modulus then exponent, then the glue and every
    /// x-value as fixed `ceil(b/8)`-byte big-endian strings.
    pub fn to_bytes(&self) -> Vec<u8> {
        let width = byte_width(self.domain_bits);
        let mut w = Writer::new();
        w.put_u16(self.domain_bits).put_u16(self.ring.len() as u16);
        for pk in &self.ring {
            w.put_short_bytes(&pk.modulus().to_bytes_be());
            w.put_short_bytes(&pk.public_exponent().to_bytes_be());
        }
        w.put_fixed(&fixed_width(&self.glue, width));
        for x in &self.x_values {
            w.put_fixed(&fixed_width(x, width));
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RingError> {
        let mut r = Reader::new(bytes);
        let domain_bits = r.u16()?;
        let count = usize::from(r.u16()?);
        let mut ring = Vec::with_capacity(count);
        for _ in 0..count {
            let modulus = BigUint::from_bytes_be(r.short_bytes()?);
            let exponent = BigUint::from_bytes_be(r.short_bytes()?);
            ring.push(RingPublicKey::new(modulus, exponent).map_err(|_| DecodeError::Invalid("ring key"))?);
        }
        let width = byte_width(domain_bits);
        let glue = BigUint::from_bytes_be(r.fixed(width)?);
        let x_values = (0..count)
            .map(|_| r.fixed(width).map(BigUint::from_bytes_be))
            .collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Self::from_parts(ring, glue, x_values, domain_bits)
    }
}

fn byte_width(bits: u16) -> usize {
    usize::from(bits).div_ceil(8)
}

/// `b = max modulus bits + 16`, rounded up to an even width for the Feistel split.
pub fn required_domain_bits(ring: &[RingPublicKey]) -> u64 {
    let widest = ring.iter().map(RingPublicKey::bits).max().unwrap_or(0);
    let bits = widest + DOMAIN_SLACK_BITS;
    bits + bits % 2
}

/// The symmetric key `k = SHA-256(message)`.
pub fn message_key(message: &[u8]) -> Hash256 {
    sha256(message)
}

/// The keyed combining function: `c_0 = v`, `c_i = E_k(c_{i-1} xor y_i)`; returns `c_n`.
pub fn ring_equation(key: &[u8], glue: &BigUint, ys: &[BigUint], bits: u64) -> Result<BigUint, RingError> {
    ys.iter().try_fold(glue.clone(), |c, y| prp_encrypt(key, &(c ^ y), bits))
}

/// Signs `message` on behalf of the ring, using the trapdoor of member `signer_index`.
pub fn ring_sign(
    message: &[u8],
    ring: &[RingPublicKey],
    signer_index: usize,
    signer: &TrapdoorKeyPair,
    rng_seed: &[u8],
) -> Result<RingSignature, RingError> {
    if ring.is_empty() {
        return Err(RingError::Malformed("empty ring"));
    }
    if signer_index >= ring.len() {
        return Err(RingError::IndexOutOfRange { index: signer_index, len: ring.len() });
    }
    if &ring[signer_index] != signer.public_key() {
        return Err(RingError::KeyMismatch { index: signer_index });
    }
    let bits = required_domain_bits(ring);
    let domain_bits = u16::try_from(bits).map_err(|_| RingError::Malformed("ring keys too wide"))?;
    let key = message_key(message);
    let mut rng = seeded_rng(rng_seed);

    let glue = rng.gen_biguint(bits);
    let mut x_values = vec![BigUint::default(); ring.len()];
    let mut ys = vec![BigUint::default(); ring.len()];
    for (i, pk) in ring.iter().enumerate() {
        if i != signer_index {
            x_values[i] = rng.gen_biguint(bits);
            ys[i] = extended_apply(pk, &x_values[i], bits)?;
        }
    }

    // Forward from c_0 = v up to the value entering the signer's slot.
    let before = ring_equation(&key, &glue, &ys[..signer_index], bits)?;
    // Backward from c_n = v down to the value leaving the signer's slot.
    let mut after = glue.clone();
    for y in ys[signer_index + 1..].iter().rev() {
        after = prp_decrypt(&key, &after, bits)? ^ y;
    }
    let gap = prp_decrypt(&key, &after, bits)? ^ before;
    x_values[signer_index] = extended_invert(signer, &gap, bits)?;

    let sig = RingSignature { ring: ring.to_vec(), glue, x_values, domain_bits };
    debug_assert!(ring_verify(message, &sig).unwrap_or(false));
    Ok(sig)
}

/// Accepts iff recombining the ring under `k = H(message)` returns the glue value.
pub fn ring_verify(message: &[u8], sig: &RingSignature) -> Result<bool, RingError> {
    let ys = sig.ring_outputs()?;
    let key = message_key(message);
    let closed = ring_equation(&key, &sig.glue, &ys, u64::from(sig.domain_bits))?;
    Ok(closed == sig.glue)
}

impl From<DecodeError> for RingError {
    fn from(err: DecodeError) -> Self {
        RingError::Decode(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn toy_ring_key() -> TrapdoorKeyPair {
        TrapdoorKeyPair::from_components(33u32.into(), 3u32.into(), 7u32.into()).unwrap()
    }

    fn keys(count: usize, bits: u64) -> Vec<TrapdoorKeyPair> {
        (0..count)
            .map(|i| TrapdoorKeyPair::generate(bits, format!("member-{i}").as_bytes()).unwrap())
            .collect()
    }

    #[test]
    fn empty_ring_equation_returns_glue() {
        let v = BigUint::from(77u32);
        assert_eq!(ring_equation(b"k", &v, &[], 8).unwrap(), v);
    }

    #[test]
    fn single_member_gap_equation() {
        // y = D_k(v) xor v closes E_k(v xor y) = v.
        let v = BigUint::from(0x5au32);
        let y = prp_decrypt(b"k", &v, 8).unwrap() ^ &v;
        assert_eq!(ring_equation(b"k", &v, &[y], 8).unwrap(), v);
    }

    #[test]
    fn toy_key_ring_of_one_is_a_plain_trapdoor_signature() {
        let kp = toy_ring_key();
        let ring = vec![kp.public_key().clone()];
        let sig = ring_sign(b"leak", &ring, 0, &kp, b"seed").unwrap();
        assert_eq!(sig.domain_bits(), 22);
        let k = message_key(b"leak");
        let y = &sig.ring_outputs().unwrap()[0];
        let bits = u64::from(sig.domain_bits());
        assert_eq!(prp_encrypt(&k, &(sig.glue() ^ y), bits).unwrap(), *sig.glue());
        assert!(ring_verify(b"leak", &sig).unwrap());
    }

    #[test]
    fn sign_verify_ring_of_four() {
        let kps = keys(4, 64);
        let ring: Vec<_> = kps.iter().map(|k| k.public_key().clone()).collect();
        for signer in [0, 2, 3] {
            let sig = ring_sign(b"hello", &ring, signer, &kps[signer], b"s").unwrap();
            assert!(ring_verify(b"hello", &sig).unwrap());
            assert!(!ring_verify(b"hellp", &sig).unwrap());
        }
    }

    #[test]
    fn signer_errors() {
        let kps = keys(2, 32);
        let ring: Vec<_> = kps.iter().map(|k| k.public_key().clone()).collect();
        assert!(matches!(
            ring_sign(b"m", &ring, 2, &kps[0], b"s"),
            Err(RingError::IndexOutOfRange { index: 2, len: 2 })
        ));
        assert!(matches!(ring_sign(b"m", &ring, 1, &kps[0], b"s"), Err(RingError::KeyMismatch { index: 1 })));
    }

    #[test]
    fn malformed_signatures_are_reported() {
        let kps = keys(2, 32);
        let ring: Vec<_> = kps.iter().map(|k| k.public_key().clone()).collect();
        let sig = ring_sign(b"m", &ring, 0, &kps[0], b"s").unwrap();
        let truncated = RingSignature {
            x_values: sig.x_values()[..1].to_vec(),
            ..sig.clone()
        };
        assert!(matches!(ring_verify(b"m", &truncated), Err(RingError::Malformed(_))));
        let oversized = RingSignature {
            glue: BigUint::one() << u64::from(sig.domain_bits()),
            ..sig
        };
        assert!(matches!(ring_verify(b"m", &oversized), Err(RingError::Malformed(_))));
    }

    #[test]
    fn encoding_roundtrip_and_rejects_trailing_bytes() {
        let kps = keys(3, 32);
        let ring: Vec<_> = kps.iter().map(|k| k.public_key().clone()).collect();
        let sig = ring_sign(b"m", &ring, 1, &kps[1], b"s").unwrap();
        let bytes = sig.to_bytes();
        assert_eq!(RingSignature::from_bytes(&bytes).unwrap(), sig);
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(RingSignature::from_bytes(&longer).is_err());
    }
}
