//! Linkable spontaneous anonymous group (LSAG) signatures.
//!
//! A single-layer ring signature over a [`Group`] that carries a key image
//! `I = x * Hp(P)`. The image is a deterministic function of the signing key,
//! so two signatures by the same key are linked without revealing which ring
//! member produced either of them. Amount commitments and multi-layer rings
//! are not modelled.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::{DecodeError, Reader, Writer};
use crate::group::{Group, GroupTag};
use crate::hashing::seeded_rng;

const KEY_IMAGE_DOMAIN: &[u8] = b"fogtrace/key-image";
const CHALLENGE_DOMAIN: &[u8] = b"fogtrace/lsag";

#[derive(Debug, Error)]
pub enum LsagError {
    #[error("signer index {index} out of range for ring of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("ring member {index} is not the signer's public key")]
    KeyMismatch { index: usize },
    #[error("secret scalar must be non-zero")]
    ZeroSecret,
    #[error("malformed signature: {0}")]
    Malformed(&'static str),
    #[error("group backends differ: {left} vs {right}")]
    BackendMismatch { left: GroupTag, right: GroupTag },
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LsagKeyPair<G: Group> {
    secret: G::Scalar,
    public: G::Point,
}

impl<G: Group> LsagKeyPair<G> {
    pub fn from_secret(group: &G, secret: G::Scalar) -> Result<Self, LsagError> {
        if group.scalar_is_zero(&secret) {
            return Err(LsagError::ZeroSecret);
        }
        Ok(Self { secret, public: group.mul_generator(&secret) })
    }

    pub fn secret(&self) -> &G::Scalar {
        &self.secret
    }

    pub fn public(&self) -> &G::Point {
        &self.public
    }
}

/// Deterministic keypair from a seed; a zero secret is never returned.
pub fn lsag_keygen<G: Group>(group: &G, rng_seed: &[u8]) -> LsagKeyPair<G> {
    let mut rng = seeded_rng(rng_seed);
    let secret = group.random_nonzero_scalar(&mut rng);
    LsagKeyPair { secret, public: group.mul_generator(&secret) }
}

/// The linkability tag `x * Hp(P)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyImage<G: Group> {
    tag: GroupTag,
    point: G::Point,
}

impl<G: Group> KeyImage<G> {
    pub fn from_point(group: &G, point: G::Point) -> Self {
        Self { tag: group.tag(), point }
    }

    pub fn point(&self) -> &G::Point {
        &self.point
    }

    pub fn tag(&self) -> GroupTag {
        self.tag
    }

    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut w = Writer::new();
        self.tag.encode(&mut w);
        w.put_short_bytes(&group.encode_point(&self.point));
        w.into_bytes()
    }
}

/// `Hp(P)`: the per-key base point the image is taken over.
pub fn key_image_base<G: Group>(group: &G, public: &G::Point) -> G::Point {
    let mut data = KEY_IMAGE_DOMAIN.to_vec();
    data.extend_from_slice(&group.encode_point(public));
    group.hash_to_point(&data)
}

pub fn key_image<G: Group>(group: &G, kp: &LsagKeyPair<G>) -> KeyImage<G> {
    let base = key_image_base(group, &kp.public);
    KeyImage { tag: group.tag(), point: group.mul(&base, &kp.secret) }
}

/// True iff both images are the same point; images from different backends
/// cannot be compared.
pub fn is_linked<G: Group>(a: &KeyImage<G>, b: &KeyImage<G>) -> Result<bool, LsagError> {
    if a.tag != b.tag {
        return Err(LsagError::BackendMismatch { left: a.tag, right: b.tag });
    }
    Ok(a.point == b.point)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LsagSignature<G: Group> {
    ring: Vec<G::Point>,
    c1: G::Scalar,
    responses: Vec<G::Scalar>,
    key_image: KeyImage<G>,
}

impl<G: Group> LsagSignature<G> {
    pub fn from_parts(
        ring: Vec<G::Point>,
        c1: G::Scalar,
        responses: Vec<G::Scalar>,
        key_image: KeyImage<G>,
    ) -> Result<Self, LsagError> {
        let sig = Self { ring, c1, responses, key_image };
        sig.check_structure()?;
        Ok(sig)
    }

    pub fn ring(&self) -> &[G::Point] {
        &self.ring
    }

    /// Challenge entering ring position 0.
    pub fn c1(&self) -> &G::Scalar {
        &self.c1
    }

    pub fn responses(&self) -> &[G::Scalar] {
        &self.responses
    }

    pub fn key_image(&self) -> &KeyImage<G> {
        &self.key_image
    }

    fn check_structure(&self) -> Result<(), LsagError> {
        if self.ring.is_empty() {
            return Err(LsagError::Malformed("empty ring"));
        }
        if self.ring.len() != self.responses.len() {
            return Err(LsagError::Malformed("ring and response counts differ"));
        }
        if self.ring.len() > usize::from(u16::MAX) {
            return Err(LsagError::Malformed("ring too large"));
        }
        Ok(())
    }

    /// Backend tag, ring length (u16), u16-length-prefixed points, `c1` and
    /// the responses as fixed-width big-endian scalars, then the key image point.
    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut w = Writer::new();
        group.tag().encode(&mut w);
        w.put_u16(self.ring.len() as u16);
        for p in &self.ring {
            w.put_short_bytes(&group.encode_point(p));
        }
        w.put_fixed(&group.encode_scalar(&self.c1));
        for s in &self.responses {
            w.put_fixed(&group.encode_scalar(s));
        }
        w.put_short_bytes(&group.encode_point(&self.key_image.point));
        w.into_bytes()
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, LsagError> {
        let mut r = Reader::new(bytes);
        let sig = Self::decode(group, &mut r)?;
        r.finish()?;
        Ok(sig)
    }

    pub(crate) fn decode(group: &G, r: &mut Reader<'_>) -> Result<Self, LsagError> {
        let tag = GroupTag::decode(r)?;
        if tag != group.tag() {
            return Err(LsagError::BackendMismatch { left: tag, right: group.tag() });
        }
        let count = usize::from(r.u16()?);
        let point = |r: &mut Reader<'_>| {
            group.decode_point(r.short_bytes()?).ok_or(DecodeError::Invalid("group point"))
        };
        let scalar = |r: &mut Reader<'_>| {
            group.decode_scalar(r.fixed(group.scalar_width())?).ok_or(DecodeError::Invalid("scalar"))
        };
        let ring = (0..count).map(|_| point(r)).collect::<Result<Vec<_>, _>>()?;
        let c1 = scalar(r)?;
        let responses = (0..count).map(|_| scalar(r)).collect::<Result<Vec<_>, _>>()?;
        let image = point(r)?;
        Self::from_parts(ring, c1, responses, KeyImage { tag, point: image })
    }
}

fn challenge<G: Group>(group: &G, message: &[u8], l: &G::Point, r: &G::Point) -> G::Scalar {
    let mut w = Writer::new();
    w.put_fixed(CHALLENGE_DOMAIN)
        .put_bytes(message)
        .put_short_bytes(&group.encode_point(l))
        .put_short_bytes(&group.encode_point(r));
    group.hash_to_scalar(w.as_slice())
}

/// `(r*G + c*P, r*Hp(P) + c*I)` for one ring position.
fn commitments<G: Group>(
    group: &G,
    response: &G::Scalar,
    challenge: &G::Scalar,
    member: &G::Point,
    image: &G::Point,
) -> (G::Point, G::Point) {
    let l = group.add(&group.mul_generator(response), &group.mul(member, challenge));
    let base = key_image_base(group, member);
    let r = group.add(&group.mul(&base, response), &group.mul(image, challenge));
    (l, r)
}

pub fn lsag_sign<G: Group>(
    group: &G,
    message: &[u8],
    ring: &[G::Point],
    signer_index: usize,
    kp: &LsagKeyPair<G>,
    rng_seed: &[u8],
) -> Result<LsagSignature<G>, LsagError> {
    let n = ring.len();
    if n == 0 {
        return Err(LsagError::Malformed("empty ring"));
    }
    if signer_index >= n {
        return Err(LsagError::IndexOutOfRange { index: signer_index, len: n });
    }
    if ring[signer_index] != kp.public {
        return Err(LsagError::KeyMismatch { index: signer_index });
    }
    let mut rng = seeded_rng(rng_seed);
    let image = key_image(group, kp);
    let zero = group.scalar_from_u64(0);
    let mut challenges = vec![zero; n];
    let mut responses = vec![zero; n];

    let alpha = group.random_nonzero_scalar(&mut rng);
    let signer_base = key_image_base(group, &kp.public);
    let mut i = (signer_index + 1) % n;
    challenges[i] = challenge(group, message, &group.mul_generator(&alpha), &group.mul(&signer_base, &alpha));
    while i != signer_index {
        responses[i] = group.random_scalar(&mut rng);
        let (l, r) = commitments(group, &responses[i], &challenges[i], &ring[i], &image.point);
        let next = (i + 1) % n;
        challenges[next] = challenge(group, message, &l, &r);
        i = next;
    }
    responses[signer_index] =
        group.scalar_sub(&alpha, &group.scalar_mul(&challenges[signer_index], &kp.secret));

    Ok(LsagSignature { ring: ring.to_vec(), c1: challenges[0], responses, key_image: image })
}

/// Recomputes the challenge chain from `c1` and accepts iff it closes.
pub fn lsag_verify<G: Group>(group: &G, message: &[u8], sig: &LsagSignature<G>) -> Result<bool, LsagError> {
    sig.check_structure()?;
    if sig.key_image.tag != group.tag() {
        return Err(LsagError::BackendMismatch { left: sig.key_image.tag, right: group.tag() });
    }
    if sig.key_image.point == group.identity() {
        return Ok(false);
    }
    let mut c = sig.c1;
    for (member, response) in sig.ring.iter().zip(&sig.responses) {
        let (l, r) = commitments(group, response, &c, member, &sig.key_image.point);
        c = challenge(group, message, &l, &r);
    }
    Ok(c == sig.c1)
}

/// Set of key images already spent, scoped to one backend.
#[derive(Debug, Clone)]
pub struct KeyImageSet<G: Group> {
    group: G,
    seen: BTreeSet<Vec<u8>>,
}

impl<G: Group> KeyImageSet<G> {
    pub fn new(group: G) -> Self {
        Self { group, seen: BTreeSet::new() }
    }

    pub fn contains(&self, image: &KeyImage<G>) -> Result<bool, LsagError> {
        self.check_tag(image)?;
        Ok(self.seen.contains(&image.to_bytes(&self.group)))
    }

    /// Records the image; returns `false` if it had been seen before.
    pub fn insert(&mut self, image: &KeyImage<G>) -> Result<bool, LsagError> {
        self.check_tag(image)?;
        Ok(self.seen.insert(image.to_bytes(&self.group)))
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    /// Encoded images in sorted order.
    pub fn iter_encoded(&self) -> impl Iterator<Item = &[u8]> {
        self.seen.iter().map(Vec::as_slice)
    }

    fn check_tag(&self, image: &KeyImage<G>) -> Result<(), LsagError> {
        if image.tag != self.group.tag() {
            return Err(LsagError::BackendMismatch { left: image.tag, right: self.group.tag() });
        }
        Ok(())
    }
}

impl<G: Group> PartialEq for KeyImageSet<G> {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.seen == other.seen
    }
}

impl<G: Group> Eq for KeyImageSet<G> {}
