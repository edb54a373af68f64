//! Dual-key stealth addresses.
//!
//! A recipient publishes `(A, B) = (a*G, b*G)`. For every payment the sender
//! picks a fresh `r`, publishes `R = r*G` and pays to the one-time key
//! `P = Hs(r*A)*G + B`. Only the holder of `a` can recognise `P` (since
//! `r*A = a*R`) and only the holder of `b` as well can spend it, with the
//! one-time secret `x = Hs(a*R) + b`.

use thiserror::Error;

use crate::codec::{DecodeError, Reader, Writer};
use crate::group::Group;
use crate::hashing::seeded_rng;

const SHARED_SECRET_DOMAIN: &[u8] = b"fogtrace/stealth";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StealthError {
    #[error("recipient key is the identity element")]
    IdentityPoint,
    #[error("output does not belong to these keys")]
    NotOwner,
}

/// A recipient's long-term public pair `(A, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StealthAddress<G: Group> {
    pub scan_public: G::Point,
    pub spend_public: G::Point,
}

impl<G: Group> StealthAddress<G> {
    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_short_bytes(&group.encode_point(&self.scan_public))
            .put_short_bytes(&group.encode_point(&self.spend_public));
        w.into_bytes()
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let scan_public = group.decode_point(r.short_bytes()?).ok_or(DecodeError::Invalid("scan key"))?;
        let spend_public = group.decode_point(r.short_bytes()?).ok_or(DecodeError::Invalid("spend key"))?;
        r.finish()?;
        Ok(Self { scan_public, spend_public })
    }
}

/// Full recipient key material.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StealthRecipientKeys<G: Group> {
    scan_secret: G::Scalar,
    scan_public: G::Point,
    spend_secret: G::Scalar,
    spend_public: G::Point,
}

impl<G: Group> StealthRecipientKeys<G> {
    pub fn from_secrets(group: &G, scan_secret: G::Scalar, spend_secret: G::Scalar) -> Self {
        Self {
            scan_secret,
            scan_public: group.mul_generator(&scan_secret),
            spend_secret,
            spend_public: group.mul_generator(&spend_secret),
        }
    }

    pub fn address(&self) -> StealthAddress<G> {
        StealthAddress { scan_public: self.scan_public, spend_public: self.spend_public }
    }

    pub fn scan_secret(&self) -> &G::Scalar {
        &self.scan_secret
    }

    pub fn spend_secret(&self) -> &G::Scalar {
        &self.spend_secret
    }
}

/// What the sender publishes with each stealth output: `R` and `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StealthOutputMeta<G: Group> {
    pub tx_public: G::Point,
    pub onetime_public: G::Point,
}

impl<G: Group> StealthOutputMeta<G> {
    pub fn encode(&self, group: &G, w: &mut Writer) {
        w.put_short_bytes(&group.encode_point(&self.tx_public))
            .put_short_bytes(&group.encode_point(&self.onetime_public));
    }

    pub fn decode(group: &G, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let tx_public = group.decode_point(r.short_bytes()?).ok_or(DecodeError::Invalid("tx public key"))?;
        let onetime_public =
            group.decode_point(r.short_bytes()?).ok_or(DecodeError::Invalid("one-time public key"))?;
        Ok(Self { tx_public, onetime_public })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ownership {
    Mine,
    NotMine,
}

/// Scan and spend secrets are drawn one after the other from the seeded stream.
pub fn stealth_keygen<G: Group>(group: &G, rng_seed: &[u8]) -> StealthRecipientKeys<G> {
    let mut rng = seeded_rng(rng_seed);
    let scan_secret = group.random_nonzero_scalar(&mut rng);
    let spend_secret = group.random_nonzero_scalar(&mut rng);
    StealthRecipientKeys::from_secrets(group, scan_secret, spend_secret)
}

fn shared_scalar<G: Group>(group: &G, shared_point: &G::Point) -> G::Scalar {
    let mut data = SHARED_SECRET_DOMAIN.to_vec();
    data.extend_from_slice(&group.encode_point(shared_point));
    group.hash_to_scalar(&data)
}

/// Sender side. Only the recipient's public pair is consulted.
pub fn derive_onetime_output<G: Group>(
    group: &G,
    recipient: &StealthAddress<G>,
    rng_seed: &[u8],
) -> Result<StealthOutputMeta<G>, StealthError> {
    let identity = group.identity();
    if recipient.scan_public == identity || recipient.spend_public == identity {
        return Err(StealthError::IdentityPoint);
    }
    let mut rng = seeded_rng(rng_seed);
    let r = group.random_nonzero_scalar(&mut rng);
    let shared = shared_scalar(group, &group.mul(&recipient.scan_public, &r));
    Ok(StealthOutputMeta {
        tx_public: group.mul_generator(&r),
        onetime_public: group.add(&group.mul_generator(&shared), &recipient.spend_public),
    })
}

pub fn scan_output<G: Group>(group: &G, meta: &StealthOutputMeta<G>, keys: &StealthRecipientKeys<G>) -> Ownership {
    let shared = shared_scalar(group, &group.mul(&meta.tx_public, &keys.scan_secret));
    let expected = group.add(&group.mul_generator(&shared), &keys.spend_public);
    if expected == meta.onetime_public {
        Ownership::Mine
    } else {
        Ownership::NotMine
    }
}

/// `x = Hs(a*R) + b`, so that `x*G = P`.
pub fn recover_onetime_secret<G: Group>(
    group: &G,
    meta: &StealthOutputMeta<G>,
    keys: &StealthRecipientKeys<G>,
) -> Result<G::Scalar, StealthError> {
    if scan_output(group, meta, keys) == Ownership::NotMine {
        return Err(StealthError::NotOwner);
    }
    let shared = shared_scalar(group, &group.mul(&meta.tx_public, &keys.scan_secret));
    Ok(group.scalar_add(&shared, &keys.spend_secret))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Ristretto, ToySchnorr};
    use crate::lsag::{lsag_keygen, lsag_sign, lsag_verify, LsagKeyPair};

    #[test]
    fn keygen_satisfies_definition() {
        let g = Ristretto;
        let keys = stealth_keygen(&g, &[7]);
        assert_eq!(keys.address().scan_public, g.mul_generator(keys.scan_secret()));
        assert_eq!(keys.address().spend_public, g.mul_generator(keys.spend_secret()));
        assert_ne!(keys.scan_secret(), keys.spend_secret());
    }

    #[test]
    fn owner_finds_and_can_spend_output() {
        let g = Ristretto;
        let victor = stealth_keygen(&g, b"victor");
        let meta = derive_onetime_output(&g, &victor.address(), b"r").unwrap();
        assert_eq!(scan_output(&g, &meta, &victor), Ownership::Mine);
        let x = recover_onetime_secret(&g, &meta, &victor).unwrap();
        assert_eq!(g.mul_generator(&x), meta.onetime_public);

        let kp = LsagKeyPair::from_secret(&g, x).unwrap();
        let decoy = lsag_keygen(&g, b"decoy");
        let ring = [*decoy.public(), meta.onetime_public];
        let sig = lsag_sign(&g, b"tx", &ring, 1, &kp, b"n").unwrap();
        assert!(lsag_verify(&g, b"tx", &sig).unwrap());
    }

    #[test]
    fn third_party_cannot_claim() {
        let g = Ristretto;
        let victor = stealth_keygen(&g, b"victor");
        let eve = stealth_keygen(&g, b"eve");
        let meta = derive_onetime_output(&g, &victor.address(), b"r").unwrap();
        assert_eq!(scan_output(&g, &meta, &eve), Ownership::NotMine);
        assert_eq!(recover_onetime_secret(&g, &meta, &eve), Err(StealthError::NotOwner));
    }

    #[test]
    fn fresh_randomness_gives_unlinkable_outputs() {
        let g = Ristretto;
        let victor = stealth_keygen(&g, b"victor");
        let a = derive_onetime_output(&g, &victor.address(), b"r1").unwrap();
        let b = derive_onetime_output(&g, &victor.address(), b"r2").unwrap();
        assert_ne!(a.onetime_public, b.onetime_public);
        assert_ne!(a.tx_public, b.tx_public);
    }

    #[test]
    fn identity_recipient_rejected() {
        let g = ToySchnorr::order_11();
        let keys = stealth_keygen(&g, b"k");
        let mut addr = keys.address();
        addr.scan_public = g.identity();
        assert_eq!(derive_onetime_output(&g, &addr, b"r"), Err(StealthError::IdentityPoint));
    }

    #[test]
    fn address_encoding_roundtrip() {
        let g = Ristretto;
        let addr = stealth_keygen(&g, b"k").address();
        assert_eq!(StealthAddress::from_bytes(&g, &addr.to_bytes(&g)).unwrap(), addr);
    }
}
