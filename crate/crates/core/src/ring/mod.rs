//! Ring signatures over trapdoor permutations.
//!
//! Every member of the ring owns an RSA-style trapdoor permutation. A signer
//! picks a random glue value `v`, derives a symmetric key `k = H(m)` and
//! chains the members together with `c_i = E_k(c_{i-1} xor g_i(x_i))`. All
//! `x_i` except the signer's are random; the signer solves the one remaining
//! gap in the chain so that it closes back on `v`, then pulls the gap value
//! through its own trapdoor to obtain `x_s`. A verifier recomputes the chain
//! from the public keys alone and checks that it ends where it started.

mod prp;
mod signature;
mod trapdoor;

use thiserror::Error;

use crate::codec::DecodeError;

pub use prp::{fixed_width, prp_decrypt, prp_encrypt, FEISTEL_ROUNDS};
pub use signature::{
    message_key, required_domain_bits, ring_equation, ring_sign, ring_verify, RingSignature, DOMAIN_SLACK_BITS,
};
pub use trapdoor::{extended_apply, extended_invert, RingPublicKey, TrapdoorKeyPair, MIN_KEY_BITS};

#[derive(Debug, Error)]
pub enum RingError {
    #[error("key size {bits} is below the minimum of {min} bits")]
    BitsTooSmall { bits: u64, min: u64 },
    #[error("key size {0} must be even")]
    OddKeyBits(u64),
    #[error("invalid key: {0}")]
    InvalidKey(&'static str),
    #[error("domain of {domain_bits} bits cannot hold a {modulus_bits}-bit modulus")]
    DomainTooSmall { domain_bits: u64, modulus_bits: u64 },
    #[error("value does not fit in {domain_bits} bits")]
    ValueOutOfDomain { domain_bits: u64 },
    #[error("block width {0} must be even and non-zero")]
    OddDomain(u64),
    #[error("symmetric key must be non-empty")]
    EmptyKey,
    #[error("signer index {index} out of range for ring of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("signer key does not match ring member {index}")]
    KeyMismatch { index: usize },
    #[error("malformed signature: {0}")]
    Malformed(&'static str),
    #[error("decode: {0}")]
    Decode(DecodeError),
}
