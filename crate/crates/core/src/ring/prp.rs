//! Keyed permutation `E_k` over `b`-bit blocks: a 4-round balanced Feistel
//! network whose round function is SHA-256 keyed by `k` and the round index.

use num_bigint::BigUint;
use num_traits::One;

use super::RingError;
use crate::hashing::sha256_concat;

pub const FEISTEL_ROUNDS: u8 = 4;

/// Encrypts a `bits`-wide block under `key`.
pub fn prp_encrypt(key: &[u8], block: &BigUint, bits: u64) -> Result<BigUint, RingError> {
    let half = check(key, block, bits)?;
    let mask = (BigUint::one() << half) - 1u32;
    let mut left = block >> half;
    let mut right = block & &mask;
    for round in 0..FEISTEL_ROUNDS {
        let next_right = left ^ round_function(key, round, &right, half);
        left = right;
        right = next_right;
    }
    Ok((left << half) | right)
}

/// Exact inverse of [`prp_encrypt`].
pub fn prp_decrypt(key: &[u8], block: &BigUint, bits: u64) -> Result<BigUint, RingError> {
    let half = check(key, block, bits)?;
    let mask = (BigUint::one() << half) - 1u32;
    let mut left = block >> half;
    let mut right = block & &mask;
    for round in (0..FEISTEL_ROUNDS).rev() {
        let prev_left = right ^ round_function(key, round, &left, half);
        right = left;
        left = prev_left;
    }
    Ok((left << half) | right)
}

fn check(key: &[u8], block: &BigUint, bits: u64) -> Result<u64, RingError> {
    if bits == 0 || bits % 2 != 0 {
        return Err(RingError::OddDomain(bits));
    }
    if key.is_empty() {
        return Err(RingError::EmptyKey);
    }
    if block.bits() > bits {
        return Err(RingError::ValueOutOfDomain { domain_bits: bits });
    }
    Ok(bits / 2)
}

/// `F(k, i, R)`: SHA-256 of `k || i || R`, truncated to `half` bits.
///
/// `R` is encoded big-endian in `ceil(half / 8)` bytes. Widths above 256 bits
/// continue the stream with `SHA-256(k || i || R || j)` for a 4-byte counter
/// `j = 1, 2, ...`. The leading `ceil(half / 8)` stream bytes are read
/// big-endian and reduced to their low `half` bits.
fn round_function(key: &[u8], round: u8, right: &BigUint, half: u64) -> BigUint {
    let width = half.div_ceil(8) as usize;
    let encoded = fixed_width(right, width);
    let mut stream = Vec::with_capacity(width + 32);
    stream.extend_from_slice(&sha256_concat(&[key, &[round], &encoded]));
    let mut counter: u32 = 1;
    while stream.len() < width {
        stream.extend_from_slice(&sha256_concat(&[key, &[round], &encoded, &counter.to_be_bytes()]));
        counter += 1;
    }
    stream.truncate(width);
    let excess = (width as u64) * 8 - half;
    if excess > 0 {
        stream[0] &= 0xff >> excess;
    }
    BigUint::from_bytes_be(&stream)
}

/// Big-endian encoding left-padded to `width` bytes.
///
/// # Panics
///
/// Panics if `value` does not fit in `width` bytes.
pub fn fixed_width(value: &BigUint, width: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    let raw: &[u8] = if raw == [0] { &[] } else { &raw };
    assert!(raw.len() <= width, "value wider than {width} bytes");
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(raw);
    out
}
