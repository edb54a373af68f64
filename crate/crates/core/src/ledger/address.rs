use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::{double_sha256, sha256};

/// Version byte prepended to every transparent address.
pub const ADDRESS_VERSION: u8 = 0x00;
pub const KEY_HASH_LEN: usize = 20;
const CHECKSUM_LEN: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddressError {
    #[error("address is not valid base58")]
    Base58,
    #[error("address payload has wrong length {0}")]
    Length(usize),
    #[error("unknown address version {0:#04x}")]
    Version(u8),
    #[error("address checksum mismatch")]
    Checksum,
}

/// Transparent address: `base58(version || H(pubkey)[..20] || checksum)`,
/// where the checksum is the first four bytes of a double SHA-256.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Address {
    key_hash: [u8; KEY_HASH_LEN],
}

/// Derives the address that owns outputs payable to `public_key_bytes`.
pub fn derive_address(public_key_bytes: &[u8]) -> Address {
    let digest = sha256(public_key_bytes);
    let mut key_hash = [0u8; KEY_HASH_LEN];
    key_hash.copy_from_slice(&digest[..KEY_HASH_LEN]);
    Address { key_hash }
}

impl Address {
    pub fn from_key_hash(key_hash: [u8; KEY_HASH_LEN]) -> Self {
        Self { key_hash }
    }

    pub fn key_hash(&self) -> &[u8; KEY_HASH_LEN] {
        &self.key_hash
    }

    /// `version || key hash`, the 21 bytes used inside transactions.
    pub fn payload(&self) -> [u8; KEY_HASH_LEN + 1] {
        let mut out = [0u8; KEY_HASH_LEN + 1];
        out[0] = ADDRESS_VERSION;
        out[1..].copy_from_slice(&self.key_hash);
        out
    }

    pub fn from_payload(payload: &[u8]) -> Result<Self, AddressError> {
        if payload.len() != KEY_HASH_LEN + 1 {
            return Err(AddressError::Length(payload.len()));
        }
        if payload[0] != ADDRESS_VERSION {
            return Err(AddressError::Version(payload[0]));
        }
        let mut key_hash = [0u8; KEY_HASH_LEN];
        key_hash.copy_from_slice(&payload[1..]);
        Ok(Self { key_hash })
    }

    pub fn encode(&self) -> String {
        let payload = self.payload();
        let checksum = double_sha256(&payload);
        let mut raw = payload.to_vec();
        raw.extend_from_slice(&checksum[..CHECKSUM_LEN]);
        bs58::encode(raw).into_string()
    }
}

impl FromStr for Address {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = bs58::decode(s).into_vec().map_err(|_| AddressError::Base58)?;
        if raw.len() != KEY_HASH_LEN + 1 + CHECKSUM_LEN {
            return Err(AddressError::Length(raw.len()));
        }
        let (payload, checksum) = raw.split_at(KEY_HASH_LEN + 1);
        if double_sha256(payload)[..CHECKSUM_LEN] != *checksum {
            return Err(AddressError::Checksum);
        }
        Self::from_payload(payload)
    }
}

impl TryFrom<String> for Address {
    type Error = AddressError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Address> for String {
    fn from(value: Address) -> Self {
        value.encode()
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.encode())
    }
}
