use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::address::Address;
use super::{Amount, LedgerGroup};
use crate::codec::{DecodeError, Reader, Writer};
use crate::hashing::{sha256, sha256_concat, Hash256};
use crate::lsag::LsagSignature;
use crate::stealth::StealthOutputMeta;

const SIGHASH_DOMAIN: &[u8] = b"fogtrace/sighash";
const SHIELDED_DOMAIN: &[u8] = b"fogtrace/shielded";

/// Hash of a transaction's canonical encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TxId(pub Hash256);

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({})", &hex::encode(self.0)[..16])
    }
}

impl FromStr for TxId {
    type Err = DecodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s)?;
        let array: Hash256 = bytes.try_into().map_err(|_| DecodeError::Invalid("transaction id length"))?;
        Ok(TxId(array))
    }
}

impl TryFrom<String> for TxId {
    type Error = DecodeError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<TxId> for String {
    fn from(value: TxId) -> Self {
        value.to_string()
    }
}

/// Reference to output `index` of transaction `txid`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutPoint {
    pub txid: TxId,
    pub index: u32,
}

impl OutPoint {
    fn encode(&self, w: &mut Writer) {
        w.put_fixed(&self.txid.0).put_u32(self.index);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { txid: TxId(r.array()?), index: r.u32()? })
    }
}

impl fmt::Display for OutPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.txid, self.index)
    }
}

/// Position of a stealth output in the chain-wide shielded registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShieldedRef(pub u64);

impl fmt::Display for ShieldedRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxOutput {
    Transparent { address: Address, amount: Amount },
    Stealth { meta: StealthOutputMeta<LedgerGroup>, amount: Amount },
}

impl TxOutput {
    pub fn amount(&self) -> Amount {
        match self {
            TxOutput::Transparent { amount, .. } | TxOutput::Stealth { amount, .. } => *amount,
        }
    }

    pub fn address(&self) -> Option<&Address> {
        match self {
            TxOutput::Transparent { address, .. } => Some(address),
            TxOutput::Stealth { .. } => None,
        }
    }

    fn encode(&self, w: &mut Writer) {
        match self {
            TxOutput::Transparent { address, amount } => {
                w.put_u8(0).put_fixed(&address.payload()).put_u64(*amount);
            }
            TxOutput::Stealth { meta, amount } => {
                w.put_u8(1);
                meta.encode(&LedgerGroup::default(), w);
                w.put_u64(*amount);
            }
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        match r.u8()? {
            0 => {
                let address = Address::from_payload(r.fixed(21)?).map_err(|_| DecodeError::Invalid("address"))?;
                Ok(TxOutput::Transparent { address, amount: r.u64()? })
            }
            1 => {
                let meta = StealthOutputMeta::decode(&LedgerGroup::default(), r)?;
                Ok(TxOutput::Stealth { meta, amount: r.u64()? })
            }
            _ => Err(DecodeError::Invalid("output kind")),
        }
    }
}

/// A transparent input: the spent output, the key that owns it and an
/// Ed25519 signature over the transaction's signature hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxInput {
    pub prev: OutPoint,
    pub public_key: [u8; 32],
    pub signature: [u8; 64],
}

/// Initial coin issuance; only valid in the genesis block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MintTx {
    pub outputs: Vec<TxOutput>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransparentTx {
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    pub fee: Amount,
}

impl TransparentTx {
    /// The hash every input signs: inputs without signatures, outputs, fee.
    pub fn sighash(&self) -> Hash256 {
        signature_hash(self.inputs.iter().map(|i| (&i.prev, &i.public_key)), &self.outputs, self.fee)
    }
}

pub(crate) fn signature_hash<'a>(
    inputs: impl ExactSizeIterator<Item = (&'a OutPoint, &'a [u8; 32])>,
    outputs: &[TxOutput],
    fee: Amount,
) -> Hash256 {
    let mut w = Writer::new();
    w.put_fixed(SIGHASH_DOMAIN).put_u32(inputs.len() as u32);
    for (prev, key) in inputs {
        prev.encode(&mut w);
        w.put_fixed(key);
    }
    encode_outputs(outputs, &mut w);
    w.put_u64(fee);
    sha256(w.as_slice())
}

/// Spend of one stealth output hidden among `ring_member_refs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShieldedTx {
    pub ring_member_refs: Vec<ShieldedRef>,
    pub lsag: LsagSignature<LedgerGroup>,
    pub outputs: Vec<TxOutput>,
    pub fee: Amount,
}

impl ShieldedTx {
    /// The message the ring signature covers.
    pub fn message(&self) -> Hash256 {
        shielded_message(&self.ring_member_refs, &self.outputs, self.fee)
    }
}

pub(crate) fn shielded_message(refs: &[ShieldedRef], outputs: &[TxOutput], fee: Amount) -> Hash256 {
    let mut w = Writer::new();
    w.put_u32(refs.len() as u32);
    for r in refs {
        w.put_u64(r.0);
    }
    encode_outputs(outputs, &mut w);
    w.put_u64(fee);
    sha256_concat(&[SHIELDED_DOMAIN, w.as_slice()])
}

fn encode_outputs(outputs: &[TxOutput], w: &mut Writer) {
    w.put_u32(outputs.len() as u32);
    for o in outputs {
        o.encode(w);
    }
}

fn decode_list<T>(
    r: &mut Reader<'_>,
    mut item: impl FnMut(&mut Reader<'_>) -> Result<T, DecodeError>,
) -> Result<Vec<T>, DecodeError> {
    let count = r.u32()? as usize;
    if count > r.remaining() {
        return Err(DecodeError::Invalid("list length"));
    }
    (0..count).map(|_| item(r)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transaction {
    Mint(MintTx),
    Transparent(TransparentTx),
    Shielded(ShieldedTx),
}

impl Transaction {
    pub fn outputs(&self) -> &[TxOutput] {
        match self {
            Transaction::Mint(tx) => &tx.outputs,
            Transaction::Transparent(tx) => &tx.outputs,
            Transaction::Shielded(tx) => &tx.outputs,
        }
    }

    pub fn fee(&self) -> Amount {
        match self {
            Transaction::Mint(_) => 0,
            Transaction::Transparent(tx) => tx.fee,
            Transaction::Shielded(tx) => tx.fee,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Transaction::Mint(_) => "mint",
            Transaction::Transparent(_) => "transparent",
            Transaction::Shielded(_) => "shielded",
        }
    }

    pub fn txid(&self) -> TxId {
        TxId(sha256(&self.to_bytes()))
    }

    pub fn outpoint(&self, index: u32) -> OutPoint {
        OutPoint { txid: self.txid(), index }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let tx = Self::decode(&mut r)?;
        r.finish()?;
        Ok(tx)
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        match self {
            Transaction::Mint(tx) => {
                w.put_u8(0);
                encode_outputs(&tx.outputs, w);
            }
            Transaction::Transparent(tx) => {
                w.put_u8(1).put_u32(tx.inputs.len() as u32);
                for input in &tx.inputs {
                    input.prev.encode(w);
                    w.put_fixed(&input.public_key).put_fixed(&input.signature);
                }
                encode_outputs(&tx.outputs, w);
                w.put_u64(tx.fee);
            }
            Transaction::Shielded(tx) => {
                w.put_u8(2).put_u32(tx.ring_member_refs.len() as u32);
                for r in &tx.ring_member_refs {
                    w.put_u64(r.0);
                }
                w.put_bytes(&tx.lsag.to_bytes(&LedgerGroup::default()));
                encode_outputs(&tx.outputs, w);
                w.put_u64(tx.fee);
            }
        }
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        match r.u8()? {
            0 => Ok(Transaction::Mint(MintTx { outputs: decode_list(r, TxOutput::decode)? })),
            1 => {
                let inputs = decode_list(r, |r| {
                    Ok(TxInput { prev: OutPoint::decode(r)?, public_key: r.array()?, signature: r.array()? })
                })?;
                let outputs = decode_list(r, TxOutput::decode)?;
                Ok(Transaction::Transparent(TransparentTx { inputs, outputs, fee: r.u64()? }))
            }
            2 => {
                let ring_member_refs = decode_list(r, |r| Ok(ShieldedRef(r.u64()?)))?;
                let lsag = LsagSignature::from_bytes(&LedgerGroup::default(), r.bytes()?)
                    .map_err(|_| DecodeError::Invalid("ring signature"))?;
                let outputs = decode_list(r, TxOutput::decode)?;
                Ok(Transaction::Shielded(ShieldedTx { ring_member_refs, lsag, outputs, fee: r.u64()? }))
            }
            _ => Err(DecodeError::Invalid("transaction kind")),
        }
    }
}
