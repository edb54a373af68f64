use std::fmt;

use super::tx::{MintTx, Transaction, TxOutput};
use crate::codec::{DecodeError, Reader, Writer};
use crate::hashing::{sha256, Hash256};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BlockHash(pub Hash256);

impl fmt::Display for BlockHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for BlockHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlockHash({})", &hex::encode(self.0)[..16])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    height: u64,
    previous_block_hash: BlockHash,
    transactions: Vec<Transaction>,
    block_hash: BlockHash,
}

impl Block {
    pub fn new(height: u64, previous_block_hash: BlockHash, transactions: Vec<Transaction>) -> Self {
        let mut block = Self { height, previous_block_hash, transactions, block_hash: BlockHash::default() };
        block.block_hash = block.compute_hash();
        block
    }

    /// Height-0 block whose only transaction mints `outputs`.
    pub fn genesis(outputs: Vec<TxOutput>) -> Self {
        Self::new(0, BlockHash::default(), vec![Transaction::Mint(MintTx { outputs })])
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn previous_block_hash(&self) -> &BlockHash {
        &self.previous_block_hash
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn block_hash(&self) -> &BlockHash {
        &self.block_hash
    }

    /// SHA-256 over the canonical body (everything except the stored hash).
    pub fn compute_hash(&self) -> BlockHash {
        BlockHash(sha256(&self.body_bytes()))
    }

    fn body_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_u64(self.height).put_fixed(&self.previous_block_hash.0);
        w.put_u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            w.put_bytes(&tx.to_bytes());
        }
        w.into_bytes()
    }

    /// Canonical body followed by the 32-byte block hash.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = self.body_bytes();
        bytes.extend_from_slice(&self.block_hash.0);
        bytes
    }

    /// Decodes and checks that the stored hash recomputes.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let height = r.u64()?;
        let previous_block_hash = BlockHash(r.array()?);
        let count = r.u32()? as usize;
        if count > r.remaining() {
            return Err(DecodeError::Invalid("transaction count"));
        }
        let transactions = (0..count)
            .map(|_| Transaction::from_bytes(r.bytes()?))
            .collect::<Result<Vec<_>, _>>()?;
        let stored = BlockHash(r.array()?);
        r.finish()?;
        let block = Self::new(height, previous_block_hash, transactions);
        if block.block_hash != stored {
            return Err(DecodeError::Invalid("block hash"));
        }
        Ok(block)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(line: &str) -> Result<Self, DecodeError> {
        Self::from_bytes(&hex::decode(line.trim())?)
    }
}
