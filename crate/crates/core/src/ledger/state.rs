use std::collections::{BTreeMap, BTreeSet};

use ed25519_dalek::{Signature, VerifyingKey};
use thiserror::Error;

use super::address::{derive_address, Address};
use super::block::{Block, BlockHash};
use super::tx::{OutPoint, ShieldedRef, ShieldedTx, Transaction, TransparentTx, TxId, TxOutput};
use super::{Amount, LedgerError, LedgerGroup};
use crate::codec::Writer;
use crate::hashing::{sha256, Hash256};
use crate::lsag::{lsag_verify, KeyImageSet};
use crate::stealth::StealthOutputMeta;

/// Why a transaction was refused. Validation never panics or aborts; it
/// reports the first rule the transaction breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidReason {
    #[error("transaction has no inputs")]
    NoInputs,
    #[error("transaction has no outputs")]
    NoOutputs,
    #[error("output amounts must be positive")]
    ZeroAmount,
    #[error("input {0} listed twice")]
    DuplicateInput(OutPoint),
    #[error("output {0} already spent")]
    AlreadySpent(OutPoint),
    #[error("output {0} does not exist or is not transparent")]
    UnknownOutput(OutPoint),
    #[error("input key does not own {0}")]
    OwnerMismatch(OutPoint),
    #[error("bad signature on input {0}")]
    BadSignature(usize),
    #[error("inputs do not equal outputs plus fee")]
    ConservationViolated,
    #[error("amount arithmetic overflow")]
    Overflow,
    #[error("ring references unknown shielded output {0}")]
    UnknownRingMember(ShieldedRef),
    #[error("ring member {0} listed twice")]
    DuplicateRingMember(ShieldedRef),
    #[error("ring members carry different amounts")]
    MixedRingAmounts,
    #[error("ring signature does not match the referenced one-time keys")]
    RingMismatch,
    #[error("key image already seen on chain")]
    KeyImageReused,
    #[error("ring signature does not verify")]
    BadRingSignature,
    #[error("minting is only allowed in the genesis block")]
    MintNotAllowed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtxoEntry {
    pub address: Address,
    pub amount: Amount,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShieldedEntry {
    pub outpoint: OutPoint,
    pub meta: StealthOutputMeta<LedgerGroup>,
    pub amount: Amount,
    pub height: u64,
}

/// Ledger state derived by replaying blocks from genesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    utxos: BTreeMap<OutPoint, UtxoEntry>,
    spent: BTreeSet<OutPoint>,
    shielded: Vec<ShieldedEntry>,
    key_images: KeyImageSet<LedgerGroup>,
    minted: Amount,
    fees_collected: Amount,
    shielded_spent: Amount,
    tip: Option<(u64, BlockHash)>,
}

impl Default for ChainState {
    fn default() -> Self {
        Self::new()
    }
}

impl ChainState {
    pub fn new() -> Self {
        Self {
            utxos: BTreeMap::new(),
            spent: BTreeSet::new(),
            shielded: Vec::new(),
            key_images: KeyImageSet::new(LedgerGroup::default()),
            minted: 0,
            fees_collected: 0,
            shielded_spent: 0,
            tip: None,
        }
    }

    pub fn tip(&self) -> Option<(u64, BlockHash)> {
        self.tip
    }

    /// Height the next block must carry.
    pub fn next_height(&self) -> u64 {
        self.tip.map_or(0, |(h, _)| h + 1)
    }

    pub fn utxos(&self) -> &BTreeMap<OutPoint, UtxoEntry> {
        &self.utxos
    }

    pub fn utxo(&self, outpoint: &OutPoint) -> Option<&UtxoEntry> {
        self.utxos.get(outpoint)
    }

    pub fn shielded_outputs(&self) -> &[ShieldedEntry] {
        &self.shielded
    }

    pub fn shielded_output(&self, r: ShieldedRef) -> Option<&ShieldedEntry> {
        usize::try_from(r.0).ok().and_then(|i| self.shielded.get(i))
    }

    pub fn key_images(&self) -> &KeyImageSet<LedgerGroup> {
        &self.key_images
    }

    pub fn fees_collected(&self) -> Amount {
        self.fees_collected
    }

    /// Total issued by the genesis mint.
    pub fn genesis_supply(&self) -> Amount {
        self.minted
    }

    /// Unspent transparent value + shielded value not yet spent + collected fees.
    /// Equals [`Self::genesis_supply`] at every height.
    pub fn total_supply(&self) -> u128 {
        let transparent: u128 = self.utxos.values().map(|u| u128::from(u.amount)).sum();
        let shielded: u128 = self.shielded.iter().map(|s| u128::from(s.amount)).sum();
        transparent + shielded - u128::from(self.shielded_spent) + u128::from(self.fees_collected)
    }

    /// Sum of unspent transparent outputs paid to `address`.
    pub fn balance(&self, address: &Address) -> Amount {
        self.utxos.values().filter(|u| &u.address == address).map(|u| u.amount).sum()
    }

    pub fn validate_transaction(&self, tx: &Transaction) -> Result<(), InvalidReason> {
        match tx {
            Transaction::Mint(mint) => {
                if self.tip.is_some() {
                    return Err(InvalidReason::MintNotAllowed);
                }
                check_outputs(&mint.outputs)?;
                Ok(())
            }
            Transaction::Transparent(tx) => self.validate_transparent(tx),
            Transaction::Shielded(tx) => self.validate_shielded(tx),
        }
    }

    fn validate_transparent(&self, tx: &TransparentTx) -> Result<(), InvalidReason> {
        if tx.inputs.is_empty() {
            return Err(InvalidReason::NoInputs);
        }
        let output_total = check_outputs(&tx.outputs)?;
        let mut seen = BTreeSet::new();
        let mut input_total: u128 = 0;
        let sighash = tx.sighash();
        for (i, input) in tx.inputs.iter().enumerate() {
            if !seen.insert(input.prev) {
                return Err(InvalidReason::DuplicateInput(input.prev));
            }
            if self.spent.contains(&input.prev) {
                return Err(InvalidReason::AlreadySpent(input.prev));
            }
            let utxo = self.utxos.get(&input.prev).ok_or(InvalidReason::UnknownOutput(input.prev))?;
            if derive_address(&input.public_key) != utxo.address {
                return Err(InvalidReason::OwnerMismatch(input.prev));
            }
            let key = VerifyingKey::from_bytes(&input.public_key).map_err(|_| InvalidReason::BadSignature(i))?;
            key.verify_strict(&sighash, &Signature::from_bytes(&input.signature))
                .map_err(|_| InvalidReason::BadSignature(i))?;
            input_total += u128::from(utxo.amount);
        }
        if input_total != output_total + u128::from(tx.fee) {
            return Err(InvalidReason::ConservationViolated);
        }
        Ok(())
    }

    fn validate_shielded(&self, tx: &ShieldedTx) -> Result<(), InvalidReason> {
        if tx.ring_member_refs.is_empty() {
            return Err(InvalidReason::NoInputs);
        }
        let output_total = check_outputs(&tx.outputs)?;
        let mut seen = BTreeSet::new();
        let mut ring_amount = None;
        let mut ring_keys = Vec::with_capacity(tx.ring_member_refs.len());
        for &r in &tx.ring_member_refs {
            if !seen.insert(r) {
                return Err(InvalidReason::DuplicateRingMember(r));
            }
            let entry = self.shielded_output(r).ok_or(InvalidReason::UnknownRingMember(r))?;
            if *ring_amount.get_or_insert(entry.amount) != entry.amount {
                return Err(InvalidReason::MixedRingAmounts);
            }
            ring_keys.push(entry.meta.onetime_public);
        }
        if tx.lsag.ring() != ring_keys.as_slice() {
            return Err(InvalidReason::RingMismatch);
        }
        match self.key_images.contains(tx.lsag.key_image()) {
            Ok(false) => {}
            Ok(true) => return Err(InvalidReason::KeyImageReused),
            Err(_) => return Err(InvalidReason::BadRingSignature),
        }
        if !lsag_verify(&LedgerGroup::default(), &tx.message(), &tx.lsag).unwrap_or(false) {
            return Err(InvalidReason::BadRingSignature);
        }
        let input_total = u128::from(ring_amount.unwrap_or(0));
        if input_total != output_total + u128::from(tx.fee) {
            return Err(InvalidReason::ConservationViolated);
        }
        Ok(())
    }

    /// Validates then applies; on error the state is unchanged.
    pub fn apply_transaction(&mut self, tx: &Transaction, height: u64) -> Result<(), InvalidReason> {
        self.validate_transaction(tx)?;
        let txid = tx.txid();
        match tx {
            Transaction::Mint(mint) => {
                let total: u128 = mint.outputs.iter().map(|o| u128::from(o.amount())).sum();
                self.minted = self
                    .minted
                    .checked_add(Amount::try_from(total).map_err(|_| InvalidReason::Overflow)?)
                    .ok_or(InvalidReason::Overflow)?;
            }
            Transaction::Transparent(tx) => {
                for input in &tx.inputs {
                    self.utxos.remove(&input.prev);
                    self.spent.insert(input.prev);
                }
            }
            Transaction::Shielded(tx) => {
                self.key_images.insert(tx.lsag.key_image()).map_err(|_| InvalidReason::BadRingSignature)?;
                let first = tx.ring_member_refs[0];
                self.shielded_spent += self.shielded_output(first).map_or(0, |e| e.amount);
            }
        }
        self.fees_collected += tx.fee();
        self.add_outputs(txid, tx.outputs(), height);
        Ok(())
    }

    fn add_outputs(&mut self, txid: TxId, outputs: &[TxOutput], height: u64) {
        for (index, output) in outputs.iter().enumerate() {
            let outpoint = OutPoint { txid, index: index as u32 };
            match output {
                TxOutput::Transparent { address, amount } => {
                    self.utxos.insert(outpoint, UtxoEntry { address: *address, amount: *amount, height });
                }
                TxOutput::Stealth { meta, amount } => {
                    self.shielded.push(ShieldedEntry { outpoint, meta: *meta, amount: *amount, height });
                }
            }
        }
    }

    /// Applies a whole block atomically.
    pub fn apply_block(&mut self, block: &Block) -> Result<(), LedgerError> {
        if block.compute_hash() != *block.block_hash() {
            return Err(LedgerError::BlockHashMismatch { height: block.height() });
        }
        let expected_prev = self.tip.map(|(_, h)| h).unwrap_or_default();
        if *block.previous_block_hash() != expected_prev {
            return Err(LedgerError::ForkMismatch { expected: expected_prev, found: *block.previous_block_hash() });
        }
        if block.height() != self.next_height() {
            return Err(LedgerError::HeightMismatch { expected: self.next_height(), found: block.height() });
        }
        let mut next = self.clone();
        for tx in block.transactions() {
            next.apply_transaction(tx, block.height())
                .map_err(|reason| LedgerError::InvalidTransaction { txid: tx.txid(), reason })?;
        }
        next.tip = Some((block.height(), *block.block_hash()));
        *self = next;
        Ok(())
    }

    /// SHA-256 of the canonical state serialization.
    pub fn digest(&self) -> Hash256 {
        let group = LedgerGroup::default();
        let mut w = Writer::new();
        match self.tip {
            Some((height, hash)) => w.put_u8(1).put_u64(height).put_fixed(&hash.0),
            None => w.put_u8(0),
        };
        w.put_u64(self.minted).put_u64(self.fees_collected).put_u64(self.shielded_spent);
        w.put_u64(self.utxos.len() as u64);
        for (outpoint, utxo) in &self.utxos {
            w.put_fixed(&outpoint.txid.0).put_u32(outpoint.index);
            w.put_fixed(&utxo.address.payload()).put_u64(utxo.amount).put_u64(utxo.height);
        }
        w.put_u64(self.spent.len() as u64);
        for outpoint in &self.spent {
            w.put_fixed(&outpoint.txid.0).put_u32(outpoint.index);
        }
        w.put_u64(self.shielded.len() as u64);
        for entry in &self.shielded {
            w.put_fixed(&entry.outpoint.txid.0).put_u32(entry.outpoint.index);
            entry.meta.encode(&group, &mut w);
            w.put_u64(entry.amount).put_u64(entry.height);
        }
        w.put_u64(self.key_images.len() as u64);
        for image in self.key_images.iter_encoded() {
            w.put_short_bytes(image);
        }
        sha256(w.as_slice())
    }
}

/// Outputs must be present and strictly positive; returns their sum.
fn check_outputs(outputs: &[TxOutput]) -> Result<u128, InvalidReason> {
    if outputs.is_empty() {
        return Err(InvalidReason::NoOutputs);
    }
    if outputs.iter().any(|o| o.amount() == 0) {
        return Err(InvalidReason::ZeroAmount);
    }
    Ok(outputs.iter().map(|o| u128::from(o.amount())).sum())
}

/// A produced block together with the mempool entries it refused.
#[derive(Debug, Clone)]
pub struct BlockProduction {
    pub block: Block,
    pub rejected: Vec<(TxId, InvalidReason)>,
}

/// Validates mempool entries in order against the evolving state, keeps every
/// transaction that is valid at its turn and reports the rest.
pub fn produce_block(mempool: &[Transaction], state: &ChainState) -> BlockProduction {
    let height = state.next_height();
    let mut scratch = state.clone();
    let mut included = Vec::new();
    let mut rejected = Vec::new();
    for tx in mempool {
        match scratch.apply_transaction(tx, height) {
            Ok(()) => included.push(tx.clone()),
            Err(reason) => rejected.push((tx.txid(), reason)),
        }
    }
    let previous = state.tip.map(|(_, h)| h).unwrap_or_default();
    BlockProduction { block: Block::new(height, previous, included), rejected }
}
