use std::collections::BTreeSet;

use ed25519_dalek::{Signer, SigningKey};
use rand::seq::SliceRandom;

use super::address::{derive_address, Address};
use super::state::ChainState;
use super::tx::{shielded_message, signature_hash, OutPoint, ShieldedRef, ShieldedTx, TransparentTx, TxInput, TxOutput};
use super::{Amount, LedgerError, LedgerGroup};
use crate::group::Group;
use crate::hashing::{derive_seed, seeded_rng};
use crate::lsag::{key_image, lsag_sign, KeyImage, LsagKeyPair};
use crate::stealth::{derive_onetime_output, recover_onetime_secret, scan_output, Ownership, StealthAddress, StealthRecipientKeys};

/// A set of Ed25519 keys; the first key's address receives change.
#[derive(Clone)]
pub struct TransparentWallet {
    keys: Vec<SigningKey>,
}

impl std::fmt::Debug for TransparentWallet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransparentWallet").field("addresses", &self.addresses()).finish()
    }
}

impl TransparentWallet {
    /// Panics if `keys` is empty.
    pub fn new(keys: Vec<SigningKey>) -> Self {
        assert!(!keys.is_empty(), "wallet needs at least one key");
        Self { keys }
    }

    /// `count` keys derived deterministically from `seed`.
    pub fn from_seed(seed: &[u8], count: usize) -> Self {
        let keys = (0..count.max(1))
            .map(|i| SigningKey::from_bytes(&derive_seed(seed, format!("ed25519/{i}").as_bytes())))
            .collect();
        Self { keys }
    }

    pub fn keys(&self) -> &[SigningKey] {
        &self.keys
    }

    pub fn primary_address(&self) -> Address {
        derive_address(self.keys[0].verifying_key().as_bytes())
    }

    pub fn addresses(&self) -> Vec<Address> {
        self.keys.iter().map(|k| derive_address(k.verifying_key().as_bytes())).collect()
    }

    fn key_for(&self, address: &Address) -> Option<&SigningKey> {
        self.keys.iter().find(|k| derive_address(k.verifying_key().as_bytes()) == *address)
    }

    /// Unspent outputs this wallet can sign for, oldest first.
    pub fn spendable(&self, state: &ChainState) -> Vec<(OutPoint, Amount)> {
        let mine: BTreeSet<Address> = self.addresses().into_iter().collect();
        let mut out: Vec<_> = state
            .utxos()
            .iter()
            .filter(|(_, u)| mine.contains(&u.address))
            .map(|(op, u)| (u.height, *op, u.amount))
            .collect();
        out.sort();
        out.into_iter().map(|(_, op, amount)| (op, amount)).collect()
    }

    pub fn balance(&self, state: &ChainState) -> Amount {
        self.spendable(state).iter().map(|(_, a)| a).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payee {
    Transparent(Address),
    Stealth(StealthAddress<LedgerGroup>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Payment {
    pub payee: Payee,
    pub amount: Amount,
}

impl Payment {
    pub fn transparent(address: Address, amount: Amount) -> Self {
        Self { payee: Payee::Transparent(address), amount }
    }

    pub fn stealth(address: StealthAddress<LedgerGroup>, amount: Amount) -> Self {
        Self { payee: Payee::Stealth(address), amount }
    }
}

fn payment_total(payments: &[Payment]) -> Result<u128, LedgerError> {
    if payments.is_empty() {
        return Err(LedgerError::NoRecipients);
    }
    if payments.iter().any(|p| p.amount == 0) {
        return Err(LedgerError::ZeroAmount);
    }
    Ok(payments.iter().map(|p| u128::from(p.amount)).sum())
}

/// Stealth payees get a fresh one-time output each, seeded per position.
fn materialize(payments: &[Payment], seed: &[u8]) -> Result<Vec<TxOutput>, LedgerError> {
    let group = LedgerGroup::default();
    payments
        .iter()
        .enumerate()
        .map(|(i, p)| match p.payee {
            Payee::Transparent(address) => Ok(TxOutput::Transparent { address, amount: p.amount }),
            Payee::Stealth(address) => {
                let meta = derive_onetime_output(&group, &address, &derive_seed(seed, format!("output/{i}").as_bytes()))?;
                Ok(TxOutput::Stealth { meta, amount: p.amount })
            }
        })
        .collect()
}

/// Transparent spend to plain addresses. Change, if any, goes to the
/// wallet's primary address as the last output.
pub fn build_transparent_tx(
    wallet: &TransparentWallet,
    recipients: &[(Address, Amount)],
    fee: Amount,
    state: &ChainState,
) -> Result<TransparentTx, LedgerError> {
    let payments: Vec<_> = recipients.iter().map(|&(a, amount)| Payment::transparent(a, amount)).collect();
    build_payment_tx(wallet, &payments, fee, state, b"")
}

/// Transparent spend whose payees may be stealth addresses; `seed` drives the
/// one-time keys of stealth outputs.
pub fn build_payment_tx(
    wallet: &TransparentWallet,
    payments: &[Payment],
    fee: Amount,
    state: &ChainState,
    seed: &[u8],
) -> Result<TransparentTx, LedgerError> {
    let required = payment_total(payments)? + u128::from(fee);
    let spendable = wallet.spendable(state);
    let mut selected = Vec::new();
    let mut gathered: u128 = 0;
    for (outpoint, amount) in spendable {
        if gathered >= required {
            break;
        }
        gathered += u128::from(amount);
        selected.push(outpoint);
    }
    if gathered < required {
        return Err(LedgerError::InsufficientFunds { available: gathered, required });
    }
    let mut outputs = materialize(payments, seed)?;
    let change = gathered - required;
    if change > 0 {
        let amount = Amount::try_from(change).map_err(|_| LedgerError::Overflow)?;
        outputs.push(TxOutput::Transparent { address: wallet.primary_address(), amount });
    }

    let mut signers = Vec::with_capacity(selected.len());
    for outpoint in &selected {
        let owner = state.utxo(outpoint).expect("selected outputs come from the state").address;
        let key = wallet.key_for(&owner).expect("selected outputs belong to the wallet");
        signers.push((*outpoint, key, key.verifying_key().to_bytes()));
    }
    let sighash = signature_hash(signers.iter().map(|(op, _, pk)| (op, pk)), &outputs, fee);
    let inputs = signers
        .iter()
        .map(|(prev, key, public_key)| TxInput {
            prev: *prev,
            public_key: *public_key,
            signature: key.sign(&sighash).to_bytes(),
        })
        .collect();
    Ok(TransparentTx { inputs, outputs, fee })
}

/// The key image a one-time secret would publish when spent.
pub fn onetime_key_image(secret: &<LedgerGroup as Group>::Scalar) -> Result<KeyImage<LedgerGroup>, LedgerError> {
    let group = LedgerGroup::default();
    let kp = LsagKeyPair::from_secret(&group, *secret).map_err(|e| LedgerError::Signing(e.to_string()))?;
    Ok(key_image(&group, &kp))
}

/// Spends shielded output `owned` inside a ring of `decoy_count + 1` outputs.
///
/// Decoys are drawn uniformly, without replacement, from earlier shielded
/// outputs carrying the same amount and not owned by `owner`. Leftover value
/// after payments and fee returns to `owner`'s stealth address.
pub fn build_shielded_spend(
    owner: &StealthRecipientKeys<LedgerGroup>,
    owned: ShieldedRef,
    decoy_count: usize,
    payments: &[Payment],
    fee: Amount,
    state: &ChainState,
    seed: &[u8],
) -> Result<ShieldedTx, LedgerError> {
    let group = LedgerGroup::default();
    let entry = state.shielded_output(owned).ok_or(LedgerError::UnknownShieldedOutput(owned))?;
    let secret = recover_onetime_secret(&group, &entry.meta, owner).map_err(|_| LedgerError::NotOwner(owned))?;
    if state.key_images().contains(&onetime_key_image(&secret)?).unwrap_or(false) {
        return Err(LedgerError::NoteAlreadySpent(owned));
    }

    let required = payment_total(payments)? + u128::from(fee);
    if required > u128::from(entry.amount) {
        return Err(LedgerError::InsufficientFunds { available: entry.amount.into(), required });
    }
    let mut payments = payments.to_vec();
    let change = entry.amount - Amount::try_from(required).map_err(|_| LedgerError::Overflow)?;
    if change > 0 {
        payments.push(Payment::stealth(owner.address(), change));
    }

    let eligible: Vec<ShieldedRef> = state
        .shielded_outputs()
        .iter()
        .enumerate()
        .filter(|(i, e)| {
            *i as u64 != owned.0 && e.amount == entry.amount && scan_output(&group, &e.meta, owner) == Ownership::NotMine
        })
        .map(|(i, _)| ShieldedRef(i as u64))
        .collect();
    if eligible.len() < decoy_count {
        return Err(LedgerError::NotEnoughDecoys { available: eligible.len(), requested: decoy_count });
    }
    let mut rng = seeded_rng(&derive_seed(seed, b"ring"));
    let mut ring: Vec<ShieldedRef> =
        rand::seq::index::sample(&mut rng, eligible.len(), decoy_count).into_iter().map(|i| eligible[i]).collect();
    ring.push(owned);
    ring.shuffle(&mut rng);
    let signer_index = ring.iter().position(|r| *r == owned).expect("owned output is in the ring");
    let ring_keys: Vec<_> = ring
        .iter()
        .map(|r| state.shielded_output(*r).expect("ring refs come from the registry").meta.onetime_public)
        .collect();

    let outputs = materialize(&payments, &derive_seed(seed, b"outputs"))?;
    let message = shielded_message(&ring, &outputs, fee);
    let kp = LsagKeyPair::from_secret(&group, secret).map_err(|e| LedgerError::Signing(e.to_string()))?;
    let lsag = lsag_sign(&group, &message, &ring_keys, signer_index, &kp, &derive_seed(seed, b"lsag"))
        .map_err(|e| LedgerError::Signing(e.to_string()))?;
    Ok(ShieldedTx { ring_member_refs: ring, lsag, outputs, fee })
}

/// A shielded output recognised by scanning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OwnedNote {
    pub reference: ShieldedRef,
    pub amount: Amount,
    pub spent: bool,
}

/// Scans the registry for outputs addressed to `keys`; spent-ness is read off
/// the chain's key-image set.
pub fn scan_notes(keys: &StealthRecipientKeys<LedgerGroup>, state: &ChainState) -> Vec<OwnedNote> {
    let group = LedgerGroup::default();
    state
        .shielded_outputs()
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            let secret = recover_onetime_secret(&group, &e.meta, keys).ok()?;
            let spent = onetime_key_image(&secret)
                .ok()
                .map_or(false, |image| state.key_images().contains(&image).unwrap_or(false));
            Some(OwnedNote { reference: ShieldedRef(i as u64), amount: e.amount, spent })
        })
        .collect()
}

/// Sum of unspent scanned outputs.
pub fn shielded_balance(keys: &StealthRecipientKeys<LedgerGroup>, state: &ChainState) -> Amount {
    scan_notes(keys, state).iter().filter(|n| !n.spent).map(|n| n.amount).sum()
}
