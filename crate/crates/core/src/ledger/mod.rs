//! Desk-scale UTXO ledger with transparent and shielded transactions.
//!
//! Transparent transactions spend outputs owned by Ed25519 keys and pay to
//! base58 addresses. Shielded transactions spend one stealth output hidden in
//! an LSAG ring of earlier stealth outputs; the key image is recorded so the
//! same output can never be spent twice. Amounts are visible everywhere and
//! every ring member carries the same amount, so conservation is checked in
//! the clear.
//!
//! There is a single block producer and no proof of work.

mod address;
mod block;
mod state;
mod store;
mod tx;
mod wallet;

use thiserror::Error;

pub use address::{derive_address, Address, AddressError, ADDRESS_VERSION, KEY_HASH_LEN};
pub use block::{Block, BlockHash};
pub use state::{produce_block, BlockProduction, ChainState, InvalidReason, ShieldedEntry, UtxoEntry};
pub use store::Chain;
pub use tx::{MintTx, OutPoint, ShieldedRef, ShieldedTx, Transaction, TransparentTx, TxId, TxInput, TxOutput};
pub use wallet::{
    build_payment_tx, build_shielded_spend, build_transparent_tx, onetime_key_image, scan_notes, shielded_balance,
    OwnedNote, Payee, Payment, TransparentWallet,
};

use crate::codec::DecodeError;
use crate::stealth::StealthError;

/// Group every shielded output and ring signature lives in.
pub type LedgerGroup = crate::group::Ristretto;

/// Atomic units.
pub type Amount = u64;

/// Total minted by the genesis block of generated scenarios.
pub const GENESIS_SUPPLY: Amount = 1_000_000_000;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("insufficient funds: have {available}, need {required}")]
    InsufficientFunds { available: u128, required: u128 },
    #[error("no recipients given")]
    NoRecipients,
    #[error("payment amounts must be positive")]
    ZeroAmount,
    #[error("amount arithmetic overflow")]
    Overflow,
    #[error("shielded output {0} is not owned by these keys")]
    NotOwner(ShieldedRef),
    #[error("shielded output {0} does not exist")]
    UnknownShieldedOutput(ShieldedRef),
    #[error("shielded output {0} has already been spent")]
    NoteAlreadySpent(ShieldedRef),
    #[error("need {requested} decoys but only {available} eligible outputs exist")]
    NotEnoughDecoys { available: usize, requested: usize },
    #[error("block does not extend the tip: expected previous hash {expected}, found {found}")]
    ForkMismatch { expected: BlockHash, found: BlockHash },
    #[error("block height {found} does not follow tip (expected {expected})")]
    HeightMismatch { expected: u64, found: u64 },
    #[error("stored hash of block {height} does not recompute")]
    BlockHashMismatch { height: u64 },
    #[error("transaction {txid} rejected: {reason}")]
    InvalidTransaction { txid: TxId, reason: InvalidReason },
    #[error("chain store line {line}: {source}")]
    Decode { line: usize, source: DecodeError },
    #[error("chain store is empty")]
    EmptyChain,
    #[error("stealth: {0}")]
    Stealth(#[from] StealthError),
    #[error("signing: {0}")]
    Signing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
