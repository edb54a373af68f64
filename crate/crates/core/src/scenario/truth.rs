use serde::{Deserialize, Serialize};

use crate::ledger::{Address, Amount, OutPoint, TxId};

/// Where an output went, as the generator knows it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthHolder {
    Address(Address),
    /// Position in the chain's shielded output registry.
    Note(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthOutput {
    pub outpoint: OutPoint,
    pub holder: TruthHolder,
    pub owner: String,
    pub amount: Amount,
}

/// One line of the ground-truth file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TruthRecord {
    /// An on-chain transaction with its real inputs. For a shielded spend
    /// `spent` holds only the note actually consumed, not the decoys.
    Transfer {
        height: u64,
        txid: TxId,
        kind: String,
        sender: String,
        spent: Vec<OutPoint>,
        true_note: Option<u64>,
        outputs: Vec<TruthOutput>,
        fee: Amount,
    },
    /// Value that moved between two transactions off chain: a mixer paying
    /// out a deposit, or a swap desk paying from its reserve.
    EconomicLink { via: String, actor: String, deposit_txid: TxId, payout_txid: TxId, amount: Amount },
}

pub fn truth_to_json_lines(records: &[TruthRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("truth records serialize"));
        out.push('\n');
    }
    out
}

pub fn truth_from_json_lines(text: &str) -> Result<Vec<TruthRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
