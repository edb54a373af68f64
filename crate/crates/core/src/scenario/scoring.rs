use std::collections::{BTreeMap, BTreeSet};

use super::truth::{TruthHolder, TruthRecord};
use crate::ledger::{Address, OutPoint, TxId};

/// Addresses that really received value descended from `source`.
///
/// Follows real spends in record order, through shielded spends via the note
/// actually consumed. With `follow_links`, off-chain economic links carry
/// taint from a deposit to its payout as well.
pub fn truth_descendants(records: &[TruthRecord], source: &Address, follow_links: bool) -> BTreeSet<Address> {
    let mut links: BTreeMap<TxId, Vec<TxId>> = BTreeMap::new();
    if follow_links {
        for record in records {
            if let TruthRecord::EconomicLink { deposit_txid, payout_txid, .. } = record {
                links.entry(*payout_txid).or_default().push(*deposit_txid);
            }
        }
    }
    let mut tainted_outputs: BTreeSet<OutPoint> = BTreeSet::new();
    let mut tainted_txs: BTreeSet<TxId> = BTreeSet::new();
    let mut found = BTreeSet::new();
    for record in records {
        let TruthRecord::Transfer { txid, spent, outputs, .. } = record else { continue };
        let linked = links.get(txid).is_some_and(|deps| deps.iter().any(|d| tainted_txs.contains(d)));
        let tainted = linked || spent.iter().any(|op| tainted_outputs.contains(op));
        if tainted {
            tainted_txs.insert(*txid);
        }
        for output in outputs {
            let to_source = output.holder == TruthHolder::Address(*source);
            if tainted || to_source {
                tainted_outputs.insert(output.outpoint);
                if let TruthHolder::Address(a) = output.holder {
                    found.insert(a);
                }
            }
        }
    }
    found
}

/// True spender and consumed note of every shielded spend.
pub fn shielded_truth(records: &[TruthRecord]) -> Vec<(TxId, u64, String)> {
    records
        .iter()
        .filter_map(|r| match r {
            TruthRecord::Transfer { txid, true_note: Some(note), sender, .. } => Some((*txid, *note, sender.clone())),
            _ => None,
        })
        .collect()
}

/// Real owner of every address in the records.
pub fn address_owners(records: &[TruthRecord]) -> BTreeMap<Address, String> {
    let mut owners = BTreeMap::new();
    for record in records {
        if let TruthRecord::Transfer { outputs, .. } = record {
            for output in outputs {
                if let TruthHolder::Address(a) = output.holder {
                    owners.insert(a, output.owner.clone());
                }
            }
        }
    }
    owners
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetScore {
    pub expected: usize,
    pub found: usize,
    pub correct: usize,
}

impl SetScore {
    pub fn compare<T: Ord>(found: &BTreeSet<T>, expected: &BTreeSet<T>) -> Self {
        Self { expected: expected.len(), found: found.len(), correct: found.intersection(expected).count() }
    }

    /// 1 when nothing was expected.
    pub fn recall(&self) -> f64 {
        if self.expected == 0 {
            1.0
        } else {
            self.correct as f64 / self.expected as f64
        }
    }

    /// 1 when nothing was found.
    pub fn precision(&self) -> f64 {
        if self.found == 0 {
            1.0
        } else {
            self.correct as f64 / self.found as f64
        }
    }

    pub fn is_exact(&self) -> bool {
        self.correct == self.expected && self.correct == self.found
    }
}
