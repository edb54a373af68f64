use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::graph::{Holder, TxGraph, TxKind};
use super::TracerError;
use crate::ledger::{Address, Amount, OutPoint, ShieldedRef, TxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaintPolicy {
    /// Anything touched by tainted value is fully tainted.
    Poison,
    /// Taint is split in proportion to value: every output of a transaction
    /// carries `tainted input value / (outputs + fee)` of its amount.
    Haircut,
}

impl TaintPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            TaintPolicy::Poison => "poison",
            TaintPolicy::Haircut => "haircut",
        }
    }
}

/// Taint attached to one holder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaintMark {
    /// In `[0, 1]`. Under poison always 1; under haircut the largest tainted
    /// value the holder held at once, as a share of the source's value.
    pub fraction: BigRational,
    /// Fewest transactions between the source and this holder.
    pub depth: usize,
}

/// Tainted value through one transaction, in atomic units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxTaintFlow {
    pub txid: TxId,
    pub mass_in: BigRational,
    pub mass_out: BigRational,
    pub mass_fee: BigRational,
}

/// A shielded spend whose ring contains tainted notes. Taint stops here: the
/// ring does not say which member was spent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlaggedSpend {
    pub txid: TxId,
    pub tainted_members: Vec<ShieldedRef>,
    pub ring_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaintReport {
    pub source: Address,
    pub policy: TaintPolicy,
    pub max_depth: Option<usize>,
    pub addresses: BTreeMap<Address, TaintMark>,
    pub notes: BTreeMap<ShieldedRef, TaintMark>,
    /// Share of the source's value paid away as fees.
    pub fee_sink: BigRational,
    pub flagged_spends: Vec<FlaggedSpend>,
    pub flows: Vec<TxTaintFlow>,
    /// Deepest transaction reached.
    pub depth_reached: usize,
}

impl TaintReport {
    pub fn tainted_addresses(&self) -> impl Iterator<Item = &Address> {
        self.addresses.keys()
    }

    pub fn fraction(&self, address: &Address) -> BigRational {
        self.addresses.get(address).map_or_else(BigRational::zero, |m| m.fraction.clone())
    }
}

fn ratio(amount: Amount) -> BigRational {
    BigRational::from_integer(BigInt::from(amount))
}

struct OutputTaint {
    fraction: BigRational,
    depth: usize,
}

/// Follows value from `source` forward through the graph in chain order.
///
/// Every output ever paid to `source` is fully tainted at depth 0; the
/// source's total is the value it received that did not already descend from
/// it, so change paid back to the source is not counted twice. A
/// transparent transaction spending tainted outputs is at depth one more
/// than its shallowest tainted input and, within `max_depth`, taints its
/// outputs according to `policy`. Shielded spends are flagged, not followed.
pub fn taint_trace(
    graph: &TxGraph,
    source: &Address,
    policy: TaintPolicy,
    max_depth: Option<usize>,
) -> Result<TaintReport, TracerError> {
    if !graph.contains_address(source) {
        return Err(TracerError::UnknownAddress(*source));
    }
    let within = |depth: usize| max_depth.map_or(true, |m| depth <= m);
    let mut tainted: BTreeMap<OutPoint, OutputTaint> = BTreeMap::new();
    let mut holdings: BTreeMap<Address, BigRational> = BTreeMap::new();
    let mut addresses: BTreeMap<Address, TaintMark> = BTreeMap::new();
    let mut notes = BTreeMap::new();
    let mut seed_total = BigRational::zero();
    let mut fee_mass = BigRational::zero();
    let mut flagged_spends = Vec::new();
    let mut flows = Vec::new();
    let mut depth_reached = 0;

    for tx in graph.txs() {
        if tx.kind == TxKind::Shielded {
            let tainted_members: Vec<_> = tx.ring.iter().copied().filter(|r| notes.contains_key(r)).collect();
            if !tainted_members.is_empty() {
                flagged_spends.push(FlaggedSpend { txid: tx.txid, tainted_members, ring_size: tx.ring.len() });
            }
        }

        let mut mass_in = BigRational::zero();
        let mut input_depth: Option<usize> = None;
        for input in &tx.inputs {
            let Some(taint) = tainted.get(input) else { continue };
            let output = graph.output(input).expect("inputs resolve");
            let mass = &taint.fraction * ratio(output.amount);
            if let Holder::Address(a) = output.holder {
                *holdings.entry(a).or_insert_with(BigRational::zero) -= &mass;
            }
            mass_in += mass;
            input_depth = Some(input_depth.map_or(taint.depth, |d| d.min(taint.depth)));
        }
        let propagate = input_depth.map(|d| d + 1).filter(|&d| within(d));

        let total: Amount = tx.outputs.iter().map(|op| graph.output(op).expect("outputs resolve").amount).sum::<Amount>() + tx.fee;
        let out_fraction = match (propagate, policy) {
            (None, _) => None,
            (Some(_), TaintPolicy::Poison) => Some(BigRational::one()),
            (Some(_), TaintPolicy::Haircut) if total > 0 => Some(&mass_in / ratio(total)),
            (Some(_), TaintPolicy::Haircut) => None,
        };
        if let (Some(depth), Some(fraction)) = (propagate, out_fraction.as_ref()) {
            depth_reached = depth_reached.max(depth);
            let mass_fee = fraction * ratio(tx.fee);
            fee_mass += &mass_fee;
            let mass_out = fraction * ratio(total - tx.fee);
            flows.push(TxTaintFlow { txid: tx.txid, mass_in: mass_in.clone(), mass_out, mass_fee });
        }

        for outpoint in &tx.outputs {
            let output = graph.output(outpoint).expect("outputs resolve");
            let taint = if output.holder == Holder::Address(*source) {
                // Only value not already descended from the source adds to its total.
                let recycled = out_fraction.clone().unwrap_or_else(BigRational::zero);
                seed_total += (BigRational::one() - recycled) * ratio(output.amount);
                Some(OutputTaint { fraction: BigRational::one(), depth: 0 })
            } else {
                propagate.zip(out_fraction.clone()).map(|(depth, fraction)| OutputTaint { fraction, depth })
            };
            let Some(taint) = taint else { continue };
            if taint.fraction.is_zero() {
                continue;
            }
            match output.holder {
                Holder::Address(a) => {
                    let held = holdings.entry(a).or_insert_with(BigRational::zero);
                    *held += &taint.fraction * ratio(output.amount);
                    let peak = held.clone();
                    addresses
                        .entry(a)
                        .and_modify(|m: &mut TaintMark| {
                            m.depth = m.depth.min(taint.depth);
                            if peak > m.fraction {
                                m.fraction = peak.clone();
                            }
                        })
                        .or_insert(TaintMark { fraction: peak, depth: taint.depth });
                }
                Holder::Note(r) => {
                    let mass = &taint.fraction * ratio(output.amount);
                    notes.insert(r, TaintMark { fraction: mass, depth: taint.depth });
                }
            }
            tainted.insert(*outpoint, taint);
        }
    }

    // Marks hold tainted value so far; express them as shares of the source.
    let normaliser = if seed_total.is_zero() { BigRational::one() } else { seed_total.clone() };
    for (address, mark) in addresses.iter_mut() {
        mark.fraction = match policy {
            _ if address == source => BigRational::one(),
            TaintPolicy::Poison => BigRational::one(),
            TaintPolicy::Haircut => &mark.fraction / &normaliser,
        };
    }
    for mark in notes.values_mut() {
        mark.fraction = match policy {
            TaintPolicy::Poison => BigRational::one(),
            TaintPolicy::Haircut => &mark.fraction / &normaliser,
        };
    }
    Ok(TaintReport {
        source: *source,
        policy,
        max_depth,
        addresses,
        notes,
        fee_sink: fee_mass / normaliser,
        flagged_spends,
        flows,
        depth_reached,
    })
}
