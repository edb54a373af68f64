//! Forensic analysis over a chain.
//!
//! [`build_graph`] turns blocks into a value-flow graph. On top of it:
//! taint tracing from a known address, common-input clustering, anonymity
//! sets of shielded spends and their narrowing with regulatory reveals.
//! Nothing here reads scenario ground truth.

mod anonymity;
mod cluster;
mod graph;
mod taint;

use thiserror::Error;

pub use anonymity::{resolve_with_regmap, shielded_candidates, AnonymitySetReport, Candidate};
pub use cluster::cluster_common_input;
pub use graph::{build_graph, Edge, EdgeKind, GraphNote, GraphOutput, GraphTx, Holder, Node, TxGraph, TxKind};
pub use taint::{taint_trace, FlaggedSpend, TaintMark, TaintPolicy, TaintReport, TxTaintFlow};

use crate::ledger::{Address, TxId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TracerError {
    #[error("address {0} does not appear on chain")]
    UnknownAddress(Address),
    #[error("transaction {0} not found")]
    UnknownTx(TxId),
    #[error("transaction {0} is not a shielded spend")]
    NotShielded(TxId),
    #[error("reveal not backed by the audit log: {0}")]
    UnverifiedReveal(String),
}
