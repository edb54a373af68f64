use std::collections::BTreeMap;

use super::graph::{TxGraph, TxKind};
use super::TracerError;
use crate::ledger::{ShieldedRef, TxId};
use crate::regmap::{verify_audit_chain, AnonymousId, AuditEntry, AuditVerdict, Reveal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub reference: ShieldedRef,
    pub onetime_public: Vec<u8>,
    pub subject: AnonymousId,
}

/// Plausible spenders of one shielded transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnonymitySetReport {
    pub txid: TxId,
    pub candidates: Vec<Candidate>,
}

impl AnonymitySetReport {
    pub fn size(&self) -> usize {
        self.candidates.len()
    }
}

/// Candidates are the ring members, in ring order.
pub fn shielded_candidates(graph: &TxGraph, txid: &TxId) -> Result<AnonymitySetReport, TracerError> {
    let tx = graph.tx(txid).ok_or(TracerError::UnknownTx(*txid))?;
    if tx.kind != TxKind::Shielded {
        return Err(TracerError::NotShielded(*txid));
    }
    let candidates = tx
        .ring
        .iter()
        .map(|r| {
            let note = graph.note(*r).expect("graph rings only hold known notes");
            Candidate { reference: *r, onetime_public: note.onetime_public.clone(), subject: note.subject.clone() }
        })
        .collect();
    Ok(AnonymitySetReport { txid: *txid, candidates })
}

/// Narrows `report` with warrant-backed reveals for the identity `suspect`.
///
/// The audit log must verify and every reveal must be recorded in it. A
/// candidate revealed as someone other than `suspect` is eliminated. If any
/// candidate is revealed as `suspect`, the result is those candidates alone.
/// Reveals for identifiers outside the ring are ignored.
pub fn resolve_with_regmap(
    report: &AnonymitySetReport,
    reveals: &[Reveal],
    audit_log: &[AuditEntry],
    suspect: &str,
) -> Result<AnonymitySetReport, TracerError> {
    let verdict = verify_audit_chain(audit_log, None);
    if verdict != AuditVerdict::Intact {
        return Err(TracerError::UnverifiedReveal(format!("audit log: {verdict:?}")));
    }
    let mut revealed: BTreeMap<&AnonymousId, &str> = BTreeMap::new();
    for reveal in reveals {
        if !reveal.is_logged_in(audit_log) {
            return Err(TracerError::UnverifiedReveal(format!("{} is not in the audit log", reveal.subject)));
        }
        revealed.insert(&reveal.subject, &reveal.real_identity);
    }
    let identity = |c: &Candidate| revealed.get(&c.subject).copied();
    let matching: Vec<_> = report.candidates.iter().filter(|c| identity(c) == Some(suspect)).cloned().collect();
    let candidates = if matching.is_empty() {
        report.candidates.iter().filter(|c| identity(c).is_none()).cloned().collect()
    } else {
        matching
    };
    Ok(AnonymitySetReport { txid: report.txid, candidates })
}
