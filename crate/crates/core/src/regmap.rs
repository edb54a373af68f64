//! Regulatory mapping layer.
//!
//! A registry binds real identities to on-chain identifiers (transparent
//! addresses, or stealth outputs named by their `R`). Every registration and
//! every reveal is appended to a hash-chained audit log. A reveal needs a
//! warrant signed by a separate authority whose scope names the identifier
//! and whose expiry height has not been reached.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::Writer;
use crate::group::Group;
use crate::hashing::{sha256, Hash256};
use crate::ledger::{Address, LedgerGroup};
use crate::stealth::StealthOutputMeta;

const ATTESTATION_DOMAIN: &[u8] = b"fogtrace/regmap/attest";
const WARRANT_DOMAIN: &[u8] = b"fogtrace/regmap/warrant";
const REVEAL_DOMAIN: &[u8] = b"fogtrace/regmap/reveal";
const STEALTH_PREFIX: &str = "stealth-r:";

#[derive(Debug, Error)]
pub enum RegmapError {
    #[error("{0} is already registered")]
    DuplicateAddress(AnonymousId),
    #[error("{0} has no registered identity")]
    UnknownAddress(AnonymousId),
    #[error("reveal requires a warrant")]
    NoWarrant,
    #[error("warrant signature or contents invalid")]
    InvalidWarrant,
    #[error("warrant expired at height {expiry} (now {height})")]
    Expired { expiry: u64, height: u64 },
    #[error("{0} is outside the warrant's scope")]
    OutOfScope(AnonymousId),
    #[error("warrant scope must not be empty")]
    EmptyScope,
    #[error("audit log does not verify: {0:?}")]
    CorruptLog(AuditVerdict),
    #[error("record for {0} fails attestation")]
    BadAttestation(AnonymousId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// On-chain identifier as the registry sees it: an address string, or
/// `stealth-r:<hex R>` for a stealth output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnonymousId(String);

impl AnonymousId {
    pub fn new(raw: impl Into<String>) -> Self {
        Self(raw.into())
    }

    pub fn for_stealth(meta: &StealthOutputMeta<LedgerGroup>) -> Self {
        Self(format!("{STEALTH_PREFIX}{}", hex::encode(LedgerGroup::default().encode_point(&meta.tx_public))))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_stealth(&self) -> bool {
        self.0.starts_with(STEALTH_PREFIX)
    }
}

impl From<Address> for AnonymousId {
    fn from(address: Address) -> Self {
        Self(address.encode())
    }
}

impl From<&Address> for AnonymousId {
    fn from(address: &Address) -> Self {
        Self(address.encode())
    }
}

impl fmt::Display for AnonymousId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

mod hex_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(bytes: &[u8; N], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[u8; N], D::Error> {
        let text = String::deserialize(d)?;
        let raw = hex::decode(text).map_err(serde::de::Error::custom)?;
        raw.try_into().map_err(|_| serde::de::Error::custom("wrong length"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub real_identity: String,
    pub subject: AnonymousId,
    #[serde(with = "hex_serde")]
    pub attestation: [u8; 64],
    pub registered_at: u64,
}

impl IdentityRecord {
    fn signed_message(real_identity: &str, subject: &AnonymousId, registered_at: u64) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_fixed(ATTESTATION_DOMAIN).put_str(real_identity).put_str(subject.as_str()).put_u64(registered_at);
        w.into_bytes()
    }

    pub fn verify(&self, registry: &VerifyingKey) -> bool {
        let message = Self::signed_message(&self.real_identity, &self.subject, self.registered_at);
        registry.verify(&message, &Signature::from_bytes(&self.attestation)).is_ok()
    }

    fn payload_digest(&self) -> Hash256 {
        let mut w = Writer::new();
        w.put_str(&self.real_identity)
            .put_str(self.subject.as_str())
            .put_fixed(&self.attestation)
            .put_u64(self.registered_at);
        sha256(w.as_slice())
    }
}

/// Authorisation to reveal the identities behind `scope` before `expiry`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warrant {
    pub authorizer_id: String,
    pub scope: BTreeSet<AnonymousId>,
    pub expiry: u64,
    #[serde(with = "hex_serde")]
    pub signature: [u8; 64],
}

impl Warrant {
    pub fn issue(
        authority: &SigningKey,
        authorizer_id: impl Into<String>,
        scope: BTreeSet<AnonymousId>,
        expiry: u64,
    ) -> Result<Self, RegmapError> {
        if scope.is_empty() {
            return Err(RegmapError::EmptyScope);
        }
        let authorizer_id = authorizer_id.into();
        let signature = authority.sign(&Self::signed_message(&authorizer_id, &scope, expiry)).to_bytes();
        Ok(Self { authorizer_id, scope, expiry, signature })
    }

    fn signed_message(authorizer_id: &str, scope: &BTreeSet<AnonymousId>, expiry: u64) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_fixed(WARRANT_DOMAIN).put_str(authorizer_id).put_u32(scope.len() as u32);
        for id in scope {
            w.put_str(id.as_str());
        }
        w.put_u64(expiry);
        w.into_bytes()
    }

    pub fn verify(&self, authority: &VerifyingKey) -> bool {
        !self.scope.is_empty()
            && authority
                .verify(
                    &Self::signed_message(&self.authorizer_id, &self.scope, self.expiry),
                    &Signature::from_bytes(&self.signature),
                )
                .is_ok()
    }

    /// Valid for heights strictly below `expiry`.
    pub fn is_expired(&self, height: u64) -> bool {
        height >= self.expiry
    }

    pub fn id(&self) -> Hash256 {
        let mut message = Self::signed_message(&self.authorizer_id, &self.scope, self.expiry);
        message.extend_from_slice(&self.signature);
        sha256(&message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditAction {
    Register,
    Reveal,
}

impl AuditAction {
    fn code(self) -> u8 {
        match self {
            AuditAction::Register => 0,
            AuditAction::Reveal => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub action: AuditAction,
    pub subject: AnonymousId,
    #[serde(with = "hex_serde")]
    pub payload_digest: Hash256,
    #[serde(with = "hex_serde")]
    pub previous_hash: Hash256,
    #[serde(with = "hex_serde")]
    pub entry_hash: Hash256,
}

impl AuditEntry {
    fn new(seq: u64, action: AuditAction, subject: AnonymousId, payload_digest: Hash256, previous_hash: Hash256) -> Self {
        let mut entry = Self { seq, action, subject, payload_digest, previous_hash, entry_hash: [0; 32] };
        entry.entry_hash = entry.compute_hash();
        entry
    }

    /// `H(previous hash || seq || action || subject || payload digest)`.
    pub fn compute_hash(&self) -> Hash256 {
        let mut w = Writer::new();
        w.put_fixed(&self.previous_hash)
            .put_u64(self.seq)
            .put_u8(self.action.code())
            .put_str(self.subject.as_str())
            .put_fixed(&self.payload_digest);
        sha256(w.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AuditVerdict {
    Intact,
    /// First sequence position whose entry fails to link or recompute.
    Broken { at: u64 },
    /// Every present entry verifies but the log is shorter or longer than declared.
    LengthMismatch { declared: u64, found: u64 },
}

/// Recomputes every link from an all-zero origin.
pub fn verify_audit_chain(entries: &[AuditEntry], declared_len: Option<u64>) -> AuditVerdict {
    let mut previous = [0u8; 32];
    for (i, entry) in entries.iter().enumerate() {
        let at = i as u64;
        if entry.seq != at || entry.previous_hash != previous || entry.compute_hash() != entry.entry_hash {
            return AuditVerdict::Broken { at };
        }
        previous = entry.entry_hash;
    }
    match declared_len {
        Some(declared) if declared != entries.len() as u64 => {
            AuditVerdict::LengthMismatch { declared, found: entries.len() as u64 }
        }
        _ => AuditVerdict::Intact,
    }
}

/// Outcome of a successful reveal, pointing at its audit entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub subject: AnonymousId,
    pub real_identity: String,
    #[serde(with = "hex_serde")]
    pub warrant_id: Hash256,
    pub height: u64,
    pub audit_seq: u64,
}

impl Reveal {
    /// Digest the audit entry for this reveal must carry.
    pub fn payload_digest(&self) -> Hash256 {
        let mut w = Writer::new();
        w.put_fixed(REVEAL_DOMAIN)
            .put_str(self.subject.as_str())
            .put_str(&self.real_identity)
            .put_fixed(&self.warrant_id)
            .put_u64(self.height);
        sha256(w.as_slice())
    }

    /// True when `log` holds a reveal entry at `audit_seq` matching this reveal.
    pub fn is_logged_in(&self, log: &[AuditEntry]) -> bool {
        log.get(self.audit_seq as usize).is_some_and(|e| {
            e.action == AuditAction::Reveal && e.subject == self.subject && e.payload_digest == self.payload_digest()
        })
    }
}

pub struct Registry {
    registry_key: SigningKey,
    warrant_authority: VerifyingKey,
    records: BTreeMap<AnonymousId, IdentityRecord>,
    log: Vec<AuditEntry>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("records", &self.records.len())
            .field("log", &self.log.len())
            .finish_non_exhaustive()
    }
}

impl Registry {
    pub fn new(registry_key: SigningKey, warrant_authority: VerifyingKey) -> Self {
        Self { registry_key, warrant_authority, records: BTreeMap::new(), log: Vec::new() }
    }

    pub fn registry_public(&self) -> VerifyingKey {
        self.registry_key.verifying_key()
    }

    pub fn warrant_authority(&self) -> &VerifyingKey {
        &self.warrant_authority
    }

    pub fn record(&self, subject: &AnonymousId) -> Option<&IdentityRecord> {
        self.records.get(subject)
    }

    pub fn records(&self) -> impl Iterator<Item = &IdentityRecord> {
        self.records.values()
    }

    pub fn log(&self) -> &[AuditEntry] {
        &self.log
    }

    fn append(&mut self, action: AuditAction, subject: AnonymousId, payload_digest: Hash256) -> AuditEntry {
        let previous = self.log.last().map_or([0; 32], |e| e.entry_hash);
        let entry = AuditEntry::new(self.log.len() as u64, action, subject, payload_digest, previous);
        self.log.push(entry.clone());
        entry
    }

    pub fn register_mapping(
        &mut self,
        real_identity: impl Into<String>,
        subject: AnonymousId,
        height: u64,
    ) -> Result<(IdentityRecord, AuditEntry), RegmapError> {
        if self.records.contains_key(&subject) {
            return Err(RegmapError::DuplicateAddress(subject));
        }
        let real_identity = real_identity.into();
        let message = IdentityRecord::signed_message(&real_identity, &subject, height);
        let record = IdentityRecord {
            real_identity,
            subject: subject.clone(),
            attestation: self.registry_key.sign(&message).to_bytes(),
            registered_at: height,
        };
        let entry = self.append(AuditAction::Register, subject.clone(), record.payload_digest());
        self.records.insert(subject, record.clone());
        Ok((record, entry))
    }

    /// Checks run in order: warrant present, signature, expiry, scope, record.
    /// Nothing is logged unless every check passes.
    pub fn reveal_mapping(
        &mut self,
        subject: &AnonymousId,
        warrant: Option<&Warrant>,
        height: u64,
    ) -> Result<(Reveal, AuditEntry), RegmapError> {
        let warrant = warrant.ok_or(RegmapError::NoWarrant)?;
        if !warrant.verify(&self.warrant_authority) {
            return Err(RegmapError::InvalidWarrant);
        }
        if warrant.is_expired(height) {
            return Err(RegmapError::Expired { expiry: warrant.expiry, height });
        }
        if !warrant.scope.contains(subject) {
            return Err(RegmapError::OutOfScope(subject.clone()));
        }
        let record = self.records.get(subject).ok_or_else(|| RegmapError::UnknownAddress(subject.clone()))?;
        let reveal = Reveal {
            subject: subject.clone(),
            real_identity: record.real_identity.clone(),
            warrant_id: warrant.id(),
            height,
            audit_seq: self.log.len() as u64,
        };
        let entry = self.append(AuditAction::Reveal, subject.clone(), reveal.payload_digest());
        Ok((reveal, entry))
    }

    /// Writes `records.jsonl` and `audit.jsonl` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), RegmapError> {
        fs::create_dir_all(dir)?;
        write_json_lines(&dir.join("records.jsonl"), self.records.values())?;
        write_json_lines(&dir.join("audit.jsonl"), self.log.iter())?;
        Ok(())
    }

    /// Reloads a saved registry, refusing a log that does not verify or
    /// records whose attestation fails. Missing files mean an empty registry.
    pub fn load(dir: &Path, registry_key: SigningKey, warrant_authority: VerifyingKey) -> Result<Self, RegmapError> {
        let mut registry = Self::new(registry_key, warrant_authority);
        let records: Vec<IdentityRecord> = read_json_lines_if_present(&dir.join("records.jsonl"))?;
        registry.log = read_json_lines_if_present(&dir.join("audit.jsonl"))?;
        let verdict = verify_audit_chain(&registry.log, None);
        if verdict != AuditVerdict::Intact {
            return Err(RegmapError::CorruptLog(verdict));
        }
        let public = registry.registry_public();
        for record in records {
            if !record.verify(&public) {
                return Err(RegmapError::BadAttestation(record.subject));
            }
            registry.records.insert(record.subject.clone(), record);
        }
        Ok(registry)
    }
}

fn write_json_lines<'a, T: Serialize + 'a>(path: &Path, items: impl Iterator<Item = &'a T>) -> Result<(), RegmapError> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| RegmapError::Parse { line: 0, message: e.to_string() })?;
        out.push(b'\n');
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

pub fn read_json_lines<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, RegmapError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| RegmapError::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

fn read_json_lines_if_present<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, RegmapError> {
    match fs::read_to_string(path) {
        Ok(text) => read_json_lines(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}
