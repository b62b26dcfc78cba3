use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    hex0x, is_slashable_attestation, is_slashable_block, AttestationRecord, AttestationSlashability,
    PubkeyBytes, Root, SignedBlockRecord, SlashingError, SurroundOrder,
};

/// Durable append target for protection records.
pub trait RecordSink: Send {
    /// Appends one line. Must not return until the line is durable.
    fn append(&mut self, line: &[u8]) -> io::Result<()>;
}

#[derive(Debug, Default)]
pub struct MemorySink {
    pub lines: Vec<Vec<u8>>,
}

impl RecordSink for MemorySink {
    fn append(&mut self, line: &[u8]) -> io::Result<()> {
        self.lines.push(line.to_vec());
        Ok(())
    }
}

/// Append-only JSON-lines file; every append is flushed and synced.
#[derive(Debug)]
pub struct FileSink {
    path: PathBuf,
    file: File,
}

impl FileSink {
    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl RecordSink for FileSink {
    fn append(&mut self, line: &[u8]) -> io::Result<()> {
        self.file.write_all(line)?;
        self.file.write_all(b"\n")?;
        self.file.flush()?;
        self.file.sync_data()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum StoredLine {
    Header {
        genesis_validators_root: String,
    },
    Block {
        pubkey: String,
        slot: u64,
        signing_root: String,
    },
    Attestation {
        pubkey: String,
        source_epoch: u64,
        target_epoch: u64,
        signing_root: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Candidate {
    Block(SignedBlockRecord),
    Attestation(AttestationRecord),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DenyReason {
    DoubleProposal { existing: SignedBlockRecord },
    DoubleVote { existing: AttestationRecord },
    Surround { existing: AttestationRecord, order: SurroundOrder },
    /// Source epoch not strictly before target epoch.
    InvalidEpochs,
    Storage { message: String },
}

impl fmt::Display for DenyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenyReason::DoubleProposal { existing } => {
                write!(f, "double proposal at slot {}", existing.slot)
            }
            DenyReason::DoubleVote { existing } => {
                write!(f, "double vote at target {}", existing.target_epoch)
            }
            DenyReason::Surround { existing, order } => write!(
                f,
                "surround vote against ({}, {}) [{order:?}]",
                existing.source_epoch, existing.target_epoch
            ),
            DenyReason::InvalidEpochs => write!(f, "source epoch must be below target epoch"),
            DenyReason::Storage { message } => write!(f, "storage failure: {message}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Allow,
    Deny(DenyReason),
}

impl Decision {
    pub fn is_allow(&self) -> bool {
        matches!(self, Decision::Allow)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidatorHistory {
    pub blocks: Vec<SignedBlockRecord>,
    pub attestations: Vec<AttestationRecord>,
}

impl ValidatorHistory {
    fn conflict(&self, candidate: &Candidate) -> Option<DenyReason> {
        match candidate {
            Candidate::Block(b) => self
                .blocks
                .iter()
                .find(|e| is_slashable_block(e, b))
                .map(|e| DenyReason::DoubleProposal { existing: *e }),
            Candidate::Attestation(a) => self.attestations.iter().find_map(|e| {
                match is_slashable_attestation(e, a) {
                    AttestationSlashability::DoubleVote => {
                        Some(DenyReason::DoubleVote { existing: *e })
                    }
                    AttestationSlashability::Surround(order) => {
                        Some(DenyReason::Surround { existing: *e, order })
                    }
                    AttestationSlashability::NotSlashable => None,
                }
            }),
        }
    }

    fn contains(&self, candidate: &Candidate) -> bool {
        match candidate {
            Candidate::Block(b) => self.blocks.contains(b),
            Candidate::Attestation(a) => self.attestations.contains(a),
        }
    }

    fn insert(&mut self, candidate: Candidate) {
        match candidate {
            Candidate::Block(b) => self.blocks.push(b),
            Candidate::Attestation(a) => self.attestations.push(a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportMode {
    /// Merge everything, reporting conflicts.
    Allow,
    /// Refuse the whole document if any record conflicts with existing history.
    Reject,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportConflict {
    pub pubkey: String,
    pub incoming: Candidate,
    pub reason: DenyReason,
}

impl fmt::Display for ImportConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "validator {}: {:?} conflicts: {}", self.pubkey, self.incoming, self.reason)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub validators: usize,
    pub blocks_imported: usize,
    pub attestations_imported: usize,
    pub conflicts: Vec<ImportConflict>,
}

/// Slashing-protection database: an in-memory index over an append-only
/// record log. A single writer is enforced by `&mut self`.
pub struct ProtectionDb {
    genesis_validators_root: Root,
    sink: Box<dyn RecordSink>,
    index: BTreeMap<PubkeyBytes, ValidatorHistory>,
}

impl fmt::Debug for ProtectionDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProtectionDb")
            .field("genesis_validators_root", &hex0x(&self.genesis_validators_root))
            .field("validators", &self.index.len())
            .finish()
    }
}

fn storage(e: impl fmt::Display) -> SlashingError {
    SlashingError::Storage(e.to_string())
}

fn parse_root(s: &str, field: &'static str) -> Result<Root, SlashingError> {
    hex::decode(s.trim_start_matches("0x"))
        .ok()
        .and_then(|v| v.try_into().ok())
        .ok_or_else(|| SlashingError::Malformed {
            field,
            value: s.to_string(),
        })
}

impl ProtectionDb {
    pub fn in_memory(genesis_validators_root: Root) -> Self {
        Self::with_sink(genesis_validators_root, Box::new(MemorySink::default()))
    }

    /// A database backed by a caller-supplied sink. The header line is not
    /// written; use [`ProtectionDb::open`] for file persistence.
    pub fn with_sink(genesis_validators_root: Root, sink: Box<dyn RecordSink>) -> Self {
        ProtectionDb {
            genesis_validators_root,
            sink,
            index: BTreeMap::new(),
        }
    }

    /// Opens or creates a file-backed database, replaying existing records.
    pub fn open(path: &Path, genesis_validators_root: Root) -> Result<Self, SlashingError> {
        let exists = path.exists() && std::fs::metadata(path).map_err(storage)?.len() > 0;
        let mut index: BTreeMap<PubkeyBytes, ValidatorHistory> = BTreeMap::new();
        if exists {
            let reader = BufReader::new(File::open(path).map_err(storage)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(storage)?;
                if line.trim().is_empty() {
                    continue;
                }
                let stored: StoredLine = serde_json::from_str(&line).map_err(storage)?;
                match stored {
                    StoredLine::Header {
                        genesis_validators_root: g,
                    } => {
                        let found = parse_root(&g, "genesis_validators_root")?;
                        if found != genesis_validators_root {
                            return Err(SlashingError::WrongChain {
                                expected: hex0x(&genesis_validators_root),
                                found: g,
                            });
                        }
                    }
                    _ if n == 0 => return Err(storage("missing header line")),
                    StoredLine::Block {
                        pubkey,
                        slot,
                        signing_root,
                    } => index
                        .entry(decode_pubkey(&pubkey)?)
                        .or_default()
                        .blocks
                        .push(SignedBlockRecord {
                            slot,
                            signing_root: parse_root(&signing_root, "signing_root")?,
                        }),
                    StoredLine::Attestation {
                        pubkey,
                        source_epoch,
                        target_epoch,
                        signing_root,
                    } => index
                        .entry(decode_pubkey(&pubkey)?)
                        .or_default()
                        .attestations
                        .push(AttestationRecord {
                            source_epoch,
                            target_epoch,
                            signing_root: parse_root(&signing_root, "signing_root")?,
                        }),
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(storage)?;
        let mut sink = FileSink {
            path: path.to_path_buf(),
            file,
        };
        if !exists {
            let header = StoredLine::Header {
                genesis_validators_root: hex0x(&genesis_validators_root),
            };
            sink.append(&serde_json::to_vec(&header).map_err(storage)?)
                .map_err(storage)?;
        }
        Ok(ProtectionDb {
            genesis_validators_root,
            sink: Box::new(sink),
            index,
        })
    }

    pub fn genesis_validators_root(&self) -> &Root {
        &self.genesis_validators_root
    }

    pub fn history(&self, pubkey: &[u8]) -> Option<&ValidatorHistory> {
        self.index.get(pubkey)
    }

    pub fn validators(&self) -> impl Iterator<Item = (&PubkeyBytes, &ValidatorHistory)> {
        self.index.iter()
    }

    fn persist(&mut self, pubkey: &[u8], candidate: &Candidate) -> io::Result<()> {
        let line = match candidate {
            Candidate::Block(b) => StoredLine::Block {
                pubkey: hex0x(pubkey),
                slot: b.slot,
                signing_root: hex0x(&b.signing_root),
            },
            Candidate::Attestation(a) => StoredLine::Attestation {
                pubkey: hex0x(pubkey),
                source_epoch: a.source_epoch,
                target_epoch: a.target_epoch,
                signing_root: hex0x(&a.signing_root),
            },
        };
        let bytes = serde_json::to_vec(&line).map_err(io::Error::other)?;
        self.sink.append(&bytes)
    }

    /// Checks `candidate` against the validator's history and, if safe,
    /// durably records it before returning `Allow`. The caller signs only
    /// after `Allow`.
    pub fn check_and_record(&mut self, pubkey: &[u8], candidate: Candidate) -> Decision {
        if let Candidate::Attestation(a) = &candidate {
            if a.source_epoch >= a.target_epoch {
                return Decision::Deny(DenyReason::InvalidEpochs);
            }
        }
        let history = self.index.get(pubkey);
        if history.is_some_and(|h| h.contains(&candidate)) {
            return Decision::Allow;
        }
        if let Some(reason) = history.and_then(|h| h.conflict(&candidate)) {
            return Decision::Deny(reason);
        }
        if let Err(e) = self.persist(pubkey, &candidate) {
            return Decision::Deny(DenyReason::Storage {
                message: e.to_string(),
            });
        }
        self.index.entry(pubkey.to_vec()).or_default().insert(candidate);
        Decision::Allow
    }

    /// Stores a record unconditionally (history import). Duplicates are skipped.
    fn merge(&mut self, pubkey: &[u8], candidate: Candidate) -> Result<bool, SlashingError> {
        if self
            .index
            .get(pubkey)
            .is_some_and(|h| h.contains(&candidate))
        {
            return Ok(false);
        }
        self.persist(pubkey, &candidate).map_err(storage)?;
        self.index.entry(pubkey.to_vec()).or_default().insert(candidate);
        Ok(true)
    }

    pub(super) fn import_records(
        &mut self,
        records: Vec<(PubkeyBytes, Vec<Candidate>)>,
        mode: ImportMode,
    ) -> Result<ImportReport, SlashingError> {
        let mut conflicts = Vec::new();
        for (pk, candidates) in &records {
            let Some(history) = self.index.get(pk) else {
                continue;
            };
            for c in candidates {
                if let Some(reason) = history.conflict(c) {
                    conflicts.push(ImportConflict {
                        pubkey: hex0x(pk),
                        incoming: *c,
                        reason,
                    });
                }
            }
        }
        if mode == ImportMode::Reject {
            if let Some(first) = conflicts.first() {
                return Err(SlashingError::ImportRejected(Box::new(first.clone())));
            }
        }
        let mut report = ImportReport {
            validators: records.len(),
            conflicts,
            ..ImportReport::default()
        };
        for (pk, candidates) in records {
            for c in candidates {
                if self.merge(&pk, c)? {
                    match c {
                        Candidate::Block(_) => report.blocks_imported += 1,
                        Candidate::Attestation(_) => report.attestations_imported += 1,
                    }
                }
            }
        }
        Ok(report)
    }
}

pub(super) fn decode_pubkey(s: &str) -> Result<PubkeyBytes, SlashingError> {
    hex::decode(s.trim_start_matches("0x")).map_err(|_| SlashingError::Malformed {
        field: "pubkey",
        value: s.to_string(),
    })
}
