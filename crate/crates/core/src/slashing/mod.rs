//! Slashable-condition predicates, check-before-sign protection and
//! validation of slashing evidence.
//!
//! Predicate semantics follow the phase0 consensus rules
//! (`is_slashable_attestation_data`, `process_proposer_slashing`,
//! `process_attester_slashing`).

mod db;
mod evidence;
mod interchange;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use db::{
    Candidate, Decision, DenyReason, FileSink, ImportConflict, ImportMode, ImportReport,
    MemorySink, ProtectionDb, RecordSink, ValidatorHistory,
};
pub use evidence::{
    attestation_signing_root, header_signing_root, AttestationData, AttesterSlashing,
    BeaconBlockHeader, Checkpoint, EvidenceInvalid, EvidenceVerdict, IndexedAttestation,
    ProposerSlashing, SignedBeaconBlockHeader, ValidatorRegistry,
};
pub use interchange::{
    InterchangeAttestation, InterchangeBlock, InterchangeDocument, InterchangeMetadata,
    InterchangeValidator, INTERCHANGE_FORMAT_VERSION,
};

pub type Root = [u8; 32];
pub type PubkeyBytes = Vec<u8>;

pub const MAX_ATTESTER_SLASHINGS: usize = 2;
pub const MAX_PROPOSER_SLASHINGS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlashingError {
    #[error("source epoch {source_epoch} is after target epoch {target_epoch}")]
    InvalidEpochs { source_epoch: u64, target_epoch: u64 },
    #[error("unsupported interchange format version {0:?}")]
    UnsupportedVersion(String),
    #[error("genesis validators root mismatch: expected {expected}, found {found}")]
    WrongChain { expected: String, found: String },
    #[error("malformed interchange field {field}: {value:?}")]
    Malformed { field: &'static str, value: String },
    #[error("import rejected: {0}")]
    ImportRejected(Box<ImportConflict>),
    #[error("too many {kind} slashings in one block: {count} > {max}")]
    TooManySlashings {
        kind: &'static str,
        count: usize,
        max: usize,
    },
    #[error("storage: {0}")]
    Storage(String),
}

/// Per-block caps on slashing operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlashingLimits {
    pub max_attester_slashings: usize,
    pub max_proposer_slashings: usize,
}

impl Default for SlashingLimits {
    fn default() -> Self {
        SlashingLimits {
            max_attester_slashings: MAX_ATTESTER_SLASHINGS,
            max_proposer_slashings: MAX_PROPOSER_SLASHINGS,
        }
    }
}

impl SlashingLimits {
    pub fn check(&self, proposer: usize, attester: usize) -> Result<(), SlashingError> {
        if proposer > self.max_proposer_slashings {
            return Err(SlashingError::TooManySlashings {
                kind: "proposer",
                count: proposer,
                max: self.max_proposer_slashings,
            });
        }
        if attester > self.max_attester_slashings {
            return Err(SlashingError::TooManySlashings {
                kind: "attester",
                count: attester,
                max: self.max_attester_slashings,
            });
        }
        Ok(())
    }
}

/// A signed attestation as remembered by the protection database.
///
/// Fields are public so callers can build arbitrary tuples for the predicate;
/// [`AttestationRecord::new`] enforces `source <= target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttestationRecord {
    pub source_epoch: u64,
    pub target_epoch: u64,
    pub signing_root: Root,
}

impl AttestationRecord {
    pub fn new(source_epoch: u64, target_epoch: u64, signing_root: Root) -> Result<Self, SlashingError> {
        if source_epoch > target_epoch {
            return Err(SlashingError::InvalidEpochs {
                source_epoch,
                target_epoch,
            });
        }
        Ok(AttestationRecord {
            source_epoch,
            target_epoch,
            signing_root,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignedBlockRecord {
    pub slot: u64,
    pub signing_root: Root,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurroundOrder {
    FirstSurroundsSecond,
    SecondSurroundsFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttestationSlashability {
    DoubleVote,
    Surround(SurroundOrder),
    NotSlashable,
}

impl AttestationSlashability {
    pub fn is_slashable(&self) -> bool {
        !matches!(self, AttestationSlashability::NotSlashable)
    }
}

pub fn is_slashable_attestation(a: &AttestationRecord, b: &AttestationRecord) -> AttestationSlashability {
    if a.target_epoch == b.target_epoch && a.signing_root != b.signing_root {
        AttestationSlashability::DoubleVote
    } else if a.source_epoch < b.source_epoch && b.target_epoch < a.target_epoch {
        AttestationSlashability::Surround(SurroundOrder::FirstSurroundsSecond)
    } else if b.source_epoch < a.source_epoch && a.target_epoch < b.target_epoch {
        AttestationSlashability::Surround(SurroundOrder::SecondSurroundsFirst)
    } else {
        AttestationSlashability::NotSlashable
    }
}

pub fn is_slashable_block(a: &SignedBlockRecord, b: &SignedBlockRecord) -> bool {
    a.slot == b.slot && a.signing_root != b.signing_root
}

pub(crate) fn hex0x(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}
