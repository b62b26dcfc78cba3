use serde::{Deserialize, Serialize};

use super::db::{decode_pubkey, Candidate, ImportMode, ImportReport, ProtectionDb};
use super::{hex0x, AttestationRecord, Root, SignedBlockRecord, SlashingError};

pub const INTERCHANGE_FORMAT_VERSION: &str = "5";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterchangeMetadata {
    pub interchange_format_version: String,
    pub genesis_validators_root: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterchangeBlock {
    pub slot: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signing_root: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterchangeAttestation {
    pub source_epoch: String,
    pub target_epoch: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signing_root: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterchangeValidator {
    pub pubkey: String,
    #[serde(default)]
    pub signed_blocks: Vec<InterchangeBlock>,
    #[serde(default)]
    pub signed_attestations: Vec<InterchangeAttestation>,
}

/// EIP-3076 document. Integers are decimal strings and byte strings are
/// 0x-prefixed hex, as the format requires.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterchangeDocument {
    pub metadata: InterchangeMetadata,
    pub data: Vec<InterchangeValidator>,
}

type ValidatorRecords = (Vec<u8>, Vec<Candidate>);

fn parse_u64(s: &str, field: &'static str) -> Result<u64, SlashingError> {
    s.parse().map_err(|_| SlashingError::Malformed {
        field,
        value: s.to_string(),
    })
}

fn parse_root(s: &Option<String>) -> Result<Root, SlashingError> {
    // A missing signing root is stored as all zeroes, which conflicts with
    // any real root at the same slot or target.
    let Some(s) = s else {
        return Ok([0; 32]);
    };
    hex::decode(s.trim_start_matches("0x"))
        .ok()
        .and_then(|v| v.try_into().ok())
        .ok_or_else(|| SlashingError::Malformed {
            field: "signing_root",
            value: s.clone(),
        })
}

fn encode_root(root: &Root) -> Option<String> {
    (root != &[0; 32]).then(|| hex0x(root))
}

impl InterchangeDocument {
    pub fn empty(genesis_validators_root: &Root) -> Self {
        InterchangeDocument {
            metadata: InterchangeMetadata {
                interchange_format_version: INTERCHANGE_FORMAT_VERSION.to_string(),
                genesis_validators_root: hex0x(genesis_validators_root),
            },
            data: Vec::new(),
        }
    }

    /// Pretty JSON with validators and records in sorted order.
    pub fn to_canonical_json(&self) -> String {
        let mut doc = self.clone();
        doc.data.sort_by(|a, b| a.pubkey.cmp(&b.pubkey));
        let mut out = serde_json::to_string_pretty(&doc).expect("plain data serializes");
        out.push('\n');
        out
    }

    pub fn from_json(json: &str) -> Result<Self, SlashingError> {
        serde_json::from_str(json).map_err(|e| SlashingError::Malformed {
            field: "document",
            value: e.to_string(),
        })
    }

    fn records(&self) -> Result<Vec<ValidatorRecords>, SlashingError> {
        self.data
            .iter()
            .map(|v| {
                let pk = decode_pubkey(&v.pubkey)?;
                let mut out = Vec::new();
                for b in &v.signed_blocks {
                    out.push(Candidate::Block(SignedBlockRecord {
                        slot: parse_u64(&b.slot, "slot")?,
                        signing_root: parse_root(&b.signing_root)?,
                    }));
                }
                for a in &v.signed_attestations {
                    out.push(Candidate::Attestation(AttestationRecord::new(
                        parse_u64(&a.source_epoch, "source_epoch")?,
                        parse_u64(&a.target_epoch, "target_epoch")?,
                        parse_root(&a.signing_root)?,
                    )?));
                }
                Ok((pk, out))
            })
            .collect()
    }
}

impl ProtectionDb {
    pub fn export_interchange(&self) -> InterchangeDocument {
        let mut doc = InterchangeDocument::empty(self.genesis_validators_root());
        for (pk, history) in self.validators() {
            let mut blocks = history.blocks.clone();
            blocks.sort();
            blocks.dedup();
            let mut atts = history.attestations.clone();
            atts.sort();
            atts.dedup();
            doc.data.push(InterchangeValidator {
                pubkey: hex0x(pk),
                signed_blocks: blocks
                    .iter()
                    .map(|b| InterchangeBlock {
                        slot: b.slot.to_string(),
                        signing_root: encode_root(&b.signing_root),
                    })
                    .collect(),
                signed_attestations: atts
                    .iter()
                    .map(|a| InterchangeAttestation {
                        source_epoch: a.source_epoch.to_string(),
                        target_epoch: a.target_epoch.to_string(),
                        signing_root: encode_root(&a.signing_root),
                    })
                    .collect(),
            });
        }
        doc
    }

    /// Imports a document. In [`ImportMode::Reject`] nothing is written if
    /// any incoming record is slashable against existing history.
    pub fn import_interchange(
        &mut self,
        doc: &InterchangeDocument,
        mode: ImportMode,
    ) -> Result<ImportReport, SlashingError> {
        if doc.metadata.interchange_format_version != INTERCHANGE_FORMAT_VERSION {
            return Err(SlashingError::UnsupportedVersion(
                doc.metadata.interchange_format_version.clone(),
            ));
        }
        let expected = hex0x(self.genesis_validators_root());
        if !doc
            .metadata
            .genesis_validators_root
            .eq_ignore_ascii_case(&expected)
        {
            return Err(SlashingError::WrongChain {
                expected,
                found: doc.metadata.genesis_validators_root.clone(),
            });
        }
        let records = doc.records()?;
        self.import_records(records, mode)
    }
}
