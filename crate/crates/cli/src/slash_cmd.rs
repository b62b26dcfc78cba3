use std::path::Path;

use beaconlab_core::bls::BlsScheme;
use beaconlab_core::pairing::{Bls12Suite, PairingSuite, ToySuite};
use beaconlab_core::slashing::{
    header_signing_root, AttestationRecord, AttesterSlashing, BeaconBlockHeader, Candidate, Decision, EvidenceVerdict,
    ImportMode, InterchangeDocument, ProposerSlashing, ProtectionDb, Root, SignedBeaconBlockHeader, SignedBlockRecord,
    ValidatorRegistry,
};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{
    hex0x, parse_hex, runtime, CandidateKind, CliError, Ctx, DbArgs, ExpectDecision, Finished, ImportModeArg, SlashCmd,
    SuiteArg, Validity,
};

/// Evidence file accepted by `slash validate-evidence`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvidenceFile {
    Proposer {
        pubkey: String,
        evidence: ProposerSlashing,
    },
    Attester {
        validators: Vec<RegistryEntry>,
        evidence: AttesterSlashing,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub index: u64,
    pub pubkey: String,
    pub pop: String,
}

fn root(s: &str, what: &str) -> Result<Root, CliError> {
    parse_hex(s, what)?
        .try_into()
        .map_err(|_| CliError::Usage(format!("{what} must be 32 bytes")))
}

fn open_db(args: &DbArgs) -> Result<ProtectionDb, CliError> {
    ProtectionDb::open(&args.db, root(&args.genesis_root, "genesis root")?).map_err(runtime)
}

pub(crate) fn slash(ctx: &Ctx, cmd: &SlashCmd) -> Result<Finished, CliError> {
    match cmd {
        SlashCmd::Check {
            db,
            pubkey,
            kind,
            slot,
            source,
            target,
            signing_root,
            expect,
        } => {
            let pk = parse_hex(pubkey, "pubkey")?;
            let signing_root = root(signing_root, "signing root")?;
            let candidate = match kind {
                CandidateKind::Block => Candidate::Block(SignedBlockRecord {
                    slot: slot.ok_or_else(|| CliError::Usage("--slot is required".into()))?,
                    signing_root,
                }),
                CandidateKind::Attestation => Candidate::Attestation(AttestationRecord {
                    source_epoch: source.ok_or_else(|| CliError::Usage("--source is required".into()))?,
                    target_epoch: target.ok_or_else(|| CliError::Usage("--target is required".into()))?,
                    signing_root,
                }),
            };
            let mut store = open_db(db)?;
            let decision = store.check_and_record(&pk, candidate);
            let expected = match expect {
                None => true,
                Some(ExpectDecision::Allow) => decision.is_allow(),
                Some(ExpectDecision::Deny) => !decision.is_allow(),
            };
            let summary = match &decision {
                Decision::Allow => "allowed and recorded".to_string(),
                Decision::Deny(r) => format!("denied: {r}"),
            };
            Ok(Finished::new(
                json!({ "db": db.db.display().to_string(), "pubkey": hex0x(&pk), "candidate": candidate }),
                json!({ "decision": decision }),
                expected,
                summary,
            ))
        }
        SlashCmd::Import { db, file, mode } => {
            let text = std::fs::read_to_string(file).map_err(runtime)?;
            let doc = InterchangeDocument::from_json(&text).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut store = open_db(db)?;
            let mode = match mode {
                ImportModeArg::Allow => ImportMode::Allow,
                ImportModeArg::Reject => ImportMode::Reject,
            };
            let report = store.import_interchange(&doc, mode).map_err(runtime)?;
            Ok(Finished::new(
                json!({ "db": db.db.display().to_string(), "file": file.display().to_string(), "mode": mode }),
                json!({ "import": report }),
                true,
                format!(
                    "{} validators, {} blocks, {} attestations, {} conflicts",
                    report.validators,
                    report.blocks_imported,
                    report.attestations_imported,
                    report.conflicts.len()
                ),
            ))
        }
        SlashCmd::Export { db, out } => {
            let store = open_db(db)?;
            let doc = store.export_interchange();
            let canonical = doc.to_canonical_json();
            let validators = doc.data.len();
            let mut done = Finished::new(
                json!({
                    "db": db.db.display().to_string(),
                    "out": out.as_ref().map(|p| p.display().to_string()),
                }),
                json!({ "validators": validators }),
                true,
                format!("{validators} validators exported"),
            );
            match out {
                Some(p) => std::fs::write(p, &canonical).map_err(runtime)?,
                None => {
                    done.metrics = json!({ "validators": validators, "interchange": doc });
                    done.raw = Some(canonical);
                }
            }
            Ok(done)
        }
        SlashCmd::ValidateEvidence { file, expect, emit } => match ctx.suite {
            SuiteArg::Toy => evidence(ctx, &BlsScheme::new(ToySuite::monte_carlo()), file.as_deref(), *expect, emit.as_deref()),
            SuiteArg::Bls12381 => evidence(ctx, &BlsScheme::new(Bls12Suite::new()), file.as_deref(), *expect, emit.as_deref()),
        },
    }
}

fn verdict_text(v: EvidenceVerdict) -> String {
    match v {
        EvidenceVerdict::Valid => "valid".into(),
        EvidenceVerdict::Invalid(r) => format!("invalid ({})", serde_json::to_value(r).expect("serializes").as_str().unwrap_or("?")),
    }
}

fn evidence<S: PairingSuite>(
    ctx: &Ctx,
    scheme: &BlsScheme<S>,
    file: Option<&Path>,
    expect: Validity,
    emit: Option<&Path>,
) -> Result<Finished, CliError> {
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(runtime)?;
        let ev: EvidenceFile = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("evidence file: {e}")))?;
        let (kind, verdict) = match &ev {
            EvidenceFile::Proposer { pubkey, evidence } => {
                let pk = scheme
                    .key_validate(&parse_hex(pubkey, "pubkey")?)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                ("proposer", scheme.validate_proposer_slashing(evidence, &pk))
            }
            EvidenceFile::Attester { validators, evidence } => {
                let mut registry = ValidatorRegistry::default();
                for v in validators {
                    let pk = scheme
                        .key_validate(&parse_hex(&v.pubkey, "pubkey")?)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    let pop = scheme
                        .signature_from_bytes(&parse_hex(&v.pop, "pop")?)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    if !registry.register(scheme, v.index, pk, beaconlab_core::bls::ProofOfPossession(pop)) {
                        return Err(CliError::Runtime(format!("validator {} has an invalid proof of possession", v.index)));
                    }
                }
                ("attester", scheme.validate_attester_slashing(evidence, &registry))
            }
        };
        let valid = verdict == EvidenceVerdict::Valid;
        return Ok(Finished::new(
            json!({ "file": path.display().to_string(), "kind": kind }),
            json!({ "verdict": verdict }),
            valid == (expect == Validity::Valid),
            verdict_text(verdict),
        ));
    }

    let mut rng = ctx.rng();
    let mut ikm = [0u8; 32];
    rng.fill_bytes(&mut ikm);
    let sk = scheme.keygen(&ikm, b"").expect("32-byte ikm");
    let pk = scheme.sk_to_pk(&sk);
    let mut header = |body: u8| {
        let mut h = BeaconBlockHeader {
            slot: 1024,
            proposer_index: 7,
            parent_root: [0; 32],
            state_root: [0; 32],
            body_root: [body; 32],
        };
        rng.fill_bytes(&mut h.parent_root);
        rng.fill_bytes(&mut h.state_root);
        h
    };
    let (h1, h2) = (header(1), header(2));
    let sign = |h: &BeaconBlockHeader| SignedBeaconBlockHeader {
        message: *h,
        signature: scheme.signature_bytes(&scheme.sign(&sk, &header_signing_root(h))),
    };
    let honest = ProposerSlashing {
        signed_header_1: sign(&h1),
        signed_header_2: sign(&h2),
    };
    let mut tampered = honest.clone();
    tampered.signed_header_2.signature = honest.signed_header_1.signature.clone();
    let good = scheme.validate_proposer_slashing(&honest, &pk);
    let bad = scheme.validate_proposer_slashing(&tampered, &pk);
    if let Some(path) = emit {
        let doc = EvidenceFile::Proposer {
            pubkey: hex0x(&scheme.public_key_bytes(&pk)),
            evidence: honest,
        };
        std::fs::write(path, serde_json::to_string_pretty(&doc).map_err(runtime)?).map_err(runtime)?;
    }
    Ok(Finished::new(
        json!({ "kind": "proposer", "source": "generated" }),
        json!({
            "honest": verdict_text(good),
            "signature_swapped": verdict_text(bad),
        }),
        good == EvidenceVerdict::Valid && bad != EvidenceVerdict::Valid,
        format!("honest evidence {}, swapped signature {}", verdict_text(good), verdict_text(bad)),
    ))
}
