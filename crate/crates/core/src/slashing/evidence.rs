use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{is_slashable_attestation, AttestationRecord, Root};
use crate::bls::{BlsScheme, ProofOfPossession, PublicKey};
use crate::pairing::PairingSuite;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeaconBlockHeader {
    pub slot: u64,
    pub proposer_index: u64,
    pub parent_root: Root,
    pub state_root: Root,
    pub body_root: Root,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedBeaconBlockHeader {
    pub message: BeaconBlockHeader,
    pub signature: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposerSlashing {
    pub signed_header_1: SignedBeaconBlockHeader,
    pub signed_header_2: SignedBeaconBlockHeader,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: u64,
    pub root: Root,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttestationData {
    pub slot: u64,
    pub index: u64,
    pub beacon_block_root: Root,
    pub source: Checkpoint,
    pub target: Checkpoint,
}

impl AttestationData {
    pub fn record(&self) -> AttestationRecord {
        AttestationRecord {
            source_epoch: self.source.epoch,
            target_epoch: self.target.epoch,
            signing_root: attestation_signing_root(self),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedAttestation {
    pub attesting_indices: Vec<u64>,
    pub data: AttestationData,
    pub signature: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttesterSlashing {
    pub attestation_1: IndexedAttestation,
    pub attestation_2: IndexedAttestation,
}

/// Signing root of a header: SHA-256 over a fixed-width field encoding with
/// a domain tag. Not SSZ hash-tree-root; only self-consistency matters here.
pub fn header_signing_root(h: &BeaconBlockHeader) -> Root {
    let mut d = Sha256::new();
    d.update(b"beacon-proposer");
    d.update(h.slot.to_le_bytes());
    d.update(h.proposer_index.to_le_bytes());
    d.update(h.parent_root);
    d.update(h.state_root);
    d.update(h.body_root);
    d.finalize().into()
}

pub fn attestation_signing_root(a: &AttestationData) -> Root {
    let mut d = Sha256::new();
    d.update(b"beacon-attester");
    d.update(a.slot.to_le_bytes());
    d.update(a.index.to_le_bytes());
    d.update(a.beacon_block_root);
    d.update(a.source.epoch.to_le_bytes());
    d.update(a.source.root);
    d.update(a.target.epoch.to_le_bytes());
    d.update(a.target.root);
    d.finalize().into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceInvalid {
    NotSlashable,
    BadSignature1,
    BadSignature2,
    UnknownValidator,
    MalformedIndices,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceVerdict {
    Valid,
    Invalid(EvidenceInvalid),
}

/// Validator index to public key and proof of possession. Registration
/// requires a valid proof.
pub struct ValidatorRegistry<S: PairingSuite> {
    entries: BTreeMap<u64, (PublicKey<S>, ProofOfPossession<S>)>,
}

impl<S: PairingSuite> Default for ValidatorRegistry<S> {
    fn default() -> Self {
        ValidatorRegistry {
            entries: BTreeMap::new(),
        }
    }
}

impl<S: PairingSuite> ValidatorRegistry<S> {
    pub fn register(
        &mut self,
        scheme: &BlsScheme<S>,
        index: u64,
        pk: PublicKey<S>,
        pop: ProofOfPossession<S>,
    ) -> bool {
        if !scheme.pop_verify(&pk, &pop) {
            return false;
        }
        self.entries.insert(index, (pk, pop));
        true
    }

    pub fn get(&self, index: u64) -> Option<&PublicKey<S>> {
        self.entries.get(&index).map(|(pk, _)| pk)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<S: PairingSuite> BlsScheme<S> {
    /// Valid iff the headers are distinct, share slot and proposer, and both
    /// signatures verify. Signatures are always checked.
    pub fn validate_proposer_slashing(&self, ev: &ProposerSlashing, pk: &PublicKey<S>) -> EvidenceVerdict {
        let h1 = &ev.signed_header_1;
        let h2 = &ev.signed_header_2;
        if h1.message.slot != h2.message.slot
            || h1.message.proposer_index != h2.message.proposer_index
            || h1.message == h2.message
        {
            return EvidenceVerdict::Invalid(EvidenceInvalid::NotSlashable);
        }
        if !self
            .core_verify(pk, &header_signing_root(&h1.message), &h1.signature)
            .is_valid()
        {
            return EvidenceVerdict::Invalid(EvidenceInvalid::BadSignature1);
        }
        if !self
            .core_verify(pk, &header_signing_root(&h2.message), &h2.signature)
            .is_valid()
        {
            return EvidenceVerdict::Invalid(EvidenceInvalid::BadSignature2);
        }
        EvidenceVerdict::Valid
    }

    /// Valid iff the attestation data are slashable, the index sets are
    /// sorted, unique and overlapping, and both aggregate signatures verify
    /// under the registered keys and proofs of possession.
    pub fn validate_attester_slashing(
        &self,
        ev: &AttesterSlashing,
        registry: &ValidatorRegistry<S>,
    ) -> EvidenceVerdict {
        let a1 = &ev.attestation_1;
        let a2 = &ev.attestation_2;
        if !is_slashable_attestation(&a1.data.record(), &a2.data.record()).is_slashable() {
            return EvidenceVerdict::Invalid(EvidenceInvalid::NotSlashable);
        }
        for att in [a1, a2] {
            let idx = &att.attesting_indices;
            if idx.is_empty() || idx.windows(2).any(|w| w[0] >= w[1]) {
                return EvidenceVerdict::Invalid(EvidenceInvalid::MalformedIndices);
            }
        }
        let s1: BTreeSet<_> = a1.attesting_indices.iter().collect();
        if !a2.attesting_indices.iter().any(|i| s1.contains(i)) {
            return EvidenceVerdict::Invalid(EvidenceInvalid::NotSlashable);
        }
        for (att, bad) in [
            (a1, EvidenceInvalid::BadSignature1),
            (a2, EvidenceInvalid::BadSignature2),
        ] {
            let mut pks = Vec::new();
            let mut pops = Vec::new();
            for i in &att.attesting_indices {
                let Some((pk, pop)) = registry.entries.get(i) else {
                    return EvidenceVerdict::Invalid(EvidenceInvalid::UnknownValidator);
                };
                pks.push(pk.clone());
                pops.push(pop.clone());
            }
            let Ok(sig) = self.signature_from_bytes(&att.signature) else {
                return EvidenceVerdict::Invalid(bad);
            };
            let root = attestation_signing_root(&att.data);
            match self.fast_aggregate_verify(&pks, &pops, &root, &sig) {
                Ok(v) if v.is_valid() => {}
                _ => return EvidenceVerdict::Invalid(bad),
            }
        }
        EvidenceVerdict::Valid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bls::SecretKey;
    use crate::pairing::ToySuite;
    use num_bigint::BigUint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn scheme() -> BlsScheme<ToySuite> {
        BlsScheme::new(ToySuite::monte_carlo())
    }

    fn key(s: &BlsScheme<ToySuite>, k: u64) -> SecretKey {
        SecretKey::from_scalar(s.suite(), BigUint::from(k)).unwrap()
    }

    fn header(slot: u64, body: u8) -> BeaconBlockHeader {
        BeaconBlockHeader {
            slot,
            proposer_index: 3,
            parent_root: [1; 32],
            state_root: [2; 32],
            body_root: [body; 32],
        }
    }

    fn signed(s: &BlsScheme<ToySuite>, sk: &SecretKey, h: BeaconBlockHeader) -> SignedBeaconBlockHeader {
        SignedBeaconBlockHeader {
            message: h,
            signature: s.signature_bytes(&s.sign(sk, &header_signing_root(&h))),
        }
    }

    #[test]
    fn proposer_slashing_cases() {
        let s = scheme();
        let sk = key(&s, 11);
        let pk = s.sk_to_pk(&sk);
        let ev = ProposerSlashing {
            signed_header_1: signed(&s, &sk, header(5, 1)),
            signed_header_2: signed(&s, &sk, header(5, 2)),
        };
        assert_eq!(s.validate_proposer_slashing(&ev, &pk), EvidenceVerdict::Valid);

        let mut bad = ev.clone();
        bad.signed_header_2.signature = ev.signed_header_1.signature.clone();
        assert_eq!(
            s.validate_proposer_slashing(&bad, &pk),
            EvidenceVerdict::Invalid(EvidenceInvalid::BadSignature2)
        );
        let mut bad = ev.clone();
        bad.signed_header_1.signature = vec![0xff; 8];
        assert_eq!(
            s.validate_proposer_slashing(&bad, &pk),
            EvidenceVerdict::Invalid(EvidenceInvalid::BadSignature1)
        );

        let same = ProposerSlashing {
            signed_header_1: signed(&s, &sk, header(5, 1)),
            signed_header_2: signed(&s, &sk, header(5, 1)),
        };
        assert_eq!(
            s.validate_proposer_slashing(&same, &pk),
            EvidenceVerdict::Invalid(EvidenceInvalid::NotSlashable)
        );
        let other_slot = ProposerSlashing {
            signed_header_1: signed(&s, &sk, header(5, 1)),
            signed_header_2: signed(&s, &sk, header(6, 2)),
        };
        assert_eq!(
            s.validate_proposer_slashing(&other_slot, &pk),
            EvidenceVerdict::Invalid(EvidenceInvalid::NotSlashable)
        );
        // innocent key: both signatures fail under someone else's key
        let other = s.sk_to_pk(&key(&s, 12));
        assert_eq!(
            s.validate_proposer_slashing(&ev, &other),
            EvidenceVerdict::Invalid(EvidenceInvalid::BadSignature1)
        );
    }

    fn data(source: u64, target: u64, block: u8) -> AttestationData {
        AttestationData {
            slot: target * 32,
            index: 0,
            beacon_block_root: [block; 32],
            source: Checkpoint { epoch: source, root: [0; 32] },
            target: Checkpoint { epoch: target, root: [block; 32] },
        }
    }

    fn indexed(s: &BlsScheme<ToySuite>, sks: &[(u64, SecretKey)], d: AttestationData) -> IndexedAttestation {
        let root = attestation_signing_root(&d);
        let sigs: Vec<_> = sks.iter().map(|(_, k)| s.sign(k, &root)).collect();
        IndexedAttestation {
            attesting_indices: sks.iter().map(|(i, _)| *i).collect(),
            data: d,
            signature: s.signature_bytes(&s.aggregate(&sigs).unwrap()),
        }
    }

    fn registry(s: &BlsScheme<ToySuite>, n: u64) -> (ValidatorRegistry<ToySuite>, Vec<(u64, SecretKey)>) {
        let mut reg = ValidatorRegistry::default();
        let mut keys = Vec::new();
        for i in 0..n {
            let sk = key(s, 20 + i);
            assert!(reg.register(s, i, s.sk_to_pk(&sk), s.pop_prove(&sk)));
            keys.push((i, sk));
        }
        (reg, keys)
    }

    #[test]
    fn attester_slashing_cases() {
        let s = scheme();
        let (reg, keys) = registry(&s, 4);
        let double = AttesterSlashing {
            attestation_1: indexed(&s, &keys[0..2], data(1, 4, 1)),
            attestation_2: indexed(&s, &keys[1..3], data(2, 4, 2)),
        };
        assert_eq!(s.validate_attester_slashing(&double, &reg), EvidenceVerdict::Valid);

        let surround = AttesterSlashing {
            attestation_1: indexed(&s, &keys[0..1], data(1, 6, 1)),
            attestation_2: indexed(&s, &keys[0..1], data(2, 5, 2)),
        };
        assert_eq!(s.validate_attester_slashing(&surround, &reg), EvidenceVerdict::Valid);

        let honest = AttesterSlashing {
            attestation_1: indexed(&s, &keys[0..2], data(1, 2, 1)),
            attestation_2: indexed(&s, &keys[0..2], data(2, 3, 2)),
        };
        assert_eq!(
            s.validate_attester_slashing(&honest, &reg),
            EvidenceVerdict::Invalid(EvidenceInvalid::NotSlashable)
        );

        let disjoint = AttesterSlashing {
            attestation_1: indexed(&s, &keys[0..1], data(1, 4, 1)),
            attestation_2: indexed(&s, &keys[1..2], data(2, 4, 2)),
        };
        assert_eq!(
            s.validate_attester_slashing(&disjoint, &reg),
            EvidenceVerdict::Invalid(EvidenceInvalid::NotSlashable)
        );

        let mut forged = double.clone();
        forged.attestation_2.signature = forged.attestation_1.signature.clone();
        assert_eq!(
            s.validate_attester_slashing(&forged, &reg),
            EvidenceVerdict::Invalid(EvidenceInvalid::BadSignature2)
        );

        let mut unknown = double.clone();
        unknown.attestation_1.attesting_indices = vec![1, 9];
        assert_eq!(
            s.validate_attester_slashing(&unknown, &reg),
            EvidenceVerdict::Invalid(EvidenceInvalid::UnknownValidator)
        );

        let mut unsorted = double;
        unsorted.attestation_1.attesting_indices = vec![1, 0];
        assert_eq!(
            s.validate_attester_slashing(&unsorted, &reg),
            EvidenceVerdict::Invalid(EvidenceInvalid::MalformedIndices)
        );
    }

    #[test]
    fn registry_requires_valid_pop() {
        let s = scheme();
        let mut reg = ValidatorRegistry::default();
        let a = key(&s, 3);
        let b = key(&s, 4);
        assert!(!reg.register(&s, 0, s.sk_to_pk(&a), s.pop_prove(&b)));
        assert!(reg.is_empty());
    }

    #[test]
    fn corrupted_signatures_never_validate() {
        let s = scheme();
        let (reg, keys) = registry(&s, 3);
        let mut rng = ChaCha20Rng::from_seed([5; 32]);
        let sk = key(&s, 11);
        let pk = s.sk_to_pk(&sk);
        let n = s.suite().modulus();
        for _ in 0..300 {
            let mut ev = ProposerSlashing {
                signed_header_1: signed(&s, &sk, header(5, 1)),
                signed_header_2: signed(&s, &sk, header(5, 2)),
            };
            let which = rng.gen_bool(0.5);
            let target = if which { &mut ev.signed_header_1 } else { &mut ev.signed_header_2 };
            let old = u64::from_be_bytes(target.signature.clone().try_into().unwrap());
            let new = (old + rng.gen_range(1..n)) % n;
            target.signature = new.to_be_bytes().to_vec();
            assert_ne!(s.validate_proposer_slashing(&ev, &pk), EvidenceVerdict::Valid);

            let mut ev = AttesterSlashing {
                attestation_1: indexed(&s, &keys[0..2], data(1, 4, 1)),
                attestation_2: indexed(&s, &keys[1..3], data(2, 4, 2)),
            };
            let target = if which { &mut ev.attestation_1 } else { &mut ev.attestation_2 };
            let old = u64::from_be_bytes(target.signature.clone().try_into().unwrap());
            target.signature = ((old + rng.gen_range(1..n)) % n).to_be_bytes().to_vec();
            assert_ne!(s.validate_attester_slashing(&ev, &reg), EvidenceVerdict::Valid);
        }
    }
}
