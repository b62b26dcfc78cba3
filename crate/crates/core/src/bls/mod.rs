//! BLS signatures over an abstract [`PairingSuite`] with the proof-of-possession
//! ciphersuite's validation rules.
//!
//! Keys live in G1 and signatures in G2. Verification routines return a
//! [`Verdict`] that keeps the reason for rejection, so tests and attack demos
//! can tell which check fired. Caller errors (empty inputs, length mismatch)
//! are reported as [`BlsError`] instead.

mod keygen;

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::pairing::{Element, Group1Element, Group2Element, PairingError, PairingSuite};

pub use keygen::MIN_IKM_LEN;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlsError {
    #[error("IKM must be at least {MIN_IKM_LEN} bytes, got {0}")]
    IkmTooShort(usize),
    #[error("secret key must satisfy 1 <= SK < r")]
    SecretKeyOutOfRange,
    #[error("cannot aggregate an empty list")]
    EmptyAggregation,
    #[error("expected {expected} entries, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error("rho must satisfy 1 <= rho < r")]
    InvalidRho,
    #[error("rogue key degenerates to the identity")]
    DegenerateRogueKey,
    #[error(transparent)]
    Pairing(#[from] PairingError),
}

/// Why a public key failed `KeyValidate`.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyValidationError {
    #[error("public key does not decode to a curve point")]
    InvalidEncoding,
    #[error("public key is the identity point")]
    IdentityPoint,
    #[error("public key is not in the prime-order subgroup")]
    NotInSubgroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvalidReason {
    SignatureEncoding,
    SignatureSubgroup,
    PublicKey(KeyValidationError),
    PairingMismatch,
    DuplicateMessages,
    DuplicatePublicKeys,
    PopFailure { index: usize },
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::SignatureEncoding => write!(f, "signature does not decode"),
            InvalidReason::SignatureSubgroup => write!(f, "signature subgroup check failed"),
            InvalidReason::PublicKey(e) => write!(f, "{e}"),
            InvalidReason::PairingMismatch => write!(f, "pairing mismatch"),
            InvalidReason::DuplicateMessages => write!(f, "duplicate messages"),
            InvalidReason::DuplicatePublicKeys => write!(f, "duplicate public keys"),
            InvalidReason::PopFailure { index } => {
                write!(f, "proof of possession {index} failed")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(InvalidReason),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn reason(&self) -> Option<InvalidReason> {
        match self {
            Verdict::Valid => None,
            Verdict::Invalid(r) => Some(*r),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => write!(f, "VALID"),
            Verdict::Invalid(r) => write!(f, "INVALID({r})"),
        }
    }
}

/// A scalar `1 <= SK < r`.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    scalar: BigUint,
}

impl SecretKey {
    pub fn from_scalar<S: PairingSuite>(suite: &S, scalar: BigUint) -> Result<Self, BlsError> {
        if scalar.is_zero() || &scalar >= suite.order() {
            return Err(BlsError::SecretKeyOutOfRange);
        }
        Ok(SecretKey { scalar })
    }

    pub fn scalar(&self) -> &BigUint {
        &self.scalar
    }

    pub fn to_bytes_be(&self) -> Vec<u8> {
        self.scalar.to_bytes_be()
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

pub struct PublicKey<S: PairingSuite> {
    point: Group1Element<S>,
    validated: bool,
}

impl<S: PairingSuite> PublicKey<S> {
    /// Wraps a point without running `KeyValidate`. Used by attack demos and
    /// by callers that validate later through [`BlsScheme::core_verify`].
    pub fn unvalidated(point: S::G1) -> Self {
        PublicKey {
            point: Element::unchecked(point),
            validated: false,
        }
    }

    pub fn point(&self) -> &S::G1 {
        self.point.value()
    }

    pub fn validated(&self) -> bool {
        self.validated
    }
}

impl<S: PairingSuite> Clone for PublicKey<S> {
    fn clone(&self) -> Self {
        PublicKey {
            point: self.point.clone(),
            validated: self.validated,
        }
    }
}

impl<S: PairingSuite> fmt::Debug for PublicKey<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicKey")
            .field("point", self.point.value())
            .field("validated", &self.validated)
            .finish()
    }
}

impl<S: PairingSuite> PartialEq for PublicKey<S> {
    fn eq(&self, other: &Self) -> bool {
        self.point.value() == other.point.value()
    }
}

pub struct BlsSignature<S: PairingSuite> {
    point: Group2Element<S>,
}

impl<S: PairingSuite> BlsSignature<S> {
    /// Wraps a G2 element as a signature. No subgroup check happens here;
    /// every verification routine performs it.
    pub fn from_point(point: S::G2) -> Self {
        BlsSignature {
            point: Element::unchecked(point),
        }
    }

    pub fn point(&self) -> &S::G2 {
        self.point.value()
    }
}

impl<S: PairingSuite> Clone for BlsSignature<S> {
    fn clone(&self) -> Self {
        BlsSignature {
            point: self.point.clone(),
        }
    }
}

impl<S: PairingSuite> fmt::Debug for BlsSignature<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("BlsSignature").field(self.point.value()).finish()
    }
}

impl<S: PairingSuite> PartialEq for BlsSignature<S> {
    fn eq(&self, other: &Self) -> bool {
        self.point.value() == other.point.value()
    }
}

/// A signature over the encoding of the signer's own public key, under the
/// PoP domain separation tag.
pub struct ProofOfPossession<S: PairingSuite>(pub BlsSignature<S>);

impl<S: PairingSuite> Clone for ProofOfPossession<S> {
    fn clone(&self) -> Self {
        ProofOfPossession(self.0.clone())
    }
}

impl<S: PairingSuite> fmt::Debug for ProofOfPossession<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ProofOfPossession").field(self.0.point()).finish()
    }
}

/// Output of [`BlsScheme::rogue_key_forge`].
pub struct RogueKeyForgery<S: PairingSuite> {
    pub rogue_pk: PublicKey<S>,
    pub forged_aggregate: BlsSignature<S>,
}

/// The signature scheme bound to a suite.
#[derive(Clone, Debug)]
pub struct BlsScheme<S: PairingSuite> {
    suite: S,
    /// Reject aggregates whose public keys are not pairwise distinct.
    pub strict_distinct_keys: bool,
}

impl<S: PairingSuite> BlsScheme<S> {
    pub fn new(suite: S) -> Self {
        BlsScheme {
            suite,
            strict_distinct_keys: false,
        }
    }

    pub fn with_strict_distinct_keys(mut self, strict: bool) -> Self {
        self.strict_distinct_keys = strict;
        self
    }

    pub fn suite(&self) -> &S {
        &self.suite
    }

    pub fn keygen(&self, ikm: &[u8], key_info: &[u8]) -> Result<SecretKey, BlsError> {
        if ikm.len() < MIN_IKM_LEN {
            return Err(BlsError::IkmTooShort(ikm.len()));
        }
        let scalar = keygen::derive_secret_scalar(ikm, key_info, self.suite.order());
        SecretKey::from_scalar(&self.suite, scalar)
    }

    pub fn sk_to_pk(&self, sk: &SecretKey) -> PublicKey<S> {
        let point = self.suite.g1_scalar_generator(sk.scalar());
        PublicKey {
            point: Element::checked(point),
            validated: true,
        }
    }

    pub fn sign(&self, sk: &SecretKey, message: &[u8]) -> BlsSignature<S> {
        let q = self.suite.hash_to_g2(message, self.suite.signature_dst());
        BlsSignature {
            point: Element::checked(self.suite.g2_mul(&q, sk.scalar())),
        }
    }

    pub fn public_key_bytes(&self, pk: &PublicKey<S>) -> Vec<u8> {
        self.suite.g1_to_bytes(pk.point())
    }

    pub fn signature_bytes(&self, sig: &BlsSignature<S>) -> Vec<u8> {
        self.suite.g2_to_bytes(sig.point())
    }

    /// Decodes a signature without checks; verification does the subgroup check.
    pub fn signature_from_bytes(&self, bytes: &[u8]) -> Result<BlsSignature<S>, BlsError> {
        Ok(BlsSignature {
            point: self.suite.unchecked_g2(bytes)?,
        })
    }

    /// `KeyValidate`: decode, reject the identity, require subgroup membership.
    pub fn key_validate(&self, pk_bytes: &[u8]) -> Result<PublicKey<S>, KeyValidationError> {
        let point = self
            .suite
            .unchecked_g1(pk_bytes)
            .map_err(|_| KeyValidationError::InvalidEncoding)?;
        self.validate_point(point)
    }

    fn validate_point(&self, mut point: Group1Element<S>) -> Result<PublicKey<S>, KeyValidationError> {
        if self.suite.g1_is_identity(point.value()) {
            return Err(KeyValidationError::IdentityPoint);
        }
        if !self.suite.subgroup_check_g1(&mut point) {
            return Err(KeyValidationError::NotInSubgroup);
        }
        Ok(PublicKey {
            point,
            validated: true,
        })
    }

    fn ensure_validated(&self, pk: &PublicKey<S>) -> Result<(), KeyValidationError> {
        if pk.validated {
            return Ok(());
        }
        self.validate_point(pk.point.clone()).map(|_| ())
    }

    fn check_signature(&self, sig: &BlsSignature<S>) -> Result<S::G2, InvalidReason> {
        let mut point = sig.point.clone();
        if !self.suite.subgroup_check_g2(&mut point) {
            return Err(InvalidReason::SignatureSubgroup);
        }
        Ok(point.into_value())
    }

    /// The core verification listing, in order: decode the signature,
    /// subgroup-check it, validate the key, hash, compare pairings.
    pub fn core_verify(&self, pk: &PublicKey<S>, message: &[u8], sig_bytes: &[u8]) -> Verdict {
        self.core_verify_with_dst(pk, message, sig_bytes, self.suite.signature_dst())
    }

    fn core_verify_with_dst(
        &self,
        pk: &PublicKey<S>,
        message: &[u8],
        sig_bytes: &[u8],
        dst: &[u8],
    ) -> Verdict {
        let Ok(sig) = self.signature_from_bytes(sig_bytes) else {
            return Verdict::Invalid(InvalidReason::SignatureEncoding);
        };
        self.core_verify_point(pk, message, &sig, dst)
    }

    fn core_verify_point(
        &self,
        pk: &PublicKey<S>,
        message: &[u8],
        sig: &BlsSignature<S>,
        dst: &[u8],
    ) -> Verdict {
        let r = match self.check_signature(sig) {
            Ok(r) => r,
            Err(reason) => return Verdict::Invalid(reason),
        };
        if let Err(e) = self.ensure_validated(pk) {
            return Verdict::Invalid(InvalidReason::PublicKey(e));
        }
        let q = self.suite.hash_to_g2(message, dst);
        let c1 = self.suite.pair(pk.point(), &q);
        let c2 = self.suite.pair(&self.suite.g1_generator(), &r);
        if c1 == c2 {
            Verdict::Valid
        } else {
            Verdict::Invalid(InvalidReason::PairingMismatch)
        }
    }

    pub fn verify(&self, pk: &PublicKey<S>, message: &[u8], sig: &BlsSignature<S>) -> Verdict {
        self.core_verify_point(pk, message, sig, self.suite.signature_dst())
    }

    pub fn aggregate(&self, signatures: &[BlsSignature<S>]) -> Result<BlsSignature<S>, BlsError> {
        if signatures.is_empty() {
            return Err(BlsError::EmptyAggregation);
        }
        let sum = signatures
            .iter()
            .fold(self.suite.g2_identity(), |acc, s| self.suite.g2_add(&acc, s.point()));
        Ok(BlsSignature::from_point(sum))
    }

    pub fn aggregate_public_keys(&self, pks: &[PublicKey<S>]) -> Result<PublicKey<S>, BlsError> {
        if pks.is_empty() {
            return Err(BlsError::EmptyAggregation);
        }
        let sum = pks
            .iter()
            .fold(self.suite.g1_identity(), |acc, pk| self.suite.g1_add(&acc, pk.point()));
        Ok(PublicKey::unvalidated(sum))
    }

    fn distinct_keys(&self, pks: &[PublicKey<S>]) -> bool {
        let mut seen = HashSet::new();
        pks.iter()
            .all(|pk| seen.insert(self.suite.g1_to_bytes(pk.point())))
    }

    /// Aggregate verification over pairwise distinct messages.
    pub fn aggregate_verify(
        &self,
        pks: &[PublicKey<S>],
        messages: &[&[u8]],
        sig: &BlsSignature<S>,
    ) -> Result<Verdict, BlsError> {
        if pks.is_empty() {
            return Err(BlsError::EmptyAggregation);
        }
        if pks.len() != messages.len() {
            return Err(BlsError::ArityMismatch {
                expected: pks.len(),
                actual: messages.len(),
            });
        }
        let mut seen = HashSet::new();
        if !messages.iter().all(|m| seen.insert(*m)) {
            return Ok(Verdict::Invalid(InvalidReason::DuplicateMessages));
        }
        if self.strict_distinct_keys && !self.distinct_keys(pks) {
            return Ok(Verdict::Invalid(InvalidReason::DuplicatePublicKeys));
        }
        let r = match self.check_signature(sig) {
            Ok(r) => r,
            Err(reason) => return Ok(Verdict::Invalid(reason)),
        };
        let mut terms = Vec::with_capacity(pks.len());
        for (pk, msg) in pks.iter().zip(messages) {
            if let Err(e) = self.ensure_validated(pk) {
                return Ok(Verdict::Invalid(InvalidReason::PublicKey(e)));
            }
            let q = self.suite.hash_to_g2(msg, self.suite.signature_dst());
            terms.push((pk.point().clone(), q));
        }
        let lhs = self.suite.multi_pair(&terms);
        let rhs = self.suite.pair(&self.suite.g1_generator(), &r);
        Ok(if lhs == rhs {
            Verdict::Valid
        } else {
            Verdict::Invalid(InvalidReason::PairingMismatch)
        })
    }

    pub fn pop_prove(&self, sk: &SecretKey) -> ProofOfPossession<S> {
        let pk = self.sk_to_pk(sk);
        let encoded = self.public_key_bytes(&pk);
        let q = self.suite.hash_to_g2(&encoded, self.suite.pop_dst());
        ProofOfPossession(BlsSignature {
            point: Element::checked(self.suite.g2_mul(&q, sk.scalar())),
        })
    }

    pub fn pop_verify(&self, pk: &PublicKey<S>, pop: &ProofOfPossession<S>) -> bool {
        let encoded = self.public_key_bytes(pk);
        self.core_verify_point(pk, &encoded, &pop.0, self.suite.pop_dst())
            .is_valid()
    }

    /// Same-message aggregate verification, gated on a proof of possession
    /// for every key.
    pub fn fast_aggregate_verify(
        &self,
        pks: &[PublicKey<S>],
        pops: &[ProofOfPossession<S>],
        message: &[u8],
        sig: &BlsSignature<S>,
    ) -> Result<Verdict, BlsError> {
        if pks.len() != pops.len() {
            return Err(BlsError::ArityMismatch {
                expected: pks.len(),
                actual: pops.len(),
            });
        }
        if pks.is_empty() {
            return Err(BlsError::EmptyAggregation);
        }
        for (index, (pk, pop)) in pks.iter().zip(pops).enumerate() {
            if !self.pop_verify(pk, pop) {
                return Ok(Verdict::Invalid(InvalidReason::PopFailure { index }));
            }
        }
        self.unsafe_fast_aggregate_verify(pks, message, sig)
    }

    /// UNSAFE: same-message aggregate verification without proofs of
    /// possession. Accepts rogue-key forgeries; exists for attack demos.
    pub fn unsafe_fast_aggregate_verify(
        &self,
        pks: &[PublicKey<S>],
        message: &[u8],
        sig: &BlsSignature<S>,
    ) -> Result<Verdict, BlsError> {
        if pks.is_empty() {
            return Err(BlsError::EmptyAggregation);
        }
        if self.strict_distinct_keys && !self.distinct_keys(pks) {
            return Ok(Verdict::Invalid(InvalidReason::DuplicatePublicKeys));
        }
        for pk in pks {
            if let Err(e) = self.ensure_validated(pk) {
                return Ok(Verdict::Invalid(InvalidReason::PublicKey(e)));
            }
        }
        let r = match self.check_signature(sig) {
            Ok(r) => r,
            Err(reason) => return Ok(Verdict::Invalid(reason)),
        };
        let agg = self.aggregate_public_keys(pks)?;
        let q = self.suite.hash_to_g2(message, self.suite.signature_dst());
        let lhs = self.suite.pair(agg.point(), &q);
        let rhs = self.suite.pair(&self.suite.g1_generator(), &r);
        Ok(if lhs == rhs {
            Verdict::Valid
        } else {
            Verdict::Invalid(InvalidReason::PairingMismatch)
        })
    }

    /// Rogue-key construction: `PK2 = rho * P - PK1` and the forged aggregate
    /// `rho * H(m)`, produced without knowing any secret key.
    pub fn rogue_key_forge(
        &self,
        target_pk: &PublicKey<S>,
        message: &[u8],
        rho: &BigUint,
    ) -> Result<RogueKeyForgery<S>, BlsError> {
        if rho.is_zero() || rho >= self.suite.order() {
            return Err(BlsError::InvalidRho);
        }
        let rho_p = self.suite.g1_scalar_generator(rho);
        let rogue = self.suite.g1_add(&rho_p, &self.suite.g1_neg(target_pk.point()));
        let rogue_pk = self
            .validate_point(Element::unchecked(rogue))
            .map_err(|_| BlsError::DegenerateRogueKey)?;
        let q = self.suite.hash_to_g2(message, self.suite.signature_dst());
        Ok(RogueKeyForgery {
            rogue_pk,
            forged_aggregate: BlsSignature::from_point(self.suite.g2_mul(&q, rho)),
        })
    }

    pub fn hash_message(&self, message: &[u8]) -> S::G2 {
        self.suite.hash_to_g2(message, self.suite.signature_dst())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::{ToySuite, ZnElem};

    fn toy() -> BlsScheme<ToySuite> {
        BlsScheme::new(ToySuite::worked_example())
    }

    fn sk(s: &BlsScheme<ToySuite>, k: u64) -> SecretKey {
        SecretKey::from_scalar(s.suite(), BigUint::from(k)).unwrap()
    }

    /// A message whose toy hash is `target` (a multiple of 5 below 35).
    fn message_hashing_to(s: &BlsScheme<ToySuite>, target: u64) -> Vec<u8> {
        (0u32..)
            .map(|i| format!("msg-{i}").into_bytes())
            .find(|m| s.hash_message(m) == ZnElem(target))
            .unwrap()
    }

    #[test]
    fn ikm_length_is_enforced() {
        let s = toy();
        assert_eq!(s.keygen(&[0u8; 31], b""), Err(BlsError::IkmTooShort(31)));
        let a = s.keygen(&[0u8; 32], b"").unwrap();
        let b = s.keygen(&[0u8; 32], b"").unwrap();
        assert_eq!(a, b);
        assert!(a.scalar() >= &BigUint::from(1u8) && a.scalar() < &BigUint::from(7u8));
    }

    #[test]
    fn secret_key_range() {
        let suite = ToySuite::worked_example();
        assert!(SecretKey::from_scalar(&suite, BigUint::from(0u8)).is_err());
        assert!(SecretKey::from_scalar(&suite, BigUint::from(7u8)).is_err());
        assert!(SecretKey::from_scalar(&suite, BigUint::from(6u8)).is_ok());
    }

    #[test]
    fn worked_sign_and_verify() {
        let s = toy();
        let k = sk(&s, 3);
        let pk = s.sk_to_pk(&k);
        assert_eq!(*pk.point(), ZnElem(15));
        let m = message_hashing_to(&s, 10);
        let sig = s.sign(&k, &m);
        assert_eq!(*sig.point(), ZnElem(30));
        assert_eq!(s.core_verify(&pk, &m, &s.signature_bytes(&sig)), Verdict::Valid);
        assert_eq!(*s.sk_to_pk(&sk(&s, 1)).point(), s.suite().g1_generator());
        let sig1 = s.sign(&sk(&s, 1), &m);
        assert_eq!(*sig1.point(), ZnElem(10));
    }

    #[test]
    fn key_validate_partitions_all_toy_elements() {
        let s = toy();
        for x in 0..35u64 {
            let res = s.key_validate(&x.to_be_bytes());
            match x {
                0 => assert_eq!(res.unwrap_err(), KeyValidationError::IdentityPoint),
                x if x % 5 == 0 => assert!(res.unwrap().validated()),
                _ => assert_eq!(res.unwrap_err(), KeyValidationError::NotInSubgroup),
            }
        }
        assert_eq!(
            s.key_validate(&35u64.to_be_bytes()).unwrap_err(),
            KeyValidationError::InvalidEncoding
        );
        assert_eq!(s.key_validate(&[1, 2, 3]).unwrap_err(), KeyValidationError::InvalidEncoding);
    }

    #[test]
    fn torsion_signature_is_rejected_before_pairing() {
        let s = toy();
        let pk = s.sk_to_pk(&sk(&s, 3));
        let v = s.core_verify(&pk, b"m", &7u64.to_be_bytes());
        assert_eq!(v, Verdict::Invalid(InvalidReason::SignatureSubgroup));
        let v = s.core_verify(&pk, b"m", &99u64.to_be_bytes());
        assert_eq!(v, Verdict::Invalid(InvalidReason::SignatureEncoding));
    }

    #[test]
    fn unvalidated_bad_keys_are_caught_in_core_verify() {
        let s = toy();
        let m = message_hashing_to(&s, 10);
        let sig = s.signature_bytes(&s.sign(&sk(&s, 3), &m));
        let identity = PublicKey::unvalidated(ZnElem(0));
        assert_eq!(
            s.core_verify(&identity, &m, &sig),
            Verdict::Invalid(InvalidReason::PublicKey(KeyValidationError::IdentityPoint))
        );
        let torsion = PublicKey::unvalidated(ZnElem(7));
        assert_eq!(
            s.core_verify(&torsion, &m, &sig),
            Verdict::Invalid(InvalidReason::PublicKey(KeyValidationError::NotInSubgroup))
        );
    }

    #[test]
    fn aggregate_examples() {
        let s = toy();
        assert_eq!(s.aggregate(&[]).unwrap_err(), BlsError::EmptyAggregation);
        let a = BlsSignature::from_point(ZnElem(30));
        let b = BlsSignature::from_point(ZnElem(25));
        assert_eq!(s.aggregate(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(*s.aggregate(&[a, b]).unwrap().point(), ZnElem(20));
        assert_eq!(s.aggregate_public_keys(&[]).unwrap_err(), BlsError::EmptyAggregation);
    }

    #[test]
    fn aggregate_verify_rejects_duplicates_and_arity() {
        let s = toy();
        let k1 = sk(&s, 2);
        let k2 = sk(&s, 4);
        let sig = s.aggregate(&[s.sign(&k1, b"same"), s.sign(&k2, b"same")]).unwrap();
        let pks = [s.sk_to_pk(&k1), s.sk_to_pk(&k2)];
        assert_eq!(
            s.aggregate_verify(&pks, &[b"same", b"same"], &sig).unwrap(),
            Verdict::Invalid(InvalidReason::DuplicateMessages)
        );
        assert_eq!(
            s.aggregate_verify(&pks, &[b"same"], &sig).unwrap_err(),
            BlsError::ArityMismatch { expected: 2, actual: 1 }
        );
        assert_eq!(s.aggregate_verify(&[], &[], &sig).unwrap_err(), BlsError::EmptyAggregation);
    }

    #[test]
    fn strict_mode_rejects_duplicate_keys() {
        let s = toy().with_strict_distinct_keys(true);
        let k = sk(&s, 2);
        let m1 = message_hashing_to(&s, 10);
        let m2 = message_hashing_to(&s, 20);
        let sig = s.aggregate(&[s.sign(&k, &m1), s.sign(&k, &m2)]).unwrap();
        let pks = [s.sk_to_pk(&k), s.sk_to_pk(&k)];
        assert_eq!(
            s.aggregate_verify(&pks, &[&m1, &m2], &sig).unwrap(),
            Verdict::Invalid(InvalidReason::DuplicatePublicKeys)
        );
        let lax = toy();
        assert_eq!(lax.aggregate_verify(&pks, &[&m1, &m2], &sig).unwrap(), Verdict::Valid);
    }

    #[test]
    fn pop_round_trip_and_mismatch() {
        let s = toy();
        let k1 = sk(&s, 2);
        let k2 = sk(&s, 5);
        let pop1 = s.pop_prove(&k1);
        assert!(s.pop_verify(&s.sk_to_pk(&k1), &pop1));
        assert!(!s.pop_verify(&s.sk_to_pk(&k2), &pop1));
    }

    #[test]
    fn worked_rogue_key_forgery() {
        let s = toy();
        let k1 = sk(&s, 3);
        let pk1 = s.sk_to_pk(&k1);
        let m = message_hashing_to(&s, 10);
        let forgery = s.rogue_key_forge(&pk1, &m, &BigUint::from(2u8)).unwrap();
        assert_eq!(*forgery.rogue_pk.point(), ZnElem(30));
        assert_eq!(*forgery.forged_aggregate.point(), ZnElem(20));
        let pks = [pk1.clone(), forgery.rogue_pk.clone()];
        assert_eq!(
            s.unsafe_fast_aggregate_verify(&pks, &m, &forgery.forged_aggregate).unwrap(),
            Verdict::Valid
        );
        // the attacker cannot produce a PoP for the rogue key; reusing the
        // forged aggregate or the target's proof both fail
        let pops = [s.pop_prove(&k1), ProofOfPossession(forgery.forged_aggregate.clone())];
        assert_eq!(
            s.fast_aggregate_verify(&pks, &pops, &m, &forgery.forged_aggregate).unwrap(),
            Verdict::Invalid(InvalidReason::PopFailure { index: 1 })
        );
        let pops = [s.pop_prove(&k1), s.pop_prove(&k1)];
        assert_eq!(
            s.fast_aggregate_verify(&pks, &pops, &m, &forgery.forged_aggregate).unwrap(),
            Verdict::Invalid(InvalidReason::PopFailure { index: 1 })
        );
    }

    #[test]
    fn rogue_key_degenerate_and_rho_range() {
        let s = toy();
        let pk = s.sk_to_pk(&sk(&s, 1));
        assert!(matches!(
            s.rogue_key_forge(&pk, b"m", &BigUint::from(1u8)),
            Err(BlsError::DegenerateRogueKey)
        ));
        assert!(matches!(
            s.rogue_key_forge(&pk, b"m", &BigUint::from(0u8)),
            Err(BlsError::InvalidRho)
        ));
        assert!(matches!(
            s.rogue_key_forge(&pk, b"m", &BigUint::from(7u8)),
            Err(BlsError::InvalidRho)
        ));
    }

    #[test]
    fn fast_aggregate_single_signer_matches_core_verify() {
        let s = toy();
        for k in 1..7u64 {
            let key = sk(&s, k);
            let pk = s.sk_to_pk(&key);
            for i in 0..10u8 {
                let m = [i];
                let sig = s.sign(&key, &m);
                let fast = s
                    .fast_aggregate_verify(std::slice::from_ref(&pk), &[s.pop_prove(&key)], &m, &sig)
                    .unwrap();
                assert_eq!(fast, s.core_verify(&pk, &m, &s.signature_bytes(&sig)));
            }
        }
    }

    #[test]
    fn fast_aggregate_arity() {
        let s = toy();
        let key = sk(&s, 2);
        let sig = s.sign(&key, b"m");
        assert!(matches!(
            s.fast_aggregate_verify(&[s.sk_to_pk(&key)], &[], b"m", &sig),
            Err(BlsError::ArityMismatch { .. })
        ));
        assert_eq!(
            s.fast_aggregate_verify(&[], &[], b"m", &sig).unwrap_err(),
            BlsError::EmptyAggregation
        );
    }
}
