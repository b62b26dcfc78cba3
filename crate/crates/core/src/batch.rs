//! Randomized batch verification of aggregate signatures, the naive oracle it
//! must agree with, and the two deviation attacks against careless batching.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bls::{BlsScheme, BlsSignature, PublicKey};
use crate::pairing::{Element, PairingError, PairingSuite};

pub const DEFAULT_COEFF_BITS: u32 = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BatchError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("item {0} has no (key, message) pairs")]
    EmptyItem(usize),
    #[error("expected {expected} coefficients, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error("coefficient {index} is outside [1, r)")]
    InvalidCoefficient { index: usize },
    #[error("coefficient width must be between 1 and 512 bits")]
    InvalidBitWidth,
    #[error("deviation must not be the identity")]
    IdentityDeviation,
    #[error("attack needs exactly two items, got {0}")]
    NeedTwoItems(usize),
    #[error("no torsion of order {0} available")]
    TorsionUnavailable(u64),
    #[error(transparent)]
    Pairing(PairingError),
}

impl From<PairingError> for BatchError {
    fn from(e: PairingError) -> Self {
        match e {
            PairingError::TorsionUnavailable(p) => BatchError::TorsionUnavailable(p),
            other => BatchError::Pairing(other),
        }
    }
}

/// One aggregate signature together with the (key, message) pairs it covers.
pub struct BatchItem<S: PairingSuite> {
    pub signature: BlsSignature<S>,
    pub pairs: Vec<(PublicKey<S>, Vec<u8>)>,
}

impl<S: PairingSuite> Clone for BatchItem<S> {
    fn clone(&self) -> Self {
        BatchItem {
            signature: self.signature.clone(),
            pairs: self.pairs.clone(),
        }
    }
}

impl<S: PairingSuite> std::fmt::Debug for BatchItem<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BatchItem")
            .field("signature", &self.signature)
            .field("pairs", &self.pairs.len())
            .finish()
    }
}

/// The random weights `r_i`, reproducible from `seed`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchCoefficients {
    values: Vec<BigUint>,
    bit_width: u32,
    seed: [u8; 32],
}

impl BatchCoefficients {
    /// Draws `n` coefficients uniformly from `[1, min(2^bit_width, r))`.
    /// A width of 1 yields all-ones.
    pub fn generate(
        n: usize,
        bit_width: u32,
        seed: [u8; 32],
        order: &BigUint,
    ) -> Result<Self, BatchError> {
        if bit_width == 0 || bit_width > 512 {
            return Err(BatchError::InvalidBitWidth);
        }
        let cap = BigUint::one() << bit_width;
        let bound = if &cap < order { cap } else { order.clone() };
        let mut rng = ChaCha20Rng::from_seed(seed);
        let span = &bound - 1u8;
        let values = (0..n)
            .map(|_| rng.gen_biguint_below(&span) + 1u8)
            .collect();
        Ok(BatchCoefficients {
            values,
            bit_width,
            seed,
        })
    }

    /// All coefficients equal to one: the unrandomized check.
    pub fn unit(n: usize) -> Self {
        BatchCoefficients {
            values: vec![BigUint::one(); n],
            bit_width: 1,
            seed: [0; 32],
        }
    }

    /// Explicit coefficients; each must lie in `[1, r)`.
    pub fn from_values(values: Vec<BigUint>, order: &BigUint) -> Result<Self, BatchError> {
        if let Some(index) = values.iter().position(|v| v.is_zero() || v >= order) {
            return Err(BatchError::InvalidCoefficient { index });
        }
        let bit_width = values.iter().map(|v| v.bits() as u32).max().unwrap_or(1);
        Ok(BatchCoefficients {
            values,
            bit_width,
            seed: [0; 32],
        })
    }

    pub fn values(&self) -> &[BigUint] {
        &self.values
    }

    pub fn bit_width(&self) -> u32 {
        self.bit_width
    }

    pub fn seed(&self) -> &[u8; 32] {
        &self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Verifier that counts every pairing it evaluates.
#[derive(Debug)]
pub struct BatchVerifier<S: PairingSuite> {
    suite: S,
    pairings: AtomicUsize,
}

impl<S: PairingSuite> BatchVerifier<S> {
    pub fn new(suite: S) -> Self {
        BatchVerifier {
            suite,
            pairings: AtomicUsize::new(0),
        }
    }

    pub fn suite(&self) -> &S {
        &self.suite
    }

    pub fn pairings(&self) -> usize {
        self.pairings.load(Ordering::Relaxed)
    }

    pub fn reset_counter(&self) {
        self.pairings.store(0, Ordering::Relaxed);
    }

    fn pair(&self, p: &S::G1, q: &S::G2) -> S::Gt {
        self.pairings.fetch_add(1, Ordering::Relaxed);
        self.suite.pair(p, q)
    }

    fn multi_pair(&self, terms: &[(S::G1, S::G2)]) -> S::Gt {
        self.pairings.fetch_add(terms.len(), Ordering::Relaxed);
        self.suite.multi_pair(terms)
    }

    fn check_shape(&self, items: &[BatchItem<S>]) -> Result<(), BatchError> {
        if items.is_empty() {
            return Err(BatchError::EmptyBatch);
        }
        if let Some(i) = items.iter().position(|it| it.pairs.is_empty()) {
            return Err(BatchError::EmptyItem(i));
        }
        Ok(())
    }

    fn hash(&self, message: &[u8]) -> S::G2 {
        self.suite.hash_to_g2(message, self.suite.signature_dst())
    }

    /// Checks each item's pairing equation separately: `n + sum(m_i)` pairings.
    /// Performs no validation of its own.
    pub fn naive_verify(&self, items: &[BatchItem<S>]) -> Result<bool, BatchError> {
        self.check_shape(items)?;
        let g = self.suite.g1_generator();
        let mut all = true;
        for item in items {
            let lhs = self.pair(&g, item.signature.point());
            let terms: Vec<_> = item
                .pairs
                .iter()
                .map(|(pk, m)| (pk.point().clone(), self.hash(m)))
                .collect();
            all &= lhs == self.multi_pair(&terms);
        }
        Ok(all)
    }

    /// Single randomized check `e(P, sum r_i S_i) = prod e(P_ij, r_i H(M_ij))`:
    /// `1 + sum(m_i)` pairings.
    pub fn batch_verify(
        &self,
        items: &[BatchItem<S>],
        coeffs: &BatchCoefficients,
        enforce_subgroup: bool,
    ) -> Result<bool, BatchError> {
        self.check_shape(items)?;
        if coeffs.len() != items.len() {
            return Err(BatchError::ArityMismatch {
                expected: items.len(),
                actual: coeffs.len(),
            });
        }
        let order = self.suite.order();
        if let Some(index) = coeffs.values.iter().position(|v| v.is_zero() || v >= order) {
            return Err(BatchError::InvalidCoefficient { index });
        }
        if enforce_subgroup && !self.all_validated(items) {
            return Ok(false);
        }
        let mut s_star = self.suite.g2_identity();
        let mut terms = Vec::new();
        for (item, r) in items.iter().zip(&coeffs.values) {
            let weighted = self.suite.g2_mul(item.signature.point(), r);
            s_star = self.suite.g2_add(&s_star, &weighted);
            for (pk, m) in &item.pairs {
                terms.push((pk.point().clone(), self.suite.g2_mul(&self.hash(m), r)));
            }
        }
        let lhs = self.pair(&self.suite.g1_generator(), &s_star);
        Ok(lhs == self.multi_pair(&terms))
    }

    fn all_validated(&self, items: &[BatchItem<S>]) -> bool {
        items.iter().all(|item| {
            let mut sig = Element::unchecked(item.signature.point().clone());
            self.suite.subgroup_check_g2(&mut sig)
                && item.pairs.iter().all(|(pk, _)| {
                    let mut p = Element::unchecked(pk.point().clone());
                    !self.suite.g1_is_identity(pk.point()) && self.suite.subgroup_check_g1(&mut p)
                })
        })
    }
}

fn with_signature<S: PairingSuite>(item: &BatchItem<S>, sig: S::G2) -> BatchItem<S> {
    BatchItem {
        signature: BlsSignature::from_point(sig),
        pairs: item.pairs.clone(),
    }
}

/// Replaces the two signatures `C1, C2` with `C1 + D, C2 - D`. Each tampered
/// item fails on its own while their sum is unchanged.
pub fn forge_additive_deviation<S: PairingSuite>(
    suite: &S,
    items: &[BatchItem<S>],
    deviation: &S::G2,
) -> Result<Vec<BatchItem<S>>, BatchError> {
    if items.len() != 2 {
        return Err(BatchError::NeedTwoItems(items.len()));
    }
    if suite.g2_is_identity(deviation) {
        return Err(BatchError::IdentityDeviation);
    }
    let s1 = suite.g2_add(items[0].signature.point(), deviation);
    let s2 = suite.g2_add(items[1].signature.point(), &suite.g2_neg(deviation));
    Ok(vec![with_signature(&items[0], s1), with_signature(&items[1], s2)])
}

/// Adds independent random multiples `a_i * T` (`a_i` in `[1, p)`) of an
/// order-`p` torsion point `T` to both signatures.
pub fn forge_subgroup_deviation<S: PairingSuite, R: Rng>(
    suite: &S,
    items: &[BatchItem<S>],
    torsion_order: u64,
    rng: &mut R,
) -> Result<Vec<BatchItem<S>>, BatchError> {
    if items.len() != 2 {
        return Err(BatchError::NeedTwoItems(items.len()));
    }
    let t = suite.g2_torsion_point(torsion_order)?;
    Ok(items
        .iter()
        .map(|item| {
            let a = BigUint::from(rng.gen_range(1..torsion_order));
            let d = suite.g2_mul(&t, &a);
            with_signature(item, suite.g2_add(item.signature.point(), &d))
        })
        .collect())
}

/// Two honest single-signer items over distinct messages, derived from `seed`.
pub fn honest_pair<S: PairingSuite>(scheme: &BlsScheme<S>, seed: [u8; 32]) -> Vec<BatchItem<S>> {
    (0..2u8)
        .map(|i| {
            let mut ikm = [0u8; 32];
            ikm.copy_from_slice(&Sha256::digest([&seed[..], b"signer", &[i]].concat()));
            let sk = scheme.keygen(&ikm, b"").expect("32-byte ikm");
            let msg = format!("batch message {i}").into_bytes();
            BatchItem {
                signature: scheme.sign(&sk, &msg),
                pairs: vec![(scheme.sk_to_pk(&sk), msg)],
            }
        })
        .collect()
}

/// Per-trial seed `SHA-256(seed || index)`.
pub fn trial_seed(seed: &[u8; 32], index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed);
    h.update(index.to_le_bytes());
    h.finalize().into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub passes: u64,
}

impl TrialSummary {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.passes as f64 / self.trials as f64
        }
    }
}

/// Runs the additive-deviation attack `trials` times against batches with
/// fresh `bit_width`-bit coefficients and counts how often it is accepted.
pub fn additive_deviation_trials<S: PairingSuite>(
    scheme: &BlsScheme<S>,
    trials: u64,
    bit_width: u32,
    seed: [u8; 32],
) -> Result<TrialSummary, BatchError> {
    let suite = scheme.suite();
    let honest = honest_pair(scheme, seed);
    let deviation = suite.g2_mul(&suite.g2_generator(), &BigUint::from(0x5eedu32));
    let tampered = forge_additive_deviation(suite, &honest, &deviation)?;
    let passes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let verifier = BatchVerifier::new(suite.clone());
            let coeffs = BatchCoefficients::generate(2, bit_width, trial_seed(&seed, i), suite.order())?;
            verifier.batch_verify(&tampered, &coeffs, true)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|ok| *ok)
        .count() as u64;
    Ok(TrialSummary { trials, passes })
}

/// Monte Carlo run of the small-subgroup cancellation attack: each trial draws
/// new torsion deviations and new coefficients.
pub fn subgroup_deviation_trials<S: PairingSuite>(
    scheme: &BlsScheme<S>,
    torsion_order: u64,
    trials: u64,
    bit_width: u32,
    enforce_subgroup: bool,
    seed: [u8; 32],
) -> Result<TrialSummary, BatchError> {
    let suite = scheme.suite();
    suite.g2_torsion_point(torsion_order)?;
    let honest = honest_pair(scheme, seed);
    let passes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::from_seed(trial_seed(&seed, i));
            let tampered = forge_subgroup_deviation(suite, &honest, torsion_order, &mut rng)?;
            let coeffs = BatchCoefficients::generate(2, bit_width, rng.gen(), suite.order())?;
            BatchVerifier::new(suite.clone()).batch_verify(&tampered, &coeffs, enforce_subgroup)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|ok| *ok)
        .count() as u64;
    Ok(TrialSummary { trials, passes })
}

/// JSON batch file accepted by the command line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchDocument {
    pub items: Vec<BatchDocumentItem>,
    pub seed: String,
    pub coeff_bits: u32,
    pub enforce_subgroup: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchDocumentItem {
    pub signature: String,
    pub pairs: Vec<BatchDocumentPair>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchDocumentPair {
    pub pk: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum BatchDocumentError {
    #[error("invalid hex in {field}")]
    Hex { field: &'static str },
    #[error("seed must be 32 bytes")]
    Seed,
    #[error(transparent)]
    Pairing(#[from] PairingError),
}

fn decode_hex(s: &str, field: &'static str) -> Result<Vec<u8>, BatchDocumentError> {
    hex::decode(s.trim_start_matches("0x")).map_err(|_| BatchDocumentError::Hex { field })
}

impl BatchDocument {
    pub fn from_items<S: PairingSuite>(
        suite: &S,
        items: &[BatchItem<S>],
        seed: [u8; 32],
        coeff_bits: u32,
        enforce_subgroup: bool,
    ) -> Self {
        BatchDocument {
            items: items
                .iter()
                .map(|it| BatchDocumentItem {
                    signature: format!("0x{}", hex::encode(suite.g2_to_bytes(it.signature.point()))),
                    pairs: it
                        .pairs
                        .iter()
                        .map(|(pk, m)| BatchDocumentPair {
                            pk: format!("0x{}", hex::encode(suite.g1_to_bytes(pk.point()))),
                            message: format!("0x{}", hex::encode(m)),
                        })
                        .collect(),
                })
                .collect(),
            seed: format!("0x{}", hex::encode(seed)),
            coeff_bits,
            enforce_subgroup,
        }
    }

    /// Decodes points without validation; `batch_verify` decides what to check.
    pub fn to_items<S: PairingSuite>(&self, suite: &S) -> Result<Vec<BatchItem<S>>, BatchDocumentError> {
        self.items
            .iter()
            .map(|it| {
                let sig = suite.g2_from_bytes(&decode_hex(&it.signature, "signature")?)?;
                let pairs = it
                    .pairs
                    .iter()
                    .map(|p| {
                        let pk = suite.g1_from_bytes(&decode_hex(&p.pk, "pk")?)?;
                        Ok((PublicKey::unvalidated(pk), decode_hex(&p.message, "message")?))
                    })
                    .collect::<Result<Vec<_>, BatchDocumentError>>()?;
                Ok(BatchItem {
                    signature: BlsSignature::from_point(sig),
                    pairs,
                })
            })
            .collect()
    }

    pub fn seed_bytes(&self) -> Result<[u8; 32], BatchDocumentError> {
        decode_hex(&self.seed, "seed")?
            .try_into()
            .map_err(|_| BatchDocumentError::Seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bls::SecretKey;
    use crate::pairing::{ToySuite, ZnElem};

    fn scheme() -> BlsScheme<ToySuite> {
        BlsScheme::new(ToySuite::worked_example())
    }

    fn message_hashing_to(s: &BlsScheme<ToySuite>, target: u64) -> Vec<u8> {
        (0u32..)
            .map(|i| format!("m{i}").into_bytes())
            .find(|m| s.hash_message(m) == ZnElem(target))
            .unwrap()
    }

    fn item(s: &BlsScheme<ToySuite>, sk: u64, msg: Vec<u8>) -> BatchItem<ToySuite> {
        let k = SecretKey::from_scalar(s.suite(), BigUint::from(sk)).unwrap();
        BatchItem {
            signature: s.sign(&k, &msg),
            pairs: vec![(s.sk_to_pk(&k), msg)],
        }
    }

    #[test]
    fn worked_additive_deviation() {
        let s = scheme();
        // C1 = 3 * 10 = 30, C2 = 5 * 5 = 25
        let items = vec![
            item(&s, 3, message_hashing_to(&s, 10)),
            item(&s, 5, message_hashing_to(&s, 5)),
        ];
        assert_eq!(*items[0].signature.point(), ZnElem(30));
        assert_eq!(*items[1].signature.point(), ZnElem(25));
        let v = BatchVerifier::new(s.suite().clone());
        assert!(v.naive_verify(&items).unwrap());

        let tampered = forge_additive_deviation(s.suite(), &items, &ZnElem(5)).unwrap();
        assert_eq!(*tampered[0].signature.point(), ZnElem(0));
        assert_eq!(*tampered[1].signature.point(), ZnElem(20));
        assert!(!v.naive_verify(&tampered[..1]).unwrap());
        assert!(!v.naive_verify(&tampered[1..]).unwrap());
        assert!(v.batch_verify(&tampered, &BatchCoefficients::unit(2), true).unwrap());
        // both sides of the unit-coefficient equation equal 30 in GT
        assert_eq!(s.suite().pair(&ZnElem(5), &ZnElem(20)), ZnElem(30));
        assert!(matches!(
            forge_additive_deviation(s.suite(), &items, &ZnElem(0)),
            Err(BatchError::IdentityDeviation)
        ));
    }

    #[test]
    fn honest_batches_agree_with_naive_exhaustively() {
        let s = scheme();
        let suite = s.suite();
        let msgs: Vec<Vec<u8>> = (0..3u8).map(|i| vec![i]).collect();
        let v = BatchVerifier::new(suite.clone());
        for a in 1..7u64 {
            for b in 1..7u64 {
                let items = vec![item(&s, a, msgs[0].clone()), item(&s, b, msgs[1].clone())];
                for r1 in 1..7u64 {
                    for r2 in 1..7u64 {
                        let c = BatchCoefficients::from_values(
                            vec![BigUint::from(r1), BigUint::from(r2)],
                            suite.order(),
                        )
                        .unwrap();
                        assert_eq!(
                            v.batch_verify(&items, &c, true).unwrap(),
                            v.naive_verify(&items).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn multi_message_items_agree_with_naive() {
        let s = scheme();
        let v = BatchVerifier::new(s.suite().clone());
        let k = |x: u64| SecretKey::from_scalar(s.suite(), BigUint::from(x)).unwrap();
        for a in 1..7u64 {
            for b in 1..7u64 {
                let sig = s
                    .aggregate(&[s.sign(&k(a), b"x"), s.sign(&k(b), b"y")])
                    .unwrap();
                let items = vec![
                    BatchItem {
                        signature: sig,
                        pairs: vec![(s.sk_to_pk(&k(a)), b"x".to_vec()), (s.sk_to_pk(&k(b)), b"y".to_vec())],
                    },
                    item(&s, a, b"z".to_vec()),
                ];
                let c = BatchCoefficients::generate(2, 128, [a as u8; 32], s.suite().order()).unwrap();
                assert!(v.naive_verify(&items).unwrap());
                assert!(v.batch_verify(&items, &c, true).unwrap());
            }
        }
    }

    #[test]
    fn pairing_counts() {
        let s = scheme();
        let v = BatchVerifier::new(s.suite().clone());
        let k = SecretKey::from_scalar(s.suite(), BigUint::from(2u8)).unwrap();
        let sig = s.aggregate(&[s.sign(&k, b"a"), s.sign(&k, b"b"), s.sign(&k, b"c")]).unwrap();
        let pk = s.sk_to_pk(&k);
        let items = vec![
            BatchItem {
                signature: sig,
                pairs: vec![(pk.clone(), b"a".to_vec()), (pk.clone(), b"b".to_vec()), (pk.clone(), b"c".to_vec())],
            },
            item(&s, 3, b"d".to_vec()),
            item(&s, 4, b"e".to_vec()),
        ];
        // n = 3, sum m_i = 5
        v.naive_verify(&items).unwrap();
        assert_eq!(v.pairings(), 8);
        v.reset_counter();
        let c = BatchCoefficients::generate(3, 64, [1; 32], s.suite().order()).unwrap();
        v.batch_verify(&items, &c, false).unwrap();
        assert_eq!(v.pairings(), 6);
    }

    #[test]
    fn coefficient_rules() {
        let order = BigUint::from(7u8);
        assert_eq!(
            BatchCoefficients::from_values(vec![BigUint::one(), BigUint::zero()], &order),
            Err(BatchError::InvalidCoefficient { index: 1 })
        );
        assert_eq!(
            BatchCoefficients::from_values(vec![BigUint::from(7u8)], &order),
            Err(BatchError::InvalidCoefficient { index: 0 })
        );
        let unit = BatchCoefficients::generate(5, 1, [9; 32], &order).unwrap();
        assert!(unit.values().iter().all(|v| v.is_one()));
        let a = BatchCoefficients::generate(50, 128, [3; 32], &order).unwrap();
        let b = BatchCoefficients::generate(50, 128, [3; 32], &order).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|v| !v.is_zero() && v < &order));
        assert_eq!(BatchCoefficients::generate(1, 0, [0; 32], &order), Err(BatchError::InvalidBitWidth));
    }

    #[test]
    fn shape_errors() {
        let s = scheme();
        let v = BatchVerifier::new(s.suite().clone());
        assert_eq!(v.naive_verify(&[]), Err(BatchError::EmptyBatch));
        let items = vec![item(&s, 1, b"a".to_vec())];
        assert_eq!(
            v.batch_verify(&items, &BatchCoefficients::unit(2), true),
            Err(BatchError::ArityMismatch { expected: 1, actual: 2 })
        );
        let empty = vec![BatchItem::<ToySuite> {
            signature: BlsSignature::from_point(ZnElem(0)),
            pairs: vec![],
        }];
        assert_eq!(v.naive_verify(&empty), Err(BatchError::EmptyItem(0)));
    }

    #[test]
    fn subgroup_deviation_torsion_requirements() {
        let s = BlsScheme::new(ToySuite::monte_carlo());
        let items = honest_pair(&s, [0; 32]);
        let mut rng = ChaCha20Rng::from_seed([0; 32]);
        assert_eq!(
            forge_subgroup_deviation(s.suite(), &items, 1, &mut rng).unwrap_err(),
            BatchError::TorsionUnavailable(1)
        );
        let tampered = forge_subgroup_deviation(s.suite(), &items, 5, &mut rng).unwrap();
        let v = BatchVerifier::new(s.suite().clone());
        assert!(!v.naive_verify(&tampered).unwrap());
        for c in [BatchCoefficients::unit(2), BatchCoefficients::generate(2, 64, [1; 32], s.suite().order()).unwrap()] {
            assert!(!v.batch_verify(&tampered, &c, true).unwrap());
        }
    }

    #[test]
    fn subgroup_cancellation_small_run() {
        let s = BlsScheme::new(ToySuite::monte_carlo());
        let off = subgroup_deviation_trials(&s, 5, 2000, 128, false, [7; 32]).unwrap();
        assert!(off.passes > 300 && off.passes < 500, "{off:?}");
        let on = subgroup_deviation_trials(&s, 5, 500, 128, true, [7; 32]).unwrap();
        assert_eq!(on.passes, 0);
    }

    #[test]
    fn document_round_trip() {
        let s = scheme();
        let items = vec![item(&s, 3, b"a".to_vec()), item(&s, 4, b"b".to_vec())];
        let doc = BatchDocument::from_items(s.suite(), &items, [2; 32], 64, true);
        let json = serde_json::to_string(&doc).unwrap();
        let back: BatchDocument = serde_json::from_str(&json).unwrap();
        let decoded = back.to_items(s.suite()).unwrap();
        assert_eq!(decoded.len(), 2);
        assert_eq!(decoded[0].signature, items[0].signature);
        assert_eq!(decoded[1].pairs[0].1, b"b".to_vec());
        assert_eq!(back.seed_bytes().unwrap(), [2; 32]);
    }
}
