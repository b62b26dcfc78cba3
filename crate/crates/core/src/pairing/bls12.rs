use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use bls12_381::hash_to_curve::{ExpandMsgXmd, HashToCurve};
use bls12_381::{
    multi_miller_loop, pairing, G1Affine, G1Projective, G2Affine, G2Prepared, G2Projective, Gt,
    Scalar,
};
use num_bigint::BigUint;
use num_traits::Zero;

use super::toy::is_prime;
use super::{double_and_add, PairingError, PairingSuite};

/// Ciphersuite tag for basic signatures under the proof-of-possession scheme.
pub const SIGNATURE_DST: &[u8] = b"BLS_SIG_BLS12381G2_XMD:SHA-256_SSWU_RO_POP_";
/// Domain separation for proofs of possession.
pub const POP_DST: &[u8] = b"BLS_POP_BLS12381G2_XMD:SHA-256_SSWU_RO_POP_";

const ORDER_HEX: &str = "73eda753299d7d483339d80809a1d80553bda402fffe5bfeffffffff00000001";

/// Cofactor `h2` of G2 on the twist E'(Fp2).
pub const G2_COFACTOR_HEX: &str = "5d543a95414e7f1091d50792876a202cd91de4547085abaa68a205b2e5a7ddfa628f1cb4d9e82ef21537e293a6691ae1616ec6e786f0c70cf1c38e31c7238e5";

/// Production adapter over the `bls12_381` crate.
///
/// Public keys live in G1 (48-byte compressed), signatures in G2 (96-byte
/// compressed). Decoding never subgroup-checks; that is left to the scheme.
#[derive(Clone, Debug)]
pub struct Bls12Suite {
    order: BigUint,
    g2_cofactor: BigUint,
    torsion_cache: Arc<Mutex<HashMap<u64, G2Projective>>>,
}

impl Default for Bls12Suite {
    fn default() -> Self {
        Self::new()
    }
}

impl Bls12Suite {
    pub fn new() -> Self {
        Bls12Suite {
            order: BigUint::parse_bytes(ORDER_HEX.as_bytes(), 16).expect("valid hex"),
            g2_cofactor: BigUint::parse_bytes(G2_COFACTOR_HEX.as_bytes(), 16)
                .expect("valid hex"),
            torsion_cache: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn g2_cofactor(&self) -> &BigUint {
        &self.g2_cofactor
    }

    /// Distinct primes below `bound` dividing the G2 cofactor, found by trial
    /// division.
    pub fn g2_small_torsion_orders(&self, bound: u64) -> Vec<u64> {
        let mut rest = self.g2_cofactor.clone();
        let mut found = Vec::new();
        let mut p = 2u64;
        while p < bound {
            let bp = BigUint::from(p);
            if (&rest % &bp).is_zero() {
                found.push(p);
                while (&rest % &bp).is_zero() {
                    rest /= &bp;
                }
            }
            p += if p == 2 { 1 } else { 2 };
        }
        found
    }

    fn scalar(&self, k: &BigUint) -> Option<Scalar> {
        if k >= &self.order {
            return None;
        }
        let mut le = [0u8; 32];
        let bytes = k.to_bytes_le();
        le[..bytes.len()].copy_from_slice(&bytes);
        Option::from(Scalar::from_bytes(&le))
    }

    fn derive_torsion_point(&self, order: u64) -> Result<G2Projective, PairingError> {
        if order < 2 || !is_prime(order) {
            return Err(PairingError::TorsionUnavailable(order));
        }
        let p = BigUint::from(order);
        if !(&self.g2_cofactor % &p).is_zero() {
            return Err(PairingError::TorsionUnavailable(order));
        }
        // |E'(Fp2)| = h2 * r. Clearing every prime except p lands in the
        // p-primary part, which need not be cyclic (13 and 23 appear squared),
        // so keep multiplying by p until one more step would hit the identity.
        let mut prime_free = &self.g2_cofactor * &self.order;
        while (&prime_free % &p).is_zero() {
            prime_free /= &p;
        }
        for x0 in 1u64..10_000 {
            let mut bytes = [0u8; 96];
            bytes[0] = 0x80;
            bytes[88..96].copy_from_slice(&x0.to_be_bytes());
            let Some(affine) = Option::<G2Affine>::from(G2Affine::from_compressed_unchecked(&bytes))
            else {
                continue;
            };
            let mut candidate = self.g2_mul(&G2Projective::from(affine), &prime_free);
            if bool::from(candidate.is_identity()) {
                continue;
            }
            loop {
                let next = double_and_add(&candidate, &p, G2Projective::identity(), |a, b| a + b);
                if bool::from(next.is_identity()) {
                    return Ok(candidate);
                }
                candidate = next;
            }
        }
        Err(PairingError::TorsionUnavailable(order))
    }
}

impl PairingSuite for Bls12Suite {
    type G1 = G1Projective;
    type G2 = G2Projective;
    type Gt = Gt;

    fn name(&self) -> &'static str {
        "bls12-381"
    }

    fn order(&self) -> &BigUint {
        &self.order
    }

    fn signature_dst(&self) -> &[u8] {
        SIGNATURE_DST
    }

    fn pop_dst(&self) -> &[u8] {
        POP_DST
    }

    fn g1_generator(&self) -> G1Projective {
        G1Projective::generator()
    }

    fn g2_generator(&self) -> G2Projective {
        G2Projective::generator()
    }

    fn g1_identity(&self) -> G1Projective {
        G1Projective::identity()
    }

    fn g2_identity(&self) -> G2Projective {
        G2Projective::identity()
    }

    fn gt_identity(&self) -> Gt {
        Gt::identity()
    }

    fn g1_add(&self, a: &G1Projective, b: &G1Projective) -> G1Projective {
        a + b
    }

    fn g1_neg(&self, a: &G1Projective) -> G1Projective {
        -a
    }

    fn g1_mul(&self, a: &G1Projective, k: &BigUint) -> G1Projective {
        match self.scalar(k) {
            Some(s) => a * s,
            None => double_and_add(a, k, G1Projective::identity(), |x, y| x + y),
        }
    }

    fn g2_add(&self, a: &G2Projective, b: &G2Projective) -> G2Projective {
        a + b
    }

    fn g2_neg(&self, a: &G2Projective) -> G2Projective {
        -a
    }

    fn g2_mul(&self, a: &G2Projective, k: &BigUint) -> G2Projective {
        // Scalar multiplication walks the canonical integer bits, so it is a
        // true integer multiple even for points outside the subgroup.
        match self.scalar(k) {
            Some(s) => a * s,
            None => double_and_add(a, k, G2Projective::identity(), |x, y| x + y),
        }
    }

    fn gt_mul(&self, a: &Gt, b: &Gt) -> Gt {
        // bls12_381 writes GT additively.
        a + b
    }

    fn pair(&self, p: &G1Projective, q: &G2Projective) -> Gt {
        pairing(&G1Affine::from(p), &G2Affine::from(q))
    }

    fn multi_pair(&self, terms: &[(G1Projective, G2Projective)]) -> Gt {
        let affine: Vec<(G1Affine, G2Prepared)> = terms
            .iter()
            .map(|(p, q)| (G1Affine::from(p), G2Prepared::from(G2Affine::from(q))))
            .collect();
        let refs: Vec<(&G1Affine, &G2Prepared)> = affine.iter().map(|(p, q)| (p, q)).collect();
        multi_miller_loop(&refs).final_exponentiation()
    }

    fn hash_to_g2(&self, message: &[u8], dst: &[u8]) -> G2Projective {
        <G2Projective as HashToCurve<ExpandMsgXmd<sha2_09::Sha256>>>::hash_to_curve(message, dst)
    }

    fn g1_in_subgroup(&self, p: &G1Projective) -> bool {
        bool::from(G1Affine::from(p).is_torsion_free())
    }

    fn g2_in_subgroup(&self, q: &G2Projective) -> bool {
        bool::from(G2Affine::from(q).is_torsion_free())
    }

    fn g1_is_identity(&self, p: &G1Projective) -> bool {
        bool::from(p.is_identity())
    }

    fn g2_is_identity(&self, q: &G2Projective) -> bool {
        bool::from(q.is_identity())
    }

    fn g1_to_bytes(&self, p: &G1Projective) -> Vec<u8> {
        G1Affine::from(p).to_compressed().to_vec()
    }

    fn g1_from_bytes(&self, bytes: &[u8]) -> Result<G1Projective, PairingError> {
        let raw: &[u8; 48] = bytes.try_into().map_err(|_| PairingError::InvalidPoint)?;
        Option::<G1Affine>::from(G1Affine::from_compressed_unchecked(raw))
            .map(G1Projective::from)
            .ok_or(PairingError::InvalidPoint)
    }

    fn g2_to_bytes(&self, q: &G2Projective) -> Vec<u8> {
        G2Affine::from(q).to_compressed().to_vec()
    }

    fn g2_from_bytes(&self, bytes: &[u8]) -> Result<G2Projective, PairingError> {
        let raw: &[u8; 96] = bytes.try_into().map_err(|_| PairingError::InvalidPoint)?;
        Option::<G2Affine>::from(G2Affine::from_compressed_unchecked(raw))
            .map(G2Projective::from)
            .ok_or(PairingError::InvalidPoint)
    }

    fn g2_torsion_point(&self, order: u64) -> Result<G2Projective, PairingError> {
        if let Some(p) = self.torsion_cache.lock().expect("cache lock").get(&order) {
            return Ok(*p);
        }
        let point = self.derive_torsion_point(order)?;
        self.torsion_cache
            .lock()
            .expect("cache lock")
            .insert(order, point);
        Ok(point)
    }
}

impl PartialEq for Bls12Suite {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Bls12Suite {}
