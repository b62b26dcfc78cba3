use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PairingError, PairingSuite};

pub const TOY_DST: &[u8] = b"TOY-BLS-SIG";
pub const TOY_POP_DST: &[u8] = b"TOY-BLS-SIG-POP_";

/// An element of Z_n. Used for G1, G2 and GT of the toy suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZnElem(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToySuiteParams {
    pub subgroup_order: u64,
    pub cofactor: u64,
}

impl ToySuiteParams {
    pub fn modulus(&self) -> u64 {
        self.subgroup_order * self.cofactor
    }
}

/// Composite-order oracle instantiation.
///
/// G1 = G2 = GT = (Z_n, +) with `n = r * c`, generator `c` of order `r`.
/// Every element splits uniquely (CRT) into a subgroup part (a multiple of
/// `c`) and a torsion part (a multiple of `r`). The pairing is
///
/// ```text
/// pair(a, b) = a_sub * b_sub + a_tor + b_tor   (mod n)
/// ```
///
/// which is exactly `a * b mod n` on the prime-order subgroup. Torsion
/// components are not annihilated: a bilinear map would necessarily send
/// them to the identity, whereas the Miller loop of a real curve does not,
/// and the small-subgroup batch attack depends on that difference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToySuite {
    params: ToySuiteParams,
    modulus: u64,
    order: BigUint,
    // CRT idempotents: e_sub = 1 mod r, 0 mod c; e_tor = 0 mod r, 1 mod c.
    e_sub: u64,
    e_tor: u64,
}

impl ToySuite {
    pub fn new(subgroup_order: u64, cofactor: u64) -> Result<Self, PairingError> {
        if subgroup_order < 2 || !is_prime(subgroup_order) {
            return Err(PairingError::InvalidParams(format!(
                "subgroup order {subgroup_order} is not prime"
            )));
        }
        if cofactor == 0 || cofactor.gcd(&subgroup_order) != 1 {
            return Err(PairingError::InvalidParams(format!(
                "cofactor {cofactor} must be positive and coprime to {subgroup_order}"
            )));
        }
        let modulus = subgroup_order
            .checked_mul(cofactor)
            .filter(|n| *n < (1 << 31))
            .ok_or_else(|| PairingError::InvalidParams("modulus too large".into()))?;
        let e_sub = crt(1, subgroup_order, 0, cofactor);
        let e_tor = crt(0, subgroup_order, 1 % cofactor, cofactor);
        Ok(ToySuite {
            params: ToySuiteParams {
                subgroup_order,
                cofactor,
            },
            modulus,
            order: BigUint::from(subgroup_order),
            e_sub,
            e_tor,
        })
    }

    /// r = 7, c = 5, n = 35: the suite used for hand-checked examples.
    pub fn worked_example() -> Self {
        ToySuite::new(7, 5).expect("valid toy parameters")
    }

    /// r = 257, c = 5: large enough for meaningful rates in Monte Carlo runs.
    pub fn monte_carlo() -> Self {
        ToySuite::new(257, 5).expect("valid toy parameters")
    }

    pub fn params(&self) -> ToySuiteParams {
        self.params
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn element(&self, x: u64) -> ZnElem {
        ZnElem(x % self.modulus)
    }

    /// Splits `x` into (subgroup part, torsion part).
    pub fn decompose(&self, x: ZnElem) -> (ZnElem, ZnElem) {
        let sub = mulmod(x.0, self.e_sub, self.modulus);
        let tor = mulmod(x.0, self.e_tor, self.modulus);
        (ZnElem(sub), ZnElem(tor))
    }

    /// Additive order of `x` in Z_n.
    pub fn element_order(&self, x: ZnElem) -> u64 {
        self.modulus / self.modulus.gcd(&x.0)
    }

    fn add(&self, a: ZnElem, b: ZnElem) -> ZnElem {
        ZnElem((a.0 + b.0) % self.modulus)
    }

    fn scalar(&self, k: &BigUint) -> u64 {
        (k % self.modulus)
            .to_u64()
            .expect("reduced below a u64 modulus")
    }
}

impl PairingSuite for ToySuite {
    type G1 = ZnElem;
    type G2 = ZnElem;
    type Gt = ZnElem;

    fn name(&self) -> &'static str {
        "toy"
    }

    fn order(&self) -> &BigUint {
        &self.order
    }

    fn signature_dst(&self) -> &[u8] {
        TOY_DST
    }

    fn pop_dst(&self) -> &[u8] {
        TOY_POP_DST
    }

    fn g1_generator(&self) -> ZnElem {
        ZnElem(self.params.cofactor % self.modulus)
    }

    fn g2_generator(&self) -> ZnElem {
        self.g1_generator()
    }

    fn g1_identity(&self) -> ZnElem {
        ZnElem(0)
    }

    fn g2_identity(&self) -> ZnElem {
        ZnElem(0)
    }

    fn gt_identity(&self) -> ZnElem {
        ZnElem(0)
    }

    fn g1_add(&self, a: &ZnElem, b: &ZnElem) -> ZnElem {
        self.add(*a, *b)
    }

    fn g1_neg(&self, a: &ZnElem) -> ZnElem {
        ZnElem((self.modulus - a.0) % self.modulus)
    }

    fn g1_mul(&self, a: &ZnElem, k: &BigUint) -> ZnElem {
        ZnElem(mulmod(a.0, self.scalar(k), self.modulus))
    }

    fn g2_add(&self, a: &ZnElem, b: &ZnElem) -> ZnElem {
        self.add(*a, *b)
    }

    fn g2_neg(&self, a: &ZnElem) -> ZnElem {
        self.g1_neg(a)
    }

    fn g2_mul(&self, a: &ZnElem, k: &BigUint) -> ZnElem {
        self.g1_mul(a, k)
    }

    fn gt_mul(&self, a: &ZnElem, b: &ZnElem) -> ZnElem {
        self.add(*a, *b)
    }

    fn pair(&self, p: &ZnElem, q: &ZnElem) -> ZnElem {
        let (p_sub, p_tor) = self.decompose(*p);
        let (q_sub, q_tor) = self.decompose(*q);
        let core = mulmod(p_sub.0, q_sub.0, self.modulus);
        self.add(self.add(ZnElem(core), p_tor), q_tor)
    }

    fn hash_to_g2(&self, message: &[u8], dst: &[u8]) -> ZnElem {
        let mut hasher = Sha256::new();
        hasher.update([dst.len() as u8]);
        hasher.update(dst);
        hasher.update(message);
        let digest = hasher.finalize();
        let k = BigUint::from_bytes_be(&digest) % &self.order;
        self.g2_mul(&self.g2_generator(), &k)
    }

    fn g1_in_subgroup(&self, p: &ZnElem) -> bool {
        mulmod(p.0, self.params.subgroup_order, self.modulus) == 0
    }

    fn g2_in_subgroup(&self, q: &ZnElem) -> bool {
        self.g1_in_subgroup(q)
    }

    fn g1_to_bytes(&self, p: &ZnElem) -> Vec<u8> {
        p.0.to_be_bytes().to_vec()
    }

    fn g1_from_bytes(&self, bytes: &[u8]) -> Result<ZnElem, PairingError> {
        let raw: [u8; 8] = bytes.try_into().map_err(|_| PairingError::InvalidPoint)?;
        let x = u64::from_be_bytes(raw);
        if x >= self.modulus {
            return Err(PairingError::InvalidPoint);
        }
        Ok(ZnElem(x))
    }

    fn g2_to_bytes(&self, q: &ZnElem) -> Vec<u8> {
        self.g1_to_bytes(q)
    }

    fn g2_from_bytes(&self, bytes: &[u8]) -> Result<ZnElem, PairingError> {
        self.g1_from_bytes(bytes)
    }

    fn g2_torsion_point(&self, order: u64) -> Result<ZnElem, PairingError> {
        if order < 2 || !is_prime(order) || !self.params.cofactor.is_multiple_of(order) {
            return Err(PairingError::TorsionUnavailable(order));
        }
        Ok(ZnElem(self.modulus / order))
    }
}

fn mulmod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn crt(a: u64, m: u64, b: u64, k: u64) -> u64 {
    // x = a mod m, x = b mod k, gcd(m, k) = 1; small moduli so brute force.
    let n = m * k;
    (0..n)
        .find(|x| x % m == a % m && x % k == b % k)
        .expect("coprime moduli always admit a CRT solution")
}

pub(crate) fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn worked_pairing_value() {
        let s = ToySuite::worked_example();
        assert_eq!(s.pair(&ZnElem(15), &ZnElem(10)), ZnElem(10));
    }

    #[test]
    fn identity_pairs_to_gt_identity() {
        let s = ToySuite::worked_example();
        for q in (0..35).step_by(5) {
            assert_eq!(s.pair(&ZnElem(0), &ZnElem(q)), s.gt_identity());
        }
    }

    #[test]
    fn generator_has_order_r_and_pairing_is_nondegenerate() {
        let s = ToySuite::worked_example();
        let g = s.g1_generator();
        assert_eq!(s.element_order(g), 7);
        assert_ne!(s.pair(&g, &s.g2_generator()), s.gt_identity());
    }

    #[test]
    fn exhaustive_bilinearity_on_subgroup() {
        let s = ToySuite::worked_example();
        let p = s.g1_generator();
        let q = s.g2_generator();
        let base = s.pair(&p, &q);
        for a in 0..7u64 {
            for b in 0..7u64 {
                let lhs = s.pair(&s.g1_mul(&p, &big(a)), &s.g2_mul(&q, &big(b)));
                let rhs = s.g1_mul(&base, &big(a * b));
                assert_eq!(lhs, rhs, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn element_orders_match_gcd_formula() {
        let s = ToySuite::worked_example();
        for x in 0..35u64 {
            // brute force: smallest k >= 1 with k*x = 0
            let brute = (1..=35u64).find(|k| (k * x) % 35 == 0).unwrap();
            assert_eq!(s.element_order(ZnElem(x)), brute);
            assert_eq!(brute, 35 / 35u64.gcd(&x));
        }
    }

    #[test]
    fn subgroup_check_examples() {
        let s = ToySuite::worked_example();
        assert!(s.g2_in_subgroup(&ZnElem(10)));
        assert!(!s.g2_in_subgroup(&ZnElem(7)));
        assert!(s.g2_in_subgroup(&ZnElem(0)));
        let mut e = s.unchecked_g2(&10u64.to_be_bytes()).unwrap();
        assert!(!e.subgroup_checked());
        assert!(s.subgroup_check_g2(&mut e));
        assert!(e.subgroup_checked());
        let mut t = s.unchecked_g2(&7u64.to_be_bytes()).unwrap();
        assert!(!s.subgroup_check_g2(&mut t));
        assert!(!t.subgroup_checked());
    }

    #[test]
    fn unchecked_zero_is_identity() {
        let s = ToySuite::worked_example();
        let e = s.unchecked_g1(&0u64.to_be_bytes()).unwrap();
        assert!(s.g1_is_identity(e.value()));
        assert!(!e.subgroup_checked());
    }

    #[test]
    fn torsion_element_seven_has_order_five() {
        let s = ToySuite::worked_example();
        let t = s.g2_torsion_point(5).unwrap();
        assert_eq!(t, ZnElem(7));
        assert_eq!(s.element_order(t), 5);
        assert_eq!(s.g2_torsion_point(1), Err(PairingError::TorsionUnavailable(1)));
        assert_eq!(s.g2_torsion_point(7), Err(PairingError::TorsionUnavailable(7)));
    }

    #[test]
    fn decomposition_is_crt() {
        let s = ToySuite::worked_example();
        for x in 0..35u64 {
            let (sub, tor) = s.decompose(ZnElem(x));
            assert_eq!((sub.0 + tor.0) % 35, x);
            assert_eq!(sub.0 % 5, 0);
            assert_eq!(tor.0 % 7, 0);
        }
    }

    #[test]
    fn decoding_rejects_out_of_range_and_bad_length() {
        let s = ToySuite::worked_example();
        assert_eq!(s.g1_from_bytes(&35u64.to_be_bytes()), Err(PairingError::InvalidPoint));
        assert_eq!(s.g1_from_bytes(&[0u8; 7]), Err(PairingError::InvalidPoint));
        for x in 0..35u64 {
            let bytes = s.g1_to_bytes(&ZnElem(x));
            assert_eq!(s.g1_from_bytes(&bytes), Ok(ZnElem(x)));
        }
    }

    #[test]
    fn hash_lands_in_subgroup_and_matches_definition() {
        let s = ToySuite::worked_example();
        for i in 0..50u32 {
            let m = i.to_be_bytes();
            let h = s.hash_to_g2(&m, TOY_DST);
            assert!(s.g2_in_subgroup(&h));
            let mut hasher = Sha256::new();
            hasher.update([TOY_DST.len() as u8]);
            hasher.update(TOY_DST);
            hasher.update(m);
            let k = BigUint::from_bytes_be(&hasher.finalize()) % 7u64;
            assert_eq!(h.0, (k.to_u64().unwrap() * 5) % 35);
        }
    }

    #[test]
    fn torsion_passes_through_the_pairing() {
        let s = ToySuite::worked_example();
        let p = s.g1_generator();
        // 10 + 7 carries torsion 7; pair(P, 17) = pair(P, 10) + 7.
        assert_eq!(s.pair(&p, &ZnElem(17)), ZnElem((s.pair(&p, &ZnElem(10)).0 + 7) % 35));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ToySuite::new(8, 5).is_err());
        assert!(ToySuite::new(7, 14).is_err());
        assert!(ToySuite::new(7, 0).is_err());
    }
}
