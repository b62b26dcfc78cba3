//! Abstract bilinear pairing groups.
//!
//! Everything above this module is written against [`PairingSuite`]. Two
//! instantiations ship with the crate:
//!
//! * [`ToySuite`]: additive integers modulo a small composite `n = r * c`.
//!   Small enough to enumerate exhaustively, and the composite order gives
//!   genuine torsion elements outside the prime-order subgroup.
//! * [`Bls12Suite`]: an adapter over the `bls12_381` crate using the
//!   minimal-pubkey-size orientation (keys in G1, signatures in G2).
//!
//! Scalars are passed as [`BigUint`] so the same scheme code can multiply
//! out-of-subgroup points by integers larger than the subgroup order.

mod bls12;
mod toy;

use std::fmt::Debug;

use num_bigint::BigUint;
use thiserror::Error;

pub use bls12::{Bls12Suite, G2_COFACTOR_HEX, POP_DST, SIGNATURE_DST};
pub use toy::{ToySuite, ToySuiteParams, ZnElem, TOY_DST, TOY_POP_DST};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairingError {
    #[error("invalid point encoding")]
    InvalidPoint,
    #[error("no torsion point of order {0} outside the prime-order subgroup")]
    TorsionUnavailable(u64),
    #[error("invalid suite parameters: {0}")]
    InvalidParams(String),
}

/// A group element together with the outcome of its subgroup check.
///
/// Elements built by decoding or by [`PairingSuite::unchecked_g1`] start with
/// `subgroup_checked = false`; only a successful subgroup check flips it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element<T> {
    value: T,
    subgroup_checked: bool,
}

impl<T> Element<T> {
    pub fn unchecked(value: T) -> Self {
        Element {
            value,
            subgroup_checked: false,
        }
    }

    pub(crate) fn checked(value: T) -> Self {
        Element {
            value,
            subgroup_checked: true,
        }
    }

    pub fn value(&self) -> &T {
        &self.value
    }

    pub fn into_value(self) -> T {
        self.value
    }

    pub fn subgroup_checked(&self) -> bool {
        self.subgroup_checked
    }
}

pub type Group1Element<S> = Element<<S as PairingSuite>::G1>;
pub type Group2Element<S> = Element<<S as PairingSuite>::G2>;

/// A pairing-friendly group triple `e: G1 x G2 -> GT` of prime order `r`.
///
/// Group operations are written additively for G1 and G2. `gt_mul` is the
/// group law of GT whatever notation the backend uses.
pub trait PairingSuite: Clone + Debug + Send + Sync {
    type G1: Clone + Debug + PartialEq + Send + Sync;
    type G2: Clone + Debug + PartialEq + Send + Sync;
    type Gt: Clone + Debug + PartialEq + Send + Sync;

    fn name(&self) -> &'static str;

    /// The prime order `r` of the signing subgroups.
    fn order(&self) -> &BigUint;

    fn signature_dst(&self) -> &[u8];
    fn pop_dst(&self) -> &[u8];

    fn g1_generator(&self) -> Self::G1;
    fn g2_generator(&self) -> Self::G2;
    fn g1_identity(&self) -> Self::G1;
    fn g2_identity(&self) -> Self::G2;
    fn gt_identity(&self) -> Self::Gt;

    fn g1_add(&self, a: &Self::G1, b: &Self::G1) -> Self::G1;
    fn g1_neg(&self, a: &Self::G1) -> Self::G1;
    /// Integer multiple `k * a`. `k` is not reduced modulo `r`.
    fn g1_mul(&self, a: &Self::G1, k: &BigUint) -> Self::G1;

    fn g2_add(&self, a: &Self::G2, b: &Self::G2) -> Self::G2;
    fn g2_neg(&self, a: &Self::G2) -> Self::G2;
    /// Integer multiple `k * a`. `k` is not reduced modulo `r`.
    fn g2_mul(&self, a: &Self::G2, k: &BigUint) -> Self::G2;

    fn gt_mul(&self, a: &Self::Gt, b: &Self::Gt) -> Self::Gt;

    fn pair(&self, p: &Self::G1, q: &Self::G2) -> Self::Gt;

    /// Product of pairings. Backends may override with a shared final
    /// exponentiation; the result must equal the naive product.
    fn multi_pair(&self, terms: &[(Self::G1, Self::G2)]) -> Self::Gt {
        terms.iter().fold(self.gt_identity(), |acc, (p, q)| {
            self.gt_mul(&acc, &self.pair(p, q))
        })
    }

    /// Deterministic hash onto the order-`r` subgroup of G2.
    fn hash_to_g2(&self, message: &[u8], dst: &[u8]) -> Self::G2;

    fn g1_in_subgroup(&self, p: &Self::G1) -> bool;
    fn g2_in_subgroup(&self, q: &Self::G2) -> bool;

    fn g1_is_identity(&self, p: &Self::G1) -> bool {
        *p == self.g1_identity()
    }

    fn g2_is_identity(&self, q: &Self::G2) -> bool {
        *q == self.g2_identity()
    }

    fn g1_to_bytes(&self, p: &Self::G1) -> Vec<u8>;
    /// Decodes a G1 encoding without any subgroup check.
    fn g1_from_bytes(&self, bytes: &[u8]) -> Result<Self::G1, PairingError>;
    fn g2_to_bytes(&self, q: &Self::G2) -> Vec<u8>;
    /// Decodes a G2 encoding without any subgroup check.
    fn g2_from_bytes(&self, bytes: &[u8]) -> Result<Self::G2, PairingError>;

    /// A G2 point of exact prime order `order`, lying outside the order-`r`
    /// subgroup. Only exists when `order` divides the G2 cofactor.
    fn g2_torsion_point(&self, order: u64) -> Result<Self::G2, PairingError>;

    /// `r * elem == identity`; records the outcome on success.
    fn subgroup_check_g1(&self, elem: &mut Group1Element<Self>) -> bool {
        let ok = self.g1_in_subgroup(&elem.value);
        if ok {
            elem.subgroup_checked = true;
        }
        ok
    }

    fn subgroup_check_g2(&self, elem: &mut Group2Element<Self>) -> bool {
        let ok = self.g2_in_subgroup(&elem.value);
        if ok {
            elem.subgroup_checked = true;
        }
        ok
    }

    /// Decodes bytes into a G1 element that has deliberately not been
    /// subgroup-checked.
    fn unchecked_g1(&self, bytes: &[u8]) -> Result<Group1Element<Self>, PairingError> {
        self.g1_from_bytes(bytes).map(Element::unchecked)
    }

    fn unchecked_g2(&self, bytes: &[u8]) -> Result<Group2Element<Self>, PairingError> {
        self.g2_from_bytes(bytes).map(Element::unchecked)
    }

    fn g1_scalar_generator(&self, k: &BigUint) -> Self::G1 {
        self.g1_mul(&self.g1_generator(), k)
    }
}

/// Double-and-add over the big-endian bits of `k`, using only the group law.
///
/// Backends use this for scalars at or above `r`, where reducing modulo `r`
/// would be wrong for points carrying a torsion component.
pub(crate) fn double_and_add<T: Clone>(
    base: &T,
    k: &BigUint,
    identity: T,
    add: impl Fn(&T, &T) -> T,
) -> T {
    let mut acc = identity;
    for i in (0..k.bits()).rev() {
        acc = add(&acc, &acc);
        if k.bit(i) {
            acc = add(&acc, base);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_and_add_matches_integer_product() {
        let n = 1_000_003u64;
        let add = |a: &u64, b: &u64| (a + b) % n;
        for k in [0u64, 1, 2, 3, 255, 256, 1 << 20, 999_999] {
            let got = double_and_add(&17u64, &BigUint::from(k), 0, add);
            assert_eq!(got, (17 * k) % n);
        }
    }
}
