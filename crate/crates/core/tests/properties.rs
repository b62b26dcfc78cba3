use beaconlab_core::batch::{BatchCoefficients, BatchItem, BatchVerifier};
use beaconlab_core::bls::{BlsScheme, BlsSignature, SecretKey};
use beaconlab_core::discv5::{Packet, PacketFlag};
use beaconlab_core::noise::CipherState;
use beaconlab_core::pairing::{PairingSuite, ToySuite};
use beaconlab_core::slashing::{is_slashable_attestation, AttestationRecord};
use num_bigint::BigUint;
use proptest::prelude::*;

fn toy() -> BlsScheme<ToySuite> {
    BlsScheme::new(ToySuite::monte_carlo())
}

fn key(s: &BlsScheme<ToySuite>, k: u64) -> SecretKey {
    SecretKey::from_scalar(s.suite(), BigUint::from(k)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sign_then_verify(k in 1u64..257, msg in proptest::collection::vec(any::<u8>(), 0..64)) {
        let s = toy();
        let sk = key(&s, k);
        let pk = s.sk_to_pk(&sk);
        let sig = s.sign(&sk, &msg);
        prop_assert!(s.verify(&pk, &msg, &sig).is_valid());
        let mut other = msg.clone();
        other.push(0);
        let h1 = s.hash_message(&msg);
        let h2 = s.hash_message(&other);
        prop_assert_eq!(s.verify(&pk, &other, &sig).is_valid(), h1 == h2);
    }

    #[test]
    fn signing_is_linear_in_the_key(a in 1u64..257, b in 1u64..257, msg in any::<[u8; 8]>()) {
        prop_assume!((a + b) % 257 != 0);
        let s = toy();
        let suite = s.suite();
        let sum = s.aggregate(&[s.sign(&key(&s, a), &msg), s.sign(&key(&s, b), &msg)]).unwrap();
        let direct = s.sign(&key(&s, (a + b) % 257), &msg);
        prop_assert_eq!(sum.point(), direct.point());
        prop_assert!(suite.g2_in_subgroup(sum.point()));
    }

    #[test]
    fn aggregate_verify_accepts_honest_sets(keys in proptest::collection::vec(1u64..257, 1..5)) {
        let s = toy();
        let sks: Vec<_> = keys.iter().map(|k| key(&s, *k)).collect();
        let msgs: Vec<Vec<u8>> = (0..sks.len()).map(|i| format!("m{i}").into_bytes()).collect();
        let pks: Vec<_> = sks.iter().map(|k| s.sk_to_pk(k)).collect();
        let sigs: Vec<_> = sks.iter().zip(&msgs).map(|(k, m)| s.sign(k, m)).collect();
        let agg = s.aggregate(&sigs).unwrap();
        let refs: Vec<&[u8]> = msgs.iter().map(Vec::as_slice).collect();
        prop_assert!(s.aggregate_verify(&pks, &refs, &agg).unwrap().is_valid());
    }

    #[test]
    fn honest_batches_pass_any_coefficients(n in 1usize..6, seed in any::<[u8; 32]>(), bits in 1u32..130) {
        let s = toy();
        let items: Vec<BatchItem<ToySuite>> = (0..n)
            .map(|i| {
                let sk = key(&s, 3 + i as u64);
                let m = format!("item {i}").into_bytes();
                BatchItem { signature: s.sign(&sk, &m), pairs: vec![(s.sk_to_pk(&sk), m)] }
            })
            .collect();
        let v = BatchVerifier::new(s.suite().clone());
        let coeffs = BatchCoefficients::generate(n, bits, seed, s.suite().order()).unwrap();
        prop_assert!(v.batch_verify(&items, &coeffs, true).unwrap());
    }

    #[test]
    fn torsion_signature_never_verifies_with_checks(k in 1u64..257, t in 1u64..5) {
        let s = toy();
        let suite = s.suite();
        let sk = key(&s, k);
        let torsion = suite.g2_mul(&suite.g2_torsion_point(5).unwrap(), &BigUint::from(t));
        let bad = BlsSignature::from_point(suite.g2_add(s.sign(&sk, b"m").point(), &torsion));
        prop_assert!(!s.verify(&s.sk_to_pk(&sk), b"m", &bad).is_valid());
    }

    #[test]
    fn slashable_is_symmetric(s1 in 0u64..40, t1 in 0u64..40, s2 in 0u64..40, t2 in 0u64..40, same in any::<bool>()) {
        let a = AttestationRecord { source_epoch: s1, target_epoch: t1, signing_root: [1; 32] };
        let b = AttestationRecord {
            source_epoch: s2,
            target_epoch: t2,
            signing_root: if same { [1; 32] } else { [2; 32] },
        };
        prop_assert_eq!(is_slashable_attestation(&a, &b).is_slashable(), is_slashable_attestation(&b, &a).is_slashable());
        prop_assert!(!is_slashable_attestation(&a, &a).is_slashable());
    }

    #[test]
    fn cipher_round_trip(k in any::<[u8; 32]>(), msgs in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..80), 1..8)) {
        let mut tx = CipherState::new(k);
        let mut rx = CipherState::new(k);
        for m in &msgs {
            let ct = tx.encrypt_with_ad(b"ad", m).unwrap();
            prop_assert_eq!(ct.len(), m.len() + 16);
            prop_assert_eq!(&rx.decrypt_with_ad(b"ad", &ct).unwrap(), m);
        }
    }

    #[test]
    fn cipher_rejects_any_bit_flip(k in any::<[u8; 32]>(), m in proptest::collection::vec(any::<u8>(), 1..40), bit in any::<prop::sample::Index>()) {
        let mut tx = CipherState::new(k);
        let mut rx = CipherState::new(k);
        let mut ct = tx.encrypt_with_ad(b"", &m).unwrap();
        let i = bit.index(ct.len() * 8);
        ct[i / 8] ^= 1 << (i % 8);
        prop_assert!(rx.decrypt_with_ad(b"", &ct).is_err());
    }

    #[test]
    fn discv5_decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = Packet::decode(&bytes);
    }

    #[test]
    fn discv5_message_packets_round_trip(nonce in any::<[u8; 12]>(), src in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 0..100)) {
        let p = Packet::new(PacketFlag::Message, nonce, src.to_vec(), msg).unwrap();
        let bytes = p.encode();
        prop_assert_eq!(Packet::decode(&bytes).unwrap(), p);
    }
}
