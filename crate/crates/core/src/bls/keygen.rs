use hkdf::Hkdf;
use num_bigint::BigUint;
use num_traits::Zero;
use sha2::{Digest, Sha256};

const KEYGEN_SALT: &[u8] = b"BLS-SIG-KEYGEN-SALT-";

/// Minimum IKM length accepted by [`derive_secret_scalar`].
pub const MIN_IKM_LEN: usize = 32;

/// Output length `L = ceil(3 * ceil(log2(r)) / 16)`.
pub(crate) fn okm_len(order: &BigUint) -> usize {
    let log2 = order.bits() as usize;
    (3 * log2).div_ceil(16)
}

/// HKDF-based key derivation with salt re-hashing until the result is
/// nonzero modulo `order`. Caller guarantees `ikm.len() >= MIN_IKM_LEN`.
pub(crate) fn derive_secret_scalar(ikm: &[u8], key_info: &[u8], order: &BigUint) -> BigUint {
    let l = okm_len(order);
    let mut salt = KEYGEN_SALT.to_vec();
    let mut ikm_padded = ikm.to_vec();
    ikm_padded.push(0);
    let mut info = key_info.to_vec();
    info.extend_from_slice(&(l as u16).to_be_bytes());
    loop {
        salt = Sha256::digest(&salt).to_vec();
        let hk = Hkdf::<Sha256>::new(Some(&salt), &ikm_padded);
        let mut okm = vec![0u8; l];
        hk.expand(&info, &mut okm)
            .expect("L is far below the HKDF output limit");
        let sk = BigUint::from_bytes_be(&okm) % order;
        if !sk.is_zero() {
            return sk;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_lengths() {
        assert_eq!(okm_len(&BigUint::from(7u8)), 1);
        assert_eq!(okm_len(&BigUint::from(257u16)), 2);
        let r = BigUint::parse_bytes(
            b"73eda753299d7d483339d80809a1d80553bda402fffe5bfeffffffff00000001",
            16,
        )
        .unwrap();
        assert_eq!(okm_len(&r), 48);
    }

    #[test]
    fn toy_order_retries_until_nonzero() {
        // With r = 2 roughly half of all salts produce zero; every output must be 1.
        let r = BigUint::from(2u8);
        for i in 0..64u8 {
            let ikm = [i; 32];
            assert_eq!(derive_secret_scalar(&ikm, b"", &r), BigUint::from(1u8));
        }
    }
}
