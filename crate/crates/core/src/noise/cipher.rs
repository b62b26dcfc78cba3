use std::collections::HashMap;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use sha2::{Digest, Sha256};

use super::NoiseError;

/// Default nonce cap: the value 2^64-1 itself is reserved.
pub const NONCE_CAP: u64 = u64::MAX;

/// ChaChaPoly nonce: 32 zero bits followed by the little-endian counter.
pub fn chachapoly_nonce(n: u64) -> [u8; 12] {
    let mut nonce = [0u8; 12];
    nonce[4..].copy_from_slice(&n.to_le_bytes());
    nonce
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sealed {
    pub nonce: [u8; 12],
    pub ciphertext: Vec<u8>,
}

fn seal_raw(k: &[u8; 32], nonce: &[u8; 12], ad: &[u8], pt: &[u8]) -> Vec<u8> {
    ChaCha20Poly1305::new(Key::from_slice(k))
        .encrypt(Nonce::from_slice(nonce), Payload { msg: pt, aad: ad })
        .expect("chacha20poly1305 encryption is infallible for in-range lengths")
}

fn open_raw(k: &[u8; 32], nonce: &[u8; 12], ad: &[u8], ct: &[u8]) -> Option<Vec<u8>> {
    ChaCha20Poly1305::new(Key::from_slice(k))
        .decrypt(Nonce::from_slice(nonce), Payload { msg: ct, aad: ad })
        .ok()
}

/// A key and a 64-bit counter nonce.
///
/// Usable while `n < cap`. Once `n` reaches the cap the state is poisoned and
/// every call fails with [`NoiseError::NonceExhausted`]. Without a key,
/// encryption and decryption are the identity (pre-`ee` handshake payloads).
#[derive(Clone)]
pub struct CipherState {
    k: Option<[u8; 32]>,
    n: u64,
    cap: u64,
}

impl std::fmt::Debug for CipherState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CipherState")
            .field("has_key", &self.k.is_some())
            .field("n", &self.n)
            .field("cap", &self.cap)
            .finish()
    }
}

impl Default for CipherState {
    fn default() -> Self {
        CipherState::empty()
    }
}

impl CipherState {
    pub fn empty() -> Self {
        CipherState {
            k: None,
            n: 0,
            cap: NONCE_CAP,
        }
    }

    pub fn new(k: [u8; 32]) -> Self {
        CipherState {
            k: Some(k),
            n: 0,
            cap: NONCE_CAP,
        }
    }

    /// Lowers the nonce cap so exhaustion can be exercised in tests.
    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub(crate) fn initialize_key(&mut self, k: [u8; 32]) {
        self.k = Some(k);
        self.n = 0;
    }

    pub fn has_key(&self) -> bool {
        self.k.is_some()
    }

    pub fn key(&self) -> Option<&[u8; 32]> {
        self.k.as_ref()
    }

    pub fn nonce(&self) -> u64 {
        self.n
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn is_poisoned(&self) -> bool {
        self.k.is_some() && self.n >= self.cap
    }

    /// Encrypts and reports the nonce that was used.
    pub fn seal(&mut self, ad: &[u8], plaintext: &[u8]) -> Result<Sealed, NoiseError> {
        let Some(k) = self.k else {
            return Ok(Sealed {
                nonce: [0; 12],
                ciphertext: plaintext.to_vec(),
            });
        };
        if self.n >= self.cap {
            return Err(NoiseError::NonceExhausted);
        }
        let nonce = chachapoly_nonce(self.n);
        let ciphertext = seal_raw(&k, &nonce, ad, plaintext);
        self.n += 1;
        Ok(Sealed { nonce, ciphertext })
    }

    pub fn encrypt_with_ad(&mut self, ad: &[u8], plaintext: &[u8]) -> Result<Vec<u8>, NoiseError> {
        self.seal(ad, plaintext).map(|s| s.ciphertext)
    }

    /// On authentication failure the nonce is not advanced.
    pub fn decrypt_with_ad(&mut self, ad: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>, NoiseError> {
        let Some(k) = self.k else {
            return Ok(ciphertext.to_vec());
        };
        if self.n >= self.cap {
            return Err(NoiseError::NonceExhausted);
        }
        let pt = open_raw(&k, &chachapoly_nonce(self.n), ad, ciphertext).ok_or(NoiseError::DecryptFailed)?;
        self.n += 1;
        Ok(pt)
    }
}

/// Deliberately broken reference: the counter is truncated to `width` bits
/// before it enters the nonce, so it silently wraps and reuses nonces.
#[derive(Clone)]
pub struct TruncatedCounterCipher {
    k: [u8; 32],
    counter: u64,
    width: u32,
}

impl TruncatedCounterCipher {
    /// `width` in 1..=32; 32 matches the historical bug, 8 is the desk-scale
    /// miniature.
    pub fn new(k: [u8; 32], width: u32) -> Self {
        assert!((1..=32).contains(&width), "counter width must be 1..=32");
        TruncatedCounterCipher { k, counter: 0, width }
    }

    pub fn key(&self) -> &[u8; 32] {
        &self.k
    }

    pub fn seal(&mut self, ad: &[u8], plaintext: &[u8]) -> Sealed {
        let effective = self.counter & ((1u64 << self.width) - 1);
        let nonce = chachapoly_nonce(effective);
        self.counter += 1;
        Sealed {
            nonce,
            ciphertext: seal_raw(&self.k, &nonce, ad, plaintext),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReuseIncident {
    pub nonce: [u8; 12],
    pub first_message: usize,
    pub second_message: usize,
    /// ct1 xor ct2 equals pt1 xor pt2 over the common prefix, i.e. the
    /// keystream cancelled out.
    pub keystream_confirmed: bool,
}

type Sighting = (usize, Vec<u8>, Vec<u8>);

/// Watches encryptions and fires when one key seals two distinct plaintexts
/// under the same nonce.
#[derive(Default)]
pub struct KeystreamReuseDetector {
    /// (key, nonce) -> (message index, ciphertext, plaintext)
    seen: HashMap<([u8; 32], [u8; 12]), Sighting>,
    observed: usize,
    incidents: Vec<ReuseIncident>,
}

impl KeystreamReuseDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, key: &[u8; 32], sealed: &Sealed, plaintext: &[u8]) -> Option<ReuseIncident> {
        let idx = self.observed;
        self.observed += 1;
        let fp: [u8; 32] = Sha256::digest(key).into();
        match self.seen.get(&(fp, sealed.nonce)) {
            Some((first, pt1, ct1)) if pt1.as_slice() != plaintext => {
                let len = pt1.len().min(plaintext.len());
                let keystream_confirmed =
                    (0..len).all(|i| ct1[i] ^ sealed.ciphertext[i] == pt1[i] ^ plaintext[i]);
                let incident = ReuseIncident {
                    nonce: sealed.nonce,
                    first_message: *first,
                    second_message: idx,
                    keystream_confirmed,
                };
                self.incidents.push(incident.clone());
                Some(incident)
            }
            Some(_) => None,
            None => {
                self.seen
                    .insert((fp, sealed.nonce), (idx, plaintext.to_vec(), sealed.ciphertext.clone()));
                None
            }
        }
    }

    pub fn fired(&self) -> bool {
        !self.incidents.is_empty()
    }

    pub fn incidents(&self) -> &[ReuseIncident] {
        &self.incidents
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonce_layout() {
        assert_eq!(chachapoly_nonce(1), [0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(chachapoly_nonce(0x0102), [0, 0, 0, 0, 2, 1, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn cap_255_allows_exactly_255() {
        let mut cs = CipherState::new([7; 32]).with_cap(255);
        for i in 0..255u64 {
            assert_eq!(cs.nonce(), i);
            cs.encrypt_with_ad(b"", b"x").unwrap();
        }
        assert!(cs.is_poisoned());
        assert_eq!(cs.encrypt_with_ad(b"", b"x"), Err(NoiseError::NonceExhausted));
        assert_eq!(cs.decrypt_with_ad(b"", &[0; 17]), Err(NoiseError::NonceExhausted));
    }

    #[test]
    fn default_cap_reserves_max() {
        let mut cs = CipherState::new([7; 32]);
        cs.n = u64::MAX - 1;
        cs.encrypt_with_ad(b"", b"last").unwrap();
        assert_eq!(cs.encrypt_with_ad(b"", b"x"), Err(NoiseError::NonceExhausted));
    }

    #[test]
    fn round_trip_and_failed_decrypt_keeps_nonce() {
        let mut tx = CipherState::new([3; 32]);
        let mut rx = CipherState::new([3; 32]);
        let c1 = tx.encrypt_with_ad(b"ad", b"hello").unwrap();
        let mut bad = c1.clone();
        bad[0] ^= 1;
        assert_eq!(rx.decrypt_with_ad(b"ad", &bad), Err(NoiseError::DecryptFailed));
        assert_eq!(rx.decrypt_with_ad(b"other", &c1), Err(NoiseError::DecryptFailed));
        assert_eq!(rx.nonce(), 0);
        assert_eq!(rx.decrypt_with_ad(b"ad", &c1).unwrap(), b"hello");
        assert_eq!(rx.nonce(), 1);
    }

    #[test]
    fn keyless_state_is_identity() {
        let mut cs = CipherState::empty();
        assert_eq!(cs.encrypt_with_ad(b"", b"abc").unwrap(), b"abc");
        assert_eq!(cs.nonce(), 0);
    }

    #[test]
    fn detector_fires_on_truncated_counter_wrap() {
        let mut bad = TruncatedCounterCipher::new([9; 32], 8);
        let mut det = KeystreamReuseDetector::new();
        let mut first = None;
        for i in 0..300u32 {
            let pt = format!("message number {i:05}");
            let s = bad.seal(b"", pt.as_bytes());
            if let Some(inc) = det.observe(&[9; 32], &s, pt.as_bytes()) {
                first.get_or_insert(inc);
            }
        }
        let inc = first.expect("wrap must reuse a nonce");
        assert_eq!(inc.first_message, 0);
        assert_eq!(inc.second_message, 256);
        assert!(inc.keystream_confirmed);
    }

    #[test]
    fn detector_silent_on_real_cipher() {
        let mut cs = CipherState::new([9; 32]);
        let mut det = KeystreamReuseDetector::new();
        for i in 0..600u32 {
            let pt = format!("message number {i:05}");
            let s = cs.seal(b"", pt.as_bytes()).unwrap();
            det.observe(&[9; 32], &s, pt.as_bytes());
        }
        assert!(!det.fired());
    }

    #[test]
    fn real_cipher_with_small_cap_stops_instead_of_wrapping() {
        let mut cs = CipherState::new([9; 32]).with_cap(256);
        let mut det = KeystreamReuseDetector::new();
        let mut exhausted_at = None;
        for i in 0..300u32 {
            let pt = format!("m{i}");
            match cs.seal(b"", pt.as_bytes()) {
                Ok(s) => {
                    det.observe(&[9; 32], &s, pt.as_bytes());
                }
                Err(e) => {
                    assert_eq!(e, NoiseError::NonceExhausted);
                    exhausted_at.get_or_insert(i);
                }
            }
        }
        assert_eq!(exhausted_at, Some(256));
        assert!(!det.fired());
    }
}
