use hkdf::Hkdf;
use sha2::{Digest, Sha256};
use x25519_dalek::{PublicKey, StaticSecret};

use super::cipher::{CipherState, NONCE_CAP};
use super::{AbortReason, NoiseError};
use crate::link::Role;

pub const PROTOCOL_NAME: &[u8] = b"Noise_XX_25519_ChaChaPoly_SHA256";
pub const DHLEN: usize = 32;
pub const TAGLEN: usize = 16;

pub(crate) fn hkdf2(ck: &[u8; 32], ikm: &[u8]) -> ([u8; 32], [u8; 32]) {
    let mut okm = [0u8; 64];
    Hkdf::<Sha256>::new(Some(ck), ikm)
        .expand(&[], &mut okm)
        .expect("64 bytes is a valid HKDF-SHA256 length");
    let mut a = [0u8; 32];
    let mut b = [0u8; 32];
    a.copy_from_slice(&okm[..32]);
    b.copy_from_slice(&okm[32..]);
    (a, b)
}

pub(crate) fn dh(secret: &StaticSecret, public: &[u8; 32]) -> [u8; 32] {
    secret.diffie_hellman(&PublicKey::from(*public)).to_bytes()
}

pub(crate) fn public_of(secret: &[u8; 32]) -> [u8; 32] {
    PublicKey::from(&StaticSecret::from(*secret)).to_bytes()
}

/// Chaining key, handshake hash and the handshake CipherState.
#[derive(Clone, Debug)]
pub(crate) struct SymmetricState {
    pub cs: CipherState,
    pub ck: [u8; 32],
    pub h: [u8; 32],
}

impl SymmetricState {
    pub fn initialize(protocol_name: &[u8]) -> Self {
        let mut h = [0u8; 32];
        if protocol_name.len() <= 32 {
            h[..protocol_name.len()].copy_from_slice(protocol_name);
        } else {
            h = Sha256::digest(protocol_name).into();
        }
        SymmetricState {
            cs: CipherState::empty(),
            ck: h,
            h,
        }
    }

    pub fn mix_key(&mut self, ikm: &[u8]) {
        let (ck, k) = hkdf2(&self.ck, ikm);
        self.ck = ck;
        self.cs.initialize_key(k);
    }

    pub fn mix_hash(&mut self, data: &[u8]) {
        let mut hasher = Sha256::new();
        hasher.update(self.h);
        hasher.update(data);
        self.h = hasher.finalize().into();
    }

    pub fn encrypt_and_hash(&mut self, pt: &[u8]) -> Result<Vec<u8>, NoiseError> {
        let ct = self.cs.encrypt_with_ad(&self.h, pt)?;
        self.mix_hash(&ct);
        Ok(ct)
    }

    pub fn decrypt_and_hash(&mut self, ct: &[u8]) -> Result<Vec<u8>, NoiseError> {
        let pt = self
            .cs
            .decrypt_with_ad(&self.h, ct)
            .map_err(|_| NoiseError::HandshakeAborted(AbortReason::Crypto))?;
        self.mix_hash(ct);
        Ok(pt)
    }

    pub fn split(&self, cap: u64) -> (CipherState, CipherState) {
        let (k1, k2) = hkdf2(&self.ck, &[]);
        (CipherState::new(k1).with_cap(cap), CipherState::new(k2).with_cap(cap))
    }
}

/// XX handshake state: `-> e`, `<- e, ee, s, es`, `-> s, se`.
#[derive(Clone)]
pub struct HandshakeState {
    ss: SymmetricState,
    role: Role,
    s: StaticSecret,
    s_pub: [u8; 32],
    e: StaticSecret,
    e_pub: [u8; 32],
    rs: Option<[u8; 32]>,
    re: Option<[u8; 32]>,
    step: usize,
    nonce_cap: u64,
}

impl HandshakeState {
    /// `advertised_static` overrides the static public key written on the
    /// wire; honest peers pass `None`.
    pub fn new(
        role: Role,
        static_secret: [u8; 32],
        advertised_static: Option<[u8; 32]>,
        ephemeral_secret: [u8; 32],
        prologue: &[u8],
    ) -> Self {
        let mut ss = SymmetricState::initialize(PROTOCOL_NAME);
        ss.mix_hash(prologue);
        let s = StaticSecret::from(static_secret);
        let e = StaticSecret::from(ephemeral_secret);
        HandshakeState {
            ss,
            role,
            s_pub: advertised_static.unwrap_or_else(|| PublicKey::from(&s).to_bytes()),
            e_pub: PublicKey::from(&e).to_bytes(),
            s,
            e,
            rs: None,
            re: None,
            step: 0,
            nonce_cap: NONCE_CAP,
        }
    }

    pub fn with_nonce_cap(mut self, cap: u64) -> Self {
        self.nonce_cap = cap;
        self
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn static_public(&self) -> &[u8; 32] {
        &self.s_pub
    }

    pub fn ephemeral_public(&self) -> &[u8; 32] {
        &self.e_pub
    }

    pub fn remote_static(&self) -> Option<&[u8; 32]> {
        self.rs.as_ref()
    }

    pub fn remote_ephemeral(&self) -> Option<&[u8; 32]> {
        self.re.as_ref()
    }

    pub fn handshake_hash(&self) -> [u8; 32] {
        self.ss.h
    }

    pub fn is_finished(&self) -> bool {
        self.step == 3
    }

    fn writes(&self) -> bool {
        matches!(
            (self.role, self.step),
            (Role::Initiator, 0) | (Role::Responder, 1) | (Role::Initiator, 2)
        )
    }

    pub fn write_message(&mut self, payload: &[u8]) -> Result<Vec<u8>, NoiseError> {
        if self.step >= 3 || !self.writes() {
            return Err(NoiseError::ProtocolViolation("not this side's turn to write"));
        }
        let mut out = Vec::new();
        match self.step {
            0 => {
                out.extend_from_slice(&self.e_pub);
                self.ss.mix_hash(&self.e_pub);
            }
            1 => {
                out.extend_from_slice(&self.e_pub);
                self.ss.mix_hash(&self.e_pub);
                let re = self.re.expect("read before write");
                self.ss.mix_key(&dh(&self.e, &re));
                let s_pub = self.s_pub;
                out.extend(self.ss.encrypt_and_hash(&s_pub)?);
                self.ss.mix_key(&dh(&self.s, &re));
            }
            _ => {
                let s_pub = self.s_pub;
                out.extend(self.ss.encrypt_and_hash(&s_pub)?);
                let re = self.re.expect("read before write");
                self.ss.mix_key(&dh(&self.s, &re));
            }
        }
        out.extend(self.ss.encrypt_and_hash(payload)?);
        self.step += 1;
        Ok(out)
    }

    pub fn read_message(&mut self, message: &[u8]) -> Result<Vec<u8>, NoiseError> {
        if self.step >= 3 || self.writes() {
            return Err(NoiseError::ProtocolViolation("not this side's turn to read"));
        }
        let crypto = NoiseError::HandshakeAborted(AbortReason::Crypto);
        let mut rest = message;
        match self.step {
            0 => {
                let re = take32(&mut rest).ok_or(crypto.clone())?;
                self.re = Some(re);
                self.ss.mix_hash(&re);
            }
            1 => {
                let re = take32(&mut rest).ok_or(crypto.clone())?;
                self.re = Some(re);
                self.ss.mix_hash(&re);
                self.ss.mix_key(&dh(&self.e, &re));
                if rest.len() < DHLEN + TAGLEN {
                    return Err(crypto);
                }
                let rs = self.ss.decrypt_and_hash(&rest[..DHLEN + TAGLEN])?;
                rest = &rest[DHLEN + TAGLEN..];
                let rs: [u8; 32] = rs.try_into().map_err(|_| crypto.clone())?;
                self.rs = Some(rs);
                self.ss.mix_key(&dh(&self.e, &rs));
            }
            _ => {
                if rest.len() < DHLEN + TAGLEN {
                    return Err(crypto);
                }
                let rs = self.ss.decrypt_and_hash(&rest[..DHLEN + TAGLEN])?;
                rest = &rest[DHLEN + TAGLEN..];
                let rs: [u8; 32] = rs.try_into().map_err(|_| crypto.clone())?;
                self.rs = Some(rs);
                self.ss.mix_key(&dh(&self.e, &rs));
            }
        }
        let payload = self.ss.decrypt_and_hash(rest)?;
        self.step += 1;
        Ok(payload)
    }

    /// Transport states as (send, receive) for this side.
    pub fn split(&self) -> Result<(CipherState, CipherState), NoiseError> {
        if !self.is_finished() {
            return Err(NoiseError::ProtocolViolation("split before the handshake finished"));
        }
        let (c1, c2) = self.ss.split(self.nonce_cap);
        Ok(match self.role {
            Role::Initiator => (c1, c2),
            Role::Responder => (c2, c1),
        })
    }
}

fn take32(rest: &mut &[u8]) -> Option<[u8; 32]> {
    if rest.len() < 32 {
        return None;
    }
    let (head, tail) = rest.split_at(32);
    *rest = tail;
    head.try_into().ok()
}
