//! Noise XX over Curve25519 with ChaChaPoly and SHA-256, carrying the
//! libp2p-style identity payload.
//!
//! The identity payload is `identity_pubkey (32) || identity_sig (64) ||
//! extensions`. Both leading fields are fixed width, so the extensions run to
//! the end of the decrypted payload. Messages are framed on the wire with a
//! 2-byte big-endian length.

mod attack;
mod cipher;
mod handshake;
mod session;

use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use attack::{replay_static_sig_attack, staged_replay, AttackOutcome, ReplayDemo, StolenTriple};
pub use cipher::{
    chachapoly_nonce, CipherState, KeystreamReuseDetector, ReuseIncident, Sealed, TruncatedCounterCipher,
    NONCE_CAP,
};
pub use handshake::{HandshakeState, DHLEN, PROTOCOL_NAME, TAGLEN};
pub use session::{run_xx_handshake, run_xx_recorded, IdentityCredential, NoiseConfig, NoisePeer, XxRun};

pub(crate) use handshake::{dh, public_of, SymmetricState};

pub const STATIC_KEY_PREFIX: &[u8] = b"noise-libp2p-static-key:";
pub const IDENTITY_PAYLOAD_LEN: usize = 96;
pub const MAX_FRAME: usize = 65_535;
pub const FRAME_OVERHEAD: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    Identity,
    Crypto,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NoiseError {
    #[error("nonce exhausted; cipher state is poisoned")]
    NonceExhausted,
    #[error("decryption failed")]
    DecryptFailed,
    #[error("handshake aborted ({0:?})")]
    HandshakeAborted(AbortReason),
    #[error("protocol violation: {0}")]
    ProtocolViolation(&'static str),
    #[error("configuration error: {0}")]
    ConfigError(&'static str),
    #[error("malformed identity payload ({0} bytes)")]
    MalformedPayload(usize),
    #[error("frame of {0} bytes exceeds the 65535-byte limit")]
    FrameTooLarge(usize),
    #[error("truncated frame")]
    TruncatedFrame,
    #[error("handshake did not complete")]
    Incomplete,
}

/// What the identity signature covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingMode {
    /// prefix || s_pub
    Legacy,
    /// prefix || re || s_pub, where re is the verifier's ephemeral key
    Hardened,
}

impl std::str::FromStr for BindingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "legacy" => Ok(BindingMode::Legacy),
            "hardened" => Ok(BindingMode::Hardened),
            other => Err(format!("unknown binding mode {other:?}")),
        }
    }
}

/// The byte string the identity key signs. `challenge` is the ephemeral
/// public key of the peer that will verify the signature.
pub fn static_key_message(
    s_pub: &[u8; 32],
    mode: BindingMode,
    challenge: Option<&[u8; 32]>,
) -> Result<Vec<u8>, NoiseError> {
    let mut msg = STATIC_KEY_PREFIX.to_vec();
    if mode == BindingMode::Hardened {
        let re = challenge.ok_or(NoiseError::ConfigError("hardened binding needs the peer ephemeral key"))?;
        msg.extend_from_slice(re);
    }
    msg.extend_from_slice(s_pub);
    Ok(msg)
}

pub fn sign_static_key(
    identity: &SigningKey,
    s_pub: &[u8; 32],
    mode: BindingMode,
    challenge: Option<&[u8; 32]>,
) -> Result<[u8; 64], NoiseError> {
    let msg = static_key_message(s_pub, mode, challenge)?;
    Ok(identity.sign(&msg).to_bytes())
}

pub fn verify_static_key(
    identity_pk: &[u8; 32],
    s_pub: &[u8; 32],
    sig: &[u8; 64],
    mode: BindingMode,
    challenge: Option<&[u8; 32]>,
) -> Result<bool, NoiseError> {
    let msg = static_key_message(s_pub, mode, challenge)?;
    let Ok(vk) = VerifyingKey::from_bytes(identity_pk) else {
        return Ok(false);
    };
    Ok(vk.verify_strict(&msg, &Signature::from_bytes(sig)).is_ok())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandshakePayload {
    pub identity_key: [u8; 32],
    pub identity_sig: [u8; 64],
    pub extensions: Vec<u8>,
}

impl HandshakePayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(IDENTITY_PAYLOAD_LEN + self.extensions.len());
        out.extend_from_slice(&self.identity_key);
        out.extend_from_slice(&self.identity_sig);
        out.extend_from_slice(&self.extensions);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, NoiseError> {
        if bytes.len() < IDENTITY_PAYLOAD_LEN {
            return Err(NoiseError::MalformedPayload(bytes.len()));
        }
        Ok(HandshakePayload {
            identity_key: bytes[..32].try_into().expect("32 bytes"),
            identity_sig: bytes[32..96].try_into().expect("64 bytes"),
            extensions: bytes[96..].to_vec(),
        })
    }
}

pub fn frame(message: &[u8]) -> Result<Vec<u8>, NoiseError> {
    let len = u16::try_from(message.len()).map_err(|_| NoiseError::FrameTooLarge(message.len()))?;
    let mut out = Vec::with_capacity(message.len() + FRAME_OVERHEAD);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(message);
    Ok(out)
}

/// Splits one frame off the front of `buf`, returning (message, rest).
pub fn deframe(buf: &[u8]) -> Result<(&[u8], &[u8]), NoiseError> {
    if buf.len() < FRAME_OVERHEAD {
        return Err(NoiseError::TruncatedFrame);
    }
    let len = u16::from_be_bytes([buf[0], buf[1]]) as usize;
    let body = &buf[FRAME_OVERHEAD..];
    if body.len() < len {
        return Err(NoiseError::TruncatedFrame);
    }
    Ok(body.split_at(len))
}
