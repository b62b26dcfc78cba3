//! discv5 v5.1-style handshake and a KK-style variant that adds an
//! ephemeral-ephemeral exchange, on an unmasked wire format.
//!
//! Nodes carry an Ed25519 identity key for the id-signature and an X25519
//! static key for Diffie-Hellman. The node record is `identity_pubkey ||
//! static_pubkey` and the node id is SHA-256 of the record.
//!
//! Session keys: HKDF-SHA256 with salt = challenge-data (the WHOAREYOU
//! header and authdata), IKM = the DH outputs concatenated in protocol order,
//! info = label || src-id || dest-id, optionally followed by the transcript
//! hash. The 32-byte output is initiator-key || recipient-key.

mod packet;
mod session;
mod tamper;

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes128Gcm, Key, Nonce};
use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};
use hkdf::Hkdf;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::noise::{dh, public_of};

pub use packet::{
    message_authdata, parse_message_authdata, Challenge, HandshakeAuthdata, KkResponseAuthdata, Packet, PacketFlag,
    PacketHeader, ID_NONCE_LEN, NODE_ID_LEN, NONCE_LEN, PROTOCOL_ID, STATIC_HEADER_LEN, VERSION,
};
pub use session::{
    run_handshake, run_handshake_kk, run_handshake_v5, run_recorded, Discv5Config, Discv5Peer, Discv5Run,
};
pub use tamper::{pad_ephemeral_key, size_field_tampering};

pub const V5_LABEL: &[u8] = b"discv5 v5 key agreement";
pub const KK_LABEL: &[u8] = b"discv5 kk key agreement";
pub const ID_PROOF_PREFIX: &[u8] = b"discovery v5 identity proof";
pub const RECORD_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    V5,
    Kk,
}

impl Variant {
    pub fn label(self) -> &'static [u8] {
        match self {
            Variant::V5 => V5_LABEL,
            Variant::Kk => KK_LABEL,
        }
    }

    pub fn protocol_name(self, binding: bool) -> String {
        let base = match self {
            Variant::V5 => "discv5-v5",
            Variant::Kk => "discv5-kk",
        };
        if binding {
            format!("{base}+transcript-binding")
        } else {
            base.to_string()
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "v5" => Ok(Variant::V5),
            "kk" => Ok(Variant::Kk),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Signature,
    Decryption,
    Transcript,
    /// The signature is bound to a challenge this node issued earlier.
    StaleChallenge,
    NoChallenge,
    UnknownNode,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Discv5Error {
    #[error("parse error: {0}")]
    Parse(&'static str),
    #[error("handshake rejected ({0:?})")]
    HandshakeRejected(RejectReason),
    #[error("unexpected packet: {0}")]
    Unexpected(&'static str),
    #[error("handshake did not complete")]
    Incomplete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeRecord {
    pub identity_key: [u8; 32],
    pub static_key: [u8; 32],
}

impl NodeRecord {
    pub fn encode(&self) -> [u8; RECORD_LEN] {
        let mut out = [0u8; RECORD_LEN];
        out[..32].copy_from_slice(&self.identity_key);
        out[32..].copy_from_slice(&self.static_key);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Discv5Error> {
        if bytes.len() != RECORD_LEN {
            return Err(Discv5Error::Parse("record length"));
        }
        Ok(NodeRecord {
            identity_key: bytes[..32].try_into().expect("32 bytes"),
            static_key: bytes[32..].try_into().expect("32 bytes"),
        })
    }

    pub fn node_id(&self) -> [u8; 32] {
        Sha256::digest(self.encode()).into()
    }
}

#[derive(Clone, Debug)]
pub struct NodeIdentity {
    pub signing: SigningKey,
    pub static_secret: [u8; 32],
}

impl NodeIdentity {
    pub fn from_seed_bytes(signing: [u8; 32], static_secret: [u8; 32]) -> Self {
        NodeIdentity {
            signing: SigningKey::from_bytes(&signing),
            static_secret,
        }
    }

    pub fn record(&self) -> NodeRecord {
        NodeRecord {
            identity_key: self.signing.verifying_key().to_bytes(),
            static_key: public_of(&self.static_secret),
        }
    }

    pub fn node_id(&self) -> [u8; 32] {
        self.record().node_id()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionKeys {
    pub initiator_key: [u8; 16],
    pub recipient_key: [u8; 16],
}

/// HKDF-SHA256 over the concatenated DH outputs.
pub fn derive_session_keys(
    dh_outputs: &[[u8; 32]],
    challenge_data: &[u8],
    label: &[u8],
    src_id: &[u8; 32],
    dest_id: &[u8; 32],
    transcript_hash: Option<&[u8; 32]>,
) -> SessionKeys {
    assert!(!dh_outputs.is_empty(), "at least one DH output");
    let ikm: Vec<u8> = dh_outputs.concat();
    let mut info = label.to_vec();
    info.extend_from_slice(src_id);
    info.extend_from_slice(dest_id);
    if let Some(th) = transcript_hash {
        info.extend_from_slice(th);
    }
    let mut okm = [0u8; 32];
    Hkdf::<Sha256>::new(Some(challenge_data), &ikm)
        .expand(&info, &mut okm)
        .expect("32 bytes is a valid HKDF-SHA256 length");
    SessionKeys {
        initiator_key: okm[..16].try_into().expect("16 bytes"),
        recipient_key: okm[16..].try_into().expect("16 bytes"),
    }
}

pub fn transcript_hash(messages: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for m in messages {
        h.update(m);
    }
    h.finalize().into()
}

pub fn id_signature_input(challenge_data: &[u8], ephemeral_pubkey: &[u8], dest_id: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(ID_PROOF_PREFIX);
    h.update(challenge_data);
    h.update(ephemeral_pubkey);
    h.update(dest_id);
    h.finalize().into()
}

pub fn sign_id(key: &SigningKey, challenge_data: &[u8], ephemeral_pubkey: &[u8], dest_id: &[u8; 32]) -> [u8; 64] {
    key.sign(&id_signature_input(challenge_data, ephemeral_pubkey, dest_id)).to_bytes()
}

pub fn verify_id(
    identity_key: &[u8; 32],
    sig: &[u8],
    challenge_data: &[u8],
    ephemeral_pubkey: &[u8],
    dest_id: &[u8; 32],
) -> bool {
    let (Ok(vk), Ok(sig)) = (VerifyingKey::from_bytes(identity_key), <[u8; 64]>::try_from(sig)) else {
        return false;
    };
    vk.verify_strict(
        &id_signature_input(challenge_data, ephemeral_pubkey, dest_id),
        &Signature::from_bytes(&sig),
    )
    .is_ok()
}

/// Associated data for sealed messages: flag, nonce and source id. The size
/// fields of the authdata are not covered.
pub fn message_ad(flag: PacketFlag, nonce: &[u8; 12], src_id: &[u8; 32]) -> Vec<u8> {
    let mut ad = vec![flag as u8];
    ad.extend_from_slice(nonce);
    ad.extend_from_slice(src_id);
    ad
}

pub fn seal(key: &[u8; 16], nonce: &[u8; 12], ad: &[u8], pt: &[u8]) -> Vec<u8> {
    Aes128Gcm::new(Key::<Aes128Gcm>::from_slice(key))
        .encrypt(Nonce::from_slice(nonce), Payload { msg: pt, aad: ad })
        .expect("aes-gcm encryption is infallible for in-range lengths")
}

pub fn open(key: &[u8; 16], nonce: &[u8; 12], ad: &[u8], ct: &[u8]) -> Option<Vec<u8>> {
    Aes128Gcm::new(Key::<Aes128Gcm>::from_slice(key))
        .decrypt(Nonce::from_slice(nonce), Payload { msg: ct, aad: ad })
        .ok()
}

/// Interprets the first 32 bytes of the ephemeral-key field as the X25519
/// key, ignoring any excess.
pub fn lenient_ephemeral(field: &[u8]) -> Result<[u8; 32], Discv5Error> {
    field
        .get(..32)
        .map(|b| b.try_into().expect("32 bytes"))
        .ok_or(Discv5Error::Parse("ephemeral key shorter than 32 bytes"))
}

/// Initiator-side key schedule inputs for the v5 handshake.
pub fn v5_keys(
    ephemeral_secret: &[u8; 32],
    dest_static: &[u8; 32],
    challenge_data: &[u8],
    src_id: &[u8; 32],
    dest_id: &[u8; 32],
    transcript: Option<&[u8; 32]>,
) -> SessionKeys {
    let e = x25519_dalek::StaticSecret::from(*ephemeral_secret);
    derive_session_keys(&[dh(&e, dest_static)], challenge_data, V5_LABEL, src_id, dest_id, transcript)
}

/// The two DH outputs that protect the KK handshake message.
pub fn kk_first_dh(ephemeral_secret: &[u8; 32], src_static_secret: &[u8; 32], dest_static: &[u8; 32]) -> [[u8; 32]; 2] {
    let e = x25519_dalek::StaticSecret::from(*ephemeral_secret);
    let s = x25519_dalek::StaticSecret::from(*src_static_secret);
    [dh(&e, dest_static), dh(&s, dest_static)]
}

/// All four initiator-side DH outputs of the KK exchange, in protocol order.
pub fn kk_all_dh(
    ephemeral_secret: &[u8; 32],
    src_static_secret: &[u8; 32],
    dest_static: &[u8; 32],
    dest_ephemeral: &[u8; 32],
) -> [[u8; 32]; 4] {
    let e = x25519_dalek::StaticSecret::from(*ephemeral_secret);
    let [d1, d2] = kk_first_dh(ephemeral_secret, src_static_secret, dest_static);
    [d1, d2, dh(&e, dest_ephemeral), dh(&e, dest_static)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use hmac::{Hmac, Mac};

    type HmacSha256 = Hmac<Sha256>;

    fn hmac(key: &[u8], parts: &[&[u8]]) -> Vec<u8> {
        let mut m = <HmacSha256 as Mac>::new_from_slice(key).unwrap();
        for p in parts {
            m.update(p);
        }
        m.finalize().into_bytes().to_vec()
    }

    #[test]
    fn single_dh_matches_straight_line_hkdf() {
        let dh1 = [0x11u8; 32];
        let challenge = b"challenge-data-bytes";
        let src = [0xaau8; 32];
        let dst = [0xbbu8; 32];
        let prk = hmac(challenge, &[&dh1]);
        let mut info = b"discv5 v5 key agreement".to_vec();
        info.extend_from_slice(&src);
        info.extend_from_slice(&dst);
        let t1 = hmac(&prk, &[&info, &[1u8]]);
        let keys = derive_session_keys(&[dh1], challenge, V5_LABEL, &src, &dst, None);
        assert_eq!(&keys.initiator_key[..], &t1[..16]);
        assert_eq!(&keys.recipient_key[..], &t1[16..32]);
    }

    #[test]
    fn deterministic_and_order_sensitive() {
        let a = [1u8; 32];
        let b = [2u8; 32];
        let k1 = derive_session_keys(&[a, b], b"c", KK_LABEL, &[3; 32], &[4; 32], None);
        let k2 = derive_session_keys(&[a, b], b"c", KK_LABEL, &[3; 32], &[4; 32], None);
        let k3 = derive_session_keys(&[b, a], b"c", KK_LABEL, &[3; 32], &[4; 32], None);
        assert_eq!(k1, k2);
        assert_ne!(k1, k3);
        let k4 = derive_session_keys(&[a, b], b"c", KK_LABEL, &[3; 32], &[4; 32], Some(&[0; 32]));
        assert_ne!(k1, k4);
        let k5 = derive_session_keys(&[a, b], b"c", V5_LABEL, &[3; 32], &[4; 32], None);
        assert_ne!(k1, k5);
    }

    #[test]
    fn kk_schedule_avalanche() {
        let e = [1u8; 32];
        let s = [2u8; 32];
        let ds = public_of(&[3u8; 32]);
        let de = public_of(&[4u8; 32]);
        let keys = |e: &[u8; 32], s: &[u8; 32], ds: &[u8; 32], de: &[u8; 32]| {
            derive_session_keys(&kk_all_dh(e, s, ds, de), b"cd", KK_LABEL, &[5; 32], &[6; 32], None)
        };
        let base = keys(&e, &s, &ds, &de);
        let alt = public_of(&[9u8; 32]);
        assert_ne!(base, keys(&[7; 32], &s, &ds, &de));
        assert_ne!(base, keys(&e, &[8; 32], &ds, &de));
        assert_ne!(base, keys(&e, &s, &alt, &de));
        assert_ne!(base, keys(&e, &s, &ds, &alt));
    }

    #[test]
    fn kk_fourth_dh_equals_first() {
        let [d1, _, _, d4] = kk_all_dh(&[1; 32], &[2; 32], &public_of(&[3; 32]), &public_of(&[4; 32]));
        assert_eq!(d1, d4);
    }

    #[test]
    fn id_signature_round_trip() {
        let id = NodeIdentity::from_seed_bytes([1; 32], [2; 32]);
        let pk = id.record().identity_key;
        let sig = sign_id(&id.signing, b"cd", &[3; 32], &[4; 32]);
        assert!(verify_id(&pk, &sig, b"cd", &[3; 32], &[4; 32]));
        assert!(!verify_id(&pk, &sig, b"cx", &[3; 32], &[4; 32]));
        assert!(!verify_id(&pk, &sig[..63], b"cd", &[3; 32], &[4; 32]));
    }

    #[test]
    fn record_and_node_id() {
        let id = NodeIdentity::from_seed_bytes([1; 32], [2; 32]);
        let r = id.record();
        assert_eq!(NodeRecord::decode(&r.encode()).unwrap(), r);
        assert_eq!(id.node_id(), <[u8; 32]>::from(Sha256::digest(r.encode())));
    }

    #[test]
    fn lenient_ephemeral_takes_prefix() {
        let mut f = vec![5u8; 32];
        f.push(0);
        assert_eq!(lenient_ephemeral(&f).unwrap(), [5; 32]);
        assert!(lenient_ephemeral(&[0; 31]).is_err());
    }
}
