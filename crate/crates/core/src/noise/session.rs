use ed25519_dalek::SigningKey;
use rand::{CryptoRng, RngCore};

use super::cipher::{CipherState, NONCE_CAP};
use super::handshake::HandshakeState;
use super::{sign_static_key, verify_static_key, AbortReason, BindingMode, HandshakePayload, NoiseError};
use crate::link::{drive, Direction, Link, Outgoing, Peer, Role, Transcript};

pub const DEFAULT_TIMEOUT_TICKS: u64 = 16;

/// Where a peer's identity payload comes from.
#[derive(Clone, Debug)]
pub enum IdentityCredential {
    Key(SigningKey),
    /// A previously observed (public key, signature) pair presented verbatim.
    Replayed { public: [u8; 32], signature: [u8; 64] },
}

impl IdentityCredential {
    pub fn public(&self) -> [u8; 32] {
        match self {
            IdentityCredential::Key(k) => k.verifying_key().to_bytes(),
            IdentityCredential::Replayed { public, .. } => *public,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NoiseConfig {
    pub static_secret: [u8; 32],
    /// Static key written on the wire instead of the one derived from
    /// `static_secret`.
    pub advertised_static: Option<[u8; 32]>,
    pub ephemeral_secret: [u8; 32],
    pub identity: IdentityCredential,
    pub mode: BindingMode,
    pub extensions: Vec<u8>,
    pub nonce_cap: u64,
    /// Application messages sent once the handshake completes.
    pub transport_messages: Vec<Vec<u8>>,
}

impl NoiseConfig {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R, mode: BindingMode) -> Self {
        let mut s = [0u8; 32];
        let mut e = [0u8; 32];
        let mut id = [0u8; 32];
        rng.fill_bytes(&mut s);
        rng.fill_bytes(&mut e);
        rng.fill_bytes(&mut id);
        NoiseConfig {
            static_secret: s,
            advertised_static: None,
            ephemeral_secret: e,
            identity: IdentityCredential::Key(SigningKey::from_bytes(&id)),
            mode,
            extensions: Vec::new(),
            nonce_cap: NONCE_CAP,
            transport_messages: Vec::new(),
        }
    }

    pub fn static_public(&self) -> [u8; 32] {
        self.advertised_static
            .unwrap_or_else(|| super::public_of(&self.static_secret))
    }

    pub fn identity_public(&self) -> [u8; 32] {
        self.identity.public()
    }
}

pub struct NoisePeer {
    config: NoiseConfig,
    hs: HandshakeState,
    transport: Option<(CipherState, CipherState)>,
    remote_payload: Option<HandshakePayload>,
    received: Vec<Vec<u8>>,
    hash_log: Vec<[u8; 32]>,
    sent_nonces: Vec<u64>,
    received_nonces: Vec<u64>,
}

impl NoisePeer {
    pub fn new(role: Role, config: NoiseConfig) -> Self {
        let hs = HandshakeState::new(
            role,
            config.static_secret,
            config.advertised_static,
            config.ephemeral_secret,
            b"",
        )
        .with_nonce_cap(config.nonce_cap);
        NoisePeer {
            config,
            hs,
            transport: None,
            remote_payload: None,
            received: Vec::new(),
            hash_log: Vec::new(),
            sent_nonces: Vec::new(),
            received_nonces: Vec::new(),
        }
    }

    pub fn config(&self) -> &NoiseConfig {
        &self.config
    }

    pub fn handshake(&self) -> &HandshakeState {
        &self.hs
    }

    /// Handshake hash after each handshake message this peer processed.
    pub fn hash_log(&self) -> &[[u8; 32]] {
        &self.hash_log
    }

    pub fn remote_identity(&self) -> Option<[u8; 32]> {
        self.remote_payload.as_ref().map(|p| p.identity_key)
    }

    pub fn remote_payload(&self) -> Option<&HandshakePayload> {
        self.remote_payload.as_ref()
    }

    pub fn remote_static(&self) -> Option<[u8; 32]> {
        self.hs.remote_static().copied()
    }

    pub fn send_key(&self) -> Option<[u8; 32]> {
        self.transport.as_ref().and_then(|(s, _)| s.key().copied())
    }

    pub fn recv_key(&self) -> Option<[u8; 32]> {
        self.transport.as_ref().and_then(|(_, r)| r.key().copied())
    }

    pub fn received(&self) -> &[Vec<u8>] {
        &self.received
    }

    pub fn sent_nonces(&self) -> &[u64] {
        &self.sent_nonces
    }

    pub fn received_nonces(&self) -> &[u64] {
        &self.received_nonces
    }

    pub fn encrypt(&mut self, plaintext: &[u8]) -> Result<Vec<u8>, NoiseError> {
        let (send, _) = self
            .transport
            .as_mut()
            .ok_or(NoiseError::ProtocolViolation("transport before handshake"))?;
        let n = send.nonce();
        let ct = send.encrypt_with_ad(&[], plaintext)?;
        self.sent_nonces.push(n);
        Ok(ct)
    }

    pub fn decrypt(&mut self, ciphertext: &[u8]) -> Result<Vec<u8>, NoiseError> {
        let (_, recv) = self
            .transport
            .as_mut()
            .ok_or(NoiseError::ProtocolViolation("transport before handshake"))?;
        let n = recv.nonce();
        let pt = recv.decrypt_with_ad(&[], ciphertext)?;
        self.received_nonces.push(n);
        Ok(pt)
    }

    fn own_payload(&self) -> Result<Vec<u8>, NoiseError> {
        let (identity_key, identity_sig) = match &self.config.identity {
            IdentityCredential::Key(k) => (
                k.verifying_key().to_bytes(),
                sign_static_key(
                    k,
                    self.hs.static_public(),
                    self.config.mode,
                    self.hs.remote_ephemeral(),
                )?,
            ),
            IdentityCredential::Replayed { public, signature } => (*public, *signature),
        };
        Ok(HandshakePayload {
            identity_key,
            identity_sig,
            extensions: self.config.extensions.clone(),
        }
        .encode())
    }

    fn accept_remote_payload(&mut self, bytes: &[u8]) -> Result<(), NoiseError> {
        let payload = HandshakePayload::decode(bytes)
            .map_err(|_| NoiseError::HandshakeAborted(AbortReason::Identity))?;
        let rs = self
            .hs
            .remote_static()
            .copied()
            .ok_or(NoiseError::HandshakeAborted(AbortReason::Crypto))?;
        let ok = verify_static_key(
            &payload.identity_key,
            &rs,
            &payload.identity_sig,
            self.config.mode,
            Some(self.hs.ephemeral_public()),
        )?;
        if !ok {
            return Err(NoiseError::HandshakeAborted(AbortReason::Identity));
        }
        self.remote_payload = Some(payload);
        Ok(())
    }

    fn finish(&mut self) -> Result<Vec<Outgoing>, NoiseError> {
        self.transport = Some(self.hs.split()?);
        let msgs = self.config.transport_messages.clone();
        let mut out = Vec::with_capacity(msgs.len());
        for (i, m) in msgs.iter().enumerate() {
            out.push(Outgoing::transport(format!("transport {i}"), self.encrypt(m)?));
        }
        Ok(out)
    }
}

impl Peer for NoisePeer {
    type Error = NoiseError;

    fn role(&self) -> Role {
        self.hs.role()
    }

    fn start(&mut self) -> Result<Vec<Outgoing>, NoiseError> {
        if self.hs.role() == Role::Responder {
            return Ok(Vec::new());
        }
        let m1 = self.hs.write_message(&[])?;
        self.hash_log.push(self.hs.handshake_hash());
        Ok(vec![Outgoing::handshake("xx msg1 (e)", m1)])
    }

    fn receive(&mut self, bytes: &[u8]) -> Result<Vec<Outgoing>, NoiseError> {
        if self.transport.is_some() {
            let pt = self.decrypt(bytes)?;
            self.received.push(pt);
            return Ok(Vec::new());
        }
        match self.hs.role() {
            Role::Responder => {
                if self.hash_log.is_empty() {
                    let payload = self.hs.read_message(bytes)?;
                    self.hash_log.push(self.hs.handshake_hash());
                    if !payload.is_empty() {
                        return Err(NoiseError::ProtocolViolation("payload in message 1"));
                    }
                    let body = self.own_payload()?;
                    let m2 = self.hs.write_message(&body)?;
                    self.hash_log.push(self.hs.handshake_hash());
                    let mut out = Outgoing::handshake("xx msg2 (e, ee, s, es)", m2);
                    out.early_data = true;
                    Ok(vec![out])
                } else {
                    let payload = self.hs.read_message(bytes)?;
                    self.hash_log.push(self.hs.handshake_hash());
                    self.accept_remote_payload(&payload)?;
                    self.finish()
                }
            }
            Role::Initiator => {
                let payload = self.hs.read_message(bytes)?;
                self.hash_log.push(self.hs.handshake_hash());
                self.accept_remote_payload(&payload)?;
                let body = self.own_payload()?;
                let m3 = self.hs.write_message(&body)?;
                self.hash_log.push(self.hs.handshake_hash());
                let mut out = vec![Outgoing::handshake("xx msg3 (s, se)", m3)];
                out.extend(self.finish()?);
                Ok(out)
            }
        }
    }

    fn handshake_complete(&self) -> bool {
        self.transport.is_some()
    }
}

pub struct XxRun {
    pub initiator: NoisePeer,
    pub responder: NoisePeer,
    pub transcript: Transcript,
}

impl XxRun {
    pub fn message_lengths(&self) -> Vec<(Direction, usize)> {
        self.transcript
            .entries
            .iter()
            .map(|e| (e.direction, e.bytes.len()))
            .collect()
    }
}

/// Runs a full XX handshake (plus any configured transport messages) over
/// `link`. The first error raised by either side is returned; a stalled
/// exchange yields [`NoiseError::Incomplete`].
pub fn run_xx_handshake(
    initiator: NoiseConfig,
    responder: NoiseConfig,
    link: &mut dyn Link,
) -> Result<XxRun, NoiseError> {
    let (run, result) = run_xx_recorded(initiator, responder, link);
    result.map(|_| run)
}

/// Like [`run_xx_handshake`] but always hands back the peers and transcript.
pub fn run_xx_recorded(
    initiator: NoiseConfig,
    responder: NoiseConfig,
    link: &mut dyn Link,
) -> (XxRun, Result<(), NoiseError>) {
    let mut i = NoisePeer::new(Role::Initiator, initiator);
    let mut r = NoisePeer::new(Role::Responder, responder);
    let res = drive(&mut i, &mut r, link, "noise-xx", DEFAULT_TIMEOUT_TICKS);
    let mut transcript = res.transcript;
    transcript.public.initiator = i.config.identity_public().to_vec();
    transcript.public.responder = r.config.identity_public().to_vec();
    let outcome = match (res.responder, res.initiator) {
        (Err(e), _) | (_, Err(e)) => Err(e),
        _ if i.handshake_complete() && r.handshake_complete() => Ok(()),
        _ => Err(NoiseError::Incomplete),
    };
    (
        XxRun {
            initiator: i,
            responder: r,
            transcript,
        },
        outcome,
    )
}
