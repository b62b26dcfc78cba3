use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use x25519_dalek::StaticSecret;

use super::packet::{
    message_authdata, parse_message_authdata, Challenge, HandshakeAuthdata, KkResponseAuthdata, Packet, PacketFlag,
};
use super::{
    derive_session_keys, kk_all_dh, kk_first_dh, lenient_ephemeral, message_ad, open, seal, sign_id,
    transcript_hash, verify_id, Discv5Error, NodeIdentity, NodeRecord, RejectReason, SessionKeys, Variant,
};
use crate::link::{drive, Link, Outgoing, Peer, Role, Transcript};
use crate::noise::{dh, public_of};

pub const FINDNODE: &[u8] = b"FINDNODE distances=[256]";
pub const NODES: &[u8] = b"NODES total=1";
pub const DEFAULT_TIMEOUT_TICKS: u64 = 16;

#[derive(Clone, Debug)]
pub struct Discv5Config {
    pub identity: NodeIdentity,
    pub variant: Variant,
    pub transcript_binding: bool,
    /// Seeds nonces, id-nonces and ephemeral keys.
    pub rng_seed: [u8; 32],
    pub transport_messages: Vec<Vec<u8>>,
    /// Record presented on the wire in place of the real one.
    pub claimed_record: Option<NodeRecord>,
}

impl Discv5Config {
    pub fn generate<R: RngCore>(rng: &mut R, variant: Variant) -> Self {
        let mut sk = [0u8; 32];
        let mut st = [0u8; 32];
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut sk);
        rng.fill_bytes(&mut st);
        rng.fill_bytes(&mut seed);
        Discv5Config {
            identity: NodeIdentity::from_seed_bytes(sk, st),
            variant,
            transcript_binding: false,
            rng_seed: seed,
            transport_messages: Vec::new(),
            claimed_record: None,
        }
    }

    pub fn record(&self) -> NodeRecord {
        self.claimed_record.unwrap_or_else(|| self.identity.record())
    }
}

struct Live {
    trigger: Vec<u8>,
    whoareyou: Vec<u8>,
}

pub struct Discv5Peer {
    role: Role,
    config: Discv5Config,
    rng: ChaCha20Rng,
    remote: Option<NodeRecord>,
    // initiator
    request: Option<(Vec<u8>, [u8; 12])>,
    challenge: Option<Vec<u8>>,
    ephemeral: Option<[u8; 32]>,
    // responder
    live: Option<Live>,
    issued: Vec<Vec<u8>>,
    responder_ephemeral: Option<[u8; 32]>,
    // both
    th: Option<[u8; 32]>,
    handshake_keys: Option<SessionKeys>,
    session: Option<SessionKeys>,
    received: Vec<Vec<u8>>,
}

impl Discv5Peer {
    /// An initiator must be given the responder's record.
    pub fn new(role: Role, config: Discv5Config, remote: Option<NodeRecord>) -> Self {
        let rng = ChaCha20Rng::from_seed(config.rng_seed);
        Discv5Peer {
            role,
            config,
            rng,
            remote,
            request: None,
            challenge: None,
            ephemeral: None,
            live: None,
            issued: Vec::new(),
            responder_ephemeral: None,
            th: None,
            handshake_keys: None,
            session: None,
            received: Vec::new(),
        }
    }

    pub fn config(&self) -> &Discv5Config {
        &self.config
    }

    pub fn node_id(&self) -> [u8; 32] {
        self.config.record().node_id()
    }

    pub fn remote_record(&self) -> Option<NodeRecord> {
        self.remote
    }

    /// Keys protecting the handshake message itself.
    pub fn handshake_keys(&self) -> Option<SessionKeys> {
        self.handshake_keys
    }

    pub fn session_keys(&self) -> Option<SessionKeys> {
        self.session
    }

    pub fn transcript_hash(&self) -> Option<[u8; 32]> {
        self.th
    }

    pub fn ephemeral_secret(&self) -> Option<[u8; 32]> {
        match self.role {
            Role::Initiator => self.ephemeral,
            Role::Responder => self.responder_ephemeral,
        }
    }

    pub fn received(&self) -> &[Vec<u8>] {
        &self.received
    }

    fn nonce(&mut self) -> [u8; 12] {
        let mut n = [0u8; 12];
        self.rng.fill_bytes(&mut n);
        n
    }

    fn secret(&mut self) -> [u8; 32] {
        let mut s = [0u8; 32];
        self.rng.fill_bytes(&mut s);
        s
    }

    fn static_secret(&self) -> StaticSecret {
        StaticSecret::from(self.config.identity.static_secret)
    }

    fn send_transport(&mut self) -> Result<Vec<Outgoing>, Discv5Error> {
        let keys = self.session.ok_or(Discv5Error::Incomplete)?;
        let key = match self.role {
            Role::Initiator => keys.initiator_key,
            Role::Responder => keys.recipient_key,
        };
        let src = self.node_id();
        let msgs = self.config.transport_messages.clone();
        let mut out = Vec::new();
        for (i, m) in msgs.iter().enumerate() {
            let nonce = self.nonce();
            let ct = seal(&key, &nonce, &message_ad(PacketFlag::Message, &nonce, &src), m);
            let p = Packet::new(PacketFlag::Message, nonce, message_authdata(&src), ct)?;
            out.push(Outgoing::transport(format!("transport {i}"), p.encode()));
        }
        Ok(out)
    }

    fn receive_transport(&mut self, pkt: &Packet) -> Result<Vec<Outgoing>, Discv5Error> {
        let keys = self.session.ok_or(Discv5Error::Incomplete)?;
        if pkt.header.flag != PacketFlag::Message {
            return Err(Discv5Error::Unexpected("non-message packet on an established session"));
        }
        let src = parse_message_authdata(&pkt.authdata)?;
        let key = match self.role {
            Role::Initiator => keys.recipient_key,
            Role::Responder => keys.initiator_key,
        };
        let pt = open(&key, &pkt.header.nonce, &message_ad(PacketFlag::Message, &pkt.header.nonce, &src), &pkt.message)
            .ok_or(Discv5Error::HandshakeRejected(RejectReason::Decryption))?;
        self.received.push(pt);
        Ok(Vec::new())
    }

    fn initiator_on_challenge(&mut self, pkt: &Packet, raw: &[u8]) -> Result<Vec<Outgoing>, Discv5Error> {
        let (msg1, req_nonce) = self.request.clone().ok_or(Discv5Error::Unexpected("no request outstanding"))?;
        if pkt.header.nonce != req_nonce {
            return Ok(Vec::new());
        }
        let challenge = Challenge::decode(&pkt.authdata)?;
        let remote = self.remote.ok_or(Discv5Error::HandshakeRejected(RejectReason::UnknownNode))?;
        let dest_id = remote.node_id();
        let src_id = self.node_id();
        let cd = pkt.head();

        let e = self.secret();
        let e_pub = public_of(&e);
        let sig = sign_id(&self.config.identity.signing, &cd, &e_pub, &dest_id);
        let record = if challenge.enr_seq == 0 {
            self.config.record().encode().to_vec()
        } else {
            Vec::new()
        };
        let authdata = HandshakeAuthdata::new(src_id, sig.to_vec(), e_pub.to_vec(), record).encode();
        let nonce = self.nonce();
        let mut pkt3 = Packet::new(PacketFlag::Handshake, nonce, authdata, Vec::new())?;
        let th = transcript_hash(&[&msg1, raw, &pkt3.head()]);

        let dhs: Vec<[u8; 32]> = match self.config.variant {
            Variant::V5 => vec![dh(&StaticSecret::from(e), &remote.static_key)],
            Variant::Kk => kk_first_dh(&e, &self.config.identity.static_secret, &remote.static_key).to_vec(),
        };
        let label = self.config.variant.label();
        let k_hs = derive_session_keys(&dhs, &cd, label, &src_id, &dest_id, None);
        let mut pt = Vec::new();
        if self.config.transcript_binding {
            pt.extend_from_slice(&th);
        }
        pt.extend_from_slice(FINDNODE);
        pkt3.message = seal(
            &k_hs.initiator_key,
            &nonce,
            &message_ad(PacketFlag::Handshake, &nonce, &src_id),
            &pt,
        );
        if self.config.variant == Variant::V5 {
            self.session = Some(if self.config.transcript_binding {
                derive_session_keys(&dhs, &cd, label, &src_id, &dest_id, Some(&th))
            } else {
                k_hs
            });
        }
        self.handshake_keys = Some(k_hs);
        self.challenge = Some(cd);
        self.ephemeral = Some(e);
        self.th = Some(th);
        self.request = None;
        Ok(vec![Outgoing::handshake("discv5 handshake (FINDNODE)", pkt3.encode())])
    }

    fn initiator_on_response(&mut self, pkt: &Packet) -> Result<Vec<Outgoing>, Discv5Error> {
        let remote = self.remote.ok_or(Discv5Error::HandshakeRejected(RejectReason::UnknownNode))?;
        let dest_id = remote.node_id();
        let decrypt_err = Discv5Error::HandshakeRejected(RejectReason::Decryption);
        let pt = match self.config.variant {
            Variant::V5 => {
                if pkt.header.flag != PacketFlag::Message {
                    return Err(Discv5Error::Unexpected("expected NODES message"));
                }
                let keys = self.session.ok_or(Discv5Error::Incomplete)?;
                let src = parse_message_authdata(&pkt.authdata)?;
                open(&keys.recipient_key, &pkt.header.nonce, &message_ad(PacketFlag::Message, &pkt.header.nonce, &src), &pkt.message)
                    .ok_or(decrypt_err)?
            }
            Variant::Kk => {
                if pkt.header.flag != PacketFlag::KkResponse {
                    return Err(Discv5Error::Unexpected("expected KK response"));
                }
                let a = KkResponseAuthdata::decode(&pkt.authdata)?;
                let e_b = lenient_ephemeral(&a.ephemeral_pubkey)?;
                let e = self.ephemeral.ok_or(Discv5Error::Incomplete)?;
                let cd = self.challenge.clone().ok_or(Discv5Error::Incomplete)?;
                let dhs = kk_all_dh(&e, &self.config.identity.static_secret, &remote.static_key, &e_b);
                let th = self.th.filter(|_| self.config.transcript_binding);
                let keys = derive_session_keys(&dhs, &cd, super::KK_LABEL, &self.node_id(), &dest_id, th.as_ref());
                let pt = open(
                    &keys.recipient_key,
                    &pkt.header.nonce,
                    &message_ad(PacketFlag::KkResponse, &pkt.header.nonce, &a.src_id),
                    &pkt.message,
                )
                .ok_or(decrypt_err)?;
                self.session = Some(keys);
                pt
            }
        };
        self.received.push(pt);
        self.challenge = None;
        self.send_transport()
    }

    fn responder_on_trigger(&mut self, pkt: &Packet, raw: &[u8]) -> Result<Vec<Outgoing>, Discv5Error> {
        parse_message_authdata(&pkt.authdata)?;
        let mut id_nonce = [0u8; 16];
        self.rng.fill_bytes(&mut id_nonce);
        let challenge = Challenge { id_nonce, enr_seq: 0 };
        let way = Packet::new(PacketFlag::WhoAreYou, pkt.header.nonce, challenge.encode(), Vec::new())?;
        if let Some(old) = self.live.take() {
            self.issued.push(old.whoareyou);
        }
        let bytes = way.encode();
        self.live = Some(Live {
            trigger: raw.to_vec(),
            whoareyou: bytes.clone(),
        });
        Ok(vec![Outgoing::handshake("discv5 WHOAREYOU", bytes)])
    }

    fn responder_on_handshake(&mut self, pkt: &Packet) -> Result<Vec<Outgoing>, Discv5Error> {
        let live = self
            .live
            .as_ref()
            .ok_or(Discv5Error::HandshakeRejected(RejectReason::NoChallenge))?;
        let a = HandshakeAuthdata::decode(&pkt.authdata)?;
        let record = NodeRecord::decode(&a.record)
            .map_err(|_| Discv5Error::HandshakeRejected(RejectReason::UnknownNode))?;
        if record.node_id() != a.src_id {
            return Err(Discv5Error::HandshakeRejected(RejectReason::UnknownNode));
        }
        let e_a = lenient_ephemeral(&a.ephemeral_pubkey)?;
        let own_id = self.node_id();
        let cd = live.whoareyou.clone();
        if !verify_id(&record.identity_key, &a.id_signature, &cd, &e_a, &own_id) {
            let stale = self
                .issued
                .iter()
                .any(|old| verify_id(&record.identity_key, &a.id_signature, old, &e_a, &own_id));
            return Err(Discv5Error::HandshakeRejected(if stale {
                RejectReason::StaleChallenge
            } else {
                RejectReason::Signature
            }));
        }
        let s = self.static_secret();
        let dhs: Vec<[u8; 32]> = match self.config.variant {
            Variant::V5 => vec![dh(&s, &e_a)],
            Variant::Kk => vec![dh(&s, &e_a), dh(&s, &record.static_key)],
        };
        let label = self.config.variant.label();
        let k_hs = derive_session_keys(&dhs, &cd, label, &a.src_id, &own_id, None);
        let th = transcript_hash(&[&live.trigger, &live.whoareyou, &pkt.head()]);
        let pt = open(
            &k_hs.initiator_key,
            &pkt.header.nonce,
            &message_ad(PacketFlag::Handshake, &pkt.header.nonce, &a.src_id),
            &pkt.message,
        )
        .ok_or(Discv5Error::HandshakeRejected(RejectReason::Decryption))?;
        let findnode = if self.config.transcript_binding {
            if pt.len() < 32 || pt[..32] != th {
                return Err(Discv5Error::HandshakeRejected(RejectReason::Transcript));
            }
            pt[32..].to_vec()
        } else {
            pt
        };
        let th_opt = self.config.transcript_binding.then_some(th);
        let nonce = self.nonce();
        let reply = match self.config.variant {
            Variant::V5 => {
                let keys = derive_session_keys(&dhs, &cd, label, &a.src_id, &own_id, th_opt.as_ref());
                let ct = seal(&keys.recipient_key, &nonce, &message_ad(PacketFlag::Message, &nonce, &own_id), NODES);
                self.session = Some(keys);
                Packet::new(PacketFlag::Message, nonce, message_authdata(&own_id), ct)?
            }
            Variant::Kk => {
                let e_b = self.secret();
                let e_b_s = StaticSecret::from(e_b);
                let all = [dhs[0], dhs[1], dh(&e_b_s, &e_a), dh(&s, &e_a)];
                let keys = derive_session_keys(&all, &cd, label, &a.src_id, &own_id, th_opt.as_ref());
                let authdata = KkResponseAuthdata::new(own_id, public_of(&e_b).to_vec()).encode();
                let ct = seal(&keys.recipient_key, &nonce, &message_ad(PacketFlag::KkResponse, &nonce, &own_id), NODES);
                self.session = Some(keys);
                self.responder_ephemeral = Some(e_b);
                Packet::new(PacketFlag::KkResponse, nonce, authdata, ct)?
            }
        };
        self.received.push(findnode);
        self.handshake_keys = Some(k_hs);
        self.th = Some(th);
        self.remote = Some(record);
        if let Some(l) = self.live.take() {
            self.issued.push(l.whoareyou);
        }
        let label = match self.config.variant {
            Variant::V5 => "discv5 NODES",
            Variant::Kk => "discv5 kk response (NODES)",
        };
        let mut out = vec![Outgoing::handshake(label, reply.encode())];
        out.extend(self.send_transport()?);
        Ok(out)
    }
}

impl Peer for Discv5Peer {
    type Error = Discv5Error;

    fn role(&self) -> Role {
        self.role
    }

    fn start(&mut self) -> Result<Vec<Outgoing>, Discv5Error> {
        if self.role == Role::Responder {
            return Ok(Vec::new());
        }
        let nonce = self.nonce();
        let mut junk = vec![0u8; 16];
        self.rng.fill_bytes(&mut junk);
        let p = Packet::new(PacketFlag::Message, nonce, message_authdata(&self.node_id()), junk)?;
        let bytes = p.encode();
        self.request = Some((bytes.clone(), nonce));
        Ok(vec![Outgoing::handshake("discv5 random packet (FINDNODE trigger)", bytes)])
    }

    fn receive(&mut self, bytes: &[u8]) -> Result<Vec<Outgoing>, Discv5Error> {
        let pkt = Packet::decode(bytes)?;
        match self.role {
            Role::Initiator => {
                if pkt.header.flag == PacketFlag::WhoAreYou && self.request.is_none() {
                    return Ok(Vec::new());
                }
                if self.session.is_some() && self.challenge.is_none() {
                    self.receive_transport(&pkt)
                } else if self.request.is_some() {
                    if pkt.header.flag != PacketFlag::WhoAreYou {
                        return Err(Discv5Error::Unexpected("expected WHOAREYOU"));
                    }
                    self.initiator_on_challenge(&pkt, bytes)
                } else {
                    self.initiator_on_response(&pkt)
                }
            }
            Role::Responder => match pkt.header.flag {
                PacketFlag::Message if self.session.is_some() => self.receive_transport(&pkt),
                PacketFlag::Message => self.responder_on_trigger(&pkt, bytes),
                PacketFlag::Handshake => self.responder_on_handshake(&pkt),
                _ => Err(Discv5Error::Unexpected("responder got a WHOAREYOU or KK response")),
            },
        }
    }

    fn handshake_complete(&self) -> bool {
        self.session.is_some() && self.challenge.is_none() && self.request.is_none()
    }
}

pub struct Discv5Run {
    pub initiator: Discv5Peer,
    pub responder: Discv5Peer,
    pub transcript: Transcript,
}

impl Discv5Run {
    pub fn keys(&self) -> Option<SessionKeys> {
        self.initiator.session_keys()
    }
}

/// Runs a handshake with the variant and binding taken from the initiator's
/// configuration; the responder is switched to the same settings.
pub fn run_handshake(
    initiator: Discv5Config,
    mut responder: Discv5Config,
    link: &mut dyn Link,
) -> Result<Discv5Run, Discv5Error> {
    let (run, res) = run_recorded(initiator, {
        responder.claimed_record = None;
        responder
    }, link);
    res.map(|_| run)
}

pub fn run_recorded(
    initiator: Discv5Config,
    responder: Discv5Config,
    link: &mut dyn Link,
) -> (Discv5Run, Result<(), Discv5Error>) {
    let protocol = initiator.variant.protocol_name(initiator.transcript_binding);
    let resp_record = responder.record();
    let init_record = initiator.record();
    let mut i = Discv5Peer::new(Role::Initiator, initiator, Some(resp_record));
    let mut r = Discv5Peer::new(Role::Responder, responder, None);
    let res = drive(&mut i, &mut r, link, &protocol, DEFAULT_TIMEOUT_TICKS);
    let mut transcript = res.transcript;
    transcript.public.initiator = init_record.encode().to_vec();
    transcript.public.responder = resp_record.encode().to_vec();
    let outcome = match (res.responder, res.initiator) {
        (Err(e), _) | (_, Err(e)) => Err(e),
        _ if i.handshake_complete() && r.handshake_complete() => Ok(()),
        _ => Err(Discv5Error::Incomplete),
    };
    (
        Discv5Run {
            initiator: i,
            responder: r,
            transcript,
        },
        outcome,
    )
}

pub fn run_handshake_v5(
    mut initiator: Discv5Config,
    mut responder: Discv5Config,
    link: &mut dyn Link,
) -> Result<Discv5Run, Discv5Error> {
    initiator.variant = Variant::V5;
    responder.variant = Variant::V5;
    responder.transcript_binding = initiator.transcript_binding;
    run_handshake(initiator, responder, link)
}

pub fn run_handshake_kk(
    mut initiator: Discv5Config,
    mut responder: Discv5Config,
    link: &mut dyn Link,
) -> Result<Discv5Run, Discv5Error> {
    initiator.variant = Variant::Kk;
    responder.variant = Variant::Kk;
    responder.transcript_binding = initiator.transcript_binding;
    run_handshake(initiator, responder, link)
}
