use serde::{Deserialize, Serialize};
use x25519_dalek::StaticSecret;

use super::CompromiseSet;
use crate::discv5::{
    derive_session_keys, lenient_ephemeral, message_ad, open, parse_message_authdata, transcript_hash,
    HandshakeAuthdata, KkResponseAuthdata, NodeRecord, Packet, PacketFlag, SessionKeys, Variant,
};
use crate::link::{Direction, Phase, Transcript, TranscriptEntry};
use crate::noise::{dh, CipherState, SymmetricState, DHLEN, PROTOCOL_NAME, TAGLEN};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub index: usize,
    pub label: String,
    pub direction: Direction,
    pub phase: Phase,
    /// Carries ciphertext (as opposed to public key material only).
    pub encrypted: bool,
    pub decryptable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub protocol: String,
    pub entries: Vec<ProbeEntry>,
}

impl ProbeReport {
    /// (decrypted, encrypted) counts for one direction and phase.
    pub fn count(&self, direction: Direction, phase: Phase) -> (usize, usize) {
        let sel: Vec<_> = self
            .entries
            .iter()
            .filter(|e| e.encrypted && e.direction == direction && e.phase == phase)
            .collect();
        (sel.iter().filter(|e| e.decryptable).count(), sel.len())
    }

    pub fn decrypted_total(&self) -> (usize, usize) {
        let enc: Vec<_> = self.entries.iter().filter(|e| e.encrypted).collect();
        (enc.iter().filter(|e| e.decryptable).count(), enc.len())
    }
}

/// Replays the key schedule using only compromised keys plus wire data and
/// reports which recorded messages decrypt.
pub fn passive_decrypt_probe(transcript: &Transcript, compromise: &CompromiseSet) -> ProbeReport {
    let entries: Vec<ProbeEntry> = transcript
        .entries
        .iter()
        .enumerate()
        .map(|(index, e)| ProbeEntry {
            index,
            label: e.label.clone(),
            direction: e.direction,
            phase: e.phase,
            encrypted: false,
            decryptable: false,
        })
        .collect();
    let mut report = ProbeReport {
        protocol: transcript.protocol.clone(),
        entries,
    };
    let captured: Vec<Option<&TranscriptEntry>> = transcript
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (i >= compromise.recorded_from && !e.injected).then_some(e))
        .collect();
    if transcript.protocol.starts_with("noise-xx") {
        probe_noise(&captured, compromise, &mut report);
    } else if transcript.protocol.starts_with("discv5-") {
        probe_discv5(transcript, &captured, compromise, &mut report);
    }
    report
}

fn key32(b: &[u8]) -> Option<[u8; 32]> {
    b.get(..32).and_then(|s| s.try_into().ok())
}

fn dh_either(
    secret_a: Option<[u8; 32]>,
    public_b: Option<[u8; 32]>,
    secret_b: Option<[u8; 32]>,
    public_a: Option<[u8; 32]>,
) -> Option<[u8; 32]> {
    if let (Some(s), Some(p)) = (secret_a, public_b) {
        return Some(dh(&StaticSecret::from(s), &p));
    }
    if let (Some(s), Some(p)) = (secret_b, public_a) {
        return Some(dh(&StaticSecret::from(s), &p));
    }
    None
}

fn probe_noise(captured: &[Option<&TranscriptEntry>], c: &CompromiseSet, report: &mut ProbeReport) {
    let hs: Vec<usize> = report
        .entries
        .iter()
        .filter(|e| e.phase == Phase::Handshake)
        .map(|e| e.index)
        .collect();
    for &i in hs.iter().skip(1).take(2) {
        report.entries[i].encrypted = true;
    }
    let transport: Vec<usize> = report
        .entries
        .iter()
        .filter(|e| e.phase == Phase::Transport)
        .map(|e| e.index)
        .collect();
    for &i in &transport {
        report.entries[i].encrypted = true;
    }
    if hs.len() < 3 {
        return;
    }
    let (Some(m1), Some(m2), Some(m3)) = (captured[hs[0]], captured[hs[1]], captured[hs[2]]) else {
        return;
    };
    let m1 = &m1.bytes;
    let m2 = &m2.bytes;
    let m3 = &m3.bytes;
    let mut ss = SymmetricState::initialize(PROTOCOL_NAME);
    ss.mix_hash(b"");
    let Some(ei) = key32(m1) else { return };
    ss.mix_hash(&ei);
    if ss.decrypt_and_hash(&m1[32..]).is_err() {
        return;
    }
    let Some(er) = key32(m2) else { return };
    ss.mix_hash(&er);
    let Some(ee) = dh_either(c.initiator_ephemeral, Some(er), c.responder_ephemeral, Some(ei)) else {
        return;
    };
    ss.mix_key(&ee);
    if m2.len() < 32 + DHLEN + TAGLEN {
        return;
    }
    let Ok(sr) = ss.decrypt_and_hash(&m2[32..32 + DHLEN + TAGLEN]) else { return };
    let sr = key32(&sr);
    let Some(es) = dh_either(c.initiator_ephemeral, sr, c.responder_static, Some(ei)) else {
        return;
    };
    ss.mix_key(&es);
    if ss.decrypt_and_hash(&m2[32 + DHLEN + TAGLEN..]).is_err() {
        return;
    }
    report.entries[hs[1]].decryptable = true;
    if m3.len() < DHLEN + TAGLEN {
        return;
    }
    let Ok(si) = ss.decrypt_and_hash(&m3[..DHLEN + TAGLEN]) else { return };
    let si = key32(&si);
    let Some(se) = dh_either(c.initiator_static, Some(er), c.responder_ephemeral, si) else {
        return;
    };
    ss.mix_key(&se);
    if ss.decrypt_and_hash(&m3[DHLEN + TAGLEN..]).is_err() {
        return;
    }
    report.entries[hs[2]].decryptable = true;
    let (mut c1, mut c2): (CipherState, CipherState) = ss.split(u64::MAX);
    for &i in &transport {
        let Some(e) = captured[i] else { continue };
        let cs = match e.direction {
            Direction::InitiatorToResponder => &mut c1,
            Direction::ResponderToInitiator => &mut c2,
        };
        if cs.decrypt_with_ad(&[], &e.bytes).is_ok() {
            report.entries[i].decryptable = true;
        }
    }
}

fn probe_discv5(
    transcript: &Transcript,
    captured: &[Option<&TranscriptEntry>],
    c: &CompromiseSet,
    report: &mut ProbeReport,
) {
    let variant = if transcript.protocol.starts_with("discv5-kk") {
        Variant::Kk
    } else {
        Variant::V5
    };
    let binding = transcript.protocol.ends_with("+transcript-binding");
    let hs: Vec<usize> = report
        .entries
        .iter()
        .filter(|e| e.phase == Phase::Handshake)
        .map(|e| e.index)
        .collect();
    for &i in hs.iter().skip(2) {
        report.entries[i].encrypted = true;
    }
    let transport: Vec<usize> = report
        .entries
        .iter()
        .filter(|e| e.phase == Phase::Transport)
        .map(|e| e.index)
        .collect();
    for &i in &transport {
        report.entries[i].encrypted = true;
    }
    if hs.len() < 3 {
        return;
    }
    let (Some(m1), Some(way), Some(m3)) = (captured[hs[0]], captured[hs[1]], captured[hs[2]]) else {
        return;
    };
    let Ok(dest) = NodeRecord::decode(&transcript.public.responder) else { return };
    let Ok(p3) = Packet::decode(&m3.bytes) else { return };
    let Ok(auth) = HandshakeAuthdata::decode(&p3.authdata) else { return };
    let Ok(e_a) = lenient_ephemeral(&auth.ephemeral_pubkey) else { return };
    let src_record = NodeRecord::decode(&auth.record)
        .or_else(|_| NodeRecord::decode(&transcript.public.initiator))
        .ok();
    let dest_id = dest.node_id();
    let src_id = auth.src_id;
    let cd = way.bytes.clone();
    let th = transcript_hash(&[&m1.bytes, &way.bytes, &p3.head()]);
    let th_opt = binding.then_some(th);
    let label = variant.label();

    let Some(d1) = dh_either(c.initiator_ephemeral, Some(dest.static_key), c.responder_static, Some(e_a)) else {
        return;
    };
    let (hs_keys, session): (SessionKeys, Option<SessionKeys>) = match variant {
        Variant::V5 => {
            let k = derive_session_keys(&[d1], &cd, label, &src_id, &dest_id, None);
            let s = derive_session_keys(&[d1], &cd, label, &src_id, &dest_id, th_opt.as_ref());
            (k, Some(s))
        }
        Variant::Kk => {
            let Some(d2) = dh_either(
                c.initiator_static,
                Some(dest.static_key),
                c.responder_static,
                src_record.map(|r| r.static_key),
            ) else {
                return;
            };
            let k = derive_session_keys(&[d1, d2], &cd, label, &src_id, &dest_id, None);
            let e_b = hs
                .get(3)
                .and_then(|&i| captured[i])
                .and_then(|e| Packet::decode(&e.bytes).ok())
                .and_then(|p| KkResponseAuthdata::decode(&p.authdata).ok())
                .and_then(|a| lenient_ephemeral(&a.ephemeral_pubkey).ok());
            let s = dh_either(c.initiator_ephemeral, e_b, c.responder_ephemeral, Some(e_a))
                .map(|d3| derive_session_keys(&[d1, d2, d3, d1], &cd, label, &src_id, &dest_id, th_opt.as_ref()));
            (k, s)
        }
    };
    if open(
        &hs_keys.initiator_key,
        &p3.header.nonce,
        &message_ad(PacketFlag::Handshake, &p3.header.nonce, &src_id),
        &p3.message,
    )
    .is_some()
    {
        report.entries[hs[2]].decryptable = true;
    }
    let Some(session) = session else { return };
    let try_open = |e: &TranscriptEntry| -> bool {
        let Ok(p) = Packet::decode(&e.bytes) else { return false };
        let sender = match p.header.flag {
            PacketFlag::Message => parse_message_authdata(&p.authdata).ok(),
            PacketFlag::KkResponse => KkResponseAuthdata::decode(&p.authdata).ok().map(|a| a.src_id),
            _ => None,
        };
        let Some(sender) = sender else { return false };
        let key = match e.direction {
            Direction::InitiatorToResponder => session.initiator_key,
            Direction::ResponderToInitiator => session.recipient_key,
        };
        open(&key, &p.header.nonce, &message_ad(p.header.flag, &p.header.nonce, &sender), &p.message).is_some()
    };
    for &i in hs.iter().skip(3).chain(transport.iter()) {
        if let Some(e) = captured[i] {
            report.entries[i].decryptable = try_open(e);
        }
    }
}
