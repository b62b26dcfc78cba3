use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{AdversaryScript, Protocol, SessionConfig, SimError, SimNetwork};
use crate::discv5::{Discv5Config, Discv5Peer, Variant};
use crate::link::{Direction, Outgoing, Peer, Phase, Role, Transcript, TranscriptEntry};
use crate::noise::{staged_replay, AttackOutcome, BindingMode, HandshakeState, NoiseConfig, NoisePeer, FRAME_OVERHEAD};

/// Responder payload length that makes a bare XX message 2 exactly 192 bytes.
pub const CONFIGURED_RESPONDER_PAYLOAD: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplification {
    pub initiator_bytes: usize,
    pub responder_bytes: usize,
    pub factor: f64,
}

/// Responder handshake bytes sent before the initiator's second packet,
/// divided by the initiator's first packet. `per_message_overhead` adds
/// framing bytes to every counted packet.
pub fn measure_amplification(transcript: &Transcript, per_message_overhead: usize) -> Result<Amplification, SimError> {
    let honest: Vec<&TranscriptEntry> = transcript.entries.iter().filter(|e| !e.injected).collect();
    let first = honest
        .iter()
        .position(|e| e.direction == Direction::InitiatorToResponder)
        .ok_or(SimError::Incomplete)?;
    let initiator_bytes = honest[first].bytes.len() + per_message_overhead;
    let mut responder_bytes = 0usize;
    let mut replies = 0usize;
    for e in &honest[first + 1..] {
        if e.direction == Direction::InitiatorToResponder {
            break;
        }
        if e.phase == Phase::Handshake {
            responder_bytes += e.bytes.len() + per_message_overhead;
            replies += 1;
        }
    }
    if replies == 0 {
        return Err(SimError::Incomplete);
    }
    Ok(Amplification {
        initiator_bytes,
        responder_bytes,
        factor: responder_bytes as f64 / initiator_bytes as f64,
    })
}

/// XX with empty payloads except for `responder_payload` zero bytes in
/// message 2, run directly on the handshake state machine.
pub fn bare_xx_transcript(seed: [u8; 32], responder_payload: usize) -> Transcript {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut k = [[0u8; 32]; 4];
    for x in k.iter_mut() {
        rng.fill_bytes(x);
    }
    let mut i = HandshakeState::new(Role::Initiator, k[0], None, k[1], b"");
    let mut r = HandshakeState::new(Role::Responder, k[2], None, k[3], b"");
    let m1 = i.write_message(&[]).expect("turn");
    r.read_message(&m1).expect("honest");
    let m2 = r.write_message(&vec![0u8; responder_payload]).expect("turn");
    i.read_message(&m2).expect("honest");
    let m3 = i.write_message(&[]).expect("turn");
    r.read_message(&m3).expect("honest");
    let mut t = Transcript::new("noise-xx-bare");
    for (dir, label, bytes, early) in [
        (Direction::InitiatorToResponder, "xx msg1 (e)", m1, false),
        (Direction::ResponderToInitiator, "xx msg2 (e, ee, s, es)", m2, responder_payload > 0),
        (Direction::InitiatorToResponder, "xx msg3 (s, se)", m3, false),
    ] {
        t.push(TranscriptEntry {
            direction: dir,
            label: label.into(),
            phase: Phase::Handshake,
            early_data: early,
            injected: false,
            bytes,
        });
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseAmplification {
    /// Bare XX with the responder payload padded to 96 bytes.
    pub configured: Amplification,
    /// Bare XX with empty payloads.
    pub bare_empty: Amplification,
    /// Full identity-payload handshake.
    pub identity_payload: Amplification,
    /// Same, counting the 2-byte frame on every message.
    pub identity_payload_framed: Amplification,
}

pub fn noise_amplification_suite(seed: [u8; 32]) -> NoiseAmplification {
    let configured = measure_amplification(&bare_xx_transcript(seed, CONFIGURED_RESPONDER_PAYLOAD), 0).expect("complete");
    let bare_empty = measure_amplification(&bare_xx_transcript(seed, 0), 0).expect("complete");
    let cfg = SessionConfig {
        initiator_messages: 0,
        responder_messages: 0,
        ..SessionConfig::default()
    };
    let run = SimNetwork::new(seed)
        .run_session(Protocol::NoiseXx, &cfg, &AdversaryScript::honest())
        .expect("valid script");
    NoiseAmplification {
        configured,
        bare_empty,
        identity_payload: measure_amplification(&run.transcript, 0).expect("complete"),
        identity_payload_framed: measure_amplification(&run.transcript, FRAME_OVERHEAD).expect("complete"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "reason")]
pub enum ReplayOutcome {
    Accepted,
    Rejected(String),
}

impl ReplayOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, ReplayOutcome::Accepted)
    }
}

/// Feeds recorded packet `index` to a live endpoint.
pub fn replay_inject<P: Peer>(transcript: &Transcript, index: usize, target: &mut P) -> Result<(ReplayOutcome, Vec<Outgoing>), SimError> {
    let entry = transcript
        .get(index)
        .ok_or_else(|| SimError::Script(format!("no recorded packet {index}")))?;
    Ok(match target.receive(&entry.bytes) {
        Ok(out) => (ReplayOutcome::Accepted, out),
        Err(e) => (ReplayOutcome::Rejected(e.to_string()), Vec::new()),
    })
}

/// Stolen Legacy identity payload replayed into a fresh XX session.
pub fn replay_noise_identity(seed: [u8; 32], target_mode: BindingMode) -> (ReplayOutcome, Transcript) {
    let demo = staged_replay(seed, target_mode, false);
    let outcome = match demo.outcome {
        AttackOutcome::Impersonated { .. } => ReplayOutcome::Accepted,
        AttackOutcome::Rejected(e) => ReplayOutcome::Rejected(e.to_string()),
    };
    (outcome, demo.attack)
}

/// A recorded transport message delivered a second time within its session.
pub fn replay_noise_transport(seed: [u8; 32]) -> ReplayOutcome {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut a = NoiseConfig::generate(&mut rng, BindingMode::Hardened);
    let b = NoiseConfig::generate(&mut rng, BindingMode::Hardened);
    a.transport_messages = vec![b"transfer 10".to_vec()];
    let mut i = NoisePeer::new(Role::Initiator, a);
    let mut r = NoisePeer::new(Role::Responder, b);
    let res = crate::link::drive(&mut i, &mut r, &mut crate::link::DirectLink, "noise-xx", super::DEFAULT_TIMEOUT_TICKS);
    let idx = res
        .transcript
        .entries
        .iter()
        .position(|e| e.phase == Phase::Transport)
        .expect("transport message recorded");
    replay_inject(&res.transcript, idx, &mut r).expect("index exists").0
}

/// A recorded discv5 handshake packet replayed after the responder issued a
/// fresh WHOAREYOU for the replayed trigger.
pub fn replay_discv5_handshake(seed: [u8; 32], variant: Variant) -> (ReplayOutcome, Transcript) {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let a = Discv5Config::generate(&mut rng, variant);
    let b = Discv5Config::generate(&mut rng, variant);
    let mut later = b.clone();
    rng.fill_bytes(&mut later.rng_seed);
    let run = crate::discv5::run_handshake(a, b, &mut crate::link::DirectLink).expect("honest session");
    let mut target = Discv5Peer::new(Role::Responder, later, None);
    let (trigger, _) = replay_inject(&run.transcript, 0, &mut target).expect("index exists");
    debug_assert!(trigger.is_accepted());
    let (outcome, _) = replay_inject(&run.transcript, 2, &mut target).expect("index exists");
    (outcome, run.transcript)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configured_reproduction_is_32_192_6() {
        let a = noise_amplification_suite([1; 32]);
        assert_eq!(a.configured.initiator_bytes, 32);
        assert_eq!(a.configured.responder_bytes, 192);
        assert_eq!(a.configured.factor, 6.0);
        assert_eq!((a.bare_empty.initiator_bytes, a.bare_empty.responder_bytes), (32, 96));
        assert_eq!(a.identity_payload.responder_bytes, 192);
        assert!(a.identity_payload.factor >= 6.0);
        assert_eq!((a.identity_payload_framed.initiator_bytes, a.identity_payload_framed.responder_bytes), (34, 194));
        assert_eq!(noise_amplification_suite([1; 32]), a);
        assert_eq!(noise_amplification_suite([2; 32]), a);
    }

    #[test]
    fn discv5_whoareyou_smaller_than_request() {
        let s = SimNetwork::new([3; 32])
            .run_session(Protocol::Discv5V5, &SessionConfig::default(), &AdversaryScript::honest())
            .unwrap();
        let a = measure_amplification(&s.transcript, 0).unwrap();
        assert_eq!(a.initiator_bytes, 23 + 32 + 16);
        assert_eq!(a.responder_bytes, 23 + 24);
        assert!(a.factor < 1.0);
    }

    #[test]
    fn incomplete_transcript() {
        let s = SimNetwork::new([3; 32])
            .run_session(Protocol::NoiseXx, &SessionConfig::default(), &AdversaryScript::drop_all())
            .unwrap();
        assert_eq!(measure_amplification(&s.transcript, 0), Err(SimError::Incomplete));
    }

    #[test]
    fn replay_examples() {
        assert_eq!(replay_noise_identity([4; 32], BindingMode::Legacy).0, ReplayOutcome::Accepted);
        assert!(!replay_noise_identity([4; 32], BindingMode::Hardened).0.is_accepted());
        assert!(!replay_noise_transport([4; 32]).is_accepted());
        for v in [Variant::V5, Variant::Kk] {
            assert!(!replay_discv5_handshake([4; 32], v).0.is_accepted());
        }
    }
}
