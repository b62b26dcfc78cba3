//! Deterministic in-memory network for running handshakes under an
//! adversary: declarative scripts, passive decryption probes, amplification
//! accounting and replay injection.
//!
//! Everything derives from one 32-byte seed. Time is virtual: each delivery
//! is one tick and a stalled endpoint times out after `timeout_ticks`.

mod measure;
mod probe;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discv5::{Discv5Config, Discv5Peer, Variant};
use crate::link::{drive, Delivery, Direction, Link, PeerStatus, Role, Transcript};
use crate::noise::{BindingMode, NoiseConfig, NoisePeer};

pub use measure::{
    bare_xx_transcript, measure_amplification, noise_amplification_suite, replay_discv5_handshake,
    replay_inject, replay_noise_identity, replay_noise_transport, Amplification, NoiseAmplification,
    ReplayOutcome, CONFIGURED_RESPONDER_PAYLOAD,
};
pub use probe::{passive_decrypt_probe, ProbeEntry, ProbeReport};

pub const DEFAULT_TIMEOUT_TICKS: u64 = 16;
pub const SCRIPT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("script error: {0}")]
    Script(String),
    #[error("incomplete handshake in transcript")]
    Incomplete,
    #[error("unknown protocol {0:?}")]
    UnknownProtocol(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    NoiseXx,
    Discv5V5,
    Discv5Kk,
}

impl Protocol {
    pub fn handshake_messages(self) -> usize {
        match self {
            Protocol::NoiseXx => 3,
            Protocol::Discv5V5 | Protocol::Discv5Kk => 4,
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "noise-xx" => Ok(Protocol::NoiseXx),
            "discv5-v5" => Ok(Protocol::Discv5V5),
            "discv5-kk" => Ok(Protocol::Discv5Kk),
            other => Err(SimError::UnknownProtocol(other.to_string())),
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::NoiseXx => "noise-xx",
            Protocol::Discv5V5 => "discv5-v5",
            Protocol::Discv5Kk => "discv5-kk",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub binding_mode: BindingMode,
    pub transcript_binding: bool,
    pub initiator_messages: usize,
    pub responder_messages: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            binding_mode: BindingMode::Hardened,
            transcript_binding: false,
            initiator_messages: 3,
            responder_messages: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScriptAction {
    /// Passive capture; the transcript records every packet anyway.
    Record,
    Drop,
    FlipBit { bit: usize },
    Replace {
        #[serde(with = "crate::link::hex_bytes")]
        bytes: Vec<u8>,
    },
    /// Deliver the packet, then the given bytes.
    InjectAfter {
        #[serde(with = "crate::link::hex_bytes")]
        bytes: Vec<u8>,
    },
    Duplicate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub packet: usize,
    pub action: ScriptAction,
}

/// Declarative adversary: actions keyed by packet index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryScript {
    #[serde(default = "script_version")]
    pub version: u32,
    #[serde(default)]
    pub drop_all: bool,
    #[serde(default)]
    pub steps: Vec<ScriptStep>,
}

fn script_version() -> u32 {
    SCRIPT_VERSION
}

impl AdversaryScript {
    pub fn honest() -> Self {
        AdversaryScript {
            version: SCRIPT_VERSION,
            drop_all: false,
            steps: Vec::new(),
        }
    }

    pub fn drop_all() -> Self {
        AdversaryScript {
            drop_all: true,
            ..Self::honest()
        }
    }

    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let script: AdversaryScript = serde_json::from_str(s).map_err(|e| SimError::Script(e.to_string()))?;
        if script.version != SCRIPT_VERSION {
            return Err(SimError::Script(format!("unsupported script version {}", script.version)));
        }
        Ok(script)
    }

    pub fn validate(&self, packets: usize) -> Result<(), SimError> {
        for step in &self.steps {
            if step.packet >= packets {
                return Err(SimError::Script(format!(
                    "packet index {} out of range (session has {packets} packets)",
                    step.packet
                )));
            }
        }
        Ok(())
    }
}

struct ScriptLink<'a> {
    script: &'a AdversaryScript,
}

impl Link for ScriptLink<'_> {
    fn transmit(&mut self, index: usize, _direction: Direction, mut bytes: Vec<u8>) -> Delivery {
        if self.script.drop_all {
            return Delivery::Drop;
        }
        let mut extra = Vec::new();
        for step in self.script.steps.iter().filter(|s| s.packet == index) {
            match &step.action {
                ScriptAction::Record => {}
                ScriptAction::Drop => return Delivery::Drop,
                ScriptAction::FlipBit { bit } => {
                    if !bytes.is_empty() {
                        let pos = bit % (bytes.len() * 8);
                        bytes[pos / 8] ^= 1 << (pos % 8);
                    }
                }
                ScriptAction::Replace { bytes: b } => bytes = b.clone(),
                ScriptAction::InjectAfter { bytes: b } => extra.push(b.clone()),
                ScriptAction::Duplicate => extra.push(bytes.clone()),
            }
        }
        if extra.is_empty() {
            Delivery::Deliver(bytes)
        } else {
            Delivery::DeliverThen(bytes, extra)
        }
    }
}

/// Private keys of both sides, kept out of the transcript and handed to the
/// probe only through a [`CompromiseSet`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SessionSecrets {
    pub initiator_static: Option<[u8; 32]>,
    pub responder_static: Option<[u8; 32]>,
    pub initiator_ephemeral: Option<[u8; 32]>,
    pub responder_ephemeral: Option<[u8; 32]>,
}

/// Keys held by the adversary. Packets before `recorded_from` were not
/// captured.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CompromiseSet {
    pub initiator_static: Option<[u8; 32]>,
    pub responder_static: Option<[u8; 32]>,
    pub initiator_ephemeral: Option<[u8; 32]>,
    pub responder_ephemeral: Option<[u8; 32]>,
    pub recorded_from: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompromisedKey {
    InitiatorStatic,
    ResponderStatic,
    InitiatorEphemeral,
    ResponderEphemeral,
}

impl std::str::FromStr for CompromisedKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "initiator-static" => Ok(CompromisedKey::InitiatorStatic),
            "responder-static" => Ok(CompromisedKey::ResponderStatic),
            "initiator-ephemeral" => Ok(CompromisedKey::InitiatorEphemeral),
            "responder-ephemeral" => Ok(CompromisedKey::ResponderEphemeral),
            other => Err(format!("unknown key {other:?}")),
        }
    }
}

impl CompromiseSet {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn select(secrets: &SessionSecrets, keys: &[CompromisedKey]) -> Self {
        let mut c = Self::default();
        for k in keys {
            match k {
                CompromisedKey::InitiatorStatic => c.initiator_static = secrets.initiator_static,
                CompromisedKey::ResponderStatic => c.responder_static = secrets.responder_static,
                CompromisedKey::InitiatorEphemeral => c.initiator_ephemeral = secrets.initiator_ephemeral,
                CompromisedKey::ResponderEphemeral => c.responder_ephemeral = secrets.responder_ephemeral,
            }
        }
        c
    }

    pub fn all(secrets: &SessionSecrets) -> Self {
        Self::select(
            secrets,
            &[
                CompromisedKey::InitiatorStatic,
                CompromisedKey::ResponderStatic,
                CompromisedKey::InitiatorEphemeral,
                CompromisedKey::ResponderEphemeral,
            ],
        )
    }
}

#[derive(Clone, Debug)]
pub struct SessionReport {
    pub protocol: Protocol,
    pub transcript: Transcript,
    pub initiator: PeerStatus,
    pub responder: PeerStatus,
    pub ticks: u64,
    pub secrets: SessionSecrets,
}

impl SessionReport {
    pub fn completed(&self) -> bool {
        self.initiator.is_completed() && self.responder.is_completed()
    }
}

pub struct SimNetwork {
    seed: [u8; 32],
    timeout_ticks: u64,
}

impl SimNetwork {
    pub fn new(seed: [u8; 32]) -> Self {
        SimNetwork {
            seed,
            timeout_ticks: DEFAULT_TIMEOUT_TICKS,
        }
    }

    pub fn with_timeout(mut self, ticks: u64) -> Self {
        self.timeout_ticks = ticks;
        self
    }

    pub fn seed(&self) -> [u8; 32] {
        self.seed
    }

    pub fn run_session(
        &self,
        protocol: Protocol,
        config: &SessionConfig,
        script: &AdversaryScript,
    ) -> Result<SessionReport, SimError> {
        script.validate(protocol.handshake_messages() + config.initiator_messages + config.responder_messages)?;
        let mut rng = ChaCha20Rng::from_seed(self.seed);
        let msgs = |role: &str, n: usize| -> Vec<Vec<u8>> {
            (0..n).map(|i| format!("{role} application message {i}").into_bytes()).collect()
        };
        let mut link = ScriptLink { script };
        match protocol {
            Protocol::NoiseXx => {
                let mut a = NoiseConfig::generate(&mut rng, config.binding_mode);
                let mut b = NoiseConfig::generate(&mut rng, config.binding_mode);
                a.transport_messages = msgs("initiator", config.initiator_messages);
                b.transport_messages = msgs("responder", config.responder_messages);
                let secrets = SessionSecrets {
                    initiator_static: Some(a.static_secret),
                    responder_static: Some(b.static_secret),
                    initiator_ephemeral: Some(a.ephemeral_secret),
                    responder_ephemeral: Some(b.ephemeral_secret),
                };
                let (ia, ib) = (a.identity_public(), b.identity_public());
                let mut i = NoisePeer::new(Role::Initiator, a);
                let mut r = NoisePeer::new(Role::Responder, b);
                let res = drive(&mut i, &mut r, &mut link, &protocol.to_string(), self.timeout_ticks);
                let mut transcript = res.transcript;
                transcript.public.initiator = ia.to_vec();
                transcript.public.responder = ib.to_vec();
                Ok(SessionReport {
                    protocol,
                    transcript,
                    initiator: res.initiator_status,
                    responder: res.responder_status,
                    ticks: res.ticks,
                    secrets,
                })
            }
            Protocol::Discv5V5 | Protocol::Discv5Kk => {
                let variant = if protocol == Protocol::Discv5V5 { Variant::V5 } else { Variant::Kk };
                let mut a = Discv5Config::generate(&mut rng, variant);
                let mut b = Discv5Config::generate(&mut rng, variant);
                a.transcript_binding = config.transcript_binding;
                b.transcript_binding = config.transcript_binding;
                a.transport_messages = msgs("initiator", config.initiator_messages);
                b.transport_messages = msgs("responder", config.responder_messages);
                let (ra, rb) = (a.record(), b.record());
                let (sa, sb) = (a.identity.static_secret, b.identity.static_secret);
                let mut i = Discv5Peer::new(Role::Initiator, a, Some(rb));
                let mut r = Discv5Peer::new(Role::Responder, b, None);
                let name = variant.protocol_name(config.transcript_binding);
                let res = drive(&mut i, &mut r, &mut link, &name, self.timeout_ticks);
                let mut transcript = res.transcript;
                transcript.public.initiator = ra.encode().to_vec();
                transcript.public.responder = rb.encode().to_vec();
                Ok(SessionReport {
                    protocol,
                    transcript,
                    initiator: res.initiator_status,
                    responder: res.responder_status,
                    ticks: res.ticks,
                    secrets: SessionSecrets {
                        initiator_static: Some(sa),
                        responder_static: Some(sb),
                        initiator_ephemeral: i.ephemeral_secret(),
                        responder_ephemeral: r.ephemeral_secret(),
                    },
                })
            }
        }
    }
}

/// Sub-seed for the `index`-th run derived from a master seed.
pub fn sub_seed(seed: &[u8; 32], index: u64) -> [u8; 32] {
    let mut rng = ChaCha20Rng::from_seed(*seed);
    rng.set_stream(index);
    let mut out = [0u8; 32];
    rng.fill_bytes(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Protocol; 3] = [Protocol::NoiseXx, Protocol::Discv5V5, Protocol::Discv5Kk];

    #[test]
    fn honest_sessions_complete() {
        for p in ALL {
            let r = SimNetwork::new([1; 32])
                .run_session(p, &SessionConfig::default(), &AdversaryScript::honest())
                .unwrap();
            assert!(r.completed(), "{p}");
            assert_eq!(r.transcript.len(), p.handshake_messages() + 5);
        }
    }

    #[test]
    fn drop_all_times_out_both() {
        for p in ALL {
            let r = SimNetwork::new([2; 32])
                .run_session(p, &SessionConfig::default(), &AdversaryScript::drop_all())
                .unwrap();
            assert_eq!(r.initiator, PeerStatus::Timeout);
            assert_eq!(r.responder, PeerStatus::Timeout);
            assert_eq!(r.ticks, DEFAULT_TIMEOUT_TICKS);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        for p in ALL {
            let net = SimNetwork::new([3; 32]);
            let a = net.run_session(p, &SessionConfig::default(), &AdversaryScript::honest()).unwrap();
            let b = net.run_session(p, &SessionConfig::default(), &AdversaryScript::honest()).unwrap();
            assert_eq!(a.transcript.to_json(), b.transcript.to_json());
            let c = SimNetwork::new([4; 32])
                .run_session(p, &SessionConfig::default(), &AdversaryScript::honest())
                .unwrap();
            assert_ne!(a.transcript, c.transcript);
        }
    }

    #[test]
    fn out_of_range_script_is_rejected() {
        let script = AdversaryScript::from_json(r#"{"steps":[{"packet":99,"action":{"kind":"drop"}}]}"#).unwrap();
        assert!(matches!(
            SimNetwork::new([5; 32]).run_session(Protocol::NoiseXx, &SessionConfig::default(), &script),
            Err(SimError::Script(_))
        ));
    }

    #[test]
    fn script_json_round_trip() {
        let s = AdversaryScript {
            version: 1,
            drop_all: false,
            steps: vec![
                ScriptStep {
                    packet: 1,
                    action: ScriptAction::FlipBit { bit: 9 },
                },
                ScriptStep {
                    packet: 2,
                    action: ScriptAction::InjectAfter { bytes: vec![1, 2] },
                },
            ],
        };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(AdversaryScript::from_json(&j).unwrap(), s);
        assert!(AdversaryScript::from_json(r#"{"version":2}"#).is_err());
    }

    #[test]
    fn flipped_bit_fails_the_session() {
        let script = AdversaryScript {
            steps: vec![ScriptStep {
                packet: 1,
                action: ScriptAction::FlipBit { bit: 300 },
            }],
            ..AdversaryScript::honest()
        };
        let r = SimNetwork::new([6; 32])
            .run_session(Protocol::NoiseXx, &SessionConfig::default(), &script)
            .unwrap();
        assert!(matches!(r.initiator, PeerStatus::Failed(_)));
        assert_eq!(r.responder, PeerStatus::Timeout);
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(&[0; 32], 0), sub_seed(&[0; 32], 1));
        assert_eq!(sub_seed(&[0; 32], 7), sub_seed(&[0; 32], 7));
    }
}
