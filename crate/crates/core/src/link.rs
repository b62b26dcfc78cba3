//! Message plumbing shared by the handshake modules and the simulator:
//! the byte-exact [`Transcript`], the [`Peer`] state-machine interface and a
//! [`Link`] through which every packet passes.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Initiator,
    Responder,
}

impl Role {
    pub fn peer(self) -> Role {
        match self {
            Role::Initiator => Role::Responder,
            Role::Responder => Role::Initiator,
        }
    }
}

/// Direction of a packet, named by its sender.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    InitiatorToResponder,
    ResponderToInitiator,
}

impl Direction {
    pub fn from_sender(role: Role) -> Direction {
        match role {
            Role::Initiator => Direction::InitiatorToResponder,
            Role::Responder => Direction::ResponderToInitiator,
        }
    }

    pub fn sender(self) -> Role {
        match self {
            Direction::InitiatorToResponder => Role::Initiator,
            Direction::ResponderToInitiator => Role::Responder,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Handshake,
    Transport,
}

/// A packet as emitted by a [`Peer`], before the link sees it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outgoing {
    pub bytes: Vec<u8>,
    pub label: String,
    pub phase: Phase,
    /// Payload handed to a peer that has not yet been authenticated.
    pub early_data: bool,
}

impl Outgoing {
    pub fn handshake(label: impl Into<String>, bytes: Vec<u8>) -> Self {
        Outgoing {
            bytes,
            label: label.into(),
            phase: Phase::Handshake,
            early_data: false,
        }
    }

    pub fn transport(label: impl Into<String>, bytes: Vec<u8>) -> Self {
        Outgoing {
            bytes,
            label: label.into(),
            phase: Phase::Transport,
            early_data: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub direction: Direction,
    pub label: String,
    pub phase: Phase,
    pub early_data: bool,
    /// True when the packet was put on the wire by the adversary.
    #[serde(default)]
    pub injected: bool,
    #[serde(with = "hex_bytes")]
    pub bytes: Vec<u8>,
}

/// Public material a passive observer can look up (node records, identity
/// keys), keyed by role.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicInfo {
    #[serde(with = "hex_bytes")]
    pub initiator: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub responder: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: u32,
    pub protocol: String,
    pub public: PublicInfo,
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new(protocol: impl Into<String>) -> Self {
        Transcript {
            version: TRANSCRIPT_VERSION,
            protocol: protocol.into(),
            public: PublicInfo::default(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: TranscriptEntry) {
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&TranscriptEntry> {
        self.entries.get(index)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

pub(crate) mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s.trim_start_matches("0x")).map_err(serde::de::Error::custom)
    }
}

/// A protocol endpoint driven by delivered packets (sans-IO).
pub trait Peer {
    type Error: Clone + fmt::Debug + fmt::Display;

    fn role(&self) -> Role;
    /// Packets to send before anything has been received.
    fn start(&mut self) -> Result<Vec<Outgoing>, Self::Error>;
    fn receive(&mut self, bytes: &[u8]) -> Result<Vec<Outgoing>, Self::Error>;
    fn handshake_complete(&self) -> bool;
}

/// What the link does with one packet.
pub enum Delivery {
    Deliver(Vec<u8>),
    Drop,
    /// Deliver the packet, then the extra adversarial packets in order.
    DeliverThen(Vec<u8>, Vec<Vec<u8>>),
}

/// The channel between two peers. `index` counts packets emitted by the peers
/// (adversarial injections are not counted).
pub trait Link {
    fn transmit(&mut self, index: usize, direction: Direction, bytes: Vec<u8>) -> Delivery;
}

/// Delivers everything untouched.
#[derive(Clone, Copy, Debug, Default)]
pub struct DirectLink;

impl Link for DirectLink {
    fn transmit(&mut self, _index: usize, _direction: Direction, bytes: Vec<u8>) -> Delivery {
        Delivery::Deliver(bytes)
    }
}

/// Applies a closure to each packet.
pub struct FnLink<F>(pub F);

impl<F> Link for FnLink<F>
where
    F: FnMut(usize, Direction, Vec<u8>) -> Delivery,
{
    fn transmit(&mut self, index: usize, direction: Direction, bytes: Vec<u8>) -> Delivery {
        (self.0)(index, direction, bytes)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum PeerStatus {
    Completed,
    Failed(String),
    Timeout,
}

impl PeerStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, PeerStatus::Completed)
    }
}

#[derive(Debug)]
pub struct DriveResult<E> {
    pub transcript: Transcript,
    pub initiator: Result<(), E>,
    pub responder: Result<(), E>,
    pub initiator_status: PeerStatus,
    pub responder_status: PeerStatus,
    /// Virtual ticks elapsed, including the timeout wait when stuck.
    pub ticks: u64,
}

/// Runs two peers to quiescence over `link`, recording every delivered packet.
///
/// Each delivery costs one virtual tick. A peer still short of a complete
/// handshake when no packet is in flight waits `timeout_ticks` and times out.
/// A peer that errors stops processing.
pub fn drive<P: Peer>(
    initiator: &mut P,
    responder: &mut P,
    link: &mut dyn Link,
    protocol: &str,
    timeout_ticks: u64,
) -> DriveResult<P::Error> {
    let mut transcript = Transcript::new(protocol);
    let mut queue: VecDeque<(Role, Outgoing)> = VecDeque::new();
    let mut errors: [Option<P::Error>; 2] = [None, None];
    let mut emitted = 0usize;
    let mut ticks = 0u64;

    let slot = |r: Role| match r {
        Role::Initiator => 0,
        Role::Responder => 1,
    };

    match initiator.start() {
        Ok(out) => queue.extend(out.into_iter().map(|o| (Role::Initiator, o))),
        Err(e) => errors[0] = Some(e),
    }
    match responder.start() {
        Ok(out) => queue.extend(out.into_iter().map(|o| (Role::Responder, o))),
        Err(e) => errors[1] = Some(e),
    }

    while let Some((sender, out)) = queue.pop_front() {
        let index = emitted;
        emitted += 1;
        let direction = Direction::from_sender(sender);
        let receiver = sender.peer();
        let deliveries: Vec<(Vec<u8>, bool)> = match link.transmit(index, direction, out.bytes.clone()) {
            Delivery::Deliver(b) => vec![(b, false)],
            Delivery::Drop => Vec::new(),
            Delivery::DeliverThen(b, extra) => {
                let mut v = vec![(b, false)];
                v.extend(extra.into_iter().map(|e| (e, true)));
                v
            }
        };
        for (bytes, injected) in deliveries {
            ticks += 1;
            transcript.push(TranscriptEntry {
                direction,
                label: if injected {
                    format!("{} (injected)", out.label)
                } else {
                    out.label.clone()
                },
                phase: out.phase,
                early_data: out.early_data && !injected,
                injected,
                bytes: bytes.clone(),
            });
            if errors[slot(receiver)].is_some() {
                continue;
            }
            let peer: &mut P = match receiver {
                Role::Initiator => initiator,
                Role::Responder => responder,
            };
            match peer.receive(&bytes) {
                Ok(replies) => queue.extend(replies.into_iter().map(|o| (receiver, o))),
                Err(e) => errors[slot(receiver)] = Some(e),
            }
        }
    }

    let stuck = (errors[0].is_none() && !initiator.handshake_complete())
        || (errors[1].is_none() && !responder.handshake_complete());
    if stuck {
        ticks += timeout_ticks;
    }
    let status = |err: &Option<P::Error>, done: bool| match err {
        Some(e) => PeerStatus::Failed(e.to_string()),
        None if done => PeerStatus::Completed,
        None => PeerStatus::Timeout,
    };
    let initiator_status = status(&errors[0], initiator.handshake_complete());
    let responder_status = status(&errors[1], responder.handshake_complete());
    let [ie, re] = errors;
    DriveResult {
        transcript,
        initiator: ie.map_or(Ok(()), Err),
        responder: re.map_or(Ok(()), Err),
        initiator_status,
        responder_status,
        ticks,
    }
}
