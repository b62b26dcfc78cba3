use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::session::{run_xx_recorded, IdentityCredential, NoiseConfig};
use super::{BindingMode, NoiseError};
use crate::link::{DirectLink, Link, Transcript};

/// Material lifted from a victim: the per-session static keypair and the
/// identity signature that certified it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StolenTriple {
    pub static_public: [u8; 32],
    pub static_secret: [u8; 32],
    pub identity_sig: [u8; 64],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttackOutcome {
    /// The target completed the handshake believing it talks to `identity`.
    Impersonated { identity: [u8; 32] },
    Rejected(NoiseError),
}

impl AttackOutcome {
    pub fn is_impersonated(&self) -> bool {
        matches!(self, AttackOutcome::Impersonated { .. })
    }
}

/// Presents the stolen triple under the victim's identity key to `target`
/// (acting as responder). `attacker_ephemeral` is the attacker's fresh
/// ephemeral secret.
pub fn replay_static_sig_attack(
    stolen: &StolenTriple,
    victim_identity_pk: [u8; 32],
    target: NoiseConfig,
    attacker_ephemeral: [u8; 32],
    link: &mut dyn Link,
) -> (AttackOutcome, Transcript) {
    let attacker = NoiseConfig {
        static_secret: stolen.static_secret,
        advertised_static: Some(stolen.static_public),
        ephemeral_secret: attacker_ephemeral,
        identity: IdentityCredential::Replayed {
            public: victim_identity_pk,
            signature: stolen.identity_sig,
        },
        mode: target.mode,
        extensions: Vec::new(),
        nonce_cap: target.nonce_cap,
        transport_messages: Vec::new(),
    };
    let (run, result) = run_xx_recorded(attacker, target, link);
    let outcome = match result {
        Ok(()) => match run.responder.remote_identity() {
            Some(id) if id == victim_identity_pk => AttackOutcome::Impersonated { identity: id },
            _ => AttackOutcome::Rejected(NoiseError::HandshakeAborted(super::AbortReason::Identity)),
        },
        Err(e) => AttackOutcome::Rejected(e),
    };
    (outcome, run.transcript)
}

#[derive(Clone, Debug)]
pub struct ReplayDemo {
    pub recorded: Transcript,
    pub stolen: StolenTriple,
    pub victim_identity: [u8; 32],
    pub attack: Transcript,
    pub outcome: AttackOutcome,
}

/// Records an honest Legacy session of the victim, lifts the triple, then
/// replays it against a fresh responder running `target_mode`. With
/// `corrupt_secret` the stolen static secret is damaged first.
pub fn staged_replay(seed: [u8; 32], target_mode: BindingMode, corrupt_secret: bool) -> ReplayDemo {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let victim = NoiseConfig::generate(&mut rng, BindingMode::Legacy);
    let honest_peer = NoiseConfig::generate(&mut rng, BindingMode::Legacy);
    let target = NoiseConfig::generate(&mut rng, target_mode);
    let mut attacker_e = [0u8; 32];
    rand::RngCore::fill_bytes(&mut rng, &mut attacker_e);

    let victim_identity = victim.identity_public();
    let victim_secret = victim.static_secret;
    let (recorded, res) = run_xx_recorded(victim, honest_peer, &mut DirectLink);
    res.expect("honest recording session completes");
    let sig = recorded
        .responder
        .remote_payload()
        .expect("payload recorded")
        .identity_sig;
    let mut stolen = StolenTriple {
        static_public: recorded.responder.remote_static().expect("static recorded"),
        static_secret: victim_secret,
        identity_sig: sig,
    };
    if corrupt_secret {
        stolen.static_secret[10] ^= 0x01;
    }
    let (outcome, attack) =
        replay_static_sig_attack(&stolen, victim_identity, target, attacker_e, &mut DirectLink);
    ReplayDemo {
        recorded: recorded.transcript,
        stolen,
        victim_identity,
        attack,
        outcome,
    }
}
