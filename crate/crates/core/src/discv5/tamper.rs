use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::packet::{HandshakeAuthdata, Packet, PacketFlag};
use super::session::run_recorded;
use super::{Discv5Config, Discv5Error, Discv5Run, Variant};
use crate::link::{Delivery, FnLink};

/// Appends a zero byte to the ephemeral key of a handshake packet and bumps
/// `eph-key-size` to match. Signature, record and ciphertext are untouched.
/// Other packets pass through unchanged.
pub fn pad_ephemeral_key(bytes: &[u8]) -> Result<Vec<u8>, Discv5Error> {
    let p = Packet::decode(bytes)?;
    if p.header.flag != PacketFlag::Handshake {
        return Ok(bytes.to_vec());
    }
    let mut a = HandshakeAuthdata::decode(&p.authdata)?;
    a.ephemeral_pubkey.push(0);
    a.eph_key_size = a
        .eph_key_size
        .checked_add(1)
        .ok_or(Discv5Error::Parse("ephemeral key size overflow"))?;
    Packet::new(p.header.flag, p.header.nonce, a.encode(), p.message).map(|q| q.encode())
}

/// Honest endpoints derived from `seed`; an on-path adversary pads the
/// ephemeral key in the handshake packet.
pub fn size_field_tampering(seed: [u8; 32], variant: Variant, transcript_binding: bool) -> (Discv5Run, Result<(), Discv5Error>) {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut a = Discv5Config::generate(&mut rng, variant);
    let mut b = Discv5Config::generate(&mut rng, variant);
    a.transcript_binding = transcript_binding;
    b.transcript_binding = transcript_binding;
    a.transport_messages = vec![b"ping".to_vec()];
    b.transport_messages = vec![b"pong".to_vec()];
    let mut link = FnLink(|_, _, bytes: Vec<u8>| match pad_ephemeral_key(&bytes) {
        Ok(b) => Delivery::Deliver(b),
        Err(_) => Delivery::Deliver(bytes),
    });
    run_recorded(a, b, &mut link)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discv5::RejectReason;

    #[test]
    fn binding_detects_padding() {
        for variant in [Variant::V5, Variant::Kk] {
            let (run, res) = size_field_tampering([9; 32], variant, false);
            assert_eq!(res, Ok(()));
            assert_eq!(run.initiator.session_keys(), run.responder.session_keys());
            let hs = &run.transcript.entries[2].bytes;
            let a = HandshakeAuthdata::decode(&Packet::decode(hs).unwrap().authdata).unwrap();
            assert_eq!(a.eph_key_size, 33);

            let (_, res) = size_field_tampering([9; 32], variant, true);
            assert_eq!(res, Err(Discv5Error::HandshakeRejected(RejectReason::Transcript)));
        }
    }

    #[test]
    fn other_packets_untouched() {
        let (run, _) = size_field_tampering([9; 32], Variant::V5, false);
        for i in [0, 1, 3] {
            let b = &run.transcript.entries[i].bytes;
            assert_eq!(&pad_ephemeral_key(b).unwrap(), b);
        }
    }
}
