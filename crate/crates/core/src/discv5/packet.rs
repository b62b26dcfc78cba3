//! Unmasked packet layout.
//!
//! ```text
//! static-header = protocol-id (6) || version (2) || flag (1) || nonce (12) || authdata-size (2)
//! packet        = static-header || authdata || message
//! ```
//!
//! | flag | authdata |
//! |------|----------|
//! | 0 message     | src-id (32) |
//! | 1 WHOAREYOU   | id-nonce (16) \|\| enr-seq (8) |
//! | 2 handshake   | src-id (32) \|\| sig-size (1) \|\| eph-key-size (1) \|\| id-signature \|\| eph-pubkey \|\| record |
//! | 3 kk response | src-id (32) \|\| eph-key-size (1) \|\| eph-pubkey |

use super::Discv5Error;

pub const PROTOCOL_ID: &[u8; 6] = b"discv5";
pub const VERSION: u16 = 0x0001;
pub const STATIC_HEADER_LEN: usize = 23;
pub const NONCE_LEN: usize = 12;
pub const ID_NONCE_LEN: usize = 16;
pub const NODE_ID_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PacketFlag {
    Message = 0,
    WhoAreYou = 1,
    Handshake = 2,
    KkResponse = 3,
}

impl TryFrom<u8> for PacketFlag {
    type Error = Discv5Error;

    fn try_from(v: u8) -> Result<Self, Discv5Error> {
        Ok(match v {
            0 => PacketFlag::Message,
            1 => PacketFlag::WhoAreYou,
            2 => PacketFlag::Handshake,
            3 => PacketFlag::KkResponse,
            _ => return Err(Discv5Error::Parse("unknown flag")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PacketHeader {
    pub protocol_id: [u8; 6],
    pub version: u16,
    pub flag: PacketFlag,
    pub nonce: [u8; NONCE_LEN],
    pub authdata_size: u16,
}

impl PacketHeader {
    pub fn new(flag: PacketFlag, nonce: [u8; NONCE_LEN], authdata_size: u16) -> Self {
        PacketHeader {
            protocol_id: *PROTOCOL_ID,
            version: VERSION,
            flag,
            nonce,
            authdata_size,
        }
    }

    pub fn encode(&self) -> [u8; STATIC_HEADER_LEN] {
        let mut out = [0u8; STATIC_HEADER_LEN];
        out[..6].copy_from_slice(&self.protocol_id);
        out[6..8].copy_from_slice(&self.version.to_be_bytes());
        out[8] = self.flag as u8;
        out[9..21].copy_from_slice(&self.nonce);
        out[21..23].copy_from_slice(&self.authdata_size.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Discv5Error> {
        if bytes.len() < STATIC_HEADER_LEN {
            return Err(Discv5Error::Parse("short header"));
        }
        if &bytes[..6] != PROTOCOL_ID {
            return Err(Discv5Error::Parse("protocol id"));
        }
        let version = u16::from_be_bytes([bytes[6], bytes[7]]);
        if version != VERSION {
            return Err(Discv5Error::Parse("version"));
        }
        Ok(PacketHeader {
            protocol_id: *PROTOCOL_ID,
            version,
            flag: PacketFlag::try_from(bytes[8])?,
            nonce: bytes[9..21].try_into().expect("12 bytes"),
            authdata_size: u16::from_be_bytes([bytes[21], bytes[22]]),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub header: PacketHeader,
    pub authdata: Vec<u8>,
    pub message: Vec<u8>,
}

impl Packet {
    pub fn new(flag: PacketFlag, nonce: [u8; NONCE_LEN], authdata: Vec<u8>, message: Vec<u8>) -> Result<Self, Discv5Error> {
        let size = u16::try_from(authdata.len()).map_err(|_| Discv5Error::Parse("authdata too large"))?;
        Ok(Packet {
            header: PacketHeader::new(flag, nonce, size),
            authdata,
            message,
        })
    }

    /// Header and authdata: the part that exists before the message is sealed.
    pub fn head(&self) -> Vec<u8> {
        let mut out = self.header.encode().to_vec();
        out.extend_from_slice(&self.authdata);
        out
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.head();
        out.extend_from_slice(&self.message);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Discv5Error> {
        let header = PacketHeader::decode(bytes)?;
        let rest = &bytes[STATIC_HEADER_LEN..];
        let n = header.authdata_size as usize;
        if rest.len() < n {
            return Err(Discv5Error::Parse("authdata-size exceeds packet"));
        }
        Ok(Packet {
            header,
            authdata: rest[..n].to_vec(),
            message: rest[n..].to_vec(),
        })
    }

    /// Bytes of `encode()` that precede the message.
    pub fn head_len(&self) -> usize {
        STATIC_HEADER_LEN + self.authdata.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Challenge {
    pub id_nonce: [u8; ID_NONCE_LEN],
    pub enr_seq: u64,
}

impl Challenge {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.id_nonce.to_vec();
        out.extend_from_slice(&self.enr_seq.to_be_bytes());
        out
    }

    pub fn decode(authdata: &[u8]) -> Result<Self, Discv5Error> {
        if authdata.len() != ID_NONCE_LEN + 8 {
            return Err(Discv5Error::Parse("WHOAREYOU authdata length"));
        }
        Ok(Challenge {
            id_nonce: authdata[..16].try_into().expect("16 bytes"),
            enr_seq: u64::from_be_bytes(authdata[16..24].try_into().expect("8 bytes")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandshakeAuthdata {
    pub src_id: [u8; NODE_ID_LEN],
    pub sig_size: u8,
    pub eph_key_size: u8,
    pub id_signature: Vec<u8>,
    pub ephemeral_pubkey: Vec<u8>,
    pub record: Vec<u8>,
}

impl HandshakeAuthdata {
    pub fn new(src_id: [u8; 32], id_signature: Vec<u8>, ephemeral_pubkey: Vec<u8>, record: Vec<u8>) -> Self {
        HandshakeAuthdata {
            src_id,
            sig_size: id_signature.len() as u8,
            eph_key_size: ephemeral_pubkey.len() as u8,
            id_signature,
            ephemeral_pubkey,
            record,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.src_id.to_vec();
        out.push(self.sig_size);
        out.push(self.eph_key_size);
        out.extend_from_slice(&self.id_signature);
        out.extend_from_slice(&self.ephemeral_pubkey);
        out.extend_from_slice(&self.record);
        out
    }

    /// Declared sizes must fit the authdata; whatever follows the ephemeral
    /// key is the record.
    pub fn decode(authdata: &[u8]) -> Result<Self, Discv5Error> {
        if authdata.len() < NODE_ID_LEN + 2 {
            return Err(Discv5Error::Parse("handshake authdata too short"));
        }
        let sig_size = authdata[32];
        let eph_key_size = authdata[33];
        let sig_end = 34 + sig_size as usize;
        let eph_end = sig_end + eph_key_size as usize;
        if authdata.len() < eph_end {
            return Err(Discv5Error::Parse("sig-size/eph-key-size exceed authdata"));
        }
        Ok(HandshakeAuthdata {
            src_id: authdata[..32].try_into().expect("32 bytes"),
            sig_size,
            eph_key_size,
            id_signature: authdata[34..sig_end].to_vec(),
            ephemeral_pubkey: authdata[sig_end..eph_end].to_vec(),
            record: authdata[eph_end..].to_vec(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KkResponseAuthdata {
    pub src_id: [u8; NODE_ID_LEN],
    pub eph_key_size: u8,
    pub ephemeral_pubkey: Vec<u8>,
}

impl KkResponseAuthdata {
    pub fn new(src_id: [u8; 32], ephemeral_pubkey: Vec<u8>) -> Self {
        KkResponseAuthdata {
            src_id,
            eph_key_size: ephemeral_pubkey.len() as u8,
            ephemeral_pubkey,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.src_id.to_vec();
        out.push(self.eph_key_size);
        out.extend_from_slice(&self.ephemeral_pubkey);
        out
    }

    pub fn decode(authdata: &[u8]) -> Result<Self, Discv5Error> {
        if authdata.len() < 33 || authdata.len() != 33 + authdata[32] as usize {
            return Err(Discv5Error::Parse("kk response authdata length"));
        }
        Ok(KkResponseAuthdata {
            src_id: authdata[..32].try_into().expect("32 bytes"),
            eph_key_size: authdata[32],
            ephemeral_pubkey: authdata[33..].to_vec(),
        })
    }
}

pub fn message_authdata(src_id: &[u8; 32]) -> Vec<u8> {
    src_id.to_vec()
}

pub fn parse_message_authdata(authdata: &[u8]) -> Result<[u8; 32], Discv5Error> {
    authdata
        .try_into()
        .map_err(|_| Discv5Error::Parse("message authdata length"))
}
