//! Attack-and-defence lab for Ethereum-style validator cryptography.

pub mod bls;
pub mod pairing;
pub mod batch;
pub mod slashing;
pub mod link;
pub mod noise;
pub mod discv5;
pub mod simnet;
