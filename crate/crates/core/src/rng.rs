//! Independent, reproducible random streams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::protocols::ProtocolKind;

/// What a stream is used for; different purposes never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamPurpose {
    KeyExchange,
    QberSample,
    ChshSession,
    EncodingShots,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::KeyExchange => 1,
            StreamPurpose::QberSample => 2,
            StreamPurpose::ChshSession => 3,
            StreamPurpose::EncodingShots => 4,
        }
    }
}

/// Stream for `(master_seed, protocol, purpose, index)`. The ChaCha key is
/// built from the first three, the stream id is `index`.
pub fn derive_rng(
    master_seed: u64,
    protocol: Option<ProtocolKind>,
    purpose: StreamPurpose,
    index: u64,
) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    let proto = protocol.map_or(u64::MAX, ProtocolKind::ordinal);
    seed[8..16].copy_from_slice(&proto.to_le_bytes());
    seed[16..24].copy_from_slice(&purpose.tag().to_le_bytes());
    seed[24..32].copy_from_slice(b"scadaqkd");
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(index);
    rng
}
