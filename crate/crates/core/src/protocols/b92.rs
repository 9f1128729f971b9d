use rand::Rng;

use super::{
    check_rounds, measure, prepare, Basis, ChannelModel, EveLog, KeyExchangeOutcome, ProtocolKind,
};
use crate::error::Result;
use crate::key::BitString;

/// B92: bit 0 is sent as `|0>`, bit 1 as `|+>`. Bob keeps only outcomes that
/// one of the two states could not have produced:
///
/// * X-basis outcome `|->` rules out `|+>`, so the bit was 0;
/// * Z-basis outcome `|1>` rules out `|0>`, so the bit was 1.
pub fn b92_exchange<R: Rng + ?Sized>(
    n_raw: usize,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<KeyExchangeOutcome> {
    check_rounds(n_raw)?;
    channel.validate()?;
    let mut log = EveLog::default();
    let mut alice = BitString::new();
    let mut bob = BitString::new();

    for _ in 0..n_raw {
        let bit = rng.random_bool(0.5);
        let sent = if bit {
            prepare(Basis::X, false)
        } else {
            prepare(Basis::Z, false)
        };
        let state = channel.transmit(sent, 0, rng, &mut log)?;
        let bob_basis = Basis::random(rng);
        if measure(&state, bob_basis, rng)? {
            alice.push(bit);
            bob.push(bob_basis == Basis::Z);
        }
    }

    let conclusive = alice.len();
    Ok(
        KeyExchangeOutcome::from_keys(ProtocolKind::B92, alice, bob, n_raw, conclusive)
            .with_eve_log(channel, log),
    )
}
