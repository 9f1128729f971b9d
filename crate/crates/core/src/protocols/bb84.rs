use rand::Rng;

use super::{
    check_rounds, measure, prepare, Basis, ChannelModel, EveLog, KeyExchangeOutcome, ProtocolKind,
};
use crate::error::Result;
use crate::key::BitString;

/// BB84: random bit in a random conjugate basis, Bob measures in a random
/// basis, matching-basis rounds are kept.
pub fn bb84_exchange<R: Rng + ?Sized>(
    n_raw: usize,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<KeyExchangeOutcome> {
    check_rounds(n_raw)?;
    channel.validate()?;
    let mut log = EveLog::default();
    let mut alice = BitString::with_capacity(n_raw / 2 + 1);
    let mut bob = BitString::with_capacity(n_raw / 2 + 1);

    for _ in 0..n_raw {
        let bit = rng.random_bool(0.5);
        let alice_basis = Basis::random(rng);
        let state = channel.transmit(prepare(alice_basis, bit), 0, rng, &mut log)?;
        let bob_basis = Basis::random(rng);
        let measured = measure(&state, bob_basis, rng)?;
        // sifting
        if alice_basis == bob_basis {
            alice.push(bit);
            bob.push(measured);
        }
    }

    let sifted = alice.len();
    Ok(
        KeyExchangeOutcome::from_keys(ProtocolKind::Bb84, alice, bob, n_raw, sifted)
            .with_eve_log(channel, log),
    )
}
