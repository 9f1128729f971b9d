use rand::Rng;

use super::{
    check_rounds, measure, prepare, Basis, ChannelModel, EveLog, KeyExchangeOutcome, ProtocolKind,
};
use crate::error::Result;
use crate::key::BitString;
use crate::statevec::Gate;

/// Two-way deterministic variant: Bob sends `|+>` or `|->`, Alice applies I
/// (bit 0) or Z (bit 1) and returns the qubit, Bob measures in X. The channel
/// acts on both legs.
pub fn sgs04_twoway_exchange<R: Rng + ?Sized>(
    n_raw: usize,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<KeyExchangeOutcome> {
    check_rounds(n_raw)?;
    channel.validate()?;
    let mut log = EveLog::default();
    let mut alice = BitString::with_capacity(n_raw);
    let mut bob = BitString::with_capacity(n_raw);

    for _ in 0..n_raw {
        let bob_prep = rng.random_bool(0.5);
        let mut state = channel.transmit(prepare(Basis::X, bob_prep), 0, rng, &mut log)?;
        let bit = rng.random_bool(0.5);
        if bit {
            state.apply_in_place(&Gate::Z(0))?;
        }
        let state = channel.transmit(state, 0, rng, &mut log)?;
        let measured = measure(&state, Basis::X, rng)?;
        alice.push(bit);
        bob.push(measured != bob_prep);
    }

    Ok(
        KeyExchangeOutcome::from_keys(ProtocolKind::Sgs04TwoWay, alice, bob, n_raw, n_raw)
            .with_eve_log(channel, log),
    )
}
