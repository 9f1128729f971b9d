use rand::Rng;

use super::{
    check_rounds, measure, prepare, Basis, ChannelModel, EveLog, KeyExchangeOutcome, ProtocolKind,
};
use crate::error::Result;
use crate::key::BitString;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct BasisState {
    basis: Basis,
    value: bool,
}

impl BasisState {
    /// Key bit carried by a state: its basis.
    fn key_bit(self) -> bool {
        self.basis == Basis::X
    }
}

/// SARG04: Alice sends one of the four BB84 states, the bit being the basis
/// (Z = 0, X = 1). She announces an unordered pair made of the sent state and
/// a random state from the other basis. Bob's outcome is conclusive when it is
/// orthogonal to one pair member; he then infers the other member.
pub fn sarg04_exchange<R: Rng + ?Sized>(
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
        let sent = BasisState {
            basis: Basis::random(rng),
            value: rng.random_bool(0.5),
        };
        let partner = BasisState {
            basis: sent.basis.other(),
            value: rng.random_bool(0.5),
        };
        let pair = if rng.random_bool(0.5) {
            [sent, partner]
        } else {
            [partner, sent]
        };

        let state = channel.transmit(prepare(sent.basis, sent.value), 0, rng, &mut log)?;
        let bob_basis = Basis::random(rng);
        let outcome = measure(&state, bob_basis, rng)?;

        // Exactly one pair member lives in Bob's basis; it is excluded when
        // the outcome is its orthogonal partner.
        let same_basis = pair
            .iter()
            .position(|s| s.basis == bob_basis)
            .expect("pair spans both bases");
        if pair[same_basis].value != outcome {
            let inferred = pair[1 - same_basis];
            alice.push(sent.key_bit());
            bob.push(inferred.key_bit());
        }
    }

    let conclusive = alice.len();
    Ok(
        KeyExchangeOutcome::from_keys(ProtocolKind::Sarg04, alice, bob, n_raw, conclusive)
            .with_eve_log(channel, log),
    )
}
