use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_rounds, ChannelModel, EveLog, KeyExchangeOutcome, ProtocolKind};
use crate::error::Result;
use crate::key::BitString;
use crate::statevec::make_singlet;

/// Alice's detector settings (measurement angle about Y), indexed 0..3.
pub const E91_ALICE_ANGLES: [f64; 3] = [0.0, FRAC_PI_4, FRAC_PI_2];
/// Bob's detector settings, indexed 0..3.
pub const E91_BOB_ANGLES: [f64; 3] = [FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4];

/// One pair measured at a CHSH setting combination. Settings are indices into
/// [`E91_ALICE_ANGLES`] / [`E91_BOB_ANGLES`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChshSample {
    pub alice_setting: usize,
    pub bob_setting: usize,
    pub alice_bit: bool,
    pub bob_bit: bool,
}

fn is_key_pair(a: usize, b: usize) -> bool {
    E91_ALICE_ANGLES[a] == E91_BOB_ANGLES[b]
}

fn is_chsh_pair(a: usize, b: usize) -> bool {
    matches!(a, 0 | 2) && matches!(b, 0 | 2)
}

/// E91 on singlet pairs. Qubit 0 stays with Alice, qubit 1 travels to Bob
/// through `channel`. Equal settings yield key bits (Bob inverts his bit);
/// the four CHSH combinations are kept in `chsh_samples`.
pub fn e91_exchange<R: Rng + ?Sized>(
    n_pairs: usize,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<KeyExchangeOutcome> {
    check_rounds(n_pairs)?;
    channel.validate()?;
    let mut log = EveLog::default();
    let mut alice = BitString::new();
    let mut bob = BitString::new();
    let mut samples = Vec::new();

    for _ in 0..n_pairs {
        let state = channel.transmit(make_singlet(), 1, rng, &mut log)?;
        let a = rng.random_range(0..3);
        let b = rng.random_range(0..3);
        let (alice_bit, state) = state.measure_qubit(0, E91_ALICE_ANGLES[a], rng)?;
        let (bob_bit, _) = state.measure_qubit(1, E91_BOB_ANGLES[b], rng)?;
        if is_key_pair(a, b) {
            alice.push(alice_bit);
            bob.push(!bob_bit);
        } else if is_chsh_pair(a, b) {
            samples.push(ChshSample {
                alice_setting: a,
                bob_setting: b,
                alice_bit,
                bob_bit,
            });
        }
    }

    let key_rounds = alice.len();
    let mut out = KeyExchangeOutcome::from_keys(ProtocolKind::E91, alice, bob, n_pairs, key_rounds);
    out.chsh_samples = Some(samples);
    Ok(out.with_eve_log(channel, log))
}
