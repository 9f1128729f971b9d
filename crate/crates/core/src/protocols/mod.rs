//! Shot-by-shot QKD protocol runs over a [`ChannelModel`].
//!
//! Every exchange is a pure function of its arguments and the random stream
//! it is handed. Keys are the raw sifted keys: no error correction or privacy
//! amplification is applied.

mod b92;
mod bb84;
mod channel;
mod e91;
mod sarg04;
mod sgs04;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::BitString;
use crate::statevec::{Gate, StateVector};

pub use b92::b92_exchange;
pub use bb84::bb84_exchange;
pub use channel::{eve_intercept, ChannelModel, EveLog, EveStrategy};
pub use e91::{e91_exchange, ChshSample, E91_ALICE_ANGLES, E91_BOB_ANGLES};
pub use sarg04::sarg04_exchange;
pub use sgs04::sgs04_twoway_exchange;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "BB84")]
    Bb84,
    #[serde(rename = "B92")]
    B92,
    #[serde(rename = "E91")]
    E91,
    #[serde(rename = "SARG04")]
    Sarg04,
    /// Two-way "ping-pong" I/Z encoding variant.
    #[serde(rename = "SGS04_TWOWAY")]
    Sgs04TwoWay,
}

impl ProtocolKind {
    /// The four protocols included in reports by default.
    pub const CANONICAL: [ProtocolKind; 4] = [
        ProtocolKind::Bb84,
        ProtocolKind::B92,
        ProtocolKind::E91,
        ProtocolKind::Sarg04,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Bb84 => "BB84",
            ProtocolKind::B92 => "B92",
            ProtocolKind::E91 => "E91",
            ProtocolKind::Sarg04 => "SARG04",
            ProtocolKind::Sgs04TwoWay => "SGS04_TWOWAY",
        }
    }

    /// Lower-case name used in output file names.
    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase()
    }

    pub(crate) fn ordinal(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "BB84" => Ok(ProtocolKind::Bb84),
            "B92" => Ok(ProtocolKind::B92),
            "E91" => Ok(ProtocolKind::E91),
            "SARG04" => Ok(ProtocolKind::Sarg04),
            "SGS04_TWOWAY" | "SGS04" => Ok(ProtocolKind::Sgs04TwoWay),
            other => Err(Error::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Result of one key exchange.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyExchangeOutcome {
    pub protocol: ProtocolKind,
    pub alice_key: BitString,
    pub bob_key: BitString,
    pub key_size: usize,
    pub keys_match: bool,
    /// `None` when the key is empty.
    pub qber: Option<f64>,
    pub raw_rounds: usize,
    pub conclusive_rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh_samples: Option<Vec<ChshSample>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve: Option<EveLog>,
    /// Bits publicly compared and removed in sampled-QBER mode.
    pub disclosed_bits: usize,
    /// QBER estimated from the disclosed sample, sampled mode only.
    pub qber_estimate: Option<f64>,
}

impl KeyExchangeOutcome {
    pub(crate) fn from_keys(
        protocol: ProtocolKind,
        alice_key: BitString,
        bob_key: BitString,
        raw_rounds: usize,
        conclusive_rounds: usize,
    ) -> Self {
        debug_assert_eq!(alice_key.len(), bob_key.len());
        let key_size = alice_key.len();
        let errors = alice_key
            .hamming_distance(&bob_key)
            .expect("keys built in lockstep");
        Self {
            protocol,
            key_size,
            keys_match: errors == 0,
            qber: (key_size > 0).then(|| errors as f64 / key_size as f64),
            alice_key,
            bob_key,
            raw_rounds,
            conclusive_rounds,
            chsh_samples: None,
            eve: None,
            disclosed_bits: 0,
            qber_estimate: None,
        }
    }

    /// Fraction of raw rounds that produced key bits.
    pub fn sift_fraction(&self) -> f64 {
        if self.raw_rounds == 0 {
            0.0
        } else {
            self.conclusive_rounds as f64 / self.raw_rounds as f64
        }
    }

    fn with_eve_log(mut self, channel: &ChannelModel, log: EveLog) -> Self {
        if channel.eve_enabled {
            self.eve = Some(log);
        }
        self
    }
}

/// Dispatches to the protocol-specific exchange.
pub fn run_protocol<R: Rng + ?Sized>(
    kind: ProtocolKind,
    n_raw: usize,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<KeyExchangeOutcome> {
    match kind {
        ProtocolKind::Bb84 => bb84_exchange(n_raw, channel, rng),
        ProtocolKind::B92 => b92_exchange(n_raw, channel, rng),
        ProtocolKind::E91 => e91_exchange(n_raw, channel, rng),
        ProtocolKind::Sarg04 => sarg04_exchange(n_raw, channel, rng),
        ProtocolKind::Sgs04TwoWay => sgs04_twoway_exchange(n_raw, channel, rng),
    }
}

/// Sampled QBER estimation: publicly compares a random `fraction` of the
/// sifted key, records the observed error rate as `qber_estimate`, and
/// removes the disclosed bits. `qber` is recomputed on the remaining key.
pub fn disclose_sample<R: Rng + ?Sized>(
    outcome: &KeyExchangeOutcome,
    fraction: f64,
    rng: &mut R,
) -> Result<KeyExchangeOutcome> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Input(format!(
            "QBER sample fraction {fraction} outside (0, 1]"
        )));
    }
    let n = outcome.key_size;
    let take = ((n as f64) * fraction).round() as usize;
    let mut disclosed = rand::seq::index::sample(rng, n, take.min(n)).into_vec();
    disclosed.sort_unstable();
    let errors = disclosed
        .iter()
        .filter(|&&i| outcome.alice_key.get(i) != outcome.bob_key.get(i))
        .count();
    let mut out = KeyExchangeOutcome::from_keys(
        outcome.protocol,
        outcome.alice_key.without_indices(&disclosed),
        outcome.bob_key.without_indices(&disclosed),
        outcome.raw_rounds,
        outcome.conclusive_rounds,
    );
    out.chsh_samples = outcome.chsh_samples.clone();
    out.eve = outcome.eve.clone();
    out.disclosed_bits = disclosed.len();
    out.qber_estimate = (!disclosed.is_empty()).then(|| errors as f64 / disclosed.len() as f64);
    Ok(out)
}

fn check_rounds(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Input("number of rounds must be at least 1".into()));
    }
    Ok(())
}

/// Measurement / preparation basis for single-qubit protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Basis {
    Z,
    X,
}

impl Basis {
    pub(crate) fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            Basis::X
        } else {
            Basis::Z
        }
    }

    pub(crate) fn angle(self) -> f64 {
        match self {
            Basis::Z => 0.0,
            Basis::X => FRAC_PI_2,
        }
    }

    pub(crate) fn other(self) -> Self {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }
}

/// `|0>`/`|1>` in Z, `|+>`/`|->` in X.
pub(crate) fn prepare(basis: Basis, bit: bool) -> StateVector {
    let mut s = StateVector::basis(1, bit as usize).expect("one qubit");
    if basis == Basis::X {
        s.apply_in_place(&Gate::H(0)).expect("qubit 0 exists");
    }
    s
}

pub(crate) fn measure<R: Rng + ?Sized>(
    state: &StateVector,
    basis: Basis,
    rng: &mut R,
) -> Result<bool> {
    Ok(state.measure_qubit(0, basis.angle(), rng)?.0)
}
