//! Quantum channel: optional intercept-resend eavesdropper followed by
//! depolarizing noise.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::BitString;
use crate::statevec::StateVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EveStrategy {
    /// Eve picks Z or X uniformly per intercepted qubit.
    #[default]
    InterceptResendRandomBasis,
    /// Eve always measures at this basis angle (radians, rotation about Y).
    InterceptResendFixedBasis { angle: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub eve_enabled: bool,
    pub eve_strategy: EveStrategy,
    pub depolarizing_p: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelModel {
    pub fn ideal() -> Self {
        Self {
            eve_enabled: false,
            eve_strategy: EveStrategy::InterceptResendRandomBasis,
            depolarizing_p: 0.0,
        }
    }

    pub fn with_eve(strategy: EveStrategy) -> Self {
        Self {
            eve_enabled: true,
            eve_strategy: strategy,
            depolarizing_p: 0.0,
        }
    }

    pub fn with_noise(mut self, p: f64) -> Self {
        self.depolarizing_p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.depolarizing_p) {
            return Err(Error::Input(format!(
                "depolarizing_p {} outside [0, 1]",
                self.depolarizing_p
            )));
        }
        if let EveStrategy::InterceptResendFixedBasis { angle } = self.eve_strategy {
            if !angle.is_finite() {
                return Err(Error::Input("non-finite Eve basis angle".into()));
            }
        }
        Ok(())
    }

    /// One transit of qubit `q` through the channel.
    pub(crate) fn transmit<R: Rng + ?Sized>(
        &self,
        state: StateVector,
        q: usize,
        rng: &mut R,
        log: &mut EveLog,
    ) -> Result<StateVector> {
        let mut state = state;
        if self.eve_enabled {
            let (forwarded, bit) = eve_intercept(&state, q, self.eve_strategy, rng)?;
            log.record(bit);
            state = forwarded;
        }
        if self.depolarizing_p > 0.0 {
            state = state.depolarize(q, self.depolarizing_p, rng)?;
        }
        Ok(state)
    }
}

/// What Eve saw during a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EveLog {
    pub intercept_count: usize,
    pub eve_bits: BitString,
}

impl EveLog {
    fn record(&mut self, bit: bool) {
        self.intercept_count += 1;
        self.eve_bits.push(bit);
    }
}

/// Intercept-resend: measure qubit `q` in the strategy's basis and forward
/// the collapsed state.
pub fn eve_intercept<R: Rng + ?Sized>(
    state: &StateVector,
    q: usize,
    strategy: EveStrategy,
    rng: &mut R,
) -> Result<(StateVector, bool)> {
    let angle = match strategy {
        EveStrategy::InterceptResendRandomBasis => {
            if rng.random_bool(0.5) {
                FRAC_PI_2
            } else {
                0.0
            }
        }
        EveStrategy::InterceptResendFixedBasis { angle } => angle,
    };
    let (bit, forwarded) = state.measure_qubit(q, angle, rng)?;
    Ok((forwarded, bit))
}
