//! QBER, CHSH estimation, per-protocol aggregates and the composite index.
//!
//! Aggregates sum sorted values so results are bit-identical for any record
//! order (and therefore any worker count).

use serde::{Deserialize, Serialize};

use crate::codec::{NormalizedRecord, N_FEATURES};
use crate::error::{Error, Result};
use crate::key::BitString;
use crate::protocols::{
    ChshSample, KeyExchangeOutcome, ProtocolKind, E91_ALICE_ANGLES, E91_BOB_ANGLES,
};

/// Fraction of mismatched bits.
pub fn qber(alice_key: &BitString, bob_key: &BitString) -> Result<f64> {
    if alice_key.is_empty() {
        return Err(Error::Input("QBER of an empty key is undefined".into()));
    }
    let errors = alice_key.hamming_distance(bob_key).ok_or_else(|| {
        Error::Input(format!(
            "key length mismatch ({} vs {})",
            alice_key.len(),
            bob_key.len()
        ))
    })?;
    Ok(errors as f64 / alice_key.len() as f64)
}

/// Setting pairs entering S, with their sign: `(alice, bob, sign)`.
pub const CHSH_TERMS: [(usize, usize, f64); 4] =
    [(0, 0, -1.0), (0, 2, 1.0), (2, 0, -1.0), (2, 2, -1.0)];

/// Human-readable form of [`CHSH_TERMS`], embedded in reports.
pub const CHSH_CONVENTION: &str =
    "S = -E(a0,b0) + E(a0,b2) - E(a2,b0) - E(a2,b2); a0=0, a2=pi/2, b0=pi/4, b2=3pi/4 (radians about Y); \
     E = mean of (-1)^(alice_bit xor bob_bit); ideal singlet gives S = +2*sqrt(2)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlator {
    pub alice_setting: usize,
    pub bob_setting: usize,
    pub alice_angle: f64,
    pub bob_angle: f64,
    pub value: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub correlators: Vec<Correlator>,
    pub s: f64,
    /// Binomial standard error of `s`.
    pub std_error: f64,
    pub convention: String,
}

impl ChshEstimate {
    pub fn correlator(&self, alice_setting: usize, bob_setting: usize) -> Option<&Correlator> {
        self.correlators
            .iter()
            .find(|c| c.alice_setting == alice_setting && c.bob_setting == bob_setting)
    }

    pub fn sample_counts(&self) -> Vec<usize> {
        self.correlators.iter().map(|c| c.samples).collect()
    }
}

/// Estimates S from measured pairs. Samples at non-CHSH settings are ignored.
pub fn chsh_from_samples(samples: &[ChshSample]) -> Result<ChshEstimate> {
    let mut correlators = Vec::with_capacity(CHSH_TERMS.len());
    let mut s = 0.0;
    let mut variance = 0.0;
    for &(a, b, sign) in &CHSH_TERMS {
        let (n, agree) = samples
            .iter()
            .filter(|x| x.alice_setting == a && x.bob_setting == b)
            .fold((0usize, 0i64), |(n, sum), x| {
                (n + 1, sum + if x.alice_bit == x.bob_bit { 1 } else { -1 })
            });
        if n == 0 {
            return Err(Error::InsufficientSamples { alice: a, bob: b });
        }
        let e = agree as f64 / n as f64;
        s += sign * e;
        variance += (1.0 - e * e) / n as f64;
        correlators.push(Correlator {
            alice_setting: a,
            bob_setting: b,
            alice_angle: E91_ALICE_ANGLES[a],
            bob_angle: E91_BOB_ANGLES[b],
            value: e,
            samples: n,
        });
    }
    Ok(ChshEstimate {
        correlators,
        s,
        std_error: variance.sqrt(),
        convention: CHSH_CONVENTION.to_string(),
    })
}

/// One row of the per-record comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordComparison {
    pub row_index: u64,
    pub alice_key: BitString,
    pub bob_key: BitString,
    pub key_size: usize,
    pub keys_match: bool,
    pub qber: Option<f64>,
    /// `None` when the record had no key and was not encrypted.
    pub mean_abs_feature_diff: Option<f64>,
    pub max_abs_feature_diff: Option<f64>,
}

impl RecordComparison {
    /// Alice's original features against Bob's decryption of her ciphertext.
    pub fn new(
        outcome: &KeyExchangeOutcome,
        original: &NormalizedRecord,
        bob_decrypted: Option<&NormalizedRecord>,
    ) -> Self {
        let diffs = bob_decrypted.map(|dec| {
            let d: [f64; N_FEATURES] =
                std::array::from_fn(|i| (original.features[i] - dec.features[i]).abs());
            let mean = d.iter().sum::<f64>() / N_FEATURES as f64;
            let max = d.iter().copied().fold(0.0, f64::max);
            (mean, max)
        });
        Self {
            row_index: original.row_index,
            alice_key: outcome.alice_key.clone(),
            bob_key: outcome.bob_key.clone(),
            key_size: outcome.key_size,
            keys_match: outcome.keys_match,
            qber: outcome.qber,
            mean_abs_feature_diff: diffs.map(|d| d.0),
            max_abs_feature_diff: diffs.map(|d| d.1),
        }
    }
}

/// Normalized radar axes, each in [0, 1], higher is better.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarAxes {
    pub key_size: f64,
    pub match_rate: f64,
    pub inv_mean_diff: f64,
    pub inv_max_diff: f64,
}

impl RadarAxes {
    pub fn values(&self) -> [f64; 4] {
        [
            self.key_size,
            self.match_rate,
            self.inv_mean_diff,
            self.inv_max_diff,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub protocol: ProtocolKind,
    pub n_records: usize,
    /// Records with a nonempty key.
    pub n_keyed_records: usize,
    pub avg_key_size: f64,
    pub match_rate: f64,
    pub mean_qber: Option<f64>,
    pub avg_mean_diff: f64,
    pub avg_max_diff: f64,
    pub chsh: Option<ChshEstimate>,
    pub radar: Option<RadarAxes>,
    pub composite_index: Option<f64>,
}

/// Sum in a fixed order independent of input order.
fn stable_mean(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    Some(values.into_iter().sum::<f64>() / n)
}

pub fn aggregate(
    protocol: ProtocolKind,
    comparisons: &[RecordComparison],
    chsh: Option<ChshEstimate>,
) -> Result<ProtocolReport> {
    if comparisons.is_empty() {
        return Err(Error::Input("cannot aggregate zero records".into()));
    }
    let keyed: Vec<&RecordComparison> = comparisons.iter().filter(|c| c.key_size > 0).collect();
    let avg_key_size =
        comparisons.iter().map(|c| c.key_size).sum::<usize>() as f64 / comparisons.len() as f64;
    let match_rate = if keyed.is_empty() {
        0.0
    } else {
        keyed.iter().filter(|c| c.keys_match).count() as f64 / keyed.len() as f64
    };
    let mean_qber = stable_mean(comparisons.iter().filter_map(|c| c.qber).collect());
    let avg_mean_diff = stable_mean(
        comparisons
            .iter()
            .filter_map(|c| c.mean_abs_feature_diff)
            .collect(),
    )
    .unwrap_or(0.0);
    let avg_max_diff = stable_mean(
        comparisons
            .iter()
            .filter_map(|c| c.max_abs_feature_diff)
            .collect(),
    )
    .unwrap_or(0.0);
    Ok(ProtocolReport {
        protocol,
        n_records: comparisons.len(),
        n_keyed_records: keyed.len(),
        avg_key_size,
        match_rate,
        mean_qber,
        avg_mean_diff,
        avg_max_diff,
        chsh,
        radar: None,
        composite_index: None,
    })
}

/// Relative weights of the four radar axes in the composite index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeWeights {
    pub key_size: f64,
    pub match_rate: f64,
    pub inv_mean_diff: f64,
    pub inv_max_diff: f64,
}

impl Default for CompositeWeights {
    fn default() -> Self {
        Self {
            key_size: 1.0,
            match_rate: 1.0,
            inv_mean_diff: 1.0,
            inv_max_diff: 1.0,
        }
    }
}

impl CompositeWeights {
    fn as_array(&self) -> [f64; 4] {
        [
            self.key_size,
            self.match_rate,
            self.inv_mean_diff,
            self.inv_max_diff,
        ]
    }
}

/// Min-max normalizes each axis across protocols (a constant axis scores 1.0
/// everywhere) and stores the weighted mean as `composite_index`.
pub fn composite_index(reports: &mut [ProtocolReport], weights: &CompositeWeights) -> Result<()> {
    if reports.len() < 2 {
        return Err(Error::Input(
            "composite index needs at least two protocols".into(),
        ));
    }
    let w = weights.as_array();
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Config(
            "composite weights must be non-negative with a positive sum".into(),
        ));
    }
    // Lower diffs are better: negate before normalizing.
    let raw: Vec<[f64; 4]> = reports
        .iter()
        .map(|r| {
            [
                r.avg_key_size,
                r.match_rate,
                -r.avg_mean_diff,
                -r.avg_max_diff,
            ]
        })
        .collect();
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for row in &raw {
        for k in 0..4 {
            lo[k] = lo[k].min(row[k]);
            hi[k] = hi[k].max(row[k]);
        }
    }
    let wsum: f64 = w.iter().sum();
    for (report, row) in reports.iter_mut().zip(&raw) {
        let axes: [f64; 4] = std::array::from_fn(|k| {
            if hi[k] > lo[k] {
                (row[k] - lo[k]) / (hi[k] - lo[k])
            } else {
                1.0
            }
        });
        let composite = axes.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() / wsum;
        report.radar = Some(RadarAxes {
            key_size: axes[0],
            match_rate: axes[1],
            inv_mean_diff: axes[2],
            inv_max_diff: axes[3],
        });
        report.composite_index = Some(composite);
    }
    Ok(())
}
