//! Feature normalization, angle encoding and key-driven feature masking.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::BitString;
use crate::statevec::{Gate, StateVector};

/// Telemetry fields per record, one qubit each.
pub const N_FEATURES: usize = 6;

/// Default depth of the layered ansatz.
pub const DEFAULT_LAYERS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub row_index: u64,
    pub values: [f64; N_FEATURES],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRecord {
    pub row_index: u64,
    pub features: [f64; N_FEATURES],
}

impl NormalizedRecord {
    /// Values are snapped to the nearest multiple of 2^-53 (a shift of at
    /// most 2^-54), so `1 - f` is exact and encryption round-trips bitwise.
    pub fn new(row_index: u64, features: [f64; N_FEATURES]) -> Result<Self> {
        check_unit_range(&features)?;
        let features = features.map(snap);
        Ok(Self {
            row_index,
            features,
        })
    }
}

const GRID: f64 = (1u64 << 53) as f64;

fn snap(f: f64) -> f64 {
    (f * GRID).round() / GRID
}

fn check_unit_range(features: &[f64; N_FEATURES]) -> Result<()> {
    if let Some(f) = features.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Input(format!("feature {f} outside [0, 1]")));
    }
    Ok(())
}

fn check_on_grid(features: &[f64; N_FEATURES]) -> Result<()> {
    if let Some(f) = features.iter().find(|f| snap(**f) != **f) {
        return Err(Error::Input(format!(
            "feature {f} is not a multiple of 2^-53; build records with NormalizedRecord::new"
        )));
    }
    Ok(())
}

/// Per-column `(min, max)` used for min-max scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnBounds {
    pub min: [f64; N_FEATURES],
    pub max: [f64; N_FEATURES],
}

impl ColumnBounds {
    fn empty() -> Self {
        Self {
            min: [f64::INFINITY; N_FEATURES],
            max: [f64::NEG_INFINITY; N_FEATURES],
        }
    }

    fn include(&mut self, values: &[f64; N_FEATURES]) {
        for (i, &v) in values.iter().enumerate() {
            self.min[i] = self.min[i].min(v);
            self.max[i] = self.max[i].max(v);
        }
    }

    /// Single pass over a record stream.
    pub fn scan<'a>(records: impl IntoIterator<Item = &'a RawRecord>) -> Result<Self> {
        let mut bounds = Self::empty();
        let mut seen = false;
        for r in records {
            check_finite(r)?;
            bounds.include(&r.values);
            seen = true;
        }
        if !seen {
            return Err(Error::Input("cannot normalize an empty dataset".into()));
        }
        Ok(bounds)
    }

    /// Column indices where `max == min`.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..N_FEATURES)
            .filter(|&i| self.max[i] == self.min[i])
            .collect()
    }

    /// Scales one record. Constant columns map to 0; values outside the bounds
    /// are clamped to [0, 1].
    pub fn normalize(&self, record: &RawRecord) -> Result<NormalizedRecord> {
        check_finite(record)?;
        let mut features = [0.0; N_FEATURES];
        for (i, f) in features.iter_mut().enumerate() {
            let range = self.max[i] - self.min[i];
            *f = if range > 0.0 {
                ((record.values[i] - self.min[i]) / range).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
        NormalizedRecord::new(record.row_index, features)
    }
}

fn check_finite(r: &RawRecord) -> Result<()> {
    if r.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input(format!(
            "record {} has a non-finite value",
            r.row_index
        )));
    }
    Ok(())
}

/// Column-wise min-max scaling of a whole dataset.
pub fn normalize_dataset(records: &[RawRecord]) -> Result<(Vec<NormalizedRecord>, ColumnBounds)> {
    let bounds = ColumnBounds::scan(records)?;
    for col in bounds.constant_columns() {
        warn!(
            "column {col} is constant ({}); normalized to 0.0",
            bounds.min[col]
        );
    }
    let normalized = records
        .iter()
        .map(|r| bounds.normalize(r))
        .collect::<Result<Vec<_>>>()?;
    Ok((normalized, bounds))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleVector {
    pub thetas: [f64; N_FEATURES],
}

/// `theta_i = pi * f_i`.
pub fn to_angles(record: &NormalizedRecord) -> AngleVector {
    AngleVector {
        thetas: record.features.map(|f| PI * f),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncodingLayout {
    SimpleRy,
    LayeredAnsatz {
        layers: usize,
        initial_hadamard: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingCircuit {
    pub layout: EncodingLayout,
    pub gates: Vec<Gate>,
}

impl EncodingCircuit {
    pub fn n_qubits(&self) -> usize {
        N_FEATURES
    }

    /// Applies the circuit to `|0...0>`.
    pub fn run(&self) -> Result<StateVector> {
        StateVector::zero(N_FEATURES)?.apply_all(&self.gates)
    }

    /// Number of Ry layers in the gate list.
    pub fn rotation_layers(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Ry { .. }))
            .count()
            / N_FEATURES
    }
}

/// One `Ry(theta_i)` on qubit `i`.
pub fn build_simple_encoding(angles: &AngleVector) -> EncodingCircuit {
    EncodingCircuit {
        layout: EncodingLayout::SimpleRy,
        gates: angles
            .thetas
            .iter()
            .enumerate()
            .map(|(q, &theta)| Gate::ry(q, theta))
            .collect(),
    }
}

/// Layered ansatz: optional H on every qubit, then `layers` repetitions of
/// `[Ry(theta_i) on each qubit, CNOT chain 0->1->...->5, Z on qubit 5]`.
pub fn build_layered_ansatz(
    angles: &AngleVector,
    layers: usize,
    initial_hadamard: bool,
) -> Result<EncodingCircuit> {
    if layers == 0 {
        return Err(Error::Input(
            "layered ansatz needs at least one layer".into(),
        ));
    }
    let mut gates = Vec::with_capacity(N_FEATURES + layers * (2 * N_FEATURES));
    if initial_hadamard {
        gates.extend((0..N_FEATURES).map(Gate::H));
    }
    for _ in 0..layers {
        gates.extend(
            angles
                .thetas
                .iter()
                .enumerate()
                .map(|(q, &theta)| Gate::ry(q, theta)),
        );
        gates.extend((0..N_FEATURES - 1).map(|q| Gate::cnot(q, q + 1)));
        gates.push(Gate::Z(N_FEATURES - 1));
    }
    Ok(EncodingCircuit {
        layout: EncodingLayout::LayeredAnsatz {
            layers,
            initial_hadamard,
        },
        gates,
    })
}

/// `f' = f` where the key bit is 0 and `1 - f` where it is 1. The key is
/// cycled across the six features.
pub fn encrypt_features(record: &NormalizedRecord, key: &BitString) -> Result<NormalizedRecord> {
    if key.is_empty() {
        return Err(Error::NoKey {
            row_index: record.row_index,
        });
    }
    check_unit_range(&record.features)?;
    check_on_grid(&record.features)?;
    let bits = key.bits();
    let mut features = record.features;
    for (i, f) in features.iter_mut().enumerate() {
        if bits[i % bits.len()] {
            *f = 1.0 - *f;
        }
    }
    Ok(NormalizedRecord {
        row_index: record.row_index,
        features,
    })
}

/// Inverse of [`encrypt_features`]; the map is its own inverse.
pub fn decrypt_features(record: &NormalizedRecord, key: &BitString) -> Result<NormalizedRecord> {
    encrypt_features(record, key)
}
