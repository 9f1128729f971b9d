//! Dense statevector simulator with the small gate set the protocols and the
//! feature-encoding circuits need.
//!
//! Basis index convention: qubit 0 is the least-significant bit of the
//! amplitude index. Bitstrings produced by [`MeasurementOutcome::to_bitstring`]
//! list qubit 0 first.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 8;

/// Tolerance used when validating that a state is normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Structural(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from explicit amplitudes, checking length and norm.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_register(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::Structural(format!(
                "expected {} amplitudes for {n_qubits} qubits, got {}",
                1usize << n_qubits,
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::Input("non-finite amplitude".into()));
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Input(format!(
                "state is not normalized (norm^2 = {norm})"
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|amplitude(x)|^2` for every basis index `x`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal probability that qubit `q` reads 1 in the Z basis.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Largest amplitude deviation after removing a global phase.
    ///
    /// Returns `f64::INFINITY` when the registers differ in size.
    pub fn distance_up_to_phase(&self, other: &StateVector) -> f64 {
        if self.n_qubits != other.n_qubits {
            return f64::INFINITY;
        }
        // Align on the largest amplitude of `self`.
        let (pivot, _) = self
            .amplitudes
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, a)| {
                if a.norm_sqr() > best.1 {
                    (i, a.norm_sqr())
                } else {
                    best
                }
            });
        let a = self.amplitudes[pivot];
        let b = other.amplitudes[pivot];
        let phase = if b.norm() > 0.0 && a.norm() > 0.0 {
            (a / a.norm()) / (b / b.norm())
        } else {
            ONE
        };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| (x - y * phase).norm())
            .fold(0.0, f64::max)
    }

    /// Applies `gate`, returning a new state. `self` is left untouched.
    pub fn apply_gate(&self, gate: &Gate) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_in_place(gate)?;
        Ok(out)
    }

    /// Applies every gate in order.
    pub fn apply_all<'a>(&self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<StateVector> {
        let mut out = self.clone();
        for gate in gates {
            out.apply_in_place(gate)?;
        }
        Ok(out)
    }

    pub(crate) fn apply_in_place(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::Cnot { control, target } => {
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for i in 0..self.amplitudes.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::Ry { qubit: q, .. } => {
                let m = gate.single_qubit_matrix().expect("single-qubit gate");
                self.apply_single(q, &m);
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, q: usize, m: &[[Complex64; 2]; 2]) {
        let mask = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Samples a full computational-basis measurement, p(x) = |amplitude(x)|^2.
    pub fn measure_all<R: Rng + ?Sized>(&self, rng: &mut R) -> MeasurementOutcome {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut index = self.amplitudes.len() - 1;
        for (i, a) in self.amplitudes.iter().enumerate() {
            acc += a.norm_sqr();
            if r < acc {
                index = i;
                break;
            }
        }
        // Skip zero-probability tail entries if rounding left `r` above the total.
        if self.amplitudes[index].norm_sqr() == 0.0 {
            if let Some(i) = self.amplitudes.iter().rposition(|a| a.norm_sqr() > 0.0) {
                index = i;
            }
        }
        let post_state = StateVector::basis(self.n_qubits, index).expect("index in range");
        MeasurementOutcome {
            index,
            n_qubits: self.n_qubits,
            post_state,
        }
    }

    /// Measures qubit `q` in the Z basis rotated by `basis_angle` about Y.
    ///
    /// `basis_angle = 0` is the Z basis, `pi/2` the X basis. Outcome 0 is the
    /// eigenstate `Ry(basis_angle)|0>`. The returned state is collapsed onto
    /// the observed eigenstate and renormalized.
    pub fn measure_qubit<R: Rng + ?Sized>(
        &self,
        q: usize,
        basis_angle: f64,
        rng: &mut R,
    ) -> Result<(bool, StateVector)> {
        self.check_qubit(q)?;
        if !basis_angle.is_finite() {
            return Err(Error::Input("non-finite basis angle".into()));
        }
        let rotate = basis_angle != 0.0;
        let mut work = self.clone();
        if rotate {
            work.apply_in_place(&Gate::Ry {
                qubit: q,
                theta: -basis_angle,
            })?;
        }
        let p1 = work.prob_one(q)?;
        let bit = rng.random::<f64>() < p1;
        let keep = if bit { p1 } else { 1.0 - p1 };
        let scale = 1.0 / keep.sqrt();
        let mask = 1usize << q;
        for (i, a) in work.amplitudes.iter_mut().enumerate() {
            if (i & mask != 0) == bit {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
        if rotate {
            work.apply_in_place(&Gate::Ry {
                qubit: q,
                theta: basis_angle,
            })?;
        }
        Ok((bit, work))
    }

    /// Single-qubit depolarizing channel realized as a stochastic Pauli.
    ///
    /// With probability `p` one of X, Z·X or Z (uniform) hits qubit `q`.
    pub fn depolarize<R: Rng + ?Sized>(
        &self,
        q: usize,
        p: f64,
        rng: &mut R,
    ) -> Result<StateVector> {
        self.check_qubit(q)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!(
                "depolarizing probability {p} outside [0, 1]"
            )));
        }
        let mut out = self.clone();
        if p > 0.0 && rng.random_bool(p) {
            match rng.random_range(0..3u8) {
                0 => out.apply_in_place(&Gate::X(q))?,
                1 => {
                    out.apply_in_place(&Gate::X(q))?;
                    out.apply_in_place(&Gate::Z(q))?;
                }
                _ => out.apply_in_place(&Gate::Z(q))?,
            }
        }
        Ok(out)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::Structural(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }
}

/// The two-qubit singlet `(|01> - |10>)/sqrt(2)`.
pub fn make_singlet() -> StateVector {
    StateVector {
        n_qubits: 2,
        amplitudes: vec![
            ZERO,
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(-FRAC_1_SQRT_2, 0.0),
            ZERO,
        ],
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Structural(format!(
            "register size {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    Ry { qubit: usize, theta: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn ry(qubit: usize, theta: f64) -> Self {
        Gate::Ry { qubit, theta }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::Ry { qubit: q, .. } => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Z(_) => "z",
            Gate::Ry { .. } => "ry",
            Gate::Cnot { .. } => "cx",
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if let Gate::Ry { theta, .. } = self {
            if !theta.is_finite() {
                return Err(Error::Input("non-finite rotation angle".into()));
            }
        }
        if let Gate::Cnot { control, target } = self {
            if control == target {
                return Err(Error::Structural(format!(
                    "CNOT control and target are both qubit {control}"
                )));
            }
        }
        if let Some(q) = self.qubits().into_iter().find(|&q| q >= n_qubits) {
            return Err(Error::Structural(format!(
                "{} targets qubit {q} but register has {n_qubits} qubits",
                self.name()
            )));
        }
        Ok(())
    }

    fn single_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let r = |x: f64| Complex64::new(x, 0.0);
        match *self {
            Gate::H(_) => Some([
                [r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)],
                [r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)],
            ]),
            Gate::X(_) => Some([[ZERO, ONE], [ONE, ZERO]]),
            Gate::Z(_) => Some([[ONE, ZERO], [ZERO, -ONE]]),
            Gate::Ry { theta, .. } => {
                let (s, c) = (theta / 2.0).sin_cos();
                Some([[r(c), r(-s)], [r(s), r(c)]])
            }
            Gate::Cnot { .. } => None,
        }
    }

    /// Dense matrix on the gate's own qubits, row-major.
    ///
    /// For CNOT the local index has the control as bit 0 and the target as bit 1.
    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        match self.single_qubit_matrix() {
            Some(m) => m.iter().map(|row| row.to_vec()).collect(),
            None => {
                let mut m = vec![vec![ZERO; 4]; 4];
                for (col, row) in [0usize, 3, 2, 1].into_iter().enumerate() {
                    m[row][col] = ONE;
                }
                m
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Ry { qubit, theta } => write!(f, "ry({theta:.6}) q{qubit}"),
            Gate::Cnot { control, target } => write!(f, "cx q{control}, q{target}"),
            g => write!(f, "{} q{}", g.name(), g.qubits()[0]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub n_qubits: usize,
    pub post_state: StateVector,
}

impl MeasurementOutcome {
    pub fn bit(&self, q: usize) -> bool {
        self.index >> q & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.n_qubits).map(|q| self.bit(q)).collect()
    }

    /// Qubit 0 first.
    pub fn to_bitstring(&self) -> String {
        (0..self.n_qubits)
            .map(|q| if self.bit(q) { '1' } else { '0' })
            .collect()
    }
}
