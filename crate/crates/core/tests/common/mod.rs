//! Exact enumeration oracles. Every state that occurs in these protocols is a
//! real single-qubit vector, so branches are tracked as `(probability, [f64; 2])`
//! with no dependency on the simulator under test.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

pub type Qubit = [f64; 2];

pub const Z: f64 = 0.0;
pub const X: f64 = FRAC_PI_2;

/// Eigenvector for `outcome` of the Z basis rotated by `angle` about Y.
pub fn eigen(angle: f64, outcome: bool) -> Qubit {
    let (s, c) = (angle / 2.0).sin_cos();
    if outcome {
        [-s, c]
    } else {
        [c, s]
    }
}

pub fn prob(state: Qubit, angle: f64, outcome: bool) -> f64 {
    let e = eigen(angle, outcome);
    let amp = e[0] * state[0] + e[1] * state[1];
    amp * amp
}

/// Random-basis (Z or X, 1/2 each) intercept-resend.
pub fn eve_branches(state: Qubit) -> Vec<(f64, Qubit)> {
    let mut out = Vec::new();
    for basis in [Z, X] {
        for outcome in [false, true] {
            let p = 0.5 * prob(state, basis, outcome);
            if p > 0.0 {
                out.push((p, eigen(basis, outcome)));
            }
        }
    }
    out
}

fn no_eve(state: Qubit) -> Vec<(f64, Qubit)> {
    vec![(1.0, state)]
}

fn channel(state: Qubit, eve: bool) -> Vec<(f64, Qubit)> {
    if eve {
        eve_branches(state)
    } else {
        no_eve(state)
    }
}

/// (P(key bit), P(key bit and error)) accumulator.
#[derive(Default, Debug, Clone, Copy)]
pub struct Tally {
    pub kept: f64,
    pub errors: f64,
}

impl Tally {
    pub fn qber(&self) -> f64 {
        self.errors / self.kept
    }
}

/// BB84, averaged over Alice basis/bit and Bob basis.
pub fn bb84(eve: bool) -> Tally {
    let mut t = Tally::default();
    for a_basis in [Z, X] {
        for bit in [false, true] {
            for b_basis in [Z, X] {
                let w = 0.125;
                if a_basis != b_basis {
                    continue;
                }
                for (p, s) in channel(eigen(a_basis, bit), eve) {
                    t.kept += w * p;
                    t.errors += w * p * prob(s, b_basis, !bit);
                }
            }
        }
    }
    t
}

/// B92: bit 0 -> |0>, bit 1 -> |+>; outcome 1 is conclusive, Bob's bit is
/// `basis == Z`.
pub fn b92(eve: bool) -> Tally {
    let mut t = Tally::default();
    for bit in [false, true] {
        let sent = if bit {
            eigen(X, false)
        } else {
            eigen(Z, false)
        };
        for (p, s) in channel(sent, eve) {
            for b_basis in [Z, X] {
                let w = 0.25 * p * prob(s, b_basis, true);
                let bob_bit = b_basis == Z;
                t.kept += w;
                if bob_bit != bit {
                    t.errors += w;
                }
            }
        }
    }
    t
}

/// SARG04: bit = basis of the sent state (Z=0, X=1), partner drawn from the
/// other basis, conclusive when the outcome excludes the member sharing Bob's
/// basis.
pub fn sarg04(eve: bool) -> Tally {
    let mut t = Tally::default();
    for sent_basis in [Z, X] {
        let other = if sent_basis == Z { X } else { Z };
        for sent_val in [false, true] {
            for partner_val in [false, true] {
                for (p, s) in channel(eigen(sent_basis, sent_val), eve) {
                    for b_basis in [Z, X] {
                        for outcome in [false, true] {
                            let w = 0.0625 * p * prob(s, b_basis, outcome);
                            let (same_val, inferred_basis) = if b_basis == sent_basis {
                                (sent_val, other)
                            } else {
                                (partner_val, sent_basis)
                            };
                            if same_val != outcome {
                                t.kept += w;
                                if inferred_basis != sent_basis {
                                    t.errors += w;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    t
}

/// Two-way I/Z scheme with random-basis Eve on both legs.
pub fn sgs04(eve: bool) -> Tally {
    let mut t = Tally::default();
    for prep in [false, true] {
        for bit in [false, true] {
            for (p1, s1) in channel(eigen(X, prep), eve) {
                let encoded = if bit { [s1[0], -s1[1]] } else { s1 };
                for (p2, s2) in channel(encoded, eve) {
                    let w = 0.25 * p1 * p2;
                    t.kept += w;
                    // decoded = measured xor prep; error when decoded != bit
                    t.errors += w * prob(s2, X, !(prep ^ bit));
                }
            }
        }
    }
    t
}

pub const ALICE: [f64; 3] = [0.0, FRAC_PI_4, FRAC_PI_2];
pub const BOB: [f64; 3] = [FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4];

/// Joint outcome probabilities of Alice at `a` and Bob at `b` on a singlet,
/// optionally with random-basis Eve on Bob's half.
///
/// Singlet rule: if Bob's half is found in `eigen(e, o)`, Alice's half is in
/// `eigen(e, !o)`.
pub fn singlet_joint(a: f64, b: f64, eve: bool) -> [[f64; 2]; 2] {
    let mut joint = [[0.0; 2]; 2];
    if eve {
        for e in [Z, X] {
            for eve_out in [false, true] {
                let w = 0.5 * 0.5;
                let alice_state = eigen(e, !eve_out);
                let bob_state = eigen(e, eve_out);
                for x in [false, true] {
                    for y in [false, true] {
                        joint[x as usize][y as usize] +=
                            w * prob(alice_state, a, x) * prob(bob_state, b, y);
                    }
                }
            }
        }
    } else {
        // Condition on Alice's outcome (each 1/2 for the singlet).
        for x in [false, true] {
            let bob_state = eigen(a, !x);
            for y in [false, true] {
                joint[x as usize][y as usize] += 0.5 * prob(bob_state, b, y);
            }
        }
    }
    joint
}

pub fn correlator(a: f64, b: f64, eve: bool) -> f64 {
    let j = singlet_joint(a, b, eve);
    j[0][0] + j[1][1] - j[0][1] - j[1][0]
}

/// S with the library's sign convention: -E00 + E02 - E20 - E22.
pub fn chsh_s(eve: bool) -> f64 {
    -correlator(ALICE[0], BOB[0], eve) + correlator(ALICE[0], BOB[2], eve)
        - correlator(ALICE[2], BOB[0], eve)
        - correlator(ALICE[2], BOB[2], eve)
}

/// E91 key statistics: same-setting combinations, Bob's bit inverted.
pub fn e91(eve: bool) -> Tally {
    let mut t = Tally::default();
    for a in ALICE {
        for b in BOB {
            if a != b {
                continue;
            }
            let j = singlet_joint(a, b, eve);
            let w = 1.0 / 9.0;
            t.kept += w;
            // error when alice bit == !bob bit, i.e. alice == bob
            t.errors += w * (j[0][0] + j[1][1]);
        }
    }
    t
}

/// BB84 matched-basis error from a stochastic Pauli hitting with probability `p`.
pub fn bb84_depolarized_qber(p: f64) -> f64 {
    let paulis: [fn(Qubit) -> Qubit; 3] = [
        |s| [s[1], s[0]],  // X
        |s| [-s[1], s[0]], // Z·X
        |s| [s[0], -s[1]], // Z
    ];
    let mut err = 0.0;
    for basis in [Z, X] {
        for bit in [false, true] {
            let s = eigen(basis, bit);
            let flip: f64 = paulis.iter().map(|f| prob(f(s), basis, !bit)).sum::<f64>() / 3.0;
            err += 0.25 * p * flip;
        }
    }
    err
}

/// True when `observed` is within `k` binomial standard errors of `p` over `n` trials.
pub fn within_se(observed: f64, p: f64, n: usize, k: f64) -> bool {
    let se = (p * (1.0 - p) / n as f64).sqrt();
    (observed - p).abs() <= k * se
}
