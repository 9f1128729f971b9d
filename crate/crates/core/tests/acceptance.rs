//! Acceptance criteria. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion; exits non-zero if any fails.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scada_qkd::codec::{
    build_simple_encoding, decrypt_features, encrypt_features, to_angles, NormalizedRecord,
    N_FEATURES,
};
use scada_qkd::metrics::{
    chsh_from_samples, composite_index, qber, CompositeWeights, ProtocolReport,
};
use scada_qkd::pipeline::{run_pipeline, RunConfig};
use scada_qkd::protocols::{
    e91_exchange, run_protocol, ChannelModel, EveStrategy, KeyExchangeOutcome, ProtocolKind,
};
use scada_qkd::rng::{derive_rng, StreamPurpose};
use scada_qkd::statevec::{Gate, StateVector};
use scada_qkd::BitString;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bits(s: &str) -> BitString {
    s.parse().unwrap()
}

fn eve() -> ChannelModel {
    ChannelModel::with_eve(EveStrategy::InterceptResendRandomBasis)
}

fn table2_qber_fixtures() -> Outcome {
    let cases = [
        ("00110", "01110", "0.20"),
        ("1001", "0011", "0.50"),
        ("101", "100", "0.33"),
        ("00", "10", "0.50"),
        ("010", "011", "0.33"),
        ("0101", "0101", "0.00"),
        ("10110", "10110", "0.00"),
        ("000000", "000000", "0.00"),
        ("1", "1", "0.00"),
    ];
    let mut bad = Vec::new();
    for (a, b, want) in cases {
        let got = format!(
            "{:.2}",
            qber(&bits(a), &bits(b)).map_err(|e| e.to_string())?
        );
        if got != want {
            bad.push(format!("{a}/{b}: {got} != {want}"));
        }
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} pairs", cases.len())
        } else {
            bad.join("; ")
        },
    )
}

fn noiseless_correctness() -> Outcome {
    let mut keyed = 0usize;
    for seed in 0..10u64 {
        for kind in ProtocolKind::CANONICAL {
            for row in 0..1000u64 {
                let mut rng = derive_rng(seed, Some(kind), StreamPurpose::KeyExchange, row);
                let out = run_protocol(kind, N_FEATURES, &ChannelModel::ideal(), &mut rng)
                    .map_err(|e| e.to_string())?;
                if out.key_size > 0 {
                    keyed += 1;
                    if !out.keys_match || out.qber != Some(0.0) {
                        return Err(format!(
                            "{kind} seed {seed} row {row}: {} vs {}",
                            out.alice_key, out.bob_key
                        ));
                    }
                }
            }
        }
    }
    check(keyed > 0, format!("{keyed} nonempty keys, all matching"))
}

fn sift_rates() -> Outcome {
    let n = 100_000;
    let cases = [
        (ProtocolKind::Bb84, 0.48, 0.52, common::bb84(false).kept),
        (ProtocolKind::B92, 0.23, 0.27, common::b92(false).kept),
        (ProtocolKind::Sarg04, 0.23, 0.27, common::sarg04(false).kept),
        (ProtocolKind::E91, 0.20, 0.24, common::e91(false).kept),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, lo, hi, oracle) in cases {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + kind as u64);
        let out =
            run_protocol(kind, n, &ChannelModel::ideal(), &mut rng).map_err(|e| e.to_string())?;
        let f = out.sift_fraction();
        let pass = (lo..=hi).contains(&f)
            && (lo..=hi).contains(&oracle)
            && common::within_se(f, oracle, n, 3.0);
        ok &= pass;
        parts.push(format!("{kind} {f:.4} (oracle {oracle:.4})"));
    }
    check(ok, parts.join(", "))
}

/// Runs rounds under random-basis Eve until at least `target` key bits exist.
fn eve_key_bits(kind: ProtocolKind, target: usize, seed: u64) -> Result<(usize, usize), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut kept, mut errors) = (0, 0);
    while kept < target {
        let out: KeyExchangeOutcome =
            run_protocol(kind, 50_000, &eve(), &mut rng).map_err(|e| e.to_string())?;
        kept += out.key_size;
        errors += out.alice_key.hamming_distance(&out.bob_key).unwrap();
    }
    Ok((kept, errors))
}

fn eve_detectability() -> Outcome {
    let mut parts = Vec::new();
    let (kept, errors) = eve_key_bits(ProtocolKind::Bb84, 100_000, 400)?;
    let q = errors as f64 / kept as f64;
    let mut ok = (0.225..=0.275).contains(&q);
    parts.push(format!("BB84 {q:.4} over {kept} bits"));
    for kind in [ProtocolKind::B92, ProtocolKind::Sarg04, ProtocolKind::E91] {
        let (kept, errors) = eve_key_bits(kind, 10_000, 400 + kind as u64)?;
        let q = errors as f64 / kept as f64;
        ok &= q > 0.05;
        parts.push(format!("{kind} {q:.4} over {kept} bits"));
    }
    check(ok, parts.join(", "))
}

fn chsh_violation() -> Outcome {
    let pairs = 200_000;
    let ideal = e91_exchange(
        pairs,
        &ChannelModel::ideal(),
        &mut ChaCha8Rng::seed_from_u64(500),
    )
    .map_err(|e| e.to_string())?;
    let ideal =
        chsh_from_samples(ideal.chsh_samples.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let attacked = e91_exchange(pairs, &eve(), &mut ChaCha8Rng::seed_from_u64(501))
        .map_err(|e| e.to_string())?;
    let attacked =
        chsh_from_samples(attacked.chsh_samples.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let oracle = common::chsh_s(true);
    let ok = (2.78..=2.88).contains(&ideal.s.abs())
        && (oracle - SQRT_2).abs() < 1e-12
        && attacked.s.abs() < oracle + 3.0 * attacked.std_error
        && attacked.s.abs() < 2.0 + 3.0 * attacked.std_error;
    check(
        ok,
        format!(
            "ideal |S| = {:.4} ± {:.4}; Eve |S| = {:.4} ± {:.4} (oracle {:.4})",
            ideal.s.abs(),
            ideal.std_error,
            attacked.s.abs(),
            attacked.std_error,
            oracle
        ),
    )
}

fn encryption_involution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    for i in 0..10_000 {
        let features = std::array::from_fn(|_| rng.random::<f64>());
        let r = NormalizedRecord::new(i, features).map_err(|e| e.to_string())?;
        let len = rng.random_range(1..=6);
        let key: BitString = (0..len).map(|_| rng.random_bool(0.5)).collect();
        let back = decrypt_features(&encrypt_features(&r, &key).unwrap(), &key).unwrap();
        if back.features.map(f64::to_bits) != r.features.map(f64::to_bits) {
            return Err(format!("record {i} with key {key} did not round-trip"));
        }
    }
    let half = NormalizedRecord::new(0, [0.5; N_FEATURES]).unwrap();
    let mut keys = 0;
    for len in 1..=6 {
        for word in 0u32..(1 << len) {
            let key: BitString = (0..len).map(|b| word >> b & 1 == 1).collect();
            if encrypt_features(&half, &key).unwrap() != half {
                return Err(format!("0.5 moved under key {key}"));
            }
            keys += 1;
        }
    }
    Ok(format!(
        "10000 round trips bitwise exact; 0.5 fixed under {keys} keys"
    ))
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let mut amps: Vec<Complex64> = (0..1 << n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(n, amps).unwrap()
}

fn deviation(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn statevec_micro_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let gates = [
        Gate::H(0),
        Gate::X(1),
        Gate::Z(2),
        Gate::ry(0, 1.234),
        Gate::ry(2, -2.5),
        Gate::cnot(0, 2),
        Gate::cnot(2, 1),
    ];

    // U^dagger U = I
    let mut unitarity = 0.0f64;
    for g in &gates {
        let m = g.matrix();
        for i in 0..m.len() {
            for j in 0..m.len() {
                let dot: Complex64 = (0..m.len()).map(|k| m[k][i].conj() * m[k][j]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                unitarity = unitarity.max((dot - id).norm());
            }
        }
    }

    let mut involution = 0.0f64;
    let mut additivity = 0.0f64;
    for _ in 0..50 {
        let s = random_state(3, &mut rng);
        for g in [Gate::H(1), Gate::X(0), Gate::Z(2), Gate::cnot(1, 0)] {
            let back = s.apply_gate(&g).unwrap().apply_gate(&g).unwrap();
            involution = involution.max(deviation(&s, &back));
        }
        let (a, b) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let two = s
            .apply_gate(&Gate::ry(1, a))
            .unwrap()
            .apply_gate(&Gate::ry(1, b))
            .unwrap();
        additivity = additivity.max(deviation(&two, &s.apply_gate(&Gate::ry(1, a + b)).unwrap()));
    }

    let shots = 100_000;
    let s = random_state(3, &mut rng);
    let probs = s.probabilities();
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..shots {
        counts[s.measure_all(&mut rng).index] += 1;
    }
    let sampling_ok = counts
        .iter()
        .zip(&probs)
        .all(|(&c, &p)| common::within_se(c as f64 / shots as f64, p, shots, 3.0));

    let features = std::array::from_fn(|_| rng.random::<f64>());
    let angles = to_angles(&NormalizedRecord::new(0, features).unwrap());
    let encoded = build_simple_encoding(&angles).run().unwrap();
    let mut ones = [0usize; N_FEATURES];
    for _ in 0..shots {
        let out = encoded.measure_all(&mut rng);
        for (q, c) in ones.iter_mut().enumerate() {
            *c += out.bit(q) as usize;
        }
    }
    let fidelity_ok = (0..N_FEATURES).all(|q| {
        let p = (angles.thetas[q] / 2.0).sin().powi(2);
        (encoded.prob_one(q).unwrap() - p).abs() < 1e-12
            && common::within_se(ones[q] as f64 / shots as f64, p, shots, 3.0)
    });

    let ok =
        unitarity < 1e-10 && involution < 1e-10 && additivity < 1e-10 && sampling_ok && fidelity_ok;
    check(
        ok,
        format!(
            "unitarity {unitarity:.1e}, involution {involution:.1e}, Ry additivity {additivity:.1e}, sampling {}, encoding fidelity {}",
            if sampling_ok { "ok" } else { "off" },
            if fidelity_ok { "ok" } else { "off" }
        ),
    )
}

fn end_to_end_determinism() -> Outcome {
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/scada_sample.csv");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut cfg = RunConfig::new(&input, d.path());
        cfg.master_seed = 2024;
        run_pipeline(&cfg).map_err(|e| e.to_string())?;
    }
    let mut names = vec!["report.json".to_string()];
    names.extend(
        ProtocolKind::CANONICAL
            .iter()
            .map(|k| format!("compare_{}.csv", k.slug())),
    );
    for name in &names {
        let a = fs::read(dirs[0].path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = fs::read(dirs[1].path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        if a != b {
            return Err(format!("{name} differs between runs"));
        }
        if name.starts_with("compare_") {
            let text = String::from_utf8(a).unwrap();
            if text.lines().next() != Some("Index,AliceKey,BobKey,KeySize,KeysMatch,QBER") {
                return Err(format!("{name} header: {:?}", text.lines().next()));
            }
            if text.lines().count() != 101 {
                return Err(format!("{name}: {} lines", text.lines().count()));
            }
        }
    }
    Ok(format!("{} files byte-identical", names.len()))
}

fn report(kind: ProtocolKind, key: f64, matched: f64, mean: f64, max: f64) -> ProtocolReport {
    ProtocolReport {
        protocol: kind,
        n_records: 100,
        n_keyed_records: 100,
        avg_key_size: key,
        match_rate: matched,
        mean_qber: None,
        avg_mean_diff: mean,
        avg_max_diff: max,
        chsh: None,
        radar: None,
        composite_index: None,
    }
}

fn composite_sanity() -> Outcome {
    let base = vec![
        report(ProtocolKind::Bb84, 3.0, 0.7, 0.10, 0.40),
        report(ProtocolKind::B92, 1.5, 0.8, 0.05, 0.30),
        report(ProtocolKind::E91, 4.5, 1.0, 0.00, 0.00),
        report(ProtocolKind::Sarg04, 1.4, 0.6, 0.20, 0.90),
    ];
    let mut a = base.clone();
    composite_index(&mut a, &CompositeWeights::default()).map_err(|e| e.to_string())?;
    let top = a
        .iter()
        .max_by(|x, y| x.composite_index.partial_cmp(&y.composite_index).unwrap())
        .unwrap();
    let e91 = a
        .iter()
        .find(|r| r.protocol == ProtocolKind::E91)
        .unwrap()
        .composite_index
        .unwrap();

    let mut b: Vec<ProtocolReport> = base.into_iter().rev().collect();
    b.swap(0, 2);
    composite_index(&mut b, &CompositeWeights::default()).map_err(|e| e.to_string())?;
    let permuted_same = a.iter().all(|x| {
        let y = b.iter().find(|y| y.protocol == x.protocol).unwrap();
        x.composite_index.unwrap().to_bits() == y.composite_index.unwrap().to_bits()
    });
    check(
        e91 == 1.0 && top.protocol == ProtocolKind::E91 && permuted_same,
        format!(
            "dominant composite {e91}, top {}, permutation-invariant {permuted_same}",
            top.protocol
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("QBER fixtures", table2_qber_fixtures),
        ("noiseless correctness", noiseless_correctness),
        ("sift and conclusive rates", sift_rates),
        ("eavesdropper detectability", eve_detectability),
        ("CHSH violation", chsh_violation),
        ("encryption involution", encryption_involution),
        ("statevector micro-suite", statevec_micro_suite),
        ("end-to-end determinism", end_to_end_determinism),
        ("composite index sanity", composite_sanity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
