use std::f64::consts::FRAC_1_SQRT_2;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scada_qkd::metrics::{
    aggregate, chsh_from_samples, composite_index, qber, CompositeWeights, ProtocolReport,
    RecordComparison,
};
use scada_qkd::protocols::{e91_exchange, ChannelModel, ChshSample, ProtocolKind};
use scada_qkd::BitString;

fn bits(n: usize) -> impl Strategy<Value = (BitString, BitString)> {
    (
        prop::collection::vec(any::<bool>(), n),
        prop::collection::vec(any::<bool>(), n),
    )
        .prop_map(|(a, b)| (BitString::from(a), BitString::from(b)))
}

fn comparison() -> impl Strategy<Value = RecordComparison> {
    (0u64..1000, 0usize..=6, any::<u64>()).prop_map(|(row, n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alice: BitString = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let bob: BitString = alice
            .bits()
            .iter()
            .map(|&b| if rng.random_bool(0.2) { !b } else { b })
            .collect();
        let diffs = (n > 0).then(|| {
            let m: f64 = rng.random();
            (m * 0.5, m)
        });
        RecordComparison {
            row_index: row,
            key_size: n,
            keys_match: alice == bob,
            qber: qber(&alice, &bob).ok(),
            alice_key: alice,
            bob_key: bob,
            mean_abs_feature_diff: diffs.map(|d| d.0),
            max_abs_feature_diff: diffs.map(|d| d.1),
        }
    })
}

fn report(kind: ProtocolKind, v: [f64; 4]) -> ProtocolReport {
    ProtocolReport {
        protocol: kind,
        n_records: 100,
        n_keyed_records: 100,
        avg_key_size: v[0],
        match_rate: v[1],
        mean_qber: None,
        avg_mean_diff: v[2],
        avg_max_diff: v[3],
        chsh: None,
        radar: None,
        composite_index: None,
    }
}

proptest! {
    #[test]
    fn qber_symmetric_and_bounded((a, b) in (1usize..64).prop_flat_map(bits)) {
        let q = qber(&a, &b).unwrap();
        prop_assert_eq!(q, qber(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert_eq!(qber(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(qber(&a, &a.complement()).unwrap(), 1.0);
    }

    #[test]
    fn aggregate_permutation_invariant(rows in prop::collection::vec(comparison(), 1..60), seed in any::<u64>()) {
        let base = aggregate(ProtocolKind::Bb84, &rows, None).unwrap();
        let mut shuffled = rows.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let other = aggregate(ProtocolKind::Bb84, &shuffled, None).unwrap();
        prop_assert_eq!(serde_json::to_string(&base).unwrap(), serde_json::to_string(&other).unwrap());
        prop_assert!((0.0..=1.0).contains(&base.match_rate));
        prop_assert!((0.0..=6.0).contains(&base.avg_key_size));
    }

    #[test]
    fn composite_absorbs_affine_rescaling(
        metrics in prop::collection::vec(prop::array::uniform4(0.0f64..1.0), 2..5),
        axis in 0usize..4,
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let kinds = ProtocolKind::CANONICAL;
        let mut a: Vec<ProtocolReport> = metrics.iter().zip(kinds).map(|(m, k)| report(k, *m)).collect();
        let mut b: Vec<ProtocolReport> = metrics
            .iter()
            .zip(kinds)
            .map(|(m, k)| {
                let mut m = *m;
                m[axis] = m[axis] * scale + shift;
                report(k, m)
            })
            .collect();
        composite_index(&mut a, &CompositeWeights::default()).unwrap();
        composite_index(&mut b, &CompositeWeights::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.composite_index.unwrap() - y.composite_index.unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn singlet_correlators_match_cosine() {
    let n = 200_000;
    let out = e91_exchange(
        n,
        &ChannelModel::ideal(),
        &mut ChaCha8Rng::seed_from_u64(31),
    )
    .unwrap();
    let est = chsh_from_samples(out.chsh_samples.as_ref().unwrap()).unwrap();
    for c in &est.correlators {
        let expect = -(c.alice_angle - c.bob_angle).cos();
        assert!((expect.abs() - FRAC_1_SQRT_2).abs() < 1e-12);
        let se = ((1.0 - expect * expect) / c.samples as f64).sqrt();
        assert!((c.value - expect).abs() <= 3.0 * se, "{c:?}");
        assert!(c.value.abs() <= 1.0);
    }
    assert!(est.s > 0.0);
}

#[test]
fn uncorrelated_bits_give_small_s() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let samples: Vec<ChshSample> = (0..80_000)
        .map(|i| ChshSample {
            alice_setting: [0, 2][i % 2],
            bob_setting: [0, 2][(i / 2) % 2],
            alice_bit: rng.random_bool(0.5),
            bob_bit: rng.random_bool(0.5),
        })
        .collect();
    let est = chsh_from_samples(&samples).unwrap();
    assert!(
        est.s.abs() <= 4.0 * est.std_error,
        "S = {} ± {}",
        est.s,
        est.std_error
    );
}
