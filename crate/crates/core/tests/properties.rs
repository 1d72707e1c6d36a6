use std::collections::HashSet;

use drivepat::markov::state_of;
use drivepat::pmd::pmd_step;
use drivepat::*;
use proptest::prelude::*;

fn q() -> QuantizationConfig {
    QuantizationConfig::default()
}

prop_compose! {
    fn any_point()(
        t in 0u64..10_000,
        lat in -95.0f64..95.0,
        lng in -185.0f64..185.0,
        speed in -10.0f64..300.0,
        acc in -15.0f64..15.0,
        heading in -5.0f64..365.0,
    ) -> DataPoint {
        DataPoint { t, lat, lng, speed, acc, heading }
    }
}

/// Points on a small state grid, so transitions repeat.
fn grid_trajectory(max_len: usize) -> impl Strategy<Value = Trajectory> {
    prop::collection::vec((0u8..4, -2i8..=2, 0u8..4), 2..max_len).prop_map(|cells| {
        let points = cells
            .iter()
            .enumerate()
            .map(|(t, &(s, a, h))| DataPoint {
                t: t as u64,
                lat: 40.0,
                lng: -83.0,
                speed: 10.0 * s as f64,
                acc: 0.25 * a as f64,
                heading: 90.0 * h as f64,
            })
            .collect();
        Trajectory::new("g", points)
    })
}

fn sample_states() -> Vec<State> {
    let mut states = Vec::new();
    for s in 0..4 {
        for a in -2..=2 {
            for h in 0..4 {
                states.push(
                    State::new(10.0 * s as f64, 0.25 * a as f64, 90.0 * h as f64, &q()).unwrap(),
                );
            }
        }
    }
    states
}

proptest! {
    #[test]
    fn quantization_is_idempotent(p in any_point()) {
        let once = quantize_point(&p, &q());
        let twice = quantize_point(&once, &q());
        prop_assert_eq!(once.acc.to_bits(), twice.acc.to_bits());
        prop_assert_eq!(once.heading.to_bits(), twice.heading.to_bits());
        prop_assert_eq!(once.speed.to_bits(), twice.speed.to_bits());
    }

    #[test]
    fn quantization_error_is_bounded(p in any_point()) {
        let cfg = q();
        let out = quantize_point(&p, &cfg);
        prop_assert!((p.acc - out.acc).abs() <= cfg.acc_step / 2.0 + 1e-12);
        prop_assert!((p.speed - out.speed).abs() <= cfg.speed_step / 2.0 + 1e-12);
        let dh = (p.heading - out.heading).rem_euclid(360.0);
        prop_assert!(dh.min(360.0 - dh) <= cfg.heading_step / 2.0 + 1e-9);
        prop_assert!((0.0..360.0).contains(&out.heading));
        prop_assert_eq!((out.t, out.lat, out.lng), (p.t, p.lat, p.lng));
    }

    #[test]
    fn preprocess_output_is_valid_or_too_short(
        points in prop::collection::vec((any_point(), 0u64..3), 0..60)
    ) {
        let mut t = 0;
        let points: Vec<DataPoint> = points
            .into_iter()
            .map(|(p, step)| { t += step; DataPoint { t, ..p } })
            .collect();
        let v = ValidationConfig::default();
        match preprocess(&Trajectory::new("p", points), &v, &q()) {
            Ok(out) => {
                prop_assert!(out.len() >= 2);
                for w in out.points.windows(2) {
                    prop_assert!(w[1].t > w[0].t && w[1].t - w[0].t <= v.allow_gap);
                }
                for p in &out.points {
                    prop_assert_eq!(validate_point(p, &v), PointCheck::Accept);
                    prop_assert_eq!(*p, quantize_point(p, &q()));
                }
            }
            Err(Error::TooShort { len, .. }) => prop_assert!(len < 2),
            Err(other) => prop_assert!(false, "unexpected error {}", other),
        }
    }

    #[test]
    fn split_is_a_partition(n in 1usize..80, fraction in 0.01f64..0.99, seed in any::<u64>()) {
        let all: Vec<Trajectory> = (0..n).map(|i| Trajectory::new(format!("{i}"), vec![])).collect();
        let (train, test) = split_dataset(all, fraction, seed).unwrap();
        prop_assert_eq!(test.len(), (fraction * n as f64).round() as usize);
        let ids: HashSet<String> = train.iter().chain(&test).map(|t| t.id.clone()).collect();
        prop_assert_eq!(ids.len(), n);
        prop_assert_eq!(train.len() + test.len(), n);
    }

    #[test]
    fn model_rows_are_normalized_and_counts_add_up(
        corpus in prop::collection::vec(grid_trajectory(30), 1..8)
    ) {
        let model = build_model(&corpus, &q()).unwrap();
        let expected: usize = corpus.iter().map(|t| t.len() - 1).sum();
        prop_assert_eq!(model.total_transitions(), expected as u64);
        for state in model.states() {
            let row = model.outgoing(&state);
            if model.out_total(&state) > 0 {
                let sum: f64 = row.iter().map(|(_, p)| p).sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
            } else {
                prop_assert!(row.is_empty());
            }
        }
    }

    #[test]
    fn model_is_order_independent_and_merge_is_associative(
        a in prop::collection::vec(grid_trajectory(20), 1..4),
        b in prop::collection::vec(grid_trajectory(20), 1..4),
        c in prop::collection::vec(grid_trajectory(20), 1..4),
    ) {
        let (ma, mb, mc) = (
            build_model(&a, &q()).unwrap(),
            build_model(&b, &q()).unwrap(),
            build_model(&c, &q()).unwrap(),
        );
        let left = merge_models(&merge_models(&ma, &mb).unwrap(), &mc).unwrap();
        let right = merge_models(&ma, &merge_models(&mb, &mc).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(merge_models(&ma, &mb).unwrap(), merge_models(&mb, &ma).unwrap());

        let mut reversed: Vec<Trajectory> = a.iter().chain(&b).chain(&c).cloned().collect();
        reversed.reverse();
        prop_assert_eq!(build_model(&reversed, &q()).unwrap(), left);
    }

    #[test]
    fn pmd_values_are_finite_and_non_negative(
        corpus in prop::collection::vec(grid_trajectory(25), 1..6),
        probe in grid_trajectory(25),
    ) {
        let model = build_model(&corpus, &q()).unwrap();
        let signal = transform(&model, &probe).unwrap();
        prop_assert_eq!(signal.len(), probe.len() - 1);
        prop_assert!(signal.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert_eq!(&signal, &transform(&model, &probe).unwrap());
        for p in &probe.points {
            let s = state_of(p, &q()).unwrap();
            prop_assert_eq!(pmd_value(&model, &s, &s), 0.0);
        }
    }

    #[test]
    fn more_mass_near_target_never_raises_pmd(
        counts in prop::collection::vec(1u64..6, 1..6),
        from_idx in 0usize..80,
        to_idx in 0usize..80,
        extra in 1u64..20,
    ) {
        let states = sample_states();
        let from = states[from_idx];
        let to = states[to_idx];
        prop_assume!(from != to);
        let destinations: Vec<State> = states.iter().rev().step_by(7).take(counts.len()).copied().collect();

        let mut model = MarkovModel::new(q());
        for (dst, &n) in destinations.iter().zip(&counts) {
            for _ in 0..n {
                model.record(from, *dst);
            }
        }
        let before = pmd_value(&model, &from, &to);

        let nearest = *destinations
            .iter()
            .min_by(|a, b| state_distance(&to, a).total_cmp(&state_distance(&to, b)))
            .unwrap();
        for _ in 0..extra {
            model.record(from, nearest);
        }
        let after = pmd_value(&model, &from, &to);
        prop_assert!(after <= before + 1e-12, "{} > {}", after, before);
        prop_assert!(!pmd_step(&model, &from, &to, &DistanceWeights::default()).fallback);
    }

    #[test]
    fn state_distance_is_a_symmetric_premetric(a in 0usize..80, b in 0usize..80) {
        let states = sample_states();
        let (x, y) = (states[a], states[b]);
        prop_assert_eq!(state_distance(&x, &y), state_distance(&y, &x));
        prop_assert_eq!(state_distance(&x, &y) == 0.0, x == y);
    }

    #[test]
    fn segmentations_are_feasible(
        values in prop::collection::vec(-50.0f64..50.0, 2..60),
        divisor in 2usize..12,
    ) {
        let cfg = SegmentationConfig { kmax_divisor: divisor, ..Default::default() };
        let seg = select_segments(&values, &cfg).unwrap();
        seg.validate(values.len()).unwrap();
        prop_assert_eq!(seg.cut_indexes[0], 1);
        prop_assert!(seg.cut_indexes.windows(2).all(|w| w[1] >= w[0] + 2));
        prop_assert!(seg.n() <= seg.kmax);
        prop_assert_eq!(seg.kmax, cfg.kmax(values.len()));
    }

    #[test]
    fn splitting_a_long_segment_never_lowers_likelihood(
        values in prop::collection::vec(-20.0f64..20.0, 4..40),
        n in 1usize..6,
    ) {
        let cfg = SegmentationConfig::default();
        prop_assume!(n < values.len() / 2);
        let coarse = dp_segment(&values, n, &cfg).unwrap();
        // a further cut is only guaranteed to help when some segment can be split
        prop_assume!(coarse.segments.iter().any(|s| s.len >= 4));
        let fine = dp_segment(&values, n + 1, &cfg).unwrap();
        prop_assert!(fine.total_loglik >= coarse.total_loglik - 1e-9);
    }

    #[test]
    fn mdl_matches_penalized_likelihood(
        values in prop::collection::vec(-5.0f64..5.0, 2..50),
        n in 1usize..5,
    ) {
        prop_assume!(n <= values.len() / 2);
        let params = ParameterCount::MeanAndSigma;
        let cfg = SegmentationConfig { parameter_count: params, ..Default::default() };
        let seg = dp_segment(&values, n, &cfg).unwrap();
        let expected = -seg.total_loglik + n as f64 * (values.len() as f64).ln();
        prop_assert!((seg.mdl - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        prop_assert_eq!(mdl_score(values.len(), &seg, params), seg.mdl);
    }
}
