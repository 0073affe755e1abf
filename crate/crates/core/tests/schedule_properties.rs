use degrade_core::ops::{CorruptionMode, DegradationConfig, Severity};
use degrade_core::schedule::{
    corrupt_stream, schedule_trace, severity_band, ScheduleState, TraceStats, TransitionMatrix,
};
use degrade_core::Image8;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn severity_never_leaves_band(seed in any::<u64>(), ps in 0.0f64..=1.0) {
        let cfg = DegradationConfig::default();
        let m = TransitionMatrix::sticky(ps).unwrap();
        let mut s = ScheduleState::start(seed, &cfg);
        for _ in 0..500 {
            prop_assert!(severity_band(s.mode, &cfg).contains(s.severity.value()));
            s.advance(&m, &cfg);
        }
    }

    #[test]
    fn mode_switch_redraws_within_new_band(seed in any::<u64>(), from in 1u8..=7) {
        let cfg = DegradationConfig::default();
        // Forced switch: every row puts all its mass on the next mode.
        let mut rows = [[0.0; 7]; 7];
        for (i, r) in rows.iter_mut().enumerate() {
            r[(i + 1) % 7] = 1.0;
        }
        let m = TransitionMatrix::new(rows).unwrap();
        let mode = CorruptionMode::from_code(from).unwrap();
        let start = ScheduleState::pinned(mode, Severity::ONE, seed);
        let next = start.step(&m, &cfg);
        prop_assert_eq!(next.mode.index(), (mode.index() + 1) % 7);
        prop_assert!(severity_band(next.mode, &cfg).contains(next.severity.value()));
        // one uniform for the mode, one for the fresh severity
        prop_assert_eq!(next.rng.counter(), 2);
    }

    #[test]
    fn traces_are_prefix_stable(seed in any::<u64>(), n in 1usize..200, k in 1usize..200) {
        let cfg = DegradationConfig::default();
        let m = TransitionMatrix::sticky(0.8).unwrap();
        let long = schedule_trace(ScheduleState::start(seed, &cfg), n.max(k), &m, &cfg);
        let short = schedule_trace(ScheduleState::start(seed, &cfg), n.min(k), &m, &cfg);
        prop_assert_eq!(&long[..short.len()], &short[..]);
    }

    #[test]
    fn rows_of_random_matrices_sample_their_support(seed in any::<u64>(), u in 0.0f64..1.0) {
        let mut rng = degrade_core::RngStream::new(seed);
        let mut rows = [[0.0; 7]; 7];
        for r in rows.iter_mut() {
            let raw: Vec<f64> = (0..7).map(|_| if rng.bernoulli(0.5) { rng.exponential() } else { 0.0 }).collect();
            let total: f64 = raw.iter().sum();
            if total == 0.0 {
                r[0] = 1.0;
            } else {
                let mut acc = 0.0;
                for j in 0..6 {
                    r[j] = raw[j] / total;
                    acc += r[j];
                }
                r[6] = (1.0 - acc).max(0.0);
            }
        }
        if let Ok(m) = TransitionMatrix::new(rows) {
            for from in CorruptionMode::ALL {
                let to = m.sample(from, u);
                prop_assert!(m.get(from, to) > 0.0);
            }
        }
    }
}

#[test]
fn sticky_chain_statistics_at_1e5_steps() {
    let cfg = DegradationConfig::default();
    let m = TransitionMatrix::sticky(0.8).unwrap();
    let trace = schedule_trace(ScheduleState::start(31, &cfg), 100_000, &m, &cfg);
    let stats = TraceStats::from_records(&trace, &cfg);
    assert!((stats.self_transition_rate.unwrap() - 0.8).abs() <= 0.01);
    assert!((stats.mean_segment_length - 5.0).abs() <= 0.25);
    for f in stats.mode_marginals {
        assert!((f - 1.0 / 7.0).abs() <= 0.01);
    }
    assert_eq!(stats.band_violations, 0);
}

#[test]
fn identity_chain_is_single_mode() {
    let cfg = DegradationConfig::default();
    let frames: Vec<Image8> = (0..40).map(|i| Image8::filled(12, 12, [i as u8 * 5, 90, 200])).collect();
    let out = corrupt_stream(&frames, &TransitionMatrix::identity(), &cfg, 77).unwrap();
    assert!(out.iter().all(|f| f.mode == out[0].mode));
    let trace: Vec<_> = out.iter().map(|f| f.record.clone()).collect();
    assert_eq!(TraceStats::from_records(&trace, &cfg).self_transition_rate, Some(1.0));
}
