//! Every method id streams end to end through the unified runner.

use heavycs::{CsConfig, CsRunner, Method, MethodOptions, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

#[test]
fn all_methods_stream_and_cover_the_center() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xabcd);
    let xs: Vec<f64> = (0..300).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    for method in Method::ALL {
        let mut config = CsConfig::new(0.05);
        if method == Method::PCatoni {
            config = config.with_moment(1.5, 5.0);
        }
        let mut runner = CsRunner::new(method, config, MethodOptions::default())
            .unwrap_or_else(|e| panic!("building {method}: {e}"));
        let idx = runner.track(0.0);
        for (i, &x) in xs.iter().enumerate() {
            runner.advance(&Observation::new(i as u64 + 1, x)).unwrap();
        }
        assert_eq!(runner.t(), 300);
        let set = runner.set().unwrap_or_else(|e| panic!("set for {method}: {e}"));
        // At t=300 every method should comfortably cover the true mean of
        // this fixed stream.
        assert!(set.contains(0.0), "{method} excluded the mean: {set:?}");
        assert!(runner.tracked_contains(idx), "{method} probe disagrees");
        assert!(!runner.tracked_below(idx), "{method} claims lower bound above 0");
    }
}

#[test]
fn probe_and_set_track_each_other_through_time() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x1357);
    for method in [Method::Ds, Method::Catoni, Method::PmHoeffding, Method::TrivialCatoni] {
        let mut runner =
            CsRunner::new(method, CsConfig::new(0.1), MethodOptions::default()).unwrap();
        let probe = 0.8;
        let idx = runner.track(probe);
        for t in 1..=150u64 {
            let x: f64 = rng.sample(StandardNormal);
            runner.advance(&Observation::new(t, x)).unwrap();
            let set = runner.set().unwrap();
            let near_edge = set
                .intervals()
                .iter()
                .any(|iv| (probe - iv.lo).abs() < 1e-6 || (probe - iv.hi).abs() < 1e-6);
            if !near_edge {
                assert_eq!(
                    runner.tracked_contains(idx),
                    set.contains(probe),
                    "{method} probe/set mismatch at t={t}"
                );
            }
        }
    }
}
