mod common;

use lerac::data::{read_idx, write_idx, BatchStream, IdxArray};
use lerac::schedulers::{
    assign_initial_rates, cbs_sigma_at, plateau_step, CbsConfig, PlateauPolicy, PlateauTracker, RampRule,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn curriculum_orders_layers_and_converges((n, cfg) in common::lerac_configs()) {
        if let Err(msg) = common::check_curriculum(n, &cfg) {
            prop_assert!(false, "{cfg:?} n={n}: {msg}");
        }
    }

    #[test]
    fn every_layer_rate_rises_monotonically((n, cfg) in common::lerac_configs()) {
        let s = assign_initial_rates(n, &cfg).unwrap();
        for j in 1..=n {
            for l in 0..=cfg.k {
                let (a, b) = (s.rate_at(j, l).unwrap(), s.rate_at(j, l + 1).unwrap());
                prop_assert!(a <= b, "layer {j}: {a} at {l} > {b} at {}", l + 1);
            }
        }
    }

    #[test]
    fn exponential_ramp_matches_power_form((n, cfg) in common::lerac_configs()) {
        let cfg = cfg.with_rule(RampRule::Exponential);
        let s = assign_initial_rates(n, &cfg).unwrap();
        for (j, &start) in s.initial_rates().iter().enumerate() {
            for l in 0..cfg.k {
                // start · (target / start)^(l / k)
                let want = start * (cfg.eta_base / start).powf(l as f64 / cfg.k as f64);
                let got = s.rate_at(j + 1, l).unwrap();
                prop_assert!(((got - want) / want).abs() < 1e-12, "layer {} epoch {l}: {got} vs {want}", j + 1);
            }
        }
    }
}

proptest! {
    #[test]
    fn cbs_sigma_is_a_step_decay(sigma0 in 0.0f64..3.0, decay in 0.05f64..1.0, step in 1usize..8, epoch in 0usize..200) {
        let cfg = CbsConfig { sigma0, decay, step, kernel_size: 3 };
        let mut want = sigma0;
        for _ in 0..epoch / step {
            want *= decay;
        }
        let got = cbs_sigma_at(&cfg, epoch);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300), "{got} vs {want}");
        prop_assert!(cbs_sigma_at(&cfg, epoch + 1) <= got);
    }

    #[test]
    fn plateau_never_raises_the_rate(history in prop::collection::vec(0.0f64..5.0, 1..40), patience in 1usize..6) {
        let policy = PlateauPolicy { patience, ..PlateauPolicy::default() };
        let mut tracker = PlateauTracker::new(policy.clone());
        let mut rate = 1.0;
        for end in 1..=history.len() {
            let (next, stop) = plateau_step(&policy, &history[..end], rate).unwrap();
            let decision = tracker.observe(history[end - 1]);
            prop_assert!(next == rate || next == rate * policy.factor);
            prop_assert_eq!(next < rate, decision.reduce);
            prop_assert_eq!(stop, decision.stop);
            rate = next;
        }
    }

    #[test]
    fn batches_partition_each_epoch(len in 1usize..300, batch in 1usize..64, seed: u64, epoch in 0usize..5) {
        let indices: Vec<usize> = (0..len).map(|i| 3 * i + 1).collect();
        let stream = BatchStream::new(&indices, batch, seed).unwrap();
        let batches = stream.epoch(epoch);
        prop_assert_eq!(batches.len(), len.div_ceil(batch));
        prop_assert!(batches.iter().all(|b| !b.is_empty() && b.len() <= batch));
        let mut seen: Vec<usize> = batches.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, indices);
        prop_assert_eq!(stream.epoch(epoch), batches);
    }

    #[test]
    fn idx_round_trips(dims in prop::collection::vec(1usize..6, 1..4), fill: u8) {
        let n: usize = dims.iter().product();
        let data = (0..n).map(|i| (i as u8).wrapping_mul(31).wrapping_add(fill)).collect();
        let array = IdxArray { dims, data };
        prop_assert_eq!(read_idx(&write_idx(&array)).unwrap(), array);
    }
}
