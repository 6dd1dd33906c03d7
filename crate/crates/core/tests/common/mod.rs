#![allow(dead_code)]

pub mod grad;

use lerac::schedulers::{assign_initial_rates, LeracConfig, RampRule};
use proptest::prelude::*;

/// Curricula with rates spread over the published magnitudes
/// (base 1e-5..1e-1, last-layer start down to 1e-10).
pub fn lerac_configs() -> impl Strategy<Value = (usize, LeracConfig)> {
    (
        1usize..=20,
        -5.0f64..=-1.0,
        0.0f64..=1.0,
        -10.0f64..=-5.0,
        1usize..=10,
        prop_oneof![Just(RampRule::Exponential), Just(RampRule::Linear)],
        prop_oneof![4 => Just(10.0f64), 1 => 1.5f64..100.0],
    )
        .prop_map(|(n, base, first_frac, last, k, rule, c)| {
            let eta_base = 10f64.powf(base);
            let eta_last = 10f64.powf(last.min(base));
            let eta_first = 10f64.powf(last + first_frac * (base - last)).clamp(eta_last, eta_base);
            let cfg = LeracConfig {
                eta_base,
                eta_first,
                eta_last,
                k,
                c,
                rule,
            };
            (n, cfg)
        })
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Checks depth ordering at every ramp epoch and equality from `k` on.
pub fn check_curriculum(n: usize, cfg: &LeracConfig) -> Result<(), String> {
    let schedule = assign_initial_rates(n, cfg).map_err(|e| e.to_string())?;
    for l in 0..=cfg.k {
        let rates = schedule.rates_at(l);
        if let Some(j) = (1..n).find(|&j| rates[j - 1] < rates[j]) {
            return Err(format!(
                "epoch {l}: layer {j} rate {} < layer {} rate {}",
                rates[j - 1],
                j + 1,
                rates[j]
            ));
        }
    }
    for l in [cfg.k, cfg.k + 1, cfg.k + 7] {
        for (j, r) in schedule.rates_at(l).into_iter().enumerate() {
            if rel(r, cfg.eta_base) > 1e-12 {
                return Err(format!(
                    "epoch {l}: layer {} rate {r} differs from {}",
                    j + 1,
                    cfg.eta_base
                ));
            }
        }
    }
    Ok(())
}
