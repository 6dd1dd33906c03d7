//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the timing criterion has the
//! machine to itself.

mod common;

use std::cell::Cell;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lerac::experiment::{preset, run_on, run_timing, DataSource, EpochRecord, ExperimentConfig, Regime};
use lerac::network::{gaussian_smooth_apply, Architecture, Mode, Network};
use lerac::schedulers::{assign_initial_rates, cbs_sigma_at, hyperparameter_rows, CbsConfig, LeracConfig};
use lerac::tensor::Tensor;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Regression values for the mlp-spirals comparison (percent, seeds 0..5).
const SPIRALS_CONVENTIONAL_MEAN: f64 = 98.9333;
const SPIRALS_LERAC_MEAN: f64 = 99.4667;
const SPIRALS_TOLERANCE: f64 = 0.5;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || format!("took {elapsed:.1?}, budget {budget:?}"))
}

fn scheduler_exactness() -> Outcome {
    let start = Instant::now();
    let schedule = assign_initial_rates(2, &LeracConfig::new(1e-1, 1e-8, 5)).map_err(|e| e.to_string())?;
    let at = |j, l| schedule.rate_at(j, l).unwrap();
    ensure(at(2, 0) == 1e-8 && at(1, 0) == 1e-1, || {
        format!("l = 0 gives {} and {}", at(1, 0), at(2, 0))
    })?;
    ensure(at(2, 5) == 1e-1 && at(1, 5) == 1e-1, || {
        format!("l = k gives {} and {}", at(1, 5), at(2, 5))
    })?;
    let interior = at(2, 2);
    let want = 10f64.powf(-5.2);
    ensure(rel(interior, want) < 1e-12, || {
        format!("l = 2 gives {interior:e}, want {want:e}")
    })?;
    for row in hyperparameter_rows() {
        let cfg = row.lerac();
        let s = assign_initial_rates(6, &cfg).map_err(|e| e.to_string())?;
        for j in 1..=6 {
            let (first, last) = (s.rate_at(j, 0).unwrap(), s.rate_at(j, cfg.k).unwrap());
            ensure(first == s.initial_rates()[j - 1] && last == cfg.eta_base, || {
                format!("{}: layer {j} boundaries {first:e}, {last:e}", row.name)
            })?;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("interior rate {interior:e}"))
}

fn ordering_and_convergence() -> Outcome {
    let cases = 2000;
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let rules = [Cell::new(0usize), Cell::new(0usize)];
    runner
        .run(&common::lerac_configs(), |(n, cfg)| {
            let seen = &rules[cfg.rule as usize];
            seen.set(seen.get() + 1);
            common::check_curriculum(n, &cfg)
                .map_err(|m| proptest::test_runner::TestCaseError::fail(format!("{cfg:?} n={n}: {m}")))
        })
        .map_err(|e| e.to_string())?;
    let [exponential, linear] = rules.map(Cell::into_inner);
    ensure(exponential > 0 && linear > 0, || {
        "one ramp rule was never sampled".into()
    })?;
    Ok(format!(
        "{cases} configurations, exponential {exponential} / linear {linear}"
    ))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in [11, 12, 13] {
        for (arch, dims, classes) in [
            (Architecture::Mlp, &[4usize, 2][..], 3),
            (Architecture::Cnn, &[2, 1, 8, 8][..], 4),
        ] {
            let err = common::grad::f64_gradient_error(arch, dims, classes, None, seed);
            ensure(err < 1e-6, || format!("{arch:?} seed {seed}: relative error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("worst relative error {worst:.2e}"))
}

fn comparable(r: &EpochRecord) -> (usize, u64, u64, u64, u64, Vec<u64>, u64) {
    (
        r.epoch,
        r.train_loss.to_bits(),
        r.val_loss.to_bits(),
        r.val_acc.to_bits(),
        r.test_acc.to_bits(),
        r.rates.iter().map(|v| v.to_bits()).collect(),
        r.cbs_sigma.to_bits(),
    )
}

fn degenerate_equivalence() -> Outcome {
    let mut conventional = preset("mlp-spirals").map_err(|e| e.to_string())?;
    conventional.experiment.epochs = 10;
    conventional.experiment.repeats = 2;
    let eta = conventional.optimizer.learning_rate;
    let mut degenerate = conventional.with_regime(Regime::LeracExponential);
    degenerate.lerac.eta_first = Some(eta);
    degenerate.lerac.eta_last = eta;
    let data = conventional.dataset.load().map_err(|e| e.to_string())?;
    let a = run_on(&conventional, &data).map_err(|e| e.to_string())?;
    let b = run_on(&degenerate, &data).map_err(|e| e.to_string())?;
    let mut epochs = 0;
    for (ra, rb) in a.repeats.iter().zip(&b.repeats) {
        let ea: Vec<_> = ra.epochs.iter().map(comparable).collect();
        let eb: Vec<_> = rb.epochs.iter().map(comparable).collect();
        ensure(ea == eb, || format!("seed {}: per-epoch metrics differ", ra.seed))?;
        epochs += ea.len();
    }
    Ok(format!("{epochs} epochs bitwise identical"))
}

fn desk_comparison() -> Outcome {
    let start = Instant::now();
    let base = preset("mlp-spirals").map_err(|e| e.to_string())?;
    let data = base.dataset.load().map_err(|e| e.to_string())?;
    let conventional = run_on(&base.with_regime(Regime::Conventional), &data).map_err(|e| e.to_string())?;
    let lerac = run_on(&base.with_regime(Regime::LeracExponential), &data).map_err(|e| e.to_string())?;
    let summary = format!(
        "conventional {:.2} ± {:.2}, lerac {:.2} ± {:.2}",
        conventional.mean, conventional.std, lerac.mean, lerac.std
    );
    ensure(lerac.repeats.len() == 5 && conventional.repeats.len() == 5, || {
        "expected 5 repeats".into()
    })?;
    ensure(lerac.mean >= conventional.mean, || {
        format!("lerac below conventional: {summary}")
    })?;
    let margin = lerac.mean - conventional.mean;
    let pinned = SPIRALS_LERAC_MEAN - SPIRALS_CONVENTIONAL_MEAN;
    ensure((margin - pinned).abs() <= SPIRALS_TOLERANCE, || {
        format!("margin {margin:.3} outside {pinned:.3} ± {SPIRALS_TOLERANCE}: {summary}")
    })?;
    ensure(
        (conventional.mean - SPIRALS_CONVENTIONAL_MEAN).abs() <= SPIRALS_TOLERANCE,
        || format!("conventional mean moved: {summary}"),
    )?;
    ensure((lerac.mean - SPIRALS_LERAC_MEAN).abs() <= SPIRALS_TOLERANCE, || {
        format!("lerac mean moved: {summary}")
    })?;
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("{summary}, margin {margin:.2}"))
}

/// Many short, paired epochs: a larger spirals set with early stopping
/// disabled so every regime trains the same number of epochs.
fn parity_workload() -> Result<ExperimentConfig, String> {
    let mut cfg = preset("mlp-spirals").map_err(|e| e.to_string())?;
    cfg.dataset.source = DataSource::Spirals {
        classes: 3,
        per_class: 2000,
        noise: 0.2,
        test_per_class: 100,
        seed: 0,
    };
    cfg.experiment.epochs = 30;
    cfg.experiment.repeats = 40;
    cfg.experiment.serial = true;
    cfg.plateau.early_stop_patience = 1000;
    Ok(cfg)
}

fn timing_parity_and_overhead() -> Outcome {
    let start = Instant::now();
    let parity = parity_workload()?;
    let (report, _) = run_timing(&[
        parity.with_regime(Regime::Conventional),
        parity.with_regime(Regime::LeracExponential),
    ])
    .map_err(|e| e.to_string())?;
    let conventional = report.row("conventional").unwrap().mean_epoch_seconds;
    let lerac = report.row("lerac-exp").unwrap().mean_epoch_seconds;
    let ratio = lerac / conventional;

    let mut cnn = preset("cnn-bars").map_err(|e| e.to_string())?;
    cnn.experiment.repeats = 2;
    cnn.experiment.serial = true;
    cnn.plateau.early_stop_patience = 1000;
    let (cnn_report, _) = run_timing(&[cnn.with_regime(Regime::Conventional), cnn.with_regime(Regime::Cbs)])
        .map_err(|e| e.to_string())?;
    let cnn_conventional = cnn_report.row("conventional").unwrap().mean_epoch_seconds;
    let cbs = cnn_report.row("cbs").unwrap().mean_epoch_seconds;

    let summary = format!(
        "lerac/conventional {ratio:.4} ({lerac:.4}s vs {conventional:.4}s), cbs/conventional {:.3} on cnn",
        cbs / cnn_conventional
    );
    ensure((0.99..=1.01).contains(&ratio), || {
        format!("parity outside ±1%: {summary}")
    })?;
    ensure(cbs > cnn_conventional, || format!("no smoothing overhead: {summary}"))?;
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(summary)
}

fn cbs_exactness() -> Outcome {
    let mut checked = 0;
    let steps: Vec<usize> = hyperparameter_rows()
        .iter()
        .flat_map(|r| r.cbs_step.clone())
        .chain(1..=5)
        .collect();
    for step in steps {
        let cfg = CbsConfig {
            sigma0: 1.0,
            decay: 0.9,
            step,
            kernel_size: 3,
        };
        for e in 0..100 {
            let want = 0.9f64.powi((e / step) as i32);
            let got = cbs_sigma_at(&cfg, e);
            ensure(rel(got, want) <= 1e-12, || {
                format!("u = {step}, epoch {e}: {got} vs {want}")
            })?;
            checked += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x: Tensor<f32> = Tensor::new(&[2, 3, 6, 5], (0..180).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
    let same = gaussian_smooth_apply(&x, 0.0, 3).unwrap();
    ensure(
        same.data()
            .iter()
            .zip(x.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()),
        || "σ = 0 smoothing changed its input".into(),
    )?;
    let plain: Network<f32> = Architecture::Cnn.build(&[3, 8, 8], 4, None).unwrap().with_seed(3);
    let mut smoothed: Network<f32> = Architecture::Cnn.build(&[3, 8, 8], 4, Some(3)).unwrap().with_seed(3);
    smoothed.set_smoothing_sigma(0.0).unwrap();
    let x: Tensor<f32> = Tensor::new(&[2, 3, 8, 8], (0..384).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let mut plain = plain;
    let a = plain.forward(&x, Mode::Eval).unwrap();
    let b = smoothed.forward(&x, Mode::Eval).unwrap();
    ensure(a == b, || "σ = 0 network differs from the unsmoothed network".into())?;
    Ok(format!("{checked} schedule values, identity bitwise"))
}

fn metrics_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "metrics.csv") {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                found.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    found.sort();
    found
}

fn reproducibility() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let out = Command::new(env!("CARGO_BIN_EXE_lerac"))
            .args(["compare", "--deterministic", "--out"])
            .arg(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
    }
    let (a, b) = (metrics_files(dirs[0].path()), metrics_files(dirs[1].path()));
    ensure(!a.is_empty(), || "no metrics files written".into())?;
    ensure(a == b, || {
        let diff: Vec<&str> = a
            .iter()
            .zip(&b)
            .filter(|(x, y)| x != y)
            .map(|(x, _)| x.0.as_str())
            .collect();
        format!("metrics differ: {diff:?}")
    })?;
    let bytes: usize = a.iter().map(|(_, d)| d.len()).sum();
    Ok(format!("{} metrics files, {bytes} bytes identical", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("scheduler exactness", scheduler_exactness),
        ("ordering and convergence invariants", ordering_and_convergence),
        ("gradient correctness", gradient_correctness),
        ("degenerate-schedule equivalence", degenerate_equivalence),
        ("desk-scale regime comparison", desk_comparison),
        ("timing parity and overhead", timing_parity_and_overhead),
        ("smoothing schedule exactness", cbs_exactness),
        ("reproducibility", reproducibility),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
