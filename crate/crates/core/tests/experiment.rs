use std::fs;

use lerac::experiment::{
    compare_regimes, mean_and_std, preset, read_metrics_csv, run_experiment, run_on, DataSource, ExperimentConfig,
    Regime, RunStatus, Trainer,
};
use lerac::network::checkpoint;
use lerac::Network;

fn quick(regime: Regime, epochs: usize, repeats: usize) -> ExperimentConfig {
    let mut cfg = preset("mlp-spirals").unwrap().with_regime(regime);
    cfg.experiment.epochs = epochs;
    cfg.experiment.repeats = repeats;
    cfg
}

#[test]
fn single_repeat_has_zero_spread() {
    let result = run_experiment(&quick(Regime::LeracExponential, 3, 1)).unwrap();
    assert_eq!(result.repeats.len(), 1);
    assert_eq!(result.std, 0.0);
    assert_eq!(Some(result.mean), result.repeats[0].final_test_acc);
}

#[test]
fn summary_statistics_are_recomputable() {
    let result = run_experiment(&quick(Regime::Conventional, 4, 4)).unwrap();
    let accs = result.accuracies();
    assert_eq!(accs.len(), 4);
    let n = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / n;
    let std = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!((result.mean - mean).abs() < 1e-9);
    assert!((result.std - std).abs() < 1e-9);
    assert_eq!(mean_and_std(&accs), (result.mean, result.std));
    let seeds: Vec<u64> = result.repeats.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![0, 1, 2, 3]);
}

#[test]
fn identical_configs_give_identical_records() {
    let cfg = quick(Regime::LeracLinear, 5, 2);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    for (ra, rb) in a.repeats.iter().zip(&b.repeats) {
        assert_eq!(ra.final_test_acc, rb.final_test_acc);
        for (ea, eb) in ra.epochs.iter().zip(&rb.epochs) {
            assert_eq!(
                (ea.train_loss, ea.val_loss, ea.val_acc, &ea.rates),
                (eb.train_loss, eb.val_loss, eb.val_acc, &eb.rates)
            );
        }
    }
}

#[test]
fn recorded_rates_follow_the_curriculum() {
    let cfg = quick(Regime::LeracExponential, 8, 1);
    let k = cfg.lerac.k;
    let result = run_experiment(&cfg).unwrap();
    let mut reduced = false;
    for rec in &result.repeats[0].epochs {
        assert!(
            rec.rates.windows(2).all(|w| w[0] >= w[1]),
            "epoch {}: {:?}",
            rec.epoch,
            rec.rates
        );
        reduced |= rec.rates[0] < cfg.optimizer.learning_rate;
        if rec.epoch >= k && !reduced {
            for r in &rec.rates {
                assert!(((r - cfg.optimizer.learning_rate) / r).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn run_directories_hold_config_metrics_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick(Regime::LeracExponential, 3, 2);
    cfg.experiment.output_dir = Some(dir.path().to_path_buf());
    let result = run_experiment(&cfg).unwrap();
    for rep in &result.repeats {
        let run = dir.path().join("lerac-exp").join(format!("repeat_{}", rep.repeat));
        let snapshot = ExperimentConfig::load(run.join("config.toml")).unwrap();
        assert_eq!(snapshot, cfg);
        let records = read_metrics_csv(run.join("metrics.csv")).unwrap();
        assert_eq!(records.len(), rep.epochs.len());
        for (a, b) in records.iter().zip(&rep.epochs) {
            assert_eq!(
                (a.epoch, a.train_loss, a.test_acc, &a.rates),
                (b.epoch, b.train_loss, b.test_acc, &b.rates)
            );
        }
        assert_eq!(rep.final_test_acc, records.last().map(|r| r.test_acc));
        let net: Network<f32> = checkpoint::load(run.join("checkpoint.bin")).unwrap();
        assert_eq!(net.depth(), 3);
    }
}

#[test]
fn deterministic_mode_moves_wall_time_aside() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick(Regime::Conventional, 2, 1);
    cfg.experiment.output_dir = Some(dir.path().to_path_buf());
    cfg.experiment.deterministic = true;
    run_experiment(&cfg).unwrap();
    let run = dir.path().join("conventional/repeat_0");
    let records = read_metrics_csv(run.join("metrics.csv")).unwrap();
    assert!(records.iter().all(|r| r.epoch_seconds == 0.0));
    let wall = fs::read_to_string(run.join("walltime.csv")).unwrap();
    assert_eq!(wall.lines().count(), 3);
}

#[test]
fn degenerate_curriculum_reproduces_conventional_training() {
    let conventional = quick(Regime::Conventional, 6, 1);
    let mut degenerate = conventional.with_regime(Regime::LeracExponential);
    degenerate.lerac.eta_first = Some(conventional.optimizer.learning_rate);
    degenerate.lerac.eta_last = conventional.optimizer.learning_rate;
    let data = conventional.dataset.load().unwrap();
    let a = run_on(&conventional, &data).unwrap();
    let b = run_on(&degenerate, &data).unwrap();
    let strip = |r: &lerac::experiment::EpochRecord| {
        (
            r.epoch,
            r.train_loss,
            r.val_loss,
            r.val_acc,
            r.test_acc,
            r.rates.clone(),
        )
    };
    let ea: Vec<_> = a.repeats[0].epochs.iter().map(strip).collect();
    let eb: Vec<_> = b.repeats[0].epochs.iter().map(strip).collect();
    assert_eq!(ea, eb);
}

#[test]
fn comparison_of_identical_configs_ties_by_label() {
    let mut a = quick(Regime::Conventional, 2, 2);
    let mut b = a.clone();
    a.experiment.label = Some("zeta".into());
    b.experiment.label = Some("alpha".into());
    let (table, _) = compare_regimes(&[a, b]).unwrap();
    assert_eq!(table.rows[0].mean, table.rows[1].mean);
    assert_eq!(table.rows[0].std, table.rows[1].std);
    assert_eq!(table.best().unwrap().label, "alpha");
    assert!(table
        .to_text()
        .lines()
        .any(|l| l.starts_with("alpha") && l.ends_with('*')));
    assert!(table.to_csv().contains("alpha,"));
}

#[test]
fn comparison_rejects_mismatched_datasets() {
    let a = quick(Regime::Conventional, 2, 1);
    let mut b = quick(Regime::LeracExponential, 2, 1);
    b.dataset = preset("mlp-blobs").unwrap().dataset;
    assert!(compare_regimes(&[a.clone(), b]).is_err());
    assert!(compare_regimes(&[a]).is_err());
}

#[test]
fn smoothing_regimes_need_the_cnn() {
    let err = quick(Regime::Cbs, 2, 1).validate().unwrap_err().to_string();
    assert!(err.contains("cnn"), "{err}");
    let mut cfg = preset("cnn-bars").unwrap().with_regime(Regime::CbsLerac);
    cfg.experiment.epochs = 2;
    cfg.experiment.repeats = 1;
    if let DataSource::Bars { per_class, .. } = &mut cfg.dataset.source {
        *per_class = 20;
    }
    let result = run_experiment(&cfg).unwrap();
    let sigmas: Vec<f64> = result.repeats[0].epochs.iter().map(|r| r.cbs_sigma).collect();
    assert_eq!(sigmas, vec![cfg.cbs.sigma0, cfg.cbs.sigma0]);
}

#[test]
fn empty_smoothing_schedule_trains_like_conventional() {
    let mut cfg = preset("cnn-bars").unwrap();
    cfg.experiment.epochs = 3;
    cfg.experiment.repeats = 1;
    if let DataSource::Bars { per_class, .. } = &mut cfg.dataset.source {
        *per_class = 20;
    }
    let data = cfg.dataset.load().unwrap();
    let mut empty = cfg.with_regime(Regime::Cbs);
    empty.cbs.sigma0 = 0.0;
    let a = run_on(&cfg.with_regime(Regime::Conventional), &data).unwrap();
    let b = run_on(&empty, &data).unwrap();
    let strip = |r: &lerac::experiment::EpochRecord| (r.train_loss, r.val_loss, r.test_acc, r.rates.clone());
    let ea: Vec<_> = a.repeats[0].epochs.iter().map(strip).collect();
    let eb: Vec<_> = b.repeats[0].epochs.iter().map(strip).collect();
    assert_eq!(ea, eb);
}

#[test]
fn exploding_rate_is_flagged_as_diverged() {
    let mut cfg = quick(Regime::Conventional, 5, 2);
    cfg.optimizer.learning_rate = 1e30;
    cfg.optimizer.momentum = 0.0;
    let result = run_experiment(&cfg).unwrap();
    assert_eq!(result.repeats.len(), 2);
    assert!(result
        .repeats
        .iter()
        .all(|r| r.status == RunStatus::Diverged && r.final_test_acc.is_none()));
    assert_eq!(result.diverged(), 2);
    assert!(result.mean.is_nan());
}

#[test]
fn trainer_steps_one_epoch_at_a_time() {
    let cfg = quick(Regime::LeracExponential, 3, 1);
    let data = cfg.dataset.load().unwrap();
    let mut trainer = Trainer::<f64>::new(&cfg, &data, 9).unwrap();
    let mut epochs = 0;
    while let Some(rec) = trainer.run_epoch(&data).unwrap() {
        assert_eq!(rec.epoch, epochs);
        epochs += 1;
    }
    assert_eq!(epochs, 3);
    assert_eq!(trainer.status(), RunStatus::Completed);
    assert!(trainer.run_epoch(&data).unwrap().is_none());
}

#[test]
fn config_files_layer_over_presets() {
    let cfg = ExperimentConfig::from_toml_str(
        "preset = \"cnn-bars\"\n[experiment]\nregime = \"cbs-lerac\"\nepochs = 3\n[cbs]\nsigma0 = 0.5\n",
    )
    .unwrap();
    assert_eq!(cfg.experiment.regime, Regime::CbsLerac);
    assert_eq!(cfg.experiment.epochs, 3);
    assert_eq!(cfg.cbs.sigma0, 0.5);
    assert_eq!(cfg.cbs.decay, preset("cnn-bars").unwrap().cbs.decay);
    assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap(), cfg);
}
