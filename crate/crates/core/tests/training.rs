use awemixer::data::{parse_csv, Split, SplitFractions, WindowedDataset};
use awemixer::model::{Model, ModelConfig};
use awemixer::numerics::AdamState;
use awemixer::train::{
    evaluate_model, loss_mse, metric_mae, naive_baselines, train_model, train_step, TrainConfig,
};
use awemixer::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn tiny_config() -> ModelConfig {
    ModelConfig {
        lookback: 16,
        horizon: 4,
        d_model: 8,
        num_scales: 2,
        dwt_levels: 2,
        num_heads: 2,
        fusion_layers: 1,
        ..ModelConfig::default()
    }
}

fn sine_dataset(rows: usize, period: f64, noise: f64, l: usize, t: usize) -> WindowedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut csv = String::from("date,s\n");
    for i in 0..rows {
        let v = (2.0 * PI * i as f64 / period).sin() + noise * rng.gen_range(-1.0..1.0);
        csv.push_str(&format!("{i},{v}\n"));
    }
    let series = parse_csv(csv.as_bytes()).unwrap();
    WindowedDataset::new("sine", &series, SplitFractions { train: 0.7, val: 0.1 }, l, t).unwrap()
}

#[test]
fn metric_homogeneity() {
    let p = [0.3, -1.2, 2.0];
    let y = [0.0, 0.5, 1.0];
    let c = 2.5;
    let ps: Vec<f64> = p.iter().zip(&y).map(|(a, b)| b + c * (a - b)).collect();
    let (m, a) = (loss_mse(&p, &y).unwrap(), metric_mae(&p, &y).unwrap());
    assert!((loss_mse(&ps, &y).unwrap() - c * c * m).abs() < 1e-12);
    assert!((metric_mae(&ps, &y).unwrap() - c * a).abs() < 1e-12);
    assert_eq!(loss_mse(&[2.0, 2.0], &[0.0, 2.0]).unwrap(), 2.0);
    assert_eq!(metric_mae(&[2.0, 2.0], &[0.0, 2.0]).unwrap(), 1.0);
    assert_eq!(loss_mse(&y, &y).unwrap(), 0.0);
}

#[test]
fn small_adam_step_descends_on_its_batch() {
    let cfg = tiny_config();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..20 {
        let mut model = Model::new(ModelConfig {
            seed: trial,
            ..cfg.clone()
        })
        .unwrap();
        let xs: Vec<Vec<f64>> = (0..8).map(|_| (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<f64> = (0..8 * 4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let mut adam = AdamState::new(1e-6);
        let before = train_step(&mut model, &mut adam, &refs, &ys, None).unwrap();
        let after = loss_mse(model.forward_batch(&refs).unwrap().predictions(), &ys).unwrap();
        assert!(after < before, "trial {trial}: {after} ≥ {before}");
    }
}

#[test]
fn noise_free_sine_is_fit_closely() {
    let ds = sine_dataset(600, 8.0, 0.0, 16, 4);
    let tc = TrainConfig {
        lr: 3e-3,
        batch_size: 16,
        max_epochs: 10,
        patience: 10,
        max_steps: Some(200),
        ..TrainConfig::default()
    };
    let out = train_model(&tiny_config(), &tc, &ds).unwrap();
    assert!(out.steps_run <= 200);
    let train = evaluate_model(&out.model, &ds, Split::Train, 64).unwrap();
    assert!(train.mse < 1e-3, "train mse {}", train.mse);
}

#[test]
fn seeds_change_parameters_not_finiteness() {
    let ds = sine_dataset(300, 12.0, 0.1, 16, 4);
    let tc = TrainConfig {
        max_epochs: 1,
        patience: 1,
        ..TrainConfig::default()
    };
    let a = train_model(&ModelConfig { seed: 1, ..tiny_config() }, &tc, &ds).unwrap();
    let b = train_model(&ModelConfig { seed: 2, ..tiny_config() }, &tc, &ds).unwrap();
    assert_ne!(a.model.params, b.model.params);
    assert!(a.model.params.is_finite() && b.model.params.is_finite());
    assert!(a.history[0].train_loss.is_finite() && b.history[0].train_loss.is_finite());
}

#[test]
fn training_is_deterministic() {
    let ds = sine_dataset(300, 12.0, 0.1, 16, 4);
    let tc = TrainConfig {
        max_epochs: 2,
        patience: 2,
        ..TrainConfig::default()
    };
    let a = train_model(&tiny_config(), &tc, &ds).unwrap();
    let b = train_model(&tiny_config(), &tc, &ds).unwrap();
    assert_eq!(a.model.params, b.model.params);
    assert_eq!(a.history, b.history);
}

#[test]
fn exploding_learning_rate_aborts_with_diagnostic() {
    let ds = sine_dataset(300, 12.0, 0.1, 16, 4);
    let tc = TrainConfig {
        lr: 1e300,
        max_epochs: 3,
        patience: 3,
        ..TrainConfig::default()
    };
    match train_model(&tiny_config(), &tc, &ds) {
        Err(Error::NonFiniteLoss { loss, .. }) => assert!(!loss.is_finite()),
        other => panic!("expected a numeric abort, got {other:?}"),
    }
}

#[test]
fn zero_head_predicts_the_window_mean() {
    let ds = sine_dataset(400, 12.0, 0.0, 16, 4);
    let cfg = tiny_config();
    let mut model = Model::new(cfg).unwrap();
    model.params.head_out.weight.data_mut().fill(0.0);
    model.params.head_out.bias.data_mut().fill(0.0);
    let m = evaluate_model(&model, &ds, Split::Test, 32).unwrap();
    let b = naive_baselines(&ds, Split::Test);
    assert!((m.mse - b.mean.mse).abs() < 1e-9);
    assert!(m.mae * m.mae <= m.mse);
}

#[test]
fn baselines_on_analytic_series() {
    let mut csv = String::from("date,c\n");
    for i in 0..200 {
        csv.push_str(&format!("{i},4.0\n"));
    }
    let flat = parse_csv(csv.as_bytes()).unwrap();
    let ds = WindowedDataset::new("flat", &flat, SplitFractions { train: 0.7, val: 0.1 }, 8, 4).unwrap();
    assert_eq!(naive_baselines(&ds, Split::Test).persistence.mse, 0.0);

    // a full period of horizon against a full-period lookback mean gives the signal variance
    let ds = sine_dataset(2000, 24.0, 0.0, 24, 24);
    let m = naive_baselines(&ds, Split::Test).mean.mse;
    let var = ds.channels[0][..ds.splits.train_end].iter().map(|v| v * v).sum::<f64>()
        / ds.splits.train_end as f64;
    assert!((m - var).abs() < 1e-3 * var, "{m} vs {var}");
}
