use awemixer::model::{
    aggregate_predict, cross_scale_mix, embed_temporal, embed_wavelet, fusion_stack,
    multiscale_pool, revin_denormalize, revin_normalize, route_frequencies, weight_bands, Ablation,
    Model, ModelConfig, ModelParams,
};
use awemixer::signal::make_basis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(ablation: Ablation) -> ModelConfig {
    ModelConfig {
        lookback: 32,
        horizon: 8,
        d_model: 16,
        num_scales: 3,
        dwt_levels: 2,
        num_heads: 4,
        fusion_layers: 2,
        ablation,
        seed: 3,
        ..ModelConfig::default()
    }
}

fn series(seed: u64, len: usize, scale: f64, offset: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|i| offset + scale * ((i as f64 * 0.4).sin() + rng.gen_range(-0.5..0.5)))
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

#[test]
fn attention_rows_are_distributions() {
    let cfg = small(Ablation::default());
    let model = Model::new(cfg.clone()).unwrap();
    let xs: Vec<Vec<f64>> = (0..4).map(|s| series(s, 32, 1.0, 0.0)).collect();
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let cache = model.forward_batch(&refs).unwrap();
    let nb = cfg.num_bands();
    for layer in 0..cfg.fusion_layers {
        for scale in 0..cfg.num_scales {
            let a = cache.attention(layer, scale).unwrap();
            assert_eq!(a.len(), 4 * cfg.num_heads * nb);
            for row in a.chunks_exact(nb) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(row.iter().all(|&p| p >= 0.0));
            }
        }
    }
}

#[test]
fn router_weights_form_a_simplex() {
    let cfg = small(Ablation::default());
    let model = Model::new(cfg.clone()).unwrap();
    for seed in 0..10 {
        let x = series(seed, 32, 2.0, 1.0);
        let cache = model.forward_batch(&[&x]).unwrap();
        let w = cache.band_weights();
        assert_eq!(w.len(), cfg.num_bands());
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn router_weights_ignore_circular_shift() {
    let cfg = small(Ablation::default());
    let model = Model::new(cfg).unwrap();
    let x = series(8, 32, 1.0, 0.0);
    let base = model.forward_batch(&[&x]).unwrap().band_weights().to_vec();
    for s in [1usize, 5, 17] {
        let shifted: Vec<f64> = (0..32).map(|i| x[(i + s) % 32]).collect();
        let w = model.forward_batch(&[&shifted]).unwrap().band_weights().to_vec();
        assert!(max_abs_diff(&w, &base) < 1e-9);
    }
}

#[test]
fn uniform_router_matches_router_ablation() {
    let cfg = small(Ablation::default());
    let mut params = ModelParams::init(&cfg).unwrap();
    params.router_out.weight.data_mut().fill(0.0);
    params.router_out.bias.data_mut().fill(0.25);
    let routed = Model::with_params(cfg.clone(), params.clone()).unwrap();
    let ablated = Model::with_params(
        ModelConfig {
            ablation: Ablation::from_variant("no_router").unwrap(),
            ..cfg
        },
        params,
    )
    .unwrap();
    let x = series(2, 32, 1.0, 0.0);
    assert_eq!(routed.forward(&x).unwrap(), ablated.forward(&x).unwrap());
}

#[test]
fn revin_roundtrip() {
    for seed in 0..20 {
        let x = series(seed, 96, 50.0, -7.0);
        let (z, stats) = revin_normalize(&x);
        assert!(max_abs_diff(&revin_denormalize(&z, &stats), &x) < 1e-9);
    }
}

#[test]
fn forward_is_affine_equivariant() {
    let model = Model::new(small(Ablation::default())).unwrap();
    // large spread keeps the stabiliser's share of σ near 1e-10
    let x = series(4, 32, 1e5, 3e4);
    let base = model.forward_batch(&[&x]).unwrap();
    for (a, b) in [(2.0, 5.0), (3.5, -1e3), (10.0, 0.0)] {
        let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let out = model.forward_batch(&[&xa]).unwrap();
        assert!(max_abs_diff(out.x_norm(), base.x_norm()) < 1e-9);
        for (y, y0) in out.predictions().iter().zip(base.predictions()) {
            let want = a * y0 + b;
            assert!(
                (y - want).abs() <= 1e-6 * want.abs().max(1.0),
                "a={a} b={b}: {y} vs {want}"
            );
        }
    }
}

fn with_gate_bias(cfg: &ModelConfig, bias: f64) -> ModelParams {
    let mut p = ModelParams::init(cfg).unwrap();
    for layer in &mut p.fusion {
        layer.gate.weight.data_mut().fill(0.0);
        layer.gate.bias.data_mut().fill(bias);
    }
    p
}

#[test]
fn closed_gate_passes_temporal_features_through() {
    let cfg = small(Ablation::default());
    let model = Model::with_params(cfg.clone(), with_gate_bias(&cfg, -50.0)).unwrap();
    let x = series(5, 32, 1.0, 0.0);
    let cache = model.forward_batch(&[&x]).unwrap();
    for (zf, zt) in cache.z_fused().iter().zip(cache.z_temporal()) {
        assert!(max_abs_diff(zf, zt) < 1e-9);
    }
}

#[test]
fn open_gate_equals_gating_ablation() {
    let cfg = small(Ablation::default());
    let params = with_gate_bias(&cfg, 50.0);
    let gated = Model::with_params(cfg.clone(), params.clone()).unwrap();
    let ungated = Model::with_params(
        ModelConfig {
            ablation: Ablation::from_variant("no_gating").unwrap(),
            ..cfg
        },
        params,
    )
    .unwrap();
    let x = series(6, 32, 1.0, 0.0);
    let a = gated.forward_batch(&[&x]).unwrap();
    let b = ungated.forward_batch(&[&x]).unwrap();
    for (za, zb) in a.z_fused().iter().zip(b.z_fused()) {
        assert!(max_abs_diff(za, zb) < 1e-9);
    }
}

#[test]
fn zero_mixer_output_is_identity() {
    let cfg = small(Ablation::default());
    let mut p = ModelParams::init(&cfg).unwrap();
    p.mixer_out.weight.data_mut().fill(0.0);
    p.mixer_out.bias.data_mut().fill(0.0);
    let model = Model::with_params(cfg, p).unwrap();
    let x = series(7, 32, 1.0, 0.0);
    let cache = model.forward_batch(&[&x]).unwrap();
    assert_eq!(cache.z_mixed(), cache.z_fused());
}

#[test]
fn wavelet_ablation_skips_fusion() {
    let cfg = small(Ablation::from_variant("no_wavelet").unwrap());
    let model = Model::new(cfg).unwrap();
    let x = series(9, 32, 1.0, 0.0);
    let cache = model.forward_batch(&[&x]).unwrap();
    assert!(cache.band_weights().is_empty());
    assert_eq!(cache.z_fused(), cache.z_temporal());
}

#[test]
fn same_seed_same_forecast() {
    let x = series(10, 32, 1.0, 0.0);
    let a = Model::new(small(Ablation::default())).unwrap().forward(&x).unwrap();
    let b = Model::new(small(Ablation::default())).unwrap().forward(&x).unwrap();
    assert_eq!(a, b);
    let other = ModelConfig {
        seed: 4,
        ..small(Ablation::default())
    };
    assert_ne!(Model::new(other).unwrap().forward(&x).unwrap(), a);
}

#[test]
fn batched_and_single_window_forecasts_agree() {
    for variant in Ablation::VARIANTS {
        let model = Model::new(small(Ablation::from_variant(variant).unwrap())).unwrap();
        let xs: Vec<Vec<f64>> = (0..5).map(|s| series(20 + s, 32, 1.0 + s as f64, 0.0)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let batched = model.forward_batch(&refs).unwrap();
        for (i, x) in xs.iter().enumerate() {
            let single = model.forward(x).unwrap();
            let row = &batched.predictions()[i * 8..(i + 1) * 8];
            assert!(max_abs_diff(&single, row) < 1e-12, "{variant}");
        }
    }
}

#[test]
fn stage_composition_reproduces_forward() {
    let cfg = small(Ablation::default());
    let model = Model::new(cfg.clone()).unwrap();
    let p = &model.params;
    let x = series(30, 32, 4.0, 2.0);

    let (x_norm, stats) = revin_normalize(&x);
    let pooled = multiscale_pool(&x_norm, cfg.num_scales).unwrap();
    let z_t = embed_temporal(&pooled, p).unwrap();
    let basis = make_basis(&cfg.basis).unwrap();
    let h_w = embed_wavelet(&x_norm, &basis, cfg.dwt_levels, p).unwrap();
    let w = route_frequencies(&x_norm, p).unwrap();
    let h_weighted = weight_bands(&h_w, &w).unwrap();
    let z_fused = fusion_stack(&z_t, &h_weighted, p, cfg.num_heads, true).unwrap();
    let z_mixed = cross_scale_mix(&z_fused, p).unwrap();
    let y_norm = aggregate_predict(&z_mixed, p).unwrap();
    let y = revin_denormalize(&y_norm, &stats);

    assert!(max_abs_diff(&y, &model.forward(&x).unwrap()) < 1e-12);
}

#[test]
fn pooling_averages_dyadic_blocks() {
    let x: Vec<f64> = (1..=8).map(f64::from).collect();
    let h = multiscale_pool(&x, 3).unwrap();
    assert_eq!(h[0], x);
    assert_eq!(h[1], vec![1.5, 3.5, 5.5, 7.5]);
    assert_eq!(h[2], vec![2.5, 6.5]);
}

#[test]
fn wrong_lookback_is_rejected() {
    let model = Model::new(small(Ablation::default())).unwrap();
    assert!(model.forward(&[0.0; 31]).is_err());
}
