use llwlc_core::generators::{random_connected, sbm};
use llwlc_core::SbmParams;
use llwlc_net::data::instance_seed;
use llwlc_net::train::mean_loss;
use llwlc_net::{
    block_forward, build_dataset, finite_difference_check, gradients, split_links, train, Activation, ConstraintPolicy,
    LinkDataset, LinkInstance, ModelConfig, OptimizerKind, SpectralModel, TrainConfig,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instances(count: usize, seed: u64) -> Vec<LinkInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let g = random_connected(rng.gen_range(12..30), 0.2, seed + i as u64).unwrap();
            let n = g.node_count();
            let (u, v) = loop {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b {
                    break (a, b);
                }
            };
            let label = f64::from(u8::from(g.has_edge(u, v)));
            let policy = [
                ConstraintPolicy::Neumann,
                ConstraintPolicy::None,
                ConstraintPolicy::VertexDeleted { k: 2 },
            ][i % 3];
            LinkInstance::build(&g, u, v, label, policy, 8, instance_seed(seed, 0, i)).unwrap()
        })
        .collect()
}

#[test]
fn gradients_match_central_differences() {
    let instances = random_instances(5, 3);
    let cfg = ModelConfig {
        widths: vec![8, 8],
        filter_hidden: 32,
        pool_k: 10,
    };
    for (t, inst) in instances.iter().enumerate() {
        let other = &instances[(t + 1) % instances.len()];
        let model = SpectralModel::new(&cfg, 100 + t as u64).unwrap();
        let report = finite_difference_check(&model, &[inst, other], 1e-5).unwrap();
        assert_eq!(report.len(), 16);
        let total: usize = report.iter().map(|g| g.checked).sum();
        let kinks: usize = report.iter().map(|g| g.kinks).sum();
        assert_eq!(total, model.param_count());
        assert!(kinks * 50 <= total, "{kinks} kinks of {total}");
        for g in &report {
            assert!(g.checked > 0, "{g:?}");
            assert!(g.max_rel_error <= 1e-4, "instance {t}: {g:?}");
        }
    }
}

#[test]
fn zero_model_head_bias_gradient() {
    let instances = random_instances(4, 8);
    let model = SpectralModel::new(&ModelConfig::default(), 1).unwrap().zeros_like();
    let refs: Vec<&LinkInstance> = instances.iter().collect();
    let (loss, grad) = gradients(&model, &refs).unwrap();
    let want = instances.iter().map(|i| 0.5 - i.label).sum::<f64>() / 4.0;
    assert!((grad.head_b[(0, 0)] - want).abs() < 1e-15);
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn duplicated_instance_doubles_summed_gradient() {
    let inst = &random_instances(1, 11)[0];
    let model = SpectralModel::new(&ModelConfig::default(), 2).unwrap();
    let (_, single) = gradients(&model, &[inst]).unwrap();
    let (_, double) = gradients(&model, &[inst, inst]).unwrap();
    // mean of two equal terms equals one term, i.e. the sum doubled
    for (a, b) in single.to_flat().iter().zip(double.to_flat()) {
        assert!((2.0 * a - 2.0 * b).abs() <= 1e-14 * a.abs().max(1.0));
    }
}

#[test]
fn forward_is_deterministic_and_in_range() {
    let model = SpectralModel::new(&ModelConfig::default(), 5).unwrap();
    for inst in random_instances(6, 21) {
        let p = model.forward(&inst).unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert_eq!(p.to_bits(), model.forward(&inst).unwrap().to_bits());
    }
}

fn permute_rows(m: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(perm[r], c)])
}

#[test]
fn forward_invariant_under_node_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = SpectralModel::new(&ModelConfig::default(), 9).unwrap();
    for inst in random_instances(6, 31) {
        let p = model.forward(&inst).unwrap();
        for _ in 0..10 {
            let mut perm: Vec<usize> = (0..inst.x0.nrows()).collect();
            perm.shuffle(&mut rng);
            let v = permute_rows(&inst.basis.vectors, &perm);
            let x = permute_rows(&inst.x0, &perm);
            let q = model.forward_parts(&v, &inst.basis.values, &x).unwrap();
            assert!((p - q).abs() <= 1e-12, "{p} vs {q}");
        }
    }
}

#[test]
fn zero_padding_is_neutral() {
    let model = SpectralModel::new(&ModelConfig::default(), 13).unwrap();
    for inst in random_instances(4, 41) {
        let v = &inst.basis.vectors;
        let x = DMatrix::from_fn(v.nrows(), 3, |r, c| ((r * 7 + c) % 5) as f64 - 2.0);
        let w = DMatrix::from_fn(3, 4, |r, c| (r as f64 - c as f64) * 0.3);
        let fr = model.blocks[0].filter.eval(&inst.basis.values);
        let base = block_forward(v, &fr, &x, &w, Activation::Relu).unwrap();
        let extra = 3;
        let padded = v.clone().resize_horizontally(v.ncols() + extra, 0.0);
        let mut values = inst.basis.values.clone();
        values.extend([0.0; 3]);
        let fr_p = model.blocks[0].filter.eval(&values);
        let out = block_forward(&padded, &fr_p, &x, &w, Activation::Relu).unwrap();
        assert_eq!(base, out);
    }
}

#[test]
fn filter_shift_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = SpectralModel::new(&ModelConfig::default(), 17).unwrap();
    for inst in random_instances(4, 51) {
        let v = &inst.basis.vectors;
        let x = &inst.x0;
        let w = &model.blocks[0].w;
        let fr = model.blocks[0].filter.eval(&inst.basis.values);
        let c: f64 = rng.gen_range(-2.0..2.0);
        let shifted: Vec<f64> = fr.iter().map(|f| f + c).collect();
        let base = block_forward(v, &fr, x, w, Activation::Identity).unwrap();
        let out = block_forward(v, &shifted, x, w, Activation::Identity).unwrap();
        let ones = vec![1.0; fr.len()];
        let vvtxw = block_forward(v, &ones, x, w, Activation::Identity).unwrap();
        let diff = (out - base - vvtxw * c).abs().max();
        assert!(diff <= 1e-10, "{diff}");
    }
}

fn sbm_data(policy: ConstraintPolicy, seed: u64) -> LinkDataset {
    let g = sbm(&SbmParams::two_block(100, 0.2, 0.02), seed).unwrap();
    let split = split_links(&g, 0.1, seed).unwrap();
    build_dataset(&split, policy, 10, seed).unwrap()
}

#[test]
fn zero_rate_leaves_parameters() {
    let mut data = sbm_data(ConstraintPolicy::VertexDeleted { k: 3 }, 1);
    let mut model = SpectralModel::new(&ModelConfig::default(), 0).unwrap();
    let before = model.clone();
    let cfg = TrainConfig {
        lr: 0.0,
        epochs: 2,
        ..Default::default()
    };
    train(&mut model, &mut data, &cfg).unwrap();
    assert_eq!(model, before);
}

#[test]
fn same_seed_same_trace() {
    let run = || {
        let mut data = sbm_data(ConstraintPolicy::VertexDeleted { k: 2 }, 2);
        let mut model = SpectralModel::new(&ModelConfig::default(), 7).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 32,
            optimizer: OptimizerKind::Adam,
            seed: 9,
            ..Default::default()
        };
        (train(&mut model, &mut data, &cfg).unwrap(), model)
    };
    let (a, ma) = run();
    let (b, mb) = run();
    assert_eq!(a, b);
    assert_eq!(ma, mb);
}

#[test]
fn smoothed_training_loss_does_not_increase() {
    let g = sbm(&SbmParams::two_block(100, 0.2, 0.02), 3).unwrap();
    let split = split_links(&g, 0.1, 3).unwrap();
    let mut data = build_dataset(&split, ConstraintPolicy::Neumann, 10, 3).unwrap();
    let (pos, neg): (Vec<_>, Vec<_>) = data.train.into_iter().partition(|i| i.label == 1.0);
    data.train = pos.into_iter().take(100).chain(neg.into_iter().take(100)).collect();
    assert_eq!(data.train.len(), 200);
    let mut model = SpectralModel::new(&ModelConfig::default(), 3).unwrap();
    let start = mean_loss(&model, &data.train).unwrap();
    let cfg = TrainConfig {
        lr: 0.003,
        optimizer: OptimizerKind::Adam,
        seed: 3,
        ..Default::default()
    };
    let trace = train(&mut model, &mut data, &cfg).unwrap();
    assert_eq!(trace.len(), 20);
    let losses: Vec<f64> = trace.iter().map(|m| m.loss).collect();
    let smooth: Vec<f64> = losses.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
    for w in smooth.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{losses:?}");
    }
    assert!(losses[19] < start);
}

#[test]
fn single_class_training_set_rejected() {
    let mut data = sbm_data(ConstraintPolicy::None, 4);
    data.train.retain(|i| i.label == 1.0);
    let mut model = SpectralModel::new(&ModelConfig::default(), 0).unwrap();
    assert!(train(
        &mut model,
        &mut data,
        &TrainConfig {
            epochs: 1,
            ..Default::default()
        }
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pooling_pads_and_sorts(rows in 1usize..12, cols in 1usize..4, k in 1usize..15, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(rows, cols, |_, _| f64::from(rng.gen_range(-3i32..3)));
        let pooled = llwlc_net::sort_pooling(&x, k);
        prop_assert_eq!(pooled.len(), k * cols);
        for s in 1..k.min(rows) {
            prop_assert!(pooled[s * cols + cols - 1] <= pooled[(s - 1) * cols + cols - 1]);
        }
        prop_assert!(pooled[rows.min(k) * cols..].iter().all(|&v| v == 0.0));
    }
}
