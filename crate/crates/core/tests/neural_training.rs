use emgait_core::neural::{
    layers::softmax_xent, save_initial_weights, train_dcnn, Adam, DcnnConfig, DcnnData, DcnnModel, Workspace,
};
use emgait_core::rng::rng_from_seed;
use rand::Rng;
use rand_distr::StandardNormal;

/// Windows whose label decides which channel carries a strong signal.
fn separable(n: usize, seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let mut x = Vec::with_capacity(n * 200);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let loud = if label == 0 { 0 } else { 3 };
        for _t in 0..40 {
            for c in 0..5 {
                let s = if c == loud { 2.0 } else { 0.3 };
                x.push(s * rng.sample::<f64, _>(StandardNormal));
            }
        }
        y.push(label);
    }
    (x, y)
}

fn small_training_config() -> DcnnConfig {
    DcnnConfig { batch_size: 32, max_epochs: 200, patience: 20, ..Default::default() }
}

#[test]
fn learns_separable_windows() {
    let (xt, yt) = separable(200, 1);
    let (xv, yv) = separable(60, 2);
    let (xs, ys) = separable(100, 3);
    let model = DcnnModel::new(small_training_config(), 4).unwrap();
    let (best, hist) = train_dcnn(
        &model,
        DcnnData { x: &xt, y: &yt },
        DcnnData { x: &xv, y: &yv },
        Some(DcnnData { x: &xs, y: &ys }),
        5,
    )
    .unwrap();
    let acc = best.evaluate(&xs, &ys).accuracy();
    assert!(acc >= 0.95, "test accuracy {acc}");
    assert!(hist.epochs.len() <= 200);
    assert!(hist.stopped_epoch - hist.best_val_epoch <= 20);
}

#[test]
fn training_is_reproducible_and_blob_restores() {
    let (xt, yt) = separable(64, 1);
    let (xv, yv) = separable(16, 2);
    let cfg = DcnnConfig { batch_size: 16, max_epochs: 3, patience: 3, ..Default::default() };
    let blob = save_initial_weights(cfg.clone(), 9).unwrap();
    let a0 = DcnnModel::from_blob(&blob).unwrap();
    let b0 = DcnnModel::from_blob(&blob).unwrap();
    assert_eq!(a0.to_blob(), blob);
    let run = |m: &DcnnModel| train_dcnn(m, DcnnData { x: &xt, y: &yt }, DcnnData { x: &xv, y: &yv }, None, 7).unwrap();
    let (ma, ha) = run(&a0);
    let (mb, hb) = run(&b0);
    assert_eq!(ha, hb);
    assert_eq!(ma, mb);
    assert_eq!(ha.epochs[0].train_loss, hb.epochs[0].train_loss);
}

#[test]
fn patience_one_stops_after_first_non_improving_epoch() {
    let (xt, yt) = separable(64, 1);
    // validation labels are the opposite of the learnable rule, so val loss rises once training starts
    let (xv, yv) = separable(32, 2);
    let yv: Vec<usize> = yv.iter().map(|y| 1 - y).collect();
    let cfg = DcnnConfig { batch_size: 8, max_epochs: 50, patience: 1, learning_rate: 3e-3, ..Default::default() };
    let m = DcnnModel::new(cfg, 1).unwrap();
    let (_, h) = train_dcnn(&m, DcnnData { x: &xt, y: &yt }, DcnnData { x: &xv, y: &yv }, None, 2).unwrap();
    assert!(h.early_stopped);
    assert_eq!(h.stopped_epoch - h.best_val_epoch, 1);
    let losses: Vec<f64> = h.epochs.iter().map(|e| e.val_loss).collect();
    assert!(losses.last().unwrap() >= &losses[h.best_val_epoch]);
}

#[test]
fn empty_validation_is_rejected() {
    let (xt, yt) = separable(8, 1);
    let m = DcnnModel::new(DcnnConfig::default(), 1).unwrap();
    let r = train_dcnn(&m, DcnnData { x: &xt, y: &yt }, DcnnData { x: &[], y: &[] }, None, 0);
    assert!(matches!(r, Err(emgait_core::Error::EmptySplit(_))));
}

fn batch_loss(m: &DcnnModel, x: &[f64], y: &[usize]) -> f64 {
    m.evaluate(x, y).mean_loss()
}

#[test]
fn one_step_decreases_single_sample_loss() {
    let (x, y) = separable(1, 11);
    let cfg = DcnnConfig { dropout: 0.0, learning_rate: 1e-4, ..Default::default() };
    let mut m = DcnnModel::new(cfg, 3).unwrap();
    let before = batch_loss(&m, &x, &y);
    let mut ws = Workspace::new(&m);
    let mut g = m.params.clone();
    m.loss_and_grad(&[&x], &y, &mut ws, &mut g, None);
    let mut adam = Adam::new(&m.params, 1e-4, 0.9, 0.999, 1e-8);
    adam.update(&mut m.params, &g);
    assert!(batch_loss(&m, &x, &y) < before);
}

#[test]
fn one_batch_loss_is_mostly_nonincreasing() {
    let (x, y) = separable(16, 12);
    let cfg = DcnnConfig { dropout: 0.0, learning_rate: 1e-3, ..Default::default() };
    let mut m = DcnnModel::new(cfg, 4).unwrap();
    let inputs: Vec<&[f64]> = x.chunks(200).collect();
    let mut ws = Workspace::new(&m);
    let mut g = m.params.clone();
    let mut adam = Adam::new(&m.params, 1e-3, 0.9, 0.999, 1e-8);
    let mut prev = batch_loss(&m, &x, &y);
    let mut violations = 0;
    for _ in 0..50 {
        m.loss_and_grad(&inputs, &y, &mut ws, &mut g, None);
        adam.update(&mut m.params, &g);
        let l = batch_loss(&m, &x, &y);
        if l > prev {
            violations += 1;
        }
        prev = l;
    }
    assert!(violations * 20 < 50, "{violations} increasing steps");
}

#[test]
fn eval_forward_is_pure() {
    let (x, _) = separable(1, 5);
    let m = DcnnModel::new(DcnnConfig::default(), 8).unwrap();
    let mut ws1 = Workspace::new(&m);
    let mut ws2 = Workspace::new(&m);
    let _ = m.logits(&separable(1, 6).0, &mut ws1);
    assert_eq!(m.logits(&x, &mut ws1), m.logits(&x, &mut ws2));
    let (loss, _) = softmax_xent(&m.logits(&x, &mut ws1), 0);
    assert!(loss.is_finite());
}
