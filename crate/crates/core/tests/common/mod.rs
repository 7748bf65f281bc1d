//! Independent references shared by the integration tests: a per-node loop
//! evaluation of the TDNN recurrence and helpers for random models.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdnn_enhance::dsp::MagnitudePlane;
use tdnn_enhance::masking::signal_mse;
use tdnn_enhance::nn::{
    Activation, Context, ContextSpec, ModelConfig, Normalization, Preset, TdnnModel,
};

pub fn random_plane(rng: &mut ChaCha8Rng, t: usize, f: usize) -> MagnitudePlane {
    MagnitudePlane::new(Array2::from_shape_fn((t, f), |_| {
        rng.random_range(0.0..2.0)
    }))
    .unwrap()
}

pub fn random_norm(rng: &mut ChaCha8Rng, f: usize) -> Normalization {
    Normalization::new(
        Array1::from_shape_fn(f, |_| rng.random_range(0.0..1.0)),
        Array1::from_shape_fn(f, |_| rng.random_range(0.5..1.5)),
    )
    .unwrap()
}

/// Pre-activations of every layer, computed one node at a time:
/// z[t][i] = b[i] + sum_k sum_j w[i][k][j] * h[clamp(t + k)][j].
pub fn naive_preactivations(model: &TdnnModel, x: &MagnitudePlane) -> Vec<Vec<Vec<f64>>> {
    let x = x.as_array();
    let (t_len, f) = x.dim();
    let norm = model.normalization();
    let mut h: Vec<Vec<f64>> = (0..t_len)
        .map(|t| {
            (0..f)
                .map(|j| (x[[t, j]] - norm.mean()[j]) / norm.std()[j])
                .collect()
        })
        .collect();
    let mut all = Vec::new();
    for layer in model.layers() {
        let ctx = layer.context();
        let (w, b) = (layer.weight(), layer.bias());
        let in_dim = layer.in_dim();
        let mut z = vec![vec![0.0; layer.out_dim()]; t_len];
        for t in 0..t_len {
            for i in 0..layer.out_dim() {
                let mut acc = b[i];
                for k in ctx.left()..=ctx.right() {
                    let src = (t as i64 + k as i64).clamp(0, t_len as i64 - 1) as usize;
                    let block = (k - ctx.left()) as usize;
                    for j in 0..in_dim {
                        acc += w[[i, block * in_dim + j]] * h[src][j];
                    }
                }
                z[t][i] = acc;
            }
        }
        h = z
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| match layer.activation() {
                        Activation::Relu => v.max(0.0),
                        Activation::Linear => v,
                    })
                    .collect()
            })
            .collect();
        all.push(z);
    }
    all.push(h);
    all
}

pub fn naive_forward(model: &TdnnModel, x: &MagnitudePlane) -> Vec<Vec<f64>> {
    naive_preactivations(model, x).pop().unwrap()
}

pub fn max_rel_err(a: &Array2<f64>, b: &[Vec<f64>]) -> f64 {
    let scale = b
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let mut worst = 0.0f64;
    for (t, row) in b.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            worst = worst.max((a[[t, i]] - v).abs() / scale);
        }
    }
    worst
}

/// Pre-activation signs of every layer, to detect finite-difference steps that
/// cross a ReLU kink.
pub fn relu_pattern(model: &TdnnModel, x: &MagnitudePlane) -> Vec<bool> {
    let mut layers = naive_preactivations(model, x);
    layers.pop();
    layers
        .iter()
        .flatten()
        .flatten()
        .map(|v| *v > 0.0)
        .collect()
}

pub struct GradientCheck {
    pub params: usize,
    pub worst_rel: f64,
    pub worst_index: usize,
    /// Parameters whose finite-difference step flipped a ReLU; excluded from `worst_rel`.
    pub kinked: Vec<usize>,
}

/// Compares backprop against central differences for every parameter of a
/// 129-16-16-129 network with contexts (-1,1), (-2,2), (0,0) on 8 frames.
pub fn gradient_check(seed: u64) -> GradientCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = ModelConfig {
        input_dim: 129,
        hidden_widths: vec![16, 16],
        output_dim: 129,
        contexts: ContextSpec::parse("-1:1,-2:2,0:0").unwrap(),
    };
    let mut model = TdnnModel::init(&config, random_norm(&mut rng, 129), seed).unwrap();
    // small positive output bias keeps most output units active
    let mut theta = model.parameters();
    let n = theta.len();
    theta[n - 129..].fill(0.3);
    model.set_parameters(&theta).unwrap();
    let noisy = random_plane(&mut rng, 8, 129);
    let clean = random_plane(&mut rng, 8, 129);
    let (loss, grads) = model.forward_backward(&noisy, &clean).unwrap();
    let analytic = grads.to_vec();
    assert_eq!(analytic.len(), n);
    assert_eq!(
        loss,
        signal_mse(&noisy, &model.forward(&noisy).unwrap(), &clean).unwrap()
    );

    let base_pattern = relu_pattern(&model, &noisy);
    let mut probe = model.clone();
    let mut loss_at = |p: &[f64]| {
        probe.set_parameters(p).unwrap();
        let l = signal_mse(&noisy, &probe.forward(&noisy).unwrap(), &clean).unwrap();
        (l, relu_pattern(&probe, &noisy) == base_pattern)
    };
    let mut out = GradientCheck {
        params: n,
        worst_rel: 0.0,
        worst_index: 0,
        kinked: Vec::new(),
    };
    let mut p = theta.clone();
    for i in 0..n {
        let h = 1e-4 * theta[i].abs().max(1.0);
        p[i] = theta[i] + h;
        let (up, same_up) = loss_at(&p);
        p[i] = theta[i] - h;
        let (down, same_down) = loss_at(&p);
        p[i] = theta[i];
        if !(same_up && same_down) {
            out.kinked.push(i);
            continue;
        }
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs());
        let rel = if denom < 1e-10 {
            (a - numeric).abs()
        } else {
            (a - numeric).abs() / denom
        };
        if rel > out.worst_rel {
            out.worst_rel = rel;
            out.worst_index = i;
        }
    }
    out
}

/// Output frames changed by perturbing input frame `t0` of a `t_len`-frame input.
pub fn changed_frames(model: &TdnnModel, t_len: usize, t0: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let base = random_plane(&mut rng, t_len, 129);
    let mut bumped = base.as_array().clone();
    for v in bumped.row_mut(t0) {
        *v += 1.0;
    }
    let a = model.forward(&base).unwrap();
    let b = model
        .forward(&MagnitudePlane::new(bumped).unwrap())
        .unwrap();
    (0..t_len)
        .filter(|&t| a.as_array().row(t) != b.as_array().row(t))
        .collect()
}

/// All-positive weights and biases make every unit strictly increasing in its
/// inputs, so every frame inside the window must change.
pub fn positive_model(preset: Preset) -> TdnnModel {
    let config = ModelConfig::from_preset(preset, 8);
    let mut model = TdnnModel::init(&config, Normalization::identity(129), 4).unwrap();
    let p: Vec<f64> = model.parameters().iter().map(|v| v.abs() + 0.01).collect();
    model.set_parameters(&p).unwrap();
    model
}

/// Maximum relative error of the fast forward pass against the per-node loops,
/// one entry per random model.
pub fn random_model_errors(seed: u64, trials: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    for trial in 0..trials {
        let hidden = rng.random_range(1..=3);
        let widths: Vec<usize> = (0..hidden).map(|_| rng.random_range(2..12)).collect();
        let mut contexts: Vec<Context> = (0..hidden)
            .map(|_| Context::new(-rng.random_range(0..3), rng.random_range(0..3)).unwrap())
            .collect();
        contexts.push(Context::new(-rng.random_range(0..2), rng.random_range(0..2)).unwrap());
        let f = rng.random_range(3..20);
        let config = ModelConfig {
            input_dim: f,
            hidden_widths: widths,
            output_dim: f,
            contexts: ContextSpec::new(contexts).unwrap(),
        };
        let model = TdnnModel::init(&config, random_norm(&mut rng, f), trial).unwrap();
        let frames = rng.random_range(1..15);
        let x = random_plane(&mut rng, frames, f);
        let fast = model.forward(&x).unwrap();
        errors.push(max_rel_err(fast.as_array(), &naive_forward(&model, &x)));
    }
    errors
}
