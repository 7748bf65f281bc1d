//! Backpropagated gradients against central finite differences on a small
//! TDNN, printing the worst relative disagreement per layer.
//!
//! cargo run --example gradient_check -- [seed]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdnn_enhance::dsp::MagnitudePlane;
use tdnn_enhance::masking::signal_mse;
use tdnn_enhance::nn::{ContextSpec, ModelConfig, Normalization, TdnnModel};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .map_or(3, |a| a.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = ModelConfig {
        input_dim: 129,
        hidden_widths: vec![16, 16],
        output_dim: 129,
        contexts: ContextSpec::parse("-1:1,-2:2,0:0").expect("contexts"),
    };
    let norm = Normalization::new(Array1::zeros(129), Array1::ones(129)).expect("norm");
    let mut model = TdnnModel::init(&config, norm, seed).expect("init");
    let mut theta = model.parameters();
    let n = theta.len();
    theta[n - 129..].fill(0.3);
    model.set_parameters(&theta).expect("parameters");

    let mut plane = || {
        MagnitudePlane::new(Array2::from_shape_fn((8, 129), |_| {
            rng.random_range(0.0..2.0)
        }))
        .unwrap()
    };
    let (noisy, clean) = (plane(), plane());
    let (_, grads) = model.forward_backward(&noisy, &clean).expect("backward");
    let analytic = grads.to_vec();

    let mut probe = model.clone();
    let mut loss = |p: &[f64]| {
        probe.set_parameters(p).unwrap();
        signal_mse(&noisy, &probe.forward(&noisy).unwrap(), &clean).unwrap()
    };
    let mut offset = 0;
    for (i, layer) in model.layers().iter().enumerate() {
        let count = layer.weight().len() + layer.bias().len();
        let mut worst = 0.0f64;
        let mut p = theta.clone();
        for k in offset..offset + count {
            let h = 1e-4 * theta[k].abs().max(1.0);
            p[k] = theta[k] + h;
            let up = loss(&p);
            p[k] = theta[k] - h;
            let down = loss(&p);
            p[k] = theta[k];
            let numeric = (up - down) / (2.0 * h);
            let denom = analytic[k].abs().max(numeric.abs());
            let err = (analytic[k] - numeric).abs();
            worst = worst.max(if denom < 1e-10 { err } else { err / denom });
        }
        println!("layer {i}\t{count} parameters\tworst relative error {worst:.2e}");
        offset += count;
    }
}
