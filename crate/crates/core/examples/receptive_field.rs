//! Per-preset layer contexts and the network context they add up to, checked
//! by perturbing one input frame of a network with all-positive weights.
//!
//! cargo run --example receptive_field

use ndarray::Array2;

use tdnn_enhance::dsp::MagnitudePlane;
use tdnn_enhance::nn::{ModelConfig, Normalization, Preset, TdnnModel};

fn main() {
    let (frames, t0) = (60, 30);
    println!("preset\tlayer contexts\tnetwork\tchanged output frames");
    for preset in Preset::ALL {
        let config = ModelConfig::from_preset(preset, 8);
        let mut model = TdnnModel::init(&config, Normalization::identity(129), 0).expect("init");
        // positive weights make every unit strictly increasing in its inputs
        let p: Vec<f64> = model.parameters().iter().map(|v| v.abs() + 0.01).collect();
        model.set_parameters(&p).expect("parameters");

        let base = Array2::from_elem((frames, 129), 0.5);
        let mut bumped = base.clone();
        bumped.row_mut(t0).fill(1.5);
        let a = model
            .forward(&MagnitudePlane::new(base).unwrap())
            .expect("forward");
        let b = model
            .forward(&MagnitudePlane::new(bumped).unwrap())
            .expect("forward");
        let changed: Vec<i64> = (0..frames)
            .filter(|&t| a.as_array().row(t) != b.as_array().row(t))
            .map(|t| t as i64 - t0 as i64)
            .collect();

        let layers: Vec<String> = preset
            .contexts()
            .layers()
            .iter()
            .map(|c| format!("[{},{}]", c.left(), c.right()))
            .collect();
        let total = preset.network_context();
        println!(
            "{preset}\t{}\t[{},{}]\t{}..={}",
            layers.join(" "),
            total.left(),
            total.right(),
            changed.first().unwrap(),
            changed.last().unwrap()
        );
    }
}
