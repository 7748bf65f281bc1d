use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::splice::{splice, unsplice_add};
use super::{Context, ContextSpec, Preset};
use crate::dsp::{MagnitudePlane, NUM_BINS};
use crate::error::{Error, Result};
use crate::masking::Mask;

/// Lower bound on stored normalization standard deviations.
pub const NORM_STD_FLOOR: f64 = 1e-8;
/// Initial output-layer bias, centering the untrained mask near one.
pub const OUTPUT_BIAS_INIT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Linear),
            _ => None,
        }
    }

    fn apply_in_place(self, z: &mut Array2<f64>) {
        if self == Activation::Relu {
            z.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
        }
    }

    /// Multiplies `grad` by the derivative evaluated at pre-activation `z`.
    fn backprop_in_place(self, z: &Array2<f64>, grad: &mut Array2<f64>) {
        if self == Activation::Relu {
            Zip::from(grad).and(z).for_each(|g, &v| {
                if v <= 0.0 {
                    *g = 0.0;
                }
            });
        }
    }
}

/// Per-frequency input standardization frozen into the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    mean: Array1<f64>,
    std: Array1<f64>,
}

impl Normalization {
    pub fn new(mean: Array1<f64>, std: Array1<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::invalid("normalization mean/std lengths differ"));
        }
        if mean.iter().chain(std.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("normalization statistics must be finite"));
        }
        if std.iter().any(|s| *s < NORM_STD_FLOOR) {
            return Err(Error::invalid("normalization std below floor"));
        }
        Ok(Normalization { mean, std })
    }

    pub fn identity(dim: usize) -> Self {
        Normalization {
            mean: Array1::zeros(dim),
            std: Array1::ones(dim),
        }
    }

    /// Mean and standard deviation of every bin across all frames of `planes`.
    pub fn fit<'a>(planes: impl IntoIterator<Item = &'a MagnitudePlane>) -> Result<Self> {
        let planes: Vec<&MagnitudePlane> = planes.into_iter().collect();
        let dim = planes
            .first()
            .map(|p| p.num_bins())
            .ok_or_else(|| Error::invalid("cannot fit normalization on no data"))?;
        let mut count = 0usize;
        let mut mean = Array1::<f64>::zeros(dim);
        for p in &planes {
            if p.num_bins() != dim {
                return Err(Error::invalid("planes disagree on bin count"));
            }
            mean += &p.as_array().sum_axis(Axis(0));
            count += p.num_frames();
        }
        if count == 0 {
            return Err(Error::invalid("cannot fit normalization on no frames"));
        }
        mean /= count as f64;
        let mut var = Array1::<f64>::zeros(dim);
        for p in &planes {
            for row in p.as_array().rows() {
                Zip::from(&mut var)
                    .and(&row)
                    .and(&mean)
                    .for_each(|v, &x, &m| {
                        *v += (x - m) * (x - m);
                    });
            }
        }
        let std = var.mapv(|v| (v / count as f64).sqrt().max(NORM_STD_FLOOR));
        Normalization::new(mean, std)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn std(&self) -> &Array1<f64> {
        &self.std
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            Zip::from(&mut row)
                .and(&self.mean)
                .and(&self.std)
                .for_each(|v, &m, &s| *v = (*v - m) / s);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdnnLayer {
    context: Context,
    weight: Array2<f64>,
    bias: Array1<f64>,
    activation: Activation,
}

impl TdnnLayer {
    /// `weight` is `out_dim x (in_dim * context.width())`.
    pub fn new(
        context: Context,
        weight: Array2<f64>,
        bias: Array1<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::invalid(format!(
                "weight has {} rows but bias has {} entries",
                weight.nrows(),
                bias.len()
            )));
        }
        if weight.ncols() == 0 || weight.ncols() % context.width() != 0 {
            return Err(Error::invalid(format!(
                "weight columns {} not a multiple of context width {}",
                weight.ncols(),
                context.width()
            )));
        }
        if weight.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("layer parameters must be finite"));
        }
        Ok(TdnnLayer {
            context,
            weight,
            bias,
            activation,
        })
    }

    pub fn context(&self) -> Context {
        self.context
    }

    pub fn weight(&self) -> &Array2<f64> {
        &self.weight
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols() / self.context.width()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Array2<f64>, &mut Array1<f64>) {
        (&mut self.weight, &mut self.bias)
    }

    /// Spliced input and pre-activation.
    fn affine(&self, input: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
        let spliced = splice(input, self.context);
        let mut z = spliced.dot(&self.weight.t());
        z += &self.bias;
        (spliced, z)
    }
}

/// Layer shapes and contexts, before any weights exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    pub contexts: ContextSpec,
}

impl ModelConfig {
    /// Hidden layers of `width` units for every non-output row of `preset`.
    pub fn from_preset(preset: Preset, width: usize) -> Self {
        let contexts = preset.contexts();
        ModelConfig {
            input_dim: NUM_BINS,
            hidden_widths: vec![width; contexts.len() - 1],
            output_dim: NUM_BINS,
            contexts,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.contexts.len() != self.hidden_widths.len() + 1 {
            return Err(Error::invalid(format!(
                "{} contexts given for {} hidden layers plus output",
                self.contexts.len(),
                self.hidden_widths.len()
            )));
        }
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_widths.contains(&0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        Ok(())
    }

    fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_widths);
        dims.push(self.output_dim);
        dims
    }
}

/// Reverse-mode derivatives for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(model: &TdnnModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weight: Array2::zeros(l.weight.dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.layers {
            g.weight *= factor;
            g.bias *= factor;
        }
    }

    /// Flattened in parameter declaration order (per layer: weight row-major, bias).
    pub fn to_vec(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|g| g.weight.iter().chain(g.bias.iter()).copied())
            .collect()
    }
}

/// Stack of TDNN layers with frozen input normalization. Hidden layers are
/// ReLU; the output layer must be ReLU so masks are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct TdnnModel {
    layers: Vec<TdnnLayer>,
    norm: Normalization,
}

impl TdnnModel {
    pub fn new(layers: Vec<TdnnLayer>, norm: Normalization) -> Result<Self> {
        let last = layers
            .last()
            .ok_or_else(|| Error::invalid("model needs at least one layer"))?;
        if last.activation != Activation::Relu {
            return Err(Error::invalid("output layer must be rectified"));
        }
        let mut dim = norm.dim();
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim() != dim {
                return Err(Error::invalid(format!(
                    "layer {i} expects {} inputs but receives {dim}",
                    layer.in_dim()
                )));
            }
            dim = layer.out_dim();
        }
        Ok(TdnnModel { layers, norm })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(config: &ModelConfig, norm: Normalization, seed: u64) -> Result<Self> {
        config.validate()?;
        if norm.dim() != config.input_dim {
            return Err(Error::invalid("normalization dim differs from input dim"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = config.dims();
        let last = config.contexts.len() - 1;
        let layers = config
            .contexts
            .layers()
            .iter()
            .enumerate()
            .map(|(i, &ctx)| {
                let fan_in = dims[i] * ctx.width();
                let fan_out = dims[i + 1];
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    rng.random_range(-limit..=limit)
                });
                // an output bias of one starts the mask close to pass-through
                let bias =
                    Array1::from_elem(fan_out, if i == last { OUTPUT_BIAS_INIT } else { 0.0 });
                // hidden and output layers are both rectified
                TdnnLayer::new(ctx, weight, bias, Activation::Relu)
            })
            .collect::<Result<Vec<_>>>()?;
        TdnnModel::new(layers, norm)
    }

    pub fn layers(&self) -> &[TdnnLayer] {
        &self.layers
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn input_dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim()).unwrap_or(0)
    }

    pub fn contexts(&self) -> ContextSpec {
        ContextSpec::new(self.layers.iter().map(|l| l.context).collect()).expect("model has layers")
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// All parameters in declaration order.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    /// Overwrite all parameters from a flat slice in declaration order.
    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameters must be finite"));
        }
        let mut it = values.iter().copied();
        for layer in &mut self.layers {
            for w in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [TdnnLayer] {
        &mut self.layers
    }

    fn check_input(&self, plane: &MagnitudePlane) -> Result<()> {
        if plane.num_bins() != self.input_dim() {
            return Err(Error::invalid(format!(
                "model expects {} bins, input has {}",
                self.input_dim(),
                plane.num_bins()
            )));
        }
        if plane.num_frames() == 0 {
            return Err(Error::invalid("input has no frames"));
        }
        Ok(())
    }

    /// Mask estimate for a noisy magnitude plane.
    pub fn forward(&self, noisy_mag: &MagnitudePlane) -> Result<Mask> {
        self.check_input(noisy_mag)?;
        let mut h = self.norm.apply(noisy_mag.as_array().view());
        for layer in &self.layers {
            let (_, mut z) = layer.affine(h.view());
            layer.activation.apply_in_place(&mut z);
            h = z;
        }
        Ok(Mask::from_array_unchecked(h))
    }

    /// Signal-approximation loss and its exact gradient.
    pub fn forward_backward(
        &self,
        noisy_mag: &MagnitudePlane,
        clean_mag: &MagnitudePlane,
    ) -> Result<(f64, Gradients)> {
        self.check_input(noisy_mag)?;
        if noisy_mag.shape() != clean_mag.shape() {
            return Err(Error::ShapeMismatch {
                expected: noisy_mag.shape(),
                actual: clean_mag.shape(),
            });
        }
        if self.output_dim() != noisy_mag.num_bins() {
            return Err(Error::invalid("model output dim differs from bin count"));
        }

        let mut spliced = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut h = self.norm.apply(noisy_mag.as_array().view());
        for layer in &self.layers {
            let (x, z) = layer.affine(h.view());
            let mut a = z.clone();
            layer.activation.apply_in_place(&mut a);
            spliced.push(x);
            preacts.push(z);
            h = a;
        }

        let y = noisy_mag.as_array();
        let count = y.len() as f64;
        let mut loss = 0.0;
        let mut grad = Array2::zeros(h.dim());
        Zip::from(&mut grad)
            .and(&h)
            .and(y)
            .and(clean_mag.as_array())
            .for_each(|g, &m, &yv, &xv| {
                let d = yv * m - xv;
                loss += d * d;
                *g = 2.0 * d * yv / count;
            });
        loss /= count;

        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            layer.activation.backprop_in_place(&preacts[i], &mut grad);
            let weight = grad.t().dot(&spliced[i]);
            let bias = grad.sum_axis(Axis(0));
            if i > 0 {
                let d_spliced = grad.dot(&layer.weight);
                let mut prev = Array2::zeros((grad.nrows(), layer.in_dim()));
                unsplice_add(d_spliced.view(), layer.context, prev.view_mut());
                grad = prev;
            }
            out.push(LayerGradient { weight, bias });
        }
        out.reverse();
        Ok((loss, Gradients { layers: out }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn plane(a: Array2<f64>) -> MagnitudePlane {
        MagnitudePlane::new(a).unwrap()
    }

    #[test]
    fn identity_network() {
        let layer = TdnnLayer::new(
            Context::CURRENT,
            Array2::eye(3),
            Array1::zeros(3),
            Activation::Relu,
        )
        .unwrap();
        let model = TdnnModel::new(vec![layer], Normalization::identity(3)).unwrap();
        let x = array![[0.5, 1.0, 2.0], [0.0, 3.0, 0.25]];
        let m = model.forward(&plane(x.clone())).unwrap();
        assert_eq!(m.as_array(), &x);
    }

    #[test]
    fn zero_weights_give_zero_mask() {
        let config = ModelConfig::from_preset(Preset::TdnnF, 8);
        let mut model = TdnnModel::init(&config, Normalization::identity(NUM_BINS), 1).unwrap();
        let zeros = vec![0.0; model.param_count()];
        model.set_parameters(&zeros).unwrap();
        let x = plane(Array2::from_elem((10, NUM_BINS), 1.5));
        assert!(model
            .forward(&x)
            .unwrap()
            .as_array()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_wrong_bin_count() {
        let config = ModelConfig::from_preset(Preset::Dnn, 4);
        let model = TdnnModel::init(&config, Normalization::identity(NUM_BINS), 1).unwrap();
        let x = plane(Array2::zeros((5, 64)));
        assert!(matches!(model.forward(&x), Err(Error::InvalidArgument(_))));
        let y = plane(Array2::zeros((5, NUM_BINS)));
        let z = plane(Array2::zeros((6, NUM_BINS)));
        assert!(matches!(
            model.forward_backward(&y, &z),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn model_shape_validation() {
        let l1 = TdnnLayer::new(
            Context::new(-1, 1).unwrap(),
            Array2::zeros((4, 9)),
            Array1::zeros(4),
            Activation::Relu,
        )
        .unwrap();
        let l2 = TdnnLayer::new(
            Context::CURRENT,
            Array2::zeros((3, 5)),
            Array1::zeros(3),
            Activation::Relu,
        )
        .unwrap();
        assert!(TdnnModel::new(vec![l1.clone(), l2], Normalization::identity(3)).is_err());
        let lin = TdnnLayer::new(
            Context::CURRENT,
            Array2::zeros((3, 4)),
            Array1::zeros(3),
            Activation::Linear,
        )
        .unwrap();
        assert!(TdnnModel::new(vec![l1.clone(), lin], Normalization::identity(3)).is_err());
        assert!(TdnnLayer::new(
            Context::CURRENT,
            Array2::zeros((3, 4)),
            Array1::zeros(2),
            Activation::Relu
        )
        .is_err());
        assert!(TdnnModel::new(vec![], Normalization::identity(3)).is_err());
    }

    #[test]
    fn exact_target_has_zero_loss_and_gradient() {
        let config = ModelConfig {
            input_dim: 6,
            hidden_widths: vec![5],
            output_dim: 6,
            contexts: ContextSpec::parse("-1:1,0:0").unwrap(),
        };
        let model = TdnnModel::init(&config, Normalization::identity(6), 3).unwrap();
        let y = plane(Array2::from_shape_fn((7, 6), |(t, f)| {
            ((t * 5 + f * 3) % 7) as f64 * 0.3 + 0.1
        }));
        let m = model.forward(&y).unwrap();
        let x = plane(y.as_array() * m.as_array());
        let (loss, grads) = model.forward_backward(&y, &x).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.to_vec().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn loss_is_quadratic_in_magnitudes() {
        // zero weights, positive output bias: constant mask independent of input
        let config = ModelConfig {
            input_dim: 4,
            hidden_widths: vec![3],
            output_dim: 4,
            contexts: ContextSpec::parse("-1:1,0:0").unwrap(),
        };
        let mut model = TdnnModel::init(&config, Normalization::identity(4), 5).unwrap();
        let n = model.param_count();
        let mut params = vec![0.0; n];
        for p in &mut params[n - 4..] {
            *p = 0.7;
        }
        model.set_parameters(&params).unwrap();
        let y = Array2::from_shape_fn((5, 4), |(t, f)| (t + f) as f64 * 0.2 + 0.1);
        let x = Array2::from_shape_fn((5, 4), |(t, f)| ((t * f) % 3) as f64 * 0.1);
        let (l1, _) = model
            .forward_backward(&plane(y.clone()), &plane(x.clone()))
            .unwrap();
        let (l2, _) = model
            .forward_backward(&plane(y * 2.0), &plane(x * 2.0))
            .unwrap();
        assert!((l2 - 4.0 * l1).abs() <= 1e-12 * l2);
    }

    #[test]
    fn normalization_fit() {
        let a = plane(array![[1.0, 10.0], [3.0, 10.0]]);
        let b = plane(array![[5.0, 10.0]]);
        let n = Normalization::fit([&a, &b]).unwrap();
        assert_eq!(n.mean(), &array![3.0, 10.0]);
        assert!((n.std()[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(n.std()[1], NORM_STD_FLOOR);
        assert!(Normalization::fit(std::iter::empty()).is_err());
    }

    #[test]
    fn forward_is_deterministic() {
        let config = ModelConfig::from_preset(Preset::TdnnB, 16);
        let model = TdnnModel::init(&config, Normalization::identity(NUM_BINS), 9).unwrap();
        let y = plane(Array2::from_shape_fn((30, NUM_BINS), |(t, f)| {
            ((t * 13 + f * 7) % 11) as f64 / 11.0
        }));
        let a = model.forward(&y).unwrap();
        let b = model.forward(&y).unwrap();
        assert_eq!(a, b);
        assert!(a.as_array().iter().all(|v| *v >= 0.0));
    }
}
