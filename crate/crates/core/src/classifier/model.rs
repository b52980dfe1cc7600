use super::layers::{
    conv_backward, conv_forward, dense_backward, dense_forward, pool_backward, pool_forward,
    tanh_backward, tanh_forward, ConvGeom,
};
use super::{cast, loss, softmax, Adam, LayerSpec, ModelSpec, Scalar, Shape};
use crate::error::{Error, Result};
use crate::imaging::BinaryMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Binary mask as a {0, 1} input vector, row-major.
pub fn mask_to_input<T: Scalar>(mask: &BinaryMask) -> Vec<T> {
    mask.data().iter().map(|&b| if b { T::one() } else { T::zero() }).collect()
}

/// One tensor per weight or bias, in layer order; the layout of
/// [`Model::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(params: &[Vec<T>]) -> Self {
        Self {
            tensors: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
        }
    }

    fn add(&mut self, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = *x + y;
            }
        }
    }

    fn scale(&mut self, s: T) {
        for v in self.tensors.iter_mut().flatten() {
            *v = *v * s;
        }
    }
}

/// Mean loss, correct predictions and mean gradients of one batch.
#[derive(Debug, Clone)]
pub struct BatchOutcome<T> {
    pub loss: T,
    pub correct: usize,
    pub gradients: Gradients<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    spec: ModelSpec,
    shapes: Vec<Shape>,
    /// Index of each layer's weight tensor in `params`; the bias follows it.
    slots: Vec<Option<usize>>,
    params: Vec<Vec<T>>,
    seed: u64,
}

impl<T: Scalar> Model<T> {
    /// Glorot-uniform weights and zero biases drawn from `seed`.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        let mut model = Self::zeroed(spec)?;
        model.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (l, layer) in model.spec.layers.iter().enumerate() {
            let (fan_in, fan_out) = match *layer {
                LayerSpec::Conv { maps, kernel } => {
                    let k2 = kernel * kernel;
                    (model.shapes[l].channels * k2, maps * k2)
                }
                LayerSpec::Dense { units } => (model.shapes[l].len(), units),
                _ => continue,
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let slot = model.slots[l].expect("parametric layer");
            for w in &mut model.params[slot] {
                *w = cast(rng.random_range(-limit..limit));
            }
        }
        Ok(model)
    }

    /// All weights and biases zero.
    pub fn zeroed(spec: ModelSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut slots = Vec::with_capacity(spec.layers.len());
        let mut params = Vec::new();
        for (l, layer) in spec.layers.iter().enumerate() {
            let sizes = match *layer {
                LayerSpec::Conv { maps, kernel } => Some((maps * shapes[l].channels * kernel * kernel, maps)),
                LayerSpec::Dense { units } => Some((units * shapes[l].len(), units)),
                _ => None,
            };
            slots.push(sizes.map(|(w, b)| {
                params.push(vec![T::zero(); w]);
                params.push(vec![T::zero(); b]);
                params.len() - 2
            }));
        }
        Ok(Self {
            spec,
            shapes,
            slots,
            params,
            seed: 0,
        })
    }

    /// Rebuilds a model from stored tensors, checking their sizes.
    pub fn from_parts(spec: ModelSpec, seed: u64, params: Vec<Vec<T>>) -> Result<Self> {
        let mut model = Self::zeroed(spec)?;
        if params.len() != model.params.len()
            || params.iter().zip(&model.params).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::Checkpoint("tensor sizes do not match the architecture".into()));
        }
        model.params = params;
        model.seed = seed;
        Ok(model)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn classes(&self) -> usize {
        self.spec.classes()
    }

    pub fn input_shape(&self) -> Shape {
        self.shapes[0]
    }

    pub fn params(&self) -> &[Vec<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.params
    }

    /// Dimensions of each tensor in [`Model::params`]: `[maps, in, k, k]`
    /// and `[maps]` for convolutions, `[units, in]` and `[units]` for dense
    /// layers.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for (l, layer) in self.spec.layers.iter().enumerate() {
            match *layer {
                LayerSpec::Conv { maps, kernel } => {
                    out.push(vec![maps, self.shapes[l].channels, kernel, kernel]);
                    out.push(vec![maps]);
                }
                LayerSpec::Dense { units } => {
                    out.push(vec![units, self.shapes[l].len()]);
                    out.push(vec![units]);
                }
                _ => {}
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    /// Same weights in another precision.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            spec: self.spec.clone(),
            shapes: self.shapes.clone(),
            slots: self.slots.clone(),
            params: self
                .params
                .iter()
                .map(|t| t.iter().map(|v| cast(v.to_f64().expect("finite"))).collect())
                .collect(),
            seed: self.seed,
        }
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        let s = self.shapes[0];
        if x.len() != s.len() {
            return Err(Error::DimensionMismatch {
                expected: (s.width, s.height),
                got: (x.len(), 1),
            });
        }
        Ok(())
    }

    /// Class probabilities for a binary image.
    pub fn forward(&self, image: &BinaryMask) -> Result<Vec<T>> {
        let s = self.shapes[0];
        if image.dimensions() != (s.width, s.height) {
            return Err(Error::DimensionMismatch {
                expected: (s.width, s.height),
                got: image.dimensions(),
            });
        }
        self.forward_values(&mask_to_input(image))
    }

    /// Class probabilities for a real-valued input of the input shape.
    pub fn forward_values(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let acts = self.activations(x);
        Ok(softmax(acts.last().expect("at least one layer")))
    }

    /// Most probable class and its probability.
    pub fn predict(&self, image: &BinaryMask) -> Result<(usize, T)> {
        let p = self.forward(image)?;
        Ok(argmax(&p))
    }

    /// Input followed by every layer output; the last entry holds the logits.
    fn activations(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.shapes.len());
        acts.push(x.to_vec());
        for (l, layer) in self.spec.layers.iter().enumerate() {
            let (si, so) = (self.shapes[l], self.shapes[l + 1]);
            let input = &acts[l];
            let mut out = vec![T::zero(); so.len()];
            match *layer {
                LayerSpec::Conv { kernel, .. } => {
                    let slot = self.slots[l].expect("conv has weights");
                    let g = conv_geom(si, so, kernel);
                    conv_forward(&g, &self.params[slot], &self.params[slot + 1], input, &mut out);
                }
                LayerSpec::Tanh => tanh_forward(input, &mut out),
                LayerSpec::AvgPool { size } => pool_forward(si.channels, si.height, si.width, size, input, &mut out),
                LayerSpec::Dense { .. } => {
                    let slot = self.slots[l].expect("dense has weights");
                    dense_forward(si.len(), &self.params[slot], &self.params[slot + 1], input, &mut out);
                }
            }
            acts.push(out);
        }
        acts
    }

    /// Loss, probabilities and parameter gradients for one sample.
    pub fn gradients(&self, x: &[T], target: usize) -> Result<(T, Vec<T>, Gradients<T>)> {
        self.check_input(x)?;
        if target >= self.classes() {
            return Err(Error::InvalidParam(format!("class {target} out of range")));
        }
        let acts = self.activations(x);
        let probs = softmax(acts.last().expect("at least one layer"));
        let l = loss(&probs, target);
        // Softmax and cross-entropy together: dL/dz = p - onehot.
        let mut delta: Vec<T> = probs.clone();
        delta[target] = delta[target] - T::one();
        let mut grads = Gradients::zeros_like(&self.params);
        for (li, layer) in self.spec.layers.iter().enumerate().rev() {
            let (si, so) = (self.shapes[li], self.shapes[li + 1]);
            let need_input = li > 0;
            let mut din = vec![T::zero(); if need_input { si.len() } else { 0 }];
            let din_opt = need_input.then_some(din.as_mut_slice());
            match *layer {
                LayerSpec::Conv { kernel, .. } => {
                    let slot = self.slots[li].expect("conv has weights");
                    let g = conv_geom(si, so, kernel);
                    let (dw, db) = split_pair(&mut grads.tensors, slot);
                    conv_backward(&g, &self.params[slot], &acts[li], &delta, dw, db, din_opt);
                }
                LayerSpec::Tanh => {
                    if let Some(d) = din_opt {
                        tanh_backward(&acts[li + 1], &delta, d);
                    }
                }
                LayerSpec::AvgPool { size } => {
                    if let Some(d) = din_opt {
                        pool_backward(si.channels, si.height, si.width, size, &delta, d);
                    }
                }
                LayerSpec::Dense { .. } => {
                    let slot = self.slots[li].expect("dense has weights");
                    let (dw, db) = split_pair(&mut grads.tensors, slot);
                    dense_backward(si.len(), &self.params[slot], &acts[li], &delta, dw, db, din_opt);
                }
            }
            delta = din;
        }
        Ok((l, probs, grads))
    }

    /// Mean loss and gradients over a batch. Samples run in parallel; their
    /// gradients are summed in batch order so the result does not depend on
    /// the thread count.
    pub fn batch_gradients(&self, batch: &[(Vec<T>, usize)]) -> Result<BatchOutcome<T>> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let per_sample: Vec<(T, Vec<T>, Gradients<T>)> = batch
            .par_iter()
            .map(|(x, t)| self.gradients(x, *t))
            .collect::<Result<_>>()?;
        let mut total = Gradients::zeros_like(&self.params);
        let mut loss_sum = T::zero();
        let mut correct = 0;
        for ((l, probs, g), (_, t)) in per_sample.iter().zip(batch) {
            total.add(g);
            loss_sum = loss_sum + *l;
            if argmax(probs).0 == *t {
                correct += 1;
            }
        }
        let inv = T::one() / cast(batch.len() as f64);
        total.scale(inv);
        Ok(BatchOutcome {
            loss: loss_sum * inv,
            correct,
            gradients: total,
        })
    }

    /// Backpropagates one batch and applies an Adam step at `lr`.
    pub fn backward_and_step(
        &mut self,
        batch: &[(Vec<T>, usize)],
        adam: &mut Adam<T>,
        lr: f64,
    ) -> Result<BatchOutcome<T>> {
        let outcome = self.batch_gradients(batch)?;
        adam.step(self, &outcome.gradients, lr);
        Ok(outcome)
    }
}

fn conv_geom(si: Shape, so: Shape, kernel: usize) -> ConvGeom {
    ConvGeom {
        in_c: si.channels,
        out_c: so.channels,
        k: kernel,
        in_h: si.height,
        in_w: si.width,
    }
}

fn split_pair<T>(tensors: &mut [Vec<T>], slot: usize) -> (&mut [T], &mut [T]) {
    let (a, b) = tensors[slot..].split_at_mut(1);
    (&mut a[0], &mut b[0])
}

/// First index of the largest value.
pub(crate) fn argmax<T: Scalar>(v: &[T]) -> (usize, T) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, T::neg_infinity()), |best, (i, p)| if p > best.1 { (i, p) } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::AdamParams;

    fn small_spec() -> ModelSpec {
        ModelSpec {
            input_size: 12,
            layers: vec![
                LayerSpec::Conv { maps: 2, kernel: 3 },
                LayerSpec::Tanh,
                LayerSpec::AvgPool { size: 2 },
                LayerSpec::Conv { maps: 3, kernel: 2 },
                LayerSpec::Tanh,
                LayerSpec::AvgPool { size: 2 },
                LayerSpec::Dense { units: 4 },
            ],
        }
    }

    fn random_input(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let model = Model::<f64>::zeroed(ModelSpec::lenet(10)).unwrap();
        let img = BinaryMask::from_fn(100, 100, |x, y| (x * y) % 7 == 0);
        let p = model.forward(&img).unwrap();
        assert_eq!(p.len(), 10);
        assert!(p.iter().all(|&v| (v - 0.1).abs() < 1e-12));
    }

    #[test]
    fn forward_checks_dimensions() {
        let model = Model::<f32>::new(ModelSpec::lenet(10), 1).unwrap();
        assert!(matches!(
            model.forward(&BinaryMask::filled(99, 100, false)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn forward_is_deterministic() {
        let a = Model::<f32>::new(ModelSpec::lenet(10), 7).unwrap();
        let b = Model::<f32>::new(ModelSpec::lenet(10), 7).unwrap();
        let img = BinaryMask::from_fn(100, 100, |x, y| (x + 2 * y) % 5 < 2);
        let pa = a.forward(&img).unwrap();
        let pb = b.forward(&img).unwrap();
        assert_eq!(
            pa.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            pb.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let sum: f32 = pa.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        assert!(pa.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn parameter_layout() {
        let model = Model::<f32>::new(ModelSpec::lenet(10), 0).unwrap();
        assert_eq!(
            model.param_shapes(),
            vec![vec![4, 1, 5, 5], vec![4], vec![12, 4, 5, 5], vec![12], vec![10, 5808], vec![10]]
        );
        assert_eq!(model.parameter_count(), 100 + 4 + 1200 + 12 + 58080 + 10);
    }

    #[test]
    fn whole_model_gradient_check() {
        let model = Model::<f64>::new(small_spec(), 3).unwrap();
        let x = random_input(4, 144);
        let (_, _, grads) = model.gradients(&x, 2).unwrap();
        let eps = 1e-4;
        let mut worst: f64 = 0.0;
        for (t, tensor) in model.params().iter().enumerate() {
            for i in 0..tensor.len() {
                let mut m = model.clone();
                m.params_mut()[t][i] += eps;
                let up = loss(&m.forward_values(&x).unwrap(), 2);
                m.params_mut()[t][i] -= 2.0 * eps;
                let down = loss(&m.forward_values(&x).unwrap(), 2);
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads.tensors[t][i];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-3, "worst relative error {worst}");
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let mut model = Model::<f32>::new(small_spec(), 5).unwrap();
        let before = model.clone();
        let mut adam = Adam::new(AdamParams::default(), &model);
        let batch: Vec<(Vec<f32>, usize)> = (0..16)
            .map(|i| (random_input(i, 144).iter().map(|&v| v as f32).collect(), i as usize % 4))
            .collect();
        model.backward_and_step(&batch, &mut adam, 0.0).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn single_sample_loss_decreases() {
        let mut model = Model::<f32>::new(ModelSpec::lenet(10), 11).unwrap();
        let img = BinaryMask::from_fn(100, 100, |x, y| {
            let (dx, dy) = (x as f64 - 50.0, y as f64 - 50.0);
            dx * dx + dy * dy < 900.0
        });
        let batch = vec![(mask_to_input::<f32>(&img), 3)];
        let mut adam = Adam::new(AdamParams::default(), &model);
        let mut last = f32::INFINITY;
        for step in 0..12 {
            let out = model.backward_and_step(&batch, &mut adam, 1e-4).unwrap();
            assert!(out.loss < last, "step {step}: {} !< {last}", out.loss);
            last = out.loss;
        }
    }
}
