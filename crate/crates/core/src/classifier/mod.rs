//! Small convolutional gesture classifier trained from scratch.
//!
//! The reference stack follows LeNet-1 proportions on 100×100 binary inputs:
//! two valid 5×5 convolutions with tanh, each followed by 2×2 average pooling,
//! then a dense layer and softmax. The stack is a [`ModelSpec`] value, so
//! smaller variants share all of the code.

mod adam;
mod checkpoint;
mod layers;
mod model;
mod train;

pub use adam::{Adam, AdamParams, LrSchedule};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{mask_to_input, BatchOutcome, Gradients, Model};
pub use train::{augment_rotate, evaluate, train, EpochMetrics, Sample, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use num_traits::Float;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::iter::Sum;

/// Element type of model tensors.
pub trait Scalar: Float + Sum + Send + Sync + Debug + 'static {}

impl<T: Float + Sum + Send + Sync + Debug + 'static> Scalar for T {}

pub(crate) fn cast<T: Scalar>(v: f64) -> T {
    T::from(v).expect("f64 converts to any float")
}

/// Gesture number, 1 to 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct GestureLabel(u8);

impl GestureLabel {
    pub const COUNT: usize = 10;

    pub fn new(id: u8) -> Result<Self> {
        if (1..=Self::COUNT as u8).contains(&id) {
            Ok(Self(id))
        } else {
            Err(Error::InvalidParam(format!("gesture id {id} outside 1..=10")))
        }
    }

    pub fn from_index(index: usize) -> Result<Self> {
        u8::try_from(index + 1)
            .map_err(|_| Error::InvalidParam(format!("class index {index} out of range")))
            .and_then(Self::new)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Zero-based class index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl TryFrom<u8> for GestureLabel {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        Self::new(id)
    }
}

impl From<GestureLabel> for u8 {
    fn from(l: GestureLabel) -> u8 {
        l.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    /// Valid (unpadded) convolution, stride 1.
    Conv { maps: usize, kernel: usize },
    Tanh,
    /// Non-overlapping mean pooling; trailing rows and columns that do not
    /// fill a window are dropped.
    AvgPool { size: usize },
    /// Fully connected layer over the flattened input.
    Dense { units: usize },
}

/// Channels × height × width of one activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Architecture descriptor. The last layer must be dense; softmax is applied
/// on top of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Side of the square single-channel input.
    pub input_size: usize,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// The reference stack for 100×100 inputs.
    pub fn lenet(classes: usize) -> Self {
        Self {
            input_size: crate::imaging::NORMALIZED_SIZE,
            layers: vec![
                LayerSpec::Conv { maps: 4, kernel: 5 },
                LayerSpec::Tanh,
                LayerSpec::AvgPool { size: 2 },
                LayerSpec::Conv { maps: 12, kernel: 5 },
                LayerSpec::Tanh,
                LayerSpec::AvgPool { size: 2 },
                LayerSpec::Dense { units: classes },
            ],
        }
    }

    /// Activation shapes from the input to the logits, one more than there
    /// are layers.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.input_size == 0 {
            return bad("input_size must be positive".into());
        }
        let mut s = Shape {
            channels: 1,
            height: self.input_size,
            width: self.input_size,
        };
        let mut out = vec![s];
        for (i, layer) in self.layers.iter().enumerate() {
            s = match *layer {
                LayerSpec::Conv { maps, kernel } => {
                    if maps == 0 || kernel == 0 || kernel > s.height || kernel > s.width {
                        return bad(format!("layer {i}: conv {maps}x{kernel} does not fit {s:?}"));
                    }
                    Shape {
                        channels: maps,
                        height: s.height - kernel + 1,
                        width: s.width - kernel + 1,
                    }
                }
                LayerSpec::Tanh => s,
                LayerSpec::AvgPool { size } => {
                    if size == 0 || size > s.height || size > s.width {
                        return bad(format!("layer {i}: pool {size} does not fit {s:?}"));
                    }
                    Shape {
                        channels: s.channels,
                        height: s.height / size,
                        width: s.width / size,
                    }
                }
                LayerSpec::Dense { units } => {
                    if units == 0 {
                        return bad(format!("layer {i}: dense layer needs units"));
                    }
                    Shape {
                        channels: units,
                        height: 1,
                        width: 1,
                    }
                }
            };
            out.push(s);
        }
        match self.layers.last() {
            Some(LayerSpec::Dense { units }) if *units >= 2 => Ok(out),
            _ => bad("last layer must be dense with at least 2 units".into()),
        }
    }

    pub fn classes(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::Dense { units }) => *units,
            _ => 0,
        }
    }
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exp.iter().copied().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Probability floor inside the log of the cross-entropy.
pub const LOSS_FLOOR: f64 = 1e-12;

/// Cross-entropy of one prediction against a class index.
pub fn loss<T: Scalar>(probs: &[T], target: usize) -> T {
    -probs[target].max(cast(LOSS_FLOOR)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lenet_shapes() {
        let shapes = ModelSpec::lenet(10).shapes().unwrap();
        let dims: Vec<_> = shapes.iter().map(|s| (s.channels, s.height, s.width)).collect();
        assert_eq!(
            dims,
            vec![
                (1, 100, 100),
                (4, 96, 96),
                (4, 96, 96),
                (4, 48, 48),
                (12, 44, 44),
                (12, 44, 44),
                (12, 22, 22),
                (10, 1, 1)
            ]
        );
    }

    #[test]
    fn rejects_bad_stacks() {
        let mut spec = ModelSpec::lenet(10);
        spec.layers.pop();
        assert!(spec.shapes().is_err());
        let spec = ModelSpec {
            input_size: 4,
            layers: vec![LayerSpec::Conv { maps: 1, kernel: 5 }, LayerSpec::Dense { units: 2 }],
        };
        assert!(spec.shapes().is_err());
    }

    #[test]
    fn loss_values() {
        assert_eq!(loss(&[0.0f64, 1.0, 0.0], 1), 0.0);
        let uniform = vec![0.1f64; 10];
        assert!((loss(&uniform, 3) - 10f64.ln()).abs() < 1e-12);
        assert!((loss(&[1.0f64, 0.0], 1) - 1e12f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn gesture_labels() {
        assert!(GestureLabel::new(0).is_err());
        assert!(GestureLabel::new(11).is_err());
        let g = GestureLabel::new(7).unwrap();
        assert_eq!(g.index(), 6);
        assert_eq!(GestureLabel::from_index(6).unwrap(), g);
        assert_eq!(serde_json::to_string(&g).unwrap(), "7");
        assert!(serde_json::from_str::<GestureLabel>("12").is_err());
    }

    proptest! {
        #[test]
        fn softmax_normalizes(logits in proptest::collection::vec(-50.0f64..50.0, 2..12)) {
            let p = softmax(&logits);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }

        #[test]
        fn loss_matches_direct_formula(raw in proptest::collection::vec(0.01f64..1.0, 10), t in 0usize..10) {
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
            prop_assert!((loss(&p, t) + (raw[t] / s).ln()).abs() < 1e-12);
        }
    }
}
