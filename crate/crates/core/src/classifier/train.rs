use super::model::argmax;
use super::{mask_to_input, Adam, AdamParams, LrSchedule, Model, Scalar};
use crate::error::{Error, Result};
use crate::imaging::BinaryMask;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// A binary image and its zero-based class index.
pub type Sample = (BinaryMask, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub schedule: LrSchedule,
    pub adam: AdamParams,
    /// Each training image is rotated by an angle drawn from
    /// `[0, rotation_degrees)`; 0 disables augmentation.
    pub rotation_degrees: f64,
    pub seed: u64,
    /// Stop once held-out accuracy reaches this value.
    pub target_accuracy: Option<f64>,
    /// Stop after this many epochs without a held-out improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 30,
            schedule: LrSchedule::default(),
            adam: AdamParams::default(),
            rotation_degrees: 360.0,
            seed: 0,
            target_accuracy: None,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(16..=32).contains(&self.batch_size) {
            return Err(Error::InvalidParam("batch_size must be in 16..=32".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParam("epochs must be at least 1".into()));
        }
        if !(0.0..=360.0).contains(&self.rotation_degrees) {
            return Err(Error::InvalidParam("rotation_degrees must be in [0, 360]".into()));
        }
        if let Some(t) = self.target_accuracy {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidParam("target_accuracy must be in (0, 1]".into()));
            }
        }
        self.schedule.validate()?;
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// One-based.
    pub epoch: usize,
    pub lr: f64,
    /// Mean training loss over the epoch's (augmented) samples.
    pub loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }

    pub fn seconds(&self) -> f64 {
        self.epochs.iter().map(|e| e.seconds).sum()
    }
}

/// Rotates about the image centre by `degrees` (counter-clockwise on screen)
/// with nearest-neighbour sampling; pixels mapped from outside stay
/// background.
pub fn augment_rotate(image: &BinaryMask, degrees: f64) -> BinaryMask {
    let (w, h) = image.dimensions();
    let a = degrees.rem_euclid(360.0).to_radians();
    let (sin, cos) = a.sin_cos();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    BinaryMask::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        // Inverse map of the output pixel into the source.
        let sx = cx + dx * cos - dy * sin;
        let sy = cy + dx * sin + dy * cos;
        image
            .get_checked(sx.round() as i64, sy.round() as i64)
            .unwrap_or(false)
    })
}

/// Fraction of samples whose most probable class is the label.
pub fn evaluate<T: Scalar>(model: &Model<T>, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let correct: usize = samples
        .par_iter()
        .map(|(img, label)| model.forward(img).map(|p| usize::from(argmax(&p).0 == *label)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(correct as f64 / samples.len() as f64)
}

/// Mini-batch Adam training with per-epoch rotation augmentation.
/// Deterministic for a given model, data and config.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train_set: &[Sample],
    validation: &[Sample],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = model.classes();
    if let Some((_, bad)) = train_set.iter().chain(validation).find(|(_, l)| *l >= classes) {
        return Err(Error::InvalidParam(format!("label {bad} but the model has {classes} classes")));
    }
    let first = train_set[0].1;
    if train_set.iter().all(|(_, l)| *l == first) {
        return Err(Error::InvalidParam("training needs at least 2 classes".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(config.adam, model);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport {
        epochs: Vec::new(),
        stopped_early: false,
    };
    let mut best = f64::NEG_INFINITY;
    let mut stale = 0;
    for epoch in 0..config.epochs {
        let start = Instant::now();
        let lr = config.schedule.lr(epoch);
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(Vec<T>, usize)> = chunk
                .iter()
                .map(|&i| {
                    let (img, label) = &train_set[i];
                    let x = if config.rotation_degrees > 0.0 {
                        let angle = rng.random_range(0.0..config.rotation_degrees);
                        mask_to_input(&augment_rotate(img, angle))
                    } else {
                        mask_to_input(img)
                    };
                    (x, *label)
                })
                .collect();
            let out = model.backward_and_step(&batch, &mut adam, lr)?;
            loss_sum += out.loss.to_f64().unwrap_or(f64::NAN) * batch.len() as f64;
            correct += out.correct;
        }
        let validation_accuracy = if validation.is_empty() {
            None
        } else {
            Some(evaluate(model, validation)?)
        };
        let m = EpochMetrics {
            epoch: epoch + 1,
            lr,
            loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            validation_accuracy,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {} lr {:.1e} loss {:.4} train {:.3} held-out {:?}",
            m.epoch,
            m.lr,
            m.loss,
            m.train_accuracy,
            m.validation_accuracy
        );
        report.epochs.push(m);

        if let Some(acc) = validation_accuracy {
            if config.target_accuracy.is_some_and(|t| acc >= t) {
                report.stopped_early = epoch + 1 < config.epochs;
                break;
            }
            if acc > best {
                best = acc;
                stale = 0;
            } else {
                stale += 1;
                if config.patience.is_some_and(|p| stale >= p) {
                    report.stopped_early = epoch + 1 < config.epochs;
                    break;
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{LayerSpec, ModelSpec};
    use crate::imaging::Point;
    use proptest::prelude::*;

    fn disk(n: usize, r: f64) -> BinaryMask {
        let c = (n as f64 - 1.0) / 2.0;
        BinaryMask::from_fn(n, n, |x, y| Point::new(x as f64, y as f64).dist(Point::new(c, c)) <= r)
    }

    #[test]
    fn rotation_by_zero_or_full_turn_is_identity() {
        let img = BinaryMask::from_fn(100, 100, |x, y| x > 20 && y < 70 && (x + y) % 3 != 0);
        assert_eq!(augment_rotate(&img, 0.0), img);
        assert_eq!(augment_rotate(&img, 360.0), img);
    }

    #[test]
    fn quarter_turn_moves_a_pixel() {
        let mut img = BinaryMask::filled(5, 5, false);
        img.set(4, 2, true);
        let out = augment_rotate(&img, 90.0);
        assert_eq!(out.count(), 1);
        // Counter-clockwise on screen: right of centre goes to above it.
        assert!(out.get(2, 0));
    }

    proptest! {
        #[test]
        fn centered_disk_keeps_its_area(angle in 0.0f64..360.0) {
            let img = disk(100, 30.0);
            let rotated = augment_rotate(&img, angle);
            let (a, b) = (img.count() as f64, rotated.count() as f64);
            prop_assert!((a - b).abs() <= 0.02 * a);
        }
    }

    fn tiny_spec(classes: usize) -> ModelSpec {
        ModelSpec {
            input_size: 12,
            layers: vec![
                LayerSpec::Conv { maps: 2, kernel: 3 },
                LayerSpec::Tanh,
                LayerSpec::AvgPool { size: 2 },
                LayerSpec::Dense { units: classes },
            ],
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut model = Model::<f32>::new(tiny_spec(2), 0).unwrap();
        let cfg = TrainConfig::default();
        assert!(matches!(train(&mut model, &[], &[], &cfg), Err(Error::EmptyDataset)));
        let one_class = vec![(BinaryMask::filled(12, 12, true), 0); 3];
        assert!(train(&mut model, &one_class, &[], &cfg).is_err());
        let bad_batch = TrainConfig { batch_size: 8, ..Default::default() };
        assert!(bad_batch.validate().is_err());
    }

    #[test]
    fn memorizes_one_sample_per_class() {
        let samples: Vec<Sample> = vec![
            (BinaryMask::from_fn(12, 12, |x, _| x < 6), 0),
            (BinaryMask::from_fn(12, 12, |_, y| y < 6), 1),
            (BinaryMask::from_fn(12, 12, |x, y| (x + y) % 2 == 0), 2),
        ];
        let data: Vec<Sample> = samples.iter().cycle().take(96).cloned().collect();
        let mut model = Model::<f32>::new(tiny_spec(3), 1).unwrap();
        let cfg = TrainConfig {
            batch_size: 16,
            epochs: 200,
            schedule: LrSchedule { decay: 1.0, ..Default::default() },
            rotation_degrees: 0.0,
            target_accuracy: Some(1.0),
            ..Default::default()
        };
        let report = train(&mut model, &data, &samples, &cfg).unwrap();
        assert_eq!(report.last().unwrap().validation_accuracy, Some(1.0));
    }

    #[test]
    fn training_is_reproducible() {
        let data: Vec<Sample> = (0..32)
            .map(|i| (BinaryMask::from_fn(12, 12, |x, y| (x * 7 + y * 3 + i) % 5 < 2), i % 2))
            .collect();
        let cfg = TrainConfig { batch_size: 16, epochs: 3, seed: 9, ..Default::default() };
        let run = || {
            let mut m = Model::<f32>::new(tiny_spec(2), 4).unwrap();
            let r = train(&mut m, &data, &[], &cfg).unwrap();
            (m, r.epochs.iter().map(|e| (e.loss, e.train_accuracy)).collect::<Vec<_>>())
        };
        let (ma, ra) = run();
        let (mb, rb) = run();
        assert_eq!(ma, mb);
        assert_eq!(ra, rb);
    }
}
