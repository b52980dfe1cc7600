//! Per-pixel background model of the hand-free scene.
//!
//! Each pixel is a single adaptive Gaussian. A pixel is a foreground
//! candidate when it deviates from the mean by more than `k·σ`; the absolute
//! differences of the candidates are then binarized with Otsu's level. The
//! model only learns from frames whose mask came out empty, so a hand resting
//! in view never bleeds into the background.

use crate::error::{Error, Result};
use crate::imaging::{otsu_threshold, BinaryMask, Frame, GrayImage};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundParams {
    /// Candidate threshold `k` in standard deviations.
    pub match_sigma: f64,
    /// Exponential learning rate for hand-free frames, in `(0, 1]`.
    pub learn_rate: f64,
    /// Variance floor in 8-bit intensity units squared.
    pub min_variance: f64,
    /// Fewer candidates than this and the mask is empty.
    pub noise_floor: usize,
}

impl Default for BackgroundParams {
    fn default() -> Self {
        Self {
            match_sigma: 3.0,
            learn_rate: 0.05,
            min_variance: 4.0,
            noise_floor: 50,
        }
    }
}

impl BackgroundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.match_sigma > 0.0) {
            return Err(Error::InvalidParam("match_sigma must be positive".into()));
        }
        if !(self.learn_rate > 0.0 && self.learn_rate <= 1.0) {
            return Err(Error::InvalidParam("learn_rate must be in (0, 1]".into()));
        }
        if !(self.min_variance > 0.0) {
            return Err(Error::InvalidParam("min_variance must be positive".into()));
        }
        Ok(())
    }
}

/// Produces hand masks and learns from hand-free frames.
///
/// `update` needs exclusive access; `subtract` calls may run concurrently.
pub trait BackgroundSubtractor {
    fn subtract(&self, frame: &GrayImage) -> Result<BinaryMask>;
    fn update(&mut self, frame: &GrayImage, mask: &BinaryMask) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    width: usize,
    height: usize,
    mean: Vec<f64>,
    variance: Vec<f64>,
    params: BackgroundParams,
}

impl BackgroundModel {
    /// Per-pixel population mean and variance over hand-free frames.
    pub fn init(frames: &[GrayImage], params: BackgroundParams) -> Result<Self> {
        params.validate()?;
        if frames.len() < 2 {
            return Err(Error::NotEnoughFrames(frames.len()));
        }
        let first = &frames[0];
        for f in &frames[1..] {
            first.ensure_same_size(f)?;
        }
        let n = frames.len() as f64;
        let len = first.data().len();
        let mut mean = vec![0.0; len];
        for f in frames {
            for (m, &v) in mean.iter_mut().zip(f.data()) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut variance = vec![0.0; len];
        for f in frames {
            for ((s, &m), &v) in variance.iter_mut().zip(&mean).zip(f.data()) {
                let d = v as f64 - m;
                *s += d * d;
            }
        }
        variance
            .iter_mut()
            .for_each(|s| *s = (*s / n).max(params.min_variance));
        Ok(Self {
            width: first.width(),
            height: first.height(),
            mean,
            variance,
            params,
        })
    }

    pub fn params(&self) -> &BackgroundParams {
        &self.params
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    fn check(&self, frame: &GrayImage) -> Result<()> {
        if frame.dimensions() != (self.width, self.height) {
            return Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                got: frame.dimensions(),
            });
        }
        Ok(())
    }
}

impl BackgroundSubtractor for BackgroundModel {
    fn subtract(&self, frame: &GrayImage) -> Result<BinaryMask> {
        self.check(frame)?;
        let k = self.params.match_sigma;
        let mut candidates = 0usize;
        let diff: Vec<u8> = frame
            .data()
            .iter()
            .zip(self.mean.iter().zip(&self.variance))
            .map(|(&v, (&m, &var))| {
                let d = (v as f64 - m).abs();
                if d > k * var.sqrt() {
                    candidates += 1;
                    d.round().clamp(1.0, 255.0) as u8
                } else {
                    0
                }
            })
            .collect();
        if candidates < self.params.noise_floor {
            return Ok(BinaryMask::filled(self.width, self.height, false));
        }
        let diff = GrayImage::from_vec(self.width, self.height, diff)?;
        Ok(diff.binarize(otsu_threshold(&diff)))
    }

    fn update(&mut self, frame: &GrayImage, mask: &BinaryMask) -> Result<()> {
        self.check(frame)?;
        frame.ensure_same_size(mask)?;
        if !mask.is_empty() {
            return Ok(());
        }
        let alpha = self.params.learn_rate;
        let floor = self.params.min_variance;
        for ((m, var), &v) in self
            .mean
            .iter_mut()
            .zip(self.variance.iter_mut())
            .zip(frame.data())
        {
            let d = v as f64 - *m;
            *m += alpha * d;
            *var = ((1.0 - alpha) * *var + alpha * d * d).max(floor);
        }
        Ok(())
    }
}

/// Linear 16-bit to 8-bit mapping fitted on the initialization stack.
///
/// The stack's `[min, max]` range is widened by `headroom` raw counts on each
/// side. A fixed absolute margin keeps sensor noise within a grey level or
/// two; scaling by the stack's own span would stretch pure noise across the
/// 8-bit range and make every hand-free frame look like foreground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeCompressor {
    pub lo: f64,
    pub hi: f64,
}

impl RangeCompressor {
    pub const DEFAULT_HEADROOM: f64 = 2048.0;

    pub fn fit(frames: &[Frame], headroom: f64) -> Result<Self> {
        let (mut lo, mut hi) = (u16::MAX, 0u16);
        for f in frames {
            for &v in f.data() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if frames.is_empty() {
            return Err(Error::NotEnoughFrames(0));
        }
        if !(headroom >= 0.0) {
            return Err(Error::InvalidParam("headroom must be non-negative".into()));
        }
        // The half-count minimum keeps a constant stack from giving a zero span.
        let margin = headroom.max(0.5);
        Ok(Self {
            lo: lo as f64 - margin,
            hi: hi as f64 + margin,
        })
    }

    pub fn compress(&self, frame: &Frame) -> GrayImage {
        let scale = 255.0 / (self.hi - self.lo);
        frame.map(|v| ((v as f64 - self.lo) * scale).round().clamp(0.0, 255.0) as u8)
    }
}
