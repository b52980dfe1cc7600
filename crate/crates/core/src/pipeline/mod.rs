//! End-to-end frame processing: crop, background subtraction, region
//! detection, per-region segmentation and optional classification.
//!
//! Frames must be processed in order because the background model learns
//! from hand-free frames. Regions of one frame are segmented in parallel and
//! reported in region order.

mod annotate;
mod bench;
mod run;
mod source;

pub use annotate::annotate;
pub use bench::{
    bench_segmentation, bench_throughput, bubble_growth_success, bubble_search_success, BenchReport,
    SegmentationBench, StageStats, ThroughputBench,
};
pub use run::{run, RunSummary};
pub use source::{DirSource, FrameSource};

use crate::background::{BackgroundModel, BackgroundParams, BackgroundSubtractor, RangeCompressor};
use crate::classifier::Model;
use crate::error::{Error, Result};
use crate::imaging::{BBox, BinaryMask, Frame};
use crate::region::{detect_regions, RegionParams};
use crate::segmentation::{
    segment_hand, PalmBubble, ReferenceInfo, SegmentTimings, SegmentationParams, WristPair,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Version of the detection record layout.
pub const DETECTION_SCHEMA: u32 = 1;

/// Most hands the region detector may report per frame.
pub const MAX_HANDS_LIMIT: usize = 3;

/// Rectangle kept from each raw frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Default for CropRect {
    /// 640×480 sensor frames lose their bottom 40 rows.
    fn default() -> Self {
        Self {
            x: 0,
            y: 0,
            width: 640,
            height: 440,
        }
    }
}

impl CropRect {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.x, self.y, self.x + self.width, self.y + self.height)
    }

    pub fn apply(&self, frame: &Frame) -> Result<Frame> {
        let (w, h) = frame.dimensions();
        if self.x + self.width > w || self.y + self.height > h {
            return Err(Error::DimensionMismatch {
                expected: (self.x + self.width, self.y + self.height),
                got: (w, h),
            });
        }
        Ok(frame.crop(&self.bbox()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    /// Keep per-stage wall times in written records. Off by default so that
    /// records are reproducible byte for byte.
    pub emit_timings: bool,
    /// Directory for one annotated mask image per frame.
    pub annotate_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub crop: CropRect,
    pub region: RegionParams,
    pub segmentation: SegmentationParams,
    pub background: BackgroundParams,
    /// Hand-free frames at the start of a sequence used to build the
    /// background model.
    pub background_frames: usize,
    /// Raw counts added on each side of the initialization stack's range
    /// before mapping to 8 bits.
    pub headroom: f64,
    pub classifier: Option<PathBuf>,
    pub max_hands: usize,
    pub output: OutputOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            crop: CropRect::default(),
            region: RegionParams::default(),
            segmentation: SegmentationParams::default(),
            background: BackgroundParams::default(),
            background_frames: 10,
            headroom: RangeCompressor::DEFAULT_HEADROOM,
            classifier: None,
            max_hands: MAX_HANDS_LIMIT,
            output: OutputOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.crop.width == 0 || self.crop.height == 0 {
            return Err(Error::Config("crop must be non-empty".into()));
        }
        if self.max_hands == 0 || self.max_hands > MAX_HANDS_LIMIT {
            return Err(Error::Config(format!("max_hands must be in 1..={MAX_HANDS_LIMIT}")));
        }
        if self.background_frames < 2 {
            return Err(Error::Config("background_frames must be at least 2".into()));
        }
        if !(self.headroom >= 0.0) {
            return Err(Error::Config("headroom must be non-negative".into()));
        }
        self.region.validate()?;
        self.segmentation.validate()?;
        self.background.validate()
    }

    /// Parses TOML; unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Per-stage wall times for one detection, in seconds. Frame-level stages
/// are shared by all detections of the frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub crop: f64,
    pub subtract: f64,
    pub region: f64,
    #[serde(flatten)]
    pub segment: SegmentTimings,
    pub classify: f64,
}

/// One hand region of one frame. Coordinates are in the cropped frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub schema: u32,
    pub frame_index: usize,
    pub region_index: usize,
    #[serde(rename = "box")]
    pub bbox: BBox,
    /// `false` when segmentation failed and the fields below it are absent.
    pub segmented: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub reference: Option<ReferenceInfo>,
    pub bubble: Option<PalmBubble>,
    pub wrist: Option<WristPair>,
    /// One-based class number, `G1` to `G10` for gesture models.
    pub label: Option<usize>,
    pub confidence: Option<f64>,
    /// Always set by [`Pipeline::process_frame`]; [`run`] drops it from
    /// records unless timings were requested, keeping records reproducible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stage_timings: Option<StageTimings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameTimings {
    pub crop: f64,
    pub subtract: f64,
    pub region: f64,
    /// Wall time of all region work, including classification.
    pub regions: f64,
    pub total: f64,
}

/// Everything produced for one frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub index: usize,
    /// Hand mask of the cropped frame.
    pub mask: BinaryMask,
    pub detections: Vec<Detection>,
    /// Forearm-free region masks, parallel to `detections`; `None` where
    /// segmentation failed.
    pub hands: Vec<Option<BinaryMask>>,
    pub background_updated: bool,
    pub timings: FrameTimings,
}

/// Pipeline state carried across frames.
pub struct Pipeline {
    config: PipelineConfig,
    compressor: RangeCompressor,
    background: BackgroundModel,
    classifier: Option<Model<f32>>,
    next_index: usize,
}

impl Pipeline {
    /// Builds the background model from hand-free raw frames. The classifier
    /// named in the config, if any, is loaded here.
    pub fn new(config: PipelineConfig, init_frames: &[Frame]) -> Result<Self> {
        config.validate()?;
        let cropped = init_frames
            .iter()
            .map(|f| config.crop.apply(f))
            .collect::<Result<Vec<_>>>()?;
        let compressor = RangeCompressor::fit(&cropped, config.headroom)?;
        let gray: Vec<_> = cropped.iter().map(|f| compressor.compress(f)).collect();
        let background = BackgroundModel::init(&gray, config.background)?;
        let classifier = config.classifier.clone();
        let pipeline = Self {
            config,
            compressor,
            background,
            classifier: None,
            next_index: 0,
        };
        match classifier {
            Some(path) => pipeline.with_classifier(Model::load(&path)?),
            None => Ok(pipeline),
        }
    }

    pub fn with_classifier(mut self, model: Model<f32>) -> Result<Self> {
        let s = model.input_shape();
        if s.channels != 1 || s.width != crate::imaging::NORMALIZED_SIZE || s.height != s.width {
            return Err(Error::Config("classifier must take 100×100 single-channel input".into()));
        }
        self.classifier = Some(model);
        Ok(self)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn background(&self) -> &BackgroundModel {
        &self.background
    }

    /// Index the next processed frame will get.
    pub fn next_index(&self) -> usize {
        self.next_index
    }

    /// Counts a frame that could not be read, keeping indices aligned with
    /// the input sequence.
    pub fn skip_frame(&mut self) {
        self.next_index += 1;
    }

    /// Runs every stage on one raw frame. Only a frame too small for the
    /// crop is an error; failures inside a region yield an unsegmented
    /// detection.
    pub fn process_frame(&mut self, frame: &Frame) -> Result<FrameResult> {
        let index = self.next_index;
        self.next_index += 1;
        let start = Instant::now();
        let mut timings = FrameTimings::default();

        let t = Instant::now();
        let cropped = self.config.crop.apply(frame)?;
        let gray = self.compressor.compress(&cropped);
        timings.crop = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let mask = self.background.subtract(&gray)?;
        timings.subtract = t.elapsed().as_secs_f64();

        if mask.is_empty() {
            self.background.update(&gray, &mask)?;
            timings.total = start.elapsed().as_secs_f64();
            return Ok(FrameResult {
                index,
                mask,
                detections: Vec::new(),
                hands: Vec::new(),
                background_updated: true,
                timings,
            });
        }

        let t = Instant::now();
        let mut boxes = detect_regions(&mask, &self.config.region);
        boxes.truncate(self.config.max_hands);
        timings.region = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let per_region: Vec<(Detection, Option<BinaryMask>)> = boxes
            .par_iter()
            .enumerate()
            .map(|(region_index, bbox)| self.process_region(index, region_index, *bbox, &mask, &timings))
            .collect();
        timings.regions = t.elapsed().as_secs_f64();
        timings.total = start.elapsed().as_secs_f64();

        let (detections, hands) = per_region.into_iter().unzip();
        Ok(FrameResult {
            index,
            mask,
            detections,
            hands,
            background_updated: false,
            timings,
        })
    }

    fn process_region(
        &self,
        frame_index: usize,
        region_index: usize,
        bbox: BBox,
        mask: &BinaryMask,
        frame_timings: &FrameTimings,
    ) -> (Detection, Option<BinaryMask>) {
        let mut stage = StageTimings {
            crop: frame_timings.crop,
            subtract: frame_timings.subtract,
            region: frame_timings.region,
            ..Default::default()
        };
        let mut det = Detection {
            schema: DETECTION_SCHEMA,
            frame_index,
            region_index,
            bbox,
            segmented: false,
            error: None,
            reference: None,
            bubble: None,
            wrist: None,
            label: None,
            confidence: None,
            stage_timings: None,
        };
        let seg = match segment_hand(&mask.crop(&bbox), &self.config.segmentation) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("frame {frame_index} region {region_index}: {e}");
                det.error = Some(e.to_string());
                det.stage_timings = Some(stage);
                return (det, None);
            }
        };
        stage.segment = seg.timings;
        let origin = bbox.origin();
        det.segmented = true;
        det.reference = Some(seg.reference.translated(origin));
        det.bubble = Some(seg.bubble.translated(origin));
        det.wrist = Some(seg.wrist.translated(origin));
        if let Some(model) = &self.classifier {
            let t = Instant::now();
            match model.predict(&seg.normalized) {
                Ok((class, p)) => {
                    det.label = Some(class + 1);
                    det.confidence = Some(p as f64);
                }
                Err(e) => det.error = Some(e.to_string()),
            }
            stage.classify = t.elapsed().as_secs_f64();
        }
        det.stage_timings = Some(stage);
        (det, Some(seg.hand))
    }
}
