//! Per-stage latency and success rates over synthetic hands and frames.

use super::{Pipeline, PipelineConfig};
use crate::error::{Error, Result};
use crate::imaging::Frame;
use crate::segmentation::{
    background_inside, segment_hand, wrist_criteria, Segmentation, SegmentationParams, WristProvenance,
};
use crate::synthgen::{oracle_max_inscribed_circle, CorpusSample, RegionLabel};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Instant;

/// Most background pixels a successful palm bubble may cover.
pub const BUBBLE_HOLE_LIMIT: usize = 20;
/// Allowed relative radius error against the largest inscribed circle.
pub const BUBBLE_RADIUS_TOLERANCE: f64 = 0.10;
/// Allowed distance between found and true wrist chord midpoints, in pixels.
pub const WRIST_MIDPOINT_TOLERANCE: f64 = 5.0;

/// Mean, min and max of a set of durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl StageStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        Self {
            count: samples.len(),
            mean: samples.iter().sum::<f64>() / samples.len() as f64,
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Palm bubble success: centre on a palm pixel, at most
/// [`BUBBLE_HOLE_LIMIT`] background pixels inside, and radius within
/// [`BUBBLE_RADIUS_TOLERANCE`] of the exhaustive largest inscribed circle.
pub fn bubble_growth_success(sample: &CorpusSample, seg: &Segmentation) -> Result<bool> {
    // The pad makes the region border count as background for the oracle.
    let (_, r_max) = oracle_max_inscribed_circle(&sample.mask.padded(1))?;
    let c = seg.bubble.center.round();
    let in_palm = sample.truth.labels.get_checked(c.x as i64, c.y as i64) == Some(RegionLabel::Palm);
    Ok(in_palm
        && background_inside(&sample.mask, &seg.bubble) <= BUBBLE_HOLE_LIMIT
        && (seg.bubble.radius - r_max).abs() <= BUBBLE_RADIUS_TOLERANCE * r_max)
}

/// Wrist success: the pair came from the search, satisfies the chord and
/// reference-side criteria, and its midpoint is within
/// [`WRIST_MIDPOINT_TOLERANCE`] of the true junction chord midpoint.
pub fn bubble_search_success(sample: &CorpusSample, seg: &Segmentation, params: &SegmentationParams) -> bool {
    let w = &seg.wrist;
    if w.provenance != WristProvenance::FoundBySearch {
        return false;
    }
    let (a, b) = sample.truth.wrist_chord;
    wrist_criteria(w.w1, w.w2, &seg.bubble, seg.reference.c_ref, params)
        && w.w1.midpoint(w.w2).dist(a.midpoint(b)) <= WRIST_MIDPOINT_TOLERANCE
}

/// Bubble growth (BG) and bubble search (BS) over a hand corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationBench {
    pub hands: usize,
    pub bg: StageStats,
    pub bs: StageStats,
    pub bg_success: f64,
    pub bs_success: f64,
    /// Whole segmentation per hand, reference point to normalization.
    pub total: StageStats,
}

pub fn bench_segmentation(corpus: &[CorpusSample], params: &SegmentationParams) -> Result<SegmentationBench> {
    if corpus.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut bg, mut bs, mut total) = (Vec::new(), Vec::new(), Vec::new());
    let (mut bg_ok, mut bs_ok) = (0, 0);
    for sample in corpus {
        let t = Instant::now();
        let seg = segment_hand(&sample.mask, params)?;
        total.push(t.elapsed().as_secs_f64());
        bg.push(seg.timings.bubble_growth);
        bs.push(seg.timings.bubble_search);
        bg_ok += usize::from(bubble_growth_success(sample, &seg)?);
        bs_ok += usize::from(bubble_search_success(sample, &seg, params));
    }
    let n = corpus.len() as f64;
    Ok(SegmentationBench {
        hands: corpus.len(),
        bg: StageStats::from_samples(&bg),
        bs: StageStats::from_samples(&bs),
        bg_success: bg_ok as f64 / n,
        bs_success: bs_ok as f64 / n,
        total: StageStats::from_samples(&total),
    })
}

/// End-to-end frame timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputBench {
    pub frames: usize,
    pub detections: usize,
    pub crop: StageStats,
    pub subtract: StageStats,
    pub region: StageStats,
    /// Segmentation plus classification of all regions of a frame.
    pub regions: StageStats,
    pub frame: StageStats,
    pub fps: f64,
}

/// Times `frames` through a pipeline initialized on `init`.
pub fn bench_throughput(config: &PipelineConfig, init: &[Frame], frames: &[Frame]) -> Result<ThroughputBench> {
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    let mut pipeline = Pipeline::new(config.clone(), init)?;
    let mut stages: [Vec<f64>; 5] = Default::default();
    let mut detections = 0;
    let start = Instant::now();
    for f in frames {
        let r = pipeline.process_frame(f)?;
        detections += r.detections.len();
        let t = r.timings;
        for (v, x) in stages.iter_mut().zip([t.crop, t.subtract, t.region, t.regions, t.total]) {
            v.push(x);
        }
    }
    let wall = start.elapsed().as_secs_f64();
    let [crop, subtract, region, regions, frame] = stages.map(|v| StageStats::from_samples(&v));
    Ok(ThroughputBench {
        frames: frames.len(),
        detections,
        crop,
        subtract,
        region,
        regions,
        frame,
        fps: frames.len() as f64 / wall,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub segmentation: SegmentationBench,
    pub throughput: Option<ThroughputBench>,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.segmentation;
        writeln!(f, "Palm bubble (BG) and wrist search (BS) over {} hands, seconds per hand", s.hands)?;
        writeln!(
            f,
            "{:>8} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "BG", "BS", "BG_avg", "BG_min", "BG_max", "BS_avg", "BS_min", "BS_max"
        )?;
        writeln!(
            f,
            "{:>7.2}% {:>7.2}% {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5}",
            100.0 * s.bg_success,
            100.0 * s.bs_success,
            s.bg.mean,
            s.bg.min,
            s.bg.max,
            s.bs.mean,
            s.bs.min,
            s.bs.max
        )?;
        if let Some(t) = &self.throughput {
            writeln!(f)?;
            writeln!(f, "{} frames, {} detections, {:.1} frames/sec", t.frames, t.detections, t.fps)?;
            writeln!(f, "{:<10} {:>9} {:>9} {:>9}", "stage", "avg", "min", "max")?;
            for (name, st) in [
                ("crop", &t.crop),
                ("subtract", &t.subtract),
                ("region", &t.region),
                ("segment", &t.regions),
                ("frame", &t.frame),
            ] {
                writeln!(f, "{name:<10} {:>9.5} {:>9.5} {:>9.5}", st.mean, st.min, st.max)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{segmentation_corpus, synthetic_sequence, SequenceParams};

    #[test]
    fn stats_of_samples() {
        let s = StageStats::from_samples(&[0.5, 0.25, 1.0]);
        assert_eq!((s.count, s.min, s.max), (3, 0.25, 1.0));
        assert!((s.mean - 0.583_333).abs() < 1e-5);
        assert_eq!(StageStats::from_samples(&[]), StageStats::default());
    }

    #[test]
    fn report_has_table_columns() {
        let corpus = segmentation_corpus(6, 1);
        let segmentation = bench_segmentation(&corpus, &SegmentationParams::default()).unwrap();
        assert!(segmentation.bg.min <= segmentation.bg.mean && segmentation.bg.mean <= segmentation.bg.max);
        let seq = synthetic_sequence(&SequenceParams { frames: 13, hands: (1, 1), ..Default::default() }).unwrap();
        let frames: Vec<Frame> = seq.into_iter().map(|f| f.frame).collect();
        let throughput = bench_throughput(&PipelineConfig::default(), &frames[..10], &frames[10..]).unwrap();
        assert_eq!(throughput.detections, 3);
        let text = BenchReport { segmentation, throughput: Some(throughput) }.to_string();
        for col in ["BG_avg", "BG_min", "BG_max", "BS_avg", "BS_min", "BS_max", "frames/sec"] {
            assert!(text.contains(col), "{col} missing from\n{text}");
        }
    }
}
