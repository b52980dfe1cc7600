use super::{annotate, FrameSource, Pipeline, PipelineConfig};
use crate::error::{Error, Result};
use crate::imaging::Frame;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    /// Frames read, including unreadable ones.
    pub frames: usize,
    /// Frames skipped because they could not be read or processed.
    pub failed: usize,
    pub detections: usize,
    /// Detections whose segmentation failed.
    pub unsegmented: usize,
}

/// Streams a sequence through the pipeline, writing one JSON line per
/// detection in (frame, region) order.
///
/// The first `background_frames` readable frames build the background model
/// and are then processed like any other frame. Unreadable frames are
/// skipped with a warning; the run fails only when no frame could be used.
pub fn run(config: PipelineConfig, source: &mut dyn FrameSource, mut out: impl Write) -> Result<RunSummary> {
    config.validate()?;
    let mut summary = RunSummary::default();
    let mut buffered: Vec<(String, Result<Frame>)> = Vec::new();
    let mut readable = 0;
    while readable < config.background_frames {
        let Some((name, frame)) = source.next_frame() else { break };
        readable += usize::from(frame.is_ok());
        buffered.push((name, frame));
    }
    if buffered.is_empty() {
        return Err(Error::NoFrames);
    }
    if readable == 0 {
        return Err(Error::Config("no frame could be read".into()));
    }
    let init: Vec<Frame> = buffered.iter().filter_map(|(_, f)| f.as_ref().ok()).cloned().collect();
    let init = if init.len() == 1 { vec![init[0].clone(), init[0].clone()] } else { init };
    let emit_timings = config.output.emit_timings;
    let annotate_dir = config.output.annotate_dir.clone();
    if let Some(dir) = &annotate_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut pipeline = Pipeline::new(config, &init)?;

    let mut handle = |pipeline: &mut Pipeline, name: &str, frame: Result<Frame>| -> Result<()> {
        summary.frames += 1;
        let frame = match frame {
            Ok(f) => f,
            Err(e) => {
                log::warn!("skipping {name}: {e}");
                summary.failed += 1;
                pipeline.skip_frame();
                return Ok(());
            }
        };
        let result = match pipeline.process_frame(&frame) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping {name}: {e}");
                summary.failed += 1;
                return Ok(());
            }
        };
        for det in &result.detections {
            summary.detections += 1;
            summary.unsegmented += usize::from(!det.segmented);
            if emit_timings {
                serde_json::to_writer(&mut out, det)?;
            } else {
                let mut det = det.clone();
                det.stage_timings = None;
                serde_json::to_writer(&mut out, &det)?;
            }
            out.write_all(b"\n")?;
        }
        if let Some(dir) = &annotate_dir {
            let img = annotate(&result);
            img.save(dir.join(format!("frame_{:05}.png", result.index)))?;
        }
        Ok(())
    };

    for (name, frame) in buffered {
        handle(&mut pipeline, &name, frame)?;
    }
    while let Some((name, frame)) = source.next_frame() {
        handle(&mut pipeline, &name, frame)?;
    }
    out.flush()?;
    if summary.failed == summary.frames {
        return Err(Error::Config("every frame failed".into()));
    }
    log::info!(
        "{} frames, {} skipped, {} detections",
        summary.frames,
        summary.failed,
        summary.detections
    );
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{synthetic_sequence, SequenceParams};

    #[test]
    fn record_count_matches_hands() {
        let seq = synthetic_sequence(&SequenceParams { frames: 16, seed: 4, ..Default::default() }).unwrap();
        let hands: usize = seq.iter().map(|f| f.hands.len()).sum();
        let frames: Vec<Frame> = seq.into_iter().map(|f| f.frame).collect();
        let mut out = Vec::new();
        let summary = run(PipelineConfig::default(), &mut frames.into_iter(), &mut out).unwrap();
        assert_eq!(summary.frames, 16);
        assert_eq!(summary.detections, hands);
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), hands);
        assert!(!text.contains("stage_timings"));
    }

    #[test]
    fn empty_source_is_an_error() {
        let mut src = Vec::<Frame>::new().into_iter();
        assert!(matches!(run(PipelineConfig::default(), &mut src, Vec::new()), Err(Error::NoFrames)));
    }
}
