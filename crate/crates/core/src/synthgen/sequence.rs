//! Raw 16-bit frame sequences with known hand boxes, for end-to-end runs.

use super::{random_scene, render_thermal, CORPUS_FRAME};
use crate::error::{Error, Result};
use crate::imaging::{BBox, BinaryMask, Frame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Raw sensor frame size; the default crop keeps the top 440 rows.
pub const RAW_FRAME: (usize, usize) = (640, 480);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceParams {
    pub frames: usize,
    /// Hand-free frames at the start of the sequence.
    pub background_frames: usize,
    /// Every later frame holds between `hands.0` and `hands.1` hands.
    pub hands: (usize, usize),
    pub bg_level: u16,
    pub hand_level: u16,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SequenceParams {
    fn default() -> Self {
        Self {
            frames: 100,
            background_frames: 10,
            hands: (1, 2),
            bg_level: 2000,
            hand_level: 2400,
            noise_sigma: 20.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SequenceFrame {
    pub frame: Frame,
    /// Tight hand boxes in cropped-frame coordinates.
    pub hands: Vec<BBox>,
}

/// Truth sidecar line for one written frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub index: usize,
    pub file: String,
    pub hands: Vec<BBox>,
}

/// Scenes are laid out on the cropped 640×440 area; rows below it repeat the
/// last cropped row, so forearms entering from the bottom continue off-frame.
pub fn synthetic_sequence(params: &SequenceParams) -> Result<Vec<SequenceFrame>> {
    let (lo, hi) = params.hands;
    if lo > hi || hi > 3 {
        return Err(Error::InvalidParam("hands must satisfy lo <= hi <= 3".into()));
    }
    if params.hand_level <= params.bg_level {
        return Err(Error::InvalidParam("hand_level must exceed bg_level".into()));
    }
    let (w, h) = RAW_FRAME;
    let (_, ch) = CORPUS_FRAME;
    let mut out = Vec::with_capacity(params.frames);
    for i in 0..params.frames {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let n = if i < params.background_frames { 0 } else { rng.random_range(lo..=hi) };
        let (mask, hands) = if n == 0 {
            (BinaryMask::filled(w, h, false), Vec::new())
        } else {
            let scene = random_scene(&mut rng, CORPUS_FRAME, n);
            let raw = BinaryMask::from_fn(w, h, |x, y| scene.mask.get(x, y.min(ch - 1)));
            (raw, scene.boxes)
        };
        let frame = render_thermal(
            &mask,
            params.bg_level,
            params.hand_level,
            params.noise_sigma,
            rng.random(),
        );
        out.push(SequenceFrame { frame, hands });
    }
    Ok(out)
}

/// Writes `frame_00000.png`, ... as 16-bit grayscale plus `truth.jsonl`.
pub fn write_sequence(dir: &Path, frames: &[SequenceFrame]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut sidecar = std::io::BufWriter::new(std::fs::File::create(dir.join("truth.jsonl"))?);
    for (index, f) in frames.iter().enumerate() {
        let file = format!("frame_{index:05}.png");
        write_frame(&dir.join(&file), &f.frame)?;
        let rec = SequenceRecord {
            index,
            file,
            hands: f.hands.clone(),
        };
        serde_json::to_writer(&mut sidecar, &rec)?;
        sidecar.write_all(b"\n")?;
    }
    sidecar.flush()?;
    Ok(())
}

/// Saves a frame as 16-bit grayscale; the format follows the extension
/// (`.png` or `.pgm`).
pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    let buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
        image::ImageBuffer::from_raw(frame.width() as u32, frame.height() as u32, frame.data().to_vec())
            .expect("buffer matches dimensions");
    buf.save(path)?;
    Ok(())
}

/// Loads any grayscale image as 16-bit; 8-bit sources are scaled by 257.
pub fn read_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path)?.into_luma16();
    let (w, h) = img.dimensions();
    Frame::from_vec(w as usize, h as usize, img.into_raw())
}
