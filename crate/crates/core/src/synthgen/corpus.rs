//! Random hand specs, evaluation corpora, multi-hand scenes and export.

use super::{check_spec, make_hand, ray_exit, FingerSpec, GroundTruth, HandSpec};
use crate::error::{Error, Result};
use crate::imaging::{BBox, BinaryMask, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Frame size after the default crop.
pub const CORPUS_FRAME: (usize, usize) = (640, 440);

/// Sampling ranges for random hands; factors are in palm radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandRanges {
    pub radius: (f64, f64),
    pub arm_width: (f64, f64),
    pub wrist_reach: (f64, f64),
    /// Forearm length visible between wrist and frame edge.
    pub arm_length: (f64, f64),
    pub fingers: (usize, usize),
}

impl HandRanges {
    /// Hands whose wrist chord lies strictly inside the search bounds.
    pub fn segmentation() -> Self {
        Self {
            radius: (25.0, 60.0),
            arm_width: (1.15, 1.75),
            wrist_reach: (1.33, 1.37),
            arm_length: (0.5, 3.0),
            fingers: (0, 5),
        }
    }

    /// Forearms wider than the longest accepted wrist chord, long enough
    /// that the expanded search circle stays inside the forearm.
    pub fn wide_arm() -> Self {
        Self {
            arm_width: (1.95, 2.4),
            arm_length: (2.5, 4.0),
            ..Self::segmentation()
        }
    }

    /// Smaller hands so up to three fit side by side.
    pub fn scene() -> Self {
        Self {
            radius: (22.0, 40.0),
            arm_length: (0.5, 2.0),
            ..Self::segmentation()
        }
    }
}

fn sample_fingers(rng: &mut impl Rng, r: f64, range: (usize, usize)) -> Vec<FingerSpec> {
    let count = rng.random_range(range.0..=range.1);
    (0..count)
        .map(|i| {
            let slot = if count == 1 { 0.0 } else { -70.0 + 140.0 * i as f64 / (count - 1) as f64 };
            FingerSpec {
                angle: slot + rng.random_range(-8.0..8.0),
                length: rng.random_range(0.5..1.1) * r,
                width: rng.random_range(0.22..0.38) * r,
            }
        })
        .collect()
}

/// Draws a valid hand for a `w × h` frame whose forearm crosses one frame
/// side cleanly.
pub fn sample_hand(rng: &mut impl Rng, frame: (usize, usize), ranges: &HandRanges) -> HandSpec {
    let (w, h) = frame;
    loop {
        let r = rng.random_range(ranges.radius.0..=ranges.radius.1);
        let arm_width = rng.random_range(ranges.arm_width.0..=ranges.arm_width.1) * r;
        let wrist_reach = rng.random_range(ranges.wrist_reach.0..=ranges.wrist_reach.1);
        let arm_angle: f64 = rng.random_range(0.0..360.0);
        let margin = r + 2.0;
        if 2.0 * margin >= w as f64 || 2.0 * margin >= h as f64 {
            continue;
        }
        let palm_center = Point::new(
            rng.random_range(margin..w as f64 - margin),
            rng.random_range(margin..h as f64 - margin),
        );
        let mut spec = HandSpec {
            palm_center,
            palm_radius: r,
            arm_width,
            arm_angle,
            entry_edge: super::EntryEdge::Bottom,
            wrist_reach,
            fingers: sample_fingers(rng, r, ranges.fingers),
        };
        let (u, _) = spec.axis();
        let (edge, exit) = ray_exit(palm_center, u, w, h);
        spec.entry_edge = edge;
        let arm = exit - spec.wrist_offset();
        if arm < ranges.arm_length.0 * r || arm > ranges.arm_length.1 * r {
            continue;
        }
        // Both forearm sides leave through the same edge, each with at least
        // the minimum visible length past its wrist corner.
        let (w1, w2) = spec.wrist_chord();
        let sides_ok = [w1, w2].iter().all(|&corner| {
            let (e, t) = ray_exit(corner, u, w, h);
            e == edge && t >= ranges.arm_length.0 * r
        });
        if !sides_ok {
            continue;
        }
        if check_spec(&spec, frame).is_ok() {
            return spec;
        }
    }
}

/// One hand cropped to its tight box, as the region detector would hand it
/// to segmentation. Ground truth is in region coordinates.
#[derive(Debug, Clone)]
pub struct CorpusSample {
    pub spec: HandSpec,
    pub frame_size: (usize, usize),
    /// Region in frame coordinates.
    pub bbox: BBox,
    pub mask: BinaryMask,
    pub truth: GroundTruth,
}

impl CorpusSample {
    pub fn from_spec(spec: HandSpec, frame_size: (usize, usize)) -> Result<Self> {
        let (full, gt) = make_hand(&spec, frame_size)?;
        let bbox = full.foreground_bbox().ok_or(Error::EmptyMask)?;
        let o = bbox.origin();
        let truth = GroundTruth {
            cop: gt.cop - o,
            max_inscribed_radius: gt.max_inscribed_radius,
            wrist_chord: (gt.wrist_chord.0 - o, gt.wrist_chord.1 - o),
            labels: gt.labels.crop(&bbox),
        };
        Ok(Self {
            spec,
            frame_size,
            bbox,
            mask: full.crop(&bbox),
            truth,
        })
    }

    pub fn record(&self, index: usize, file: String) -> CorpusRecord {
        let o = self.bbox.origin();
        CorpusRecord {
            index,
            file,
            frame_width: self.frame_size.0,
            frame_height: self.frame_size.1,
            bbox: self.bbox,
            spec: self.spec.clone(),
            cop: self.truth.cop + o,
            max_inscribed_radius: self.truth.max_inscribed_radius,
            wrist_chord: (self.truth.wrist_chord.0 + o, self.truth.wrist_chord.1 + o),
        }
    }
}

/// Deterministic corpus of `n` hands drawn from `ranges`.
pub fn corpus_with(n: usize, seed: u64, ranges: &HandRanges) -> Vec<CorpusSample> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let spec = sample_hand(&mut rng, CORPUS_FRAME, ranges);
            CorpusSample::from_spec(spec, CORPUS_FRAME).expect("sampled specs are valid")
        })
        .collect()
}

/// Hands with wrist chords inside the bubble-search bounds, on 640×440
/// frames.
pub fn segmentation_corpus(n: usize, seed: u64) -> Vec<CorpusSample> {
    corpus_with(n, seed, &HandRanges::segmentation())
}

/// Hands whose forearm is wider than the longest accepted wrist chord.
pub fn wide_arm_corpus(n: usize, seed: u64) -> Vec<CorpusSample> {
    corpus_with(n, seed, &HandRanges::wide_arm())
}

/// Ground-truth sidecar line for one exported mask, in frame coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub index: usize,
    pub file: String,
    pub frame_width: usize,
    pub frame_height: usize,
    pub bbox: BBox,
    pub spec: HandSpec,
    pub cop: Point,
    pub max_inscribed_radius: f64,
    pub wrist_chord: (Point, Point),
}

/// Writes each sample as a full-frame PNG mask plus one JSON line per sample
/// in `truth.jsonl`.
pub fn write_corpus(dir: &Path, samples: &[CorpusSample]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut sidecar = std::io::BufWriter::new(std::fs::File::create(dir.join("truth.jsonl"))?);
    for (i, sample) in samples.iter().enumerate() {
        let file = format!("mask_{i:05}.png");
        let (w, h) = sample.frame_size;
        let mut img = image::GrayImage::new(w as u32, h as u32);
        for y in 0..sample.mask.height() {
            for x in 0..sample.mask.width() {
                if sample.mask.get(x, y) {
                    img.put_pixel((x + sample.bbox.x0) as u32, (y + sample.bbox.y0) as u32, image::Luma([255]));
                }
            }
        }
        img.save(dir.join(&file))?;
        serde_json::to_writer(&mut sidecar, &sample.record(i, file))?;
        sidecar.write_all(b"\n")?;
    }
    sidecar.flush()?;
    Ok(())
}

/// Several disjoint hands in one frame.
#[derive(Debug, Clone)]
pub struct Scene {
    pub mask: BinaryMask,
    pub hands: Vec<HandSpec>,
    /// Tight box of each hand, in the order of `hands`.
    pub boxes: Vec<BBox>,
}

/// Minimum background gap between two hands of a scene.
const SCENE_GAP: i64 = 3;

/// Places `n_hands` hands that stay at least a few pixels apart.
pub fn random_scene(rng: &mut impl Rng, frame: (usize, usize), n_hands: usize) -> Scene {
    let (w, h) = frame;
    'retry: loop {
        let mut mask = BinaryMask::filled(w, h, false);
        let mut hands = Vec::new();
        let mut boxes = Vec::new();
        for _ in 0..n_hands {
            let mut placed = false;
            for _ in 0..50 {
                let spec = sample_hand(rng, frame, &HandRanges::scene());
                let (hand, _) = make_hand(&spec, frame).expect("sampled specs are valid");
                let b = hand.foreground_bbox().expect("hands are non-empty");
                if clashes(&mask, &hand, &b) {
                    continue;
                }
                for y in b.y0..b.y1 {
                    for x in b.x0..b.x1 {
                        if hand.get(x, y) {
                            mask.set(x, y, true);
                        }
                    }
                }
                hands.push(spec);
                boxes.push(b);
                placed = true;
                break;
            }
            if !placed {
                continue 'retry;
            }
        }
        return Scene { mask, hands, boxes };
    }
}

fn clashes(existing: &BinaryMask, hand: &BinaryMask, b: &BBox) -> bool {
    for y in b.y0..b.y1 {
        for x in b.x0..b.x1 {
            if !hand.get(x, y) {
                continue;
            }
            for dy in -SCENE_GAP..=SCENE_GAP {
                for dx in -SCENE_GAP..=SCENE_GAP {
                    if existing.get_checked(x as i64 + dx, y as i64 + dy) == Some(true) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::label_components;

    #[test]
    fn corpus_is_valid_and_seeded() {
        let a = segmentation_corpus(20, 5);
        let b = segmentation_corpus(20, 5);
        for (s, t) in a.iter().zip(&b) {
            assert_eq!(s.spec, t.spec);
            let r = s.spec.palm_radius;
            assert!((25.0..=60.0).contains(&r));
            let ratio = s.spec.arm_width / r;
            assert!(ratio > 1.1 && ratio < 1.9);
            let (w1, w2) = s.truth.wrist_chord;
            assert!((w1.dist(w2) - s.spec.arm_width).abs() < 1e-9);
            assert_eq!(s.mask.foreground_bbox().unwrap(), BBox::new(0, 0, s.bbox.width(), s.bbox.height()));
        }
    }

    #[test]
    fn scenes_have_separate_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=3 {
            let scene = random_scene(&mut rng, CORPUS_FRAME, n);
            assert_eq!(scene.hands.len(), n);
            assert_eq!(label_components(&scene.mask).count(), n);
        }
    }

    #[test]
    fn export_writes_masks_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let samples = segmentation_corpus(3, 1);
        write_corpus(dir.path(), &samples).unwrap();
        let text = std::fs::read_to_string(dir.path().join("truth.jsonl")).unwrap();
        let records: Vec<CorpusRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(records.len(), 3);
        let img = image::open(dir.path().join(&records[1].file)).unwrap().to_luma8();
        let white = img.pixels().filter(|p| p.0[0] == 255).count();
        assert_eq!(white, samples[1].mask.count());
        assert_eq!(records[1].cop, samples[1].spec.palm_center);
    }
}
