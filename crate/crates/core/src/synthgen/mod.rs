//! Synthetic hands with exact ground truth, thermal-style rendering and
//! brute-force oracles.
//!
//! A hand is a palm disk, a palm heel joining the disk to a wrist segment
//! (their convex hull), a forearm rectangle from the wrist to the frame edge
//! and optional capsule fingers on the far side of the palm.

mod corpus;
mod sequence;
mod shapes;

pub use corpus::{
    corpus_with, random_scene, sample_hand, segmentation_corpus, wide_arm_corpus, write_corpus,
    CorpusRecord, CorpusSample, HandRanges, Scene, CORPUS_FRAME,
};
pub use sequence::{
    read_frame, synthetic_sequence, write_frame, write_sequence, SequenceFrame, SequenceParams,
    SequenceRecord, RAW_FRAME,
};
pub use shapes::{render_shape, shape_dataset, Shape, SHAPE_CLASSES};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, Frame, Point, Raster};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Frame side the forearm crosses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryEdge {
    Top,
    Bottom,
    Left,
    Right,
}

/// One finger: a capsule starting inside the palm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerSpec {
    /// Degrees, relative to the direction pointing away from the forearm.
    pub angle: f64,
    /// Reach of the fingertip beyond the palm circle, in pixels.
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandSpec {
    pub palm_center: Point,
    pub palm_radius: f64,
    pub arm_width: f64,
    /// Direction from the palm toward the forearm in degrees; 0 points along
    /// +x and 90 along +y (down).
    pub arm_angle: f64,
    pub entry_edge: EntryEdge,
    /// Distance from the palm centre to each wrist corner, in palm radii.
    pub wrist_reach: f64,
    #[serde(default)]
    pub fingers: Vec<FingerSpec>,
}

impl HandSpec {
    /// Unit vector toward the forearm and its left-hand normal.
    pub fn axis(&self) -> (Point, Point) {
        let a = self.arm_angle.to_radians();
        let u = Point::new(a.cos(), a.sin());
        (u, Point::new(-u.y, u.x))
    }

    /// Distance along the arm axis from the palm centre to the wrist chord.
    pub fn wrist_offset(&self) -> f64 {
        let reach = self.wrist_reach * self.palm_radius;
        (reach * reach - self.arm_width * self.arm_width / 4.0).sqrt()
    }

    /// Ground-truth wrist corners.
    pub fn wrist_chord(&self) -> (Point, Point) {
        let (u, v) = self.axis();
        let base = self.palm_center + u * self.wrist_offset();
        (base + v * (self.arm_width / 2.0), base - v * (self.arm_width / 2.0))
    }
}

/// Ground-truth label of one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionLabel {
    #[default]
    Background,
    Palm,
    Arm,
    Finger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub cop: Point,
    /// Radius of the largest circle inside the hand.
    pub max_inscribed_radius: f64,
    pub wrist_chord: (Point, Point),
    pub labels: Raster<RegionLabel>,
}

impl GroundTruth {
    pub fn mask(&self) -> BinaryMask {
        self.labels.map(|l| l != RegionLabel::Background)
    }
}

/// Exit edge of the ray from `p` along `u` inside a `w × h` frame, with the
/// distance to it.
pub fn ray_exit(p: Point, u: Point, w: usize, h: usize) -> (EntryEdge, f64) {
    let (xmax, ymax) = ((w - 1) as f64, (h - 1) as f64);
    let mut best = (EntryEdge::Right, f64::INFINITY);
    let mut consider = |edge, t: f64| {
        if t >= 0.0 && t < best.1 {
            best = (edge, t);
        }
    };
    if u.x > 0.0 {
        consider(EntryEdge::Right, (xmax - p.x) / u.x);
    } else if u.x < 0.0 {
        consider(EntryEdge::Left, -p.x / u.x);
    }
    if u.y > 0.0 {
        consider(EntryEdge::Bottom, (ymax - p.y) / u.y);
    } else if u.y < 0.0 {
        consider(EntryEdge::Top, -p.y / u.y);
    }
    best
}

/// Convex hull (counter-clockwise in y-up terms) by the monotone chain.
fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let turn = |o: Point, a: Point, b: Point| (a - o).cross(b - o);
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn in_convex(hull: &[Point], p: Point) -> bool {
    let n = hull.len();
    (0..n).all(|i| (hull[(i + 1) % n] - hull[i]).cross(p - hull[i]) >= -1e-9)
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).x * ab.x + (p - a).y * ab.y) / (ab.x * ab.x + ab.y * ab.y);
    p.dist(a + ab * t.clamp(0.0, 1.0))
}

const HULL_DISK_VERTICES: usize = 720;
/// Slack for pixels exactly on a boundary line.
const EPS: f64 = 1e-9;

/// Validates a spec against a frame without rasterizing it.
pub fn check_spec(spec: &HandSpec, frame_size: (usize, usize)) -> Result<()> {
    let (w, h) = frame_size;
    let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
    let (c, r) = (spec.palm_center, spec.palm_radius);
    if w < 2 || h < 2 {
        return bad("frame too small");
    }
    if !(r > 0.0) {
        return bad("palm_radius must be positive");
    }
    if !(spec.arm_width > 0.0) {
        return bad("arm_width must be positive");
    }
    if !(spec.wrist_reach * r > spec.arm_width / 2.0) {
        return bad("wrist_reach too short for the arm width");
    }
    if c.x - r < 0.0 || c.y - r < 0.0 || c.x + r > (w - 1) as f64 || c.y + r > (h - 1) as f64 {
        return bad("palm disk leaves the frame");
    }
    let (u, _) = spec.axis();
    let (edge, exit) = ray_exit(c, u, w, h);
    if edge != spec.entry_edge {
        return bad("arm direction does not reach the entry edge");
    }
    let s = spec.wrist_offset();
    if exit <= s {
        return bad("wrist lies outside the frame");
    }
    for f in &spec.fingers {
        if !(f.width > 0.0 && f.length > 0.0) {
            return bad("finger length and width must be positive");
        }
    }
    for (_, tip, rad) in finger_capsules(spec) {
        if tip.x - rad < 0.0 || tip.y - rad < 0.0 || tip.x + rad > (w - 1) as f64 || tip.y + rad > (h - 1) as f64 {
            return bad("finger leaves the frame");
        }
    }
    Ok(())
}

/// Base, tip and radius of each finger capsule.
fn finger_capsules(spec: &HandSpec) -> Vec<(Point, Point, f64)> {
    let (c, r) = (spec.palm_center, spec.palm_radius);
    spec.fingers
        .iter()
        .map(|f| {
            let a = (spec.arm_angle + 180.0 + f.angle).to_radians();
            let dir = Point::new(a.cos(), a.sin());
            (c + dir * (0.6 * r), c + dir * (r + f.length - f.width / 2.0), f.width / 2.0)
        })
        .collect()
}

/// Rasterizes a hand into a `w × h` frame.
pub fn make_hand(spec: &HandSpec, frame_size: (usize, usize)) -> Result<(BinaryMask, GroundTruth)> {
    check_spec(spec, frame_size)?;
    let (w, h) = frame_size;
    let (c, r) = (spec.palm_center, spec.palm_radius);
    let (u, v) = spec.axis();
    let (_, exit) = ray_exit(c, u, w, h);
    let s = spec.wrist_offset();
    let (w1, w2) = spec.wrist_chord();
    let mut hull_pts: Vec<Point> = (0..HULL_DISK_VERTICES)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / HULL_DISK_VERTICES as f64;
            // Circumscribed polygon so the disk is contained.
            let rr = r / (std::f64::consts::PI / HULL_DISK_VERTICES as f64).cos();
            c + Point::new(a.cos(), a.sin()) * rr
        })
        .collect();
    hull_pts.push(w1);
    hull_pts.push(w2);
    let hull = convex_hull(hull_pts);
    let half_extent = r.max(spec.arm_width / 2.0);
    let disk_like = |p: Point| p.dist_sq(c) <= r * r;
    let in_palm = |p: Point| {
        if disk_like(p) {
            return true;
        }
        // Beyond the disk only the heel toward the wrist can contain p.
        let d = p - c;
        let along = d.x * u.x + d.y * u.y;
        let across = d.x * v.x + d.y * v.y;
        along > 0.0 && along <= s + EPS && across.abs() <= half_extent + EPS && in_convex(&hull, p)
    };
    let fingers = finger_capsules(spec);
    // Only pixels inside the hand's bounding box need testing.
    let mut extent = vec![
        c - Point::new(r, r),
        c + Point::new(r, r),
        w1,
        w2,
        w1 + u * (exit + spec.arm_width),
        w2 + u * (exit + spec.arm_width),
    ];
    for &(_, tip, rad) in &fingers {
        extent.push(tip - Point::new(rad, rad));
        extent.push(tip + Point::new(rad, rad));
    }
    let lo_x = extent.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let lo_y = extent.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let hi_x = extent.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max).ceil().min((w - 1) as f64) as usize;
    let hi_y = extent.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max).ceil().min((h - 1) as f64) as usize;
    let labels = Raster::from_fn(w, h, |x, y| {
        if x < lo_x || x > hi_x || y < lo_y || y > hi_y {
            return RegionLabel::Background;
        }
        let p = Point::new(x as f64, y as f64);
        if in_palm(p) {
            return RegionLabel::Palm;
        }
        if fingers.iter().any(|&(a, b, rad)| segment_distance(p, a, b) <= rad + EPS) {
            return RegionLabel::Finger;
        }
        let d = p - c;
        let along = d.x * u.x + d.y * u.y;
        let across = d.x * v.x + d.y * v.y;
        if along >= s - EPS && across.abs() <= spec.arm_width / 2.0 + EPS {
            return RegionLabel::Arm;
        }
        RegionLabel::Background
    });
    let gt = GroundTruth {
        cop: c,
        max_inscribed_radius: r.max(spec.arm_width / 2.0),
        wrist_chord: (w1, w2),
        labels,
    };
    Ok((gt.mask(), gt))
}

/// Largest inscribed circle by exhaustive search: every foreground pixel is
/// scored by its exact distance to the nearest background pixel inside the
/// raster. Ties go to the lowest row, then column.
pub fn oracle_max_inscribed_circle(mask: &BinaryMask) -> Result<(Point, f64)> {
    let (w, h) = mask.dimensions();
    // Any nearest background pixel has a foreground 4-neighbour, so only
    // those are candidates. They are bucketed to prune the scan.
    const CELL: usize = 16;
    let (gw, gh) = (w.div_ceil(CELL), h.div_ceil(CELL));
    let mut buckets: Vec<Vec<(i64, i64)>> = vec![Vec::new(); gw * gh];
    let fg = |x: i64, y: i64| mask.get_checked(x, y) == Some(true);
    let mut any_fg = false;
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as i64, y as i64);
            if mask.get(x, y) {
                any_fg = true;
                continue;
            }
            if fg(xi + 1, yi) || fg(xi - 1, yi) || fg(xi, yi + 1) || fg(xi, yi - 1) {
                buckets[(y / CELL) * gw + x / CELL].push((xi, yi));
            }
        }
    }
    if !any_fg {
        return Err(Error::EmptyMask);
    }
    let mut best: Option<(usize, usize, u64)> = None;
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let (cx, cy) = ((x / CELL) as i64, (y / CELL) as i64);
            let mut nearest = u64::MAX;
            let mut ring = 0i64;
            loop {
                // Cells in this ring are at least (ring - 1) * CELL away.
                let reach = ((ring - 1).max(0) as u64) * CELL as u64;
                if reach * reach > nearest || ring as usize > gw.max(gh) {
                    break;
                }
                for gy in cy - ring..=cy + ring {
                    for gx in cx - ring..=cx + ring {
                        let on_ring = (gy - cy).abs() == ring || (gx - cx).abs() == ring;
                        if !on_ring || gx < 0 || gy < 0 || gx >= gw as i64 || gy >= gh as i64 {
                            continue;
                        }
                        for &(bx, by) in &buckets[gy as usize * gw + gx as usize] {
                            let dx = bx - x as i64;
                            let dy = by - y as i64;
                            nearest = nearest.min((dx * dx + dy * dy) as u64);
                        }
                    }
                }
                ring += 1;
            }
            if best.is_none_or(|(_, _, d)| nearest > d) {
                best = Some((x, y, nearest));
            }
        }
    }
    let (x, y, d) = best.expect("mask has foreground");
    let radius = if d == u64::MAX { f64::INFINITY } else { (d as f64).sqrt() };
    Ok((Point::new(x as f64, y as f64), radius))
}

/// Thermal-style frame: background and hand pixels drawn from normal
/// distributions around their levels, clamped to 16 bits.
pub fn render_thermal(
    mask: &BinaryMask,
    bg_level: u16,
    hand_level: u16,
    noise_sigma: f64,
    seed: u64,
) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("finite sigma");
    Raster::from_fn(mask.width(), mask.height(), |x, y| {
        let level = if mask.get(x, y) { hand_level } else { bg_level } as f64;
        let n = if noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        (level + n).round().clamp(0.0, u16::MAX as f64) as u16
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{BackgroundModel, BackgroundSubtractor, RangeCompressor};
    use crate::imaging::{distance_transform, iou_masks};
    use rand::Rng;

    fn base_spec() -> HandSpec {
        HandSpec {
            palm_center: Point::new(200.0, 150.0),
            palm_radius: 50.0,
            arm_width: 60.0,
            arm_angle: 90.0,
            entry_edge: EntryEdge::Bottom,
            wrist_reach: 1.4,
            fingers: Vec::new(),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let zero = HandSpec { arm_width: 0.0, ..base_spec() };
        assert!(matches!(make_hand(&zero, (400, 300)), Err(Error::InvalidSpec(_))));
        let wrong_edge = HandSpec { entry_edge: EntryEdge::Top, ..base_spec() };
        assert!(make_hand(&wrong_edge, (400, 300)).is_err());
        let outside = HandSpec { palm_center: Point::new(20.0, 150.0), ..base_spec() };
        assert!(make_hand(&outside, (400, 300)).is_err());
    }

    #[test]
    fn union_count_matches_direct_rasterization() {
        let spec = base_spec();
        let (mask, gt) = make_hand(&spec, (400, 300)).unwrap();
        let (c, r) = (spec.palm_center, spec.palm_radius);
        let (w1, w2) = gt.wrist_chord;
        let s = spec.wrist_offset();
        // Independent rasterizer: the heel is the union over wrist points q of
        // the cone from q tangent to the disk.
        let in_cone = |p: Point, q: Point| {
            let pq = p.dist(q);
            if pq == 0.0 {
                return true;
            }
            let e = (p - q) * (1.0 / pq);
            let b = e.x * (c - q).x + e.y * (c - q).y;
            let disc = r * r - (c.dist_sq(q) - b * b);
            disc >= 0.0 && b + disc.sqrt() >= pq
        };
        let mut count = 0usize;
        let mut palm_oracle = 0usize;
        for y in 0..300 {
            for x in 0..400 {
                let p = Point::new(x as f64, y as f64);
                let disk = p.dist(c) <= r;
                let heel = (0..=400).any(|i| in_cone(p, w1 + (w2 - w1) * (i as f64 / 400.0)));
                let arm = p.y - c.y >= s && (p.x - c.x).abs() <= 30.0;
                count += (disk || heel || arm) as usize;
                palm_oracle += (disk || heel) as usize;
            }
        }
        let palm = gt.labels.data().iter().filter(|&&l| l == RegionLabel::Palm).count();
        assert!((palm as f64 - palm_oracle as f64).abs() <= 0.002 * palm_oracle as f64);
        assert!((mask.count() as f64 - count as f64).abs() <= 0.002 * count as f64, "{} vs {count}", mask.count());
    }

    #[test]
    fn inscribed_radius_at_least_palm() {
        let spec = base_spec();
        let (mask, gt) = make_hand(&spec, (400, 300)).unwrap();
        assert!(gt.max_inscribed_radius >= spec.palm_radius);
        let (center, radius) = oracle_max_inscribed_circle(&mask).unwrap();
        assert!(center.dist(spec.palm_center) <= 1.5);
        assert!((radius - gt.max_inscribed_radius).abs() <= 1.5);
    }

    #[test]
    fn oracle_lone_disk() {
        let c = Point::new(50.0, 60.0);
        let mask = BinaryMask::from_fn(110, 120, |x, y| Point::new(x as f64, y as f64).dist(c) <= 40.0);
        let (p, r) = oracle_max_inscribed_circle(&mask).unwrap();
        assert!(p.dist(c) <= 1.0);
        assert!((r - 40.0).abs() <= 1.0);
    }

    #[test]
    fn oracle_two_disks() {
        let a = Point::new(30.0, 30.0);
        let b = Point::new(120.0, 60.0);
        let mask = BinaryMask::from_fn(170, 100, |x, y| {
            let p = Point::new(x as f64, y as f64);
            p.dist(a) <= 20.0 || p.dist(b) <= 35.0
        });
        let (p, _) = oracle_max_inscribed_circle(&mask).unwrap();
        assert!(p.dist(b) <= 1.0);
        assert!(matches!(
            oracle_max_inscribed_circle(&BinaryMask::filled(3, 3, false)),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn oracle_agrees_with_distance_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let (w, h) = (rng.random_range(5..60), rng.random_range(5..60));
            let mut mask = BinaryMask::from_fn(w, h, |_, _| rng.random_bool(0.8));
            mask.set(0, 0, false);
            mask.set(w - 1, h - 1, true);
            let dt = distance_transform(&mask);
            let mut best = (0, 0, -1.0);
            for y in 0..h {
                for x in 0..w {
                    if mask.get(x, y) && dt.get(x, y) > best.2 {
                        best = (x, y, dt.get(x, y));
                    }
                }
            }
            let (p, r) = oracle_max_inscribed_circle(&mask).unwrap();
            assert_eq!((p.x as usize, p.y as usize), (best.0, best.1));
            assert_eq!(r, best.2);
        }
    }

    #[test]
    fn thermal_rendering() {
        let mask = BinaryMask::from_fn(30, 20, |x, _| x > 10);
        let flat = render_thermal(&mask, 1000, 3000, 0.0, 1);
        let values: std::collections::BTreeSet<u16> = flat.data().iter().copied().collect();
        assert_eq!(values.into_iter().collect::<Vec<_>>(), vec![1000, 3000]);
        assert_eq!(render_thermal(&mask, 1000, 3000, 25.0, 7), render_thermal(&mask, 1000, 3000, 25.0, 7));
        assert_ne!(render_thermal(&mask, 1000, 3000, 25.0, 7), render_thermal(&mask, 1000, 3000, 25.0, 8));
    }

    #[test]
    fn thermal_hand_recovered_by_background_model() {
        let (mask, _) = make_hand(&base_spec(), (400, 300)).unwrap();
        let empty = BinaryMask::filled(400, 300, false);
        let init: Vec<Frame> = (0..10).map(|i| render_thermal(&empty, 2000, 2400, 20.0, i)).collect();
        let comp = RangeCompressor::fit(&init, RangeCompressor::DEFAULT_HEADROOM).unwrap();
        let gray: Vec<_> = init.iter().map(|f| comp.compress(f)).collect();
        let model = BackgroundModel::init(&gray, Default::default()).unwrap();
        let hand = comp.compress(&render_thermal(&mask, 2000, 2400, 20.0, 99));
        let found = model.subtract(&hand).unwrap();
        assert!(iou_masks(&found, &mask) >= 0.99);
    }
}
