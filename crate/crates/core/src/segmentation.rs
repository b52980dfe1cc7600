//! Palm and wrist key points for one hand region, forearm removal and
//! normalization to the classifier input.
//!
//! All coordinates are local to the region mask: `x` is the column, `y` the
//! row, pixel centres sit on integer coordinates.

use crate::error::{Error, Result};
use crate::imaging::{
    distance_transform, label_components, tight_pad_resize, trace_contours, BinaryMask, Contour,
    Pixel, Point,
};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationParams {
    /// Fraction of the way a candidate centre moves toward a contour point.
    pub f_pace: f64,
    /// Initial search radius as a multiple of the palm radius.
    pub f1: f64,
    /// Per-round growth of the search radius.
    pub f2: f64,
    /// Shortest accepted wrist chord as a multiple of the palm radius.
    pub f3: f64,
    /// Longest accepted wrist chord as a multiple of the palm radius.
    pub f4: f64,
    pub i_max: usize,
    /// Number of contour points used while growing the palm bubble.
    pub h_part_size: usize,
    /// Pixels with distance at least this fraction of the maximum are palm
    /// centre candidates.
    pub dt_fraction: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            f_pace: 0.10,
            f1: 1.4,
            f2: 1.01,
            f3: 1.1,
            f4: 1.9,
            i_max: 10,
            h_part_size: 30,
            dt_fraction: 0.80,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(what.into()));
        if !(self.f_pace > 0.0 && self.f_pace < 1.0) {
            return bad("f_pace must be in (0, 1)");
        }
        if !(self.f1 > 1.0 && self.f2 > 1.0) {
            return bad("f1 and f2 must exceed 1");
        }
        if !(self.f3 > 0.0 && self.f3 < self.f4) {
            return bad("need 0 < f3 < f4");
        }
        if self.i_max < 1 {
            return bad("i_max must be at least 1");
        }
        if self.h_part_size < 3 {
            return bad("h_part_size must be at least 3");
        }
        if !(self.dt_fraction > 0.0 && self.dt_fraction < 1.0) {
            return bad("dt_fraction must be in (0, 1)");
        }
        Ok(())
    }
}

/// Side of the region rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderEdge {
    Top,
    Right,
    Bottom,
    Left,
}

/// Where the hand enters the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    /// Perimeter midpoint of the longest white border run.
    pub c_ref: Point,
    /// First and last pixel of that run, in clockwise order.
    pub c_ref_edges: (Point, Point),
    /// Sides the run occupies.
    pub edge_ids: Vec<BorderEdge>,
}

impl ReferenceInfo {
    /// Bottom-row midpoint with the bottom corners as run ends, used when no
    /// white pixel touches the border.
    pub fn bottom_fallback(width: usize, height: usize) -> Self {
        let y = height.saturating_sub(1) as f64;
        Self {
            c_ref: Point::new((width.saturating_sub(1) / 2) as f64, y),
            c_ref_edges: (
                Point::new(width.saturating_sub(1) as f64, y),
                Point::new(0.0, y),
            ),
            edge_ids: vec![BorderEdge::Bottom],
        }
    }

    pub fn translated(&self, by: Point) -> Self {
        Self {
            c_ref: self.c_ref + by,
            c_ref_edges: (self.c_ref_edges.0 + by, self.c_ref_edges.1 + by),
            edge_ids: self.edge_ids.clone(),
        }
    }
}

/// A circle inside the hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PalmBubble {
    pub center: Point,
    pub radius: f64,
}

impl PalmBubble {
    pub fn translated(&self, by: Point) -> Self {
        Self {
            center: self.center + by,
            radius: self.radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WristProvenance {
    FoundBySearch,
    FallbackRefEdges,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WristPair {
    pub w1: Point,
    pub w2: Point,
    pub provenance: WristProvenance,
}

impl WristPair {
    pub fn translated(&self, by: Point) -> Self {
        Self {
            w1: self.w1 + by,
            w2: self.w2 + by,
            provenance: self.provenance,
        }
    }
}

/// Clockwise walk of the region border starting at the top-left pixel; each
/// border pixel appears once.
pub fn perimeter(width: usize, height: usize) -> Vec<(usize, usize)> {
    if width == 0 || height == 0 {
        return Vec::new();
    }
    if height == 1 {
        return (0..width).map(|x| (x, 0)).collect();
    }
    if width == 1 {
        return (0..height).map(|y| (0, y)).collect();
    }
    let (r, b) = (width - 1, height - 1);
    let top = (0..r).map(|x| (x, 0));
    let right = (0..b).map(move |y| (r, y));
    let bottom = (1..=r).rev().map(move |x| (x, b));
    let left = (1..=b).rev().map(|y| (0, y));
    top.chain(right).chain(bottom).chain(left).collect()
}

fn edges_of(x: usize, y: usize, width: usize, height: usize) -> Vec<BorderEdge> {
    let mut e = Vec::with_capacity(2);
    if y == 0 {
        e.push(BorderEdge::Top);
    }
    if x + 1 == width {
        e.push(BorderEdge::Right);
    }
    if y + 1 == height {
        e.push(BorderEdge::Bottom);
    }
    if x == 0 {
        e.push(BorderEdge::Left);
    }
    e
}

/// Longest circular run of white pixels along the region border.
pub fn find_reference(mask: &BinaryMask) -> Result<ReferenceInfo> {
    let (w, h) = mask.dimensions();
    let walk = perimeter(w, h);
    let white: Vec<bool> = walk.iter().map(|&(x, y)| mask.get(x, y)).collect();
    let n = walk.len();
    let (start, len) = match white.iter().position(|&v| !v) {
        None if n > 0 => (0, n),
        None => return Err(Error::NoBorderContact),
        Some(gap) => {
            let mut best: Option<(usize, usize)> = None;
            let mut run_start = 0;
            let mut run_len = 0;
            for step in 1..=n {
                let i = (gap + step) % n;
                if white[i] {
                    if run_len == 0 {
                        run_start = i;
                    }
                    run_len += 1;
                } else if run_len > 0 {
                    let better = match best {
                        None => true,
                        Some((s, l)) => run_len > l || (run_len == l && run_start < s),
                    };
                    if better {
                        best = Some((run_start, run_len));
                    }
                    run_len = 0;
                }
            }
            best.ok_or(Error::NoBorderContact)?
        }
    };
    let at = |i: usize| {
        let (x, y) = walk[i % n];
        Point::new(x as f64, y as f64)
    };
    let mut counts = [0usize; 4];
    let mut edge_ids = Vec::new();
    for i in start..start + len {
        let (x, y) = walk[i % n];
        for e in edges_of(x, y, w, h) {
            counts[e as usize] += 1;
        }
    }
    for e in [BorderEdge::Top, BorderEdge::Right, BorderEdge::Bottom, BorderEdge::Left] {
        if counts[e as usize] >= 2 || (len == 1 && counts[e as usize] == 1) {
            edge_ids.push(e);
        }
    }
    Ok(ReferenceInfo {
        c_ref: at(start + (len - 1) / 2),
        c_ref_edges: (at(start), at(start + len - 1)),
        edge_ids,
    })
}

/// Initial palm estimate: among pixels whose distance to the background is
/// at least `dt_fraction` of the maximum, the one farthest from `c_ref`.
/// Everything outside the region counts as background.
pub fn estimate_center(
    mask: &BinaryMask,
    c_ref: Point,
    params: &SegmentationParams,
) -> Result<PalmBubble> {
    let dt = distance_transform(&mask.padded(1));
    let (w, h) = mask.dimensions();
    let eta = |x: usize, y: usize| dt.get(x + 1, y + 1);
    let mut eta_max = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            eta_max = eta_max.max(eta(x, y));
        }
    }
    if eta_max <= 0.0 {
        return Err(Error::EmptyMask);
    }
    let floor = params.dt_fraction * eta_max;
    let mut best: Option<(Point, f64, f64)> = None;
    for y in 0..h {
        for x in 0..w {
            let e = eta(x, y);
            if e < floor {
                continue;
            }
            let p = Point::new(x as f64, y as f64);
            let d = p.dist_sq(c_ref);
            if best.is_none_or(|(_, _, bd)| d > bd) {
                best = Some((p, e, d));
            }
        }
    }
    let (center, radius, _) = best.expect("maximum is a candidate");
    Ok(PalmBubble { center, radius })
}

/// Every `⌊|h_all| / n⌋`-th point, `n` points in order; shorter contours are
/// returned unchanged.
pub fn sample_contour(h_all: &Contour, n: usize) -> Contour {
    if n == 0 || h_all.len() < n {
        return h_all.clone();
    }
    let step = h_all.len() / n;
    Contour::new((0..n).map(|i| h_all.points[i * step]).collect())
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.x * ab.x + ab.y * ab.y;
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let ap = p - a;
    let t = ((ap.x * ab.x + ap.y * ab.y) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Distance from `p` to the nearest of `pts`.
pub fn point_set_distance(p: Point, pts: &[Point]) -> f64 {
    pts.iter().map(|q| q.dist_sq(p)).fold(f64::INFINITY, f64::min).sqrt()
}

/// Distance from `p` to the closed polygon through `pts`.
pub fn polygon_distance(p: Point, pts: &[Point]) -> f64 {
    match pts.len() {
        0 => f64::INFINITY,
        1 => p.dist(pts[0]),
        n => (0..n)
            .map(|i| segment_distance(p, pts[i], pts[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Hard cap on accepted moves; each move strictly grows the radius.
const MAX_BUBBLE_MOVES: usize = 100_000;

/// Grows the palm bubble inside the polygon `h_part`.
///
/// From the current centre, each contour point proposes a candidate a
/// fraction `f_pace` of the way toward it; the first candidate inside the
/// polygon whose distance to the nearest contour point beats the current
/// radius is taken
/// and the scan restarts. Non-improving candidates are remembered by their
/// rounded position and never evaluated again. Stops after a full scan
/// without a move.
pub fn bubble_growth(
    h_part: &Contour,
    c_est: Point,
    r_est: f64,
    params: &SegmentationParams,
) -> Result<PalmBubble> {
    if h_part.len() < 3 || !h_part.encloses(c_est) {
        return Err(Error::BadSeed);
    }
    let pts: Vec<Point> = h_part.points.iter().map(|p| p.to_point()).collect();
    let mut center = c_est;
    let mut radius = r_est;
    let mut visited: HashSet<Pixel> = HashSet::new();
    for _ in 0..MAX_BUBBLE_MOVES {
        let mut moved = false;
        for &h in &pts {
            let cand = center + (h - center) * params.f_pace;
            let key = cand.round();
            if visited.contains(&key) {
                continue;
            }
            let r = point_set_distance(cand, &pts);
            if r > radius && h_part.encloses(cand) {
                center = cand;
                radius = r;
                moved = true;
                break;
            }
            visited.insert(key);
        }
        if !moved {
            break;
        }
    }
    Ok(PalmBubble { center, radius })
}

/// True when a wrist chord `p1 p2` passes all three acceptance tests.
pub fn wrist_criteria(
    p1: Point,
    p2: Point,
    bubble: &PalmBubble,
    c_ref: Point,
    params: &SegmentationParams,
) -> bool {
    let d1 = p1.dist(p2);
    let d2 = p1.midpoint(p2).dist(c_ref);
    let d_ref = bubble.center.dist(c_ref);
    params.f3 * bubble.radius < d1 && d1 < params.f4 * bubble.radius && d2 < d_ref
}

fn fallback_pair(reference: &ReferenceInfo) -> WristPair {
    WristPair {
        w1: reference.c_ref_edges.0,
        w2: reference.c_ref_edges.1,
        provenance: WristProvenance::FallbackRefEdges,
    }
}

/// Expands a circle around the palm centre and looks for two consecutive
/// contour points inside it that form a plausible wrist chord on the
/// reference side; falls back to the reference run ends.
pub fn bubble_search(
    h_all: &Contour,
    bubble: &PalmBubble,
    reference: &ReferenceInfo,
    params: &SegmentationParams,
) -> WristPair {
    let c_ref = reference.c_ref;
    let d_ref = bubble.center.dist(c_ref);
    if bubble.radius > d_ref {
        return fallback_pair(reference);
    }
    let d_min = params.f3 * bubble.radius;
    let d_max = params.f4 * bubble.radius;
    let mut r_exp = params.f1 * bubble.radius;
    let pts: Vec<Point> = h_all.points.iter().map(|p| p.to_point()).collect();
    let mut inside: Vec<Point> = Vec::with_capacity(pts.len());
    for _ in 0..params.i_max {
        let r_sq = r_exp * r_exp;
        inside.clear();
        inside.extend(pts.iter().filter(|p| p.dist_sq(bubble.center) <= r_sq));
        let mut best: Option<(f64, Point, Point)> = None;
        for pair in inside.windows(2) {
            let (p1, p2) = (pair[0], pair[1]);
            let d1 = p1.dist(p2);
            let d2 = p1.midpoint(p2).dist(c_ref);
            if d_min < d1 && d1 < d_max && d2 < d_ref && best.is_none_or(|(b, _, _)| d2 < b) {
                best = Some((d2, p1, p2));
            }
        }
        if let Some((_, w1, w2)) = best {
            debug_assert!(wrist_criteria(w1, w2, bubble, c_ref, params));
            return WristPair {
                w1,
                w2,
                provenance: WristProvenance::FoundBySearch,
            };
        }
        r_exp *= params.f2;
    }
    fallback_pair(reference)
}

/// Signed side of `p` relative to the directed line `w1 → w2`.
pub fn line_side(w1: Point, w2: Point, p: Point) -> f64 {
    (w2 - w1).cross(p - w1)
}

/// Clears every pixel strictly on the side of the wrist line away from
/// `c_cop`; pixels on the line stay.
pub fn remove_forearm(mask: &BinaryMask, wrist: &WristPair, c_cop: Point) -> Result<BinaryMask> {
    if wrist.w1 == wrist.w2 {
        return Err(Error::DegenerateWristLine);
    }
    let keep = line_side(wrist.w1, wrist.w2, c_cop);
    if keep == 0.0 {
        return Err(Error::DegenerateWristLine);
    }
    let mut out = mask.clone();
    let w = mask.width();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        if *v {
            let p = Point::new((i % w) as f64, (i / w) as f64);
            if line_side(wrist.w1, wrist.w2, p) * keep < 0.0 {
                *v = false;
            }
        }
    }
    Ok(out)
}

/// Pixels of the largest 8-connected component (first in raster order on
/// ties).
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let comps = label_components(mask);
    if comps.count() <= 1 {
        return mask.clone();
    }
    let mut sizes = vec![0usize; comps.count() + 1];
    for &l in &comps.labels {
        sizes[l as usize] += 1;
    }
    let mut keep = 1;
    for l in 2..sizes.len() {
        if sizes[l] > sizes[keep] {
            keep = l;
        }
    }
    let (w, h) = mask.dimensions();
    BinaryMask::from_fn(w, h, |x, y| comps.labels[y * w + x] as usize == keep)
}

/// Number of background pixels whose centres lie inside the bubble; pixels
/// outside the raster count as background.
pub fn background_inside(mask: &BinaryMask, bubble: &PalmBubble) -> usize {
    let c = bubble.center;
    let r = bubble.radius;
    let (x0, x1) = ((c.x - r).floor() as i64, (c.x + r).ceil() as i64);
    let (y0, y1) = ((c.y - r).floor() as i64, (c.y + r).ceil() as i64);
    let mut n = 0;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = Point::new(x as f64, y as f64);
            if p.dist_sq(c) <= r * r && mask.get_checked(x, y) != Some(true) {
                n += 1;
            }
        }
    }
    n
}

/// Wall time of each segmentation step, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentTimings {
    pub reference: f64,
    pub estimate: f64,
    pub contour: f64,
    pub bubble_growth: f64,
    pub bubble_search: f64,
    pub removal: f64,
}

/// Everything the segmentation of one region produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub reference: ReferenceInfo,
    pub estimate: PalmBubble,
    pub bubble: PalmBubble,
    /// `false` when the estimate could not seed bubble growth and is used
    /// as the palm bubble.
    pub bubble_grown: bool,
    pub wrist: WristPair,
    /// Region mask with the forearm erased.
    pub hand: BinaryMask,
    /// `false` when the wrist line collapsed to a single border pixel and the
    /// region was kept whole.
    pub forearm_removed: bool,
    /// 100×100 classifier input.
    pub normalized: BinaryMask,
    pub timings: SegmentTimings,
}

/// Runs the whole segmentation on one region mask, keeping only its largest
/// component.
pub fn segment_hand(region_mask: &BinaryMask, params: &SegmentationParams) -> Result<Segmentation> {
    params.validate()?;
    let mut timings = SegmentTimings::default();
    let hand = largest_component(region_mask);
    if hand.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (w, h) = hand.dimensions();

    let t = Instant::now();
    let reference = match find_reference(&hand) {
        Ok(r) => r,
        Err(Error::NoBorderContact) => ReferenceInfo::bottom_fallback(w, h),
        Err(e) => return Err(e),
    };
    timings.reference = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let estimate = estimate_center(&hand, reference.c_ref, params)?;
    timings.estimate = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let h_all = trace_contours(&hand)
        .into_iter()
        .max_by_key(|c| c.len())
        .ok_or(Error::EmptyMask)?;
    let far = (0..h_all.len())
        .max_by(|&a, &b| {
            let da = h_all.points[a].to_point().dist_sq(reference.c_ref);
            let db = h_all.points[b].to_point().dist_sq(reference.c_ref);
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .unwrap_or(0);
    let h_all = h_all.rotated(far);
    let h_part = sample_contour(&h_all, params.h_part_size);
    timings.contour = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (bubble, bubble_grown) =
        match bubble_growth(&h_part, estimate.center, estimate.radius, params) {
            Ok(b) => (b, true),
            Err(Error::BadSeed) => (estimate, false),
            Err(e) => return Err(e),
        };
    timings.bubble_growth = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let wrist = bubble_search(&h_all, &bubble, &reference, params);
    timings.bubble_search = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let collapsed =
        wrist.provenance == WristProvenance::FallbackRefEdges && wrist.w1 == wrist.w2;
    let (cut, forearm_removed) = if collapsed {
        (hand, false)
    } else {
        (remove_forearm(&hand, &wrist, bubble.center)?, true)
    };
    let normalized = tight_pad_resize(&cut)?;
    timings.removal = t.elapsed().as_secs_f64();

    Ok(Segmentation {
        reference,
        estimate,
        bubble,
        bubble_grown,
        wrist,
        hand: cut,
        forearm_removed,
        normalized,
        timings,
    })
}
