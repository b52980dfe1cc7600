//! Hand-region detection on a hand mask.
//!
//! White pixels are reduced to one centre of mass per grid cell, the reduced
//! points are clustered with k-means (k picked by silhouette score), a box is
//! grown from each centroid until it contains a whole connected component, and
//! duplicate boxes are removed by IOU.

use crate::error::{Error, Result};
use crate::imaging::{iou, label_components, BBox, BinaryMask, Point};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionParams {
    /// Cells per axis of the reduction grid.
    pub grid_n: usize,
    pub k_min: usize,
    pub k_max: usize,
    /// Boxes overlapping a kept box by more than this are duplicates.
    pub iou_threshold: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            grid_n: 10,
            k_min: 2,
            k_max: 3,
            iou_threshold: 0.7,
        }
    }
}

impl RegionParams {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 1 {
            return Err(Error::InvalidParam("grid_n must be at least 1".into()));
        }
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(Error::InvalidParam("need 2 <= k_min <= k_max".into()));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::InvalidParam("iou_threshold must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Centre of mass of the white pixels of one grid cell.
pub type CouponPoint = Point;

/// Tiles the tight box around all white pixels with `grid_n × grid_n` cells
/// and returns the centre of mass of every non-empty cell, row-major by cell.
pub fn grid_reduce(mask: &BinaryMask, grid_n: usize) -> Vec<CouponPoint> {
    let Some(bbox) = mask.foreground_bbox() else {
        return Vec::new();
    };
    let n = grid_n.max(1);
    let (bw, bh) = (bbox.width(), bbox.height());
    let mut cells = vec![(0u64, 0u64, 0u64); n * n];
    for y in bbox.y0..bbox.y1 {
        let cy = (y - bbox.y0) * n / bh;
        for x in bbox.x0..bbox.x1 {
            if mask.get(x, y) {
                let cx = (x - bbox.x0) * n / bw;
                let cell = &mut cells[cy * n + cx];
                cell.0 += x as u64;
                cell.1 += y as u64;
                cell.2 += 1;
            }
        }
    }
    cells
        .into_iter()
        .filter(|c| c.2 > 0)
        .map(|(sx, sy, c)| Point::new(sx as f64 / c as f64, sy as f64 / c as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub centroids: Vec<Point>,
    /// Lloyd iterations run.
    pub iterations: usize,
}

impl Clustering {
    /// Sum of squared distances from each point to its centroid.
    pub fn objective(&self, points: &[Point]) -> f64 {
        points
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| p.dist_sq(self.centroids[l]))
            .sum()
    }
}

fn nearest(p: Point, centroids: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = p.dist_sq(*c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn means(points: &[Point], labels: &[usize], k: usize) -> Vec<Point> {
    let mut acc = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        acc[l].0 += p.x;
        acc[l].1 += p.y;
        acc[l].2 += 1;
    }
    acc.into_iter()
        .map(|(sx, sy, n)| Point::new(sx / n as f64, sy / n as f64))
        .collect()
}

/// Farthest-point seeding: the first seed is point 0, each further seed is
/// the point farthest from all chosen seeds (lowest index on ties).
fn farthest_point_seeds(points: &[Point], k: usize) -> Vec<Point> {
    let mut seeds = vec![points[0]];
    let mut min_d: Vec<f64> = points.iter().map(|p| p.dist_sq(points[0])).collect();
    while seeds.len() < k {
        let mut pick = 0;
        for i in 1..points.len() {
            if min_d[i] > min_d[pick] {
                pick = i;
            }
        }
        let s = points[pick];
        seeds.push(s);
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(p.dist_sq(s));
        }
    }
    seeds
}

/// Lloyd's algorithm from deterministic farthest-point seeds, run until the
/// assignment stops changing or `max_iters` is reached. Every returned
/// centroid is the mean of its assigned points.
pub fn kmeans(points: &[Point], k: usize, max_iters: usize) -> Result<Clustering> {
    if k == 0 || points.is_empty() || k > points.len() {
        return Err(Error::TooFewPoints {
            k,
            points: points.len(),
        });
    }
    let mut centroids = farthest_point_seeds(points, k);
    let mut labels = vec![usize::MAX; points.len()];
    let mut iterations = 0;
    while iterations < max_iters.max(1) {
        let mut next: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
        fill_empty_clusters(points, &centroids, &mut next, k);
        iterations += 1;
        if next == labels {
            break;
        }
        labels = next;
        centroids = means(points, &labels, k);
    }
    Ok(Clustering {
        labels,
        centroids,
        iterations,
    })
}

/// Hands each empty cluster the point farthest from its own centroid, taken
/// from a cluster with more than one member.
fn fill_empty_clusters(points: &[Point], centroids: &[Point], labels: &mut [usize], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let donor = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = points[a].dist_sq(centroids[labels[a]]);
                let db = points[b].dist_sq(centroids[labels[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= number of points");
        sizes[labels[donor]] -= 1;
        labels[donor] = c;
        sizes[c] = 1;
    }
}

/// Mean silhouette `(b − a) / max(a, b)` over all points; points in
/// singleton clusters score 0.
pub fn silhouette_score(points: &[Point], labels: &[usize]) -> Result<f64> {
    assert_eq!(points.len(), labels.len(), "one label per point");
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::SingleCluster);
    }
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (q, &l) in points.iter().zip(labels) {
            sums[l] += p.dist(*q);
        }
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / points.len() as f64)
}

pub const KMEANS_MAX_ITERS: usize = 100;

/// Cluster count in `[k_min, k_max]` with the highest silhouette score
/// (smaller `k` on ties). `None` when there are no more points than `k_max`,
/// in which case callers fall back to one box per connected component.
pub fn select_k(points: &[Point], params: &RegionParams) -> Option<usize> {
    if points.len() <= params.k_max {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for k in params.k_min..=params.k_max {
        let clustering = kmeans(points, k, KMEANS_MAX_ITERS).ok()?;
        let Ok(score) = silhouette_score(points, &clustering.labels) else {
            continue;
        };
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((k, score));
        }
    }
    best.map(|(k, _)| k)
}

/// White pixel nearest to `p`, lowest row then column on ties.
pub fn nearest_white(mask: &BinaryMask, p: Point) -> Option<(usize, usize)> {
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for y in 0..mask.height() {
        let dy = y as f64 - p.y;
        if dy * dy >= best_d && y as f64 > p.y {
            break;
        }
        for x in 0..mask.width() {
            if mask.get(x, y) {
                let dx = x as f64 - p.x;
                let d = dx * dx + dy * dy;
                if d < best_d {
                    best_d = d;
                    best = Some((x, y));
                }
            }
        }
    }
    best
}

/// Grows a box symmetrically from the white pixel nearest `centroid`, one
/// pixel per side per step, until no pixel of that pixel's 8-connected
/// component lies outside it; returns the component's tight box.
pub fn grow_box(centroid: Point, mask: &BinaryMask) -> Result<BBox> {
    let (sx, sy) = nearest_white(mask, centroid).ok_or(Error::EmptyMask)?;
    let (w, h) = mask.dimensions();
    let mut bbox = BBox::new(sx, sy, sx + 1, sy + 1);
    let mut seen = vec![false; w * h];
    seen[sy * w + sx] = true;
    let mut inside = vec![(sx, sy)];
    let mut outside: Vec<(usize, usize)> = Vec::new();
    let mut tight = BBox::new(sx, sy, sx + 1, sy + 1);
    loop {
        while let Some((x, y)) = inside.pop() {
            tight.x0 = tight.x0.min(x);
            tight.y0 = tight.y0.min(y);
            tight.x1 = tight.x1.max(x + 1);
            tight.y1 = tight.y1.max(y + 1);
            for (dx, dy) in NEIGHBOURS_8 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if mask.get_checked(nx, ny) != Some(true) {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if std::mem::replace(&mut seen[ny * w + nx], true) {
                    continue;
                }
                if bbox.contains(nx, ny) {
                    inside.push((nx, ny));
                } else {
                    outside.push((nx, ny));
                }
            }
        }
        if outside.is_empty() {
            return Ok(tight);
        }
        bbox = BBox::new(
            bbox.x0.saturating_sub(1),
            bbox.y0.saturating_sub(1),
            (bbox.x1 + 1).min(w),
            (bbox.y1 + 1).min(h),
        );
        outside.retain(|&(x, y)| {
            if bbox.contains(x, y) {
                inside.push((x, y));
                false
            } else {
                true
            }
        });
    }
}

const NEIGHBOURS_8: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Greedy deduplication: by descending area, a box is kept iff its IOU with
/// every kept box is at most `threshold`.
pub fn dedup_boxes(boxes: &[BBox], threshold: f64) -> Vec<BBox> {
    let mut order: Vec<BBox> = boxes.to_vec();
    order.sort_by_key(|b| std::cmp::Reverse(b.area()));
    let mut kept: Vec<BBox> = Vec::new();
    for b in order {
        if kept.iter().all(|k| iou(k, &b) <= threshold) {
            kept.push(b);
        }
    }
    kept
}

/// Tight box of every 8-connected component, largest first.
pub fn component_boxes(mask: &BinaryMask) -> Vec<BBox> {
    let comps = label_components(mask);
    let w = mask.width();
    let mut boxes: Vec<Option<BBox>> = vec![None; comps.count()];
    for (i, &l) in comps.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (x, y) = (i % w, i / w);
        let b = &mut boxes[l as usize - 1];
        *b = Some(match *b {
            None => BBox::new(x, y, x + 1, y + 1),
            Some(b) => BBox::new(b.x0.min(x), b.y0.min(y), b.x1.max(x + 1), b.y1.max(y + 1)),
        });
    }
    let mut boxes: Vec<BBox> = boxes.into_iter().flatten().collect();
    boxes.sort_by_key(|b| std::cmp::Reverse(b.area()));
    boxes
}

/// Full region detection: deduplicated hand boxes, largest first.
pub fn detect_regions(mask: &BinaryMask, params: &RegionParams) -> Vec<BBox> {
    let points = grid_reduce(mask, params.grid_n);
    if points.is_empty() {
        return Vec::new();
    }
    let Some(k) = select_k(&points, params) else {
        return dedup_boxes(&component_boxes(mask), params.iou_threshold);
    };
    let clustering = kmeans(&points, k, KMEANS_MAX_ITERS).expect("select_k checked sizes");
    let boxes: Vec<BBox> = clustering
        .centroids
        .iter()
        .filter_map(|&c| grow_box(c, mask).ok())
        .collect();
    dedup_boxes(&boxes, params.iou_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rects(w: usize, h: usize, rs: &[(usize, usize, usize, usize)]) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            rs.iter()
                .any(|&(x0, y0, x1, y1)| x >= x0 && x < x1 && y >= y0 && y < y1)
        })
    }

    fn blob(rng: &mut impl Rng, cx: f64, cy: f64, spread: f64, n: usize) -> Vec<Point> {
        (0..n)
            .map(|_| {
                Point::new(
                    cx + rng.random_range(-spread..spread),
                    cy + rng.random_range(-spread..spread),
                )
            })
            .collect()
    }

    #[test]
    fn grid_single_cell() {
        let mut mask = BinaryMask::filled(50, 50, false);
        mask.set(10, 10, true);
        mask.set(11, 12, true);
        mask.set(12, 10, true);
        // The tight box is 3x3, so a 1x1 grid holds everything.
        let pts = grid_reduce(&mask, 1);
        assert_eq!(pts, vec![Point::new(11.0, 32.0 / 3.0)]);
    }

    #[test]
    fn grid_opposite_corners() {
        let mut mask = BinaryMask::filled(100, 80, false);
        mask.set(5, 7, true);
        mask.set(70, 60, true);
        let pts = grid_reduce(&mask, 10);
        assert_eq!(pts, vec![Point::new(5.0, 7.0), Point::new(70.0, 60.0)]);
    }

    #[test]
    fn grid_points_are_cell_centroids() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let (w, h) = (rng.random_range(5..80), rng.random_range(5..80));
            let mask = BinaryMask::from_fn(w, h, |_, _| rng.random_bool(0.2));
            let n = rng.random_range(1..12);
            let pts = grid_reduce(&mask, n);
            let Some(bbox) = mask.foreground_bbox() else {
                assert!(pts.is_empty());
                continue;
            };
            // Oracle: cell bounds from the floor partition of the box.
            let bounds = |i: usize, len: usize| {
                let lo = (0..len).find(|&v| v * n / len == i);
                lo.map(|lo| (lo, (lo..len).take_while(|&v| v * n / len == i).count()))
            };
            let mut expected = Vec::new();
            for cy in 0..n {
                for cx in 0..n {
                    let (Some((ylo, yc)), Some((xlo, xc))) =
                        (bounds(cy, bbox.height()), bounds(cx, bbox.width()))
                    else {
                        continue;
                    };
                    let (mut sx, mut sy, mut c) = (0.0, 0.0, 0.0);
                    for y in bbox.y0 + ylo..bbox.y0 + ylo + yc {
                        for x in bbox.x0 + xlo..bbox.x0 + xlo + xc {
                            if mask.get(x, y) {
                                sx += x as f64;
                                sy += y as f64;
                                c += 1.0;
                            }
                        }
                    }
                    if c > 0.0 {
                        expected.push(Point::new(sx / c, sy / c));
                    }
                }
            }
            assert_eq!(pts.len(), expected.len());
            for (p, e) in pts.iter().zip(&expected) {
                assert!(p.dist(*e) < 1e-9);
            }
            assert!(pts.len() <= n * n && pts.len() <= mask.count());
        }
    }

    #[test]
    fn kmeans_k_equals_n() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(5.0, 1.0), Point::new(2.0, 9.0)];
        let c = kmeans(&pts, 3, 100).unwrap();
        assert_eq!(c.objective(&pts), 0.0);
        let mut labels = c.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn kmeans_too_many_clusters() {
        let pts = vec![Point::new(0.0, 0.0)];
        assert!(matches!(kmeans(&pts, 2, 10), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn kmeans_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pts = blob(&mut rng, 0.0, 0.0, 1.0, 20);
        pts.extend(blob(&mut rng, 200.0, 50.0, 1.0, 20));
        let c = kmeans(&pts, 2, 100).unwrap();
        assert!(c.labels[..20].iter().all(|&l| l == c.labels[0]));
        assert!(c.labels[20..].iter().all(|&l| l == c.labels[20]));
        assert_ne!(c.labels[0], c.labels[20]);
    }

    fn exhaustive_two_partition(pts: &[Point]) -> f64 {
        let n = pts.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let c = means(pts, &labels, 2);
            let obj: f64 = pts.iter().zip(&labels).map(|(p, &l)| p.dist_sq(c[l])).sum();
            best = best.min(obj);
        }
        best
    }

    #[test]
    fn kmeans_matches_exhaustive_partition_on_grouped_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.random_range(3..=8);
            let split = rng.random_range(1..n);
            let mut pts = blob(&mut rng, 0.0, 0.0, 10.0, split);
            pts.extend(blob(&mut rng, 45.0, 20.0, 10.0, n - split));
            let obj = kmeans(&pts, 2, 100).unwrap().objective(&pts);
            assert!((obj - exhaustive_two_partition(&pts)).abs() < 1e-9);
        }
    }

    #[test]
    fn kmeans_objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let pts: Vec<Point> = blob(&mut rng, 50.0, 50.0, 50.0, 40);
            let k = rng.random_range(2..6);
            let mut prev = f64::INFINITY;
            for iters in 1..20 {
                let obj = kmeans(&pts, k, iters).unwrap().objective(&pts);
                assert!(obj <= prev + 1e-9);
                prev = obj;
            }
        }
    }

    #[test]
    fn kmeans_centroids_are_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut pts = blob(&mut rng, 10.0, 10.0, 30.0, 25);
        pts.extend(vec![Point::new(1.0, 1.0); 5]);
        for k in 2..=6 {
            let c = kmeans(&pts, k, 100).unwrap();
            let m = means(&pts, &c.labels, k);
            for (a, b) in c.centroids.iter().zip(&m) {
                assert!(a.dist(*b) < 1e-12);
            }
        }
    }

    #[test]
    fn silhouette_far_pairs() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(0.1, 0.0),
            Point::new(100.0, 0.0),
            Point::new(100.1, 0.0),
        ];
        assert!(silhouette_score(&pts, &[0, 0, 1, 1]).unwrap() > 0.99);
    }

    #[test]
    fn silhouette_collinear() {
        let pts: Vec<Point> = [0.0, 1.0, 10.0, 11.0].iter().map(|&x| Point::new(x, 0.0)).collect();
        let s = silhouette_score(&pts, &[0, 0, 1, 1]).unwrap();
        // Point 0: a = 1, b = 10.5; point 1: a = 1, b = 9.5; the pair mirrors.
        let expected = (9.5 / 10.5 + 8.5 / 9.5) / 2.0;
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn silhouette_random_split_of_one_blob() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts = blob(&mut rng, 0.0, 0.0, 5.0, 60);
        let labels: Vec<usize> = (0..60).map(|_| rng.random_range(0..2)).collect();
        assert!(silhouette_score(&pts, &labels).unwrap() < 0.25);
    }

    #[test]
    fn silhouette_needs_two_clusters() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(matches!(silhouette_score(&pts, &[0, 0]), Err(Error::SingleCluster)));
        assert_eq!(silhouette_score(&pts, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn select_k_counts_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let params = RegionParams::default();
        let mut pts = blob(&mut rng, 0.0, 0.0, 5.0, 15);
        pts.extend(blob(&mut rng, 300.0, 0.0, 5.0, 15));
        assert_eq!(select_k(&pts, &params), Some(2));
        pts.extend(blob(&mut rng, 150.0, 250.0, 5.0, 15));
        assert_eq!(select_k(&pts, &params), Some(3));
        assert_eq!(select_k(&pts[..3], &params), None);
    }

    #[test]
    fn grow_box_lone_block() {
        let mask = rects(60, 60, &[(20, 30, 30, 40)]);
        assert_eq!(grow_box(Point::new(24.0, 33.0), &mask).unwrap(), BBox::new(20, 30, 30, 40));
    }

    #[test]
    fn grow_box_picks_nearest_blob() {
        let mask = rects(100, 60, &[(5, 5, 20, 50), (60, 10, 90, 30)]);
        assert_eq!(grow_box(Point::new(30.0, 20.0), &mask).unwrap(), BBox::new(5, 5, 20, 50));
        assert_eq!(grow_box(Point::new(50.0, 20.0), &mask).unwrap(), BBox::new(60, 10, 90, 30));
        assert!(matches!(
            grow_box(Point::new(0.0, 0.0), &BinaryMask::filled(4, 4, false)),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn grow_box_matches_component_labelling() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..60 {
            let (w, h) = (rng.random_range(10..70), rng.random_range(10..70));
            let mask = BinaryMask::from_fn(w, h, |_, _| rng.random_bool(0.3));
            if mask.is_empty() {
                continue;
            }
            let comps = label_components(&mask);
            for _ in 0..5 {
                let c = Point::new(rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64));
                let (sx, sy) = nearest_white(&mask, c).unwrap();
                let id = comps.labels[sy * w + sx];
                let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
                for (i, &l) in comps.labels.iter().enumerate() {
                    if l == id {
                        x0 = x0.min(i % w);
                        x1 = x1.max(i % w + 1);
                        y0 = y0.min(i / w);
                        y1 = y1.max(i / w + 1);
                    }
                }
                assert_eq!(grow_box(c, &mask).unwrap(), BBox::new(x0, y0, x1, y1));
            }
        }
    }

    #[test]
    fn nearest_white_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..100 {
            let mask = BinaryMask::from_fn(30, 20, |_, _| rng.random_bool(0.05));
            let p = Point::new(rng.random_range(-5.0..35.0), rng.random_range(-5.0..25.0));
            let mut best: Option<((usize, usize), f64)> = None;
            for y in 0..20 {
                for x in 0..30 {
                    if mask.get(x, y) {
                        let d = Point::new(x as f64, y as f64).dist_sq(p);
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some(((x, y), d));
                        }
                    }
                }
            }
            assert_eq!(nearest_white(&mask, p), best.map(|b| b.0));
        }
    }

    #[test]
    fn dedup_examples() {
        let a = BBox::new(0, 0, 10, 10);
        assert_eq!(dedup_boxes(&[a, a], 0.7), vec![a]);
        let b = BBox::new(20, 20, 30, 30);
        assert_eq!(dedup_boxes(&[a, b], 0.7).len(), 2);
        // 10x10 inside 10x(40/3)... use 20x10 vs 15x10 sharing an edge: IOU 0.75.
        let big = BBox::new(0, 0, 20, 10);
        let small = BBox::new(0, 0, 15, 10);
        assert_eq!(iou(&big, &small), 0.75);
        assert_eq!(dedup_boxes(&[small, big], 0.7), vec![big]);
    }

    #[test]
    fn single_blob_collapses_to_one_region() {
        let mask = rects(200, 150, &[(40, 30, 120, 140)]);
        let boxes = detect_regions(&mask, &RegionParams::default());
        assert_eq!(boxes, vec![BBox::new(40, 30, 120, 140)]);
    }

    #[test]
    fn tiny_masks_use_components() {
        let mut mask = BinaryMask::filled(40, 40, false);
        mask.set(3, 3, true);
        mask.set(30, 30, true);
        let boxes = detect_regions(&mask, &RegionParams::default());
        assert_eq!(boxes.len(), 2);
    }
}
