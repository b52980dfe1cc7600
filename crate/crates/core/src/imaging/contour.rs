//! Outer-border tracing of 8-connected foreground components.

use super::{BinaryMask, Pixel, Point};

/// Closed boundary of one 8-connected foreground component.
///
/// Consecutive points are 8-adjacent and the last point is adjacent to the
/// first. Pixels on one-pixel-wide spurs are visited once per side, so they
/// can appear twice.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Contour {
    pub points: Vec<Pixel>,
}

impl Contour {
    pub fn new(points: Vec<Pixel>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Absolute shoelace area of the polygon through the points.
    pub fn polygon_area(&self) -> f64 {
        let n = self.points.len();
        if n < 3 {
            return 0.0;
        }
        let twice: f64 = (0..n)
            .map(|i| {
                let a = self.points[i].to_point();
                let b = self.points[(i + 1) % n].to_point();
                a.cross(b)
            })
            .sum();
        twice.abs() * 0.5
    }

    /// Even-odd point-in-polygon test.
    pub fn encloses(&self, p: Point) -> bool {
        let n = self.points.len();
        if n < 3 {
            return false;
        }
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let a = self.points[i].to_point();
            let b = self.points[j].to_point();
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Same cycle starting at `start`.
    pub fn rotated(&self, start: usize) -> Contour {
        let mut points = self.points.clone();
        if !points.is_empty() {
            points.rotate_left(start % self.points.len());
        }
        Contour { points }
    }
}

// Clockwise on screen (y down), starting east.
const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const WEST: usize = 4;

fn direction(from: Pixel, to: Pixel) -> usize {
    let d = (to.x - from.x, to.y - from.y);
    DIRS.iter().position(|&v| v == d).expect("8-adjacent pixels")
}

fn is_fg(mask: &BinaryMask, p: Pixel) -> bool {
    mask.get_checked(p.x as i64, p.y as i64).unwrap_or(false)
}

fn step(p: Pixel, dir: usize) -> Pixel {
    Pixel::new(p.x + DIRS[dir].0, p.y + DIRS[dir].1)
}

/// One outer contour per 8-connected foreground component, in order of each
/// component's first pixel in raster order.
pub fn trace_contours(mask: &BinaryMask) -> Vec<Contour> {
    label_components(mask)
        .starts
        .into_iter()
        .map(|start| trace_from(mask, start))
        .collect()
}

/// Follows the outer border starting at `start`, which must be the first
/// pixel of its component in raster order (so its west neighbour is
/// background).
fn trace_from(mask: &BinaryMask, start: Pixel) -> Contour {
    let first = (0..8)
        .map(|i| (WEST + i) % 8)
        .map(|d| step(start, d))
        .find(|&p| is_fg(mask, p));
    let Some(first) = first else {
        return Contour::new(vec![start]);
    };

    let mut points = vec![start];
    let (mut prev, mut cur) = (first, start);
    loop {
        let d = direction(cur, prev);
        let next = (1..=8)
            .map(|i| step(cur, (d + 8 - i) % 8))
            .find(|&p| is_fg(mask, p))
            .expect("component has at least two pixels");
        if next == start && cur == first {
            break;
        }
        points.push(next);
        prev = cur;
        cur = next;
    }
    Contour::new(points)
}

/// 8-connected component labels (`0` = background, components numbered from 1
/// in raster order of their first pixel).
#[derive(Debug, Clone)]
pub struct Components {
    pub labels: Vec<u32>,
    pub starts: Vec<Pixel>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.starts.len()
    }
}

pub fn label_components(mask: &BinaryMask) -> Components {
    let (w, h) = mask.dimensions();
    let mut labels = vec![0u32; w * h];
    let mut starts = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || labels[y * w + x] != 0 {
                continue;
            }
            starts.push(Pixel::new(x as i32, y as i32));
            let id = starts.len() as u32;
            labels[y * w + x] = id;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                for (dx, dy) in DIRS {
                    let (nx, ny) = (cx as i64 + dx as i64, cy as i64 + dy as i64);
                    if mask.get_checked(nx, ny) == Some(true) {
                        let idx = ny as usize * w + nx as usize;
                        if labels[idx] == 0 {
                            labels[idx] = id;
                            stack.push((nx as usize, ny as usize));
                        }
                    }
                }
            }
        }
    }
    Components { labels, starts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blocks(w: usize, h: usize, rects: &[(usize, usize, usize, usize)]) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            rects
                .iter()
                .any(|&(x0, y0, x1, y1)| x >= x0 && x < x1 && y >= y0 && y < y1)
        })
    }

    fn assert_closed_chain(c: &Contour) {
        let n = c.len();
        for i in 0..n {
            let (a, b) = (c.points[i], c.points[(i + 1) % n]);
            assert!(a.touches(b) && (n == 1 || a != b), "{a:?} -> {b:?}");
        }
    }

    fn on_border(mask: &BinaryMask, p: Pixel) -> bool {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .any(|&(dx, dy)| mask.get_checked((p.x + dx) as i64, (p.y + dy) as i64) != Some(true))
    }

    #[test]
    fn single_pixel() {
        let mask = blocks(5, 5, &[(2, 2, 3, 3)]);
        let contours = trace_contours(&mask);
        assert_eq!(contours, vec![Contour::new(vec![Pixel::new(2, 2)])]);
    }

    #[test]
    fn two_blocks() {
        let mask = blocks(12, 6, &[(1, 1, 4, 4), (7, 2, 10, 5)]);
        assert_eq!(trace_contours(&mask).len(), 2);
    }

    #[test]
    fn block_boundary() {
        let mask = blocks(5, 5, &[(1, 1, 4, 4)]);
        let contours = trace_contours(&mask);
        assert_eq!(contours.len(), 1);
        let c = &contours[0];
        let mut expected: Vec<Pixel> = (1..4)
            .flat_map(|y| (1..4).map(move |x| Pixel::new(x, y)))
            .filter(|p| *p != Pixel::new(2, 2))
            .collect();
        let mut got = c.points.clone();
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
        assert_closed_chain(c);
    }

    #[test]
    fn hole_is_ignored() {
        let mut mask = blocks(7, 7, &[(1, 1, 6, 6)]);
        mask.set(3, 3, false);
        let contours = trace_contours(&mask);
        assert_eq!(contours.len(), 1);
        assert_eq!(contours[0].len(), 16);
    }

    #[test]
    fn random_blobs_have_valid_contours() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (w, h) = (rng.random_range(3..30), rng.random_range(3..30));
            let mask = BinaryMask::from_fn(w, h, |_, _| rng.random_bool(0.55));
            let comps = label_components(&mask);
            let contours = trace_contours(&mask);
            assert_eq!(contours.len(), comps.count());
            for (c, start) in contours.iter().zip(&comps.starts) {
                assert_eq!(c.points[0], *start);
                assert_closed_chain(c);
                let id = comps.labels[start.y as usize * w + start.x as usize];
                for &p in &c.points {
                    assert!(mask.get(p.x as usize, p.y as usize));
                    assert!(on_border(&mask, p));
                    assert_eq!(comps.labels[p.y as usize * w + p.x as usize], id);
                }
            }
        }
    }
}
