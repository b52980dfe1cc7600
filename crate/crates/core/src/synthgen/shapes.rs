//! Four-class synthetic shape task for the classifier.

use crate::imaging::{tight_pad_resize, BinaryMask, Point, NORMALIZED_SIZE};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Disk,
    Bar,
    Cross,
    Ring,
}

/// Class order used for labels.
pub const SHAPE_CLASSES: [Shape; 4] = [Shape::Disk, Shape::Bar, Shape::Cross, Shape::Ring];

fn bar_hit(p: Point, c: Point, dir: Point, half_len: f64, half_width: f64) -> bool {
    let d = p - c;
    let along = d.x * dir.x + d.y * dir.y;
    let across = d.x * dir.y - d.y * dir.x;
    along.abs() <= half_len && across.abs() <= half_width
}

/// One 100×100 sample with random size, position and orientation.
pub fn render_shape(shape: Shape, rng: &mut impl Rng) -> BinaryMask {
    let n = NORMALIZED_SIZE as f64;
    let c = Point::new(
        n / 2.0 + rng.random_range(-8.0..8.0),
        n / 2.0 + rng.random_range(-8.0..8.0),
    );
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let dir = Point::new(theta.cos(), theta.sin());
    let perp = Point::new(-dir.y, dir.x);
    match shape {
        Shape::Disk => {
            let r = rng.random_range(15.0..32.0);
            BinaryMask::from_fn(NORMALIZED_SIZE, NORMALIZED_SIZE, |x, y| {
                Point::new(x as f64, y as f64).dist(c) <= r
            })
        }
        Shape::Bar => {
            let (l, w) = (rng.random_range(28.0..40.0), rng.random_range(5.0..9.0));
            BinaryMask::from_fn(NORMALIZED_SIZE, NORMALIZED_SIZE, |x, y| {
                bar_hit(Point::new(x as f64, y as f64), c, dir, l, w)
            })
        }
        Shape::Cross => {
            let (l, w) = (rng.random_range(22.0..36.0), rng.random_range(4.0..7.0));
            BinaryMask::from_fn(NORMALIZED_SIZE, NORMALIZED_SIZE, |x, y| {
                let p = Point::new(x as f64, y as f64);
                bar_hit(p, c, dir, l, w) || bar_hit(p, c, perp, l, w)
            })
        }
        Shape::Ring => {
            let outer = rng.random_range(20.0..34.0);
            let inner = outer - rng.random_range(6.0..10.0);
            BinaryMask::from_fn(NORMALIZED_SIZE, NORMALIZED_SIZE, |x, y| {
                let d = Point::new(x as f64, y as f64).dist(c);
                d <= outer && d >= inner
            })
        }
    }
}

/// `per_class` samples of each shape, shuffled, labelled by position in
/// [`SHAPE_CLASSES`]. Each sample is normalized like a segmented hand.
pub fn shape_dataset(per_class: usize, seed: u64) -> Vec<(BinaryMask, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_class * SHAPE_CLASSES.len());
    for (label, &shape) in SHAPE_CLASSES.iter().enumerate() {
        for _ in 0..per_class {
            let mask = tight_pad_resize(&render_shape(shape, &mut rng)).expect("shapes are non-empty");
            out.push((mask, label));
        }
    }
    out.shuffle(&mut rng);
    out
}
