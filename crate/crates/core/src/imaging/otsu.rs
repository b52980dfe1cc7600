use super::GrayImage;

pub type Histogram = [u64; 256];

pub fn histogram(img: &GrayImage) -> Histogram {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    hist
}

/// Otsu level of an 8-bit image: pixels strictly above the returned level
/// are foreground.
///
/// A single-valued image returns that value, so binarizing with it yields an
/// empty mask.
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    otsu_level(&histogram(img))
}

/// Otsu level for a 256-bin histogram; ties resolve to the lowest level.
///
/// Between-class variance for a split at `t` is proportional to
/// `(S0·N − S·n0)² / (n0·n1)`, where `n0`, `S0` are the count and intensity
/// sum of bins `0..=t`. Candidates are compared by exact cross-multiplication
/// so ties are detected exactly.
pub fn otsu_level(hist: &Histogram) -> u8 {
    let mut occupied = hist.iter().enumerate().filter(|(_, &c)| c > 0);
    let first = match occupied.next() {
        Some((v, _)) => v as u8,
        None => return 0,
    };
    if occupied.next().is_none() {
        return first;
    }

    let total: u64 = hist.iter().sum();
    let sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best: Option<(u8, Score)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for t in 0..255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let score = Score::new(s0, n0, n1, sum, total);
        match &best {
            Some((_, b)) if !score.greater_than(b) => {}
            _ => best = Some((t as u8, score)),
        }
    }
    best.map(|(t, _)| t).unwrap_or(first)
}

/// `num / den` with `num = (S0·N − S·n0)²` and `den = n0·n1`.
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(s0: u64, n0: u64, n1: u64, sum: u64, total: u64) -> Self {
        let diff = (s0 as i128 * total as i128 - sum as i128 * n0 as i128).unsigned_abs();
        Self {
            num: diff * diff,
            den: n0 as u128 * n1 as u128,
        }
    }

    fn greater_than(&self, other: &Score) -> bool {
        match (
            self.num.checked_mul(other.den),
            other.num.checked_mul(self.den),
        ) {
            (Some(a), Some(b)) => a > b,
            // Only reachable for images far larger than a sensor frame.
            _ => self.num as f64 / self.den as f64 > other.num as f64 / other.den as f64,
        }
    }
}
