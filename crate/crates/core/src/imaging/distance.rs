//! Exact Euclidean distance transform.
//!
//! Two separable passes: per-column distance to the nearest background pixel,
//! then a lower envelope of parabolas along each row (Felzenszwalb and
//! Huttenlocher). Squared distances stay integral, so results are exact.
//! Pixels outside the raster are not background; a raster with no background
//! pixel at all yields `f64::INFINITY` everywhere.

use super::{BinaryMask, DistanceField};

pub fn distance_transform(mask: &BinaryMask) -> DistanceField {
    let squared = squared_distance_transform(mask);
    let data = squared
        .into_iter()
        .map(|d| match d {
            Some(d) => (d as f64).sqrt(),
            None => f64::INFINITY,
        })
        .collect();
    DistanceField::from_vec(mask.width(), mask.height(), data).expect("same dimensions")
}

/// Squared distance per pixel, `None` when no background pixel exists.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<Option<u64>> {
    let (w, h) = mask.dimensions();

    // Column pass: vertical distance to the nearest background pixel.
    let mut col = vec![None::<u64>; w * h];
    for x in 0..w {
        let mut last: Option<usize> = None;
        for y in 0..h {
            if !mask.get(x, y) {
                last = Some(y);
            }
            col[y * w + x] = last.map(|b| (y - b) as u64);
        }
        let mut next: Option<usize> = None;
        for y in (0..h).rev() {
            if !mask.get(x, y) {
                next = Some(y);
            }
            if let Some(b) = next {
                let d = (b - y) as u64;
                let slot = &mut col[y * w + x];
                *slot = Some(slot.map_or(d, |v| v.min(d)));
            }
        }
    }

    // Row pass over parabolas (x - q)^2 + col(q)^2.
    let mut out = vec![None; w * h];
    let mut sites: Vec<usize> = Vec::with_capacity(w);
    let mut bounds: Vec<f64> = Vec::with_capacity(w + 1);
    for y in 0..h {
        let row = &col[y * w..(y + 1) * w];
        let f = |q: usize| {
            let g = row[q].expect("finite site");
            (g * g) as f64
        };
        sites.clear();
        bounds.clear();
        for q in (0..w).filter(|&q| row[q].is_some()) {
            loop {
                match sites.last() {
                    None => {
                        sites.push(q);
                        bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&v) => {
                        let s = ((f(q) + (q * q) as f64) - (f(v) + (v * v) as f64))
                            / (2.0 * (q as f64 - v as f64));
                        if s <= *bounds.last().unwrap() {
                            sites.pop();
                            bounds.pop();
                        } else {
                            sites.push(q);
                            bounds.push(s);
                            break;
                        }
                    }
                }
            }
        }
        if sites.is_empty() {
            continue;
        }
        let mut k = 0;
        for x in 0..w {
            while k + 1 < sites.len() && bounds[k + 1] < x as f64 {
                k += 1;
            }
            let q = sites[k];
            let g = row[q].unwrap();
            let dx = x.abs_diff(q) as u64;
            out[y * w + x] = Some(dx * dx + g * g);
        }
    }
    out
}
