use super::{BinaryMask, Raster};
use crate::error::{Error, Result};

/// Side length of the normalized classifier input.
pub const NORMALIZED_SIZE: usize = 100;
/// Background margin added around the tight crop before resampling.
pub const NORMALIZE_PAD: usize = 5;

/// Nearest-neighbour resampling: destination pixel `d` samples source index
/// `floor((d + 0.5) * src / dst)`.
pub fn resize_nearest<T: Copy>(img: &Raster<T>, width: usize, height: usize) -> Raster<T> {
    let (sw, sh) = img.dimensions();
    let xs: Vec<usize> = (0..width).map(|d| nearest_source(d, sw, width)).collect();
    Raster::from_fn(width, height, |x, y| {
        img.get(xs[x], nearest_source(y, sh, height))
    })
}

#[inline]
fn nearest_source(dst: usize, src_len: usize, dst_len: usize) -> usize {
    (((2 * dst + 1) * src_len) / (2 * dst_len)).min(src_len - 1)
}

/// Crops to the tight foreground box, pads 5 background pixels on each side
/// and resamples to 100×100.
pub fn tight_pad_resize(mask: &BinaryMask) -> Result<BinaryMask> {
    let bbox = mask.foreground_bbox().ok_or(Error::NothingToNormalize)?;
    let padded = mask.crop(&bbox).padded(NORMALIZE_PAD);
    Ok(resize_nearest(&padded, NORMALIZED_SIZE, NORMALIZED_SIZE))
}
