use crate::error::{Error, Result};

/// Row-major single-channel raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Raw 16-bit sensor sample.
pub type Frame = Raster<u16>;
/// 8-bit intensity image.
pub type GrayImage = Raster<u8>;
/// Foreground (`true`, white) / background (`false`, black) mask.
pub type BinaryMask = Raster<bool>;
/// Per-pixel Euclidean distance to the nearest background pixel.
pub type DistanceField = Raster<f64>;

impl<T: Copy> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::RasterSize {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    /// Value at signed coordinates, `None` outside the raster.
    #[inline]
    pub fn get_checked(&self, x: i64, y: i64) -> Option<T> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            Some(self.get(x as usize, y as usize))
        }
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    /// Copies the pixels inside `bbox`.
    pub fn crop(&self, bbox: &super::BBox) -> Raster<T> {
        Raster::from_fn(bbox.width(), bbox.height(), |x, y| {
            self.get(bbox.x0 + x, bbox.y0 + y)
        })
    }

    pub(crate) fn ensure_same_size<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.dimensions() != (other.width, other.height) {
            return Err(Error::DimensionMismatch {
                expected: self.dimensions(),
                got: (other.width, other.height),
            });
        }
        Ok(())
    }
}

impl BinaryMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Tight bounding box of all white pixels.
    pub fn foreground_bbox(&self) -> Option<super::BBox> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..self.height {
            let row = &self.data[y * self.width..(y + 1) * self.width];
            if let Some(first) = row.iter().position(|&v| v) {
                let last = row.iter().rposition(|&v| v).unwrap_or(first);
                x0 = x0.min(first);
                x1 = x1.max(last + 1);
                y0 = y0.min(y);
                y1 = y + 1;
            }
        }
        (x0 != usize::MAX).then_some(super::BBox { x0, y0, x1, y1 })
    }

    /// Pads the mask with `pad` background pixels on every side.
    pub fn padded(&self, pad: usize) -> BinaryMask {
        let mut out = BinaryMask::filled(self.width + 2 * pad, self.height + 2 * pad, false);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out.set(x + pad, y + pad, true);
                }
            }
        }
        out
    }

    /// Renders as 0/255 grayscale.
    pub fn to_gray(&self) -> GrayImage {
        self.map(|v| if v { 255 } else { 0 })
    }
}

impl GrayImage {
    /// `true` where the pixel is strictly above `level`.
    pub fn binarize(&self, level: u8) -> BinaryMask {
        self.map(|v| v > level)
    }
}

/// Pixel-level intersection over union of two equally sized masks; two empty
/// masks score 1.
pub fn iou_masks(a: &BinaryMask, b: &BinaryMask) -> f64 {
    assert_eq!(a.dimensions(), b.dimensions(), "mask sizes differ");
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.data().iter().zip(b.data()) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
