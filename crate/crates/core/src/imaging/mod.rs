//! Raster and geometry primitives shared by every stage: thresholding,
//! distance transform, contour tracing, box algebra and resampling.
//!
//! Everything here is a pure function of its inputs.

mod contour;
mod distance;
mod geometry;
mod otsu;
mod raster;
mod resize;

pub use contour::{label_components, trace_contours, Components, Contour};
pub use distance::{distance_transform, squared_distance_transform};
pub use geometry::{iou, BBox, Pixel, Point};
pub use otsu::{histogram, otsu_level, otsu_threshold, Histogram};
pub use raster::{iou_masks, BinaryMask, DistanceField, Frame, GrayImage, Raster};
pub use resize::{resize_nearest, tight_pad_resize, NORMALIZED_SIZE, NORMALIZE_PAD};
