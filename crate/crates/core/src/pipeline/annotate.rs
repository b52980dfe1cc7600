use super::FrameResult;
use crate::imaging::Point;
use image::{Rgb, RgbImage};

const MASK: Rgb<u8> = Rgb([90, 90, 90]);
const HAND: Rgb<u8> = Rgb([235, 235, 235]);
const BOX: Rgb<u8> = Rgb([0, 200, 0]);
const BUBBLE: Rgb<u8> = Rgb([230, 40, 40]);
const WRIST: Rgb<u8> = Rgb([40, 90, 255]);
const REFERENCE: Rgb<u8> = Rgb([255, 210, 0]);

fn put(img: &mut RgbImage, x: f64, y: f64, c: Rgb<u8>) {
    let (x, y) = (x.round(), y.round());
    if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn line(img: &mut RgbImage, a: Point, b: Point, c: Rgb<u8>) {
    let steps = a.dist(b).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        put(img, a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, c);
    }
}

fn circle(img: &mut RgbImage, center: Point, r: f64, c: Rgb<u8>) {
    let steps = (2.0 * std::f64::consts::PI * r).ceil().max(8.0) as usize;
    for i in 0..steps {
        let a = 2.0 * std::f64::consts::PI * i as f64 / steps as f64;
        put(img, center.x + r * a.cos(), center.y + r * a.sin(), c);
    }
}

/// Renders the frame mask with each region's box, palm bubble, wrist line and
/// reference point. Kept hand pixels are bright, erased forearm pixels dim.
pub fn annotate(result: &FrameResult) -> RgbImage {
    let (w, h) = result.mask.dimensions();
    let mut img = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            if result.mask.get(x, y) {
                img.put_pixel(x as u32, y as u32, MASK);
            }
        }
    }
    for (det, hand) in result.detections.iter().zip(&result.hands) {
        let b = det.bbox;
        if let Some(hand) = hand {
            for y in 0..hand.height() {
                for x in 0..hand.width() {
                    if hand.get(x, y) {
                        img.put_pixel((b.x0 + x) as u32, (b.y0 + y) as u32, HAND);
                    }
                }
            }
        }
        let corners = [
            Point::new(b.x0 as f64, b.y0 as f64),
            Point::new(b.x1 as f64 - 1.0, b.y0 as f64),
            Point::new(b.x1 as f64 - 1.0, b.y1 as f64 - 1.0),
            Point::new(b.x0 as f64, b.y1 as f64 - 1.0),
        ];
        for i in 0..4 {
            line(&mut img, corners[i], corners[(i + 1) % 4], BOX);
        }
        if let Some(bubble) = det.bubble {
            circle(&mut img, bubble.center, bubble.radius, BUBBLE);
            put(&mut img, bubble.center.x, bubble.center.y, BUBBLE);
        }
        if let Some(wrist) = det.wrist {
            line(&mut img, wrist.w1, wrist.w2, WRIST);
        }
        if let Some(reference) = &det.reference {
            circle(&mut img, reference.c_ref, 2.0, REFERENCE);
        }
    }
    img
}
