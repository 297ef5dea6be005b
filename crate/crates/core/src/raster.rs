//! Binary image masks and polyline rasterization, shared by the confidence
//! score (template render vs detected markings) and the synthetic scene
//! generator.

use crate::field::SampledTemplate;
use crate::geometry::{CameraState, Projector};
use crate::Vec2;

/// Bit-packed binary mask over the image grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BitMask {
    pub width: u32,
    pub height: u32,
    words: Vec<u64>,
}

impl BitMask {
    pub fn new(width: u32, height: u32) -> Self {
        let bits = width as usize * height as usize;
        Self { width, height, words: vec![0; bits.div_ceil(64)] }
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32) {
        let i = self.index(x, y);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        let i = self.index(x, y);
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersection_count(&self, other: &BitMask) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn union_count(&self, other: &BitMask) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Jaccard index; 0 when the union is empty.
    pub fn jaccard(&self, other: &BitMask) -> f64 {
        let union = self.union_count(other);
        if union == 0 {
            return 0.0;
        }
        self.intersection_count(other) as f64 / union as f64
    }

    /// Sets the pixels containing the given points (out-of-bounds dropped).
    pub fn set_points(&mut self, points: &[Vec2<f64>]) {
        for p in points {
            let (x, y) = (p.x.floor(), p.y.floor());
            if x >= 0.0 && y >= 0.0 && (x as u32) < self.width && (y as u32) < self.height {
                self.set(x as u32, y as u32);
            }
        }
    }

    /// Set pixel centers as points, scanline order.
    pub fn to_points(&self) -> Vec<Vec2<f64>> {
        let mut out = Vec::with_capacity(self.count());
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out.push(Vec2::new(x as f64, y as f64));
                }
            }
        }
        out
    }

    /// Stamps every pixel whose center lies within `half_width` of segment ab.
    pub fn stamp_segment(&mut self, a: &Vec2<f64>, b: &Vec2<f64>, half_width: f64) {
        let min_x = (a.x.min(b.x) - half_width).floor().max(0.0) as i64;
        let max_x = (a.x.max(b.x) + half_width).ceil().min(self.width as f64 - 1.0) as i64;
        let min_y = (a.y.min(b.y) - half_width).floor().max(0.0) as i64;
        let max_y = (a.y.max(b.y) + half_width).ceil().min(self.height as f64 - 1.0) as i64;
        if min_x > max_x || min_y > max_y {
            return;
        }
        let ab = b - a;
        let len2 = ab.norm_squared();
        let hw2 = half_width * half_width;
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let p = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                let d2 = if len2 < 1e-18 {
                    (p - a).norm_squared()
                } else {
                    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
                    (p - (a + ab * t)).norm_squared()
                };
                if d2 <= hw2 {
                    self.set(x as u32, y as u32);
                }
            }
        }
    }

    /// Stamps a projected polyline; `None` entries (behind camera) break it.
    pub fn stamp_polyline(&mut self, pixels: &[Option<Vec2<f64>>], half_width: f64) {
        for (i, pix) in pixels.iter().enumerate() {
            let Some(p) = pix else { continue };
            match pixels.get(i + 1).copied().flatten() {
                Some(q) => self.stamp_segment(p, &q, half_width),
                None => self.stamp_segment(p, p, half_width),
            }
        }
    }
}

/// Renders every template element through the camera as a thick-stroke
/// binary mask, clipped to the image.
pub fn render_template(cam: &CameraState, sampled: &SampledTemplate, stroke_px: f64) -> BitMask {
    let mut mask = BitMask::new(cam.image_w, cam.image_h);
    let projector = Projector::new(cam);
    let half = stroke_px * 0.5;
    for class in sampled.classes() {
        let world = sampled.samples(class).unwrap();
        let pixels: Vec<_> = world.iter().map(|x| projector.project(x).ok()).collect();
        mask.stamp_polyline(&pixels, half);
    }
    mask
}
