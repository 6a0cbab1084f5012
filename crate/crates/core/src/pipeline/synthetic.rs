//! Procedural stand-ins for real source images, used by the benchmark and tests.

use rand::Rng;

use crate::compositor::ImageBuffer;
use crate::sampling::stream_rng;

/// Smooth grayscale radiograph-like image: a bright rounded torso on a dark
/// field with two darker lobes.
pub fn foreground(width: u32, height: u32, seed: u64) -> ImageBuffer {
    let mut rng = stream_rng(seed, 0xf0);
    let cx = rng.random_range(-0.1..0.1);
    let cy = rng.random_range(-0.1..0.1);
    let rx = rng.random_range(0.7..0.9);
    let ry = rng.random_range(0.75..0.95);
    let lobe = rng.random_range(0.25..0.35);
    let tint = rng.random_range(0.0..12.0);
    let mut img = ImageBuffer::new(width, height);
    for y in 0..height {
        let ny = -1.0 + (2.0 * y as f64 + 1.0) / height as f64;
        for x in 0..width {
            let nx = -1.0 + (2.0 * x as f64 + 1.0) / width as f64;
            let body = 1.0 - (((nx - cx) / rx).powi(2) + ((ny - cy) / ry).powi(2)).min(1.0);
            let l = (-((nx - cx - 0.4).powi(2) + (ny - cy).powi(2)) / (2.0 * lobe * lobe)).exp()
                + (-((nx - cx + 0.4).powi(2) + (ny - cy).powi(2)) / (2.0 * lobe * lobe)).exp();
            let v = 30.0 + 190.0 * body.sqrt() - 70.0 * l * body + 10.0 * (3.0 * nx).sin();
            let g = v.clamp(0.0, 255.0);
            img.put(x, y, [g as u8, g as u8, (g + tint).min(255.0) as u8]);
        }
    }
    img
}

/// Cluttered colour scene: a gradient with random overlapping rectangles.
pub fn background(width: u32, height: u32, seed: u64) -> ImageBuffer {
    let mut rng = stream_rng(seed, 0xb9);
    let base: [f64; 3] = [0, 1, 2].map(|_| rng.random_range(40.0..200.0));
    let mut img = ImageBuffer::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let t = (x + y) as f64 / (width + height) as f64;
            img.put(x, y, base.map(|b| (b * (0.6 + 0.8 * t)).min(255.0) as u8));
        }
    }
    for _ in 0..12 {
        let x0 = rng.random_range(0..width);
        let y0 = rng.random_range(0..height);
        let x1 = (x0 + rng.random_range(1..=width / 3 + 1)).min(width);
        let y1 = (y0 + rng.random_range(1..=height / 3 + 1)).min(height);
        let c: [u8; 3] = [0, 1, 2].map(|_| rng.random_range(0..=255u8));
        for y in y0..y1 {
            for x in x0..x1 {
                img.put(x, y, c);
            }
        }
    }
    img
}
