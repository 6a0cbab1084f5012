//! The individual photometric operations, each usable on its own.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::compositor::{decode_image, encode_jpeg, ImageBuffer};
use crate::error::Result;

/// Round half up and saturate.
#[inline]
fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 255.0) + 0.5) as u8
}

fn map_values(img: &mut ImageBuffer, f: impl Fn(u8) -> u8) {
    let lut: [u8; 256] = std::array::from_fn(|i| f(i as u8));
    for v in img.data_mut() {
        *v = lut[*v as usize];
    }
}

pub fn add_value(img: &mut ImageBuffer, offset: i32) {
    map_values(img, |v| (v as i32 + offset).clamp(0, 255) as u8);
}

pub fn multiply_value(img: &mut ImageBuffer, factor: f32) {
    map_values(img, |v| to_u8(v as f32 * factor));
}

/// RGB in `[0, 1]` to (hue degrees in `[0, 360)`, saturation, value).
pub(crate) fn rgb_to_hsv(r: f32, g: f32, b: f32) -> (f32, f32, f32) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        let t = (g - b) / delta;
        60.0 * if t < 0.0 { t + 6.0 } else { t }
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h, s, max)
}

pub(crate) fn hsv_to_rgb(h: f32, s: f32, v: f32) -> (f32, f32, f32) {
    let c = v * s;
    let mut h = h;
    while h < 0.0 {
        h += 360.0;
    }
    while h >= 360.0 {
        h -= 360.0;
    }
    let hp = h / 60.0;
    let sector = hp as u32;
    let x = c * (1.0 - (hp - (sector & !1) as f32 - 1.0).abs());
    let (r, g, b) = match sector {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

/// Rotates hue by `hue_deg` and adds `saturation` (in 0..=255 units) to S.
pub fn shift_hue_saturation(img: &mut ImageBuffer, hue_deg: f32, saturation: f32) {
    let ds = saturation / 255.0;
    for px in img.data_mut().chunks_exact_mut(3) {
        let (h, s, v) = rgb_to_hsv(px[0] as f32 / 255.0, px[1] as f32 / 255.0, px[2] as f32 / 255.0);
        let (r, g, b) = hsv_to_rgb(h + hue_deg, (s + ds).clamp(0.0, 1.0), v);
        px[0] = to_u8(r * 255.0);
        px[1] = to_u8(g * 255.0);
        px[2] = to_u8(b * 255.0);
    }
}

/// Blend toward the luma image: 1.0 is identity, 0.0 is grayscale.
pub fn enhance_color(img: &mut ImageBuffer, factor: f32) {
    for px in img.data_mut().chunks_exact_mut(3) {
        let gray = 0.299 * px[0] as f32 + 0.587 * px[1] as f32 + 0.114 * px[2] as f32;
        for v in px.iter_mut() {
            *v = to_u8(gray + factor * (*v as f32 - gray));
        }
    }
}

/// Blend toward black: 1.0 is identity, 0.0 is black.
pub fn enhance_brightness(img: &mut ImageBuffer, factor: f32) {
    multiply_value(img, factor);
}

/// Blend toward a 3×3 smoothed copy (centre weight 5, neighbours 1, border
/// pixels kept): 1.0 is identity, 0.0 is the smoothed image.
pub fn enhance_sharpness(img: &mut ImageBuffer, factor: f32) {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w < 3 || h < 3 {
        return;
    }
    let src = img.data().to_vec();
    // 3-wide horizontal sums, then 3-tall sums of those give the 3×3 box sum
    let stride = w * 3;
    let mut rows = vec![0u16; h * stride];
    for y in 0..h {
        let line = &src[y * stride..(y + 1) * stride];
        let out = &mut rows[y * stride..(y + 1) * stride];
        for i in 3..stride - 3 {
            out[i] = line[i - 3] as u16 + line[i] as u16 + line[i + 3] as u16;
        }
    }
    let dst = img.data_mut();
    for y in 1..h - 1 {
        let (up, mid, down) = (&rows[(y - 1) * stride..], &rows[y * stride..], &rows[(y + 1) * stride..]);
        for i in 3..stride - 3 {
            let centre = src[y * stride + i] as u32;
            let sum = up[i] as u32 + mid[i] as u32 + down[i] as u32;
            let smooth = (((sum + 4 * centre) * 2 + 13) / 26) as f32;
            dst[y * stride + i] = to_u8(smooth + factor * (centre as f32 - smooth));
        }
    }
}

/// `k × k` mean filter with edge replication; `k` must be odd.
pub fn average_blur(img: &mut ImageBuffer, k: u32) {
    assert!(k % 2 == 1, "blur kernel must be odd");
    if k == 1 {
        return;
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let r = (k / 2) as usize;
    // horizontal then vertical running sums over edge-replicated lines
    let mut rows = vec![0u32; w * h * 3];
    let mut line = Vec::with_capacity(w.max(h) + 2 * r);
    let src = img.data();
    for y in 0..h {
        for c in 0..3 {
            line.clear();
            let at = |x: usize| src[(y * w + x) * 3 + c] as u32;
            line.extend((0..r).map(|_| at(0)));
            line.extend((0..w).map(at));
            line.extend((0..r).map(|_| at(w - 1)));
            let mut s: u32 = line[..2 * r].iter().sum();
            for x in 0..w {
                s += line[x + 2 * r];
                rows[(y * w + x) * 3 + c] = s;
                s -= line[x];
            }
        }
    }
    let area = k * k;
    let dst = img.data_mut();
    for x in 0..w {
        for c in 0..3 {
            line.clear();
            let at = |y: usize| rows[(y * w + x) * 3 + c];
            line.extend((0..r).map(|_| at(0)));
            line.extend((0..h).map(at));
            line.extend((0..r).map(|_| at(h - 1)));
            let mut s: u32 = line[..2 * r].iter().sum();
            for y in 0..h {
                s += line[y + 2 * r];
                dst[(y * w + x) * 3 + c] = ((s + area / 2) / area) as u8;
                s -= line[y];
            }
        }
    }
}

/// Adds independent zero-mean normal noise to every sample.
pub fn gaussian_noise<R: Rng + ?Sized>(img: &mut ImageBuffer, sigma: f32, rng: &mut R) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0f32, sigma).expect("finite sigma");
    for v in img.data_mut() {
        *v = to_u8(*v as f32 + normal.sample(rng));
    }
}

/// Encodes at `quality`, decodes back in place and returns the encoded bytes.
pub fn jpeg_round_trip(img: &mut ImageBuffer, quality: u8) -> Result<Vec<u8>> {
    let bytes = encode_jpeg(img, quality)?;
    *img = decode_image(&bytes)?;
    Ok(bytes)
}
