//! Raster side of the pipeline: projective warping with a coverage mask,
//! mask-weighted compositing, screen synthesis and rectification.

mod io;
mod raster;

pub use io::{decode_image, encode_jpeg, encode_png, load_rgb, save_image};
pub use raster::{ImageBuffer, Mask};

use crate::error::Result;
use crate::geometry::{Homography, Point, W_EPS};
use crate::sampling::ScreenParams;

/// Normalized coordinate of the centre of pixel `i` along an axis of `n` pixels.
#[inline]
pub fn pixel_to_normalized(i: f64, n: u32) -> f64 {
    -1.0 + (2.0 * i + 1.0) / n as f64
}

/// Continuous pixel coordinate (pixel centres at integers) of normalized `v`.
#[inline]
pub fn normalized_to_pixel(v: f64, n: u32) -> f64 {
    (v + 1.0) * n as f64 * 0.5 - 0.5
}

/// Bilinear sample at continuous pixel position `(px, py)`, clamped to the edge.
#[inline]
fn sample_bilinear(src: &ImageBuffer, px: f64, py: f64) -> [u8; 3] {
    let w = src.width() as usize;
    let h = src.height() as usize;
    let fx = px.clamp(0.0, (w - 1) as f64);
    let fy = py.clamp(0.0, (h - 1) as f64);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let ax = (fx - x0 as f64) as f32;
    let ay = (fy - y0 as f64) as f32;
    let d = src.data();
    let i00 = (y0 * w + x0) * 3;
    let i10 = (y0 * w + x1) * 3;
    let i01 = (y1 * w + x0) * 3;
    let i11 = (y1 * w + x1) * 3;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let top = d[i00 + c] as f32 * (1.0 - ax) + d[i10 + c] as f32 * ax;
        let bot = d[i01 + c] as f32 * (1.0 - ax) + d[i11 + c] as f32 * ax;
        *o = round_u8(top * (1.0 - ay) + bot * ay);
    }
    out
}

/// Round half up and saturate.
#[inline]
fn round_u8(v: f32) -> u8 {
    (v.clamp(0.0, 255.0) + 0.5) as u8
}

/// Warps `src` by `m` onto an `out_w × out_h` canvas by inverse mapping.
///
/// Each output pixel pulls the bilinear sample at its centre's preimage. The
/// mask holds the fraction of a 2×2 grid of sub-pixel preimages that land
/// inside the source frame; uncovered pixels are black. Preimages with
/// non-positive homogeneous weight lie behind the projection and count as
/// outside.
pub fn warp(src: &ImageBuffer, m: &Homography, out_w: u32, out_h: u32) -> Result<(ImageBuffer, Mask)> {
    let inv = m.invert()?;
    Ok(warp_with_inverse(src, &inv, out_w, out_h))
}

pub(crate) fn warp_with_inverse(src: &ImageBuffer, inv: &Homography, out_w: u32, out_h: u32) -> (ImageBuffer, Mask) {
    let mut out = ImageBuffer::new(out_w, out_h);
    let mut mask = Mask::new(out_w, out_h);
    let (sw, sh) = (src.width(), src.height());
    let t = inv.theta();
    // The preimage's homogeneous coordinates split into a column term and a
    // row term, tabulated at the pixel centre and both sub-pixel offsets.
    let offsets = |n: u32| {
        let q = 0.5 / n as f64;
        move |i: u32| {
            let c = pixel_to_normalized(i as f64, n);
            [c - q, c, c + q]
        }
    };
    let cols: Vec<[[f64; 3]; 3]> = (0..out_w)
        .map(offsets(out_w))
        .map(|xs| xs.map(|x| [t[0] * x, t[3] * x, t[6] * x]))
        .collect();
    let px_data = out.data_mut();
    let mask_data = mask.data_mut();
    for j in 0..out_h {
        let rows = offsets(out_h)(j).map(|y| [t[1] * y + t[2], t[4] * y + t[5], t[7] * y + 1.0]);
        let hom = |c: &[f64; 3], r: &[f64; 3]| [c[0] + r[0], c[1] + r[1], c[2] + r[2]];
        let inside = |h: [f64; 3]| h[2] > W_EPS && h[0].abs() <= h[2] && h[1].abs() <= h[2];
        for (i, col) in cols.iter().enumerate() {
            let subs = [
                hom(&col[0], &rows[0]),
                hom(&col[2], &rows[0]),
                hom(&col[0], &rows[2]),
                hom(&col[2], &rows[2]),
            ];
            let covered = subs.iter().filter(|&&h| inside(h)).count() as u32;
            if covered == 0 {
                continue;
            }
            let centre = hom(&col[1], &rows[1]);
            let h = if centre[2] > W_EPS {
                centre
            } else {
                *subs.iter().find(|&&h| inside(h)).expect("covered > 0")
            };
            let at = Point::new(h[0] / h[2], h[1] / h[2]);
            let rgb = sample_bilinear(src, normalized_to_pixel(at.x, sw), normalized_to_pixel(at.y, sh));
            let idx = j as usize * out_w as usize + i;
            px_data[idx * 3..idx * 3 + 3].copy_from_slice(&rgb);
            mask_data[idx] = ((covered * 255 + 2) / 4) as u8;
        }
    }
    (out, mask)
}

/// Mask-weighted overlay `mask·fg + (1 - mask)·bg`. The background is
/// resampled to the foreground's size when they differ.
pub fn composite(fg: &ImageBuffer, mask: &Mask, bg: &ImageBuffer) -> Result<ImageBuffer> {
    fg.check_mask(mask)?;
    let resized;
    let bg = if bg.dimensions() == fg.dimensions() {
        bg
    } else {
        resized = resample(bg, fg.width(), fg.height());
        &resized
    };
    let mut out = ImageBuffer::new(fg.width(), fg.height());
    let m = mask.data();
    for (((o, f), b), idx) in out
        .data_mut()
        .chunks_exact_mut(3)
        .zip(fg.data().chunks_exact(3))
        .zip(bg.data().chunks_exact(3))
        .zip(0..)
    {
        let a = m[idx] as u32;
        match a {
            255 => o.copy_from_slice(f),
            0 => o.copy_from_slice(b),
            _ => {
                for c in 0..3 {
                    o[c] = ((a * f[c] as u32 + (255 - a) * b[c] as u32 + 127) / 255) as u8;
                }
            }
        }
    }
    Ok(out)
}

/// Embeds `x` inside a constant-colour border described by `p`, keeping `x`'s size.
pub fn synthesize_screen(x: &ImageBuffer, p: &ScreenParams) -> ImageBuffer {
    let inv = p
        .matrix()
        .invert()
        .expect("screen matrix has scale >= 0.4 for in-range padding");
    let (fg, mask) = warp_with_inverse(x, &inv, x.width(), x.height());
    let canvas = ImageBuffer::filled(x.width(), x.height(), p.color);
    composite(&fg, &mask, &canvas).expect("same dimensions")
}

/// Undoes `m`: warps `photo` by `m⁻¹`.
pub fn rectify(photo: &ImageBuffer, m: &Homography, out_w: u32, out_h: u32) -> Result<ImageBuffer> {
    // The inverse of m⁻¹ is m itself, so skip a second inversion.
    m.invert()?;
    Ok(warp_with_inverse(photo, m, out_w, out_h).0)
}

/// Bilinear resize with pixel centres aligned.
pub fn resample(src: &ImageBuffer, out_w: u32, out_h: u32) -> ImageBuffer {
    assert!(out_w >= 1 && out_h >= 1, "output dimensions must be >= 1");
    if src.dimensions() == (out_w, out_h) {
        return src.clone();
    }
    let (sw, sh) = (src.width() as usize, src.height() as usize);
    let axis = |n_out: u32, n_src: usize| -> Vec<(usize, usize, f32)> {
        let ratio = n_src as f64 / n_out as f64;
        (0..n_out)
            .map(|i| {
                let f = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (n_src - 1) as f64);
                let i0 = f.floor() as usize;
                (i0, (i0 + 1).min(n_src - 1), (f - i0 as f64) as f32)
            })
            .collect()
    };
    let xs = axis(out_w, sw);
    let ys = axis(out_h, sh);
    let mut out = ImageBuffer::new(out_w, out_h);
    let d = src.data();
    let ow = out_w as usize;
    let od = out.data_mut();
    for (j, &(y0, y1, ay)) in ys.iter().enumerate() {
        for (i, &(x0, x1, ax)) in xs.iter().enumerate() {
            let o = (j * ow + i) * 3;
            for c in 0..3 {
                let p = |x: usize, y: usize| d[(y * sw + x) * 3 + c] as f32;
                let top = p(x0, y0) * (1.0 - ax) + p(x1, y0) * ax;
                let bot = p(x0, y1) * (1.0 - ax) + p(x1, y1) * ax;
                od[o + c] = round_u8(top * (1.0 - ay) + bot * ay);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> ImageBuffer {
        let mut img = ImageBuffer::new(w, h);
        for y in 0..h {
            for x in 0..w {
                img.put(x, y, [(x * 255 / (w - 1)) as u8, (y * 255 / (h - 1)) as u8, ((x + y) % 256) as u8]);
            }
        }
        img
    }

    #[test]
    fn identity_warp_is_exact() {
        let src = gradient(37, 23);
        let (out, mask) = warp(&src, &Homography::IDENTITY, 37, 23).unwrap();
        assert_eq!(out, src);
        assert!(mask.data().iter().all(|&m| m == 255));
    }

    #[test]
    fn half_scale_covers_a_quarter() {
        let src = ImageBuffer::filled(100, 100, [200, 100, 50]);
        let (_, mask) = warp(&src, &Homography::scale(0.5, 0.5).unwrap(), 100, 100).unwrap();
        assert!((mask.coverage() - 0.25).abs() < 0.01, "{}", mask.coverage());
    }

    #[test]
    fn outside_is_black() {
        let src = ImageBuffer::filled(64, 64, [200, 100, 50]);
        let (out, mask) = warp(&src, &Homography::scale(0.5, 0.5).unwrap(), 64, 64).unwrap();
        assert_eq!(out.get(0, 0), [0, 0, 0]);
        assert_eq!(mask.get(0, 0), 0);
        assert_eq!(out.get(32, 32), [200, 100, 50]);
        assert_eq!(mask.get(32, 32), 255);
    }

    #[test]
    fn singular_warp_errors() {
        let m = Homography::from_theta([1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0]).unwrap();
        let src = ImageBuffer::new(4, 4);
        assert!(warp(&src, &m, 4, 4).is_err());
        assert!(rectify(&src, &m, 4, 4).is_err());
    }

    #[test]
    fn composite_masks() {
        let fg = ImageBuffer::filled(8, 4, [10, 20, 30]);
        let bg = ImageBuffer::filled(8, 4, [200, 210, 220]);
        let full = Mask::filled(8, 4, 255);
        assert_eq!(composite(&fg, &full, &bg).unwrap(), fg);
        let none = Mask::filled(8, 4, 0);
        assert_eq!(composite(&fg, &none, &bg).unwrap(), bg);
        let mut half = Mask::new(8, 4);
        for y in 0..4 {
            for x in 0..4 {
                half.put(x, y, 255);
            }
        }
        let out = composite(&fg, &half, &bg).unwrap();
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(out.get(x, y), if x < 4 { [10, 20, 30] } else { [200, 210, 220] });
            }
        }
        assert!(composite(&fg, &Mask::new(3, 3), &bg).is_err());
    }

    #[test]
    fn composite_resamples_background() {
        let fg = ImageBuffer::filled(8, 8, [0; 3]);
        let bg = ImageBuffer::filled(3, 5, [40, 50, 60]);
        let out = composite(&fg, &Mask::new(8, 8), &bg).unwrap();
        assert_eq!(out, ImageBuffer::filled(8, 8, [40, 50, 60]));
    }

    #[test]
    fn zero_padding_screen_is_identity() {
        let x = gradient(31, 29);
        let p = ScreenParams {
            top: 0.0,
            bottom: 0.0,
            left: 0.0,
            right: 0.0,
            color: [5, 6, 7],
        };
        assert_eq!(synthesize_screen(&x, &p), x);
    }

    #[test]
    fn half_padding_screen() {
        let x = gradient(64, 64);
        let p = ScreenParams {
            top: 0.5,
            bottom: 0.5,
            left: 0.5,
            right: 0.5,
            color: [0, 0, 0],
        };
        let sc = synthesize_screen(&x, &p);
        for i in 0..64 {
            assert_eq!(sc.get(i, 0), [0, 0, 0]);
            assert_eq!(sc.get(0, i), [0, 0, 0]);
            assert_eq!(sc.get(i, 63), [0, 0, 0]);
            assert_eq!(sc.get(63, i), [0, 0, 0]);
        }
        // output pixel 32 sits at normalized 1/64, preimage 1/32 = pixel 32.5
        let expect = sample_bilinear(&x, 32.5, 32.5);
        assert_eq!(sc.get(32, 32), expect);
    }

    #[test]
    fn screen_content_matches_independent_warp() {
        let x = gradient(50, 40);
        let p = ScreenParams {
            top: 0.1,
            bottom: 0.3,
            left: 0.45,
            right: 0.05,
            color: [9, 3, 17],
        };
        let sc = synthesize_screen(&x, &p);
        let (warped, mask) = warp(&x, &p.matrix(), 50, 40).unwrap();
        for y in 0..40 {
            for x_ in 0..50 {
                match mask.get(x_, y) {
                    255 => assert_eq!(sc.get(x_, y), warped.get(x_, y)),
                    0 => assert_eq!(sc.get(x_, y), [9, 3, 17]),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn rectify_identity_round_trip() {
        let x = gradient(20, 30);
        let (w, _) = warp(&x, &Homography::IDENTITY, 20, 30).unwrap();
        assert_eq!(rectify(&w, &Homography::IDENTITY, 20, 30).unwrap(), x);
    }

    #[test]
    fn resample_examples() {
        let x = gradient(17, 9);
        assert_eq!(resample(&x, 17, 9), x);
        let c = ImageBuffer::filled(10, 7, [33, 66, 99]);
        let up = resample(&c, 20, 14);
        assert_eq!(resample(&up, 10, 7), c);
    }

    #[test]
    fn resample_downsample_matches_box_average() {
        // rows of a horizontal ramp; a 2× reduction samples midway between pairs
        let mut src = ImageBuffer::new(64, 8);
        for y in 0..8 {
            for x in 0..64 {
                let v = (x * 4) as u8;
                src.put(x, y, [v, 255 - v, v / 2]);
            }
        }
        let out = resample(&src, 32, 4);
        for y in 0..4 {
            for x in 0..32 {
                let mut acc = [0u32; 3];
                for dy in 0..2 {
                    for dx in 0..2 {
                        let p = src.get(2 * x + dx, 2 * y + dy);
                        for c in 0..3 {
                            acc[c] += p[c] as u32;
                        }
                    }
                }
                let got = out.get(x, y);
                for c in 0..3 {
                    let avg = acc[c] as f64 / 4.0;
                    assert!((got[c] as f64 - avg).abs() <= 1.0, "{x},{y},{c}: {} vs {avg}", got[c]);
                }
            }
        }
    }
}
