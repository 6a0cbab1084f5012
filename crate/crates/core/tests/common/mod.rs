//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rectisynth::compositor::{pixel_to_normalized, ImageBuffer};
use rectisynth::{Homography, Point, Quad};

/// Plain Gauss–Jordan inverse of a 3×3 matrix, normalized so `m33 = 1`.
pub fn gauss_jordan_inverse(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut a = [[0.0; 6]; 3];
    for r in 0..3 {
        a[r][..3].copy_from_slice(&m[r]);
        a[r][3 + r] = 1.0;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..3 {
            if r != col {
                let f = a[r][col];
                let pivot_row = a[col];
                for (v, p) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    let s = a[2][5];
    Some(std::array::from_fn(|r| std::array::from_fn(|c| a[r][3 + c] / s)))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// x-extent of a convex polygon on the horizontal line `y`, if it meets it.
fn row_span(poly: &[Point], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if (a.y <= y && y <= b.y) || (b.y <= y && y <= a.y) {
            let x = if a.y == b.y {
                lo = lo.min(a.x.min(b.x));
                a.x.max(b.x)
            } else {
                a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
            };
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Pixel-count IoU on an `n × n` grid over the pair's bounding box.
///
/// Counts are done per row from the convex x-extents, so the cost is O(n).
pub fn raster_iou(a: &Quad, b: &Quad, n: usize) -> f64 {
    let pts = a.vertices.iter().chain(&b.vertices);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let (sx, sy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    // centres c_k = x0 + (k + 0.5) sx inside [lo, hi]
    let count = |lo: f64, hi: f64| -> i64 {
        let k_lo = ((lo - x0) / sx - 0.5).ceil().max(0.0) as i64;
        let k_hi = ((hi - x0) / sx - 0.5).floor().min(n as f64 - 1.0) as i64;
        (k_hi - k_lo + 1).max(0)
    };
    let (mut ca, mut cb, mut ci) = (0i64, 0i64, 0i64);
    for r in 0..n {
        let y = y0 + (r as f64 + 0.5) * sy;
        let sa = row_span(&a.vertices, y);
        let sb = row_span(&b.vertices, y);
        if let Some((l, h)) = sa {
            ca += count(l, h);
        }
        if let Some((l, h)) = sb {
            cb += count(l, h);
        }
        if let (Some(p), Some(q)) = (sa, sb) {
            let (l, h) = (p.0.max(q.0), p.1.min(q.1));
            if l <= h {
                ci += count(l, h);
            }
        }
    }
    ci as f64 / (ca + cb - ci) as f64
}

/// PSNR in dB over pixels of `[x0, x1) × [y0, y1)` accepted by `keep`.
/// Returns `None` when no pixel is kept.
pub fn psnr_region(
    a: &ImageBuffer,
    b: &ImageBuffer,
    (x0, x1, y0, y1): (u32, u32, u32, u32),
    keep: impl Fn(u32, u32) -> bool,
) -> Option<f64> {
    let mut se = 0.0;
    let mut n = 0usize;
    for y in y0..y1 {
        for x in x0..x1 {
            if !keep(x, y) {
                continue;
            }
            for (p, q) in a.get(x, y).iter().zip(b.get(x, y)) {
                let d = *p as f64 - q as f64;
                se += d * d;
            }
            n += 3;
        }
    }
    if n == 0 {
        return None;
    }
    let mse = se / n as f64;
    Some(if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0f64 * 255.0 / mse).log10() })
}

/// Central 50% × 50% window of a `w × h` image.
pub fn central(w: u32, h: u32) -> (u32, u32, u32, u32) {
    (w / 4, w - w / 4, h / 4, h - h / 4)
}

/// Whether output pixel `(x, y)` of `rectify(photo, m)` pulls from inside the
/// photo, at least half a pixel away from its border.
pub fn visible_in_photo(m: &Homography, (w, h): (u32, u32), x: u32, y: u32) -> bool {
    let p = Point::new(pixel_to_normalized(x as f64, w), pixel_to_normalized(y as f64, h));
    match m.apply(p) {
        Ok(q) => q.x.abs() <= 1.0 - 1.0 / w as f64 && q.y.abs() <= 1.0 - 1.0 / h as f64,
        Err(_) => false,
    }
}

/// Smooth test pattern: low-frequency sinusoids per channel.
pub fn smooth_image(w: u32, h: u32, phase: f64) -> ImageBuffer {
    let mut img = ImageBuffer::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let u = x as f64 / w as f64;
            let v = y as f64 / h as f64;
            let f = |a: f64, b: f64, c: f64| (127.5 + 100.0 * (a * u + b * v + c + phase).sin()).round() as u8;
            img.put(x, y, [f(3.0, 1.0, 0.0), f(-1.5, 2.5, 1.0), f(2.0, -2.0, 2.0)]);
        }
    }
    img
}

/// Random strictly convex quad: four sorted angles on a random ellipse.
pub fn random_convex_quad<R: rand::Rng>(rng: &mut R) -> Quad {
    use std::f64::consts::TAU;
    loop {
        let (cx, cy) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let (rx, ry) = (rng.random_range(0.1..0.9), rng.random_range(0.1..0.9));
        let rot: f64 = rng.random_range(0.0..TAU);
        let mut angles: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
        angles.sort_by(f64::total_cmp);
        let vertices = angles.map(|t| {
            let (ex, ey) = (rx * t.cos(), ry * t.sin());
            Point::new(cx + ex * rot.cos() - ey * rot.sin(), cy + ex * rot.sin() + ey * rot.cos())
        });
        let q = Quad::new(vertices);
        if q.is_valid() && q.area() > 0.01 {
            return q;
        }
    }
}

pub fn shrink_toward(q: &Quad, c: Point, s: f64) -> Quad {
    Quad::new(q.vertices.map(|v| Point::new(c.x + s * (v.x - c.x), c.y + s * (v.y - c.y))))
}

/// Smallest `[lo, hi]` with `P(K < lo) ≤ α/2` and `P(K > hi) ≤ α/2` for
/// `K ~ Binomial(n, p)`, from the exact pmf.
pub fn binomial_interval(n: u64, p: f64, alpha: f64) -> (u64, u64) {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let pmf = |k: u64| {
        (ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize]
            + k as f64 * p.ln()
            + (n - k) as f64 * (1.0 - p).ln())
        .exp()
    };
    let mut lo = 0;
    let mut tail = 0.0;
    while tail + pmf(lo) <= alpha / 2.0 {
        tail += pmf(lo);
        lo += 1;
    }
    let mut hi = n;
    let mut tail = 0.0;
    while tail + pmf(hi) <= alpha / 2.0 {
        tail += pmf(hi);
        hi -= 1;
    }
    (lo, hi)
}

pub fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Writes `n_fg` procedural foregrounds and `n_bg` backgrounds as PNGs into
/// `root/fg` and `root/bg`.
pub fn write_sources(root: &std::path::Path, n_fg: u64, n_bg: u64) -> rectisynth::pipeline::SourceSet {
    use rectisynth::compositor::save_image;
    use rectisynth::pipeline::synthetic;
    let (fg, bg) = (root.join("fg"), root.join("bg"));
    std::fs::create_dir_all(&fg).unwrap();
    std::fs::create_dir_all(&bg).unwrap();
    for i in 0..n_fg {
        save_image(&synthetic::foreground(96, 112, i), &fg.join(format!("fg{i:02}.png"))).unwrap();
    }
    for i in 0..n_bg {
        save_image(&synthetic::background(120, 90, 100 + i), &bg.join(format!("bg{i:02}.png"))).unwrap();
    }
    rectisynth::pipeline::SourceSet::from_dirs(&fg, &bg).unwrap()
}
