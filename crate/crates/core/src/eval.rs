//! Rectification scoring by region overlap.
//!
//! A predicted transform is turned into the quad it maps the source frame
//! onto and compared with an annotated quad by exact intersection-over-union.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polygon_signed_area, Homography, Point, Quad};
use crate::sampling::stream_rng;

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Clips `subject` to the convex polygon `clip` (either winding), one
/// half-plane per edge of `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let orient = polygon_signed_area(clip).signum();
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let c0 = clip[i];
        let c1 = clip[(i + 1) % clip.len()];
        let side = |p: Point| orient * cross(c0, c1, p);
        let input = std::mem::take(&mut out);
        let mut prev = *input.last().expect("non-empty");
        let mut prev_side = side(prev);
        for &cur in &input {
            let cur_side = side(cur);
            if cur_side >= 0.0 {
                if prev_side < 0.0 {
                    out.push(intersect(prev, cur, prev_side, cur_side));
                }
                out.push(cur);
            } else if prev_side >= 0.0 {
                out.push(intersect(prev, cur, prev_side, cur_side));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    out
}

fn intersect(a: Point, b: Point, da: f64, db: f64) -> Point {
    let t = da / (da - db);
    Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
}

/// Area of the intersection of two convex polygons.
pub fn intersection_area(a: &[Point], b: &[Point]) -> f64 {
    polygon_signed_area(&clip_convex(a, b)).abs()
}

/// Exact intersection-over-union of two strictly convex quads.
pub fn quad_iou(a: &Quad, b: &Quad) -> Result<f64> {
    for q in [a, b] {
        let v = q.validate();
        if v != crate::geometry::QuadValidity::Valid {
            return Err(Error::InvalidQuad(v));
        }
    }
    let inter = intersection_area(&a.vertices, &b.vertices);
    let union = a.area() + b.area() - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub photo_id: String,
    pub quad: Quad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub photo_id: String,
    pub homography: Homography,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub photo_id: String,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub mean_iou: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Predictions whose region is not a valid convex quad; each scores 0.
    pub invalid_predictions: usize,
    pub samples: Vec<SampleScore>,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples:   {}", self.n)?;
        writeln!(f, "mean IoU:  {:.3} (95% CI {:.3}, {:.3})", self.mean_iou, self.ci_low, self.ci_high)?;
        write!(f, "invalid:   {}", self.invalid_predictions)
    }
}

/// Percentile bootstrap interval of the mean.
pub fn bootstrap_ci(values: &[f64], cfg: BootstrapConfig) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0, "bootstrap of an empty sample");
    let b = cfg.resamples.max(1);
    let mut rng = stream_rng(cfg.seed, 0);
    let mut means: Vec<f64> = (0..b)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let lo = ((0.025 * b as f64).floor() as usize).min(b - 1);
    let hi = ((0.975 * b as f64).ceil() as usize).clamp(1, b) - 1;
    (means[lo], means[hi])
}

/// Scores each prediction against the annotation with the same id.
pub fn evaluate(predictions: &[Prediction], annotations: &[Annotation], bootstrap: BootstrapConfig) -> Result<EvalReport> {
    if predictions.is_empty() && annotations.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(&p.photo_id, p).is_some() {
            return Err(Error::DuplicateId(p.photo_id.clone()));
        }
    }
    let mut unmatched: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for a in annotations {
        if !seen.insert(a.photo_id.as_str()) {
            return Err(Error::DuplicateId(a.photo_id.clone()));
        }
        if !by_id.contains_key(a.photo_id.as_str()) {
            unmatched.push(a.photo_id.clone());
        }
    }
    unmatched.extend(
        predictions
            .iter()
            .filter(|p| !seen.contains(p.photo_id.as_str()))
            .map(|p| p.photo_id.clone()),
    );
    if !unmatched.is_empty() {
        unmatched.sort();
        return Err(Error::UnmatchedIds(unmatched));
    }

    let mut samples = Vec::with_capacity(annotations.len());
    let mut invalid = 0;
    for a in annotations {
        let v = a.quad.validate();
        if v != crate::geometry::QuadValidity::Valid {
            return Err(Error::InvalidQuad(v));
        }
        let pred = by_id[a.photo_id.as_str()];
        let iou = match pred.homography.to_quad().and_then(|q| quad_iou(&q, &a.quad)) {
            Ok(v) => v,
            Err(_) => {
                invalid += 1;
                0.0
            }
        };
        samples.push(SampleScore {
            photo_id: a.photo_id.clone(),
            iou,
        });
    }
    let values: Vec<f64> = samples.iter().map(|s| s.iou).collect();
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let (lo, hi) = bootstrap_ci(&values, bootstrap);
    Ok(EvalReport {
        n,
        mean_iou: mean,
        // percentile bounds can sit a hair off a skewed mean
        ci_low: lo.min(mean),
        ci_high: hi.max(mean),
        invalid_predictions: invalid,
        samples,
    })
}

/// Reads `id v1 .. v8` records (whitespace or comma separated, `#` comments).
pub fn read_records(path: &Path) -> Result<Vec<(String, [f64; 8])>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, path)
}

pub fn parse_records(text: &str, path: &Path) -> Result<Vec<(String, [f64; 8])>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 9 {
            return Err(err(format!("expected id and 8 numbers, found {} fields", fields.len())));
        }
        let mut vals = [0.0f64; 8];
        for (v, s) in vals.iter_mut().zip(&fields[1..]) {
            *v = s.parse().map_err(|_| err(format!("not a number: `{s}`")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value `{s}`")));
            }
        }
        out.push((fields[0].to_string(), vals));
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    Ok(read_records(path)?
        .into_iter()
        .map(|(photo_id, c)| Annotation {
            photo_id,
            quad: Quad::from_coords(c),
        })
        .collect())
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    read_records(path)?
        .into_iter()
        .map(|(photo_id, t)| {
            Ok(Prediction {
                photo_id,
                homography: Homography::from_theta(t)?,
            })
        })
        .collect()
}

/// One `id v1 .. v8` line.
pub fn format_record(id: &str, values: &[f64; 8]) -> String {
    let mut s = id.to_string();
    for v in values {
        s.push(' ');
        s.push_str(&v.to_string());
    }
    s
}
