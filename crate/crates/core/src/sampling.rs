//! Random draws of transform and screen parameters, and the generator config.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Homography, W_EPS};
use crate::perturb::PerturbConfig;

/// Counter-based generator used for every random stream in the crate.
pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` of the generator keyed by `seed`.
///
/// Streams never overlap, so work indexed by `stream` can run on any thread
/// in any order and still see the same numbers.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformRanges {
    /// Uniform range for both scale factors.
    pub scale: [f64; 2],
    /// Upper bound on `|Cx - Cy|`; pairs outside it are redrawn.
    pub max_scale_gap: f64,
    pub shear: [f64; 2],
    /// Uniform rotation range in radians.
    pub rotation: [f64; 2],
    /// Standard deviation of the zero-mean normal perspective terms.
    pub perspective_sigma: f64,
    /// Standard deviation of the zero-mean normal translation terms.
    pub translation_sigma: f64,
}

impl Default for TransformRanges {
    fn default() -> Self {
        TransformRanges {
            scale: [0.2, 0.8],
            max_scale_gap: 0.2,
            shear: [-0.1, 0.1],
            rotation: [-std::f64::consts::PI, std::f64::consts::PI],
            perspective_sigma: 0.1,
            translation_sigma: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreenConfig {
    pub probability: f64,
    /// Uniform range for each of the four padding fractions.
    pub padding: [f64; 2],
    /// Each color channel is drawn uniformly from `0..=color_max`.
    pub color_max: u8,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            probability: 0.3,
            padding: [0.0, 0.6],
            color_max: 19,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub max_resample_attempts: u32,
    pub transform: TransformRanges,
    pub screen: ScreenConfig,
    pub perturb: PerturbConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            canvas_width: 224,
            canvas_height: 224,
            max_resample_attempts: 100,
            transform: TransformRanges::default(),
            screen: ScreenConfig::default(),
            perturb: PerturbConfig::default(),
        }
    }
}

fn merge_tables(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Error::Config(format!("{name}: bad range {r:?}")));
    }
    Ok(())
}

impl GenConfig {
    /// Parses a TOML document; any key it leaves out keeps its default,
    /// including single fields inside a table.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        let mut merged = toml::Table::try_from(GenConfig::default()).map_err(|e| Error::Config(e.to_string()))?;
        merge_tables(&mut merged, user);
        let cfg: GenConfig = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GenConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.transform;
        check_range("transform.scale", t.scale)?;
        check_range("transform.shear", t.shear)?;
        check_range("transform.rotation", t.rotation)?;
        if t.scale[0] <= 0.0 {
            return Err(Error::Config("transform.scale must be positive".into()));
        }
        if !(t.max_scale_gap >= 0.0) {
            return Err(Error::Config("transform.max_scale_gap must be >= 0".into()));
        }
        if !(t.perspective_sigma >= 0.0 && t.perspective_sigma.is_finite())
            || !(t.translation_sigma >= 0.0 && t.translation_sigma.is_finite())
        {
            return Err(Error::Config("transform sigmas must be finite and >= 0".into()));
        }
        let s = &self.screen;
        if !(0.0..=1.0).contains(&s.probability) {
            return Err(Error::Config("screen.probability must lie in [0, 1]".into()));
        }
        check_range("screen.padding", s.padding)?;
        if s.padding[0] < 0.0 || s.padding[1] >= 1.0 {
            return Err(Error::Config("screen.padding must lie in [0, 1)".into()));
        }
        if self.max_resample_attempts == 0 {
            return Err(Error::Config("max_resample_attempts must be >= 1".into()));
        }
        if self.canvas_width == 0 || self.canvas_height == 0 {
            return Err(Error::Config("canvas dimensions must be >= 1".into()));
        }
        self.perturb.validate()
    }
}

/// Parameters of the five factor actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub cx: f64,
    pub cy: f64,
    pub sx: f64,
    pub sy: f64,
    pub alpha: f64,
    pub px: f64,
    pub py: f64,
    pub tx: f64,
    pub ty: f64,
}

impl TransformParams {
    /// `M_T · M_P · M_R · M_S · M_C`.
    pub fn homography(&self) -> Result<Homography> {
        let c = Homography::scale(self.cx, self.cy)?;
        let s = Homography::shear(self.sx, self.sy)?;
        let r = Homography::rotate(self.alpha)?;
        let p = Homography::perspective(self.px, self.py)?;
        let t = Homography::translate(self.tx, self.ty)?;
        t.compose(&p)?.compose(&r)?.compose(&s)?.compose(&c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledTransform {
    pub params: TransformParams,
    pub homography: Homography,
    /// Full-tuple draws taken, including the accepted one.
    pub attempts: u32,
}

/// Usable as a ground-truth transform: every corner in front of the
/// projection (w > 0) and a strictly convex, non-degenerate quad.
pub fn is_acceptable(m: &Homography) -> bool {
    m.corner_weights().iter().all(|&w| w > W_EPS)
        && m.to_quad().map(|q| q.is_valid()).unwrap_or(false)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma)
        .expect("sigma validated finite and positive")
        .sample(rng)
}

pub fn sample_transform<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Result<SampledTransform> {
    let t = &cfg.transform;
    let cap = cfg.max_resample_attempts;
    for attempt in 1..=cap {
        let mut pair = None;
        for _ in 0..cap {
            let cx = uniform(rng, t.scale);
            let cy = uniform(rng, t.scale);
            if (cx - cy).abs() <= t.max_scale_gap {
                pair = Some((cx, cy));
                break;
            }
        }
        let Some((cx, cy)) = pair else {
            return Err(Error::SamplingFailed { attempts: cap });
        };
        let params = TransformParams {
            cx,
            cy,
            sx: uniform(rng, t.shear),
            sy: uniform(rng, t.shear),
            alpha: uniform(rng, t.rotation),
            px: normal(rng, t.perspective_sigma),
            py: normal(rng, t.perspective_sigma),
            tx: normal(rng, t.translation_sigma),
            ty: normal(rng, t.translation_sigma),
        };
        let Ok(homography) = params.homography() else {
            continue;
        };
        if is_acceptable(&homography) {
            return Ok(SampledTransform {
                params,
                homography,
                attempts: attempt,
            });
        }
    }
    Err(Error::SamplingFailed { attempts: cap })
}

/// Padding fractions of a synthetic monitor border, plus its color.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenParams {
    pub top: f64,
    pub bottom: f64,
    pub left: f64,
    pub right: f64,
    pub color: [u8; 3],
}

impl ScreenParams {
    /// Shrinks and shifts the frame so the paddings open up around it.
    pub fn matrix(&self) -> Homography {
        let (t, b, l, r) = (self.top, self.bottom, self.left, self.right);
        Homography::from_theta([
            1.0 - (l + r) / 2.0,
            0.0,
            (l - r) / 2.0,
            0.0,
            1.0 - (t + b) / 2.0,
            (t - b) / 2.0,
            0.0,
            0.0,
        ])
        .expect("finite padding")
    }
}

pub fn sample_screen<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Option<ScreenParams> {
    let s = &cfg.screen;
    if !rng.random_bool(s.probability) {
        return None;
    }
    let top = uniform(rng, s.padding);
    let bottom = uniform(rng, s.padding);
    let left = uniform(rng, s.padding);
    let right = uniform(rng, s.padding);
    let color = [(); 3].map(|_| rng.random_range(0..=s.color_max));
    Some(ScreenParams {
        top,
        bottom,
        left,
        right,
        color,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neutral() -> GenConfig {
        GenConfig {
            transform: TransformRanges {
                scale: [1.0, 1.0],
                max_scale_gap: 0.0,
                shear: [0.0, 0.0],
                rotation: [0.0, 0.0],
                perspective_sigma: 0.0,
                translation_sigma: 0.0,
            },
            ..GenConfig::default()
        }
    }

    #[test]
    fn collapsed_config_gives_identity() {
        let mut rng = stream_rng(3, 0);
        let s = sample_transform(&mut rng, &neutral()).unwrap();
        assert_eq!(s.homography, Homography::IDENTITY);
        assert_eq!(s.attempts, 1);
    }

    #[test]
    fn pathological_config_fails() {
        let mut cfg = neutral();
        // everything collapses to a zero-area quad
        cfg.transform.scale = [1e-4, 1e-4];
        cfg.max_resample_attempts = 5;
        let err = sample_transform(&mut stream_rng(0, 0), &cfg).unwrap_err();
        assert!(matches!(err, Error::SamplingFailed { attempts: 5 }));
    }

    #[test]
    fn screen_probability_extremes() {
        let mut cfg = GenConfig::default();
        cfg.screen.probability = 0.0;
        let mut rng = stream_rng(1, 0);
        assert!((0..1000).all(|_| sample_screen(&mut rng, &cfg).is_none()));
        cfg.screen.probability = 1.0;
        for _ in 0..1000 {
            let p = sample_screen(&mut rng, &cfg).unwrap();
            for v in [p.top, p.bottom, p.left, p.right] {
                assert!((0.0..=0.6).contains(&v));
            }
            assert!(p.color.iter().all(|&c| c <= 19));
        }
    }

    #[test]
    fn screen_matrix_examples() {
        let zero = ScreenParams {
            top: 0.0,
            bottom: 0.0,
            left: 0.0,
            right: 0.0,
            color: [0; 3],
        };
        assert_eq!(zero.matrix(), Homography::IDENTITY);
        let left = ScreenParams { left: 0.6, ..zero };
        assert_eq!(left.matrix().theta(), [0.7, 0.0, 0.3, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn screen_quad_inside_frame() {
        let mut cfg = GenConfig::default();
        cfg.screen.probability = 1.0;
        let mut rng = stream_rng(9, 0);
        for _ in 0..2000 {
            let q = sample_screen(&mut rng, &cfg).unwrap().matrix().to_quad().unwrap();
            for v in q.vertices {
                assert!(v.x.abs() <= 1.0 && v.y.abs() <= 1.0, "{v:?}");
            }
        }
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let cfg = GenConfig::default();
        let draw = |seed, stream| {
            let mut rng = stream_rng(seed, stream);
            (0..20)
                .map(|_| sample_transform(&mut rng, &cfg).unwrap().homography.theta())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5, 2), draw(5, 2));
        assert_ne!(draw(5, 2), draw(5, 3));
        assert_ne!(draw(5, 2), draw(6, 2));
    }

    #[test]
    fn config_toml_overrides_and_defaults() {
        let cfg = GenConfig::from_toml_str("seed = 7\n[screen]\nprobability = 0.5\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.screen.probability, 0.5);
        assert_eq!(cfg.screen.color_max, 19);
        assert_eq!(cfg.transform, TransformRanges::default());
        assert!(GenConfig::from_toml_str("bogus = 1").is_err());
        assert!(GenConfig::from_toml_str("[screen]\nprobability = 1.5").is_err());
        assert!(GenConfig::from_toml_str("max_resample_attempts = 0").is_err());
        let cfg = GenConfig::from_toml_str("[perturb.add_value]\nprobability = 0.25\n").unwrap();
        assert_eq!(cfg.perturb.add_value.probability, 0.25);
        assert_eq!(cfg.perturb.add_value.range, [-30.0, 30.0]);
        assert!(GenConfig::from_toml_str("[perturb.add_value]\nrnage = [0, 1]\n").is_err());
    }
}
