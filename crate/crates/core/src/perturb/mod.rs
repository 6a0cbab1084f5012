//! Photometric perturbations applied to a finished composite.
//!
//! Every perturbation implements [`Perturbation`] and is registered by name
//! in a [`Registry`]. A [`PerturbChain`] is built from a [`PerturbConfig`] by
//! walking the registry in its order, so the builtin chain always runs
//! illumination changes first, then blur, noise and finally JPEG compression.

pub mod ops;

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::compositor::ImageBuffer;
use crate::error::{Error, Result};
use crate::sampling::StreamRng;

pub const ADD_VALUE: &str = "add_value";
pub const MULTIPLY_VALUE: &str = "multiply_value";
pub const HSV_SHIFT: &str = "hsv_shift";
pub const COLOR_ENHANCE: &str = "color_enhance";
pub const BRIGHTNESS_ENHANCE: &str = "brightness_enhance";
pub const SHARPNESS_ENHANCE: &str = "sharpness_enhance";
pub const AVERAGE_BLUR: &str = "average_blur";
pub const GAUSSIAN_NOISE: &str = "gaussian_noise";
pub const JPEG_QUALITY: &str = "jpeg_quality";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueStep {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "half")]
    pub probability: f64,
    pub range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HsvStep {
    pub enabled: bool,
    pub probability: f64,
    /// Hue rotation range in degrees.
    pub hue: [f64; 2],
    /// Additive saturation range, in 0..=255 units.
    pub saturation: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlurStep {
    pub enabled: bool,
    pub probability: f64,
    /// Candidate kernel sizes, chosen uniformly.
    pub kernels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JpegStep {
    pub enabled: bool,
    pub probability: f64,
    pub quality: [u8; 2],
}

fn yes() -> bool {
    true
}

fn half() -> f64 {
    0.5
}

impl ValueStep {
    fn new(range: [f64; 2]) -> Self {
        ValueStep {
            enabled: true,
            probability: 0.5,
            range,
        }
    }
}

impl Default for HsvStep {
    fn default() -> Self {
        HsvStep {
            enabled: true,
            probability: 0.5,
            hue: [-10.0, 10.0],
            saturation: [-20.0, 20.0],
        }
    }
}

impl Default for BlurStep {
    fn default() -> Self {
        BlurStep {
            enabled: true,
            probability: 0.5,
            kernels: vec![1, 3, 5],
        }
    }
}

impl Default for JpegStep {
    fn default() -> Self {
        JpegStep {
            enabled: true,
            probability: 0.5,
            quality: [40, 95],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    /// Master switch; when false no perturbation runs.
    pub enabled: bool,
    pub add_value: ValueStep,
    pub multiply_value: ValueStep,
    pub hsv_shift: HsvStep,
    pub color_enhance: ValueStep,
    pub brightness_enhance: ValueStep,
    pub sharpness_enhance: ValueStep,
    pub average_blur: BlurStep,
    pub gaussian_noise: ValueStep,
    pub jpeg_quality: JpegStep,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            enabled: true,
            add_value: ValueStep::new([-30.0, 30.0]),
            multiply_value: ValueStep::new([0.7, 1.3]),
            hsv_shift: HsvStep::default(),
            color_enhance: ValueStep::new([0.6, 1.4]),
            brightness_enhance: ValueStep::new([0.6, 1.4]),
            sharpness_enhance: ValueStep::new([0.6, 1.4]),
            average_blur: BlurStep::default(),
            gaussian_noise: ValueStep::new([0.0, 15.0]),
            jpeg_quality: JpegStep::default(),
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("perturb.{name}.probability must lie in [0, 1]")));
    }
    Ok(())
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Error::Config(format!("perturb.{name}: bad range {r:?}")));
    }
    Ok(())
}

impl PerturbConfig {
    /// Everything off; [`PerturbChain::apply`] is then the identity.
    pub fn disabled() -> Self {
        PerturbConfig {
            enabled: false,
            ..PerturbConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, step) in [
            (ADD_VALUE, &self.add_value),
            (MULTIPLY_VALUE, &self.multiply_value),
            (COLOR_ENHANCE, &self.color_enhance),
            (BRIGHTNESS_ENHANCE, &self.brightness_enhance),
            (SHARPNESS_ENHANCE, &self.sharpness_enhance),
            (GAUSSIAN_NOISE, &self.gaussian_noise),
        ] {
            check_probability(name, step.probability)?;
            check_range(name, step.range)?;
        }
        for (name, r) in [
            (MULTIPLY_VALUE, self.multiply_value.range),
            (COLOR_ENHANCE, self.color_enhance.range),
            (BRIGHTNESS_ENHANCE, self.brightness_enhance.range),
            (SHARPNESS_ENHANCE, self.sharpness_enhance.range),
            (GAUSSIAN_NOISE, self.gaussian_noise.range),
        ] {
            if r[0] < 0.0 {
                return Err(Error::Config(format!("perturb.{name}: range must be non-negative")));
            }
        }
        check_probability(HSV_SHIFT, self.hsv_shift.probability)?;
        check_range(HSV_SHIFT, self.hsv_shift.hue)?;
        check_range(HSV_SHIFT, self.hsv_shift.saturation)?;
        check_probability(AVERAGE_BLUR, self.average_blur.probability)?;
        if self.average_blur.kernels.is_empty() || self.average_blur.kernels.iter().any(|k| k % 2 == 0) {
            return Err(Error::Config("perturb.average_blur.kernels must be odd and non-empty".into()));
        }
        check_probability(JPEG_QUALITY, self.jpeg_quality.probability)?;
        let [lo, hi] = self.jpeg_quality.quality;
        if !(1 <= lo && lo <= hi && hi <= 100) {
            return Err(Error::Config("perturb.jpeg_quality.quality must lie in [1, 100]".into()));
        }
        Ok(())
    }

    fn enabled_flag(&mut self, name: &str) -> Result<&mut bool> {
        Ok(match name {
            ADD_VALUE => &mut self.add_value.enabled,
            MULTIPLY_VALUE => &mut self.multiply_value.enabled,
            HSV_SHIFT => &mut self.hsv_shift.enabled,
            COLOR_ENHANCE => &mut self.color_enhance.enabled,
            BRIGHTNESS_ENHANCE => &mut self.brightness_enhance.enabled,
            SHARPNESS_ENHANCE => &mut self.sharpness_enhance.enabled,
            AVERAGE_BLUR => &mut self.average_blur.enabled,
            GAUSSIAN_NOISE => &mut self.gaussian_noise.enabled,
            JPEG_QUALITY => &mut self.jpeg_quality.enabled,
            other => return Err(Error::UnknownPerturbation(other.to_string())),
        })
    }

    pub fn set_enabled(&mut self, name: &str, on: bool) -> Result<()> {
        *self.enabled_flag(name)? = on;
        Ok(())
    }

    /// Keeps only the named perturbations switched on.
    pub fn restrict_to<S: AsRef<str>>(&mut self, names: &[S]) -> Result<()> {
        for n in names {
            self.enabled_flag(n.as_ref())?;
        }
        for n in Registry::builtin().names() {
            let keep = names.iter().any(|s| s.as_ref() == n);
            self.set_enabled(n, keep)?;
        }
        Ok(())
    }
}

/// One photometric operation with its own firing probability.
pub trait Perturbation: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn probability(&self) -> f64;

    /// Draws parameters from `rng` and modifies `img` in place. Returns the
    /// encoded bytes when the result was produced by decoding a file format.
    fn apply(&self, img: &mut ImageBuffer, rng: &mut dyn RngCore) -> Result<Option<Vec<u8>>>;
}

fn uniform(rng: &mut dyn RngCore, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

#[derive(Debug)]
struct AddValue(ValueStep);

impl Perturbation for AddValue {
    fn name(&self) -> &'static str {
        ADD_VALUE
    }
    fn probability(&self) -> f64 {
        self.0.probability
    }
    fn apply(&self, img: &mut ImageBuffer, rng: &mut dyn RngCore) -> Result<Option<Vec<u8>>> {
        ops::add_value(img, uniform(rng, self.0.range).round() as i32);
        Ok(None)
    }
}

/// Shared shape of the factor-driven operations.
struct Factor {
    name: &'static str,
    step: ValueStep,
    op: fn(&mut ImageBuffer, f32),
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Factor").field("name", &self.name).field("step", &self.step).finish()
    }
}

impl Perturbation for Factor {
    fn name(&self) -> &'static str {
        self.name
    }
    fn probability(&self) -> f64 {
        self.step.probability
    }
    fn apply(&self, img: &mut ImageBuffer, rng: &mut dyn RngCore) -> Result<Option<Vec<u8>>> {
        (self.op)(img, uniform(rng, self.step.range) as f32);
        Ok(None)
    }
}

#[derive(Debug)]
struct HsvShift(HsvStep);

impl Perturbation for HsvShift {
    fn name(&self) -> &'static str {
        HSV_SHIFT
    }
    fn probability(&self) -> f64 {
        self.0.probability
    }
    fn apply(&self, img: &mut ImageBuffer, rng: &mut dyn RngCore) -> Result<Option<Vec<u8>>> {
        let hue = uniform(rng, self.0.hue) as f32;
        let sat = uniform(rng, self.0.saturation) as f32;
        ops::shift_hue_saturation(img, hue, sat);
        Ok(None)
    }
}

#[derive(Debug)]
struct AverageBlur(BlurStep);

impl Perturbation for AverageBlur {
    fn name(&self) -> &'static str {
        AVERAGE_BLUR
    }
    fn probability(&self) -> f64 {
        self.0.probability
    }
    fn apply(&self, img: &mut ImageBuffer, rng: &mut dyn RngCore) -> Result<Option<Vec<u8>>> {
        let k = self.0.kernels[rng.random_range(0..self.0.kernels.len())];
        ops::average_blur(img, k);
        Ok(None)
    }
}

#[derive(Debug)]
struct GaussianNoise(ValueStep);

impl Perturbation for GaussianNoise {
    fn name(&self) -> &'static str {
        GAUSSIAN_NOISE
    }
    fn probability(&self) -> f64 {
        self.0.probability
    }
    fn apply(&self, img: &mut ImageBuffer, rng: &mut dyn RngCore) -> Result<Option<Vec<u8>>> {
        let sigma = uniform(rng, self.0.range) as f32;
        // per-sample draws go through a concrete generator, not the trait object
        let mut local = StreamRng::seed_from_u64(rng.next_u64());
        ops::gaussian_noise(img, sigma, &mut local);
        Ok(None)
    }
}

#[derive(Debug)]
struct JpegCompression(JpegStep);

impl Perturbation for JpegCompression {
    fn name(&self) -> &'static str {
        JPEG_QUALITY
    }
    fn probability(&self) -> f64 {
        self.0.probability
    }
    fn apply(&self, img: &mut ImageBuffer, rng: &mut dyn RngCore) -> Result<Option<Vec<u8>>> {
        let [lo, hi] = self.0.quality;
        let q = rng.random_range(lo..=hi);
        ops::jpeg_round_trip(img, q).map(Some)
    }
}

/// Builds a perturbation from config, or `None` when it is switched off.
pub type Factory = fn(&PerturbConfig) -> Option<Box<dyn Perturbation>>;

fn factor(name: &'static str, step: &ValueStep, op: fn(&mut ImageBuffer, f32)) -> Option<Box<dyn Perturbation>> {
    step.enabled.then(|| {
        Box::new(Factor {
            name,
            step: step.clone(),
            op,
        }) as Box<dyn Perturbation>
    })
}

fn add_value_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    c.add_value.enabled.then(|| Box::new(AddValue(c.add_value.clone())) as _)
}

fn multiply_value_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    factor(MULTIPLY_VALUE, &c.multiply_value, ops::multiply_value)
}

fn hsv_shift_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    c.hsv_shift.enabled.then(|| Box::new(HsvShift(c.hsv_shift.clone())) as _)
}

fn color_enhance_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    factor(COLOR_ENHANCE, &c.color_enhance, ops::enhance_color)
}

fn brightness_enhance_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    factor(BRIGHTNESS_ENHANCE, &c.brightness_enhance, ops::enhance_brightness)
}

fn sharpness_enhance_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    factor(SHARPNESS_ENHANCE, &c.sharpness_enhance, ops::enhance_sharpness)
}

fn average_blur_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    c.average_blur.enabled.then(|| Box::new(AverageBlur(c.average_blur.clone())) as _)
}

fn gaussian_noise_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    c.gaussian_noise.enabled.then(|| Box::new(GaussianNoise(c.gaussian_noise.clone())) as _)
}

fn jpeg_factory(c: &PerturbConfig) -> Option<Box<dyn Perturbation>> {
    c.jpeg_quality.enabled.then(|| Box::new(JpegCompression(c.jpeg_quality.clone())) as _)
}

/// Named perturbation factories, kept in application order.
#[derive(Clone)]
pub struct Registry {
    entries: Vec<(&'static str, Factory)>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register(ADD_VALUE, add_value_factory);
        r.register(MULTIPLY_VALUE, multiply_value_factory);
        r.register(HSV_SHIFT, hsv_shift_factory);
        r.register(COLOR_ENHANCE, color_enhance_factory);
        r.register(BRIGHTNESS_ENHANCE, brightness_enhance_factory);
        r.register(SHARPNESS_ENHANCE, sharpness_enhance_factory);
        r.register(AVERAGE_BLUR, average_blur_factory);
        r.register(GAUSSIAN_NOISE, gaussian_noise_factory);
        r.register(JPEG_QUALITY, jpeg_factory);
        r
    }

    /// Appends `factory`, or replaces an existing entry of the same name in place.
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = factory,
            None => self.entries.push((name, factory)),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }

    pub fn build(&self, name: &str, cfg: &PerturbConfig) -> Result<Option<Box<dyn Perturbation>>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f(cfg))
            .ok_or_else(|| Error::UnknownPerturbation(name.to_string()))
    }

    pub fn chain(&self, cfg: &PerturbConfig) -> PerturbChain {
        let steps = if cfg.enabled {
            self.entries.iter().filter_map(|(_, f)| f(cfg)).collect()
        } else {
            Vec::new()
        };
        PerturbChain { steps }
    }
}

#[derive(Debug)]
pub struct Perturbed {
    pub image: ImageBuffer,
    /// Encoded bytes of `image`, set when the last step to fire was a codec round trip.
    pub encoded: Option<Vec<u8>>,
    /// Names of the steps that fired, in order.
    pub fired: Vec<&'static str>,
}

#[derive(Debug, Default)]
pub struct PerturbChain {
    steps: Vec<Box<dyn Perturbation>>,
}

impl PerturbChain {
    pub fn from_config(cfg: &PerturbConfig) -> Self {
        Registry::builtin().chain(cfg)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.steps.iter().map(|s| s.name()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn apply(&self, mut image: ImageBuffer, rng: &mut dyn RngCore) -> Result<Perturbed> {
        let mut encoded = None;
        let mut fired = Vec::new();
        for step in &self.steps {
            if rng.random_bool(step.probability()) {
                encoded = step.apply(&mut image, rng)?;
                fired.push(step.name());
            }
        }
        Ok(Perturbed { image, encoded, fired })
    }
}

pub fn apply_perturbations(img: ImageBuffer, rng: &mut dyn RngCore, cfg: &PerturbConfig) -> Result<Perturbed> {
    PerturbChain::from_config(cfg).apply(img, rng)
}
