//! End-to-end sample synthesis.
//!
//! One sample runs four steps: an optional monitor border around the
//! foreground, a random projective warp, compositing over a background, and
//! photometric perturbations. The returned transform always describes where
//! the original foreground frame lands in the photo, with or without border.

pub mod bench;
mod dataset;
pub mod manifest;
pub mod sources;
pub mod synthetic;

use std::borrow::Cow;
use std::iter::Sum;
use std::ops::AddAssign;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};

pub use dataset::{
    generate_dataset, photo_path, stream_samples, DatasetOptions, DatasetRunner, DatasetSummary, SampleStream,
    StreamedSample, PHOTO_QUALITY,
};
pub use manifest::{read_manifest, SampleRecord, MANIFEST_NAME};
pub use sources::SourceSet;

use crate::compositor::{self, ImageBuffer};
use crate::error::Result;
use crate::geometry::Homography;
use crate::perturb::PerturbChain;
use crate::sampling::{sample_screen, sample_transform, GenConfig, ScreenParams, StreamRng, TransformParams};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepTimings {
    pub screen: Duration,
    pub transform: Duration,
    pub background: Duration,
    pub perturb: Duration,
}

impl StepTimings {
    pub fn total(&self) -> Duration {
        self.screen + self.transform + self.background + self.perturb
    }
}

impl AddAssign for StepTimings {
    fn add_assign(&mut self, o: Self) {
        self.screen += o.screen;
        self.transform += o.transform;
        self.background += o.background;
        self.perturb += o.perturb;
    }
}

impl Sum for StepTimings {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(StepTimings::default(), |mut a, b| {
            a += b;
            a
        })
    }
}

#[derive(Debug)]
pub struct GeneratedSample {
    pub photo: ImageBuffer,
    /// JPEG bytes of `photo` when the last perturbation was a codec round trip.
    pub encoded: Option<Vec<u8>>,
    /// Ground truth: maps the source frame onto the foreground region of `photo`.
    pub homography: Homography,
    pub params: TransformParams,
    pub screen: Option<ScreenParams>,
    /// Full-tuple transform draws, including the accepted one.
    pub attempts: u32,
    pub perturbations: Vec<&'static str>,
    pub timings: StepTimings,
}

/// A validated config with its perturbation chain built once.
#[derive(Debug)]
pub struct Generator {
    cfg: GenConfig,
    chain: PerturbChain,
}

impl Generator {
    pub fn new(cfg: GenConfig) -> Result<Self> {
        cfg.validate()?;
        let chain = PerturbChain::from_config(&cfg.perturb);
        Ok(Generator { cfg, chain })
    }

    pub fn config(&self) -> &GenConfig {
        &self.cfg
    }

    /// Synthesizes one photo of `fg` over `bg`.
    ///
    /// Three sub-streams are split off `rng` up front (screen, transform,
    /// perturbation) so whether a step fires never shifts another step's draws.
    pub fn generate(&self, fg: &ImageBuffer, bg: &ImageBuffer, rng: &mut dyn RngCore) -> Result<GeneratedSample> {
        let mut screen_rng = StreamRng::seed_from_u64(rng.next_u64());
        let mut transform_rng = StreamRng::seed_from_u64(rng.next_u64());
        let mut perturb_rng = StreamRng::seed_from_u64(rng.next_u64());
        let (w, h) = (self.cfg.canvas_width, self.cfg.canvas_height);
        let mut timings = StepTimings::default();

        let t0 = Instant::now();
        let screen = sample_screen(&mut screen_rng, &self.cfg);
        let framed: Cow<'_, ImageBuffer> = match &screen {
            Some(p) => Cow::Owned(compositor::synthesize_screen(fg, p)),
            None => Cow::Borrowed(fg),
        };
        timings.screen = t0.elapsed();

        let t1 = Instant::now();
        let sampled = sample_transform(&mut transform_rng, &self.cfg)?;
        let m = sampled.homography;
        // The framed image is warped by M · M_SC⁻¹, whose inverse is M_SC · M⁻¹.
        let m_inv = m.invert()?;
        let warp_inv = match &screen {
            Some(p) => p.matrix().compose(&m_inv)?,
            None => m_inv,
        };
        let (warped, mask) = compositor::warp_with_inverse(&framed, &warp_inv, w, h);
        timings.transform = t1.elapsed();

        let t2 = Instant::now();
        let composed = compositor::composite(&warped, &mask, bg)?;
        timings.background = t2.elapsed();

        let t3 = Instant::now();
        let perturbed = self.chain.apply(composed, &mut perturb_rng)?;
        timings.perturb = t3.elapsed();

        Ok(GeneratedSample {
            photo: perturbed.image,
            encoded: perturbed.encoded,
            homography: m,
            params: sampled.params,
            screen,
            attempts: sampled.attempts,
            perturbations: perturbed.fired,
            timings,
        })
    }
}

/// One-off form of [`Generator::generate`].
pub fn generate_sample(fg: &ImageBuffer, bg: &ImageBuffer, rng: &mut dyn RngCore, cfg: &GenConfig) -> Result<GeneratedSample> {
    Generator::new(cfg.clone())?.generate(fg, bg, rng)
}
