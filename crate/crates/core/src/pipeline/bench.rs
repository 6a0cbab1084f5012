//! In-memory throughput measurement over procedural sources.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use super::dataset::PHOTO_QUALITY;
use super::{synthetic, Generator, StepTimings};
use crate::compositor::encode_jpeg;
use crate::error::{Error, Result};
use crate::sampling::{stream_rng, GenConfig};

/// Distinct procedural foregrounds and backgrounds cycled through.
const SOURCE_COUNT: u64 = 8;

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub samples: u64,
    pub workers: usize,
    pub elapsed: Duration,
    /// Summed over samples; wall time is `elapsed`.
    pub timings: StepTimings,
    pub encode: Duration,
}

impl BenchReport {
    pub fn samples_per_second(&self) -> f64 {
        self.samples as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }

    /// Mean per-sample milliseconds for each step, final JPEG encode last.
    pub fn per_step_ms(&self) -> [(&'static str, f64); 5] {
        let per = |d: Duration| d.as_secs_f64() * 1e3 / self.samples.max(1) as f64;
        [
            ("screen", per(self.timings.screen)),
            ("transform", per(self.timings.transform)),
            ("background", per(self.timings.background)),
            ("perturb", per(self.timings.perturb)),
            ("encode", per(self.encode)),
        ]
    }
}

/// Generates and JPEG-encodes `n` samples in memory on `workers` threads.
pub fn run(cfg: &GenConfig, n: u64, workers: usize) -> Result<BenchReport> {
    let generator = Generator::new(cfg.clone())?;
    let (w, h) = (cfg.canvas_width, cfg.canvas_height);
    let fgs: Vec<_> = (0..SOURCE_COUNT).map(|i| synthetic::foreground(w, h, i)).collect();
    let bgs: Vec<_> = (0..SOURCE_COUNT).map(|i| synthetic::background(w, h, i)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let per_sample: Vec<Result<(StepTimings, Duration)>> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(cfg.seed, i);
                let fg = &fgs[rng.random_range(0..fgs.len())];
                let bg = &bgs[rng.random_range(0..bgs.len())];
                let s = generator.generate(fg, bg, &mut rng)?;
                let t = Instant::now();
                encode_jpeg(&s.photo, PHOTO_QUALITY)?;
                Ok((s.timings, t.elapsed()))
            })
            .collect()
    });
    let elapsed = start.elapsed();
    let mut timings = StepTimings::default();
    let mut encode = Duration::ZERO;
    for r in per_sample {
        let (t, e) = r?;
        timings += t;
        encode += e;
    }
    Ok(BenchReport {
        samples: n,
        workers: workers.max(1),
        elapsed,
        timings,
        encode,
    })
}
