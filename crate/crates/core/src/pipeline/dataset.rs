use std::collections::VecDeque;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use rayon::ThreadPool;

use super::manifest::{ManifestWriter, SampleRecord, MANIFEST_NAME};
use super::sources::{ImagePool, SourceSet};
use super::{GeneratedSample, Generator, StepTimings};
use crate::compositor::{encode_jpeg, ImageBuffer};
use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::sampling::{stream_rng, GenConfig};

/// Quality of the on-disk JPEG. A JPEG perturbation is an in-memory round
/// trip, so its photo is encoded again at this quality.
pub const PHOTO_QUALITY: u8 = 95;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetOptions {
    pub workers: usize,
    /// Keep decoded sources in memory after first use.
    pub cache_sources: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cache_sources: true,
        }
    }
}

#[derive(Debug)]
pub struct StreamedSample {
    pub index: u64,
    pub photo: ImageBuffer,
    pub homography: Homography,
    pub screen_used: bool,
    pub source_path: PathBuf,
    pub background_path: PathBuf,
    pub timings: StepTimings,
}

impl StreamedSample {
    /// Bytes written to disk for this sample.
    pub fn file_bytes(&self) -> Result<Vec<u8>> {
        encode_jpeg(&self.photo, PHOTO_QUALITY)
    }
}

/// Per-index sample production shared by the on-disk and streaming paths.
///
/// Sample `i` draws everything from stream `i` of the configured seed, so the
/// result does not depend on which thread computes it or when.
pub struct DatasetRunner {
    generator: Generator,
    foregrounds: ImagePool,
    backgrounds: ImagePool,
}

impl DatasetRunner {
    pub fn new(sources: &SourceSet, cfg: GenConfig, cache_sources: bool) -> Result<Self> {
        if sources.foregrounds.is_empty() || sources.backgrounds.is_empty() {
            return Err(Error::Config("source set needs at least one foreground and one background".into()));
        }
        let (w, h) = (cfg.canvas_width, cfg.canvas_height);
        Ok(DatasetRunner {
            foregrounds: ImagePool::new(&sources.foregrounds, w, h, cache_sources),
            backgrounds: ImagePool::new(&sources.backgrounds, w, h, cache_sources),
            generator: Generator::new(cfg)?,
        })
    }

    pub fn config(&self) -> &GenConfig {
        self.generator.config()
    }

    /// `Ok(None)` when a picked source image is unreadable.
    pub fn sample(&self, index: u64) -> Result<Option<StreamedSample>> {
        let mut rng = stream_rng(self.config().seed, index);
        let fi = rng.random_range(0..self.foregrounds.len());
        let bi = rng.random_range(0..self.backgrounds.len());
        let (Some(fg), Some(bg)) = (self.foregrounds.get(fi), self.backgrounds.get(bi)) else {
            return Ok(None);
        };
        let GeneratedSample {
            photo,
            homography,
            screen,
            timings,
            ..
        } = self.generator.generate(&fg, &bg, &mut rng)?;
        Ok(Some(StreamedSample {
            index,
            photo,
            homography,
            screen_used: screen.is_some(),
            source_path: self.foregrounds.path(fi).to_path_buf(),
            background_path: self.backgrounds.path(bi).to_path_buf(),
            timings,
        }))
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub written: usize,
    pub skipped: usize,
    pub elapsed: Duration,
    pub manifest: PathBuf,
    /// Summed over all samples and workers.
    pub timings: StepTimings,
}

impl DatasetSummary {
    pub fn samples_per_second(&self) -> f64 {
        self.written as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

fn build_pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

pub fn photo_path(index: u64) -> String {
    format!("photos/{index:08}.jpg")
}

fn write_sample(out_dir: &Path, s: &StreamedSample) -> Result<SampleRecord> {
    let rel = photo_path(s.index);
    let path = out_dir.join(&rel);
    std::fs::write(&path, s.file_bytes()?).map_err(|e| Error::io(&path, e))?;
    Ok(SampleRecord {
        seed_index: s.index,
        photo_path: rel,
        theta: s.homography,
        source_path: s.source_path.to_string_lossy().into_owned(),
        background_path: s.background_path.to_string_lossy().into_owned(),
        screen_used: s.screen_used,
        quad: s.homography.to_quad().ok().map(|q| q.coords()),
    })
}

/// Writes `n` photos under `out_dir/photos` plus `out_dir/manifest`.
///
/// Samples whose picked source cannot be decoded are skipped and counted;
/// any other failure aborts the run.
pub fn generate_dataset(sources: &SourceSet, n: u64, out_dir: &Path, cfg: &GenConfig, opts: &DatasetOptions) -> Result<DatasetSummary> {
    if n == 0 {
        return Err(Error::Config("sample count must be >= 1".into()));
    }
    let start = Instant::now();
    let runner = DatasetRunner::new(sources, cfg.clone(), opts.cache_sources)?;
    let photos = out_dir.join("photos");
    std::fs::create_dir_all(&photos).map_err(|e| Error::io(&photos, e))?;
    let manifest_path = out_dir.join(MANIFEST_NAME);
    let file = File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut writer = ManifestWriter::new(BufWriter::new(file));

    let pool = build_pool(opts.workers)?;
    let chunk = (opts.workers.max(1) as u64 * 32).max(64);
    let mut written = 0;
    let mut skipped = 0;
    let mut timings = StepTimings::default();
    let mut lo = 0;
    while lo < n {
        let hi = (lo + chunk).min(n);
        let results: Vec<Result<Option<(SampleRecord, StepTimings)>>> = pool.install(|| {
            (lo..hi)
                .into_par_iter()
                .map(|i| match runner.sample(i)? {
                    Some(s) => Ok(Some((write_sample(out_dir, &s)?, s.timings))),
                    None => Ok(None),
                })
                .collect()
        });
        for r in results {
            match r? {
                Some((rec, t)) => {
                    writer.write(&rec).map_err(|e| Error::io(&manifest_path, e))?;
                    timings += t;
                    written += 1;
                }
                None => skipped += 1,
            }
        }
        lo = hi;
    }
    writer.finish().map_err(|e| Error::io(&manifest_path, e))?;
    if skipped > 0 {
        log::warn!("{skipped} of {n} samples skipped (unreadable sources)");
    }
    Ok(DatasetSummary {
        written,
        skipped,
        elapsed: start.elapsed(),
        manifest: manifest_path,
        timings,
    })
}

/// Endless pull-based sequence of samples 0, 1, 2, … with no disk writes.
///
/// Samples are computed `batch` at a time on up to `workers` threads; the
/// sequence is the same for any worker count.
pub struct SampleStream {
    runner: Arc<DatasetRunner>,
    pool: Option<ThreadPool>,
    batch: u64,
    next: u64,
    ready: VecDeque<Result<StreamedSample>>,
}

impl SampleStream {
    pub fn new(runner: Arc<DatasetRunner>, workers: usize) -> Result<Self> {
        let pool = if workers > 1 { Some(build_pool(workers)?) } else { None };
        Ok(SampleStream {
            runner,
            pool,
            batch: workers.max(1) as u64 * 4,
            next: 0,
            ready: VecDeque::new(),
        })
    }

    fn refill(&mut self) {
        let (lo, hi) = (self.next, self.next + self.batch);
        self.next = hi;
        let runner = &self.runner;
        let produced: Vec<Result<Option<StreamedSample>>> = match &self.pool {
            Some(pool) => pool.install(|| (lo..hi).into_par_iter().map(|i| runner.sample(i)).collect()),
            None => (lo..hi).map(|i| runner.sample(i)).collect(),
        };
        self.ready.extend(produced.into_iter().filter_map(Result::transpose));
    }
}

impl Iterator for SampleStream {
    type Item = Result<StreamedSample>;

    fn next(&mut self) -> Option<Self::Item> {
        // a source set where every pick fails would loop forever
        for _ in 0..1024 {
            if let Some(s) = self.ready.pop_front() {
                return Some(s);
            }
            self.refill();
        }
        Some(Err(Error::NoSamples))
    }
}

pub fn stream_samples(sources: &SourceSet, cfg: &GenConfig, opts: &DatasetOptions) -> Result<SampleStream> {
    let runner = DatasetRunner::new(sources, cfg.clone(), opts.cache_sources)?;
    SampleStream::new(Arc::new(runner), opts.workers)
}
