use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use image::imageops::FilterType;

use crate::compositor::{decode_image, ImageBuffer};
use crate::error::{Error, Result};

const EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Foreground and background image files, each list in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSet {
    pub foregrounds: Vec<PathBuf>,
    pub backgrounds: Vec<PathBuf>,
}

impl SourceSet {
    pub fn from_dirs(foreground_dir: &Path, background_dir: &Path) -> Result<Self> {
        let set = SourceSet {
            foregrounds: list_images(foreground_dir)?,
            backgrounds: list_images(background_dir)?,
        };
        if set.foregrounds.is_empty() {
            return Err(Error::Config(format!("no PNG/JPEG images in {}", foreground_dir.display())));
        }
        if set.backgrounds.is_empty() {
            return Err(Error::Config(format!("no PNG/JPEG images in {}", background_dir.display())));
        }
        Ok(set)
    }
}

/// PNG/JPEG files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ok = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if ok && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Decodes `path` and fits it to `width × height`.
fn load_fitted(path: &Path, width: u32, height: u32) -> Result<ImageBuffer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = decode_image(&bytes)?;
    if img.dimensions() == (width, height) {
        return Ok(img);
    }
    let rgb: image::RgbImage = img.into();
    Ok(image::imageops::resize(&rgb, width, height, FilterType::Triangle).into())
}

struct Entry {
    path: PathBuf,
    cell: OnceLock<Option<Arc<ImageBuffer>>>,
}

/// Lazily decoded images, each fitted to the canvas size.
///
/// With caching on, every file is decoded at most once and a failed decode
/// is remembered (and logged once).
pub struct ImagePool {
    entries: Vec<Entry>,
    width: u32,
    height: u32,
    cache: bool,
}

impl ImagePool {
    pub fn new(paths: &[PathBuf], width: u32, height: u32, cache: bool) -> Self {
        ImagePool {
            entries: paths
                .iter()
                .map(|p| Entry {
                    path: p.clone(),
                    cell: OnceLock::new(),
                })
                .collect(),
            width,
            height,
            cache,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path(&self, i: usize) -> &Path {
        &self.entries[i].path
    }

    /// `None` when the file cannot be read or decoded.
    pub fn get(&self, i: usize) -> Option<Arc<ImageBuffer>> {
        let e = &self.entries[i];
        let load = || match load_fitted(&e.path, self.width, self.height) {
            Ok(img) => Some(Arc::new(img)),
            Err(err) => {
                log::warn!("skipping unreadable source {}: {err}", e.path.display());
                None
            }
        };
        if self.cache {
            e.cell.get_or_init(load).clone()
        } else {
            load()
        }
    }
}
