use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Homography;

/// File name of the manifest inside a dataset directory.
pub const MANIFEST_NAME: &str = "manifest";

/// One generated photo and its ground-truth transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub seed_index: u64,
    /// Relative to the dataset directory.
    pub photo_path: String,
    /// θ1..θ8, row-major.
    pub theta: Homography,
    pub source_path: String,
    pub background_path: String,
    pub screen_used: bool,
    /// Image of the source frame corners, `x1 y1 .. x4 y4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<[f64; 8]>,
}

impl SampleRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

pub struct ManifestWriter<W: Write> {
    out: W,
}

impl<W: Write> ManifestWriter<W> {
    pub fn new(out: W) -> Self {
        ManifestWriter { out }
    }

    pub fn write(&mut self, rec: &SampleRecord) -> std::io::Result<()> {
        writeln!(self.out, "{}", rec.to_line())
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ManifestCheck {
    pub records: usize,
    pub missing_photos: Vec<PathBuf>,
    pub invalid_theta: Vec<u64>,
    pub out_of_order: bool,
}

impl ManifestCheck {
    pub fn is_ok(&self) -> bool {
        self.missing_photos.is_empty() && self.invalid_theta.is_empty() && !self.out_of_order
    }
}

/// Checks that photos exist, thetas describe usable transforms and indices ascend.
pub fn check_manifest(dataset_dir: &Path, records: &[SampleRecord]) -> ManifestCheck {
    let mut check = ManifestCheck {
        records: records.len(),
        ..Default::default()
    };
    for (i, r) in records.iter().enumerate() {
        let p = dataset_dir.join(&r.photo_path);
        if !p.is_file() {
            check.missing_photos.push(p);
        }
        if !crate::sampling::is_acceptable(&r.theta) {
            check.invalid_theta.push(r.seed_index);
        }
        if i > 0 && records[i - 1].seed_index >= r.seed_index {
            check.out_of_order = true;
        }
    }
    check
}
