use std::collections::HashSet;
use std::fmt;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{load_image, RgbImage};

pub const MANIFEST_HEADER: &str = "path,angle_deg,blur,batch,source";

/// Where a label came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelSource {
    Synthetic,
    AutoLabel,
    Manual,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Synthetic => "synthetic",
            LabelSource::AutoLabel => "auto_label",
            LabelSource::Manual => "manual",
        })
    }
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(LabelSource::Synthetic),
            "auto_label" => Ok(LabelSource::AutoLabel),
            "manual" => Ok(LabelSource::Manual),
            other => Err(Error::Parse(format!("unknown source '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    /// Relative to the manifest root, `/`-separated.
    pub path: String,
    pub angle_deg: f64,
    pub blur: bool,
    pub batch: u32,
    pub source: LabelSource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Self {
        Self {
            root: root.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn load_entry(&self, entry: &ManifestEntry) -> Result<RgbImage> {
        load_image(self.resolve(entry))
    }

    /// Distinct batch ids in ascending order.
    pub fn batches(&self) -> Vec<u32> {
        let mut b: Vec<u32> = self.entries.iter().map(|e| e.batch).collect();
        b.sort_unstable();
        b.dedup();
        b
    }

    /// Re-expresses every entry path relative to `new_root`.
    pub fn rebased(&self, new_root: &Path) -> Result<DatasetManifest> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let abs = absolute(&self.root.join(&e.path))?;
                let rel = relative_path(&abs, &absolute(new_root)?);
                Ok(ManifestEntry {
                    path: rel,
                    ..e.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DatasetManifest::new(new_root, entries))
    }

    /// Concatenates entries of another manifest, rebased onto this root.
    pub fn merged(&self, other: &DatasetManifest) -> Result<DatasetManifest> {
        let mut out = self.clone();
        out.entries.extend(other.rebased(&self.root)?.entries);
        Ok(out)
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    let joined = if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir()?.join(p)
    };
    // Lexical normalization; files may not exist yet.
    let mut out = PathBuf::new();
    for c in joined.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other.as_os_str()),
        }
    }
    Ok(out)
}

fn relative_path(target: &Path, base: &Path) -> String {
    let t: Vec<_> = target.components().collect();
    let b: Vec<_> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut parts: Vec<String> = std::iter::repeat_n("..".to_string(), b.len() - common).collect();
    parts.extend(
        t[common..]
            .iter()
            .map(|c| c.as_os_str().to_string_lossy().into_owned()),
    );
    parts.join("/")
}

/// Writes the manifest CSV; entry paths are rewritten relative to the file's
/// directory.
pub fn save_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let m = if absolute(dir)? == absolute(&m.root)? {
        m.clone()
    } else {
        m.rebased(dir)?
    };
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    for e in &m.entries {
        w.write_record([
            e.path.as_str(),
            &format!("{:.6}", e.angle_deg),
            if e.blur { "1" } else { "0" },
            &e.batch.to_string(),
            &e.source.to_string(),
        ])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    out.push_str(&String::from_utf8(body).expect("utf-8 fields"));
    std::fs::write(path, out)?;
    Ok(())
}

/// Parses a manifest CSV and checks that every referenced file exists.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let root = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let m = parse_manifest(&text, root)?;
    for e in &m.entries {
        let p = m.resolve(e);
        if !p.is_file() {
            return Err(Error::FileNotFound(p));
        }
    }
    Ok(m)
}

pub(crate) fn parse_manifest(text: &str, root: PathBuf) -> Result<DatasetManifest> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != MANIFEST_HEADER {
        return Err(Error::Parse(format!("bad header '{header}'")));
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        if rec.len() != 5 {
            return Err(Error::Parse(format!("line {line}: expected 5 fields")));
        }
        let angle: f64 = rec[1]
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: angle '{}'", &rec[1])))?;
        if !(-90.0..=90.0).contains(&angle) {
            return Err(Error::Parse(format!("line {line}: angle {angle} out of range")));
        }
        let blur = match &rec[2] {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse(format!("line {line}: blur '{other}'"))),
        };
        let batch = rec[3]
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: batch '{}'", &rec[3])))?;
        let source = rec[4].parse()?;
        let path = rec[0].to_string();
        if !seen.insert(path.clone()) {
            return Err(Error::Parse(format!("line {line}: duplicate path '{path}'")));
        }
        entries.push(ManifestEntry {
            path,
            angle_deg: angle,
            blur,
            batch,
            source,
        });
    }
    Ok(DatasetManifest::new(root, entries))
}

/// Splits off one batch (sharp and blurred alike) as the evaluation set.
pub fn split_holdout(m: &DatasetManifest, holdout_batch: u32) -> Result<(DatasetManifest, DatasetManifest)> {
    if !m.entries.iter().any(|e| e.batch == holdout_batch) {
        return Err(Error::UnknownBatch(holdout_batch));
    }
    let (eval, train): (Vec<_>, Vec<_>) = m
        .entries
        .iter()
        .cloned()
        .partition(|e| e.batch == holdout_batch);
    Ok((
        DatasetManifest::new(&m.root, train),
        DatasetManifest::new(&m.root, eval),
    ))
}
