use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which binary image the border follower runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContourSource {
    /// Canny edge map of the thresholded image.
    Edges,
    /// The thresholded image itself.
    Threshold,
}

impl FromStr for ContourSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" => Ok(Self::Edges),
            "threshold" => Ok(Self::Threshold),
            other => Err(Error::InvalidConfig(format!("contour_source '{other}'"))),
        }
    }
}

impl fmt::Display for ContourSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Edges => "edges",
            Self::Threshold => "threshold",
        })
    }
}

/// Hand-tuned knobs of the classical detector.
///
/// Serialized as `key = value` lines; `#` starts a comment; every key is
/// optional and unknown keys are rejected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub threshold: u8,
    pub canny_low: f64,
    pub canny_high: f64,
    /// Simplification tolerance as a fraction of each contour's perimeter.
    pub dp_epsilon_frac: f64,
    pub min_area_frac: f64,
    pub max_area_frac: f64,
    /// Defaults to the thresholded image: on a binary step, Canny's
    /// non-maximum suppression breaks ties on alternating sides near
    /// corners, which displaces the simplified vertices by several pixels.
    pub contour_source: ContourSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold: 100,
            canny_low: 50.0,
            canny_high: 150.0,
            dp_epsilon_frac: 0.02,
            min_area_frac: 0.005,
            max_area_frac: 0.5,
            contour_source: ContourSource::Threshold,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.canny_low > 0.0 && self.canny_low < self.canny_high) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < canny_low < canny_high, got {} / {}",
                self.canny_low, self.canny_high
            )));
        }
        if !(self.dp_epsilon_frac > 0.0 && self.dp_epsilon_frac < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "dp_epsilon_frac {} outside (0, 1)",
                self.dp_epsilon_frac
            )));
        }
        if !(self.min_area_frac > 0.0
            && self.min_area_frac < self.max_area_frac
            && self.max_area_frac <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "need 0 < min_area_frac < max_area_frac <= 1, got {} / {}",
                self.min_area_frac, self.max_area_frac
            )));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |_| Error::Parse(format!("line {}: bad value for {key}: '{value}'", lineno + 1));
            match key {
                "threshold" => cfg.threshold = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "canny_low" => cfg.canny_low = parse_f64(value).map_err(bad)?,
                "canny_high" => cfg.canny_high = parse_f64(value).map_err(bad)?,
                "dp_epsilon_frac" => cfg.dp_epsilon_frac = parse_f64(value).map_err(bad)?,
                "min_area_frac" => cfg.min_area_frac = parse_f64(value).map_err(bad)?,
                "max_area_frac" => cfg.max_area_frac = parse_f64(value).map_err(bad)?,
                "contour_source" => cfg.contour_source = value.parse()?,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown key '{other}'")));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err("non-finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold = {}", self.threshold)?;
        writeln!(f, "canny_low = {}", self.canny_low)?;
        writeln!(f, "canny_high = {}", self.canny_high)?;
        writeln!(f, "dp_epsilon_frac = {}", self.dp_epsilon_frac)?;
        writeln!(f, "min_area_frac = {}", self.min_area_frac)?;
        writeln!(f, "max_area_frac = {}", self.max_area_frac)?;
        writeln!(f, "contour_source = {}", self.contour_source)
    }
}
