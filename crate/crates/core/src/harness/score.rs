//! Reliability scores for a single image or point-cloud file.

use std::path::Path;

use serde::Serialize;

use super::config::Config;
use crate::error::{Error, Result};
use crate::reliability::{cloud_reliability, image_reliability, CloudReliability, ImageReliability};
use crate::types::{ImageRaster, PointCloud};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreRecord {
    Image {
        file: String,
        width: usize,
        height: usize,
        #[serde(flatten)]
        scores: ImageReliability,
    },
    Cloud {
        file: String,
        points: usize,
        #[serde(flatten)]
        scores: CloudReliability,
    },
}

/// Decodes a PPM/PGM/PNG image into an RGB raster.
pub fn read_image(bytes: &[u8]) -> Result<ImageRaster> {
    let img = image::load_from_memory(bytes)
        .map_err(|e| Error::Format(format!("image: {e}")))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    ImageRaster::new(w as usize, h as usize, 3, img.into_raw())
}

/// Parses a text cloud: one `x y z ring` point per line, `#` comments.
pub fn read_cloud(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut rings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Format(format!("cloud line {}: expected 'x y z ring'", i + 1));
        if fields.len() != 4 {
            return Err(bad());
        }
        let mut p = [0.0; 3];
        for (c, f) in p.iter_mut().zip(&fields) {
            *c = f.parse().map_err(|_| bad())?;
        }
        points.push(p);
        rings.push(fields[3].parse::<u16>().map_err(|_| bad())?);
    }
    let num_rings = rings.iter().max().map_or(1, |&r| r + 1);
    PointCloud::new(points, rings, num_rings)
}

fn looks_like_image(bytes: &[u8]) -> bool {
    bytes.starts_with(b"P3")
        || bytes.starts_with(b"P6")
        || bytes.starts_with(b"P2")
        || bytes.starts_with(b"P5")
        || bytes.starts_with(b"\x89PNG")
}

/// Scores the file at `path`, choosing image or cloud by its content.
pub fn score_file(path: &Path, cfg: &Config) -> Result<ScoreRecord> {
    let bytes = std::fs::read(path)?;
    let file = path.display().to_string();
    if looks_like_image(&bytes) {
        let img = read_image(&bytes)?;
        Ok(ScoreRecord::Image {
            file,
            width: img.width(),
            height: img.height(),
            scores: image_reliability(&img, &cfg.reliability.image)?,
        })
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::Format("cloud file must be UTF-8 text".into()))?;
        let cloud = read_cloud(text)?;
        Ok(ScoreRecord::Cloud {
            file,
            points: cloud.len(),
            scores: cloud_reliability(&cloud, &cfg.reliability.cloud)?,
        })
    }
}

pub fn score_line(record: &ScoreRecord) -> Result<String> {
    Ok(serde_json::to_string(record)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ppm() {
        let mut bytes = b"P6\n# c\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
        let img = read_image(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.data(), &[255, 0, 0, 0, 0, 255]);
        let ascii = read_image(b"P3 1 1 255 10 20 30").unwrap();
        assert_eq!(ascii.data(), &[10, 20, 30]);
    }

    #[test]
    fn parses_cloud_text() {
        let c = read_cloud("# wall\n1 0 0 0\n2 0.5 0 1\n\n3 1 0 1 # tail\n").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.num_rings(), 2);
        assert_eq!(c.points()[1], [2.0, 0.5, 0.0]);
        assert!(read_cloud("1 2 3").is_err());
        assert!(read_cloud("1 2 x 0").is_err());
        assert!(read_cloud("").unwrap().is_empty());
    }

    #[test]
    fn record_is_one_json_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        std::fs::write(&p, "1 0 0 0\n2 0 0 0\n3 0 0 0\n").unwrap();
        let rec = score_file(&p, &Config::default()).unwrap();
        let line = score_line(&rec).unwrap();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["kind"], "cloud");
        assert_eq!(v["points"], 3);
        assert!(v["r_point"].is_number());
    }
}
