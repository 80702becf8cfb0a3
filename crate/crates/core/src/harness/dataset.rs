//! Self-describing binary container for recorded samples.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes  "TRAVDATA"
//! version   u32
//! horizon   u32
//! width     u32
//! height    u32
//! config    32 bytes  sha256 of the observation-shaping config
//! count     u64
//! count x { length u64, record }
//!
//! record:
//!   episode u32, world_seed u64, difficulty u8, step u32
//!   camera     width*height*3 bytes
//!   trajectory width*height bytes
//!   points u32, rings u16, points x { x f64, y f64, z f64, ring u16 }
//!   velocity   horizon x { v f64, omega f64 }
//!   labels     horizon bytes, 0 or 1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::simworld::Difficulty;
use crate::types::{
    ImageRaster, Observation, PointCloud, SuccessVector, VelocityCommand, VelocityHistory,
};

pub const MAGIC: &[u8; 8] = b"TRAVDATA";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub episode: u32,
    pub world_seed: u64,
    pub difficulty: Difficulty,
    pub step: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub observation: Observation,
    pub label: SuccessVector,
    pub meta: SampleMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub horizon: usize,
    pub width: usize,
    pub height: usize,
    pub config_hash: [u8; 32],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub samples: usize,
    pub positive: usize,
    pub negative: usize,
    /// Fraction of individual horizon steps labelled 0.
    pub step_negative_fraction: f64,
}

impl ClassBalance {
    pub fn negative_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.negative as f64 / self.samples as f64
        }
    }
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| format_err(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

impl DatasetHeader {
    fn check(&self, s: &Sample) -> Result<()> {
        let obs = &s.observation;
        if (obs.image.width(), obs.image.height()) != (self.width, self.height) {
            return Err(format_err(format!(
                "sample image {}x{} does not match header {}x{}",
                obs.image.width(),
                obs.image.height(),
                self.width,
                self.height
            )));
        }
        if obs.vel_history.len() != self.horizon || s.label.len() != self.horizon {
            return Err(format_err("sample horizon does not match header"));
        }
        if s.label.probs().iter().any(|&p| p != 0.0 && p != 1.0) {
            return Err(format_err("labels must be binary"));
        }
        Ok(())
    }
}

fn encode_sample(s: &Sample, out: &mut Vec<u8>) {
    let m = &s.meta;
    out.extend_from_slice(&m.episode.to_le_bytes());
    out.extend_from_slice(&m.world_seed.to_le_bytes());
    out.push(m.difficulty.code());
    out.extend_from_slice(&m.step.to_le_bytes());
    let obs = &s.observation;
    out.extend_from_slice(obs.image.data());
    out.extend_from_slice(obs.traj_image.data());
    out.extend_from_slice(&(obs.cloud.len() as u32).to_le_bytes());
    out.extend_from_slice(&obs.cloud.num_rings().to_le_bytes());
    for (p, ring) in obs.cloud.points().iter().zip(obs.cloud.rings()) {
        for c in p {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&ring.to_le_bytes());
    }
    for c in obs.vel_history.commands() {
        out.extend_from_slice(&c.v.to_le_bytes());
        out.extend_from_slice(&c.omega.to_le_bytes());
    }
    out.extend(s.label.probs().iter().map(|&p| p as u8));
}

fn decode_sample(r: &mut Reader, h: &DatasetHeader) -> Result<Sample> {
    let episode = r.u32()?;
    let world_seed = r.u64()?;
    let code = r.u8()?;
    let difficulty =
        Difficulty::from_code(code).ok_or_else(|| format_err(format!("difficulty code {code}")))?;
    let step = r.u32()?;
    let (w, hh) = (h.width, h.height);
    let image = ImageRaster::new(w, hh, 3, r.take(w * hh * 3)?.to_vec())?;
    let traj_image = ImageRaster::new(w, hh, 1, r.take(w * hh)?.to_vec())?;
    let n = r.u32()? as usize;
    let num_rings = r.u16()?;
    let mut points = Vec::with_capacity(n);
    let mut rings = Vec::with_capacity(n);
    for _ in 0..n {
        points.push([r.f64()?, r.f64()?, r.f64()?]);
        rings.push(r.u16()?);
    }
    let cloud = PointCloud::new(points, rings, num_rings)?;
    let mut commands = Vec::with_capacity(h.horizon);
    for _ in 0..h.horizon {
        commands.push(VelocityCommand::new(r.f64()?, r.f64()?));
    }
    let vel_history = VelocityHistory::new(commands, h.horizon)?;
    let labels = r.take(h.horizon)?;
    if labels.iter().any(|&b| b > 1) {
        return Err(format_err("labels must be binary"));
    }
    Ok(Sample {
        observation: Observation::new(image, cloud, vel_history, traj_image)?,
        label: SuccessVector::new(labels.iter().map(|&b| b as f64).collect())?,
        meta: SampleMeta {
            episode,
            world_seed,
            difficulty,
            step,
        },
    })
}

impl Dataset {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let h = &self.header;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [h.horizon, h.width, h.height] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&h.config_hash);
        out.extend_from_slice(&(self.samples.len() as u64).to_le_bytes());
        let mut record = Vec::new();
        for s in &self.samples {
            h.check(s)?;
            record.clear();
            encode_sample(s, &mut record);
            out.extend_from_slice(&(record.len() as u64).to_le_bytes());
            out.extend_from_slice(&record);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(format_err("not a dataset file"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(format_err(format!("unsupported dataset version {version}")));
        }
        let header = DatasetHeader {
            horizon: r.u32()? as usize,
            width: r.u32()? as usize,
            height: r.u32()? as usize,
            config_hash: r.array()?,
        };
        if header.horizon == 0 || header.width == 0 || header.height == 0 {
            return Err(format_err("header dimensions must be positive"));
        }
        let count = r.u64()?;
        let mut samples = Vec::new();
        for i in 0..count {
            let len = r.u64()? as usize;
            let mut rec = Reader {
                buf: r.take(len)?,
                pos: 0,
            };
            let s = decode_sample(&mut rec, &header)?;
            if !rec.done() {
                return Err(format_err(format!("record {i} has trailing bytes")));
            }
            samples.push(s);
        }
        if !r.done() {
            return Err(format_err("trailing bytes after the last record"));
        }
        Ok(Self { header, samples })
    }

    pub fn save(&self, path: &Path) -> Result<[u8; 32]> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, &bytes)?;
        Ok(Sha256::digest(&bytes).into())
    }

    /// Reads a dataset and returns it with the sha256 of the file.
    pub fn load(path: &Path) -> Result<(Self, [u8; 32])> {
        let bytes = std::fs::read(path)?;
        Ok((Self::from_bytes(&bytes)?, Sha256::digest(&bytes).into()))
    }

    pub fn balance(&self) -> ClassBalance {
        let negative = self.samples.iter().filter(|s| s.label.has_failure()).count();
        let steps = self.samples.len() * self.header.horizon;
        let zeros: usize = self
            .samples
            .iter()
            .map(|s| s.label.probs().iter().filter(|&&p| p < 0.5).count())
            .sum();
        ClassBalance {
            samples: self.samples.len(),
            positive: self.samples.len() - negative,
            negative,
            step_negative_fraction: if steps == 0 { 0.0 } else { zeros as f64 / steps as f64 },
        }
    }
}
