//! LiDAR reliability from the balance of edge-like and planar points.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math::dot;
use crate::types::PointCloud;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudReliabilityParams {
    /// Same-ring neighbours taken on each side of a point.
    pub neighborhood: usize,
    /// Points closer than this to the sensor get no feature value.
    pub origin_eps: f64,
    /// Curvature at or above which a point counts as an edge.
    pub c_max: f64,
    /// Curvature at or below which a point counts as planar.
    pub c_min: f64,
    pub beta_e: f64,
    pub beta_p: f64,
}

impl Default for CloudReliabilityParams {
    fn default() -> Self {
        Self {
            neighborhood: 5,
            origin_eps: 1e-6,
            c_max: 0.5,
            c_min: 0.05,
            beta_e: 0.1,
            beta_p: 1.0,
        }
    }
}

impl CloudReliabilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.neighborhood == 0 {
            return Err(invalid("neighborhood must be at least 1"));
        }
        if !(self.c_min >= 0.0 && self.c_min <= self.c_max) {
            return Err(invalid(format!(
                "need 0 <= c_min <= c_max, got ({}, {})",
                self.c_min, self.c_max
            )));
        }
        if !(self.beta_e >= 0.0 && self.beta_p >= 0.0) {
            return Err(invalid(format!(
                "beta weights must be non-negative, got ({}, {})",
                self.beta_e, self.beta_p
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudReliability {
    pub r_edge: f64,
    pub r_planar: f64,
    pub r_point: f64,
    pub edge_count: usize,
    pub planar_count: usize,
}

/// Curvature of `point` against its neighbourhood:
/// `|sum_k (X - X_k)| / (|X| * |M|)` where `M` counts `point` itself.
/// `None` when `point` is at the sensor origin or has no neighbours.
pub fn point_feature_factor(
    point: [f64; 3],
    neighbours: &[[f64; 3]],
    origin_eps: f64,
) -> Option<f64> {
    let norm = dot(&point, &point).sqrt();
    if norm < origin_eps || neighbours.is_empty() {
        return None;
    }
    let mut sum = [0.0; 3];
    for q in neighbours {
        for d in 0..3 {
            sum[d] += point[d] - q[d];
        }
    }
    let m = (neighbours.len() + 1) as f64;
    Some(dot(&sum, &sum).sqrt() / (norm * m))
}

/// Point indices grouped by ring, each group ordered by azimuth with ties
/// broken by index.
fn ring_order(cloud: &PointCloud) -> Vec<Vec<usize>> {
    let mut rings = vec![Vec::new(); cloud.num_rings() as usize];
    for (i, &r) in cloud.rings().iter().enumerate() {
        rings[r as usize].push(i);
    }
    let pts = cloud.points();
    for ring in &mut rings {
        ring.sort_by(|&a, &b| {
            let az = |i: usize| pts[i][1].atan2(pts[i][0]);
            az(a).total_cmp(&az(b)).then(a.cmp(&b))
        });
    }
    rings
}

/// Feature factor of every point, using up to `neighborhood` same-ring
/// neighbours on each side in azimuth order (clipped at the ring ends).
pub fn cloud_feature_factors(cloud: &PointCloud, params: &CloudReliabilityParams) -> Vec<Option<f64>> {
    let pts = cloud.points();
    let mut out = vec![None; pts.len()];
    let m = params.neighborhood;
    let mut buf = Vec::with_capacity(2 * m);
    for ring in ring_order(cloud) {
        for (pos, &i) in ring.iter().enumerate() {
            let lo = pos.saturating_sub(m);
            let hi = (pos + m).min(ring.len() - 1);
            buf.clear();
            buf.extend((lo..=hi).filter(|&k| k != pos).map(|k| pts[ring[k]]));
            out[i] = point_feature_factor(pts[i], &buf, params.origin_eps);
        }
    }
    out
}

pub fn cloud_reliability(
    cloud: &PointCloud,
    params: &CloudReliabilityParams,
) -> Result<CloudReliability> {
    params.validate()?;
    if cloud.is_empty() {
        return Ok(CloudReliability {
            r_edge: 0.0,
            r_planar: 0.0,
            r_point: 0.0,
            edge_count: 0,
            planar_count: 0,
        });
    }
    let factors = cloud_feature_factors(cloud, params);
    let edge_count = factors.iter().flatten().filter(|&&c| c >= params.c_max).count();
    let planar_count = factors.iter().flatten().filter(|&&c| c <= params.c_min).count();
    let n = cloud.len() as f64;
    let r_edge = edge_count as f64 / n;
    let r_planar = planar_count as f64 / n;
    let raw = params.beta_e * r_edge + params.beta_p * r_planar;
    Ok(CloudReliability {
        r_edge,
        r_planar,
        r_point: raw.clamp(0.0, 1.0),
        edge_count,
        planar_count,
    })
}
