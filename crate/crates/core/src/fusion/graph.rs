//! Reliability-aware feature graph over the concatenated feature vector.

use serde::{Deserialize, Serialize};

use crate::encoders::{FeatureLayout, Modality};
use crate::error::{invalid, Error, Result};
use crate::math::Matrix;

/// How reliability enters the edge weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeGating {
    /// `W_ij = exp(-lambda |f_i - f_j| r_ij)`: an unreliable pair is fully
    /// connected regardless of its feature difference.
    #[default]
    AsWritten,
    /// `W_ij = r_ij exp(-lambda |f_i - f_j|)`: an unreliable pair is cut.
    Inverted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGraph {
    pub signal: Vec<f64>,
    pub weights: Matrix,
    pub layout: FeatureLayout,
}

impl FeatureGraph {
    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    /// Symmetrically normalized adjacency with self loops,
    /// `D^-1/2 (W + I) D^-1/2`.
    pub fn normalized_adjacency(&self) -> Matrix {
        normalized_adjacency(&self.weights)
    }
}

pub fn normalized_adjacency(weights: &Matrix) -> Matrix {
    let n = weights.rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / (1.0 + weights.row(i).iter().sum::<f64>()).sqrt())
        .collect();
    Matrix::from_fn(n, n, |i, j| {
        let w = if i == j { 1.0 + weights[(i, j)] } else { weights[(i, j)] };
        inv_sqrt[i] * w * inv_sqrt[j]
    })
}

/// Reliability attached to the edge between nodes `i` and `j`.
///
/// A pair with exactly one image node and no point node gets `r_img`, one
/// point node and no image node gets `r_point`, one of each gets their mean,
/// and every other pair (including same-modality pairs) gets 1.
pub fn reliability_factor(
    i: usize,
    j: usize,
    layout: &FeatureLayout,
    r_img: f64,
    r_point: f64,
) -> Result<f64> {
    if i == j {
        return Err(invalid(format!("reliability factor of node {i} with itself")));
    }
    let modality = |n: usize| {
        layout
            .modality_of(n)
            .ok_or_else(|| invalid(format!("node {n} outside the {}-node layout", layout.len())))
    };
    let (mi, mj) = (modality(i)?, modality(j)?);
    let count = |m: Modality| (mi == m) as u8 + (mj == m) as u8;
    Ok(match (count(Modality::Image), count(Modality::Point)) {
        (1, 0) => r_img,
        (0, 1) => r_point,
        (1, 1) => 0.5 * (r_img + r_point),
        _ => 1.0,
    })
}

pub fn build_graph(
    signal: &[f64],
    layout: &FeatureLayout,
    r_img: f64,
    r_point: f64,
    lambda: f64,
    gating: EdgeGating,
) -> Result<FeatureGraph> {
    if signal.len() != layout.len() {
        return Err(Error::Shape(format!(
            "signal has {} entries, layout expects {}",
            signal.len(),
            layout.len()
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    for (name, r) in [("r_img", r_img), ("r_point", r_point)] {
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid(format!("{name} must lie in [0, 1], got {r}")));
        }
    }
    if let Some(v) = signal.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(invalid(format!("graph signal entry {v} outside [0, 1]")));
    }
    let n = signal.len();
    let mut weights = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let r = reliability_factor(i, j, layout, r_img, r_point)?;
            let diff = (signal[i] - signal[j]).abs();
            let w = match gating {
                EdgeGating::AsWritten => (-lambda * diff * r).exp(),
                EdgeGating::Inverted => r * (-lambda * diff).exp(),
            };
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
    }
    Ok(FeatureGraph {
        signal: signal.to_vec(),
        weights,
        layout: layout.clone(),
    })
}
