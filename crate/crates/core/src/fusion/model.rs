//! End-to-end success predictor: encoders, reliability-aware graph, two
//! graph convolutions, one attention layer and a sigmoid readout.

use serde::{Deserialize, Serialize};

use super::graph::{build_graph, normalized_adjacency, EdgeGating};
use super::layers::{GraphAttention, GraphAttentionCache, GraphConv, GraphConvCache};
use crate::encoders::{prepare_input, EncoderCache, EncoderConfig, EncoderInput, EncoderParams};
use crate::error::{invalid, Error, Result};
use crate::math::{sigmoid, Matrix};
use crate::nn::{Dense, Parameters};
use crate::reliability::Reliability;
use crate::rng::SimRng;
use crate::types::{Observation, SuccessVector};

pub const BCE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnnConfig {
    pub hidden: usize,
    pub attention: usize,
    /// Scale of feature differences in the edge weights.
    pub lambda: f64,
    /// Edges lighter than this are left out of attention neighbourhoods.
    pub w_min: f64,
    pub gating: EdgeGating,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            attention: 32,
            lambda: 2.0,
            w_min: 1e-3,
            gating: EdgeGating::AsWritten,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.attention == 0 {
            return Err(invalid("graph layer widths must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.w_min >= 0.0 && self.w_min <= 1.0) {
            return Err(invalid(format!("w_min must lie in [0, 1], got {}", self.w_min)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub encoders: EncoderConfig,
    pub gnn: GnnConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnParams {
    pub conv1: GraphConv,
    pub conv2: GraphConv,
    pub attention: GraphAttention,
    pub readout: Dense,
}

impl Parameters for GnnParams {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.conv1.visit(f);
        self.conv2.visit(f);
        self.attention.visit(f);
        self.readout.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.conv1.visit_mut(f);
        self.conv2.visit_mut(f);
        self.attention.visit_mut(f);
        self.readout.visit_mut(f);
    }
}

/// Everything the network consumes for one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleInput {
    pub encoder: EncoderInput,
    pub r_img: f64,
    pub r_point: f64,
}

pub struct ForwardCache {
    encoder: EncoderCache,
    adjacency: Matrix,
    conv1: GraphConvCache,
    conv2: GraphConvCache,
    attention: GraphAttentionCache,
    readout_in: Vec<f64>,
    probs: Vec<f64>,
}

impl ForwardCache {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionModel {
    pub gnn_config: GnnConfig,
    pub encoders: EncoderParams,
    pub gnn: GnnParams,
}

impl Parameters for FusionModel {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.encoders.visit(f);
        self.gnn.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.encoders.visit_mut(f);
        self.gnn.visit_mut(f);
    }
}

impl FusionModel {
    pub fn init(config: &FusionConfig, seed: u64) -> Result<Self> {
        config.gnn.validate()?;
        let mut rng = SimRng::derive(seed, 0xf0_5e);
        let encoders = EncoderParams::init(config.encoders.clone(), &mut rng)?;
        let n = encoders.layout().len();
        let g = &config.gnn;
        let horizon = config.encoders.horizon;
        let gnn = GnnParams {
            conv1: GraphConv::init(n, g.hidden, &mut rng),
            conv2: GraphConv::init(g.hidden, g.hidden, &mut rng),
            attention: GraphAttention::init(g.hidden, g.attention, &mut rng),
            readout: Dense::glorot(n * g.attention + g.attention, horizon, &mut rng),
        };
        Ok(Self {
            gnn_config: config.gnn.clone(),
            encoders,
            gnn,
        })
    }

    pub fn config(&self) -> FusionConfig {
        FusionConfig {
            encoders: self.encoders.config.clone(),
            gnn: self.gnn_config.clone(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.encoders.config.horizon
    }

    pub fn nodes(&self) -> usize {
        self.encoders.layout().len()
    }

    /// Shape and finiteness check, used after loading a checkpoint.
    pub fn validate(&self) -> Result<()> {
        self.gnn_config.validate()?;
        self.encoders.validate()?;
        let (n, g) = (self.nodes(), &self.gnn_config);
        let shape = |m: &Matrix, r: usize, c: usize, name: &str| -> Result<()> {
            if m.shape() != (r, c) || !m.is_finite() {
                return Err(Error::Shape(format!(
                    "{name}: expected finite {r}x{c}, found {:?}",
                    m.shape()
                )));
            }
            Ok(())
        };
        shape(&self.gnn.conv1.theta, n, g.hidden, "conv1")?;
        shape(&self.gnn.conv2.theta, g.hidden, g.hidden, "conv2")?;
        shape(&self.gnn.attention.theta, g.hidden, g.attention, "attention")?;
        let vecs = [
            (self.gnn.conv1.bias.len(), g.hidden),
            (self.gnn.conv2.bias.len(), g.hidden),
            (self.gnn.attention.a_src.len(), g.attention),
            (self.gnn.attention.a_dst.len(), g.attention),
        ];
        if vecs.iter().any(|(a, b)| a != b) || !self.all_finite() {
            return Err(Error::Shape("graph layer vectors malformed".into()));
        }
        self.gnn
            .readout
            .check_shape(n * g.attention + g.attention, self.horizon(), "readout")
    }

    pub fn prepare(&self, obs: &Observation, reliability: &Reliability) -> Result<SampleInput> {
        Ok(SampleInput {
            encoder: prepare_input(obs, &self.encoders.config)?,
            r_img: reliability.r_img(),
            r_point: reliability.r_point(),
        })
    }

    /// Edge weights of the reliability-aware graph for `input` under the
    /// current encoder parameters.
    pub fn graph_weights(&self, input: &SampleInput) -> Result<Matrix> {
        let (signal, _) = self.encoders.forward(&input.encoder)?;
        self.weights_for(&signal, input)
    }

    fn weights_for(&self, signal: &[f64], input: &SampleInput) -> Result<Matrix> {
        let g = &self.gnn_config;
        Ok(build_graph(
            signal,
            &self.encoders.layout(),
            input.r_img.clamp(0.0, 1.0),
            input.r_point.clamp(0.0, 1.0),
            g.lambda,
            g.gating,
        )?
        .weights)
    }

    pub fn forward(&self, input: &SampleInput) -> Result<ForwardCache> {
        self.forward_with(input, None)
    }

    /// Forward pass with the edge weights held at `weights` instead of being
    /// rebuilt from the current features. The analytic gradient treats the
    /// graph as constant, so this is the function it differentiates.
    pub fn forward_frozen(&self, input: &SampleInput, weights: &Matrix) -> Result<ForwardCache> {
        self.forward_with(input, Some(weights))
    }

    fn forward_with(&self, input: &SampleInput, frozen: Option<&Matrix>) -> Result<ForwardCache> {
        let (signal, encoder) = self.encoders.forward(&input.encoder)?;
        let g = &self.gnn_config;
        let weights = match frozen {
            Some(w) => {
                if w.shape() != (signal.len(), signal.len()) {
                    return Err(Error::Shape(format!("frozen graph {:?}", w.shape())));
                }
                w.clone()
            }
            None => self.weights_for(&signal, input)?,
        };
        let adjacency = normalized_adjacency(&weights);
        let n = signal.len();
        let h0 = Matrix::from_fn(n, n, |i, j| if i == j { signal[i] } else { 0.0 });
        let conv1 = self.gnn.conv1.forward(&adjacency, &h0)?;
        let conv2 = self.gnn.conv2.forward(&adjacency, conv1.output())?;
        let attention = self.gnn.attention.forward(&weights, g.w_min, conv2.output())?;
        let h3 = attention.output();
        let d = h3.cols();
        let mut readout_in = Vec::with_capacity(n * d + d);
        readout_in.extend_from_slice(h3.as_slice());
        for c in 0..d {
            readout_in.push((0..n).map(|i| h3[(i, c)]).sum::<f64>() / n as f64);
        }
        let probs = self
            .gnn
            .readout
            .forward(&readout_in)?
            .into_iter()
            .map(sigmoid)
            .collect();
        Ok(ForwardCache {
            encoder,
            adjacency,
            conv1,
            conv2,
            attention,
            readout_in,
            probs,
        })
    }

    /// Accumulates `dL/dparams` into `grad` given `dL/dprobs`.
    pub fn backward(
        &self,
        input: &SampleInput,
        cache: &ForwardCache,
        d_probs: &[f64],
        grad: &mut FusionModel,
    ) -> Result<()> {
        let dz: Vec<f64> = d_probs
            .iter()
            .zip(&cache.probs)
            .map(|(d, p)| d * p * (1.0 - p))
            .collect();
        let dx = self
            .gnn
            .readout
            .backward(&cache.readout_in, &dz, &mut grad.gnn.readout)?;
        let h3 = cache.attention.output();
        let (n, d) = h3.shape();
        let mut d_h3 = Matrix::from_vec(n, d, dx[..n * d].to_vec())?;
        for i in 0..n {
            for (v, m) in d_h3.row_mut(i).iter_mut().zip(&dx[n * d..]) {
                *v += m / n as f64;
            }
        }
        let d_h2 = self.gnn.attention.backward(
            cache.conv2.output(),
            &cache.attention,
            &d_h3,
            &mut grad.gnn.attention,
        )?;
        let d_h1 = self
            .gnn
            .conv2
            .backward(&cache.adjacency, &cache.conv2, &d_h2, &mut grad.gnn.conv2)?;
        let d_h0 = self
            .gnn
            .conv1
            .backward(&cache.adjacency, &cache.conv1, &d_h1, &mut grad.gnn.conv1)?;
        let d_signal: Vec<f64> = (0..d_h0.rows()).map(|j| d_h0[(j, j)]).collect();
        self.encoders
            .backward(&input.encoder, &cache.encoder, &d_signal, &mut grad.encoders)
    }

    pub fn predict_input(&self, input: &SampleInput) -> Result<SuccessVector> {
        SuccessVector::new(self.forward(input)?.probs)
    }

    pub fn predict(&self, obs: &Observation, reliability: &Reliability) -> Result<SuccessVector> {
        self.predict_input(&self.prepare(obs, reliability)?)
    }

    pub fn zeros_like(&self) -> Self {
        let mut g = self.clone();
        g.zero();
        g
    }
}

/// Mean binary cross-entropy over the horizon.
pub fn loss(predicted: &SuccessVector, truth: &SuccessVector) -> Result<f64> {
    bce(predicted.probs(), truth.probs())
}

pub fn bce(probs: &[f64], labels: &[f64]) -> Result<f64> {
    if probs.len() != labels.len() || probs.is_empty() {
        return Err(Error::Shape(format!(
            "prediction length {} vs label length {}",
            probs.len(),
            labels.len()
        )));
    }
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| y * (p + BCE_EPS).ln() + (1.0 - y) * (1.0 - p + BCE_EPS).ln())
        .sum();
    Ok(-sum / probs.len() as f64)
}

/// Derivative of [`bce`] with respect to each probability.
pub fn bce_grad(probs: &[f64], labels: &[f64]) -> Vec<f64> {
    let t = probs.len() as f64;
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| -(y / (p + BCE_EPS) - (1.0 - y) / (1.0 - p + BCE_EPS)) / t)
        .collect()
}
