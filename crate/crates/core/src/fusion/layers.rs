//! Graph convolution and single-head graph attention with analytic gradients.
//!
//! Node features are rows of an `N x d` matrix. The adjacency is treated as
//! a constant: gradients flow only through node features and parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{dot, elu, leaky_relu, Matrix, LEAKY_SLOPE};
use crate::nn::Parameters;
use crate::rng::SimRng;

fn glorot(rows: usize, cols: usize, rng: &mut SimRng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-limit, limit))
}

/// `H' = ReLU(A H Theta + b)` for a fixed normalized adjacency `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConv {
    pub theta: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GraphConvCache {
    propagated: Matrix,
    output: Matrix,
}

impl GraphConvCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

impl GraphConv {
    pub fn init(inputs: usize, outputs: usize, rng: &mut SimRng) -> Self {
        Self {
            theta: glorot(inputs, outputs, rng),
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, adjacency: &Matrix, h: &Matrix) -> Result<GraphConvCache> {
        let propagated = adjacency.matmul(h)?;
        let mut output = propagated.matmul(&self.theta)?;
        for r in 0..output.rows() {
            for (v, b) in output.row_mut(r).iter_mut().zip(&self.bias) {
                *v = (*v + b).max(0.0);
            }
        }
        Ok(GraphConvCache { propagated, output })
    }

    /// Accumulates into `grad` and returns `dL/dH`.
    pub fn backward(
        &self,
        adjacency: &Matrix,
        cache: &GraphConvCache,
        d_out: &Matrix,
        grad: &mut GraphConv,
    ) -> Result<Matrix> {
        let mut d_pre = d_out.clone();
        for (d, o) in d_pre.as_mut_slice().iter_mut().zip(cache.output.as_slice()) {
            if *o <= 0.0 {
                *d = 0.0;
            }
        }
        grad.theta.add_scaled(&cache.propagated.t_matmul(&d_pre)?, 1.0)?;
        for r in 0..d_pre.rows() {
            for (g, d) in grad.bias.iter_mut().zip(d_pre.row(r)) {
                *g += d;
            }
        }
        adjacency.t_matmul(&d_pre.matmul_t(&self.theta)?)
    }
}

impl Parameters for GraphConv {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(self.theta.as_slice());
        f(&self.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.theta.as_mut_slice());
        f(&mut self.bias);
    }
}

/// Single-head attention. For node `i` over neighbours `j` (itself plus
/// every `j` with `W_ij >= w_min`):
/// `e_ij = LeakyReLU(a_src . z_i + a_dst . z_j)` with `z = H Theta`,
/// `alpha_ij = w_ij exp(e_ij) / sum_k w_ik exp(e_ik)` (self weight 1), and
/// `H'_i = ELU(sum_j alpha_ij z_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphAttention {
    pub theta: Matrix,
    pub a_src: Vec<f64>,
    pub a_dst: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GraphAttentionCache {
    z: Matrix,
    /// Pre-activation `s_i + t_j`, only meaningful where `attention > 0`.
    logits: Matrix,
    attention: Matrix,
    output: Matrix,
}

impl GraphAttentionCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }

    pub fn attention(&self) -> &Matrix {
        &self.attention
    }
}

impl GraphAttention {
    pub fn init(inputs: usize, outputs: usize, rng: &mut SimRng) -> Self {
        let limit = (6.0 / (2 * outputs + 1) as f64).sqrt();
        Self {
            theta: glorot(inputs, outputs, rng),
            a_src: (0..outputs).map(|_| rng.uniform(-limit, limit)).collect(),
            a_dst: (0..outputs).map(|_| rng.uniform(-limit, limit)).collect(),
        }
    }

    pub fn forward(&self, weights: &Matrix, w_min: f64, h: &Matrix) -> Result<GraphAttentionCache> {
        let n = h.rows();
        if weights.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "attention adjacency {:?} does not match {n} nodes",
                weights.shape()
            )));
        }
        let z = h.matmul(&self.theta)?;
        let s: Vec<f64> = (0..n).map(|i| dot(z.row(i), &self.a_src)).collect();
        let t: Vec<f64> = (0..n).map(|j| dot(z.row(j), &self.a_dst)).collect();
        let mut logits = Matrix::zeros(n, n);
        let mut attention = Matrix::zeros(n, n);
        for i in 0..n {
            let prior = |j: usize| if i == j { 1.0 } else { weights[(i, j)] };
            let member = |j: usize| i == j || weights[(i, j)] >= w_min;
            let mut max_e = f64::NEG_INFINITY;
            for j in (0..n).filter(|&j| member(j)) {
                logits[(i, j)] = s[i] + t[j];
                max_e = max_e.max(leaky_relu(logits[(i, j)]));
            }
            let mut total = 0.0;
            for j in (0..n).filter(|&j| member(j)) {
                let a = prior(j) * (leaky_relu(logits[(i, j)]) - max_e).exp();
                attention[(i, j)] = a;
                total += a;
            }
            for a in attention.row_mut(i) {
                *a /= total;
            }
        }
        let output = attention.matmul(&z)?.map(elu);
        Ok(GraphAttentionCache {
            z,
            logits,
            attention,
            output,
        })
    }

    /// Accumulates into `grad` and returns `dL/dH`.
    pub fn backward(
        &self,
        h: &Matrix,
        cache: &GraphAttentionCache,
        d_out: &Matrix,
        grad: &mut GraphAttention,
    ) -> Result<Matrix> {
        let n = h.rows();
        let alpha = &cache.attention;
        // ELU'(u) = 1 for u > 0, exp(u) = ELU(u) + 1 otherwise
        let mut d_u = d_out.clone();
        for (d, o) in d_u.as_mut_slice().iter_mut().zip(cache.output.as_slice()) {
            if *o <= 0.0 {
                *d *= o + 1.0;
            }
        }
        let mut d_z = alpha.t_matmul(&d_u)?;
        let d_alpha = d_u.matmul_t(&cache.z)?;
        let mut d_s = vec![0.0; n];
        let mut d_t = vec![0.0; n];
        for i in 0..n {
            let row_dot: f64 = (0..n).map(|j| alpha[(i, j)] * d_alpha[(i, j)]).sum();
            for j in 0..n {
                let a = alpha[(i, j)];
                if a == 0.0 {
                    continue;
                }
                let d_e = a * (d_alpha[(i, j)] - row_dot);
                let slope = if cache.logits[(i, j)] > 0.0 { 1.0 } else { LEAKY_SLOPE };
                let d_x = d_e * slope;
                d_s[i] += d_x;
                d_t[j] += d_x;
            }
        }
        for i in 0..n {
            let zi = cache.z.row(i);
            for k in 0..zi.len() {
                grad.a_src[k] += d_s[i] * zi[k];
                grad.a_dst[k] += d_t[i] * zi[k];
            }
            let row = d_z.row_mut(i);
            for k in 0..row.len() {
                row[k] += d_s[i] * self.a_src[k] + d_t[i] * self.a_dst[k];
            }
        }
        grad.theta.add_scaled(&h.t_matmul(&d_z)?, 1.0)?;
        d_z.matmul_t(&self.theta)
    }
}

impl Parameters for GraphAttention {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(self.theta.as_slice());
        f(&self.a_src);
        f(&self.a_dst);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.theta.as_mut_slice());
        f(&mut self.a_src);
        f(&mut self.a_dst);
    }
}
