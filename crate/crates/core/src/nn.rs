//! Minimal building blocks shared by the encoders and the graph network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Matrix;
use crate::rng::SimRng;

/// Uniform access to every trainable tensor of a model, in a fixed order.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |t| n += t.len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |t| out.extend_from_slice(t));
        out
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |t| ok &= t.iter().all(|v| v.is_finite()));
        ok
    }

    fn zero(&mut self) {
        self.visit_mut(&mut |t| t.fill(0.0));
    }
}

/// Affine map `z = W x + b` with `W` stored as `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Matrix::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut SimRng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            weight: Matrix::from_fn(outputs, inputs, |_, _| rng.uniform(-limit, limit)),
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.weight.mul_vec(x)?;
        for (zi, bi) in z.iter_mut().zip(&self.bias) {
            *zi += bi;
        }
        Ok(z)
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dz: &[f64], grad: &mut Dense) -> Result<Vec<f64>> {
        grad.weight.add_outer(dz, x, 1.0)?;
        for (g, d) in grad.bias.iter_mut().zip(dz) {
            *g += d;
        }
        self.weight.t_mul_vec(dz)
    }

    pub fn check_shape(&self, inputs: usize, outputs: usize, name: &str) -> Result<()> {
        if self.weight.shape() != (outputs, inputs) || self.bias.len() != outputs {
            return Err(Error::Shape(format!(
                "{name}: expected {outputs}x{inputs}, found {}x{} with {} biases",
                self.weight.rows(),
                self.weight.cols(),
                self.bias.len()
            )));
        }
        if !self.weight.is_finite() || !self.bias.iter().all(|b| b.is_finite()) {
            return Err(Error::Shape(format!("{name}: non-finite parameters")));
        }
        Ok(())
    }
}

impl Parameters for Dense {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(self.weight.as_slice());
        f(&self.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(self.weight.as_mut_slice());
        f(&mut self.bias);
    }
}
