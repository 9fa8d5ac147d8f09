//! Actor-critic MLP over a flat parameter vector with a hand-written
//! backward pass.
//!
//! Parameter layout, in order: for each trunk layer a row-major weight
//! matrix `[out][in]` followed by its bias; then the logit head, then the
//! value head, each laid out the same way.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpShape {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub actions: usize,
}

impl MlpShape {
    pub fn new(input: usize, hidden: Vec<usize>, actions: usize) -> Self {
        MlpShape {
            input,
            hidden,
            actions,
        }
    }

    /// `(fan_in, fan_out)` of every dense layer, heads last (logits, value).
    pub fn layers(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        let mut prev = self.input;
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.actions));
        dims.push((prev, 1));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|(i, o)| i * o + o).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::new();
        let mut acc = 0;
        for (i, o) in self.layers() {
            off.push(acc);
            acc += i * o + o;
        }
        off
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input followed by the post-tanh output of each trunk layer.
    activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    shape: MlpShape,
    params: Vec<f64>,
}

impl ActorCritic {
    /// Orthogonal init: trunk and value head with gain 1, logit head with
    /// gain 0.01, zero biases.
    pub fn init<R: Rng + ?Sized>(shape: MlpShape, rng: &mut R) -> Self {
        let mut params = vec![0.0; shape.param_count()];
        let layers = shape.layers();
        let n_trunk = shape.hidden.len();
        for (l, (&(fan_in, fan_out), off)) in layers.iter().zip(shape.offsets()).enumerate() {
            let gain = if l == n_trunk { 0.01 } else { 1.0 };
            let w = orthogonal(fan_out, fan_in, gain, rng);
            params[off..off + fan_in * fan_out].copy_from_slice(&w);
        }
        ActorCritic { shape, params }
    }

    pub fn from_params(shape: MlpShape, params: Vec<f64>) -> Result<Self> {
        if params.len() != shape.param_count() {
            return Err(Error::DimensionMismatch {
                expected: shape.param_count(),
                found: params.len(),
            });
        }
        Ok(ActorCritic { shape, params })
    }

    pub fn shape(&self) -> &MlpShape {
        &self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    pub fn forward(&self, obs: &[f64]) -> Result<ForwardCache> {
        if obs.len() != self.shape.input {
            return Err(Error::DimensionMismatch {
                expected: self.shape.input,
                found: obs.len(),
            });
        }
        let layers = self.shape.layers();
        let offsets = self.shape.offsets();
        let n_trunk = self.shape.hidden.len();
        let mut activations = Vec::with_capacity(n_trunk + 1);
        activations.push(obs.to_vec());
        for l in 0..n_trunk {
            let z = dense(&self.params[offsets[l]..], layers[l], &activations[l]);
            activations.push(z.into_iter().map(f64::tanh).collect());
        }
        let top = &activations[n_trunk];
        let logits = dense(&self.params[offsets[n_trunk]..], layers[n_trunk], top);
        let value = dense(&self.params[offsets[n_trunk + 1]..], layers[n_trunk + 1], top)[0];
        Ok(ForwardCache {
            activations,
            logits,
            value,
        })
    }

    /// Accumulates into `grad` the parameter gradient given the loss
    /// gradients with respect to the logits and the value.
    pub fn backward(&self, cache: &ForwardCache, d_logits: &[f64], d_value: f64, grad: &mut [f64]) {
        let layers = self.shape.layers();
        let offsets = self.shape.offsets();
        let n_trunk = self.shape.hidden.len();
        let top = &cache.activations[n_trunk];
        let mut d_top = vec![0.0; top.len()];

        dense_backward(
            &self.params[offsets[n_trunk]..],
            &mut grad[offsets[n_trunk]..],
            layers[n_trunk],
            top,
            d_logits,
            &mut d_top,
        );
        dense_backward(
            &self.params[offsets[n_trunk + 1]..],
            &mut grad[offsets[n_trunk + 1]..],
            layers[n_trunk + 1],
            top,
            &[d_value],
            &mut d_top,
        );

        let mut delta = d_top;
        for l in (0..n_trunk).rev() {
            let out = &cache.activations[l + 1];
            // tanh'(z) = 1 - tanh(z)^2
            let dz: Vec<f64> = delta.iter().zip(out).map(|(d, a)| d * (1.0 - a * a)).collect();
            let input = &cache.activations[l];
            let mut d_in = vec![0.0; input.len()];
            dense_backward(
                &self.params[offsets[l]..],
                &mut grad[offsets[l]..],
                layers[l],
                input,
                &dz,
                &mut d_in,
            );
            delta = d_in;
        }
    }
}

fn dense(params: &[f64], (fan_in, fan_out): (usize, usize), x: &[f64]) -> Vec<f64> {
    let (w, b) = params[..fan_in * fan_out + fan_out].split_at(fan_in * fan_out);
    (0..fan_out)
        .map(|o| {
            let row = &w[o * fan_in..(o + 1) * fan_in];
            b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

fn dense_backward(
    params: &[f64],
    grad: &mut [f64],
    (fan_in, fan_out): (usize, usize),
    x: &[f64],
    dy: &[f64],
    dx: &mut [f64],
) {
    let w = &params[..fan_in * fan_out];
    let (gw, gb) = grad[..fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
    for o in 0..fan_out {
        let d = dy[o];
        if d == 0.0 {
            continue;
        }
        gb[o] += d;
        let row = o * fan_in;
        for i in 0..fan_in {
            gw[row + i] += d * x[i];
            dx[i] += d * w[row + i];
        }
    }
}

/// Row-major `rows × cols` matrix with orthonormal rows (or columns, when
/// taller than wide), scaled by `gain`.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let (n, m) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    // n vectors of length m, Gram-Schmidt orthonormalized
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(b).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain * if rows <= cols { basis[r][c] } else { basis[c][r] };
        }
    }
    out
}
