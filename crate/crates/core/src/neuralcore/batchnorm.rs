//! Per-channel batch normalization over the `(sample, position)` axes.

use super::tensor::Batch3;
use crate::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
    pub mode: BnMode,
}

/// Quantities saved by the forward pass for [`batchnorm_backward`].
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Batch3,
    inv_std: Vec<f64>,
    mode: BnMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGrads {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl BatchNormState {
    /// Identity affine (`scale = 1`, `shift = 0`), unit running variance,
    /// train mode.
    pub fn new(channels: usize) -> Self {
        Self {
            scale: vec![1.0; channels],
            shift: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            momentum: BN_MOMENTUM,
            epsilon: BN_EPSILON,
            mode: BnMode::Train,
        }
    }

    pub fn channels(&self) -> usize {
        self.scale.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.channels();
        if self.shift.len() != c || self.running_mean.len() != c || self.running_var.len() != c {
            return Err(Error::shape(
                "BatchNormState",
                format!("{c} entries per field"),
                format!(
                    "shift {}, running_mean {}, running_var {}",
                    self.shift.len(),
                    self.running_mean.len(),
                    self.running_var.len()
                ),
            ));
        }
        if !(self.epsilon > 0.0) || !(self.momentum > 0.0 && self.momentum <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "batch norm epsilon {} must be > 0 and momentum {} in (0, 1]",
                self.epsilon, self.momentum
            )));
        }
        if self.running_var.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("negative running variance".into()));
        }
        Ok(())
    }

    fn check_input(&self, input: &Batch3, op: &'static str) -> Result<()> {
        if input.channels() != self.channels() {
            return Err(Error::shape(
                op,
                format!("{} channels", self.channels()),
                input.channels(),
            ));
        }
        Ok(())
    }
}

fn affine(normalized: &Batch3, scale: &[f64], shift: &[f64]) -> Batch3 {
    let (b_n, c_n, _) = normalized.dims();
    let mut out = normalized.clone();
    for b in 0..b_n {
        for c in 0..c_n {
            let start = out.index(b, c, 0);
            let len = out.len();
            out.data_mut()[start..start + len]
                .iter_mut()
                .for_each(|v| *v = scale[c] * *v + shift[c]);
        }
    }
    out
}

fn normalize_with(input: &Batch3, mean: &[f64], inv_std: &[f64]) -> Batch3 {
    let (b_n, c_n, l_n) = input.dims();
    let mut out = input.clone();
    for b in 0..b_n {
        for c in 0..c_n {
            let start = out.index(b, c, 0);
            out.data_mut()[start..start + l_n]
                .iter_mut()
                .for_each(|v| *v = (*v - mean[c]) * inv_std[c]);
        }
    }
    out
}

/// Per-channel mean and biased variance over `(B, L)`.
fn channel_stats(input: &Batch3) -> (Vec<f64>, Vec<f64>) {
    let (b_n, c_n, l_n) = input.dims();
    let count = (b_n * l_n) as f64;
    let mut mean = vec![0.0; c_n];
    let mut var = vec![0.0; c_n];
    for c in 0..c_n {
        let mut sum = 0.0;
        for b in 0..b_n {
            sum += input.row(b, c).iter().sum::<f64>();
        }
        let m = sum / count;
        let mut sq = 0.0;
        for b in 0..b_n {
            sq += input
                .row(b, c)
                .iter()
                .map(|v| (v - m) * (v - m))
                .sum::<f64>();
        }
        mean[c] = m;
        var[c] = sq / count;
    }
    (mean, var)
}

/// Train mode normalizes with batch statistics and folds them into the
/// running estimates; eval mode uses the running estimates and leaves the
/// state untouched.
pub fn batchnorm_forward(
    input: &Batch3,
    state: &mut BatchNormState,
) -> Result<(Batch3, BatchNormCache)> {
    if state.mode == BnMode::Eval {
        return batchnorm_forward_eval(input, state);
    }
    state.check_input(input, "batchnorm_forward")?;
    let (b_n, _, l_n) = input.dims();
    if b_n * l_n < 2 {
        return Err(Error::Domain(format!(
            "batch norm in train mode needs at least 2 values per channel, got B·L = {}",
            b_n * l_n
        )));
    }
    let (mean, var) = channel_stats(input);
    let inv_std: Vec<f64> = var
        .iter()
        .map(|v| 1.0 / (v + state.epsilon).sqrt())
        .collect();
    let normalized = normalize_with(input, &mean, &inv_std);
    let out = affine(&normalized, &state.scale, &state.shift);

    let m = state.momentum;
    for c in 0..state.channels() {
        state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * mean[c];
        state.running_var[c] = (1.0 - m) * state.running_var[c] + m * var[c];
    }
    Ok((
        out,
        BatchNormCache {
            normalized,
            inv_std,
            mode: BnMode::Train,
        },
    ))
}

/// Eval-mode forward through a shared reference: a fixed affine map.
pub fn batchnorm_forward_eval(
    input: &Batch3,
    state: &BatchNormState,
) -> Result<(Batch3, BatchNormCache)> {
    state.check_input(input, "batchnorm_forward_eval")?;
    let inv_std: Vec<f64> = state
        .running_var
        .iter()
        .map(|v| 1.0 / (v + state.epsilon).sqrt())
        .collect();
    let normalized = normalize_with(input, &state.running_mean, &inv_std);
    let out = affine(&normalized, &state.scale, &state.shift);
    Ok((
        out,
        BatchNormCache {
            normalized,
            inv_std,
            mode: BnMode::Eval,
        },
    ))
}

/// In train mode the gradient accounts for the dependence of the batch mean
/// and variance on every input.
pub fn batchnorm_backward(
    cache: &BatchNormCache,
    state: &BatchNormState,
    grad_out: &Batch3,
) -> Result<(Batch3, BatchNormGrads)> {
    grad_out.expect_dims("batchnorm_backward", cache.normalized.dims())?;
    let (b_n, c_n, l_n) = grad_out.dims();
    let count = (b_n * l_n) as f64;
    let mut grads = BatchNormGrads {
        scale: vec![0.0; c_n],
        shift: vec![0.0; c_n],
    };
    for c in 0..c_n {
        for b in 0..b_n {
            let g = grad_out.row(b, c);
            let xh = cache.normalized.row(b, c);
            grads.shift[c] += g.iter().sum::<f64>();
            grads.scale[c] += g.iter().zip(xh).map(|(g, x)| g * x).sum::<f64>();
        }
    }

    let mut grad_in = grad_out.clone();
    for c in 0..c_n {
        let k = state.scale[c] * cache.inv_std[c];
        let (mean_g, mean_gx) = match cache.mode {
            BnMode::Train => (grads.shift[c] / count, grads.scale[c] / count),
            BnMode::Eval => (0.0, 0.0),
        };
        for b in 0..b_n {
            let start = grad_in.index(b, c, 0);
            let xh = cache.normalized.row(b, c);
            let dst = &mut grad_in.data_mut()[start..start + l_n];
            for (g, x) in dst.iter_mut().zip(xh) {
                *g = k * (*g - mean_g - x * mean_gx);
            }
        }
    }
    Ok((grad_in, grads))
}
