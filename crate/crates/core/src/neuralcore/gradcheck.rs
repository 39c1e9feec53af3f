//! Central finite-difference verification of the analytic backward passes.
//!
//! Each trial draws a random shape and random inputs, forms the scalar
//! `L = Σ r ⊙ f(θ)` for a random projection `r`, and compares the analytic
//! gradient (backward pass at `grad_out = r`) against
//! `(L(θ + h) − L(θ − h)) / 2h` for every parameter group.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::*;
use super::batchnorm::*;
use super::conv::*;
use super::tensor::Batch3;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    TransposedConv,
    BatchNorm,
    Relu,
    Sigmoid,
    GammaScale,
}

impl LayerKind {
    pub const ALL: [LayerKind; 6] = [
        LayerKind::Conv,
        LayerKind::TransposedConv,
        LayerKind::BatchNorm,
        LayerKind::Relu,
        LayerKind::Sigmoid,
        LayerKind::GammaScale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv => "conv1d",
            LayerKind::TransposedConv => "tconv1d",
            LayerKind::BatchNorm => "batchnorm",
            LayerKind::Relu => "relu",
            LayerKind::Sigmoid => "sigmoid",
            LayerKind::GammaScale => "gamma_scale",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GradCheckConfig {
    pub trials: usize,
    pub step: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            trials: 10,
            step: 1e-5,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupError {
    pub name: String,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    /// Layer kind or model under test.
    pub subject: String,
    pub trials: usize,
    pub tolerance: f64,
    pub groups: Vec<GroupError>,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.max_rel_error < self.tolerance)
    }

    pub(crate) fn update(&mut self, name: &str, err: f64) {
        match self.groups.iter_mut().find(|g| g.name == name) {
            Some(g) => g.max_rel_error = g.max_rel_error.max(err),
            None => self.groups.push(GroupError {
                name: name.to_string(),
                max_rel_error: err,
            }),
        }
    }
}

/// `(f(x + h·e_i) − f(x − h·e_i)) / 2h` for every coordinate `i`.
pub fn central_difference(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let plus = f(&probe);
            probe[i] = orig - step;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// `‖a − n‖∞ / max(‖a‖∞, ‖n‖∞)`; zero when both gradients vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max);
    let scale = analytic
        .iter()
        .chain(numeric)
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn project(y: &Batch3, r: &Batch3) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn batch(rng: &mut ChaCha8Rng, b: usize, c: usize, l: usize, lo: f64, hi: f64) -> Batch3 {
    Batch3::from_raw(b, c, l, uniform(rng, b * c * l, lo, hi))
}

fn reshape(like: &Batch3, data: &[f64]) -> Batch3 {
    let (b, c, l) = like.dims();
    Batch3::from_raw(b, c, l, data.to_vec())
}

/// Runs `cfg.trials` random trials of the finite-difference check for one
/// layer kind and reports the worst relative error per parameter group.
pub fn gradient_check(kind: LayerKind, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut report = GradCheckReport {
        subject: kind.name().to_string(),
        trials: cfg.trials,
        tolerance: cfg.tolerance,
        groups: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (kind as u64).wrapping_mul(0x9E37_79B9));
    for _ in 0..cfg.trials {
        match kind {
            LayerKind::Conv => check_conv(&mut rng, cfg.step, &mut report)?,
            LayerKind::TransposedConv => check_tconv(&mut rng, cfg.step, &mut report)?,
            LayerKind::BatchNorm => check_batchnorm(&mut rng, cfg.step, &mut report)?,
            LayerKind::Relu => check_relu(&mut rng, cfg.step, &mut report)?,
            LayerKind::Sigmoid => check_sigmoid(&mut rng, cfg.step, &mut report)?,
            LayerKind::GammaScale => check_gamma(&mut rng, cfg.step, &mut report)?,
        }
    }
    Ok(report)
}

fn random_conv(rng: &mut ChaCha8Rng, transposed: bool) -> ConvParams {
    let c_a = rng.random_range(1..4);
    let c_b = rng.random_range(1..4);
    let k = [1, 3, 5][rng.random_range(0..3)];
    let stride = rng.random_range(1..3);
    let padding = rng.random_range(0..k.min(3));
    let mut p = if transposed {
        ConvParams::transposed(c_a, c_b, k, stride, padding)
    } else {
        ConvParams::conv(c_a, c_b, k, stride, padding)
    };
    p.weights = uniform(rng, p.weights.len(), -1.0, 1.0);
    p.bias = uniform(rng, p.bias.len(), -1.0, 1.0);
    p
}

fn check_conv(rng: &mut ChaCha8Rng, h: f64, report: &mut GradCheckReport) -> Result<()> {
    let p = random_conv(rng, false);
    let [c_out, c_in, k] = p.dims();
    let b = rng.random_range(1..4);
    let l = rng.random_range(k.max(2)..14);
    let x = batch(rng, b, c_in, l, -1.0, 1.0);
    let l_out = conv_output_len(l, k, p.stride, p.padding).expect("valid geometry");
    let r = batch(rng, b, c_out, l_out, -1.0, 1.0);
    let (gx, gp) = conv1d_backward(&x, &p, &r)?;

    let num_x = central_difference(x.data(), h, |v| {
        project(&conv1d_forward(&reshape(&x, v), &p).unwrap(), &r)
    });
    let num_w = central_difference(&p.weights, h, |v| {
        let mut q = p.clone();
        q.weights.copy_from_slice(v);
        project(&conv1d_forward(&x, &q).unwrap(), &r)
    });
    let num_b = central_difference(&p.bias, h, |v| {
        let mut q = p.clone();
        q.bias.copy_from_slice(v);
        project(&conv1d_forward(&x, &q).unwrap(), &r)
    });
    report.update("input", relative_error(gx.data(), &num_x));
    report.update("weights", relative_error(&gp.weights, &num_w));
    report.update("bias", relative_error(&gp.bias, &num_b));
    Ok(())
}

fn check_tconv(rng: &mut ChaCha8Rng, h: f64, report: &mut GradCheckReport) -> Result<()> {
    let p = random_conv(rng, true);
    let [c_in, c_out, k] = p.dims();
    let b = rng.random_range(1..4);
    let l = rng.random_range(2..9);
    let output_padding = rng.random_range(0..p.stride);
    let Some(l_out) = tconv_output_len(l, k, p.stride, p.padding, output_padding) else {
        return Ok(());
    };
    let x = batch(rng, b, c_in, l, -1.0, 1.0);
    let r = batch(rng, b, c_out, l_out, -1.0, 1.0);
    let (gx, gp) = tconv1d_backward(&x, &p, &r)?;

    let f =
        |x: &Batch3, q: &ConvParams| project(&tconv1d_forward(x, q, output_padding).unwrap(), &r);
    let num_x = central_difference(x.data(), h, |v| f(&reshape(&x, v), &p));
    let num_w = central_difference(&p.weights, h, |v| {
        let mut q = p.clone();
        q.weights.copy_from_slice(v);
        f(&x, &q)
    });
    let num_b = central_difference(&p.bias, h, |v| {
        let mut q = p.clone();
        q.bias.copy_from_slice(v);
        f(&x, &q)
    });
    report.update("input", relative_error(gx.data(), &num_x));
    report.update("weights", relative_error(&gp.weights, &num_w));
    report.update("bias", relative_error(&gp.bias, &num_b));
    Ok(())
}

fn check_batchnorm(rng: &mut ChaCha8Rng, h: f64, report: &mut GradCheckReport) -> Result<()> {
    let c = rng.random_range(1..4);
    let b = rng.random_range(1..4);
    let l = rng.random_range(2..7);
    let mut state = BatchNormState::new(c);
    state.scale = uniform(rng, c, 0.5, 2.0);
    state.shift = uniform(rng, c, -1.0, 1.0);
    let x = batch(rng, b, c, l, -2.0, 2.0);
    let r = batch(rng, b, c, l, -1.0, 1.0);

    let f = |x: &Batch3, s: &BatchNormState| {
        let mut s = s.clone();
        project(&batchnorm_forward(x, &mut s).unwrap().0, &r)
    };
    let mut fwd_state = state.clone();
    let (_, cache) = batchnorm_forward(&x, &mut fwd_state)?;
    let (gx, gp) = batchnorm_backward(&cache, &state, &r)?;

    let num_x = central_difference(x.data(), h, |v| f(&reshape(&x, v), &state));
    let num_scale = central_difference(&state.scale, h, |v| {
        let mut s = state.clone();
        s.scale.copy_from_slice(v);
        f(&x, &s)
    });
    let num_shift = central_difference(&state.shift, h, |v| {
        let mut s = state.clone();
        s.shift.copy_from_slice(v);
        f(&x, &s)
    });
    report.update("input", relative_error(gx.data(), &num_x));
    report.update("scale", relative_error(&gp.scale, &num_scale));
    report.update("shift", relative_error(&gp.shift, &num_shift));
    Ok(())
}

fn random_elementwise_shape(rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    (
        rng.random_range(1..4),
        rng.random_range(1..4),
        rng.random_range(1..10),
    )
}

fn check_relu(rng: &mut ChaCha8Rng, h: f64, report: &mut GradCheckReport) -> Result<()> {
    let (b, c, l) = random_elementwise_shape(rng);
    // keep every point well away from the kink at 0
    let x = Batch3::from_fn(b, c, l, |_, _, _| {
        let mag = rng.random_range(100.0 * h..2.0);
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    });
    let r = batch(rng, b, c, l, -1.0, 1.0);
    let gx = relu_backward(&x, &r)?;
    let num = central_difference(x.data(), h, |v| project(&relu_forward(&reshape(&x, v)), &r));
    report.update("input", relative_error(gx.data(), &num));
    Ok(())
}

fn check_sigmoid(rng: &mut ChaCha8Rng, h: f64, report: &mut GradCheckReport) -> Result<()> {
    let (b, c, l) = random_elementwise_shape(rng);
    let x = batch(rng, b, c, l, -4.0, 4.0);
    let r = batch(rng, b, c, l, -1.0, 1.0);
    let gx = sigmoid_backward(&sigmoid_forward(&x), &r)?;
    let num = central_difference(x.data(), h, |v| {
        project(&sigmoid_forward(&reshape(&x, v)), &r)
    });
    report.update("input", relative_error(gx.data(), &num));
    Ok(())
}

fn check_gamma(rng: &mut ChaCha8Rng, h: f64, report: &mut GradCheckReport) -> Result<()> {
    let (b, c, l) = random_elementwise_shape(rng);
    let gamma = rng.random_range(0.5..4.0);
    let range = 30.0;
    let u = batch(rng, b, c, l, 0.05, 0.95);
    let r = batch(rng, b, c, l, -1.0, 1.0);
    let gu = gamma_scale_backward(&u, gamma, range, &r)?;
    let num = central_difference(u.data(), h, |v| {
        project(
            &gamma_scale_forward(&reshape(&u, v), gamma, range).unwrap(),
            &r,
        )
    });
    report.update("input", relative_error(gu.data(), &num));
    Ok(())
}
