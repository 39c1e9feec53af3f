//! The fully convolutional scan autoencoder.
//!
//! ```text
//! x (m) ─ clamp/÷s ─┬ conv─BN─ReLU ─┬ conv─BN─ReLU ─ … ─ conv─BN─ReLU = z
//!                   │               │                               │
//!                   │   (skip, +)   └──────────────┐                │
//!                   │                          tconv─(+)─BN─ReLU ─ tconv
//!                   └───────────────── … ────────────────────────────┘
//!                                   final tconv ─ sigmoid ─ s·u^γ ─ ŷ (m)
//! ```
//!
//! Each encoder level halves the length; each decoder level doubles it. With
//! skip connections enabled, the post-activation of every encoder level is
//! added to the transposed-convolution output of the same length before
//! that decoder level's BN and ReLU. The last decoder level maps to one
//! channel and feeds the sigmoid + gamma head instead of BN/ReLU.

mod checkpoint;
mod gradcheck;

pub use checkpoint::{load, save, TrainingMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check_model, ZERO_GROUP_FLOOR};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::neuralcore::{
    batchnorm_backward, batchnorm_forward, batchnorm_forward_eval, conv1d_backward, conv1d_forward,
    conv_output_len, gamma_scale_backward, gamma_scale_forward, relu_backward, relu_forward,
    sigmoid_backward, sigmoid_forward, tconv1d_backward, tconv1d_forward, Batch3, BatchNormCache,
    BatchNormState, BnMode, ConvParams, GradStore,
};
use crate::{Error, Result};

/// Inputs below `-INPUT_TOLERANCE` meters are rejected rather than clamped.
pub const INPUT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub n_points: usize,
    pub n_levels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub channels: Vec<usize>,
    pub skip_connections: bool,
    pub gamma: f64,
    /// Maximum laser range `s` in meters.
    pub max_range: f64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            n_points: 128,
            n_levels: 4,
            kernel: 5,
            stride: 2,
            channels: vec![8, 16, 32, 64],
            skip_connections: true,
            gamma: 2.0,
            max_range: 30.0,
        }
    }
}

impl AutoencoderConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_points == 0 || self.n_levels == 0 {
            return bad("n_points and n_levels must be positive".into());
        }
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return bad(format!("kernel must be odd, got {}", self.kernel));
        }
        if self.stride < 1 {
            return bad("stride must be positive".into());
        }
        if self.channels.len() != self.n_levels {
            return bad(format!(
                "{} channel counts given for {} levels",
                self.channels.len(),
                self.n_levels
            ));
        }
        if self.channels.contains(&0) {
            return bad("channel counts must be positive".into());
        }
        let factor = (self.stride as u64)
            .checked_pow(self.n_levels as u32)
            .filter(|&f| f <= self.n_points as u64);
        match factor {
            Some(f) if (self.n_points as u64).is_multiple_of(f) => {}
            _ => {
                return bad(format!(
                    "n_points {} is not divisible by stride^n_levels = {}^{}",
                    self.n_points, self.stride, self.n_levels
                ))
            }
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return bad(format!(
                "max_range must be positive, got {}",
                self.max_range
            ));
        }
        Ok(())
    }

    /// Padding that makes each strided convolution divide the length exactly.
    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    /// Output padding that makes each transposed convolution multiply the
    /// length exactly.
    pub fn output_padding(&self) -> usize {
        self.stride - 1
    }

    /// Feature length after each encoder level.
    pub fn level_lengths(&self) -> Vec<usize> {
        let mut len = self.n_points;
        (0..self.n_levels)
            .map(|_| {
                len = conv_output_len(len, self.kernel, self.stride, self.padding())
                    .expect("validated geometry");
                len
            })
            .collect()
    }

    /// Size `m` of the flattened innermost feature map.
    pub fn latent_dim(&self) -> usize {
        self.channels.last().copied().unwrap_or(0)
            * self.level_lengths().last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLevel {
    pub conv: ConvParams,
    pub bn: BatchNormState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderLevel {
    pub tconv: ConvParams,
    /// `None` for the output level, which feeds the sigmoid head.
    pub bn: Option<BatchNormState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    config: AutoencoderConfig,
    pub encoder: Vec<EncoderLevel>,
    /// Innermost level first; the last entry is the output level.
    pub decoder: Vec<DecoderLevel>,
}

/// Intermediate values retained by [`Autoencoder::forward`] for
/// [`Autoencoder::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `acts[0]` is the normalized input; `acts[i]` the post-ReLU output of
    /// encoder level `i`.
    acts: Vec<Batch3>,
    enc_bn: Vec<BatchNormCache>,
    enc_pre: Vec<Batch3>,
    /// Input of each decoder transposed convolution.
    dec_in: Vec<Batch3>,
    dec_bn: Vec<BatchNormCache>,
    dec_pre: Vec<Batch3>,
    /// Sigmoid output `ŷ'` in `[0, 1]`.
    head: Batch3,
}

impl ForwardCache {
    pub fn head(&self) -> &Batch3 {
        &self.head
    }

    /// Flattened innermost feature map `z`, one row per sample.
    pub fn latent(&self) -> &Batch3 {
        self.acts.last().expect("at least one level")
    }
}

fn fan_in_uniform(rng: &mut ChaCha8Rng, p: &mut ConvParams, fan_in: usize) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    p.weights
        .iter_mut()
        .for_each(|w| *w = rng.random_range(-bound..bound));
    p.bias
        .iter_mut()
        .for_each(|w| *w = rng.random_range(-bound..bound));
}

fn add_into(dst: &mut Batch3, src: &Batch3) {
    dst.data_mut()
        .iter_mut()
        .zip(src.data())
        .for_each(|(d, s)| *d += s);
}

impl Autoencoder {
    /// Builds a model with fan-in scaled uniform weights drawn from `seed`;
    /// batch norm starts as the identity affine in train mode.
    pub fn build(config: AutoencoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (k, s, pad) = (config.kernel, config.stride, config.padding());
        let mut encoder = Vec::with_capacity(config.n_levels);
        let mut c_prev = 1;
        for &c in &config.channels {
            let mut conv = ConvParams::conv(c, c_prev, k, s, pad);
            fan_in_uniform(&mut rng, &mut conv, c_prev * k);
            encoder.push(EncoderLevel {
                conv,
                bn: BatchNormState::new(c),
            });
            c_prev = c;
        }
        let mut decoder = Vec::with_capacity(config.n_levels);
        for j in 0..config.n_levels {
            let c_in = config.channels[config.n_levels - 1 - j];
            let last = j + 1 == config.n_levels;
            let c_out = if last {
                1
            } else {
                config.channels[config.n_levels - 2 - j]
            };
            let mut tconv = ConvParams::transposed(c_in, c_out, k, s, pad);
            fan_in_uniform(&mut rng, &mut tconv, c_in * k);
            decoder.push(DecoderLevel {
                tconv,
                bn: (!last).then(|| BatchNormState::new(c_out)),
            });
        }
        Ok(Self {
            config,
            encoder,
            decoder,
        })
    }

    pub fn config(&self) -> &AutoencoderConfig {
        &self.config
    }

    pub fn set_mode(&mut self, mode: BnMode) {
        for bn in self.bn_states_mut() {
            bn.mode = mode;
        }
    }

    pub fn bn_states(&self) -> impl Iterator<Item = &BatchNormState> {
        self.encoder
            .iter()
            .map(|l| &l.bn)
            .chain(self.decoder.iter().filter_map(|l| l.bn.as_ref()))
    }

    fn bn_states_mut(&mut self) -> impl Iterator<Item = &mut BatchNormState> {
        self.encoder
            .iter_mut()
            .map(|l| &mut l.bn)
            .chain(self.decoder.iter_mut().filter_map(|l| l.bn.as_mut()))
    }

    /// Trainable parameters as `(name, values)` in declaration order:
    /// encoder levels, then decoder levels; per level weight, bias, BN scale,
    /// BN shift.
    pub fn params(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        for (i, l) in self.encoder.iter().enumerate() {
            out.push((format!("encoder.{i}.conv.weight"), &l.conv.weights));
            out.push((format!("encoder.{i}.conv.bias"), &l.conv.bias));
            out.push((format!("encoder.{i}.bn.scale"), &l.bn.scale));
            out.push((format!("encoder.{i}.bn.shift"), &l.bn.shift));
        }
        for (j, l) in self.decoder.iter().enumerate() {
            out.push((format!("decoder.{j}.tconv.weight"), &l.tconv.weights));
            out.push((format!("decoder.{j}.tconv.bias"), &l.tconv.bias));
            if let Some(bn) = &l.bn {
                out.push((format!("decoder.{j}.bn.scale"), &bn.scale));
                out.push((format!("decoder.{j}.bn.shift"), &bn.shift));
            }
        }
        out
    }

    /// Mutable views of the parameters, in the order of [`Autoencoder::params`].
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.encoder {
            out.push(&mut l.conv.weights);
            out.push(&mut l.conv.bias);
            out.push(&mut l.bn.scale);
            out.push(&mut l.bn.shift);
        }
        for l in &mut self.decoder {
            out.push(&mut l.tconv.weights);
            out.push(&mut l.tconv.bias);
            if let Some(bn) = &mut l.bn {
                out.push(&mut bn.scale);
                out.push(&mut bn.shift);
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, p)| p.len()).sum()
    }

    pub fn new_grad_store(&self) -> GradStore {
        GradStore::new(self.params().into_iter().map(|(n, p)| (n, p.len())))
    }

    /// Checks shape, rejects negative or NaN readings, saturates at the
    /// maximum range and divides by it.
    fn normalize_input(&self, x: &Batch3) -> Result<Batch3> {
        let cfg = &self.config;
        x.expect_dims("Autoencoder::forward", (x.batch(), 1, cfg.n_points))?;
        if let Some(&bad) = x
            .data()
            .iter()
            .find(|v| v.is_nan() || **v < -INPUT_TOLERANCE)
        {
            return Err(Error::Domain(format!(
                "laser reading {bad} outside [0, {}] m",
                cfg.max_range
            )));
        }
        let s = cfg.max_range;
        Ok(x.map(|v| v.clamp(0.0, s) / s))
    }

    /// Full forward pass. BN layers run in whatever mode their state is in;
    /// train mode updates running statistics.
    pub fn forward(&mut self, x: &Batch3) -> Result<(Batch3, ForwardCache)> {
        let x_norm = self.normalize_input(x)?;
        let skip = self.config.skip_connections;
        let n = self.config.n_levels;
        let mut cache = ForwardCache {
            acts: vec![x_norm],
            enc_bn: Vec::with_capacity(n),
            enc_pre: Vec::with_capacity(n),
            dec_in: Vec::with_capacity(n),
            dec_bn: Vec::with_capacity(n),
            dec_pre: Vec::with_capacity(n),
            head: Batch3::zeros(1, 1, 1),
        };
        for level in &mut self.encoder {
            let z = conv1d_forward(cache.acts.last().expect("input"), &level.conv)?;
            let (pre, bn_cache) = batchnorm_forward(&z, &mut level.bn)?;
            cache.acts.push(relu_forward(&pre));
            cache.enc_bn.push(bn_cache);
            cache.enc_pre.push(pre);
        }
        let mut h = cache.acts[n].clone();
        let op = self.config.output_padding();
        for (j, level) in self.decoder.iter_mut().enumerate() {
            let mut t = tconv1d_forward(&h, &level.tconv, op)?;
            cache.dec_in.push(h);
            match &mut level.bn {
                Some(bn) => {
                    if skip {
                        add_into(&mut t, &cache.acts[n - 1 - j]);
                    }
                    let (pre, bn_cache) = batchnorm_forward(&t, bn)?;
                    h = relu_forward(&pre);
                    cache.dec_bn.push(bn_cache);
                    cache.dec_pre.push(pre);
                }
                None => h = t,
            }
        }
        cache.head = sigmoid_forward(&h);
        let y = gamma_scale_forward(&cache.head, self.config.gamma, self.config.max_range)?;
        Ok((y, cache))
    }

    /// Eval-mode forward through a shared reference, for concurrent
    /// inference. Identical to [`Autoencoder::forward`] with every BN layer
    /// in eval mode.
    pub fn predict(&self, x: &Batch3) -> Result<Batch3> {
        let skip = self.config.skip_connections;
        let n = self.config.n_levels;
        let mut acts = vec![self.normalize_input(x)?];
        for level in &self.encoder {
            let z = conv1d_forward(acts.last().expect("input"), &level.conv)?;
            let (pre, _) = batchnorm_forward_eval(&z, &level.bn)?;
            acts.push(relu_forward(&pre));
        }
        let mut h = acts[n].clone();
        let op = self.config.output_padding();
        for (j, level) in self.decoder.iter().enumerate() {
            let mut t = tconv1d_forward(&h, &level.tconv, op)?;
            h = match &level.bn {
                Some(bn) => {
                    if skip {
                        add_into(&mut t, &acts[n - 1 - j]);
                    }
                    relu_forward(&batchnorm_forward_eval(&t, bn)?.0)
                }
                None => t,
            };
        }
        gamma_scale_forward(
            &sigmoid_forward(&h),
            self.config.gamma,
            self.config.max_range,
        )
    }

    /// Predicts one scan of exactly `n_points` readings. Readings beyond the
    /// maximum range, including `+inf` no-return values, saturate.
    pub fn predict_scan(&self, scan: &[f64]) -> Result<Vec<f64>> {
        let s = self.config.max_range;
        let saturated: Vec<f64> = scan.iter().map(|&v| if v > s { s } else { v }).collect();
        Ok(self
            .predict(&Batch3::from_scans(&[saturated])?)?
            .into_data())
    }

    /// Gradients of the loss with respect to every parameter, given
    /// `∂L/∂ŷ` in meters. Skip connections route gradient into both the
    /// decoder branch and the encoder activation they read from.
    pub fn backward(&self, cache: &ForwardCache, grad_y: &Batch3) -> Result<GradStore> {
        let cfg = &self.config;
        let n = cfg.n_levels;
        let mut grads = self.new_grad_store();
        grad_y.expect_dims("Autoencoder::backward", cache.head.dims())?;

        let g_u = gamma_scale_backward(&cache.head, cfg.gamma, cfg.max_range, grad_y)?;
        let mut g = sigmoid_backward(&cache.head, &g_u)?;

        // slot index of the first decoder parameter
        let dec_base = 4 * n;
        let mut skip_grads: Vec<Option<Batch3>> = vec![None; n + 1];
        let mut slot = grads.len();
        for j in (0..n).rev() {
            let level = &self.decoder[j];
            if let Some(bn) = &level.bn {
                g = relu_backward(&cache.dec_pre[j], &g)?;
                let (g_in, g_bn) = batchnorm_backward(&cache.dec_bn[j], bn, &g)?;
                slot -= 2;
                grads.record(slot, &g_bn.scale);
                grads.record(slot + 1, &g_bn.shift);
                if cfg.skip_connections {
                    skip_grads[n - 1 - j] = Some(g_in.clone());
                }
                g = g_in;
            }
            let (g_in, g_conv) = tconv1d_backward(&cache.dec_in[j], &level.tconv, &g)?;
            slot -= 2;
            grads.record(slot, &g_conv.weights);
            grads.record(slot + 1, &g_conv.bias);
            g = g_in;
        }
        debug_assert_eq!(slot, dec_base);

        for i in (0..n).rev() {
            if let Some(extra) = &skip_grads[i + 1] {
                add_into(&mut g, extra);
            }
            let level = &self.encoder[i];
            g = relu_backward(&cache.enc_pre[i], &g)?;
            let (g_z, g_bn) = batchnorm_backward(&cache.enc_bn[i], &level.bn, &g)?;
            grads.record(4 * i + 2, &g_bn.scale);
            grads.record(4 * i + 3, &g_bn.shift);
            let (g_in, g_conv) = conv1d_backward(&cache.acts[i], &level.conv, &g_z)?;
            grads.record(4 * i, &g_conv.weights);
            grads.record(4 * i + 1, &g_conv.bias);
            g = g_in;
        }
        Ok(grads)
    }

    /// Runs the fixed-width network over a scan of any length `M ≥ 1` in
    /// consecutive windows of `n_points`. A trailing partial window is padded
    /// by repeating its last reading and the padding is trimmed from the
    /// output. Each window is predicted on its own, so full windows match a
    /// standalone prediction exactly.
    pub fn infer_chunked(&self, scan: &[f64]) -> Result<Vec<f64>> {
        let n = self.config.n_points;
        if scan.is_empty() {
            return Err(Error::shape("infer_chunked", "at least one reading", 0));
        }
        let mut out = Vec::with_capacity(scan.len());
        for window in scan.chunks(n) {
            if window.len() == n {
                out.extend(self.predict_scan(window)?);
            } else {
                let mut padded = window.to_vec();
                padded.resize(n, *window.last().expect("non-empty chunk"));
                let pred = self.predict_scan(&padded)?;
                out.extend_from_slice(&pred[..window.len()]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> AutoencoderConfig {
        AutoencoderConfig {
            n_points: 16,
            n_levels: 2,
            channels: vec![2, 4],
            ..AutoencoderConfig::default()
        }
    }

    fn scans(b: usize, n: usize, seed: u64) -> Batch3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Batch3::from_fn(b, 1, n, |_, _, _| rng.random_range(0.2..30.0))
    }

    #[test]
    fn default_geometry() {
        let cfg = AutoencoderConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.level_lengths(), vec![64, 32, 16, 8]);
        assert_eq!(cfg.latent_dim(), 512);
        assert_eq!((cfg.padding(), cfg.output_padding()), (2, 1));
    }

    #[test]
    fn divisibility_rule() {
        let mut cfg = AutoencoderConfig {
            n_points: 96,
            ..AutoencoderConfig::default()
        };
        assert!(Autoencoder::build(cfg.clone(), 0).is_ok());
        cfg.n_points = 100;
        assert!(matches!(
            Autoencoder::build(cfg, 0),
            Err(Error::InvalidConfig(_))
        ));
        let bad_channels = AutoencoderConfig {
            channels: vec![8, 16],
            ..AutoencoderConfig::default()
        };
        assert!(bad_channels.validate().is_err());
    }

    #[test]
    fn build_is_deterministic_and_mirrored() {
        let a = Autoencoder::build(AutoencoderConfig::default(), 42).unwrap();
        let b = Autoencoder::build(AutoencoderConfig::default(), 42).unwrap();
        let c = Autoencoder::build(AutoencoderConfig::default(), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let enc: Vec<usize> = a.encoder.iter().map(|l| l.conv.dims()[0]).collect();
        let dec: Vec<usize> = a.decoder.iter().map(|l| l.tconv.dims()[0]).collect();
        assert_eq!(enc, vec![8, 16, 32, 64]);
        assert_eq!(dec, vec![64, 32, 16, 8]);
        assert_eq!(a.decoder.last().unwrap().tconv.dims()[1], 1);
        assert!(a.decoder.last().unwrap().bn.is_none());
        assert_eq!(a.param_count(), b.param_count());
        assert_eq!(a.params().len(), a.new_grad_store().len());
    }

    #[test]
    fn output_shape_and_range() {
        let mut m = Autoencoder::build(AutoencoderConfig::default(), 1).unwrap();
        let x = scans(4, 128, 2);
        let (y, cache) = m.forward(&x).unwrap();
        assert_eq!(y.dims(), (4, 1, 128));
        assert!(y.data().iter().all(|&v| (0.0..=30.0).contains(&v)));
        assert_eq!(cache.latent().dims(), (4, 64, 8));
    }

    #[test]
    fn gamma_one_is_linear_head() {
        let cfg = AutoencoderConfig {
            gamma: 1.0,
            ..tiny()
        };
        let mut m = Autoencoder::build(cfg, 3).unwrap();
        let (y, cache) = m.forward(&scans(2, 16, 4)).unwrap();
        for (a, u) in y.data().iter().zip(cache.head().data()) {
            assert!((a - 30.0 * u).abs() < 1e-12);
        }
    }

    #[test]
    fn over_range_saturates_and_negative_is_rejected() {
        let m = Autoencoder::build(tiny(), 0).unwrap();
        let mut a = vec![30.0; 16];
        let b = m.predict_scan(&a).unwrap();
        a[3] = 1e6;
        a[5] = f64::INFINITY;
        assert_eq!(m.predict_scan(&a).unwrap(), b);
        a[0] = -0.5;
        assert!(matches!(m.predict_scan(&a), Err(Error::Domain(_))));
        assert!(m.predict_scan(&[1.0; 15]).is_err());
    }

    #[test]
    fn skip_changes_output() {
        let x = scans(2, 128, 9);
        let with = Autoencoder::build(AutoencoderConfig::default(), 5).unwrap();
        let mut without = with.clone();
        without.config.skip_connections = false;
        assert_ne!(with.predict(&x).unwrap(), without.predict(&x).unwrap());
    }

    #[test]
    fn predict_matches_eval_forward() {
        let mut m = Autoencoder::build(tiny(), 8).unwrap();
        let x = scans(3, 16, 1);
        m.forward(&x).unwrap(); // move running stats off their initial values
        m.set_mode(BnMode::Eval);
        let (y, _) = m.forward(&x).unwrap();
        assert_eq!(y, m.predict(&x).unwrap());
        assert_eq!(m.predict(&x).unwrap(), m.predict(&x).unwrap());
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_store() {
        let mut m = Autoencoder::build(tiny(), 2).unwrap();
        let (y, cache) = m.forward(&scans(2, 16, 3)).unwrap();
        let g = m
            .backward(&cache, &Batch3::zeros(y.batch(), 1, 16))
            .unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn chunked_lengths() {
        let m = Autoencoder::build(AutoencoderConfig::default(), 0).unwrap();
        for len in [1, 127, 128, 130, 720] {
            let scan: Vec<f64> = (0..len).map(|i| 1.0 + (i % 17) as f64).collect();
            assert_eq!(m.infer_chunked(&scan).unwrap().len(), len);
        }
        assert!(m.infer_chunked(&[]).is_err());
    }

    #[test]
    fn chunked_partial_window_uses_repeat_padding() {
        let m = Autoencoder::build(AutoencoderConfig::default(), 0).unwrap();
        let scan: Vec<f64> = (0..130).map(|i| 0.5 + (i as f64 * 0.37) % 20.0).collect();
        let out = m.infer_chunked(&scan).unwrap();
        assert_eq!(
            &out[..128],
            m.predict_scan(&scan[..128]).unwrap().as_slice()
        );
        let mut padded = scan[128..].to_vec();
        padded.resize(128, scan[129]);
        let tail = m.predict_scan(&padded).unwrap();
        assert_eq!(&out[128..], &tail[..2]);
    }
}
