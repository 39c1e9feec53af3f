use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Autoencoder, AutoencoderConfig};
use crate::neuralcore::{
    central_difference, relative_error, Batch3, GradCheckConfig, GradCheckReport,
};
use crate::Result;

const GAMMAS: [f64; 4] = [2.0, 1.0, 0.5, 4.0];

/// Groups whose gradient is below this fraction of the largest group are
/// compared against that floor instead of their own magnitude. Convolution
/// biases feeding a batch-statistics layer have an exactly zero gradient, so
/// their own scale is rounding noise.
pub const ZERO_GROUP_FLOOR: f64 = 1e-3;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Finite-difference check of the full autoencoder backward pass on small
/// random models (16 points, channels `[2, 4]`), alternating skip
/// connections and cycling γ. Each parameter tensor is one group.
pub fn gradient_check_model(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut report = GradCheckReport {
        subject: "autoencoder".to_string(),
        trials: cfg.trials,
        tolerance: cfg.tolerance,
        groups: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.trials {
        let config = AutoencoderConfig {
            n_points: 16,
            n_levels: 2,
            channels: vec![2, 4],
            skip_connections: trial % 2 == 0,
            gamma: GAMMAS[trial % GAMMAS.len()],
            ..AutoencoderConfig::default()
        };
        let mut model = Autoencoder::build(config, rng.random())?;
        let names: Vec<String> = model.params().into_iter().map(|(n, _)| n).collect();
        // Move BN affine parameters away from the identity initialization.
        for (name, p) in names.iter().zip(model.params_mut()) {
            if name.contains(".bn.") {
                p.iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
            }
        }
        let batch = 3;
        let x = Batch3::from_fn(batch, 1, 16, |_, _, _| rng.random_range(0.2..29.0));
        let r = Batch3::from_fn(batch, 1, 16, |_, _, _| rng.random_range(-1.0..1.0));
        let (_, cache) = model.forward(&x)?;
        let grads = model.backward(&cache, &r)?;
        let floor = ZERO_GROUP_FLOOR
            * (0..grads.len())
                .map(|i| max_abs(grads.slot(i)))
                .fold(0.0, f64::max);
        for (i, name) in names.iter().enumerate() {
            let theta = model.params()[i].1.to_vec();
            let numeric = central_difference(&theta, cfg.step, |v| {
                let mut probe = model.clone();
                probe.params_mut()[i].copy_from_slice(v);
                let (y, _) = probe.forward(&x).expect("input validated above");
                y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
            });
            let a = grads.slot(i);
            let scale = max_abs(a).max(max_abs(&numeric));
            let err = if scale < floor {
                max_abs_diff(a, &numeric) / floor
            } else {
                relative_error(a, &numeric)
            };
            report.update(name, err);
        }
    }
    Ok(report)
}
