use super::tensor::Batch3;
use crate::{Error, Result};

/// Inputs to the gamma head may stray this far outside `[0, 1]` (rounding)
/// before being rejected; they are clamped back into range.
pub const GAMMA_DOMAIN_TOLERANCE: f64 = 1e-9;

/// Smallest base used by [`gamma_scale_backward`] when `gamma < 1`, where the
/// derivative is unbounded at zero.
pub const GAMMA_MIN_BASE: f64 = 1e-9;

pub fn relu_forward(input: &Batch3) -> Batch3 {
    input.map(|v| v.max(0.0))
}

/// Gradient is masked wherever the forward input was `≤ 0`.
pub fn relu_backward(input: &Batch3, grad_out: &Batch3) -> Result<Batch3> {
    grad_out.expect_dims("relu_backward", input.dims())?;
    let mut g = grad_out.clone();
    for (g, &x) in g.data_mut().iter_mut().zip(input.data()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    Ok(g)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_forward(input: &Batch3) -> Batch3 {
    input.map(sigmoid)
}

/// Takes the forward *output* `σ(x)`.
pub fn sigmoid_backward(output: &Batch3, grad_out: &Batch3) -> Result<Batch3> {
    grad_out.expect_dims("sigmoid_backward", output.dims())?;
    let mut g = grad_out.clone();
    for (g, &s) in g.data_mut().iter_mut().zip(output.data()) {
        *g *= s * (1.0 - s);
    }
    Ok(g)
}

fn check_gamma(gamma: f64, range: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::Domain(format!(
            "range s must be positive, got {range}"
        )));
    }
    Ok(())
}

/// `ŷ = s·u^γ` elementwise. Output lies in `[0, s]`.
pub fn gamma_scale_forward(u: &Batch3, gamma: f64, range: f64) -> Result<Batch3> {
    check_gamma(gamma, range)?;
    if let Some(&bad) = u
        .data()
        .iter()
        .find(|&&v| !(-GAMMA_DOMAIN_TOLERANCE..=1.0 + GAMMA_DOMAIN_TOLERANCE).contains(&v))
    {
        return Err(Error::Domain(format!(
            "gamma head input {bad} outside [0, 1]"
        )));
    }
    Ok(u.map(|v| range * v.clamp(0.0, 1.0).powf(gamma)))
}

/// `∂ŷ/∂u = s·γ·u^(γ−1)`. At `u = 0` the limit is used for `γ ≥ 1`; for
/// `γ < 1` the base is clamped to [`GAMMA_MIN_BASE`].
pub fn gamma_scale_backward(
    u: &Batch3,
    gamma: f64,
    range: f64,
    grad_out: &Batch3,
) -> Result<Batch3> {
    check_gamma(gamma, range)?;
    grad_out.expect_dims("gamma_scale_backward", u.dims())?;
    let mut g = grad_out.clone();
    for (g, &v) in g.data_mut().iter_mut().zip(u.data()) {
        let v = v.clamp(0.0, 1.0);
        let slope = if gamma == 1.0 {
            range
        } else if gamma > 1.0 {
            range * gamma * v.powf(gamma - 1.0)
        } else {
            range * gamma * v.max(GAMMA_MIN_BASE).powf(gamma - 1.0)
        };
        *g *= slope;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[f64]) -> Batch3 {
        Batch3::new(1, 1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn relu_values_and_mask() {
        let x = b(&[-1.0, 0.0, 2.0]);
        assert_eq!(relu_forward(&x).data(), &[0.0, 0.0, 2.0]);
        let g = relu_backward(&x, &b(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn sigmoid_values() {
        let y = sigmoid_forward(&b(&[0.0, 800.0, -800.0]));
        assert_eq!(y.data(), &[0.5, 1.0, 0.0]);
        let g = sigmoid_backward(&b(&[0.5]), &b(&[2.0])).unwrap();
        assert_eq!(g.data(), &[0.5]);
    }

    #[test]
    fn gamma_closed_forms() {
        assert_eq!(
            gamma_scale_forward(&b(&[0.5]), 2.0, 30.0).unwrap().data(),
            &[7.5]
        );
        let u = b(&[0.0, 0.1, 0.37, 1.0]);
        let y = gamma_scale_forward(&u, 1.0, 30.0).unwrap();
        for (a, v) in y.data().iter().zip(u.data()) {
            assert!((a - 30.0 * v).abs() < 1e-12);
        }
        for gamma in [0.5, 1.0, 2.0, 4.0] {
            let y = gamma_scale_forward(&b(&[0.0, 1.0]), gamma, 30.0).unwrap();
            assert_eq!(y.data(), &[0.0, 30.0]);
        }
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(gamma_scale_forward(&b(&[1.1]), 2.0, 30.0).is_err());
        assert!(gamma_scale_forward(&b(&[-1e-6]), 2.0, 30.0).is_err());
        assert!(gamma_scale_forward(&b(&[1.0 + 1e-12]), 2.0, 30.0).is_ok());
        assert!(gamma_scale_forward(&b(&[0.5]), 0.0, 30.0).is_err());
        assert!(gamma_scale_forward(&b(&[0.5]), 2.0, -1.0).is_err());
    }

    #[test]
    fn gamma_derivative_closed_forms() {
        let g = gamma_scale_backward(&b(&[0.5]), 2.0, 30.0, &b(&[1.0])).unwrap();
        assert_eq!(g.data(), &[30.0]);
        let g = gamma_scale_backward(&b(&[0.0, 0.3, 1.0]), 1.0, 30.0, &b(&[1.0; 3])).unwrap();
        assert_eq!(g.data(), &[30.0; 3]);
        let g = gamma_scale_backward(&b(&[0.0]), 2.0, 30.0, &b(&[1.0])).unwrap();
        assert_eq!(g.data(), &[0.0]);
        let g = gamma_scale_backward(&b(&[0.0]), 0.5, 30.0, &b(&[1.0])).unwrap();
        assert!(g.data()[0].is_finite() && g.data()[0] > 0.0);
    }
}
