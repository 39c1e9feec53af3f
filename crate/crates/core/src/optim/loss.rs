use serde::{Deserialize, Serialize};

use crate::neuralcore::Batch3;
use crate::{Error, Result};

fn check_pair(op: &'static str, pred: &[f64], target: &[f64], nonneg: bool) -> Result<()> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::shape(op, target.len(), pred.len()));
    }
    if let Some(v) = pred
        .iter()
        .chain(target)
        .find(|v| v.is_nan() || (nonneg && **v < 0.0))
    {
        return Err(Error::Domain(format!("{op}: invalid distance {v}")));
    }
    Ok(())
}

/// Root mean squared logarithmic error,
/// `sqrt( (1/N) Σ ln²((ŷ_i + 1) / (y_i + 1)) )`.
pub fn rmsle(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair("rmsle", pred, target, true)?;
    let n = pred.len() as f64;
    let sq: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let r = p.ln_1p() - t.ln_1p();
            r * r
        })
        .sum();
    Ok((sq / n).sqrt())
}

/// `∂L/∂ŷ_i = ln((ŷ_i + 1)/(y_i + 1)) / (N · L · (ŷ_i + 1))`; the zero vector
/// at `L = 0`.
pub fn rmsle_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    let loss = rmsle(pred, target)?;
    if loss == 0.0 {
        return Ok(vec![0.0; pred.len()]);
    }
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p.ln_1p() - t.ln_1p()) / (n * loss * (p + 1.0)))
        .collect())
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair("mse", pred, target, false)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

pub fn mse_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_pair("mse", pred, target, false)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Rmsle,
    Mse,
}

/// Mean over samples of the per-sample loss, and its gradient with respect
/// to `pred`. Both batches are `(B, 1, N)` in meters.
pub fn batch_loss(kind: LossKind, pred: &Batch3, target: &Batch3) -> Result<(f64, Batch3)> {
    target.expect_dims("batch_loss", pred.dims())?;
    let b_n = pred.batch();
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(pred.data().len());
    for b in 0..b_n {
        let (p, t) = (pred.sample(b), target.sample(b));
        let (l, g) = match kind {
            LossKind::Rmsle => (rmsle(p, t)?, rmsle_grad(p, t)?),
            LossKind::Mse => (mse(p, t)?, mse_grad(p, t)?),
        };
        total += l;
        grad.extend(g.into_iter().map(|v| v / b_n as f64));
    }
    let (b, c, l) = pred.dims();
    Ok((total / b_n as f64, Batch3::from_raw(b, c, l, grad)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn rmsle_closed_forms() {
        assert_eq!(rmsle(&[1.0, 7.0], &[1.0, 7.0]).unwrap(), 0.0);
        assert!((rmsle(&[E - 1.0], &[0.0]).unwrap() - 1.0).abs() < 1e-12);
        let v = rmsle(&[0.0, E * E - 1.0], &[0.0, 0.0]).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rmsle_rejects_negative_and_mismatched() {
        assert!(matches!(rmsle(&[-0.1], &[0.0]), Err(Error::Domain(_))));
        assert!(rmsle(&[0.1, 0.2], &[0.0]).is_err());
    }

    #[test]
    fn rmsle_grad_zero_at_optimum() {
        assert_eq!(
            rmsle_grad(&[2.0, 3.0], &[2.0, 3.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn mse_values() {
        assert_eq!(mse(&[3.0], &[1.0]).unwrap(), 4.0);
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_grad(&[3.0, 1.0], &[1.0, 1.0]).unwrap(), vec![2.0, 0.0]);
    }
}
