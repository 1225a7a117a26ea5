use crate::error::Result;
use crate::nn::ModelParams;

use super::{mse_loss, Gradients};

/// Sixth-order central differences of the loss with respect to every
/// parameter:
/// `(45(L₊₁ − L₋₁) − 9(L₊₂ − L₋₂) + (L₊₃ − L₋₃)) / 60ε` with `L₊ₖ = L(θ + kε)`.
pub fn finite_difference_grad(
    x: &[f64],
    target: &[f64],
    params: &ModelParams<f64>,
    eps: f64,
) -> Result<Gradients<f64>> {
    let base = params.to_flat();
    let mut work = params.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut probe = base.clone();
    let mut loss_at = |probe: &mut Vec<f64>, i: usize, h: f64| -> Result<f64> {
        probe[i] = base[i] + h;
        work.assign_flat(probe)?;
        let l = mse_loss(&work.forward(x)?, target);
        probe[i] = base[i];
        l
    };
    for i in 0..base.len() {
        let mut diff = |k: f64| -> Result<f64> {
            Ok(loss_at(&mut probe, i, k * eps)? - loss_at(&mut probe, i, -k * eps)?)
        };
        let (d1, d2, d3) = (diff(1.0)?, diff(2.0)?, diff(3.0)?);
        out.push((45.0 * d1 - 9.0 * d2 + d3) / (60.0 * eps));
    }
    let mut g = params.clone();
    g.assign_flat(&out)?;
    Ok(Gradients::from_params(g))
}

/// Largest entry-wise discrepancy between analytic and numeric gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub worst: String,
    pub checked: usize,
}

/// Compare [`super::backward`] with [`finite_difference_grad`]. The relative
/// error of each entry is `|a − b| / max(|a|, |b|, floor)`; the floor stops
/// entries near zero, where differencing is dominated by rounding, from
/// dominating the comparison.
pub fn gradient_check(
    x: &[f64],
    target: &[f64],
    params: &ModelParams<f64>,
    eps: f64,
    floor: f64,
) -> Result<GradCheck> {
    let (_, analytic) = super::backward(x, target, params)?;
    let numeric = finite_difference_grad(x, target, params, eps)?;
    let mut out = GradCheck {
        max_rel_err: 0.0,
        worst: String::new(),
        checked: 0,
    };
    for ((name, a), (_, b)) in analytic.tensors().into_iter().zip(numeric.tensors()) {
        for (i, (u, v)) in a.iter().zip(b).enumerate() {
            let rel = (u - v).abs() / u.abs().max(v.abs()).max(floor);
            out.checked += 1;
            if rel > out.max_rel_err || out.worst.is_empty() {
                out.max_rel_err = rel.max(out.max_rel_err);
                out.worst = format!("{name}[{i}]: {u:e} vs {v:e}");
            }
        }
    }
    Ok(out)
}
