use super::DiscretizedSsm;
use crate::error::{Error, Result};

/// Unrolled convolution kernel `(C·B̄, C·Ā·B̄, …, C·Ā^k·B̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmKernel {
    pub coeffs: Vec<f64>,
}

impl SsmKernel {
    /// Highest kernel index `k`; there are `k + 1` coefficients.
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Unroll a time-invariant system into its first `k + 1` impulse-response taps.
pub fn unroll_kernel(disc: &DiscretizedSsm, c: &[f64], k: usize) -> Result<SsmKernel> {
    let n = disc.state_dim();
    if c.len() != n || disc.b_bar.len() != n {
        return Err(Error::mismatch("unroll_kernel: inconsistent state dimension"));
    }
    // powers[i] tracks Ā_i^j·B̄_i
    let mut powers: Vec<f64> = disc.b_bar.clone();
    let mut coeffs = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        coeffs.push(c.iter().zip(&powers).map(|(ci, pi)| ci * pi).sum());
        for (p, a) in powers.iter_mut().zip(&disc.a_bar) {
            *p *= a;
        }
    }
    Ok(SsmKernel { coeffs })
}

/// Causal convolution `y_t = Σ_{j ≤ min(t, k)} K_j·x_{t−j}`.
pub fn apply_kernel(x: &[f64], kernel: &SsmKernel) -> Result<Vec<f64>> {
    if kernel.coeffs.is_empty() {
        return Err(Error::empty("apply_kernel needs a non-empty kernel"));
    }
    let k = kernel.coeffs.len();
    Ok((0..x.len())
        .map(|t| {
            let taps = k.min(t + 1);
            (0..taps).map(|j| kernel.coeffs[j] * x[t - j]).sum()
        })
        .collect())
}
