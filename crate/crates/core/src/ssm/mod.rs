//! Diagonal state-space model mathematics.
//!
//! The continuous system `h'(t) = A h(t) + B x(t)`, `y(t) = C h(t)` is
//! discretized with a zero-order hold and evaluated either as a recurrence
//! (`ssm_step`, `ssm_scan_lti`), as a causal convolution with the unrolled
//! kernel (`unroll_kernel`, `apply_kernel`), or, when the step size and the
//! input/output maps vary per time step, with `selective_scan`.
//!
//! `A` is diagonal throughout (`H` values). The only dense-`A` code path is
//! the Runge-Kutta reference integrator in [`rk4`], which exists to check the
//! discrete routes against the continuous dynamics.
//!
//! All arithmetic here is `f64`.

mod kernel;
mod rk4;
mod scan;

use rand::Rng;

use crate::error::{Error, Result};

pub use kernel::{apply_kernel, unroll_kernel, SsmKernel};
pub use rk4::{diag_matrix, simulate_continuous_rk4};
pub use scan::{
    selective_scan, selective_scan_from, selective_scan_vjp, ssm_scan_lti, ssm_step, ScanGrads,
    SelectiveInputs,
};

/// Below this `|Δ·A|` the input map uses a truncated Taylor series instead
/// of `(e^z - 1) / z`.
pub const SMALL_ARG: f64 = 1e-4;

/// Continuous parameters of a diagonal SSM.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmParams {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    delta: f64,
}

impl SsmParams {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, delta: f64) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("state dimension must be at least 1"));
        }
        if b.len() != a.len() || c.len() != a.len() {
            return Err(Error::mismatch(format!(
                "A has {} entries, B {}, C {}",
                a.len(),
                b.len(),
                c.len()
            )));
        }
        if a.iter().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::invalid("SSM parameters must be finite"));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid(format!("step size must be positive, got {delta}")));
        }
        Ok(Self { a, b, c, delta })
    }

    /// Random system with `A` entries drawn from `(a_lo, a_hi)` (both
    /// negative), and `B`, `C` entries from `(-1, 1)`.
    pub fn random_stable<R: Rng + ?Sized>(
        state_dim: usize,
        a_range: (f64, f64),
        delta: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let (lo, hi) = a_range;
        if !(lo < hi && hi < 0.0) {
            return Err(Error::invalid("stable A range must lie strictly below zero"));
        }
        let a = (0..state_dim).map(|_| rng.random_range(lo..hi)).collect();
        let b = (0..state_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = (0..state_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self::new(a, b, c, delta)
    }

    pub fn state_dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_stable(&self) -> bool {
        self.a.iter().all(|&a| a < 0.0)
    }
}

/// Hidden state plus the index of the last consumed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmState {
    pub h: Vec<f64>,
    pub t: usize,
}

impl SsmState {
    pub fn zeros(state_dim: usize) -> Self {
        Self {
            h: vec![0.0; state_dim],
            t: 0,
        }
    }

    /// State with a single unit entry, used for homogeneous responses.
    pub fn basis(state_dim: usize, i: usize) -> Self {
        let mut h = vec![0.0; state_dim];
        h[i] = 1.0;
        Self { h, t: 0 }
    }
}

/// Zero-order-hold discretization `(Ā, B̄)` of a diagonal system.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedSsm {
    pub a_bar: Vec<f64>,
    pub b_bar: Vec<f64>,
}

impl DiscretizedSsm {
    pub fn state_dim(&self) -> usize {
        self.a_bar.len()
    }
}

/// `(exp(Δa), (Δa)⁻¹(exp(Δa) − 1)·Δb)` for one diagonal entry.
///
/// Every scan in this module goes through this function so that the LTI and
/// selective paths share their arithmetic exactly.
#[inline]
pub(crate) fn zoh_entry(delta: f64, a: f64, b: f64) -> (f64, f64) {
    let (a_bar, phi) = zoh_transition(delta, a);
    (a_bar, phi * b)
}

/// `(exp(Δa), φ)` with `φ = (exp(Δa) − 1) / a`, so that `b̄ = φ·b`.
#[inline]
pub(crate) fn zoh_transition(delta: f64, a: f64) -> (f64, f64) {
    let z = delta * a;
    let a_bar = z.exp();
    let phi = if z.abs() < SMALL_ARG {
        delta * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))
    } else {
        (a_bar - 1.0) / z * delta
    };
    (a_bar, phi)
}

/// Partial derivatives `(∂φ/∂Δ, ∂φ/∂a)` of `φ(Δ, a) = (exp(Δa) − 1) / a`.
#[inline]
pub(crate) fn zoh_phi_partials(delta: f64, a: f64, a_bar: f64) -> (f64, f64) {
    let z = delta * a;
    // dφ/da = Δ² g'(z) with g(z) = (e^z − 1)/z
    let g_prime = if z.abs() < 1e-3 {
        0.5 + z * (1.0 / 3.0 + z * (1.0 / 8.0 + z * (1.0 / 30.0 + z / 144.0)))
    } else {
        (z * a_bar - a_bar + 1.0) / (z * z)
    };
    (a_bar, delta * delta * g_prime)
}

/// Discretize a diagonal SSM with a zero-order hold.
pub fn discretize_zoh(params: &SsmParams) -> Result<DiscretizedSsm> {
    let delta = params.delta;
    let (a_bar, b_bar) = params
        .a
        .iter()
        .zip(&params.b)
        .map(|(&a, &b)| zoh_entry(delta, a, b))
        .unzip::<_, _, Vec<f64>, Vec<f64>>();
    if a_bar.iter().chain(&b_bar).any(|v| !v.is_finite()) {
        return Err(Error::non_finite("discretize_zoh"));
    }
    Ok(DiscretizedSsm { a_bar, b_bar })
}
