use super::{zoh_phi_partials, zoh_transition, DiscretizedSsm, SsmState};
use crate::error::{Error, Result};

/// One recurrence step: `h_t = Ā ⊙ h_{t−1} + B̄·x_t`, `y_t = C·h_t`.
pub fn ssm_step(
    disc: &DiscretizedSsm,
    state: &SsmState,
    x_t: f64,
    c: &[f64],
) -> Result<(SsmState, f64)> {
    let n = disc.state_dim();
    if state.h.len() != n || c.len() != n || disc.b_bar.len() != n {
        return Err(Error::mismatch(format!(
            "state dim {n}, h has {}, C has {}",
            state.h.len(),
            c.len()
        )));
    }
    let mut h = Vec::with_capacity(n);
    let mut y = 0.0;
    for i in 0..n {
        let hi = disc.a_bar[i] * state.h[i] + disc.b_bar[i] * x_t;
        y += c[i] * hi;
        h.push(hi);
    }
    Ok((SsmState { h, t: state.t + 1 }, y))
}

/// Time-invariant scan over a whole sequence starting from `h0`.
pub fn ssm_scan_lti(
    disc: &DiscretizedSsm,
    c: &[f64],
    x: &[f64],
    h0: &SsmState,
) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::empty("ssm_scan_lti needs at least one sample"));
    }
    let n = disc.state_dim();
    if h0.h.len() != n || c.len() != n || disc.b_bar.len() != n {
        return Err(Error::mismatch("ssm_scan_lti: inconsistent state dimension"));
    }
    let mut h = h0.h.clone();
    let out = x
        .iter()
        .map(|&xt| {
            let mut y = 0.0;
            for i in 0..n {
                h[i] = disc.a_bar[i] * h[i] + disc.b_bar[i] * xt;
                y += c[i] * h[i];
            }
            y
        })
        .collect();
    Ok(out)
}

/// Per-step `Δ_t`, `B_t`, `C_t` of the selective mechanism.
///
/// `b` and `c` are row-major `T × H`.
#[derive(Debug, Clone, Copy)]
pub struct SelectiveInputs<'a> {
    delta: &'a [f64],
    b: &'a [f64],
    c: &'a [f64],
    state_dim: usize,
}

impl<'a> SelectiveInputs<'a> {
    pub fn new(delta: &'a [f64], b: &'a [f64], c: &'a [f64], state_dim: usize) -> Result<Self> {
        let t = delta.len();
        if state_dim == 0 {
            return Err(Error::invalid("state dimension must be at least 1"));
        }
        if b.len() != t * state_dim || c.len() != t * state_dim {
            return Err(Error::mismatch(format!(
                "selective inputs: {t} steps × {state_dim} states, but B has {} and C has {}",
                b.len(),
                c.len()
            )));
        }
        if let Some(i) = delta.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::invalid(format!(
                "step size at t={i} must be positive, got {}",
                delta[i]
            )));
        }
        Ok(Self {
            delta,
            b,
            c,
            state_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn delta(&self) -> &'a [f64] {
        self.delta
    }

    pub fn b_row(&self, t: usize) -> &'a [f64] {
        &self.b[t * self.state_dim..(t + 1) * self.state_dim]
    }

    pub fn c_row(&self, t: usize) -> &'a [f64] {
        &self.c[t * self.state_dim..(t + 1) * self.state_dim]
    }
}

fn check_selective(x: &[f64], sel: &SelectiveInputs<'_>, a: &[f64]) -> Result<()> {
    if x.len() != sel.len() {
        return Err(Error::mismatch(format!(
            "input has {} samples but selective inputs have {}",
            x.len(),
            sel.len()
        )));
    }
    if a.len() != sel.state_dim() {
        return Err(Error::mismatch(format!(
            "A has {} entries, state dim is {}",
            a.len(),
            sel.state_dim()
        )));
    }
    Ok(())
}

/// Selective scan from a zero state.
pub fn selective_scan(x: &[f64], sel: &SelectiveInputs<'_>, a: &[f64]) -> Result<Vec<f64>> {
    selective_scan_from(x, sel, a, &SsmState::zeros(a.len()))
}

/// Selective scan: at every step the pair `(Ā_t, B̄_t)` is rediscretized from
/// `(Δ_t, A, B_t)` before the recurrence update, and the output uses `C_t`.
pub fn selective_scan_from(
    x: &[f64],
    sel: &SelectiveInputs<'_>,
    a: &[f64],
    h0: &SsmState,
) -> Result<Vec<f64>> {
    check_selective(x, sel, a)?;
    if h0.h.len() != a.len() {
        return Err(Error::mismatch("initial state has the wrong dimension"));
    }
    let mut h = h0.h.clone();
    let mut out = Vec::with_capacity(x.len());
    for (t, &xt) in x.iter().enumerate() {
        let delta = sel.delta[t];
        let b = sel.b_row(t);
        let c = sel.c_row(t);
        let mut y = 0.0;
        for i in 0..h.len() {
            let (a_bar, phi) = zoh_transition(delta, a[i]);
            h[i] = a_bar * h[i] + (phi * b[i]) * xt;
            y += c[i] * h[i];
        }
        out.push(y);
    }
    Ok(out)
}

/// Cotangents of [`selective_scan`] inputs for an output cotangent `dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrads {
    pub dx: Vec<f64>,
    pub ddelta: Vec<f64>,
    /// Row-major `T × H`.
    pub db: Vec<f64>,
    /// Row-major `T × H`.
    pub dc: Vec<f64>,
    pub da: Vec<f64>,
}

/// Reverse-mode pass through the selective scan (zero initial state).
///
/// The forward states are recomputed and stored, then the state adjoint is
/// accumulated backwards in time. Gradients flow into `Δ_t` and `A` both
/// through `Ā = exp(ΔA)` and through the input map `B̄ = φ(Δ, A)·B`.
pub fn selective_scan_vjp(
    x: &[f64],
    sel: &SelectiveInputs<'_>,
    a: &[f64],
    dy: &[f64],
) -> Result<ScanGrads> {
    check_selective(x, sel, a)?;
    if dy.len() != x.len() {
        return Err(Error::mismatch("output cotangent length differs from input"));
    }
    let n = a.len();
    let len = x.len();

    // hs[t] holds h_t; a row of zeros stands in for h_{-1}.
    let mut hs = vec![0.0; (len + 1) * n];
    let mut a_bars = vec![0.0; len * n];
    let mut phis = vec![0.0; len * n];
    for t in 0..len {
        let delta = sel.delta[t];
        let b = sel.b_row(t);
        let (prev, cur) = hs[t * n..(t + 2) * n].split_at_mut(n);
        for i in 0..n {
            let (a_bar, phi) = zoh_transition(delta, a[i]);
            a_bars[t * n + i] = a_bar;
            phis[t * n + i] = phi;
            cur[i] = a_bar * prev[i] + (phi * b[i]) * x[t];
        }
    }

    let mut grads = ScanGrads {
        dx: vec![0.0; len],
        ddelta: vec![0.0; len],
        db: vec![0.0; len * n],
        dc: vec![0.0; len * n],
        da: vec![0.0; n],
    };
    let mut dh = vec![0.0; n];
    for t in (0..len).rev() {
        let delta = sel.delta[t];
        let b = sel.b_row(t);
        let c = sel.c_row(t);
        let h_prev = &hs[t * n..(t + 1) * n];
        let h_cur = &hs[(t + 1) * n..(t + 2) * n];
        let mut dx = 0.0;
        let mut ddelta = 0.0;
        for i in 0..n {
            grads.dc[t * n + i] = h_cur[i] * dy[t];
            let g = dh[i] + c[i] * dy[t];
            let a_bar = a_bars[t * n + i];
            let phi = phis[t * n + i];

            dx += g * phi * b[i];
            grads.db[t * n + i] = g * phi * x[t];

            // through Ā = exp(ΔA)
            let d_abar = g * h_prev[i];
            ddelta += d_abar * a[i] * a_bar;
            grads.da[i] += d_abar * delta * a_bar;

            // through B̄ = φ(Δ, A)·B
            let d_phi = g * b[i] * x[t];
            let (dphi_ddelta, dphi_da) = zoh_phi_partials(delta, a[i], a_bar);
            ddelta += d_phi * dphi_ddelta;
            grads.da[i] += d_phi * dphi_da;

            dh[i] = g * a_bar;
        }
        grads.dx[t] = dx;
        grads.ddelta[t] = ddelta;
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssm::{discretize_zoh, SsmParams};

    #[test]
    fn zero_state_step_is_the_input_map() {
        let p = SsmParams::new(vec![-1.0, -0.3], vec![0.5, 2.0], vec![1.0, -1.0], 0.2).unwrap();
        let d = discretize_zoh(&p).unwrap();
        let (s, y) = ssm_step(&d, &SsmState::zeros(2), 3.0, p.c()).unwrap();
        assert_eq!(s.h, vec![d.b_bar[0] * 3.0, d.b_bar[1] * 3.0]);
        assert_eq!(s.t, 1);
        let cb: f64 = p.c().iter().zip(&d.b_bar).map(|(c, b)| c * b).sum();
        assert!((y - cb * 3.0).abs() < 1e-15);
    }

    #[test]
    fn integrator_accumulates() {
        let d = DiscretizedSsm {
            a_bar: vec![1.0],
            b_bar: vec![1.0],
        };
        let y = ssm_scan_lti(&d, &[1.0], &[1.0; 6], &SsmState::zeros(1)).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn homogeneous_response_decays_geometrically() {
        let p = SsmParams::new(vec![-0.4, -1.7], vec![1.0, 1.0], vec![0.3, 2.0], 0.5).unwrap();
        let d = discretize_zoh(&p).unwrap();
        let y = ssm_scan_lti(&d, p.c(), &[0.0; 10], &SsmState::basis(2, 1)).unwrap();
        for (t, yt) in y.iter().enumerate() {
            let expect = 2.0 * d.a_bar[1].powi(t as i32 + 1);
            assert!((yt - expect).abs() < 1e-14 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn scan_equals_folded_steps() {
        let p = SsmParams::new(vec![-0.4, -1.7, -0.9], vec![1.0, -0.5, 0.2], vec![0.3, 2.0, 1.0], 0.05)
            .unwrap();
        let d = discretize_zoh(&p).unwrap();
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let scan = ssm_scan_lti(&d, p.c(), &x, &SsmState::zeros(3)).unwrap();
        let mut s = SsmState::zeros(3);
        for (t, &xt) in x.iter().enumerate() {
            let (next, y) = ssm_step(&d, &s, xt, p.c()).unwrap();
            assert_eq!(y, scan[t]);
            s = next;
        }
        assert_eq!(s.t, 20);
    }

    #[test]
    fn empty_and_mismatched_inputs_are_rejected() {
        let d = DiscretizedSsm {
            a_bar: vec![0.5],
            b_bar: vec![1.0],
        };
        assert!(matches!(
            ssm_scan_lti(&d, &[1.0], &[], &SsmState::zeros(1)),
            Err(Error::EmptyInput(_))
        ));
        assert!(ssm_step(&d, &SsmState::zeros(2), 1.0, &[1.0]).is_err());
        assert!(SelectiveInputs::new(&[0.1, 0.0], &[1.0, 1.0], &[1.0, 1.0], 1).is_err());
        assert!(SelectiveInputs::new(&[0.1, -0.2], &[1.0, 1.0], &[1.0, 1.0], 1).is_err());
        assert!(SelectiveInputs::new(&[0.1], &[1.0, 1.0], &[1.0], 1).is_err());
    }

    #[test]
    fn large_step_forgets_history() {
        let len = 8;
        let delta = vec![1e4; len];
        let b = vec![1.0; len];
        let c = vec![1.0; len];
        let sel = SelectiveInputs::new(&delta, &b, &c, 1).unwrap();
        let x: Vec<f64> = (0..len).map(|i| (i + 1) as f64).collect();
        let y = selective_scan(&x, &sel, &[-2.0]).unwrap();
        // Ā ≈ 0 and B̄ → -B/A = 0.5, so y_t = 0.5·x_t.
        for (yt, xt) in y.iter().zip(&x) {
            assert!((yt - 0.5 * xt).abs() < 1e-12);
        }
    }
}
