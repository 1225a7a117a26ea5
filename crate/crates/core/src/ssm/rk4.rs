/// Reference integrator for the continuous system with a dense `A`.
///
/// Integrates `h' = A h + B x` with classical fourth-order Runge-Kutta,
/// holding `x` constant over each sample interval of length `delta`, and
/// samples `y = C h` at the end of every interval. `a` is row-major `H × H`.
pub fn simulate_continuous_rk4(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    x: &[f64],
    delta: f64,
    substeps: usize,
    h0: &[f64],
) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "A must be H×H");
    assert_eq!(c.len(), n);
    assert_eq!(h0.len(), n);
    let substeps = substeps.max(1);
    let dt = delta / substeps as f64;

    let deriv = |h: &[f64], u: f64, out: &mut [f64]| {
        for i in 0..n {
            let row = &a[i * n..(i + 1) * n];
            out[i] = row.iter().zip(h).map(|(aij, hj)| aij * hj).sum::<f64>() + b[i] * u;
        }
    };

    let mut h = h0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut out = Vec::with_capacity(x.len());
    for &u in x {
        for _ in 0..substeps {
            deriv(&h, u, &mut k1);
            for i in 0..n {
                tmp[i] = h[i] + 0.5 * dt * k1[i];
            }
            deriv(&tmp, u, &mut k2);
            for i in 0..n {
                tmp[i] = h[i] + 0.5 * dt * k2[i];
            }
            deriv(&tmp, u, &mut k3);
            for i in 0..n {
                tmp[i] = h[i] + dt * k3[i];
            }
            deriv(&tmp, u, &mut k4);
            for i in 0..n {
                h[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.push(c.iter().zip(&h).map(|(ci, hi)| ci * hi).sum());
    }
    out
}

/// Dense row-major matrix with `diag` on the diagonal.
pub fn diag_matrix(diag: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut m = vec![0.0; n * n];
    for (i, &d) in diag.iter().enumerate() {
        m[i * n + i] = d;
    }
    m
}
