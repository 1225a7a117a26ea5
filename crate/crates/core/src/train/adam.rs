use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelParams;
use crate::real::Real;

use super::Gradients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// First and second moments, kept in `f64` regardless of parameter precision.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new<T: Real>(params: &ModelParams<T>, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let n = params.to_flat().len();
        Ok(Self {
            config,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        })
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }
}

/// Rescale `g` so its global norm is at most `max_norm`; returns whether it
/// was rescaled. A non-positive `max_norm` disables clipping.
pub fn clip_global_norm<T: Real>(g: &mut Gradients<T>, max_norm: f64) -> bool {
    if max_norm <= 0.0 {
        return false;
    }
    let norm = g.global_norm();
    if norm > max_norm {
        g.scale(max_norm / norm);
        true
    } else {
        false
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<T: Real>(params: &mut ModelParams<T>, grads: &Gradients<T>, state: &mut AdamState) -> Result<()> {
    let g = grads.to_flat();
    if g.len() != state.m.len() {
        return Err(Error::mismatch("optimizer state does not match the parameters"));
    }
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    state.step += 1;
    let c1 = 1.0 - beta1.powi(state.step as i32);
    let c2 = 1.0 - beta2.powi(state.step as i32);
    let mut i = 0;
    for t in params.tensors_mut() {
        for p in t.iter_mut() {
            let gi = g[i].lower();
            let m = beta1 * state.m[i] + (1.0 - beta1) * gi;
            let v = beta2 * state.v[i] + (1.0 - beta2) * gi * gi;
            state.m[i] = m;
            state.v[i] = v;
            let update = lr * (m / c1) / ((v / c2).sqrt() + eps);
            if update != 0.0 {
                *p = T::lift(p.lower() - update);
                if !p.is_finite() {
                    return Err(Error::non_finite("optimizer update"));
                }
            }
            i += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelConfig;

    fn setup() -> (ModelParams<f64>, AdamState) {
        let p = ModelParams::init(ModelConfig::tiny(3)).unwrap();
        let s = AdamState::new(&p, AdamConfig::default()).unwrap();
        (p, s)
    }

    #[test]
    fn zero_gradient_keeps_parameters_and_decays_moments() {
        let (mut p, mut s) = setup();
        let before = p.clone();
        let zero = Gradients::zeros(&p);
        adam_step(&mut p, &zero, &mut s).unwrap();
        assert_eq!(p, before);

        let mut ones = p.clone();
        ones.tensors_mut().into_iter().for_each(|t| t.fill(1.0));
        let ones = Gradients::from_params(ones);
        adam_step(&mut p, &ones, &mut s).unwrap();
        let (m1, v1) = (s.first_moment().to_vec(), s.second_moment().to_vec());
        adam_step(&mut p, &zero, &mut s).unwrap();
        for i in 0..m1.len() {
            assert!((s.first_moment()[i] - 0.9 * m1[i]).abs() < 1e-15);
            assert!((s.second_moment()[i] - 0.999 * v1[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_gradient_step_approaches_learning_rate() {
        let (mut p, mut s) = setup();
        let mut g = p.clone();
        for (k, t) in g.tensors_mut().into_iter().enumerate() {
            t.fill(if k % 2 == 0 { 0.37 } else { -2.5 });
        }
        let g = Gradients::from_params(g);
        for _ in 0..2000 {
            adam_step(&mut p, &g, &mut s).unwrap();
        }
        let before = p.to_flat();
        adam_step(&mut p, &g, &mut s).unwrap();
        for ((a, b), gi) in p.to_flat().iter().zip(before).zip(g.to_flat()) {
            let step = b - a;
            assert!((step.abs() - 1e-3).abs() < 1e-3 * 1e-6, "{step}");
            assert_eq!(step.signum(), gi.signum());
        }
    }

    #[test]
    fn clipping_caps_the_norm() {
        let (p, _) = setup();
        let mut g = p.clone();
        g.tensors_mut().into_iter().for_each(|t| t.fill(3.0));
        let mut g = Gradients::from_params(g);
        assert!(clip_global_norm(&mut g, 1.0));
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
        assert!(!clip_global_norm(&mut g, 2.0));
        assert!(!clip_global_norm(&mut g, 0.0));
    }

    #[test]
    fn rejects_bad_settings() {
        let p = ModelParams::<f64>::init(ModelConfig::tiny(0)).unwrap();
        for c in [
            AdamConfig { lr: -1.0, ..Default::default() },
            AdamConfig { beta1: 1.0, ..Default::default() },
            AdamConfig { eps: 0.0, ..Default::default() },
        ] {
            assert!(AdamState::new(&p, c).is_err());
        }
    }
}
