use crate::error::{Error, Result};
use crate::nn::ModelParams;
use crate::real::Real;

/// Parameter-shaped cotangents.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T>(ModelParams<T>);

impl<T: Real> Gradients<T> {
    pub fn zeros(like: &ModelParams<T>) -> Self {
        Self(like.zeros_like())
    }

    pub fn from_params(p: ModelParams<T>) -> Self {
        Self(p)
    }

    pub fn as_params(&self) -> &ModelParams<T> {
        &self.0
    }

    pub fn tensors(&self) -> Vec<(String, &[T])> {
        self.0.tensors()
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.0.to_flat()
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// Euclidean norm over every entry, accumulated in `f64`.
    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|v| v.lower() * v.lower())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        let c = T::lift(c);
        for t in self.0.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) -> Result<()> {
        let rhs = other.0.tensors();
        let mut lhs = self.0.tensors_mut();
        if lhs.len() != rhs.len() || lhs.iter().zip(&rhs).any(|(a, (_, b))| a.len() != b.len()) {
            return Err(Error::mismatch("gradient shapes differ"));
        }
        for (a, (_, b)) in lhs.iter_mut().zip(rhs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        Ok(())
    }
}
