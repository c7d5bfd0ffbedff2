use super::{Parameter, Scalar, TensorError};

/// RMSprop with the update
/// `s ← decay·s + (1 − decay)·g²`, `p ← p − lr·g / (√s + eps)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self { lr: 2e-4, decay: 0.9, eps: 1e-8 }
    }
}

impl RmsProp {
    /// Applies one update to every parameter and zeroes the gradients.
    /// Fails before touching anything if any parameter lacks a gradient.
    pub fn step<T: Scalar>(&self, params: &mut [Parameter<T>]) -> Result<(), TensorError> {
        if let Some(p) = params.iter().find(|p| p.tensor.grad().is_none()) {
            return Err(TensorError::MissingGrad { name: p.name.clone() });
        }
        let lr = T::lit(self.lr);
        let decay = T::lit(self.decay);
        let keep = T::one() - decay;
        let eps = T::lit(self.eps);
        for p in params.iter_mut() {
            let grad = p.tensor.grad().expect("checked above").to_vec();
            for ((w, s), &g) in p.tensor.data_mut().iter_mut().zip(p.mean_square.iter_mut()).zip(&grad) {
                *s = decay * *s + keep * g * g;
                *w -= lr * g / (s.sqrt() + eps);
            }
            p.tensor.zero_grad();
        }
        Ok(())
    }
}

/// Functional form of [`RmsProp::step`].
pub fn rmsprop_step<T: Scalar>(params: &mut [Parameter<T>], lr: f64, decay: f64, eps: f64) -> Result<(), TensorError> {
    RmsProp { lr, decay, eps }.step(params)
}
