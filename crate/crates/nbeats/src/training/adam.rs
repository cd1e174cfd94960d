//! Adam with bias correction.

use crate::tensor::{Scalar, Tensor};

/// Optimizer state: first/second moment per parameter tensor plus the step
/// counter for bias correction.
pub struct Adam<T: Scalar> {
    beta1: T,
    beta2: T,
    eps: T,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new() -> Self {
        Adam {
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            eps: T::from_f64(1e-8),
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    /// One update over all parameters. Moment buffers are allocated on the
    /// first call; parameter order must stay fixed across calls.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>], lr: f64) {
        debug_assert_eq!(params.len(), grads.len());
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            self.v = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        let lr = T::from_f64(lr);
        let one = T::one();
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            debug_assert_eq!(p.shape(), g.shape());
            let pd = p.data_mut();
            let md = m.data_mut();
            let vd = v.data_mut();
            for i in 0..pd.len() {
                let gi = g.data()[i];
                md[i] = self.beta1 * md[i] + (one - self.beta1) * gi;
                vd[i] = self.beta2 * vd[i] + (one - self.beta2) * gi * gi;
                let m_hat = md[i] / bc1;
                let v_hat = vd[i] / bc2;
                pd[i] = pd[i] - lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

impl<T: Scalar> Default for Adam<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = Tensor::<f64>::from_f64(&[2], &[1.5, -2.5]).unwrap();
        let g = Tensor::zeros(&[2]);
        let mut adam = Adam::new();
        adam.step(&mut [&mut p], &[g], 1e-3);
        assert_eq!(p.data(), &[1.5, -2.5]);
    }

    #[test]
    fn first_step_is_minus_lr_times_sign() {
        // With bias correction the first update is -lr * g / (|g| + eps).
        let mut p = Tensor::<f64>::from_f64(&[2], &[0.0, 0.0]).unwrap();
        let g = Tensor::from_f64(&[2], &[0.5, -0.25]).unwrap();
        let mut adam = Adam::new();
        adam.step(&mut [&mut p], &[g], 1e-3);
        assert!((p.data()[0] + 1e-3).abs() < 1e-9, "{}", p.data()[0]);
        assert!((p.data()[1] - 1e-3).abs() < 1e-9, "{}", p.data()[1]);
    }

    #[test]
    fn equal_gradients_update_equally() {
        let mut a = Tensor::<f64>::from_f64(&[1], &[1.0]).unwrap();
        let mut b = Tensor::<f64>::from_f64(&[1], &[2.0]).unwrap();
        let g = Tensor::from_f64(&[1], &[0.3]).unwrap();
        let mut adam = Adam::new();
        adam.step(&mut [&mut a, &mut b], &[g.clone(), g], 1e-3);
        let da = a.data()[0] - 1.0;
        let db = b.data()[0] - 2.0;
        assert!((da - db).abs() < 1e-15, "{da} vs {db}");
    }
}
