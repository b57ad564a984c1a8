//! AdamW with decoupled weight decay and the warmup / linear-decay schedule.

use crate::model::{ParamStore, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// Optimizer state: first and second moments in the parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW<T> {
    pub config: AdamWConfig,
    pub step: u64,
    pub m: ParamStore<T>,
    pub v: ParamStore<T>,
}

impl<T: Real> AdamW<T> {
    pub fn new(config: AdamWConfig, params: &ParamStore<T>) -> Self {
        Self { config, step: 0, m: params.zeros_like(), v: params.zeros_like() }
    }

    /// One update with learning rate `lr`:
    /// `θ ← θ − lr·(m̂ / (√v̂ + ε) + λθ)`.
    pub fn update(&mut self, params: &mut ParamStore<T>, grads: &ParamStore<T>, lr: f64) {
        self.step += 1;
        let c = &self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let (one_b1, one_b2) = (T::of(1.0 - c.beta1), T::of(1.0 - c.beta2));
        let (inv_bc1, inv_bc2) = (T::of(1.0 / bc1), T::of(1.0 / bc2));
        let (lr_t, eps, wd) = (T::of(lr), T::of(c.eps), T::of(c.weight_decay));
        for (((p, g), m), v) in params.data.iter_mut().zip(&grads.data).zip(&mut self.m.data).zip(&mut self.v.data) {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + one_b1 * g;
                *v = b2 * *v + one_b2 * g * g;
                let m_hat = *m * inv_bc1;
                let v_hat = *v * inv_bc2;
                *p -= lr_t * (m_hat / (v_hat.sqrt() + eps) + wd * *p);
            }
        }
    }
}

/// Learning rate at update `step` of `total`: rises linearly from 0 to `peak`
/// over the first `warmup_frac` of updates, then decays linearly to 0 at `total`.
pub fn lr_at(step: u64, total: u64, peak: f64, warmup_frac: f64) -> f64 {
    if total == 0 || step >= total {
        return 0.0;
    }
    let warmup = warmup_frac * total as f64;
    let s = step as f64;
    if s < warmup {
        peak * s / warmup
    } else {
        peak * (total as f64 - s) / (total as f64 - warmup)
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm<T: Real>(grads: &mut ParamStore<T>, max_norm: f64) -> f64 {
    let norm = grads.l2_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(T::of(max_norm / norm));
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Layout, ModelConfig, Variant};

    #[test]
    fn schedule_shape() {
        let total = 100;
        assert_eq!(lr_at(0, total, 1.0, 0.1), 0.0);
        assert!((lr_at(10, total, 1.0, 0.1) - 1.0).abs() < 1e-12);
        assert!((lr_at(55, total, 1.0, 0.1) - 0.5).abs() < 1e-12);
        assert!(lr_at(99, total, 1.0, 0.1) > 0.0);
        assert_eq!(lr_at(100, total, 1.0, 0.1), 0.0);
        let mut prev = -1.0;
        for s in 0..=10 {
            let lr = lr_at(s, total, 1.0, 0.1);
            assert!(lr > prev);
            prev = lr;
        }
        for s in 11..=100 {
            let lr = lr_at(s, total, 1.0, 0.1);
            assert!(lr < prev);
            prev = lr;
        }
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let layout = Layout::new(&ModelConfig::new(Variant::DualStream, 1, 8, 2));
        let mut params = ParamStore::<f64>::init(&layout, 5);
        let before = params.clone();
        let grads = params.zeros_like();
        let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.0, ..Default::default() }, &params);
        for _ in 0..3 {
            opt.update(&mut params, &grads, 1e-3);
        }
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let layout = Layout::new(&ModelConfig::new(Variant::MagnitudeOnly, 0, 4, 1));
        let mut params = ParamStore::<f64>::zeros(&layout);
        let mut grads = params.zeros_like();
        grads.data[0][0] = 3.0;
        grads.data[0][1] = -0.5;
        let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.0, ..Default::default() }, &params);
        opt.update(&mut params, &grads, 0.01);
        assert!((params.data[0][0] + 0.01).abs() < 1e-9);
        assert!((params.data[0][1] - 0.01).abs() < 1e-9);
        assert_eq!(params.data[0][2], 0.0);
    }

    #[test]
    fn weight_decay_is_decoupled() {
        let layout = Layout::new(&ModelConfig::new(Variant::MagnitudeOnly, 0, 4, 1));
        let mut params = ParamStore::<f64>::zeros(&layout);
        params.data[0][0] = 2.0;
        let grads = params.zeros_like();
        let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.1, ..Default::default() }, &params);
        opt.update(&mut params, &grads, 0.5);
        assert!((params.data[0][0] - (2.0 - 0.5 * 0.1 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn clipping() {
        let layout = Layout::new(&ModelConfig::new(Variant::MagnitudeOnly, 0, 4, 1));
        let mut g = ParamStore::<f64>::zeros(&layout);
        g.data[0][0] = 3.0;
        g.data[0][1] = 4.0;
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g.l2_norm() - 1.0).abs() < 1e-12);
    }
}
