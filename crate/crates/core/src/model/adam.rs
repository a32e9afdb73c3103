use super::{ModelError, ParamSet, ParameterStore};
use crate::math;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// One bias-corrected Adam update; increments the step counter.
pub fn adam_step(store: &mut ParameterStore, grads: &ParamSet, lr: f64) -> Result<(), ModelError> {
    if !store.params.same_layout(grads) {
        return Err(ModelError::Layout);
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(ModelError::NonFiniteGradient);
    }
    store.step += 1;
    let t = store.step as i32;
    let c1 = 1.0 - math::powi(BETA1, t);
    let c2 = 1.0 - math::powi(BETA2, t);
    let ParameterStore { params, first_moment, second_moment, .. } = store;
    for (((p, m), v), g) in
        params.iter_mut().zip(first_moment.iter_mut()).zip(second_moment.iter_mut()).zip(grads.iter())
    {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (math::sqrt(v_hat) + EPSILON);
    }
    Ok(())
}
