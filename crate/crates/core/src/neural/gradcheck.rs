use alloc::format;

use super::NeuralError;

/// `|a - b| / max(1e-8, |a| + |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    libm::fabs(a - b) / f64::max(1e-8, libm::fabs(a) + libm::fabs(b))
}

/// Largest relative error between `analytic` and central differences of
/// `loss` around `params`.
///
/// `params` is perturbed in place one coordinate at a time and restored.
pub fn gradient_check<F>(mut loss: F, params: &mut [f64], analytic: &[f64], eps: f64) -> Result<f64, NeuralError>
where
    F: FnMut(&[f64]) -> f64,
{
    if analytic.len() != params.len() {
        return Err(NeuralError::Shape { op: "gradient_check", left: (params.len(), 1), right: (analytic.len(), 1) });
    }
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let original = params[i];
        params[i] = original + eps;
        let plus = loss(params);
        params[i] = original - eps;
        let minus = loss(params);
        params[i] = original;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NeuralError::NonFinite(format!("loss at coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}
