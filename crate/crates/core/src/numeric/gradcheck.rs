use crate::error::{Error, Result};

/// `|a − n| / max(1, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1.0)
}

/// Central-difference gradient of `loss_fn` at `params`.
pub fn numerical_gradient<F>(loss_fn: F, params: &[f64], epsilon: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut work = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + epsilon;
        let plus = loss_fn(&work);
        work[i] = orig - epsilon;
        let minus = loss_fn(&work);
        work[i] = orig;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::NonFinite(format!("loss is not finite when perturbing coordinate {i}")));
        }
        grad.push((plus - minus) / (2.0 * epsilon));
    }
    Ok(grad)
}

/// Largest relative error between `analytic` and the central-difference
/// gradient of `loss_fn` at `params`.
pub fn grad_check<F>(loss_fn: F, params: &[f64], analytic: &[f64], epsilon: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::Config(format!("gradient-check epsilon must lie in [1e-7, 1e-3], got {epsilon}")));
    }
    if analytic.len() != params.len() {
        return Err(Error::Shape(format!(
            "{} analytic gradient entries for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    if !loss_fn(params).is_finite() {
        return Err(Error::NonFinite("loss at the unperturbed point".into()));
    }
    let numeric = numerical_gradient(&loss_fn, params, epsilon)?;
    Ok(analytic.iter().zip(&numeric).map(|(&a, &n)| relative_error(a, n)).fold(0.0, f64::max))
}
