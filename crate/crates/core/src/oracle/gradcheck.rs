use crate::error::{Error, Result};

use super::{Mismatch, OracleReport};

/// Relative error with a floor on the denominator, so that two tiny
/// gradients are not judged by their noise.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / scale
}

/// Compares `analytic` with central differences of `f` at `params`, one
/// coordinate at a time.
pub fn grad_check(
    f: impl Fn(&[f64]) -> f64,
    analytic: &[f64],
    params: &[f64],
    h: f64,
    tol: f64,
) -> Result<OracleReport> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step {h} must be positive")));
    }
    if analytic.len() != params.len() {
        return Err(Error::ShapeMismatch {
            what: "analytic gradient",
            expected: params.len(),
            got: analytic.len(),
        });
    }
    let mut report = OracleReport::default();
    let mut x = params.to_vec();
    for i in 0..params.len() {
        x[i] = params[i] + h;
        let up = f(&x);
        x[i] = params[i] - h;
        let down = f(&x);
        x[i] = params[i];
        let numeric = (up - down) / (2.0 * h);
        let err = relative_error(analytic[i], numeric);
        report.trials += 1;
        report.max_error = report.max_error.max(err);
        if !(err <= tol) {
            report.mismatches.push(Mismatch {
                trial: i,
                what: format!(
                    "coordinate {i}: analytic {} vs numeric {numeric}",
                    analytic[i]
                ),
                replay: format!("params {params:?} h {h}"),
            });
        }
    }
    Ok(report)
}
