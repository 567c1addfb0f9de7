//! Exponential availability model and rate fitting.

use thiserror::Error;

use super::DeviceError;

/// Probability that a device with departure rate `lambda` is still present
/// after `t` seconds.
pub fn availability_prob(lambda: f64, t: f64) -> Result<f64, DeviceError> {
    if t < 0.0 {
        return Err(DeviceError::NegativeTime(t));
    }
    Ok((-lambda * t).exp())
}

/// Probability that the device leaves during a window of `duration` seconds.
/// The model is memoryless, so the device's age does not matter.
pub fn task_failure_prob(lambda: f64, duration: f64) -> Result<f64, DeviceError> {
    if duration < 0.0 {
        return Err(DeviceError::NegativeDuration(duration));
    }
    Ok(-(-lambda * duration).exp_m1())
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 trace points, got {0}")]
    InsufficientData(usize),
    #[error("availability must lie in (0, 1], got {value} at row {row}")]
    NonPositiveAvailability { row: usize, value: f64 },
    #[error("elapsed time must be non-negative and strictly increasing (row {0})")]
    NonIncreasingTime(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaFit {
    pub lambda: f64,
    /// Root-mean-square residual of `ln a + lambda t`.
    pub rms_log_error: f64,
}

/// Least-squares fit of `ln a(t) = -lambda t` through the origin.
///
/// The closed form is `lambda = -sum(t ln a) / sum(t^2)`. A trace whose
/// availability grows over time would give a negative rate; that is clamped
/// to zero.
pub fn fit_lambda(trace: &[(f64, f64)]) -> Result<LambdaFit, FitError> {
    if trace.len() < 3 {
        return Err(FitError::InsufficientData(trace.len()));
    }
    let mut prev = f64::NEG_INFINITY;
    for (row, &(t, a)) in trace.iter().enumerate() {
        if !(t >= 0.0) || t <= prev {
            return Err(FitError::NonIncreasingTime(row));
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(FitError::NonPositiveAvailability { row, value: a });
        }
        prev = t;
    }
    let num: f64 = trace.iter().map(|&(t, a)| t * a.ln()).sum();
    let den: f64 = trace.iter().map(|&(t, _)| t * t).sum();
    let lambda = (-num / den).max(0.0);
    let sq: f64 = trace
        .iter()
        .map(|&(t, a)| (a.ln() + lambda * t).powi(2))
        .sum();
    Ok(LambdaFit {
        lambda,
        rms_log_error: (sq / trace.len() as f64).sqrt(),
    })
}
