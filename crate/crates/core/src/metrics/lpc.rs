use super::MetricError;

/// Biased autocorrelation `r[k] = Σ x[n]·x[n+k]` for `k = 0..=max_lag`.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| if k < frame.len() { frame.iter().zip(&frame[k..]).map(|(a, b)| a * b).sum() } else { 0.0 })
        .collect()
}

/// Levinson-Durbin recursion on autocorrelation `r`, returning the
/// prediction-error filter `a[0..=order]` with `a[0] = 1`.
///
/// If the residual energy vanishes before `order` is reached the recursion
/// stops and the remaining coefficients stay zero.
pub fn levinson(r: &[f64], order: usize) -> Result<Vec<f64>, MetricError> {
    if r.len() <= order {
        return Err(MetricError::InvalidArgument(format!("need {} autocorrelation lags, got {}", order + 1, r.len())));
    }
    if r[0] <= 0.0 {
        return Err(MetricError::DegenerateFrame);
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        if err <= r[0] * 1e-12 {
            break;
        }
        let acc: f64 = (0..i).map(|j| a[j] * r[i - j]).sum();
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
    }
    Ok(a)
}

/// LPC analysis of a (caller-windowed) frame.
pub fn lpc_coefficients(frame: &[f64], order: usize) -> Result<Vec<f64>, MetricError> {
    if frame.len() <= order {
        return Err(MetricError::InvalidArgument(format!("frame of {} samples for order {order}", frame.len())));
    }
    levinson(&autocorrelation(frame, order), order)
}
