use crate::error::{Error, Result};

/// Arithmetic mean and population variance, via Welford's update.
pub fn aggregate_mean_variance(series: &[f64]) -> Result<(f64, f64)> {
    if series.is_empty() {
        return Err(Error::Empty("feature series"));
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in series.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    Ok((mean, (m2 / series.len() as f64).max(0.0)))
}
