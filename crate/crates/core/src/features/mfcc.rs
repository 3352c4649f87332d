use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::MelFilterbank;

/// Mel-frequency cepstral coefficients `C_1..C_L` of one power-spectrum
/// frame.
///
/// Filter energies are clamped below at `log_floor` before the logarithm,
/// then `C_n = Σ_{k=1..M} log x'(k) · cos(π (k - 0.5) n / M)`.
pub fn mfcc(
    power_frame: &[f64],
    filterbank: &MelFilterbank,
    num_coefficients: usize,
    log_floor: f64,
) -> Result<Vec<f64>> {
    let m = filterbank.num_filters();
    if num_coefficients > m {
        return Err(Error::invalid(format!(
            "{num_coefficients} coefficients requested from {m} filters"
        )));
    }
    if !(log_floor > 0.0) {
        return Err(Error::invalid("log floor must be positive"));
    }
    let log_energies: Vec<f64> = filterbank
        .apply(power_frame)?
        .into_iter()
        .map(|e| e.max(log_floor).ln())
        .collect();
    Ok(cepstral_transform(&log_energies, num_coefficients))
}

pub(crate) fn cepstral_transform(log_energies: &[f64], num_coefficients: usize) -> Vec<f64> {
    let m = log_energies.len() as f64;
    (1..=num_coefficients)
        .map(|n| {
            log_energies
                .iter()
                .enumerate()
                .map(|(i, le)| {
                    let k = (i + 1) as f64;
                    le * (PI * (k - 0.5) * n as f64 / m).cos()
                })
                .sum()
        })
        .collect()
}
