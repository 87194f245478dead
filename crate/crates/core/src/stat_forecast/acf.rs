//! Sample autocorrelation and partial autocorrelation.

use crate::error::{Error, Result};

/// `acf[k] = sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2` for `k = 0..=max_lag`,
/// and the partial autocorrelations from the Durbin-Levinson recursion
/// (`pacf[0] = 1`).
pub fn acf_pacf(series: &[f64], max_lag: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if series.len() <= max_lag + 1 {
        return Err(Error::Size {
            what: "observations for autocorrelation",
            needed: max_lag + 2,
            got: series.len(),
        });
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(Error::Degenerate("autocorrelation of a constant series".into()));
    }
    let acf: Vec<f64> = (0..=max_lag)
        .map(|k| centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect();

    let mut pacf = vec![1.0];
    let mut phi: Vec<f64> = Vec::new();
    for k in 1..=max_lag {
        let num = acf[k] - phi.iter().enumerate().map(|(j, p)| p * acf[k - 1 - j]).sum::<f64>();
        let den = 1.0 - phi.iter().enumerate().map(|(j, p)| p * acf[j + 1]).sum::<f64>();
        let kk = if den.abs() > f64::EPSILON { num / den } else { 0.0 };
        let mut next: Vec<f64> = phi.iter().enumerate().map(|(j, p)| p - kk * phi[k - 2 - j]).collect();
        next.push(kk);
        phi = next;
        pacf.push(kk);
    }
    Ok((acf, pacf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_zero_is_one() {
        let (acf, pacf) = acf_pacf(&[1.0, 3.0, 2.0, 5.0, 4.0], 2).unwrap();
        assert_eq!(acf[0], 1.0);
        assert_eq!(pacf[0], 1.0);
        assert_eq!(pacf[1], acf[1]);
    }

    #[test]
    fn errors() {
        assert!(matches!(acf_pacf(&[2.0; 10], 3), Err(Error::Degenerate(_))));
        assert!(matches!(acf_pacf(&[1.0, 2.0, 3.0], 2), Err(Error::Size { .. })));
    }
}
