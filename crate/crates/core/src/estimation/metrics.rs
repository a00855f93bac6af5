use crate::error::{Error, Result};

/// Mean absolute percentage error, in percent.
pub fn mape(measured: &[f64], predicted: &[f64]) -> Result<f64> {
    if measured.len() != predicted.len() {
        return Err(Error::Domain(format!(
            "MAPE over {} measured and {} predicted values",
            measured.len(),
            predicted.len()
        )));
    }
    if measured.is_empty() {
        return Err(Error::Domain("MAPE of an empty set".into()));
    }
    let mut acc = 0.0;
    for (&y, &y_hat) in measured.iter().zip(predicted) {
        if y == 0.0 {
            return Err(Error::Domain("MAPE is undefined for a zero measured value".into()));
        }
        acc += ((y - y_hat) / y).abs();
    }
    Ok(100.0 * acc / measured.len() as f64)
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
