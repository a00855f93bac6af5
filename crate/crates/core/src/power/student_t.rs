//! Student's t critical values.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// One-sided critical values `t_p(df)` for `df = 1..=30`, at `p = 0.95` and `p = 0.99`.
pub const T_TABLE: [(u32, f64, f64); 30] = [
    (1, 6.3138, 31.8205),
    (2, 2.9200, 6.9646),
    (3, 2.3534, 4.5407),
    (4, 2.1318, 3.7469),
    (5, 2.0150, 3.3649),
    (6, 1.9432, 3.1427),
    (7, 1.8946, 2.9980),
    (8, 1.8595, 2.8965),
    (9, 1.8331, 2.8214),
    (10, 1.8125, 2.7638),
    (11, 1.7959, 2.7181),
    (12, 1.7823, 2.6810),
    (13, 1.7709, 2.6503),
    (14, 1.7613, 2.6245),
    (15, 1.7531, 2.6025),
    (16, 1.7459, 2.5835),
    (17, 1.7396, 2.5669),
    (18, 1.7341, 2.5524),
    (19, 1.7291, 2.5395),
    (20, 1.7247, 2.5280),
    (21, 1.7207, 2.5176),
    (22, 1.7171, 2.5083),
    (23, 1.7139, 2.4999),
    (24, 1.7109, 2.4922),
    (25, 1.7081, 2.4851),
    (26, 1.7056, 2.4786),
    (27, 1.7033, 2.4727),
    (28, 1.7011, 2.4671),
    (29, 1.6991, 2.4620),
    (30, 1.6973, 2.4573),
];

/// Quantile `t` with `P(T ≤ t) = p` for Student's t with `df` degrees of freedom.
pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability must lie in (0, 1), got {p}")));
    }
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {df}")));
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(dist.inverse_cdf(p))
}

/// Student's t cumulative distribution function.
pub fn t_cdf(t: f64, df: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(dist.cdf(t))
}
