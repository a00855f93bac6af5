use crate::error::{Error, Result};
use crate::models::{EncodingRecord, EnergyModelParams};

/// Ordinary least squares of measured energy against total encoding time.
///
/// Records without an energy value are ignored.
pub fn fit_energy_linear<'a, I>(records: I) -> Result<EnergyModelParams>
where
    I: IntoIterator<Item = &'a EncodingRecord>,
{
    let points: Vec<(f64, f64)> = records
        .into_iter()
        .filter_map(|r| r.energy_j.map(|e| (r.time_s, e)))
        .collect();
    fit_line(&points)
}

/// Least-squares line `y = e0 + p·x` through `(x, y)` points.
pub fn fit_line(points: &[(f64, f64)]) -> Result<EnergyModelParams> {
    if points.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let scale: f64 = points.iter().map(|p| p.0 * p.0).sum();
    if sxx <= 1e-24 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficient("all encoding times are identical".into()));
    }
    let p = sxy / sxx;
    EnergyModelParams::new(mean_y - p * mean_x, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noiseless_line() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| (i as f64 * 1.7 + 0.3, 5.0 + 2.0 * (i as f64 * 1.7 + 0.3)))
            .collect();
        let ep = fit_line(&pts).unwrap();
        assert_relative_eq!(ep.e0, 5.0, max_relative = 1e-9);
        assert_relative_eq!(ep.p, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn two_points() {
        let ep = fit_line(&[(1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert_relative_eq!(ep.e0, 1.0, max_relative = 1e-12);
        assert_relative_eq!(ep.p, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn identical_abscissae() {
        assert!(matches!(
            fit_line(&[(2.0, 1.0), (2.0, 3.0)]),
            Err(Error::RankDeficient(_))
        ));
        assert!(matches!(
            fit_line(&[(2.0, 1.0)]),
            Err(Error::InsufficientSamples { .. })
        ));
    }
}
