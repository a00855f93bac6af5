//! Power-meter traces, idle-corrected encoding energy and the repetition
//! stopping rule.

mod student_t;

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

pub use student_t::{t_cdf, t_quantile, T_TABLE};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.99;
pub const DEFAULT_BETA: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceLabel {
    Total,
    Idle,
}

impl fmt::Display for TraceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceLabel::Total => "total",
            TraceLabel::Idle => "idle",
        })
    }
}

impl FromStr for TraceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total" => Ok(TraceLabel::Total),
            "idle" => Ok(TraceLabel::Idle),
            _ => Err(Error::Config(format!("unknown trace label {s:?}"))),
        }
    }
}

/// Sampled power in watts against time in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    label: TraceLabel,
    times: Vec<f64>,
    power: Vec<f64>,
}

impl PowerTrace {
    pub fn new(label: TraceLabel, samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (times, power): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        if times.is_empty() {
            return Err(Error::EmptyInput(format!("{label} power trace has no samples")));
        }
        for (i, (&t, &p)) in times.iter().zip(&power).enumerate() {
            if !t.is_finite() || !p.is_finite() {
                return Err(Error::Domain(format!("{label} trace sample {i} is not finite")));
            }
            if p < 0.0 {
                return Err(Error::Domain(format!(
                    "{label} trace sample {i} has negative power {p}"
                )));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::Domain(format!(
                    "{label} trace timestamps must increase strictly (sample {i}: {t} after {})",
                    times[i - 1]
                )));
            }
        }
        Ok(PowerTrace { label, times, power })
    }

    /// Same trace with the first timestamp moved to 0.
    pub fn rebased(mut self) -> Self {
        let t0 = self.times[0];
        for t in &mut self.times {
            *t -= t0;
        }
        self
    }

    pub fn label(&self) -> TraceLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.power.iter().copied())
    }

    /// Linearly interpolated power inside segment `i`.
    fn power_at(&self, i: usize, t: f64) -> f64 {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.power[i] + w * (self.power[i + 1] - self.power[i])
    }
}

/// Trapezoidal integral of power over `[t_start, t_end]`, in joules.
///
/// Interval ends that fall between samples are linearly interpolated.
pub fn integrate_power(trace: &PowerTrace, t_start: f64, t_end: f64) -> Result<f64> {
    if !(t_start <= t_end) {
        return Err(Error::Range(format!("interval [{t_start}, {t_end}] is reversed")));
    }
    if t_start < trace.start() || t_end > trace.end() {
        return Err(Error::Range(format!(
            "interval [{t_start}, {t_end}] s outside the {} trace span [{}, {}] s",
            trace.label,
            trace.start(),
            trace.end()
        )));
    }
    if t_start == t_end {
        return Ok(0.0);
    }
    let first = trace.times.partition_point(|&t| t <= t_start).saturating_sub(1);
    let mut energy = 0.0;
    for i in first..trace.times.len() - 1 {
        let (seg_a, seg_b) = (trace.times[i], trace.times[i + 1]);
        if seg_a >= t_end {
            break;
        }
        let a = seg_a.max(t_start);
        let b = seg_b.min(t_end);
        if b > a {
            energy += 0.5 * (trace.power_at(i, a) + trace.power_at(i, b)) * (b - a);
        }
    }
    Ok(energy)
}

/// Idle-corrected energy of one encode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EncodingEnergy {
    pub energy_j: f64,
    pub total_j: f64,
    pub idle_j: f64,
    pub duration_s: f64,
    /// Set when idle energy exceeded total energy, which points at measurement noise.
    pub negative: bool,
}

/// `∫P_total − ∫P_idle` over `[0, duration]`.
pub fn encoding_energy(total: &PowerTrace, idle: &PowerTrace, duration: f64) -> Result<EncodingEnergy> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::Range(format!("duration must be non-negative, got {duration}")));
    }
    let total_j = integrate_power(total, 0.0, duration)?;
    let idle_j = integrate_power(idle, 0.0, duration)?;
    let energy_j = total_j - idle_j;
    let negative = energy_j < 0.0;
    if negative {
        warn!("idle energy {idle_j:.3} J exceeds total energy {total_j:.3} J; encoding energy is negative");
    }
    Ok(EncodingEnergy {
        energy_j,
        total_j,
        idle_j,
        duration_s: duration,
        negative,
    })
}

/// Repeated energy measurements of the same encode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    values: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl MeasurementSeries {
    pub fn new(values: Vec<f64>, alpha: f64, beta: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("measurement series has no values".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("measurement value {v} is not finite")));
        }
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "confidence level must lie in (0.5, 1), got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Config(format!("relative bound must lie in (0, 1), got {beta}")));
        }
        Ok(MeasurementSeries { values, alpha, beta })
    }

    pub fn with_defaults(values: Vec<f64>) -> Result<Self> {
        Self::new(values, DEFAULT_ALPHA, DEFAULT_BETA)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Outcome of the stopping rule `2·(σ/√m)·t_α(m−1) < β·Ē`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceDecision {
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub m: usize,
    pub mean: f64,
    /// Sample standard deviation with the `m − 1` divisor.
    pub std: f64,
    pub t_critical: f64,
    pub alpha: f64,
    pub beta: f64,
    pub quantile: &'static str,
}

pub fn confidence_satisfied(series: &MeasurementSeries) -> Result<ConfidenceDecision> {
    let m = series.values.len();
    if m < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: m });
    }
    let mf = m as f64;
    let mean = series.values.iter().sum::<f64>() / mf;
    let var = series.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (mf - 1.0);
    let std = var.sqrt();
    let t_critical = t_quantile(series.alpha, mf - 1.0)?;
    let lhs = 2.0 * (std / mf.sqrt()) * t_critical;
    let rhs = series.beta * mean;
    Ok(ConfidenceDecision {
        satisfied: lhs < rhs,
        lhs,
        rhs,
        m,
        mean,
        std,
        t_critical,
        alpha: series.alpha,
        beta: series.beta,
        quantile: "one-sided",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn constant(label: TraceLabel, watts: f64, end: f64) -> PowerTrace {
        PowerTrace::new(label, [(0.0, watts), (end / 2.0, watts), (end, watts)]).unwrap()
    }

    #[test]
    fn rectangle_and_triangle() {
        let c = constant(TraceLabel::Total, 10.0, 5.0);
        assert_eq!(integrate_power(&c, 0.0, 5.0).unwrap(), 50.0);
        let ramp = PowerTrace::new(TraceLabel::Total, (0..=10).map(|i| (f64::from(i), f64::from(i)))).unwrap();
        assert_relative_eq!(integrate_power(&ramp, 0.0, 10.0).unwrap(), 50.0, max_relative = 1e-15);
        assert_eq!(integrate_power(&ramp, 3.0, 3.0).unwrap(), 0.0);
        // interior sub-interval of the ramp: (2.5² − 0.5²)/2
        assert_relative_eq!(integrate_power(&ramp, 0.5, 2.5).unwrap(), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn range_errors() {
        let c = constant(TraceLabel::Total, 10.0, 5.0);
        assert!(matches!(integrate_power(&c, -1.0, 2.0), Err(Error::Range(_))));
        assert!(matches!(integrate_power(&c, 0.0, 5.1), Err(Error::Range(_))));
        assert!(matches!(integrate_power(&c, 3.0, 2.0), Err(Error::Range(_))));
    }

    #[test]
    fn trace_validation_and_rebase() {
        assert!(PowerTrace::new(TraceLabel::Idle, [(0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(PowerTrace::new(TraceLabel::Idle, [(0.0, -1.0)]).is_err());
        assert!(PowerTrace::new(TraceLabel::Idle, []).is_err());
        let t = PowerTrace::new(TraceLabel::Idle, [(100.0, 1.0), (101.5, 2.0)])
            .unwrap()
            .rebased();
        assert_eq!(t.start(), 0.0);
        assert_eq!(t.end(), 1.5);
    }

    #[test]
    fn idle_subtraction() {
        let total = constant(TraceLabel::Total, 30.0, 10.0);
        let idle = constant(TraceLabel::Idle, 20.0, 10.0);
        let e = encoding_energy(&total, &idle, 10.0).unwrap();
        assert_eq!(e.energy_j, 100.0);
        assert!(!e.negative);
        assert_eq!(encoding_energy(&total, &total, 10.0).unwrap().energy_j, 0.0);
        let swapped = encoding_energy(&idle, &total, 10.0).unwrap();
        assert_eq!(swapped.energy_j, -100.0);
        assert!(swapped.negative);
        let short_idle = constant(TraceLabel::Idle, 20.0, 8.0);
        assert!(matches!(
            encoding_energy(&total, &short_idle, 10.0),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn stopping_rule_worked_example() {
        let s = MeasurementSeries::with_defaults(vec![100.0, 100.0, 100.0, 104.0]).unwrap();
        let d = confidence_satisfied(&s).unwrap();
        assert_relative_eq!(d.std, 2.0, max_relative = 1e-12);
        assert_relative_eq!(d.mean, 101.0, max_relative = 1e-12);
        assert!((d.t_critical - 4.5407).abs() < 5e-5);
        assert!((d.lhs - 9.081).abs() < 1e-3);
        assert_relative_eq!(d.rhs, 2.02, max_relative = 1e-12);
        assert!(!d.satisfied);
    }

    #[test]
    fn stopping_rule_edges() {
        let same = MeasurementSeries::with_defaults(vec![5.0; 3]).unwrap();
        assert!(confidence_satisfied(&same).unwrap().satisfied);
        let one = MeasurementSeries::with_defaults(vec![5.0]).unwrap();
        assert!(matches!(
            confidence_satisfied(&one),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(MeasurementSeries::new(vec![1.0], 0.4, 0.02).is_err());
        assert!(MeasurementSeries::new(vec![1.0], 0.99, 1.0).is_err());
    }

    #[test]
    fn more_repetitions_eventually_satisfy() {
        let values = |m: usize| {
            (0..m)
                .map(|i| if i % 2 == 0 { 98.0 } else { 102.0 })
                .collect::<Vec<_>>()
        };
        let first = (2..200)
            .find(|&m| {
                confidence_satisfied(&MeasurementSeries::with_defaults(values(m)).unwrap())
                    .unwrap()
                    .satisfied
            })
            .expect("rule satisfied for some m");
        assert!(first > 4);
    }

    proptest! {
        #[test]
        fn integral_is_additive(
            pts in prop::collection::vec((0.01f64..2.0, 0.0f64..500.0), 2..30),
            f1 in 0.0f64..1.0,
            f2 in 0.0f64..1.0,
        ) {
            let mut t = 0.0;
            let samples: Vec<(f64, f64)> = pts.iter().map(|&(dt, p)| { t += dt; (t, p) }).collect();
            let trace = PowerTrace::new(TraceLabel::Total, samples).unwrap();
            let span = trace.end() - trace.start();
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            let a = trace.start();
            let b = trace.start() + lo * span;
            let c = trace.start() + hi * span;
            let whole = integrate_power(&trace, a, c).unwrap();
            let parts = integrate_power(&trace, a, b).unwrap() + integrate_power(&trace, b, c).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1e-300) + 1e-12);
        }

        #[test]
        fn decision_is_scale_invariant(
            values in prop::collection::vec(50.0f64..150.0, 2..20),
            c in 1e-3f64..1e3,
        ) {
            let a = confidence_satisfied(&MeasurementSeries::with_defaults(values.clone()).unwrap()).unwrap();
            let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
            let b = confidence_satisfied(&MeasurementSeries::with_defaults(scaled).unwrap()).unwrap();
            // skip draws that sit on the decision boundary to rounding precision
            prop_assume!((a.lhs - a.rhs).abs() > 1e-9 * a.rhs);
            prop_assert_eq!(a.satisfied, b.satisfied);
        }
    }
}
