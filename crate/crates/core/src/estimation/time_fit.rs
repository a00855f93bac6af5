//! Two-stage fit of the encoding-time model.
//!
//! Stage 1 drops the offset `t0` and fits the log-linearised model
//! `ln t + ln crf = ξ·ln C + δ·ln n_intra + α·ln p + β·p + γ` by ordinary least
//! squares. Stage 2 refines all parameters, including `t0 ≥ 0`, with
//! Levenberg–Marquardt on the configured residual. A step is only accepted
//! when it lowers the objective, so stage 2 never ends worse than stage 1.

use std::collections::BTreeSet;

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{time_kpix_unchecked, TimeModelParams};

const ALPHA: usize = 0;
const BETA: usize = 1;
const GAMMA: usize = 2;
const DELTA: usize = 3;
const XI: usize = 4;
const T0: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Residual `(t − t̂)/t`.
    #[default]
    RelativeSquared,
    /// Residual `t − t̂`.
    AbsoluteSquared,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative" | "relative-squared" => Ok(Objective::RelativeSquared),
            "absolute" | "absolute-squared" => Ok(Objective::AbsoluteSquared),
            _ => Err(Error::Config(format!("unknown objective {s:?}"))),
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::RelativeSquared => "relative-squared",
            Objective::AbsoluteSquared => "absolute-squared",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub objective: Objective,
    pub max_iterations: usize,
    /// Stop once an accepted step improves the objective by less than this fraction.
    pub tolerance: f64,
    /// Values used for parameters the data cannot identify.
    pub init: TimeModelParams,
    /// Seed for the fold split.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            objective: Objective::RelativeSquared,
            max_iterations: 200,
            tolerance: 1e-12,
            init: TimeModelParams::zero(),
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One observation of time per kilopixel with its regressors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub content: f64,
    pub n_intra: f64,
    pub crf: f64,
    pub preset: f64,
    pub t_kpix: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeFit {
    pub params: TimeModelParams,
    pub objective: f64,
    pub stage1_objective: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out first; `params` are then the best found.
    pub converged: bool,
    pub frozen: Vec<&'static str>,
}

/// Sum of squared residuals of `params` on `points`.
pub fn objective_value(points: &[FitPoint], params: &TimeModelParams, objective: Objective) -> f64 {
    points
        .iter()
        .map(|p| {
            let r = residual(p, params, objective);
            r * r
        })
        .sum()
}

fn residual(p: &FitPoint, params: &TimeModelParams, objective: Objective) -> f64 {
    let t_hat = time_kpix_unchecked(params, p.content, p.n_intra, p.crf, p.preset);
    match objective {
        Objective::RelativeSquared => (p.t_kpix - t_hat) / p.t_kpix,
        Objective::AbsoluteSquared => p.t_kpix - t_hat,
    }
}

fn check_points(points: &[FitPoint]) -> Result<()> {
    for p in points {
        let ok = [p.content, p.n_intra, p.crf, p.preset, p.t_kpix]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !ok {
            return Err(Error::Domain(format!("fit point with non-positive value: {p:?}")));
        }
    }
    let combos: BTreeSet<(u64, u64)> = points.iter().map(|p| (p.preset.to_bits(), p.crf.to_bits())).collect();
    if combos.len() < 6 {
        return Err(Error::InsufficientSamples {
            needed: 6,
            got: combos.len(),
        });
    }
    let presets: BTreeSet<u64> = combos.iter().map(|c| c.0).collect();
    let crfs: BTreeSet<u64> = combos.iter().map(|c| c.1).collect();
    if presets.len() < 2 || crfs.len() < 2 {
        return Err(Error::Config(format!(
            "fit needs at least 2 presets and 2 CRFs, got {} and {}",
            presets.len(),
            crfs.len()
        )));
    }
    Ok(())
}

fn is_constant(values: impl Iterator<Item = f64>) -> bool {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo <= 1e-12 * (1.0 + lo.abs().max(hi.abs()))
}

/// Log-linear design: column order `[ln C, ln n_intra, ln p, p, 1]`.
pub(crate) struct LogLinearDesign {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Parameter index of each column.
    pub columns: Vec<usize>,
}

fn log_linear_design(points: &[FitPoint], init: &TimeModelParams, frozen: &[usize]) -> LogLinearDesign {
    let all = [XI, DELTA, ALPHA, BETA, GAMMA];
    let columns: Vec<usize> = all.into_iter().filter(|c| !frozen.contains(c)).collect();
    let regressor = |p: &FitPoint, param: usize| match param {
        XI => p.content.ln(),
        DELTA => p.n_intra.ln(),
        ALPHA => p.preset.ln(),
        BETA => p.preset,
        GAMMA => 1.0,
        _ => unreachable!(),
    };
    let init = init.to_array();
    let x = DMatrix::from_fn(points.len(), columns.len(), |i, j| regressor(&points[i], columns[j]));
    let y = DVector::from_iterator(
        points.len(),
        points.iter().map(|p| {
            let fixed: f64 = frozen.iter().map(|&f| init[f] * regressor(p, f)).sum();
            p.t_kpix.ln() + p.crf.ln() - fixed
        }),
    );
    LogLinearDesign { x, y, columns }
}

/// Normal-equation solution `(XᵀX)⁻¹ Xᵀy`, rejecting numerically singular designs.
pub(crate) fn solve_normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    // equilibrate columns before judging the rank
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    if norms.contains(&0.0) {
        return Err(Error::RankDeficient("design matrix has an all-zero column".into()));
    }
    let scaled = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] / norms[j]);
    let sv = scaled.clone().singular_values();
    let (smin, smax) = sv
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if smin <= 1e-9 * smax {
        return Err(Error::RankDeficient(format!(
            "design matrix condition {:.3e} exceeds limit",
            smax / smin
        )));
    }
    let gram = scaled.transpose() * &scaled;
    let rhs = scaled.transpose() * y;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("normal matrix is not positive definite".into()))?;
    let coef = chol.solve(&rhs);
    Ok(DVector::from_iterator(
        coef.len(),
        coef.iter().zip(&norms).map(|(c, n)| c / n),
    ))
}

/// Parameters the data cannot identify: content and intra-count exponents
/// whose regressor does not vary.
fn frozen_parameters(points: &[FitPoint]) -> Vec<usize> {
    let mut frozen = Vec::new();
    if is_constant(points.iter().map(|p| p.content.ln())) {
        frozen.push(XI);
    }
    if is_constant(points.iter().map(|p| p.n_intra.ln())) {
        frozen.push(DELTA);
    }
    frozen.sort_unstable();
    frozen
}

/// Closed-form log-linear fit with `t0 = 0`.
pub fn fit_log_linear(points: &[FitPoint], cfg: &FitConfig) -> Result<TimeModelParams> {
    check_points(points)?;
    let frozen = frozen_parameters(points);
    stage1(points, cfg, &frozen)
}

fn stage1(points: &[FitPoint], cfg: &FitConfig, frozen: &[usize]) -> Result<TimeModelParams> {
    let design = log_linear_design(points, &cfg.init, frozen);
    let coef = solve_normal_equations(&design.x, &design.y)?;
    let mut params = cfg.init.to_array();
    params[T0] = 0.0;
    for (&param, &value) in design.columns.iter().zip(coef.iter()) {
        params[param] = value;
    }
    Ok(TimeModelParams::from_array(params))
}

/// Fits all model parameters to `points`.
pub fn fit_time_points(points: &[FitPoint], cfg: &FitConfig) -> Result<TimeFit> {
    cfg.validate()?;
    check_points(points)?;
    let frozen = frozen_parameters(points);
    let start = stage1(points, cfg, &frozen)?;
    let stage1_objective = objective_value(points, &start, cfg.objective);
    let free: Vec<usize> = (0..6).filter(|i| !frozen.contains(i)).collect();
    let (params, objective, iterations, converged) = levenberg_marquardt(points, start, &free, cfg);
    if !converged {
        debug!("time model fit stopped after {iterations} iterations without converging");
    }
    Ok(TimeFit {
        params,
        objective,
        stage1_objective,
        iterations,
        converged,
        frozen: frozen.iter().map(|&i| TimeModelParams::NAMES[i]).collect(),
    })
}

/// Residual vector and Jacobian (d residual / d free parameter).
fn residuals_and_jacobian(
    points: &[FitPoint],
    params: &TimeModelParams,
    free: &[usize],
    objective: Objective,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = points.len();
    let mut r = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, free.len());
    for (i, p) in points.iter().enumerate() {
        let lead = (params.xi * p.content.ln()
            + params.delta * p.n_intra.ln()
            + params.alpha * p.preset.ln()
            + params.beta * p.preset
            + params.gamma)
            .exp()
            / p.crf;
        let t_hat = lead + params.t0;
        let scale = match objective {
            Objective::RelativeSquared => 1.0 / p.t_kpix,
            Objective::AbsoluteSquared => 1.0,
        };
        r[i] = (p.t_kpix - t_hat) * scale;
        for (j, &param) in free.iter().enumerate() {
            let d_t_hat = match param {
                ALPHA => lead * p.preset.ln(),
                BETA => lead * p.preset,
                GAMMA => lead,
                DELTA => lead * p.n_intra.ln(),
                XI => lead * p.content.ln(),
                T0 => 1.0,
                _ => unreachable!(),
            };
            jac[(i, j)] = -scale * d_t_hat;
        }
    }
    (r, jac)
}

fn levenberg_marquardt(
    points: &[FitPoint],
    start: TimeModelParams,
    free: &[usize],
    cfg: &FitConfig,
) -> (TimeModelParams, f64, usize, bool) {
    let mut params = start;
    let mut cost = objective_value(points, &params, cfg.objective);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    if cost == 0.0 {
        return (params, cost, 0, true);
    }

    while iterations < cfg.max_iterations {
        iterations += 1;
        let (r, jac) = residuals_and_jacobian(points, &params, free, cfg.objective);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let diag_floor = jtj.diagonal().max() * 1e-15;

        let accepted = loop {
            let mut damped = jtj.clone();
            for k in 0..free.len() {
                damped[(k, k)] += lambda * jtj[(k, k)].max(diag_floor);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    break None;
                }
                continue;
            };
            let mut trial = params.to_array();
            for (k, &param) in free.iter().enumerate() {
                trial[param] += step[k];
            }
            trial[T0] = trial[T0].max(0.0);
            let trial = TimeModelParams::from_array(trial);
            let trial_cost = objective_value(points, &trial, cfg.objective);
            if trial_cost.is_finite() && trial_cost < cost {
                lambda = (lambda / 10.0).max(1e-12);
                break Some((trial, trial_cost));
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                break None;
            }
        };

        match accepted {
            // no downhill step at any damping: a (numerical) minimum
            None => return (params, cost, iterations, true),
            Some((trial, trial_cost)) => {
                let improvement = (cost - trial_cost) / cost;
                params = trial;
                cost = trial_cost;
                if improvement < cfg.tolerance || cost == 0.0 {
                    return (params, cost, iterations, true);
                }
            }
        }
    }
    (params, cost, iterations, false)
}
