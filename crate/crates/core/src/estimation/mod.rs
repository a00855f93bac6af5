//! Model fitting and evaluation.

mod cv;
mod energy;
mod grid;
mod metrics;
mod oracle;
mod time_fit;

use std::collections::{BTreeMap, BTreeSet};

pub use cv::{cross_validate, EnergyEvaluation, EnergyMode, EvaluationReport, FoldAssignment, FoldResult};
pub use energy::{fit_energy_linear, fit_line};
pub use grid::{descriptor_grid_evaluation, grid_specs, GridCell, GridReport};
pub use metrics::mape;
pub use oracle::{fit_content_blind_baseline, oracle_content_factors, oracle_mape, OracleFactor};
pub use time_fit::{fit_log_linear, fit_time_points, objective_value, FitConfig, FitPoint, Objective, TimeFit};

use crate::descriptors::DescriptorSet;
use crate::error::{Error, Result};
use crate::models::{content_factor, predict_record, ContentFactorSpec, EncodingRecord, TimeModelParams};

/// Descriptor sets keyed by sequence id.
pub type DescriptorTable = BTreeMap<String, DescriptorSet>;

/// Builds a lookup table, rejecting duplicate sequence ids.
pub fn descriptor_table(sets: impl IntoIterator<Item = DescriptorSet>) -> Result<DescriptorTable> {
    let mut table = DescriptorTable::new();
    for d in sets {
        let id = d.sequence_id.clone();
        if table.insert(id.clone(), d).is_some() {
            return Err(Error::Join(format!("duplicate descriptor set for {id:?}")));
        }
    }
    Ok(table)
}

/// Fails with the sorted list of sequence ids that have no descriptor set.
pub fn check_join(records: &[EncodingRecord], descriptors: &DescriptorTable) -> Result<()> {
    let missing: BTreeSet<&str> = records
        .iter()
        .filter(|r| !descriptors.contains_key(&r.sequence_id))
        .map(|r| r.sequence_id.as_str())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Join(format!(
            "no descriptors for sequence(s): {}",
            missing.into_iter().collect::<Vec<_>>().join(", ")
        )))
    }
}

/// Content factor of every sequence referenced by `records`.
pub(crate) fn content_factors(
    records: &[EncodingRecord],
    descriptors: &DescriptorTable,
    spec: &ContentFactorSpec,
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    if spec.is_content_blind() {
        for r in records {
            out.insert(r.sequence_id.clone(), 1.0);
        }
        return Ok(out);
    }
    check_join(records, descriptors)?;
    for r in records {
        if !out.contains_key(&r.sequence_id) {
            let c = content_factor(&descriptors[&r.sequence_id], spec)?;
            out.insert(r.sequence_id.clone(), c);
        }
    }
    Ok(out)
}

/// Regression points for the time fit, one per record.
pub fn fit_points(
    records: &[EncodingRecord],
    descriptors: &DescriptorTable,
    spec: &ContentFactorSpec,
) -> Result<Vec<FitPoint>> {
    spec.validate()?;
    for r in records {
        r.validate()?;
    }
    let factors = content_factors(records, descriptors, spec)?;
    Ok(records
        .iter()
        .map(|r| FitPoint {
            content: factors[&r.sequence_id],
            n_intra: f64::from(r.n_intra),
            crf: f64::from(r.crf),
            preset: f64::from(r.preset),
            t_kpix: r.time_kpix(),
        })
        .collect())
}

/// Fits the time model to measured records joined with their descriptors.
///
/// Descriptors are not consulted for a content-blind spec.
pub fn fit_time_model(
    records: &[EncodingRecord],
    descriptors: &DescriptorTable,
    spec: &ContentFactorSpec,
    cfg: &FitConfig,
) -> Result<TimeFit> {
    let points = fit_points(records, descriptors, spec)?;
    fit_time_points(&points, cfg)
}

/// Predicted total time in seconds for each record.
pub fn predict_times(
    params: &TimeModelParams,
    records: &[EncodingRecord],
    descriptors: &DescriptorTable,
    spec: &ContentFactorSpec,
) -> Result<Vec<f64>> {
    if spec.is_content_blind() {
        let blind = DescriptorSet::new("", 0, 0, 0);
        return records
            .iter()
            .map(|r| {
                let mut d = blind.clone();
                d.sequence_id.clone_from(&r.sequence_id);
                predict_record(params, None, spec, &d, r).map(|p| p.time_s)
            })
            .collect();
    }
    check_join(records, descriptors)?;
    records
        .iter()
        .map(|r| predict_record(params, None, spec, &descriptors[&r.sequence_id], r).map(|p| p.time_s))
        .collect()
}

/// MAPE of the time model over `records`, in percent.
pub fn time_mape(
    params: &TimeModelParams,
    records: &[EncodingRecord],
    descriptors: &DescriptorTable,
    spec: &ContentFactorSpec,
) -> Result<f64> {
    let predicted = predict_times(params, records, descriptors, spec)?;
    let measured: Vec<f64> = records.iter().map(|r| r.time_s).collect();
    mape(&measured, &predicted)
}
