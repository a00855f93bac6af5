use std::collections::BTreeMap;

use serde::Serialize;

use super::metrics::{mape, mean_std};
use super::{fit_time_model, DescriptorTable, FitConfig, TimeFit};
use crate::error::{Error, Result};
use crate::models::{predict_time_kpix, ContentFactorSpec, EncodingRecord, TimeModelParams};

/// Per-sequence ratio of measured to content-blind predicted time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleFactor {
    pub class_id: String,
    /// Mean ratio over the sequence's encodes.
    pub factor: f64,
    /// Population standard deviation of the ratios.
    pub std: f64,
    pub n: usize,
}

/// Content-blind fit with the content exponent held at 1.
pub fn fit_content_blind_baseline(records: &[EncodingRecord], cfg: &FitConfig) -> Result<TimeFit> {
    let mut cfg = *cfg;
    cfg.init.xi = 1.0;
    fit_time_model(
        records,
        &DescriptorTable::new(),
        &ContentFactorSpec::content_blind(),
        &cfg,
    )
}

fn blind_time(params: &TimeModelParams, r: &EncodingRecord) -> Result<f64> {
    Ok(predict_time_kpix(params, 1.0, r.n_intra, r.crf, r.preset)? * r.kilopixels())
}

/// Mean and spread of `measured / predicted` per sequence, with predictions
/// from `params` at `C = 1`.
pub fn oracle_content_factors(
    records: &[EncodingRecord],
    params: &TimeModelParams,
) -> Result<BTreeMap<String, OracleFactor>> {
    let mut ratios: BTreeMap<&str, (&str, Vec<f64>)> = BTreeMap::new();
    for r in records {
        r.validate()?;
        let t_hat = blind_time(params, r)?;
        if !(t_hat > 0.0) {
            return Err(Error::Domain(format!(
                "non-positive predicted time for {:?}",
                r.sequence_id
            )));
        }
        ratios
            .entry(&r.sequence_id)
            .or_insert_with(|| (&r.class_id, Vec::new()))
            .1
            .push(r.time_s / t_hat);
    }
    Ok(ratios
        .into_iter()
        .map(|(id, (class, v))| {
            let (factor, std) = mean_std(&v);
            (
                id.to_string(),
                OracleFactor {
                    class_id: class.to_string(),
                    factor,
                    std,
                    n: v.len(),
                },
            )
        })
        .collect())
}

/// MAPE obtained when each sequence's prediction is scaled by its oracle factor.
pub fn oracle_mape(
    records: &[EncodingRecord],
    params: &TimeModelParams,
    factors: &BTreeMap<String, OracleFactor>,
) -> Result<f64> {
    let mut measured = Vec::with_capacity(records.len());
    let mut predicted = Vec::with_capacity(records.len());
    for r in records {
        let f = factors
            .get(&r.sequence_id)
            .ok_or_else(|| Error::Join(format!("no oracle factor for {:?}", r.sequence_id)))?;
        measured.push(r.time_s);
        predicted.push(f.factor * blind_time(params, r)?);
    }
    mape(&measured, &predicted)
}
