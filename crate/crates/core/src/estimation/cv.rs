use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::energy::fit_energy_linear;
use super::metrics::mape;
use super::{fit_time_model, predict_times, DescriptorTable, FitConfig};
use crate::descriptors::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::models::{ContentFactorSpec, EncodingRecord, EnergyModelParams, TimeModelParams};

/// Maps every sequence to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    k: usize,
    fold_of: BTreeMap<String, usize>,
}

fn classes_of(records: &[EncodingRecord]) -> Result<BTreeMap<&str, &str>> {
    let mut class_of: BTreeMap<&str, &str> = BTreeMap::new();
    for r in records {
        let prev = class_of.insert(&r.sequence_id, &r.class_id);
        if let Some(prev) = prev.filter(|p| *p != r.class_id) {
            return Err(Error::Config(format!(
                "sequence {:?} listed under classes {prev:?} and {:?}",
                r.sequence_id, r.class_id
            )));
        }
    }
    Ok(class_of)
}

impl FoldAssignment {
    /// Shuffles each class's sequences with `seed`, then deals them to folds in turn.
    ///
    /// The dealing position carries over from one class to the next, so classes
    /// whose size is not a multiple of `k` still spread evenly.
    pub fn round_robin(records: &[EncodingRecord], k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {k}")));
        }
        let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (id, class) in classes_of(records)? {
            by_class.entry(class).or_default().push(id);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fold_of = BTreeMap::new();
        let mut next = 0usize;
        for ids in by_class.values_mut() {
            ids.sort_unstable();
            ids.shuffle(&mut rng);
            for id in ids.iter() {
                fold_of.insert(id.to_string(), next % k);
                next += 1;
            }
        }
        let folds = FoldAssignment { k, fold_of };
        folds.validate(records)?;
        Ok(folds)
    }

    pub fn from_map(k: usize, fold_of: BTreeMap<String, usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {k}")));
        }
        if let Some((id, f)) = fold_of.iter().find(|(_, &f)| f >= k) {
            return Err(Error::Config(format!("sequence {id:?} assigned to fold {f} of {k}")));
        }
        Ok(FoldAssignment { k, fold_of })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, sequence_id: &str) -> Option<usize> {
        self.fold_of.get(sequence_id).copied()
    }

    pub fn sequences_in(&self, fold: usize) -> Vec<&str> {
        self.fold_of
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Every record's sequence is assigned and no fold is empty.
    pub fn validate(&self, records: &[EncodingRecord]) -> Result<()> {
        let unassigned: BTreeSet<&str> = records
            .iter()
            .filter(|r| !self.fold_of.contains_key(&r.sequence_id))
            .map(|r| r.sequence_id.as_str())
            .collect();
        if !unassigned.is_empty() {
            return Err(Error::Config(format!(
                "sequences without a fold: {}",
                unassigned.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }
        for f in 0..self.k {
            if !records.iter().any(|r| self.fold_of[&r.sequence_id] == f) {
                return Err(Error::Config(format!("fold {f} has no validation records")));
            }
        }
        Ok(())
    }

    /// Number of sequences of each class in each fold.
    pub fn class_counts(&self, records: &[EncodingRecord]) -> Result<BTreeMap<String, Vec<usize>>> {
        let mut counts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (id, class) in classes_of(records)? {
            let f = self
                .fold_of(id)
                .ok_or_else(|| Error::Config(format!("sequence {id:?} has no fold")))?;
            counts.entry(class.to_string()).or_insert_with(|| vec![0; self.k])[f] += 1;
        }
        Ok(counts)
    }

    /// Training and validation records for `fold`.
    pub fn split(&self, records: &[EncodingRecord], fold: usize) -> (Vec<EncodingRecord>, Vec<EncodingRecord>) {
        records
            .iter()
            .cloned()
            .partition(|r| self.fold_of(&r.sequence_id) != Some(fold))
    }
}

/// How the energy model is evaluated alongside the time model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMode {
    Off,
    /// Energy line fitted once on all records, as for the reported energy model.
    #[default]
    AllData,
    /// Energy line refitted on each training split.
    CrossValidated,
}

impl FromStr for EnergyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(EnergyMode::Off),
            "all-data" => Ok(EnergyMode::AllData),
            "cross-validated" | "cv" => Ok(EnergyMode::CrossValidated),
            _ => Err(Error::Config(format!("unknown energy mode {s:?}"))),
        }
    }
}

impl fmt::Display for EnergyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnergyMode::Off => "off",
            EnergyMode::AllData => "all-data",
            EnergyMode::CrossValidated => "cross-validated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train_records: usize,
    pub n_validation_records: usize,
    pub validation_sequences: Vec<String>,
    pub params: TimeModelParams,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mape: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_params: Option<EnergyModelParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_mape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyEvaluation {
    pub mode: EnergyMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<EnergyModelParams>,
    pub per_fold_mape: Vec<f64>,
    pub mean_mape: f64,
    pub per_preset_mape: BTreeMap<u32, f64>,
    pub per_crf_mape: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub spec: ContentFactorSpec,
    pub n_records: usize,
    pub per_fold_mape: Vec<f64>,
    pub mean_mape: f64,
    pub per_preset_mape: BTreeMap<u32, f64>,
    pub per_crf_mape: BTreeMap<u32, f64>,
    pub folds: Vec<FoldResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyEvaluation>,
    pub warnings: Vec<String>,
}

/// Held-out predictions pooled across folds.
struct Pooled {
    preset: u32,
    crf: u32,
    measured: f64,
    predicted: f64,
}

fn breakdown<K: Ord + Copy>(pooled: &[Pooled], key: impl Fn(&Pooled) -> K) -> Result<BTreeMap<K, f64>> {
    let mut groups: BTreeMap<K, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in pooled {
        let g = groups.entry(key(p)).or_default();
        g.0.push(p.measured);
        g.1.push(p.predicted);
    }
    groups
        .into_iter()
        .map(|(k, (y, y_hat))| Ok((k, mape(&y, &y_hat)?)))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// k-fold evaluation: fit on all folds but one, score the held-out fold.
pub fn cross_validate(
    records: &[EncodingRecord],
    descriptors: &DescriptorTable,
    spec: &ContentFactorSpec,
    cfg: &FitConfig,
    folds: &FoldAssignment,
    energy_mode: EnergyMode,
) -> Result<EvaluationReport> {
    folds.validate(records)?;
    let mut warnings = Vec::new();

    let with_energy = records.iter().filter(|r| r.energy_j.is_some()).count();
    let energy_mode = match energy_mode {
        EnergyMode::Off => EnergyMode::Off,
        _ if with_energy == records.len() => energy_mode,
        _ => {
            if with_energy > 0 {
                warnings.push(format!(
                    "energy evaluation skipped: only {with_energy} of {} records carry energy",
                    records.len()
                ));
            }
            EnergyMode::Off
        }
    };
    let all_data_energy = match energy_mode {
        EnergyMode::AllData => Some(fit_energy_linear(records)?),
        _ => None,
    };

    let mut fold_results = Vec::with_capacity(folds.k());
    let mut pooled_time = Vec::with_capacity(records.len());
    let mut pooled_energy = Vec::new();
    for f in 0..folds.k() {
        let (train, validation) = folds.split(records, f);
        let fit = fit_time_model(&train, descriptors, spec, cfg)?;
        if !fit.converged {
            let msg = format!("fold {f}: time fit did not converge in {} iterations", fit.iterations);
            debug!("{msg}");
            warnings.push(msg);
        }
        let predicted = predict_times(&fit.params, &validation, descriptors, spec)?;
        let measured: Vec<f64> = validation.iter().map(|r| r.time_s).collect();
        let fold_mape = mape(&measured, &predicted)?;

        let energy_params = match energy_mode {
            EnergyMode::Off => None,
            EnergyMode::AllData => all_data_energy,
            EnergyMode::CrossValidated => Some(fit_energy_linear(&train)?),
        };
        let energy_mape = match energy_params {
            Some(ep) => {
                let e_meas: Vec<f64> = validation.iter().filter_map(|r| r.energy_j).collect();
                let e_pred: Vec<f64> = predicted.iter().map(|t| ep.e0 + ep.p * t).collect();
                for ((r, &y), &y_hat) in validation.iter().zip(&e_meas).zip(&e_pred) {
                    pooled_energy.push(Pooled {
                        preset: r.preset,
                        crf: r.crf,
                        measured: y,
                        predicted: y_hat,
                    });
                }
                Some(mape(&e_meas, &e_pred)?)
            }
            None => None,
        };

        for ((r, &y), &y_hat) in validation.iter().zip(&measured).zip(&predicted) {
            pooled_time.push(Pooled {
                preset: r.preset,
                crf: r.crf,
                measured: y,
                predicted: y_hat,
            });
        }
        let mut validation_sequences: Vec<String> = folds.sequences_in(f).into_iter().map(String::from).collect();
        validation_sequences.retain(|id| validation.iter().any(|r| &r.sequence_id == id));
        fold_results.push(FoldResult {
            fold: f,
            n_train_records: train.len(),
            n_validation_records: validation.len(),
            validation_sequences,
            params: fit.params,
            objective: fit.objective,
            iterations: fit.iterations,
            converged: fit.converged,
            mape: fold_mape,
            energy_params,
            energy_mape,
        });
    }

    let per_fold_mape: Vec<f64> = fold_results.iter().map(|f| f.mape).collect();
    let energy = if energy_mode == EnergyMode::Off {
        None
    } else {
        let per_fold: Vec<f64> = fold_results.iter().filter_map(|f| f.energy_mape).collect();
        Some(EnergyEvaluation {
            mode: energy_mode,
            params: all_data_energy,
            mean_mape: mean(&per_fold),
            per_fold_mape: per_fold,
            per_preset_mape: breakdown(&pooled_energy, |p| p.preset)?,
            per_crf_mape: breakdown(&pooled_energy, |p| p.crf)?,
        })
    };
    Ok(EvaluationReport {
        schema_version: SCHEMA_VERSION,
        spec: *spec,
        n_records: records.len(),
        mean_mape: mean(&per_fold_mape),
        per_fold_mape,
        per_preset_mape: breakdown(&pooled_time, |p| p.preset)?,
        per_crf_mape: breakdown(&pooled_time, |p| p.crf)?,
        folds: fold_results,
        energy,
        warnings,
    })
}
