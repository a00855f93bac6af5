use std::fmt::Write as _;

use log::warn;
use serde::Serialize;

use super::cv::{cross_validate, EnergyMode, FoldAssignment};
use super::{DescriptorTable, FitConfig};
use crate::descriptors::SCHEMA_VERSION;
use crate::error::Result;
use crate::models::{ContentFactorSpec, EncodingRecord, SpatialSource, TemporalSource};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub spatial: SpatialSource,
    pub temporal: TemporalSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_mape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_mape: Option<f64>,
    pub per_fold_mape: Vec<f64>,
    /// Why the cell could not be evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unavailable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub schema_version: u32,
    pub n_records: usize,
    pub folds: usize,
    pub energy_mode: EnergyMode,
    pub cells: Vec<GridCell>,
    pub warnings: Vec<String>,
}

/// Every evaluated pairing: descriptor grid, ultrafast, then content-blind.
pub fn grid_specs() -> Vec<ContentFactorSpec> {
    let mut specs = Vec::new();
    for t in TemporalSource::DESCRIPTORS {
        for s in SpatialSource::DESCRIPTORS {
            specs.push(ContentFactorSpec::new(s, t).expect("descriptor pairing is valid"));
        }
    }
    specs.push(ContentFactorSpec::ultrafast());
    specs.push(ContentFactorSpec::content_blind());
    specs
}

/// Cross-validates every pairing in [`grid_specs`]; failing cells are marked
/// unavailable instead of aborting the run.
pub fn descriptor_grid_evaluation(
    records: &[EncodingRecord],
    descriptors: &DescriptorTable,
    cfg: &FitConfig,
    folds: &FoldAssignment,
    energy_mode: EnergyMode,
) -> Result<GridReport> {
    folds.validate(records)?;
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for spec in grid_specs() {
        let cell = match cross_validate(records, descriptors, &spec, cfg, folds, energy_mode) {
            Ok(report) => {
                warnings.extend(report.warnings.iter().map(|w| format!("{}: {w}", spec.label())));
                GridCell {
                    spatial: spec.spatial_source,
                    temporal: spec.temporal_source,
                    time_mape: Some(report.mean_mape),
                    energy_mape: report.energy.as_ref().map(|e| e.mean_mape),
                    per_fold_mape: report.per_fold_mape,
                    unavailable: None,
                }
            }
            Err(e) => {
                warn!("{}: {e}", spec.label());
                GridCell {
                    spatial: spec.spatial_source,
                    temporal: spec.temporal_source,
                    time_mape: None,
                    energy_mape: None,
                    per_fold_mape: Vec::new(),
                    unavailable: Some(e.to_string()),
                }
            }
        };
        cells.push(cell);
    }
    Ok(GridReport {
        schema_version: SCHEMA_VERSION,
        n_records: records.len(),
        folds: folds.k(),
        energy_mode,
        cells,
        warnings,
    })
}

impl GridReport {
    pub fn cell(&self, spatial: SpatialSource, temporal: TemporalSource) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.spatial == spatial && c.temporal == temporal)
    }

    /// Cell with the lowest time MAPE.
    pub fn best_time_cell(&self) -> Option<&GridCell> {
        self.cells
            .iter()
            .filter(|c| c.time_mape.is_some())
            .min_by(|a, b| a.time_mape.partial_cmp(&b.time_mape).expect("finite MAPE"))
    }

    pub fn has_energy(&self) -> bool {
        self.cells.iter().any(|c| c.energy_mape.is_some())
    }

    /// Aligned text table: temporal descriptors as rows, spatial as columns.
    pub fn render_time_table(&self) -> String {
        self.render("Encoding time MAPE (%)", |c| c.time_mape)
    }

    pub fn render_energy_table(&self) -> String {
        self.render("Encoding energy MAPE (%)", |c| c.energy_mape)
    }

    fn render(&self, title: &str, value: impl Fn(&GridCell) -> Option<f64>) -> String {
        let fmt_cell = |s: SpatialSource, t: TemporalSource| match self.cell(s, t) {
            None => "-".to_string(),
            Some(c) => value(c).map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}")),
        };
        let mut columns: Vec<SpatialSource> = SpatialSource::DESCRIPTORS.to_vec();
        columns.push(SpatialSource::Ultrafast);
        let mut rows: Vec<TemporalSource> = TemporalSource::DESCRIPTORS.to_vec();
        rows.push(TemporalSource::Ultrafast);

        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:<14}", "");
        for s in &columns {
            let _ = write!(out, "{:>11}", s.label());
        }
        out.push('\n');
        for t in &rows {
            let _ = write!(out, "{:<14}", t.label());
            for s in &columns {
                let _ = write!(out, "{:>11}", fmt_cell(*s, *t));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "Content-blind (C = 1): {}",
            fmt_cell(SpatialSource::None, TemporalSource::None)
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_enumeration() {
        let specs = grid_specs();
        assert_eq!(specs.len(), 11);
        assert!(specs[9].is_ultrafast());
        assert!(specs[10].is_content_blind());
    }

    #[test]
    fn table_layout() {
        let mut cells: Vec<GridCell> = grid_specs()
            .into_iter()
            .enumerate()
            .map(|(i, s)| GridCell {
                spatial: s.spatial_source,
                temporal: s.temporal_source,
                time_mape: Some(i as f64),
                energy_mape: None,
                per_fold_mape: vec![],
                unavailable: None,
            })
            .collect();
        cells[4].time_mape = None;
        let report = GridReport {
            schema_version: 1,
            n_records: 0,
            folds: 3,
            energy_mode: EnergyMode::Off,
            cells,
            warnings: vec![],
        };
        let table = report.render_time_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[1].contains("SI") && lines[1].contains("Ultrafast"));
        assert!(lines[2].starts_with("TI") && lines[2].contains("0.00") && lines[2].ends_with('-'));
        assert!(lines[3].contains("n/a"));
        assert!(lines[5].trim_end().ends_with("9.00"));
        assert!(lines[6].ends_with("10.00"));
        assert_eq!(report.best_time_cell().unwrap().time_mape, Some(0.0));
        assert!(!report.has_energy());
    }
}
