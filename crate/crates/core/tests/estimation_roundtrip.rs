mod support;

use std::collections::BTreeSet;

use encost_core::estimation::{
    cross_validate, descriptor_grid_evaluation, descriptor_table, fit_content_blind_baseline, fit_log_linear,
    fit_points, fit_time_model, fit_time_points, mape, oracle_content_factors, oracle_mape, predict_times, time_mape,
    EnergyMode, FitConfig, FitPoint, FoldAssignment, Objective,
};
use encost_core::models::{ContentFactorSpec, SpatialSource, TemporalSource, TimeModelParams};
use encost_core::synthetic::{generate, generating_spec, SyntheticConfig};
use proptest::prelude::*;
use support::oracles;

fn noisy(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        time_noise: 0.02,
        energy_noise: 0.01,
        seed,
        ..Default::default()
    }
}

#[test]
fn noiseless_round_trip_reproduces_generator() {
    let ds = generate(&SyntheticConfig::default()).unwrap();
    let table = descriptor_table(ds.descriptors.clone()).unwrap();
    let fit = fit_time_model(&ds.records, &table, &generating_spec(), &FitConfig::default()).unwrap();
    assert!(fit.converged);
    let predicted = predict_times(&fit.params, &ds.records, &table, &generating_spec()).unwrap();
    let err = mape(&ds.true_times, &predicted).unwrap();
    assert!(err < 0.1, "round-trip MAPE {err}%");
}

#[test]
fn stage_one_equals_reference_normal_equations() {
    let mut cfg = noisy(3);
    cfg.sequences_per_class = 2;
    cfg.presets = vec![1, 4, 8, 13];
    cfg.crfs = vec![32, 63];
    let ds = generate(&cfg).unwrap();
    let table = descriptor_table(ds.descriptors.clone()).unwrap();
    let points = fit_points(&ds.records, &table, &generating_spec()).unwrap();
    let fast = fit_log_linear(&points, &FitConfig::default()).unwrap();

    let x: Vec<Vec<f64>> = points
        .iter()
        .map(|p| vec![p.content.ln(), p.n_intra.ln(), p.preset.ln(), p.preset, 1.0])
        .collect();
    let y: Vec<f64> = points.iter().map(|p| p.t_kpix.ln() + p.crf.ln()).collect();
    let reference = oracles::least_squares(&x, &y);
    let got = [fast.xi, fast.delta, fast.alpha, fast.beta, fast.gamma];
    for (g, r) in got.iter().zip(&reference) {
        assert!((g - r).abs() <= 1e-8 * r.abs().max(1.0), "{got:?} vs {reference:?}");
    }
    assert_eq!(fast.t0, 0.0);
}

#[test]
fn noisy_cross_validation_and_breakdowns() {
    let ds = generate(&noisy(11)).unwrap();
    let table = descriptor_table(ds.descriptors.clone()).unwrap();
    let folds = FoldAssignment::round_robin(&ds.records, 3, 11).unwrap();
    let report = cross_validate(
        &ds.records,
        &table,
        &generating_spec(),
        &FitConfig::default(),
        &folds,
        EnergyMode::AllData,
    )
    .unwrap();
    assert!(report.mean_mape < 4.0, "CV MAPE {}", report.mean_mape);
    let mean = report.per_fold_mape.iter().sum::<f64>() / 3.0;
    assert_eq!(report.mean_mape, mean);
    let presets: BTreeSet<u32> = report.per_preset_mape.keys().copied().collect();
    assert_eq!(presets, (1..=13).collect());
    let crfs: Vec<u32> = report.per_crf_mape.keys().copied().collect();
    assert_eq!(crfs, vec![32, 43, 55, 63]);
    let energy = report.energy.expect("energy evaluated");
    let gap = energy.mean_mape - report.mean_mape;
    assert!(
        (0.0..=5.0).contains(&gap),
        "energy {} vs time {}",
        energy.mean_mape,
        report.mean_mape
    );
}

#[test]
fn noiseless_folds_are_nearly_exact() {
    let ds = generate(&SyntheticConfig::default()).unwrap();
    let table = descriptor_table(ds.descriptors.clone()).unwrap();
    let folds = FoldAssignment::round_robin(&ds.records, 3, 0).unwrap();
    let report = cross_validate(
        &ds.records,
        &table,
        &generating_spec(),
        &FitConfig::default(),
        &folds,
        EnergyMode::Off,
    )
    .unwrap();
    assert!(
        report.per_fold_mape.iter().all(|&m| m < 0.1),
        "{:?}",
        report.per_fold_mape
    );
    assert!(report.energy.is_none());
}

#[test]
fn grid_minimum_is_the_generating_pair() {
    let ds = generate(&noisy(5)).unwrap();
    let table = descriptor_table(ds.descriptors.clone()).unwrap();
    let folds = FoldAssignment::round_robin(&ds.records, 3, 5).unwrap();
    let grid =
        descriptor_grid_evaluation(&ds.records, &table, &FitConfig::default(), &folds, EnergyMode::AllData).unwrap();
    assert_eq!(grid.cells.len(), 11);
    let best = grid.best_time_cell().unwrap();
    assert_eq!((best.spatial, best.temporal), (SpatialSource::Vca, TemporalSource::Vca));
    let blind = grid
        .cell(SpatialSource::None, TemporalSource::None)
        .unwrap()
        .time_mape
        .unwrap();
    let worst = grid.cells.iter().filter_map(|c| c.time_mape).fold(0.0, f64::max);
    assert!(blind >= 0.8 * worst, "content-blind {blind} vs worst {worst}");
    assert!(blind > 5.0 * best.time_mape.unwrap());
    assert!(grid.has_energy());
    let text = grid.render_time_table();
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn grid_marks_missing_descriptors_unavailable() {
    let mut ds = generate(&noisy(6)).unwrap();
    for d in &mut ds.descriptors {
        d.c_t_flow = None;
    }
    let table = descriptor_table(ds.descriptors.clone()).unwrap();
    let folds = FoldAssignment::round_robin(&ds.records, 3, 6).unwrap();
    let grid = descriptor_grid_evaluation(&ds.records, &table, &FitConfig::default(), &folds, EnergyMode::Off).unwrap();
    let flow_cells: Vec<_> = grid
        .cells
        .iter()
        .filter(|c| c.temporal == TemporalSource::Flow)
        .collect();
    assert_eq!(flow_cells.len(), 3);
    assert!(flow_cells
        .iter()
        .all(|c| c.time_mape.is_none() && c.unavailable.is_some()));
    assert!(grid.render_time_table().contains("n/a"));
    assert_eq!(grid.cells.iter().filter(|c| c.time_mape.is_some()).count(), 8);
}

#[test]
fn oracle_factors_track_true_content() {
    let ds = generate(&noisy(8)).unwrap();
    let blind = fit_content_blind_baseline(&ds.records, &FitConfig::default()).unwrap();
    assert!(blind.frozen.contains(&"xi"));
    assert_eq!(blind.params.xi, 1.0);
    let factors = oracle_content_factors(&ds.records, &blind.params).unwrap();
    assert_eq!(factors.len(), 18);
    let oracle = oracle_mape(&ds.records, &blind.params, &factors).unwrap();
    let blind_mape = time_mape(
        &blind.params,
        &ds.records,
        &Default::default(),
        &ContentFactorSpec::content_blind(),
    )
    .unwrap();
    assert!(oracle < blind_mape / 3.0, "oracle {oracle} vs blind {blind_mape}");

    // the blind fit's intra-count exponent absorbs part of the content spread
    let intra: std::collections::BTreeMap<&str, f64> = ds
        .records
        .iter()
        .map(|r| (r.sequence_id.as_str(), f64::from(r.n_intra).ln()))
        .collect();
    let shift = SyntheticConfig::default().time_params.delta - blind.params.delta;
    let (xs, ys): (Vec<f64>, Vec<f64>) = factors
        .iter()
        .map(|(id, f)| (ds.content[id].ln() + shift * intra[id.as_str()], f.factor.ln()))
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r = cov / (vx * vy).sqrt();
    assert!(r > 0.95, "correlation {r}");
}

#[test]
fn unknown_sequences_are_reported() {
    let ds = generate(&SyntheticConfig::default()).unwrap();
    let mut descriptors = ds.descriptors.clone();
    descriptors.retain(|d| d.sequence_id != "classB_seq03");
    let table = descriptor_table(descriptors).unwrap();
    let err = fit_time_model(&ds.records, &table, &generating_spec(), &FitConfig::default()).unwrap_err();
    assert!(err.to_string().contains("classB_seq03"), "{err}");
    // content-blind fits ignore descriptors
    assert!(fit_time_model(
        &ds.records,
        &table,
        &ContentFactorSpec::content_blind(),
        &FitConfig::default()
    )
    .is_ok());
}

fn random_points(params: TimeModelParams, noise: &[f64]) -> Vec<FitPoint> {
    let mut pts = Vec::new();
    let mut k = 0;
    for c in [0.7, 1.3, 2.9] {
        for preset in [1.0, 3.0, 6.0, 9.0, 13.0] {
            for crf in [32.0, 55.0] {
                let lead =
                    (params.xi * f64::ln(c) + params.alpha * f64::ln(preset) + params.beta * preset + params.gamma)
                        .exp()
                        / crf;
                pts.push(FitPoint {
                    content: c,
                    n_intra: 1.0,
                    crf,
                    preset,
                    t_kpix: (lead + params.t0) * (1.0 + noise[k % noise.len()]),
                });
                k += 1;
            }
        }
    }
    pts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn refinement_never_worsens_stage_one(
        alpha in -1.0f64..2.0,
        beta in -0.8f64..0.1,
        gamma in -2.0f64..3.0,
        xi in 0.2f64..1.5,
        t0 in 0.0f64..0.5,
        noise in prop::collection::vec(-0.1f64..0.1, 7),
        absolute in any::<bool>(),
    ) {
        let params = TimeModelParams { alpha, beta, gamma, delta: 0.0, xi, t0 };
        let pts = random_points(params, &noise);
        let cfg = FitConfig {
            objective: if absolute { Objective::AbsoluteSquared } else { Objective::RelativeSquared },
            ..Default::default()
        };
        let fit = fit_time_points(&pts, &cfg).unwrap();
        prop_assert!(fit.objective <= fit.stage1_objective);
        prop_assert!(fit.params.t0 >= 0.0);
    }
}
