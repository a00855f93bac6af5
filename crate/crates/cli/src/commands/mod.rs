pub mod analyze;
pub mod evaluate;
pub mod fit;
pub mod ingest_power;
pub mod oracle;
pub mod predict;
pub mod synth;

use clap::Args as ClapArgs;
use encost_core::estimation::{FitConfig, Objective};
use encost_core::models::{ContentFactorSpec, Normalizer, SpatialSource, TemporalSource, DEFAULT_FLOOR};

use crate::{usage, Failure};

/// Options of the time-model fit.
#[derive(Debug, Clone, ClapArgs)]
pub struct FitOptions {
    /// Residual minimized by the fit: relative or absolute.
    #[arg(long, default_value = "relative-squared")]
    pub objective: Objective,

    /// Iteration budget of the nonlinear refinement.
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,

    /// Relative objective change that ends the refinement.
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
}

impl FitOptions {
    pub fn config(&self, seed: u64) -> Result<FitConfig, Failure> {
        let cfg = FitConfig {
            objective: self.objective,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed,
            ..Default::default()
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

/// How descriptors combine into the content factor.
#[derive(Debug, Clone, ClapArgs)]
pub struct SpecOptions {
    /// Spatial descriptor: si, vca, var, ultrafast or none.
    #[arg(long, default_value = "vca")]
    pub spatial: SpatialSource,

    /// Temporal descriptor: ti, vca, flow, ultrafast or none.
    #[arg(long, default_value = "vca")]
    pub temporal: TemporalSource,

    /// Transform applied to the spatial descriptor.
    #[arg(long, default_value = "ln")]
    pub spatial_norm: Normalizer,

    /// Transform applied to the temporal descriptor.
    #[arg(long, default_value = "identity")]
    pub temporal_norm: Normalizer,

    /// Lower bound applied to each factor term.
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    pub floor: f64,
}

impl SpecOptions {
    pub fn spec(&self) -> Result<ContentFactorSpec, Failure> {
        let spec = ContentFactorSpec {
            spatial_source: self.spatial,
            temporal_source: self.temporal,
            spatial_normalizer: self.spatial_norm,
            temporal_normalizer: self.temporal_norm,
            floor: self.floor,
        };
        spec.validate().map_err(|e| usage(e.to_string()))?;
        Ok(spec)
    }
}
