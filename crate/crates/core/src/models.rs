//! Content factor, encoding-time model, and energy model.
//!
//! Time per kilopixel is modelled as
//! `C^ξ · n_intra^δ · (1/CRF) · p^α · e^(β·p + γ) + t0`, where `C` is the
//! content factor built from one spatial and one temporal descriptor. Energy is
//! affine in the total encoding time: `E = E0 + P · t_kpix · (W·H/1000) · n_frames`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descriptors::{BlockGridSpec, DescriptorSet};
use crate::error::{Error, Result};
use crate::y4m::Rational;

pub const MIN_PRESET: u32 = 1;
pub const MAX_PRESET: u32 = 13;
pub const DEFAULT_FLOOR: f64 = 1e-6;
/// Keyframe spacing assumed when a record lacks an intra-frame count.
pub const DEFAULT_GOP_SECONDS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub xi: f64,
    pub t0: f64,
}

impl TimeModelParams {
    pub const NAMES: [&'static str; 6] = ["alpha", "beta", "gamma", "delta", "xi", "t0"];

    pub fn zero() -> Self {
        TimeModelParams::from_array([0.0; 6])
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.alpha, self.beta, self.gamma, self.delta, self.xi, self.t0]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        TimeModelParams {
            alpha: a[0],
            beta: a[1],
            gamma: a[2],
            delta: a[3],
            xi: a[4],
            t0: a[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite time model parameter in {self:?}")));
        }
        if self.t0 < 0.0 {
            return Err(Error::Domain(format!("offset time t0 = {} is negative", self.t0)));
        }
        Ok(())
    }
}

impl Default for TimeModelParams {
    fn default() -> Self {
        TimeModelParams::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModelParams {
    /// Offset energy in joules.
    pub e0: f64,
    /// Slope in watts.
    pub p: f64,
}

impl EnergyModelParams {
    pub fn new(e0: f64, p: f64) -> Result<Self> {
        if !e0.is_finite() || !p.is_finite() || p <= 0.0 {
            return Err(Error::Domain(format!(
                "energy model needs finite e0 and p > 0, got e0={e0}, p={p}"
            )));
        }
        Ok(EnergyModelParams { e0, p })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialSource {
    Si,
    Vca,
    Var,
    Ultrafast,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalSource {
    Ti,
    Vca,
    Flow,
    Ultrafast,
    None,
}

impl SpatialSource {
    pub const DESCRIPTORS: [SpatialSource; 3] = [SpatialSource::Si, SpatialSource::Vca, SpatialSource::Var];

    pub fn label(self) -> &'static str {
        match self {
            SpatialSource::Si => "SI",
            SpatialSource::Vca => "VCA E",
            SpatialSource::Var => "Variance",
            SpatialSource::Ultrafast => "Ultrafast",
            SpatialSource::None => "None",
        }
    }

    fn value(self, d: &DescriptorSet) -> Option<(&'static str, Option<f64>)> {
        match self {
            SpatialSource::Si => Some(("c_s_si", d.c_s_si)),
            SpatialSource::Vca => Some(("c_s_vca", d.c_s_vca)),
            SpatialSource::Var => Some(("c_s_var", d.c_s_var)),
            SpatialSource::Ultrafast => Some(("c_ultrafast", d.c_ultrafast)),
            SpatialSource::None => None,
        }
    }
}

impl TemporalSource {
    pub const DESCRIPTORS: [TemporalSource; 3] = [TemporalSource::Ti, TemporalSource::Vca, TemporalSource::Flow];

    pub fn label(self) -> &'static str {
        match self {
            TemporalSource::Ti => "TI",
            TemporalSource::Vca => "VCA h",
            TemporalSource::Flow => "Optical flow",
            TemporalSource::Ultrafast => "Ultrafast",
            TemporalSource::None => "None",
        }
    }

    fn value(self, d: &DescriptorSet) -> Option<(&'static str, Option<f64>)> {
        match self {
            TemporalSource::Ti => Some(("c_t_ti", d.c_t_ti)),
            TemporalSource::Vca => Some(("c_t_vca", d.c_t_vca)),
            TemporalSource::Flow => Some(("c_t_flow", d.c_t_flow)),
            TemporalSource::Ultrafast => Some(("c_ultrafast", d.c_ultrafast)),
            TemporalSource::None => None,
        }
    }
}

macro_rules! impl_source_str {
    ($ty:ty, $($name:literal => $variant:path),+) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    _ => Err(Error::Config(format!(concat!("unknown ", stringify!($ty), " {:?}"), s))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self {
                    $($variant => $name,)+
                };
                f.write_str(name)
            }
        }
    };
}

impl_source_str!(SpatialSource,
    "si" => SpatialSource::Si,
    "vca" => SpatialSource::Vca,
    "var" => SpatialSource::Var,
    "ultrafast" => SpatialSource::Ultrafast,
    "none" => SpatialSource::None);

impl_source_str!(TemporalSource,
    "ti" => TemporalSource::Ti,
    "vca" => TemporalSource::Vca,
    "flow" => TemporalSource::Flow,
    "ultrafast" => TemporalSource::Ultrafast,
    "none" => TemporalSource::None);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    Ln,
    Identity,
}

impl Normalizer {
    fn apply(self, v: f64) -> f64 {
        match self {
            Normalizer::Ln => v.ln(),
            Normalizer::Identity => v,
        }
    }
}

impl FromStr for Normalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ln" | "log" => Ok(Normalizer::Ln),
            "identity" | "id" => Ok(Normalizer::Identity),
            _ => Err(Error::Config(format!("unknown normalizer {s:?}"))),
        }
    }
}

/// How the content factor `C` is built from a descriptor set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentFactorSpec {
    pub spatial_source: SpatialSource,
    pub temporal_source: TemporalSource,
    pub spatial_normalizer: Normalizer,
    pub temporal_normalizer: Normalizer,
    pub floor: f64,
}

impl ContentFactorSpec {
    /// Log-compressed spatial term, identity temporal term, default floor.
    pub fn new(spatial: SpatialSource, temporal: TemporalSource) -> Result<Self> {
        let spec = ContentFactorSpec {
            spatial_source: spatial,
            temporal_source: temporal,
            spatial_normalizer: Normalizer::Ln,
            temporal_normalizer: Normalizer::Identity,
            floor: DEFAULT_FLOOR,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `C = 1` for every sequence.
    pub fn content_blind() -> Self {
        ContentFactorSpec::new(SpatialSource::None, TemporalSource::None).expect("valid spec")
    }

    pub fn ultrafast() -> Self {
        ContentFactorSpec::new(SpatialSource::Ultrafast, TemporalSource::Ultrafast).expect("valid spec")
    }

    pub fn is_content_blind(&self) -> bool {
        self.spatial_source == SpatialSource::None && self.temporal_source == TemporalSource::None
    }

    pub fn is_ultrafast(&self) -> bool {
        self.spatial_source == SpatialSource::Ultrafast
    }

    pub fn validate(&self) -> Result<()> {
        let s_uf = self.spatial_source == SpatialSource::Ultrafast;
        let t_uf = self.temporal_source == TemporalSource::Ultrafast;
        if s_uf != t_uf {
            return Err(Error::Config(
                "ultrafast complexity must be used for both spatial and temporal roles".into(),
            ));
        }
        if !(self.floor > 0.0) {
            return Err(Error::Config(format!(
                "content floor must be positive, got {}",
                self.floor
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.spatial_source, self.temporal_source)
    }
}

fn required(d: &DescriptorSet, entry: Option<(&'static str, Option<f64>)>) -> Result<Option<f64>> {
    match entry {
        None => Ok(None),
        Some((_, Some(v))) if v.is_finite() => Ok(Some(v)),
        Some((field, _)) => Err(Error::Config(format!(
            "descriptor set {:?} lacks {field}",
            d.sequence_id
        ))),
    }
}

/// Content factor `C = max(ε, f_s(C_S)) · max(ε, f_t(C_T))`.
///
/// Ultrafast complexity is used as `C` directly; a `None` source contributes 1.
pub fn content_factor(d: &DescriptorSet, spec: &ContentFactorSpec) -> Result<f64> {
    spec.validate()?;
    if spec.is_ultrafast() {
        let v = required(d, spec.spatial_source.value(d))?.expect("ultrafast has a field");
        return Ok(v.max(spec.floor));
    }
    let spatial =
        required(d, spec.spatial_source.value(d))?.map_or(1.0, |v| spec.spatial_normalizer.apply(v).max(spec.floor));
    let temporal =
        required(d, spec.temporal_source.value(d))?.map_or(1.0, |v| spec.temporal_normalizer.apply(v).max(spec.floor));
    Ok(spatial * temporal)
}

/// Encoding time in seconds per kilopixel.
pub fn predict_time_kpix(params: &TimeModelParams, c: f64, n_intra: u32, crf: u32, preset: u32) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("content factor must be positive, got {c}")));
    }
    if crf == 0 {
        return Err(Error::Domain("CRF must be positive".into()));
    }
    if n_intra == 0 {
        return Err(Error::Domain("intra-frame count must be at least 1".into()));
    }
    if !(MIN_PRESET..=MAX_PRESET).contains(&preset) {
        return Err(Error::Domain(format!(
            "preset {preset} outside {MIN_PRESET}..={MAX_PRESET}"
        )));
    }
    Ok(time_kpix_unchecked(
        params,
        c,
        f64::from(n_intra),
        f64::from(crf),
        f64::from(preset),
    ))
}

#[inline]
pub(crate) fn time_kpix_unchecked(params: &TimeModelParams, c: f64, n_intra: f64, crf: f64, preset: f64) -> f64 {
    let lead = (params.xi * c.ln()
        + params.delta * n_intra.ln()
        + params.alpha * preset.ln()
        + params.beta * preset
        + params.gamma)
        .exp();
    lead / crf + params.t0
}

/// Energy in joules for an encode of `n_frames` frames of `width`×`height`.
pub fn predict_energy(
    ep: &EnergyModelParams,
    t_kpix: f64,
    width: usize,
    height: usize,
    n_frames: usize,
) -> Result<f64> {
    if !(t_kpix >= 0.0) {
        return Err(Error::Domain(format!(
            "time per kilopixel must be non-negative, got {t_kpix}"
        )));
    }
    Ok(ep.e0 + ep.p * t_kpix * kilopixels(width, height) * n_frames as f64)
}

pub fn kilopixels(width: usize, height: usize) -> f64 {
    width as f64 * height as f64 / 1000.0
}

/// Intra-frame count for a ~5 s keyframe interval.
pub fn default_n_intra(n_frames: usize, frame_rate: Rational) -> u32 {
    let gop = (DEFAULT_GOP_SECONDS * frame_rate.as_f64()).round().max(1.0) as usize;
    n_frames.div_ceil(gop).max(1) as u32
}

/// One measured encode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingRecord {
    pub sequence_id: String,
    pub class_id: String,
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub frame_rate: Rational,
    pub preset: u32,
    pub crf: u32,
    pub n_intra: u32,
    /// Measured CPU time in seconds.
    pub time_s: f64,
    pub energy_j: Option<f64>,
}

impl EncodingRecord {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Domain(format!("record {}: {m}", self.sequence_id)));
        if self.width == 0 || self.height == 0 || self.n_frames == 0 {
            return fail("geometry must be positive".into());
        }
        if !(self.time_s > 0.0) || !self.time_s.is_finite() {
            return fail(format!("time_s must be positive, got {}", self.time_s));
        }
        if self.n_intra == 0 {
            return fail("n_intra must be at least 1".into());
        }
        if self.crf == 0 {
            return fail("crf must be positive".into());
        }
        if !(MIN_PRESET..=MAX_PRESET).contains(&self.preset) {
            return fail(format!("preset {} outside {MIN_PRESET}..={MAX_PRESET}", self.preset));
        }
        if let Some(e) = self.energy_j {
            if !(e > 0.0) || !e.is_finite() {
                return fail(format!("energy_j must be positive, got {e}"));
            }
        }
        Ok(())
    }

    /// Total pixels encoded, in thousands.
    pub fn kilopixels(&self) -> f64 {
        kilopixels(self.width, self.height) * self.n_frames as f64
    }

    pub fn time_kpix(&self) -> f64 {
        self.time_s / self.kilopixels()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecordPrediction {
    pub time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_j: Option<f64>,
}

/// Predicted total time (and energy, when an energy model is given) for one record.
pub fn predict_record(
    tp: &TimeModelParams,
    ep: Option<&EnergyModelParams>,
    spec: &ContentFactorSpec,
    d: &DescriptorSet,
    record: &EncodingRecord,
) -> Result<RecordPrediction> {
    if d.sequence_id != record.sequence_id {
        return Err(Error::Join(format!(
            "record for {:?} joined with descriptors of {:?}",
            record.sequence_id, d.sequence_id
        )));
    }
    let c = content_factor(d, spec)?;
    let t_kpix = predict_time_kpix(tp, c, record.n_intra, record.crf, record.preset)?;
    let energy_j = ep
        .map(|ep| predict_energy(ep, t_kpix, record.width, record.height, record.n_frames))
        .transpose()?;
    Ok(RecordPrediction {
        time_s: t_kpix * record.kilopixels(),
        energy_j,
    })
}

/// Provenance of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    pub dataset_hash: String,
    pub objective_kind: String,
    pub objective: f64,
    pub training_mape: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_training_mape: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Parameters that the data could not identify and were held fixed.
    pub frozen: Vec<String>,
    pub content_floor: f64,
    pub preset_range: (u32, u32),
    pub crf_range: (u32, u32),
}

/// Serialized fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub time_params: TimeModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_params: Option<EnergyModelParams>,
    pub content_spec: ContentFactorSpec,
    pub block_spec: BlockGridSpec,
    pub fit_metadata: FitMetadata,
}
