//! Spatial and temporal content-complexity descriptors.
//!
//! All descriptors are computed in one streaming pass by [`Analyzer`], which
//! holds at most the previous frame (and its block textures and flow pyramid)
//! besides the current one. The per-descriptor free functions are thin
//! wrappers that run the analyzer with a single descriptor selected.

pub mod dct;
pub mod flow;
pub mod spatial;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::y4m::{LumaFrame, Rational, VideoHeader};

pub use dct::{block_texture, BlockDct};
pub use flow::{Farneback, FarnebackParams, FlowField};
pub use spatial::{sobel_magnitude, VARIANCE_BLOCK};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    Si,
    VcaSpatial,
    Variance,
    Ti,
    VcaTemporal,
    Flow,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 6] = [
        DescriptorKind::Si,
        DescriptorKind::VcaSpatial,
        DescriptorKind::Variance,
        DescriptorKind::Ti,
        DescriptorKind::VcaTemporal,
        DescriptorKind::Flow,
    ];

    /// Short name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Si => "si",
            DescriptorKind::VcaSpatial => "vca_s",
            DescriptorKind::Variance => "var",
            DescriptorKind::Ti => "ti",
            DescriptorKind::VcaTemporal => "vca_t",
            DescriptorKind::Flow => "flow",
        }
    }

    /// Field name in a serialized [`DescriptorSet`].
    pub fn field(self) -> &'static str {
        match self {
            DescriptorKind::Si => "c_s_si",
            DescriptorKind::VcaSpatial => "c_s_vca",
            DescriptorKind::Variance => "c_s_var",
            DescriptorKind::Ti => "c_t_ti",
            DescriptorKind::VcaTemporal => "c_t_vca",
            DescriptorKind::Flow => "c_t_flow",
        }
    }

    pub fn is_temporal(self) -> bool {
        matches!(
            self,
            DescriptorKind::Ti | DescriptorKind::VcaTemporal | DescriptorKind::Flow
        )
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.field() == s)
            .ok_or_else(|| Error::Config(format!("unknown descriptor {s:?}")))
    }
}

/// Which descriptors an analysis pass computes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection(BTreeSet<DescriptorKind>);

impl Selection {
    pub fn all() -> Self {
        Selection(DescriptorKind::ALL.into_iter().collect())
    }

    pub fn only(kinds: impl IntoIterator<Item = DescriptorKind>) -> Self {
        Selection(kinds.into_iter().collect())
    }

    pub fn contains(&self, kind: DescriptorKind) -> bool {
        self.0.contains(&kind)
    }

    pub fn iter(&self) -> impl Iterator<Item = DescriptorKind> + '_ {
        self.0.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Selection {
    fn default() -> Self {
        Selection::all()
    }
}

impl FromStr for Selection {
    type Err = Error;

    /// Comma-separated descriptor names, or `all`.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "all" {
            return Ok(Selection::all());
        }
        let kinds = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<BTreeSet<_>>>()?;
        if kinds.is_empty() {
            return Err(Error::Config("empty descriptor selection".into()));
        }
        Ok(Selection(kinds))
    }
}

/// How per-frame (or per-pair) SI and TI values are reduced over the sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameAggregate {
    #[default]
    Mean,
    Max,
}

impl FromStr for FrameAggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(FrameAggregate::Mean),
            "max" => Ok(FrameAggregate::Max),
            _ => Err(Error::Config(format!("unknown frame aggregate {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialBlockPolicy {
    /// Border blocks that do not fit entirely inside the frame are ignored.
    #[default]
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockGridSpec {
    pub block_size_vca: usize,
    pub block_size_var: usize,
    pub partial_block_policy: PartialBlockPolicy,
}

impl BlockGridSpec {
    pub fn new(block_size_vca: usize) -> Result<Self> {
        if !matches!(block_size_vca, 16 | 32 | 64) {
            return Err(Error::Config(format!(
                "VCA block size must be 16, 32 or 64, got {block_size_vca}"
            )));
        }
        Ok(BlockGridSpec {
            block_size_vca,
            ..Default::default()
        })
    }
}

impl Default for BlockGridSpec {
    fn default() -> Self {
        BlockGridSpec {
            block_size_vca: 32,
            block_size_var: VARIANCE_BLOCK,
            partial_block_policy: PartialBlockPolicy::Drop,
        }
    }
}

/// Content descriptors of one sequence. Absent values were not selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSet {
    pub schema_version: u32,
    pub sequence_id: String,
    pub width: usize,
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<Rational>,
    pub frame_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_s_si: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_s_vca: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_s_var: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_t_ti: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_t_vca: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_t_flow: Option<f64>,
    /// Preset-13 encode time in seconds per kilopixel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_ultrafast: Option<f64>,
    pub block_spec: BlockGridSpec,
    #[serde(default)]
    pub frame_aggregate: FrameAggregate,
    pub tool_version: String,
}

impl DescriptorSet {
    /// An empty set for `sequence_id`; useful when descriptors come from elsewhere.
    pub fn new(sequence_id: impl Into<String>, width: usize, height: usize, frame_count: usize) -> Self {
        DescriptorSet {
            schema_version: SCHEMA_VERSION,
            sequence_id: sequence_id.into(),
            width,
            height,
            frame_rate: None,
            frame_count,
            c_s_si: None,
            c_s_vca: None,
            c_s_var: None,
            c_t_ti: None,
            c_t_vca: None,
            c_t_flow: None,
            c_ultrafast: None,
            block_spec: BlockGridSpec::default(),
            frame_aggregate: FrameAggregate::Mean,
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    pub fn get(&self, kind: DescriptorKind) -> Option<f64> {
        match kind {
            DescriptorKind::Si => self.c_s_si,
            DescriptorKind::VcaSpatial => self.c_s_vca,
            DescriptorKind::Variance => self.c_s_var,
            DescriptorKind::Ti => self.c_t_ti,
            DescriptorKind::VcaTemporal => self.c_t_vca,
            DescriptorKind::Flow => self.c_t_flow,
        }
    }

    pub fn set(&mut self, kind: DescriptorKind, value: Option<f64>) {
        let slot = match kind {
            DescriptorKind::Si => &mut self.c_s_si,
            DescriptorKind::VcaSpatial => &mut self.c_s_vca,
            DescriptorKind::Variance => &mut self.c_s_var,
            DescriptorKind::Ti => &mut self.c_t_ti,
            DescriptorKind::VcaTemporal => &mut self.c_t_vca,
            DescriptorKind::Flow => &mut self.c_t_flow,
        };
        *slot = value;
    }

    /// Fills `c_ultrafast` from a measured preset-13 encode time.
    pub fn set_ultrafast_time(&mut self, t_preset13: f64) -> Result<()> {
        self.c_ultrafast = Some(ultrafast_complexity(
            t_preset13,
            self.width,
            self.height,
            self.frame_count,
        )?);
        Ok(())
    }
}

/// Converts a preset-13 encode time to seconds per kilopixel.
pub fn ultrafast_complexity(t_preset13: f64, width: usize, height: usize, n_frames: usize) -> Result<f64> {
    if !(t_preset13 > 0.0) || !t_preset13.is_finite() {
        return Err(Error::Domain(format!(
            "ultrafast time must be positive, got {t_preset13}"
        )));
    }
    if width == 0 || height == 0 || n_frames == 0 {
        return Err(Error::Domain(format!(
            "ultrafast normalisation needs positive geometry, got {width}x{height}x{n_frames}"
        )));
    }
    Ok(t_preset13 * 1000.0 / (width as f64 * height as f64 * n_frames as f64))
}

#[derive(Debug, Default, Clone)]
struct Reduction {
    values: Vec<f64>,
}

impl Reduction {
    fn push(&mut self, v: f64) {
        self.values.push(v);
    }

    /// Summed in ascending order so the result does not depend on frame order.
    fn sum(&self) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.iter().sum()
    }

    fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.sum() / self.values.len() as f64
        }
    }

    fn reduce(&self, how: FrameAggregate) -> f64 {
        match how {
            FrameAggregate::Mean => self.mean(),
            FrameAggregate::Max => self.values.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Options for an analysis pass.
#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    pub grid: BlockGridSpec,
    pub selection: Selection,
    pub aggregate: FrameAggregate,
    pub flow: FarnebackParams,
}

/// Single-pass, two-frame-window descriptor accumulator.
pub struct Analyzer {
    options: AnalysisOptions,
    dct: Option<BlockDct>,
    farneback: Option<Farneback>,
    geometry: Option<(usize, usize)>,
    frames: usize,
    prev_frame: Option<LumaFrame>,
    prev_textures: Option<Vec<f64>>,
    prev_pyramid: Option<flow::FlowPyramid>,
    si: Reduction,
    vca_s: Reduction,
    var: Reduction,
    ti: Reduction,
    vca_t: Reduction,
    flow: Reduction,
}

impl Analyzer {
    pub fn new(options: AnalysisOptions) -> Self {
        let sel = &options.selection;
        let dct = (sel.contains(DescriptorKind::VcaSpatial) || sel.contains(DescriptorKind::VcaTemporal))
            .then(|| BlockDct::new(options.grid.block_size_vca));
        let farneback = sel.contains(DescriptorKind::Flow).then(|| Farneback::new(options.flow));
        Analyzer {
            options,
            dct,
            farneback,
            geometry: None,
            frames: 0,
            prev_frame: None,
            prev_textures: None,
            prev_pyramid: None,
            si: Reduction::default(),
            vca_s: Reduction::default(),
            var: Reduction::default(),
            ti: Reduction::default(),
            vca_t: Reduction::default(),
            flow: Reduction::default(),
        }
    }

    fn wants(&self, kind: DescriptorKind) -> bool {
        self.options.selection.contains(kind)
    }

    pub fn push(&mut self, frame: LumaFrame) -> Result<()> {
        let dims = (frame.width(), frame.height());
        match self.geometry {
            None => self.geometry = Some(dims),
            Some(g) if g != dims => {
                return Err(Error::format(
                    Some(self.frames),
                    format!("frame size {}x{} differs from {}x{}", dims.0, dims.1, g.0, g.1),
                ))
            }
            Some(_) => {}
        }

        if self.wants(DescriptorKind::Si) {
            let v = spatial::frame_spatial_information(&frame).map_err(|e| e.in_descriptor("si"))?;
            self.si.push(v);
        }
        if self.wants(DescriptorKind::Variance) {
            let v = spatial::frame_block_variance(&frame).map_err(|e| e.in_descriptor("var"))?;
            self.var.push(v);
        }
        if let Some(dct) = &self.dct {
            let name = if self.wants(DescriptorKind::VcaSpatial) {
                "vca_s"
            } else {
                "vca_t"
            };
            let textures = dct.frame_textures(&frame).map_err(|e| e.in_descriptor(name))?;
            let w = dct.size();
            if self.wants(DescriptorKind::VcaSpatial) {
                self.vca_s.push(dct::normalized_texture_sum(&textures, w));
            }
            if self.wants(DescriptorKind::VcaTemporal) {
                if let Some(prev) = &self.prev_textures {
                    self.vca_t.push(dct::normalized_texture_sad(prev, &textures, w));
                }
                self.prev_textures = Some(textures);
            }
        }
        if self.wants(DescriptorKind::Ti) {
            if let Some(prev) = &self.prev_frame {
                self.ti.push(spatial::pair_temporal_information(prev, &frame));
            }
        }
        if let Some(fb) = &self.farneback {
            let pyramid = fb.prepare(&frame);
            if let Some(prev) = &self.prev_pyramid {
                let (u, v) = fb.flow(prev, &pyramid).mean_abs_components();
                self.flow.push((u + v).abs());
            }
            self.prev_pyramid = Some(pyramid);
        }

        self.frames += 1;
        self.prev_frame = self.wants(DescriptorKind::Ti).then_some(frame);
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn finish(self, sequence_id: impl Into<String>) -> Result<DescriptorSet> {
        let Some((width, height)) = self.geometry else {
            return Err(Error::EmptyInput("sequence has no frames".into()));
        };
        let agg = self.options.aggregate;
        let mut set = DescriptorSet::new(sequence_id, width, height, self.frames);
        set.block_spec = self.options.grid;
        set.frame_aggregate = agg;
        for kind in self.options.selection.iter() {
            let value = match kind {
                DescriptorKind::Si => self.si.reduce(agg),
                DescriptorKind::VcaSpatial => self.vca_s.mean(),
                DescriptorKind::Variance => self.var.mean(),
                DescriptorKind::Ti => self.ti.reduce(agg),
                DescriptorKind::VcaTemporal => self.vca_t.mean(),
                // one term per frame, the first frame having no predecessor
                DescriptorKind::Flow => self.flow.sum() / self.frames as f64,
            };
            set.set(kind, Some(value));
        }
        Ok(set)
    }
}

/// Computes the selected descriptors over a frame stream in one pass.
pub fn analyze<I>(frames: I, options: AnalysisOptions, sequence_id: &str) -> Result<DescriptorSet>
where
    I: IntoIterator<Item = Result<LumaFrame>>,
{
    let mut analyzer = Analyzer::new(options);
    for frame in frames {
        analyzer.push(frame?)?;
    }
    analyzer.finish(sequence_id)
}

/// Analyzes a whole stream, also recording its header's frame rate.
pub fn analyze_stream<I>(
    header: &VideoHeader,
    frames: I,
    options: AnalysisOptions,
    sequence_id: &str,
) -> Result<DescriptorSet>
where
    I: IntoIterator<Item = Result<LumaFrame>>,
{
    let mut set = analyze(frames, options, sequence_id)?;
    set.frame_rate = Some(header.frame_rate);
    Ok(set)
}

fn single<I>(frames: I, kind: DescriptorKind, grid: BlockGridSpec, aggregate: FrameAggregate) -> Result<f64>
where
    I: IntoIterator<Item = LumaFrame>,
{
    let options = AnalysisOptions {
        grid,
        selection: Selection::only([kind]),
        aggregate,
        flow: FarnebackParams::default(),
    };
    let set = analyze(frames.into_iter().map(Ok), options, "")?;
    Ok(set.get(kind).expect("selected descriptor is present"))
}

/// Mean over frames of the per-frame RMS Sobel magnitude.
pub fn spatial_information<I: IntoIterator<Item = LumaFrame>>(frames: I) -> Result<f64> {
    single(
        frames,
        DescriptorKind::Si,
        BlockGridSpec::default(),
        FrameAggregate::Mean,
    )
}

/// Mean over consecutive pairs of the RMS frame difference.
pub fn temporal_information<I: IntoIterator<Item = LumaFrame>>(frames: I) -> Result<f64> {
    single(
        frames,
        DescriptorKind::Ti,
        BlockGridSpec::default(),
        FrameAggregate::Mean,
    )
}

pub fn vca_spatial<I: IntoIterator<Item = LumaFrame>>(frames: I, grid: BlockGridSpec) -> Result<f64> {
    single(frames, DescriptorKind::VcaSpatial, grid, FrameAggregate::Mean)
}

pub fn vca_temporal<I: IntoIterator<Item = LumaFrame>>(frames: I, grid: BlockGridSpec) -> Result<f64> {
    single(frames, DescriptorKind::VcaTemporal, grid, FrameAggregate::Mean)
}

pub fn block_variance<I: IntoIterator<Item = LumaFrame>>(frames: I) -> Result<f64> {
    single(
        frames,
        DescriptorKind::Variance,
        BlockGridSpec::default(),
        FrameAggregate::Mean,
    )
}

/// `(1/n_frames) · Σ_t |u_t + v_t|` over consecutive pairs, where `u_t`, `v_t`
/// are the frame means of the absolute flow components.
pub fn optical_flow_displacement<I: IntoIterator<Item = LumaFrame>>(frames: I) -> Result<f64> {
    single(
        frames,
        DescriptorKind::Flow,
        BlockGridSpec::default(),
        FrameAggregate::Mean,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn constant(n: usize, w: usize, h: usize, c: u8) -> Vec<LumaFrame> {
        (0..n).map(|i| LumaFrame::filled(w, h, c, i)).collect()
    }

    #[test]
    fn si_cases() {
        assert_eq!(spatial_information(constant(3, 8, 8, 40)).unwrap(), 0.0);
        let f = LumaFrame::from_fn(16, 16, 0, |x, y| ((x * 7 + y * y) % 256) as u8);
        let one = spatial_information([f.clone()]).unwrap();
        let two = spatial_information([f.clone(), f.with_index(1)]).unwrap();
        assert_eq!(one, two);
        assert!(matches!(spatial_information(Vec::new()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn ti_cases() {
        assert_eq!(temporal_information(constant(4, 8, 8, 9)).unwrap(), 0.0);
        let frames = vec![LumaFrame::filled(4, 4, 10, 0), LumaFrame::filled(4, 4, 12, 1)];
        assert_eq!(temporal_information(frames).unwrap(), 2.0);
        // pair RMS values 1 and 3
        let frames = vec![
            LumaFrame::filled(4, 4, 10, 0),
            LumaFrame::filled(4, 4, 11, 1),
            LumaFrame::filled(4, 4, 14, 2),
        ];
        assert_eq!(temporal_information(frames).unwrap(), 2.0);
        assert_eq!(temporal_information(constant(1, 4, 4, 200)).unwrap(), 0.0);
    }

    #[test]
    fn vca_spatial_constant_frames() {
        let c = 100.0;
        let v = vca_spatial(constant(2, 96, 64, 100), BlockGridSpec::default()).unwrap();
        assert_relative_eq!(v, E * c / 32.0, max_relative = 1e-12);
        assert_eq!(
            vca_spatial(constant(2, 64, 64, 0), BlockGridSpec::default()).unwrap(),
            0.0
        );
        assert!(matches!(
            vca_spatial(constant(1, 16, 64, 0), BlockGridSpec::default()),
            Err(Error::Descriptor {
                descriptor: "vca_s",
                ..
            })
        ));
    }

    #[test]
    fn vca_temporal_alternating() {
        let c = 60u8;
        let frames: Vec<_> = (0..5)
            .map(|i| LumaFrame::filled(64, 64, if i % 2 == 0 { 0 } else { c }, i))
            .collect();
        let v = vca_temporal(frames, BlockGridSpec::default()).unwrap();
        assert_relative_eq!(v, E * f64::from(c) / 32.0, max_relative = 1e-12);
        assert_eq!(
            vca_temporal(constant(3, 64, 64, 5), BlockGridSpec::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn block_variance_cases() {
        assert_eq!(block_variance(constant(2, 64, 64, 5)).unwrap(), 0.0);
        let f = LumaFrame::from_fn(64, 64, 0, |_, y| if y < 32 { 0 } else { 255 });
        assert_eq!(block_variance([f]).unwrap(), 16256.25 / 4096.0);
    }

    #[test]
    fn ultrafast_cases() {
        assert_relative_eq!(ultrafast_complexity(2.0, 100, 100, 10).unwrap(), 0.02);
        assert_eq!(ultrafast_complexity(1.0, 10, 10, 10).unwrap(), 1.0);
        assert!(matches!(ultrafast_complexity(0.0, 10, 10, 10), Err(Error::Domain(_))));
        assert!(matches!(ultrafast_complexity(1.0, 10, 10, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn analyze_constant_clip() {
        let c = 80u8;
        let frames = constant(10, 64, 64, c).into_iter().map(Ok);
        let set = analyze(frames, AnalysisOptions::default(), "flat").unwrap();
        assert_eq!(set.frame_count, 10);
        assert_eq!(set.c_s_si, Some(0.0));
        assert_eq!(set.c_t_ti, Some(0.0));
        assert_eq!(set.c_s_var, Some(0.0));
        assert_eq!(set.c_t_vca, Some(0.0));
        assert_eq!(set.c_t_flow, Some(0.0));
        assert_relative_eq!(set.c_s_vca.unwrap(), E * f64::from(c) / 32.0, max_relative = 1e-12);
    }

    #[test]
    fn selection_excludes_fields() {
        let options = AnalysisOptions {
            selection: "si,ti".parse().unwrap(),
            ..Default::default()
        };
        let set = analyze(constant(2, 64, 64, 3).into_iter().map(Ok), options, "x").unwrap();
        assert!(set.c_t_flow.is_none());
        assert!(set.c_s_vca.is_none());
        assert!(set.c_s_si.is_some());
        let json = serde_json::to_value(&set).unwrap();
        assert!(json.get("c_t_flow").is_none());
        assert!(json.get("c_t_ti").is_some());
    }

    #[test]
    fn empty_and_mismatched_streams() {
        assert!(matches!(
            analyze(std::iter::empty(), AnalysisOptions::default(), "e"),
            Err(Error::EmptyInput(_))
        ));
        let frames = vec![Ok(LumaFrame::filled(64, 64, 0, 0)), Ok(LumaFrame::filled(64, 32, 0, 1))];
        assert!(matches!(
            analyze(frames, AnalysisOptions::default(), "m"),
            Err(Error::Format { frame: Some(1), .. })
        ));
    }

    #[test]
    fn max_aggregate_for_si() {
        let a = LumaFrame::filled(8, 8, 0, 0);
        let b = LumaFrame::from_fn(8, 8, 1, |x, _| if x < 4 { 0 } else { 100 });
        let options = AnalysisOptions {
            selection: Selection::only([DescriptorKind::Si]),
            aggregate: FrameAggregate::Max,
            ..Default::default()
        };
        let set = analyze([Ok(a), Ok(b.clone())], options, "m").unwrap();
        assert_eq!(set.c_s_si.unwrap(), spatial::frame_spatial_information(&b).unwrap());
    }

    #[test]
    fn selection_parsing() {
        let s: Selection = "si, c_t_flow".parse().unwrap();
        assert!(s.contains(DescriptorKind::Si) && s.contains(DescriptorKind::Flow));
        assert!("bogus".parse::<Selection>().is_err());
        assert_eq!("all".parse::<Selection>().unwrap(), Selection::all());
        assert!(BlockGridSpec::new(24).is_err());
        assert_eq!(BlockGridSpec::new(16).unwrap().block_size_vca, 16);
    }
}
