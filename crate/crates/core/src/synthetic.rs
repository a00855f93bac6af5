//! Deterministic synthetic data: encoding datasets drawn from known model
//! parameters, and textured test clips with known motion.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::descriptors::DescriptorSet;
use crate::error::{Error, Result};
use crate::models::{
    content_factor, default_n_intra, kilopixels, predict_time_kpix, ContentFactorSpec, EncodingRecord,
    EnergyModelParams, SpatialSource, TemporalSource, TimeModelParams, MAX_PRESET, MIN_PRESET,
};
use crate::y4m::{LumaFrame, Rational};

/// Parameters of a synthetic encoding campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub sequences_per_class: usize,
    pub presets: Vec<u32>,
    pub crfs: Vec<u32>,
    pub time_params: TimeModelParams,
    pub energy_params: EnergyModelParams,
    /// Standard deviation of the multiplicative noise on measured time.
    pub time_noise: f64,
    /// Standard deviation of the multiplicative noise on measured energy.
    pub energy_noise: f64,
    /// Log-normal spread of the descriptors that do not generate `C`.
    pub proxy_noise: f64,
    /// Log-normal spread of the ultrafast complexity around the true `C`.
    pub ultrafast_noise: f64,
    pub width: usize,
    pub height: usize,
    pub frame_rate: Rational,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 3,
            sequences_per_class: 6,
            presets: (MIN_PRESET..=MAX_PRESET).collect(),
            crfs: vec![32, 43, 55, 63],
            time_params: TimeModelParams {
                alpha: 1.0,
                beta: -0.45,
                gamma: 2.0,
                delta: 0.3,
                xi: 1.0,
                t0: 0.0,
            },
            energy_params: EnergyModelParams {
                e0: 1.68e-19,
                p: 1.77e-2,
            },
            time_noise: 0.0,
            energy_noise: 0.0,
            proxy_noise: 0.25,
            ultrafast_noise: 0.15,
            width: 640,
            height: 360,
            frame_rate: Rational { num: 30, den: 1 },
            seed: 0,
        }
    }
}

/// The descriptor pairing from which synthetic `C` is generated.
pub fn generating_spec() -> ContentFactorSpec {
    ContentFactorSpec::new(SpatialSource::Vca, TemporalSource::Vca).expect("valid spec")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub records: Vec<EncodingRecord>,
    pub descriptors: Vec<DescriptorSet>,
    /// The exact content factor of each sequence.
    pub content: BTreeMap<String, f64>,
    /// Noise-free total time of each record, aligned with `records`.
    pub true_times: Vec<f64>,
}

/// Multiplies `v` by `exp(N(0, sigma))`.
fn jitter(rng: &mut ChaCha8Rng, v: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return v;
    }
    let z: f64 = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
    v * z.exp()
}

fn relative_noise(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let z: f64 = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
    (1.0 + z).max(0.05)
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    if cfg.classes == 0 || cfg.sequences_per_class == 0 || cfg.presets.is_empty() || cfg.crfs.is_empty() {
        return Err(Error::Config(
            "synthetic dataset needs classes, sequences, presets and CRFs".into(),
        ));
    }
    for sigma in [cfg.time_noise, cfg.energy_noise, cfg.proxy_noise, cfg.ultrafast_noise] {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!("noise level must be non-negative, got {sigma}")));
        }
    }
    let spec = generating_spec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ds = SyntheticDataset {
        records: Vec::new(),
        descriptors: Vec::new(),
        content: BTreeMap::new(),
        true_times: Vec::new(),
    };
    for class in 0..cfg.classes {
        let class_id = format!("class{}", (b'A' + (class % 26) as u8) as char);
        for s in 0..cfg.sequences_per_class {
            let id = format!("{class_id}_seq{s:02}");
            // between 5 and 20 seconds of video
            let n_frames = (cfg.frame_rate.as_f64() * 5.0 * (1 + s % 4) as f64).round() as usize;
            let mut d = DescriptorSet::new(&id, cfg.width, cfg.height, n_frames);
            d.frame_rate = Some(cfg.frame_rate);

            let ln_vca_s: f64 = rng.random_range(1.5..4.0);
            let vca_t: f64 = rng.random_range(0.3..3.0);
            d.c_s_vca = Some(ln_vca_s.exp());
            d.c_t_vca = Some(vca_t);
            let c = content_factor(&d, &spec)?;

            d.c_s_si = Some(jitter(&mut rng, ln_vca_s, cfg.proxy_noise).exp());
            d.c_s_var = Some(jitter(&mut rng, ln_vca_s, cfg.proxy_noise).exp());
            d.c_t_ti = Some(jitter(&mut rng, vca_t, cfg.proxy_noise));
            d.c_t_flow = Some(jitter(&mut rng, vca_t, cfg.proxy_noise));
            d.c_ultrafast = Some(jitter(&mut rng, c, cfg.ultrafast_noise) * 1e-3);

            let n_intra = default_n_intra(n_frames, cfg.frame_rate);
            let kpix = kilopixels(cfg.width, cfg.height) * n_frames as f64;
            for &preset in &cfg.presets {
                for &crf in &cfg.crfs {
                    let truth = predict_time_kpix(&cfg.time_params, c, n_intra, crf, preset)? * kpix;
                    let time_s = truth * relative_noise(&mut rng, cfg.time_noise);
                    let energy = (cfg.energy_params.e0 + cfg.energy_params.p * time_s)
                        * relative_noise(&mut rng, cfg.energy_noise);
                    ds.records.push(EncodingRecord {
                        sequence_id: id.clone(),
                        class_id: class_id.clone(),
                        width: cfg.width,
                        height: cfg.height,
                        n_frames,
                        frame_rate: cfg.frame_rate,
                        preset,
                        crf,
                        n_intra,
                        time_s,
                        energy_j: Some(energy),
                    });
                    ds.true_times.push(truth);
                }
            }
            ds.content.insert(id, c);
            ds.descriptors.push(d);
        }
    }
    Ok(ds)
}

/// Smooth periodic random texture.
#[derive(Debug, Clone)]
pub struct SmoothTexture {
    period: usize,
    values: Vec<f64>,
}

impl SmoothTexture {
    /// Uniform noise box-filtered with a `(2·radius+1)²` kernel, wrapping at `period`.
    pub fn new(period: usize, radius: usize, seed: u64) -> Self {
        assert!(period > 0, "texture period must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f64> = (0..period * period).map(|_| rng.random_range(0.0..255.0)).collect();
        let r = radius as isize;
        let p = period as isize;
        let norm = ((2 * radius + 1) * (2 * radius + 1)) as f64;
        let mut values = vec![0.0; period * period];
        for y in 0..p {
            for x in 0..p {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let yy = (y + dy).rem_euclid(p) as usize;
                        let xx = (x + dx).rem_euclid(p) as usize;
                        acc += noise[yy * period + xx];
                    }
                }
                values[(y * p + x) as usize] = acc / norm;
            }
        }
        SmoothTexture { period, values }
    }

    pub fn sample(&self, x: isize, y: isize) -> u8 {
        let p = self.period as isize;
        self.values[(y.rem_euclid(p) * p + x.rem_euclid(p)) as usize].round() as u8
    }
}

/// Frames of a random texture moving by `(dx, dy)` pixels per frame.
pub fn translating_sequence(
    width: usize,
    height: usize,
    frames: usize,
    dx: isize,
    dy: isize,
    seed: u64,
) -> Vec<LumaFrame> {
    let tex = SmoothTexture::new(2 * width.max(height), 2, seed);
    (0..frames)
        .map(|t| {
            let (ox, oy) = (dx * t as isize, dy * t as isize);
            LumaFrame::from_fn(width, height, t, |x, y| tex.sample(x as isize - ox, y as isize - oy))
        })
        .collect()
}
