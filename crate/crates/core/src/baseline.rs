//! Conventional separate-quantization baseline.
//!
//! Each receiver quantizes its two local gains independently with a scalar
//! Lloyd-Max codebook matched to the gain's exponential law, every terminal
//! rebuilds the quantized channel, and the full-CSI optimal pair is computed
//! as if the quantized channel were exact.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::channel::{open_unit, ChannelState, FadingParams};
use crate::error::{Error, Result};
use crate::rates::{optimal_it_pair, optimal_ts_pair, Strategy, TransmissionPair};

#[derive(Debug, Clone, PartialEq)]
pub struct LloydCodebook {
    bits: u32,
    source_mean: f64,
    levels: Vec<f64>,
    thresholds: Vec<f64>,
}

/// On-disk form; thresholds are rebuilt on load.
#[derive(Debug, Serialize, Deserialize)]
struct StoredCodebook {
    bits: u32,
    source_mean: f64,
    levels: Vec<f64>,
}

impl LloydCodebook {
    /// Builds a codebook from strictly increasing reproduction levels, with
    /// midpoint decision thresholds.
    pub fn from_levels(bits: u32, source_mean: f64, levels: Vec<f64>) -> Result<Self> {
        if levels.len() as u64 != 1u64 << bits {
            return Err(Error::config(format!(
                "{} levels for a {bits}-bit codebook",
                levels.len()
            )));
        }
        if levels.iter().any(|l| !l.is_finite()) || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "codebook levels must be finite and strictly increasing",
            ));
        }
        let thresholds = levels.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        Ok(Self {
            bits,
            source_mean,
            levels,
            thresholds,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }
    pub fn source_mean(&self) -> f64 {
        self.source_mean
    }
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&StoredCodebook {
            bits: self.bits,
            source_mean: self.source_mean,
            levels: self.levels.clone(),
        })
        .expect("codebook serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let stored: StoredCodebook =
            serde_json::from_str(s).map_err(|e| Error::Io(e.to_string()))?;
        Self::from_levels(stored.bits, stored.source_mean, stored.levels)
    }
}

/// Cell index of `x`: the number of thresholds at or below it, so a value
/// sitting exactly on a threshold goes to the upper cell.
pub fn cell_index(cb: &LloydCodebook, x: f64) -> usize {
    cb.thresholds.partition_point(|&t| t <= x)
}

pub fn quantize_gain(cb: &LloydCodebook, x: f64) -> f64 {
    cb.levels[cell_index(cb, x)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub training_draws: usize,
    pub max_iterations: usize,
    /// Stop once `(D_prev - D) / D_prev` falls below this.
    pub rel_tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            training_draws: 1_000_000,
            max_iterations: 500,
            rel_tol: 1e-8,
        }
    }
}

/// Stratified exponential training set, sorted ascending: one uniform draw in
/// each of `n` equal-probability strata, mapped through the inverse CDF.
pub fn exponential_training_set<R: RngCore + ?Sized>(rng: &mut R, mean: f64, n: usize) -> Vec<f64> {
    let n_f = n as f64;
    (0..n)
        .map(|i| {
            let u = (i as f64 + open_unit(rng)) / n_f;
            -mean * (-u).ln_1p()
        })
        .collect()
}

/// Mean squared error of `data` (sorted) against `levels` with the given
/// cell boundaries, plus the per-cell centroids.
fn assign(data: &[f64], levels: &[f64]) -> (f64, Vec<f64>) {
    let mut err = 0.0;
    let mut centroids = Vec::with_capacity(levels.len());
    let mut start = 0;
    for (j, &level) in levels.iter().enumerate() {
        let end = match levels.get(j + 1) {
            Some(&next) => {
                let t = (level + next) / 2.0;
                start + data[start..].partition_point(|&x| x < t)
            }
            None => data.len(),
        };
        let cell = &data[start..end];
        if cell.is_empty() {
            centroids.push(level);
        } else {
            let c = cell.iter().sum::<f64>() / cell.len() as f64;
            centroids.push(c);
        }
        err += cell.iter().map(|x| (x - level) * (x - level)).sum::<f64>();
        start = end;
    }
    (err / data.len() as f64, centroids)
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct Training {
    pub codebook: LloydCodebook,
    /// Mean squared error of the training set after each accepted iteration,
    /// starting with the quantile initialization.
    pub distortions: Vec<f64>,
}

/// Lloyd iteration on a stratified sample of `Exp(source_mean)`.
pub fn train_lloyd_traced<R: RngCore + ?Sized>(
    bits: u32,
    source_mean: f64,
    rng: &mut R,
    cfg: &TrainConfig,
) -> Result<Training> {
    if !(source_mean > 0.0 && source_mean.is_finite()) {
        return Err(Error::InvalidParams {
            name: "source_mean",
            reason: format!("must be finite and > 0, got {source_mean}"),
        });
    }
    if bits > 16 {
        return Err(Error::config(format!(
            "{bits} bits per gain is beyond the supported range"
        )));
    }
    let k = 1usize << bits;
    if cfg.training_draws < 2 * k {
        return Err(Error::config(
            "too few training draws for the codebook size",
        ));
    }
    let data = exponential_training_set(rng, source_mean, cfg.training_draws);
    let n = data.len();

    let mut levels: Vec<f64> = (0..k)
        .map(|j| data[((j as f64 + 0.5) / k as f64 * n as f64) as usize])
        .collect();
    let (mut distortion, mut centroids) = assign(&data, &levels);
    let mut distortions = vec![distortion];

    for _ in 0..cfg.max_iterations {
        let (next_distortion, next_centroids) = assign(&data, &centroids);
        if next_distortion > distortion {
            break;
        }
        let improvement = (distortion - next_distortion) / distortion;
        levels = std::mem::replace(&mut centroids, next_centroids);
        distortion = next_distortion;
        distortions.push(distortion);
        if improvement < cfg.rel_tol {
            break;
        }
    }

    let codebook = LloydCodebook::from_levels(bits, source_mean, levels)?;
    Ok(Training {
        codebook,
        distortions,
    })
}

pub fn train_lloyd<R: RngCore + ?Sized>(
    bits: u32,
    source_mean: f64,
    rng: &mut R,
    cfg: &TrainConfig,
) -> Result<LloydCodebook> {
    train_lloyd_traced(bits, source_mean, rng, cfg).map(|t| t.codebook)
}

/// Training seed of codebooks built by [`CodebookStore`].
pub const TRAINING_SEED: u64 = 0x11_0d_ca_7e;

/// Trains codebooks once per `(bits, source_mean)` and shares them; with a
/// directory attached, codebooks are also loaded from and saved to JSON files.
#[derive(Debug, Default)]
pub struct CodebookStore {
    dir: Option<PathBuf>,
    cfg: TrainConfig,
    cache: HashMap<(u32, u64), Arc<LloydCodebook>>,
}

impl CodebookStore {
    pub fn new(cfg: TrainConfig) -> Self {
        Self {
            dir: None,
            cfg,
            cache: HashMap::new(),
        }
    }

    pub fn with_dir(cfg: TrainConfig, dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            ..Self::new(cfg)
        }
    }

    fn file_for(dir: &Path, bits: u32, source_mean: f64) -> PathBuf {
        dir.join(format!(
            "lloyd_b{bits}_m{:016x}.json",
            source_mean.to_bits()
        ))
    }

    pub fn get(&mut self, bits: u32, source_mean: f64) -> Result<Arc<LloydCodebook>> {
        let key = (bits, source_mean.to_bits());
        if let Some(cb) = self.cache.get(&key) {
            return Ok(cb.clone());
        }
        let path = self
            .dir
            .as_deref()
            .map(|d| Self::file_for(d, bits, source_mean));
        let loaded = match &path {
            Some(p) if p.exists() => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Io(e.to_string()))?;
                let cb = LloydCodebook::from_json(&text)?;
                if cb.bits != bits || cb.source_mean != source_mean {
                    return Err(Error::Io(format!(
                        "{} holds a different codebook",
                        p.display()
                    )));
                }
                Some(cb)
            }
            _ => None,
        };
        let cb = match loaded {
            Some(cb) => cb,
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(TRAINING_SEED ^ ((bits as u64) << 32));
                let cb = train_lloyd(bits, source_mean, &mut rng, &self.cfg)?;
                if let Some(p) = &path {
                    std::fs::write(p, cb.to_json()).map_err(|e| Error::Io(e.to_string()))?;
                }
                cb
            }
        };
        let cb = Arc::new(cb);
        self.cache.insert(key, cb.clone());
        Ok(cb)
    }

    /// Direct and cross codebooks for a total budget of `b_tot` bits.
    pub fn conventional(&mut self, b_tot: u32, eps: f64) -> Result<ConvCodebooks> {
        let bits = per_gain_bits(b_tot)?;
        Ok(ConvCodebooks {
            direct: self.get(bits, 1.0)?,
            cross: self.get(bits, eps)?,
        })
    }
}

fn per_gain_bits(b_tot: u32) -> Result<u32> {
    if b_tot == 0 || !b_tot.is_multiple_of(4) {
        return Err(Error::config(format!(
            "B_tot = {b_tot} must be a positive multiple of 4"
        )));
    }
    Ok(b_tot / 4)
}

/// Codebook pair of the conventional quantizer: one for the unit-mean direct
/// gains and one for the cross gains (mean `eps`).
#[derive(Debug, Clone)]
pub struct ConvCodebooks {
    pub direct: Arc<LloydCodebook>,
    pub cross: Arc<LloydCodebook>,
}

impl ConvCodebooks {
    pub fn b_tot(&self) -> u32 {
        4 * self.direct.bits
    }

    /// The channel rebuilt from the four quantized gains.
    pub fn reconstruct(&self, h: &ChannelState) -> ChannelState {
        ChannelState::new(
            quantize_gain(&self.direct, h.h11()),
            quantize_gain(&self.cross, h.h12()),
            quantize_gain(&self.cross, h.h21()),
            quantize_gain(&self.direct, h.h22()),
        )
        .expect("codebook levels are finite and nonnegative")
    }
}

/// Conventional quantizer: pair computed from the reconstructed channel.
/// Feedback cost is always `b_tot` bits.
pub fn dq_conv(
    h: &ChannelState,
    params: &FadingParams,
    strategy: Strategy,
    b_tot: u32,
    codebooks: &ConvCodebooks,
) -> Result<(TransmissionPair, u32)> {
    let bits = per_gain_bits(b_tot)?;
    if codebooks.direct.bits != bits || codebooks.cross.bits != bits {
        return Err(Error::config(format!(
            "codebooks carry {} / {} bits per gain, B_tot = {b_tot} needs {bits}",
            codebooks.direct.bits, codebooks.cross.bits
        )));
    }
    let h_hat = codebooks.reconstruct(h);
    let pair = match strategy {
        Strategy::TimeSharing => optimal_ts_pair(&h_hat, params).pair,
        Strategy::Interference => optimal_it_pair(&h_hat, params).pair,
    };
    Ok((pair, b_tot))
}

/// The fixed pair used without any feedback: half the block each, or both
/// transmitters at full power.
pub fn no_feedback_pair(strategy: Strategy) -> TransmissionPair {
    match strategy {
        Strategy::TimeSharing => TransmissionPair::raw(0.5, 0.5, Strategy::TimeSharing),
        Strategy::Interference => TransmissionPair::raw(1.0, 1.0, Strategy::Interference),
    }
}
