//! Channel model for the two-user interference network.
//!
//! Each fading block is described by four power gains `H[k][l] = |h_{k,l}|^2`,
//! the gain from transmitter `k` to receiver `l`. Direct links are Rayleigh
//! with unit variance, cross links Rayleigh with variance `eps`, so all four
//! power gains are exponential and mutually independent.
//!
//! Randomness is counter-based: a trial index selects an independent ChaCha
//! stream under the master seed, so a trial's channel draw never depends on
//! which worker evaluates it or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// The four power gains of one fading block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    h11: f64,
    h12: f64,
    h21: f64,
    h22: f64,
}

impl ChannelState {
    /// Builds a state from `(H11, H12, H21, H22)`; every gain must be finite
    /// and nonnegative.
    pub fn new(h11: f64, h12: f64, h21: f64, h22: f64) -> Result<Self> {
        for (name, v) in [("h11", h11), ("h12", h12), ("h21", h21), ("h22", h22)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams {
                    name,
                    reason: format!("gain must be finite and >= 0, got {v}"),
                });
            }
        }
        Ok(Self { h11, h12, h21, h22 })
    }

    /// Same gain on all four links.
    pub fn symmetric(g: f64) -> Result<Self> {
        Self::new(g, g, g, g)
    }

    #[inline]
    pub fn h11(&self) -> f64 {
        self.h11
    }
    #[inline]
    pub fn h12(&self) -> f64 {
        self.h12
    }
    #[inline]
    pub fn h21(&self) -> f64 {
        self.h21
    }
    #[inline]
    pub fn h22(&self) -> f64 {
        self.h22
    }

    pub fn gains(&self) -> [f64; 4] {
        [self.h11, self.h12, self.h21, self.h22]
    }
}

/// Fading and link-budget parameters, all in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    eps: f64,
    p: f64,
    rho: f64,
}

impl FadingParams {
    /// `eps`: cross-link variance, `p`: short-term power constraint (linear),
    /// `rho`: target rate in bits/s/Hz.
    pub fn new(eps: f64, p: f64, rho: f64) -> Result<Self> {
        for (name, v) in [("eps", eps), ("p", p), ("rho", rho)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(Self { eps, p, rho })
    }

    /// Same as [`FadingParams::new`] with the power given in dB.
    pub fn with_db(eps: f64, p_db: f64, rho: f64) -> Result<Self> {
        Self::new(eps, db_to_linear(p_db), rho)
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }
    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }
    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn p_db(&self) -> f64 {
        linear_to_db(self.p)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Receiver {
    One,
    Two,
}

impl Receiver {
    pub fn other(self) -> Self {
        match self {
            Receiver::One => Receiver::Two,
            Receiver::Two => Receiver::One,
        }
    }
}

/// What receiver `k` observes: its direct gain `H_{k,k}` and the gain
/// `H_{l,k}` of the interferer arriving at it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCsi {
    pub direct: f64,
    pub cross_in: f64,
}

pub fn local_view(h: &ChannelState, receiver: Receiver) -> LocalCsi {
    match receiver {
        Receiver::One => LocalCsi {
            direct: h.h11,
            cross_in: h.h21,
        },
        Receiver::Two => LocalCsi {
            direct: h.h22,
            cross_in: h.h12,
        },
    }
}

/// Factory for per-trial random streams under one master seed.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    template: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(master_seed: u64) -> Self {
        Self {
            template: ChaCha8Rng::seed_from_u64(master_seed),
        }
    }

    /// The stream owned by trial `index`. Distinct indices give
    /// non-overlapping ChaCha streams.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.template.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}

/// Uniform variate on the open interval (0, 1) with 53 bits of resolution.
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

/// Exponential variate with the given mean by inverse-CDF transform.
/// Always strictly positive and finite.
#[inline]
pub fn sample_exp<R: RngCore + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    -mean * open_unit(rng).ln()
}

/// Draws one block: direct gains ~ Exp(1), cross gains ~ Exp(eps), in the
/// order `H11, H12, H21, H22`.
pub fn sample_channel<R: RngCore + ?Sized>(rng: &mut R, params: &FadingParams) -> ChannelState {
    let h11 = sample_exp(rng, 1.0);
    let h12 = sample_exp(rng, params.eps);
    let h21 = sample_exp(rng, params.eps);
    let h22 = sample_exp(rng, 1.0);
    ChannelState { h11, h12, h21, h22 }
}

/// Channel of trial `index` under `streams`.
pub fn trial_channel(streams: &TrialStreams, index: u64, params: &FadingParams) -> ChannelState {
    sample_channel(&mut streams.stream(index), params)
}

fn require_positive(func: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain { func, value: x })
    }
}

/// `Pr{t_min <= x} = exp(-(2^(rho/x) - 1) / P)` for the minimum time share of
/// one receiver, whose direct gain is Exp(1).
pub fn cdf_t_min(x: f64, params: &FadingParams) -> Result<f64> {
    require_positive("cdf_t_min", x)?;
    let excess = (params.rho / x * LN_2).exp_m1();
    Ok((-excess / params.p).exp())
}

/// Density of the minimum time share `rho / log2(1 + P H)` with `H ~ Exp(1)`.
pub fn pdf_t_min(x: f64, params: &FadingParams) -> Result<f64> {
    require_positive("pdf_t_min", x)?;
    let (rho, p) = (params.rho, params.p);
    let a = rho / x * LN_2;
    // 2^(rho/x) overflows for tiny x; the density is zero there anyway
    if a > 700.0 {
        return Ok(0.0);
    }
    let log_density = (rho * LN_2 / (p * x * x)).ln() + a - a.exp_m1() / p;
    Ok(log_density.exp())
}

/// `Pr{H121 > x} = e^{-x/P} / (1 + eps x)` for `H121 = H11 / (H21 + 1/P)`.
pub fn survival_h121(x: f64, params: &FadingParams) -> Result<f64> {
    require_positive("survival_h121", x)?;
    Ok((-x / params.p).exp() / (1.0 + params.eps * x))
}

/// Density of `H121 = H11 / (H21 + 1/P)`; `H212` has the same law.
pub fn pdf_h121(x: f64, params: &FadingParams) -> Result<f64> {
    require_positive("pdf_h121", x)?;
    let (eps, p) = (params.eps, params.p);
    let decay = (-x / p).exp();
    let denom = eps * x + 1.0;
    Ok(decay / (p * denom) + eps * decay / (denom * denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64, p: f64, rho: f64) -> FadingParams {
        FadingParams::new(eps, p, rho).unwrap()
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(FadingParams::new(0.0, 1.0, 1.0).is_err());
        assert!(FadingParams::new(1.0, -1.0, 1.0).is_err());
        assert!(FadingParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(FadingParams::new(2.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn state_rejects_negative_or_nonfinite() {
        assert!(ChannelState::new(-1.0, 0.0, 0.0, 0.0).is_err());
        assert!(ChannelState::new(1.0, f64::INFINITY, 0.0, 0.0).is_err());
        assert!(ChannelState::new(0.0, 0.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn local_view_selects_fields() {
        let h = ChannelState::new(2.0, 3.0, 5.0, 7.0).unwrap();
        assert_eq!(
            local_view(&h, Receiver::One),
            LocalCsi {
                direct: 2.0,
                cross_in: 5.0
            }
        );
        assert_eq!(
            local_view(&h, Receiver::Two),
            LocalCsi {
                direct: 7.0,
                cross_in: 3.0
            }
        );
        let s = ChannelState::symmetric(1.5).unwrap();
        assert_eq!(local_view(&s, Receiver::One), local_view(&s, Receiver::Two));
    }

    #[test]
    fn db_round_trip() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
        assert!((linear_to_db(1000.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn streams_are_deterministic() {
        let p = params(0.1, 1.0, 0.5);
        let a = TrialStreams::new(42);
        let b = TrialStreams::new(42);
        for i in [0u64, 1, 17, u64::MAX] {
            let x = trial_channel(&a, i, &p);
            let y = trial_channel(&b, i, &p);
            assert_eq!(x.gains().map(f64::to_bits), y.gains().map(f64::to_bits));
        }
        assert_ne!(trial_channel(&a, 0, &p), trial_channel(&a, 1, &p));
        assert_ne!(
            trial_channel(&a, 0, &p),
            trial_channel(&TrialStreams::new(43), 0, &p)
        );
    }

    #[test]
    fn sample_means_match_exponential_laws() {
        let n = 1_000_000u64;
        let streams = TrialStreams::new(7);
        for eps in [1.0, 0.01] {
            let p = params(eps, 1.0, 0.5);
            let mut sum = [0.0f64; 4];
            for i in 0..n {
                let h = trial_channel(&streams, i, &p);
                for (s, g) in sum.iter_mut().zip(h.gains()) {
                    assert!(g > 0.0 && g.is_finite());
                    *s += g;
                }
            }
            let means = sum.map(|s| s / n as f64);
            // Exp(mean m) has std m, so 3 sigma of the sample mean is 3m/sqrt(n)
            for (idx, mean) in means.iter().enumerate() {
                let expected = if idx == 0 || idx == 3 { 1.0 } else { eps };
                let tol = 3.0 * expected / (n as f64).sqrt();
                assert!(
                    (mean - expected).abs() < tol,
                    "gain {idx}: {mean} vs {expected}"
                );
                if eps == 1.0 {
                    assert!((mean - 1.0).abs() < 0.01);
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        let p = params(1.0, 1.0, 0.5);
        assert!(matches!(pdf_t_min(0.0, &p), Err(Error::Domain { .. })));
        assert!(pdf_t_min(-1.0, &p).is_err());
        assert!(pdf_h121(0.0, &p).is_err());
        assert!(cdf_t_min(f64::NAN, &p).is_err());
    }

    #[test]
    fn cdf_t_min_anchor() {
        let p = params(1.0, 1.0, 0.5);
        let expected = (-(2f64.sqrt() - 1.0)).exp();
        assert!((cdf_t_min(1.0, &p).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.6609).abs() < 1e-4);
    }

    #[test]
    fn pdf_t_min_underflows_gracefully() {
        let p = params(1.0, 1.0, 0.5);
        assert_eq!(pdf_t_min(1e-6, &p).unwrap(), 0.0);
        assert!(pdf_t_min(0.3, &p).unwrap() > 0.0);
    }

    #[test]
    fn h121_survival_anchor() {
        let p = params(1.0, 1.0, 0.5);
        let s = survival_h121(1.0, &p).unwrap();
        assert!((s - (-1f64).exp() / 2.0).abs() < 1e-15);
        assert!((s - 0.1839).abs() < 1e-4);
    }

    #[test]
    fn pdfs_match_finite_differences_of_cdfs() {
        let p = params(0.3, 2.0, 0.5);
        let d = 1e-6;
        for x in [0.05, 0.2, 0.7, 1.3, 4.0, 11.0] {
            let fd = (cdf_t_min(x + d, &p).unwrap() - cdf_t_min(x - d, &p).unwrap()) / (2.0 * d);
            assert!(
                (fd - pdf_t_min(x, &p).unwrap()).abs() < 1e-6,
                "t_min at {x}"
            );
            let fd = -(survival_h121(x + d, &p).unwrap() - survival_h121(x - d, &p).unwrap())
                / (2.0 * d);
            assert!((fd - pdf_h121(x, &p).unwrap()).abs() < 1e-6, "h121 at {x}");
        }
    }
}
