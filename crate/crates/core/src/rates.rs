//! Rate and outage formulas for time sharing and interference transmission.
//!
//! Everything here is a pure function of the channel state and the
//! parameters. Outage is always the strict comparison `rate < target`.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::channel::{local_view, ChannelState, FadingParams, LocalCsi, Receiver};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Orthogonal slots `(t1, t2)`, no mutual interference.
    TimeSharing,
    /// Simultaneous transmission with power fractions `(p1, p2)`.
    Interference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    SumRate,
    MinRate,
}

/// A time-sharing pair `(t1, t2)` or a power pair `(p1, p2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPair {
    a: f64,
    b: f64,
    kind: Strategy,
}

impl TransmissionPair {
    pub fn time_sharing(t1: f64, t2: f64) -> Result<Self> {
        Self::checked(t1, t2, Strategy::TimeSharing)
    }

    pub fn power(p1: f64, p2: f64) -> Result<Self> {
        Self::checked(p1, p2, Strategy::Interference)
    }

    pub fn new(a: f64, b: f64, kind: Strategy) -> Result<Self> {
        Self::checked(a, b, kind)
    }

    fn checked(a: f64, b: f64, kind: Strategy) -> Result<Self> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(a) || !unit(b) {
            return Err(Error::InvalidParams {
                name: "pair",
                reason: format!("components must lie in [0, 1], got ({a}, {b})"),
            });
        }
        if kind == Strategy::TimeSharing && a + b > 1.0 {
            return Err(Error::InvalidParams {
                name: "pair",
                reason: format!("time shares sum to {} > 1", a + b),
            });
        }
        Ok(Self { a, b, kind })
    }

    /// For values the library constructs itself and knows to be in range.
    pub(crate) const fn raw(a: f64, b: f64, kind: Strategy) -> Self {
        Self { a, b, kind }
    }

    #[inline]
    pub fn first(&self) -> f64 {
        self.a
    }
    #[inline]
    pub fn second(&self) -> f64 {
        self.b
    }
    #[inline]
    pub fn kind(&self) -> Strategy {
        self.kind
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub r1: f64,
    pub r2: f64,
    pub sum: f64,
    pub min: f64,
}

impl RateReport {
    fn from_rates(r1: f64, r2: f64) -> Self {
        Self {
            r1,
            r2,
            sum: r1 + r2,
            min: r1.min(r2),
        }
    }
}

/// `log2(1 + x)`, accurate for small `x`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Rate of a user holding time share `t` at full power.
#[inline]
pub fn rate_ts(t: f64, params: &FadingParams, direct_gain: f64) -> f64 {
    t * log2_1p(params.p() * direct_gain)
}

/// Rate of a user at power fraction `p_self` while the other user transmits
/// at `p_other`; `cross_gain` is the interferer's gain into this receiver.
#[inline]
pub fn rate_it(
    p_self: f64,
    p_other: f64,
    params: &FadingParams,
    direct_gain: f64,
    cross_gain: f64,
) -> f64 {
    let p = params.p();
    log2_1p(p_self * p * direct_gain / (p_other * p * cross_gain + 1.0))
}

pub fn report(h: &ChannelState, pair: &TransmissionPair, params: &FadingParams) -> RateReport {
    let (a, b) = (pair.a, pair.b);
    match pair.kind {
        Strategy::TimeSharing => {
            RateReport::from_rates(rate_ts(a, params, h.h11()), rate_ts(b, params, h.h22()))
        }
        Strategy::Interference => RateReport::from_rates(
            rate_it(a, b, params, h.h11(), h.h21()),
            rate_it(b, a, params, h.h22(), h.h12()),
        ),
    }
}

/// Minimum rate of the power pair `(p1, p2)`.
#[inline]
pub fn min_rate_it(h: &ChannelState, p1: f64, p2: f64, params: &FadingParams) -> f64 {
    rate_it(p1, p2, params, h.h11(), h.h21()).min(rate_it(p2, p1, params, h.h22(), h.h12()))
}

/// An optimal pair, with `degenerate` set when a zero gain forced a limit
/// case instead of the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairChoice {
    pub pair: TransmissionPair,
    pub degenerate: bool,
}

/// Time shares that equalize the two slot rates, which maximizes the
/// minimum rate.
pub fn optimal_ts_pair(h: &ChannelState, params: &FadingParams) -> PairChoice {
    let l1 = log2_1p(params.p() * h.h11());
    let l2 = log2_1p(params.p() * h.h22());
    if l1 <= 0.0 || l2 <= 0.0 {
        let (t1, t2) = if l2 <= 0.0 { (1.0, 0.0) } else { (0.0, 1.0) };
        return PairChoice {
            pair: TransmissionPair::raw(t1, t2, Strategy::TimeSharing),
            degenerate: true,
        };
    }
    let total = l1 + l2;
    let t1 = l2 / total;
    PairChoice {
        pair: TransmissionPair::raw(t1, 1.0 - t1, Strategy::TimeSharing),
        degenerate: false,
    }
}

/// Equal-rate power fraction of the stronger user when the weaker one
/// transmits at full power.
///
/// Algebraically `(sqrt(q + 1) - 1) / (2 P c_w)` with
/// `q = 4 P d_w (P c_w c_s + c_w) / d_s`, rewritten without the
/// cancellation-prone difference:
/// `2 d_w (P c_s + 1) / (d_s (sqrt(q + 1) + 1))`.
/// `d_s`, `c_s` are the stronger user's direct gain and the interference it
/// receives; `d_w`, `c_w` the weaker user's direct gain and the interference
/// it receives from the stronger one.
fn equal_rate_root(p: f64, d_s: f64, c_s: f64, d_w: f64, c_w: f64) -> f64 {
    let q = 4.0 * p * d_w * (p * c_w * c_s + c_w) / d_s;
    let root = 2.0 * d_w * (p * c_s + 1.0) / (d_s * ((q + 1.0).sqrt() + 1.0));
    root.min(1.0)
}

/// Max-min power pair: the weaker user keeps full power and the stronger
/// one backs off until the two rates meet.
pub fn optimal_it_pair(h: &ChannelState, params: &FadingParams) -> PairChoice {
    let p = params.p();
    let sinr1 = p * h.h11() / (p * h.h21() + 1.0);
    let sinr2 = p * h.h22() / (p * h.h12() + 1.0);
    let full = PairChoice {
        pair: TransmissionPair::raw(1.0, 1.0, Strategy::Interference),
        degenerate: true,
    };
    if sinr1 >= sinr2 {
        // user 1 is stronger and scales down
        if h.h12() == 0.0 || h.h11() == 0.0 || h.h22() == 0.0 {
            return full;
        }
        let p1 = equal_rate_root(p, h.h11(), h.h21(), h.h22(), h.h12());
        PairChoice {
            pair: TransmissionPair::raw(p1, 1.0, Strategy::Interference),
            degenerate: false,
        }
    } else {
        if h.h21() == 0.0 || h.h22() == 0.0 || h.h11() == 0.0 {
            return full;
        }
        let p2 = equal_rate_root(p, h.h22(), h.h12(), h.h11(), h.h21());
        PairChoice {
            pair: TransmissionPair::raw(1.0, p2, Strategy::Interference),
            degenerate: false,
        }
    }
}

/// Smallest time share that keeps a receiver out of outage at full power.
/// `f64::INFINITY` when the direct gain is zero.
pub fn t_min(local: &LocalCsi, params: &FadingParams) -> f64 {
    let capacity = log2_1p(params.p() * local.direct);
    if capacity <= 0.0 {
        f64::INFINITY
    } else {
        params.rho() / capacity
    }
}

/// Largest power fraction the interferer may use before this receiver falls
/// into outage, with this receiver's own transmitter at full power. Computed
/// from the receiver's own local CSI. Negative when the receiver is in outage
/// even without interference; `f64::INFINITY` when there is no interference.
pub fn p_max(local: &LocalCsi, params: &FadingParams) -> f64 {
    if local.cross_in == 0.0 {
        return f64::INFINITY;
    }
    let snr_target = params.rho().exp2() - 1.0;
    local.direct / (snr_target * local.cross_in) - 1.0 / (params.p() * local.cross_in)
}

/// `t_min` for each receiver, in receiver order.
pub fn t_min_pair(h: &ChannelState, params: &FadingParams) -> [f64; 2] {
    [
        t_min(&local_view(h, Receiver::One), params),
        t_min(&local_view(h, Receiver::Two), params),
    ]
}

/// Outage of the best full-CSI choice for the given metric and strategy.
pub fn opt_outage(
    h: &ChannelState,
    params: &FadingParams,
    metric: Metric,
    strategy: Strategy,
) -> bool {
    let two_rho = 2.0 * params.rho();
    let sum_rate = |a: f64, b: f64| report(h, &TransmissionPair::raw(a, b, strategy), params).sum;
    match (metric, strategy) {
        (Metric::SumRate, Strategy::Interference) => {
            sum_rate(1.0, 0.0) < two_rho
                && sum_rate(0.0, 1.0) < two_rho
                && sum_rate(1.0, 1.0) < two_rho
        }
        (Metric::SumRate, Strategy::TimeSharing) => {
            sum_rate(1.0, 0.0) < two_rho && sum_rate(0.0, 1.0) < two_rho
        }
        (Metric::MinRate, Strategy::TimeSharing) => {
            let [t1, t2] = t_min_pair(h, params);
            t1 + t2 > 1.0
        }
        (Metric::MinRate, Strategy::Interference) => {
            let choice = optimal_it_pair(h, params);
            report(h, &choice.pair, params).min < params.rho()
        }
    }
}
