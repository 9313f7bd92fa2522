//! Conferencing quantizers: multi-round feedback protocols between the two
//! receivers with exact bit accounting.
//!
//! Every encoder is built from a [`LocalCsi`] plus publicly exchanged state,
//! never from the full [`ChannelState`]; only the protocol drivers see both
//! views, and they hand each encoder its own.

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::channel::{local_view, ChannelState, FadingParams, LocalCsi, Receiver};
use crate::error::{Error, Result};
use crate::rates::{self, log2_1p, Strategy, TransmissionPair};

/// Round cap for the bisection protocol.
pub const DEFAULT_MAX_ROUNDS: usize = 64;

/// Up to 64 feedback bits, most significant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct BitString {
    bits: u64,
    len: u8,
}

impl BitString {
    pub const EMPTY: Self = Self { bits: 0, len: 0 };

    pub fn bit(b: bool) -> Self {
        Self {
            bits: b as u64,
            len: 1,
        }
    }

    /// `value` written in exactly `width` bits.
    pub fn fixed_width(value: u64, width: u8) -> Self {
        assert!(width <= 64, "bit string wider than 64 bits");
        assert!(
            width == 64 || value >> width == 0,
            "{value} does not fit in {width} bits"
        );
        Self {
            bits: value,
            len: width,
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len()).then(|| (self.bits >> (self.len() - 1 - i)) & 1 == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.get(i).unwrap())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > 64 {
            return Err(Error::config(format!("bit string longer than 64: {s:?}")));
        }
        let mut bits = 0u64;
        for c in s.chars() {
            bits = (bits << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::config(format!("not a bit string: {s:?}"))),
                };
        }
        Ok(Self {
            bits,
            len: s.len() as u8,
        })
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Bits published by each receiver in one conferencing round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Round {
    pub from_rx1: BitString,
    pub from_rx2: BitString,
}

impl Round {
    pub fn new(from_rx1: BitString, from_rx2: BitString) -> Self {
        Self { from_rx1, from_rx2 }
    }

    pub fn bits(&self) -> usize {
        self.from_rx1.len() + self.from_rx2.len()
    }
}

// a round serializes as `["<rx1 bits>", "<rx2 bits>"]`
impl Serialize for Round {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&self.from_rx1)?;
        t.serialize_element(&self.from_rx2)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Round {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RoundVisitor;
        impl<'de> Visitor<'de> for RoundVisitor {
            type Value = Round;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a pair of bit strings")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Round, A::Error> {
                let a = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let b = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                Ok(Round::new(a, b))
            }
        }
        d.deserialize_tuple(2, RoundVisitor)
    }
}

/// Full record of one protocol execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    rounds: Vec<Round>,
    total_bits: u32,
    decision: TransmissionPair,
    declared_outage: bool,
    terminated_by_cap: bool,
}

impl Transcript {
    fn new(
        rounds: Vec<Round>,
        decision: TransmissionPair,
        declared_outage: bool,
        capped: bool,
    ) -> Self {
        let total_bits = rounds.iter().map(|r| r.bits() as u32).sum();
        Self {
            rounds,
            total_bits,
            decision,
            declared_outage,
            terminated_by_cap: capped,
        }
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }
    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }
    pub fn decision(&self) -> TransmissionPair {
        self.decision
    }
    pub fn declared_outage(&self) -> bool {
        self.declared_outage
    }
    pub fn terminated_by_cap(&self) -> bool {
        self.terminated_by_cap
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }

    /// Parses a JSON record and checks the bit count against the rounds.
    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        let counted: u32 = t.rounds.iter().map(|r| r.bits() as u32).sum();
        if counted != t.total_bits {
            return Err(Error::config(format!(
                "total_bits {} disagrees with rounds ({counted})",
                t.total_bits
            )));
        }
        Ok(t)
    }
}

/// Number of feedback bits exchanged.
pub fn transcript_bits(t: &Transcript) -> u32 {
    t.total_bits
}

// ---------------------------------------------------------------------------
// Sum rate

/// One-bit sum-rate encoder: can this receiver alone carry `2 rho` at full
/// power over the whole block?
pub fn sum_rate_bit(local: &LocalCsi, params: &FadingParams) -> bool {
    log2_1p(params.p() * local.direct) >= 2.0 * params.rho()
}

fn sum_rate_bits(h: &ChannelState, params: &FadingParams) -> (bool, bool) {
    (
        sum_rate_bit(&local_view(h, Receiver::One), params),
        sum_rate_bit(&local_view(h, Receiver::Two), params),
    )
}

/// Two-bit sum-rate quantizer for interference transmission.
pub fn dq_sr_it(h: &ChannelState, params: &FadingParams) -> Transcript {
    let (b1, b2) = sum_rate_bits(h, params);
    let pair = |a, b| TransmissionPair::raw(a, b, Strategy::Interference);
    let (decision, outage) = match (b1, b2) {
        (true, _) => (pair(1.0, 0.0), false),
        (false, true) => (pair(0.0, 1.0), false),
        (false, false) => {
            let d = pair(1.0, 1.0);
            (d, rates::report(h, &d, params).sum < 2.0 * params.rho())
        }
    };
    Transcript::new(
        vec![Round::new(BitString::bit(b1), BitString::bit(b2))],
        decision,
        outage,
        false,
    )
}

/// Two-bit sum-rate quantizer for time sharing.
pub fn dq_sr_ts(h: &ChannelState, params: &FadingParams) -> Transcript {
    let (b1, b2) = sum_rate_bits(h, params);
    let pair = |a, b| TransmissionPair::raw(a, b, Strategy::TimeSharing);
    let (decision, outage) = match (b1, b2) {
        (true, _) => (pair(1.0, 0.0), false),
        (false, true) => (pair(0.0, 1.0), false),
        (false, false) => (pair(1.0, 0.0), true),
    };
    Transcript::new(
        vec![Round::new(BitString::bit(b1), BitString::bit(b2))],
        decision,
        outage,
        false,
    )
}

// ---------------------------------------------------------------------------
// Minimum rate, time sharing

/// Public bounds `[lb, ub]` on one receiver's minimum time share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lb: f64,
    pub ub: f64,
}

impl Interval {
    pub const UNIT: Self = Self { lb: 0.0, ub: 1.0 };

    #[inline]
    pub fn mid(&self) -> f64 {
        (self.lb + self.ub) / 2.0
    }
}

/// Receiver-side encoder of the bisection protocol. Holds only the local
/// minimum time share.
#[derive(Debug, Clone, Copy)]
pub struct TimeShareEncoder {
    t_min: f64,
}

impl TimeShareEncoder {
    pub fn new(local: &LocalCsi, params: &FadingParams) -> Self {
        Self {
            t_min: rates::t_min(local, params),
        }
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Round 0: outage is certain when this receiver needs the whole block.
    pub fn initial_bit(&self) -> bool {
        self.t_min >= 1.0
    }

    /// Rounds 1, 2, ...: is `t_min` in the upper half of the public interval?
    pub fn bisect_bit(&self, bounds: &Interval) -> bool {
        self.t_min >= bounds.mid()
    }
}

/// Step-by-step driver of the minimum-rate time-sharing protocol.
///
/// Round 0 checks for certain outage; each later round halves both public
/// intervals until the receivers either agree that the midpoints are feasible
/// time shares or that outage is unavoidable. At most `max_rounds` rounds
/// (round 0 included) are exchanged; hitting the cap declares outage.
#[derive(Debug, Clone)]
pub struct TimeSharingConference {
    encoders: [TimeShareEncoder; 2],
    bounds: [Interval; 2],
    rounds: Vec<Round>,
    max_rounds: usize,
    outcome: Option<(TransmissionPair, bool, bool)>,
}

impl TimeSharingConference {
    pub fn new(h: &ChannelState, params: &FadingParams, max_rounds: usize) -> Result<Self> {
        if max_rounds == 0 {
            return Err(Error::config("max_rounds must be at least 1"));
        }
        Ok(Self::from_encoders(
            [
                TimeShareEncoder::new(&local_view(h, Receiver::One), params),
                TimeShareEncoder::new(&local_view(h, Receiver::Two), params),
            ],
            max_rounds,
        ))
    }

    fn from_encoders(encoders: [TimeShareEncoder; 2], max_rounds: usize) -> Self {
        Self {
            encoders,
            bounds: [Interval::UNIT; 2],
            rounds: Vec::new(),
            max_rounds,
            outcome: None,
        }
    }

    /// Public bounds after the last completed round.
    pub fn bounds(&self) -> [Interval; 2] {
        self.bounds
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    fn finish(&mut self, t1: f64, t2: f64, outage: bool, capped: bool) {
        self.outcome = Some((
            TransmissionPair::raw(t1, t2, Strategy::TimeSharing),
            outage,
            capped,
        ));
    }

    /// Runs one round. Returns `true` once the protocol has terminated.
    pub fn step(&mut self) -> bool {
        if self.is_finished() {
            return true;
        }
        if self.rounds.len() >= self.max_rounds {
            self.finish(0.5, 0.5, true, true);
            return true;
        }
        let [e1, e2] = self.encoders;
        if self.rounds.is_empty() {
            let (b1, b2) = (e1.initial_bit(), e2.initial_bit());
            self.rounds
                .push(Round::new(BitString::bit(b1), BitString::bit(b2)));
            if b1 || b2 {
                self.finish(0.5, 0.5, true, false);
            }
            return self.is_finished();
        }
        let [i1, i2] = self.bounds;
        let (b1, b2) = (e1.bisect_bit(&i1), e2.bisect_bit(&i2));
        self.rounds
            .push(Round::new(BitString::bit(b1), BitString::bit(b2)));
        match (b1, b2) {
            (true, true) => self.finish(0.5, 0.5, true, false),
            (false, false) => self.finish(i1.mid(), i2.mid(), false, false),
            (true, false) => {
                self.bounds[0].lb = i1.mid();
                self.bounds[1].ub = i2.mid();
            }
            (false, true) => {
                self.bounds[0].ub = i1.mid();
                self.bounds[1].lb = i2.mid();
            }
        }
        self.is_finished()
    }

    /// Runs the remaining rounds and returns the transcript.
    pub fn run(mut self) -> Transcript {
        while !self.step() {}
        let (decision, outage, capped) = self.outcome.expect("finished");
        Transcript::new(self.rounds, decision, outage, capped)
    }
}

/// Minimum-rate quantizer for time sharing.
pub fn dq_mr_ts(h: &ChannelState, params: &FadingParams, max_rounds: usize) -> Result<Transcript> {
    Ok(TimeSharingConference::new(h, params, max_rounds)?.run())
}

// ---------------------------------------------------------------------------
// Minimum rate, interference transmission

/// `ceil(log2(n))` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// The uniform power codebook `{0, 1/M, ..., 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookCm {
    m: u32,
}

impl CodebookCm {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("codebook size M must be positive"));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn level(&self, index: u32) -> f64 {
        index as f64 / self.m as f64
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.level(i)).collect()
    }

    /// Fixed-length index width, `ceil(log2(M + 1))`.
    pub fn index_bits(&self) -> u32 {
        ceil_log2(self.m as u64 + 1)
    }

    /// Index of the largest level not exceeding `p` (0 when `p <= 0`).
    pub fn quantize_down(&self, p: f64) -> u32 {
        if p.is_nan() || p <= 0.0 {
            return 0;
        }
        if p >= 1.0 {
            return self.m;
        }
        let mut idx = ((p * self.m as f64).floor() as u32).min(self.m);
        while idx > 0 && self.level(idx) > p {
            idx -= 1;
        }
        while idx < self.m && self.level(idx + 1) <= p {
            idx += 1;
        }
        idx
    }
}

/// Round encoder of the power protocol: quantize the interferer's largest
/// tolerable power (computed from this receiver's local view) down into the
/// codebook.
pub fn tolerable_power_index(local: &LocalCsi, params: &FadingParams, cb: &CodebookCm) -> u32 {
    cb.quantize_down(rates::p_max(local, params))
}

/// Receiver-side check after round 0: with full own power and the announced
/// interferer level, is this receiver out of outage?
pub fn level_check_bit(local: &LocalCsi, params: &FadingParams, own_level: f64) -> bool {
    rates::rate_it(own_level, 1.0, params, local.direct, local.cross_in) >= params.rho()
}

/// Step-by-step driver of the minimum-rate interference-transmission protocol
/// (at most two rounds).
#[derive(Debug, Clone)]
pub struct PowerConference {
    views: [LocalCsi; 2],
    params: FadingParams,
    codebook: CodebookCm,
    rounds: Vec<Round>,
    decision: Option<TransmissionPair>,
}

impl PowerConference {
    pub fn new(h: &ChannelState, params: &FadingParams, codebook: CodebookCm) -> Self {
        Self {
            views: [local_view(h, Receiver::One), local_view(h, Receiver::Two)],
            params: *params,
            codebook,
            rounds: Vec::with_capacity(2),
            decision: None,
        }
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn is_finished(&self) -> bool {
        self.decision.is_some()
    }

    pub fn step(&mut self) -> bool {
        if self.is_finished() {
            return true;
        }
        let cb = &self.codebook;
        let width = cb.index_bits() as u8;
        let [rx1, rx2] = &self.views;
        let pair = |a, b| TransmissionPair::raw(a, b, Strategy::Interference);
        if self.rounds.is_empty() {
            // receiver 1 announces how much power transmitter 2 may use
            let idx = tolerable_power_index(rx1, &self.params, cb);
            let q = cb.level(idx);
            let ok = level_check_bit(rx2, &self.params, q);
            self.rounds.push(Round::new(
                BitString::fixed_width(idx as u64, width),
                BitString::bit(ok),
            ));
            if ok {
                self.decision = Some(pair(1.0, q));
            }
        } else {
            let idx = tolerable_power_index(rx2, &self.params, cb);
            self.rounds.push(Round::new(
                BitString::EMPTY,
                BitString::fixed_width(idx as u64, width),
            ));
            self.decision = Some(pair(cb.level(idx), 1.0));
        }
        self.is_finished()
    }

    pub fn run(mut self, h: &ChannelState) -> Transcript {
        while !self.step() {}
        let decision = self.decision.expect("finished");
        let outage = rates::report(h, &decision, &self.params).min < self.params.rho();
        Transcript::new(self.rounds, decision, outage, false)
    }
}

/// Minimum-rate quantizer for interference transmission.
pub fn dq_mr_it(h: &ChannelState, params: &FadingParams, codebook: &CodebookCm) -> Transcript {
    PowerConference::new(h, params, *codebook).run(h)
}

/// Full-CSI oracle: the pair in `{(1,1), (1, m/M), (m/M, 1) : 0 < m < M}`
/// with the largest minimum rate. Ties resolve to the earliest pair in that
/// enumeration order.
pub fn gq_mr_it(
    h: &ChannelState,
    params: &FadingParams,
    codebook: &CodebookCm,
) -> TransmissionPair {
    let m = codebook.m();
    let candidates = std::iter::once((1.0, 1.0))
        .chain((1..m).map(|i| (1.0, codebook.level(i))))
        .chain((1..m).map(|i| (codebook.level(i), 1.0)));
    let mut best = (1.0, 1.0);
    let mut best_rate = f64::NEG_INFINITY;
    for (a, b) in candidates {
        let r = rates::min_rate_it(h, a, b, params);
        if r > best_rate {
            best = (a, b);
            best_rate = r;
        }
    }
    TransmissionPair::raw(best.0, best.1, Strategy::Interference)
}
