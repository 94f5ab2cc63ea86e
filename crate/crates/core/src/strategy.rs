//! Per-realization outage predicates for active PNC and the multihop, DNC
//! and PNC baselines.
//!
//! Nothing here synthesizes symbols: every predicate compares a
//! mutual-information functional of the channel gains (bits per channel
//! use) against a target rate resolved from a [`RateLaw`]. Outage uses a
//! strict `<`, so a link sitting exactly on its target is a success.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, ApncError, Result};
use crate::fading::{ChannelRealization, ComplexGain, SnrPoint, Terminal};
use crate::montecarlo::RateLaw;

/// Per-source rate `R` and the amounts `R_t1`, `R_t2` each destination
/// decoded correctly while overhearing the other session's source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePartition {
    rate: f64,
    rt1: f64,
    rt2: f64,
}

impl RatePartition {
    pub fn new(rate: f64, rt1: f64, rt2: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return invalid(format!("rate R must be finite and > 0, got {rate}"));
        }
        for (name, v) in [("Rt1", rt1), ("Rt2", rt2)] {
            if !(0.0..=rate).contains(&v) {
                return invalid(format!("{name} = {v} violates 0 <= {name} <= R = {rate}"));
            }
        }
        Ok(RatePartition { rate, rt1, rt2 })
    }

    /// Both destinations overheard everything.
    pub fn perfect(rate: f64) -> Result<Self> {
        RatePartition::new(rate, rate, rate)
    }

    #[inline]
    pub fn rate(&self) -> f64 {
        self.rate
    }

    #[inline]
    pub fn rt1(&self) -> f64 {
        self.rt1
    }

    #[inline]
    pub fn rt2(&self) -> f64 {
        self.rt2
    }

    /// Overheard amount at destination `k` (`R_t1` at `t_1`, `R_t2` at `t_2`).
    pub fn overheard(&self, dest: Terminal) -> f64 {
        match dest {
            Terminal::One => self.rt1,
            Terminal::Two => self.rt2,
        }
    }
}

/// Overall multiplexing gain `r` split into the known-interference parts
/// (`r_t1`, `r_t2`) and the unknown-interference parts (`rc_t1`, `rc_t2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplexingPoint {
    pub r: f64,
    pub r_t1: f64,
    pub r_t2: f64,
    pub rc_t1: f64,
    pub rc_t2: f64,
}

impl MultiplexingPoint {
    pub fn new(r: f64, rates: &RatePartition) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return invalid(format!("multiplexing gain must be finite and >= 0, got {r}"));
        }
        let big_r = rates.rate();
        let r_t1 = rates.rt1() / big_r * r;
        let r_t2 = rates.rt2() / big_r * r;
        Ok(MultiplexingPoint { r, r_t1, r_t2, rc_t1: r - r_t1, rc_t2: r - r_t2 })
    }
}

/// `|beta_n|^2` per relay, set to the energy-constraint bound with equality.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationFactors {
    pub beta_sq: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseModel {
    /// Unit noise at the destination; the amplified relay noise is dropped.
    #[default]
    Simplified,
    /// Destination noise plus the relay noise amplified through `beta` and the
    /// relay→destination gains: `1 + sum_n |h(r_n,t_k)|^2 |beta_n|^2`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CombinerModel {
    /// `rho * sum_n |h(s,r_n)|^2 |beta_n|^2 |h(r_n,t)|^2`.
    #[default]
    PowerSum,
    /// `rho * |sum_n h(s,r_n) beta_n h(r_n,t)|^2`.
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModelOptions {
    pub noise: NoiseModel,
    pub combiner: CombinerModel,
}

/// Which transmission strategy a predicate evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    ActivePnc,
    Multihop,
    Dnc { overhearing_perfect: bool },
    Pnc { overhearing_perfect: bool },
    /// Diagnostic point-to-point link `s_1 -> r_1`; not part of the relay
    /// network, used to calibrate the estimator against closed forms.
    SingleLink,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::ActivePnc => "active_pnc",
            Strategy::Multihop => "multihop",
            Strategy::Dnc { .. } => "dnc",
            Strategy::Pnc { .. } => "pnc",
            Strategy::SingleLink => "single_link",
        }
    }

    pub fn overhearing_perfect(&self) -> Option<bool> {
        match *self {
            Strategy::Dnc { overhearing_perfect } | Strategy::Pnc { overhearing_perfect } => {
                Some(overhearing_perfect)
            }
            _ => None,
        }
    }

    /// Parses a strategy name; `overhearing_perfect` applies to DNC and PNC only.
    pub fn parse(name: &str, overhearing_perfect: bool) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "active_pnc" | "active-pnc" => Ok(Strategy::ActivePnc),
            "multihop" => Ok(Strategy::Multihop),
            "dnc" => Ok(Strategy::Dnc { overhearing_perfect }),
            "pnc" => Ok(Strategy::Pnc { overhearing_perfect }),
            "single_link" | "single-link" => Ok(Strategy::SingleLink),
            other => invalid(format!(
                "unknown strategy '{other}' (expected active_pnc, multihop, dnc, pnc or single_link)"
            )),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseModel {
    type Err = ApncError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simplified" => Ok(NoiseModel::Simplified),
            "exact" => Ok(NoiseModel::Exact),
            other => invalid(format!("unknown noise model '{other}' (expected simplified or exact)")),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::Simplified => "simplified",
            NoiseModel::Exact => "exact",
        })
    }
}

impl FromStr for CombinerModel {
    type Err = ApncError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "power_sum" | "power-sum" => Ok(CombinerModel::PowerSum),
            "coherent" => Ok(CombinerModel::Coherent),
            other => invalid(format!("unknown combiner '{other}' (expected power_sum or coherent)")),
        }
    }
}

impl fmt::Display for CombinerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombinerModel::PowerSum => "power_sum",
            CombinerModel::Coherent => "coherent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutageVerdict {
    /// The strategy whose predicate produced the verdict. DNC and PNC
    /// without perfect overhearing report `Multihop`.
    pub strategy: Strategy,
    /// Active PNC: known-interference event at `t_1`. Baselines: session 1 failed.
    pub o1: bool,
    /// Active PNC: known-interference event at `t_2`. Baselines: session 2 failed.
    pub o2: bool,
    /// Active PNC: sum-rate event on the unknown-interference part.
    pub o_mac: bool,
    pub system_outage: bool,
    pub slot_count: u32,
}

/// Target rates in bits per channel use at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Targets {
    pub rate: f64,
    pub rt1: f64,
    pub rt2: f64,
    pub rc1: f64,
    pub rc2: f64,
}

impl Targets {
    pub fn overheard(&self, dest: Terminal) -> f64 {
        match dest {
            Terminal::One => self.rt1,
            Terminal::Two => self.rt2,
        }
    }
}

#[inline]
fn beta_sq_bound(a: f64, b: f64, rho: f64) -> f64 {
    rho / (rho * a + rho * b + 1.0)
}

pub fn normalization_factors(real: &ChannelRealization, rho: SnrPoint) -> NormalizationFactors {
    let rho = rho.rho();
    let beta_sq = real
        .gains_sr()
        .iter()
        .map(|row| beta_sq_bound(row[0].norm_sqr(), row[1].norm_sqr(), rho))
        .collect();
    NormalizationFactors { beta_sq }
}

/// Received power at `dest` of the component originating at `source`.
fn received_power(
    real: &ChannelRealization,
    rho: f64,
    source: Terminal,
    dest: Terminal,
    betas: &NormalizationFactors,
    combiner: CombinerModel,
) -> f64 {
    let n = real.num_relays();
    match combiner {
        CombinerModel::PowerSum => {
            let mut acc = 0.0;
            for relay in 0..n {
                acc += real.source_relay(source, relay).norm_sqr()
                    * betas.beta_sq[relay]
                    * real.relay_dest(relay, dest).norm_sqr();
            }
            rho * acc
        }
        CombinerModel::Coherent => {
            let mut acc = ComplexGain::ZERO;
            for relay in 0..n {
                let term = real
                    .source_relay(source, relay)
                    .mul(real.relay_dest(relay, dest))
                    .scale(betas.beta_sq[relay].sqrt());
                acc.re += term.re;
                acc.im += term.im;
            }
            rho * acc.norm_sqr()
        }
    }
}

fn noise_variance(real: &ChannelRealization, dest: Terminal, betas: &NormalizationFactors, noise: NoiseModel) -> f64 {
    match noise {
        NoiseModel::Simplified => 1.0,
        NoiseModel::Exact => {
            1.0 + (0..real.num_relays())
                .map(|relay| real.relay_dest(relay, dest).norm_sqr() * betas.beta_sq[relay])
                .sum::<f64>()
        }
    }
}

/// Mutual information of session `dest` at its own destination once the
/// other source's contribution has been removed.
pub fn known_part_mi(
    real: &ChannelRealization,
    rho: SnrPoint,
    dest: Terminal,
    betas: &NormalizationFactors,
    model: ModelOptions,
) -> f64 {
    let signal = received_power(real, rho.rho(), dest, dest, betas, model.combiner);
    let noise = noise_variance(real, dest, betas, model.noise);
    (signal / noise).ln_1p() / std::f64::consts::LN_2
}

/// Mutual information at `dest` about the *other* session's source when the
/// intended source's component is left in as noise. For `dest = t_1` this
/// is `I(x_s2; y_t1)`.
pub fn cross_mi_treating_interference_as_noise(
    real: &ChannelRealization,
    rho: SnrPoint,
    dest: Terminal,
    betas: &NormalizationFactors,
    model: ModelOptions,
) -> f64 {
    let wanted = received_power(real, rho.rho(), dest.other(), dest, betas, model.combiner);
    let interference = received_power(real, rho.rho(), dest, dest, betas, model.combiner);
    let noise = noise_variance(real, dest, betas, model.noise);
    (wanted / (interference + noise)).ln_1p() / std::f64::consts::LN_2
}

pub fn evaluate_active_pnc(
    real: &ChannelRealization,
    rho: SnrPoint,
    law: &RateLaw,
    model: ModelOptions,
) -> OutageVerdict {
    let targets = law.targets(rho);
    let betas = normalization_factors(real, rho);
    let known_t1 = known_part_mi(real, rho, Terminal::One, &betas, model);
    let known_t2 = known_part_mi(real, rho, Terminal::Two, &betas, model);
    let o1 = known_t1 < targets.rt1;
    let o2 = known_t2 < targets.rt2;
    let mac_target = targets.rc1 + targets.rc2;
    let o_mac = if mac_target > 0.0 {
        cross_mi_treating_interference_as_noise(real, rho, Terminal::One, &betas, model) + known_t2 < mac_target
    } else {
        false
    };
    OutageVerdict {
        strategy: Strategy::ActivePnc,
        o1,
        o2,
        o_mac,
        system_outage: o1 || o2 || o_mac,
        slot_count: 2,
    }
}

#[inline]
fn hop_mi(rho: f64, g: ComplexGain) -> f64 {
    (rho * g.norm_sqr()).ln_1p() / std::f64::consts::LN_2
}

/// Decode-and-forward over four slots, best relay per session.
pub fn evaluate_multihop(real: &ChannelRealization, rho: SnrPoint, law: &RateLaw) -> OutageVerdict {
    const SLOTS: u32 = 4;
    let target = SLOTS as f64 * law.targets(rho).rate;
    let r = rho.rho();
    let session_fails = |k: Terminal| {
        let best = (0..real.num_relays())
            .map(|n| hop_mi(r, real.source_relay(k, n)).min(hop_mi(r, real.relay_dest(n, k))))
            .fold(f64::NEG_INFINITY, f64::max);
        best < target
    };
    let o1 = session_fails(Terminal::One);
    let o2 = session_fails(Terminal::Two);
    OutageVerdict {
        strategy: Strategy::Multihop,
        o1,
        o2,
        o_mac: false,
        system_outage: o1 || o2,
        slot_count: SLOTS,
    }
}

/// Digital network coding. With perfect overhearing a single relay decodes
/// both uplinks and broadcasts the XOR in one slot (three slots total); the
/// relay maximizing the weakest of its four hops is selected.
pub fn evaluate_dnc(
    real: &ChannelRealization,
    rho: SnrPoint,
    law: &RateLaw,
    overhearing_perfect: bool,
) -> OutageVerdict {
    if !overhearing_perfect {
        return evaluate_multihop(real, rho, law);
    }
    const SLOTS: u32 = 3;
    let target = SLOTS as f64 * law.targets(rho).rate;
    let r = rho.rho();
    let best = (0..real.num_relays())
        .map(|n| {
            Terminal::BOTH
                .iter()
                .map(|&k| hop_mi(r, real.source_relay(k, n)).min(hop_mi(r, real.relay_dest(n, k))))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let fails = best < target;
    OutageVerdict {
        strategy: Strategy::Dnc { overhearing_perfect: true },
        o1: fails,
        o2: fails,
        o_mac: false,
        system_outage: fails,
        slot_count: SLOTS,
    }
}

/// Physical-layer network coding. With perfect overhearing the two-slot
/// exchange is modeled as amplify-and-forward to each destination through
/// its best relay.
pub fn evaluate_pnc(
    real: &ChannelRealization,
    rho: SnrPoint,
    law: &RateLaw,
    model: ModelOptions,
    overhearing_perfect: bool,
) -> OutageVerdict {
    if !overhearing_perfect {
        return evaluate_multihop(real, rho, law);
    }
    const SLOTS: u32 = 2;
    let target = SLOTS as f64 * law.targets(rho).rate;
    let r = rho.rho();
    let betas = normalization_factors(real, rho);
    let dest_fails = |k: Terminal| {
        let best = (0..real.num_relays())
            .map(|n| {
                let beta_sq = betas.beta_sq[n];
                let hop2 = real.relay_dest(n, k).norm_sqr();
                let signal = r * real.source_relay(k, n).norm_sqr() * beta_sq * hop2;
                let noise = match model.noise {
                    NoiseModel::Simplified => 1.0,
                    NoiseModel::Exact => 1.0 + hop2 * beta_sq,
                };
                (signal / noise).ln_1p() / std::f64::consts::LN_2
            })
            .fold(f64::NEG_INFINITY, f64::max);
        best < target
    };
    let o1 = dest_fails(Terminal::One);
    let o2 = dest_fails(Terminal::Two);
    OutageVerdict {
        strategy: Strategy::Pnc { overhearing_perfect: true },
        o1,
        o2,
        o_mac: false,
        system_outage: o1 || o2,
        slot_count: SLOTS,
    }
}

/// `log2(1 + rho |h(s_1,r_1)|^2) < R`.
pub fn evaluate_single_link(real: &ChannelRealization, rho: SnrPoint, law: &RateLaw) -> OutageVerdict {
    let fails = hop_mi(rho.rho(), real.source_relay(Terminal::One, 0)) < law.targets(rho).rate;
    OutageVerdict {
        strategy: Strategy::SingleLink,
        o1: fails,
        o2: false,
        o_mac: false,
        system_outage: fails,
        slot_count: 1,
    }
}

pub fn evaluate(
    strategy: Strategy,
    real: &ChannelRealization,
    rho: SnrPoint,
    law: &RateLaw,
    model: ModelOptions,
) -> OutageVerdict {
    match strategy {
        Strategy::ActivePnc => evaluate_active_pnc(real, rho, law, model),
        Strategy::Multihop => evaluate_multihop(real, rho, law),
        Strategy::Dnc { overhearing_perfect } => evaluate_dnc(real, rho, law, overhearing_perfect),
        Strategy::Pnc { overhearing_perfect } => evaluate_pnc(real, rho, law, model, overhearing_perfect),
        Strategy::SingleLink => evaluate_single_link(real, rho, law),
    }
}
