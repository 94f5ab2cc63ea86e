//! Closed-form diversity-multiplexing tradeoff lines.
//!
//! Every curve here is a line `d(r) = max(0, d0 (1 - c r))`. The active PNC
//! lines come from splitting each destination's signal into a
//! known-interference part (rate `R_t`) and an unknown-interference part
//! (rate `R - R_t`) and combining their per-part lines. The baseline lines
//! are reconstructed from slot counts alone and are flagged as such.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, ApncError, Result};
use crate::strategy::RatePartition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmtLine {
    pub d0: f64,
    /// Rate penalty; `+inf` marks a zero-rate (degenerate) part.
    pub c: f64,
    pub degenerate: bool,
    /// Derived from slot counts rather than an analytic bound.
    pub reconstruction: bool,
}

impl DmtLine {
    pub fn new(d0: f64, c: f64) -> Result<Self> {
        if !(d0 >= 0.0) || !d0.is_finite() {
            return invalid(format!("d0 must be finite and >= 0, got {d0}"));
        }
        if !(c >= 0.0) || c.is_nan() {
            return invalid(format!("c must be >= 0, got {c}"));
        }
        Ok(DmtLine { d0, c, degenerate: c.is_infinite(), reconstruction: false })
    }

    fn degenerate_line(d0: f64) -> Self {
        DmtLine { d0, c: f64::INFINITY, degenerate: true, reconstruction: false }
    }

    /// Diversity gain at multiplexing gain `r`.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.d0;
        }
        if self.c.is_infinite() {
            return 0.0;
        }
        (self.d0 * (1.0 - self.c * r)).max(0.0)
    }

    /// Multiplexing gain where the line reaches zero diversity.
    pub fn zero_crossing(&self) -> f64 {
        if self.c == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.c
        }
    }
}

/// Combines two parts `d = 1 - A r_1` and `d = 1 - B r_2` by adding their
/// multiplexing gains at equal diversity: `AB / (A + B)`.
pub fn combine_dmt(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return invalid(format!("coefficients must be > 0, got A = {a}, B = {b}"));
    }
    if a.is_infinite() {
        return Ok(b);
    }
    if b.is_infinite() {
        return Ok(a);
    }
    Ok(a * b / (a + b))
}

/// Known-interference part over the two-slot frame: `c = 2R / (R_t1 + R_t2)`.
pub fn dmt_known_part(n_relays: usize, rates: &RatePartition) -> DmtLine {
    let d0 = n_relays as f64;
    let overheard = rates.rt1() + rates.rt2();
    if overheard == 0.0 {
        return DmtLine::degenerate_line(d0);
    }
    DmtLine { d0, c: 2.0 * rates.rate() / overheard, degenerate: false, reconstruction: false }
}

/// Unknown-interference part: `c = R/(R - R_t1) + R/(R - R_t2)`.
pub fn dmt_unknown_part(n_relays: usize, rates: &RatePartition) -> DmtLine {
    let d0 = n_relays as f64;
    let r = rates.rate();
    if rates.rt1() >= r || rates.rt2() >= r {
        return DmtLine::degenerate_line(d0);
    }
    DmtLine {
        d0,
        c: r / (r - rates.rt1()) + r / (r - rates.rt2()),
        degenerate: false,
        reconstruction: false,
    }
}

/// Overall active PNC line,
/// `c = 2R (2R - R_t1 - R_t2) / (2R^2 - R_t1^2 - R_t2^2)`, with `c = 1` at
/// perfect overhearing where the ratio is `0/0`.
pub fn dmt_active_pnc(n_relays: usize, rates: &RatePartition) -> DmtLine {
    let r = rates.rate();
    let (a, b) = (rates.rt1(), rates.rt2());
    let den = 2.0 * r * r - a * a - b * b;
    let c = if den <= 0.0 { 1.0 } else { 2.0 * r * (2.0 * r - a - b) / den };
    DmtLine { d0: n_relays as f64, c, degenerate: false, reconstruction: false }
}

/// DMT of a single known-interference event at one destination, in the
/// overall multiplexing gain: `c = R / R_t`.
pub fn dmt_known_event(n_relays: usize, rate: f64, overheard: f64) -> DmtLine {
    let d0 = n_relays as f64;
    if overheard <= 0.0 {
        return DmtLine::degenerate_line(d0);
    }
    DmtLine { d0, c: rate / overheard, degenerate: false, reconstruction: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Multihop,
    DncPerfect,
    PncPerfect,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Multihop, BaselineKind::DncPerfect, BaselineKind::PncPerfect];

    pub fn slot_count(self) -> u32 {
        match self {
            BaselineKind::Multihop => 4,
            BaselineKind::DncPerfect => 3,
            BaselineKind::PncPerfect => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Multihop => "multihop",
            BaselineKind::DncPerfect => "dnc_perfect",
            BaselineKind::PncPerfect => "pnc_perfect",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = ApncError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "multihop" => Ok(BaselineKind::Multihop),
            "dnc_perfect" | "dnc-perfect" => Ok(BaselineKind::DncPerfect),
            "pnc_perfect" | "pnc-perfect" => Ok(BaselineKind::PncPerfect),
            other => invalid(format!(
                "unknown baseline '{other}' (expected multihop, dnc_perfect or pnc_perfect)"
            )),
        }
    }
}

/// Baseline line `d0 = N`, `c = slot count`; always a reconstruction.
pub fn dmt_baseline(kind: BaselineKind, n_relays: usize) -> DmtLine {
    DmtLine {
        d0: n_relays as f64,
        c: kind.slot_count() as f64,
        degenerate: false,
        reconstruction: true,
    }
}
