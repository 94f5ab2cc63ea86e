//! Monte-Carlo outage estimation over SNR sweeps.
//!
//! Trials at one grid point are cut into fixed-size blocks of
//! [`BLOCK_TRIALS`]. Block `b` always draws from `TrialStream::new(point_seed, b)`,
//! so the failure count of a block depends only on the point seed and the
//! block index, never on which worker ran it. Adaptive stopping scans the
//! block results in index order and stops at the first prefix meeting the
//! rule, which keeps the result independent of the worker count too.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, ApncError, Result};
use crate::fading::{resample, sample_realization_with_variance, SnrPoint, TrialStream};
use crate::strategy::{evaluate, ModelOptions, MultiplexingPoint, OutageVerdict, RatePartition, Strategy, Targets};

/// Trials per independent random stream.
pub const BLOCK_TRIALS: u64 = 1 << 14;

/// How target rates follow the SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateLaw {
    /// Targets fixed in bits per channel use.
    Fixed(RatePartition),
    /// Targets grow as `r_x * log2(rho)`, clamped at zero below `rho = 1`.
    Scaling { mux: MultiplexingPoint, rates: RatePartition },
}

impl RateLaw {
    pub fn fixed(rate: f64, rt1: f64, rt2: f64) -> Result<Self> {
        Ok(RateLaw::Fixed(RatePartition::new(rate, rt1, rt2)?))
    }

    pub fn scaling(r: f64, rates: RatePartition) -> Result<Self> {
        Ok(RateLaw::Scaling { mux: MultiplexingPoint::new(r, &rates)?, rates })
    }

    pub fn rates(&self) -> &RatePartition {
        match self {
            RateLaw::Fixed(rates) | RateLaw::Scaling { rates, .. } => rates,
        }
    }

    /// Multiplexing gain the law operates at; fixed-rate sweeps sit at `r = 0`.
    pub fn multiplexing_gain(&self) -> f64 {
        match self {
            RateLaw::Fixed(_) => 0.0,
            RateLaw::Scaling { mux, .. } => mux.r,
        }
    }

    pub fn targets(&self, rho: SnrPoint) -> Targets {
        match self {
            RateLaw::Fixed(p) => Targets {
                rate: p.rate(),
                rt1: p.rt1(),
                rt2: p.rt2(),
                rc1: p.rate() - p.rt1(),
                rc2: p.rate() - p.rt2(),
            },
            RateLaw::Scaling { mux, .. } => {
                let log_rho = rho.rho().log2().max(0.0);
                Targets {
                    rate: mux.r * log_rho,
                    rt1: mux.r_t1 * log_rho,
                    rt2: mux.r_t2 * log_rho,
                    rc1: mux.rc_t1 * log_rho,
                    rc2: mux.rc_t2 * log_rho,
                }
            }
        }
    }
}

/// Which flag of an [`OutageVerdict`] counts as a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OutageEvent {
    #[default]
    System,
    O1,
    O2,
    Mac,
}

impl OutageEvent {
    pub fn fired(self, v: &OutageVerdict) -> bool {
        match self {
            OutageEvent::System => v.system_outage,
            OutageEvent::O1 => v.o1,
            OutageEvent::O2 => v.o2,
            OutageEvent::Mac => v.o_mac,
        }
    }
}

impl FromStr for OutageEvent {
    type Err = ApncError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "system" => Ok(OutageEvent::System),
            "o1" => Ok(OutageEvent::O1),
            "o2" => Ok(OutageEvent::O2),
            "mac" | "o_mac" => Ok(OutageEvent::Mac),
            other => invalid(format!("unknown outage event '{other}' (expected system, o1, o2 or mac)")),
        }
    }
}

impl fmt::Display for OutageEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutageEvent::System => "system",
            OutageEvent::O1 => "o1",
            OutageEvent::O2 => "o2",
            OutageEvent::Mac => "mac",
        })
    }
}

/// Everything about a trial except the SNR, the rate law and the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub strategy: Strategy,
    pub n_relays: usize,
    pub model: ModelOptions,
    pub event: OutageEvent,
    /// `E|h|^2` on every link.
    pub variance: f64,
}

impl Scenario {
    pub fn new(strategy: Strategy, n_relays: usize) -> Self {
        Scenario { strategy, n_relays, model: ModelOptions::default(), event: OutageEvent::System, variance: 1.0 }
    }

    pub fn with_event(mut self, event: OutageEvent) -> Self {
        self.event = event;
        self
    }

    pub fn with_model(mut self, model: ModelOptions) -> Self {
        self.model = model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_relays == 0 {
            return invalid("n_relays must be >= 1");
        }
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return invalid(format!("link variance must be finite and > 0, got {}", self.variance));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Fixed { trials: u64 },
    /// Stop once `stderr / p_hat <= target`, or at `max_trials`.
    RelativeStderr { target: f64, max_trials: u64 },
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StopRule::Fixed { trials } if trials == 0 => invalid("trial count must be >= 1"),
            StopRule::RelativeStderr { target, .. } if !(target > 0.0 && target < 1.0) => {
                invalid(format!("relative stderr target must lie in (0, 1), got {target}"))
            }
            StopRule::RelativeStderr { max_trials, .. } if max_trials == 0 => invalid("trial cap must be >= 1"),
            _ => Ok(()),
        }
    }

    fn cap(&self) -> u64 {
        match *self {
            StopRule::Fixed { trials } => trials,
            StopRule::RelativeStderr { max_trials, .. } => max_trials,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRecord {
    pub point_seed: u64,
    pub block_trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub p_hat: f64,
    pub trials: u64,
    pub failures: u64,
    pub stderr: f64,
    /// No failures were observed; `upper_bound` then holds `3 / trials`.
    pub no_failure: bool,
    pub upper_bound: Option<f64>,
    pub seed: SeedRecord,
}

impl OutageEstimate {
    pub fn from_counts(failures: u64, trials: u64, seed: SeedRecord) -> Result<Self> {
        if trials == 0 || failures > trials {
            return invalid(format!("need 0 <= failures ({failures}) <= trials ({trials}) and trials >= 1"));
        }
        let p = failures as f64 / trials as f64;
        let no_failure = failures == 0;
        Ok(OutageEstimate {
            p_hat: p,
            trials,
            failures,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            no_failure,
            upper_bound: no_failure.then(|| 3.0 / trials as f64),
            seed,
        })
    }

    pub fn relative_stderr(&self) -> f64 {
        if self.failures == 0 {
            f64::INFINITY
        } else {
            self.stderr / self.p_hat
        }
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of grid point `index` under `base_seed`.
pub fn derive_point_seed(base_seed: u64, index: u64) -> u64 {
    mix64(base_seed ^ mix64(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Number of failures among the first `trials` draws of block `block`.
pub fn count_block_failures(
    scenario: &Scenario,
    rho: SnrPoint,
    law: &RateLaw,
    point_seed: u64,
    block: u64,
    trials: u64,
) -> Result<u64> {
    scenario.validate()?;
    let mut stream = TrialStream::new(point_seed, block);
    let mut real = sample_realization_with_variance(scenario.n_relays, scenario.variance, stream.rng())?;
    let mut failures = 0;
    for t in 0..trials {
        if t > 0 {
            resample(&mut real, scenario.variance, stream.rng());
        }
        let verdict = evaluate(scenario.strategy, &real, rho, law, scenario.model);
        failures += scenario.event.fired(&verdict) as u64;
    }
    Ok(failures)
}

fn block_len(block: u64, cap: u64) -> u64 {
    (cap - block * BLOCK_TRIALS).min(BLOCK_TRIALS)
}

/// Estimates `P[event]` at one SNR point. Work is spread over the current
/// rayon pool; the result does not depend on its size.
pub fn estimate_outage(
    scenario: &Scenario,
    rho: SnrPoint,
    law: &RateLaw,
    stop: StopRule,
    point_seed: u64,
) -> Result<OutageEstimate> {
    scenario.validate()?;
    stop.validate()?;
    let seed = SeedRecord { point_seed, block_trials: BLOCK_TRIALS };
    let cap = stop.cap();
    let total_blocks = cap.div_ceil(BLOCK_TRIALS);
    let round = (rayon::current_num_threads() as u64 * 2).max(1);

    let mut trials = 0u64;
    let mut failures = 0u64;
    let mut next = 0u64;
    while next < total_blocks {
        let end = match stop {
            StopRule::Fixed { .. } => total_blocks,
            StopRule::RelativeStderr { .. } => (next + round).min(total_blocks),
        };
        let counts: Vec<(u64, u64)> = (next..end)
            .into_par_iter()
            .map(|b| {
                let len = block_len(b, cap);
                count_block_failures(scenario, rho, law, point_seed, b, len).map(|f| (f, len))
            })
            .collect::<Result<_>>()?;
        for (f, len) in counts {
            failures += f;
            trials += len;
            if let StopRule::RelativeStderr { target, .. } = stop {
                let est = OutageEstimate::from_counts(failures, trials, seed)?;
                if est.relative_stderr() <= target {
                    return Ok(est);
                }
            }
        }
        next = end;
    }
    OutageEstimate::from_counts(failures, trials, seed)
}

/// Evenly spaced dB grid from `start_db` to `stop_db` inclusive.
pub fn snr_grid_db(start_db: f64, stop_db: f64, step_db: f64) -> Result<Vec<SnrPoint>> {
    if !(step_db > 0.0) || !step_db.is_finite() {
        return invalid(format!("SNR step must be > 0, got {step_db}"));
    }
    if !(stop_db >= start_db) {
        return invalid(format!("SNR stop ({stop_db} dB) is below start ({start_db} dB)"));
    }
    let count = ((stop_db - start_db) / step_db + 1e-9).floor() as usize + 1;
    (0..count).map(|i| SnrPoint::from_db(start_db + i as f64 * step_db)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub grid: Vec<SnrPoint>,
    pub rate_law: RateLaw,
    pub stop: StopRule,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.stop.validate()?;
        if self.grid.is_empty() {
            return invalid("SNR grid is empty");
        }
        if self.grid.windows(2).any(|w| !(w[1].rho_db() > w[0].rho_db())) {
            return invalid("SNR grid must be strictly increasing in dB");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub rho_db: f64,
    pub estimate: OutageEstimate,
}

/// One estimate per grid point, in grid order. Point `i` uses
/// `derive_point_seed(base_seed, i)`.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.grid
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let seed = derive_point_seed(spec.base_seed, i as u64);
            let estimate = estimate_outage(&spec.scenario, rho, &spec.rate_law, spec.stop, seed)?;
            Ok(SweepRow { rho_db: rho.rho_db(), estimate })
        })
        .collect()
}
