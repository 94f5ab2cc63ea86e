//! Quasi-static flat Rayleigh fading for the two-source, N-relay,
//! two-destination network, plus exponential-order diagnostics.
//!
//! Every link gain is a circularly-symmetric complex Gaussian with
//! `E|h|^2` equal to the link variance (1 by default), so `|h|^2` is
//! exponentially distributed. Gains are constant over one frame and drawn
//! independently between frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::estimator::least_squares;

/// One complex channel amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexGain {
    pub re: f64,
    pub im: f64,
}

impl ComplexGain {
    pub const ZERO: ComplexGain = ComplexGain { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return invalid(format!("complex gain must be finite, got ({re}, {im})"));
        }
        Ok(ComplexGain { re, im })
    }

    /// A real, nonnegative amplitude with the given power `|h|^2`.
    pub fn from_power(power: f64) -> Result<Self> {
        if !(power >= 0.0) || !power.is_finite() {
            return invalid(format!("link power must be finite and >= 0, got {power}"));
        }
        Ok(ComplexGain { re: power.sqrt(), im: 0.0 })
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    #[inline]
    pub(crate) fn mul(self, other: ComplexGain) -> ComplexGain {
        ComplexGain {
            re: self.re * other.re - self.im * other.im,
            im: self.re * other.im + self.im * other.re,
        }
    }

    #[inline]
    pub(crate) fn scale(self, k: f64) -> ComplexGain {
        ComplexGain { re: self.re * k, im: self.im * k }
    }
}

/// Index of a source (`s_1`, `s_2`) or destination (`t_1`, `t_2`); session
/// `k` runs from source `k` to destination `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    One,
    Two,
}

impl Terminal {
    pub const BOTH: [Terminal; 2] = [Terminal::One, Terminal::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Terminal::One => 0,
            Terminal::Two => 1,
        }
    }

    #[inline]
    pub fn other(self) -> Terminal {
        match self {
            Terminal::One => Terminal::Two,
            Terminal::Two => Terminal::One,
        }
    }

    pub fn from_number(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Terminal::One),
            2 => Ok(Terminal::Two),
            _ => invalid(format!("terminal index must be 1 or 2, got {k}")),
        }
    }
}

/// One frame's worth of source→relay and relay→destination gains.
///
/// Row `n` of `gains_sr` holds `[h(s_1, r_n), h(s_2, r_n)]`; row `n` of
/// `gains_rt` holds `[h(r_n, t_1), h(r_n, t_2)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gains_sr: Vec<[ComplexGain; 2]>,
    gains_rt: Vec<[ComplexGain; 2]>,
}

impl ChannelRealization {
    pub fn new(gains_sr: Vec<[ComplexGain; 2]>, gains_rt: Vec<[ComplexGain; 2]>) -> Result<Self> {
        if gains_sr.is_empty() {
            return invalid("a realization needs at least one relay");
        }
        if gains_sr.len() != gains_rt.len() {
            return invalid(format!(
                "source-relay rows ({}) and relay-destination rows ({}) differ",
                gains_sr.len(),
                gains_rt.len()
            ));
        }
        let all_finite = gains_sr
            .iter()
            .chain(gains_rt.iter())
            .flat_map(|row| row.iter())
            .all(|g| g.is_finite());
        if !all_finite {
            return invalid("channel gains must be finite");
        }
        Ok(ChannelRealization { gains_sr, gains_rt })
    }

    /// Builds a realization from link powers `|h|^2` with zero phase.
    /// `sr[n] = [|h(s_1,r_n)|^2, |h(s_2,r_n)|^2]`, `rt[n] = [|h(r_n,t_1)|^2, |h(r_n,t_2)|^2]`.
    pub fn from_powers(sr: &[[f64; 2]], rt: &[[f64; 2]]) -> Result<Self> {
        let conv = |rows: &[[f64; 2]]| -> Result<Vec<[ComplexGain; 2]>> {
            rows.iter()
                .map(|&[a, b]| Ok([ComplexGain::from_power(a)?, ComplexGain::from_power(b)?]))
                .collect()
        };
        ChannelRealization::new(conv(sr)?, conv(rt)?)
    }

    fn zeroed(n_relays: usize) -> Self {
        ChannelRealization {
            gains_sr: vec![[ComplexGain::ZERO; 2]; n_relays],
            gains_rt: vec![[ComplexGain::ZERO; 2]; n_relays],
        }
    }

    #[inline]
    pub fn num_relays(&self) -> usize {
        self.gains_sr.len()
    }

    pub fn gains_sr(&self) -> &[[ComplexGain; 2]] {
        &self.gains_sr
    }

    pub fn gains_rt(&self) -> &[[ComplexGain; 2]] {
        &self.gains_rt
    }

    #[inline]
    pub fn source_relay(&self, source: Terminal, relay: usize) -> ComplexGain {
        self.gains_sr[relay][source.index()]
    }

    #[inline]
    pub fn relay_dest(&self, relay: usize, dest: Terminal) -> ComplexGain {
        self.gains_rt[relay][dest.index()]
    }
}

/// Operating SNR `rho = E / sigma^2`, kept in linear and dB form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    rho: f64,
    rho_db: f64,
}

impl SnrPoint {
    pub fn from_linear(rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return invalid(format!("SNR must be finite and > 0, got {rho}"));
        }
        Ok(SnrPoint { rho, rho_db: 10.0 * rho.log10() })
    }

    pub fn from_db(rho_db: f64) -> Result<Self> {
        if !rho_db.is_finite() {
            return invalid(format!("SNR in dB must be finite, got {rho_db}"));
        }
        let rho = 10f64.powf(rho_db / 10.0);
        if !(rho > 0.0) || !rho.is_finite() {
            return invalid(format!("SNR {rho_db} dB is out of range"));
        }
        Ok(SnrPoint { rho, rho_db })
    }

    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    pub fn rho_db(&self) -> f64 {
        self.rho_db
    }
}

/// Deterministic random stream. Streams with the same `(seed, stream)` pair
/// produce identical draws; distinct stream ids are independent, which is
/// how trial blocks are split across workers.
#[derive(Debug, Clone)]
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        TrialStream { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[inline]
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, per_dim_std: f64) -> ComplexGain {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    ComplexGain { re: re * per_dim_std, im: im * per_dim_std }
}

/// Draws a unit-variance realization: `E|h|^2 = 1` on every link.
pub fn sample_realization<R: Rng + ?Sized>(n_relays: usize, rng: &mut R) -> Result<ChannelRealization> {
    sample_realization_with_variance(n_relays, 1.0, rng)
}

pub fn sample_realization_with_variance<R: Rng + ?Sized>(
    n_relays: usize,
    variance: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if n_relays == 0 {
        return invalid("n_relays must be >= 1");
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return invalid(format!("link variance must be finite and > 0, got {variance}"));
    }
    let mut real = ChannelRealization::zeroed(n_relays);
    resample(&mut real, variance, rng);
    Ok(real)
}

/// Overwrites `real` in place with a fresh draw. Draw order is relay-major:
/// `h(s_1,r_n), h(s_2,r_n), h(r_n,t_1), h(r_n,t_2)` for each `n`.
pub(crate) fn resample<R: Rng + ?Sized>(real: &mut ChannelRealization, variance: f64, rng: &mut R) {
    let std = (variance / 2.0).sqrt();
    for (sr, rt) in real.gains_sr.iter_mut().zip(real.gains_rt.iter_mut()) {
        sr[0] = complex_gaussian(rng, std);
        sr[1] = complex_gaussian(rng, std);
        rt[0] = complex_gaussian(rng, std);
        rt[1] = complex_gaussian(rng, std);
    }
}

/// Finite-SNR estimate of the exponential order of `f(rho)`: the
/// least-squares slope of `log f` against `log rho`.
pub fn empirical_exponential_order(values: &[(f64, f64)]) -> Result<f64> {
    if values.len() < 2 {
        return invalid(format!("need at least 2 (rho, f) points, got {}", values.len()));
    }
    let mut xs = Vec::with_capacity(values.len());
    let mut ys = Vec::with_capacity(values.len());
    for &(rho, f) in values {
        if !(rho > 0.0) || !(f > 0.0) || !rho.is_finite() || !f.is_finite() {
            return invalid(format!("rho and f must be finite and positive, got ({rho}, {f})"));
        }
        xs.push(rho.ln());
        ys.push(f.ln());
    }
    let fit = least_squares(&xs, &ys, None)
        .ok_or_else(|| crate::error::ApncError::InvalidArgument("all rho values are equal".into()))?;
    Ok(fit.slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkLabel {
    SourceRelay { source: Terminal, relay: usize },
    RelayDest { relay: usize, dest: Terminal },
}

impl std::fmt::Display for LinkLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            LinkLabel::SourceRelay { source, relay } => {
                write!(f, "s{}->r{}", source.index() + 1, relay + 1)
            }
            LinkLabel::RelayDest { relay, dest } => write!(f, "r{}->t{}", relay + 1, dest.index() + 1),
        }
    }
}

/// Exponential order `v = -log|h|^2 / log rho` of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialOrderSample {
    pub label: LinkLabel,
    /// `+inf` when the link gain is exactly zero.
    pub v: f64,
    pub zero_gain: bool,
}

impl ExponentialOrderSample {
    pub fn is_finite(&self) -> bool {
        !self.zero_gain
    }
}

pub fn order_statistics(real: &ChannelRealization, rho: SnrPoint) -> Result<Vec<ExponentialOrderSample>> {
    if !(rho.rho() > 1.0) {
        return invalid(format!("order statistics need rho > 1, got {}", rho.rho()));
    }
    let log_rho = rho.rho().ln();
    let sample = |label, g: ComplexGain| {
        let p = g.norm_sqr();
        if p == 0.0 {
            ExponentialOrderSample { label, v: f64::INFINITY, zero_gain: true }
        } else {
            ExponentialOrderSample { label, v: -p.ln() / log_rho, zero_gain: false }
        }
    };
    let mut out = Vec::with_capacity(4 * real.num_relays());
    for relay in 0..real.num_relays() {
        for source in Terminal::BOTH {
            out.push(sample(
                LinkLabel::SourceRelay { source, relay },
                real.source_relay(source, relay),
            ));
        }
        for dest in Terminal::BOTH {
            out.push(sample(LinkLabel::RelayDest { relay, dest }, real.relay_dest(relay, dest)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_realization() {
        let a = sample_realization(1, TrialStream::new(7, 0).rng()).unwrap();
        let b = sample_realization(1, TrialStream::new(7, 0).rng()).unwrap();
        assert_eq!(a, b);
        let c = sample_realization(1, TrialStream::new(7, 1).rng()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shape_follows_relay_count() {
        let real = sample_realization(3, TrialStream::new(1, 0).rng()).unwrap();
        assert_eq!(real.gains_sr().len(), 3);
        assert_eq!(real.gains_rt().len(), 3);
        assert_eq!(real.num_relays(), 3);
    }

    #[test]
    fn zero_relays_rejected() {
        assert!(sample_realization(0, TrialStream::new(1, 0).rng()).is_err());
    }

    #[test]
    fn mismatched_rows_rejected() {
        let err = ChannelRealization::from_powers(&[[1.0, 1.0]], &[[1.0, 1.0], [1.0, 1.0]]);
        assert!(err.is_err());
        assert!(ComplexGain::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn mean_power_is_one() {
        let mut stream = TrialStream::new(2024, 0);
        let n = 250_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let real = sample_realization(1, stream.rng()).unwrap();
            sum += real.gains_sr()[0].iter().chain(real.gains_rt()[0].iter()).map(|g| g.norm_sqr()).sum::<f64>();
        }
        let mean = sum / (4.0 * n as f64);
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn snr_db_mirror() {
        let p = SnrPoint::from_linear(100.0).unwrap();
        assert!((p.rho_db() - 20.0).abs() < 1e-9);
        let q = SnrPoint::from_db(13.0).unwrap();
        assert!((10.0 * q.rho().log10() - 13.0).abs() < 1e-9);
        assert!(SnrPoint::from_linear(0.0).is_err());
        assert!(SnrPoint::from_linear(-1.0).is_err());
    }

    #[test]
    fn exponential_order_of_power_laws() {
        let sq: Vec<_> = [10.0f64, 100.0, 1000.0].iter().map(|&r| (r, r * r)).collect();
        assert!((empirical_exponential_order(&sq).unwrap() - 2.0).abs() < 1e-12);
        let flat: Vec<_> = [10.0, 100.0, 1000.0].iter().map(|&r| (r, 5.0)).collect();
        assert!(empirical_exponential_order(&flat).unwrap().abs() < 1e-12);
        assert!(empirical_exponential_order(&[(10.0, 1.0)]).is_err());
        assert!(empirical_exponential_order(&[(10.0, 1.0), (100.0, 0.0)]).is_err());
        assert!(empirical_exponential_order(&[(-10.0, 1.0), (100.0, 1.0)]).is_err());
    }

    #[test]
    fn order_statistics_examples() {
        let rho = SnrPoint::from_linear(100.0).unwrap();
        let real = ChannelRealization::from_powers(&[[1.0, 0.01]], &[[10.0, 0.0]]).unwrap();
        let stats = order_statistics(&real, rho).unwrap();
        assert_eq!(stats.len(), 4);
        assert!(stats[0].v.abs() < 1e-12);
        assert!((stats[1].v - 1.0).abs() < 1e-12);
        assert!((stats[2].v + 0.5).abs() < 1e-12);
        assert!(stats[3].zero_gain && stats[3].v.is_infinite());
        assert_eq!(stats[3].label.to_string(), "r1->t2");
        assert!(order_statistics(&real, SnrPoint::from_linear(1.0).unwrap()).is_err());
    }
}
