//! Python bindings: `import apnc`.

use apnc_core as core;
use apnc_core::{
    ApncError, ChannelRealization, CombinerModel, ComplexGain, FitOptions, ModelOptions, NoiseModel, OutageEstimate,
    OutageEvent, RateLaw, RatePartition, Scenario, SnrPoint, StopRule, Strategy, SweepRow, SweepSpec, TrialStream,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: ApncError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn model(noise: &str, combiner: &str) -> PyResult<ModelOptions> {
    Ok(ModelOptions {
        noise: noise.parse::<NoiseModel>().map_err(py_err)?,
        combiner: combiner.parse::<CombinerModel>().map_err(py_err)?,
    })
}

fn rate_law(rate: f64, rt1: f64, rt2: f64, r: Option<f64>) -> PyResult<RateLaw> {
    let rates = RatePartition::new(rate, rt1, rt2).map_err(py_err)?;
    match r {
        None => Ok(RateLaw::Fixed(rates)),
        Some(r) => RateLaw::scaling(r, rates).map_err(py_err),
    }
}

fn stop_rule(trials: Option<u64>, rel_stderr: Option<f64>, max_trials: Option<u64>) -> PyResult<StopRule> {
    match (trials, rel_stderr) {
        (Some(trials), None) => Ok(StopRule::Fixed { trials }),
        (None, Some(target)) => Ok(StopRule::RelativeStderr {
            target,
            max_trials: max_trials.ok_or_else(|| PyValueError::new_err("rel_stderr requires max_trials"))?,
        }),
        _ => Err(PyValueError::new_err("pass exactly one of trials or rel_stderr")),
    }
}

/// One channel draw: source-to-relay and relay-to-destination gains.
#[pyclass(name = "Channel", module = "apnc", frozen)]
struct PyChannel {
    inner: ChannelRealization,
}

fn to_gains(rows: Vec<[(f64, f64); 2]>) -> PyResult<Vec<[ComplexGain; 2]>> {
    rows.into_iter()
        .map(|[a, b]| {
            Ok([ComplexGain::new(a.0, a.1).map_err(py_err)?, ComplexGain::new(b.0, b.1).map_err(py_err)?])
        })
        .collect()
}

#[pymethods]
impl PyChannel {
    /// Builds a channel from per-relay `[(re, im), (re, im)]` gain pairs.
    #[new]
    fn new(sr: Vec<[(f64, f64); 2]>, rt: Vec<[(f64, f64); 2]>) -> PyResult<Self> {
        let inner = ChannelRealization::new(to_gains(sr)?, to_gains(rt)?).map_err(py_err)?;
        Ok(PyChannel { inner })
    }

    /// Rayleigh draw with unit-mean link powers from stream `stream` of `seed`.
    #[staticmethod]
    #[pyo3(signature = (n_relays, seed, stream = 0))]
    fn sample(n_relays: usize, seed: u64, stream: u64) -> PyResult<Self> {
        let mut ts = TrialStream::new(seed, stream);
        let inner = core::sample_realization(n_relays, ts.rng()).map_err(py_err)?;
        Ok(PyChannel { inner })
    }

    #[getter]
    fn num_relays(&self) -> usize {
        self.inner.num_relays()
    }

    /// `|h_{s_k, r_n}|^2` as `[[s1, s2] per relay]`.
    #[getter]
    fn sr_powers(&self) -> Vec<[f64; 2]> {
        self.inner.gains_sr().iter().map(|g| [g[0].norm_sqr(), g[1].norm_sqr()]).collect()
    }

    /// `|h_{r_n, t_k}|^2` as `[[t1, t2] per relay]`.
    #[getter]
    fn rt_powers(&self) -> Vec<[f64; 2]> {
        self.inner.gains_rt().iter().map(|g| [g[0].norm_sqr(), g[1].norm_sqr()]).collect()
    }

    /// Per-relay squared normalization factors at `rho_db`.
    fn beta_sq(&self, rho_db: f64) -> PyResult<Vec<f64>> {
        let rho = SnrPoint::from_db(rho_db).map_err(py_err)?;
        Ok(core::normalization_factors(&self.inner, rho).beta_sq)
    }

    fn __repr__(&self) -> String {
        format!("Channel(num_relays={})", self.inner.num_relays())
    }
}

/// Outage verdict of one strategy on one channel as a dict.
#[pyfunction]
#[pyo3(signature = (strategy, channel, rho_db, rate, rt1 = 0.0, rt2 = 0.0, *, r = None,
                    overhearing_perfect = false, noise = "simplified", combiner = "power_sum"))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    strategy: &str,
    channel: &PyChannel,
    rho_db: f64,
    rate: f64,
    rt1: f64,
    rt2: f64,
    r: Option<f64>,
    overhearing_perfect: bool,
    noise: &str,
    combiner: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let strategy = Strategy::parse(strategy, overhearing_perfect).map_err(py_err)?;
    let rho = SnrPoint::from_db(rho_db).map_err(py_err)?;
    let law = rate_law(rate, rt1, rt2, r)?;
    let v = core::evaluate(strategy, &channel.inner, rho, &law, model(noise, combiner)?);
    let d = PyDict::new(py);
    d.set_item("strategy", v.strategy.name())?;
    d.set_item("o1", v.o1)?;
    d.set_item("o2", v.o2)?;
    d.set_item("o_mac", v.o_mac)?;
    d.set_item("system_outage", v.system_outage)?;
    d.set_item("slot_count", v.slot_count)?;
    Ok(d)
}

/// Known-interference mutual information at destination `dest` (1 or 2).
#[pyfunction]
#[pyo3(signature = (channel, rho_db, dest, noise = "simplified", combiner = "power_sum"))]
fn known_part_mi(channel: &PyChannel, rho_db: f64, dest: usize, noise: &str, combiner: &str) -> PyResult<f64> {
    let rho = SnrPoint::from_db(rho_db).map_err(py_err)?;
    let dest = core::Terminal::from_number(dest).map_err(py_err)?;
    let betas = core::normalization_factors(&channel.inner, rho);
    Ok(core::known_part_mi(&channel.inner, rho, dest, &betas, model(noise, combiner)?))
}

fn line_tuple(line: core::DmtLine) -> (f64, f64) {
    (line.d0, line.c)
}

/// `(d0, c)` of the active PNC line `d = d0 (1 - c r)`.
#[pyfunction]
fn dmt_active_pnc(n_relays: usize, rate: f64, rt1: f64, rt2: f64) -> PyResult<(f64, f64)> {
    let rates = RatePartition::new(rate, rt1, rt2).map_err(py_err)?;
    Ok(line_tuple(core::dmt_active_pnc(n_relays, &rates)))
}

#[pyfunction]
fn dmt_known_part(n_relays: usize, rate: f64, rt1: f64, rt2: f64) -> PyResult<(f64, f64)> {
    let rates = RatePartition::new(rate, rt1, rt2).map_err(py_err)?;
    Ok(line_tuple(core::dmt_known_part(n_relays, &rates)))
}

#[pyfunction]
fn dmt_unknown_part(n_relays: usize, rate: f64, rt1: f64, rt2: f64) -> PyResult<(f64, f64)> {
    let rates = RatePartition::new(rate, rt1, rt2).map_err(py_err)?;
    Ok(line_tuple(core::dmt_unknown_part(n_relays, &rates)))
}

/// Baseline line for `"multihop"`, `"dnc_perfect"` or `"pnc_perfect"`.
#[pyfunction]
fn dmt_baseline(kind: &str, n_relays: usize) -> PyResult<(f64, f64)> {
    let kind = kind.parse::<core::BaselineKind>().map_err(py_err)?;
    Ok(line_tuple(core::dmt_baseline(kind, n_relays)))
}

#[pyfunction]
fn combine_dmt(a: f64, b: f64) -> PyResult<f64> {
    core::combine_dmt(a, b).map_err(py_err)
}

fn estimate_dict<'py>(py: Python<'py>, rho_db: f64, e: &OutageEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rho_db", rho_db)?;
    d.set_item("p_hat", e.p_hat)?;
    d.set_item("stderr", e.stderr)?;
    d.set_item("trials", e.trials)?;
    d.set_item("failures", e.failures)?;
    d.set_item("no_failure", e.no_failure)?;
    d.set_item("upper_bound", e.upper_bound)?;
    d.set_item("point_seed", e.seed.point_seed)?;
    Ok(d)
}

#[allow(clippy::too_many_arguments)]
fn build_spec(
    strategy: &str,
    n_relays: usize,
    grid_db: &[f64],
    rate: f64,
    rt1: f64,
    rt2: f64,
    r: Option<f64>,
    trials: Option<u64>,
    rel_stderr: Option<f64>,
    max_trials: Option<u64>,
    seed: u64,
    event: &str,
    overhearing_perfect: bool,
    noise: &str,
    combiner: &str,
) -> PyResult<SweepSpec> {
    let strategy = Strategy::parse(strategy, overhearing_perfect).map_err(py_err)?;
    let scenario = Scenario::new(strategy, n_relays)
        .with_event(event.parse::<OutageEvent>().map_err(py_err)?)
        .with_model(model(noise, combiner)?);
    let grid = grid_db.iter().map(|&db| SnrPoint::from_db(db)).collect::<Result<Vec<_>, _>>().map_err(py_err)?;
    let spec = SweepSpec {
        scenario,
        grid,
        rate_law: rate_law(rate, rt1, rt2, r)?,
        stop: stop_rule(trials, rel_stderr, max_trials)?,
        base_seed: seed,
    };
    spec.validate().map_err(py_err)?;
    Ok(spec)
}

/// Monte Carlo outage estimate at one SNR; `seed` is the point seed.
#[pyfunction]
#[pyo3(signature = (strategy, n_relays, rho_db, rate, rt1 = 0.0, rt2 = 0.0, *, r = None, trials = None,
                    rel_stderr = None, max_trials = None, seed = 0, event = "system",
                    overhearing_perfect = false, noise = "simplified", combiner = "power_sum"))]
#[allow(clippy::too_many_arguments)]
fn estimate_outage<'py>(
    py: Python<'py>,
    strategy: &str,
    n_relays: usize,
    rho_db: f64,
    rate: f64,
    rt1: f64,
    rt2: f64,
    r: Option<f64>,
    trials: Option<u64>,
    rel_stderr: Option<f64>,
    max_trials: Option<u64>,
    seed: u64,
    event: &str,
    overhearing_perfect: bool,
    noise: &str,
    combiner: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = build_spec(
        strategy, n_relays, &[rho_db], rate, rt1, rt2, r, trials, rel_stderr, max_trials, seed, event,
        overhearing_perfect, noise, combiner,
    )?;
    let est = py
        .detach(|| core::estimate_outage(&spec.scenario, spec.grid[0], &spec.rate_law, spec.stop, seed))
        .map_err(py_err)?;
    estimate_dict(py, spec.grid[0].rho_db(), &est)
}

/// Sweep over `grid_db`; point `i` uses a seed derived from `(seed, i)`.
#[pyfunction]
#[pyo3(signature = (strategy, n_relays, grid_db, rate, rt1 = 0.0, rt2 = 0.0, *, r = None, trials = None,
                    rel_stderr = None, max_trials = None, seed = 0, event = "system",
                    overhearing_perfect = false, noise = "simplified", combiner = "power_sum"))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    strategy: &str,
    n_relays: usize,
    grid_db: Vec<f64>,
    rate: f64,
    rt1: f64,
    rt2: f64,
    r: Option<f64>,
    trials: Option<u64>,
    rel_stderr: Option<f64>,
    max_trials: Option<u64>,
    seed: u64,
    event: &str,
    overhearing_perfect: bool,
    noise: &str,
    combiner: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let spec = build_spec(
        strategy, n_relays, &grid_db, rate, rt1, rt2, r, trials, rel_stderr, max_trials, seed, event,
        overhearing_perfect, noise, combiner,
    )?;
    let rows = py.detach(|| core::sweep(&spec)).map_err(py_err)?;
    rows.iter().map(|row| estimate_dict(py, row.rho_db, &row.estimate)).collect()
}

/// Negated log-log slope of `p_hat` against SNR. `stderr`/`trials` are only
/// needed for `weighted=True`.
#[pyfunction]
#[pyo3(signature = (rho_db, p_hat, r = 0.0, *, stderr = None, trials = None, weighted = false, min_rho_db = None))]
#[allow(clippy::too_many_arguments)]
fn fit_diversity<'py>(
    py: Python<'py>,
    rho_db: Vec<f64>,
    p_hat: Vec<f64>,
    r: f64,
    stderr: Option<Vec<f64>>,
    trials: Option<Vec<u64>>,
    weighted: bool,
    min_rho_db: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = rho_db.len();
    if p_hat.len() != n || stderr.as_ref().is_some_and(|s| s.len() != n) || trials.as_ref().is_some_and(|t| t.len() != n) {
        return Err(PyValueError::new_err("rho_db, p_hat, stderr and trials must have equal lengths"));
    }
    if weighted && stderr.is_none() {
        return Err(PyValueError::new_err("weighted fits need stderr"));
    }
    let rows: Vec<SweepRow> = (0..n)
        .map(|i| {
            let t = trials.as_ref().map_or(1, |t| t[i]);
            SweepRow {
                rho_db: rho_db[i],
                estimate: OutageEstimate {
                    p_hat: p_hat[i],
                    trials: t,
                    failures: (p_hat[i] * t as f64).round() as u64,
                    stderr: stderr.as_ref().map_or(0.0, |s| s[i]),
                    no_failure: p_hat[i] == 0.0,
                    upper_bound: None,
                    seed: core::SeedRecord { point_seed: 0, block_trials: core::BLOCK_TRIALS },
                },
            }
        })
        .collect();
    let opts = FitOptions { exclude_no_failure: true, weighted, min_rho_db };
    let est = core::fit_diversity(&rows, r, opts).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("d_hat", est.d_hat)?;
    d.set_item("r", est.r)?;
    d.set_item("goodness", est.goodness)?;
    d.set_item("points_used", est.points_used)?;
    d.set_item("intercept", est.intercept)?;
    Ok(d)
}

#[pymodule]
fn apnc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(known_part_mi, m)?)?;
    m.add_function(wrap_pyfunction!(dmt_active_pnc, m)?)?;
    m.add_function(wrap_pyfunction!(dmt_known_part, m)?)?;
    m.add_function(wrap_pyfunction!(dmt_unknown_part, m)?)?;
    m.add_function(wrap_pyfunction!(dmt_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(combine_dmt, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_outage, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_diversity, m)?)?;
    m.add("BLOCK_TRIALS", core::BLOCK_TRIALS)?;
    Ok(())
}
