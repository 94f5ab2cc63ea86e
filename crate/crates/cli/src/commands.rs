//! The four subcommands. Each writes its artifacts under an output directory
//! and returns what it wrote so callers (and tests) can inspect it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use apnc_core::{
    derive_point_seed, dmt_active_pnc, dmt_baseline, dmt_known_event, dmt_known_part, dmt_unknown_part,
    estimate_outage, fit_diversity, BaselineKind, DmtLine, FitOptions, OutageEvent, RatePartition, StopRule,
    Strategy, SweepRow, BLOCK_TRIALS,
};

use crate::config::{ExperimentConfig, LawKind};
use crate::output::{
    read_sweep_csv, render_curve_csv, render_dmt_csv, render_gnuplot, render_svg, render_sweep_csv, row_flags,
    write_atomic, Curve, DmtReportRow, ManifestFlags, ManifestPoint, RunManifest, SweepTable, SWEEP_SCHEMA,
};
use crate::CliError;

pub const DEFAULT_TOLERANCE: f64 = 0.35;
pub const CURVE_R_MAX: f64 = 0.6;
pub const CURVE_R_STEP: f64 = 0.01;
pub const FAMILY_FRACTIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
/// Strategies swept by `compare`.
pub const COMPARED: [&str; 4] = ["active_pnc", "multihop", "dnc", "pnc"];

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses the ambient rayon pool.
    pub workers: usize,
}

impl RunOptions {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
        if self.workers == 0 {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Invalid(format!("cannot start {} workers: {e}", self.workers)))?;
        Ok(pool.install(f))
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub strategy: String,
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub rows: Vec<SweepRow>,
}

fn stop_label(stop: StopRule) -> String {
    match stop {
        StopRule::Fixed { trials } => format!("trials:{trials}"),
        StopRule::RelativeStderr { target, max_trials } => format!("rel_stderr:{target},max_trials:{max_trials}"),
    }
}

fn sweep_meta(cfg: &ExperimentConfig, strategy: Strategy) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    put("strategy", strategy.name().to_string());
    put("overhearing_perfect", strategy.overhearing_perfect().unwrap_or(cfg.overhearing_perfect).to_string());
    put("event", cfg.event.to_string());
    put("relays", cfg.relays.to_string());
    put("variance", cfg.variance.to_string());
    put("law", if cfg.law == LawKind::Scaling { "scaling" } else { "fixed" }.to_string());
    put("R", cfg.rate.to_string());
    put("Rt1", cfg.rt1.to_string());
    put("Rt2", cfg.rt2.to_string());
    put("r", cfg.r.to_string());
    put("noise", cfg.model.noise.to_string());
    put("combiner", cfg.model.combiner.to_string());
    put("seed", cfg.seed.to_string());
    put("stop", stop_label(cfg.stop));
    put("version", env!("CARGO_PKG_VERSION").to_string());
    m
}

fn cap_reached(stop: StopRule, row: &SweepRow) -> bool {
    match stop {
        StopRule::Fixed { .. } => false,
        StopRule::RelativeStderr { target, max_trials } => {
            row.estimate.trials >= max_trials && !(row.estimate.relative_stderr() <= target)
        }
    }
}

fn sweep_one(cfg: &ExperimentConfig, strategy: Strategy, workers: usize) -> Result<SweepOutput, CliError> {
    let started = Instant::now();
    let spec = cfg.sweep_spec(strategy);
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.grid.len());
    let mut points = Vec::with_capacity(spec.grid.len());
    let mut flags = ManifestFlags { no_failure_cells: vec![], cap_reached_cells: vec![], reconstruction_curves: vec![] };
    for (i, &rho) in spec.grid.iter().enumerate() {
        let seed = derive_point_seed(spec.base_seed, i as u64);
        let estimate = estimate_outage(&spec.scenario, rho, &spec.rate_law, spec.stop, seed)?;
        let row = SweepRow { rho_db: rho.rho_db(), estimate };
        let capped = cap_reached(spec.stop, &row);
        if row.estimate.no_failure {
            flags.no_failure_cells.push(row.rho_db);
        }
        if capped {
            flags.cap_reached_cells.push(row.rho_db);
        }
        let row_flag = row_flags(&row.estimate, capped);
        points.push(ManifestPoint {
            rho_db: row.rho_db,
            point_seed: seed,
            trials: row.estimate.trials,
            failures: row.estimate.failures,
            flags: row_flag.clone(),
        });
        rows.push((row, row_flag));
    }
    let meta = sweep_meta(cfg, strategy);
    if let Some(line) = expected_line(&meta) {
        if line.reconstruction {
            flags.reconstruction_curves.push(strategy.name().to_string());
        }
    }

    let name = strategy.name();
    let csv = cfg.output_dir.join(format!("sweep_{name}.csv"));
    let manifest_path = cfg.output_dir.join(format!("sweep_{name}.manifest.json"));
    write_atomic(&csv, render_sweep_csv(&meta, &rows).as_bytes())?;
    let manifest = RunManifest {
        schema: SWEEP_SCHEMA.to_string(),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "sweep".to_string(),
        config: cfg.to_text(),
        strategy: name.to_string(),
        output: csv.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        workers: if workers == 0 { rayon::current_num_threads() } else { workers },
        block_trials: BLOCK_TRIALS,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        points,
        flags,
    };
    write_atomic(&manifest_path, manifest.to_json().as_bytes())?;
    Ok(SweepOutput {
        strategy: name.to_string(),
        csv,
        manifest: manifest_path,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
    })
}

/// Sweeps every configured strategy; one CSV and one manifest each.
pub fn run_sweeps(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<SweepOutput>, CliError> {
    let mut cfg = cfg.clone();
    opts.apply(&mut cfg);
    let workers = opts.workers;
    opts.install(|| cfg.strategies.iter().map(|&s| sweep_one(&cfg, s, workers)).collect())?
}

pub fn cmd_sweep(config: &Path, opts: &RunOptions) -> Result<Vec<SweepOutput>, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    run_sweeps(&cfg, opts)
}

fn meta_f64(meta: &BTreeMap<String, String>, key: &str) -> Option<f64> {
    meta.get(key)?.parse().ok()
}

/// Analytic line a sweep should follow, picked from its header metadata.
pub fn expected_line(meta: &BTreeMap<String, String>) -> Option<DmtLine> {
    let n: usize = meta.get("relays")?.parse().ok()?;
    let perfect = meta.get("overhearing_perfect").is_some_and(|v| v == "true");
    let event: OutageEvent = meta.get("event").map_or(Some(OutageEvent::System), |e| e.parse().ok())?;
    let strategy = Strategy::parse(meta.get("strategy")?, perfect).ok()?;
    let rates = || RatePartition::new(meta_f64(meta, "R")?, meta_f64(meta, "Rt1")?, meta_f64(meta, "Rt2")?).ok();
    match (strategy, event) {
        (Strategy::ActivePnc, OutageEvent::System) => Some(dmt_active_pnc(n, &rates()?)),
        (Strategy::ActivePnc, OutageEvent::O1) => {
            let r = rates()?;
            Some(dmt_known_event(n, r.rate(), r.rt1()))
        }
        (Strategy::ActivePnc, OutageEvent::O2) => {
            let r = rates()?;
            Some(dmt_known_event(n, r.rate(), r.rt2()))
        }
        (Strategy::ActivePnc, OutageEvent::Mac) => Some(dmt_unknown_part(n, &rates()?)),
        (Strategy::Multihop, OutageEvent::System) => Some(dmt_baseline(BaselineKind::Multihop, n)),
        (Strategy::Dnc { overhearing_perfect: true }, OutageEvent::System) => {
            Some(dmt_baseline(BaselineKind::DncPerfect, n))
        }
        (Strategy::Pnc { overhearing_perfect: true }, OutageEvent::System) => {
            Some(dmt_baseline(BaselineKind::PncPerfect, n))
        }
        (Strategy::Dnc { .. } | Strategy::Pnc { .. }, OutageEvent::System) => {
            Some(dmt_baseline(BaselineKind::Multihop, n))
        }
        (Strategy::SingleLink, OutageEvent::System) => DmtLine::new(1.0, 1.0).ok(),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct DmtOptions {
    pub inputs: Vec<PathBuf>,
    /// One multiplexing gain per input; defaults to each sweep's own `r`
    /// (0 for fixed-rate sweeps).
    pub r_values: Option<Vec<f64>>,
    pub tolerance: f64,
    pub fit: FitOptions,
    pub out: PathBuf,
}

impl DmtOptions {
    pub fn new(inputs: Vec<PathBuf>, out: PathBuf) -> Self {
        DmtOptions { inputs, r_values: None, tolerance: DEFAULT_TOLERANCE, fit: FitOptions::default(), out }
    }
}

fn dmt_row(table: &SweepTable, fallback_name: &str, r: Option<f64>, opts: &DmtOptions) -> Result<DmtReportRow, CliError> {
    let strategy = table.meta.get("strategy").cloned().unwrap_or_else(|| fallback_name.to_string());
    if table.rows.is_empty() {
        return Err(CliError::InsufficientData(format!("{fallback_name}: sweep has no data rows")));
    }
    let r = r.unwrap_or_else(|| match table.meta.get("law").map(String::as_str) {
        Some("scaling") => meta_f64(&table.meta, "r").unwrap_or(0.0),
        _ => 0.0,
    });
    let est = fit_diversity(&table.rows, r, opts.fit)
        .map_err(|e| CliError::InsufficientData(format!("{fallback_name}: {e}")))?;
    let cmp = expected_line(&table.meta).map(|line| apnc_core::compare_to_line(&est, &line, opts.tolerance));
    Ok(DmtReportRow {
        strategy,
        r,
        d_hat: est.d_hat,
        goodness: est.goodness,
        expected_d: cmp.map(|c| c.expected),
        gap: cmp.map(|c| c.gap),
        within_tol: cmp.map(|c| c.within_tolerance),
    })
}

/// Fits one diversity order per sweep CSV and writes `dmt.csv`.
pub fn cmd_dmt(opts: &DmtOptions) -> Result<Vec<DmtReportRow>, CliError> {
    if opts.inputs.is_empty() {
        return Err(CliError::Invalid("dmt needs at least one sweep CSV".into()));
    }
    if let Some(rs) = &opts.r_values {
        if rs.len() != opts.inputs.len() {
            return Err(CliError::Invalid(format!(
                "{} r value(s) given for {} input(s)",
                rs.len(),
                opts.inputs.len()
            )));
        }
    }
    if !(opts.tolerance >= 0.0) {
        return Err(CliError::Invalid(format!("tolerance must be >= 0, got {}", opts.tolerance)));
    }
    let mut rows = Vec::with_capacity(opts.inputs.len());
    for (i, path) in opts.inputs.iter().enumerate() {
        let table = read_sweep_csv(path)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        rows.push(dmt_row(&table, &name, opts.r_values.as_ref().map(|rs| rs[i]), opts)?);
    }
    write_atomic(&opts.out.join("dmt.csv"), render_dmt_csv(&rows).as_bytes())?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct AnalyticOptions {
    pub relays: usize,
    pub rates: RatePartition,
    /// Add active PNC lines for symmetric overhearing at fixed fractions of R.
    pub family: bool,
    pub out: PathBuf,
}

impl AnalyticOptions {
    pub fn from_config(cfg: &ExperimentConfig, opts: &RunOptions, family: bool) -> Self {
        AnalyticOptions {
            relays: cfg.relays,
            rates: cfg.rates(),
            family,
            out: opts.out.clone().unwrap_or_else(|| cfg.output_dir.clone()),
        }
    }
}

pub fn sample_line(name: &str, line: &DmtLine) -> Curve {
    let steps = (CURVE_R_MAX / CURVE_R_STEP).round() as usize;
    Curve {
        name: name.to_string(),
        reconstruction: line.reconstruction,
        points: (0..=steps)
            .map(|i| {
                let r = i as f64 * CURVE_R_STEP;
                (r, line.eval(r))
            })
            .collect(),
    }
}

pub fn analytic_curves(opts: &AnalyticOptions) -> Vec<Curve> {
    let n = opts.relays;
    let mut curves = vec![
        sample_line("active_pnc", &dmt_active_pnc(n, &opts.rates)),
        sample_line("known_part", &dmt_known_part(n, &opts.rates)),
        sample_line("unknown_part", &dmt_unknown_part(n, &opts.rates)),
    ];
    for kind in BaselineKind::ALL {
        curves.push(sample_line(kind.name(), &dmt_baseline(kind, n)));
    }
    if opts.family {
        let rate = opts.rates.rate();
        for frac in FAMILY_FRACTIONS {
            let rates = RatePartition::new(rate, frac * rate, frac * rate).expect("fraction of R is in range");
            curves.push(sample_line(&format!("active_pnc_rt{frac}"), &dmt_active_pnc(n, &rates)));
        }
    }
    curves
}

fn write_curves(out: &Path, stem: &str, title: &str, curves: &[Curve]) -> Result<(), CliError> {
    write_atomic(&out.join(format!("{stem}.csv")), render_curve_csv(curves).as_bytes())?;
    write_atomic(&out.join(format!("{stem}.svg")), render_svg(curves, title).as_bytes())?;
    let script = render_gnuplot(curves, title, &format!("{stem}.svg"));
    write_atomic(&out.join(format!("{stem}.gp")), script.as_bytes())
}

/// Writes `analytic.csv`, `analytic.svg` and a gnuplot script.
pub fn cmd_analytic(opts: &AnalyticOptions) -> Result<Vec<Curve>, CliError> {
    let curves = analytic_curves(opts);
    let title = format!(
        "DMT, N = {}, R = {}, Rt1 = {}, Rt2 = {}",
        opts.relays,
        opts.rates.rate(),
        opts.rates.rt1(),
        opts.rates.rt2()
    );
    write_curves(&opts.out, "analytic", &title, &curves)?;
    Ok(curves)
}

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub sweeps: Vec<SweepOutput>,
    pub dmt: Vec<DmtReportRow>,
    pub curves: Vec<Curve>,
}

/// Sweeps active PNC and the three baselines under one configuration, fits
/// each, and writes the matching analytic lines side by side.
pub fn cmd_compare(config: &Path, opts: &RunOptions) -> Result<CompareOutput, CliError> {
    let mut cfg = ExperimentConfig::load(config)?;
    opts.apply(&mut cfg);
    cfg.strategies = COMPARED
        .iter()
        .map(|name| Strategy::parse(name, cfg.overhearing_perfect).expect("known strategy"))
        .collect();
    let sweeps = run_sweeps(&cfg, &RunOptions { workers: opts.workers, ..Default::default() })?;

    let mut dmt_opts = DmtOptions::new(sweeps.iter().map(|s| s.csv.clone()).collect(), cfg.output_dir.clone());
    if cfg.law == LawKind::Scaling {
        dmt_opts.r_values = Some(vec![cfg.r; sweeps.len()]);
    }
    let dmt = cmd_dmt(&dmt_opts)?;

    let mut curves = Vec::new();
    for s in &sweeps {
        let table = read_sweep_csv(&s.csv)?;
        if let Some(line) = expected_line(&table.meta) {
            curves.push(sample_line(&s.strategy, &line));
        }
    }
    write_curves(&cfg.output_dir, "compare_curves", "DMT comparison", &curves)?;
    Ok(CompareOutput { sweeps, dmt, curves })
}
