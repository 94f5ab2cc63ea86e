//! Diversity-order recovery from outage sweeps: the negated slope of
//! `log10 p_hat` against `log10 rho`.

use crate::analytic::DmtLine;
use crate::error::{ApncError, Result};
use crate::montecarlo::SweepRow;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary (or weighted, when `weights` is given) least squares of `ys` on `xs`.
/// `None` when fewer than two points or all `xs` coincide.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(w).sum();
    let mx = (0..n).map(|i| w(i) * xs[i]).sum::<f64>() / sw;
    let my = (0..n).map(|i| w(i) * ys[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w(i) * (xs[i] - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w(i) * (xs[i] - mx) * (ys[i] - my)).sum();
    let syy: f64 = (0..n).map(|i| w(i) * (ys[i] - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = (0..n).map(|i| w(i) * (ys[i] - intercept - slope * xs[i]).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Some(LineFit { slope, intercept, r_squared })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Drop cells with zero observed failures (default on).
    pub exclude_no_failure: bool,
    /// Weight each point by the inverse variance of `log10 p_hat`.
    pub weighted: bool,
    /// Ignore points below this SNR.
    pub min_rho_db: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { exclude_no_failure: true, weighted: false, min_rho_db: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityEstimate {
    pub d_hat: f64,
    pub r: f64,
    /// Coefficient of determination of the log-log fit.
    pub goodness: f64,
    pub points_used: usize,
    pub intercept: f64,
}

pub fn fit_diversity(table: &[SweepRow], r: f64, opts: FitOptions) -> Result<DiversityEstimate> {
    let usable: Vec<&SweepRow> = table
        .iter()
        .filter(|row| row.estimate.p_hat > 0.0)
        .filter(|row| !(opts.exclude_no_failure && row.estimate.no_failure))
        .filter(|row| opts.min_rho_db.is_none_or(|min| row.rho_db >= min))
        .collect();
    if usable.len() < 2 {
        return Err(ApncError::InsufficientData { usable: usable.len(), required: 2 });
    }
    let xs: Vec<f64> = usable.iter().map(|row| row.rho_db / 10.0).collect();
    let ys: Vec<f64> = usable.iter().map(|row| row.estimate.p_hat.log10()).collect();
    let weights: Option<Vec<f64>> = opts.weighted.then(|| {
        usable
            .iter()
            .map(|row| {
                let e = &row.estimate;
                let sd = e.stderr / (e.p_hat * std::f64::consts::LN_10);
                if sd > 0.0 {
                    1.0 / (sd * sd)
                } else {
                    // p_hat = 1 has zero binomial variance; weight by trial count instead
                    e.trials as f64
                }
            })
            .collect()
    });
    let fit = least_squares(&xs, &ys, weights.as_deref())
        .ok_or(ApncError::InsufficientData { usable: 1, required: 2 })?;
    Ok(DiversityEstimate {
        d_hat: -fit.slope,
        r,
        goodness: fit.r_squared,
        points_used: usable.len(),
        intercept: fit.intercept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineComparison {
    pub expected: f64,
    pub gap: f64,
    pub within_tolerance: bool,
}

pub fn compare_to_line(est: &DiversityEstimate, line: &DmtLine, tolerance: f64) -> LineComparison {
    let expected = line.eval(est.r);
    let gap = est.d_hat - expected;
    LineComparison { expected, gap, within_tolerance: gap.abs() <= tolerance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{OutageEstimate, SeedRecord};

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<SweepRow> {
        [10.0, 15.0, 20.0, 25.0, 30.0]
            .iter()
            .map(|&db| {
                let rho = 10f64.powf(db / 10.0);
                let p = f(rho);
                let trials = 1_000_000_000u64;
                let estimate = OutageEstimate {
                    p_hat: p,
                    trials,
                    failures: (p * trials as f64).round() as u64,
                    stderr: (p * (1.0 - p) / trials as f64).sqrt(),
                    no_failure: false,
                    upper_bound: None,
                    seed: SeedRecord { point_seed: 0, block_trials: 1 },
                };
                SweepRow { rho_db: db, estimate }
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let est = fit_diversity(&synthetic(|r| 1.0 / r), 0.0, FitOptions::default()).unwrap();
        assert!((est.d_hat - 1.0).abs() < 1e-10);
        assert!((est.goodness - 1.0).abs() < 1e-12);
        let est = fit_diversity(&synthetic(|r| 0.5 * r.powi(-2)), 0.0, FitOptions::default()).unwrap();
        assert!((est.d_hat - 2.0).abs() < 1e-10);
        assert_eq!(est.points_used, 5);
    }

    #[test]
    fn weighted_fit_on_exact_law() {
        let opts = FitOptions { weighted: true, ..Default::default() };
        let est = fit_diversity(&synthetic(|r| 3.0 * r.powf(-1.5)), 0.2, opts).unwrap();
        assert!((est.d_hat - 1.5).abs() < 1e-10);
        assert_eq!(est.r, 0.2);
    }

    #[test]
    fn too_few_points() {
        let rows = synthetic(|r| 1.0 / r);
        assert!(matches!(
            fit_diversity(&rows[..1], 0.0, FitOptions::default()),
            Err(ApncError::InsufficientData { usable: 1, .. })
        ));
        let mut rows = rows;
        for row in rows.iter_mut().skip(1) {
            row.estimate.p_hat = 0.0;
            row.estimate.failures = 0;
            row.estimate.no_failure = true;
        }
        assert!(fit_diversity(&rows, 0.0, FitOptions::default()).is_err());
    }

    #[test]
    fn min_snr_filter() {
        let rows = synthetic(|r| 1.0 / r);
        let opts = FitOptions { min_rho_db: Some(20.0), ..Default::default() };
        assert_eq!(fit_diversity(&rows, 0.0, opts).unwrap().points_used, 3);
    }

    #[test]
    fn line_comparison() {
        let line = DmtLine::new(2.0, 1.0).unwrap();
        let est = |d| DiversityEstimate { d_hat: d, r: 0.0, goodness: 1.0, points_used: 4, intercept: 0.0 };
        let c = compare_to_line(&est(2.0), &line, 0.1);
        assert_eq!(c.gap, 0.0);
        assert!(c.within_tolerance);
        assert!(compare_to_line(&est(1.7), &line, 0.35).within_tolerance);
        assert!(!compare_to_line(&est(1.0), &line, 0.3).within_tolerance);
    }
}
