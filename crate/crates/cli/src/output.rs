//! On-disk formats: sweep and report CSVs, run manifests, analytic curve
//! plots. Floats are written with 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use apnc_core::{OutageEstimate, SeedRecord, SweepRow, BLOCK_TRIALS};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SWEEP_SCHEMA: &str = "apnc-sweep/1";
pub const SWEEP_COLUMNS: [&str; 6] = ["rho_db", "p_hat", "stderr", "trials", "failures", "flags"];
pub const DMT_COLUMNS: [&str; 7] = ["strategy", "r", "d_hat", "goodness", "expected_d", "gap", "within_tol"];
pub const CURVE_COLUMNS: [&str; 4] = ["curve", "r", "d", "reconstruction"];

/// 17 significant digits, round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e| CliError::io(path, e);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(io)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    /// `key=value` pairs from the schema comment line.
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<SweepRow>,
}

pub fn row_flags(est: &OutageEstimate, capped: bool) -> String {
    let mut flags = Vec::new();
    if est.no_failure {
        flags.push("no_failure");
    }
    if capped {
        flags.push("cap_reached");
    }
    if flags.is_empty() {
        "none".into()
    } else {
        flags.join("|")
    }
}

pub fn render_sweep_csv(meta: &BTreeMap<String, String>, rows: &[(SweepRow, String)]) -> String {
    let mut out = format!("# {SWEEP_SCHEMA}");
    for (k, v) in meta {
        let _ = write!(out, " {k}={v}");
    }
    out.push('\n');
    out.push_str(&SWEEP_COLUMNS.join(","));
    out.push('\n');
    for (row, flags) in rows {
        let e = &row.estimate;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(row.rho_db),
            fmt_f64(e.p_hat),
            fmt_f64(e.stderr),
            e.trials,
            e.failures,
            flags
        );
    }
    out
}

pub fn parse_sweep_csv(text: &str, source: &str) -> Result<SweepTable, CliError> {
    let schema = |msg: String| CliError::Schema(format!("{source}: {msg}"));
    let mut table = SweepTable::default();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    while let Some((_, line)) = lines.peek() {
        let Some(comment) = line.strip_prefix('#') else { break };
        for token in comment.split_whitespace() {
            if let Some((k, v)) = token.split_once('=') {
                table.meta.insert(k.to_string(), v.to_string());
            }
        }
        lines.next();
    }
    let Some((_, header)) = lines.next() else {
        return Ok(table);
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    for (i, expected) in SWEEP_COLUMNS.iter().enumerate() {
        match cols.get(i) {
            Some(c) if c == expected => {}
            Some(c) => return Err(schema(format!("column {} is '{c}', expected '{expected}'", i + 1))),
            None => return Err(schema(format!("missing column '{expected}'"))),
        }
    }
    if let Some(extra) = cols.get(SWEEP_COLUMNS.len()) {
        return Err(schema(format!("unexpected column '{extra}'")));
    }
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != SWEEP_COLUMNS.len() {
            return Err(schema(format!("line {}: expected {} fields, got {}", idx + 1, SWEEP_COLUMNS.len(), fields.len())));
        }
        let num = |col: usize| -> Result<f64, CliError> {
            fields[col]
                .parse::<f64>()
                .map_err(|_| schema(format!("line {}: column '{}' is not a number", idx + 1, SWEEP_COLUMNS[col])))
        };
        let int = |col: usize| -> Result<u64, CliError> {
            fields[col]
                .parse::<u64>()
                .map_err(|_| schema(format!("line {}: column '{}' is not an integer", idx + 1, SWEEP_COLUMNS[col])))
        };
        let flags = fields[5];
        let failures = int(4)?;
        let trials = int(3)?;
        let no_failure = flags.split('|').any(|f| f == "no_failure") || failures == 0;
        table.rows.push(SweepRow {
            rho_db: num(0)?,
            estimate: OutageEstimate {
                p_hat: num(1)?,
                stderr: num(2)?,
                trials,
                failures,
                no_failure,
                upper_bound: (no_failure && trials > 0).then(|| 3.0 / trials as f64),
                seed: SeedRecord { point_seed: 0, block_trials: BLOCK_TRIALS },
            },
        });
    }
    Ok(table)
}

pub fn read_sweep_csv(path: &Path) -> Result<SweepTable, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_sweep_csv(&text, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPoint {
    pub rho_db: f64,
    pub point_seed: u64,
    pub trials: u64,
    pub failures: u64,
    pub flags: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFlags {
    pub no_failure_cells: Vec<f64>,
    pub cap_reached_cells: Vec<f64>,
    pub reconstruction_curves: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub artifact_version: String,
    pub command: String,
    /// Effective configuration, CLI overrides folded in; re-running it
    /// reproduces `output` byte for byte.
    pub config: String,
    pub strategy: String,
    pub output: String,
    pub workers: usize,
    pub block_trials: u64,
    pub wall_clock_secs: f64,
    pub points: Vec<ManifestPoint>,
    pub flags: ManifestFlags,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmtReportRow {
    pub strategy: String,
    pub r: f64,
    pub d_hat: f64,
    pub goodness: f64,
    /// `None` when the sweep carried no metadata to pick an analytic line.
    pub expected_d: Option<f64>,
    pub gap: Option<f64>,
    pub within_tol: Option<bool>,
}

pub fn render_dmt_csv(rows: &[DmtReportRow]) -> String {
    let mut out = String::from("# apnc-dmt/1\n");
    out.push_str(&DMT_COLUMNS.join(","));
    out.push('\n');
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.strategy,
            fmt_f64(row.r),
            fmt_f64(row.d_hat),
            fmt_f64(row.goodness),
            opt(row.expected_d),
            opt(row.gap),
            row.within_tol.map(|b| b.to_string()).unwrap_or_default()
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub reconstruction: bool,
    pub points: Vec<(f64, f64)>,
}

pub fn render_curve_csv(curves: &[Curve]) -> String {
    let mut out = String::from("# apnc-curves/1\n");
    out.push_str(&CURVE_COLUMNS.join(","));
    out.push('\n');
    for c in curves {
        for &(r, d) in &c.points {
            let _ = writeln!(out, "{},{},{},{}", c.name, fmt_f64(r), fmt_f64(d), c.reconstruction);
        }
    }
    out
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn axis_max(curves: &[Curve]) -> (f64, f64) {
    let x = curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)).fold(0.0, f64::max);
    let y = curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)).fold(0.0, f64::max);
    (if x > 0.0 { x } else { 1.0 }, (y.ceil()).max(1.0))
}

/// DMT figure: multiplexing gain on x, diversity gain on y. Reconstructed
/// baselines are dashed.
pub fn render_svg(curves: &[Curve], title: &str) -> String {
    let (w, h) = (640.0, 480.0);
    let (left, right, top, bottom) = (60.0, 170.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let (xmax, ymax) = axis_max(curves);
    let sx = |x: f64| left + x / xmax * pw;
    let sy = |y: f64| top + ph - y / ymax * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, left + pw / 2.0, title);
    let _ = writeln!(
        s,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>"#,
        l = left,
        t = top,
        b = top + ph,
        r = left + pw
    );
    for i in 0..=6 {
        let x = xmax * i as f64 / 6.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.2}</text>"#,
            sx(x),
            top + ph + 16.0,
            x
        );
    }
    for i in 0..=ymax as usize {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(i as f64) + 4.0,
            i
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">multiplexing gain r</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">diversity gain d</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if c.reconstruction { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#, pts.join(" "));
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 24.0
        );
        let label = if c.reconstruction { format!("{} (reconstruction)", c.name) } else { c.name.clone() };
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{label}</text>"#, lx + 30.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Self-contained gnuplot script with the curves inlined as data blocks.
pub fn render_gnuplot(curves: &[Curve], title: &str, svg_name: &str) -> String {
    let (xmax, ymax) = axis_max(curves);
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script; run: gnuplot <this file>");
    let _ = writeln!(s, "set terminal svg size 640,480");
    let _ = writeln!(s, "set output '{svg_name}'");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel 'multiplexing gain r'");
    let _ = writeln!(s, "set ylabel 'diversity gain d'");
    let _ = writeln!(s, "set xrange [0:{xmax}]");
    let _ = writeln!(s, "set yrange [0:{ymax}]");
    let _ = writeln!(s, "set key outside right");
    for (i, c) in curves.iter().enumerate() {
        let _ = writeln!(s, "$c{i} << EOD");
        for &(r, d) in &c.points {
            let _ = writeln!(s, "{} {}", fmt_f64(r), fmt_f64(d));
        }
        let _ = writeln!(s, "EOD");
    }
    let parts: Vec<String> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let dt = if c.reconstruction { 2 } else { 1 };
            let label = if c.reconstruction { format!("{} (reconstruction)", c.name) } else { c.name.clone() };
            format!("$c{i} using 1:2 with lines dt {dt} lw 2 title '{label}'")
        })
        .collect();
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_full_precision() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(10.0), "1.0000000000000000e1");
    }

    #[test]
    fn sweep_csv_round_trips() {
        let seed = SeedRecord { point_seed: 1, block_trials: BLOCK_TRIALS };
        let rows = vec![
            (
                SweepRow { rho_db: 10.0, estimate: OutageEstimate::from_counts(37, 1000, seed).unwrap() },
                "none".to_string(),
            ),
            (
                SweepRow { rho_db: 13.0, estimate: OutageEstimate::from_counts(0, 1000, seed).unwrap() },
                "no_failure".to_string(),
            ),
        ];
        let mut meta = BTreeMap::new();
        meta.insert("strategy".to_string(), "multihop".to_string());
        let text = render_sweep_csv(&meta, &rows);
        assert!(text.starts_with("# apnc-sweep/1 strategy=multihop\nrho_db,p_hat,stderr,trials,failures,flags\n"));
        let table = parse_sweep_csv(&text, "t").unwrap();
        assert_eq!(table.meta["strategy"], "multihop");
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].estimate.p_hat, 0.037);
        assert_eq!(table.rows[0].estimate.stderr, rows[0].0.estimate.stderr);
        assert!(table.rows[1].estimate.no_failure);
    }

    #[test]
    fn schema_errors_name_the_column() {
        let err = parse_sweep_csv("rho_db,p_hat,sigma,trials,failures,flags\n", "x.csv").unwrap_err();
        assert!(err.to_string().contains("'sigma'") && err.to_string().contains("'stderr'"));
        let err = parse_sweep_csv("rho_db,p_hat\n", "x.csv").unwrap_err();
        assert!(err.to_string().contains("missing column 'stderr'"));
        let err = parse_sweep_csv("rho_db,p_hat,stderr,trials,failures,flags\n1,x,0,1,0,none\n", "x.csv").unwrap_err();
        assert!(err.to_string().contains("'p_hat'"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn plots_mark_reconstructions() {
        let curves = vec![
            Curve { name: "active_pnc".into(), reconstruction: false, points: vec![(0.0, 2.0), (0.5, 1.0)] },
            Curve { name: "multihop".into(), reconstruction: true, points: vec![(0.0, 2.0), (0.25, 0.0)] },
        ];
        let svg = render_svg(&curves, "DMT");
        assert!(svg.contains("stroke-dasharray") && svg.contains("multihop (reconstruction)"));
        let gp = render_gnuplot(&curves, "DMT", "dmt.svg");
        assert!(gp.contains("$c1 using 1:2 with lines dt 2"));
    }
}
