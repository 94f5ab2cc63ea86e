//! Experiment configuration: flat `key = value` lines with dotted section
//! prefixes. `#` starts a comment. Unknown or repeated keys are errors.
//!
//! ```text
//! strategy = active_pnc, multihop
//! strategy.overhearing_perfect = false
//! strategy.event = system
//! network.relays = 2
//! rates.law = fixed
//! rates.R = 1
//! rates.Rt1 = 0.5
//! rates.Rt2 = 0.5
//! snr.start_db = 10
//! snr.stop_db = 25
//! snr.step_db = 3          # grid defaults: 10 to 30 dB in 1 dB steps
//! stop.trials = 1000000
//! seed = 42
//! output.dir = out
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use apnc_core::{
    snr_grid_db, CombinerModel, ModelOptions, NoiseModel, OutageEvent, RateLaw, RatePartition, Scenario, StopRule,
    Strategy, SweepSpec,
};

pub const DEFAULT_START_DB: f64 = 10.0;
pub const DEFAULT_STOP_DB: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.source_name, line, self.message),
            None => write!(f, "{}: {}", self.source_name, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    Fixed,
    Scaling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategies: Vec<Strategy>,
    pub overhearing_perfect: bool,
    pub event: OutageEvent,
    pub relays: usize,
    pub variance: f64,
    pub law: LawKind,
    pub rate: f64,
    pub rt1: f64,
    pub rt2: f64,
    pub r: f64,
    pub model: ModelOptions,
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
    pub stop: StopRule,
    pub seed: u64,
    pub output_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "strategy",
    "strategy.overhearing_perfect",
    "strategy.event",
    "network.relays",
    "network.variance",
    "rates.law",
    "rates.R",
    "rates.Rt1",
    "rates.Rt2",
    "rates.r",
    "model.noise",
    "model.combiner",
    "snr.start_db",
    "snr.stop_db",
    "snr.step_db",
    "stop.trials",
    "stop.rel_stderr",
    "stop.max_trials",
    "seed",
    "output.dir",
];

struct Entries<'a> {
    name: &'a str,
    map: HashMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn err(&self, line: Option<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError { source_name: self.name.to_string(), line, message: message.into() }
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|&(l, _)| l)
    }

    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.err(Some(line), format!("{key}: cannot parse '{v}': {e}"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?.ok_or_else(|| self.err(None, format!("missing required key '{key}'")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigErrorOrIo> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigErrorOrIo::Io(path.to_path_buf(), e))?;
        ExperimentConfig::parse(&text, &path.display().to_string()).map_err(ConfigErrorOrIo::Config)
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let mut entries = Entries { name: source_name, map: HashMap::new() };
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| entries.err(Some(line_no), format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            let value = value.trim();
            let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
                return Err(entries.err(Some(line_no), format!("unknown key '{key}'")));
            };
            if let Some(prev) = entries.line_of(known) {
                return Err(entries.err(Some(line_no), format!("duplicate key '{key}' (first set on line {prev})")));
            }
            entries.map.insert(known, (line_no, value));
        }
        ExperimentConfig::from_entries(&entries)
    }

    fn from_entries(e: &Entries<'_>) -> Result<Self, ConfigError> {
        let overhearing_perfect = e.parse::<bool>("strategy.overhearing_perfect")?.unwrap_or(false);
        let (strategy_line, strategy_text) =
            e.raw("strategy").ok_or_else(|| e.err(None, "missing required key 'strategy'"))?;
        let mut strategies = Vec::new();
        for name in strategy_text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let s = Strategy::parse(name, overhearing_perfect).map_err(|err| e.err(Some(strategy_line), err.to_string()))?;
            if strategies.contains(&s) {
                return Err(e.err(Some(strategy_line), format!("strategy '{name}' listed twice")));
            }
            strategies.push(s);
        }
        if strategies.is_empty() {
            return Err(e.err(Some(strategy_line), "at least one strategy is required"));
        }

        let event = e.parse::<OutageEvent>("strategy.event")?.unwrap_or_default();
        let relays: usize = e.required("network.relays")?;
        if relays == 0 {
            return Err(e.err(e.line_of("network.relays"), "network.relays must be >= 1"));
        }
        let variance = e.parse::<f64>("network.variance")?.unwrap_or(1.0);
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(e.err(e.line_of("network.variance"), "network.variance must be finite and > 0"));
        }

        let law = match e.raw("rates.law") {
            None => LawKind::Fixed,
            Some((_, "fixed")) => LawKind::Fixed,
            Some((_, "scaling")) => LawKind::Scaling,
            Some((line, other)) => {
                return Err(e.err(Some(line), format!("rates.law must be 'fixed' or 'scaling', got '{other}'")))
            }
        };
        let rate: f64 = e.required("rates.R")?;
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(e.err(e.line_of("rates.R"), format!("rates.R = {rate} violates R > 0")));
        }
        let rt1 = e.parse::<f64>("rates.Rt1")?.unwrap_or(0.0);
        let rt2 = e.parse::<f64>("rates.Rt2")?.unwrap_or(0.0);
        for (key, v) in [("rates.Rt1", rt1), ("rates.Rt2", rt2)] {
            if !(0.0..=rate).contains(&v) {
                let short = &key[6..];
                return Err(e.err(e.line_of(key), format!("{key} = {v} violates 0 <= {short} <= R (R = {rate})")));
            }
        }
        let r = match (law, e.parse::<f64>("rates.r")?) {
            (LawKind::Scaling, None) => return Err(e.err(None, "rates.law = scaling requires rates.r")),
            (LawKind::Fixed, Some(_)) => {
                return Err(e.err(e.line_of("rates.r"), "rates.r only applies to rates.law = scaling"))
            }
            (_, Some(r)) if !(r >= 0.0) || !r.is_finite() => {
                return Err(e.err(e.line_of("rates.r"), format!("rates.r = {r} violates r >= 0")))
            }
            (_, r) => r.unwrap_or(0.0),
        };

        let noise = e.parse::<NoiseModel>("model.noise")?.unwrap_or_default();
        let combiner = e.parse::<CombinerModel>("model.combiner")?.unwrap_or_default();

        let start_db: f64 = e.parse("snr.start_db")?.unwrap_or(DEFAULT_START_DB);
        let stop_db: f64 = e.parse("snr.stop_db")?.unwrap_or(DEFAULT_STOP_DB);
        let step_db: f64 = e.parse("snr.step_db")?.unwrap_or(1.0);
        if let Err(err) = snr_grid_db(start_db, stop_db, step_db) {
            return Err(e.err(e.line_of("snr.stop_db").or(e.line_of("snr.step_db")), err.to_string()));
        }

        let stop = match (e.parse::<u64>("stop.trials")?, e.parse::<f64>("stop.rel_stderr")?) {
            (Some(_), Some(_)) => {
                return Err(e.err(e.line_of("stop.rel_stderr"), "set either stop.trials or stop.rel_stderr, not both"))
            }
            (Some(trials), None) => {
                if e.raw("stop.max_trials").is_some() {
                    return Err(e.err(e.line_of("stop.max_trials"), "stop.max_trials only applies with stop.rel_stderr"));
                }
                StopRule::Fixed { trials }
            }
            (None, Some(target)) => StopRule::RelativeStderr { target, max_trials: e.required("stop.max_trials")? },
            (None, None) => return Err(e.err(None, "missing stop rule: set stop.trials or stop.rel_stderr")),
        };
        if let Err(err) = stop.validate() {
            let line = e.line_of("stop.trials").or(e.line_of("stop.rel_stderr"));
            return Err(e.err(line, err.to_string()));
        }

        let seed = e.parse::<u64>("seed")?.unwrap_or(0);
        let output_dir = PathBuf::from(e.raw("output.dir").map(|(_, v)| v).unwrap_or("out"));

        Ok(ExperimentConfig {
            strategies,
            overhearing_perfect,
            event,
            relays,
            variance,
            law,
            rate,
            rt1,
            rt2,
            r,
            model: ModelOptions { noise, combiner },
            start_db,
            stop_db,
            step_db,
            stop,
            seed,
            output_dir,
        })
    }

    pub fn rates(&self) -> RatePartition {
        RatePartition::new(self.rate, self.rt1, self.rt2).expect("validated on load")
    }

    pub fn rate_law(&self) -> RateLaw {
        match self.law {
            LawKind::Fixed => RateLaw::Fixed(self.rates()),
            LawKind::Scaling => RateLaw::scaling(self.r, self.rates()).expect("validated on load"),
        }
    }

    pub fn sweep_spec(&self, strategy: Strategy) -> SweepSpec {
        SweepSpec {
            scenario: Scenario {
                strategy,
                n_relays: self.relays,
                model: self.model,
                event: self.event,
                variance: self.variance,
            },
            grid: snr_grid_db(self.start_db, self.stop_db, self.step_db).expect("validated on load"),
            rate_law: self.rate_law(),
            stop: self.stop,
            base_seed: self.seed,
        }
    }

    /// Canonical text form; parsing it back yields an equal config.
    pub fn to_text(&self) -> String {
        let names: Vec<&str> = self.strategies.iter().map(|s| s.name()).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("strategy", names.join(", "));
        kv("strategy.overhearing_perfect", self.overhearing_perfect.to_string());
        kv("strategy.event", self.event.to_string());
        kv("network.relays", self.relays.to_string());
        kv("network.variance", self.variance.to_string());
        kv("rates.law", match self.law {
            LawKind::Fixed => "fixed".into(),
            LawKind::Scaling => "scaling".into(),
        });
        kv("rates.R", self.rate.to_string());
        kv("rates.Rt1", self.rt1.to_string());
        kv("rates.Rt2", self.rt2.to_string());
        if self.law == LawKind::Scaling {
            kv("rates.r", self.r.to_string());
        }
        kv("model.noise", self.model.noise.to_string());
        kv("model.combiner", self.model.combiner.to_string());
        kv("snr.start_db", self.start_db.to_string());
        kv("snr.stop_db", self.stop_db.to_string());
        kv("snr.step_db", self.step_db.to_string());
        match self.stop {
            StopRule::Fixed { trials } => kv("stop.trials", trials.to_string()),
            StopRule::RelativeStderr { target, max_trials } => {
                kv("stop.rel_stderr", target.to_string());
                kv("stop.max_trials", max_trials.to_string());
            }
        }
        kv("seed", self.seed.to_string());
        kv("output.dir", self.output_dir.display().to_string());
        out
    }
}

#[derive(Debug)]
pub enum ConfigErrorOrIo {
    Config(ConfigError),
    Io(PathBuf, std::io::Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "strategy = active_pnc\nnetwork.relays = 2\nrates.R = 1\nrates.Rt1 = 0.5\nrates.Rt2 = 0.25\n\
                           snr.start_db = 10\nsnr.stop_db = 20\nsnr.step_db = 5\nstop.trials = 1000\nseed = 9\n";

    #[test]
    fn minimal_config_loads() {
        let cfg = ExperimentConfig::parse(MINIMAL, "test.cfg").unwrap();
        assert_eq!(cfg.strategies, vec![Strategy::ActivePnc]);
        assert_eq!(cfg.relays, 2);
        assert_eq!(cfg.stop, StopRule::Fixed { trials: 1000 });
        assert_eq!(cfg.sweep_spec(Strategy::ActivePnc).grid.len(), 3);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::parse(MINIMAL, "a").unwrap();
        cfg.law = LawKind::Scaling;
        cfg.r = 0.3;
        cfg.stop = StopRule::RelativeStderr { target: 0.05, max_trials: 1 << 30 };
        cfg.strategies.push(Strategy::Dnc { overhearing_perfect: false });
        let again = ExperimentConfig::parse(&cfg.to_text(), "b").unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn violated_rate_invariant_names_line_and_rule() {
        let text = MINIMAL.replace("rates.Rt1 = 0.5", "rates.Rt1 = 1.5");
        let err = ExperimentConfig::parse(&text, "bad.cfg").unwrap_err();
        assert_eq!(err.line, Some(4));
        let msg = err.to_string();
        assert!(msg.starts_with("bad.cfg:4:"), "{msg}");
        assert!(msg.contains("0 <= Rt1 <= R"), "{msg}");
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}colour = blue\n"), "x").unwrap_err();
        assert!(err.message.contains("unknown key 'colour'"));
        assert_eq!(err.line, Some(11));
        let err = ExperimentConfig::parse(&format!("{MINIMAL}seed = 3\n"), "x").unwrap_err();
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn stop_rule_combinations() {
        let both = MINIMAL.replace("stop.trials = 1000", "stop.trials = 1000\nstop.rel_stderr = 0.1");
        assert!(ExperimentConfig::parse(&both, "x").is_err());
        let adaptive = MINIMAL.replace("stop.trials = 1000", "stop.rel_stderr = 0.1\nstop.max_trials = 5000");
        let cfg = ExperimentConfig::parse(&adaptive, "x").unwrap();
        assert_eq!(cfg.stop, StopRule::RelativeStderr { target: 0.1, max_trials: 5000 });
        let bad = MINIMAL.replace("stop.trials = 1000", "stop.rel_stderr = 1.5\nstop.max_trials = 5000");
        assert!(ExperimentConfig::parse(&bad, "x").is_err());
    }

    #[test]
    fn scaling_needs_r() {
        let text = format!("{MINIMAL}rates.law = scaling\n");
        assert!(ExperimentConfig::parse(&text, "x").is_err());
        let text = format!("{MINIMAL}rates.law = scaling\nrates.r = 0.25\n");
        assert_eq!(ExperimentConfig::parse(&text, "x").unwrap().r, 0.25);
        let text = format!("{MINIMAL}rates.r = 0.25\n");
        assert!(ExperimentConfig::parse(&text, "x").is_err());
    }

    #[test]
    fn bad_values_are_line_anchored() {
        let err = ExperimentConfig::parse(&MINIMAL.replace("network.relays = 2", "network.relays = two"), "c").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = ExperimentConfig::parse(&MINIMAL.replace("active_pnc", "carrier_pigeon"), "c").unwrap_err();
        assert_eq!(err.line, Some(1));
        let err = ExperimentConfig::parse("just text\n", "c").unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn snr_grid_defaults() {
        let text = MINIMAL.replace("snr.start_db = 10\nsnr.stop_db = 20\nsnr.step_db = 5\n", "");
        let cfg = ExperimentConfig::parse(&text, "x").unwrap();
        assert_eq!((cfg.start_db, cfg.stop_db, cfg.step_db), (10.0, 30.0, 1.0));
        assert_eq!(cfg.sweep_spec(Strategy::ActivePnc).grid.len(), 21);
    }
}
