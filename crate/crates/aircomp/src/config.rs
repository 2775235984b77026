//! Experiment files: flat `key = value` sections, one per experiment.
//!
//! ```text
//! # keys before the first section apply to every experiment
//! seed = 7
//! out = results.csv
//!
//! [proposed-G]
//! power = geometric
//! varpi = 2
//! snr_db = -10, -5, 0, 5
//! ```
//!
//! A file without sections describes a single experiment named `default`.
//! An empty file yields that experiment with the built-in defaults
//! (`K = 20`, `b = L = 8`).

use std::fmt::Write as _;
use std::path::PathBuf;

use aircomp_core::channel::mimo::MimoParams;
use aircomp_core::sim::{PowerMode, Scheme, SimConfig, Source, TapShape};
use aircomp_core::transceiver::Detector;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

const DEFAULT_NAME: &str = "default";
const DEFAULT_VARPI: f64 = 2.0;

const EXPERIMENT_KEYS: &[&str] = &[
    "devices",
    "bits",
    "subcarriers",
    "taps",
    "tap_profile",
    "tap_decay",
    "source",
    "s_max",
    "source_std",
    "scheme",
    "power",
    "varpi",
    "detector",
    "snr_db",
    "trials",
    "csi_error_radius",
    "p_max",
    "seed",
    "mimo",
    "analog_threshold",
    "reallocate",
    "allow_silence",
];

const GLOBAL_ONLY_KEYS: &[&str] = &["out", "verbosity"];

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiments: Vec<Experiment>,
    pub out: Option<PathBuf>,
    pub verbosity: u8,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            experiments: vec![Experiment {
                name: DEFAULT_NAME.to_owned(),
                config: SimConfig::default(),
            }],
            out: None,
            verbosity: 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn find(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn split_sections(text: &str) -> Result<(Section, Vec<Section>), ConfigError> {
    let mut global = Section {
        name: String::new(),
        line: 0,
        entries: Vec::new(),
    };
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(line, "section header is missing `]`"))?
                .trim();
            if name.is_empty() || name.contains(char::is_whitespace) || name.contains(',') {
                return Err(ConfigError::new(
                    line,
                    format!("invalid experiment name `{name}`"),
                ));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(ConfigError::new(
                    line,
                    format!("duplicate experiment `{name}`"),
                ));
            }
            sections.push(Section {
                name: name.to_owned(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, "expected `key = value`"))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_owned();
        let in_section = !sections.is_empty();
        let known = EXPERIMENT_KEYS.contains(&key.as_str())
            || (!in_section && GLOBAL_ONLY_KEYS.contains(&key.as_str()));
        if !known {
            let hint = if in_section && GLOBAL_ONLY_KEYS.contains(&key.as_str()) {
                " (only allowed before the first section)"
            } else {
                ""
            };
            return Err(ConfigError::new(line, format!("unknown key `{key}`{hint}")));
        }
        let target = sections.last_mut().unwrap_or(&mut global);
        if target.find(&key).is_some() {
            return Err(ConfigError::new(line, format!("duplicate key `{key}`")));
        }
        target.entries.push(Entry { key, value, line });
    }
    Ok((global, sections))
}

/// Section entries layered over the global ones.
struct Scope<'a> {
    section: &'a Section,
    global: &'a Section,
}

impl Scope<'_> {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.section.find(key).or_else(|| self.global.find(key))
    }

    fn line_of(&self, key: &str) -> usize {
        self.get(key).map_or(self.section.line, |e| e.line)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|_| {
                ConfigError::new(e.line, format!("invalid value `{}` for `{key}`", e.value))
            }),
        }
    }

    fn choice<'v>(
        &'v self,
        key: &str,
        options: &[&str],
        default: &'v str,
    ) -> Result<&'v str, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(e) if options.contains(&e.value.as_str()) => Ok(e.value.as_str()),
            Some(e) => Err(ConfigError::new(
                e.line,
                format!(
                    "`{key}` must be one of {}, got `{}`",
                    options.join(", "),
                    e.value
                ),
            )),
        }
    }
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::new(
            line,
            format!("`{key}` must be true or false, got `{value}`"),
        )),
    }
}

fn parse_grid(entry: &Entry) -> Result<Vec<f64>, ConfigError> {
    let values = entry
        .value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| ConfigError::new(entry.line, format!("invalid SNR value `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(ConfigError::new(entry.line, "SNR grid is empty"));
    }
    Ok(values)
}

fn parse_mimo(entry: &Entry) -> Result<Option<MimoParams>, ConfigError> {
    if entry.value == "none" {
        return Ok(None);
    }
    let bad = || {
        ConfigError::new(
            entry.line,
            format!(
                "`mimo` must be `none` or `<tx>x<rx>`, got `{}`",
                entry.value
            ),
        )
    };
    let (tx, rx) = entry.value.split_once('x').ok_or_else(bad)?;
    let tx = tx.trim().parse().map_err(|_| bad())?;
    let rx = rx.trim().parse().map_err(|_| bad())?;
    MimoParams::new(tx, rx)
        .map(Some)
        .map_err(|e| ConfigError::new(entry.line, e.to_string()))
}

fn build_config(scope: &Scope<'_>) -> Result<SimConfig, ConfigError> {
    let d = SimConfig::default();
    let s_max = scope.parse("s_max", d.source.s_max())?;
    let source = match scope.choice("source", &["uniform", "gaussian"], "uniform")? {
        "gaussian" => Source::Gaussian {
            std: scope.parse("source_std", s_max / 3.0)?,
            s_max,
        },
        _ => {
            if let Some(e) = scope.get("source_std") {
                return Err(ConfigError::new(
                    e.line,
                    "`source_std` only applies to gaussian sources",
                ));
            }
            Source::Uniform { s_max }
        }
    };
    let power = match scope.choice("power", &["uniform", "geometric"], "uniform")? {
        "geometric" => PowerMode::Geometric {
            varpi: scope.parse("varpi", DEFAULT_VARPI)?,
        },
        _ => match scope.get("varpi") {
            Some(e) => {
                return Err(ConfigError::new(
                    e.line,
                    "`varpi` needs `power = geometric`",
                ));
            }
            None => PowerMode::Uniform,
        },
    };
    let tap_shape = match scope.choice("tap_profile", &["uniform", "exponential"], "uniform")? {
        "exponential" => TapShape::Exponential {
            decay: scope.parse("tap_decay", 1.0)?,
        },
        _ => TapShape::Uniform,
    };
    let scheme = match scope.choice("scheme", &["proposed", "analog", "binary_ml"], "proposed")? {
        "analog" => Scheme::Analog,
        "binary_ml" => Scheme::BinaryMl,
        _ => Scheme::Proposed,
    };
    let detector = match scope.choice("detector", &["lmmse", "lmmse_rounded", "ml"], "lmmse")? {
        "ml" => Detector::Ml,
        "lmmse_rounded" => Detector::LmmseRounded,
        _ => Detector::Lmmse,
    };
    let bits = scope.parse("bits", d.bits)?;
    let config = SimConfig {
        devices: scope.parse("devices", d.devices)?,
        bits,
        // L follows b unless set explicitly.
        subcarriers: scope.parse("subcarriers", bits as usize)?,
        taps: scope.parse("taps", d.taps)?,
        tap_shape,
        source,
        scheme,
        power,
        detector,
        snr_db: scope
            .get("snr_db")
            .map(parse_grid)
            .transpose()?
            .unwrap_or(d.snr_db),
        trials: scope.parse("trials", d.trials)?,
        csi_error_radius: scope.parse("csi_error_radius", d.csi_error_radius)?,
        p_max: scope.parse("p_max", d.p_max)?,
        seed: scope.parse("seed", d.seed)?,
        mimo: scope.get("mimo").map(parse_mimo).transpose()?.flatten(),
        analog_threshold: scope.parse("analog_threshold", d.analog_threshold)?,
        reallocate: scope
            .get("reallocate")
            .map(|e| parse_bool(e.line, "reallocate", &e.value))
            .transpose()?
            .unwrap_or(d.reallocate),
        allow_silence: scope
            .get("allow_silence")
            .map(|e| parse_bool(e.line, "allow_silence", &e.value))
            .transpose()?
            .unwrap_or(d.allow_silence),
    };
    config.validate().map_err(|err| {
        let key = match &err {
            aircomp_core::Error::InvalidParameter { name, .. } => match *name {
                "taps" | "decay" => "taps",
                "eps" | "bits" => "bits",
                other => other,
            },
            _ => "",
        };
        ConfigError::new(scope.line_of(key), err.to_string())
    })?;
    Ok(config)
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let (global, mut sections) = split_sections(text)?;
        let out = global.find("out").map(|e| PathBuf::from(&e.value));
        let verbosity = match global.find("verbosity") {
            Some(e) => e.value.parse().map_err(|_| {
                ConfigError::new(e.line, format!("invalid verbosity `{}`", e.value))
            })?,
            None => 1,
        };
        if sections.is_empty() {
            sections.push(Section {
                name: DEFAULT_NAME.to_owned(),
                line: 1,
                entries: Vec::new(),
            });
        }
        let experiments = sections
            .iter()
            .map(|section| {
                let scope = Scope {
                    section,
                    global: &global,
                };
                Ok(Experiment {
                    name: section.name.clone(),
                    config: build_config(&scope)?,
                })
            })
            .collect::<Result<_, ConfigError>>()?;
        Ok(Self {
            experiments,
            out,
            verbosity,
        })
    }

    /// Fully explicit text form; parses back to an equal spec.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        if let Some(out) = &self.out {
            writeln!(s, "out = {}", out.display()).unwrap();
        }
        writeln!(s, "verbosity = {}", self.verbosity).unwrap();
        for e in &self.experiments {
            writeln!(s, "\n[{}]", e.name).unwrap();
            s.push_str(&config_body(&e.config));
        }
        s
    }

    /// Applies command-line overrides to every experiment.
    pub fn override_with(&mut self, seed: Option<u64>, trials: Option<u64>) {
        for e in &mut self.experiments {
            if let Some(seed) = seed {
                e.config.seed = seed;
            }
            if let Some(trials) = trials {
                e.config.trials = trials;
            }
        }
    }
}

/// `key = value` lines for one experiment.
pub fn config_body(c: &SimConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
    kv("scheme", c.scheme.name().to_owned());
    kv("devices", c.devices.to_string());
    kv("bits", c.bits.to_string());
    kv("subcarriers", c.subcarriers.to_string());
    kv("taps", c.taps.to_string());
    match c.tap_shape {
        TapShape::Uniform => kv("tap_profile", "uniform".into()),
        TapShape::Exponential { decay } => {
            kv("tap_profile", "exponential".into());
            kv("tap_decay", decay.to_string());
        }
    }
    match c.source {
        Source::Uniform { s_max } => {
            kv("source", "uniform".into());
            kv("s_max", s_max.to_string());
        }
        Source::Gaussian { std, s_max } => {
            kv("source", "gaussian".into());
            kv("s_max", s_max.to_string());
            kv("source_std", std.to_string());
        }
    }
    match c.power {
        PowerMode::Uniform => kv("power", "uniform".into()),
        PowerMode::Geometric { varpi } => {
            kv("power", "geometric".into());
            kv("varpi", varpi.to_string());
        }
    }
    kv(
        "detector",
        match c.detector {
            Detector::Lmmse => "lmmse",
            Detector::LmmseRounded => "lmmse_rounded",
            Detector::Ml => "ml",
        }
        .into(),
    );
    kv(
        "snr_db",
        c.snr_db
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(", "),
    );
    kv("trials", c.trials.to_string());
    kv("csi_error_radius", c.csi_error_radius.to_string());
    kv("p_max", c.p_max.to_string());
    kv("seed", c.seed.to_string());
    kv(
        "mimo",
        c.mimo
            .map_or("none".into(), |m| format!("{}x{}", m.tx, m.rx)),
    );
    kv("analog_threshold", c.analog_threshold.to_string());
    kv("reallocate", c.reallocate.to_string());
    kv("allow_silence", c.allow_silence.to_string());
    s
}
