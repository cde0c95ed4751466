//! Key-value run configuration: parsing, validation and flag overrides.
//!
//! Grammar: one `key = value` per line, `#` starts a comment, keys are
//! case-sensitive. Unknown and duplicate keys are errors; every diagnostic
//! names the offending key and line.
//!
//! ```text
//! # channel
//! model = lognormal        # constant | lognormal | gammagamma
//! si = 0.5                 # scintillation index (lognormal/gammagamma)
//! # h = 1.0                # gain of the constant model
//! # alpha = 4.0            # gammagamma shapes, alternative to si
//! # beta = 1.9
//! n_b = 1.0
//! l_c = 10000
//!
//! # sweep grid: exactly one of n_s / n_s_db
//! n_s = 10, 20, 40, 80
//! # n_s_db = 10, 13, 16, 19     # n_s = n_b · 10^(db/10)
//!
//! receivers = genie, msd:2, trellis:8, trellis
//! lm = 8                   # memory length for bare `trellis`
//! l = 20                   # ongoing-buffer capacity
//!
//! min_errors = 100
//! max_bits = 100000000
//! seed = 1
//! shards = 1
//! unit_bits = 1048576
//! ```

use std::collections::HashMap;
use std::fmt;

use crate::channel::{ChannelParams, FadingModel};
use crate::sim::{ReceiverSpec, RunSettings, StoppingRule, SweepConfig, DEFAULT_UNIT_BITS};
use crate::trellis::TrellisConfig;

/// Parse/validation failure with the offending key and line when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(
                f,
                "config error: key `{}` (line {}): {}",
                self.key, line, self.message
            ),
            None => write!(f, "config error: key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Command-line values that take precedence over file values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shards: Option<usize>,
    pub lm: Option<usize>,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: FadingModel,
    /// Channel parameters with `n_s` as a placeholder (set per grid point).
    pub base: ChannelParams,
    pub n_s_grid: Vec<f64>,
    pub receivers: Vec<ReceiverSpec>,
    pub stopping: StoppingRule,
    pub run: RunSettings,
}

impl RunConfig {
    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            model: self.model,
            base: self.base,
            n_s_grid: self.n_s_grid.clone(),
            receivers: self.receivers.clone(),
            stopping: self.stopping,
            run: self.run,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "model",
    "h",
    "si",
    "alpha",
    "beta",
    "n_b",
    "l_c",
    "n_s",
    "n_s_db",
    "receivers",
    "lm",
    "l",
    "min_errors",
    "max_bits",
    "seed",
    "shards",
    "unit_bits",
];

struct Entries {
    map: HashMap<String, (usize, String)>,
}

impl Entries {
    fn line_of(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|&(line, _)| line)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line_of(key),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(key, format!("expected {what}, got `{raw}`"))),
        }
    }

    fn parse_or<T: std::str::FromStr>(
        &self,
        key: &str,
        what: &str,
        default: T,
    ) -> Result<T, ConfigError> {
        Ok(self.parse(key, what)?.unwrap_or(default))
    }

    fn parse_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(raw) => {
                let mut out = Vec::new();
                for piece in raw.split(',') {
                    let piece = piece.trim();
                    if piece.is_empty() {
                        return Err(self.err(key, "empty element in list"));
                    }
                    out.push(piece.parse::<f64>().map_err(|_| {
                        self.err(key, format!("expected a number, got `{piece}`"))
                    })?);
                }
                Ok(Some(out))
            }
        }
    }
}

fn scan_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut map: HashMap<String, (usize, String)> = HashMap::new();
    for (ix, raw_line) in text.lines().enumerate() {
        let line_no = ix + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError {
                line: Some(line_no),
                key: line.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError {
                line: Some(line_no),
                key,
                message: "unknown key".into(),
            });
        }
        if let Some((first_line, _)) = map.get(&key) {
            return Err(ConfigError {
                line: Some(line_no),
                key,
                message: format!("duplicate key (first set on line {first_line})"),
            });
        }
        map.insert(key, (line_no, value));
    }
    Ok(Entries { map })
}

fn build_model(entries: &Entries) -> Result<FadingModel, ConfigError> {
    let model = entries
        .raw("model")
        .ok_or_else(|| entries.err("model", "required key missing"))?;
    let reject_keys = |keys: &[&str]| -> Result<(), ConfigError> {
        for &k in keys {
            if entries.raw(k).is_some() {
                return Err(entries.err(k, format!("not applicable to model `{model}`")));
            }
        }
        Ok(())
    };
    match model {
        "constant" => {
            reject_keys(&["si", "alpha", "beta"])?;
            let h: f64 = entries.parse_or("h", "a number", 1.0)?;
            FadingModel::constant(h).map_err(|e| entries.err("h", e.to_string()))
        }
        "lognormal" => {
            reject_keys(&["h", "alpha", "beta"])?;
            let si: f64 = entries
                .parse("si", "a number")?
                .ok_or_else(|| entries.err("si", "required for model lognormal"))?;
            FadingModel::lognormal_from_si(si).map_err(|e| entries.err("si", e.to_string()))
        }
        "gammagamma" => {
            reject_keys(&["h"])?;
            let si: Option<f64> = entries.parse("si", "a number")?;
            let alpha: Option<f64> = entries.parse("alpha", "a number")?;
            let beta: Option<f64> = entries.parse("beta", "a number")?;
            match (si, alpha, beta) {
                (Some(si), None, None) => FadingModel::gamma_gamma_from_si(si)
                    .map_err(|e| entries.err("si", e.to_string())),
                (None, Some(a), Some(b)) => {
                    FadingModel::gamma_gamma(a, b).map_err(|e| entries.err("alpha", e.to_string()))
                }
                (None, None, None) => {
                    Err(entries.err("model", "gammagamma needs `si` or `alpha` + `beta`"))
                }
                (None, _, _) => Err(entries.err("model", "gammagamma needs both alpha and beta")),
                (Some(_), _, _) => {
                    Err(entries.err("si", "give either `si` or `alpha`+`beta`, not both"))
                }
            }
        }
        other => Err(entries.err("model", format!("unknown model `{other}`"))),
    }
}

fn build_receivers(
    entries: &Entries,
    default_lm: usize,
    l: usize,
) -> Result<Vec<ReceiverSpec>, ConfigError> {
    let Some(raw) = entries.raw("receivers") else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for piece in raw.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            return Err(entries.err("receivers", "empty receiver entry"));
        }
        let (name, arg) = match piece.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (piece, None),
        };
        let parse_usize = |what: &str, a: &str| {
            a.parse::<usize>()
                .map_err(|_| entries.err("receivers", format!("{what}: bad integer `{a}`")))
        };
        let spec = match (name, arg) {
            ("genie", None) => ReceiverSpec::Genie,
            ("genie", Some(_)) => {
                return Err(entries.err("receivers", "genie takes no parameter"));
            }
            ("fixed", Some(a)) => {
                let threshold: f64 = a.parse().map_err(|_| {
                    entries.err("receivers", format!("fixed: bad threshold `{a}`"))
                })?;
                ReceiverSpec::Fixed { threshold }
            }
            ("fixed", None) => {
                return Err(entries.err("receivers", "fixed needs a threshold, e.g. fixed:5.5"));
            }
            ("msd", Some(a)) => ReceiverSpec::Msd {
                block_len: parse_usize("msd", a)?,
            },
            ("msd", None) => {
                return Err(entries.err("receivers", "msd needs a block length, e.g. msd:4"));
            }
            ("brute", Some(a)) => ReceiverSpec::Brute {
                block_len: parse_usize("brute", a)?,
            },
            ("brute", None) => {
                return Err(entries.err("receivers", "brute needs a block length, e.g. brute:4"));
            }
            ("trellis", arg) => {
                let l_m = match arg {
                    Some(a) => parse_usize("trellis", a)?,
                    None => default_lm,
                };
                ReceiverSpec::Trellis { l_m, l }
            }
            (other, _) => {
                return Err(entries.err("receivers", format!("unknown receiver `{other}`")));
            }
        };
        out.push(spec);
    }
    Ok(out)
}

/// Parse a config file body and apply flag overrides (flags win).
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let entries = scan_entries(text)?;

    let model = build_model(&entries)?;
    let n_b: f64 = entries.parse_or("n_b", "a number", 1.0)?;
    let l_c: u64 = entries.parse_or("l_c", "a positive integer", 10_000)?;
    let base =
        ChannelParams::new(0.0, n_b, l_c).map_err(|e| match e {
            crate::error::Error::ParamDomain { name, .. } => entries.err(name, e.to_string()),
            other => entries.err("n_b", other.to_string()),
        })?;

    let n_s = entries.parse_f64_list("n_s")?;
    let n_s_db = entries.parse_f64_list("n_s_db")?;
    let n_s_grid = match (n_s, n_s_db) {
        (Some(_), Some(_)) => {
            return Err(entries.err("n_s_db", "give either `n_s` or `n_s_db`, not both"));
        }
        (Some(v), None) => {
            for &x in &v {
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(entries.err("n_s", format!("value {x} must be >= 0")));
                }
            }
            v
        }
        (None, Some(db)) => db.iter().map(|d| n_b * 10f64.powf(d / 10.0)).collect(),
        (None, None) => Vec::new(),
    };

    let lm = overrides
        .lm
        .map(Ok)
        .unwrap_or_else(|| entries.parse_or("lm", "a positive integer", 8))?;
    if lm < 1 {
        return Err(entries.err("lm", "must be >= 1"));
    }
    let l: usize = entries.parse_or("l", "a positive integer", 20)?;
    TrellisConfig::new(lm, l).map_err(|e| entries.err("l", e.to_string()))?;

    let receivers = build_receivers(&entries, lm, l)?;
    for r in &receivers {
        r.validate().map_err(|e| entries.err("receivers", e.to_string()))?;
    }

    let min_errors: u64 = entries.parse_or("min_errors", "an integer", 100)?;
    let max_bits: u64 = entries.parse_or("max_bits", "an integer", 100_000_000)?;
    let stopping = StoppingRule::new(min_errors, max_bits)
        .map_err(|e| entries.err("min_errors", e.to_string()))?;

    let seed = overrides
        .seed
        .map(Ok)
        .unwrap_or_else(|| entries.parse_or("seed", "an integer", 1))?;
    let shards = overrides
        .shards
        .map(Ok)
        .unwrap_or_else(|| entries.parse_or("shards", "a positive integer", 1))?;
    if shards < 1 {
        return Err(entries.err("shards", "must be >= 1"));
    }
    let unit_bits: u64 = entries.parse_or("unit_bits", "a positive integer", DEFAULT_UNIT_BITS)?;
    if unit_bits < 1 {
        return Err(entries.err("unit_bits", "must be >= 1"));
    }

    Ok(RunConfig {
        model,
        base,
        n_s_grid,
        receivers,
        stopping,
        run: RunSettings {
            seed,
            shards,
            unit_bits,
        },
    })
}
