//! Run configuration: flags over config file over defaults.
//!
//! The config file is line oriented, `key = value` with the flag names as
//! keys. Blank lines and lines starting with `#` are ignored. The resolved
//! configuration is written back in the same syntax as the output header.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Plane,
    Strip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Delimited table with `# key = value` header lines.
    Table,
    /// One JSON object per line, the first holding the configuration.
    Records,
}

macro_rules! text_enum {
    ($t:ty { $($v:ident => $s:literal),* }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),* })
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s { $($s => Ok(Self::$v),)* _ => Err(format!("unknown value {s:?}")) }
            }
        }
    };
}
text_enum!(GeometryKind { Plane => "plane", Strip => "strip" });
text_enum!(OutputFormat { Table => "table", Records => "records" });

/// Options shared by every subcommand. All are optional so that the config
/// file and the defaults can fill the gaps.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Probability that a point carries two marks.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub intensity: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Step budget for hitting times.
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryKind>,
    /// Strip width.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Relative area tolerance of the explorer.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Steps between checkpoints of long 1D runs.
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub p: f64,
    pub intensity: f64,
    pub steps: u64,
    pub horizon: u64,
    pub seed: u64,
    pub replicas: u64,
    pub geometry: GeometryKind,
    pub eps: f64,
    pub tolerance: f64,
    pub checkpoint_every: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

pub const KEYS: [&str; 12] = [
    "p",
    "intensity",
    "steps",
    "horizon",
    "seed",
    "replicas",
    "geometry",
    "eps",
    "tolerance",
    "checkpoint_every",
    "out",
    "format",
];

impl RunConfig {
    pub fn defaults(command: &str) -> Self {
        Self {
            command: command.to_string(),
            p: 0.5,
            intensity: 1.0,
            steps: 10_000,
            horizon: 100_000,
            seed: 42,
            replicas: 1_000,
            geometry: GeometryKind::Plane,
            eps: 0.1,
            tolerance: 1e-6,
            checkpoint_every: 10_000_000,
            out: None,
            format: OutputFormat::Table,
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
            value.trim().parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "p" => self.p = parse(key, value)?,
            "intensity" => self.intensity = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "replicas" => self.replicas = parse(key, value)?,
            "geometry" => self.geometry = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "tolerance" => self.tolerance = parse(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "format" => self.format = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        match key {
            // `{:?}` on f64 is the shortest text that parses back exactly
            "p" => format!("{:?}", self.p),
            "intensity" => format!("{:?}", self.intensity),
            "steps" => self.steps.to_string(),
            "horizon" => self.horizon.to_string(),
            "seed" => self.seed.to_string(),
            "replicas" => self.replicas.to_string(),
            "geometry" => self.geometry.to_string(),
            "eps" => format!("{:?}", self.eps),
            "tolerance" => format!("{:?}", self.tolerance),
            "checkpoint_every" => self.checkpoint_every.to_string(),
            "out" => self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "format" => self.format.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// `(key, value)` pairs in a fixed order, starting with the command.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![("command".to_string(), self.command.clone())];
        h.extend(KEYS.iter().map(|k| (k.to_string(), self.get(k))));
        h
    }

    #[cfg(test)]
    pub fn to_file_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k))).collect()
    }

    pub fn apply_file_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = o.$f.clone() { self.$f = v; })* };
        }
        take!(p, intensity, steps, horizon, seed, replicas, geometry, eps, tolerance, checkpoint_every, format);
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1], got {}", self.p));
        }
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return bad(format!("intensity must be positive, got {}", self.intensity));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be non-negative, got {}", self.eps));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return bad(format!("tolerance must lie in (0, 1), got {}", self.tolerance));
        }
        for (name, v) in [
            ("steps", self.steps),
            ("horizon", self.horizon),
            ("replicas", self.replicas),
            ("checkpoint_every", self.checkpoint_every),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// Resolves `preset` defaults, then the config file, then the flags.
    pub fn resolve(preset: RunConfig, o: &Overrides) -> Result<RunConfig, CliError> {
        let mut cfg = preset;
        if let Some(path) = &o.config {
            cfg.apply_file_text(&read_text(path)?)?;
        }
        cfg.apply_overrides(o);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
