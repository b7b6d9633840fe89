//! Effective configuration: flags over config-file keys over profile defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use halfspace_core::dist::DistributionKind;
use halfspace_core::profile::parse_kv;
use halfspace_core::{AttackKind, AttackStrategy, ConstantsProfile, DistributionSpec, LearnerConfig, Mode};

use crate::args::{CommonArgs, LearnerArgs};

/// Bad flags, config keys or values. Maps to exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Keys read from a config file. Every key must be consumed by the command.
#[derive(Debug, Default)]
pub struct FileLayer {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl FileLayer {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileLayer::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, Some(path.to_path_buf()))
    }

    pub fn parse(text: &str, path: Option<PathBuf>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, v) in parse_kv(text)? {
            let k = if k == "epsilon" { "eps".to_string() } else { k };
            values.insert(k, v);
        }
        Ok(FileLayer { path, values })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    pub fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| usage(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn take_list<T: FromStr>(&mut self, key: &str, sep: char) -> Result<Vec<T>> {
        match self.take(key) {
            None => Ok(Vec::new()),
            Some(v) => parse_list(&v, sep).map_err(|e| usage(format!("config key `{key}`: {e}"))),
        }
    }

    fn take_profile_pairs(&mut self) -> Vec<(String, String)> {
        let keys: Vec<String> = self
            .values
            .keys()
            .filter(|k| ConstantsProfile::is_key(k))
            .cloned()
            .collect();
        keys.into_iter()
            .map(|k| {
                let v = self.values.remove(&k).unwrap_or_default();
                (k, v)
            })
            .collect()
    }

    /// Fails on any key the command did not read.
    pub fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            None => Ok(()),
            Some(k) => Err(usage(format!("unknown config key `{k}`"))),
        }
    }
}

pub fn parse_list<T: FromStr>(text: &str, sep: char) -> std::result::Result<Vec<T>, String> {
    text.split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("cannot parse `{s}`")))
        .collect()
}

fn parse_core<T>(what: &str, text: &str) -> Result<T>
where
    T: FromStr<Err = halfspace_core::Error>,
{
    text.parse().map_err(|e| usage(format!("{what}: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }

    pub fn token(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Svg => "svg",
            Format::Both => "both",
        }
    }
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            "both" => Ok(Format::Both),
            other => Err(usage(format!("unknown format `{other}` (csv, svg, both)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
}

impl Output {
    pub fn resolve(common: &CommonArgs, file: &mut FileLayer) -> Result<Self> {
        let file_dir = file.take("out");
        let file_format = file.take("format");
        let dir = common
            .out
            .clone()
            .or(file_dir.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let format = match common.format.clone().or(file_format) {
            Some(f) => f.parse()?,
            None => Format::Csv,
        };
        Ok(Output { dir, format })
    }

    pub fn echo(&self, lines: &mut Vec<(String, String)>) {
        lines.push(("out".into(), self.dir.display().to_string()));
        lines.push(("format".into(), self.format.token().into()));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerSettings {
    pub mode: Mode,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
    pub dist: DistributionKind,
    pub strategy: AttackStrategy,
    pub seed: u64,
    pub diagnostics: bool,
    pub profile: ConstantsProfile,
}

fn pick<T: FromStr>(flag: Option<T>, file: &mut FileLayer, key: &str, default: T) -> Result<T> {
    let from_file = file.take_parsed(key)?;
    Ok(flag.or(from_file).unwrap_or(default))
}

impl LearnerSettings {
    pub fn resolve(args: &LearnerArgs, file: &mut FileLayer) -> Result<Self> {
        let mode = match args.mode.clone().or(file.take("mode")) {
            Some(m) => parse_core("mode", &m)?,
            None => Mode::Malicious,
        };
        let dist = match args.dist.clone().or(file.take("dist")) {
            Some(s) => parse_core("dist", &s)?,
            None => DistributionKind::StandardGaussian,
        };
        let strategy = match args.strategy.clone().or(file.take("strategy")) {
            Some(s) => parse_core("strategy", &s)?,
            None => AttackStrategy::new(AttackKind::BandFlip),
        };
        let d = pick(args.d, file, "d", 10)?;
        let epsilon = pick(args.eps, file, "eps", 0.1)?;
        let delta = pick(args.delta, file, "delta", 0.1)?;
        let eta = pick(args.eta, file, "eta", 0.0)?;
        let seed = pick(args.seed, file, "seed", 0)?;
        let diagnostics = args.diagnostics || file.take_parsed("diagnostics")?.unwrap_or(false);
        let profile = resolve_profile(args, file)?;
        Ok(LearnerSettings {
            mode,
            d,
            epsilon,
            delta,
            eta,
            dist,
            strategy,
            seed,
            diagnostics,
            profile,
        })
    }

    pub fn learner_config(&self) -> halfspace_core::Result<LearnerConfig> {
        let spec = DistributionSpec::new(self.dist, self.d)?;
        Ok(LearnerConfig::new(
            self.epsilon,
            self.delta,
            spec,
            self.profile.clone(),
            self.mode,
            self.seed,
        )
        .with_diagnostics(self.diagnostics))
    }

    pub fn echo(&self, lines: &mut Vec<(String, String)>) {
        let mut push = |k: &str, v: String| lines.push((k.to_string(), v));
        push("mode", self.mode.to_string());
        push("d", self.d.to_string());
        push("eps", self.epsilon.to_string());
        push("delta", self.delta.to_string());
        push("eta", self.eta.to_string());
        push("dist", self.dist.token().to_string());
        push("strategy", self.strategy.to_string());
        push("seed", self.seed.to_string());
        push("diagnostics", self.diagnostics.to_string());
        echo_profile(&self.profile, lines);
    }
}

/// Base profile by name, then file constants, then `--set` pairs, applied
/// in one pass so that derived constants see every explicit key.
fn resolve_profile(args: &LearnerArgs, file: &mut FileLayer) -> Result<ConstantsProfile> {
    let name = match args.profile.clone().or(file.take("profile")) {
        Some(n) => n,
        None => "practical".to_string(),
    };
    let base = ConstantsProfile::by_name(&name).map_err(|e| usage(e.to_string()))?;
    let mut pairs = file.take_profile_pairs();
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--set `{item}`: expected KEY=VALUE")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let profile = base
        .with_overrides(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .map_err(|e| usage(e.to_string()))?;
    Ok(profile)
}

pub fn echo_profile(profile: &ConstantsProfile, lines: &mut Vec<(String, String)>) {
    if let Ok(pairs) = parse_kv(&profile.to_kv_string()) {
        lines.extend(pairs);
    }
}

pub fn render_echo(lines: &[(String, String)]) -> String {
    let mut out = String::from("# effective configuration\n");
    for (k, v) in lines {
        out.push_str(k);
        out.push('=');
        out.push_str(v);
        out.push('\n');
    }
    out
}
