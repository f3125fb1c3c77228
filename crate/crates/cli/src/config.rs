//! Effective run configuration.
//!
//! Every run resolves its parameters through a three-level precedence:
//! explicit command-line flags override entries from an optional config
//! file (`--config path`, one `key=value` per line, `#` comments), which
//! override the built-in defaults.  The resolved settings are echoed into
//! every output artifact so a result file is self-describing, and
//! `--show-config` prints them without running anything.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use qdchan_core::states::ChannelKind;
use serde_json::{json, Map, Value};

use crate::CliError;

/// Output serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Comma-separated rows under a `#`-prefixed JSON header line.
    Csv,
    /// A single JSON document `{tool, version, command, config, records}`.
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Axis swept by `discord-sweep` and `qd-vs-variance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    /// Sweep the transmittance η at fixed σ.
    Eta,
    /// Sweep the phase-noise width σ at fixed η.
    Sigma,
    /// Sweep the seed photon number n₀ at fixed (η, σ).
    N0,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Eta => "eta",
            SweepAxis::Sigma => "sigma",
            SweepAxis::N0 => "n0",
        })
    }
}

/// An inclusive, uniformly spaced parameter grid parsed from
/// `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    /// Parse `start:stop:count`.
    ///
    /// # Errors
    /// Rejects malformed syntax, non-finite bounds, a zero or oversized
    /// count, and `count == 1` with distinct endpoints (ambiguous).
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(CliError::invalid(format!(
                "grid must be start:stop:count, got `{text}`"
            )));
        };
        let start: f64 = start
            .parse()
            .map_err(|_| CliError::invalid(format!("grid start `{start}` is not a number")))?;
        let stop: f64 = stop
            .parse()
            .map_err(|_| CliError::invalid(format!("grid stop `{stop}` is not a number")))?;
        let count: usize = count
            .parse()
            .map_err(|_| CliError::invalid(format!("grid count `{count}` is not an integer")))?;
        if !start.is_finite() || !stop.is_finite() {
            return Err(CliError::invalid("grid bounds must be finite"));
        }
        if count == 0 || count > 100_000 {
            return Err(CliError::invalid(format!(
                "grid count must be in 1..=100000, got {count}"
            )));
        }
        if count == 1 && start != stop {
            return Err(CliError::invalid(
                "a single-point grid needs start == stop",
            ));
        }
        Ok(Self { start, stop, count })
    }

    /// The grid points, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| self.start + step * k as f64)
            .collect()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

/// Common flags accepted by every subcommand; `None` means "not given on
/// the command line", letting config-file values through.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// Channel kind: photon-depleted (dpc) or photon-added (pac).
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Seed coherent amplitude α₀ (≥ 0).
    #[arg(long, conflicts_with = "n0")]
    pub alpha0: Option<f64>,
    /// Seed photon number n₀ = α₀² (≥ 0); alternative to --alpha0.
    #[arg(long)]
    pub n0: Option<f64>,
    /// Beamsplitter transmittance η ∈ [0, 1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Phase-noise standard deviation σ ≥ 0 (radians).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Homodyne phase λ_A (radians).
    #[arg(long)]
    pub lambda_a: Option<f64>,
    /// Homodyne phase λ_B (radians).
    #[arg(long)]
    pub lambda_b: Option<f64>,
    /// Swept-axis grid as start:stop:count (inclusive endpoints).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweep points (0 = logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Emit rows whose convergence certificate failed instead of aborting.
    #[arg(long)]
    pub allow_unconverged: bool,
    /// Config file with key=value lines (lowest-precedence source).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub show_config: bool,
}

/// Clap-facing mirror of [`ChannelKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Dpc,
    Pac,
}

impl From<KindArg> for ChannelKind {
    fn from(arg: KindArg) -> Self {
        match arg {
            KindArg::Dpc => ChannelKind::Dpc,
            KindArg::Pac => ChannelKind::Pac,
        }
    }
}

/// Fully resolved run parameters after precedence merging.
#[derive(Debug, Clone)]
pub struct Settings {
    pub kind: ChannelKind,
    pub alpha0: f64,
    pub eta: f64,
    pub sigma: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// Swept-axis grid; `None` keeps the per-command default.
    pub grid: Option<GridSpec>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Worker threads (0 = logical cores).
    pub jobs: usize,
    pub allow_unconverged: bool,
    /// λ_A × λ_B map resolution (mid-map only).
    pub resolution: usize,
    /// Swept axis (discord-sweep, qd-vs-variance).
    pub sweep: SweepAxis,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            kind: ChannelKind::Dpc,
            alpha0: 1.0,
            eta: 1.0,
            sigma: 0.0,
            lambda_a: 0.0,
            lambda_b: 0.0,
            grid: None,
            out: None,
            format: Format::Csv,
            jobs: 0,
            allow_unconverged: false,
            resolution: 33,
            sweep: SweepAxis::Eta,
        }
    }
}

impl Settings {
    /// Resolve the precedence chain CLI > config file > defaults.
    ///
    /// `resolution` and `sweep` are per-command flags resolved by the
    /// same rule; pass `None` for commands that do not accept them.
    ///
    /// # Errors
    /// Propagates config-file syntax errors and rejects out-of-range or
    /// contradictory parameters (exit code 2 territory).
    pub fn resolve(
        args: &CommonArgs,
        resolution: Option<usize>,
        sweep: Option<SweepAxis>,
    ) -> Result<Self, CliError> {
        let mut settings = Settings::default();
        let file = match &args.config {
            Some(path) => parse_config_file(path)?,
            None => BTreeMap::new(),
        };

        // Config-file layer.
        if file.contains_key("alpha0") && file.contains_key("n0") {
            return Err(CliError::invalid(
                "config file sets both alpha0 and n0; they are mutually exclusive",
            ));
        }
        for (key, value) in &file {
            settings.apply(key, value)?;
        }

        // Command-line layer (only flags actually given).
        if let Some(kind) = args.kind {
            settings.kind = kind.into();
        }
        if let Some(alpha0) = args.alpha0 {
            settings.alpha0 = alpha0;
        }
        if let Some(n0) = args.n0 {
            if n0 < 0.0 {
                return Err(CliError::invalid(format!("n0 must be ≥ 0, got {n0}")));
            }
            settings.alpha0 = n0.sqrt();
        }
        if let Some(eta) = args.eta {
            settings.eta = eta;
        }
        if let Some(sigma) = args.sigma {
            settings.sigma = sigma;
        }
        if let Some(lambda_a) = args.lambda_a {
            settings.lambda_a = lambda_a;
        }
        if let Some(lambda_b) = args.lambda_b {
            settings.lambda_b = lambda_b;
        }
        if let Some(grid) = &args.grid {
            settings.grid = Some(GridSpec::parse(grid)?);
        }
        if let Some(out) = &args.out {
            settings.out = Some(out.clone());
        }
        if let Some(format) = args.format {
            settings.format = format;
        }
        if let Some(jobs) = args.jobs {
            settings.jobs = jobs;
        }
        if args.allow_unconverged {
            settings.allow_unconverged = true;
        }
        if let Some(resolution) = resolution {
            settings.resolution = resolution;
        }
        if let Some(sweep) = sweep {
            settings.sweep = sweep;
        }

        settings.validate()?;
        Ok(settings)
    }

    /// Apply one config-file entry keyed by its long flag name.
    fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad_num =
            |key: &str, value: &str| CliError::invalid(format!("config {key}={value}: not a number"));
        match key {
            "kind" => {
                self.kind = match value {
                    "dpc" => ChannelKind::Dpc,
                    "pac" => ChannelKind::Pac,
                    other => {
                        return Err(CliError::invalid(format!(
                            "config kind={other}: expected dpc or pac"
                        )))
                    }
                };
            }
            "alpha0" => self.alpha0 = value.parse().map_err(|_| bad_num(key, value))?,
            "n0" => {
                let n0: f64 = value.parse().map_err(|_| bad_num(key, value))?;
                if n0 < 0.0 {
                    return Err(CliError::invalid(format!("config n0={n0}: must be ≥ 0")));
                }
                self.alpha0 = n0.sqrt();
            }
            "eta" => self.eta = value.parse().map_err(|_| bad_num(key, value))?,
            "sigma" => self.sigma = value.parse().map_err(|_| bad_num(key, value))?,
            "lambda-a" => self.lambda_a = value.parse().map_err(|_| bad_num(key, value))?,
            "lambda-b" => self.lambda_b = value.parse().map_err(|_| bad_num(key, value))?,
            "grid" => self.grid = Some(GridSpec::parse(value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => {
                        return Err(CliError::invalid(format!(
                            "config format={other}: expected csv or json"
                        )))
                    }
                };
            }
            "jobs" => {
                self.jobs = value
                    .parse()
                    .map_err(|_| CliError::invalid(format!("config jobs={value}: not an integer")))?;
            }
            "allow-unconverged" => {
                self.allow_unconverged = value.parse().map_err(|_| {
                    CliError::invalid(format!("config allow-unconverged={value}: expected true/false"))
                })?;
            }
            "resolution" => {
                self.resolution = value.parse().map_err(|_| {
                    CliError::invalid(format!("config resolution={value}: not an integer"))
                })?;
            }
            "sweep" => {
                self.sweep = match value {
                    "eta" => SweepAxis::Eta,
                    "sigma" => SweepAxis::Sigma,
                    "n0" => SweepAxis::N0,
                    other => {
                        return Err(CliError::invalid(format!(
                            "config sweep={other}: expected eta, sigma, or n0"
                        )))
                    }
                };
            }
            other => {
                return Err(CliError::invalid(format!("config: unknown key `{other}`")));
            }
        }
        Ok(())
    }

    /// Range checks shared by every command.
    fn validate(&self) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(CliError::invalid(format!(
                "eta must be in [0, 1], got {}",
                self.eta
            )));
        }
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(CliError::invalid(format!(
                "sigma must be a finite nonnegative number, got {}",
                self.sigma
            )));
        }
        if self.alpha0 < 0.0 || !self.alpha0.is_finite() {
            return Err(CliError::invalid(format!(
                "alpha0 must be a finite nonnegative number, got {}",
                self.alpha0
            )));
        }
        if !self.lambda_a.is_finite() || !self.lambda_b.is_finite() {
            return Err(CliError::invalid("detector phases must be finite"));
        }
        if !(2..=1024).contains(&self.resolution) {
            return Err(CliError::invalid(format!(
                "resolution must be in 2..=1024, got {}",
                self.resolution
            )));
        }
        if self.jobs > 512 {
            return Err(CliError::invalid(format!(
                "jobs must be ≤ 512, got {}",
                self.jobs
            )));
        }
        Ok(())
    }

    /// The effective configuration as a JSON object (alphabetical keys,
    /// byte-stable across runs).
    pub fn as_json(&self, command: &str) -> Value {
        let mut map = Map::new();
        map.insert("allow_unconverged".into(), json!(self.allow_unconverged));
        map.insert("alpha0".into(), json!(self.alpha0));
        map.insert("eta".into(), json!(self.eta));
        map.insert("format".into(), json!(self.format.to_string()));
        map.insert(
            "grid".into(),
            match &self.grid {
                Some(grid) => json!(grid.to_string()),
                None => json!("auto"),
            },
        );
        map.insert("jobs".into(), json!(self.jobs));
        map.insert(
            "kind".into(),
            json!(match self.kind {
                ChannelKind::Dpc => "dpc",
                ChannelKind::Pac => "pac",
            }),
        );
        map.insert("lambda_a".into(), json!(self.lambda_a));
        map.insert("lambda_b".into(), json!(self.lambda_b));
        map.insert("n0".into(), json!(self.alpha0 * self.alpha0));
        if command == "mid-map" {
            map.insert("resolution".into(), json!(self.resolution));
        }
        map.insert("sigma".into(), json!(self.sigma));
        if matches!(command, "discord-sweep" | "qd-vs-variance") {
            map.insert("sweep".into(), json!(self.sweep.to_string()));
        }
        Value::Object(map)
    }

    /// Print the effective configuration as sorted `key=value` lines.
    pub fn print(&self, command: &str) {
        let Value::Object(map) = self.as_json(command) else {
            unreachable!("as_json always builds an object");
        };
        println!("command={command}");
        for (key, value) in &map {
            match value {
                Value::String(s) => println!("{key}={s}"),
                other => println!("{key}={other}"),
            }
        }
    }
}

/// Read `key=value` lines; `#` starts a comment, blank lines ignored.
fn parse_config_file(path: &std::path::Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::invalid(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut map = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::invalid(format!(
                "config {} line {}: expected key=value, got `{raw}`",
                path.display(),
                index + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}
