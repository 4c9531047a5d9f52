use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use qgrav::fieldeq::{PhysicalParams, UnitMode};
use qgrav::qmetric::{builtin, parse_wave_file, Convention, WaveFunction};
use qgrav::symexpr::{Binding, DEFAULT_SEED};
use serde_json::{json, Map, Value};

use crate::args::Common;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    fn parse(s: &str) -> Option<Format> {
        match s {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            "text" => Some(Format::Text),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

/// Everything a subcommand needs besides its own flags.
pub struct Context {
    pub wave: Option<WaveFunction>,
    pub source: Value,
    pub convention: Convention,
    pub physical: PhysicalParams,
    /// `--param` values in command-line order.
    pub params: Vec<(String, f64)>,
    pub at: Binding<f64>,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Context {
    pub fn from_common(c: &Common, default_format: Format) -> Result<Context, CliError> {
        let convention: Convention = c
            .convention
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown convention `{}` (unconjugated, conjugated)", c.convention)))?;
        let params = c.params.iter().map(|p| assignment(p, "--param")).collect::<Result<Vec<_>, _>>()?;
        let mut at = Binding::new();
        for a in &c.at {
            let (k, v) = assignment(a, "--at")?;
            at.set(&k, v);
        }
        let seed = match c.seed {
            Some(s) => s,
            None => match std::env::var("QGRAV_SEED") {
                Ok(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("QGRAV_SEED=`{s}` is not an unsigned integer")))?,
                Err(_) => DEFAULT_SEED,
            },
        };
        let (format, out) = match (&c.format, &c.out) {
            (Some(f), out) => (
                Format::parse(f).ok_or_else(|| CliError::Usage(format!("unknown format `{f}` (json, csv, text)")))?,
                out.as_ref().map(PathBuf::from),
            ),
            (None, Some(o)) => match Format::parse(o) {
                Some(f) => (f, None),
                None => (default_format, Some(PathBuf::from(o))),
            },
            (None, None) => (default_format, None),
        };

        let mut physical = PhysicalParams::default();
        let mut c_given = params.iter().any(|(k, _)| k == "c");
        if let Some(path) = &c.config {
            c_given |= apply_config(&mut physical, &read(path)?)?;
        }
        for (k, v) in &params {
            physical.set(k, *v);
        }

        let (wave, source) = match (&c.psi, &c.builtin) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --psi or --builtin, not both".into())),
            (Some(p), None) => (Some(parse_wave_file(&read(p)?)?), json!({ "psi": p.display().to_string() })),
            (None, Some(b)) => (Some(builtin(b)?), json!({ "builtin": b })),
            (None, None) => (None, Value::Null),
        };
        let wave = wave.map(|mut w| {
            for (k, v) in &params {
                if k != w.chart.c_symbol() {
                    w = w.with_param(k, *v);
                }
            }
            if c_given {
                w.chart = w.chart.clone().with_light_speed(physical.c);
            } else {
                physical.c = w.chart.c_value();
            }
            w
        });
        physical.validate().map_err(|e| CliError::Usage(e.to_string()))?;

        Ok(Context {
            wave,
            source,
            convention,
            physical,
            params,
            at,
            seed,
            format,
            out,
        })
    }

    pub fn wave(&self) -> Result<&WaveFunction, CliError> {
        self.wave
            .as_ref()
            .ok_or_else(|| CliError::Usage("one of --psi FILE or --builtin NAME is required".into()))
    }

    /// Parameter values for evaluation: the wave function's, then `--param`.
    pub fn bindings(&self) -> Binding<f64> {
        let mut b = self.wave.as_ref().map(|w| w.bindings()).unwrap_or_default();
        for (k, v) in &self.params {
            b.set(k, *v);
        }
        b
    }

    /// Echo of the resolved inputs for the report.
    pub fn echo(&self, command: &str, extra: Map<String, Value>) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        m.insert("input".into(), self.source.clone());
        m.insert("convention".into(), json!(self.convention.name()));
        m.insert(
            "params".into(),
            Value::Object(self.params.iter().map(|(k, v)| (k.clone(), crate::report::num(*v))).collect()),
        );
        m.insert("at".into(), crate::report::binding(&self.at));
        m.insert("physical".into(), crate::report::physical(&self.physical));
        m.insert("format".into(), json!(self.format.name()));
        m.extend(extra);
        Value::Object(m)
    }
}

fn assignment(s: &str, flag: &str) -> Result<(String, f64), CliError> {
    let bad = || CliError::Usage(format!("{flag} expects NAME=NUMBER, got `{s}`"));
    let (k, v) = s.split_once('=').ok_or_else(bad)?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(bad());
    }
    let v: f64 = v.trim().parse().map_err(|_| bad())?;
    if !v.is_finite() {
        return Err(bad());
    }
    Ok((k.to_string(), v))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => CliError::FileNotFound(path.display().to_string()),
        _ => CliError::Read {
            path: path.display().to_string(),
            source: e,
        },
    })
}

/// Returns whether the file sets `c`.
fn apply_config(p: &mut PhysicalParams, text: &str) -> Result<bool, CliError> {
    let mut c_given = false;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Usage(format!("config: {}", e.message())))?;
    for (k, v) in table {
        if k == "units" {
            p.units = match v.as_str() {
                Some("si") | Some("SI") => UnitMode::Si,
                Some("dimensionless") => UnitMode::Dimensionless,
                _ => return Err(CliError::Usage(format!("config: units must be \"si\" or \"dimensionless\", got {v}"))),
            };
            continue;
        }
        let x = v
            .as_float()
            .or_else(|| v.as_integer().map(|i| i as f64))
            .ok_or_else(|| CliError::Usage(format!("config: `{k}` must be a number")))?;
        c_given |= k == "c";
        if !p.set(&k, x) {
            return Err(CliError::Usage(format!("config: unknown key `{k}` (rho, m, hbar, G, c, units)")));
        }
    }
    Ok(c_given)
}
