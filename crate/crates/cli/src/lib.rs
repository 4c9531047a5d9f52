//! The `qgrav` command line: argument handling, report assembly and exit codes.

mod args;
mod commands;
mod input;
mod report;

use std::ffi::OsString;
use std::io::{self, Write};

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};
use commands::FieldeqArgs;
use input::{Context, Format};

pub use report::TOOL_VERSION;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error(transparent)]
    Wave(#[from] qgrav::qmetric::WaveError),
    #[error("cannot parse `{text}`: {source}")]
    Expr {
        text: String,
        source: qgrav::symexpr::ParseError,
    },
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::FileNotFound(_) | CliError::Wave(_) | CliError::Expr { .. } => 2,
            CliError::Read { .. } | CliError::Write { .. } | CliError::Domain(_) => 1,
        }
    }
}

/// Runs one invocation; returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    2
                }
            };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "qgrav: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let default_format = match cmd {
        Command::Grid { .. } => Format::Csv,
        _ => Format::Json,
    };
    let ctx = Context::from_common(cmd.common(), default_format)?;
    if ctx.format == Format::Csv && !matches!(cmd, Command::Grid { .. }) {
        return Err(CliError::Usage(format!("csv output is only available for `grid`, not `{}`", cmd.name())));
    }
    let out = match cmd {
        Command::Metric { .. } => commands::metric(&ctx)?,
        Command::Geometry { what, frw, no_simplify, .. } => commands::geometry(&ctx, *what, frw, *no_simplify)?,
        Command::Frw { .. } => commands::frw(&ctx)?,
        Command::Singularities { samples, .. } => commands::singularities(&ctx, *samples)?,
        Command::Fieldeq {
            t0,
            points,
            order,
            pointwise,
            unrooted,
            frw,
            ..
        } => commands::fieldeq(
            &ctx,
            &FieldeqArgs {
                t0: *t0,
                points: *points,
                order: *order,
                pointwise: *pointwise,
                unrooted: *unrooted,
                frw,
            },
        )?,
        Command::Eval { expr, .. } => commands::eval_cmd(&ctx, expr.as_deref())?,
        Command::Grid { expr, of, axes, .. } => commands::grid(&ctx, expr.as_deref(), of, axes)?,
        Command::Builtins { .. } => commands::builtins()?,
    };
    let body = match ctx.format {
        Format::Json => {
            let doc = report::envelope(ctx.echo(cmd.name(), out.config), ctx.seed, out.result);
            let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
            s.push('\n');
            s
        }
        Format::Csv => out.csv.unwrap_or_default(),
        Format::Text => out.text,
    };
    match &ctx.out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => stdout.write_all(body.as_bytes()).map_err(|source| CliError::Write {
            path: "stdout".into(),
            source,
        }),
    }
}
