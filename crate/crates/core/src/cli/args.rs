use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use super::{error_json, run, CommandName, ExperimentConfig, Format, RunOutput};
use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "santalo-lab", version, about = "Numerical checks of sharp multimarginal entropy inequalities")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Args)]
struct Extra {
    /// Extra parameters as a JSON object; flags take precedence.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Run a JSON config file.
    Run { config: PathBuf },
    /// Gaussian sharp constant by multi-start optimization.
    DgCompute {
        #[arg(long)]
        barycenter_form: bool,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long)]
        starts: Option<usize>,
        #[command(flatten)]
        extra: Extra,
    },
    /// Transport-entropy checks on centered one-dimensional Gaussians or inline measures.
    Talagrand {
        /// Variances of centered one-dimensional Gaussians.
        #[arg(long, value_delimiter = ',')]
        variances: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        extra: Extra,
    },
    /// Exact or entropic multimarginal transport.
    Mmot {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
        #[command(flatten)]
        extra: Extra,
    },
    /// Wasserstein barycenter.
    Barycenter {
        #[arg(long, value_delimiter = ',')]
        variances: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Option<Vec<f64>>,
        #[command(flatten)]
        extra: Extra,
    },
    /// Functional inequality for potentials under the barycenter form.
    BsCheck {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        random: Option<usize>,
        #[arg(long)]
        duality: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        extra: Extra,
    },
    /// Entropy along repeated doubling `X ↦ (X + X')/√2`.
    CltFlow {
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        extra: Extra,
    },
    /// Volume products of convex bodies.
    Geometry {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Option<Vec<f64>>,
        #[command(flatten)]
        extra: Extra,
    },
    /// A named preset of checks.
    Suite {
        #[arg(long)]
        preset: String,
    },
}

fn base(extra: &Extra) -> Result<Map<String, Value>, Error> {
    match &extra.params {
        None => Ok(Map::new()),
        Some(s) => match serde_json::from_str(s) {
            Ok(Value::Object(m)) => Ok(m),
            Ok(_) => Err(Error::Invalid("--params must be a JSON object".into())),
            Err(e) => Err(Error::Invalid(format!("--params: {e}"))),
        },
    }
}

fn set<T: serde::Serialize>(m: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(key.into(), json!(v));
    }
}

fn normals(vars: Option<Vec<f64>>) -> Option<Vec<Value>> {
    vars.map(|v| v.into_iter().map(|var| json!({ "normal": { "var": var } })).collect())
}

fn config(cli: Cli) -> Result<ExperimentConfig, Error> {
    let (command, params) = match cli.command {
        Sub::Run { config } => {
            let text = std::fs::read_to_string(&config)?;
            return ExperimentConfig::from_json(&text);
        }
        Sub::DgCompute { barycenter_form, n, lambda, d, delta, deltas, starts, extra } => {
            let mut m = base(&extra)?;
            if barycenter_form {
                m.insert("barycenter_form".into(), json!(true));
            }
            set(&mut m, "n", n);
            set(&mut m, "lambda", lambda);
            set(&mut m, "d", d);
            set(&mut m, "delta", delta);
            set(&mut m, "deltas", deltas);
            set(&mut m, "starts", starts);
            (CommandName::DgCompute, m)
        }
        Sub::Talagrand { variances, lambda, tol, extra } => {
            let mut m = base(&extra)?;
            set(&mut m, "measures", normals(variances));
            set(&mut m, "lambda", lambda);
            set(&mut m, "tol", tol);
            (CommandName::Talagrand, m)
        }
        Sub::Mmot { preset, method, epsilon, extra } => {
            let mut m = base(&extra)?;
            set(&mut m, "preset", preset);
            set(&mut m, "method", method);
            set(&mut m, "epsilon", epsilon);
            (CommandName::Mmot, m)
        }
        Sub::Barycenter { variances, lambda, extra } => {
            let mut m = base(&extra)?;
            set(&mut m, "measures", normals(variances));
            set(&mut m, "lambda", lambda);
            (CommandName::Barycenter, m)
        }
        Sub::BsCheck { lambda, random, duality, tol, extra } => {
            let mut m = base(&extra)?;
            set(&mut m, "lambda", lambda);
            set(&mut m, "random", random);
            if duality {
                m.insert("duality".into(), json!(true));
            }
            set(&mut m, "tol", tol);
            (CommandName::BsCheck, m)
        }
        Sub::CltFlow { start, cells, steps, extra } => {
            let mut m = base(&extra)?;
            set(&mut m, "start", start);
            set(&mut m, "cells", cells);
            set(&mut m, "steps", steps);
            (CommandName::CltFlow, m)
        }
        Sub::Geometry { lambda, extra } => {
            let mut m = base(&extra)?;
            set(&mut m, "lambda", lambda);
            (CommandName::Geometry, m)
        }
        Sub::Suite { preset } => (CommandName::Suite, Map::from_iter([("preset".to_string(), json!(preset))])),
    };
    Ok(ExperimentConfig { command, params: Value::Object(params), seed: cli.seed, output: cli.output, format: cli.format })
}

/// Parses arguments (including the program name) and runs the command.
pub fn main_from_args<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => return RunOutput { code: 0, stdout: e.to_string() },
        Err(e) => {
            let err = Error::Usage(e.to_string().trim().to_string());
            return RunOutput { code: 1, stdout: error_json(None, &err) };
        }
    };
    match config(cli) {
        Ok(cfg) => run(&cfg),
        Err(e) => RunOutput { code: 1, stdout: error_json(None, &e) },
    }
}
