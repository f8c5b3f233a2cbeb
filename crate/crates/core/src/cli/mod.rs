//! Experiment configuration, execution and report emission behind the
//! `santalo-lab` binary.

mod args;
mod output;
pub mod params;
pub mod presets;

use std::path::PathBuf;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub use args::main_from_args;
pub use output::{emit_plotdata, to_json, Trace};

use crate::couplings::{mmot_exact, mmot_sinkhorn, w2_squared_discrete, CouplingResult, Sense};
use crate::error::{Error, Result};
use crate::functional::{bs_inequality_check, duality_transfer, geometry_check, random_feasible_potentials, BsOptions, ProbeSpec};
use crate::gaussian::{barycenter_gaussian, w2_squared_gaussian};
use crate::grid::clt_flow;
use crate::report::InequalityReport;
use crate::sharp_constant::{
    barycenter_form_constant, dg_compute, dg_delta_limit, encode_barycenter_form, DgOptions, EntropyProblem,
};
use crate::sharp_constant::thread_pool;
use crate::suite::*;
use params::*;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    DgCompute,
    Talagrand,
    Mmot,
    Barycenter,
    BsCheck,
    CltFlow,
    Geometry,
    Suite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One run of the harness; the JSON config file has exactly these keys.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    #[serde(default = "empty_params")]
    pub params: Value,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn empty_params() -> Value {
    Value::Object(Map::new())
}

impl ExperimentConfig {
    pub fn new(command: CommandName, params: Value) -> Self {
        Self { command, params, seed: 0, output: None, format: Format::Json }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("config: {e}")))
    }
}

/// Exit status and the text destined for stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    /// 0 when every verdict holds or is saturated, 2 on a violated verdict,
    /// 1 on an input or solver error.
    pub code: i32,
    pub stdout: String,
}

struct Produced {
    body: Value,
    reports: Vec<InequalityReport>,
    csv: Option<String>,
}

impl Produced {
    fn body(body: Value) -> Self {
        Self { body, reports: vec![], csv: None }
    }

    fn reports(reports: Vec<InequalityReport>) -> Self {
        Self { body: json!({}), reports, csv: None }
    }
}

pub fn error_json(command: Option<CommandName>, err: &Error) -> String {
    to_json(&json!({
        "schema": SCHEMA,
        "command": command,
        "error": { "code": err.code(), "message": err.to_string() },
    }))
}

pub fn run(config: &ExperimentConfig) -> RunOutput {
    match execute(config) {
        Ok(out) => out,
        Err(e) => RunOutput { code: 1, stdout: error_json(Some(config.command), &e) },
    }
}

fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    let produced = match config.command {
        CommandName::DgCompute => dg_command(parse(&config.params)?, config.seed)?,
        CommandName::Talagrand => talagrand_command(parse(&config.params)?)?,
        CommandName::Mmot => mmot_command(parse(&config.params)?)?,
        CommandName::Barycenter => barycenter_command(parse(&config.params)?)?,
        CommandName::BsCheck => bs_command(parse(&config.params)?, config.seed)?,
        CommandName::CltFlow => clt_command(parse(&config.params)?)?,
        CommandName::Geometry => geometry_command(parse(&config.params)?)?,
        CommandName::Suite => suite_command(parse(&config.params)?, config.seed)?,
    };
    let violated = produced.reports.iter().any(InequalityReport::is_violated);
    let text = match config.format {
        Format::Csv => produced.csv.ok_or_else(|| {
            Error::Invalid("csv output is only available for clt-flow and delta schedules".into())
        })?,
        Format::Json => {
            let mut body = match produced.body {
                Value::Object(m) => m,
                other => {
                    let mut m = Map::new();
                    m.insert("result".into(), other);
                    m
                }
            };
            let mut head = Map::new();
            head.insert("schema".into(), json!(SCHEMA));
            head.insert("command".into(), json!(config.command));
            head.insert("seed".into(), json!(config.seed));
            if !produced.reports.is_empty() {
                let reports: Vec<InequalityReport> = produced.reports.into_iter().map(flag_non_finite).collect();
                head.insert("reports".into(), json!(reports));
                head.insert("violated".into(), json!(violated));
            }
            head.append(&mut body);
            to_json(&Value::Object(head))
        }
    };
    let stdout = match &config.output {
        Some(path) => {
            std::fs::write(path, &text)?;
            String::new()
        }
        None => text,
    };
    Ok(RunOutput { code: if violated { 2 } else { 0 }, stdout })
}

fn parse<T: for<'de> Deserialize<'de>>(params: &Value) -> Result<T> {
    serde_json::from_value(params.clone()).map_err(|e| Error::Invalid(format!("params: {e}")))
}

fn flag_non_finite(mut r: InequalityReport) -> InequalityReport {
    if !(r.lhs.is_finite() && r.rhs.is_finite() && r.deficit.is_finite()) {
        r.insert_meta("non_finite", true);
    }
    r
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn rows(m: &crate::linalg::SymMatrix) -> Vec<Vec<f64>> {
    let a = m.as_matrix();
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

fn dg_problem(p: &DgParams) -> Result<(EntropyProblem, Option<f64>)> {
    if p.barycenter_form {
        let lambda = p.lambda.clone().ok_or_else(|| Error::Invalid("barycenter form needs lambda".into()))?;
        if let Some(n) = p.n {
            if n != lambda.len() {
                return Err(Error::Dimension(format!("n = {n} but lambda has {} entries", lambda.len())));
            }
        }
        let problem = encode_barycenter_form(&lambda, p.d)?.with_delta(p.delta)?;
        Ok((problem, Some(barycenter_form_constant(&lambda, p.d)?)))
    } else {
        let (Some(c), Some(dims), Some(q)) = (&p.c, &p.dims, &p.q) else {
            return Err(Error::Invalid("give --barycenter-form or all of c, dims and q".into()));
        };
        Ok((EntropyProblem::new(c.clone(), quadratic_form(dims, q)?, p.delta)?, None))
    }
}

fn dg_command(p: DgParams, seed: u64) -> Result<Produced> {
    let (problem, closed) = dg_problem(&p)?;
    let opts = DgOptions { starts: p.starts, seed, ..DgOptions::default() };
    if let Some(deltas) = &p.deltas {
        let limit = dg_delta_limit(&problem, deltas, &opts)?;
        let csv = emit_plotdata(Trace::Delta(&limit))?;
        let values: Vec<Value> = limit.values.iter().map(|v| finite_or_null(*v)).collect();
        let body = json!({ "deltas": limit.deltas, "values": values, "monotone": limit.monotone, "closed_form": closed });
        return Ok(Produced { body, reports: vec![], csv: Some(csv) });
    }
    let r = dg_compute(&problem, &opts)?;
    let starts: Vec<Value> = r
        .starts
        .iter()
        .map(|s| json!({ "start": s.start, "value": finite_or_null(s.value), "iterations": s.iterations, "converged": s.converged }))
        .collect();
    let mut body = json!({
        "value": finite_or_null(r.value),
        "value_finite": r.value.is_finite(),
        "status": r.status,
        "covariances": r.covariances.iter().map(rows).collect::<Vec<_>>(),
        "starts": starts,
    });
    if let Some(c) = closed {
        body["closed_form"] = json!(c);
        body["abs_error"] = finite_or_null((r.value - c).abs());
    }
    Ok(Produced::body(body))
}

fn talagrand_command(p: TalagrandParams) -> Result<Produced> {
    let m = marginals(&p.measures)?;
    let n = m.len();
    let lambda = p.lambda.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
    let gaussian = matches!(m, Marginals::Gaussian(_));
    let checks = p.checks.clone().unwrap_or_else(|| {
        let mut c = vec![Check::Barycenter, Check::Multimarginal, Check::Equivalence, Check::Displacement];
        if n == 2 {
            c.push(Check::Symmetrized);
        }
        if gaussian && n >= 3 {
            c.push(Check::ProofChain);
        }
        c
    });
    let mut reports = Vec::new();
    for check in checks {
        reports.push(match check {
            Check::Barycenter => talagrand_barycenter_check(&m, &lambda, p.tol)?,
            Check::Multimarginal => multimarginal_form_check(&m, &lambda, p.tol)?,
            Check::Equivalence => equivalence_check(&m, &lambda, p.tol)?,
            Check::Displacement => displacement_convexity_check(&m, &lambda, p.tol)?,
            Check::Symmetrized => symm_talagrand_check(&m, p.tol)?,
            Check::ProofChain => match &m {
                Marginals::Gaussian(gs) => proof_chain_check(gs, &lambda, p.tol)?,
                _ => return Err(Error::Invalid("the proof chain takes Gaussian measures".into())),
            },
        });
    }
    Ok(Produced::reports(reports))
}

fn coupling_json(r: &CouplingResult) -> Value {
    let mut v = json!({
        "value": r.value,
        "status": r.status,
        "gap": finite_or_null(r.gap),
        "gap_kind": r.gap_kind,
        "iterations": r.iterations,
        "regularized_value": r.regularized_value,
    });
    if let Some(t) = r.tensor() {
        v["shape"] = json!(t.shape());
        v["coupling"] = json!(t.probs());
    }
    v
}

fn mmot_command(p: MmotParams) -> Result<Produced> {
    let (marginals, cost, sense) = match (&p.preset, &p.marginals) {
        (Some(name), None) => {
            let inst = presets::mmot_presets()
                .into_iter()
                .find(|i| i.name == name)
                .ok_or_else(|| Error::Invalid(format!("unknown mmot preset {name:?}")))?;
            (inst.marginals, inst.cost, inst.sense)
        }
        (None, Some(specs)) => {
            let ms = specs.iter().map(MeasureSpec::discrete).collect::<Result<Vec<_>>>()?;
            let cost = p.cost.as_ref().ok_or_else(|| Error::Invalid("inline marginals need a cost".into()))?.build()?;
            (ms, cost, p.sense.unwrap_or(Sense::Min))
        }
        _ => return Err(Error::Invalid("give exactly one of preset and marginals".into())),
    };
    let body = match p.method {
        MmotMethod::Exact => coupling_json(&mmot_exact(&marginals, &cost, sense)?),
        MmotMethod::Sinkhorn => {
            let eps = p.epsilon.clone().unwrap_or_else(|| presets::SINKHORN_EPSILONS.to_vec());
            let runs = eps
                .iter()
                .map(|&e| {
                    let mut v = coupling_json(&mmot_sinkhorn(&marginals, &cost, sense, e)?);
                    v["epsilon"] = json!(e);
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            json!({ "runs": runs })
        }
    };
    Ok(Produced::body(body))
}

fn barycenter_command(p: BarycenterParams) -> Result<Produced> {
    let body = match marginals(&p.measures)? {
        Marginals::Gaussian(gs) => {
            let b = barycenter_gaussian(&p.lambda, &gs)?;
            let cost: f64 = gs
                .iter()
                .zip(&p.lambda)
                .map(|(g, l)| Ok(l * w2_squared_gaussian(g, &b)?))
                .sum::<Result<f64>>()?;
            json!({ "mean": b.mean().as_slice(), "cov": rows(b.cov()), "cost": cost })
        }
        Marginals::Discrete(ms) => {
            let b = crate::couplings::barycenter_discrete(&p.lambda, &ms)?;
            let cost: f64 = ms
                .iter()
                .zip(&p.lambda)
                .map(|(m, l)| Ok(l * w2_squared_discrete(m, &b)?))
                .sum::<Result<f64>>()?;
            let points: Vec<&[f64]> = b.points().iter().map(DVector::as_slice).collect();
            json!({ "points": points, "weights": b.weights(), "cost": cost })
        }
        Marginals::Grid(_) => unreachable!("specs never produce grid measures"),
    };
    Ok(Produced::body(body))
}

fn bs_command(p: BsParams, seed: u64) -> Result<Produced> {
    let problem = encode_barycenter_form(&p.lambda, 1)?;
    let dg = match p.constant {
        Some(c) => c,
        None => barycenter_form_constant(&p.lambda, 1)?,
    };
    let mut instances = Vec::new();
    if let Some(specs) = &p.potentials {
        instances.push(specs.iter().map(PotentialSpec::build).collect::<Result<Vec<_>>>()?);
    }
    for k in 0..p.random {
        instances.push(random_feasible_potentials(&p.lambda, 480, seed.wrapping_add(k as u64))?);
    }
    if instances.is_empty() {
        return Err(Error::Invalid("give potentials or a positive random count".into()));
    }
    let opts = BsOptions { tol: p.tol.unwrap_or(1e-6), probes: ProbeSpec::Auto { seed }, ..BsOptions::default() };
    let mut reports = Vec::new();
    for fs in &instances {
        reports.push(bs_inequality_check(fs, problem.c(), problem.q(), dg, &opts)?);
        if p.duality {
            reports.push(duality_transfer(fs, problem.c(), problem.q(), dg, GRID_TOL)?);
        }
    }
    Ok(Produced::reports(reports))
}

fn clt_command(p: CltParams) -> Result<Produced> {
    let trace = clt_flow(&p.start_measure()?, p.steps)?;
    let csv = emit_plotdata(Trace::Flow(&trace))?;
    Ok(Produced { body: json!({ "trace": trace }), reports: vec![], csv: Some(csv) })
}

fn geometry_command(p: GeometryParams) -> Result<Produced> {
    let bodies = p.bodies.iter().map(BodySpec::build).collect::<Result<Vec<_>>>()?;
    Ok(Produced::reports(vec![geometry_check(&bodies, &p.lambda, p.tol)?]))
}

fn suite_command(p: SuiteParams, seed: u64) -> Result<Produced> {
    let items = presets::suite_preset(&p.preset, seed)?;
    let mut done: Vec<(String, InequalityReport)> = thread_pool().install(|| {
        items
            .par_iter()
            .map(|it| {
                (it.job)().map(|mut r| {
                    r.name = it.name.clone();
                    (it.name.clone(), r)
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    done.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = Produced::reports(done.into_iter().map(|(_, r)| r).collect());
    out.body = json!({ "preset": p.preset });
    Ok(out)
}
