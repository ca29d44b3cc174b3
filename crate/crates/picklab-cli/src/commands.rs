//! Subcommand bodies. Each returns the exit code and the single JSON document
//! destined for stdout; nothing here prints.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::necessity::{self, Criterion, NecessitySummary};
use crate::settings::{self, agler_variant, build_map, evaluate_pick, Failure, Family, PickPart, RunOptions};
use crate::wire::{block_matrix_json, complex_json, matrix_json, DataError, Node};
use picklab::agler_np::{solve_feasibility, verify_certificate, AglerOptions, AglerProblem, AglerStatus};
use picklab::ball_np::{DaWeighting, SeriesOptions};
use picklab::cp_toolkit::{choi_matrix, cp_check, CpVerdict, LinearMapOnMatrices};
use picklab::matcore::hermitian_eigenvalues;
use picklab::oracle::{sample_blaschke, sample_contractive_poly, Coefficients, SampleKind, SchurSample};
use picklab::quiver_np::Quiver;
use picklab::Tolerance;

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

pub const SCHEMA_VERSION: &str = "1";

/// Command-line overrides; `None` defers to the request's `options` and then to library defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub tol: Option<Tolerance>,
    pub max_level: Option<usize>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub emit_certificate: Option<PathBuf>,
    pub literal_unweighted: bool,
    /// Work cap from the environment.
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit: i32,
    pub report: Value,
}

impl Outcome {
    fn error(exit: i32, command: &str, e: &DataError) -> Self {
        Outcome {
            exit,
            report: json!({
                "schema_version": SCHEMA_VERSION,
                "command": command,
                "verdict": "error",
                "error": e.to_json(),
            }),
        }
    }

    /// Render as the stdout document.
    pub fn render(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("reports contain only finite JSON values")
    }
}

/// Parse `--tol`: a positive real or `auto`.
pub fn parse_tol(s: &str) -> Result<Tolerance, String> {
    if s == "auto" {
        return Ok(Tolerance::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(Tolerance::Absolute(v)),
        _ => Err(format!("`{s}` is neither `auto` nor a non-negative real")),
    }
}

/// A decoded request envelope.
struct Request {
    setting: String,
    value: Value,
    sha256: String,
    options: RunOptions,
}

fn load(input: &Path, command: &str, flags: &Flags) -> Result<Request, Outcome> {
    let read = if input == Path::new("-") {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut std::io::stdin(), &mut buf).map(|_| buf)
    } else {
        std::fs::read(input)
    };
    let bytes = read.map_err(|e| {
        Outcome::error(EXIT_DATA, command, &DataError::new("io", format!("cannot read {}: {e}", input.display()), ""))
    })?;
    let value: Value = serde_json::from_slice(&bytes).map_err(|e| {
        Outcome::error(
            EXIT_DATA,
            command,
            &DataError::new("malformed_json", e.to_string(), format!("line {}", e.line())),
        )
    })?;
    let root = Node::root(&value);
    let data_err = |e: DataError| Outcome::error(EXIT_DATA, command, &e);
    let version = root.field("schema_version", |n| n.str().map(str::to_string)).map_err(data_err)?;
    if version != SCHEMA_VERSION {
        return Err(data_err(DataError::new(
            "schema",
            format!("unsupported schema_version `{version}`"),
            "/schema_version",
        )));
    }
    let setting = root.field("setting", |n| n.str().map(str::to_string)).map_err(data_err)?;
    if settings::family(&setting).is_none() {
        return Err(Outcome::error(
            EXIT_USAGE,
            command,
            &DataError::new("unknown_setting", format!("unknown setting `{setting}`"), "/setting"),
        ));
    }
    root.field("payload", |n| {
        n.value.as_object().map(|_| ()).ok_or_else(|| DataError::new("schema", "payload must be an object", "/payload"))
    })
    .map_err(data_err)?;
    let options = resolve_options(root, flags).map_err(data_err)?;
    Ok(Request { setting, sha256: hex::encode(Sha256::digest(&bytes)), value, options })
}

fn resolve_options(root: Node<'_>, flags: &Flags) -> Result<RunOptions, DataError> {
    let mut tol = Tolerance::Auto;
    let mut series = SeriesOptions::default();
    let mut agler = AglerOptions::default();
    let mut seed = 0;
    if root.has("options") {
        root.field("options", |o| {
            if let Some(t) = o.opt_field("tol", |t| match t.value.as_str() {
                Some(s) => parse_tol(s).map_err(|m| DataError::new("schema", m, t.path())),
                None => Ok(Tolerance::Absolute(t.f64()?)),
            })? {
                tol = t;
            }
            series.max_level = o.opt_field("max_level", |n| n.usize())?;
            if let Some(m) = o.opt_field("max_iter", |n| n.usize())? {
                agler.max_iter = m;
            }
            seed = o.opt_field("seed", |n| n.u64())?.unwrap_or(0);
            Ok(())
        })?;
    }
    tol = flags.tol.unwrap_or(tol);
    series.max_level = flags.max_level.or(series.max_level);
    if let Some(m) = flags.max_iter {
        agler.max_iter = m;
    }
    if let Some(b) = flags.budget {
        series.budget = b;
        agler.budget = b;
    }
    if let Tolerance::Absolute(t) = tol {
        agler.tol = t;
    }
    let weighting = if flags.literal_unweighted { DaWeighting::LiteralUnweighted } else { DaWeighting::Multinomial };
    Ok(RunOptions { tol, series, agler, seed: flags.seed.unwrap_or(seed), weighting })
}

fn tol_json(t: Tolerance) -> Value {
    match t {
        Tolerance::Auto => json!("auto"),
        Tolerance::Absolute(v) => json!(v),
    }
}

/// Fields shared by every successful report.
fn header(command: &str, req: &Request, verdict: &str) -> Map<String, Value> {
    let o = &req.options;
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m.insert("setting".into(), json!(req.setting));
    m.insert("verdict".into(), json!(verdict));
    m.insert(
        "options".into(),
        json!({
            "tol": tol_json(o.tol),
            "max_level": o.series.max_level,
            "max_iter": o.agler.max_iter,
            "seed": o.seed,
            "series_budget": o.series.budget,
            "agler_budget": o.agler.budget,
            "literal_unweighted": o.weighting == DaWeighting::LiteralUnweighted,
        }),
    );
    m.insert("provenance".into(), json!({ "input_sha256": req.sha256 }));
    m
}

fn finish(mut m: Map<String, Value>, started: Instant, exit: i32) -> Outcome {
    m.insert("timings".into(), json!({ "total_ms": started.elapsed().as_secs_f64() * 1e3 }));
    Outcome { exit, report: Value::Object(m) }
}

fn failure(command: &str, req: &Request, f: Failure, started: Instant) -> Outcome {
    match f {
        Failure::Data(e) if e.code == "usage" => Outcome::error(EXIT_USAGE, command, &e),
        Failure::Data(e) => Outcome::error(EXIT_DATA, command, &e),
        Failure::Unknown { message, achieved_bound } => {
            let mut m = header(command, req, "unknown");
            m.insert("reason".into(), json!(message));
            m.insert("achieved_bound".into(), json!(achieved_bound));
            finish(m, started, EXIT_UNKNOWN)
        }
    }
}

fn write_json(path: &Path, v: &Value) -> Result<(), DataError> {
    let text = serde_json::to_string_pretty(v).expect("finite JSON");
    std::fs::write(path, text + "\n")
        .map_err(|e| DataError::new("io", format!("cannot write {}: {e}", path.display()), ""))
}

fn part_json(p: &PickPart) -> Value {
    let r = &p.report;
    json!({
        "vertex": p.label,
        "verdict": if r.feasible() { "feasible" } else { "infeasible" },
        "min_eigenvalue": r.verdict.min_eigenvalue,
        "tolerance_used": r.verdict.tolerance_used,
        "tail_bound": r.tail_bound,
        "method": r.method.as_str(),
        "pick_matrix": block_matrix_json(r.pick.as_matrix(), &p.block_sizes),
    })
}

/// `check`: route the request to its criterion.
pub fn cmd_check(input: &Path, flags: &Flags) -> Outcome {
    let started = Instant::now();
    let req = match load(input, "check", flags) {
        Ok(r) => r,
        Err(o) => return o,
    };
    match settings::family(&req.setting) {
        Some(Family::Agler) => run_agler("check", &req, flags, started),
        Some(Family::Map) => run_map("check", &req, true, false, started),
        _ => run_pick(&req, flags, started),
    }
}

fn run_pick(req: &Request, flags: &Flags, started: Instant) -> Outcome {
    let payload = &req.value["payload"];
    let parts = match evaluate_pick(&req.setting, Node::at(payload, "/payload"), &req.options) {
        Ok(p) => p,
        Err(f) => return failure("check", req, f, started),
    };
    let feasible = parts.iter().all(|p| p.report.feasible());
    let verdict = if feasible { "feasible" } else { "infeasible" };
    let mut m = header("check", req, verdict);
    let min = parts.iter().map(|p| p.report.verdict.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let tail = parts.iter().map(|p| p.report.tail_bound).fold(0.0, f64::max);
    m.insert("min_eigenvalue".into(), json!(min));
    m.insert("tail_bound".into(), json!(tail));
    let method = parts.iter().map(|p| p.report.method).reduce(|a, b| a.combine(b));
    m.insert("method".into(), json!(method.map(|x| x.as_str())));
    if let [only] = parts.as_slice() {
        m.insert("tolerance_used".into(), json!(only.report.verdict.tolerance_used));
        m.insert("pick_matrix".into(), block_matrix_json(only.report.pick.as_matrix(), &only.block_sizes));
    } else {
        m.insert("parts".into(), Value::Array(parts.iter().map(part_json).collect()));
    }
    if let (Some(path), true) = (&flags.emit_certificate, feasible) {
        let cert = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "pick_matrix",
            "setting": req.setting,
            "parts": parts.iter().map(part_json).collect::<Vec<_>>(),
        });
        if let Err(e) = write_json(path, &cert) {
            return Outcome::error(EXIT_DATA, "check", &e);
        }
        m.insert("certificate_path".into(), json!(path.display().to_string()));
    }
    finish(m, started, if feasible { EXIT_FEASIBLE } else { EXIT_INFEASIBLE })
}

/// `agler`: semidefinite feasibility for polydisk data.
pub fn cmd_agler(input: &Path, flags: &Flags) -> Outcome {
    let started = Instant::now();
    let req = match load(input, "agler", flags) {
        Ok(r) => r,
        Err(o) => return o,
    };
    if settings::family(&req.setting) != Some(Family::Agler) {
        let e = DataError::new("usage", format!("`{}` is not a polydisk setting", req.setting), "/setting");
        return Outcome::error(EXIT_USAGE, "agler", &e);
    }
    run_agler("agler", &req, flags, started)
}

fn run_agler(command: &str, req: &Request, flags: &Flags, started: Instant) -> Outcome {
    let run = || -> Result<_, Failure> {
        let variant = agler_variant(&req.setting, Node::at(&req.value["payload"], "/payload"))?;
        let problem = AglerProblem::new(variant)?;
        let report = solve_feasibility(&problem, &req.options.agler)?;
        Ok((problem, report))
    };
    let (problem, report) = match run() {
        Ok(x) => x,
        Err(f) => return failure(command, req, f, started),
    };
    let (verdict, exit) = match report.status {
        AglerStatus::FeasibleWithCertificate => ("feasible", EXIT_FEASIBLE),
        AglerStatus::InfeasibleEvidence => ("infeasible_evidence", EXIT_INFEASIBLE),
        AglerStatus::Unknown => ("unknown", EXIT_UNKNOWN),
    };
    let mut m = header(command, req, verdict);
    m.insert("status".into(), json!(report.status.as_str()));
    m.insert("gap_estimate".into(), json!(report.gap_estimate));
    m.insert("iterations".into(), json!(report.iterations));
    m.insert("variables".into(), json!(problem.d));
    if let Some(cert) = &report.certificate {
        let check = match verify_certificate(&problem, cert) {
            Ok(c) => c,
            Err(e) => return failure(command, req, e.into(), started),
        };
        m.insert("residual_norm".into(), json!(cert.residual_norm));
        m.insert(
            "certificate_check".into(),
            json!({ "residual": check.residual, "min_eigenvalues": check.min_eigenvalues }),
        );
        if let Some(path) = &flags.emit_certificate {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "kind": "agler_kernels",
                "setting": req.setting,
                "kernels": cert.kernels.iter().map(|k| matrix_json(k.as_matrix())).collect::<Vec<_>>(),
                "residual_norm": cert.residual_norm,
                "iterations": cert.iterations,
            });
            if let Err(e) = write_json(path, &doc) {
                return Outcome::error(EXIT_DATA, command, &e);
            }
            m.insert("certificate_path".into(), json!(path.display().to_string()));
        }
    }
    finish(m, started, exit)
}

/// `choi`: the Choi matrix of a `cp.*` map and its verdict.
pub fn cmd_choi(input: &Path, flags: &Flags) -> Outcome {
    map_command("choi", input, flags, false, true)
}

/// `cpcheck`: complete positivity with a sampled witness on failure.
pub fn cmd_cpcheck(input: &Path, flags: &Flags) -> Outcome {
    map_command("cpcheck", input, flags, true, false)
}

fn map_command(command: &str, input: &Path, flags: &Flags, witness: bool, embed: bool) -> Outcome {
    let started = Instant::now();
    let req = match load(input, command, flags) {
        Ok(r) => r,
        Err(o) => return o,
    };
    if settings::family(&req.setting) != Some(Family::Map) {
        let e = DataError::new("usage", format!("`{}` is not a map setting", req.setting), "/setting");
        return Outcome::error(EXIT_USAGE, command, &e);
    }
    run_map(command, &req, witness, embed, started)
}

fn verdict_json(v: &CpVerdict) -> Vec<(&'static str, Value)> {
    let mut out = vec![("choi_min_eigenvalue", json!(v.choi_min_eig)), ("tolerance_used", json!(v.tolerance_used))];
    if let Some(w) = &v.witness {
        out.push((
            "witness",
            json!({ "k": w.k, "input": matrix_json(&w.input), "image_min_eigenvalue": w.image_min_eigenvalue }),
        ));
    }
    out
}

fn run_map(command: &str, req: &Request, witness: bool, embed: bool, started: Instant) -> Outcome {
    let run = || -> Result<(LinearMapOnMatrices, CpVerdict), Failure> {
        let map = build_map(&req.setting, Node::at(&req.value["payload"], "/payload"), &req.options)?;
        let verdict = if witness {
            cp_check(&map, req.options.tol, req.options.seed)?
        } else {
            let choi = choi_matrix(&map)?;
            let vals = hermitian_eigenvalues(&choi)?;
            let base = req.options.tol.resolve(&choi, &vals)?;
            let tolerance_used = base + map.tail_bound();
            let min = vals.first().copied().unwrap_or(0.0);
            CpVerdict { is_cp: min >= -tolerance_used, choi_min_eig: min, tolerance_used, witness: None }
        };
        Ok((map, verdict))
    };
    let (map, verdict) = match run() {
        Ok(x) => x,
        Err(f) => return failure(command, req, f, started),
    };
    let mut m = header(command, req, if verdict.is_cp { "cp" } else { "not_cp" });
    m.insert("in_dim".into(), json!(map.in_dim()));
    m.insert("out_dim".into(), json!(map.out_dim()));
    m.insert("domain_classes".into(), json!(map.domain_classes()));
    m.insert("tail_bound".into(), json!(map.tail_bound()));
    for (k, v) in verdict_json(&verdict) {
        m.insert(k.into(), v);
    }
    if embed {
        match choi_matrix(&map) {
            Ok(c) => {
                m.insert(
                    "choi_matrix".into(),
                    json!({ "block_size": map.out_dim(), "rows": matrix_json(c.as_matrix()) }),
                );
            }
            Err(e) => return failure(command, req, e.into(), started),
        }
    }
    finish(m, started, if verdict.is_cp { EXIT_FEASIBLE } else { EXIT_INFEASIBLE })
}

/// Parameters of `sample`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub kind: String,
    pub degree: usize,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub variables: usize,
    pub y_dims: Vec<usize>,
    pub u_dims: Vec<usize>,
}

pub fn sample_json(s: &SchurSample) -> Value {
    let coefficients: Vec<Value> = match &s.coefficients {
        Coefficients::Disk(cs) => {
            cs.iter().enumerate().map(|(n, m)| json!({ "degree": n, "matrix": matrix_json(m) })).collect()
        }
        Coefficients::Ball { terms, .. } => {
            terms.iter().map(|(w, m)| json!({ "word": w.0, "matrix": matrix_json(m) })).collect()
        }
        Coefficients::Quiver { quiver, terms, .. } => {
            terms.iter().map(|(p, m)| json!({ "path": p.display(quiver), "matrix": matrix_json(m) })).collect()
        }
    };
    let (rows, cols) = s.coefficients.shape();
    json!({
        "shape": [rows, cols],
        "degree": s.coefficients.degree(),
        "coefficients": coefficients,
        "scale": s.scale,
        "certified_norm": s.certified_norm,
        "toeplitz_norm": s.toeplitz_norm,
        "toeplitz_levels": s.toeplitz_levels,
        "contractivity_margin": s.contractivity_margin,
        "tail_bound": s.tail_bound,
        "blaschke": s.blaschke.as_ref().map(|b| json!({
            "zeros": b.zeros.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
            "unimodular": complex_json(b.unimodular),
        })),
    })
}

/// `sample`: draw a Schur-class element.
pub fn cmd_sample(spec: &SampleSpec, out: Option<&Path>) -> Outcome {
    let usage = |m: String| Outcome::error(EXIT_USAGE, "sample", &DataError::new("usage", m, ""));
    let drawn = match spec.kind.as_str() {
        "disk" => sample_contractive_poly(spec.rows, spec.cols, spec.degree, &SampleKind::Disk, spec.seed),
        "ball" => sample_contractive_poly(
            spec.rows,
            spec.cols,
            spec.degree,
            &SampleKind::Ball { d: spec.variables },
            spec.seed,
        ),
        "quiver" => {
            let kind = SampleKind::Quiver {
                quiver: Quiver::two_vertex_example(),
                u_dims: spec.u_dims.clone(),
                y_dims: spec.y_dims.clone(),
            };
            sample_contractive_poly(spec.y_dims.iter().sum(), spec.u_dims.iter().sum(), spec.degree, &kind, spec.seed)
        }
        "blaschke" => sample_blaschke(spec.degree, spec.seed),
        other => return usage(format!("unknown sample kind `{other}`; expected disk, ball, quiver or blaschke")),
    };
    let s = match drawn {
        Ok(s) => s,
        Err(e) => return usage(e.to_string()),
    };
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "sample",
        "kind": spec.kind,
        "seed": spec.seed,
        "sample": sample_json(&s),
    });
    if let Some(path) = out {
        if let Err(e) = write_json(path, &report["sample"]) {
            return Outcome::error(EXIT_DATA, "sample", &e);
        }
        report["output_path"] = json!(path.display().to_string());
    }
    Outcome { exit: EXIT_FEASIBLE, report }
}

pub fn summary_json(s: &NecessitySummary) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": "necessity",
        "setting": s.criterion.setting(),
        "trials": s.outcomes.len(),
        "seed": s.seed,
        "verdict": if s.passed() { "pass" } else { "fail" },
        "worst_margin": s.worst_margin(),
        "worst_tail_bound": s.worst_tail(),
        "slack": necessity::NECESSITY_SLACK,
        "outcomes": s.outcomes.iter().map(|o| json!({
            "seed": o.seed,
            "min_eigenvalue": o.min_eigenvalue,
            "tail_bound": o.tail_bound,
        })).collect::<Vec<_>>(),
    })
}

/// `necessity`: run a seeded suite; exit 0 iff every trial clears its tail bound.
pub fn cmd_necessity(setting: &str, trials: usize, seed: u64) -> Outcome {
    let Some(c) = Criterion::from_setting(setting) else {
        let known: Vec<&str> = Criterion::ALL.iter().map(|c| c.setting()).collect();
        let e = DataError::new(
            "unknown_setting",
            format!("no necessity suite for `{setting}`; known: {}", known.join(", ")),
            "",
        );
        return Outcome::error(EXIT_USAGE, "necessity", &e);
    };
    match necessity::run(c, trials, seed) {
        Ok(s) => Outcome { exit: if s.passed() { EXIT_FEASIBLE } else { EXIT_INFEASIBLE }, report: summary_json(&s) },
        Err(e) => {
            let code = if matches!(e, picklab::Error::Budget { .. }) { EXIT_UNKNOWN } else { EXIT_DATA };
            Outcome::error(code, "necessity", &DataError::new("suite", e.to_string(), ""))
        }
    }
}

/// Copy of a report with the `timings` field removed, for byte comparisons.
pub fn without_timings(report: &Value) -> Value {
    let mut v = report.clone();
    if let Some(m) = v.as_object_mut() {
        m.remove("timings");
    }
    v
}
