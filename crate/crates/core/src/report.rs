//! Request documents, command handlers and output writers for the `thrifty` CLI.
//!
//! A request is a JSON document (unknown keys rejected) or the equivalent CLI
//! flags. Every handler returns a [`Report`]: one JSON object holding the
//! resolved `config` (defaults materialized), `results` and `diagnostics`, plus
//! the tool version. Figure and verify reports also carry a flat table for CSV.
//!
//! CSV layout: two comment lines (`# thrifty <version> <command>` and
//! `# config <compact JSON>`), then a header row and data rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commutant::{
    gi_fit, kappa_closed, kappa_extract, lambda12, omega_closed, omega_empirical, partial_trace_defect, projectors,
    t_basis, vstar_via_omega, FourCopy, Projectors, SmallOperator, UnitarySource, DENSE_OMEGA_MAX,
};
use crate::error::{invalid, Error, Result};
use crate::sim::{
    figure_dataset, resolve_observable, run_experiment, Cell, EstimatorStats, FigureId, FigureParams, ObservableSpec,
    RunConfig, ShotObservable, ShotState, Table, TargetSpec,
};
use crate::states::{phased_w_bounds, sre2, sre2_closed, DenseOperator, SreFamily, CHAR_MAX};
use crate::variance::{
    analyze, analyze_fidelity, canonical_kind, clifford_chain, clifford_max_bound_fidelity, doped_bounds,
    doped_fidelity_window, doped_max_bound_fidelity, g_coefficients, haar_max_bound, triangle_bounds,
    v_triangle_fidelity, vstar_fidelity, vstar_fidelity_gpath, EnsembleKind, EnsembleSpec, Method, XI_MAX,
};
use crate::verify::{run_suite, Suite, SuiteReport, DEFAULT_SEED};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Default output directory when `--out` is a bare file name.
pub const OUT_DIR_ENV: &str = "THRIFTY_OUT_DIR";

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub results: Value,
    pub diagnostics: Value,
    #[serde(skip)]
    pub table: Option<Table>,
    /// False only for failed verify suites.
    #[serde(skip)]
    pub ok: bool,
}

impl Report {
    fn new(command: &str, config: Value, results: Value, diagnostics: Value) -> Self {
        Report {
            command: command.into(),
            version: VERSION.into(),
            config,
            results,
            diagnostics,
            table: None,
            ok: true,
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

// ---------------------------------------------------------------------------
// analytic

fn default_reuses() -> Vec<u64> {
    vec![1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticRequest {
    pub ensemble: EnsembleKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d: Option<f64>,
    pub scenario: Scenario,
    #[serde(default = "default_reuses")]
    pub reuses: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Fidelity estimation of a pure `φ` with magic `M₂` on `ρ_p = (1−p)φ + p/d`.
    /// At most one of `fidelity` / `depolarizing`; `F = 1 − p(d−1)/d`.
    Fidelity {
        #[serde(default)]
        m2: Option<f64>,
        #[serde(default)]
        family: Option<SreFamily>,
        #[serde(default)]
        fidelity: Option<f64>,
        #[serde(default)]
        depolarizing: Option<f64>,
    },
    /// Explicit dense pair: the pure `state`, depolarized by `depolarizing`, and `observable`.
    Pair {
        state: TargetSpec,
        observable: ObservableSpec,
        #[serde(default)]
        depolarizing: f64,
    },
}

fn resolve_register(n: Option<usize>, d: Option<f64>) -> Result<(usize, f64)> {
    match (n, d) {
        (None, None) => invalid("give the qubit count n or the dimension d"),
        (Some(n), None) => Ok((n, (n as f64).exp2())),
        (n_opt, Some(d)) => {
            let n_d = d.log2().round();
            if d < 2.0 || (n_d.exp2() - d).abs() > 1e-9 {
                return invalid(format!("d={d} is not a power of two ≥ 2 (qubit systems only)"));
            }
            let n_d = n_d as usize;
            if let Some(n) = n_opt {
                if n != n_d {
                    return invalid(format!("n={n} and d={d} disagree"));
                }
            }
            Ok((n_d, d))
        }
    }
}

fn closed_form_name(kind: EnsembleKind) -> &'static str {
    match canonical_kind(kind) {
        EnsembleKind::FourDesign => "vstar_4design_fidelity",
        EnsembleKind::Clifford => "vstar_clifford_fidelity",
        EnsembleKind::Interleaved { .. } => "vstar_ukl_fidelity",
        EnsembleKind::SimpleT { .. } => "vstar_tuk_fidelity",
    }
}

fn vr_list(v: f64, vstar: f64, rs: &[u64]) -> Result<Value> {
    let mut out = Vec::new();
    for &r in rs {
        out.push(json!({ "r": r, "vr": crate::variance::vr_combine(v, vstar, r)? }));
    }
    Ok(Value::Array(out))
}

fn m2_source(m2: Option<f64>, family: &Option<SreFamily>, n: usize, kind: EnsembleKind) -> Result<(f64, &'static str)> {
    match (m2, family) {
        (Some(_), Some(_)) => invalid("give M₂ directly or through a state family, not both"),
        // Haar variances do not depend on the magic of the target
        (None, None) if kind == EnsembleKind::FourDesign => Ok((0.0, "not_needed")),
        (None, None) => invalid("fidelity scenario needs m2 or family"),
        (Some(m), None) => {
            if !(m >= 0.0) {
                return invalid(format!("M₂ must be nonnegative, got {m}"));
            }
            Ok((m, "direct"))
        }
        (None, Some(f)) => {
            if f.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.n() });
            }
            Ok((sre2_closed(f)?, "family"))
        }
    }
}

pub fn cmd_analytic(req: &AnalyticRequest) -> Result<Report> {
    let (n, d) = resolve_register(req.n, req.d)?;
    let spec = EnsembleSpec::new(n, req.ensemble)?;
    if req.reuses.is_empty() || req.reuses.contains(&0) {
        return invalid("reuses must be a nonempty list of positive integers");
    }
    let kind = spec.canonical();
    let gamma_pow = spec.gamma_power();
    let mut config = json!({ "ensemble": req.ensemble, "canonical_ensemble": kind, "n": n, "d": d, "reuses": req.reuses });
    let (results, diagnostics) = match &req.scenario {
        Scenario::Fidelity { m2, family, fidelity, depolarizing } => {
            let (m2v, src) = m2_source(*m2, family, n, kind)?;
            let p = match (fidelity, depolarizing) {
                (Some(_), Some(_)) => return invalid("give fidelity or depolarizing, not both"),
                (Some(f), None) => {
                    if !(1.0 / d - 1e-12..=1.0 + 1e-12).contains(f) {
                        return invalid(format!("fidelity {f} outside [1/d, 1]"));
                    }
                    ((1.0 - f) * d / (d - 1.0)).clamp(0.0, 1.0)
                }
                (None, Some(p)) => *p,
                (None, None) => 0.0,
            };
            let f = 1.0 - p * (d - 1.0) / d;
            config["scenario"] = json!({ "type": "fidelity", "m2": m2v, "m2_source": src, "family": family,
                "fidelity": f, "depolarizing": p });
            let b = analyze_fidelity(kind, d, m2v, p)?;
            let norm_o2 = 1.0 - 1.0 / d;
            let mut bounds = json!({
                "haar_max": haar_max_bound(d, norm_o2),
                "clifford_v_triangle": v_triangle_fidelity(d, m2v)?,
                "clifford_max_over_rho": clifford_max_bound_fidelity(d, m2v)?,
            });
            if let Some(gp) = gamma_pow {
                let (lo, hi) = doped_fidelity_window(d, m2v, gp)?;
                bounds["gamma_power"] = json!(gp);
                bounds["doped_max_over_rho"] = json!(doped_max_bound_fidelity(d, m2v, gp)?);
                bounds["doped_window"] = json!([lo, hi]);
            }
            let gp_v = vstar_fidelity_gpath(kind, d, m2v)? * (1.0 - p).powi(2);
            let results = json!({
                "v": b.v, "vstar": b.vstar, "method": b.method, "closed_form": closed_form_name(kind),
                "vr": vr_list(b.v, b.vstar, &req.reuses)?, "bounds": bounds,
            });
            let diag = json!({ "vstar_g_path": gp_v, "g_path_gap": (gp_v - b.vstar).abs(),
                "g": g_coefficients(kind, d)?.0 });
            (results, diag)
        }
        Scenario::Pair { state, observable, depolarizing } => {
            if n > CHAR_MAX {
                return Err(Error::CutoffExceeded { what: "dense pair analysis", n, max: CHAR_MAX });
            }
            let phi = state.state(n)?;
            let o = resolve_observable(observable, n, &phi)?.operator();
            let rho = phi.projector().depolarize(*depolarizing)?;
            config["scenario"] = json!({ "type": "pair", "state": state, "observable": observable, "depolarizing": depolarizing });
            if !matches!(kind, EnsembleKind::Clifford) && n > XI_MAX {
                return Err(Error::CutoffExceeded { what: "g-path", n, max: XI_MAX });
            }
            let b = analyze(kind, &o, &rho)?;
            let chain = clifford_chain(&o, &rho)?;
            let tb = triangle_bounds(&o, &rho)?;
            let mut bounds = json!({ "clifford_chain": chain, "clifford_char_bounds": tb,
                "haar_max": haar_max_bound(d, o.hs_norm_sq()) });
            if let Some(gp) = gamma_pow {
                bounds["gamma_power"] = json!(gp);
                bounds["doped_char_bounds"] = to_value(&doped_bounds(gp, &o, &rho)?);
            }
            let closed = match b.method {
                Method::GPath => "g_path",
                Method::CharFunction => "vstar_clifford",
                Method::FidelityClosedForm => "fidelity_closed_form",
            };
            let results = json!({ "v": b.v, "vstar": b.vstar, "method": b.method, "closed_form": closed,
                "vr": vr_list(b.v, b.vstar, &req.reuses)?, "bounds": bounds,
                "expectation": rho.trace_with(&o).re });
            (results, json!({ "hs_norm_sq": o.hs_norm_sq(), "purity": rho.purity() }))
        }
    };
    Ok(Report::new("analytic", config, results, diagnostics))
}

// ---------------------------------------------------------------------------
// sre

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SreRequest {
    #[serde(default)]
    pub family: Option<SreFamily>,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub n: Option<usize>,
}

pub fn cmd_sre(req: &SreRequest) -> Result<Report> {
    match (&req.family, &req.target) {
        (Some(f), None) => {
            let n = f.n();
            if req.n.is_some_and(|m| m != n) {
                return Err(Error::DimensionMismatch { expected: n, found: req.n.unwrap_or(0) });
            }
            let closed = sre2_closed(f)?;
            let direct = if n <= CHAR_MAX { Some(sre2(&f.state()?)?) } else { None };
            let mut diag = json!({ "direct_available": direct.is_some(), "char_cutoff": CHAR_MAX });
            if let Some(dv) = direct {
                diag["closed_vs_direct"] = json!((dv - closed).abs());
            }
            if matches!(f, SreFamily::PhasedW { .. } | SreFamily::W { .. }) {
                let (lo, hi) = phased_w_bounds(n);
                diag["phased_w_bounds"] = json!([lo, if hi.is_finite() { Some(hi) } else { None }]);
            }
            Ok(Report::new(
                "sre",
                json!({ "family": f, "n": n }),
                json!({ "m2": closed, "m2_closed": closed, "m2_direct": direct }),
                diag,
            ))
        }
        (None, Some(t)) => {
            let n = req.n.ok_or_else(|| Error::InvalidParameter("target needs n".into()))?;
            let s = t.state(n)?;
            let m = sre2(&s)?;
            Ok(Report::new("sre", json!({ "target": t, "n": n }), json!({ "m2": m, "m2_direct": m }), json!({})))
        }
        _ => invalid("give exactly one of family or target"),
    }
}

// ---------------------------------------------------------------------------
// crossmoment

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaMode {
    /// κ closed forms on the projector basis (n ≤ 3).
    Closed,
    /// Exhaustive Clifford group average (n ≤ 2).
    Enumerate,
    /// Monte Carlo over the ensemble (n ≤ 2).
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSpec {
    Computational,
    /// Columns of `(T†H†)` on the last `k` qubits.
    TLayer { k: usize },
}

fn default_basis() -> BasisSpec {
    BasisSpec::Computational
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossMomentRequest {
    pub n: usize,
    pub ensemble: EnsembleKind,
    pub mode: OmegaMode,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_basis")]
    pub basis: BasisSpec,
    /// Binary dump of the dense Ω (n ≤ 2).
    #[serde(default)]
    pub export: Option<PathBuf>,
}

pub const DEFAULT_OMEGA_SAMPLES: usize = 20000;

fn omega_summary<A: FourCopy + ?Sized>(om: &A, proj: &Projectors, kind: EnsembleKind, exact_hint: bool) -> Result<Value> {
    let n = om.qubits();
    let d = (n as f64).exp2();
    let kappa = kappa_extract(om, proj)?;
    let hint = g_coefficients(kind, d)?;
    let fit = gi_fit(om, Some(&hint))?;
    Ok(json!({ "kappa": kappa, "g_fit": fit.g.0, "g_fit_residual": fit.residual, "g_fit_unique": fit.unique,
        "g_closed": hint.0, "exact": exact_hint }))
}

pub fn cmd_crossmoment(req: &CrossMomentRequest) -> Result<Report> {
    let n = req.n;
    let spec = EnsembleSpec::new(n, req.ensemble)?;
    let kind = spec.canonical();
    let d = (n as f64).exp2();
    let basis = match req.basis {
        BasisSpec::Computational => None,
        BasisSpec::TLayer { k } => {
            if k > n {
                return invalid(format!("basis k={k} exceeds n={n}"));
            }
            Some(t_basis(n, k)?)
        }
    };
    let proj = projectors(n)?;
    let phi0 = crate::states::DenseState::basis(n, 0)?;
    let fid = DenseOperator::fidelity_observable(&phi0);
    let mut config = json!({ "n": n, "d": d, "ensemble": req.ensemble, "canonical_ensemble": kind, "mode": req.mode,
        "basis": req.basis, "export": req.export });
    let mut diag = json!({});
    let dense: Option<SmallOperator>;
    let mut results;
    match req.mode {
        OmegaMode::Closed => {
            if basis.is_some() {
                return invalid("closed mode covers the computational basis only");
            }
            let om = omega_closed(kind, n)?;
            results = omega_summary(&om, &proj, kind, true)?;
            results["kappa_closed"] = to_value(&kappa_closed(kind, n)?);
            diag["nnz"] = json!(om.nnz());
            diag["symmetry_defect"] = json!(om.symmetry_defect());
            dense = if n <= DENSE_OMEGA_MAX { Some(om.to_dense()?) } else { None };
            if let Some(dm) = &dense {
                results["vstar_fidelity_stabilizer"] = json!(vstar_via_omega(dm, &fid, &phi0.projector())?);
            }
        }
        OmegaMode::Enumerate | OmegaMode::Sampled => {
            let est = if req.mode == OmegaMode::Enumerate {
                if kind != EnsembleKind::Clifford {
                    return invalid("enumerate mode covers the Clifford ensemble only");
                }
                omega_empirical(n, UnitarySource::CliffordGroup, basis.as_ref())?
            } else {
                let seed = req.seed.ok_or_else(|| Error::InvalidParameter("sampled mode needs an explicit seed".into()))?;
                let samples = req.samples.unwrap_or(DEFAULT_OMEGA_SAMPLES);
                config["seed"] = json!(seed);
                omega_empirical(n, UnitarySource::Sampled { spec, samples, seed }, basis.as_ref())?
            };
            config["samples"] = json!(est.samples);
            results = omega_summary(&est.omega, &proj, kind, est.exact)?;
            let mut se = Vec::new();
            for j in 0..5 {
                se.push(est.stderr(|o| kappa_extract(o, &proj).map(|k| k.as_array()[j]).unwrap_or(f64::NAN)));
            }
            results["kappa_stderr"] = json!(se);
            if let Some(b) = &basis {
                let (l1, l2) = lambda12(b)?;
                results["lambda1"] = json!(l1);
                results["lambda2"] = json!(l2);
            } else {
                let closed = omega_closed(kind, n)?;
                results["kappa_closed"] = to_value(&kappa_closed(kind, n)?);
                diag["max_entry_gap_to_closed"] = json!(est.omega.distance_to(&closed));
                results["vstar_fidelity_stabilizer"] = json!(vstar_via_omega(&est.omega, &fid, &phi0.projector())?);
            }
            diag["hermiticity_error"] = json!(est.omega.hermiticity_error());
            dense = Some(est.omega);
        }
    }
    if basis.is_none() {
        results["vstar_fidelity_stabilizer_closed_form"] = json!(vstar_fidelity(kind, d, 0.0)?);
    }
    if let Some(dm) = &dense {
        diag["support_defect"] = json!(dm.support_defect(&proj.p_g)?);
        diag["partial_trace_defect"] = json!(partial_trace_defect(dm));
        let (s1, sinf) = dm.schatten_1_inf();
        diag["schatten_1"] = json!(s1);
        diag["schatten_inf"] = json!(sinf);
    }
    if let Some(path) = &req.export {
        let dm = dense.as_ref().ok_or(Error::CutoffExceeded { what: "dense Ω export", n, max: DENSE_OMEGA_MAX })?;
        let path = resolve_out_path(path);
        dm.write_binary(BufWriter::new(File::create(&path).map_err(io_err)?)).map_err(io_err)?;
        diag["exported"] = json!(path);
    }
    Ok(Report::new("crossmoment", config, results, diag))
}

// ---------------------------------------------------------------------------
// simulate

fn analytic_reference(cfg: &RunConfig, rho: &ShotState, o: &ShotObservable) -> Result<Option<(f64, f64, &'static str)>> {
    let d = (cfg.n as f64).exp2();
    let kind = canonical_kind(cfg.ensemble);
    // pure fidelity on its own target: closed forms at any n
    if let (ShotState::Pure(a), ShotObservable::Fidelity(b)) = (rho, o) {
        if (a.overlap(b) - 1.0).abs() < 1e-12 {
            let m2 = match &cfg.target {
                TargetSpec::Family { family } => Some(sre2_closed(family)?),
                _ if cfg.n <= CHAR_MAX => Some(sre2(a)?),
                _ => None,
            };
            if let Some(m2) = m2 {
                let b = analyze_fidelity(kind, d, m2, cfg.depolarizing)?;
                return Ok(Some((b.v, b.vstar, "fidelity_closed_form")));
            }
        }
    }
    if cfg.n <= XI_MAX {
        let r = rho.operator().depolarize(cfg.depolarizing)?;
        let b = analyze(kind, &o.operator(), &r)?;
        return Ok(Some((b.v, b.vstar, "dense_pair")));
    }
    Ok(None)
}

fn z(a: Option<f64>, b: f64, se: Option<f64>) -> Value {
    match (a, se) {
        (Some(a), Some(s)) if s > 0.0 => json!((a - b) / s),
        _ => Value::Null,
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let (rho, o) = crate::sim::resolve_inputs(cfg)?;
    let stats: EstimatorStats = run_experiment(cfg, &rho, &o)?;
    let mut results = json!({ "stats": stats });
    let mut diag = json!({ "mean_z": (stats.mean - stats.expected_mean) / stats.mean_se });
    if let Some((v, vs, src)) = analytic_reference(cfg, &rho, &o)? {
        let vr = crate::variance::vr_combine(v, vs, cfg.reuses)?;
        results["analytic"] = json!({ "v": v, "vstar": vs, "vr": vr, "source": src });
        diag["vr_z"] = z(Some(stats.vr_hat), vr, Some(stats.vr_se));
        diag["v_z"] = z(stats.v_hat, v, stats.v_se);
        diag["vstar_z"] = z(stats.vstar_hat, vs, stats.vstar_se);
        diag["vstar_conditional_z"] = z(Some(stats.vstar_conditional), vs, Some(stats.vstar_conditional_se));
    }
    Ok(Report::new("simulate", to_value(cfg), results, diag))
}

// ---------------------------------------------------------------------------
// figure

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureRequest {
    pub figure: FigureId,
    #[serde(default)]
    pub params: FigureParams,
}

pub fn cmd_figure(req: &FigureRequest) -> Result<Report> {
    let resolved = req.params.resolve(req.figure)?;
    let table = figure_dataset(req.figure, &req.params)?;
    let mut r = Report::new(
        "figure",
        to_value(&resolved),
        json!({ "columns": table.columns, "rows": table.rows }),
        json!({ "rows": table.rows.len() }),
    );
    r.table = Some(table);
    Ok(r)
}

// ---------------------------------------------------------------------------
// verify

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyRequest {
    pub suite: Suite,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn suite_table(rep: &SuiteReport) -> Table {
    let rows = rep
        .checks
        .iter()
        .map(|c| {
            vec![
                Cell::Text(c.name.clone()),
                Cell::Text(if c.passed { "pass" } else { "fail" }.into()),
                Cell::Num(c.measured),
                Cell::Num(c.expected.unwrap_or(f64::NAN)),
                Cell::Num(c.tolerance),
                Cell::Int(c.cases as i64),
            ]
        })
        .collect();
    Table {
        figure: None,
        columns: ["check", "status", "measured", "expected", "tolerance", "cases"].iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

pub fn cmd_verify(req: &VerifyRequest) -> Result<Report> {
    let seed = req.seed.unwrap_or(DEFAULT_SEED);
    let rep = run_suite(req.suite, seed)?;
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let mut r = Report::new(
        "verify",
        json!({ "suite": req.suite, "seed": seed }),
        json!({ "passed": rep.passed, "checks": rep.checks }),
        json!({ "failed": failed, "total": rep.checks.len() }),
    );
    r.ok = rep.passed;
    r.table = Some(suite_table(&rep));
    Ok(r)
}

// ---------------------------------------------------------------------------
// Dispatch on a request document

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandRequest {
    Analytic { request: AnalyticRequest },
    Sre { request: SreRequest },
    Crossmoment { request: CrossMomentRequest },
    Simulate { request: RunConfig },
    Figure { request: FigureRequest },
    Verify { request: VerifyRequest },
}

pub fn execute(req: &CommandRequest) -> Result<Report> {
    match req {
        CommandRequest::Analytic { request } => cmd_analytic(request),
        CommandRequest::Sre { request } => cmd_sre(request),
        CommandRequest::Crossmoment { request } => cmd_crossmoment(request),
        CommandRequest::Simulate { request } => cmd_simulate(request),
        CommandRequest::Figure { request } => cmd_figure(request),
        CommandRequest::Verify { request } => cmd_verify(request),
    }
}

// ---------------------------------------------------------------------------
// Output

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("i/o: {e}"))
}

/// Relative paths go under `$THRIFTY_OUT_DIR` when it is set.
pub fn resolve_out_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

pub fn write_json<W: Write>(r: &Report, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, r).map_err(io_err)?;
    writeln!(w).map_err(io_err)
}

/// Key/value rows flattened from `results` when a report has no table.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.into(), s.clone())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

pub fn write_csv<W: Write>(r: &Report, mut w: W) -> Result<()> {
    writeln!(w, "# thrifty {} {}", r.version, r.command).map_err(io_err)?;
    writeln!(w, "# config {}", serde_json::to_string(&r.config).map_err(io_err)?).map_err(io_err)?;
    let mut cw = csv::Writer::from_writer(w);
    match &r.table {
        Some(t) => {
            cw.write_record(&t.columns).map_err(io_err)?;
            for row in &t.rows {
                cw.write_record(row.iter().map(|c| c.to_string())).map_err(io_err)?;
            }
        }
        None => {
            cw.write_record(["key", "value"]).map_err(io_err)?;
            let mut kv = Vec::new();
            flatten("", &r.results, &mut kv);
            for (k, v) in kv {
                cw.write_record([k, v]).map_err(io_err)?;
            }
        }
    }
    cw.flush().map_err(io_err)
}

pub fn write_report<W: Write>(r: &Report, format: Format, w: W) -> Result<()> {
    match format {
        Format::Json => write_json(r, w),
        Format::Csv => write_csv(r, w),
    }
}
