//! Monte Carlo thrifty shadow experiments.
//!
//! Each circuit is an independent work item with its own ChaCha stream
//! `(seed, circuit index)`. Results are collected in index order before any
//! reduction, so output is bit-identical regardless of thread count.
//!
//! Shots: the outcome distribution `|⟨b|Uψ⟩|²` is computed once per circuit
//! and `R` outcomes are drawn from it. A depolarized input `(1−p)ψ + p·1/d` is
//! simulated by classical mixing: each shot independently takes a uniformly
//! random outcome with probability `p`, which is exactly the distribution of
//! `U(1/d)U† = 1/d`.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{clifford_to_circuit, random_clifford, Gate, GateSequence};
use crate::dense::{apply_sequence, dense_unitary, haar_unitary, haar_vector, CMat, CVec, STATEVECTOR_MAX};
use crate::error::{invalid, Error, Result};
use crate::pauli::PauliString;
use crate::states::{cross_chars, sre2, sre2_closed, w_state, DenseOperator, DenseState, SreFamily};
use crate::variance::{
    average_fidelity, clifford_chain, v_fidelity_depolarized, vr_combine, vstar_4design_fidelity_depolarized,
    vstar_clifford_fidelity, vstar_clifford_fidelity_depolarized, vstar_fidelity, vstar_ukl_fidelity, EnsembleKind,
    EnsembleSpec,
};

/// Largest register for which `FourDesign` unitaries are drawn as dense Haar matrices.
pub const HAAR_UNITARY_MAX: usize = 2;
/// Largest register for a dense Haar unitary inside [`run_experiment`].
pub const HAAR_RUN_MAX: usize = 8;

/// Independent stream for work item `index` under a run seed.
pub fn circuit_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampledUnitary {
    Circuit(GateSequence),
    Dense(CMat),
}

impl SampledUnitary {
    pub fn to_dense(&self, n: usize) -> Result<CMat> {
        match self {
            SampledUnitary::Circuit(seq) => dense_unitary(seq, n),
            SampledUnitary::Dense(u) => Ok(u.clone()),
        }
    }

    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        match self {
            SampledUnitary::Circuit(seq) => {
                let mut out = v.clone();
                apply_sequence(out.as_mut_slice(), seq)?;
                Ok(out)
            }
            SampledUnitary::Dense(u) => Ok(u * v),
        }
    }
}

fn push_clifford<R: Rng + ?Sized>(seq: &mut GateSequence, rng: &mut R) -> Result<()> {
    let c = random_clifford(seq.n, rng)?;
    seq.extend(&clifford_to_circuit(&c));
    Ok(())
}

/// One draw from the ensemble. T gates always sit on qubits `n−k..n−1`.
pub fn sample_unitary<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<SampledUnitary> {
    spec.validate()?;
    let n = spec.n;
    let mut seq = GateSequence::new(n);
    match spec.kind {
        EnsembleKind::FourDesign => {
            if n > HAAR_UNITARY_MAX {
                return Err(Error::CutoffExceeded { what: "dense Haar unitary", n, max: HAAR_UNITARY_MAX });
            }
            return Ok(SampledUnitary::Dense(haar_unitary(1 << n, rng)));
        }
        EnsembleKind::Clifford => push_clifford(&mut seq, rng)?,
        EnsembleKind::Interleaved { k, l } => {
            push_clifford(&mut seq, rng)?;
            for _ in 0..l {
                for q in n - k..n {
                    seq.push(Gate::T(q))?;
                }
                push_clifford(&mut seq, rng)?;
            }
        }
        EnsembleKind::SimpleT { k } => {
            push_clifford(&mut seq, rng)?;
            for q in n - k..n {
                seq.push(Gate::T(q))?;
                seq.push(Gate::H(q))?;
            }
        }
    }
    Ok(SampledUnitary::Circuit(seq))
}

/// `(d+1)·⟨b|UOU†|b⟩`, given `⟨b|UOU†|b⟩`; `O` must be traceless.
pub fn snapshot_value(d: usize, diag_b: f64) -> f64 {
    (d as f64 + 1.0) * diag_b
}

/// Snapshot for outcome `b` after `U` acted on the input.
pub fn snapshot_estimate(u: &SampledUnitary, o: &ShotObservable, b: usize) -> Result<f64> {
    let d = 1usize << o.n();
    if b >= d {
        return Err(Error::IndexOutOfRange { idx: b, n: o.n() });
    }
    Ok(snapshot_value(d, observable_diagonal(u, o)?[b]))
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Basis { index: usize },
    Family { family: SreFamily },
    Amplitudes { re: Vec<f64>, im: Vec<f64> },
    /// Haar-random pure state from its own seed.
    Haar { seed: u64 },
}

impl TargetSpec {
    pub fn state(&self, n: usize) -> Result<DenseState> {
        let s = match self {
            TargetSpec::Basis { index } => DenseState::basis(n, *index)?,
            TargetSpec::Family { family } => family.state()?,
            TargetSpec::Amplitudes { re, im } => {
                if re.len() != im.len() {
                    return Err(Error::DimensionMismatch { expected: re.len(), found: im.len() });
                }
                DenseState::normalized(n, re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect())?
            }
            TargetSpec::Haar { seed } => DenseState::haar(n, &mut ChaCha8Rng::seed_from_u64(*seed)),
        };
        if s.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.n() });
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `|φ⟩⟨φ| − 1/d` for the run target.
    Fidelity,
    Pauli { label: String },
    /// `|ψ⟩⟨ψ| − 1/d` for some other pure state.
    Projector { target: TargetSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub ensemble: EnsembleKind,
    pub reuses: u64,
    pub num_circuits: usize,
    pub seed: u64,
    pub target: TargetSpec,
    pub observable: ObservableSpec,
    #[serde(default)]
    pub depolarizing: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        EnsembleSpec::new(self.n, self.ensemble)?;
        if self.reuses == 0 {
            return invalid("reuses R must be at least 1");
        }
        if self.num_circuits < 2 {
            return invalid("need at least 2 circuits for the between-circuit variance");
        }
        if self.n > STATEVECTOR_MAX {
            return Err(Error::CutoffExceeded { what: "run_experiment", n: self.n, max: STATEVECTOR_MAX });
        }
        if !(0.0..=1.0).contains(&self.depolarizing) {
            return invalid(format!("depolarizing strength {} outside [0,1]", self.depolarizing));
        }
        Ok(())
    }

    pub fn spec(&self) -> EnsembleSpec {
        EnsembleSpec { n: self.n, kind: self.ensemble }
    }
}

/// Noiseless input state (depolarizing is applied from the config).
#[derive(Clone, Debug)]
pub enum ShotState {
    Pure(DenseState),
    Mixed(DenseOperator),
}

#[derive(Clone, Debug)]
pub enum ShotObservable {
    /// `|φ⟩⟨φ| − 1/d`
    Fidelity(DenseState),
    Dense(DenseOperator),
}

impl ShotObservable {
    pub fn n(&self) -> usize {
        match self {
            ShotObservable::Fidelity(s) => s.n(),
            ShotObservable::Dense(o) => o.n(),
        }
    }

    pub fn operator(&self) -> DenseOperator {
        match self {
            ShotObservable::Fidelity(s) => DenseOperator::fidelity_observable(s),
            ShotObservable::Dense(o) => o.clone(),
        }
    }
}

impl ShotState {
    pub fn n(&self) -> usize {
        match self {
            ShotState::Pure(s) => s.n(),
            ShotState::Mixed(r) => r.n(),
        }
    }

    pub fn operator(&self) -> DenseOperator {
        match self {
            ShotState::Pure(s) => s.projector(),
            ShotState::Mixed(r) => r.clone(),
        }
    }

    /// `(weight, vector)` pairs of a spectral decomposition.
    fn components(&self) -> Vec<(f64, CVec)> {
        match self {
            ShotState::Pure(s) => vec![(1.0, s.vector().clone())],
            ShotState::Mixed(r) => {
                let eig = SymmetricEigen::new(r.matrix().clone());
                eig.eigenvalues
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 1e-14)
                    .map(|(j, &w)| (w, eig.eigenvectors.column(j).into_owned()))
                    .collect()
            }
        }
    }
}

/// Observable for a run whose target state is `phi`.
pub fn resolve_observable(spec: &ObservableSpec, n: usize, phi: &DenseState) -> Result<ShotObservable> {
    Ok(match spec {
        ObservableSpec::Fidelity => ShotObservable::Fidelity(phi.clone()),
        ObservableSpec::Pauli { label } => {
            let p = PauliString::from_label(label)?;
            if p.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.n() });
            }
            let o = DenseOperator::pauli(&p)?;
            o.require_traceless()?;
            ShotObservable::Dense(o)
        }
        ObservableSpec::Projector { target } => ShotObservable::Fidelity(target.state(n)?),
    })
}

/// Resolve target and observable specs.
pub fn resolve_inputs(cfg: &RunConfig) -> Result<(ShotState, ShotObservable)> {
    let phi = cfg.target.state(cfg.n)?;
    let obs = resolve_observable(&cfg.observable, cfg.n, &phi)?;
    Ok((ShotState::Pure(phi), obs))
}

// ---------------------------------------------------------------------------
// Estimator

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub circuits: usize,
    pub reuses: u64,
    pub mean: f64,
    pub mean_se: f64,
    /// `tr(Oρ_p)`
    pub expected_mean: f64,
    /// Variance of one R-shot circuit mean.
    pub vr_hat: f64,
    pub vr_se: f64,
    /// ANOVA estimates (need R ≥ 2).
    pub v_hat: Option<f64>,
    pub v_se: Option<f64>,
    pub vstar_hat: Option<f64>,
    pub vstar_se: Option<f64>,
    /// Sample variance of the exact per-circuit conditional means.
    pub vstar_conditional: f64,
    pub vstar_conditional_se: f64,
}

struct CircuitResult {
    mean: f64,
    ss: f64,
    cond: f64,
}

fn observable_diagonal(u: &SampledUnitary, o: &ShotObservable) -> Result<Vec<f64>> {
    let n = o.n();
    let d = 1usize << n;
    match o {
        ShotObservable::Fidelity(phi) => {
            let v = u.apply(phi.vector())?;
            Ok(v.iter().map(|a| a.norm_sqr() - 1.0 / d as f64).collect())
        }
        ShotObservable::Dense(op) => {
            let um = u.to_dense(n)?;
            let m = &um * op.matrix();
            Ok((0..d).map(|b| (0..d).map(|k| (m[(b, k)] * um[(b, k)].conj()).re).sum()).collect())
        }
    }
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().expect("nonempty");
    let x = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= x).min(cdf.len() - 1)
}

/// Per-circuit evolution and shots.
fn one_circuit(
    cfg: &RunConfig,
    comps: &[(f64, CVec)],
    obs: &ShotObservable,
    haar_shortcut: bool,
    index: usize,
) -> Result<CircuitResult> {
    let d = 1usize << cfg.n;
    let mut rng = circuit_rng(cfg.seed, index as u64);
    let (probs, diag) = if haar_shortcut {
        // O = ψψ† − 1/d with ψ the pure input: only Uψ matters, and it is Haar distributed.
        let v = haar_vector(d, &mut rng);
        let p: Vec<f64> = v.iter().map(|a| a.norm_sqr()).collect();
        let dg: Vec<f64> = p.iter().map(|x| x - 1.0 / d as f64).collect();
        (p, dg)
    } else {
        let u = if cfg.ensemble == EnsembleKind::FourDesign {
            SampledUnitary::Dense(haar_unitary(d, &mut rng))
        } else {
            sample_unitary(&cfg.spec(), &mut rng)?
        };
        let mut p = vec![0.0; d];
        for (w, v) in comps {
            let uv = u.apply(v)?;
            for (pb, a) in p.iter_mut().zip(uv.iter()) {
                *pb += w * a.norm_sqr();
            }
        }
        (p, observable_diagonal(&u, obs)?)
    };
    let vals: Vec<f64> = diag.iter().map(|&x| snapshot_value(d, x)).collect();
    let pdep = cfg.depolarizing;
    let uniform_mean = vals.iter().sum::<f64>() / d as f64;
    let cond = (1.0 - pdep) * probs.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>() + pdep * uniform_mean;
    let mut cdf = probs;
    let mut acc = 0.0;
    for c in cdf.iter_mut() {
        acc += *c;
        *c = acc;
    }
    // Welford over the R shots
    let (mut mean, mut ss) = (0.0, 0.0);
    for s in 0..cfg.reuses {
        let b = if pdep > 0.0 && rng.random::<f64>() < pdep { rng.random_range(0..d) } else { draw(&cdf, &mut rng) };
        let x = vals[b];
        let delta = x - mean;
        mean += delta / (s + 1) as f64;
        ss += delta * (x - mean);
    }
    Ok(CircuitResult { mean, ss, cond })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Thrifty shadow run: `num_circuits` draws of `U`, `R` shots each.
pub fn run_experiment(cfg: &RunConfig, rho: &ShotState, o: &ShotObservable) -> Result<EstimatorStats> {
    cfg.validate()?;
    if rho.n() != cfg.n || o.n() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, found: rho.n().max(o.n()) });
    }
    let op = o.operator();
    op.require_traceless()?;
    let haar_shortcut = cfg.ensemble == EnsembleKind::FourDesign
        && match (rho, o) {
            (ShotState::Pure(a), ShotObservable::Fidelity(b)) => (a.overlap(b) - 1.0).abs() < 1e-12,
            _ => false,
        };
    if cfg.ensemble == EnsembleKind::FourDesign && !haar_shortcut && cfg.n > HAAR_RUN_MAX {
        return Err(Error::CutoffExceeded { what: "dense Haar unitary", n: cfg.n, max: HAAR_RUN_MAX });
    }
    let comps = rho.components();
    let results = (0..cfg.num_circuits)
        .into_par_iter()
        .map(|i| one_circuit(cfg, &comps, o, haar_shortcut, i))
        .collect::<Result<Vec<_>>>()?;

    let nc = cfg.num_circuits as f64;
    let r = cfg.reuses as f64;
    let means: Vec<f64> = results.iter().map(|c| c.mean).collect();
    let (grand, sd_means) = mean_sd(&means);
    let vr_hat = sd_means * sd_means;
    let z: Vec<f64> = means.iter().map(|m| (m - grand).powi(2) * nc / (nc - 1.0)).collect();
    let vr_se = mean_sd(&z).1 / nc.sqrt();
    let (v_hat, v_se, vstar_hat, vstar_se) = if cfg.reuses >= 2 {
        let s2: Vec<f64> = results.iter().map(|c| c.ss / (r - 1.0)).collect();
        let u: Vec<f64> = z.iter().zip(&s2).map(|(zi, si)| zi - si / r).collect();
        let w: Vec<f64> = u.iter().zip(&s2).map(|(ui, si)| ui + si).collect();
        let msw = s2.iter().sum::<f64>() / nc;
        let vstar = vr_hat - msw / r;
        (Some(vstar + msw), Some(mean_sd(&w).1 / nc.sqrt()), Some(vstar), Some(mean_sd(&u).1 / nc.sqrt()))
    } else {
        (None, None, None, None)
    };
    let conds: Vec<f64> = results.iter().map(|c| c.cond).collect();
    let (cm, csd) = mean_sd(&conds);
    let cz: Vec<f64> = conds.iter().map(|c| (c - cm).powi(2) * nc / (nc - 1.0)).collect();
    let expected = (1.0 - cfg.depolarizing) * rho.operator().trace_with(&op).re;
    Ok(EstimatorStats {
        circuits: cfg.num_circuits,
        reuses: cfg.reuses,
        mean: grand,
        mean_se: sd_means / nc.sqrt(),
        expected_mean: expected,
        vr_hat,
        vr_se,
        v_hat,
        v_se,
        vstar_hat,
        vstar_se,
        vstar_conditional: csd * csd,
        vstar_conditional_se: mean_sd(&cz).1 / nc.sqrt(),
    })
}

/// `run_experiment` with target and observable taken from the config.
pub fn run_config(cfg: &RunConfig) -> Result<EstimatorStats> {
    let (rho, o) = resolve_inputs(cfg)?;
    run_experiment(cfg, &rho, &o)
}

// ---------------------------------------------------------------------------
// Figure datasets

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    RandomStates,
    VarTypes,
    InterleavedCompare,
    Depolarizing,
    UpperBoundScatter,
    RatioScatter,
    EnsembleCompare,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::RandomStates,
        FigureId::VarTypes,
        FigureId::InterleavedCompare,
        FigureId::Depolarizing,
        FigureId::UpperBoundScatter,
        FigureId::RatioScatter,
        FigureId::EnsembleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::RandomStates => "random_states",
            FigureId::VarTypes => "var_types",
            FigureId::InterleavedCompare => "interleaved_compare",
            FigureId::Depolarizing => "depolarizing",
            FigureId::UpperBoundScatter => "upper_bound_scatter",
            FigureId::RatioScatter => "ratio_scatter",
            FigureId::EnsembleCompare => "ensemble_compare",
        }
    }
}

impl std::str::FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown figure id '{s}'")))
    }
}

/// Scale knobs; unset fields take the per-figure defaults from [`FigureParams::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureParams {
    pub n: Option<usize>,
    pub ns: Option<Vec<usize>>,
    pub circuits: Option<usize>,
    pub reuses: Option<u64>,
    pub samples: Option<usize>,
    pub grid: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

/// Fully materialized parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedFigure {
    pub figure: FigureId,
    pub n: usize,
    pub ns: Vec<usize>,
    pub circuits: usize,
    pub reuses: u64,
    pub samples: usize,
    pub grid: Vec<f64>,
    pub seed: Option<u64>,
}

impl FigureParams {
    pub fn resolve(&self, id: FigureId) -> Result<ResolvedFigure> {
        let (n, ns, circuits, reuses, samples, grid): (usize, Vec<usize>, usize, u64, usize, Vec<f64>) = match id {
            FigureId::RandomStates => (8, (1..=8).collect(), 0, 0, 200, vec![]),
            FigureId::VarTypes => (12, (10..=16).collect(), 0, 0, 0, vec![]),
            FigureId::InterleavedCompare => (8, vec![], 5000, 100, 0, vec![]),
            FigureId::Depolarizing => (6, vec![], 20000, 10, 0, (0..=10).map(|i| i as f64 / 10.0).collect()),
            FigureId::UpperBoundScatter => (3, vec![], 0, 0, 1000, vec![]),
            FigureId::RatioScatter => (5, vec![], 0, 0, 1000, vec![]),
            FigureId::EnsembleCompare => (10, vec![10, 50], 0, 0, 0, vec![]),
        };
        let r = ResolvedFigure {
            figure: id,
            n: self.n.unwrap_or(n),
            ns: self.ns.clone().unwrap_or(ns),
            circuits: self.circuits.unwrap_or(circuits),
            reuses: self.reuses.unwrap_or(reuses),
            samples: self.samples.unwrap_or(samples),
            grid: self.grid.clone().unwrap_or(grid),
            seed: self.seed,
        };
        let randomized = match id {
            FigureId::RandomStates => r.samples > 0,
            FigureId::InterleavedCompare | FigureId::Depolarizing => r.circuits > 0,
            FigureId::UpperBoundScatter | FigureId::RatioScatter => true,
            FigureId::VarTypes | FigureId::EnsembleCompare => false,
        };
        if randomized && r.seed.is_none() {
            return invalid(format!("figure {} is randomized and needs an explicit seed", id.name()));
        }
        if matches!(id, FigureId::InterleavedCompare | FigureId::Depolarizing) && r.circuits == 1 {
            return invalid("need 0 (analytic only) or at least 2 circuits");
        }
        if id == FigureId::Depolarizing && r.grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return invalid("depolarizing grid must lie in [0,1]");
        }
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Num(x) if x.is_nan() => write!(f, "nan"),
            Cell::Num(x) => write!(f, "{x:.12e}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Num(x.unwrap_or(f64::NAN))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub figure: Option<FigureId>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(figure: FigureId, cols: &[&str]) -> Self {
        Table { figure: Some(figure), columns: cols.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column, NaN for text cells.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column(name)?;
        Some(self.rows.iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect())
    }
}

pub fn figure_dataset(which: FigureId, params: &FigureParams) -> Result<Table> {
    let p = params.resolve(which)?;
    match which {
        FigureId::RandomStates => fig_random_states(&p),
        FigureId::VarTypes => fig_var_types(&p),
        FigureId::InterleavedCompare => fig_interleaved(&p),
        FigureId::Depolarizing => fig_depolarizing(&p),
        FigureId::UpperBoundScatter => fig_upper_bound(&p),
        FigureId::RatioScatter => fig_ratio(&p),
        FigureId::EnsembleCompare => fig_ensemble_compare(&p),
    }
}

fn dim(n: usize) -> f64 {
    (n as f64).exp2()
}

fn fig_random_states(p: &ResolvedFigure) -> Result<Table> {
    let mut t = Table::new(
        FigureId::RandomStates,
        &["n", "v", "vstar_mean", "v10", "v1000", "vstar_cl_sample_mean", "vstar_cl_sample_se"],
    );
    for &n in &p.ns {
        let d = dim(n);
        let (v, vs) = average_fidelity(d);
        let (mut sm, mut sse) = (f64::NAN, f64::NAN);
        if p.samples >= 2 && n <= crate::states::CHAR_MAX {
            let seed = p.seed.expect("checked in resolve");
            let vals = (0..p.samples)
                .into_par_iter()
                .map(|i| {
                    let phi = DenseState::haar(n, &mut circuit_rng(seed ^ n as u64, i as u64));
                    vstar_clifford_fidelity(d, sre2(&phi)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let (m, sd) = mean_sd(&vals);
            sm = m;
            sse = sd / (p.samples as f64).sqrt();
        }
        t.push(vec![n.into(), v.into(), vs.into(), vr_combine(v, vs, 10)?.into(), vr_combine(v, vs, 1000)?.into(), sm.into(), sse.into()]);
    }
    Ok(t)
}

fn fig_var_types(p: &ResolvedFigure) -> Result<Table> {
    let mut t = Table::new(FigureId::VarTypes, &["n", "family", "m2", "ensemble", "vstar"]);
    let quarter = std::f64::consts::FRAC_PI_4;
    for &n in &p.ns {
        let d = dim(n);
        let fams: [(&str, SreFamily); 3] = [
            ("w", SreFamily::W { n }),
            ("snk_k2", SreFamily::Snk { n, k: 2.min(n), theta: quarter }),
            ("snk_kn", SreFamily::Snk { n, k: n, theta: quarter }),
        ];
        for (name, fam) in fams {
            let m2 = sre2_closed(&fam)?;
            t.push(vec![n.into(), name.into(), m2.into(), "clifford".into(), vstar_clifford_fidelity(d, m2)?.into()]);
            for k in [5usize, 10] {
                if k <= n {
                    let label = format!("interleaved_k{k}_l1");
                    t.push(vec![n.into(), name.into(), m2.into(), label.as_str().into(), vstar_ukl_fidelity(d, m2, k, 1)?.into()]);
                }
            }
        }
    }
    Ok(t)
}

/// Three ensembles at T-count `k`: 𝕌_{k,1}, 𝕌_{1,k}, Ũ_k.
pub fn compare_ensembles(k: usize) -> [(&'static str, EnsembleKind); 3] {
    [
        ("interleaved_k_1", EnsembleKind::Interleaved { k, l: 1 }),
        ("interleaved_1_k", EnsembleKind::Interleaved { k: 1, l: k }),
        ("simple_t", EnsembleKind::SimpleT { k }),
    ]
}

fn fig_interleaved(p: &ResolvedFigure) -> Result<Table> {
    let n = p.n;
    let d = dim(n);
    let fam = SreFamily::Snk { n, k: 2.min(n), theta: std::f64::consts::FRAC_PI_4 };
    let m2 = sre2_closed(&fam)?;
    let mut t = Table::new(
        FigureId::InterleavedCompare,
        &["k", "ensemble", "analytic", "mc_vstar", "mc_vstar_se", "mc_vstar_conditional", "mc_vstar_conditional_se"],
    );
    for k in 0..=n {
        for (name, kind) in compare_ensembles(k) {
            let a = vstar_fidelity(kind, d, m2)?;
            let mut row: Vec<Cell> = vec![k.into(), name.into(), a.into()];
            if p.circuits >= 2 {
                let cfg = RunConfig {
                    n,
                    ensemble: kind,
                    reuses: p.reuses,
                    num_circuits: p.circuits,
                    seed: p.seed.expect("checked in resolve") ^ ((k as u64) << 32) ^ (name.len() as u64),
                    target: TargetSpec::Family { family: fam.clone() },
                    observable: ObservableSpec::Fidelity,
                    depolarizing: 0.0,
                };
                let s = run_config(&cfg)?;
                row.extend([s.vstar_hat.into(), s.vstar_se.into(), s.vstar_conditional.into(), s.vstar_conditional_se.into()]);
            } else {
                row.extend([f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into()]);
            }
            t.push(row);
        }
    }
    Ok(t)
}

fn fig_depolarizing(p: &ResolvedFigure) -> Result<Table> {
    let n = p.n;
    let d = dim(n);
    let m2 = sre2_closed(&SreFamily::W { n })?;
    let mut t = Table::new(
        FigureId::Depolarizing,
        &["p", "vr_clifford", "vr_haar", "mc_clifford", "mc_clifford_se", "mc_haar", "mc_haar_se"],
    );
    let phi = w_state(n, &vec![0.0; n])?;
    for (gi, &pd) in p.grid.iter().enumerate() {
        let v = v_fidelity_depolarized(d, pd)?;
        let cl = vr_combine(v, vstar_clifford_fidelity_depolarized(d, m2, pd)?, p.reuses)?;
        let ha = vr_combine(v, vstar_4design_fidelity_depolarized(d, pd)?, p.reuses)?;
        let mut row: Vec<Cell> = vec![pd.into(), cl.into(), ha.into()];
        for (j, kind) in [EnsembleKind::Clifford, EnsembleKind::FourDesign].into_iter().enumerate() {
            if p.circuits >= 2 {
                let cfg = RunConfig {
                    n,
                    ensemble: kind,
                    reuses: p.reuses,
                    num_circuits: p.circuits,
                    seed: p.seed.expect("checked in resolve") ^ ((gi as u64) << 32) ^ j as u64,
                    target: TargetSpec::Family { family: SreFamily::W { n } },
                    observable: ObservableSpec::Fidelity,
                    depolarizing: pd,
                };
                let s = run_experiment(&cfg, &ShotState::Pure(phi.clone()), &ShotObservable::Fidelity(phi.clone()))?;
                row.extend([s.vr_hat.into(), s.vr_se.into()]);
            } else {
                row.extend([f64::NAN.into(), f64::NAN.into()]);
            }
        }
        t.push(row);
    }
    Ok(t)
}

fn fig_upper_bound(p: &ResolvedFigure) -> Result<Table> {
    let n = p.n;
    let o = DenseOperator::fidelity_observable(&w_state(n, &vec![0.0; n])?);
    let seed = p.seed.expect("checked in resolve");
    let rows = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let phi = DenseState::haar(n, &mut circuit_rng(seed, i as u64));
            clifford_chain(&o, &phi.projector())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(FigureId::UpperBoundScatter, &["sample", "vstar", "v_triangle", "cross_bound"]);
    for (i, c) in rows.into_iter().enumerate() {
        t.push(vec![i.into(), c.vstar.into(), c.v_triangle.into(), c.cross_bound.into()]);
    }
    Ok(t)
}

fn fig_ratio(p: &ResolvedFigure) -> Result<Table> {
    let n = p.n;
    let d = 1usize << n;
    let seed = p.seed.expect("checked in resolve");
    let phi = DenseState::haar(n, &mut circuit_rng(seed, 0)).projector();
    let o0 = DenseOperator::random_observable(n, &mut circuit_rng(seed, 1));
    let expected = o0.hs_norm_sq() / (d as f64 + 1.0);
    let rows = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let u = haar_unitary(d, &mut circuit_rng(seed, i as u64 + 2));
            let o = DenseOperator::hermitian(n, &u * o0.matrix() * u.adjoint())?;
            let cc = cross_chars(&phi, &o)?;
            Ok((cc.cross_norm_sq(), cc.twisted_dot()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(FigureId::RatioScatter, &["sample", "cross_norm_sq", "twisted_dot", "twisted_dot_average"]);
    for (i, (a, b)) in rows.into_iter().enumerate() {
        t.push(vec![i.into(), a.into(), b.into(), expected.into()]);
    }
    Ok(t)
}

fn fig_ensemble_compare(p: &ResolvedFigure) -> Result<Table> {
    let mut t = Table::new(FigureId::EnsembleCompare, &["n", "k", "ensemble", "vstar"]);
    for &n in &p.ns {
        let d = dim(n);
        for k in 0..=n {
            for (name, kind) in compare_ensembles(k) {
                t.push(vec![n.into(), k.into(), name.into(), vstar_fidelity(kind, d, 0.0)?.into()]);
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fid_cfg(n: usize, ensemble: EnsembleKind, reuses: u64, circuits: usize, seed: u64) -> RunConfig {
        RunConfig {
            n,
            ensemble,
            reuses,
            num_circuits: circuits,
            seed,
            target: TargetSpec::Basis { index: 0 },
            observable: ObservableSpec::Fidelity,
            depolarizing: 0.0,
        }
    }

    #[test]
    fn sampled_circuit_shapes() {
        let mut rng = circuit_rng(1, 0);
        let c = sample_unitary(&EnsembleSpec::new(1, EnsembleKind::Clifford).unwrap(), &mut rng).unwrap();
        let SampledUnitary::Circuit(seq) = c else { panic!() };
        assert!(seq.is_clifford());
        let c = sample_unitary(&EnsembleSpec::new(3, EnsembleKind::Interleaved { k: 2, l: 1 }).unwrap(), &mut rng).unwrap();
        let SampledUnitary::Circuit(seq) = c else { panic!() };
        assert_eq!(seq.t_count(), 2);
        let c = sample_unitary(&EnsembleSpec::new(3, EnsembleKind::SimpleT { k: 2 }).unwrap(), &mut rng).unwrap();
        let SampledUnitary::Circuit(seq) = c else { panic!() };
        let tail = &seq.gates[seq.len() - 4..];
        assert_eq!(tail, &[Gate::T(1), Gate::H(1), Gate::T(2), Gate::H(2)]);
        assert!(sample_unitary(&EnsembleSpec::new(3, EnsembleKind::FourDesign).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn snapshot_identity_values() {
        let phi = DenseState::basis(1, 0).unwrap();
        let o = ShotObservable::Fidelity(phi);
        let id = SampledUnitary::Circuit(GateSequence::new(1));
        assert!((snapshot_estimate(&id, &o, 0).unwrap() - 1.5).abs() < 1e-15);
        assert!((snapshot_estimate(&id, &o, 1).unwrap() + 1.5).abs() < 1e-15);
    }

    #[test]
    fn clifford_average_is_unbiased() {
        // exact expectation over Cl₁ and the outcome distribution
        let phi = DenseState::basis(1, 0).unwrap();
        let o = ShotObservable::Fidelity(phi.clone());
        let mut total = 0.0;
        let group = crate::clifford::enumerate_clifford(1).unwrap();
        for c in &group {
            let u = SampledUnitary::Circuit(clifford_to_circuit(c));
            let v = u.apply(phi.vector()).unwrap();
            for b in 0..2 {
                total += v[b].norm_sqr() * snapshot_estimate(&u, &o, b).unwrap();
            }
        }
        assert!((total / group.len() as f64 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_consistent() {
        let cfg = fid_cfg(2, EnsembleKind::Clifford, 5, 300, 11);
        let a = run_config(&cfg).unwrap();
        let b = run_config(&cfg).unwrap();
        assert_eq!(a, b);
        let v = a.v_hat.unwrap();
        let vs = a.vstar_hat.unwrap();
        assert!((v / 5.0 + 4.0 * vs / 5.0 - a.vr_hat).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_clifford_run() {
        let s = run_config(&fid_cfg(1, EnsembleKind::Clifford, 10, 4000, 2)).unwrap();
        assert!((s.vr_hat - 0.5).abs() < 4.0 * s.vr_se, "{s:?}");
        assert!((s.mean - 0.5).abs() < 4.0 * s.mean_se);
        // stabilizer target: V_* = (2d−2)/(d+2)
        assert!((s.vstar_conditional - 0.5).abs() < 4.0 * s.vstar_conditional_se);
    }

    #[test]
    fn pauli_observable_runs() {
        let mut cfg = fid_cfg(2, EnsembleKind::Clifford, 4, 200, 5);
        cfg.observable = ObservableSpec::Pauli { label: "ZZ".into() };
        let s = run_config(&cfg).unwrap();
        assert!((s.expected_mean - 1.0).abs() < 1e-12);
        assert!((s.mean - 1.0).abs() < 5.0 * s.mean_se.max(1e-3));
    }

    #[test]
    fn config_errors() {
        assert!(run_config(&fid_cfg(1, EnsembleKind::Clifford, 0, 10, 1)).is_err());
        assert!(run_config(&fid_cfg(1, EnsembleKind::Clifford, 2, 1, 1)).is_err());
        assert!(FigureParams::default().resolve(FigureId::Depolarizing).is_err());
        assert!("nope".parse::<FigureId>().is_err());
        let json = r#"{"n":1,"ensemble":{"kind":"clifford"},"reuses":1,"num_circuits":2,"seed":1,"target":{"type":"basis","index":0},"observable":{"type":"fidelity"},"extra":1}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }
}
