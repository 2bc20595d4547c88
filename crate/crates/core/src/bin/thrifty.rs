use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use thrifty_shadow::report::{
    self, AnalyticRequest, BasisSpec, CrossMomentRequest, FigureRequest, Format, OmegaMode, Report, Scenario,
    SreRequest, VerifyRequest,
};
use thrifty_shadow::sim::{FigureId, FigureParams, ObservableSpec, RunConfig, TargetSpec};
use thrifty_shadow::states::SreFamily;
use thrifty_shadow::variance::EnsembleKind;
use thrifty_shadow::verify::Suite;

#[derive(Parser)]
#[command(name = "thrifty", version, about = "Variance analytics and Monte Carlo for thrifty shadow estimation")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Fmt::Json, global = true)]
    format: Fmt,
    /// Output file; relative paths land in $THRIFTY_OUT_DIR when set. Stdout by default.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON request document for the subcommand (replaces its flags).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form V, V_*, V_R and bounds.
    Analytic(AnalyticArgs),
    /// Stabilizer 2-Rényi entropy of a named family.
    Sre(SreArgs),
    /// Fourth cross-moment operator: κ's, g fit and structural checks.
    Crossmoment(CrossArgs),
    /// One Monte Carlo thrifty shadow run.
    Simulate(SimArgs),
    /// Figure dataset table.
    Figure(FigureArgs),
    /// Run a named invariant suite; nonzero exit on failure.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Ens {
    Fourdesign,
    Clifford,
    Interleaved,
    Simplet,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_enum)]
    ensemble: Option<Ens>,
    /// T gates per layer (interleaved) or T-layer width (simplet).
    #[arg(long)]
    k: Option<usize>,
    /// Number of interleaved layers.
    #[arg(long)]
    l: Option<usize>,
}

impl EnsembleArgs {
    fn kind(&self) -> Result<EnsembleKind> {
        let e = self.ensemble.context("--ensemble is required")?;
        Ok(match e {
            Ens::Fourdesign => EnsembleKind::FourDesign,
            Ens::Clifford => EnsembleKind::Clifford,
            Ens::Interleaved => EnsembleKind::Interleaved {
                k: self.k.context("interleaved needs --k")?,
                l: self.l.context("interleaved needs --l")?,
            },
            Ens::Simplet => EnsembleKind::SimpleT { k: self.k.context("simplet needs --k")? },
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Fam {
    W,
    WTheta,
    PhasedW,
    Snk,
}

fn family(f: Fam, n: Option<usize>, k: Option<usize>, theta: Option<f64>, thetas: &Option<Vec<f64>>) -> Result<SreFamily> {
    let need_n = || n.context("family needs --n");
    Ok(match f {
        Fam::W => SreFamily::W { n: need_n()? },
        Fam::WTheta => SreFamily::WTheta { n: need_n()?, theta: theta.context("w-theta needs --theta (radians)")? },
        Fam::PhasedW => SreFamily::PhasedW { thetas: thetas.clone().context("phased-w needs --thetas (radians)")? },
        Fam::Snk => SreFamily::Snk {
            n: need_n()?,
            k: k.context("snk needs a magic-qubit count")?,
            theta: theta.context("snk needs --theta (radians)")?,
        },
    })
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    ens: EnsembleArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<f64>,
    /// M₂ of the target (or use --family).
    #[arg(long)]
    m2: Option<f64>,
    #[arg(long, value_enum)]
    family: Option<Fam>,
    /// Magic-qubit count for --family snk.
    #[arg(long)]
    family_k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thetas: Option<Vec<f64>>,
    /// Fidelity F = ⟨φ|ρ|φ⟩ of a depolarized input.
    #[arg(long)]
    f: Option<f64>,
    /// Depolarizing strength.
    #[arg(long)]
    p: Option<f64>,
    /// Shorthand for F = 1, p = 0.
    #[arg(long)]
    fidelity_ideal: bool,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<u64>>,
}

#[derive(Args)]
struct SreArgs {
    #[arg(long, value_enum)]
    family: Option<Fam>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thetas: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Closed,
    Enumerate,
    Sampled,
}

#[derive(Args)]
struct CrossArgs {
    #[command(flatten)]
    ens: EnsembleArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Closed)]
    mode: Mode,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Measure in the T-layer basis on the last K qubits.
    #[arg(long)]
    basis_t: Option<usize>,
    /// Binary dump of the dense Ω.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    ens: EnsembleArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long)]
    circuits: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Computational-basis target index (default 0) unless --family is given.
    #[arg(long)]
    target_basis: Option<usize>,
    #[arg(long, value_enum)]
    family: Option<Fam>,
    #[arg(long)]
    family_k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thetas: Option<Vec<f64>>,
    /// Pauli label observable instead of the target fidelity.
    #[arg(long)]
    pauli: Option<String>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct FigureArgs {
    figure: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long)]
    circuits: Option<usize>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// charfuncs | commutant | omega | variance-oracle | bounds | all
    suite: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load<T: DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn analytic_request(a: &AnalyticArgs) -> Result<AnalyticRequest> {
    let fam = match a.family {
        Some(f) => Some(family(f, a.n, a.family_k, a.theta, &a.thetas)?),
        None => None,
    };
    if a.fidelity_ideal && (a.f.is_some() || a.p.is_some()) {
        bail!("--fidelity-ideal excludes --f and --p");
    }
    let fidelity = if a.fidelity_ideal { Some(1.0) } else { a.f };
    Ok(AnalyticRequest {
        ensemble: a.ens.kind()?,
        n: a.n,
        d: a.d,
        scenario: Scenario::Fidelity { m2: a.m2, family: fam, fidelity, depolarizing: a.p },
        reuses: a.r.clone().unwrap_or_else(|| vec![1]),
    })
}

fn sim_config(a: &SimArgs) -> Result<RunConfig> {
    let n = a.n.context("--n is required")?;
    let target = match a.family {
        Some(f) => {
            if a.target_basis.is_some() {
                bail!("give --target-basis or --family, not both");
            }
            TargetSpec::Family { family: family(f, Some(n), a.family_k, a.theta, &a.thetas)? }
        }
        None => TargetSpec::Basis { index: a.target_basis.unwrap_or(0) },
    };
    Ok(RunConfig {
        n,
        ensemble: a.ens.kind()?,
        reuses: a.r.context("--r is required")?,
        num_circuits: a.circuits.context("--circuits is required")?,
        seed: a.seed.context("simulate needs an explicit --seed")?,
        target,
        observable: match &a.pauli {
            Some(l) => ObservableSpec::Pauli { label: l.clone() },
            None => ObservableSpec::Fidelity,
        },
        depolarizing: a.p.unwrap_or(0.0),
    })
}

fn emit(r: &Report, format: Format, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => {
            let path = report::resolve_out_path(p);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            report::write_report(r, format, BufWriter::new(f))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report::write_report(r, format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let format = match cli.format {
        Fmt::Json => Format::Json,
        Fmt::Csv => Format::Csv,
    };
    let cfg = cli.config.as_ref();
    let reports: Vec<Report> = match &cli.cmd {
        Cmd::Analytic(a) => {
            let req = match cfg {
                Some(p) => load(p)?,
                None => analytic_request(a)?,
            };
            vec![report::cmd_analytic(&req)?]
        }
        Cmd::Sre(a) => {
            let req = match cfg {
                Some(p) => load(p)?,
                None => SreRequest {
                    family: Some(family(a.family.context("--family is required")?, a.n, a.k, a.theta, &a.thetas)?),
                    target: None,
                    n: None,
                },
            };
            vec![report::cmd_sre(&req)?]
        }
        Cmd::Crossmoment(a) => {
            let req = match cfg {
                Some(p) => load(p)?,
                None => CrossMomentRequest {
                    n: a.n.context("--n is required")?,
                    ensemble: a.ens.kind()?,
                    mode: match a.mode {
                        Mode::Closed => OmegaMode::Closed,
                        Mode::Enumerate => OmegaMode::Enumerate,
                        Mode::Sampled => OmegaMode::Sampled,
                    },
                    samples: a.samples,
                    seed: a.seed,
                    basis: match a.basis_t {
                        Some(k) => BasisSpec::TLayer { k },
                        None => BasisSpec::Computational,
                    },
                    export: a.export.clone(),
                },
            };
            vec![report::cmd_crossmoment(&req)?]
        }
        Cmd::Simulate(a) => {
            let req: RunConfig = match cfg {
                Some(p) => load(p)?,
                None => sim_config(a)?,
            };
            vec![report::cmd_simulate(&req)?]
        }
        Cmd::Figure(a) => {
            let req = match cfg {
                Some(p) => load(p)?,
                None => FigureRequest {
                    figure: a.figure.as_deref().context("figure id is required")?.parse::<FigureId>()?,
                    params: FigureParams {
                        n: a.n,
                        ns: a.ns.clone(),
                        circuits: a.circuits,
                        reuses: a.r,
                        samples: a.samples,
                        grid: a.grid.clone(),
                        seed: a.seed,
                    },
                },
            };
            vec![report::cmd_figure(&req)?]
        }
        Cmd::Verify(a) => {
            let reqs: Vec<VerifyRequest> = match cfg {
                Some(p) => vec![load(p)?],
                None => match a.suite.as_deref() {
                    None | Some("all") => Suite::ALL.iter().map(|&s| VerifyRequest { suite: s, seed: a.seed }).collect(),
                    Some(s) => vec![VerifyRequest { suite: s.parse()?, seed: a.seed }],
                },
            };
            reqs.iter().map(report::cmd_verify).collect::<thrifty_shadow::Result<_>>()?
        }
    };
    if reports.len() > 1 && cli.out.is_some() {
        bail!("--out takes a single suite; run them one at a time");
    }
    for r in &reports {
        emit(r, format, &cli.out)?;
    }
    Ok(reports.iter().all(|r| r.ok))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        // downstream closed the pipe (e.g. `| head`)
        Err(e) if format!("{e:#}").contains("Broken pipe") => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
