//! Named invariant suites behind `thrifty verify`.
//!
//! Every check reports the measured quantity (a value or the worst violation
//! over a random corpus), the tolerance and the number of cases. Corpora are
//! drawn from `circuit_rng(seed, i)`, so a suite is reproducible from its seed.

use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{clifford_to_circuit, random_clifford};
use crate::commutant::{
    commutation_defect, dimension_formula, dimension_traces, gi_fit, gram_spectrum, kappa_closed, kappa_extract,
    omega_closed, omega_empirical, omega_from_g, orbit_operators, pairing, partial_trace_defect, projectors,
    sigma44_enumerate, vstar_via_omega, xi_traces_dense, FourCopy, Irrep, SparseOp, UnitarySource,
};
use crate::dense::{dense_unitary, haar_vector};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::sim::circuit_rng;
use crate::states::{
    char_vector, cross_chars, phased_w_bounds, sre2, sre2_closed, top_d_sum, DenseOperator, DenseState, SreFamily,
};
use crate::variance::{
    alpha_beta, analyze_fidelity, average_fidelity, canonical_kind, clifford_chain, clifford_max_bound_fidelity,
    doped_bounds, doped_fidelity_window, g_clifford, g_coefficients, g_tuk, haar_max_bound,
    triangle_bounds, v_single, v_triangle, vr_combine, vstar_4design, vstar_4design_fidelity, vstar_clifford,
    vstar_clifford_fidelity, vstar_fidelity, vstar_fidelity_gpath, vstar_gpath, vstar_tuk_fidelity, xi_traces,
    EnsembleKind, EnsembleSpec, GAMMA,
};

/// Default corpus seed for `verify`.
pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Charfuncs,
    Commutant,
    Omega,
    VarianceOracle,
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Charfuncs, Suite::Commutant, Suite::Omega, Suite::VarianceOracle, Suite::Bounds];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Charfuncs => "charfuncs",
            Suite::Commutant => "commutant",
            Suite::Omega => "omega",
            Suite::VarianceOracle => "variance-oracle",
            Suite::Bounds => "bounds",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured value, or the worst violation for corpus checks.
    pub measured: f64,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub cases: usize,
}

impl Check {
    /// Passes when `violation ≤ tol` (NaN fails).
    pub fn violation(name: impl Into<String>, violation: f64, tol: f64, cases: usize) -> Self {
        Check { name: name.into(), passed: violation <= tol, measured: violation, expected: None, tolerance: tol, cases }
    }

    pub fn close(name: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            passed: (measured - expected).abs() <= tol,
            measured,
            expected: Some(expected),
            tolerance: tol,
            cases: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Charfuncs => charfuncs(seed)?,
        Suite::Commutant => commutant(seed)?,
        Suite::Omega => omega(seed)?,
        Suite::VarianceOracle => variance_oracle(seed)?,
        Suite::Bounds => bounds(seed)?,
    };
    Ok(SuiteReport { suite, seed, passed: checks.iter().all(|c| c.passed), checks })
}

/// Random `(ρ, O)` with `n` cycling through `ns`; ranks vary from pure to full.
pub fn random_pair(ns: &[usize], seed: u64, i: usize) -> (DenseOperator, DenseOperator) {
    let mut rng = circuit_rng(seed, i as u64);
    let n = ns[i % ns.len()];
    let rank = rng.random_range(1..=1usize << n);
    (DenseOperator::random_state(n, rank, &mut rng), DenseOperator::random_observable(n, &mut rng))
}

fn worst<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    // NaN propagates as a failure
    it.into_iter().fold(0.0f64, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// Angles `θ_j = j·π/9` for `j = 0..9`.
pub fn theta_grid() -> Vec<f64> {
    (0..10).map(|j| j as f64 * std::f64::consts::PI / 9.0).collect()
}

// ---------------------------------------------------------------------------

fn sre_families(n_max: usize, seed: u64) -> Vec<SreFamily> {
    let mut fams = Vec::new();
    let mut rng = circuit_rng(seed, u64::MAX);
    for n in 1..=n_max {
        fams.push(SreFamily::W { n });
        for &th in &theta_grid() {
            fams.push(SreFamily::WTheta { n, theta: th });
            for k in 0..=n {
                fams.push(SreFamily::Snk { n, k, theta: th });
            }
        }
        for _ in 0..3 {
            fams.push(SreFamily::PhasedW { thetas: (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect() });
        }
    }
    fams
}

/// Largest `|sre2_closed − sre2(state)|` over the families with `n ≤ n_max`.
pub fn sre_closed_vs_direct(n_max: usize, seed: u64) -> Result<(f64, usize)> {
    let fams = sre_families(n_max, seed);
    let mut w = 0.0f64;
    for f in &fams {
        let a = sre2_closed(f)?;
        let b = sre2(&f.state()?)?;
        w = worst([w, (a - b).abs()]);
    }
    Ok((w, fams.len()))
}

fn charfuncs(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let cases = 200;
    let (mut eq, mut dot, mut chain1, mut chain2, mut pur) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..cases {
        let (rho, o) = random_pair(&[1, 2, 3], seed, i);
        let d = rho.dim() as f64;
        let cc = cross_chars(&rho, &o)?;
        let a = cc.cross_norm_sq();
        eq = worst([eq, (cc.twisted.norm2_sq() - a).abs()]);
        dot = worst([dot, cc.twisted_dot().abs() - a]);
        let xo = char_vector(&o)?;
        let td = top_d_sum(&xo);
        chain1 = worst([chain1, a - td]);
        chain2 = worst([chain2, td - d * o.hs_norm_sq()]);
        pur = worst([pur, (char_vector(&rho)?.norm2_sq() - d * rho.purity()).abs()]);
    }
    out.push(Check::violation("cross_char_norm_equality", eq, 1e-8, cases));
    out.push(Check::violation("twisted_dot_bounded_by_norm", dot, 1e-8, cases));
    out.push(Check::violation("cross_norm_below_top_d", chain1, 1e-8, cases));
    out.push(Check::violation("top_d_below_d_hs_norm", chain2, 1e-8, cases));
    out.push(Check::violation("char_purity_identity", pur, 1e-8, cases));

    // fidelity observable shifts
    let (mut f1, mut f2) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let mut rng = circuit_rng(seed ^ 0xF1D, i as u64);
        let n = 1 + i % 3;
        let d = (1usize << n) as f64;
        let phi = DenseState::haar(n, &mut rng);
        let rho = DenseOperator::random_state(n, 1 + i % 2, &mut rng);
        let o = DenseOperator::fidelity_observable(&phi);
        let cc_o = cross_chars(&rho, &o)?;
        let cc_p = cross_chars(&rho, &phi.projector())?;
        let f = rho.trace_with(&phi.projector()).re;
        f1 = worst([f1, (cc_o.cross_norm_sq() - (cc_p.cross_norm_sq() - 1.0)).abs()]);
        f2 = worst([f2, (cc_o.twisted_dot() - (cc_p.twisted_dot() - 2.0 * f + 1.0 / d)).abs()]);
    }
    out.push(Check::violation("fidelity_cross_norm_shift", f1, 1e-8, 100));
    out.push(Check::violation("fidelity_twisted_dot_shift", f2, 1e-8, 100));

    // top-d sum against a full sort
    let mut td = 0.0f64;
    for i in 0..50 {
        let mut rng = circuit_rng(seed ^ 0x70D, i as u64);
        let n = 1 + i % 3;
        let x = char_vector(&DenseState::haar(n, &mut rng))?;
        let mut sq: Vec<f64> = x.values.iter().map(|v| v * v).collect();
        sq.sort_by(|a, b| b.total_cmp(a));
        td = worst([td, (sq[..1 << n].iter().sum::<f64>() - top_d_sum(&x)).abs()]);
    }
    out.push(Check::violation("top_d_sum_vs_sort", td, 1e-12, 50));

    let stab = DenseState::basis(3, 5)?;
    out.push(Check::close("stabilizer_char_norm4", char_vector(&stab)?.norm4_4(), 8.0, 1e-12));
    out.push(Check::close("stabilizer_sre_zero", sre2(&stab)?, 0.0, 1e-12));

    let (w, n) = sre_closed_vs_direct(6, seed)?;
    out.push(Check::violation("sre_closed_vs_direct", w, 1e-9, n));
    out.push(Check::close("sre_w10", sre2_closed(&SreFamily::W { n: 10 })?, (1000.0f64 / 64.0).log2(), 1e-12));

    let mut viol = 0.0f64;
    let mut count = 0;
    for n in 2..=6 {
        let (lo, hi) = phased_w_bounds(n);
        for j in 0..20 {
            let mut rng = circuit_rng(seed ^ 0x3A5E, (n * 100 + j) as u64);
            let th: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            let m = sre2(&SreFamily::PhasedW { thetas: th }.state()?)?;
            viol = worst([viol, lo - m, m - hi]);
            count += 1;
        }
    }
    out.push(Check::violation("phased_w_bounds", viol, 1e-9, count));
    Ok(out)
}

// ---------------------------------------------------------------------------

fn commutant(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let s = sigma44_enumerate();
    let mut sets: Vec<Vec<u8>> = s.iter().map(|t| t.elements()).collect();
    sets.sort();
    sets.dedup();
    let ok = s.iter().filter(|t| t.satisfies_axioms() && t.dimension() == 4).count();
    out.push(Check::close("sigma44_axioms", ok as f64, 30.0, 0.0));
    out.push(Check::close("sigma44_distinct", sets.len() as f64, 30.0, 0.0));

    for (n, r) in [(1usize, 15usize), (2, 29), (3, 30)] {
        let g = gram_spectrum(n);
        out.push(Check::close(format!("gram_rank_n{n}"), g.rank as f64, r as f64, 0.0));
        if n >= 2 {
            out.push(Check::violation(format!("gram_spectrum_n{n}"), g.deviation_from_expected(), 1e-10, 30));
        }
    }

    for n in 1..=3usize {
        let d = (n as f64).exp2();
        let tr = dimension_traces(n);
        let p = projectors(n)?;
        let (mut wt, mut wp, mut idem) = (0.0f64, 0.0f64, 0.0f64);
        for (e, l) in tr.iter().zip(Irrep::ALL) {
            let f = dimension_formula(l, d);
            // the ± split is only meaningful for n ≥ 2 at [2,2]; compare totals always
            wt = worst([wt, (e.total - f.total).abs(), (e.plus - f.plus).abs(), (e.minus - f.minus).abs()]);
            wp = worst([
                wp,
                (p.lambda_g(l).trace() - f.total).abs(),
                (p.plus(l).trace() - f.plus).abs(),
                (p.minus(l).trace() - f.minus).abs(),
            ]);
            for op in [p.lambda_g(l), p.plus(l), p.minus(l)] {
                idem = worst([idem, op.idempotency_defect(), op.symmetry_defect()]);
            }
        }
        out.push(Check::violation(format!("dimension_table_traces_n{n}"), wt, 1e-9, 5));
        out.push(Check::violation(format!("dimension_table_projectors_n{n}"), wp, 1e-8, 5));
        out.push(Check::violation(format!("projectors_idempotent_n{n}"), idem, 1e-9, 15));

        // P_{λ,G} and P⁺ in terms of the orbit sums
        let r = orbit_operators(n)?;
        let lc = |c: [f64; 5]| -> Result<SparseOp> {
            SparseOp::lin_comb(&[(c[0], &r[0]), (c[1], &r[1]), (c[2], &r[2]), (c[3], &r[3]), (c[4], &r[4])])
        };
        let pairs = [
            (p.lambda_g(Irrep::Four), lc([1.0 / 24.0, 1.0 / 24.0, 1.0 / 24.0, 0.0, 0.0])?),
            (p.plus(Irrep::Four), lc([0.0, 0.0, 0.0, 1.0 / (6.0 * d), 1.0 / (6.0 * d)])?),
            (p.lambda_g(Irrep::TwoTwo), lc([2.0 / 24.0, -1.0 / 24.0, 2.0 / 24.0, 0.0, 0.0])?),
            (p.plus(Irrep::TwoTwo), lc([0.0, 0.0, 0.0, 2.0 / (6.0 * d), -1.0 / (6.0 * d)])?),
            (p.lambda_g(Irrep::ThreeOne), lc([1.0 / 8.0, 0.0, -1.0 / 8.0, 0.0, 0.0])?),
        ];
        let w = worst(pairs.iter().map(|(a, b)| a.distance(b)));
        out.push(Check::violation(format!("projectors_from_orbit_sums_n{n}"), w, 1e-9, pairs.len()));
    }

    // every R(𝒯) commutes with U^{⊗4} for Clifford U
    for n in 1..=3usize {
        let ops = s.iter().map(|t| t.big_r(n)).collect::<Result<Vec<_>>>()?;
        let mut w = 0.0f64;
        let m = if n == 3 { 10 } else { 50 };
        for i in 0..m {
            let mut rng = circuit_rng(seed ^ 0xC0, (n * 1000 + i) as u64);
            let u = dense_unitary(&clifford_to_circuit(&random_clifford(n, &mut rng)?), n)?;
            let v: Vec<Complex64> = haar_vector(1 << (4 * n), &mut rng).iter().copied().collect();
            w = worst(std::iter::once(w).chain(ops.iter().map(|r| commutation_defect(r, &u, &v))));
        }
        out.push(Check::violation(format!("clifford_commutation_n{n}"), w, 1e-9, m * 30));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------

/// `Ω(Cl₁)` from enumeration against `(ℛ₁ + ℛ₄)/12`.
pub fn omega_cl1_defect() -> Result<f64> {
    let est = omega_empirical(1, UnitarySource::CliffordGroup, None)?;
    let r = orbit_operators(1)?;
    let want = SparseOp::lin_comb(&[(1.0 / 12.0, &r[0]), (1.0 / 12.0, &r[3])])?;
    Ok(est.omega.distance_to(&want))
}

fn two_design_omegas() -> Result<Vec<(String, crate::commutant::SmallOperator)>> {
    let mut v = Vec::new();
    for n in 1..=2usize {
        for kind in [
            EnsembleKind::FourDesign,
            EnsembleKind::Clifford,
            EnsembleKind::Interleaved { k: 1, l: 1 },
            EnsembleKind::Interleaved { k: n, l: 2 },
            EnsembleKind::SimpleT { k: 1 },
            EnsembleKind::SimpleT { k: n },
        ] {
            v.push((format!("{kind:?}@n{n}"), omega_closed(kind, n)?.to_dense()?));
        }
    }
    Ok(v)
}

/// Ensembles with both a κ and a g closed form at `n`.
fn ensemble_list(n: usize) -> Vec<EnsembleKind> {
    let mut v = vec![EnsembleKind::FourDesign, EnsembleKind::Clifford];
    for k in 1..=n {
        v.push(EnsembleKind::SimpleT { k });
        for l in 1..=3 {
            v.push(EnsembleKind::Interleaved { k, l });
        }
    }
    v
}

fn omega(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.push(Check::violation("omega_cl1_orbit_form", omega_cl1_defect()?, 1e-12, 24));

    let est2 = omega_empirical(2, UnitarySource::CliffordGroup, None)?;
    let closed2 = omega_closed(EnsembleKind::Clifford, 2)?;
    out.push(Check::violation("omega_cl2_enumeration_vs_closed", est2.omega.distance_to(&closed2), 1e-10, 11520));
    let p2 = projectors(2)?;
    let k = kappa_extract(&est2.omega, &p2)?;
    let d = 4.0;
    let (a, b) = (2.0 / (d + 1.0), 4.0 / ((d + 1.0) * (d + 2.0)));
    let want = [a, b, a, b, b];
    let w = worst(k.as_array().iter().zip(want).map(|(x, y)| (x - y).abs()));
    out.push(Check::violation("kappa_extraction_cl2", w, 1e-10, 5));
    let fit = gi_fit(&est2.omega, None)?;
    let w = worst(fit.g.0.iter().zip(g_clifford(d).0).map(|(x, y)| (x - y).abs()));
    out.push(Check::violation("g_fit_cl2", w.max(fit.residual), 1e-10, 5));

    // structural identities on a family of closed-form Ω
    let omegas = two_design_omegas()?;
    let mut pt = 0.0f64;
    let mut sup = 0.0f64;
    let mut tr = 0.0f64;
    for (_, om) in &omegas {
        let n = om.n();
        let d = (n as f64).exp2();
        let p = projectors(n)?;
        pt = worst([pt, partial_trace_defect(om)]);
        sup = worst([sup, om.support_defect(&p.p_g)?]);
        let vals = [
            (Irrep::Four, d * (d + 5.0) / 6.0),
            (Irrep::TwoTwo, if n == 1 { 2.0 / 3.0 } else { d * (d - 1.0) / 3.0 }),
            (Irrep::ThreeOne, d * (d - 1.0) / 2.0),
        ];
        for (l, v) in vals {
            tr = worst([tr, (pairing(om, &p.p_lambda[l.index()]).re - v).abs()]);
            tr = worst([tr, (pairing(om, p.lambda_g(l)).re - v).abs()]);
        }
    }
    out.push(Check::violation("partial_trace_identity", pt, 1e-10, omegas.len()));
    out.push(Check::violation("support_in_h_g", sup, 1e-10, omegas.len()));
    out.push(Check::violation("projector_trace_identities", tr, 1e-10, omegas.len()));
    out.push(Check::violation("partial_trace_identity_cl2_enumerated", partial_trace_defect(&est2.omega), 1e-10, 1));

    // g-path vs κ-path
    let mut w = 0.0f64;
    let mut cases = 0;
    for n in 2..=3usize {
        let d = (n as f64).exp2();
        for kind in ensemble_list(n) {
            let a = omega_closed(kind, n)?;
            let b = omega_from_g(&g_coefficients(kind, d)?, n)?;
            w = worst([w, a.distance(&b) / a.frobenius_norm()]);
            cases += 1;
        }
    }
    out.push(Check::violation("g_path_vs_kappa_path", w, 1e-10, cases));

    // sampled Ũ₁ at n = 2: the fitted g's are noise free because every R(𝒯) commutes with Clifford layers
    let spec = EnsembleSpec::new(2, EnsembleKind::SimpleT { k: 1 })?;
    let est = omega_empirical(2, UnitarySource::Sampled { spec, samples: 4000, seed }, None)?;
    let fit = gi_fit(&est.omega, None)?;
    let w = worst(fit.g.0.iter().zip(g_tuk(4.0, 1)?.0).map(|(x, y)| (x - y).abs()));
    out.push(Check::violation("g_fit_sampled_simple_t1_n2", w, 1e-9, 4000));

    // sampled Haar at n = 1: κ's within 5 standard errors
    let spec = EnsembleSpec::new(1, EnsembleKind::FourDesign)?;
    let est = omega_empirical(1, UnitarySource::Sampled { spec, samples: 20000, seed }, None)?;
    let p1 = projectors(1)?;
    let kh = kappa_extract(&est.omega, &p1)?.as_array();
    let kc = kappa_closed(EnsembleKind::FourDesign, 1)?.as_array();
    let mut z = 0.0f64;
    for j in 0..5 {
        let se = est
            .stderr(|o| kappa_extract(o, &p1).map(|k| k.as_array()[j]).unwrap_or(f64::NAN))
            .unwrap_or(f64::NAN);
        let dev = (kh[j] - kc[j]).abs();
        z = worst([z, if dev < 1e-12 { 0.0 } else { dev / se }]);
    }
    out.push(Check::violation("kappa_sampled_haar_n1_zscore", z, 5.0, 20000));
    Ok(out)
}

// ---------------------------------------------------------------------------

/// `max |vstar_via_omega(Ω(Cl₁)) − vstar_clifford|` over `cases` random n=1 pairs.
pub fn cl1_vstar_oracle(seed: u64, cases: usize) -> Result<f64> {
    let est = omega_empirical(1, UnitarySource::CliffordGroup, None)?;
    let mut w = 0.0f64;
    for i in 0..cases {
        let (rho, o) = random_pair(&[1], seed, i);
        w = worst([w, (vstar_via_omega(&est.omega, &o, &rho)? - vstar_clifford(&o, &rho)?).abs()]);
    }
    Ok(w)
}

/// Grid `(d, M₂, kind)` with `d ≤ 64` over the physical M₂ range.
pub fn fidelity_grid() -> Vec<(f64, f64, EnsembleKind)> {
    let mut g = Vec::new();
    for n in 1..=6usize {
        let d = (n as f64).exp2();
        let m2s = [0.0, 0.2, (4.0f64 / 3.0).log2(), 1.0, ((d + 3.0) / 4.0).log2(), (d + 1.0).log2() - 1.0];
        // pure states have M₂ ≤ log₂((d+1)/2)
        let m2_max = ((d + 1.0) / 2.0).log2() + 1e-12;
        for &m2 in &m2s {
            if m2 > m2_max {
                continue;
            }
            g.push((d, m2, EnsembleKind::FourDesign));
            g.push((d, m2, EnsembleKind::Clifford));
            for k in 0..=n {
                g.push((d, m2, EnsembleKind::SimpleT { k }));
                for l in 0..=3 {
                    if k == 0 && l > 0 {
                        continue;
                    }
                    g.push((d, m2, EnsembleKind::Interleaved { k, l }));
                }
            }
        }
    }
    g
}

/// Largest gap between the fidelity closed forms and the g-path on [`fidelity_grid`].
pub fn gpath_vs_closed_gap() -> Result<(f64, usize)> {
    let grid = fidelity_grid();
    let mut w = 0.0f64;
    for &(d, m2, kind) in &grid {
        w = worst([w, (vstar_fidelity_gpath(kind, d, m2)? - vstar_fidelity(kind, d, m2)?).abs()]);
    }
    Ok((w, grid.len()))
}

/// Criterion-style closed-form anchors: `(name, value, expected)`.
pub fn closed_form_anchors() -> Result<Vec<(String, f64, f64)>> {
    let mut v = vec![
        ("vstar_4design_fidelity(4)".to_string(), vstar_4design_fidelity(4.0), 2.0 / 7.0),
        ("vstar_clifford_fidelity(2,0)".into(), vstar_clifford_fidelity(2.0, 0.0)?, 0.5),
        ("vstar_tuk_fidelity(2,0,1)".into(), vstar_tuk_fidelity(2.0, 0.0, 1)?, 1.0 / 8.0),
        ("vstar_tuk_fidelity(2,log2(4/3),1)".into(), vstar_tuk_fidelity(2.0, (4.0f64 / 3.0).log2(), 1)?, 7.0 / 32.0),
    ];
    for d in [4.0, 8.0, 16.0, 32.0] {
        v.push((
            format!("vstar_clifford_fidelity({d},log2((d+3)/4))"),
            vstar_clifford_fidelity(d, ((d + 3.0) / 4.0).log2())?,
            vstar_4design_fidelity(d),
        ));
    }
    Ok(v)
}

/// Ensembles that collapse to `Clifford` must agree with it exactly.
pub fn consistency_web_gap() -> Result<(f64, usize)> {
    let mut w = 0.0f64;
    let mut cases = 0;
    let aliases = |k: usize| [EnsembleKind::Interleaved { k, l: 0 }, EnsembleKind::SimpleT { k: 0 }, EnsembleKind::Clifford];
    for n in 1..=4usize {
        let d = (n as f64).exp2();
        let (rho, o) = random_pair(&[n], 77, n);
        for k in 0..=n {
            let al = aliases(k);
            for kind in al {
                if canonical_kind(kind) != EnsembleKind::Clifford {
                    return Ok((f64::INFINITY, cases));
                }
            }
            for m2 in [0.0, 0.7, 1.3] {
                let vals: Vec<f64> = al.iter().map(|&k| vstar_fidelity(k, d, m2)).collect::<Result<_>>()?;
                let gp: Vec<f64> = al.iter().map(|&k| vstar_fidelity_gpath(k, d, m2)).collect::<Result<_>>()?;
                w = worst(vals.iter().chain(&gp).map(|v| (v - vals[2]).abs()).chain([w]));
                cases += 1;
            }
            let gs: Vec<[f64; 5]> = al.iter().map(|&k| g_coefficients(k, d).map(|g| g.0)).collect::<Result<_>>()?;
            w = worst(gs.iter().flat_map(|g| g.iter().zip(&gs[2]).map(|(a, b)| (a - b).abs())).chain([w]));
            let vs: Vec<f64> = al.iter().map(|&k| crate::variance::analyze(k, &o, &rho).map(|b| b.vstar)).collect::<Result<_>>()?;
            let gp: Vec<f64> = al.iter().map(|&k| vstar_gpath(k, &o, &rho)).collect::<Result<_>>()?;
            w = worst(vs.iter().chain(&gp).map(|v| (v - vs[2]).abs() / vs[2].abs().max(1.0)).chain([w]));
            if n <= 3 {
                let ks: Vec<[f64; 5]> = al.iter().map(|&k| kappa_closed(k, n).map(|x| x.as_array())).collect::<Result<_>>()?;
                w = worst(ks.iter().flat_map(|g| g.iter().zip(&ks[2]).map(|(a, b)| (a - b).abs())).chain([w]));
            }
            cases += 1;
        }
    }
    Ok((w, cases))
}

fn variance_oracle(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.push(Check::violation("cl1_omega_vs_vstar_clifford", cl1_vstar_oracle(seed, 100)?, 1e-10, 100));

    let est2 = omega_empirical(2, UnitarySource::CliffordGroup, None)?;
    let haar2 = omega_closed(EnsembleKind::FourDesign, 2)?.to_dense()?;
    let (mut wc, mut wh) = (0.0f64, 0.0f64);
    for i in 0..30 {
        let (rho, o) = random_pair(&[2], seed ^ 0x22, i);
        wc = worst([wc, (vstar_via_omega(&est2.omega, &o, &rho)? - vstar_clifford(&o, &rho)?).abs()]);
        wh = worst([wh, (vstar_via_omega(&haar2, &o, &rho)? - vstar_4design(&o, &rho)?).abs()]);
    }
    out.push(Check::violation("cl2_omega_vs_vstar_clifford", wc, 1e-10, 30));
    out.push(Check::violation("haar_omega_vs_vstar_4design_n2", wh, 1e-10, 30));

    for (name, v, e) in closed_form_anchors()? {
        out.push(Check::close(name, v, e, 1e-12));
    }
    let (af_v, af_s) = average_fidelity(8.0);
    out.push(Check::close("average_fidelity_v(8)", af_v, 14.0 / 10.0, 1e-12));
    out.push(Check::close("average_fidelity_vstar(8)", af_s, 28.0 / 110.0, 1e-12));

    let (w, n) = gpath_vs_closed_gap()?;
    out.push(Check::violation("g_path_vs_fidelity_closed_form", w, 1e-10, n));
    let (w, n) = consistency_web_gap()?;
    out.push(Check::violation("consistency_web", w, 1e-12, n));

    // ξ via dense contraction vs the Pauli-sum route
    let mut w = 0.0f64;
    for i in 0..40 {
        let (rho, o) = random_pair(&[1, 2], seed ^ 0x5A, i);
        let a = xi_traces(&o, &rho)?.0;
        let b = xi_traces_dense(&o, &rho)?.0;
        w = worst(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).chain([w]));
    }
    out.push(Check::violation("xi_pauli_sum_vs_dense", w, 1e-10, 40));

    // fidelity pair through the dense g-path
    let mut w = 0.0f64;
    let mut cases = 0;
    for i in 0..24 {
        let mut rng = circuit_rng(seed ^ 0xF1, i as u64);
        let n = 1 + i % 4;
        let d = (n as f64).exp2();
        let phi = DenseState::haar(n, &mut rng);
        let m2 = sre2(&phi)?;
        let o = DenseOperator::fidelity_observable(&phi);
        for kind in [EnsembleKind::FourDesign, EnsembleKind::Clifford, EnsembleKind::SimpleT { k: 1 }, EnsembleKind::Interleaved { k: n, l: 1 }] {
            w = worst([w, (vstar_gpath(kind, &o, &phi.projector())? - vstar_fidelity(kind, d, m2)?).abs()]);
            cases += 1;
        }
    }
    out.push(Check::violation("dense_g_path_vs_fidelity_closed_form", w, 1e-10, cases));

    // Pauli observables: V = d+1−Ξ², V_* = dΞ² for the Clifford group
    let (mut wv, mut ws) = (0.0f64, 0.0f64);
    let mut cases = 0;
    for n in 1..=2usize {
        let d = (n as f64).exp2();
        let rho = DenseOperator::random_state(n, 2, &mut circuit_rng(seed ^ 0xBA, n as u64));
        for idx in 1..1usize << (2 * n) {
            let p = DenseOperator::pauli(&PauliString::from_index(n, idx)?)?;
            let x = rho.trace_with(&p).re;
            wv = worst([wv, (v_single(&p, &rho)? - (d + 1.0 - x * x)).abs()]);
            ws = worst([ws, (vstar_clifford(&p, &rho)? - d * x * x).abs()]);
            cases += 1;
        }
    }
    out.push(Check::violation("pauli_v_single", wv, 1e-10, cases));
    out.push(Check::violation("pauli_vstar_clifford", ws, 1e-10, cases));

    // V_R sits between V and V_*
    let mut w = 0.0f64;
    for i in 0..200 {
        let mut rng = circuit_rng(seed ^ 0x4B, i as u64);
        let (v, vs): (f64, f64) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
        let r = rng.random_range(1..1000u64);
        let x = vr_combine(v, vs, r)?;
        w = worst([w, v.min(vs) - x, x - v.max(vs)]);
    }
    out.push(Check::violation("vr_between_v_and_vstar", w, 1e-12, 200));
    Ok(out)
}

// ---------------------------------------------------------------------------

/// Worst violation of `V_* ≤ V_△ ≤ cross ≤ norm` over `cases` random pairs, with `V_*` from the g-path.
pub fn clifford_chain_violation(seed: u64, cases: usize) -> Result<f64> {
    let mut w = 0.0f64;
    for i in 0..cases {
        let (rho, o) = random_pair(&[1, 2, 3], seed, i);
        let c = clifford_chain(&o, &rho)?;
        let vs = vstar_gpath(EnsembleKind::Clifford, &o, &rho)?;
        w = worst([w, vs - c.v_triangle, c.vstar - c.v_triangle, c.v_triangle - c.cross_bound, c.cross_bound - c.norm_bound]);
    }
    Ok(w)
}

/// Worst violation of the α/β chains over `n ≤ 12, k ≤ n, l ≤ 6`.
pub fn alpha_beta_violation() -> Result<(f64, usize)> {
    let mut w = 0.0f64;
    let mut cases = 0;
    for n in 1..=12usize {
        let d = (n as f64).exp2();
        let ab1 = alpha_beta(d, 1)?;
        for k in 1..=n {
            let ab = alpha_beta(d, k)?;
            let gk = GAMMA.powi(k as i32);
            w = worst([w, -ab.alpha, ab.alpha - ab.beta, ab.beta - gk]);
            // strict upper end: β_k < γ^k
            if ab.beta >= gk {
                w = worst([w, f64::INFINITY]);
            }
            for l in 1..=6i32 {
                let kl = (k as i32) * l;
                let chain = [ab1.alpha.powi(kl), ab.alpha.powi(l), ab.beta.powi(l), ab1.beta.powi(kl)];
                for p in chain.windows(2) {
                    w = worst([w, (p[0] - p[1]) / p[1].abs().max(1e-300)]);
                }
                cases += 1;
            }
        }
    }
    Ok((w, cases))
}

/// Doped-ensemble deviation `|V_* − γ^{kl} V_△| − 6‖O‖²/d` on a random corpus, n ∈ {2,3,4}.
pub fn doped_deviation_violation(seed: u64, cases: usize) -> Result<f64> {
    let mut w = 0.0f64;
    for i in 0..cases {
        let (rho, o) = random_pair(&[2, 3, 4], seed, i);
        let n = o.n();
        let d = o.dim() as f64;
        let vt = v_triangle(&o, &rho)?;
        let budget = 6.0 * o.hs_norm_sq() / d;
        let kinds = [
            EnsembleKind::Interleaved { k: 1, l: 1 },
            EnsembleKind::Interleaved { k: n, l: 1 },
            EnsembleKind::Interleaved { k: 1, l: 3 },
            EnsembleKind::SimpleT { k: 1 },
            EnsembleKind::SimpleT { k: n },
        ];
        for kind in kinds {
            let gp = EnsembleSpec::new(n, kind)?.gamma_power().unwrap_or(1.0);
            let vs = vstar_gpath(kind, &o, &rho)?;
            w = worst([w, (vs - gp * vt).abs() - budget]);
        }
    }
    Ok(w)
}

fn bounds(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.push(Check::violation("clifford_bound_chain", clifford_chain_violation(seed, 500)?, 1e-8, 500));

    let (mut tb, mut hb, mut neg, mut dep) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut doped_sre = 0.0f64;
    for i in 0..200 {
        let (rho, o) = random_pair(&[1, 2, 3], seed ^ 0xB0, i);
        let d = o.dim() as f64;
        let vt = v_triangle(&o, &rho)?;
        let b = triangle_bounds(&o, &rho)?;
        tb = worst([tb, vt - b.sre, vt - b.inf, vt - b.top_d]);
        let vs4 = vstar_4design(&o, &rho)?;
        hb = worst([hb, vs4 - haar_max_bound(d, o.hs_norm_sq())]);
        let vsc = vstar_clifford(&o, &rho)?;
        neg = worst([neg, -v_single(&o, &rho)?, -vsc, -vs4, -vt]);
        if o.n() >= 2 {
            let kind = EnsembleKind::SimpleT { k: 1 };
            let gp = EnsembleSpec::new(o.n(), kind)?.gamma_power().unwrap_or(1.0);
            let db = doped_bounds(gp, &o, &rho)?;
            let vs = vstar_gpath(kind, &o, &rho)?;
            doped_sre = worst([doped_sre, vs - db.sre, vs - db.inf, vs - db.top_d]);
            neg = worst([neg, -vs]);
        }
        let p = 0.1 + 0.8 * (i as f64 / 200.0);
        let rp = rho.depolarize(p)?;
        dep = worst([dep, (vstar_clifford(&o, &rp)? - (1.0 - p).powi(2) * vsc).abs()]);
    }
    out.push(Check::violation("triangle_char_bounds", tb, 1e-8, 200));
    out.push(Check::violation("haar_max_bound", hb, 1e-8, 200));
    out.push(Check::violation("doped_char_bounds_simple_t1", doped_sre, 1e-8, 200));
    out.push(Check::violation("variances_nonnegative", neg, 1e-12, 200));
    out.push(Check::violation("depolarizing_scaling_dense", dep, 1e-10, 200));

    let mut w = 0.0f64;
    for &(d, m2, kind) in &fidelity_grid() {
        for p in [0.0, 0.3, 0.9] {
            let b = analyze_fidelity(kind, d, m2, p)?;
            let b0 = analyze_fidelity(kind, d, m2, 0.0)?;
            w = worst([w, -b.v, -b.vstar, (b.vstar - (1.0 - p).powi(2) * b0.vstar).abs()]);
        }
    }
    out.push(Check::violation("fidelity_closed_forms_nonnegative_and_scaling", w, 1e-12, fidelity_grid().len() * 3));

    // maximum over sampled ρ for fidelity observables
    let mut w = 0.0f64;
    for i in 0..12 {
        let mut rng = circuit_rng(seed ^ 0x7E4, i as u64);
        let n = 1 + i % 3;
        let d = (n as f64).exp2();
        let phi = DenseState::haar(n, &mut rng);
        let o = DenseOperator::fidelity_observable(&phi);
        let bound = clifford_max_bound_fidelity(d, sre2(&phi)?)?;
        let mut best = vstar_clifford(&o, &phi.projector())?;
        for j in 0..200 {
            let rho = DenseOperator::random_state(n, 1 + j % 2, &mut rng);
            best = best.max(vstar_clifford(&o, &rho)?);
        }
        w = worst([w, best - bound]);
    }
    out.push(Check::violation("clifford_max_bound_sampled", w, 1e-8, 12 * 201));

    let (w, n) = alpha_beta_violation()?;
    out.push(Check::violation("alpha_beta_chain", w, 1e-12, n));
    out.push(Check::violation("doped_deviation_budget", doped_deviation_violation(seed, 60)?, 1e-8, 60 * 5));

    let mut w = 0.0f64;
    let mut cases = 0;
    for &(d, m2, kind) in &fidelity_grid() {
        if d < 8.0 {
            continue;
        }
        if let Some(gp) = EnsembleSpec::new(d.log2().round() as usize, kind)?.gamma_power() {
            let (lo, hi) = doped_fidelity_window(d, m2, gp)?;
            let v = vstar_fidelity(kind, d, m2)?;
            w = worst([w, lo - v, v - hi]);
            cases += 1;
        }
    }
    out.push(Check::violation("doped_fidelity_window", w, 1e-10, cases));
    Ok(out)
}
