//! Closed-form single-shot and circuit-reuse variances.
//!
//! Everything here is an analytic evaluation: `V`, `V_*`, `V_R`, `V_△`, the
//! `g`-coefficient path `V_* = (d+1)² Σ gᵢ ξᵢ − tr(Oρ)²`, the α/β parameters of
//! the interleaved ensemble, depolarized variants and ensemble averages.
//! Dense inputs are taken as [`DenseOperator`]s; fidelity forms take the
//! dimension as `f64` so they work for registers far beyond dense reach.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{trace_prod, CMat};
use crate::error::{invalid, Error, Result};
use crate::pauli::PauliString;
use crate::states::{cross_chars, top_d_sum, Characterize, DenseOperator};

pub const GAMMA: f64 = 0.75;
pub const NU: f64 = 0.5;

/// Largest register for general (O, ρ) ξ-trace evaluation.
pub const XI_MAX: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleKind {
    FourDesign,
    Clifford,
    /// `l` layers, each with `k` T gates followed by a fresh Clifford.
    Interleaved { k: usize, l: usize },
    /// One Clifford followed by `(HT)` on `k` qubits.
    SimpleT { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n: usize,
    pub kind: EnsembleKind,
}

impl EnsembleSpec {
    pub fn new(n: usize, kind: EnsembleKind) -> Result<Self> {
        let s = EnsembleSpec { n, kind };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("ensemble needs n ≥ 1");
        }
        match self.kind {
            EnsembleKind::Interleaved { k, .. } | EnsembleKind::SimpleT { k } if k > self.n => {
                invalid(format!("T-gate count k={k} exceeds n={}", self.n))
            }
            _ => Ok(()),
        }
    }

    /// T-free members collapse to `Clifford`.
    pub fn canonical(&self) -> EnsembleKind {
        canonical_kind(self.kind)
    }

    pub fn dim(&self) -> f64 {
        (self.n as f64).exp2()
    }

    /// Leading-order suppression factor of `V_*` relative to `V_△`.
    pub fn gamma_power(&self) -> Option<f64> {
        match self.canonical() {
            EnsembleKind::FourDesign => None,
            EnsembleKind::Clifford => Some(1.0),
            EnsembleKind::Interleaved { k, l } => Some(GAMMA.powi((k * l) as i32)),
            EnsembleKind::SimpleT { k } => Some(GAMMA.powi(k as i32)),
        }
    }
}

pub fn canonical_kind(kind: EnsembleKind) -> EnsembleKind {
    match kind {
        EnsembleKind::Interleaved { k: 0, .. } | EnsembleKind::Interleaved { l: 0, .. } | EnsembleKind::SimpleT { k: 0 } => {
            EnsembleKind::Clifford
        }
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Pure-state fidelity formula in (d, M₂, F or p).
    FidelityClosedForm,
    /// Characteristic-function evaluation (`V_△` route).
    CharFunction,
    /// `(d+1)² Σ gᵢ ξᵢ − tr(Oρ)²`.
    GPath,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceBreakdown {
    pub v: f64,
    pub vstar: f64,
    pub method: Method,
}

impl VarianceBreakdown {
    pub fn vr(&self, r: u64) -> Result<f64> {
        vr_combine(self.v, self.vstar, r)
    }
}

/// `V_R = V/R + (R−1)V_*/R`.
pub fn vr_combine(v: f64, vstar: f64, r: u64) -> Result<f64> {
    if r == 0 {
        return invalid("R must be at least 1");
    }
    let r = r as f64;
    Ok(v / r + (r - 1.0) * vstar / r)
}

fn check_pair(o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    if o.n() != rho.n() {
        return Err(Error::DimensionMismatch { expected: rho.n(), found: o.n() });
    }
    o.require_traceless()?;
    Ok(o.dim() as f64)
}

fn check_m2(m2: f64) -> Result<()> {
    if !(m2 >= 0.0) || !m2.is_finite() {
        return invalid(format!("M₂ must be finite and nonnegative, got {m2}"));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("depolarizing strength {p} outside [0,1]"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Single-shot variance

/// `(d+1)/(d+2)·[tr O² + 2tr(ρO²)] − tr(ρO)²`, valid for any 3-design.
pub fn v_single(o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    let d = check_pair(o, rho)?;
    let om = o.matrix();
    let o2 = om * om;
    let tr_o2 = o2.trace().re;
    let tr_ro2 = trace_prod(rho.matrix(), &o2).re;
    let t = trace_prod(rho.matrix(), om).re;
    Ok((d + 1.0) / (d + 2.0) * (tr_o2 + 2.0 * tr_ro2) - t * t)
}

/// Fidelity observable, `F = ⟨φ|ρ|φ⟩`.
pub fn v_fidelity(d: f64, f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return invalid(format!("fidelity {f} outside [0,1]"));
    }
    Ok(-f * f + d * (2.0 * f + 1.0) / (d + 2.0))
}

// ---------------------------------------------------------------------------
// Characteristic-function quantities

/// `(d+1)/(d(d+2))·(‖Ξ_{ρ,O}‖² + Ξ̃·Ξ)`.
pub fn v_triangle(o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    let d = check_pair(o, rho)?;
    let cc = cross_chars(rho, o)?;
    Ok((d + 1.0) / (d * (d + 2.0)) * (cc.cross_norm_sq() + cc.twisted_dot()))
}

pub fn v_triangle_fidelity(d: f64, m2: f64) -> Result<f64> {
    check_m2(m2)?;
    let s = (1.0 - m2).exp2();
    Ok((s * d * d - 3.0 * d + 1.0) * (d + 1.0) / (d * d * (d + 2.0)))
}

pub fn vstar_clifford(o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    let d = o.dim() as f64;
    let vt = v_triangle(o, rho)?;
    let t = rho.trace_with(o).re;
    Ok(vt - t * t / (d + 2.0))
}

pub fn vstar_clifford_fidelity(d: f64, m2: f64) -> Result<f64> {
    check_m2(m2)?;
    Ok(((1.0 - m2).exp2() * (d + 1.0) - 4.0) / (d + 2.0))
}

pub fn vstar_4design_fidelity(d: f64) -> f64 {
    4.0 * (d - 1.0) / ((d + 2.0) * (d + 3.0))
}

/// Haar value through the g-path; only ξ₁..ξ₃ enter.
pub fn vstar_4design(o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    let d = check_pair(o, rho)?;
    let x = xi_traces_low(o, rho);
    let g = g_haar(d);
    let t = rho.trace_with(o).re;
    Ok((d + 1.0).powi(2) * (g.0[0] * x[0] + g.0[1] * x[1] + g.0[2] * x[2]) - t * t)
}

// ---------------------------------------------------------------------------
// Interleaved-ensemble parameters

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

pub fn alpha_beta(d: f64, k: usize) -> Result<AlphaBeta> {
    if k == 0 {
        return invalid("α_k, β_k need k ≥ 1; k = 0 is the Clifford ensemble");
    }
    if k as f64 > d.log2() + 1e-9 {
        return invalid(format!("k={k} exceeds the qubit count of d={d}"));
    }
    let (gk, nk) = (GAMMA.powi(k as i32), NU.powi(k as i32));
    let alpha = (d * d * (d + 3.0) * (d * gk + 3.0 * nk) - 4.0 * (d + 1.0) * (d + 2.0))
        / ((d * d - 1.0) * (d + 2.0) * (d + 4.0));
    let beta = if k == 1 {
        // removable singularity at d = 2
        (3.0 * d * d - 4.0) / (4.0 * (d * d - 1.0))
    } else {
        (d * d * (d * d * gk - 4.0) + 4.0) / ((d * d - 1.0) * (d * d - 4.0))
    };
    Ok(AlphaBeta { alpha, beta })
}

fn check_kl(d: f64, k: usize, l: usize) -> Result<()> {
    if k == 0 && l > 0 {
        return invalid("interleaved layers need k ≥ 1 T gates (use the Clifford ensemble)");
    }
    if k as f64 > d.log2() + 1e-9 {
        return invalid(format!("k={k} exceeds the qubit count of d={d}"));
    }
    Ok(())
}

pub fn vstar_ukl_fidelity(d: f64, m2: f64, k: usize, l: usize) -> Result<f64> {
    check_m2(m2)?;
    check_kl(d, k, l)?;
    if l == 0 {
        return vstar_clifford_fidelity(d, m2);
    }
    let a = alpha_beta(d, k)?.alpha.powi(l as i32);
    let s = (1.0 - m2).exp2();
    Ok(vstar_4design_fidelity(d) + (s * (d + 1.0) * (d + 3.0) - 8.0 * (d + 1.0)) * a / ((d + 2.0) * (d + 3.0)))
}

pub fn vstar_tuk_fidelity(d: f64, m2: f64, k: usize) -> Result<f64> {
    check_m2(m2)?;
    check_kl(d, k, 0)?;
    if k == 0 {
        return vstar_clifford_fidelity(d, m2);
    }
    let (gk, nk) = (GAMMA.powi(k as i32), NU.powi(k as i32));
    let s = (1.0 - m2).exp2();
    let den = (d - 1.0) * (d + 2.0) * (d + 4.0);
    let a = s * ((d.powi(3) + 4.0 * d * d + 3.0 * d) * gk + (2.0 * d * d + 8.0 * d + 6.0) * nk - 2.0 * d * d - 12.0 * d - 10.0);
    let b = 2.0 * (-(4.0 * d * d + 4.0 * d) * gk - (8.0 * d + 8.0) * nk + 2.0 * d * d + 6.0 * d + 16.0);
    Ok((a + b) / den)
}

// ---------------------------------------------------------------------------
// g coefficients

/// Coefficients of `Ω = Σ gᵢ ℛᵢ` (computational basis).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GiSet(pub [f64; 5]);

pub fn g_haar(d: f64) -> GiSet {
    let den = d * (d + 1.0) * (d + 2.0) * (d + 3.0);
    GiSet([(d * d + 4.0 * d + 2.0) / den, -1.0 / den, 1.0 / (d * (d + 1.0) * (d + 3.0)), 0.0, 0.0])
}

pub fn g_clifford(d: f64) -> GiSet {
    let c = 1.0 / ((d + 1.0) * (d + 2.0));
    GiSet([c, 0.0, 0.0, c, 0.0])
}

pub fn g_ukl(d: f64, k: usize, l: usize) -> Result<GiSet> {
    check_kl(d, k, l)?;
    if l == 0 {
        return Ok(g_clifford(d));
    }
    let ab = alpha_beta(d, k)?;
    let (a, b) = (ab.alpha.powi(l as i32), ab.beta.powi(l as i32));
    let h = g_haar(d).0;
    let p = 3.0 * (d + 1.0) * (d + 2.0) * (d + 3.0);
    let q = 3.0 * d * (d + 1.0) * (d + 2.0);
    let r = 3.0 * (d + 1.0) * (d + 2.0);
    Ok(GiSet([
        h[0] - a / p - 2.0 * b / q,
        h[1] - a / p + b / q,
        h[2] - a / p - 2.0 * b / q,
        a / r + 2.0 * b / r,
        a / r - b / r,
    ]))
}

pub fn g_tuk(d: f64, k: usize) -> Result<GiSet> {
    check_kl(d, k, 0)?;
    match k {
        0 => Ok(g_clifford(d)),
        1 => {
            let den = 4.0 * (d - 1.0) * (d + 1.0) * (d + 2.0);
            Ok(GiSet([(4.0 * d - 3.0) / den, 0.0, 1.0 / den, (3.0 * d - 5.0) / den, -1.0 / den]))
        }
        _ => {
            let (gk, nk) = (GAMMA.powi(k as i32), NU.powi(k as i32));
            let den = (d * d - 4.0) * (d * d - 1.0) * (d + 4.0);
            let d2 = d * d;
            Ok(GiSet([
                ((-d2 - 2.0 * d) * gk + 4.0 * nk + d.powi(3) + 2.0 * d2 - 8.0 * d + 4.0) / den,
                d * (2.0 * gk - 1.0 - nk) / den,
                ((d2 + 2.0 * d) * (1.0 - gk) - 4.0 * (1.0 - nk)) / den,
                (d * (d2 + 3.0 * d - 2.0) * gk - (2.0 * d + 4.0) * nk - 2.0 * (d2 + 3.0 * d - 6.0)) / den,
                -((d2 + 2.0 * d) * gk - (d2 + 2.0 * d - 4.0) * nk - 4.0) / den,
            ]))
        }
    }
}

/// g coefficients for any ensemble in the computational basis.
pub fn g_coefficients(kind: EnsembleKind, d: f64) -> Result<GiSet> {
    match canonical_kind(kind) {
        EnsembleKind::FourDesign => Ok(g_haar(d)),
        EnsembleKind::Clifford => Ok(g_clifford(d)),
        EnsembleKind::Interleaved { k, l } => g_ukl(d, k, l),
        EnsembleKind::SimpleT { k } => g_tuk(d, k),
    }
}

pub fn vstar_from_g(g: &GiSet, xi: &XiTraces, d: f64, tr_o_rho: f64) -> f64 {
    let s: f64 = g.0.iter().zip(&xi.0).map(|(a, b)| a * b).sum();
    (d + 1.0).powi(2) * s - tr_o_rho * tr_o_rho
}

// ---------------------------------------------------------------------------
// ξ traces

/// `ξᵢ = tr[ℛᵢ (O⊗ρ)^{⊗2}]`, i = 1..5.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiTraces(pub [f64; 5]);

fn xi_traces_low(o: &DenseOperator, rho: &DenseOperator) -> [f64; 3] {
    let (om, r) = (o.matrix(), rho.matrix());
    let o2 = om * om;
    let r2 = r * r;
    let t = trace_prod(om, r).re;
    let tr_o2 = o2.trace().re;
    let tr_o2r = trace_prod(&o2, r).re;
    let tr_o2r2 = trace_prod(&o2, &r2).re;
    let or = om * r;
    let tr_oror = trace_prod(&or, &or).re;
    let pur = trace_prod(r, r).re;
    [
        t * t,
        tr_o2 + 4.0 * tr_o2r + 2.0 * tr_o2r2 + 2.0 * tr_oror,
        tr_o2 * pur + t * t + 2.0 * tr_o2r2,
    ]
}

/// `P·M` for a projective Pauli acting on the left.
fn pauli_left(p: &PauliString, m: &CMat) -> CMat {
    let d = m.nrows();
    let mut out = CMat::zeros(d, d);
    for c in 0..d {
        let (r, a) = p.apply_basis(c as u64);
        let r = r as usize;
        for j in 0..d {
            out[(r, j)] = a * m[(c, j)];
        }
    }
    out
}

/// Orbit-5 trace as a Pauli sum over the four cosets.
fn xi5_pauli_sum(o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    let n = o.n();
    let d = o.dim() as f64;
    let xr = rho.char_vector()?;
    let cc = cross_chars(rho, o)?;
    let terms: Vec<f64> = (0..1usize << (2 * n))
        .into_par_iter()
        .map(|idx| {
            let p = PauliString::from_index(n, idx).expect("index in range");
            let po = pauli_left(&p, o.matrix());
            let prho = pauli_left(&p, rho.matrix());
            let c = xr.values[idx];
            let popo = trace_prod(&po, &po).re;
            let three = trace_prod(&(&po * &po), &prho).re;
            popo * c * c + cc.twisted.values[idx] * cc.cross.values[idx] + 2.0 * three * c
        })
        .collect();
    Ok(terms.iter().sum::<f64>() / d)
}

pub fn xi_traces(o: &DenseOperator, rho: &DenseOperator) -> Result<XiTraces> {
    let d = check_pair(o, rho)?;
    if o.n() > XI_MAX {
        return Err(Error::CutoffExceeded { what: "xi_traces", n: o.n(), max: XI_MAX });
    }
    let low = xi_traces_low(o, rho);
    let cc = cross_chars(rho, o)?;
    let xi4 = (cc.cross_norm_sq() + cc.twisted_dot()) / d;
    let xi5 = xi5_pauli_sum(o, rho)?;
    Ok(XiTraces([low[0], low[1], low[2], xi4, xi5]))
}

/// ξ values for `ρ = φ`, `O = φ − 1/d`.
pub fn xi_traces_fidelity(d: f64, m2: f64) -> Result<XiTraces> {
    check_m2(m2)?;
    let d2 = d * d;
    let s = (-m2).exp2();
    Ok(XiTraces([
        (d - 1.0).powi(2) / d2,
        (d - 1.0) * (9.0 * d - 8.0) / d2,
        (d - 1.0) * (4.0 * d - 3.0) / d2,
        (2.0 * s * d2 - 3.0 * d + 1.0) / d2,
        (4.0 * s * d2 - 7.0 * d + 3.0) / d2,
    ]))
}

/// General g-path evaluation for any dense pair with `n ≤ XI_MAX`.
pub fn vstar_gpath(kind: EnsembleKind, o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    let d = o.dim() as f64;
    let g = g_coefficients(kind, d)?;
    let xi = xi_traces(o, rho)?;
    Ok(vstar_from_g(&g, &xi, d, rho.trace_with(o).re))
}

pub fn vstar_ukl(o: &DenseOperator, rho: &DenseOperator, k: usize, l: usize) -> Result<f64> {
    check_kl(o.dim() as f64, k, l)?;
    if l == 0 {
        return vstar_clifford(o, rho);
    }
    vstar_gpath(EnsembleKind::Interleaved { k, l }, o, rho)
}

pub fn vstar_tuk(o: &DenseOperator, rho: &DenseOperator, k: usize) -> Result<f64> {
    check_kl(o.dim() as f64, k, 0)?;
    if k == 0 {
        return vstar_clifford(o, rho);
    }
    vstar_gpath(EnsembleKind::SimpleT { k }, o, rho)
}

/// g-path evaluated on the pure-fidelity ξ values.
pub fn vstar_fidelity_gpath(kind: EnsembleKind, d: f64, m2: f64) -> Result<f64> {
    let g = g_coefficients(kind, d)?;
    let xi = xi_traces_fidelity(d, m2)?;
    Ok(vstar_from_g(&g, &xi, d, (d - 1.0) / d))
}

// ---------------------------------------------------------------------------
// Ensemble dispatch

/// `V` and `V_*` for a dense pair.
pub fn analyze(kind: EnsembleKind, o: &DenseOperator, rho: &DenseOperator) -> Result<VarianceBreakdown> {
    let v = v_single(o, rho)?;
    let (vstar, method) = match canonical_kind(kind) {
        EnsembleKind::FourDesign => (vstar_4design(o, rho)?, Method::GPath),
        EnsembleKind::Clifford => (vstar_clifford(o, rho)?, Method::CharFunction),
        EnsembleKind::Interleaved { k, l } => (vstar_ukl(o, rho, k, l)?, Method::GPath),
        EnsembleKind::SimpleT { k } => (vstar_tuk(o, rho, k)?, Method::GPath),
    };
    Ok(VarianceBreakdown { v, vstar, method })
}

/// Pure-state fidelity `V_*(O, φ)` for each ensemble.
pub fn vstar_fidelity(kind: EnsembleKind, d: f64, m2: f64) -> Result<f64> {
    match canonical_kind(kind) {
        EnsembleKind::FourDesign => Ok(vstar_4design_fidelity(d)),
        EnsembleKind::Clifford => vstar_clifford_fidelity(d, m2),
        EnsembleKind::Interleaved { k, l } => vstar_ukl_fidelity(d, m2, k, l),
        EnsembleKind::SimpleT { k } => vstar_tuk_fidelity(d, m2, k),
    }
}

/// Fidelity estimation of `φ` on `ρ_p = (1−p)φ + p/d`.
pub fn analyze_fidelity(kind: EnsembleKind, d: f64, m2: f64, p: f64) -> Result<VarianceBreakdown> {
    check_p(p)?;
    let v = v_fidelity_depolarized(d, p)?;
    let vstar = depolarized(vstar_fidelity(kind, d, m2)?, p)?;
    Ok(VarianceBreakdown { v, vstar, method: Method::FidelityClosedForm })
}

// ---------------------------------------------------------------------------
// Depolarizing noise

/// `V_*(O, ρ_p) = (1−p)² V_*(O, ρ)`.
pub fn depolarized(vstar: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok((1.0 - p).powi(2) * vstar)
}

/// Single-shot fidelity variance on `ρ_p`, in the quadratic-in-p form.
pub fn v_fidelity_depolarized(d: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    let a = ((d - 1.0) / d).powi(2);
    let den = (d - 1.0) * (d + 2.0);
    if d <= 1.0 {
        return invalid("dimension must exceed 1");
    }
    Ok(a * (-p * p + 4.0 * d * p / den + (d * d - 3.0 * d - 2.0) / den) + (d * d - 1.0) / (d * d))
}

pub fn vstar_4design_fidelity_depolarized(d: f64, p: f64) -> Result<f64> {
    depolarized(vstar_4design_fidelity(d), p)
}

pub fn vstar_clifford_fidelity_depolarized(d: f64, m2: f64, p: f64) -> Result<f64> {
    depolarized(vstar_clifford_fidelity(d, m2)?, p)
}

/// Depolarizing strength that maximizes the single-shot fidelity variance.
pub fn v_fidelity_depolarized_argmax(d: f64) -> f64 {
    2.0 * d / ((d - 1.0) * (d + 2.0))
}

// ---------------------------------------------------------------------------
// Averages

/// Averages over a unitary orbit of ρ (or O) for a 2-design: `(V̄, V̄_*)`.
pub fn ensemble_averages(d: f64, purity: f64, norm_o2: f64) -> Result<(f64, f64)> {
    if purity < 1.0 / d - 1e-12 || purity > 1.0 + 1e-12 {
        return invalid(format!("purity {purity} outside [1/d, 1]"));
    }
    let v = (1.0 + (d - purity) / (d * d - 1.0)) * norm_o2;
    let vs = (d * purity - 1.0) / (d * d - 1.0) * norm_o2;
    Ok((v, vs))
}

/// Haar average over the target φ of the fidelity variances.
pub fn average_fidelity(d: f64) -> (f64, f64) {
    (2.0 * (d - 1.0) / (d + 2.0), vstar_4design_fidelity(d))
}

// ---------------------------------------------------------------------------
// Bounds

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordChain {
    pub vstar: f64,
    pub v_triangle: f64,
    pub cross_bound: f64,
    pub norm_bound: f64,
}

impl CliffordChain {
    pub fn holds(&self, slack: f64) -> bool {
        self.vstar <= self.v_triangle + slack
            && self.v_triangle <= self.cross_bound + slack
            && self.cross_bound <= self.norm_bound + slack
    }
}

/// `V_* ≤ V_△ ≤ 2(d+1)/(d(d+2))‖Ξ_{ρ,O}‖² ≤ 2(d+1)/(d+2)‖O‖²` for the Clifford group.
pub fn clifford_chain(o: &DenseOperator, rho: &DenseOperator) -> Result<CliffordChain> {
    let d = check_pair(o, rho)?;
    let cc = cross_chars(rho, o)?;
    let v_triangle = (d + 1.0) / (d * (d + 2.0)) * (cc.cross_norm_sq() + cc.twisted_dot());
    let t = rho.trace_with(o).re;
    Ok(CliffordChain {
        vstar: v_triangle - t * t / (d + 2.0),
        v_triangle,
        cross_bound: 2.0 * (d + 1.0) / (d * (d + 2.0)) * cc.cross_norm_sq(),
        norm_bound: 2.0 * (d + 1.0) / (d + 2.0) * o.hs_norm_sq(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharBounds {
    /// Bound through the mixed-state SRE of ρ.
    pub sre: f64,
    /// Bound through `‖Ξ_ρ̊‖_∞` (traceless part of ρ).
    pub inf: f64,
    /// ρ-independent bound through `‖Ξ_O²‖_[d]`.
    pub top_d: f64,
}

/// Upper bounds on `V_△(O, ρ)`; these bound the Clifford `V_*` directly.
pub fn triangle_bounds(o: &DenseOperator, rho: &DenseOperator) -> Result<CharBounds> {
    let d = check_pair(o, rho)?;
    let xr = rho.char_vector()?;
    let xo = o.char_vector()?;
    let pur = xr.norm2_sq() / d;
    let m2t = -(xr.norm4_4() / xr.norm2_sq()).log2();
    let c = 2.0 * (d + 1.0) / (d * (d + 2.0));
    let sre = c * ((-m2t).exp2() * d * pur * xo.norm4_4()).sqrt();
    // traceless part: drop the identity component
    let inf = xr.values.iter().skip(1).fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(CharBounds {
        sre,
        inf: 2.0 * (d + 1.0) / (d + 2.0) * inf * inf * o.hs_norm_sq(),
        top_d: c * top_d_sum(&xo),
    })
}

/// Bounds for a T-doped ensemble: leading `γ^{kl}` term plus the `6‖O‖²/d` budget.
pub fn doped_bounds(gamma_pow: f64, o: &DenseOperator, rho: &DenseOperator) -> Result<CharBounds> {
    let d = o.dim() as f64;
    let b = triangle_bounds(o, rho)?;
    let slack = 6.0 / d * o.hs_norm_sq();
    let xo = o.char_vector()?;
    let xr = rho.char_vector()?;
    let pur = xr.norm2_sq() / d;
    let m2t = -(xr.norm4_4() / xr.norm2_sq()).log2();
    Ok(CharBounds {
        sre: 2.0 * gamma_pow / d * ((-m2t).exp2() * d * pur * xo.norm4_4()).sqrt() + slack,
        inf: gamma_pow * b.inf + slack,
        top_d: 2.0 * gamma_pow / d * top_d_sum(&xo) + slack,
    })
}

/// `|V_* − γ^{kl} V_△| ≤ 6‖O‖²/d`.
pub fn deviation_budget(d: f64, norm_o2: f64) -> f64 {
    6.0 * norm_o2 / d
}

/// Clifford fidelity: `V_*(O) < 2^{1−M₂/2}(d+1)/(d+2)` (max over ρ).
pub fn clifford_max_bound_fidelity(d: f64, m2: f64) -> Result<f64> {
    check_m2(m2)?;
    Ok((1.0 - m2 / 2.0).exp2() * (d + 1.0) / (d + 2.0))
}

/// Doped fidelity: `V_*(O) ≤ 2^{1−M₂/2} γ^{kl} + 6/d`.
pub fn doped_max_bound_fidelity(d: f64, m2: f64, gamma_pow: f64) -> Result<f64> {
    check_m2(m2)?;
    Ok((1.0 - m2 / 2.0).exp2() * gamma_pow + 6.0 / d)
}

/// Window `(lo, hi)` containing `V_*(O, φ)` around `2^{1−M₂} γ^{kl}`.
pub fn doped_fidelity_window(d: f64, m2: f64, gamma_pow: f64) -> Result<(f64, f64)> {
    check_m2(m2)?;
    let c = (1.0 - m2).exp2() * gamma_pow;
    Ok((c - 6.0 / d, c + 4.0 / d))
}

/// ‖Ξ_O²‖_[d]-type ceiling for the 4-design: `V_*(O) ≤ 4‖O‖²/d`.
pub fn haar_max_bound(d: f64, norm_o2: f64) -> f64 {
    4.0 * norm_o2 / d
}

/// Direct Pauli-sum evaluation of `d·V_△·(d+2)/(d+1)` without the fast transforms.
pub fn triangle_sum_direct(o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    check_pair(o, rho)?;
    let n = o.n();
    let mut s = 0.0;
    for idx in 0..1usize << (2 * n) {
        let p: DMatrix<Complex64> = PauliString::from_index(n, idx)?.to_dense();
        let tr = trace_prod(rho.matrix(), &p).re;
        let to = trace_prod(o.matrix(), &p).re;
        let tw = (rho.matrix() * &p * o.matrix() * &p).trace().re;
        s += (tr * to) * (tr * to) + tw * tr * to;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{DenseState, SreInput};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_shot_examples() {
        let z0 = DenseState::basis(1, 0).unwrap();
        let o = DenseOperator::fidelity_observable(&z0);
        assert!(close(v_single(&o, &z0.projector()).unwrap(), 0.5, 1e-12));
        let z = DenseOperator::pauli(&PauliString::from_label("Z").unwrap()).unwrap();
        assert!(close(v_single(&z, &DenseOperator::maximally_mixed(1)).unwrap(), 3.0, 1e-12));
        assert!(close(v_fidelity(2.0, 0.0).unwrap(), 0.5, 1e-15));
        assert!(close(v_fidelity(4.0, 2.0 / 3.0).unwrap(), 10.0 / 9.0, 1e-14));
        assert!(v_fidelity(2.0, 1.5).is_err());
    }

    #[test]
    fn fidelity_examples() {
        assert!(close(vstar_4design_fidelity(4.0), 2.0 / 7.0, 1e-15));
        assert!(close(vstar_4design_fidelity(2.0), 0.2, 1e-15));
        assert!(close(vstar_clifford_fidelity(2.0, 0.0).unwrap(), 0.5, 1e-15));
        for d in [4.0, 8.0, 16.0, 32.0] {
            let m2 = ((d + 3.0) / 4.0f64).log2();
            assert!(close(vstar_clifford_fidelity(d, m2).unwrap(), vstar_4design_fidelity(d), 1e-14));
        }
        assert!(close(vstar_tuk_fidelity(2.0, 0.0, 1).unwrap(), 0.125, 1e-14));
        assert!(close(vstar_tuk_fidelity(2.0, (4.0f64 / 3.0).log2(), 1).unwrap(), 7.0 / 32.0, 1e-14));
        assert!(close(vstar_ukl_fidelity(4.0, 0.0, 1, 1).unwrap(), 2.0 / 3.0, 1e-14));
        assert!(close(vstar_ukl_fidelity(2.0, 0.0, 1, 200).unwrap(), 0.2, 1e-12));
        assert!(vstar_clifford_fidelity(2.0, -0.1).is_err());
    }

    #[test]
    fn alpha_beta_examples() {
        let ab = alpha_beta(2.0, 1).unwrap();
        assert!(close(ab.alpha, 1.0 / 6.0, 1e-15) && close(ab.beta, 2.0 / 3.0, 1e-15));
        let ab = alpha_beta(4.0, 1).unwrap();
        assert!(close(ab.alpha, 8.0 / 15.0, 1e-15) && close(ab.beta, 11.0 / 15.0, 1e-15));
        let ab = alpha_beta(2f64.powi(40), 3).unwrap();
        assert!(close(ab.alpha, 0.75f64.powi(3), 1e-9) && close(ab.beta, 0.75f64.powi(3), 1e-9));
        assert!(alpha_beta(4.0, 0).is_err());
        // general β formula agrees with the k = 1 short form away from d = 2
        let d = 8.0;
        let b = (d * d * (d * d * GAMMA - 4.0) + 4.0) / ((d * d - 1.0) * (d * d - 4.0));
        assert!(close(b, alpha_beta(d, 1).unwrap().beta, 1e-14));
    }

    #[test]
    fn g_path_reduces_to_fidelity_forms() {
        for n in 1..=6 {
            let d = (n as f64).exp2();
            for m2 in [0.0, 0.3, 1.1] {
                let cl = vstar_fidelity_gpath(EnsembleKind::Clifford, d, m2).unwrap();
                assert!(close(cl, vstar_clifford_fidelity(d, m2).unwrap(), 1e-12));
                let h = vstar_fidelity_gpath(EnsembleKind::FourDesign, d, m2).unwrap();
                assert!(close(h, vstar_4design_fidelity(d), 1e-12));
                for k in 1..=n {
                    let t = vstar_fidelity_gpath(EnsembleKind::SimpleT { k }, d, m2).unwrap();
                    assert!(close(t, vstar_tuk_fidelity(d, m2, k).unwrap(), 1e-12), "n={n} k={k}");
                    let u = vstar_fidelity_gpath(EnsembleKind::Interleaved { k, l: 2 }, d, m2).unwrap();
                    assert!(close(u, vstar_ukl_fidelity(d, m2, k, 2).unwrap(), 1e-12));
                }
            }
        }
    }

    #[test]
    fn tuk_single_qubit_value() {
        // n = k = 1, ρ = φ: V_* = 1/2 − (3/8)·2^{−M₂}
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let phi = DenseState::haar(1, &mut rng);
            let m2 = phi.sre2().unwrap();
            let v = vstar_tuk(&DenseOperator::fidelity_observable(&phi), &phi.projector(), 1).unwrap();
            assert!(close(v, 0.5 - 0.375 * (-m2).exp2(), 1e-12));
        }
    }

    #[test]
    fn xi_fidelity_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=3 {
            let phi = DenseState::haar(n, &mut rng);
            let m2 = phi.sre2().unwrap();
            let d = phi.dim() as f64;
            let a = xi_traces(&DenseOperator::fidelity_observable(&phi), &phi.projector()).unwrap();
            let b = xi_traces_fidelity(d, m2).unwrap();
            for i in 0..5 {
                assert!(close(a.0[i], b.0[i], 1e-10), "n={n} i={i}: {} vs {}", a.0[i], b.0[i]);
            }
        }
    }

    #[test]
    fn pauli_observable_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=2 {
            let rho = DenseOperator::random_state(n, 2, &mut rng);
            let xr = rho.char_vector().unwrap();
            let d = rho.dim() as f64;
            for idx in 1..1usize << (2 * n) {
                let p = DenseOperator::pauli(&PauliString::from_index(n, idx).unwrap()).unwrap();
                let c = xr.values[idx];
                assert!(close(v_single(&p, &rho).unwrap(), d + 1.0 - c * c, 1e-12));
                assert!(close(vstar_clifford(&p, &rho).unwrap(), d * c * c, 1e-12));
            }
        }
    }

    #[test]
    fn averages_examples() {
        let (_, vs) = ensemble_averages(8.0, 1.0, 2.0).unwrap();
        assert!(close(vs, 2.0 / 9.0, 1e-15));
        assert!(close(ensemble_averages(8.0, 0.125, 1.0).unwrap().1, 0.0, 1e-15));
        let (a, b) = average_fidelity(8.0);
        assert!(close(a, 1.4, 1e-15) && close(b, 28.0 / 110.0, 1e-15));
    }

    #[test]
    fn depolarizing_examples() {
        assert!(close(vstar_clifford_fidelity_depolarized(2.0, 0.0, 0.5).unwrap(), 0.125, 1e-15));
        assert_eq!(depolarized(0.3, 1.0).unwrap(), 0.0);
        for d in [2.0, 8.0, 64.0] {
            for p in [0.0, 0.2, 0.7, 1.0] {
                let f = 1.0 - p + p / d;
                assert!(close(v_fidelity_depolarized(d, p).unwrap(), v_fidelity(d, f).unwrap(), 1e-12));
            }
            let pm = v_fidelity_depolarized_argmax(d);
            if pm <= 1.0 {
                let vmax = 2.0 * d * (d + 1.0) / (d + 2.0).powi(2);
                assert!(close(v_fidelity_depolarized(d, pm).unwrap(), vmax, 1e-12));
            }
        }
    }

    #[test]
    fn vr_examples() {
        assert_eq!(vr_combine(0.7, 0.1, 1).unwrap(), 0.7);
        assert!(close(vr_combine(0.5, 0.5, 10).unwrap(), 0.5, 1e-15));
        assert!(close(vr_combine(0.5, 0.2, 1_000_000_000).unwrap(), 0.2, 1e-9));
        assert!(vr_combine(0.5, 0.2, 0).is_err());
    }

    #[test]
    fn canonical_forms() {
        let s = EnsembleSpec::new(3, EnsembleKind::Interleaved { k: 2, l: 0 }).unwrap();
        assert_eq!(s.canonical(), EnsembleKind::Clifford);
        assert_eq!(canonical_kind(EnsembleKind::SimpleT { k: 0 }), EnsembleKind::Clifford);
        assert!(EnsembleSpec::new(2, EnsembleKind::SimpleT { k: 3 }).is_err());
    }
}
