//! Shared property checks for the integration suites and the acceptance harness.
//!
//! Each check returns the worst violation (≤ 0 means the property holds);
//! callers compare it against [`SLACK`].
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;
use thrifty_shadow::sim::circuit_rng;
use thrifty_shadow::states::{cross_chars, top_d_sum, Characterize, DenseOperator};
use thrifty_shadow::variance::{
    alpha_beta, analyze, analyze_fidelity, clifford_chain, vstar_gpath, EnsembleKind, GAMMA,
};

pub const SLACK: f64 = 1e-8;
pub const CASES: u32 = 500;

pub fn config() -> Config {
    Config { cases: CASES, failure_persistence: None, ..Config::default() }
}

/// Random `(ρ, O)` of random rank; `O` traceless Hermitian.
pub fn pair(n: usize, seed: u64) -> (DenseOperator, DenseOperator) {
    let mut rng = circuit_rng(seed, 0);
    let rank = rng.random_range(1..=1usize << n);
    (DenseOperator::random_state(n, rank, &mut rng), DenseOperator::random_observable(n, &mut rng))
}

fn worst(vals: &[f64]) -> f64 {
    vals.iter().fold(f64::NEG_INFINITY, |m, &v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

/// `‖Ξ̃‖² = ‖Ξ‖²` and `|Ξ̃·Ξ| ≤ ‖Ξ‖²`, relative to `‖Ξ‖²`.
pub fn cross_char_equality(n: usize, seed: u64) -> f64 {
    let (rho, o) = pair(n, seed);
    let cc = cross_chars(&rho, &o).unwrap();
    let c2 = cc.cross_norm_sq();
    let t2 = cc.twisted.norm2_sq();
    let s = c2.max(1.0);
    worst(&[(t2 - c2).abs() / s, (cc.twisted_dot().abs() - c2) / s])
}

/// `‖Ξ_{ρ,O}‖² ≤ ‖Ξ_O²‖_[d] ≤ d‖O‖²`.
pub fn char_norm_chain(n: usize, seed: u64) -> f64 {
    let (rho, o) = pair(n, seed);
    let c2 = cross_chars(&rho, &o).unwrap().cross_norm_sq();
    let top = top_d_sum(&o.char_vector().unwrap());
    let full = o.dim() as f64 * o.hs_norm_sq();
    let s = full.max(1.0);
    worst(&[(c2 - top) / s, (top - full) / s])
}

/// Clifford chain `V_* ≤ V_△ ≤ cross bound ≤ norm bound`.
pub fn clifford_bound_chain(n: usize, seed: u64) -> f64 {
    let (rho, o) = pair(n, seed);
    let c = clifford_chain(&o, &rho).unwrap();
    let s = c.norm_bound.max(1.0);
    worst(&[(c.vstar - c.v_triangle) / s, (c.v_triangle - c.cross_bound) / s, (c.cross_bound - c.norm_bound) / s])
}

/// Ensemble drawn from a selector; T counts clamp to `n`.
pub fn ensemble(sel: u8, n: usize, k: usize, l: usize) -> EnsembleKind {
    let k = k.min(n);
    match sel % 4 {
        0 => EnsembleKind::FourDesign,
        1 => EnsembleKind::Clifford,
        2 => EnsembleKind::Interleaved { k: k.max(1), l },
        _ => EnsembleKind::SimpleT { k },
    }
}

/// `V ≥ 0` and `V_* ≥ 0` on dense pairs (n ≤ 3) and on the fidelity closed forms.
pub fn nonnegativity(n: usize, seed: u64, sel: u8, k: usize, l: usize, nf: usize, u: f64, p: f64) -> f64 {
    let (rho, o) = pair(n, seed);
    let dense = analyze(ensemble(sel, n, k, l), &o, &rho).unwrap();
    let d = (nf as f64).exp2();
    // physical range of the pure-state SRE
    let m2 = u * ((d + 1.0) / 2.0).log2();
    let fid = analyze_fidelity(ensemble(sel, nf, k, l), d, m2, p).unwrap();
    let s = o.hs_norm_sq().max(1.0);
    worst(&[-dense.v / s, -dense.vstar / s, -fid.v, -fid.vstar])
}

/// `0 < α_k ≤ β_k < γᵏ` and `α₁^{kl} ≤ α_kˡ ≤ β_kˡ ≤ β₁^{kl}`, relative.
pub fn alpha_beta_chain(n: usize, k: usize, l: usize) -> f64 {
    let k = k.min(n);
    let d = (n as f64).exp2();
    let ab = alpha_beta(d, k).unwrap();
    let ab1 = alpha_beta(d, 1).unwrap();
    let gk = GAMMA.powi(k as i32);
    let kl = (k * l) as i32;
    let chain = [ab1.alpha.powi(kl), ab.alpha.powi(l as i32), ab.beta.powi(l as i32), ab1.beta.powi(kl)];
    let mut v = vec![-ab.alpha, (ab.alpha - ab.beta) / gk, (ab.beta - gk) / gk];
    if ab.beta >= gk || ab.alpha <= 0.0 {
        v.push(f64::INFINITY);
    }
    for w in chain.windows(2) {
        v.push((w[0] - w[1]) / w[1].abs().max(f64::MIN_POSITIVE));
    }
    worst(&v)
}

/// `V_*(O, ρ_p) = (1−p)² V_*(O, ρ)` evaluated densely on the depolarized state.
pub fn depolarizing_scaling(n: usize, seed: u64, sel: u8, k: usize, l: usize, p: f64) -> f64 {
    let (rho, o) = pair(n, seed);
    let kind = ensemble(sel, n, k, l);
    let base = vstar_gpath(kind, &o, &rho).unwrap();
    let noisy = vstar_gpath(kind, &o, &rho.depolarize(p).unwrap()).unwrap();
    (noisy - (1.0 - p).powi(2) * base).abs() / o.hs_norm_sq().max(1.0)
}

fn check(v: f64, what: &str) -> Result<(), TestCaseError> {
    if v <= SLACK {
        Ok(())
    } else {
        Err(TestCaseError::fail(format!("{what}: violation {v:e}")))
    }
}

/// One named 500-case property run; `Err` carries the minimal failing input.
pub type PropertyRun = fn(&mut TestRunner) -> Result<(), String>;

pub fn properties() -> Vec<(&'static str, PropertyRun)> {
    vec![
        ("cross-char norm equality", |r| {
            r.run(&(1usize..=3, any::<u64>()), |(n, s)| check(cross_char_equality(n, s), "cross char"))
                .map_err(|e| e.to_string())
        }),
        ("char norm chain", |r| {
            r.run(&(1usize..=3, any::<u64>()), |(n, s)| check(char_norm_chain(n, s), "char chain"))
                .map_err(|e| e.to_string())
        }),
        ("clifford bound chain", |r| {
            r.run(&(1usize..=3, any::<u64>()), |(n, s)| check(clifford_bound_chain(n, s), "bound chain"))
                .map_err(|e| e.to_string())
        }),
        ("nonnegativity", |r| {
            let st = (1usize..=3, any::<u64>(), any::<u8>(), 0usize..=12, 0usize..=6, 1usize..=20, 0.0..=1.0f64, 0.0..=1.0f64);
            r.run(&st, |(n, s, sel, k, l, nf, u, p)| check(nonnegativity(n, s, sel, k, l, nf, u, p), "nonnegativity"))
                .map_err(|e| e.to_string())
        }),
        ("alpha/beta chain", |r| {
            r.run(&(1usize..=12, 1usize..=12, 1usize..=6), |(n, k, l)| check(alpha_beta_chain(n, k, l), "alpha/beta"))
                .map_err(|e| e.to_string())
        }),
        ("depolarizing (1-p)^2 scaling", |r| {
            let st = (1usize..=3, any::<u64>(), any::<u8>(), 0usize..=3, 0usize..=4, 0.0..=1.0f64);
            r.run(&st, |(n, s, sel, k, l, p)| check(depolarizing_scaling(n, s, sel, k, l, p), "depolarizing"))
                .map_err(|e| e.to_string())
        }),
    ]
}
