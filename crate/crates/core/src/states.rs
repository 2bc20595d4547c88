//! Dense states and observables, characteristic functions and stabilizer 2-Rényi entropy.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dense::{haar_vector, CMat, CVec, ONE, ZERO};
use crate::error::{invalid, Error, Result};
use crate::pauli::{pauli_index, PauliString};

/// Full 4ⁿ characteristic vectors are materialized up to this size.
pub const CHAR_MAX: usize = 8;

const NORM_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: CVec,
}

impl DenseState {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: amps.len() });
        }
        let v = CVec::from_vec(amps);
        let nrm = v.norm();
        if (nrm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotAState(format!("norm {nrm}")));
        }
        Ok(DenseState { n, amps: v })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        let v = CVec::from_vec(amps);
        let nrm = v.norm();
        if nrm == 0.0 {
            return Err(Error::NotAState("zero vector".into()));
        }
        DenseState::new(n, (v / Complex64::new(nrm, 0.0)).as_slice().to_vec())
    }

    pub fn basis(n: usize, b: usize) -> Result<Self> {
        let d = 1usize << n;
        if b >= d {
            return Err(Error::IndexOutOfRange { idx: b, n });
        }
        let mut v = vec![ZERO; d];
        v[b] = ONE;
        Ok(DenseState { n, amps: CVec::from_vec(v) })
    }

    pub fn haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        DenseState { n, amps: haar_vector(1 << n, rng) }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        1 << self.n
    }
    pub fn amplitudes(&self) -> &[Complex64] {
        self.amps.as_slice()
    }
    pub fn vector(&self) -> &CVec {
        &self.amps
    }

    pub fn projector(&self) -> DenseOperator {
        let m = &self.amps * self.amps.adjoint();
        DenseOperator { n: self.n, mat: m, hermitian: true, traceless: false }
    }

    /// |⟨self|other⟩|²
    pub fn overlap(&self, other: &DenseState) -> f64 {
        self.amps.dotc(&other.amps).norm_sqr()
    }

    pub fn tensor(&self, other: &DenseState) -> DenseState {
        // qubits of `self` come first (low bits)
        let amps = other.amps.kronecker(&self.amps);
        DenseState { n: self.n + other.n, amps }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    n: usize,
    mat: CMat,
    hermitian: bool,
    traceless: bool,
}

impl DenseOperator {
    /// Wraps a matrix and records whether it is Hermitian and traceless.
    pub fn new(n: usize, mat: CMat) -> Result<Self> {
        let d = 1usize << n;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mat.nrows() });
        }
        let herm = (&mat - mat.adjoint()).norm() <= NORM_TOL * (1.0 + mat.norm());
        let traceless = mat.trace().norm() <= NORM_TOL * (1.0 + mat.norm());
        Ok(DenseOperator { n, mat, hermitian: herm, traceless })
    }

    /// Hermitian operator required; fails otherwise.
    pub fn hermitian(n: usize, mat: CMat) -> Result<Self> {
        let op = DenseOperator::new(n, mat)?;
        if !op.hermitian {
            let dev = (&op.mat - op.mat.adjoint()).norm();
            return Err(Error::NotHermitian(dev));
        }
        Ok(op)
    }

    /// Traceless Hermitian observable; fails otherwise.
    pub fn observable(n: usize, mat: CMat) -> Result<Self> {
        let op = DenseOperator::hermitian(n, mat)?;
        op.require_traceless()?;
        Ok(op)
    }

    /// Density matrix; checks unit trace and positivity.
    pub fn state(n: usize, mat: CMat) -> Result<Self> {
        let op = DenseOperator::hermitian(n, mat)?;
        op.validate_state()?;
        Ok(op)
    }

    pub fn identity(n: usize) -> Self {
        let d = 1usize << n;
        DenseOperator { n, mat: CMat::identity(d, d), hermitian: true, traceless: false }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = (1usize << n) as f64;
        let mut op = DenseOperator::identity(n);
        op.mat /= Complex64::new(d, 0.0);
        op
    }

    /// `|φ⟩⟨φ| − 1/d`.
    pub fn fidelity_observable(phi: &DenseState) -> Self {
        let d = phi.dim();
        let mut m = &phi.amps * phi.amps.adjoint();
        for i in 0..d {
            m[(i, i)] -= Complex64::new(1.0 / d as f64, 0.0);
        }
        DenseOperator { n: phi.n, mat: m, hermitian: true, traceless: true }
    }

    pub fn pauli(p: &PauliString) -> Result<Self> {
        if !p.is_hermitian() {
            return invalid("Pauli observable must be Hermitian");
        }
        Ok(DenseOperator { n: p.n(), mat: p.to_dense(), hermitian: true, traceless: !p.is_identity() })
    }

    /// `(1 − p)ρ + p·1/d`.
    pub fn depolarize(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("depolarizing strength {p} outside [0,1]"));
        }
        let d = self.dim() as f64;
        let mut m = &self.mat * Complex64::new(1.0 - p, 0.0);
        for i in 0..self.dim() {
            m[(i, i)] += Complex64::new(p / d, 0.0);
        }
        Ok(DenseOperator { n: self.n, mat: m, hermitian: self.hermitian, traceless: false })
    }

    /// Random density matrix `G G† / tr` with a rank-`rank` Ginibre factor.
    pub fn random_state<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Self {
        let d = 1usize << n;
        let g = CMat::from_fn(d, rank.max(1), |_, _| gauss(rng));
        let mut m = &g * g.adjoint();
        let t = m.trace();
        m /= t;
        DenseOperator { n, mat: m, hermitian: true, traceless: false }
    }

    /// Random traceless Hermitian operator with unit Hilbert–Schmidt norm.
    pub fn random_observable<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let d = 1usize << n;
        let g = CMat::from_fn(d, d, |_, _| gauss(rng));
        let mut h = &g + g.adjoint();
        let tr = h.trace() / Complex64::new(d as f64, 0.0);
        for i in 0..d {
            h[(i, i)] -= tr;
        }
        let nrm = h.norm();
        h /= Complex64::new(nrm, 0.0);
        DenseOperator { n, mat: h, hermitian: true, traceless: true }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        1 << self.n
    }
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }
    pub fn is_traceless(&self) -> bool {
        self.traceless
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// ‖X‖₂² = tr(X†X).
    pub fn hs_norm_sq(&self) -> f64 {
        self.mat.norm_squared()
    }

    pub fn purity(&self) -> f64 {
        crate::dense::trace_prod(&self.mat, &self.mat).re
    }

    pub fn require_traceless(&self) -> Result<()> {
        if !self.traceless {
            return Err(Error::NotTraceless(self.mat.trace().norm()));
        }
        Ok(())
    }

    pub fn validate_state(&self) -> Result<()> {
        if !self.hermitian {
            return Err(Error::NotAState("not Hermitian".into()));
        }
        let t = self.mat.trace();
        if (t - ONE).norm() > 1e-8 {
            return Err(Error::NotAState(format!("trace {t}")));
        }
        let ev = SymmetricEigen::new(self.mat.clone()).eigenvalues;
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::NotAState(format!("smallest eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// tr(self · other)
    pub fn trace_with(&self, other: &DenseOperator) -> Complex64 {
        crate::dense::trace_prod(&self.mat, &other.mat)
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

// ---------------------------------------------------------------------------
// Characteristic functions

#[derive(Clone, Debug, PartialEq)]
pub struct CharVector {
    pub n: usize,
    pub values: Vec<f64>,
}

impl CharVector {
    pub fn dim(&self) -> usize {
        1 << self.n
    }
    pub fn norm2_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
    pub fn norm4_4(&self) -> f64 {
        self.values.iter().map(|v| v * v * v * v).sum()
    }
    pub fn dot(&self, other: &CharVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sum of the d largest entries of the squared vector.
pub fn top_d_sum(c: &CharVector) -> f64 {
    let mut sq: Vec<f64> = c.values.iter().map(|v| v * v).collect();
    let d = c.dim().min(sq.len());
    sq.select_nth_unstable_by(d.saturating_sub(1), |a, b| b.partial_cmp(a).unwrap());
    sq[..d].iter().sum()
}

/// In-place Walsh–Hadamard transform: `f[z] ← Σ_a (−1)^{z·a} f[a]`.
fn wht(f: &mut [Complex64]) {
    let len = f.len();
    let mut h = 1;
    while h < len {
        for i in (0..len).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (f[j], f[j + h]);
                f[j] = a + b;
                f[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Values `tr(M P)` for all Paulis, given the accessor `m(a, b)` = M[a, b].
fn char_from_entries(n: usize, m: impl Fn(usize, usize) -> Complex64) -> Vec<Complex64> {
    let d = 1usize << n;
    let mut out = vec![ZERO; d * d];
    let mut buf = vec![ZERO; d];
    for x in 0..d {
        // tr(M P) = i^{|x∧z|} Σ_a M[a, a⊕x] (−1)^{z·a}
        for a in 0..d {
            buf[a] = m(a, a ^ x);
        }
        wht(&mut buf);
        for z in 0..d {
            let ph = crate::pauli::i_pow((x & z).count_ones());
            out[pauli_index(n, x as u64, z as u64)] = buf[z] * ph;
        }
    }
    out
}

fn real_parts(n: usize, v: Vec<Complex64>, scale: f64) -> Result<CharVector> {
    let worst = v.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if worst > 1e-8 * scale.max(1.0) {
        return Err(Error::NotHermitian(worst));
    }
    Ok(CharVector { n, values: v.into_iter().map(|c| c.re).collect() })
}

fn char_cutoff(n: usize) -> Result<()> {
    if n > CHAR_MAX {
        return Err(Error::CutoffExceeded { what: "characteristic vector", n, max: CHAR_MAX });
    }
    Ok(())
}

pub trait Characterize {
    fn char_vector(&self) -> Result<CharVector>;
}

impl Characterize for DenseState {
    fn char_vector(&self) -> Result<CharVector> {
        char_cutoff(self.n)?;
        let a = self.amps.as_slice();
        let v = char_from_entries(self.n, |i, j| a[i] * a[j].conj());
        real_parts(self.n, v, 1.0)
    }
}

impl Characterize for DenseOperator {
    fn char_vector(&self) -> Result<CharVector> {
        char_cutoff(self.n)?;
        let v = char_from_entries(self.n, |i, j| self.mat[(i, j)]);
        real_parts(self.n, v, self.mat.norm())
    }
}

pub fn char_vector<T: Characterize + ?Sized>(x: &T) -> Result<CharVector> {
    x.char_vector()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossCharPair {
    pub n: usize,
    pub cross: CharVector,
    pub twisted: CharVector,
}

impl CrossCharPair {
    /// ‖Ξ_{ρ,O}‖₂²
    pub fn cross_norm_sq(&self) -> f64 {
        self.cross.norm2_sq()
    }
    /// Ξ̃_{ρ,O}·Ξ_{ρ,O}
    pub fn twisted_dot(&self) -> f64 {
        self.twisted.dot(&self.cross)
    }
}

/// `cross[P] = tr(ρP)tr(OP)` and `twisted[P] = tr(ρPOP)`.
pub fn cross_chars(rho: &DenseOperator, o: &DenseOperator) -> Result<CrossCharPair> {
    if rho.n != o.n {
        return Err(Error::DimensionMismatch { expected: rho.n, found: o.n });
    }
    let n = rho.n;
    char_cutoff(n)?;
    let xr = rho.char_vector()?;
    let xo = o.char_vector()?;
    let cross = CharVector { n, values: xr.values.iter().zip(&xo.values).map(|(a, b)| a * b).collect() };

    // tr(ρ P O P) = Σ_s (−1)^{z·s} g_x(s),  g_x(s) = Σ_a ρ[a⊕s, a] O[a⊕x, a⊕s⊕x]
    let d = 1usize << n;
    let (r, m) = (&rho.mat, &o.mat);
    let mut tw = vec![0.0; d * d];
    let mut buf = vec![ZERO; d];
    let mut worst: f64 = 0.0;
    for x in 0..d {
        for s in 0..d {
            let mut acc = ZERO;
            for a in 0..d {
                acc += r[(a ^ s, a)] * m[(a ^ x, a ^ s ^ x)];
            }
            buf[s] = acc;
        }
        wht(&mut buf);
        for z in 0..d {
            worst = worst.max(buf[z].im.abs());
            tw[pauli_index(n, x as u64, z as u64)] = buf[z].re;
        }
    }
    if worst > 1e-8 * (1.0 + m.norm()) {
        return Err(Error::NotHermitian(worst));
    }
    Ok(CrossCharPair { n, cross, twisted: CharVector { n, values: tw } })
}

// ---------------------------------------------------------------------------
// Stabilizer 2-Rényi entropy

fn sre_from_char(c: &CharVector) -> f64 {
    let m = -(c.norm4_4() / c.norm2_sq()).log2();
    if m.abs() < 1e-12 {
        0.0
    } else {
        m
    }
}

pub trait SreInput {
    fn sre2(&self) -> Result<f64>;
}

impl SreInput for DenseState {
    fn sre2(&self) -> Result<f64> {
        Ok(sre_from_char(&self.char_vector()?))
    }
}

impl SreInput for DenseOperator {
    /// Mixed-state version `−log₂(‖Ξ‖₄⁴ / (d·tr ρ²))`.
    fn sre2(&self) -> Result<f64> {
        self.validate_state()?;
        Ok(sre_from_char(&self.char_vector()?))
    }
}

pub fn sre2<T: SreInput + ?Sized>(x: &T) -> Result<f64> {
    x.sre2()
}

/// Additivity over tensor factors; the register need not fit the char cutoff.
pub fn sre2_product(factors: &[DenseState]) -> Result<f64> {
    factors.iter().map(|f| f.sre2()).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SreFamily {
    W { n: usize },
    WTheta { n: usize, theta: f64 },
    PhasedW { thetas: Vec<f64> },
    Snk { n: usize, k: usize, theta: f64 },
}

impl SreFamily {
    pub fn n(&self) -> usize {
        match self {
            SreFamily::W { n } | SreFamily::WTheta { n, .. } | SreFamily::Snk { n, .. } => *n,
            SreFamily::PhasedW { thetas } => thetas.len(),
        }
    }

    /// The dense state the family describes.
    pub fn state(&self) -> Result<DenseState> {
        match self {
            SreFamily::W { n } => w_state(*n, &vec![0.0; *n]),
            SreFamily::WTheta { n, theta } => {
                let th: Vec<f64> = (1..=*n).map(|j| j as f64 * theta).collect();
                w_state(*n, &th)
            }
            SreFamily::PhasedW { thetas } => w_state(thetas.len(), thetas),
            SreFamily::Snk { n, k, theta } => snk_state(*n, *k, *theta),
        }
    }
}

fn phased_w_sre(n: usize, mod_sq: f64) -> f64 {
    let nf = n as f64;
    (nf.powi(4) / (6.0 * nf * (nf - 1.0) + mod_sq)).log2()
}

/// Closed-form M₂ for the named families.
pub fn sre2_closed(family: &SreFamily) -> Result<f64> {
    match family {
        SreFamily::W { n } => {
            if *n == 0 {
                return invalid("n must be positive");
            }
            let nf = *n as f64;
            Ok((nf.powi(3) / (7.0 * nf - 6.0)).log2())
        }
        SreFamily::WTheta { n, theta } => {
            if *n == 0 {
                return invalid("n must be positive");
            }
            let s2 = (2.0 * theta).sin();
            let ratio = if s2.abs() < 1e-9 {
                (*n * *n) as f64
            } else {
                let num = (2.0 * *n as f64 * theta).sin();
                num * num / (s2 * s2)
            };
            Ok(phased_w_sre(*n, ratio))
        }
        SreFamily::PhasedW { thetas } => {
            if thetas.is_empty() {
                return invalid("need at least one phase");
            }
            let s: Complex64 = thetas.iter().map(|t| Complex64::from_polar(1.0, 4.0 * t)).sum();
            Ok(phased_w_sre(thetas.len(), s.norm_sqr()))
        }
        SreFamily::Snk { n, k, theta } => {
            if *n == 0 || k > n {
                return invalid(format!("need 0 ≤ k ≤ n, n ≥ 1 (got n={n}, k={k})"));
            }
            let m = -(*k as f64) * (((4.0 * theta).cos() + 7.0) / 8.0).log2();
            Ok(if m.abs() < 1e-15 { 0.0 } else { m })
        }
    }
}

/// Phased-W bounds `log₂(n³/(7n−6)) ≤ M₂ ≤ log₂(n³/(6(n−1)))` (upper bound infinite at n=1).
pub fn phased_w_bounds(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let lo = (nf.powi(3) / (7.0 * nf - 6.0)).log2();
    let hi = if n == 1 { f64::INFINITY } else { (nf.powi(3) / (6.0 * (nf - 1.0))).log2() };
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Named states

/// `Σ_j e^{iθ_j} X_j |0…0⟩ / √n`; `thetas[j]` multiplies the excitation on qubit `j`.
pub fn w_state(n: usize, thetas: &[f64]) -> Result<DenseState> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if thetas.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: thetas.len() });
    }
    if n > crate::dense::STATEVECTOR_MAX {
        return Err(Error::CutoffExceeded { what: "w_state", n, max: crate::dense::STATEVECTOR_MAX });
    }
    let mut v = vec![ZERO; 1 << n];
    let s = 1.0 / (n as f64).sqrt();
    for (j, t) in thetas.iter().enumerate() {
        v[1 << j] = Complex64::from_polar(s, *t);
    }
    DenseState::new(n, v)
}

/// Single-qubit `(|0⟩ + e^{iθ}|1⟩)/√2`.
pub fn phase_plus(theta: f64) -> DenseState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DenseState { n: 1, amps: CVec::from_vec(vec![Complex64::new(s, 0.0), Complex64::from_polar(s, theta)]) }
}

/// `|0⟩^{⊗(n−k)} ⊗ [(|0⟩ + e^{iθ}|1⟩)/√2]^{⊗k}`, magic factors on qubits n−k..n−1.
pub fn snk_state(n: usize, k: usize, theta: f64) -> Result<DenseState> {
    if n == 0 || k > n {
        return invalid(format!("need n ≥ 1 and k ≤ n (got n={n}, k={k})"));
    }
    if n > crate::dense::STATEVECTOR_MAX {
        return Err(Error::CutoffExceeded { what: "snk_state", n, max: crate::dense::STATEVECTOR_MAX });
    }
    let zero = DenseState::basis(1, 0)?;
    let plus = phase_plus(theta);
    let mut s = if n - k > 0 { zero.clone() } else { plus.clone() };
    for q in 1..n {
        s = s.tensor(if q < n - k { &zero } else { &plus });
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn char_vector_examples() {
        let z0 = DenseState::basis(1, 0).unwrap();
        assert_eq!(z0.char_vector().unwrap().values, vec![1.0, 0.0, 1.0, 0.0]);
        let plus = phase_plus(0.0);
        let c = plus.char_vector().unwrap().values;
        assert!(close(c[0], 1.0, 1e-14) && close(c[1], 1.0, 1e-14) && c[2].abs() < 1e-14 && c[3].abs() < 1e-14);
        let o = DenseOperator::fidelity_observable(&z0);
        let c = o.char_vector().unwrap().values;
        assert!(c[0].abs() < 1e-14 && close(c[2], 1.0, 1e-14));
    }

    #[test]
    fn char_vector_matches_direct_trace() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            let rho = DenseOperator::random_state(n, 2, &mut rng);
            let psi = DenseState::haar(n, &mut rng);
            let cr = rho.char_vector().unwrap();
            let cp = psi.char_vector().unwrap();
            let proj = psi.projector();
            for idx in 0..1 << (2 * n) {
                let p = PauliString::from_index(n, idx).unwrap().to_dense();
                let t1 = crate::dense::trace_prod(rho.matrix(), &p);
                let t2 = crate::dense::trace_prod(proj.matrix(), &p);
                assert!(close(cr.values[idx], t1.re, 1e-12));
                assert!(close(cp.values[idx], t2.re, 1e-12));
            }
        }
    }

    #[test]
    fn twisted_matches_direct_trace() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let n = 2;
        let rho = DenseOperator::random_state(n, 3, &mut rng);
        let o = DenseOperator::random_observable(n, &mut rng);
        let cc = cross_chars(&rho, &o).unwrap();
        for idx in 0..16 {
            let p = PauliString::from_index(n, idx).unwrap().to_dense();
            let direct = (rho.matrix() * &p * o.matrix() * &p).trace().re;
            assert!(close(cc.twisted.values[idx], direct, 1e-12));
        }
    }

    #[test]
    fn sre_examples() {
        let w3 = w_state(3, &[0.0; 3]).unwrap();
        assert!(close(w3.sre2().unwrap(), (27.0f64 / 15.0).log2(), 1e-9));
        let t = snk_state(1, 1, PI / 4.0).unwrap();
        assert!(close(t.sre2().unwrap(), (4.0f64 / 3.0).log2(), 1e-9));
        for b in 0..8 {
            assert_eq!(DenseState::basis(3, b).unwrap().sre2().unwrap(), 0.0);
        }
        assert!(close(sre2_closed(&SreFamily::W { n: 10 }).unwrap(), (1000.0f64 / 64.0).log2(), 1e-12));
        let s = sre2_closed(&SreFamily::Snk { n: 20, k: 2, theta: PI / 4.0 }).unwrap();
        assert!(close(s, 2.0 * (4.0f64 / 3.0).log2(), 1e-12));
        let pw = sre2_closed(&SreFamily::PhasedW { thetas: vec![0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0] }).unwrap();
        assert!(close(pw, (256.0f64 / 72.0).log2(), 1e-12));
    }

    #[test]
    fn w_and_snk_examples() {
        let w1 = w_state(1, &[0.0]).unwrap();
        assert_eq!(w1.amplitudes()[1], ONE);
        let s = snk_state(2, 0, 1.3).unwrap();
        assert_eq!(s.amplitudes()[0], ONE);
        let p = snk_state(1, 1, 0.0).unwrap();
        assert!(close(p.amplitudes()[1].re, std::f64::consts::FRAC_1_SQRT_2, 1e-15));
        // magic factors sit on the high qubits
        let s = snk_state(2, 1, 0.0).unwrap();
        assert!(close(s.amplitudes()[2].re, std::f64::consts::FRAC_1_SQRT_2, 1e-15));
        assert!(s.amplitudes()[1].norm() < 1e-15);
        assert!(snk_state(2, 3, 0.0).is_err());
        assert!(w_state(2, &[0.0]).is_err());
    }

    #[test]
    fn top_d_examples() {
        let z = DenseOperator::pauli(&PauliString::from_label("Z").unwrap()).unwrap();
        assert!(close(top_d_sum(&z.char_vector().unwrap()), 4.0, 1e-12));
        let s = DenseState::basis(2, 1).unwrap();
        assert!(close(top_d_sum(&s.char_vector().unwrap()), 4.0, 1e-12));
    }

    #[test]
    fn state_validation() {
        let mut m = CMat::identity(2, 2);
        m[(0, 0)] = Complex64::new(1.2, 0.0);
        m[(1, 1)] = Complex64::new(-0.2, 0.0);
        assert!(DenseOperator::state(1, m).is_err());
        assert!(DenseOperator::observable(1, CMat::identity(2, 2)).is_err());
    }
}
