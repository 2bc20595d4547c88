//! Fourth cross-moment operator `Ω(𝒰, ℬ)` and the t = 4 Clifford commutant.
//!
//! Four-copy index convention: `I = a₁ + d·a₂ + d²·a₃ + d³·a₄` (copy 1 in the
//! lowest digit), so qubit `q` of copy `j` is bit `j·n + q` of `I`. The slot
//! order of `(O⊗ρ)^{⊗2}` is `(O, ρ, O, ρ)`.
//!
//! An element `(x, y) ∈ Z₂⁸` of a subspace is packed into a `u8` with `x` in
//! the low nibble and `y` in the high nibble; bit `i` of a nibble is tensor
//! slot `i`. Permutations act on slots, `(σx)_{σ(i)} = x_i`, and compose right
//! to left, so `r(σ)r(τ) = r(στ)`.
//!
//! Operators on `ℋ^{⊗4}` come in two flavours: [`SparseOp`] (real, used for
//! `R(𝒯)`, orbit sums, projectors and closed-form `Ω`, up to n = 3) and
//! [`SmallOperator`] (dense complex, empirical `Ω`, up to n = 2).

use std::io::{self, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{clifford_to_circuit, enumerate_clifford};
use crate::dense::{dense_unitary, unitarity_error, CMat, ZERO};
use crate::error::{invalid, Error, Result};
use crate::sim::{circuit_rng, sample_unitary};
use crate::states::{cross_chars, DenseOperator};
use crate::variance::{alpha_beta, canonical_kind, EnsembleKind, EnsembleSpec, GiSet, XiTraces, GAMMA, NU};

/// Largest register for sparse four-copy operators (16ⁿ = 4096 rows).
pub const SPARSE_MAX: usize = 3;
/// Largest register for dense four-copy operators (256 × 256).
pub const DENSE_OMEGA_MAX: usize = 2;

// ---------------------------------------------------------------------------
// Permutations of the four tensor slots

/// `p[i] = σ(i)` on slots 0..3.
pub type Perm = [u8; 4];

pub const IDENTITY: Perm = [0, 1, 2, 3];

/// Permutation from 1-based cycle notation: `&[&[1, 2, 3]]` is (123).
pub fn perm_from_cycles(cycles: &[&[u8]]) -> Perm {
    let mut p = IDENTITY;
    for c in cycles {
        for w in 0..c.len() {
            p[(c[w] - 1) as usize] = c[(w + 1) % c.len()] - 1;
        }
    }
    p
}

/// `(a∘b)(i) = a(b(i))`.
pub fn compose(a: &Perm, b: &Perm) -> Perm {
    [a[b[0] as usize], a[b[1] as usize], a[b[2] as usize], a[b[3] as usize]]
}

pub fn inverse(p: &Perm) -> Perm {
    let mut q = IDENTITY;
    for i in 0..4 {
        q[p[i] as usize] = i as u8;
    }
    q
}

fn cycle_lengths(p: &Perm) -> Vec<usize> {
    let mut seen = [false; 4];
    let mut out = Vec::new();
    for s in 0..4 {
        if seen[s] {
            continue;
        }
        let (mut j, mut len) = (s, 0);
        while !seen[j] {
            seen[j] = true;
            j = p[j] as usize;
            len += 1;
        }
        out.push(len);
    }
    out.sort_unstable();
    out
}

pub fn cycle_count(p: &Perm) -> usize {
    cycle_lengths(p).len()
}

/// Conjugacy class index: e, transposition, double transposition, 3-cycle, 4-cycle.
fn class_of(p: &Perm) -> usize {
    match cycle_lengths(p).as_slice() {
        [1, 1, 1, 1] => 0,
        [1, 1, 2] => 1,
        [2, 2] => 2,
        [1, 3] => 3,
        _ => 4,
    }
}

/// All 24 elements in lexicographic order of `[σ(0), …, σ(3)]`.
pub fn all_perms() -> Vec<Perm> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4u8 {
        for b in 0..4u8 {
            for c in 0..4u8 {
                for e in 0..4u8 {
                    let p = [a, b, c, e];
                    let mut seen = [false; 4];
                    p.iter().for_each(|&v| seen[v as usize] = true);
                    if seen.iter().all(|&s| s) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

#[inline]
fn act(p: &Perm, x: u8) -> u8 {
    let mut out = 0u8;
    for i in 0..4 {
        if (x >> i) & 1 == 1 {
            out |= 1 << p[i];
        }
    }
    out
}

/// The S̃₃ coset representatives {e, (12), (13), (23), (123), (132)}.
pub fn s3_tilde() -> [Perm; 6] {
    [
        IDENTITY,
        perm_from_cycles(&[&[1, 2]]),
        perm_from_cycles(&[&[1, 3]]),
        perm_from_cycles(&[&[2, 3]]),
        perm_from_cycles(&[&[1, 2, 3]]),
        perm_from_cycles(&[&[1, 3, 2]]),
    ]
}

// ---------------------------------------------------------------------------
// Irreducible representations of S₄

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Irrep {
    Four,
    ThreeOne,
    TwoTwo,
    TwoOneOne,
    OneOneOneOne,
}

// rows: irreps in `Irrep::ALL` order; columns: `class_of` order
const CHARACTERS: [[f64; 5]; 5] = [
    [1.0, 1.0, 1.0, 1.0, 1.0],
    [3.0, 1.0, -1.0, 0.0, -1.0],
    [2.0, 0.0, 2.0, -1.0, 0.0],
    [3.0, -1.0, -1.0, 0.0, 1.0],
    [1.0, -1.0, 1.0, 1.0, -1.0],
];

impl Irrep {
    pub const ALL: [Irrep; 5] = [Irrep::Four, Irrep::ThreeOne, Irrep::TwoTwo, Irrep::TwoOneOne, Irrep::OneOneOneOne];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        ["[4]", "[3,1]", "[2,2]", "[2,1,1]", "[1,1,1,1]"][self.index()]
    }

    pub fn character(self, p: &Perm) -> f64 {
        CHARACTERS[self.index()][class_of(p)]
    }

    pub fn dim(self) -> f64 {
        CHARACTERS[self.index()][0]
    }
}

// ---------------------------------------------------------------------------
// Stochastic Lagrangian subspaces

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubspaceTag {
    /// `𝒯_σ = {(σx, x)}`
    Permutation(Perm),
    /// `σ𝒯₄ = {(σx, y) : (x, y) ∈ 𝒯₄}`
    Coset(Perm),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StochasticLagrangian {
    basis: [u8; 4],
    tag: SubspaceTag,
}

/// Generators of 𝒯₄ as (x|y): (1001|1001), (0101|0101), (0000|1111), (1111|0000).
const T4_BASIS: [u8; 4] = [0x99, 0xAA, 0xF0, 0x0F];

impl StochasticLagrangian {
    pub fn permutation(p: Perm) -> Self {
        let mut basis = [0u8; 4];
        for (i, b) in basis.iter_mut().enumerate() {
            let e = 1u8 << i;
            *b = act(&p, e) | (e << 4);
        }
        StochasticLagrangian { basis, tag: SubspaceTag::Permutation(p) }
    }

    pub fn t4() -> Self {
        StochasticLagrangian::coset(IDENTITY)
    }

    pub fn coset(p: Perm) -> Self {
        let basis = T4_BASIS.map(|v| act(&p, v & 0x0F) | (v & 0xF0));
        StochasticLagrangian { basis, tag: SubspaceTag::Coset(p) }
    }

    pub fn basis(&self) -> [u8; 4] {
        self.basis
    }

    pub fn tag(&self) -> SubspaceTag {
        self.tag
    }

    /// The 16 span elements (with repeats if the generators are dependent), sorted.
    pub fn elements(&self) -> Vec<u8> {
        let mut out: Vec<u8> = (0..16u8)
            .map(|c| (0..4).filter(|&i| (c >> i) & 1 == 1).fold(0u8, |acc, i| acc ^ self.basis[i]))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn dimension(&self) -> u32 {
        let mut e = self.elements();
        e.dedup();
        e.len().trailing_zeros()
    }

    /// Dimension 4, contains `1₈`, and `|x| ≡ |y| (mod 4)` on every element.
    pub fn satisfies_axioms(&self) -> bool {
        let e = self.elements();
        let distinct = e.windows(2).all(|w| w[0] != w[1]);
        let ones = e.contains(&0xFF);
        let weights = e.iter().all(|&v| ((v & 0x0F).count_ones() + 4 - (v >> 4).count_ones()) % 4 == 0);
        distinct && ones && weights
    }

    pub fn intersection_dim(&self, other: &StochasticLagrangian) -> u32 {
        let (a, b) = (self.elements(), other.elements());
        a.iter().filter(|v| b.binary_search(v).is_ok()).count().trailing_zeros()
    }

    /// Element set with the two halves swapped.
    pub fn transposed_elements(&self) -> Vec<u8> {
        let mut t: Vec<u8> = self.elements().iter().map(|v| v.rotate_left(4)).collect();
        t.sort_unstable();
        t
    }

    /// `r(𝒯) = Σ_{(x,y)∈𝒯} |x⟩⟨y|` on (C²)^{⊗4}.
    pub fn r_small(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(16, 16);
        for v in self.elements() {
            m[((v & 0x0F) as usize, (v >> 4) as usize)] += 1.0;
        }
        m
    }

    /// `R(𝒯) = r(𝒯)^{⊗n}` on ℋ^{⊗4}.
    pub fn big_r(&self, n: usize) -> Result<SparseOp> {
        big_r(self, n)
    }
}

/// The 24 permutation subspaces followed by the six cosets S̃₃𝒯₄.
pub fn sigma44_enumerate() -> Vec<StochasticLagrangian> {
    let mut out: Vec<_> = all_perms().into_iter().map(StochasticLagrangian::permutation).collect();
    out.extend(s3_tilde().into_iter().map(StochasticLagrangian::coset));
    out
}

/// Membership lists of the five G×G orbits.
pub fn orbit_members() -> [Vec<StochasticLagrangian>; 5] {
    let p = |c: &[&[u8]]| StochasticLagrangian::permutation(perm_from_cycles(c));
    let t = |c: &[&[u8]]| StochasticLagrangian::coset(perm_from_cycles(c));
    [
        vec![p(&[]), p(&[&[1, 2]]), p(&[&[3, 4]]), p(&[&[1, 2], &[3, 4]])],
        vec![
            p(&[&[1, 3]]),
            p(&[&[2, 3]]),
            p(&[&[1, 4]]),
            p(&[&[2, 4]]),
            p(&[&[1, 2, 3]]),
            p(&[&[1, 3, 2]]),
            p(&[&[1, 2, 4]]),
            p(&[&[1, 4, 2]]),
            p(&[&[1, 3, 4]]),
            p(&[&[1, 4, 3]]),
            p(&[&[2, 3, 4]]),
            p(&[&[2, 4, 3]]),
            p(&[&[1, 2, 3, 4]]),
            p(&[&[1, 2, 4, 3]]),
            p(&[&[1, 3, 4, 2]]),
            p(&[&[1, 4, 3, 2]]),
        ],
        vec![p(&[&[1, 3], &[2, 4]]), p(&[&[1, 4], &[2, 3]]), p(&[&[1, 3, 2, 4]]), p(&[&[1, 4, 2, 3]])],
        vec![t(&[]), t(&[&[1, 2]])],
        vec![t(&[&[1, 3]]), t(&[&[2, 3]]), t(&[&[1, 2, 3]]), t(&[&[1, 3, 2]])],
    ]
}

fn check_sparse(n: usize) -> Result<()> {
    if n == 0 || n > SPARSE_MAX {
        return Err(Error::CutoffExceeded { what: "four-copy operator", n, max: SPARSE_MAX });
    }
    Ok(())
}

/// `tr(r₁ r₂ ⋯ r_k)^n`, the trace of the corresponding product of `R`'s.
pub fn word_trace(word: &[&DMatrix<f64>], n: usize) -> f64 {
    let mut m = DMatrix::<f64>::identity(16, 16);
    for r in word {
        m = &m * *r;
    }
    m.trace().powi(n as i32)
}

// ---------------------------------------------------------------------------
// Sparse real operators on ℋ^{⊗4}

/// Row-compressed real matrix of dimension 16ⁿ; rows sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    n: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

/// Bit positions of qubit `q` across the four copies.
#[inline]
fn spread(q: usize, nib: u8, n: usize) -> usize {
    let mut out = 0usize;
    for j in 0..4 {
        if (nib >> j) & 1 == 1 {
            out |= 1 << (j * n + q);
        }
    }
    out
}

#[inline]
fn nibble(idx: usize, q: usize, n: usize) -> usize {
    let mut out = 0usize;
    for j in 0..4 {
        out |= ((idx >> (j * n + q)) & 1) << j;
    }
    out
}

pub fn big_r(t: &StochasticLagrangian, n: usize) -> Result<SparseOp> {
    check_sparse(n)?;
    let mut ys: Vec<Vec<u8>> = vec![Vec::new(); 16];
    for v in t.elements() {
        ys[(v & 0x0F) as usize].push(v >> 4);
    }
    let dim = 1usize << (4 * n);
    let mut rows = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut cols = vec![(0usize, 1.0f64)];
        for q in 0..n {
            let choices = &ys[nibble(i, q, n)];
            let mut next = Vec::with_capacity(cols.len() * choices.len());
            for &(c, w) in &cols {
                for &y in choices {
                    next.push((c | spread(q, y, n), w));
                }
            }
            cols = next;
        }
        cols.sort_unstable_by_key(|e| e.0);
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(cols.len());
        for (c, w) in cols {
            match row.last_mut() {
                Some(last) if last.0 as usize == c => last.1 += w,
                _ => row.push((c as u32, w)),
            }
        }
        rows.push(row);
    }
    Ok(SparseOp { n, rows })
}

/// Dense row accumulator used by products and linear combinations.
struct RowAcc {
    vals: Vec<f64>,
    mark: Vec<bool>,
    touched: Vec<usize>,
}

impl RowAcc {
    fn new(dim: usize) -> Self {
        RowAcc { vals: vec![0.0; dim], mark: vec![false; dim], touched: Vec::new() }
    }
    #[inline]
    fn add(&mut self, j: usize, v: f64) {
        if !self.mark[j] {
            self.mark[j] = true;
            self.touched.push(j);
        }
        self.vals[j] += v;
    }
    fn drain(&mut self) -> Vec<(u32, f64)> {
        self.touched.sort_unstable();
        let mut out = Vec::with_capacity(self.touched.len());
        for &j in &self.touched {
            let v = self.vals[j];
            if v.abs() > 1e-15 {
                out.push((j as u32, v));
            }
            self.vals[j] = 0.0;
            self.mark[j] = false;
        }
        self.touched.clear();
        out
    }
}

impl SparseOp {
    pub fn zeros(n: usize) -> Result<Self> {
        check_sparse(n)?;
        Ok(SparseOp { n, rows: vec![Vec::new(); 1 << (4 * n)] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_sparse(n)?;
        Ok(SparseOp { n, rows: (0..1u32 << (4 * n)).map(|i| vec![(i, 1.0)]).collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&(j as u32), |e| e.0) {
            Ok(k) => row[k].1,
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    /// `Σ cₖ Aₖ` over operators of equal size.
    pub fn lin_comb(terms: &[(f64, &SparseOp)]) -> Result<SparseOp> {
        let Some(first) = terms.first() else {
            return invalid("empty linear combination");
        };
        let n = first.1.n;
        if terms.iter().any(|t| t.1.n != n) {
            return Err(Error::DimensionMismatch { expected: n, found: terms.iter().map(|t| t.1.n).max().unwrap_or(n) });
        }
        let dim = first.1.dim();
        let mut acc = RowAcc::new(dim);
        let rows = (0..dim)
            .map(|i| {
                for &(c, op) in terms {
                    if c != 0.0 {
                        for &(j, v) in &op.rows[i] {
                            acc.add(j as usize, c * v);
                        }
                    }
                }
                acc.drain()
            })
            .collect();
        Ok(SparseOp { n, rows })
    }

    pub fn scaled(&self, c: f64) -> SparseOp {
        SparseOp { n: self.n, rows: self.rows.iter().map(|r| r.iter().map(|&(j, v)| (j, c * v)).collect()).collect() }
    }

    pub fn matmul(&self, b: &SparseOp) -> SparseOp {
        debug_assert_eq!(self.n, b.n);
        let mut acc = RowAcc::new(self.dim());
        let rows = self
            .rows
            .iter()
            .map(|row| {
                for &(k, a) in row {
                    for &(j, v) in &b.rows[k as usize] {
                        acc.add(j as usize, a * v);
                    }
                }
                acc.drain()
            })
            .collect();
        SparseOp { n: self.n, rows }
    }

    pub fn transpose(&self) -> SparseOp {
        let mut rows = vec![Vec::new(); self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                rows[j as usize].push((i as u32, v));
            }
        }
        SparseOp { n: self.n, rows }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.rows.iter().flatten().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &SparseOp) -> f64 {
        match SparseOp::lin_comb(&[(1.0, self), (-1.0, other)]) {
            Ok(d) => d.frobenius_norm(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.distance(&self.transpose())
    }

    /// `‖P² − P‖_F`.
    pub fn idempotency_defect(&self) -> f64 {
        self.matmul(self).distance(self)
    }

    pub fn to_dense(&self) -> Result<SmallOperator> {
        if self.n > DENSE_OMEGA_MAX {
            return Err(Error::CutoffExceeded { what: "dense four-copy operator", n: self.n, max: DENSE_OMEGA_MAX });
        }
        let dim = self.dim();
        let mut m = CMat::zeros(dim, dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j as usize)] = Complex64::new(v, 0.0);
            }
        }
        SmallOperator::new(self.n, m)
    }
}

// ---------------------------------------------------------------------------
// Dense complex operators on ℋ^{⊗4}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallOperator {
    n: usize,
    m: CMat,
}

impl SmallOperator {
    pub fn new(n: usize, m: CMat) -> Result<Self> {
        if n == 0 || n > DENSE_OMEGA_MAX {
            return Err(Error::CutoffExceeded { what: "dense four-copy operator", n, max: DENSE_OMEGA_MAX });
        }
        let dim = 1usize << (4 * n);
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: m.nrows() });
        }
        Ok(SmallOperator { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.m - self.m.adjoint()).norm()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()) * Complex64::new(0.5, 0.0);
        let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Schatten 1- and ∞-norms of the Hermitian part.
    pub fn schatten_1_inf(&self) -> (f64, f64) {
        let e = self.eigenvalues();
        (e.iter().map(|v| v.abs()).sum(), e.iter().fold(0.0f64, |a, v| a.max(v.abs())))
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &SmallOperator) -> f64 {
        (&self.m - &other.m).iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    /// Partial trace over copy 4, as a `d³ × d³` matrix.
    pub fn partial_trace_last(&self) -> CMat {
        let d3 = 1usize << (3 * self.n);
        let d = 1usize << self.n;
        CMat::from_fn(d3, d3, |i, j| (0..d).map(|a| self.m[(i + a * d3, j + a * d3)]).sum())
    }

    /// `‖Ω − P_G Ω P_G‖_F`.
    pub fn support_defect(&self, p_g: &SparseOp) -> Result<f64> {
        let pg = p_g.to_dense()?;
        let inner = pg.matrix() * &self.m * pg.matrix();
        Ok((&self.m - inner).norm())
    }

    /// Little-endian binary dump: magic `TSOP`, u32 format version, u32 n,
    /// u64 rows, u64 cols, then row-major `(re, im)` f64 pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"TSOP")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        let dim = self.dim() as u64;
        w.write_all(&dim.to_le_bytes())?;
        w.write_all(&dim.to_le_bytes())?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.m[(i, j)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: io::Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        if buf.len() < 28 || &buf[..4] != b"TSOP" {
            return invalid("not a four-copy operator file");
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
        let (n, rows, cols) = (u32_at(8) as usize, u64_at(12) as usize, u64_at(20) as usize);
        if buf.len() != 28 + 16 * rows * cols {
            return invalid("truncated operator file");
        }
        let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
        let m = CMat::from_fn(rows, cols, |i, j| {
            let o = 28 + 16 * (i * cols + j);
            Complex64::new(f(o), f(o + 8))
        });
        SmallOperator::new(n, m)
    }
}

impl From<&SmallOperator> for CMat {
    fn from(s: &SmallOperator) -> CMat {
        s.m.clone()
    }
}

/// Read access shared by sparse and dense four-copy operators.
pub trait FourCopy {
    fn qubits(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> Complex64;
    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, Complex64));
    /// Frobenius distance to a sparse operator.
    fn distance_to(&self, s: &SparseOp) -> f64;
}

impl FourCopy for SparseOp {
    fn qubits(&self) -> usize {
        self.n
    }
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.get(i, j), 0.0)
    }
    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, Complex64)) {
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                f(i, j as usize, Complex64::new(v, 0.0));
            }
        }
    }
    fn distance_to(&self, s: &SparseOp) -> f64 {
        self.distance(s)
    }
}

impl FourCopy for SmallOperator {
    fn qubits(&self) -> usize {
        self.n
    }
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }
    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, Complex64)) {
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let z = self.m[(i, j)];
                if z != ZERO {
                    f(i, j, z);
                }
            }
        }
    }
    fn distance_to(&self, s: &SparseOp) -> f64 {
        let mut diff = self.m.clone();
        s.for_each_entry(&mut |i, j, v| diff[(i, j)] -= v);
        diff.norm()
    }
}

/// `tr(A P)` for a sparse `P`.
pub fn pairing<A: FourCopy + ?Sized>(a: &A, p: &SparseOp) -> Complex64 {
    let mut s = ZERO;
    p.for_each_entry(&mut |j, i, v| s += v * a.entry(i, j));
    s
}

/// `tr[A (F₁⊗F₂⊗F₃⊗F₄)]` with `F₁` on copy 1.
pub fn four_copy_trace<A: FourCopy + ?Sized>(a: &A, f: [&CMat; 4]) -> Result<Complex64> {
    let n = a.qubits();
    let d = 1usize << n;
    if f.iter().any(|m| m.nrows() != d || m.ncols() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: f[0].nrows() });
    }
    let mask = d - 1;
    let mut s = ZERO;
    a.for_each_entry(&mut |i, j, v| {
        let mut x = v;
        for (s_, m) in f.iter().enumerate() {
            let sh = s_ * n;
            x *= m[((j >> sh) & mask, (i >> sh) & mask)];
        }
        s += x;
    });
    Ok(s)
}

// ---------------------------------------------------------------------------
// Orbit operators, projectors, dimension table

/// `ℛᵢ = Σ_{𝒯 ∈ orbit i} R(𝒯)`.
pub fn orbit_operators(n: usize) -> Result<[SparseOp; 5]> {
    check_sparse(n)?;
    let members = orbit_members();
    let mut out = Vec::with_capacity(5);
    for orbit in &members {
        let rs = orbit.iter().map(|t| big_r(t, n)).collect::<Result<Vec<_>>>()?;
        let terms: Vec<(f64, &SparseOp)> = rs.iter().map(|r| (1.0, r)).collect();
        out.push(SparseOp::lin_comb(&terms)?);
    }
    Ok(out.try_into().expect("five orbits"))
}

/// Stabilizer group G = {e, (12), (34), (12)(34)} of the measurement slots.
pub fn g_group() -> [Perm; 4] {
    [IDENTITY, perm_from_cycles(&[&[1, 2]]), perm_from_cycles(&[&[3, 4]]), perm_from_cycles(&[&[1, 2], &[3, 4]])]
}

#[derive(Clone, Debug)]
pub struct Projectors {
    pub n: usize,
    /// `R(𝒯₄)/d`
    pub p_n: SparseOp,
    pub p_g: SparseOp,
    /// Indexed by [`Irrep::index`].
    pub p_lambda: Vec<SparseOp>,
    pub p_lambda_g: Vec<SparseOp>,
    pub plus: Vec<SparseOp>,
    pub minus: Vec<SparseOp>,
}

impl Projectors {
    pub fn lambda_g(&self, l: Irrep) -> &SparseOp {
        &self.p_lambda_g[l.index()]
    }
    pub fn plus(&self, l: Irrep) -> &SparseOp {
        &self.plus[l.index()]
    }
    pub fn minus(&self, l: Irrep) -> &SparseOp {
        &self.minus[l.index()]
    }
}

pub fn projectors(n: usize) -> Result<Projectors> {
    check_sparse(n)?;
    let d = (1usize << n) as f64;
    let perms = all_perms();
    let rs = perms.iter().map(|p| big_r(&StochasticLagrangian::permutation(*p), n)).collect::<Result<Vec<_>>>()?;
    let p_n = big_r(&StochasticLagrangian::t4(), n)?.scaled(1.0 / d);
    let g_ops = g_group().iter().map(|p| big_r(&StochasticLagrangian::permutation(*p), n)).collect::<Result<Vec<_>>>()?;
    let p_g = SparseOp::lin_comb(&g_ops.iter().map(|r| (0.25, r)).collect::<Vec<_>>())?;
    let mut p_lambda = Vec::new();
    let mut p_lambda_g = Vec::new();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for l in Irrep::ALL {
        let terms: Vec<(f64, &SparseOp)> =
            perms.iter().zip(&rs).map(|(p, r)| (l.dim() * l.character(p) / 24.0, r)).collect();
        let pl = SparseOp::lin_comb(&terms)?;
        let plg = pl.matmul(&p_g);
        let pp = plg.matmul(&p_n);
        let pm = SparseOp::lin_comb(&[(1.0, &plg), (-1.0, &pp)])?;
        p_lambda.push(pl);
        p_lambda_g.push(plg);
        plus.push(pp);
        minus.push(pm);
    }
    Ok(Projectors { n, p_n, p_g, p_lambda, p_lambda_g, plus, minus })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEntry {
    pub irrep: Irrep,
    pub total: f64,
    pub plus: f64,
    pub minus: f64,
}

/// Tabulated `D_{λ,G}` and its ± split.
pub fn dimension_formula(irrep: Irrep, d: f64) -> DimensionEntry {
    let d2 = d * d;
    let (total, plus) = match irrep {
        Irrep::Four => (d * (d + 1.0) * (d + 2.0) * (d + 3.0) / 24.0, (d + 1.0) * (d + 2.0) / 6.0),
        Irrep::ThreeOne => (d * (d + 2.0) * (d2 - 1.0) / 8.0, 0.0),
        Irrep::TwoTwo => (d2 * (d2 - 1.0) / 12.0, (d2 - 1.0) / 3.0),
        Irrep::TwoOneOne | Irrep::OneOneOneOne => (0.0, 0.0),
    };
    DimensionEntry { irrep, total, plus, minus: total - plus }
}

/// Exact traces from products of 16 × 16 factors; valid for any n.
pub fn dimension_traces(n: usize) -> Vec<DimensionEntry> {
    let d = (n as f64).exp2();
    let perms = all_perms();
    let rp: Vec<DMatrix<f64>> = perms.iter().map(|p| StochasticLagrangian::permutation(*p).r_small()).collect();
    let rg: Vec<DMatrix<f64>> = g_group().iter().map(|p| StochasticLagrangian::permutation(*p).r_small()).collect();
    let rt = StochasticLagrangian::t4().r_small();
    Irrep::ALL
        .iter()
        .map(|&l| {
            let (mut total, mut plus) = (0.0, 0.0);
            for (p, r) in perms.iter().zip(&rp) {
                let chi = l.character(p);
                if chi == 0.0 {
                    continue;
                }
                for g in &rg {
                    total += chi * word_trace(&[r, g], n);
                    plus += chi * word_trace(&[r, g, &rt], n);
                }
            }
            let c = l.dim() / 96.0;
            DimensionEntry { irrep: l, total: c * total, plus: c * plus / d, minus: c * (total - plus / d) }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Gram spectrum

/// `Γᵢⱼ = tr(R(𝒯ᵢ)† R(𝒯ⱼ)) = d^{dim(𝒯ᵢ ∩ 𝒯ⱼ)}`.
pub fn gram_matrix(n: usize) -> DMatrix<f64> {
    let s = sigma44_enumerate();
    DMatrix::from_fn(30, 30, |i, j| ((n * s[i].intersection_dim(&s[j]) as usize) as f64).exp2())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramSpectrum {
    pub n: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
}

pub fn gram_spectrum(n: usize) -> GramSpectrum {
    let mut e: Vec<f64> = SymmetricEigen::new(gram_matrix(n)).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    let top = e.last().copied().unwrap_or(0.0).abs();
    let rank = e.iter().filter(|v| v.abs() > 1e-9 * top).count();
    GramSpectrum { n, eigenvalues: e, rank }
}

/// The four predicted eigenvalues with multiplicities (1, 1, 14, 14).
pub fn gram_expected(d: f64) -> [(f64, usize); 4] {
    let d2 = d * d;
    [
        (d * (d - 1.0) * (d - 2.0) * (d - 4.0), 1),
        (d * (d + 1.0) * (d + 2.0) * (d + 4.0), 1),
        (d * (d2 - 1.0) * (d - 2.0), 14),
        (d * (d2 - 1.0) * (d + 2.0), 14),
    ]
}

impl GramSpectrum {
    /// Largest relative deviation from the predicted multiset.
    pub fn deviation_from_expected(&self) -> f64 {
        let d = (self.n as f64).exp2();
        let mut want: Vec<f64> = gram_expected(d).iter().flat_map(|&(v, m)| std::iter::repeat_n(v, m)).collect();
        want.sort_by(f64::total_cmp);
        let scale = want.last().copied().unwrap_or(1.0);
        self.eigenvalues.iter().zip(&want).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Empirical Ω

pub enum UnitarySource<'a> {
    /// Uniform average over the listed unitaries.
    List(&'a [CMat]),
    /// Full Clifford group, n ≤ 2.
    CliffordGroup,
    /// Monte Carlo over an ensemble; draw `i` uses `circuit_rng(seed, i)`.
    Sampled { spec: EnsembleSpec, samples: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct OmegaEstimate {
    pub omega: SmallOperator,
    pub samples: usize,
    pub exact: bool,
    /// Batch means (sampled mode only).
    pub batches: Vec<SmallOperator>,
}

impl OmegaEstimate {
    /// Standard error of a linear functional from the batch means.
    pub fn stderr<F: Fn(&SmallOperator) -> f64>(&self, f: F) -> Option<f64> {
        let b = self.batches.len();
        if b < 2 {
            return None;
        }
        let vals: Vec<f64> = self.batches.iter().map(&f).collect();
        let mean = vals.iter().sum::<f64>() / b as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        Some((var / b as f64).sqrt())
    }
}

const OMEGA_BATCHES: usize = 10;
const ENUM_CHUNKS: usize = 16;

/// `M = Σ_a (|w_a⟩⟨w_a|)^{⊗2}` with `w_a = U†|ψ_a⟩`.
fn basis_moment(u: &CMat, basis: &CMat) -> CMat {
    let d = u.nrows();
    let w = u.adjoint() * basis;
    let mut m = CMat::zeros(d * d, d * d);
    for a in 0..d {
        let col = w.column(a);
        let z = crate::dense::CVec::from_fn(d * d, |i, _| col[i % d] * col[i / d]);
        m += &z * z.adjoint();
    }
    m
}

/// `acc += M ⊗ M`, slots (1,2) in the low digits.
fn add_kron_square(acc: &mut CMat, m: &CMat) {
    let dd = m.nrows();
    for r in 0..dd {
        for s in 0..dd {
            let col = r * dd + s;
            let ms = m.column(s);
            for p in 0..dd {
                let a = m[(p, r)];
                if a == ZERO {
                    continue;
                }
                let base = p * dd;
                let mut dst = acc.column_mut(col);
                for q in 0..dd {
                    dst[base + q] += a * ms[q];
                }
            }
        }
    }
}

fn check_basis(n: usize, basis: Option<&CMat>) -> Result<CMat> {
    let d = 1usize << n;
    match basis {
        None => Ok(CMat::identity(d, d)),
        Some(b) => {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: b.nrows() });
            }
            let err = unitarity_error(b);
            if err > 1e-10 {
                return invalid(format!("basis is not orthonormal (deviation {err:e})"));
            }
            Ok(b.clone())
        }
    }
}

fn average_over(n: usize, us: &[CMat], basis: &CMat) -> Result<CMat> {
    let dim = 1usize << (4 * n);
    let chunk = us.len().div_ceil(ENUM_CHUNKS).max(1);
    let partial: Vec<CMat> = us
        .par_chunks(chunk)
        .map(|c| {
            let mut acc = CMat::zeros(dim, dim);
            for u in c {
                add_kron_square(&mut acc, &basis_moment(u, basis));
            }
            acc
        })
        .collect();
    let mut total = CMat::zeros(dim, dim);
    for p in partial {
        total += p;
    }
    Ok(total / Complex64::new(us.len() as f64, 0.0))
}

/// `Ω(𝒰, ℬ) = Σ_{ψ,φ∈ℬ} E_U U†^{⊗4}[ψ^{⊗2} ⊗ φ^{⊗2}]U^{⊗4}`; the computational basis if `basis` is `None`.
pub fn omega_empirical(n: usize, source: UnitarySource<'_>, basis: Option<&CMat>) -> Result<OmegaEstimate> {
    if n == 0 || n > DENSE_OMEGA_MAX {
        return Err(Error::CutoffExceeded { what: "omega_empirical", n, max: DENSE_OMEGA_MAX });
    }
    let b = check_basis(n, basis)?;
    let d = 1usize << n;
    match source {
        UnitarySource::List(us) => {
            if us.is_empty() {
                return invalid("empty unitary list");
            }
            if let Some(u) = us.iter().find(|u| u.nrows() != d || u.ncols() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
            }
            let omega = SmallOperator::new(n, average_over(n, us, &b)?)?;
            Ok(OmegaEstimate { omega, samples: us.len(), exact: true, batches: Vec::new() })
        }
        UnitarySource::CliffordGroup => {
            let us = enumerate_clifford(n)?
                .iter()
                .map(|c| dense_unitary(&clifford_to_circuit(c), n))
                .collect::<Result<Vec<_>>>()?;
            let omega = SmallOperator::new(n, average_over(n, &us, &b)?)?;
            Ok(OmegaEstimate { omega, samples: us.len(), exact: true, batches: Vec::new() })
        }
        UnitarySource::Sampled { spec, samples, seed } => {
            if spec.n != n {
                return Err(Error::DimensionMismatch { expected: n, found: spec.n });
            }
            if samples < OMEGA_BATCHES {
                return invalid(format!("sampled Ω needs at least {OMEGA_BATCHES} samples"));
            }
            let dim = 1usize << (4 * n);
            let bounds: Vec<(usize, usize)> =
                (0..OMEGA_BATCHES).map(|k| (k * samples / OMEGA_BATCHES, (k + 1) * samples / OMEGA_BATCHES)).collect();
            let sums = bounds
                .par_iter()
                .map(|&(lo, hi)| -> Result<CMat> {
                    let mut acc = CMat::zeros(dim, dim);
                    for i in lo..hi {
                        let mut rng = circuit_rng(seed, i as u64);
                        let u = sample_unitary(&spec, &mut rng)?.to_dense(n)?;
                        add_kron_square(&mut acc, &basis_moment(&u, &b));
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut total = CMat::zeros(dim, dim);
            let mut batches = Vec::with_capacity(OMEGA_BATCHES);
            for (s, &(lo, hi)) in sums.into_iter().zip(&bounds) {
                total += &s;
                batches.push(SmallOperator::new(n, s / Complex64::new((hi - lo) as f64, 0.0))?);
            }
            let omega = SmallOperator::new(n, total / Complex64::new(samples as f64, 0.0))?;
            Ok(OmegaEstimate { omega, samples, exact: false, batches })
        }
    }
}

// ---------------------------------------------------------------------------
// Closed-form Ω via κ coefficients

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaSet {
    pub four_plus: f64,
    pub four_minus: f64,
    pub two_two_plus: f64,
    pub two_two_minus: f64,
    pub three_one: f64,
}

impl KappaSet {
    pub fn as_array(&self) -> [f64; 5] {
        [self.four_plus, self.four_minus, self.two_two_plus, self.two_two_minus, self.three_one]
    }
}

/// Clifford twirl with a general measured basis, n ≥ 2, from `(Λ₁, Λ₂)`.
pub fn kappa_clifford_basis(d: f64, lambda1: f64, lambda2: f64) -> KappaSet {
    let d2 = d * d;
    KappaSet {
        four_plus: 2.0 * lambda1 / (d2 * (d + 1.0) * (d + 2.0)),
        four_minus: (4.0 * d.powi(3) * (d + 5.0) - 8.0 * lambda1) / (d2 * (d2 - 1.0) * (d + 2.0) * (d + 4.0)),
        two_two_plus: 2.0 * lambda2 / (d2 * (d2 - 1.0)),
        two_two_minus: (4.0 * d.powi(3) * (d - 1.0) - 8.0 * lambda2) / (d2 * (d2 - 1.0) * (d2 - 4.0)),
        three_one: 4.0 / ((d + 1.0) * (d + 2.0)),
    }
}

/// Single-qubit Clifford twirl with a general basis (only Λ₁ matters).
pub fn kappa_clifford_single(lambda1: f64) -> KappaSet {
    KappaSet {
        four_plus: lambda1 / 24.0,
        four_minus: (28.0 - lambda1) / 36.0,
        two_two_plus: 2.0 / 3.0,
        two_two_minus: 0.0,
        three_one: 1.0 / 3.0,
    }
}

fn kappa_haar(d: f64) -> KappaSet {
    let k4 = 4.0 * (d + 5.0) / ((d + 1.0) * (d + 2.0) * (d + 3.0));
    let k22 = 4.0 / (d * (d + 1.0));
    KappaSet { four_plus: k4, four_minus: k4, two_two_plus: k22, two_two_minus: k22, three_one: 4.0 / ((d + 1.0) * (d + 2.0)) }
}

/// Closed-form κ's in the computational basis.
pub fn kappa_closed(kind: EnsembleKind, n: usize) -> Result<KappaSet> {
    EnsembleSpec::new(n, kind)?;
    let d = (n as f64).exp2();
    let (d2, d3) = (d * d, d * d * d);
    let mut k = match canonical_kind(kind) {
        EnsembleKind::FourDesign => kappa_haar(d),
        EnsembleKind::Clifford if n == 1 => kappa_clifford_single(d3 + 2.0 * d2),
        EnsembleKind::Clifford => kappa_clifford_basis(d, d3 + 2.0 * d2, d3 - d2),
        EnsembleKind::SimpleT { k } => {
            let (g, v) = (GAMMA.powi(k as i32), NU.powi(k as i32));
            let l1 = d3 * g + 2.0 * d2 * v;
            if n == 1 {
                kappa_clifford_single(l1)
            } else {
                kappa_clifford_basis(d, l1, d3 * g - d2 * v)
            }
        }
        EnsembleKind::Interleaved { k, l } => {
            let ab = alpha_beta(d, k)?;
            let a = ab.alpha.powi(l as i32);
            if n == 1 {
                let s = (1.0f64 / 6.0).powi(l as i32);
                let l1 = d3 + 2.0 * d2;
                KappaSet {
                    four_plus: 7.0 / 15.0 + s * (l1 / 24.0 - 7.0 / 15.0),
                    four_minus: 7.0 / 15.0 - s * (l1 / 36.0 - 14.0 / 45.0),
                    two_two_plus: 2.0 / 3.0,
                    two_two_minus: 0.0,
                    three_one: 1.0 / 3.0,
                }
            } else {
                let b = ab.beta.powi(l as i32);
                let den4 = (d + 1.0) * (d + 2.0) * (d + 3.0);
                KappaSet {
                    four_plus: (4.0 * (d + 5.0) + 2.0 * (d - 1.0) * (d + 4.0) * a) / den4,
                    four_minus: (4.0 * (d + 5.0) - 8.0 * a) / den4,
                    two_two_plus: (4.0 + 2.0 * (d - 2.0) * b) / (d * (d + 1.0)),
                    two_two_minus: (4.0 * (d + 2.0) - 8.0 * b) / (d * (d + 1.0) * (d + 2.0)),
                    three_one: 4.0 / ((d + 1.0) * (d + 2.0)),
                }
            }
        }
    };
    if n == 1 {
        k.two_two_minus = 0.0;
    }
    Ok(k)
}

pub fn omega_from_kappa(k: &KappaSet, proj: &Projectors) -> Result<SparseOp> {
    SparseOp::lin_comb(&[
        (k.four_plus, proj.plus(Irrep::Four)),
        (k.four_minus, proj.minus(Irrep::Four)),
        (k.two_two_plus, proj.plus(Irrep::TwoTwo)),
        (k.two_two_minus, proj.minus(Irrep::TwoTwo)),
        (k.three_one, proj.lambda_g(Irrep::ThreeOne)),
    ])
}

/// `Σ κ P` built from the closed-form κ's.
pub fn omega_closed(kind: EnsembleKind, n: usize) -> Result<SparseOp> {
    let k = kappa_closed(kind, n)?;
    omega_from_kappa(&k, &projectors(n)?)
}

/// `Σ gᵢ ℛᵢ`.
pub fn omega_from_g(g: &GiSet, n: usize) -> Result<SparseOp> {
    let r = orbit_operators(n)?;
    SparseOp::lin_comb(&[(g.0[0], &r[0]), (g.0[1], &r[1]), (g.0[2], &r[2]), (g.0[3], &r[3]), (g.0[4], &r[4])])
}

/// `κ = tr(ΩP)/tr(P)` on each subspace; zero where the subspace is empty.
pub fn kappa_extract<A: FourCopy + ?Sized>(omega: &A, proj: &Projectors) -> Result<KappaSet> {
    if omega.qubits() != proj.n {
        return Err(Error::DimensionMismatch { expected: proj.n, found: omega.qubits() });
    }
    let k = |p: &SparseOp| {
        let t = p.trace();
        if t.abs() < 0.5 {
            0.0
        } else {
            pairing(omega, p).re / t
        }
    };
    Ok(KappaSet {
        four_plus: k(proj.plus(Irrep::Four)),
        four_minus: k(proj.minus(Irrep::Four)),
        two_two_plus: k(proj.plus(Irrep::TwoTwo)),
        two_two_minus: k(proj.minus(Irrep::TwoTwo)),
        three_one: k(proj.lambda_g(Irrep::ThreeOne)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GiFit {
    pub g: GiSet,
    /// `‖Ω − Σ gᵢℛᵢ‖_F`
    pub residual: f64,
    /// False when {ℛᵢ} is dependent (n = 1) and `g` was picked from the solution set.
    pub unique: bool,
}

/// `tr(ℛᵢ ℛⱼ)`, exact from 16 × 16 factors.
pub fn orbit_gram(n: usize) -> DMatrix<f64> {
    let rs: Vec<Vec<DMatrix<f64>>> = orbit_members().iter().map(|o| o.iter().map(|t| t.r_small()).collect()).collect();
    DMatrix::from_fn(5, 5, |i, j| {
        let mut s = 0.0;
        for a in &rs[i] {
            for b in &rs[j] {
                s += word_trace(&[&a.transpose(), b], n);
            }
        }
        s
    })
}

/// Least-squares `Ω ≈ Σ gᵢ ℛᵢ`. When the fit is not unique, the solution closest
/// to `hint` is returned (the minimum-norm one without a hint).
pub fn gi_fit<A: FourCopy + ?Sized>(omega: &A, hint: Option<&GiSet>) -> Result<GiFit> {
    let n = omega.qubits();
    let r = orbit_operators(n)?;
    let gram = orbit_gram(n);
    let b = nalgebra::DVector::from_fn(5, |i, _| pairing(omega, &r[i]).re);
    let svd = gram.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let mut g = svd.solve(&b, tol).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    if rank < 5 {
        if let Some(h) = hint {
            let v_t = svd.v_t.as_ref().expect("right singular vectors");
            let h = nalgebra::DVector::from_row_slice(&h.0);
            for (k, s) in svd.singular_values.iter().enumerate() {
                if *s <= tol {
                    let v = v_t.row(k).transpose();
                    let c = v.dot(&(&h - &g));
                    g += v * c;
                }
            }
        }
    }
    let g = GiSet([g[0], g[1], g[2], g[3], g[4]]);
    let fit = omega_from_g(&g, n)?;
    Ok(GiFit { g, residual: omega.distance_to(&fit), unique: rank == 5 })
}

// ---------------------------------------------------------------------------
// V_* and ξ via four-copy contraction

fn check_four_copy_pair(n: usize, o: &DenseOperator, rho: &DenseOperator) -> Result<()> {
    if o.n() != n || rho.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: o.n().max(rho.n()) });
    }
    o.require_traceless()
}

/// `(d+1)² tr[Ω (O⊗ρ)^{⊗2}] − tr(Oρ)²`.
pub fn vstar_via_omega<A: FourCopy + ?Sized>(omega: &A, o: &DenseOperator, rho: &DenseOperator) -> Result<f64> {
    let n = omega.qubits();
    check_four_copy_pair(n, o, rho)?;
    let d = (1usize << n) as f64;
    let t = four_copy_trace(omega, [o.matrix(), rho.matrix(), o.matrix(), rho.matrix()])?.re;
    let e = rho.trace_with(o).re;
    Ok((d + 1.0).powi(2) * t - e * e)
}

/// `ξᵢ = tr[ℛᵢ (O⊗ρ)^{⊗2}]` by direct contraction, n ≤ 3.
pub fn xi_traces_dense(o: &DenseOperator, rho: &DenseOperator) -> Result<XiTraces> {
    let n = o.n();
    check_four_copy_pair(n, o, rho)?;
    let r = orbit_operators(n)?;
    let mut xi = [0.0; 5];
    for (x, op) in xi.iter_mut().zip(&r) {
        *x = four_copy_trace(op, [o.matrix(), rho.matrix(), o.matrix(), rho.matrix()])?.re;
    }
    Ok(XiTraces(xi))
}

// ---------------------------------------------------------------------------
// Basis data

/// `(Λ₁, Λ₂)` summed over ordered pairs of basis vectors (columns of `basis`).
pub fn lambda12(basis: &CMat) -> Result<(f64, f64)> {
    let d = basis.nrows();
    if !d.is_power_of_two() || basis.ncols() != d || d < 2 {
        return invalid("basis must be a square matrix of power-of-two size");
    }
    let n = d.trailing_zeros() as usize;
    let err = unitarity_error(basis);
    if err > 1e-10 {
        return invalid(format!("basis is not orthonormal (deviation {err:e})"));
    }
    let projs = (0..d)
        .map(|a| {
            let c = basis.column(a);
            DenseOperator::hermitian(n, &c * c.adjoint())
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut l1, mut l2) = (0.0, 0.0);
    for psi in &projs {
        for phi in &projs {
            let cc = cross_chars(psi, phi)?;
            let (a, b) = (cc.cross_norm_sq(), cc.twisted_dot());
            l1 += a + 2.0 * b;
            l2 += a - b;
        }
    }
    Ok((l1, l2))
}

/// Columns `I^{⊗(n−k)} ⊗ (T†H†)^{⊗k}|b⟩`, the T gates on qubits `n−k..n−1`.
pub fn t_basis(n: usize, k: usize) -> Result<CMat> {
    if k > n || n > crate::dense::DENSE_UNITARY_MAX {
        return invalid(format!("t_basis needs k ≤ n ≤ {}", crate::dense::DENSE_UNITARY_MAX));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t_dag = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    // T†H† = T†H on one qubit
    let one = CMat::from_row_slice(2, 2, &[Complex64::new(h, 0.0), Complex64::new(h, 0.0), t_dag * h, -t_dag * h]);
    let mut w = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let f = if q >= n - k { one.clone() } else { CMat::identity(2, 2) };
        w = w.kronecker(&f);
    }
    Ok(w)
}

/// Dense `U^{⊗4}` in the four-copy index convention.
pub fn tensor_power4(u: &CMat) -> CMat {
    let u2 = u.kronecker(u);
    u2.kronecker(&u2)
}

/// `U^{⊗4} v` without forming the `d⁴ × d⁴` matrix.
pub fn apply_tensor_power4(u: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    let d = u.nrows();
    let mut cur = v.to_vec();
    let mut next = vec![ZERO; v.len()];
    for copy in 0..4 {
        let stride = d.pow(copy);
        for (i, out) in next.iter_mut().enumerate() {
            let a = (i / stride) % d;
            let base = i - a * stride;
            *out = (0..d).map(|b| u[(a, b)] * cur[base + b * stride]).sum();
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

fn sparse_apply(r: &SparseOp, v: &[Complex64]) -> Vec<Complex64> {
    (0..r.dim()).map(|i| r.row(i).iter().map(|&(j, x)| v[j as usize] * x).sum()).collect()
}

/// `‖[R, U^{⊗4}] v‖ / ‖v‖` for a fixed probe vector `v`.
pub fn commutation_defect(r: &SparseOp, u: &CMat, v: &[Complex64]) -> f64 {
    let a = sparse_apply(r, &apply_tensor_power4(u, v));
    let b = apply_tensor_power4(u, &sparse_apply(r, v));
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Max entry of `tr₄Ω − (1 + SWAP₁₂) ⊗ 1 / (d+1)`, which vanishes for any 2-design.
pub fn partial_trace_defect(omega: &SmallOperator) -> f64 {
    let d = 1usize << omega.n();
    let t = omega.partial_trace_last();
    let c = 1.0 / (d as f64 + 1.0);
    let mut worst = 0.0f64;
    for i in 0..d * d * d {
        for j in 0..d * d * d {
            let (i1, i2, i3) = (i % d, (i / d) % d, i / (d * d));
            let (j1, j2, j3) = (j % d, (j / d) % d, j / (d * d));
            let mut want = 0.0;
            if i3 == j3 {
                if i1 == j1 && i2 == j2 {
                    want += c;
                }
                if i1 == j2 && i2 == j1 {
                    want += c;
                }
            }
            worst = worst.max((t[(i, j)] - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::DenseState;
    use crate::variance::{g_clifford, g_haar, vstar_clifford, vstar_4design};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn thirty_subspaces() {
        let s = sigma44_enumerate();
        assert_eq!(s.len(), 30);
        assert!(s.iter().all(|t| t.satisfies_axioms() && t.dimension() == 4));
        let mut sets: Vec<Vec<u8>> = s.iter().map(|t| t.elements()).collect();
        sets.sort();
        sets.dedup();
        assert_eq!(sets.len(), 30);
        let members = orbit_members();
        assert_eq!(members.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 16, 4, 2, 4]);
        let mut from_orbits: Vec<Vec<u8>> = members.iter().flatten().map(|t| t.elements()).collect();
        from_orbits.sort();
        assert_eq!(from_orbits, sets);
    }

    #[test]
    fn coset_traces() {
        for p in s3_tilde() {
            let t = StochasticLagrangian::coset(p);
            let l = perm_from_l_cycles(&p);
            assert_eq!(t.r_small().trace(), (l as f64).exp2(), "{p:?}");
        }
        assert_eq!(StochasticLagrangian::t4().r_small().trace(), 8.0);
    }

    // Cycles of σ restricted to slots 1..3 (σ fixes slot 4).
    fn perm_from_l_cycles(p: &Perm) -> usize {
        cycle_count(p) - 1
    }

    #[test]
    fn r_small_basics() {
        let e = StochasticLagrangian::permutation(IDENTITY).r_small();
        assert_eq!(e, DMatrix::identity(16, 16));
        for t in sigma44_enumerate() {
            let mut tr = t.transposed_elements();
            tr.dedup();
            let rt = t.r_small().transpose();
            let mut m = DMatrix::zeros(16, 16);
            for v in tr {
                m[((v & 0x0F) as usize, (v >> 4) as usize)] = 1.0;
            }
            assert_eq!(rt, m);
        }
        let a = perm_from_cycles(&[&[1, 2, 3]]);
        let b = perm_from_cycles(&[&[3, 4]]);
        let ra = StochasticLagrangian::permutation(a).r_small();
        let rb = StochasticLagrangian::permutation(b).r_small();
        assert_eq!(&ra * &rb, StochasticLagrangian::permutation(compose(&a, &b)).r_small());
        // left action on 𝒯₄
        let rt = StochasticLagrangian::t4().r_small();
        assert_eq!(&ra * &rt, StochasticLagrangian::coset(a).r_small());
    }

    #[test]
    fn r_t4_is_pauli_projector() {
        let r = big_r(&StochasticLagrangian::t4(), 1).unwrap().to_dense().unwrap();
        let mut want = CMat::zeros(16, 16);
        for idx in 0..4 {
            let p = crate::pauli::PauliString::from_index(1, idx).unwrap().to_dense();
            want += tensor_power4(&p);
        }
        want *= Complex64::new(0.5, 0.0);
        assert!((r.matrix() - want).norm() < 1e-12);
    }

    #[test]
    fn permutation_operator_moves_slots() {
        // R((12)) swaps copies 1 and 2.
        let n = 1;
        let r = big_r(&StochasticLagrangian::permutation(perm_from_cycles(&[&[1, 2]])), n).unwrap();
        // |a1=1, a2=0, a3=0, a4=0⟩ = index 1 → index 2
        assert_eq!(r.get(2, 1), 1.0);
        assert_eq!(r.get(1, 1), 0.0);
    }

    #[test]
    fn single_qubit_orbit_identity() {
        let r = orbit_operators(1).unwrap();
        let lhs = SparseOp::lin_comb(&[(2.0, &r[0]), (-1.0, &r[1]), (2.0, &r[2])]).unwrap();
        let rhs = SparseOp::lin_comb(&[(4.0, &r[3]), (-2.0, &r[4])]).unwrap();
        assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn dimension_table_small() {
        for n in 1..=2 {
            let d = (n as f64).exp2();
            let p = projectors(n).unwrap();
            for (e, l) in dimension_traces(n).iter().zip(Irrep::ALL) {
                let f = dimension_formula(l, d);
                assert!((e.total - f.total).abs() < 1e-9 && (e.plus - f.plus).abs() < 1e-9, "{l:?} n={n}");
                assert!((p.lambda_g(l).trace() - f.total).abs() < 1e-9);
                assert!((p.plus(l).trace() - f.plus).abs() < 1e-9);
            }
            assert!((p.p_g.idempotency_defect()) < 1e-10);
            assert!((p.p_n.idempotency_defect()) < 1e-10);
        }
        assert_eq!(dimension_formula(Irrep::ThreeOne, 4.0).total, 45.0);
        assert_eq!(dimension_formula(Irrep::Four, 2.0).plus, 2.0);
    }

    #[test]
    fn gram_ranks() {
        assert_eq!(gram_spectrum(1).rank, 15);
        assert_eq!(gram_spectrum(2).rank, 29);
        assert_eq!(gram_spectrum(3).rank, 30);
        for n in 1..=3 {
            assert!(gram_spectrum(n).deviation_from_expected() < 1e-10);
        }
    }

    #[test]
    fn omega_cl1_exact() {
        let est = omega_empirical(1, UnitarySource::CliffordGroup, None).unwrap();
        assert_eq!(est.samples, 24);
        let r = orbit_operators(1).unwrap();
        let want = SparseOp::lin_comb(&[(1.0 / 12.0, &r[0]), (1.0 / 12.0, &r[3])]).unwrap();
        assert!(est.omega.distance_to(&want) < 1e-12);
        let closed = omega_closed(EnsembleKind::Clifford, 1).unwrap();
        assert!(est.omega.distance_to(&closed) < 1e-12);
        let p = projectors(1).unwrap();
        let t4 = pairing(&est.omega, &p.p_lambda[0]).re;
        assert!((t4 - 7.0 / 3.0).abs() < 1e-12);
        assert!(est.omega.support_defect(&p.p_g).unwrap() < 1e-12);
        let fit = gi_fit(&est.omega, Some(&g_clifford(2.0))).unwrap();
        assert!(!fit.unique && fit.residual < 1e-10);
        assert!((fit.g.0[0] - 1.0 / 12.0).abs() < 1e-10 && fit.g.0[4].abs() < 1e-10);
    }

    #[test]
    fn matrix_free_helpers() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = crate::dense::haar_unitary(2, &mut rng);
        let v: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let dense = tensor_power4(&u) * crate::dense::CVec::from_vec(v.clone());
        let fast = apply_tensor_power4(&u, &v);
        assert!(dense.iter().zip(&fast).all(|(a, b)| (a - b).norm() < 1e-12));
        // a Haar unitary commutes with permutations but not with R(T4)
        let swap = big_r(&StochasticLagrangian::permutation(perm_from_cycles(&[&[1, 3]])), 1).unwrap();
        assert!(commutation_defect(&swap, &u, &v) < 1e-12);
        let t4 = big_r(&StochasticLagrangian::t4(), 1).unwrap();
        assert!(commutation_defect(&t4, &u, &v) > 1e-3);
        let est = omega_empirical(1, UnitarySource::CliffordGroup, None).unwrap();
        assert!(partial_trace_defect(&est.omega) < 1e-12);
    }

    #[test]
    fn omega_cl1_vstar_oracle() {
        let est = omega_empirical(1, UnitarySource::CliffordGroup, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let o = DenseOperator::random_observable(1, &mut rng);
            let rho = DenseOperator::random_state(1, 2, &mut rng);
            let a = vstar_via_omega(&est.omega, &o, &rho).unwrap();
            let b = vstar_clifford(&o, &rho).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
        let phi = DenseState::basis(1, 0).unwrap();
        let f = DenseOperator::fidelity_observable(&phi);
        assert!((vstar_via_omega(&est.omega, &f, &phi.projector()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn haar_closed_form() {
        let om = omega_closed(EnsembleKind::FourDesign, 1).unwrap();
        let phi = DenseState::basis(1, 0).unwrap();
        let f = DenseOperator::fidelity_observable(&phi);
        assert!((vstar_via_omega(&om, &f, &phi.projector()).unwrap() - 0.2).abs() < 1e-12);
        let dense = om.to_dense().unwrap();
        let (s1, sinf) = dense.schatten_1_inf();
        assert!((s1 - 4.0).abs() < 1e-10 && (sinf - 4.0 / 6.0).abs() < 1e-10);
        let g = omega_from_g(&g_haar(4.0), 2).unwrap();
        let k = omega_closed(EnsembleKind::FourDesign, 2).unwrap();
        assert!(g.distance(&k) < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let o = DenseOperator::random_observable(2, &mut rng);
        let rho = DenseOperator::random_state(2, 1, &mut rng);
        let a = vstar_via_omega(&k, &o, &rho).unwrap();
        assert!((a - vstar_4design(&o, &rho).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn dense_xi_matches_pauli_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=2 {
            let o = DenseOperator::random_observable(n, &mut rng);
            let rho = DenseOperator::random_state(n, 2, &mut rng);
            let a = xi_traces_dense(&o, &rho).unwrap();
            let b = crate::variance::xi_traces(&o, &rho).unwrap();
            for i in 0..5 {
                assert!((a.0[i] - b.0[i]).abs() < 1e-10, "n={n} ξ{} {} {}", i + 1, a.0[i], b.0[i]);
            }
        }
    }

    #[test]
    fn lambda_values() {
        for n in 1..=3 {
            let d = (n as f64).exp2();
            let (l1, l2) = lambda12(&CMat::identity(1 << n, 1 << n)).unwrap();
            assert!((l1 - (d.powi(3) + 2.0 * d * d)).abs() < 1e-9);
            assert!((l2 - (d.powi(3) - d * d)).abs() < 1e-9);
        }
        let (_, l2) = lambda12(&t_basis(1, 1).unwrap()).unwrap();
        assert!((l2 - 4.0).abs() < 1e-10);
        let b = t_basis(2, 1).unwrap();
        let (l1, l2) = lambda12(&b).unwrap();
        assert!((l1 - (64.0 * 0.75 + 32.0 * 0.5)).abs() < 1e-9);
        assert!((l2 - (64.0 * 0.75 - 16.0 * 0.5)).abs() < 1e-9);
    }

    #[test]
    fn binary_round_trip() {
        let om = omega_closed(EnsembleKind::Clifford, 1).unwrap().to_dense().unwrap();
        let mut buf = Vec::new();
        om.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 28 + 16 * 256);
        assert_eq!(SmallOperator::read_binary(&buf[..]).unwrap(), om);
    }
}
