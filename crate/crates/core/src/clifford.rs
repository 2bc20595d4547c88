//! Clifford tableaux, uniform sampling, exhaustive enumeration and synthesis.
//!
//! A [`CliffordElement`] is stored by the images of the generators:
//! `C X_j C†` in slot `j` and `C Z_j C†` in slot `n + j`, each a Hermitian
//! [`PauliString`] carrying a sign. Global phase is not tracked.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{symp, PauliString, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Cnot(usize, usize),
    T(usize),
}

impl Gate {
    fn max_qubit(&self) -> usize {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::T(q) => q,
            Gate::Cnot(c, t) => c.max(t),
        }
    }
}

/// Gates in application order (first element acts first).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSequence {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl GateSequence {
    pub fn new(n: usize) -> Self {
        GateSequence { n, gates: Vec::new() }
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        if g.max_qubit() >= self.n {
            return Err(Error::IndexOutOfRange { idx: g.max_qubit(), n: self.n });
        }
        if let Gate::Cnot(c, t) = g {
            if c == t {
                return Err(Error::InvalidParameter("CNOT control equals target".into()));
            }
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn extend(&mut self, other: &GateSequence) {
        debug_assert_eq!(self.n, other.n);
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn t_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::T(_))).count()
    }

    pub fn is_clifford(&self) -> bool {
        self.t_count() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CliffordElement {
    n: usize,
    images: Vec<PauliString>,
}

impl CliffordElement {
    pub fn identity(n: usize) -> Self {
        let mut images = Vec::with_capacity(2 * n);
        for j in 0..n {
            images.push(PauliString::from_parts(n, 1 << j, 0, 0));
        }
        for j in 0..n {
            images.push(PauliString::from_parts(n, 0, 1 << j, 0));
        }
        CliffordElement { n, images }
    }

    /// Build from generator images; validates symplecticity and Hermiticity.
    pub fn from_images(n: usize, images: Vec<PauliString>) -> Result<Self> {
        if images.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: images.len() });
        }
        if images.iter().any(|p| p.n() != n || !p.is_hermitian()) {
            return Err(Error::InvalidParameter("images must be Hermitian n-qubit Paulis".into()));
        }
        let c = CliffordElement { n, images };
        if !c.is_symplectic() {
            return Err(Error::InvalidParameter("images do not preserve commutation".into()));
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn images(&self) -> &[PauliString] {
        &self.images
    }

    /// Columns are generator images; rows `0..n` hold x bits, `n..2n` z bits.
    pub fn symplectic_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.n;
        let mut m = vec![vec![0u8; 2 * n]; 2 * n];
        for (col, p) in self.images.iter().enumerate() {
            for r in 0..n {
                m[r][col] = ((p.x_mask() >> r) & 1) as u8;
                m[n + r][col] = ((p.z_mask() >> r) & 1) as u8;
            }
        }
        m
    }

    /// `true` where the image of the generator carries a minus sign.
    pub fn phases(&self) -> Vec<bool> {
        self.images.iter().map(|p| p.phase_exponent() == 2).collect()
    }

    pub fn is_symplectic(&self) -> bool {
        let n = self.n;
        for a in 0..2 * n {
            for b in 0..2 * n {
                let want = a % n == b % n && a != b;
                let pa = &self.images[a];
                let pb = &self.images[b];
                if symp((pa.x_mask(), pa.z_mask()), (pb.x_mask(), pb.z_mask())) != want {
                    return false;
                }
            }
        }
        true
    }

    /// `C P C†` with exact sign bookkeeping.
    pub fn conjugate(&self, p: &PauliString) -> Result<PauliString> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.n() });
        }
        Ok(self.conjugate_unchecked(p))
    }

    fn conjugate_unchecked(&self, p: &PauliString) -> PauliString {
        let n = self.n;
        let mut out = PauliString::identity(n).with_phase((p.xz_phase() & 3) as u8);
        for j in 0..n {
            if (p.x_mask() >> j) & 1 == 1 {
                out = out.mul(&self.images[j]);
            }
            if (p.z_mask() >> j) & 1 == 1 {
                out = out.mul(&self.images[n + j]);
            }
        }
        out
    }

    /// Tableau of `self ∘ first` (apply `first`, then `self`).
    pub fn compose_after(&self, first: &CliffordElement) -> Result<CliffordElement> {
        if first.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: first.n });
        }
        let images = first.images.iter().map(|p| self.conjugate_unchecked(p)).collect();
        Ok(CliffordElement { n: self.n, images })
    }

    /// Left-multiply by one Clifford gate.
    pub fn apply_gate(&mut self, g: Gate) -> Result<()> {
        if g.max_qubit() >= self.n {
            return Err(Error::IndexOutOfRange { idx: g.max_qubit(), n: self.n });
        }
        for p in self.images.iter_mut() {
            *p = conjugate_by_gate(p, g)?;
        }
        Ok(())
    }

    pub fn from_gates(seq: &GateSequence) -> Result<CliffordElement> {
        let mut c = CliffordElement::identity(seq.n);
        for &g in &seq.gates {
            c.apply_gate(g)?;
        }
        Ok(c)
    }
}

fn local_images(n: usize, g: Gate) -> Result<Vec<(usize, PauliString, PauliString)>> {
    let px = |q: usize| PauliString::from_parts(n, 1 << q, 0, 0);
    let pz = |q: usize| PauliString::from_parts(n, 0, 1 << q, 0);
    let py = |q: usize| PauliString::from_parts(n, 1 << q, 1 << q, 0);
    Ok(match g {
        Gate::H(q) => vec![(q, pz(q), px(q))],
        Gate::S(q) => vec![(q, py(q), pz(q))],
        Gate::Cnot(c, t) => vec![
            (c, px(c).mul(&px(t)), pz(c)),
            (t, px(t), pz(c).mul(&pz(t))),
        ],
        Gate::T(_) => return Err(Error::NonClifford(format!("{g:?}"))),
    })
}

/// `g P g†` for a single Clifford gate.
pub fn conjugate_by_gate(p: &PauliString, g: Gate) -> Result<PauliString> {
    let n = p.n();
    let locals = local_images(n, g)?;
    let mut clear = 0u64;
    for (q, _, _) in &locals {
        clear |= 1 << q;
    }
    // P = i^k X^x Z^z = i^k · rest · Π_q X_q^a Z_q^b, blocks on distinct qubits commute.
    let rest = PauliString::from_parts(n, p.x_mask() & !clear, p.z_mask() & !clear, 0);
    let k = p.xz_phase() + 4 - (rest.x_mask() & rest.z_mask()).count_ones() % 4;
    let mut out = rest.with_phase((k & 3) as u8);
    for (q, ix, iz) in &locals {
        if (p.x_mask() >> q) & 1 == 1 {
            out = out.mul(ix);
        }
        if (p.z_mask() >> q) & 1 == 1 {
            out = out.mul(iz);
        }
    }
    Ok(out)
}

pub fn conjugate_pauli(c: &CliffordElement, p: &PauliString) -> Result<PauliString> {
    c.conjugate(p)
}

// ---------------------------------------------------------------------------
// Sampling and enumeration over Sp(2n, F2) × sign bits.

type Vec2 = (u64, u64);

fn combine(basis: &[Vec2], coeffs: u64) -> Vec2 {
    let mut v = (0u64, 0u64);
    for (i, b) in basis.iter().enumerate() {
        if (coeffs >> i) & 1 == 1 {
            v.0 ^= b.0;
            v.1 ^= b.1;
        }
    }
    v
}

/// Basis of the symplectic complement of span{v, w} inside span(basis).
fn complement(basis: &[Vec2], v: Vec2, w: Vec2) -> Vec<Vec2> {
    // u ↦ u + ⟨u,w⟩v + ⟨u,v⟩w kills both pairings when ⟨v,w⟩ = 1.
    let mut out: Vec<Vec2> = Vec::with_capacity(basis.len());
    let mut pivots: Vec<(Vec2, u32)> = Vec::new();
    for &u in basis {
        let mut p = u;
        if symp(u, w) {
            p.0 ^= v.0;
            p.1 ^= v.1;
        }
        if symp(u, v) {
            p.0 ^= w.0;
            p.1 ^= w.1;
        }
        // reduce against kept vectors to test independence
        let mut r = p;
        for (b, piv) in &pivots {
            if bit_of(r, *piv) {
                r.0 ^= b.0;
                r.1 ^= b.1;
            }
        }
        if r != (0, 0) {
            let piv = lowest_bit(r);
            pivots.push((r, piv));
            out.push(p);
        }
    }
    out
}

fn bit_of(v: Vec2, pos: u32) -> bool {
    if pos < 64 {
        (v.0 >> pos) & 1 == 1
    } else {
        (v.1 >> (pos - 64)) & 1 == 1
    }
}

fn lowest_bit(v: Vec2) -> u32 {
    if v.0 != 0 {
        v.0.trailing_zeros()
    } else {
        64 + v.1.trailing_zeros()
    }
}

fn standard_basis(n: usize) -> Vec<Vec2> {
    let mut b: Vec<Vec2> = (0..n).map(|j| (1u64 << j, 0)).collect();
    b.extend((0..n).map(|j| (0, 1u64 << j)));
    b
}

fn assemble(n: usize, pairs: &[(Vec2, Vec2)], signs: u64) -> CliffordElement {
    let mut images = vec![PauliString::identity(n); 2 * n];
    for (j, &(v, w)) in pairs.iter().enumerate() {
        let sx = if (signs >> j) & 1 == 1 { 2 } else { 0 };
        let sz = if (signs >> (n + j)) & 1 == 1 { 2 } else { 0 };
        images[j] = PauliString::from_parts(n, v.0, v.1, sx);
        images[n + j] = PauliString::from_parts(n, w.0, w.1, sz);
    }
    CliffordElement { n, images }
}

/// Uniform draw from the projective Clifford group.
///
/// Image pairs are chosen one qubit at a time: a uniform nonzero vector in the
/// remaining symplectic space, then a uniform partner pairing to 1 with it,
/// then recurse into their symplectic complement. Sign bits are independent
/// fair coins.
pub fn random_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordElement> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidParameter(format!("random_clifford needs 1 ≤ n ≤ {MAX_QUBITS}")));
    }
    let mut basis = standard_basis(n);
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let dim = basis.len();
        let full = if dim == 64 { u64::MAX } else { (1u64 << dim) - 1 };
        let v = loop {
            let c = rng.random::<u64>() & full;
            if c != 0 {
                break combine(&basis, c);
            }
        };
        let w = loop {
            let u = combine(&basis, rng.random::<u64>() & full);
            if symp(v, u) {
                break u;
            }
        };
        basis = complement(&basis, v, w);
        pairs.push((v, w));
    }
    let signs = if 2 * n >= 64 { rng.random::<u64>() } else { rng.random::<u64>() & ((1 << (2 * n)) - 1) };
    Ok(assemble(n, &pairs, signs))
}

fn enumerate_sp(basis: &[Vec2], pairs: &mut Vec<(Vec2, Vec2)>, out: &mut Vec<Vec<(Vec2, Vec2)>>) {
    if basis.is_empty() {
        out.push(pairs.clone());
        return;
    }
    let dim = basis.len();
    for cv in 1..(1u64 << dim) {
        let v = combine(basis, cv);
        for cw in 0..(1u64 << dim) {
            let w = combine(basis, cw);
            if !symp(v, w) {
                continue;
            }
            let rest = complement(basis, v, w);
            pairs.push((v, w));
            enumerate_sp(&rest, pairs, out);
            pairs.pop();
        }
    }
}

/// Every projective Clifford element for n ∈ {1, 2}, each exactly once.
pub fn enumerate_clifford(n: usize) -> Result<Vec<CliffordElement>> {
    if n == 0 || n > 2 {
        return Err(Error::CutoffExceeded { what: "enumerate_clifford", n, max: 2 });
    }
    let mut sp = Vec::new();
    enumerate_sp(&standard_basis(n), &mut Vec::new(), &mut sp);
    let mut out = Vec::with_capacity(sp.len() << (2 * n));
    for pairs in &sp {
        for signs in 0..(1u64 << (2 * n)) {
            out.push(assemble(n, pairs, signs));
        }
    }
    Ok(out)
}

/// Order of the projective Clifford group, `2^{n²+2n} Π_j (4^j − 1)`.
pub fn clifford_group_order(n: usize) -> u128 {
    let mut acc: u128 = 1 << (n * n + 2 * n);
    for j in 1..=n {
        acc *= (1u128 << (2 * j)) - 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// Synthesis

struct Reducer {
    tab: CliffordElement,
    gates: Vec<Gate>,
}

impl Reducer {
    fn apply(&mut self, g: Gate) {
        self.tab.apply_gate(g).expect("Clifford gate in range");
        self.gates.push(g);
    }
    fn xz(&self, slot: usize, q: usize) -> (bool, bool) {
        let p = &self.tab.images[slot];
        ((p.x_mask() >> q) & 1 == 1, (p.z_mask() >> q) & 1 == 1)
    }
}

/// T-free circuit whose tableau equals `c` (signs included).
///
/// Column-by-column reduction to the identity tableau followed by inversion;
/// uses O(n²) gates.
pub fn clifford_to_circuit(c: &CliffordElement) -> GateSequence {
    let n = c.n;
    let mut r = Reducer { tab: c.clone(), gates: Vec::new() };
    for i in 0..n {
        // image of X_i → ±X_i
        for j in i..n {
            match r.xz(i, j) {
                (false, true) => r.apply(Gate::H(j)),
                (true, true) => r.apply(Gate::S(j)),
                _ => {}
            }
        }
        if !r.xz(i, i).0 {
            let j = (i + 1..n).find(|&j| r.xz(i, j).0).expect("anticommuting partner exists");
            r.apply(Gate::Cnot(j, i));
        }
        for j in i + 1..n {
            if r.xz(i, j).0 {
                r.apply(Gate::Cnot(i, j));
            }
        }
        // image of Z_i → ±Z_i while keeping X_i fixed
        if r.xz(n + i, i) == (true, true) {
            r.apply(Gate::H(i));
            r.apply(Gate::S(i));
            r.apply(Gate::H(i));
        }
        for j in i + 1..n {
            match r.xz(n + i, j) {
                (true, false) => r.apply(Gate::H(j)),
                (true, true) => {
                    r.apply(Gate::S(j));
                    r.apply(Gate::H(j));
                }
                _ => {}
            }
        }
        for j in i + 1..n {
            if r.xz(n + i, j).1 {
                r.apply(Gate::Cnot(j, i));
            }
        }
    }
    for j in 0..n {
        if r.tab.images[j].phase_exponent() == 2 {
            r.apply(Gate::S(j));
            r.apply(Gate::S(j));
        }
        if r.tab.images[n + j].phase_exponent() == 2 {
            r.apply(Gate::H(j));
            r.apply(Gate::S(j));
            r.apply(Gate::S(j));
            r.apply(Gate::H(j));
        }
    }
    debug_assert_eq!(r.tab, CliffordElement::identity(n));
    let mut seq = GateSequence::new(n);
    for &g in r.gates.iter().rev() {
        match g {
            Gate::S(q) => seq.gates.extend([Gate::S(q); 3]),
            other => seq.gates.push(other),
        }
    }
    seq
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hadamard_and_phase_examples() {
        let mut h = CliffordElement::identity(1);
        h.apply_gate(Gate::H(0)).unwrap();
        let x = PauliString::from_label("X").unwrap();
        assert_eq!(h.conjugate(&x).unwrap(), PauliString::from_label("Z").unwrap());
        let mut s = CliffordElement::identity(1);
        s.apply_gate(Gate::S(0)).unwrap();
        assert_eq!(s.conjugate(&x).unwrap(), PauliString::from_label("Y").unwrap());
        let y = PauliString::from_label("Y").unwrap();
        assert_eq!(s.conjugate(&y).unwrap(), x.with_phase(2));
    }

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_clifford(1).unwrap().len(), 24);
        assert_eq!(clifford_group_order(1), 24);
        assert_eq!(clifford_group_order(2), 11520);
        assert!(enumerate_clifford(3).is_err());
    }

    #[test]
    fn enumeration_distinct_and_symplectic() {
        let all = enumerate_clifford(2).unwrap();
        assert_eq!(all.len(), 11520);
        let set: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), 11520);
        assert!(all.iter().all(|c| c.is_symplectic()));
    }

    #[test]
    fn synthesis_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(clifford_to_circuit(&CliffordElement::identity(4)).is_empty());
        for n in 1..=6 {
            for _ in 0..50 {
                let c = random_clifford(n, &mut rng).unwrap();
                let seq = clifford_to_circuit(&c);
                assert!(seq.is_clifford());
                assert_eq!(CliffordElement::from_gates(&seq).unwrap(), c);
            }
        }
    }

    #[test]
    fn t_is_rejected() {
        let mut c = CliffordElement::identity(1);
        assert!(matches!(c.apply_gate(Gate::T(0)), Err(Error::NonClifford(_))));
    }
}
