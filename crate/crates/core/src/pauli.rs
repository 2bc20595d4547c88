//! n-qubit Pauli operators as symplectic bit masks.
//!
//! A [`PauliString`] stands for `i^e · σ_0 ⊗ σ_1 ⊗ … ⊗ σ_{n-1}` where qubit `j`
//! carries `σ_j ∈ {I, X, Y, Z}` determined by bit `j` of the two masks
//! (`(x, z) = (1, 0)` is X, `(0, 1)` is Z, `(1, 1)` is Y). The exponent `e` is
//! taken relative to Hermitian factors, so `e = 0` means the bare tensor product.
//!
//! Index convention shared by every characteristic-function consumer: base-4
//! digit `j` of the index picks the factor on qubit `j` with `0 → I, 1 → X,
//! 2 → Z, 3 → Y`, i.e. digit `= x_j + 2 z_j`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Widest register the bit-mask representation supports.
pub const MAX_QUBITS: usize = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

#[inline]
fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// i^k for k mod 4.
#[inline]
pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, x: 0, z: 0, phase: 0 }
    }

    pub fn new(n: usize, x: u64, z: u64, phase_exponent: u8) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::CutoffExceeded { what: "PauliString", n, max: MAX_QUBITS });
        }
        if (x | z) & !mask(n) != 0 {
            return Err(Error::InvalidParameter(format!("masks exceed {n} bits")));
        }
        Ok(PauliString { n, x, z, phase: phase_exponent & 3 })
    }

    pub(crate) fn from_parts(n: usize, x: u64, z: u64, phase: u8) -> Self {
        PauliString { n, x, z, phase: phase & 3 }
    }

    /// Single-qubit factor `kind` ∈ {'X','Y','Z','I'} on qubit `q`.
    pub fn single(n: usize, q: usize, kind: char) -> Result<Self> {
        if q >= n {
            return Err(Error::IndexOutOfRange { idx: q, n });
        }
        let b = 1u64 << q;
        let (x, z) = match kind {
            'I' => (0, 0),
            'X' => (b, 0),
            'Z' => (0, b),
            'Y' => (b, b),
            _ => return Err(Error::InvalidParameter(format!("unknown Pauli '{kind}'"))),
        };
        PauliString::new(n, x, z, 0)
    }

    /// Parse a label such as `"XIZ"`; character `j` acts on qubit `j`.
    pub fn from_label(label: &str) -> Result<Self> {
        let n = label.chars().count();
        let mut p = PauliString::identity(n);
        for (q, c) in label.chars().enumerate() {
            p = p.mul(&PauliString::single(n, q, c)?);
        }
        Ok(p)
    }

    pub fn from_index(n: usize, idx: usize) -> Result<Self> {
        if n > MAX_QUBITS || idx >= 1usize << (2 * n) {
            return Err(Error::IndexOutOfRange { idx, n });
        }
        let (mut x, mut z) = (0u64, 0u64);
        for j in 0..n {
            let digit = (idx >> (2 * j)) & 3;
            x |= ((digit & 1) as u64) << j;
            z |= ((digit >> 1) as u64) << j;
        }
        Ok(PauliString { n, x, z, phase: 0 })
    }

    /// Base-4 index of the projective part (phase ignored).
    pub fn to_index(&self) -> usize {
        pauli_index(self.n, self.x, self.z)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn x_mask(&self) -> u64 {
        self.x
    }
    pub fn z_mask(&self) -> u64 {
        self.z
    }
    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    /// Same operator with the phase dropped.
    pub fn projective(&self) -> Self {
        PauliString { phase: 0, ..*self }
    }

    pub fn with_phase(&self, phase_exponent: u8) -> Self {
        PauliString { phase: phase_exponent & 3, ..*self }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase & 1 == 0
    }

    /// `+1` / `-1` for Hermitian elements, `None` otherwise.
    pub fn sign(&self) -> Option<i8> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// Exponent in the `i^k X^x Z^z` form.
    #[inline]
    pub(crate) fn xz_phase(&self) -> u32 {
        self.phase as u32 + (self.x & self.z).count_ones()
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        debug_assert_eq!(self.n, other.n);
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // X^a Z^b X^c Z^d = (-1)^{b·c} X^{a+c} Z^{b+d}
        let k = self.xz_phase() + other.xz_phase() + 2 * (self.z & other.x).count_ones();
        let e = (k + 4 * 64 - (x & z).count_ones()) & 3;
        PauliString { n: self.n, x, z, phase: e as u8 }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Action on a computational basis state: `P|c⟩ = amp · |c ⊕ x⟩`.
    #[inline]
    pub fn apply_basis(&self, c: u64) -> (u64, Complex64) {
        let k = self.xz_phase() + 2 * (self.z & c).count_ones();
        (c ^ self.x, i_pow(k))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = 1usize << self.n;
        let mut m = DMatrix::zeros(d, d);
        for c in 0..d {
            let (r, a) = self.apply_basis(c as u64);
            m[(r as usize, c)] = a;
        }
        m
    }

    pub fn label(&self) -> String {
        (0..self.n)
            .map(|j| match ((self.x >> j) & 1, (self.z >> j) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            })
            .collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pre = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{pre}{}", self.label())
    }
}

/// Convenience wrapper for the index convention.
pub fn pauli_from_index(n: usize, idx: usize) -> Result<PauliString> {
    PauliString::from_index(n, idx)
}

/// Base-4 index of the Pauli with masks `(x, z)`.
#[inline]
pub fn pauli_index(n: usize, x: u64, z: u64) -> usize {
    let mut idx = 0usize;
    for j in 0..n {
        let digit = ((x >> j) & 1) | (((z >> j) & 1) << 1);
        idx |= (digit as usize) << (2 * j);
    }
    idx
}

/// Symplectic inner product of two `(x, z)` pairs.
#[inline]
pub(crate) fn symp(a: (u64, u64), b: (u64, u64)) -> bool {
    ((a.0 & b.1).count_ones() + (a.1 & b.0).count_ones()) & 1 == 1
}
