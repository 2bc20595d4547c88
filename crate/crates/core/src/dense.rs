//! Dense state-vector and matrix kernels. Qubit `q` is bit `q` of the basis index.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::clifford::{Gate, GateSequence};
use crate::error::{Error, Result};

/// Largest register for which a full unitary matrix is materialized.
pub const DENSE_UNITARY_MAX: usize = 12;
/// Largest register for gate-by-gate state-vector evolution.
pub const STATEVECTOR_MAX: usize = 22;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn t_phase() -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)
}

/// Apply one gate in place to a 2ⁿ amplitude slice.
pub fn apply_gate(amps: &mut [Complex64], g: Gate) {
    let len = amps.len();
    match g {
        Gate::H(q) => {
            let b = 1usize << q;
            for i in 0..len {
                if i & b == 0 {
                    let (a0, a1) = (amps[i], amps[i | b]);
                    amps[i] = (a0 + a1) * FRAC_1_SQRT_2;
                    amps[i | b] = (a0 - a1) * FRAC_1_SQRT_2;
                }
            }
        }
        Gate::S(q) => {
            let b = 1usize << q;
            for (i, a) in amps.iter_mut().enumerate() {
                if i & b != 0 {
                    *a = Complex64::new(-a.im, a.re);
                }
            }
        }
        Gate::T(q) => {
            let b = 1usize << q;
            let w = t_phase();
            for (i, a) in amps.iter_mut().enumerate() {
                if i & b != 0 {
                    *a *= w;
                }
            }
        }
        Gate::Cnot(c, t) => {
            let (bc, bt) = (1usize << c, 1usize << t);
            for i in 0..len {
                if i & bc != 0 && i & bt == 0 {
                    amps.swap(i, i | bt);
                }
            }
        }
    }
}

pub fn apply_sequence(amps: &mut [Complex64], seq: &GateSequence) -> Result<()> {
    if seq.n > STATEVECTOR_MAX {
        return Err(Error::CutoffExceeded { what: "state-vector evolution", n: seq.n, max: STATEVECTOR_MAX });
    }
    if amps.len() != 1 << seq.n {
        return Err(Error::DimensionMismatch { expected: 1 << seq.n, found: amps.len() });
    }
    for &g in &seq.gates {
        apply_gate(amps, g);
    }
    Ok(())
}

/// Product of gate matrices in application order.
pub fn dense_unitary(seq: &GateSequence, n: usize) -> Result<CMat> {
    if n > DENSE_UNITARY_MAX {
        return Err(Error::CutoffExceeded { what: "dense_unitary", n, max: DENSE_UNITARY_MAX });
    }
    if seq.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: seq.n });
    }
    let d = 1usize << n;
    let mut u = CMat::identity(d, d);
    for c in 0..d {
        let col = &mut u.as_mut_slice()[c * d..(c + 1) * d];
        for &g in &seq.gates {
            apply_gate(col, g);
        }
    }
    Ok(u)
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar-random pure state of dimension d.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let nrm = v.norm();
    v / Complex64::new(nrm, 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `tr(A B)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> Complex64 {
    let d = a.nrows();
    let mut s = ZERO;
    for i in 0..d {
        for k in 0..d {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn unitarity_error(u: &CMat) -> f64 {
    let d = u.nrows();
    (u.adjoint() * u - CMat::identity(d, d)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(g: Gate) -> CMat {
        let mut s = GateSequence::new(1);
        s.push(g).unwrap();
        dense_unitary(&s, 1).unwrap()
    }

    #[test]
    fn gate_tables() {
        let h = one(Gate::H(0));
        let r = FRAC_1_SQRT_2;
        assert!((h[(0, 0)].re - r).abs() < 1e-15 && (h[(1, 1)].re + r).abs() < 1e-15);
        let s = one(Gate::S(0));
        assert_eq!(s[(1, 1)], Complex64::new(0.0, 1.0));
        let t = one(Gate::T(0));
        assert!((t[(1, 1)] - t_phase()).norm() < 1e-15);
        assert_eq!(t[(0, 0)], ONE);
    }

    #[test]
    fn cnot_control_is_first() {
        let mut s = GateSequence::new(2);
        s.push(Gate::Cnot(0, 1)).unwrap();
        let u = dense_unitary(&s, 2).unwrap();
        // |q0=1,q1=0⟩ = index 1 → index 3
        assert_eq!(u[(3, 1)], ONE);
        assert_eq!(u[(2, 2)], ONE);
    }

    #[test]
    fn haar_is_unitary() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(8, &mut rng);
        assert!(unitarity_error(&u) < 1e-12);
    }

    #[test]
    fn cutoff() {
        assert!(dense_unitary(&GateSequence::new(13), 13).is_err());
    }
}
