//! Ω(Cl₂) by full group enumeration, decomposed into κ and g coefficients.
use thrifty_shadow::commutant::{gi_fit, kappa_closed, kappa_extract, omega_empirical, projectors, UnitarySource};
use thrifty_shadow::variance::EnsembleKind;

fn main() -> thrifty_shadow::Result<()> {
    let est = omega_empirical(2, UnitarySource::CliffordGroup, None)?;
    println!("averaged over {} Cliffords", est.samples);
    let k = kappa_extract(&est.omega, &projectors(2)?)?;
    println!("kappa (enumerated) = {:?}", k.as_array());
    println!("kappa (closed)     = {:?}", kappa_closed(EnsembleKind::Clifford, 2)?.as_array());
    let fit = gi_fit(&est.omega, None)?;
    println!("g = {:?}  residual {:.1e}", fit.g.0, fit.residual);
    Ok(())
}
