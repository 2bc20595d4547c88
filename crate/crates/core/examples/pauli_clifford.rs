//! Random Cliffords act on Pauli strings through their tableau.
use thrifty_shadow::clifford::{clifford_group_order, clifford_to_circuit, conjugate_pauli, random_clifford};
use thrifty_shadow::pauli::PauliString;
use thrifty_shadow::sim::circuit_rng;

fn main() -> thrifty_shadow::Result<()> {
    for n in 1..=3 {
        println!("|Cl_{n}| (mod phases) = {}", clifford_group_order(n));
    }
    let mut rng = circuit_rng(1, 0);
    let c = random_clifford(3, &mut rng)?;
    println!("circuit: {} gates", clifford_to_circuit(&c).len());
    for label in ["XII", "IZI", "XYZ"] {
        let p = PauliString::from_label(label)?;
        println!("{label} -> {}", conjugate_pauli(&c, &p)?.label());
    }
    Ok(())
}
