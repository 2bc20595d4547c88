//! Closed-form V and V_* for fidelity estimation, and the reuse trade-off V_R.
use thrifty_shadow::states::{sre2_closed, SreFamily};
use thrifty_shadow::variance::{analyze_fidelity, EnsembleKind};

fn main() -> thrifty_shadow::Result<()> {
    let n = 10;
    let d = (n as f64).exp2();
    let m2 = sre2_closed(&SreFamily::W { n })?;
    println!("W_{n}: M2 = {m2:.6}");
    let kinds = [
        ("4-design", EnsembleKind::FourDesign),
        ("clifford", EnsembleKind::Clifford),
        ("U_{2,1}", EnsembleKind::Interleaved { k: 2, l: 1 }),
        ("U~_5", EnsembleKind::SimpleT { k: 5 }),
    ];
    for (name, kind) in kinds {
        let b = analyze_fidelity(kind, d, m2, 0.0)?;
        let vr: Vec<String> = [1, 10, 100, 1000].iter().map(|&r| format!("{:.4}", b.vr(r).unwrap())).collect();
        println!("{name:>9}: V = {:.4}  V* = {:.5}  V_R(1,10,100,1000) = {}", b.v, b.vstar, vr.join(" "));
    }
    Ok(())
}
