//! Monte Carlo thrifty shadow run compared with the analytic variances.
use thrifty_shadow::sim::{run_config, ObservableSpec, RunConfig, TargetSpec};
use thrifty_shadow::states::{sre2_closed, SreFamily};
use thrifty_shadow::variance::{analyze_fidelity, EnsembleKind};

fn main() -> thrifty_shadow::Result<()> {
    let n = 4;
    let fam = SreFamily::W { n };
    let cfg = RunConfig {
        n,
        ensemble: EnsembleKind::Clifford,
        reuses: 10,
        num_circuits: 5000,
        seed: 2024,
        target: TargetSpec::Family { family: fam.clone() },
        observable: ObservableSpec::Fidelity,
        depolarizing: 0.1,
    };
    let s = run_config(&cfg)?;
    let a = analyze_fidelity(cfg.ensemble, 16.0, sre2_closed(&fam)?, cfg.depolarizing)?;
    println!("mean  {:.4} ± {:.4}  (tr Oρ = {:.4})", s.mean, s.mean_se, s.expected_mean);
    println!("V_R   {:.4} ± {:.4}  (analytic {:.4})", s.vr_hat, s.vr_se, a.vr(cfg.reuses)?);
    println!("V_*   {:.4} ± {:.4}  (analytic {:.4})", s.vstar_hat.unwrap(), s.vstar_se.unwrap(), a.vstar);
    println!("V     {:.4} ± {:.4}  (analytic {:.4})", s.v_hat.unwrap(), s.v_se.unwrap(), a.v);
    Ok(())
}
