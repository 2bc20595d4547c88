use thrifty_shadow::sim::{run_config, ObservableSpec, RunConfig, TargetSpec};
use thrifty_shadow::states::{sre2_closed, SreFamily};
use thrifty_shadow::variance::{vstar_fidelity, EnsembleKind};

fn cfg(n: usize, ensemble: EnsembleKind, reuses: u64, circuits: usize, seed: u64) -> RunConfig {
    RunConfig {
        n,
        ensemble,
        reuses,
        num_circuits: circuits,
        seed,
        target: TargetSpec::Basis { index: 0 },
        observable: ObservableSpec::Fidelity,
        depolarizing: 0.0,
    }
}

#[test]
fn haar_n2_matches_two_sevenths() {
    let s = run_config(&cfg(2, EnsembleKind::FourDesign, 10, 20000, 11)).unwrap();
    let z = (s.vstar_conditional - 2.0 / 7.0) / s.vstar_conditional_se;
    assert!(z.abs() < 4.0, "conditional V_* {} ± {}", s.vstar_conditional, s.vstar_conditional_se);
    let z = (s.vstar_hat.unwrap() - 2.0 / 7.0) / s.vstar_se.unwrap();
    assert!(z.abs() < 4.0);
}

#[test]
fn grand_mean_is_unbiased() {
    for (n, kind) in [(1, EnsembleKind::Clifford), (3, EnsembleKind::SimpleT { k: 2 }), (3, EnsembleKind::Interleaved { k: 1, l: 2 })] {
        let mut c = cfg(n, kind, 5, 4000, 21);
        c.target = TargetSpec::Family { family: SreFamily::W { n } };
        let s = run_config(&c).unwrap();
        assert!(((s.mean - s.expected_mean) / s.mean_se).abs() < 4.0, "{kind:?}: {} vs {}", s.mean, s.expected_mean);
    }
}

#[test]
fn depolarizing_shrinks_vstar_quadratically() {
    let mut c = cfg(3, EnsembleKind::Clifford, 4, 6000, 5);
    c.target = TargetSpec::Family { family: SreFamily::W { n: 3 } };
    let clean = run_config(&c).unwrap();
    c.depolarizing = 0.5;
    let noisy = run_config(&c).unwrap();
    // the conditional means use the same circuits, so the ratio is exact
    let ratio = noisy.vstar_conditional / clean.vstar_conditional;
    assert!((ratio - 0.25).abs() < 1e-9, "ratio {ratio}");
    let m2 = sre2_closed(&SreFamily::W { n: 3 }).unwrap();
    let want = vstar_fidelity(EnsembleKind::Clifford, 8.0, m2).unwrap();
    assert!(((clean.vstar_conditional - want) / clean.vstar_conditional_se).abs() < 4.0);
}

#[test]
fn seeds_are_deterministic() {
    let c = cfg(2, EnsembleKind::SimpleT { k: 1 }, 3, 300, 99);
    assert_eq!(run_config(&c).unwrap(), run_config(&c).unwrap());
    let mut d = c.clone();
    d.seed = 100;
    assert_ne!(run_config(&c).unwrap().mean, run_config(&d).unwrap().mean);
}

#[test]
fn single_reuse_has_no_anova_split() {
    let s = run_config(&cfg(1, EnsembleKind::Clifford, 1, 500, 1)).unwrap();
    assert!(s.vstar_hat.is_none() && s.v_hat.is_none());
    assert!(s.vr_hat > 0.0);
}
