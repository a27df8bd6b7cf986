use ipres_core::jm::{
    jm_decide, jm_visibility, jm_visibility_bisection, mub_bases, pauli_assemblage, ParentPovm, Responses,
};
use ipres_core::quantum::random::{random_channel, random_effect, seeded};
use ipres_core::{Channel, ComplexMatrix, Config, Effect, MeasurementAssemblage};

fn eff(m: ComplexMatrix) -> Effect {
    Effect::new(m, &Config::default().tol).unwrap()
}

fn assert_sound(e: &MeasurementAssemblage, cfg: &Config) {
    let v = jm_decide(e, cfg).unwrap();
    assert!(v.jm, "margin {}", v.margin);
    let cert = v.certificate.expect("compatible verdict carries a parent");
    cert.validate(cfg).unwrap();
    assert!(cert.reconstruction_residual(e) <= cfg.tol.cert);
}

#[test]
fn certificates_reconstruct_compatible_assemblages() {
    let cfg = Config::default();
    let xz: MeasurementAssemblage = pauli_assemblage(false);
    let xyz: MeasurementAssemblage = pauli_assemblage(true);
    for eta in [0.0, 0.3, 0.55, 0.7] {
        assert_sound(&xz.depolarised(eta), &cfg);
    }
    for eta in [0.2, 0.5, 0.57] {
        assert_sound(&xyz.depolarised(eta), &cfg);
    }
    assert_sound(&xyz.trivialised(), &cfg);
}

#[test]
fn two_outcome_commuting_effects_are_compatible() {
    let cfg = Config::default();
    let mut rng = seeded(2);
    for _ in 0..5 {
        let e = random_effect::<f64, _>(2, &mut rng);
        // E and E² commute
        let a = eff(e.matrix().clone());
        let b = eff(e.matrix() * e.matrix());
        let settings = vec![
            vec![a.clone(), eff(&ComplexMatrix::identity(2) - a.matrix())],
            vec![b.clone(), eff(&ComplexMatrix::identity(2) - b.matrix())],
        ];
        let asm = MeasurementAssemblage::new(settings, &cfg.tol).unwrap();
        assert_sound(&asm, &cfg);
    }
}

#[test]
fn visibility_does_not_increase_with_more_settings() {
    let cfg = Config::default();
    let xz = jm_visibility(&pauli_assemblage(false), &cfg).unwrap();
    let xyz = jm_visibility(&pauli_assemblage(true), &cfg).unwrap();
    assert!(xyz <= xz + 1e-7, "{xyz} > {xz}");
    let v2 = jm_visibility(&mub_bases(3, 2).unwrap(), &cfg).unwrap();
    let v3 = jm_visibility(&mub_bases(3, 3).unwrap(), &cfg).unwrap();
    assert!(v3 <= v2 + 1e-7, "{v3} > {v2}");
}

#[test]
fn threshold_mixture_is_compatible() {
    let cfg = Config::default();
    for e in [pauli_assemblage(false), pauli_assemblage(true), mub_bases(3, 2).unwrap()] {
        let eta = jm_visibility(&e, &cfg).unwrap();
        let v = jm_decide(&e.depolarised(eta), &cfg).unwrap();
        assert!(v.margin >= -cfg.tol.feas, "margin {} at eta {eta}", v.margin);
        assert!(v.jm);
    }
}

#[test]
fn direct_and_bisection_visibility_agree_for_qutrit_bases() {
    let cfg = Config::default();
    let e = mub_bases(3, 2).unwrap();
    let direct = jm_visibility(&e, &cfg).unwrap();
    let bis = jm_visibility_bisection(&e, 1e-5, &cfg).unwrap();
    assert!((direct - bis).abs() <= 2e-4, "{direct} vs {bis}");
    assert!(direct > 0.5 && direct < 1.0);
}

#[test]
fn pushforward_through_channels_keeps_compatibility() {
    let cfg = Config::default();
    let mut rng = seeded(40);
    let e = pauli_assemblage::<f64>(true).depolarised(0.5);
    for _ in 0..5 {
        let n: Channel = random_channel(2, 2, 2, &mut rng);
        let v = jm_decide(&n.pushforward(&e).unwrap(), &cfg).unwrap();
        assert!(v.jm && v.margin >= -cfg.tol.feas);
    }
}

#[test]
fn stochastic_certificates_are_accepted() {
    let cfg = Config::default();
    let half = ComplexMatrix::identity(2).scale(0.5);
    let effects = vec![eff(half.clone()), eff(half)];
    let table = vec![vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]];
    let parent = ParentPovm::new(effects, Responses::Stochastic(table), &cfg).unwrap();
    let trivial = MeasurementAssemblage::new(
        vec![vec![
            eff(ComplexMatrix::identity(2).scale(0.5)),
            eff(ComplexMatrix::identity(2).scale(0.5)),
        ]],
        &cfg.tol,
    )
    .unwrap();
    assert!(parent.reconstruction_residual(&trivial) < 1e-15);
    let bad = vec![vec![vec![0.7, 0.7]], vec![vec![0.5, 0.5]]];
    let effects = parent.effects.clone();
    assert!(ParentPovm::new(effects, Responses::Stochastic(bad), &cfg).is_err());
}

#[test]
fn verdicts_serialize() {
    let cfg = Config::default();
    let v = jm_decide(&pauli_assemblage::<f64>(false).depolarised(0.6), &cfg).unwrap();
    let text = serde_json::to_string(&v).unwrap();
    let back: ipres_core::jm::JmVerdict = serde_json::from_str(&text).unwrap();
    assert_eq!(back.jm, v.jm);
    assert_eq!(back.certificate.unwrap().len(), 4);
}
