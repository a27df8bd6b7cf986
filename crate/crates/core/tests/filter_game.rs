use ipres_core::game::{
    conversion_falsifier, game_lb, game_lb_analytic, gamma_reduce, ia_denominator, phi_plus_filter, pmax_search,
    score, witness_bound, ConversionVerdict, GameBound,
};
use ipres_core::ops::{apply_ao, random_ao, AoParams};
use ipres_core::preservability::{eb_robustness_ub, ProbeFamily};
use ipres_core::quantum::random::{random_channel, random_effect, random_filter, seeded};
use ipres_core::quantum::FilterKind;
use ipres_core::{Channel, Config, Error, Filter};

#[test]
fn gamma_reduction_preserves_scores() {
    for seed in 0..30 {
        let mut rng = seeded(900 + seed);
        let n: Channel = random_channel(2, 2, 1 + seed as usize % 3, &mut rng);
        let k: Filter = random_filter(4, 1 + seed as usize % 4, &mut rng);
        let g = gamma_reduce(&k);
        assert_eq!(g.kind(), FilterKind::F1);
        let a = score(&n, &k).unwrap().value;
        let b = score(&n, &g).unwrap().value;
        assert!((a - b).abs() <= 1e-9, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn gamma_edge_cases() {
    let z = gamma_reduce(&Filter::zero(4));
    assert!(z.is_zero());
    assert_eq!(score(&Channel::identity(2), &z).unwrap().value, 0.0);
    let k = phi_plus_filter(2);
    assert_eq!(gamma_reduce(&k), k);
    let mut rng = seeded(1);
    let g = gamma_reduce(&random_filter::<f64, _>(4, 2, &mut rng));
    assert_eq!(gamma_reduce(&g), g);
}

#[test]
fn scores_are_monotone_in_the_filter() {
    let cfg = Config::default();
    let mut rng = seeded(12);
    for _ in 0..10 {
        let k2 = random_effect::<f64, _>(4, &mut rng);
        let m = random_effect::<f64, _>(4, &mut rng);
        let root = k2.matrix().sqrt_psd();
        let k1 = (&(&root * m.matrix()) * &root).hermitian_part();
        let f1 = Filter::f1_from_operator(&k1, &cfg.tol).unwrap();
        let f2 = Filter::f1_from_operator(k2.matrix(), &cfg.tol).unwrap();
        let n: Channel = random_channel(2, 2, 2, &mut rng);
        assert!(score(&n, &f1).unwrap().value <= score(&n, &f2).unwrap().value + 1e-10);
    }
}

#[test]
fn score_rejects_mismatched_filters() {
    assert!(matches!(score(&Channel::identity(2), &Filter::identity(2)), Err(Error::InvalidShape(_))));
}

#[test]
fn identity_ratios() {
    let cfg = Config::default();
    let f = ProbeFamily::xyz(2, &cfg).unwrap();
    let n = Channel::identity(2);
    let analytic = game_lb_analytic(&n, &phi_plus_filter(2), &cfg).unwrap();
    assert!((analytic.ratio_lb - 1.6).abs() < 1e-12);
    let probe = game_lb(&n, &phi_plus_filter(2), &f, &cfg).unwrap();
    let expected = 4.0 / (3f64.sqrt() + 1.0);
    assert!((probe.ratio_lb - expected).abs() < 1e-5, "{}", probe.ratio_lb);
    assert!(probe.denominator_method.starts_with("probe:"));
}

#[test]
fn analytic_denominator_is_restricted() {
    let cfg = Config::default();
    let mut rng = seeded(3);
    let k: Filter = random_filter(4, 1, &mut rng);
    assert!(matches!(game_lb_analytic(&Channel::identity(2), &k, &cfg), Err(Error::BoundUnavailable(_))));
}

#[test]
fn free_channels_gain_nothing() {
    let cfg = Config::default();
    let f = ProbeFamily::xyz(2, &cfg).unwrap();
    for p in [0.0, 0.3, 0.5] {
        let n = Channel::depolarising(p, 2).unwrap();
        let g = game_lb(&n, &phi_plus_filter(2), &f, &cfg).unwrap();
        assert!(g.ratio_lb <= 1.0 + 1e-5, "p={p}: {}", g.ratio_lb);
    }
}

#[test]
fn game_bounds_stay_below_upper_bounds() {
    let cfg = Config::default();
    let f = ProbeFamily::xyz(2, &cfg).unwrap();
    let mut rng = seeded(44);
    let mut channels = vec![Channel::identity(2), Channel::depolarising(0.75, 2).unwrap()];
    channels.extend((0..4).map(|_| random_channel(2, 2, 1, &mut rng)));
    for n in &channels {
        let ub = eb_robustness_ub(n, &cfg).unwrap();
        let k: Filter = random_filter(4, 2, &mut rng);
        for g in [game_lb(n, &k, &f, &cfg).unwrap(), game_lb(n, &phi_plus_filter(2), &f, &cfg).unwrap()] {
            assert!(g.ratio_lb - 1.0 <= ub + 1e-5, "{} vs {ub}", g.ratio_lb);
            assert!(g.denominator > 0.0 && g.denominator <= 1.0);
        }
    }
}

#[test]
fn witness_filters_reach_the_relaxed_robustness() {
    let cfg = Config::default();
    let f = ProbeFamily::xyz(2, &cfg).unwrap();
    let n = Channel::depolarising(0.9, 2).unwrap();
    let w = witness_bound(&n, &f, &cfg).unwrap();
    let lb = ipres_core::preservability::restricted_robustness_lb(&n, &f, &cfg).unwrap();
    assert!((w.ratio_lb - 1.0 - lb).abs() <= 1e-5);
    let again = game_lb(&n, &w.filter, &f, &cfg).unwrap();
    assert!((again.ratio_lb - w.ratio_lb).abs() < 1e-7);
}

#[test]
fn denominators_dominate_the_phi_plus_lower_value() {
    let cfg = Config::default();
    let f = ProbeFamily::xyz(2, &cfg).unwrap();
    let d = ia_denominator(&phi_plus_filter(2), &f, &cfg).unwrap();
    assert!(d.value >= 5.0 / 8.0 - 1e-9);
    let xz = ProbeFamily::standard(ipres_core::preservability::ProbeSet::Xz, 2, &cfg).unwrap();
    let dz = ia_denominator(&phi_plus_filter(2), &xz, &cfg).unwrap();
    assert!(dz.value >= d.value - 1e-7, "smaller family gives a larger outer set");
}

#[test]
fn pmax_includes_the_channel_itself() {
    let bank: Vec<_> = (0..4).map(|s| random_ao(s, AoParams::default()).unwrap()).collect();
    let n = Channel::depolarising(0.9, 2).unwrap();
    let k = phi_plus_filter(2);
    let base = score(&n, &k).unwrap().value;
    assert!(pmax_search(&n, &k, &bank).unwrap() >= base);
    assert_eq!(pmax_search(&n, &k, &[]).unwrap(), base);
}

#[test]
fn conversion_verdicts() {
    let bank: Vec<_> = (0..6).map(|s| random_ao(50 + s, AoParams::default()).unwrap()).collect();
    let filters = vec![phi_plus_filter(2)];
    let free = Channel::depolarising(0.4, 2).unwrap();
    let id = Channel::identity(2);
    let r = conversion_falsifier(&free, &id, &filters, &bank).unwrap();
    assert_eq!(r.verdict, ConversionVerdict::CandidateObstruction);
    let reachable = apply_ao(&bank[0], &id).unwrap();
    let r = conversion_falsifier(&id, &reachable, &filters, &bank).unwrap();
    assert_eq!(r.verdict, ConversionVerdict::NoObstructionFound);
}

#[test]
fn bounds_serialize_with_provenance() {
    let cfg = Config::default();
    let f = ProbeFamily::xyz(2, &cfg).unwrap();
    let g = game_lb(&Channel::identity(2), &phi_plus_filter(2), &f, &cfg).unwrap();
    let v: serde_json::Value = serde_json::to_value(&g).unwrap();
    assert_eq!(v["denominator_method"], "probe:xyz@d2");
    assert!(v["status"].is_string());
    let back: GameBound = serde_json::from_value(v).unwrap();
    assert_eq!(back.ratio_lb, g.ratio_lb);
}
