mod common;

use common::{brute_first_passage, brute_killed, small_laws};
use passage::exact::{first_passage_table, killed_snapshot, unkilled_law, KilledWalk, WindowPolicy};
use passage::steps::StepLaw;
use proptest::prelude::*;

#[test]
fn passage_matches_enumeration() {
    for law in small_laws() {
        let brute = brute_first_passage(&law, 3, 9);
        for x in 0..=3 {
            let t = first_passage_table(&law, x, 9, WindowPolicy::default()).unwrap();
            for n in 1..=9 {
                assert!((t.fp[n] - brute[x as usize][n]).abs() < 1e-13, "{} x={x} n={n}", law.label());
            }
        }
    }
}

#[test]
fn killed_law_matches_enumeration() {
    for law in small_laws() {
        for x in [0, 2] {
            let v = killed_snapshot(&law, x, 7, WindowPolicy::default()).unwrap();
            let brute = brute_killed(&law, x, 7);
            for (&j, &p) in &brute {
                assert!((v.mass_at(j) - p).abs() < 1e-14);
            }
            assert!((v.total() - brute.values().sum::<f64>()).abs() < 1e-13);
        }
    }
}

#[test]
fn window_cap_is_enforced() {
    let law = StepLaw::pareto_symmetric(0.8, 0.2).unwrap();
    let pol = WindowPolicy::default().with_mem_cap(1000);
    assert!(matches!(
        KilledWalk::new(&law, 5, pol),
        Err(passage::Error::WindowOverflow { .. })
    ));
}

#[test]
fn heavy_tail_defect_is_accounted() {
    let law = StepLaw::pareto_symmetric(0.8, 0.2).unwrap();
    let mut w = KilledWalk::new(&law, 10, WindowPolicy::default().with_far_depth(1 << 10)).unwrap();
    w.run_to(200).unwrap();
    assert!(w.state().defect > 0.0);
    assert!(w.state().conservation_error() < 1e-12);
}

#[test]
fn unkilled_law_sums_to_one() {
    let law = StepLaw::pareto_symmetric(0.8, 0.2).unwrap();
    let s = unkilled_law(&law, 64, WindowPolicy::default().with_far_depth(1 << 14)).unwrap();
    let window: f64 = (s.lo..=s.hi()).map(|j| s.mass_at(j)).sum();
    assert!((window + s.defect() - 1.0).abs() < 1e-12);
    let lz = StepLaw::bounded_lazy(0.45).unwrap();
    let s = unkilled_law(&lz, 10, WindowPolicy::default()).unwrap();
    let brute = brute_killed(&lz, 1000, 10);
    for (&j, &p) in &brute {
        assert!((s.mass_at(j) - p).abs() < 1e-14);
    }
}

/// Random weights on [−2, 2], centred by mixing with a unit step against the drift.
fn finite_law() -> impl Strategy<Value = StepLaw> {
    prop::collection::vec(0.01f64..1.0, 5).prop_filter_map("centred", |w| {
        let total: f64 = w.iter().sum();
        let mut p: Vec<f64> = w.iter().map(|v| v / total).collect();
        let mu: f64 = p.iter().enumerate().map(|(i, v)| (i as f64 - 2.0) * v).sum();
        let (lambda, site) = if mu > 0.0 { (1.0 / (1.0 + mu), 1) } else { (1.0 / (1.0 - mu), 3) };
        for v in p.iter_mut() {
            *v *= lambda;
        }
        p[site] += 1.0 - lambda;
        StepLaw::finite(-2, p).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_and_monotonicity(law in finite_law(), x in 0i64..6) {
        let n = 60;
        let a = first_passage_table(&law, x, n, WindowPolicy::default()).unwrap();
        let b = first_passage_table(&law, x + 1, n, WindowPolicy::default()).unwrap();
        let mut w = KilledWalk::new(&law, x, WindowPolicy::default()).unwrap();
        for k in 1..=n {
            w.step().unwrap();
            prop_assert!(w.state().conservation_error() < 1e-12);
            prop_assert!(a.fp[k] >= 0.0);
            prop_assert!(a.surv[k] <= a.surv[k - 1] + 1e-15);
            prop_assert!(b.surv[k] + 1e-14 >= a.surv[k]);
        }
    }
}
