use passage::exact::{first_passage_table, WindowPolicy};
use passage::mc::{sample_first_passage, sample_sup_event};
use passage::stable::brownian_sup_below;
use passage::steps::StepLaw;

#[test]
fn simple_walk_first_step() {
    let h = sample_first_passage(&StepLaw::simple(), 0, 8, 1_000_000, 5).unwrap();
    assert!(h.bins[1].agrees(0.5, 3.0));
    assert!(h.bins[1].paths >= 990_000);
}

#[test]
fn histogram_csv() {
    let dir = tempfile::tempdir().unwrap();
    let h = sample_first_passage(&StepLaw::simple(), 1, 16, 32_000, 5).unwrap();
    let p = dir.path().join("h.csv");
    h.write_csv(&p).unwrap();
    let text = std::fs::read_to_string(p).unwrap();
    assert!(text.starts_with("n,estimate,stderr\n"));
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn sup_event_oracles() {
    let law = StepLaw::bounded_lazy(0.45).unwrap();
    let n = 1 << 12;
    let c = law.norming(n).unwrap();
    let e = sample_sup_event(&law, c.round() as i64, n, 64_000, 3).unwrap();
    let target = brownian_sup_below(1.0);
    assert!((e.estimate - target).abs() <= 3.0 * e.stderr + 0.02 * target, "{e:?} vs {target}");

    let z = sample_sup_event(&law, 0, 256, 64_000, 3).unwrap();
    let t = first_passage_table(&law, 0, 256, WindowPolicy::default()).unwrap();
    assert!(z.agrees(t.surv[256], 3.0));

    let far = sample_sup_event(&law, 10_000, 64, 3_200, 3).unwrap();
    assert_eq!(far.estimate, 1.0);
}
