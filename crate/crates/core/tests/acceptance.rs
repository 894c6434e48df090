//! One pass/fail line per acceptance criterion.

mod common;

use std::time::Instant;

use common::{brute_first_passage, verdict};
use passage::exact::{first_passage_table, WindowPolicy};
use passage::ladder::{
    build_ladder_tables, constant_diagnostics, decomposition_grid, ladder_height_pmfs, uniform_local_bound, renewal_functions,
    LadderConfig, HEIGHT_DEFECT_LIMIT,
};
use passage::mc::{sample_first_passage, PassageHistogram};
use passage::regimes::{prop13_checks, regime_a, regime_b, regime_c, Prop13Variant, Verdict, XRule};
use passage::stable::{
    brownian_h, brownian_q, calibrate_k7, extract_meander, h_via_riv, spectrally_negative_check, MassOracle, QDensity, Rayleigh,
    StableModel,
};
use passage::steps::StepLaw;

fn pareto08() -> StepLaw {
    StepLaw::pareto_symmetric(0.8, 0.2).unwrap()
}

fn lazy() -> StepLaw {
    StepLaw::bounded_lazy(0.45).unwrap()
}

fn grid(a: u32, b: u32) -> Vec<usize> {
    (a..=b).map(|k| 1usize << k).collect()
}

#[test]
fn criterion_01_brute_force_oracle() {
    let t0 = Instant::now();
    let laws = [
        StepLaw::simple(),
        lazy(),
        StepLaw::finite(-2, vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        StepLaw::finite(-2, vec![0.1, 0.2, 0.4, 0.2, 0.1]).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for law in &laws {
        let brute = brute_first_passage(law, 3, 12);
        for x in 0..=3i64 {
            let t = first_passage_table(law, x, 12, WindowPolicy::default()).unwrap();
            for n in 1..=12 {
                worst = worst.max((t.fp[n] - brute[x as usize][n]).abs());
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && secs < 10.0;
    verdict(1, "brute-force oracle", pass, &format!("{} laws, x<=3, n<=12, max abs err {worst:.2e}, {secs:.1} s", laws.len()));
    assert!(pass);
}

#[test]
fn criterion_02_decomposition_identity() {
    let t0 = Instant::now();
    let lazy_rows = decomposition_grid(&lazy(), 200, 30, 30, WindowPolicy::default()).unwrap();
    let par_rows = decomposition_grid(&pareto08(), 100, 20, 20, WindowPolicy::default().with_far_depth(1 << 14)).unwrap();
    let worst = |rows: &[passage::ladder::DecompositionRow]| rows.iter().fold(0.0_f64, |a, r| a.max(r.residual));
    let (a, b) = (worst(&lazy_rows), worst(&par_rows));
    let secs = t0.elapsed().as_secs_f64();
    let pass = a <= 1e-10 && b <= 1e-10 && secs < 120.0;
    verdict(2, "decomposition identity", pass, &format!("lazy residual {a:.2e}, pareto residual {b:.2e}, {secs:.1} s"));
    assert!(pass);
}

#[test]
fn criterion_03_duality_conservation() {
    let mut details = Vec::new();
    let mut pass = true;
    for (law, exact) in [(lazy(), true), (StepLaw::finite(-2, vec![0.15, 0.2, 0.25, 0.3, 0.1]).unwrap(), true), (pareto08(), false)] {
        let pol = WindowPolicy::default().with_far_depth(1 << 14);
        let t = build_ladder_tables(&law, &LadderConfig::new(1000, 0).with_policy(pol)).unwrap();
        let fp = first_passage_table(&law, 0, 1000, pol).unwrap();
        let mut cum = 0.0;
        let mut worst: f64 = 0.0;
        for n in 1..=1000 {
            cum += fp.fp[n];
            let d = (t.tau_tail[n] - (1.0 - cum)).abs();
            // truncated laws: the window defect is the error bar
            let bar = if exact { 0.0 } else { t.tau_defect[n] + fp.defect[n] };
            worst = worst.max(d - bar);
        }
        pass &= worst <= 1e-12;
        details.push(format!("{} {:.2e}", law.label(), worst.max(0.0)));
    }
    verdict(3, "duality / conservation", pass, &format!("n<=1000, excess over defect: {}", details.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_04_regime_a() {
    let t0 = Instant::now();
    let law = lazy();
    let h = ladder_height_pmfs(&law, None, 10, HEIGHT_DEFECT_LIMIT).unwrap();
    let ren = renewal_functions(&h.q_h, &h.q_hminus, 10).unwrap();
    let g = grid(11, 14);
    let r = regime_a(&law, &ren, XRule::Fixed(5), &g, WindowPolicy::default()).unwrap();
    let z = regime_a(&law, &ren, XRule::Fixed(0), &g, WindowPolicy::default()).unwrap();
    let zero_exact = z.ratios.iter().all(|&v| v == 1.0);
    let secs = t0.elapsed().as_secs_f64();
    let pass = r.within(0.10) && r.monotone_improvement() && zero_exact && secs < 60.0;
    verdict(4, "regime A", pass, &format!("ratios {:?}, x=0 exact {zero_exact}, {secs:.1} s", fmt(&r.ratios)));
    assert!(pass);
}

#[test]
fn criterion_05_regime_b() {
    let t0 = Instant::now();
    let law = lazy();
    let r = regime_b(&law, &brownian_h, 1.0, &grid(10, 14), WindowPolicy::default()).unwrap().report;
    let first = (r.ratios[0] - 1.0).abs();
    let improving = r.verdict == Verdict::Converging && (r.last_value - 1.0).abs() < first;
    let secs = t0.elapsed().as_secs_f64();
    let pass = r.within(0.10) && improving && secs < 60.0;
    verdict(5, "regime B", pass, &format!("ratios {:?}, verdict {}, {secs:.1} s", fmt(&r.ratios), r.verdict));
    assert!(pass);
}

#[test]
fn criterion_06_regime_c() {
    let t0 = Instant::now();
    let law = pareto08();
    let n = 512;
    let c = law.norming(n).unwrap();
    let at = |k: f64| {
        let depth = ((2.0 * k * c + 64.0 * c) as usize).next_power_of_two();
        regime_c(&law, k, &[n], WindowPolicy::default().with_far_depth(depth)).unwrap().0.last_value
    };
    let (r10, r50, r100) = (at(10.0), at(50.0), at(100.0));
    let secs = t0.elapsed().as_secs_f64();
    let pass = (r50 - 1.0).abs() <= 0.15 && (r100 - 1.0).abs() < (r10 - 1.0).abs() && secs < 300.0;
    verdict(6, "regime C", pass, &format!("K=10 {r10:.4}, K=50 {r50:.4}, K=100 {r100:.4}, {secs:.1} s"));
    assert!(pass);
}

#[test]
fn criterion_07_large_deviations() {
    let law = pareto08();
    let n = 512;
    let c = law.norming(n).unwrap();
    let pol = WindowPolicy::default().with_far_depth(((60.0 * c + 64.0 * c) as usize).next_power_of_two());
    let tail = prop13_checks(&law, Prop13Variant::Tail, 30.0, &[n], pol).unwrap().last_value;
    let local = prop13_checks(&law, Prop13Variant::Local, 30.0, &[n], pol).unwrap().last_value;
    let pass = (tail - 1.0).abs() <= 0.15 && (local - 1.0).abs() <= 0.15;
    verdict(7, "large deviations", pass, &format!("x=30c_n, n=512: tail ratio {tail:.4}, local ratio {local:.4}"));
    assert!(pass);
}

#[test]
fn criterion_08_stable_identities() {
    // spectrally negative: p(x) proportional to h_x(1)
    let sn = StepLaw::spectrally_negative(1.5, 0.0).unwrap();
    let n = 4096;
    let pol = WindowPolicy::default().with_far_depth(1 << 14);
    let t = build_ladder_tables(&sn, &LadderConfig::new(n, 0).with_snapshots([n / 2, n]).with_policy(pol)).unwrap();
    let z: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05).collect();
    let (p, _) = extract_meander(&sn, &t, n, &z).unwrap();
    let c = sn.norming(n).unwrap();
    let hs: Vec<(f64, f64)> = [0.5, 0.75, 1.0, 1.5, 2.0]
        .iter()
        .map(|&xn| {
            let x = (xn * c).round() as i64;
            let fp = first_passage_table(&sn, x, n, pol).unwrap();
            (x as f64 / c, n as f64 * fp.fp[n])
        })
        .collect();
    let model = StableModel::from_law(&sn).unwrap();
    let prop = spectrally_negative_check(&model, &p, &hs).unwrap();
    let ok_sn = prop.all_positive && prop.cv <= 0.10;

    // heavy tails: h from q through the regularized integral, calibrated at x_n = 1
    let law = pareto08();
    let n = 1024;
    let pol = WindowPolicy::default().with_far_depth(1 << 16);
    let t = build_ladder_tables(&law, &LadderConfig::new(n, 0).with_snapshots([n / 2, n]).with_policy(pol)).unwrap();
    let (p, pt) = extract_meander(&law, &t, n, &z).unwrap();
    let model = StableModel::from_law(&law).unwrap();
    let c = law.norming(n).unwrap();
    let mut k7 = 0.0;
    let mut errs = Vec::new();
    for (i, xn) in [1.0, 0.5, 2.0].into_iter().enumerate() {
        let x = (xn * c).round() as i64;
        let fp = first_passage_table(&law, x, n, pol).unwrap();
        let h = n as f64 * fp.fp[n];
        let q = QDensity::new(model, x as f64 / c, &p, &pt, MassOracle::Value(fp.surv[n])).unwrap();
        if i == 0 {
            k7 = calibrate_k7(&q, h).unwrap();
        } else {
            errs.push((h_via_riv(&q, k7).unwrap() / h - 1.0).abs());
        }
    }
    let ok_riv = errs.iter().all(|&e| e <= 0.15);

    // Brownian q pipeline against the reflection formula
    let mut worst: f64 = 0.0;
    for x in [0.5, 1.0, 2.0] {
        let q = QDensity::new(StableModel::brownian(), x, &Rayleigh, &Rayleigh, MassOracle::BrownianClosedForm).unwrap();
        for i in 1..=12 {
            let w = 0.25 * i as f64;
            worst = worst.max((q.eval(w) / brownian_q(x, w) - 1.0).abs());
        }
    }
    let ok_q = worst <= 0.02;
    let pass = ok_sn && ok_riv && ok_q;
    verdict(
        8,
        "stable identities",
        pass,
        &format!("proportionality CV {:.4}, riv errors {:?}, q vs reflection {worst:.2e}", prop.cv, fmt(&errs)),
    );
    assert!(pass);
}

#[test]
fn criterion_09_meander_and_constants() {
    let law = pareto08();
    let n = 1024;
    let pol = WindowPolicy::default().with_far_depth(1 << 16);
    let t = build_ladder_tables(&law, &LadderConfig::new(n, 0).with_snapshots([n / 2, n]).with_policy(pol)).unwrap();
    let z: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05).collect();
    let (p, pt) = extract_meander(&law, &t, n, &z).unwrap();
    let (sp, spt) = (p.stability.unwrap(), pt.stability.unwrap());

    let lz = lazy();
    let g = grid(6, 12);
    let cap = (2.0 * lz.norming(4096).unwrap()).ceil() as usize + 2;
    let h = ladder_height_pmfs(&lz, None, cap, HEIGHT_DEFECT_LIMIT).unwrap();
    let ren = renewal_functions(&h.q_h, &h.q_hminus, cap).unwrap();
    let lt = build_ladder_tables(&lz, &LadderConfig::new(4096, 0).with_snapshots(g.clone())).unwrap();
    let consts = constant_diagnostics(&lz, &lt, &ren, &g).unwrap();
    let c2 = uniform_local_bound(&lz, &lt, &ren, &g).unwrap();
    let k_drifts: Vec<f64> = consts[..3].iter().map(|d| d.top_octave_drift()).collect();
    let c2_drift = c2.top_octave_drift();
    let pass = sp <= 0.05 && spt <= 0.05 && c2_drift <= 0.20 && k_drifts.iter().all(|&d| d <= 0.05);
    verdict(
        9,
        "meander stability and constants",
        pass,
        &format!("stability p {sp:.4} ptilde {spt:.4}, C2 drift {c2_drift:.4}, k4/k5/k6 drifts {:?}", fmt(&k_drifts)),
    );
    assert!(pass);
}

fn bins_ok(h: &PassageHistogram, exact: &[f64]) -> (usize, usize) {
    let informative: Vec<usize> = (1..=h.nmax).filter(|&n| exact[n] * h.bins[n].paths as f64 >= 10.0).collect();
    let good = informative.iter().filter(|&&n| h.bins[n].agrees(exact[n], 4.0)).count();
    (good, informative.len())
}

#[test]
fn criterion_10_monte_carlo() {
    let mut pass = true;
    let mut details = Vec::new();
    for (law, x) in [(lazy(), 5), (pareto08(), 5), (StepLaw::spectrally_negative(1.5, 0.0).unwrap(), 4)] {
        let nmax = 1024;
        let h = sample_first_passage(&law, x, nmax, 1_000_000, 2024).unwrap();
        let t = first_passage_table(&law, x, nmax, WindowPolicy::default()).unwrap();
        let (good, total) = bins_ok(&h, &t.fp);
        let frac = good as f64 / total as f64;
        pass &= total > 0 && frac >= 0.95;
        details.push(format!("{} {good}/{total}", law.label()));
    }
    let law = lazy();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| sample_first_passage(&law, 3, 128, 64_000, 99).unwrap());
    let b = four.install(|| sample_first_passage(&law, 3, 128, 64_000, 99).unwrap());
    let deterministic = a == b;
    pass &= deterministic;
    verdict(10, "Monte Carlo crosscheck", pass, &format!("bins within 4 SE: {}; deterministic across thread counts {deterministic}", details.join(", ")));
    assert!(pass);
}

fn fmt(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.4}")).collect()
}
