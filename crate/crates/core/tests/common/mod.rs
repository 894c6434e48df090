#![allow(dead_code)]

use std::io::Write;

use passage::steps::StepLaw;

/// Laws small enough for exhaustive path enumeration.
pub fn small_laws() -> Vec<StepLaw> {
    vec![
        StepLaw::simple(),
        StepLaw::bounded_lazy(0.45).unwrap(),
        StepLaw::finite(-2, vec![0.1, 0.2, 0.4, 0.2, 0.1]).unwrap(),
        StepLaw::finite(-2, vec![0.15, 0.2, 0.25, 0.3, 0.1]).unwrap(),
        StepLaw::finite(-2, vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
    ]
}

/// `[x][n] = P(T_x = n)` by walking every path of length `n ≤ nmax`
/// (paths are abandoned once their maximum exceeds `xmax`).
pub fn brute_first_passage(law: &StepLaw, xmax: i64, nmax: usize) -> Vec<Vec<f64>> {
    let steps: Vec<(i64, f64)> = (-2..=2).map(|k| (k, law.pmf(k))).filter(|s| s.1 > 0.0).collect();
    let mut out = vec![vec![0.0; nmax + 1]; xmax as usize + 1];
    walk(&steps, xmax, nmax, 0, 0, 0, 1.0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(steps: &[(i64, f64)], xmax: i64, nmax: usize, n: usize, s: i64, max: i64, p: f64, out: &mut [Vec<f64>]) {
    if n == nmax {
        return;
    }
    for &(k, q) in steps {
        let t = s + k;
        let pq = p * q;
        if t > max {
            // the path first exceeds every level in [max, t) at step n + 1
            for x in max..t.min(xmax + 1) {
                out[x as usize][n + 1] += pq;
            }
        }
        if t <= xmax {
            walk(steps, xmax, nmax, n + 1, t, max.max(t), pq, out);
        }
    }
}

/// `P(S_n = x − y, T_x > n)` by enumeration.
pub fn brute_killed(law: &StepLaw, x: i64, n: usize) -> std::collections::BTreeMap<i64, f64> {
    let steps: Vec<(i64, f64)> = (-2..=2).map(|k| (k, law.pmf(k))).filter(|s| s.1 > 0.0).collect();
    let mut cur = std::collections::BTreeMap::from([(0i64, 1.0f64)]);
    for _ in 0..n {
        let mut next = std::collections::BTreeMap::new();
        for (&s, &p) in &cur {
            for &(k, q) in &steps {
                if s + k <= x {
                    *next.entry(s + k).or_insert(0.0) += p * q;
                }
            }
        }
        cur = next;
    }
    cur
}

/// One uncaptured result line.
pub fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion:>2} {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}
