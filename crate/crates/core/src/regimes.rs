//! Asymptotic statements as exact ratio sequences on geometric n-grids.
//!
//! Every comparison is a ratio in which slowly varying factors and unknown
//! constants cancel; the verdict is read off the trend, not a single value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{first_passage_table, unkilled_law, KilledWalk, WindowPolicy};
use crate::ladder::{top_octave_drift, RenewalTables};
use crate::numeric::ls_slope;
use crate::stable::{Meander, StableModel};
use crate::steps::StepLaw;

/// What a ratio sequence should approach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    One,
    /// Some unknown positive constant.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converging,
    FlatAtConstant,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converging => "converging",
            Verdict::FlatAtConstant => "flat-at-constant",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Largest top-octave drift for a flat-at-constant verdict.
pub const FLAT_DRIFT: f64 = 0.05;
/// Distances to 1 below this count as exact.
const EXACT_EPS: f64 = 1e-12;

/// How the barrier depends on `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XRule {
    Fixed(i64),
    /// `⌊c_n^{1/2}⌋`.
    SqrtCn,
    /// `round(K c_n)`.
    Scaled(f64),
}

impl XRule {
    pub fn at(&self, law: &StepLaw, n: usize) -> Result<i64> {
        Ok(match *self {
            XRule::Fixed(x) => x,
            XRule::SqrtCn => law.norming(n)?.sqrt().floor() as i64,
            XRule::Scaled(k) => (k * law.norming(n)?).round() as i64,
        })
    }
}

impl fmt::Display for XRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XRule::Fixed(x) => write!(f, "x={x}"),
            XRule::SqrtCn => f.write_str("x=floor(sqrt(c_n))"),
            XRule::Scaled(k) => write!(f, "x={k}*c_n"),
        }
    }
}

/// Ratio sequence against an asymptotic prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub statement: String,
    pub law: String,
    pub x_rule: String,
    pub target: Target,
    pub ngrid: Vec<usize>,
    pub xs: Vec<i64>,
    pub ratios: Vec<f64>,
    pub last_value: f64,
    pub top_octave_drift: f64,
    /// Log-log slope of `|ratio − 1|` (target one) or of the ratio (constant).
    pub slope: f64,
    pub verdict: Verdict,
}

impl ConvergenceReport {
    pub fn new(statement: &str, law: &str, x_rule: &str, target: Target, ngrid: Vec<usize>, xs: Vec<i64>, ratios: Vec<f64>) -> Self {
        let last_value = *ratios.last().unwrap_or(&f64::NAN);
        let top_octave_drift = top_octave_drift(&ngrid, &ratios);
        let ln: Vec<f64> = ngrid.iter().map(|&n| (n as f64).ln()).collect();
        let slope = match target {
            Target::One => {
                let e: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs().max(1e-300).ln()).collect();
                ls_slope(&ln, &e)
            }
            Target::Constant => {
                let e: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
                ls_slope(&ln, &e)
            }
        };
        let verdict = verdict(target, &ratios, top_octave_drift);
        Self {
            statement: statement.to_string(),
            law: law.to_string(),
            x_rule: x_rule.to_string(),
            target,
            ngrid,
            xs,
            ratios,
            last_value,
            top_octave_drift,
            slope,
            verdict,
        }
    }

    /// `|last − 1| ≤ tol`.
    pub fn within(&self, tol: f64) -> bool {
        (self.last_value - 1.0).abs() <= tol
    }

    /// `|ratio − 1|` never increases along the grid.
    pub fn monotone_improvement(&self) -> bool {
        self.ratios
            .windows(2)
            .all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs() || (w[1] - 1.0).abs() <= EXACT_EPS)
    }

    /// Ratios are finite and positive.
    pub fn well_formed(&self) -> bool {
        self.ratios.iter().all(|r| r.is_finite() && *r > 0.0)
    }
}

fn verdict(target: Target, ratios: &[f64], drift: f64) -> Verdict {
    match target {
        Target::One => {
            let k = ratios.len();
            if k == 0 {
                return Verdict::Inconclusive;
            }
            let e: Vec<f64> = ratios[k.saturating_sub(3)..].iter().map(|r| (r - 1.0).abs()).collect();
            if e.iter().all(|&d| d <= EXACT_EPS) || (e.len() == 3 && e[0] >= e[1] && e[1] >= e[2]) {
                Verdict::Converging
            } else {
                Verdict::Inconclusive
            }
        }
        Target::Constant => {
            if drift <= FLAT_DRIFT {
                Verdict::FlatAtConstant
            } else {
                Verdict::Inconclusive
            }
        }
    }
}

/// `(P(T_x = n), P(T_x > n))` for every `(n, x)` pair; one sweep per distinct `x`.
pub fn passage_at(law: &StepLaw, pairs: &[(usize, i64)], policy: WindowPolicy) -> Result<Vec<(f64, f64)>> {
    let mut horizon: BTreeMap<i64, usize> = BTreeMap::new();
    for &(n, x) in pairs {
        let h = horizon.entry(x).or_insert(0);
        *h = (*h).max(n);
    }
    let jobs: Vec<(i64, usize)> = horizon.into_iter().collect();
    let tables: Vec<Result<_>> = jobs
        .par_iter()
        .map(|&(x, n)| first_passage_table(law, x, n, policy).map_err(|e| e.in_cell(format!("{} x={x} n={n}", law.label()))))
        .collect();
    let mut by_x = BTreeMap::new();
    for ((x, _), t) in jobs.iter().zip(tables) {
        by_x.insert(*x, t?);
    }
    Ok(pairs
        .iter()
        .map(|(n, x)| {
            let t = &by_x[x];
            (t.fp[*n], t.surv[*n])
        })
        .collect())
}

fn xs_for(law: &StepLaw, rule: XRule, ngrid: &[usize]) -> Result<Vec<i64>> {
    ngrid.iter().map(|&n| rule.at(law, n)).collect()
}

/// `P(T_x = n) / (U(x) P(T₀ = n))`.
pub fn regime_a(law: &StepLaw, renewal: &RenewalTables, rule: XRule, ngrid: &[usize], policy: WindowPolicy) -> Result<ConvergenceReport> {
    regime_a_impl(law, renewal, rule, ngrid, policy, false)
}

/// `P(T_x > n) / (U(x) P(T₀ > n))`.
pub fn regime_a_tail(law: &StepLaw, renewal: &RenewalTables, rule: XRule, ngrid: &[usize], policy: WindowPolicy) -> Result<ConvergenceReport> {
    regime_a_impl(law, renewal, rule, ngrid, policy, true)
}

fn regime_a_impl(law: &StepLaw, renewal: &RenewalTables, rule: XRule, ngrid: &[usize], policy: WindowPolicy, tail: bool) -> Result<ConvergenceReport> {
    let xs = xs_for(law, rule, ngrid)?;
    if let Some(&x) = xs.iter().find(|&&x| x < 0 || x as usize >= renewal.u.len()) {
        return Err(Error::PreconditionViolated(format!("U({x}) is not tabulated")));
    }
    let mut pairs: Vec<(usize, i64)> = ngrid.iter().copied().zip(xs.iter().copied()).collect();
    pairs.extend(ngrid.iter().map(|&n| (n, 0)));
    let vals = passage_at(law, &pairs, policy)?;
    let k = ngrid.len();
    let ratios = (0..k)
        .map(|i| {
            let u = renewal.u[xs[i] as usize];
            let (fx, sx) = vals[i];
            let (f0, s0) = vals[k + i];
            if tail {
                sx / (u * s0)
            } else {
                fx / (u * f0)
            }
        })
        .collect();
    Ok(ConvergenceReport::new(
        if tail { "t1-tail" } else { "t1" },
        law.label(),
        &rule.to_string(),
        Target::One,
        ngrid.to_vec(),
        xs,
        ratios,
    ))
}

/// Regime B output: the report plus the realized `x/c_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeBReport {
    pub report: ConvergenceReport,
    pub realized_xn: Vec<f64>,
}

/// `n P(T_x = n) / h_{x_n}(1)` with `x = round(x_n c_n)` and `x_n` recomputed after rounding.
pub fn regime_b(law: &StepLaw, h: &(dyn Fn(f64) -> f64 + Sync), x_over_cn: f64, ngrid: &[usize], policy: WindowPolicy) -> Result<RegimeBReport> {
    let xs = xs_for(law, XRule::Scaled(x_over_cn), ngrid)?;
    let pairs: Vec<(usize, i64)> = ngrid.iter().copied().zip(xs.iter().copied()).collect();
    let vals = passage_at(law, &pairs, policy)?;
    let mut realized = Vec::with_capacity(ngrid.len());
    let mut ratios = Vec::with_capacity(ngrid.len());
    for (i, &n) in ngrid.iter().enumerate() {
        let xn = xs[i] as f64 / law.norming(n)?;
        realized.push(xn);
        ratios.push(n as f64 * vals[i].0 / h(xn));
    }
    Ok(RegimeBReport {
        report: ConvergenceReport::new("t2", law.label(), &format!("x={x_over_cn}*c_n"), Target::One, ngrid.to_vec(), xs, ratios),
        realized_xn: realized,
    })
}

fn require_small_alpha_rho(law: &StepLaw) -> Result<StableModel> {
    let model = StableModel::from_law(law)?;
    if model.alpha_rho() >= 1.0 - 1e-9 {
        return Err(Error::PreconditionViolated(format!(
            "large-x statements need alpha*rho < 1; {} has alpha*rho = {}",
            law.label(),
            model.alpha_rho()
        )));
    }
    if !law.has_regular_local_tail() {
        return Err(Error::PreconditionViolated(format!("{} has no regularly varying right tail", law.label())));
    }
    Ok(model)
}

/// `P(T_x = n) / F̄(x)` with `x = round(K c_n)`, plus the integrated form
/// `P(T_x ≤ n) / (n F̄(x))`.
pub fn regime_c(law: &StepLaw, k: f64, ngrid: &[usize], policy: WindowPolicy) -> Result<(ConvergenceReport, ConvergenceReport)> {
    require_small_alpha_rho(law)?;
    let rule = XRule::Scaled(k);
    let xs = xs_for(law, rule, ngrid)?;
    let pairs: Vec<(usize, i64)> = ngrid.iter().copied().zip(xs.iter().copied()).collect();
    let vals = passage_at(law, &pairs, policy)?;
    let mut local = Vec::new();
    let mut integrated = Vec::new();
    for (i, &n) in ngrid.iter().enumerate() {
        let fbar = law.tail(xs[i]);
        local.push(vals[i].0 / fbar);
        integrated.push((1.0 - vals[i].1) / (n as f64 * fbar));
    }
    let name = rule.to_string();
    Ok((
        ConvergenceReport::new("t3", law.label(), &name, Target::One, ngrid.to_vec(), xs.clone(), local),
        ConvergenceReport::new("t3-integrated", law.label(), &name, Target::One, ngrid.to_vec(), xs, integrated),
    ))
}

/// Which joint local limit is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prop4Variant {
    /// `x, y` fixed: `U(x) f(0) V(y) / (n c_n)`.
    A,
    /// `x` fixed, `y = y_n c_n`: `U(x) P(τ>n) p̃(y_n) / c_n`.
    B,
    /// `x = x_n c_n`, `y` fixed: `V(y) P(τ⁻>n) p(x_n) / c_n`.
    D,
    /// both scaled: `q_{x_n}(y_n) / c_n`.
    C,
}

impl Prop4Variant {
    pub fn id(&self) -> &'static str {
        match self {
            Prop4Variant::A => "prop4-A",
            Prop4Variant::B => "prop4-B",
            Prop4Variant::D => "prop4-D",
            Prop4Variant::C => "prop4-C",
        }
    }
}

/// Limit objects needed by the joint local limit checks.
pub struct LimitInputs<'a> {
    pub renewal: &'a RenewalTables,
    pub f0: f64,
    pub p: &'a dyn Meander,
    pub ptilde: &'a dyn Meander,
    /// `(x_n, y_n) ↦ q_{x_n}(y_n)`.
    pub q: Option<&'a (dyn Fn(f64, f64) -> f64 + Sync)>,
}

/// `P(τ⁻ > n)` for every `n ≤ nmax` with its window defect, counted as surviving.
pub fn tauminus_tail(law: &StepLaw, nmax: usize, policy: WindowPolicy) -> Result<Vec<f64>> {
    let refl = law.reflected();
    let mut walk = KilledWalk::new(&refl, -1, policy)?;
    let mut out = vec![1.0; nmax + 1];
    for n in 1..=nmax {
        walk.step()?;
        out[n] = walk.state().total() + walk.state().defect;
    }
    Ok(out)
}

/// Joint local limits for `P(S_n = x − y, T_x > n)`; `a`, `b` are the
/// integer `x`, `y` when fixed and `x_n`, `y_n` when scaled.
pub fn prop4_checks(law: &StepLaw, variant: Prop4Variant, inputs: &LimitInputs, a: f64, b: f64, ngrid: &[usize], policy: WindowPolicy) -> Result<ConvergenceReport> {
    let nmax = *ngrid.iter().max().ok_or_else(|| Error::PreconditionViolated("empty n grid".into()))?;
    let scaled_x = matches!(variant, Prop4Variant::D | Prop4Variant::C);
    let scaled_y = matches!(variant, Prop4Variant::B | Prop4Variant::C);
    let mut cells = Vec::with_capacity(ngrid.len());
    for &n in ngrid {
        let c = law.norming(n)?;
        let x = if scaled_x { (a * c).round() as i64 } else { a as i64 };
        let y = if scaled_y { (b * c).round() as i64 } else { b as i64 };
        cells.push((n, c, x, y));
    }
    let need_tau = matches!(variant, Prop4Variant::B);
    let need_taum = matches!(variant, Prop4Variant::D);
    let tau = if need_tau { Some(first_passage_table(law, 0, nmax, policy)?) } else { None };
    let taum = if need_taum { Some(tauminus_tail(law, nmax, policy)?) } else { None };
    let lhs: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(n, _, x, y)| {
            let mut w = KilledWalk::new(law, x, policy)?;
            w.run_to(n)?;
            Ok(w.state().mass_at(x - y))
        })
        .collect();
    let r = inputs.renewal;
    let table = |t: &[f64], i: i64| -> Result<f64> {
        t.get(i as usize)
            .copied()
            .ok_or_else(|| Error::PreconditionViolated(format!("renewal table does not reach {i}")))
    };
    let mut ratios = Vec::with_capacity(cells.len());
    for (&(n, c, x, y), l) in cells.iter().zip(lhs) {
        let l = l?;
        let nf = n as f64;
        let pred = match variant {
            Prop4Variant::A => table(&r.u, x)? * inputs.f0 * table(&r.v, y)? / (nf * c),
            Prop4Variant::B => table(&r.u, x)? * tau.as_ref().unwrap().surv[n] * inputs.ptilde.eval(y as f64 / c) / c,
            Prop4Variant::D => table(&r.v, y)? * taum.as_ref().unwrap()[n] * inputs.p.eval(x as f64 / c) / c,
            Prop4Variant::C => {
                let q = inputs
                    .q
                    .ok_or_else(|| Error::PreconditionViolated("variant C needs a q evaluator".into()))?;
                q(x as f64 / c, y as f64 / c) / c
            }
        };
        ratios.push(l / pred);
    }
    let rule = match variant {
        Prop4Variant::A => format!("x={a},y={b}"),
        Prop4Variant::B => format!("x={a},y={b}*c_n"),
        Prop4Variant::D => format!("x={a}*c_n,y={b}"),
        Prop4Variant::C => format!("x={a}*c_n,y={b}*c_n"),
    };
    Ok(ConvergenceReport::new(
        variant.id(),
        law.label(),
        &rule,
        Target::One,
        ngrid.to_vec(),
        cells.iter().map(|c| c.2).collect(),
        ratios,
    ))
}

/// Large-deviation local and integrated statements at `x = K c_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prop13Variant {
    /// `P(S_n > x) / (n F̄(x))`.
    Tail,
    /// `P(S_n > x, τ⁻ > n) / (ρ⁻¹ P(S_n > x) P(τ⁻ > n))`.
    TailKilled,
    /// `P(S_n ∈ [x, x+Δ)) / (n f_x^Δ)`.
    Local,
    /// `P(S_n ∈ [x, x+Δ), τ⁻ > n) / (ρ⁻¹ n f_x^Δ P(τ⁻ > n))`.
    LocalKilled,
}

impl Prop13Variant {
    pub fn id(&self) -> &'static str {
        match self {
            Prop13Variant::Tail => "5.x",
            Prop13Variant::TailKilled => "5.1",
            Prop13Variant::Local => "5.y",
            Prop13Variant::LocalKilled => "5.3",
        }
    }
}

/// Local increment width.
pub const DELTA: i64 = 1;

pub fn prop13_checks(law: &StepLaw, variant: Prop13Variant, k: f64, ngrid: &[usize], policy: WindowPolicy) -> Result<ConvergenceReport> {
    let model = require_small_alpha_rho(law)?;
    let rule = XRule::Scaled(k);
    let xs = xs_for(law, rule, ngrid)?;
    if let Some(&x) = xs.iter().max() {
        if x as usize + 1 >= policy.far_depth {
            return Err(Error::PreconditionViolated(format!(
                "window depth {} must exceed x = {x}",
                policy.far_depth
            )));
        }
    }
    let rho = model.rho;
    let ratios: Vec<Result<f64>> = ngrid
        .par_iter()
        .zip(xs.par_iter())
        .map(|(&n, &x)| {
            let nf = n as f64;
            let local = law.local_mass(x, DELTA);
            match variant {
                Prop13Variant::Tail | Prop13Variant::Local => {
                    let s = unkilled_law(law, n, policy)?;
                    Ok(if variant == Prop13Variant::Tail {
                        s.prob_above(x) / (nf * law.tail(x))
                    } else {
                        (0..DELTA).map(|d| s.mass_at(x + d)).sum::<f64>() / (nf * local)
                    })
                }
                Prop13Variant::TailKilled | Prop13Variant::LocalKilled => {
                    let refl = law.reflected();
                    let mut w = KilledWalk::new(&refl, -1, policy)?;
                    w.run_to(n)?;
                    let st = w.state();
                    // mass lost beyond the window sits far above x
                    let survive = st.total() + st.defect;
                    if variant == Prop13Variant::TailKilled {
                        let above: f64 = (st.lo..-x).map(|j| st.mass_at(j)).sum::<f64>() + st.defect;
                        let s = unkilled_law(law, n, policy)?;
                        Ok(above / (s.prob_above(x) * survive / rho))
                    } else {
                        let m: f64 = (0..DELTA).map(|d| st.mass_at(-(x + d))).sum();
                        Ok(m / (nf * local * survive / rho))
                    }
                }
            }
        })
        .collect();
    let ratios: Result<Vec<f64>> = ratios.into_iter().collect();
    Ok(ConvergenceReport::new(variant.id(), law.label(), &rule.to_string(), Target::One, ngrid.to_vec(), xs, ratios?))
}

/// Checks for the spectrally negative family, where the small and moderate
/// barrier statements need a separate argument.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrallyNegativeReport {
    pub regime_a: ConvergenceReport,
    pub regime_b: RegimeBReport,
    /// `n c_n P(τ = n) / (f(0) ω(n))`.
    pub omega: ConvergenceReport,
    /// `n F̄(δ_n c_n)` with `δ_n = 1/ln n`.
    pub delta_device: Vec<f64>,
    /// The large-barrier statement is refused for this family.
    pub regime_c_refused: bool,
}

pub fn specneg_small_barrier_checks(law: &StepLaw, renewal: &RenewalTables, x: i64, xn: f64, ngrid: &[usize], policy: WindowPolicy) -> Result<SpectrallyNegativeReport> {
    let model = StableModel::from_law(law)?;
    if (model.alpha_rho() - 1.0).abs() > 1e-9 {
        return Err(Error::PreconditionViolated(format!("{} is not spectrally negative", law.label())));
    }
    let regime_a = regime_a(law, renewal, XRule::Fixed(x), ngrid, policy)?;
    // passage density of a spectrally negative process: h_x(1) = x f(x)
    let h = |y: f64| y * model.density(y).unwrap_or(f64::NAN);
    let regime_b = regime_b(law, &h, xn, ngrid, policy)?;

    let nmax = *ngrid.iter().max().unwrap();
    let t0 = first_passage_table(law, 0, nmax, policy)?;
    let f0 = model.density(0.0)?;
    let mut omega_ratios = Vec::new();
    let mut delta_device = Vec::new();
    for &n in ngrid {
        let c = law.norming(n)?;
        let delta = 1.0 / (n as f64).ln();
        let ymax = (delta * c).floor() as usize;
        if ymax >= renewal.v.len() {
            return Err(Error::PreconditionViolated(format!("V must be tabulated to {ymax}")));
        }
        let omega: f64 = (0..=ymax).map(|y| renewal.v[y] * law.tail(y as i64)).sum();
        omega_ratios.push(n as f64 * c * t0.fp[n] / (f0 * omega));
        delta_device.push(n as f64 * law.tail((delta * c).floor() as i64));
    }
    let omega = ConvergenceReport::new("omega", law.label(), "delta_n=1/ln(n)", Target::One, ngrid.to_vec(), vec![0; ngrid.len()], omega_ratios);
    let regime_c_refused = matches!(regime_c(law, 50.0, &ngrid[..1], policy), Err(Error::PreconditionViolated(_)));
    Ok(SpectrallyNegativeReport {
        regime_a,
        regime_b,
        omega,
        delta_device,
        regime_c_refused,
    })
}

/// CSV `(statement, n, x, ratio)`.
pub fn write_reports(reports: &[ConvergenceReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["statement", "law", "rule", "n", "x", "ratio"])?;
    for r in sorted(reports) {
        for i in 0..r.ngrid.len() {
            w.write_record(&[
                r.statement.clone(),
                r.law.clone(),
                r.x_rule.clone(),
                r.ngrid[i].to_string(),
                r.xs[i].to_string(),
                format!("{:.12e}", r.ratios[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `(statement, last_value, drift, slope, verdict)`.
pub fn write_summary(reports: &[ConvergenceReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["statement", "law", "rule", "last_value", "drift", "slope", "verdict"])?;
    for r in sorted(reports) {
        w.write_record(&[
            r.statement.clone(),
            r.law.clone(),
            r.x_rule.clone(),
            format!("{:.12e}", r.last_value),
            format!("{:.6e}", r.top_octave_drift),
            format!("{:.6}", r.slope),
            r.verdict.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn sorted(reports: &[ConvergenceReport]) -> Vec<&ConvergenceReport> {
    let mut v: Vec<&ConvergenceReport> = reports.iter().collect();
    v.sort_by(|a, b| (&a.statement, &a.law, &a.x_rule).cmp(&(&b.statement, &b.law, &b.x_rule)));
    v
}

/// Geometric grid `2^a, …, 2^b`.
pub fn pow2_grid(a: u32, b: u32) -> Vec<usize> {
    (a..=b).map(|k| 1usize << k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::{ladder_height_pmfs, renewal_functions, HEIGHT_DEFECT_LIMIT};
    use crate::stable::brownian_h;

    fn lazy_renewal(law: &StepLaw, xmax: usize) -> RenewalTables {
        let h = ladder_height_pmfs(law, None, xmax, HEIGHT_DEFECT_LIMIT).unwrap();
        renewal_functions(&h.q_h, &h.q_hminus, xmax).unwrap()
    }

    #[test]
    fn verdict_rules() {
        let r = ConvergenceReport::new("s", "l", "x", Target::One, vec![1, 2, 4], vec![0; 3], vec![1.3, 1.2, 1.1]);
        assert_eq!(r.verdict, Verdict::Converging);
        let r = ConvergenceReport::new("s", "l", "x", Target::One, vec![1, 2, 4], vec![0; 3], vec![1.1, 1.2, 1.1]);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        let r = ConvergenceReport::new("s", "l", "x", Target::Constant, vec![1, 2, 4], vec![0; 3], vec![3.0, 3.01, 3.02]);
        assert_eq!(r.verdict, Verdict::FlatAtConstant);
    }

    #[test]
    fn zero_barrier_ratio_is_one() {
        let law = StepLaw::bounded_lazy(0.45).unwrap();
        let ren = lazy_renewal(&law, 10);
        let grid = pow2_grid(4, 8);
        let a = regime_a(&law, &ren, XRule::Fixed(0), &grid, WindowPolicy::default()).unwrap();
        let b = regime_a_tail(&law, &ren, XRule::Fixed(0), &grid, WindowPolicy::default()).unwrap();
        assert!(a.ratios.iter().chain(&b.ratios).all(|&r| r == 1.0));
        assert_eq!(a.verdict, Verdict::Converging);
    }

    #[test]
    fn regime_b_rounding() {
        let law = StepLaw::bounded_lazy(0.45).unwrap();
        let grid = pow2_grid(10, 11);
        let r = regime_b(&law, &brownian_h, 1.0, &grid, WindowPolicy::default()).unwrap();
        for (&n, x) in grid.iter().zip(&r.realized_xn) {
            assert!((x - 1.0).abs() <= 0.5 / law.norming(n).unwrap() + 1e-12);
        }
    }

    #[test]
    fn large_barrier_refused_for_spectrally_negative() {
        let law = StepLaw::spectrally_negative(1.5, 0.0).unwrap();
        let err = regime_c(&law, 10.0, &[64], WindowPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolated(_)));
        let lazy = StepLaw::bounded_lazy(0.45).unwrap();
        assert!(regime_c(&lazy, 10.0, &[64], WindowPolicy::default()).is_err());
    }
}
