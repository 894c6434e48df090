//! Ladder structure from the killed engine.
//!
//! `g(m, u) = P(S_m = u, τ⁻ > m)` is the killed law of the reflected walk
//! below barrier −1, read at `−u`; `g⁻(m, u) = P(S_m = −u, τ > m)` is the killed
//! law below barrier 0. Time sums of the two give the renewal masses of the
//! strict ascending and weak descending ladder heights.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exact::{KilledWalk, WindowPolicy};
use crate::numeric::zeta::hurwitz;
use crate::steps::StepLaw;

/// What to keep while sweeping the two killed walks.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderConfig {
    /// Largest time `M`.
    pub horizon: usize,
    /// Heights `0..=height_cap` are stored for every `m ≤ M`.
    pub height_cap: usize,
    /// Times at which whole rows are kept.
    pub snapshots: Vec<usize>,
    pub policy: WindowPolicy,
}

impl LadderConfig {
    pub fn new(horizon: usize, height_cap: usize) -> Self {
        Self {
            horizon,
            height_cap,
            snapshots: Vec::new(),
            policy: WindowPolicy::default(),
        }
    }

    pub fn with_snapshots(mut self, snapshots: impl IntoIterator<Item = usize>) -> Self {
        self.snapshots = snapshots.into_iter().collect();
        self
    }

    pub fn with_policy(mut self, policy: WindowPolicy) -> Self {
        self.policy = policy;
        self
    }
}

#[derive(Debug, Clone, Default)]
struct Sweep {
    low: Vec<f64>,
    tail: Vec<f64>,
    defect: Vec<f64>,
    rows: BTreeMap<usize, Vec<f64>>,
    occ: Vec<f64>,
}

fn sweep(law: &StepLaw, barrier: i64, cfg: &LadderConfig) -> Result<Sweep> {
    let cap = cfg.height_cap;
    let m_max = cfg.horizon;
    let mut walk = KilledWalk::new(law, barrier, cfg.policy)?;
    let mut out = Sweep {
        low: vec![0.0; (m_max + 1) * (cap + 1)],
        tail: vec![0.0; m_max + 1],
        defect: vec![0.0; m_max + 1],
        rows: BTreeMap::new(),
        occ: vec![0.0; cap + 1],
    };
    let read = |walk: &KilledWalk, m: usize, out: &mut Sweep| {
        let s = walk.state();
        let row = &mut out.low[m * (cap + 1)..(m + 1) * (cap + 1)];
        for (u, slot) in row.iter_mut().enumerate() {
            *slot = s.mass_at(-(u as i64));
        }
        for (o, v) in out.occ.iter_mut().zip(row.iter()) {
            *o += v;
        }
        out.tail[m] = s.total();
        out.defect[m] = s.defect;
        if cfg.snapshots.contains(&m) {
            let depth = (-s.lo).max(0) as usize;
            out.rows.insert(m, (0..=depth).map(|u| s.mass_at(-(u as i64))).collect());
        }
    };
    read(&walk, 0, &mut out);
    for m in 1..=m_max {
        walk.step()?;
        read(&walk, m, &mut out);
    }
    Ok(out)
}

/// Exact ladder tables up to time `M`.
#[derive(Debug, Clone)]
pub struct LadderTables {
    pub horizon: usize,
    pub height_cap: usize,
    g_low: Vec<f64>,
    gminus_low: Vec<f64>,
    g_rows: BTreeMap<usize, Vec<f64>>,
    gminus_rows: BTreeMap<usize, Vec<f64>>,
    /// `P(τ > n)`.
    pub tau_tail: Vec<f64>,
    /// `P(τ⁻ > n)`.
    pub tauminus_tail: Vec<f64>,
    /// Window defect of the `g⁻` sweep; an error bar on `tau_tail`.
    pub tau_defect: Vec<f64>,
    /// Window defect of the `g` sweep.
    pub tauminus_defect: Vec<f64>,
    /// Renewal function of strict ascending ladder times, `Γ(n) = Σ_j P(τ_j ≤ n)`.
    pub gamma: Vec<f64>,
    /// `Σ_{m ≤ M} g(m, u)` plus a tail completion, `u ≤ height_cap`.
    pub occ_g: Vec<f64>,
    pub occ_gminus: Vec<f64>,
    pub occ_g_err: Vec<f64>,
    pub occ_gminus_err: Vec<f64>,
}

/// Builds `g`, `g⁻`, the ladder-time tails and `Γ`.
pub fn build_ladder_tables(law: &StepLaw, cfg: &LadderConfig) -> Result<LadderTables> {
    if cfg.horizon < 1 {
        return Err(Error::PreconditionViolated("ladder horizon must be >= 1".into()));
    }
    let refl = law.reflected();
    let (g, gm) = rayon::join(|| sweep(&refl, -1, cfg), || sweep(law, 0, cfg));
    let (g, gm) = (g?, gm?);

    let m_max = cfg.horizon;
    // ladder-time renewal: γ = δ₀ + a * γ with a(m) = P(τ = m)
    let a: Vec<f64> = (0..=m_max)
        .map(|m| if m == 0 { 0.0 } else { (gm.tail[m - 1] - gm.tail[m]).max(0.0) })
        .collect();
    let mut gam = vec![0.0; m_max + 1];
    gam[0] = 1.0;
    for n in 1..=m_max {
        let mut s = 0.0;
        for k in 1..=n {
            s += a[k] * gam[n - k];
        }
        gam[n] = s;
    }
    let mut gamma = vec![0.0; m_max + 1];
    let mut acc = 0.0;
    for n in 0..=m_max {
        acc += gam[n];
        gamma[n] = acc;
    }

    let mut t = LadderTables {
        horizon: m_max,
        height_cap: cfg.height_cap,
        g_low: g.low,
        gminus_low: gm.low,
        g_rows: g.rows,
        gminus_rows: gm.rows,
        tau_tail: gm.tail,
        tauminus_tail: g.tail,
        tau_defect: gm.defect,
        tauminus_defect: g.defect,
        gamma,
        occ_g: g.occ,
        occ_gminus: gm.occ,
        occ_g_err: Vec::new(),
        occ_gminus_err: Vec::new(),
    };
    t.complete_occupation(law)?;
    Ok(t)
}

impl LadderTables {
    fn low(&self, block: &[f64], m: usize, u: usize) -> f64 {
        block[m * (self.height_cap + 1) + u]
    }

    /// `g(m, u)`, from the low block or a stored row; `None` if not kept.
    pub fn g(&self, m: usize, u: usize) -> Option<f64> {
        if m > self.horizon {
            return None;
        }
        if u <= self.height_cap {
            return Some(self.low(&self.g_low, m, u));
        }
        self.g_rows.get(&m).map(|r| r.get(u).copied().unwrap_or(0.0))
    }

    /// `g⁻(m, u)`.
    pub fn gminus(&self, m: usize, u: usize) -> Option<f64> {
        if m > self.horizon {
            return None;
        }
        if u <= self.height_cap {
            return Some(self.low(&self.gminus_low, m, u));
        }
        self.gminus_rows.get(&m).map(|r| r.get(u).copied().unwrap_or(0.0))
    }

    /// Whole row `u ↦ g(m, u)` if `m` was a snapshot time.
    pub fn g_row(&self, m: usize) -> Option<&[f64]> {
        self.g_rows.get(&m).map(|v| v.as_slice())
    }

    pub fn gminus_row(&self, m: usize) -> Option<&[f64]> {
        self.gminus_rows.get(&m).map(|v| v.as_slice())
    }

    /// `P(τ = n)`.
    pub fn tau_pmf(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.tau_tail[n - 1] - self.tau_tail[n]
        }
    }

    /// Adds `Σ_{m > M} g(m, u)` using `g(m, u) ∝ 1/(m c_m)` beyond the horizon.
    fn complete_occupation(&mut self, law: &StepLaw) -> Result<()> {
        let cap = self.height_cap;
        let m = self.horizon;
        self.occ_g_err = vec![0.0; cap + 1];
        self.occ_gminus_err = vec![0.0; cap + 1];
        if skip_free_up(law) || skip_free_down(law) || m < 4 {
            return Ok(());
        }
        let eta = law.eta();
        let mf = m as f64;
        let factor = mf.powf(1.0 + eta) * hurwitz(1.0 + eta, mf + 1.0);
        let half = m / 2;
        let c_m = law.norming(m)?;
        let c_h = law.norming(half)?;
        for (low, occ, err) in [
            (&self.g_low, &mut self.occ_g, &mut self.occ_g_err),
            (&self.gminus_low, &mut self.occ_gminus, &mut self.occ_gminus_err),
        ] {
            for u in 0..=cap {
                let at = |k: usize| low[k * (cap + 1) + u];
                // average adjacent rows so span-2 laws are handled too
                let last = 0.5 * (at(m) + at(m - 1));
                let prev = 0.5 * (at(half) + at(half - 1));
                let extra = last * factor;
                occ[u] += extra;
                let a_m = last * mf * c_m;
                let a_h = prev * half as f64 * c_h;
                let drift = if a_h > 0.0 { (a_m / a_h - 1.0).abs() } else { 1.0 };
                err[u] = extra * drift.max(1e-3);
            }
        }
        Ok(())
    }

    /// `(m, u, g, gminus)` rows of the low block.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["m", "u", "g", "gminus"])?;
        for m in 0..=self.horizon {
            for u in 0..=self.height_cap {
                w.write_record(&[
                    m.to_string(),
                    u.to_string(),
                    format!("{:e}", self.low(&self.g_low, m, u)),
                    format!("{:e}", self.low(&self.gminus_low, m, u)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn skip_free_up(law: &StepLaw) -> bool {
    law.support_max() == Some(1)
}

fn skip_free_down(law: &StepLaw) -> bool {
    law.support_min() == Some(-1)
}

/// Ladder-height pmfs on `0..=ymax`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderHeights {
    /// `q_H(y) = P(H = y)`, `q_H(0) = 0`.
    pub q_h: Vec<f64>,
    /// `q_H⁻(y) = P(−H⁻ = y)`.
    pub q_hminus: Vec<f64>,
    /// Bound on the absolute error of the listed values.
    pub error: f64,
    /// Proper mass beyond `ymax`: `(1 − Σ q_H, 1 − Σ q_H⁻)`.
    pub mass_beyond: (f64, f64),
    /// Whether closed skip-free forms were used.
    pub exact: bool,
}

/// Default largest tolerated [`LadderHeights::error`].
pub const HEIGHT_DEFECT_LIMIT: f64 = 1e-6;

/// Ladder-height pmfs. Skip-free laws use closed forms; otherwise the renewal
/// masses from the time-summed ladder tables are deconvolved.
pub fn ladder_height_pmfs(law: &StepLaw, tables: Option<&LadderTables>, ymax: usize, limit: f64) -> Result<LadderHeights> {
    let up = skip_free_up(law);
    let down = skip_free_down(law);
    let (q_h, q_hm, error, exact) = if up {
        let mut q_h = vec![0.0; ymax + 1];
        if ymax >= 1 {
            q_h[1] = 1.0;
        }
        let q_hm: Vec<f64> = (0..=ymax as i64).map(|y| law.lower_to(-y)).collect();
        (q_h, q_hm, 0.0, true)
    } else if down {
        let pm = law.pmf(-1);
        let mut q_hm = vec![0.0; ymax + 1];
        q_hm[0] = 1.0 - pm;
        if ymax >= 1 {
            q_hm[1] = pm;
        }
        let q_h: Vec<f64> = (0..=ymax as i64)
            .map(|y| if y == 0 { 0.0 } else { law.upper_from(y) / pm })
            .collect();
        (q_h, q_hm, 0.0, true)
    } else {
        let t = tables.ok_or_else(|| {
            Error::PreconditionViolated("ladder tables are required for laws that are not skip-free".into())
        })?;
        if ymax > t.height_cap {
            return Err(Error::PreconditionViolated(format!(
                "ymax {ymax} exceeds the table height cap {}",
                t.height_cap
            )));
        }
        let u = &t.occ_g[..=ymax];
        let v = &t.occ_gminus[..=ymax];
        let q_h = deconvolve_strict(u);
        let q_hm = deconvolve_weak(v)?;
        // absolute error of the renewal masses, summed over the heights each q value depends on
        let error = t.occ_g_err[..=ymax].iter().chain(&t.occ_gminus_err[..=ymax]).sum::<f64>();
        (q_h, q_hm, error, false)
    };
    if error > limit {
        return Err(Error::DefectTooLarge { defect: error, limit });
    }
    let mass_beyond = (
        1.0 - crate::numeric::ksum(&q_h),
        1.0 - crate::numeric::ksum(&q_hm),
    );
    Ok(LadderHeights {
        q_h,
        q_hminus: q_hm,
        error,
        mass_beyond,
        exact,
    })
}

/// Inverts `u = δ₀ + q * u` for `q` supported on `y ≥ 1`.
fn deconvolve_strict(u: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; u.len()];
    for y in 1..u.len() {
        let mut s = u[y];
        for w in 1..y {
            s -= q[w] * u[y - w];
        }
        q[y] = s.max(0.0);
    }
    q
}

/// Inverts `v = δ₀ + q * v` for `q` supported on `y ≥ 0`.
fn deconvolve_weak(v: &[f64]) -> Result<Vec<f64>> {
    let mut q = vec![0.0; v.len()];
    if v[0] < 1.0 {
        return Err(Error::PreconditionViolated(format!("weak renewal mass at 0 must be >= 1, got {}", v[0])));
    }
    q[0] = 1.0 - 1.0 / v[0];
    for y in 1..v.len() {
        let mut s = v[y] * (1.0 - q[0]);
        for w in 1..y {
            s -= q[w] * v[y - w];
        }
        q[y] = (s / v[0]).max(0.0);
    }
    Ok(q)
}

/// Renewal functions of the ladder heights on `0..=xmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalTables {
    /// `U(x)`, with `U(0) = 1`.
    pub u: Vec<f64>,
    pub u_mass: Vec<f64>,
    /// `V(y)`.
    pub v: Vec<f64>,
    pub v_mass: Vec<f64>,
    pub q_h: Vec<f64>,
    pub q_hminus: Vec<f64>,
}

impl RenewalTables {
    /// `U` at a real argument, by linear interpolation.
    pub fn u_at(&self, x: f64) -> f64 {
        interp(&self.u, x)
    }

    pub fn v_at(&self, y: f64) -> f64 {
        interp(&self.v, y)
    }

    /// `A(y) = Σ_{w ≤ y} P(H > w)`.
    pub fn a_at(&self, y: usize) -> f64 {
        let mut cdf = 0.0;
        let mut acc = 0.0;
        for w in 0..=y.min(self.q_h.len() - 1) {
            cdf += self.q_h[w];
            acc += (1.0 - cdf).max(0.0);
        }
        acc
    }

    /// `(x, U, V)` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "U", "V"])?;
        for x in 0..self.u.len() {
            w.write_record(&[x.to_string(), format!("{:e}", self.u[x]), format!("{:e}", self.v[x])])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn interp(table: &[f64], x: f64) -> f64 {
    let x = x.max(0.0);
    let i = x.floor() as usize;
    if i + 1 >= table.len() {
        return table[table.len() - 1];
    }
    let f = x - i as f64;
    table[i] * (1.0 - f) + table[i + 1] * f
}

/// Weak-descending atom limit for [`renewal_functions`].
pub const ATOM_LIMIT: f64 = 1.0 - 1e-9;

/// Solves the two renewal recursions on `0..=xmax`.
pub fn renewal_functions(q_h: &[f64], q_hminus: &[f64], xmax: usize) -> Result<RenewalTables> {
    if q_h.len() <= xmax || q_hminus.len() <= xmax {
        return Err(Error::PreconditionViolated(format!(
            "ladder-height pmfs must cover 0..={xmax}"
        )));
    }
    let q0 = q_hminus[0];
    if q0 >= ATOM_LIMIT {
        return Err(Error::AtomTooLarge(q0));
    }
    let mut u_mass = vec![0.0; xmax + 1];
    let mut v_mass = vec![0.0; xmax + 1];
    for y in 0..=xmax {
        let mut su = if y == 0 { 1.0 } else { 0.0 };
        let mut sv = su;
        for w in 1..=y {
            su += q_h[w] * u_mass[y - w];
            sv += q_hminus[w] * v_mass[y - w];
        }
        u_mass[y] = su;
        v_mass[y] = sv / (1.0 - q0);
    }
    let cum = |m: &[f64]| {
        let mut acc = 0.0;
        m.iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect::<Vec<f64>>()
    };
    Ok(RenewalTables {
        u: cum(&u_mass),
        v: cum(&v_mass),
        u_mass,
        v_mass,
        q_h: q_h[..=xmax].to_vec(),
        q_hminus: q_hminus[..=xmax].to_vec(),
    })
}

/// One identity evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionRow {
    pub n: usize,
    pub x: usize,
    pub y: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Relative residual, absolute when `|lhs| < RESIDUAL_FLOOR`.
    pub residual: f64,
}

/// `h[r][u]` for `r ≤ n`, `u ≤ cap` of the killed walk read at `−u`.
fn low_history(law: &StepLaw, barrier: i64, floor: Option<i64>, n: usize, cap: usize, policy: WindowPolicy) -> Result<Vec<Vec<f64>>> {
    let mut walk = KilledWalk::with_floor(law, barrier, floor, policy)?;
    let mut out = Vec::with_capacity(n + 1);
    let read = |w: &KilledWalk| (0..=cap).map(|u| w.state().mass_at(-(u as i64))).collect::<Vec<f64>>();
    out.push(read(&walk));
    for _ in 0..n {
        walk.step()?;
        out.push(read(&walk));
    }
    Ok(out)
}

/// Below this the residual is absolute: spectral convolution leaves round-off of
/// order 1e-16 on sites whose exact mass is zero.
pub const RESIDUAL_FLOOR: f64 = 1e-13;

/// Checks the path decomposition at the first time the maximum is attained,
/// `P(S_n = x−y, T_x > n) = Σ_{z ≤ x∧y} Σ_{r ≤ n} g(r, x−z) g⁻(n−r, y−z)`,
/// for all `1 ≤ n ≤ nmax`, `x ≤ xmax`, `y ≤ ymax`.
///
/// Truncation is made consistent on both sides: every path is killed below
/// `x − far_depth`, which for the segment from the maximum `x − z` is a depth
/// of `far_depth − z`. No trimming is applied.
pub fn decomposition_grid(law: &StepLaw, nmax: usize, xmax: usize, ymax: usize, policy: WindowPolicy) -> Result<Vec<DecompositionRow>> {
    let policy = WindowPolicy { tail_tol: 0.0, ..policy };
    let w = policy.far_depth as i64;
    let bounded = law.support_min().is_some() && law.support_max().is_some();
    let refl = law.reflected();
    let zmax = xmax.min(ymax);

    let z_tables: Vec<Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> = {
        use rayon::prelude::*;
        let zs: Vec<usize> = if bounded { vec![0] } else { (0..=zmax).collect() };
        zs.par_iter()
            .map(|&z| {
                let depth = w - z as i64;
                let fg = refl.support_min().is_none().then_some(-depth);
                let fm = law.support_min().is_none().then_some(-depth);
                let g = low_history(&refl, -1, fg, nmax, xmax, policy)?;
                let gm = low_history(law, 0, fm, nmax, ymax, policy)?;
                Ok((g, gm))
            })
            .collect()
    };
    let mut tables = Vec::with_capacity(z_tables.len());
    for t in z_tables {
        tables.push(t?);
    }

    let lhs_tables: Vec<Result<Vec<Vec<f64>>>> = {
        use rayon::prelude::*;
        (0..=xmax)
            .into_par_iter()
            .map(|x| {
                let x = x as i64;
                let floor = law.support_min().is_none().then_some(x - w);
                let mut walk = KilledWalk::with_floor(law, x, floor, policy)?;
                let mut rows = Vec::with_capacity(nmax + 1);
                let read = |wk: &KilledWalk| (0..=ymax as i64).map(|y| wk.state().mass_at(x - y)).collect::<Vec<f64>>();
                rows.push(read(&walk));
                for _ in 0..nmax {
                    walk.step()?;
                    rows.push(read(&walk));
                }
                Ok(rows)
            })
            .collect()
    };
    let mut lhs = Vec::with_capacity(xmax + 1);
    for t in lhs_tables {
        lhs.push(t?);
    }

    let mut out = Vec::with_capacity(nmax * (xmax + 1) * (ymax + 1));
    for n in 1..=nmax {
        for x in 0..=xmax {
            for y in 0..=ymax {
                let mut rhs = 0.0;
                for z in 0..=x.min(y) {
                    let (g, gm) = &tables[if bounded { 0 } else { z }];
                    let (a, b) = (x - z, y - z);
                    for r in 0..=n {
                        rhs += g[r][a] * gm[n - r][b];
                    }
                }
                let l = lhs[x][n][y];
                let residual = if l.abs() < RESIDUAL_FLOOR { (l - rhs).abs() } else { (l - rhs).abs() / l.abs() };
                out.push(DecompositionRow { n, x, y, lhs: l, rhs, residual });
            }
        }
    }
    Ok(out)
}

/// Single-cell version of [`decomposition_grid`].
pub fn decomposition_check(law: &StepLaw, n: usize, x: usize, y: usize, policy: WindowPolicy) -> Result<f64> {
    let rows = decomposition_grid(law, n, x, y, policy)?;
    Ok(rows
        .iter()
        .find(|r| r.n == n && r.x == x && r.y == y)
        .map(|r| r.residual)
        .expect("grid contains the requested cell"))
}

/// A diagnostic sequence over the n-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    pub name: String,
    pub ngrid: Vec<usize>,
    pub values: Vec<f64>,
}

impl DiagnosticSeries {
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap_or(&f64::NAN)
    }

    /// `|s(N)/s(N/2) − 1|` with `N/2` the grid point closest to half the last `n`.
    pub fn top_octave_drift(&self) -> f64 {
        top_octave_drift(&self.ngrid, &self.values)
    }
}

pub(crate) fn top_octave_drift(ngrid: &[usize], values: &[f64]) -> f64 {
    let k = ngrid.len();
    if k < 2 {
        return f64::NAN;
    }
    let target = ngrid[k - 1] as f64 / 2.0;
    let j = (0..k - 1)
        .min_by(|&a, &b| {
            (ngrid[a] as f64 / target).ln().abs().total_cmp(&(ngrid[b] as f64 / target).ln().abs())
        })
        .expect("at least two points");
    (values[k - 1] / values[j] - 1.0).abs()
}

/// Sequences whose limits are the renewal constants:
/// `U(c_n)P(τ>n)`, `n P(τ>n) P(τ⁻>n)`, `U(c_n)V(c_n)/n`, `U(c_n)A(c_n)/c_n`.
pub fn constant_diagnostics(law: &StepLaw, tables: &LadderTables, renewal: &RenewalTables, ngrid: &[usize]) -> Result<Vec<DiagnosticSeries>> {
    let names = ["k4:U(c_n)P(tau>n)", "k5:nP(tau>n)P(tau->n)", "k6:U(c_n)V(c_n)/n", "erickson:U(c_n)A(c_n)/c_n"];
    let mut vals = vec![Vec::new(); 4];
    for &n in ngrid {
        if n > tables.horizon {
            return Err(Error::PreconditionViolated(format!("n = {n} beyond ladder horizon {}", tables.horizon)));
        }
        let c = law.norming(n)?;
        if c.ceil() as usize >= renewal.u.len() {
            return Err(Error::PreconditionViolated(format!(
                "c_n = {c:.1} beyond renewal table range {}",
                renewal.u.len() - 1
            )));
        }
        let (u, v) = (renewal.u_at(c), renewal.v_at(c));
        let (pt, pm) = (tables.tau_tail[n], tables.tauminus_tail[n]);
        vals[0].push(u * pt);
        vals[1].push(n as f64 * pt * pm);
        vals[2].push(u * v / n as f64);
        vals[3].push(u * renewal.a_at(c.round() as usize) / c);
    }
    Ok(names
        .iter()
        .zip(vals)
        .map(|(name, values)| DiagnosticSeries {
            name: name.to_string(),
            ngrid: ngrid.to_vec(),
            values,
        })
        .collect())
}

/// Constant in `g(n, x) ≤ C U(x)/(n c_n)` and `g⁻(n, x) ≤ C V(x)/(n c_n)` for `x ≤ C₁ c_n`.
pub const BOUND_C1: f64 = 2.0;

/// Fitted bound constant per `n` (rows at each `n` must be snapshots).
pub fn uniform_local_bound(law: &StepLaw, tables: &LadderTables, renewal: &RenewalTables, ngrid: &[usize]) -> Result<DiagnosticSeries> {
    let mut values = Vec::with_capacity(ngrid.len());
    for &n in ngrid {
        let c = law.norming(n)?;
        let xmax = (BOUND_C1 * c).floor() as usize;
        if xmax >= renewal.u.len() {
            return Err(Error::PreconditionViolated(format!("renewal tables must reach {xmax}")));
        }
        let scale = n as f64 * c;
        let mut best: f64 = 0.0;
        for x in 0..=xmax {
            let gm = tables
                .gminus(n, x)
                .ok_or_else(|| Error::PreconditionViolated(format!("row n = {n} not stored")))?;
            best = best.max(gm * scale / renewal.v[x]);
            if x >= 1 {
                let g = tables.g(n, x).expect("same storage as gminus");
                best = best.max(g * scale / renewal.u[x]);
            }
        }
        values.push(best);
    }
    Ok(DiagnosticSeries {
        name: "c2-fit".into(),
        ngrid: ngrid.to_vec(),
        values,
    })
}
