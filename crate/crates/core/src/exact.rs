//! Exact killed-convolution dynamic programming.
//!
//! The state at time `n` is the sub-probability vector
//! `P(S_n = j, T_b > n)` on a window `[lo, b]`, where `T_b` is the first time the
//! walk exceeds the barrier `b`. One step convolves with the step law, kills
//! everything above `b`, and books the killed mass as the passage probability
//! `P(T_b = n + 1) = Σ_y P(S_n = b − y, T_b > n) F̄(y)` using the exact tail.
//! Mass that would fall below the window is added to `defect`; it is never
//! renormalized away.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::conv::{linear, Kernel};
use crate::numeric::CompensatedSum;
use crate::steps::StepLaw;

/// Window management for the convolution engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPolicy {
    /// Leading sites whose cumulative mass stays below this are dropped into the defect.
    pub tail_tol: f64,
    /// Maximum number of lattice sites in any window.
    pub mem_cap: usize,
    /// Depth kept on a side where the step law is unbounded.
    pub far_depth: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            tail_tol: 1e-20,
            mem_cap: 1 << 24,
            far_depth: 1 << 16,
        }
    }
}

impl WindowPolicy {
    pub fn with_far_depth(mut self, depth: usize) -> Self {
        self.far_depth = depth;
        self
    }

    pub fn with_mem_cap(mut self, cap: usize) -> Self {
        self.mem_cap = cap;
        self
    }
}

/// `masses[k] = P(S_n = lo + k, T_b > n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KilledLawVector {
    pub n: usize,
    pub barrier: i64,
    pub lo: i64,
    pub masses: Vec<f64>,
    /// Mass lost below the window so far.
    pub defect: f64,
    /// `P(T_b ≤ n)`.
    pub passed: f64,
}

impl KilledLawVector {
    fn start(barrier: i64) -> Self {
        Self {
            n: 0,
            barrier,
            lo: 0,
            masses: vec![1.0],
            defect: 0.0,
            passed: 0.0,
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.masses.len() as i64 - 1
    }

    /// `P(S_n = j, T_b > n)`, zero off the window.
    pub fn mass_at(&self, j: i64) -> f64 {
        if j < self.lo || j > self.hi() {
            0.0
        } else {
            self.masses[(j - self.lo) as usize]
        }
    }

    /// `Σ_j masses`, i.e. `P(T_b > n)` up to the defect.
    pub fn total(&self) -> f64 {
        crate::numeric::ksum(&self.masses)
    }

    /// `|Σ masses + passed + defect − 1|`.
    pub fn conservation_error(&self) -> f64 {
        (self.total() + self.passed + self.defect - 1.0).abs()
    }

    /// CSV with columns `n, j, mass, defect`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "j", "mass", "defect"])?;
        for (k, m) in self.masses.iter().enumerate() {
            w.write_record(&[
                self.n.to_string(),
                (self.lo + k as i64).to_string(),
                format!("{m:e}"),
                format!("{:e}", self.defect),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tail values `P(X > d)` (upper) or `P(X < −d)` (lower) for `d ≥ 0`, grown on demand.
#[derive(Debug, Clone)]
struct TailCache {
    upper: bool,
    table: Vec<f64>,
    bounded_at: Option<usize>,
}

impl TailCache {
    fn new(law: &StepLaw, upper: bool) -> Self {
        let bound = if upper { law.support_max() } else { law.support_min().map(|m| -m) };
        // the tail vanishes from d = bound onwards
        let bounded_at = bound.map(|b| b.max(0) as usize);
        let initial = bounded_at.unwrap_or(1024).max(1);
        let table = if upper {
            law.upper_tail_table(initial)
        } else {
            law.lower_tail_table(initial)
        };
        Self {
            upper,
            table,
            bounded_at,
        }
    }

    fn ensure(&mut self, law: &StepLaw, dmax: usize) {
        if let Some(b) = self.bounded_at {
            if dmax >= b {
                return;
            }
        }
        if dmax < self.table.len() {
            return;
        }
        let size = (dmax + 1).next_power_of_two();
        self.table = if self.upper {
            law.upper_tail_table(size)
        } else {
            law.lower_tail_table(size)
        };
    }

    #[inline]
    fn get(&self, d: usize) -> f64 {
        if let Some(b) = self.bounded_at {
            if d >= b {
                return 0.0;
            }
        }
        self.table[d]
    }
}

/// Incremental killed convolution for one step law and one barrier.
#[derive(Debug)]
pub struct KilledWalk<'a> {
    law: &'a StepLaw,
    policy: WindowPolicy,
    state: KilledLawVector,
    floor: Option<i64>,
    kernel: Option<Kernel>,
    up: TailCache,
    down: TailCache,
}

impl<'a> KilledWalk<'a> {
    /// Killed walk started at 0 with barrier `b`; unbounded-below laws keep
    /// `[b − far_depth, b]`.
    pub fn new(law: &'a StepLaw, barrier: i64, policy: WindowPolicy) -> Result<Self> {
        let floor = law.support_min().is_none().then(|| barrier - policy.far_depth as i64);
        Self::with_floor(law, barrier, floor, policy)
    }

    /// As [`KilledWalk::new`] with an explicit lowest kept site for unbounded-below laws.
    pub fn with_floor(law: &'a StepLaw, barrier: i64, floor: Option<i64>, policy: WindowPolicy) -> Result<Self> {
        if let Some(f) = floor {
            let needed = (barrier - f + 1).max(1) as usize;
            if needed > policy.mem_cap {
                return Err(Error::WindowOverflow {
                    needed,
                    cap: policy.mem_cap,
                });
            }
            if f > barrier.min(0) {
                return Err(Error::PreconditionViolated(format!(
                    "floor {f} must not exceed min(barrier, 0) = {}",
                    barrier.min(0)
                )));
            }
        }
        let floor = if law.support_min().is_none() { floor } else { None };
        Ok(Self {
            law,
            policy,
            state: KilledLawVector::start(barrier),
            floor,
            kernel: None,
            up: TailCache::new(law, true),
            down: TailCache::new(law, false),
        })
    }

    pub fn state(&self) -> &KilledLawVector {
        &self.state
    }

    pub fn into_state(self) -> KilledLawVector {
        self.state
    }

    pub fn law(&self) -> &StepLaw {
        self.law
    }

    /// Advance one step; returns `P(T_b = n + 1)`.
    pub fn step(&mut self) -> Result<f64> {
        let b = self.state.barrier;
        let lo = self.state.lo;
        let hi = self.state.hi();

        // passage mass: Σ_i m_i P(X > b − i)
        let mut fp = CompensatedSum::new();
        let dmax = (b - lo).max(0) as usize;
        self.up.ensure(self.law, dmax);
        for (k, &m) in self.state.masses.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let d = b - (lo + k as i64);
            let t = if d < 0 { self.law.tail(d) } else { self.up.get(d as usize) };
            fp.add(m * t);
        }
        let fp = fp.value();

        let new_lo = match (self.law.support_min(), self.floor) {
            (Some(smin), _) => (lo + smin).min(b),
            (None, Some(f)) => f,
            (None, None) => unreachable!("unbounded-below laws always carry a floor"),
        };
        let needed = (b - new_lo + 1) as usize;
        if needed > self.policy.mem_cap {
            return Err(Error::WindowOverflow {
                needed,
                cap: self.policy.mem_cap,
            });
        }

        // mass landing below the window: Σ_i m_i P(X < new_lo − i)
        let mut below = CompensatedSum::new();
        if self.law.support_min().is_none() {
            self.down.ensure(self.law, (hi - new_lo).max(0) as usize);
            for (k, &m) in self.state.masses.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let d = (lo + k as i64 - new_lo) as usize;
                below.add(m * self.down.get(d));
            }
        }

        // kernel must cover lags [new_lo − hi, b − lo]
        let lag_lo = new_lo - hi;
        let lag_hi = b - lo;
        let klo = self.law.support_min().map_or(lag_lo, |s| s.max(lag_lo));
        let khi = self.law.support_max().map_or(lag_hi, |s| s.min(lag_hi));
        let rebuild = match &self.kernel {
            None => true,
            Some(k) => k.lo() > klo || k.hi() < khi,
        };
        if rebuild {
            // headroom so growing windows do not rebuild every step
            let grow = |span: i64| span + span / 2 + 16;
            let (blo, bhi) = (
                self.law.support_min().map_or(klo - grow(0).min(0), |s| s.max(-grow(-klo.min(0)))),
                self.law.support_max().map_or(khi, |s| s.min(grow(khi.max(0)))),
            );
            let blo = blo.min(klo);
            let bhi = bhi.max(khi);
            self.kernel = Some(Kernel::new(blo, self.law.pmf_vec(blo, bhi)));
        }
        let kernel = self.kernel.as_mut().expect("kernel built above");
        let masses = kernel.apply(&self.state.masses, lo, new_lo, b);

        self.state.n += 1;
        self.state.lo = new_lo;
        self.state.masses = masses;
        self.state.passed += fp;
        self.state.defect += below.value();
        self.trim();
        Ok(fp)
    }

    fn trim(&mut self) {
        let tol = self.policy.tail_tol;
        let mut cum = 0.0;
        let mut cut = 0;
        for &m in &self.state.masses {
            if cum + m > tol {
                break;
            }
            cum += m;
            cut += 1;
        }
        // keep at least the barrier site
        let cut = cut.min(self.state.masses.len() - 1);
        if cut > 0 {
            self.state.masses.drain(..cut);
            self.state.lo += cut as i64;
            self.state.defect += cum;
        }
    }

    /// Advance to time `n` and return the passage increments produced on the way.
    pub fn run_to(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n.saturating_sub(self.state.n));
        while self.state.n < n {
            out.push(self.step()?);
        }
        Ok(out)
    }
}

/// `fp[n] = P(T_x = n)` and `surv[n] = P(T_x > n)` for `n ≤ horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageTable {
    pub barrier: i64,
    pub horizon: usize,
    /// `fp[0] = 0`.
    pub fp: Vec<f64>,
    /// `surv[0] = 1`.
    pub surv: Vec<f64>,
    /// Cumulative truncation defect after each step; an error bar on `surv`.
    pub defect: Vec<f64>,
}

impl FirstPassageTable {
    /// CSV with columns `n, fp, surv`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "fp", "surv"])?;
        for n in 1..=self.horizon {
            w.write_record(&[n.to_string(), format!("{:e}", self.fp[n]), format!("{:e}", self.surv[n])])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exact first-passage table over `x ≥ 0` up to `horizon`.
pub fn first_passage_table(law: &StepLaw, x: i64, horizon: usize, policy: WindowPolicy) -> Result<FirstPassageTable> {
    if x < 0 {
        return Err(Error::PreconditionViolated(format!("barrier must be >= 0, got {x}")));
    }
    let mut walk = KilledWalk::new(law, x, policy)?;
    let mut fp = vec![0.0; horizon + 1];
    let mut surv = vec![1.0; horizon + 1];
    let mut defect = vec![0.0; horizon + 1];
    for n in 1..=horizon {
        fp[n] = walk.step()?;
        surv[n] = surv[n - 1] - fp[n];
        defect[n] = walk.state().defect;
    }
    Ok(FirstPassageTable {
        barrier: x,
        horizon,
        fp,
        surv,
        defect,
    })
}

/// `P(S_n = j, T_x > n)` for all `j` in the window.
pub fn killed_snapshot(law: &StepLaw, x: i64, n: usize, policy: WindowPolicy) -> Result<KilledLawVector> {
    let mut walk = KilledWalk::new(law, x, policy)?;
    walk.run_to(n)?;
    Ok(walk.into_state())
}

/// Law of `S_n` on a finite window with side-resolved truncation defects.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLaw {
    pub n: usize,
    pub lo: i64,
    pub masses: Vec<f64>,
    /// Mass attributed to positions below the window.
    pub defect_lower: f64,
    /// Mass attributed to positions above the window.
    pub defect_upper: f64,
}

impl LatticeLaw {
    pub fn hi(&self) -> i64 {
        self.lo + self.masses.len() as i64 - 1
    }

    pub fn mass_at(&self, j: i64) -> f64 {
        if j < self.lo || j > self.hi() {
            0.0
        } else {
            self.masses[(j - self.lo) as usize]
        }
    }

    pub fn defect(&self) -> f64 {
        self.defect_lower + self.defect_upper
    }

    /// `Σ_{j > x}` over the window: a lower bound for `P(S_n > x)`.
    pub fn window_mass_above(&self, x: i64) -> f64 {
        let start = (x + 1 - self.lo).max(0) as usize;
        if start >= self.masses.len() {
            return 0.0;
        }
        crate::numeric::ksum(&self.masses[start..])
    }

    /// `P(S_n > x)` with the upper truncation mass counted as exceeding `x`;
    /// the error is at most [`LatticeLaw::defect`].
    pub fn prob_above(&self, x: i64) -> f64 {
        if x >= self.hi() {
            return self.defect_upper;
        }
        self.window_mass_above(x) + self.defect_upper
    }

    /// `ρ_n = P(S_n > 0)` (window part) and its error bar.
    pub fn rho_n(&self) -> (f64, f64) {
        (self.window_mass_above(0), self.defect())
    }

    fn truncate(mut self, tol: f64, lo_floor: Option<i64>, hi_ceil: Option<i64>) -> Self {
        if let Some(f) = lo_floor {
            if self.lo < f {
                let cut = ((f - self.lo) as usize).min(self.masses.len());
                let lost = crate::numeric::ksum(&self.masses[..cut]);
                self.masses.drain(..cut);
                self.lo = f;
                self.defect_lower += lost;
            }
        }
        if let Some(c) = hi_ceil {
            if self.hi() > c {
                let keep = ((c - self.lo + 1).max(0) as usize).min(self.masses.len());
                let lost = crate::numeric::ksum(&self.masses[keep..]);
                self.masses.truncate(keep);
                self.defect_upper += lost;
            }
        }
        let mut cum = 0.0;
        let mut cut = 0;
        for &m in &self.masses {
            if cum + m > tol * 0.5 {
                break;
            }
            cum += m;
            cut += 1;
        }
        let cut = cut.min(self.masses.len().saturating_sub(1));
        if cut > 0 {
            self.masses.drain(..cut);
            self.lo += cut as i64;
            self.defect_lower += cum;
        }
        let mut cum = 0.0;
        let mut cut = 0;
        for &m in self.masses.iter().rev() {
            if cum + m > tol * 0.5 {
                break;
            }
            cum += m;
            cut += 1;
        }
        let cut = cut.min(self.masses.len().saturating_sub(1));
        if cut > 0 {
            let keep = self.masses.len() - cut;
            self.masses.truncate(keep);
            self.defect_upper += cum;
        }
        self
    }

    fn convolve(&self, other: &Self, tol: f64, lo_floor: Option<i64>, hi_ceil: Option<i64>) -> Self {
        let masses = linear(&self.masses, &other.masses);
        let ma = crate::numeric::ksum(&self.masses);
        let mb = crate::numeric::ksum(&other.masses);
        let (la, ua) = (self.defect_lower, self.defect_upper);
        let (lb, ub) = (other.defect_lower, other.defect_upper);
        let out = Self {
            n: self.n + other.n,
            lo: self.lo + other.lo,
            masses,
            defect_lower: la * mb + lb * ma + la * lb + 0.5 * (ua * lb + la * ub),
            defect_upper: ua * mb + ub * ma + ua * ub + 0.5 * (ua * lb + la * ub),
        };
        out.truncate(tol, lo_floor, hi_ceil)
    }
}

/// Law of `S_n` by binary powering of the step law; unbounded sides are cut at
/// `±far_depth`.
pub fn unkilled_law(law: &StepLaw, n: usize, policy: WindowPolicy) -> Result<LatticeLaw> {
    if n == 0 {
        return Err(Error::PreconditionViolated("unkilled_law needs n >= 1".into()));
    }
    let w = policy.far_depth as i64;
    let floor = law.support_min().is_none().then_some(-w);
    let ceil = law.support_max().is_none().then_some(w);
    let lo = law.support_min().unwrap_or(-w);
    let hi = law.support_max().unwrap_or(w);
    let width = (hi - lo + 1) as usize;
    if width > policy.mem_cap {
        return Err(Error::WindowOverflow {
            needed: width,
            cap: policy.mem_cap,
        });
    }
    let base = LatticeLaw {
        n: 1,
        lo,
        masses: law.pmf_vec(lo, hi),
        defect_lower: if law.support_min().is_none() { law.left_tail(w) } else { 0.0 },
        defect_upper: if law.support_max().is_none() { law.tail(w) } else { 0.0 },
    };
    let mut result: Option<LatticeLaw> = None;
    let mut power = base;
    let mut k = n;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => power.clone(),
                Some(r) => r.convolve(&power, policy.tail_tol, floor, ceil),
            });
            if let Some(r) = &result {
                if r.masses.len() > policy.mem_cap {
                    return Err(Error::WindowOverflow {
                        needed: r.masses.len(),
                        cap: policy.mem_cap,
                    });
                }
            }
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        power = power.convolve(&power, policy.tail_tol, floor, ceil);
    }
    Ok(result.expect("n >= 1 sets at least one bit"))
}

/// Writes `P(S_n = j)` as CSV `n, j, mass, defect`.
pub fn write_lattice_csv(law: &LatticeLaw, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "n,j,mass,defect")?;
    for (k, m) in law.masses.iter().enumerate() {
        writeln!(f, "{},{},{:e},{:e}", law.n, law.lo + k as i64, m, law.defect())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple() -> StepLaw {
        StepLaw::simple()
    }

    #[test]
    fn simple_walk_first_steps() {
        let law = simple();
        let mut w = KilledWalk::new(&law, 0, WindowPolicy::default()).unwrap();
        assert_eq!(w.step().unwrap(), 0.5);
        let t = first_passage_table(&law, 0, 5, WindowPolicy::default()).unwrap();
        let want = [0.0, 0.5, 0.0, 0.125, 0.0, 0.0625];
        for n in 1..=5 {
            assert!((t.fp[n] - want[n]).abs() < 1e-15, "n={n}");
        }
        let t1 = first_passage_table(&law, 1, 2, WindowPolicy::default()).unwrap();
        assert!((t1.fp[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn snapshots_small_cases() {
        let law = simple();
        let s = killed_snapshot(&law, 2, 2, WindowPolicy::default()).unwrap();
        assert!((s.mass_at(2) - 0.25).abs() < 1e-15);
        let s = killed_snapshot(&law, 0, 2, WindowPolicy::default()).unwrap();
        assert!((s.mass_at(0) - 0.25).abs() < 1e-15);
        assert!((s.total() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lazy_first_step() {
        let law = StepLaw::bounded_lazy(0.45).unwrap();
        let t = first_passage_table(&law, 0, 3, WindowPolicy::default()).unwrap();
        assert_eq!(t.fp[1], 0.45);
    }

    #[test]
    fn conservation_heavy_tails() {
        let law = StepLaw::pareto_symmetric(0.8, 0.2).unwrap();
        let policy = WindowPolicy::default().with_far_depth(1 << 12);
        let mut w = KilledWalk::new(&law, 5, policy).unwrap();
        for _ in 0..50 {
            w.step().unwrap();
            assert!(w.state().conservation_error() < 1e-12, "{}", w.state().conservation_error());
            assert!(w.state().masses.iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn window_overflow_is_reported() {
        let law = StepLaw::bounded_lazy(0.45).unwrap();
        let policy = WindowPolicy {
            tail_tol: 0.0,
            mem_cap: 10,
            far_depth: 4,
        };
        let mut w = KilledWalk::new(&law, 0, policy).unwrap();
        let err = w.run_to(20).unwrap_err();
        assert!(matches!(err, Error::WindowOverflow { .. }));
    }

    #[test]
    fn unkilled_small_cases() {
        let law = simple();
        let s2 = unkilled_law(&law, 2, WindowPolicy::default()).unwrap();
        assert!((s2.mass_at(0) - 0.5).abs() < 1e-15);
        let lazy = StepLaw::bounded_lazy(0.45).unwrap();
        let s1 = unkilled_law(&lazy, 1, WindowPolicy::default()).unwrap();
        assert!((s1.rho_n().0 - 0.45).abs() < 1e-15);
    }

    #[test]
    fn unkilled_symmetric_pareto() {
        let law = StepLaw::pareto_symmetric(0.8, 0.2).unwrap();
        let policy = WindowPolicy::default().with_far_depth(1 << 14);
        for n in [1usize, 2, 3, 17, 64, 200] {
            let s = unkilled_law(&law, n, policy).unwrap();
            let (rho, err) = s.rho_n();
            let p0 = s.mass_at(0);
            // symmetric window: Σ_{j>0} = (kept − P(S_n=0))/2
            assert!((rho - (1.0 - p0) / 2.0).abs() <= err / 2.0 + 1e-13, "n={n}");
        }
    }
}
