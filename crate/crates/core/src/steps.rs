//! Aperiodic integer-lattice step laws in stable domains of attraction.
//!
//! A law is a finite core table plus optional power-law tails on either side,
//! `P(X = k) = coef · |k|^{−s}` beyond the core. Tail sums are evaluated in
//! closed form through the Hurwitz zeta function, so `P(X > x)` is exact to
//! rounding for every `x`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::zeta::{hurwitz, riemann};
use crate::numeric::CompensatedSum;

/// Parametric family a law was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `P(±1) = p`, `P(0) = 1 − 2p`; `p = 1/2` is the simple walk.
    BoundedLazy,
    /// Arbitrary centred table on a finite window.
    Finite,
    /// Atom at 0 plus power tails `w± |k|^{−α−1}`.
    ParetoLattice,
    /// Heavy left tail `|k|^{−α−1}`, a single upward step `+1`, centred.
    SpectrallyNegative,
}

/// How the norming sequence `c_n` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormingMode {
    /// `c_n = sqrt(σ² n)`.
    Variance,
    /// `n P(X > c_n) = 1`.
    RightTail,
    /// `n P(X < −c_n) = 1`.
    LeftTail,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PowerTail {
    coef: f64,
    s: f64,
}

impl PowerTail {
    fn mass(&self, k_abs: i64) -> f64 {
        self.coef * (k_abs as f64).powf(-self.s)
    }

    /// Σ_{k ≥ start} coef · k^{−s}, start ≥ 1.
    fn sum_from(&self, start: i64) -> f64 {
        self.coef * hurwitz(self.s, start as f64)
    }
}

/// An integer-valued step distribution with tail and norming metadata.
#[derive(Debug, Clone)]
pub struct StepLaw {
    family: Family,
    label: String,
    core_lo: i64,
    core: Vec<f64>,
    right: Option<PowerTail>,
    left: Option<PowerTail>,
    alpha: f64,
    rho: f64,
    mean: Option<f64>,
    sigma2: Option<f64>,
    norming_mode: NormingMode,
    levy_plus: f64,
    levy_minus: f64,
}

impl StepLaw {
    /// `P(X = ±1) = p`, `P(X = 0) = 1 − 2p`.
    pub fn bounded_lazy(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return Err(Error::InvalidLaw(format!("lazy walk needs p in (0, 1/2], got {p}")));
        }
        let mut law = Self::finite(-1, vec![p, 1.0 - 2.0 * p, p])?;
        law.family = Family::BoundedLazy;
        law.label = if p == 0.5 {
            "simple".to_string()
        } else {
            format!("lazy(p={p})")
        };
        Ok(law)
    }

    /// The simple ±1 walk. It has span 2, so it is periodic.
    pub fn simple() -> Self {
        Self::bounded_lazy(0.5).expect("p = 1/2 is valid")
    }

    /// A centred law with `P(X = lo + i) = masses[i]`.
    pub fn finite(lo: i64, masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidLaw("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidLaw(format!("masses sum to {total}, not 1")));
        }
        let mean: f64 = masses.iter().enumerate().map(|(i, m)| (lo + i as i64) as f64 * m).sum();
        if mean.abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("finite laws must be centred, mean = {mean}")));
        }
        let sigma2: f64 = masses
            .iter()
            .enumerate()
            .map(|(i, m)| ((lo + i as i64) as f64).powi(2) * m)
            .sum();
        if sigma2 <= 0.0 {
            return Err(Error::InvalidLaw("degenerate law".into()));
        }
        let label = format!(
            "finite(lo={lo},masses={})",
            masses.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("/")
        );
        Ok(Self {
            family: Family::Finite,
            label,
            core_lo: lo,
            core: masses,
            right: None,
            left: None,
            alpha: 2.0,
            rho: 0.5,
            mean: Some(0.0),
            sigma2: Some(sigma2),
            norming_mode: NormingMode::Variance,
            levy_plus: 0.0,
            levy_minus: 0.0,
        })
    }

    /// Atom `atom0` at 0 and tails proportional to `w± |k|^{−α−1}` for `|k| ≥ 1`.
    pub fn pareto(alpha: f64, atom0: f64, w_plus: f64, w_minus: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidLaw(format!("pareto alpha must lie in (0, 2), got {alpha}")));
        }
        if !(0.0..1.0).contains(&atom0) {
            return Err(Error::InvalidLaw(format!("atom0 must lie in [0, 1), got {atom0}")));
        }
        if !(w_plus > 0.0 && w_minus >= 0.0) {
            return Err(Error::InvalidLaw("pareto needs w+ > 0 and w- >= 0".into()));
        }
        if alpha >= 1.0 && w_plus != w_minus {
            return Err(Error::InvalidLaw(
                "alpha >= 1 requires equal tail weights (no centring available)".into(),
            ));
        }
        let s = alpha + 1.0;
        let z = riemann(s);
        let scale = (1.0 - atom0) / (w_plus + w_minus) / z;
        let beta = (w_plus - w_minus) / (w_plus + w_minus);
        let rho = if alpha == 1.0 {
            0.5
        } else {
            0.5 + (beta * (std::f64::consts::FRAC_PI_2 * alpha).tan()).atan() / (std::f64::consts::PI * alpha)
        };
        let symmetric = w_plus == w_minus;
        let left = (w_minus > 0.0).then_some(PowerTail {
            coef: scale * w_minus,
            s,
        });
        Ok(Self {
            family: Family::ParetoLattice,
            label: if symmetric {
                format!("pareto(alpha={alpha},atom0={atom0})")
            } else {
                format!("pareto(alpha={alpha},atom0={atom0},wplus={w_plus},wminus={w_minus})")
            },
            core_lo: 0,
            core: vec![atom0],
            right: Some(PowerTail {
                coef: scale * w_plus,
                s,
            }),
            left,
            alpha,
            rho,
            mean: (alpha > 1.0).then_some(0.0),
            sigma2: None,
            norming_mode: NormingMode::RightTail,
            levy_plus: 1.0,
            levy_minus: w_minus / w_plus,
        })
    }

    /// Symmetric Pareto-lattice law with equal tail weights.
    pub fn pareto_symmetric(alpha: f64, atom0: f64) -> Result<Self> {
        Self::pareto(alpha, atom0, 1.0, 1.0)
    }

    /// Centred law with `P(X = −k) ∝ k^{−α−1}` (k ≥ 1), a single upward step
    /// `+1`, and an optional atom at 0. The limit has no positive jumps.
    pub fn spectrally_negative(alpha: f64, atom0: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidLaw(format!(
                "spectrally negative family needs alpha in (1, 2), got {alpha}"
            )));
        }
        if !(0.0..1.0).contains(&atom0) {
            return Err(Error::InvalidLaw(format!("atom0 must lie in [0, 1), got {atom0}")));
        }
        let s = alpha + 1.0;
        let za = riemann(alpha);
        let c = (1.0 - atom0) / (za + riemann(s));
        Ok(Self {
            family: Family::SpectrallyNegative,
            label: format!("specneg(alpha={alpha},atom0={atom0})"),
            core_lo: 0,
            core: vec![atom0, c * za],
            right: None,
            left: Some(PowerTail { coef: c, s }),
            alpha,
            rho: 1.0 / alpha,
            mean: Some(0.0),
            sigma2: None,
            norming_mode: NormingMode::LeftTail,
            levy_plus: 0.0,
            levy_minus: 1.0,
        })
    }

    /// The law of `−X`.
    pub fn reflected(&self) -> Self {
        let mut core = self.core.clone();
        core.reverse();
        Self {
            family: self.family,
            label: format!("-{}", self.label),
            core_lo: -self.core_hi(),
            core,
            right: self.left,
            left: self.right,
            alpha: self.alpha,
            rho: 1.0 - self.rho,
            mean: self.mean.map(|m| -m),
            sigma2: self.sigma2,
            norming_mode: match self.norming_mode {
                NormingMode::Variance => NormingMode::Variance,
                NormingMode::RightTail => NormingMode::LeftTail,
                NormingMode::LeftTail => NormingMode::RightTail,
            },
            levy_plus: self.levy_minus,
            levy_minus: self.levy_plus,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Positivity parameter `P(Y₁ > 0)` of the stable limit.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eta(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn mean(&self) -> Option<f64> {
        self.mean
    }

    pub fn sigma2(&self) -> Option<f64> {
        self.sigma2
    }

    pub fn norming_mode(&self) -> NormingMode {
        self.norming_mode
    }

    /// Tail constants `(c₊, c₋)` of the limiting Lévy measure under this law's
    /// own norming: `Π(x, ∞) = c₊ x^{−α}`, `Π(−∞, −x) = c₋ x^{−α}`.
    pub fn levy_weights(&self) -> (f64, f64) {
        (self.levy_plus, self.levy_minus)
    }

    /// `true` when the limit is spectrally negative (`αρ = 1`, `α > 1`).
    pub fn is_spectrally_negative(&self) -> bool {
        self.alpha < 2.0 && self.levy_plus == 0.0
    }

    /// Whether `P(X ∈ [x, x+Δ))` is regularly varying in `x` (power right tail).
    pub fn has_regular_local_tail(&self) -> bool {
        self.right.is_some()
    }

    fn core_hi(&self) -> i64 {
        self.core_lo + self.core.len() as i64 - 1
    }

    /// Lowest support point, `None` when unbounded below.
    pub fn support_min(&self) -> Option<i64> {
        if self.left.is_some() {
            return None;
        }
        self.core.iter().position(|&m| m > 0.0).map(|i| self.core_lo + i as i64)
    }

    /// Highest support point, `None` when unbounded above.
    pub fn support_max(&self) -> Option<i64> {
        if self.right.is_some() {
            return None;
        }
        self.core.iter().rposition(|&m| m > 0.0).map(|i| self.core_lo + i as i64)
    }

    /// `P(X = k)`.
    pub fn pmf(&self, k: i64) -> f64 {
        let hi = self.core_hi();
        if k >= self.core_lo && k <= hi {
            self.core[(k - self.core_lo) as usize]
        } else if k > hi {
            self.right.map_or(0.0, |t| t.mass(k))
        } else {
            self.left.map_or(0.0, |t| t.mass(-k))
        }
    }

    /// `P(X ≥ k0)`.
    pub fn upper_from(&self, k0: i64) -> f64 {
        let hi = self.core_hi();
        let right_total = |start: i64| self.right.map_or(0.0, |t| t.sum_from(start));
        if k0 > hi {
            right_total(k0)
        } else if k0 >= self.core_lo {
            let mut acc = CompensatedSum::new();
            for k in k0..=hi {
                acc.add(self.core[(k - self.core_lo) as usize]);
            }
            acc.add(right_total(hi + 1));
            acc.value()
        } else {
            // ≥ k0 with k0 inside the left tail: complement
            1.0 - self.lower_to(k0 - 1)
        }
    }

    /// `P(X ≤ k0)`.
    pub fn lower_to(&self, k0: i64) -> f64 {
        let left_total = |start_abs: i64| self.left.map_or(0.0, |t| t.sum_from(start_abs));
        if k0 < self.core_lo {
            left_total(-k0)
        } else if k0 <= self.core_hi() {
            let mut acc = CompensatedSum::new();
            for k in self.core_lo..=k0 {
                acc.add(self.core[(k - self.core_lo) as usize]);
            }
            acc.add(left_total(-(self.core_lo - 1)));
            acc.value()
        } else {
            1.0 - self.upper_from(k0 + 1)
        }
    }

    /// `F̄(x) = P(X > x)`.
    pub fn tail(&self, x: i64) -> f64 {
        self.upper_from(x + 1)
    }

    /// `P(X < −d)`.
    pub fn left_tail(&self, d: i64) -> f64 {
        self.lower_to(-d - 1)
    }

    /// `f_x^Δ = P(X ∈ [x, x + Δ))`.
    pub fn local_mass(&self, x: i64, delta: i64) -> f64 {
        debug_assert!(delta >= 1);
        if delta <= 64 {
            let mut acc = CompensatedSum::new();
            for k in x..x + delta {
                acc.add(self.pmf(k));
            }
            acc.value()
        } else {
            (self.upper_from(x) - self.upper_from(x + delta)).max(0.0)
        }
    }

    /// Masses on `lo..=hi`.
    pub fn pmf_vec(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|k| self.pmf(k)).collect()
    }

    /// `[P(X > d) for d in 0..=dmax]`, built by compensated backward accumulation.
    pub fn upper_tail_table(&self, dmax: usize) -> Vec<f64> {
        let mut out = vec![0.0; dmax + 1];
        let mut acc = CompensatedSum::new();
        acc.add(self.tail(dmax as i64));
        out[dmax] = acc.value();
        for d in (0..dmax).rev() {
            acc.add(self.pmf(d as i64 + 1));
            out[d] = acc.value();
        }
        out
    }

    /// `[P(X < −d) for d in 0..=dmax]`.
    pub fn lower_tail_table(&self, dmax: usize) -> Vec<f64> {
        let mut out = vec![0.0; dmax + 1];
        let mut acc = CompensatedSum::new();
        acc.add(self.left_tail(dmax as i64));
        out[dmax] = acc.value();
        for d in (0..dmax).rev() {
            acc.add(self.pmf(-(d as i64) - 1));
            out[d] = acc.value();
        }
        out
    }

    /// `|1 − total mass|` with the tails summed analytically.
    pub fn mass_defect(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for &m in &self.core {
            acc.add(m);
        }
        if let Some(t) = self.right {
            acc.add(t.sum_from(self.core_hi() + 1));
        }
        if let Some(t) = self.left {
            acc.add(t.sum_from(1 - self.core_lo));
        }
        (1.0 - acc.value()).abs()
    }

    /// Aperiodicity: the gcd of differences between support points is 1.
    pub fn is_aperiodic(&self) -> bool {
        if self.left.is_some() || self.right.is_some() {
            // tails contain consecutive integers
            return true;
        }
        let pts: Vec<i64> = self
            .core
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, _)| self.core_lo + i as i64)
            .collect();
        let g = pts.windows(2).fold(0i64, |g, w| gcd(g, w[1] - w[0]));
        g == 1
    }

    /// Norming constant `c_n`.
    pub fn norming(&self, n: usize) -> Result<f64> {
        self.norming_at(n as f64)
    }

    /// Continuous interpolation `c(t)`, strictly increasing in `t ≥ 1`.
    ///
    /// In tail mode `t·T(c) = 1` is solved by bisection, where `T` is the
    /// log-linear interpolation of the integer tail. Below the first `t` for
    /// which a root `c ≥ 1` exists the curve is continued as `c(t) = (t/t₀)^{1/α}`.
    pub fn norming_at(&self, t: f64) -> Result<f64> {
        if self.norming_mode == NormingMode::Variance {
            let s2 = self.sigma2.expect("variance norming requires finite variance");
            return Ok((s2 * t).sqrt());
        }
        let t1 = self.interp_tail(1.0);
        if !(t1 > 0.0) {
            return Err(Error::NonConvergence {
                n: t,
                reason: "tail vanishes at 1".into(),
            });
        }
        let t0 = 1.0 / t1;
        if t <= t0 {
            return Ok((t / t0).powf(1.0 / self.alpha));
        }
        let mut lo = 1.0;
        let mut hi = 2.0;
        loop {
            let v = self.interp_tail(hi);
            if !(v > 0.0) {
                return Err(Error::NonConvergence {
                    n: t,
                    reason: format!("tail vanishes at {hi} before bracketing"),
                });
            }
            if t * v < 1.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e18 {
                return Err(Error::NonConvergence {
                    n: t,
                    reason: "no bracket below 1e18".into(),
                });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if t * self.interp_tail(mid) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Log-linear interpolation of the norming-direction tail at real `c ≥ 0`.
    pub fn interp_tail(&self, c: f64) -> f64 {
        let k = c.floor();
        let theta = c - k;
        let k = k as i64;
        let f = |x: i64| match self.norming_mode {
            NormingMode::LeftTail => self.left_tail(x),
            _ => self.tail(x),
        };
        let a = f(k);
        if theta == 0.0 {
            return a;
        }
        let b = f(k + 1);
        if a <= 0.0 || b <= 0.0 {
            return a * (1.0 - theta) + b * theta;
        }
        ((1.0 - theta) * a.ln() + theta * b.ln()).exp()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A textual law description: a family name plus `key=value` parameters.
///
/// Accepted forms: `simple`, `lazy:p=0.45`, `pareto:alpha=0.8,atom0=0.2`,
/// `pareto:alpha=0.6,wplus=2,wminus=1`, `specneg:alpha=1.5`,
/// `finite:lo=-2,masses=0.1/0.2/0.4/0.2/0.1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawSpec {
    pub family: String,
    pub params: BTreeMap<String, String>,
}

impl FromStr for LawSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = match s.split_once(':') {
            Some((f, r)) => (f.trim(), r.trim()),
            None => (s, ""),
        };
        if family.is_empty() {
            return Err(Error::config("law", "empty family name"));
        }
        let mut params = BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config("law", format!("parameter `{kv}` is not key=value")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self {
            family: family.to_string(),
            params,
        })
    }
}

impl fmt::Display for LawSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        let mut sep = ':';
        for (k, v) in &self.params {
            write!(f, "{sep}{k}={v}")?;
            sep = ',';
        }
        Ok(())
    }
}

impl LawSpec {
    fn num(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.params.get(key) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| Error::config("law", format!("`{key}={v}` is not a number"))),
            None => default.ok_or_else(|| Error::config("law", format!("missing parameter `{key}`"))),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::config(
                    "law",
                    format!("unknown parameter `{k}` for family `{}`", self.family),
                ));
            }
        }
        Ok(())
    }

    /// Build the step law, mapping construction failures to config errors.
    pub fn build(&self) -> Result<StepLaw> {
        let wrap = |e: Error| match e {
            Error::InvalidLaw(m) => Error::config("law", m),
            other => other,
        };
        match self.family.as_str() {
            "simple" => {
                self.check_keys(&[])?;
                Ok(StepLaw::simple())
            }
            "lazy" => {
                self.check_keys(&["p"])?;
                StepLaw::bounded_lazy(self.num("p", None)?).map_err(wrap)
            }
            "pareto" => {
                self.check_keys(&["alpha", "atom0", "wplus", "wminus"])?;
                StepLaw::pareto(
                    self.num("alpha", None)?,
                    self.num("atom0", Some(0.2))?,
                    self.num("wplus", Some(1.0))?,
                    self.num("wminus", Some(1.0))?,
                )
                .map_err(wrap)
            }
            "specneg" => {
                self.check_keys(&["alpha", "atom0"])?;
                StepLaw::spectrally_negative(self.num("alpha", Some(1.5))?, self.num("atom0", Some(0.0))?)
                    .map_err(wrap)
            }
            "finite" => {
                self.check_keys(&["lo", "masses"])?;
                let lo = self.num("lo", None)? as i64;
                let masses = self
                    .params
                    .get("masses")
                    .ok_or_else(|| Error::config("law", "missing parameter `masses`"))?
                    .split('/')
                    .map(|m| {
                        m.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::config("law", format!("bad mass `{m}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                StepLaw::finite(lo, masses).map_err(wrap)
            }
            other => Err(Error::config("law", format!("unknown family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto08() -> StepLaw {
        StepLaw::pareto_symmetric(0.8, 0.2).unwrap()
    }

    #[test]
    fn lazy_masses_and_tails() {
        let law = StepLaw::bounded_lazy(0.45).unwrap();
        assert_eq!(law.pmf(1), 0.45);
        assert_eq!(law.tail(0), 0.45);
        assert_eq!(law.tail(1), 0.0);
        assert_eq!(law.local_mass(5, 3), 0.0);
        assert!((law.norming(100).unwrap() - 90f64.sqrt()).abs() < 1e-12);
        assert!(law.is_aperiodic());
    }

    #[test]
    fn simple_walk_is_periodic() {
        let law = StepLaw::simple();
        assert_eq!(law.pmf(2), 0.0);
        assert!(!law.is_aperiodic());
    }

    #[test]
    fn pareto_is_symmetric_and_normalized() {
        let law = pareto08();
        for k in [1, 2, 7, 100, 12345] {
            assert_eq!(law.pmf(k), law.pmf(-k));
        }
        assert!(law.mass_defect() <= 1e-14, "{}", law.mass_defect());
        for x in [0, 1, 5, 50, 1000, 100_000] {
            assert!((law.tail(x) - law.left_tail(x)).abs() <= 1e-14);
        }
        assert_eq!(law.rho(), 0.5);
    }

    #[test]
    fn pareto_tail_against_direct_series() {
        // direct summation to 10^6 terms plus the integral remainder bracket
        let law = pareto08();
        let coef = law.pmf(1);
        for &x in &[0i64, 10, 1000] {
            let horizon = 1_000_000i64;
            let mut acc = CompensatedSum::new();
            for k in (x + 1..=horizon).rev() {
                acc.add(law.pmf(k));
            }
            let h = horizon as f64;
            let lower = coef * (h + 1.0).powf(-0.8) / 0.8;
            let upper = coef * h.powf(-0.8) / 0.8;
            let t = law.tail(x);
            assert!(t >= acc.value() + lower - 1e-13 && t <= acc.value() + upper + 1e-13);
        }
    }

    #[test]
    fn pareto_tail_regular_variation() {
        let law = pareto08();
        let a = law.tail(1000) * 1000f64.powf(0.8);
        let b = law.tail(10_000) * 10_000f64.powf(0.8);
        assert!((a / b - 1.0).abs() <= 0.01);
        let la = law.local_mass(1000, 1) * 1000f64.powf(1.8);
        let lb = law.local_mass(10_000, 1) * 10_000f64.powf(1.8);
        assert!((la / lb - 1.0).abs() <= 0.01);

        let xs: Vec<f64> = (0..=30).map(|i| 100f64 * 1000f64.powf(i as f64 / 30.0)).collect();
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = xs.iter().map(|&x| law.tail(x.round() as i64).ln()).collect();
        let slope = crate::numeric::ls_slope(&lx, &ly);
        assert!((slope + 0.8).abs() <= 0.02, "slope {slope}");
    }

    #[test]
    fn tail_tables_match_pointwise() {
        let law = pareto08();
        let up = law.upper_tail_table(5000);
        let dn = law.lower_tail_table(5000);
        for d in [0usize, 1, 17, 999, 5000] {
            assert!((up[d] - law.tail(d as i64)).abs() <= 1e-15);
            assert!((dn[d] - law.left_tail(d as i64)).abs() <= 1e-15);
        }
    }

    #[test]
    fn tail_norming_solves_inversion() {
        let law = pareto08();
        let c = law.norming(1000).unwrap();
        assert!((1000.0 * law.interp_tail(c) - 1.0).abs() <= 1e-9);
        let r = 1000.0 * law.tail(c.round() as i64);
        assert!((0.95..=1.05).contains(&r), "{r}");
        let mut prev = 0.0;
        for n in 1..=10_000 {
            let c = law.norming(n).unwrap();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn spectrally_negative_is_centred_and_skip_free() {
        let law = StepLaw::spectrally_negative(1.5, 0.0).unwrap();
        assert_eq!(law.support_max(), Some(1));
        assert!(law.mass_defect() <= 1e-14);
        // E X = P(X=1) − Σ k P(X=−k)
        let a = law.pmf(1);
        let c = law.pmf(-1);
        let neg_mean = c * riemann(1.5);
        assert!((a - neg_mean).abs() <= 1e-14);
        assert!((law.rho() - 2.0 / 3.0).abs() < 1e-15);
        assert!(law.is_spectrally_negative());
        let cn = law.norming(500).unwrap();
        assert!((500.0 * law.interp_tail(cn) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn skewed_pareto_positivity() {
        // totally skewed to the right with alpha < 1: rho = 1
        let law = StepLaw::pareto(0.5, 0.2, 1.0, 0.0).unwrap();
        assert!((law.rho() - 1.0).abs() < 1e-12);
        let law = StepLaw::pareto(0.5, 0.2, 2.0, 1.0).unwrap();
        assert!(law.rho() > 0.5 && law.rho() < 1.0);
    }

    #[test]
    fn reflection_swaps_tails() {
        let law = StepLaw::spectrally_negative(1.5, 0.1).unwrap();
        let r = law.reflected();
        for k in -20..=20 {
            assert_eq!(law.pmf(k), r.pmf(-k));
        }
        assert!((law.left_tail(7) - r.tail(7)).abs() < 1e-16);
        assert_eq!(r.support_min(), Some(-1));
        assert!((r.rho() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn finite_requires_centering() {
        assert!(StepLaw::finite(-1, vec![0.2, 0.3, 0.5]).is_err());
        let law = StepLaw::finite(-2, vec![0.1, 0.2, 0.4, 0.2, 0.1]).unwrap();
        assert!((law.sigma2().unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(law.support_min(), Some(-2));
    }

    #[test]
    fn spec_parsing() {
        let s: LawSpec = "lazy:p=0.45".parse().unwrap();
        assert_eq!(s.build().unwrap().pmf(-1), 0.45);
        let s: LawSpec = "finite:lo=-2,masses=0.1/0.2/0.4/0.2/0.1".parse().unwrap();
        assert_eq!(s.build().unwrap().pmf(2), 0.1);
        let err = "levy:alpha=1".parse::<LawSpec>().unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "law"));
    }
}
