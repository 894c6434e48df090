//! Limiting stable objects: the density `f` of `Y₁`, meander densities `p`, `p̃`,
//! the passage density `h_x(1)` and the killed density `q_x(w)`.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exact::{unkilled_law, WindowPolicy};
use crate::ladder::{top_octave_drift, LadderTables};
use crate::numeric::quad::{integrate, integrate_raw, integrate_to_inf, GaussLegendre, QuadConfig};
use crate::numeric::{normal_cdf, normal_pdf};
use crate::steps::{NormingMode, StepLaw};

/// Stable limit of `S_n / c_n` under the walk's own norming.
///
/// For `α < 2` the Lévy measure has tails `c₊ x^{−α}` and `c₋ x^{−α}`, and
/// `log E e^{iθY₁} = −σ|θ|^α (1 − iβ tan(πα/2) sgn θ)` with
/// `σ = Γ(1−α) cos(πα/2) (c₊ + c₋)` (`σ = π(c₊+c₋)/2` at `α = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableModel {
    pub alpha: f64,
    pub rho: f64,
    pub eta: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl StableModel {
    /// Standard Brownian motion.
    pub fn brownian() -> Self {
        Self {
            alpha: 2.0,
            rho: 0.5,
            eta: 0.5,
            c_plus: 0.0,
            c_minus: 0.0,
        }
    }

    /// Strictly stable model from Lévy tail constants.
    pub fn new(alpha: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidLaw(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        if c_plus < 0.0 || c_minus < 0.0 || c_plus + c_minus <= 0.0 {
            return Err(Error::InvalidLaw("Levy tail constants must be nonnegative and not both 0".into()));
        }
        let beta = (c_plus - c_minus) / (c_plus + c_minus);
        if alpha == 1.0 && beta != 0.0 {
            return Err(Error::PreconditionViolated("alpha = 1 is supported only in the symmetric case".into()));
        }
        let rho = if alpha == 1.0 {
            0.5
        } else {
            0.5 + (beta * (PI * alpha / 2.0).tan()).atan() / (PI * alpha)
        };
        Ok(Self {
            alpha,
            rho,
            eta: 1.0 / alpha,
            c_plus,
            c_minus,
        })
    }

    /// The limit of `law` under `law.norming`.
    pub fn from_law(law: &StepLaw) -> Result<Self> {
        if law.norming_mode() == NormingMode::Variance {
            return Ok(Self::brownian());
        }
        let (cp, cm) = law.levy_weights();
        Self::new(law.alpha(), cp, cm)
    }

    pub fn is_brownian(&self) -> bool {
        self.alpha == 2.0
    }

    pub fn beta(&self) -> f64 {
        if self.is_brownian() {
            0.0
        } else {
            (self.c_plus - self.c_minus) / (self.c_plus + self.c_minus)
        }
    }

    /// Coefficient `σ` of `|θ|^α` in the characteristic exponent.
    pub fn sigma(&self) -> f64 {
        if self.is_brownian() {
            0.5
        } else if self.alpha == 1.0 {
            PI * (self.c_plus + self.c_minus) / 2.0
        } else {
            libm::tgamma(1.0 - self.alpha) * (PI * self.alpha / 2.0).cos() * (self.c_plus + self.c_minus)
        }
    }

    /// `αρ`.
    pub fn alpha_rho(&self) -> f64 {
        self.alpha * self.rho
    }

    /// `f(y)`: normal for `α = 2`, otherwise the inversion integral
    /// `(1/π) ∫₀^∞ e^{−σθ^α} cos(σβ tan(πα/2) θ^α − θy) dθ`.
    pub fn density(&self, y: f64) -> Result<f64> {
        if self.is_brownian() {
            return Ok(normal_pdf(y));
        }
        let a = self.alpha;
        let s = self.sigma();
        let skew = if a == 1.0 { 0.0 } else { s * self.beta() * (PI * a / 2.0).tan() };
        let f = |th: f64| {
            let ta = th.powf(a);
            (-s * ta).exp() * (skew * ta - th * y).cos()
        };
        // e^{−σθ^α} < 1e-20 beyond this point
        let th_max = (46.0 / s).powf(1.0 / a);
        let cfg = QuadConfig::new(1e-12, 1e-10).with_max_intervals(4000);
        let mut total = 0.0;
        let mut err = 0.0;
        // pieces no longer than a quarter oscillation period
        let width = if y.abs() > 0.0 { (PI / 2.0 / y.abs()).min(th_max) } else { th_max };
        let mut lo = 0.0;
        while lo < th_max {
            let hi = (lo + width).min(th_max);
            let r = integrate_raw(f, lo, hi, cfg);
            total += r.value;
            err += r.error;
            lo = hi;
        }
        if err > 1e-9 {
            return Err(Error::QuadratureFailure {
                requested: 1e-9,
                achieved: err,
            });
        }
        Ok((total / PI).max(0.0))
    }

    /// Cauchy density with the scale fixed by the tail norming (symmetric `α = 1` only).
    pub fn cauchy_density(&self, y: f64) -> Option<f64> {
        (self.alpha == 1.0).then(|| {
            let g = self.sigma();
            g / (PI * (g * g + y * y))
        })
    }
}

/// Brownian meander density at time 1: `p(x) = x e^{−x²/2}`.
pub fn brownian_meander_p(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (-0.5 * x * x).exp()
    }
}

/// Brownian passage density `h_x(1) = x φ(x)`.
pub fn brownian_h(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * normal_pdf(x)
    }
}

/// Density of `x − B₁` at `w` on `{sup_{t≤1} B_t < x}`: `φ(x−w) − φ(x+w)`.
pub fn brownian_q(x: f64, w: f64) -> f64 {
    if w <= 0.0 || x <= 0.0 {
        0.0
    } else {
        (normal_pdf(x - w) - normal_pdf(x + w)).max(0.0)
    }
}

/// `P(sup_{t≤1} B_t < x) = 2Φ(x) − 1`.
pub fn brownian_sup_below(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        2.0 * normal_cdf(x) - 1.0
    }
}

/// Where a grid's values came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    Extracted,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Quadrature => "quadrature",
            Provenance::Extracted => "extracted",
        }
    }
}

/// A density on an increasing grid, linearly interpolated; beyond the last
/// point it decays like `z^{−tail_index}` if set, else vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub z: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub provenance: Provenance,
    /// Time index used for extraction.
    pub n: Option<usize>,
    /// Largest change between `n/2` and `n`, relative to the peak value.
    pub stability: Option<f64>,
    pub tail_index: Option<f64>,
    cum: Vec<f64>,
}

impl DensityGrid {
    pub fn new(z: Vec<f64>, values: Vec<f64>, errors: Vec<f64>, provenance: Provenance) -> Self {
        assert!(z.len() == values.len() && z.len() == errors.len() && z.len() >= 2);
        let mut cum = vec![0.0; z.len()];
        for i in 1..z.len() {
            cum[i] = cum[i - 1] + 0.5 * (values[i] + values[i - 1]) * (z[i] - z[i - 1]);
        }
        Self {
            z,
            values,
            errors,
            provenance,
            n: None,
            stability: None,
            tail_index: None,
            cum,
        }
    }

    /// Samples `f` on `z`.
    pub fn from_fn(z: Vec<f64>, f: impl Fn(f64) -> f64, provenance: Provenance) -> Self {
        let values: Vec<f64> = z.iter().map(|&x| f(x)).collect();
        let errors = vec![0.0; z.len()];
        Self::new(z, values, errors, provenance)
    }

    pub fn with_tail_index(mut self, k: Option<f64>) -> Self {
        self.tail_index = k;
        self
    }

    fn last(&self) -> (f64, f64) {
        (*self.z.last().unwrap(), *self.values.last().unwrap())
    }

    /// Sum of `value · Δz` over the grid (trapezoid).
    pub fn grid_mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["z", "value", "error", "provenance"])?;
        for i in 0..self.z.len() {
            w.write_record(&[
                format!("{}", self.z[i]),
                format!("{:e}", self.values[i]),
                format!("{:e}", self.errors[i]),
                self.provenance.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A density on `[0, ∞)` with its distribution function.
pub trait Meander: Sync {
    fn eval(&self, z: f64) -> f64;
    /// `∫₀^z`.
    fn cdf(&self, z: f64) -> f64;
    fn mass(&self) -> f64 {
        self.cdf(f64::INFINITY)
    }
}

/// The Brownian meander density `x e^{−x²/2}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayleigh;

impl Meander for Rayleigh {
    fn eval(&self, z: f64) -> f64 {
        brownian_meander_p(z)
    }

    fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            1.0 - (-0.5 * z * z).exp()
        }
    }
}

impl Meander for DensityGrid {
    fn eval(&self, z: f64) -> f64 {
        if z < self.z[0] {
            return 0.0;
        }
        let (zl, vl) = self.last();
        if z >= zl {
            return match self.tail_index {
                Some(k) if z > zl => vl * (z / zl).powf(-k),
                _ if z == zl => vl,
                _ => 0.0,
            };
        }
        let i = self.z.partition_point(|&t| t <= z) - 1;
        let f = (z - self.z[i]) / (self.z[i + 1] - self.z[i]);
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    fn cdf(&self, z: f64) -> f64 {
        if z <= self.z[0] {
            return 0.0;
        }
        let (zl, vl) = self.last();
        if z >= zl {
            let extra = match self.tail_index {
                Some(k) if k > 1.0 => {
                    let r = if z.is_finite() { (z / zl).powf(1.0 - k) } else { 0.0 };
                    vl * zl / (k - 1.0) * (1.0 - r)
                }
                _ => 0.0,
            };
            return self.grid_mass() + extra;
        }
        let i = self.z.partition_point(|&t| t <= z) - 1;
        let v = self.eval(z);
        self.cum[i] + 0.5 * (self.values[i] + v) * (z - self.z[i])
    }
}

/// Lattice-side local limit check `c_n P(S_n = 0) → f(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Report {
    pub ngrid: Vec<usize>,
    pub values: Vec<f64>,
    pub f0: f64,
    pub drift: f64,
    pub last_rel_err: f64,
}

pub fn local_limit_f0_check(law: &StepLaw, model: &StableModel, ngrid: &[usize], policy: WindowPolicy) -> Result<F0Report> {
    if !law.is_aperiodic() {
        return Err(Error::PreconditionViolated("local limit check needs an aperiodic law".into()));
    }
    let f0 = model.density(0.0)?;
    let mut values = Vec::with_capacity(ngrid.len());
    for &n in ngrid {
        let s = unkilled_law(law, n, policy)?;
        values.push(law.norming(n)? * s.mass_at(0));
    }
    let drift = top_octave_drift(ngrid, &values);
    let last_rel_err = (values.last().copied().unwrap_or(f64::NAN) / f0 - 1.0).abs();
    Ok(F0Report {
        ngrid: ngrid.to_vec(),
        values,
        f0,
        drift,
        last_rel_err,
    })
}

/// Smallest `c_n` accepted by [`extract_meander`].
pub const MIN_SITES_PER_UNIT: f64 = 20.0;

/// `p̂(z) = c_n g(n, round(z c_n)) / P(τ⁻ > n)` and
/// `p̃̂(z) = c_n g⁻(n, round(z c_n)) / P(τ > n)`, with `n/2` as the stability probe.
pub fn extract_meander(law: &StepLaw, tables: &LadderTables, n: usize, zgrid: &[f64]) -> Result<(DensityGrid, DensityGrid)> {
    let c = law.norming(n)?;
    if c < MIN_SITES_PER_UNIT {
        return Err(Error::ResolutionTooCoarse {
            cn: c,
            min: MIN_SITES_PER_UNIT,
        });
    }
    let half = n / 2;
    let c_half = law.norming(half)?;
    let model = StableModel::from_law(law)?;
    let heavy = |w: f64| (!model.is_brownian() && w > 0.0).then_some(1.0 + model.alpha);
    let missing = |m: usize| Error::PreconditionViolated(format!("ladder row m = {m} was not stored"));

    let one = |get: &dyn Fn(usize, usize) -> Option<f64>, tail: &[f64], tail_index: Option<f64>| -> Result<DensityGrid> {
        let mut vals = Vec::with_capacity(zgrid.len());
        let mut errs = Vec::with_capacity(zgrid.len());
        let mut peak: f64 = 0.0;
        for &z in zgrid {
            let at = |m: usize, cm: f64| -> Result<f64> {
                let u = (z * cm).round() as usize;
                Ok(cm * get(m, u).ok_or_else(|| missing(m))? / tail[m])
            };
            let v = at(n, c)?;
            let w = at(half, c_half)?;
            peak = peak.max(v);
            vals.push(v);
            errs.push((v - w).abs());
        }
        let stab = errs.iter().fold(0.0_f64, |a, &e| a.max(e)) / peak;
        let mut g = DensityGrid::new(zgrid.to_vec(), vals, errs, Provenance::Extracted).with_tail_index(tail_index);
        g.n = Some(n);
        g.stability = Some(stab);
        Ok(g)
    };
    let p = one(&|m, u| tables.g(m, u), &tables.tauminus_tail, heavy(model.c_plus))?;
    let pt = one(&|m, u| tables.gminus(m, u), &tables.tau_tail, heavy(model.c_minus))?;
    Ok((p, pt))
}

/// Independent value of `P(sup_{t≤1} Y_t < x)` used to fix the constant in `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassOracle {
    /// `2Φ(x) − 1`.
    BrownianClosedForm,
    /// A value supplied by the exact engine or Monte Carlo.
    Value(f64),
    None,
}

/// `q_x(·)` from the ladder renewal densities
/// `u(t,z) = t^{−η+ρ−1} p(z t^{−η})` and `u⁻(t,z) = t^{−η−ρ} p̃(z t^{−η})`,
/// scaled so that its total mass matches the oracle.
pub struct QDensity<'a> {
    pub model: StableModel,
    pub x: f64,
    p: &'a dyn Meander,
    ptilde: &'a dyn Meander,
    /// Overall constant.
    pub k8: f64,
    /// `∫ q_x` before scaling.
    pub raw_mass: f64,
}

fn split_unit<F: Fn(f64) -> f64>(f: F, rho: f64, cfg: QuadConfig) -> (f64, f64) {
    // t = s^{1/ρ} on [0, 1/2] and 1 − t = s^{1/(1−ρ)} on [1/2, 1]
    let a = 1.0 / rho;
    let b = 1.0 / (1.0 - rho);
    let left = integrate_raw(
        |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let t = s.powf(a);
            f(t) * a * s.powf(a - 1.0)
        },
        0.0,
        0.5f64.powf(rho),
        cfg,
    );
    let right = integrate_raw(
        |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let t = 1.0 - s.powf(b);
            f(t) * b * s.powf(b - 1.0)
        },
        0.0,
        0.5f64.powf(1.0 - rho),
        cfg,
    );
    (left.value + right.value, left.error + right.error)
}

const INNER_PIECES: usize = 48;

static GL8: std::sync::LazyLock<GaussLegendre> = std::sync::LazyLock::new(|| GaussLegendre::new(8));

/// Fixed-rule version of [`split_unit`].
fn fixed_split_unit<F: Fn(f64) -> f64>(f: F, rho: f64) -> f64 {
    let a = 1.0 / rho;
    let b = 1.0 / (1.0 - rho);
    let gl = &*GL8;
    let left = gl.composite(
        |s: f64| {
            let t = s.powf(a);
            f(t) * a * s.powf(a - 1.0)
        },
        0.0,
        0.5f64.powf(rho),
        12,
    );
    let right = gl.composite(
        |s: f64| {
            let t = 1.0 - s.powf(b);
            f(t) * b * s.powf(b - 1.0)
        },
        0.0,
        0.5f64.powf(1.0 - rho),
        12,
    );
    left + right
}

impl<'a> QDensity<'a> {
    pub fn new(model: StableModel, x: f64, p: &'a dyn Meander, ptilde: &'a dyn Meander, oracle: MassOracle) -> Result<Self> {
        if model.alpha_rho() > 1.0 + 1e-12 {
            return Err(Error::PreconditionViolated(format!("q density needs alpha*rho <= 1, got {}", model.alpha_rho())));
        }
        let target = match oracle {
            MassOracle::BrownianClosedForm => brownian_sup_below(x),
            MassOracle::Value(v) => v,
            MassOracle::None => return Err(Error::NormalizationUnavailable),
        };
        let (rho, eta) = (model.rho, model.eta);
        let mass_pt = ptilde.mass();
        let f = |t: f64| {
            if t <= 0.0 || t >= 1.0 {
                return 0.0;
            }
            (1.0 - t).powf(-rho) * t.powf(rho - 1.0) * p.cdf(x * t.powf(-eta))
        };
        let (raw, err) = split_unit(f, rho, QuadConfig::new(1e-12, 1e-10));
        let raw = raw * mass_pt;
        if !(raw > 0.0) || err * mass_pt > 1e-6 * raw {
            return Err(Error::QuadratureFailure {
                requested: 1e-6 * raw.abs(),
                achieved: err * mass_pt,
            });
        }
        Ok(Self {
            model,
            x,
            p,
            ptilde,
            k8: target / raw,
            raw_mass: raw,
        })
    }

    /// Unscaled double integral at `w`.
    ///
    /// Fixed tensor-product Gauss rules: the time variable goes through the
    /// endpoint substitutions, the inner variable `r = (x − z) t^{−η}` is cut
    /// into geometrically growing pieces from the end where `p̃` concentrates.
    pub fn raw(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let (rho, eta, x) = (self.model.rho, self.model.eta, self.x);
        let m = x.min(w);
        let gl = &*GL8;
        let outer = |t: f64| {
            if t <= 0.0 || t >= 1.0 {
                return 0.0;
            }
            let te = t.powf(eta);
            let se = (1.0 - t).powf(-eta);
            let r_lo = (x - m) / te;
            let r_hi = x / te;
            let g = |r: f64| self.p.eval(r) * self.ptilde.eval((w - x + r * te) * se);
            let mut acc = 0.0;
            let mut a = r_lo;
            let mut step = (1.0 / (te * se)).min(1.0) / 8.0;
            let mut pieces = 0;
            while a < r_hi && pieces < INNER_PIECES {
                let b = if pieces + 1 == INNER_PIECES { r_hi } else { (a + step).min(r_hi) };
                acc += gl.integrate(g, a, b);
                a = b;
                step *= 2.0;
                pieces += 1;
            }
            t.powf(rho - 1.0) * (1.0 - t).powf(-eta - rho) * acc
        };
        fixed_split_unit(outer, rho)
    }

    /// `q_x(w)`.
    pub fn eval(&self, w: f64) -> f64 {
        self.k8 * self.raw(w)
    }

    /// `∫₀^∞ q_x(w) dw` by direct quadrature (equals the oracle mass by construction).
    pub fn total_mass(&self) -> Result<f64> {
        let cfg = QuadConfig::new(1e-9, 1e-6).with_max_intervals(200);
        let a = integrate(|w| self.eval(w), 0.0, self.x, cfg)?.value;
        let b = integrate_to_inf(|w| self.eval(w), self.x, cfg)?.value;
        Ok(a + b)
    }
}

/// `q_x(w)` for a single point.
pub fn q_density(model: StableModel, x: f64, w: f64, p: &dyn Meander, ptilde: &dyn Meander, oracle: MassOracle) -> Result<f64> {
    Ok(QDensity::new(model, x, p, ptilde, oracle)?.eval(w))
}

/// `∫₀^∞ q_x(w) w^{−α} dw`; `h_x(1)` is this times `k₇`.
pub fn riv_integral(q: &QDensity) -> Result<f64> {
    let a = q.model.alpha;
    let ar = q.model.alpha_rho();
    if ar >= 1.0 {
        return Err(Error::PreconditionViolated(format!("the h identity needs alpha*rho < 1, got {ar}")));
    }
    // local exponent of q(w) w^{−α} near 0 must exceed −1
    let (w1, w2) = (1e-4 * q.x, 1e-3 * q.x);
    let (v1, v2) = (q.eval(w1) * w1.powf(-a), q.eval(w2) * w2.powf(-a));
    if v1 > 0.0 && v2 > 0.0 {
        let slope = (v2 / v1).ln() / (w2 / w1).ln();
        if slope <= -1.0 {
            return Err(Error::SingularIntegrand(format!("local exponent {slope:.3} at w -> 0")));
        }
    }
    let cfg = QuadConfig::new(1e-10, 1e-5).with_max_intervals(200);
    // w = s^k on [0, 1] takes out w^{−αρ}-type behaviour at 0
    let k = 1.0 / (1.0 - ar);
    let f = |w: f64| if w <= 0.0 { 0.0 } else { q.eval(w) * w.powf(-a) };
    let near = integrate_raw(
        |s: f64| {
            if s <= 0.0 {
                0.0
            } else {
                f(s.powf(k)) * k * s.powf(k - 1.0)
            }
        },
        0.0,
        1.0,
        cfg,
    );
    let far = integrate_to_inf(f, 1.0, cfg)?;
    if near.error > 1e-4 * near.value.abs().max(1e-12) {
        return Err(Error::QuadratureFailure {
            requested: 1e-4 * near.value.abs(),
            achieved: near.error,
        });
    }
    Ok(near.value + far.value)
}

/// `k₇` such that `k₇ · ∫ q_{x_ref}(w) w^{−α} dw = h_ref`.
pub fn calibrate_k7(q_ref: &QDensity, h_ref: f64) -> Result<f64> {
    Ok(h_ref / riv_integral(q_ref)?)
}

/// `h_x(1) = k₇ ∫ q_x(w) w^{−α} dw`.
pub fn h_via_riv(q: &QDensity, k7: f64) -> Result<f64> {
    Ok(k7 * riv_integral(q)?)
}

/// Ratio `p(x)/h_x(1)` across a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionalityReport {
    pub xs: Vec<f64>,
    pub ratios: Vec<f64>,
    pub mean: f64,
    /// Coefficient of variation of the ratios.
    pub cv: f64,
    pub all_positive: bool,
}

/// Flatness of `p(x)/h_x(1)` for a spectrally negative model.
pub fn spectrally_negative_check(model: &StableModel, p: &dyn Meander, hgrid: &[(f64, f64)]) -> Result<ProportionalityReport> {
    if !model.is_brownian() && (model.alpha_rho() - 1.0).abs() > 1e-9 {
        return Err(Error::PreconditionViolated(format!("needs alpha*rho = 1, got {}", model.alpha_rho())));
    }
    let xs: Vec<f64> = hgrid.iter().map(|&(x, _)| x).collect();
    let ratios: Vec<f64> = hgrid.iter().map(|&(x, h)| p.eval(x) / h).collect();
    let k = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / k;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / k;
    Ok(ProportionalityReport {
        all_positive: ratios.iter().all(|&r| r > 0.0 && r.is_finite()),
        xs,
        ratios,
        mean,
        cv: var.sqrt() / mean,
    })
}
