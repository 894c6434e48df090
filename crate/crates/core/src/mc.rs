//! Seeded Monte Carlo oracle for first-passage probabilities.
//!
//! Streams: every estimator draws from ChaCha8 keyed by the master seed, with
//! stream id `(cell << 20) | batch`. The cell id is a 44-bit FNV-1a hash of
//! the estimator kind, law label and parameters, so distinct cells and
//! batches never share a keystream. Batches run in parallel and are reduced
//! in batch order, which makes the output independent of thread count.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, WeightedAliasIndex};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::steps::StepLaw;

/// Batches used for the standard error.
pub const BATCHES: usize = 32;
const BATCH_BITS: u32 = 20;
const CELL_BITS: u32 = 64 - BATCH_BITS;
/// Half-width of the alias-table core for unbounded laws.
const CORE_HALF_WIDTH: i64 = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub paths: usize,
    pub seed: u64,
    pub batches: usize,
}

impl McEstimate {
    fn from_batches(fractions: &[f64], paths: usize, seed: u64) -> Self {
        let b = fractions.len() as f64;
        let mean = fractions.iter().sum::<f64>() / b;
        let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (b - 1.0);
        Self {
            estimate: mean,
            stderr: (var / b).sqrt(),
            paths,
            seed,
            batches: fractions.len(),
        }
    }

    /// `|estimate − exact| ≤ k · SE`.
    pub fn agrees(&self, exact: f64, k: f64) -> bool {
        (self.estimate - exact).abs() <= k * self.stderr
    }
}

/// Step sampler: alias table on a core interval, inversion of the exact tail beyond it.
#[derive(Debug, Clone)]
pub struct Sampler {
    lo: i64,
    hi: i64,
    alias: WeightedAliasIndex<f64>,
    upper: f64,
    lower: f64,
    law: StepLaw,
}

impl Sampler {
    pub fn new(law: &StepLaw) -> Result<Self> {
        let lo = law.support_min().unwrap_or(-CORE_HALF_WIDTH).max(-CORE_HALF_WIDTH);
        let hi = law.support_max().unwrap_or(CORE_HALF_WIDTH).min(CORE_HALF_WIDTH);
        let upper = law.upper_from(hi + 1);
        let lower = law.lower_to(lo - 1);
        let mut w = law.pmf_vec(lo, hi);
        w.push(upper);
        w.push(lower);
        let alias = WeightedAliasIndex::new(w).map_err(|e| Error::InvalidLaw(format!("alias table: {e}")))?;
        Ok(Self {
            lo,
            hi,
            alias,
            upper,
            lower,
            law: law.clone(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let i = self.alias.sample(rng) as i64;
        let width = self.hi - self.lo + 1;
        if i < width {
            self.lo + i
        } else if i == width {
            let v = rng.gen::<f64>() * self.upper;
            invert(self.hi + 1, v, |j| self.law.upper_from(j))
        } else {
            let v = rng.gen::<f64>() * self.lower;
            -invert(1 - self.lo, v, |d| self.law.lower_to(-d))
        }
    }
}

/// Largest `j ≥ start` with `tail(j) > v`, for decreasing `tail`.
fn invert(start: i64, v: f64, tail: impl Fn(i64) -> f64) -> i64 {
    let (mut a, mut b) = (start, start);
    while tail(b) > v {
        a = b;
        if b >= 1 << 61 {
            return b;
        }
        b = start + 2 * (b - start + 1);
    }
    // tail(a) > v ≥ tail(b)
    while b - a > 1 {
        let m = a + (b - a) / 2;
        if tail(m) > v {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// 44-bit FNV-1a cell id.
pub fn cell_id(kind: &str, law: &StepLaw, params: &[i64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(kind.as_bytes());
    eat(&[0]);
    eat(law.label().as_bytes());
    for p in params {
        eat(&p.to_le_bytes());
    }
    h >> BATCH_BITS
}

fn stream(seed: u64, cell: u64, batch: usize) -> ChaCha8Rng {
    debug_assert!(cell < 1 << CELL_BITS && batch < 1 << BATCH_BITS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((cell << BATCH_BITS) | batch as u64);
    rng
}

fn batch_sizes(paths: usize) -> Result<usize> {
    if paths < BATCHES {
        return Err(Error::PreconditionViolated(format!("need at least {BATCHES} paths")));
    }
    Ok(paths / BATCHES)
}

/// Histogram of `T_x` on `1..=nmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageHistogram {
    pub x: i64,
    pub nmax: usize,
    /// `bins[n]` estimates `P(T_x = n)`; index 0 is unused.
    pub bins: Vec<McEstimate>,
    /// `P(T_x > nmax)`.
    pub beyond: McEstimate,
}

impl PassageHistogram {
    /// CSV `(n, estimate, stderr)`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "estimate", "stderr"])?;
        for n in 1..=self.nmax {
            let b = &self.bins[n];
            w.write_record(&[n.to_string(), format!("{:.12e}", b.estimate), format!("{:.6e}", b.stderr)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn sample_first_passage(law: &StepLaw, x: i64, nmax: usize, paths: usize, seed: u64) -> Result<PassageHistogram> {
    let per = batch_sizes(paths)?;
    let sampler = Sampler::new(law)?;
    let cell = cell_id("first-passage", law, &[x, nmax as i64]);
    let counts: Vec<Vec<u64>> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, cell, b);
            let mut c = vec![0u64; nmax + 2];
            for _ in 0..per {
                let mut s = 0i64;
                let mut hit = nmax + 1;
                for n in 1..=nmax {
                    s = s.saturating_add(sampler.sample(&mut rng));
                    if s > x {
                        hit = n;
                        break;
                    }
                }
                c[hit] += 1;
            }
            c
        })
        .collect();
    let total = per * BATCHES;
    let est = |k: usize| {
        let f: Vec<f64> = counts.iter().map(|c| c[k] as f64 / per as f64).collect();
        McEstimate::from_batches(&f, total, seed)
    };
    Ok(PassageHistogram {
        x,
        nmax,
        bins: (0..=nmax).map(est).collect(),
        beyond: est(nmax + 1),
    })
}

/// `P(max_{r≤n} S_r ≤ x)`.
pub fn sample_sup_event(law: &StepLaw, x: i64, n: usize, paths: usize, seed: u64) -> Result<McEstimate> {
    let per = batch_sizes(paths)?;
    let sampler = Sampler::new(law)?;
    let cell = cell_id("sup-event", law, &[x, n as i64]);
    let fractions: Vec<f64> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, cell, b);
            let mut stay = 0u64;
            'path: for _ in 0..per {
                let mut s = 0i64;
                for _ in 0..n {
                    s = s.saturating_add(sampler.sample(&mut rng));
                    if s > x {
                        continue 'path;
                    }
                }
                stay += 1;
            }
            stay as f64 / per as f64
        })
        .collect();
    Ok(McEstimate::from_batches(&fractions, per * BATCHES, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_walk_first_step() {
        let h = sample_first_passage(&StepLaw::simple(), 0, 4, 200_000, 7).unwrap();
        assert!(h.bins[1].agrees(0.5, 3.0), "{:?}", h.bins[1]);
        assert_eq!(h.bins[2].estimate, 0.0);
        assert_eq!(h.bins[1].batches, BATCHES);
    }

    #[test]
    fn sampler_matches_pmf() {
        let law = StepLaw::pareto_symmetric(0.8, 0.1).unwrap();
        let s = Sampler::new(&law).unwrap();
        let mut rng = stream(1, 2, 3);
        let m = 400_000;
        let mut zero = 0;
        let mut far = 0;
        for _ in 0..m {
            let v = s.sample(&mut rng);
            zero += (v == 0) as usize;
            far += (v > 10_000) as usize;
        }
        let p0 = law.pmf(0);
        let pf = law.tail(10_000);
        assert!((zero as f64 / m as f64 - p0).abs() < 5.0 * (p0 / m as f64).sqrt());
        assert!((far as f64 / m as f64 - pf).abs() < 5.0 * (pf / m as f64).sqrt());
    }

    #[test]
    fn inversion_boundaries() {
        let tail = |j: i64| 1.0 / (j as f64);
        assert_eq!(invert(1, 0.3, tail), 3);
        assert_eq!(invert(5, 0.9, tail), 5);
    }

    #[test]
    fn deterministic() {
        let law = StepLaw::bounded_lazy(0.45).unwrap();
        let a = sample_sup_event(&law, 3, 64, 3200, 11).unwrap();
        let b = sample_sup_event(&law, 3, 64, 3200, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_sup_event(&law, 3, 64, 3200, 12).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }
}
