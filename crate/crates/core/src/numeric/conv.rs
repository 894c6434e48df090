//! Linear convolution of nonnegative mass vectors against a fixed kernel.
//!
//! Small products are summed directly; large ones go through a real FFT whose
//! kernel spectrum is cached per transform length. Both paths are deterministic
//! and independent of the rayon pool size.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use realfft::num_complex::Complex64;
use realfft::RealFftPlanner;

/// Operation count (outputs × kernel taps) above which the spectral path is used.
pub const DIRECT_LIMIT: usize = 1 << 20;

const PAR_CHUNK: usize = 4096;

/// A convolution kernel on the integer lags `lo..lo + values.len()`.
pub struct Kernel {
    lo: i64,
    values: Vec<f64>,
    planner: RealFftPlanner<f64>,
    spectra: HashMap<usize, Arc<Vec<Complex64>>>,
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel")
            .field("lo", &self.lo)
            .field("len", &self.values.len())
            .finish()
    }
}

impl Kernel {
    pub fn new(lo: i64, values: Vec<f64>) -> Self {
        Self {
            lo,
            values,
            planner: RealFftPlanner::new(),
            spectra: HashMap::new(),
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Convolve `a` (supported on `a_lo..`) with the kernel and return the
    /// result on the absolute index range `[out_lo, out_hi]`.
    pub fn apply(&mut self, a: &[f64], a_lo: i64, out_lo: i64, out_hi: i64) -> Vec<f64> {
        let out_len = (out_hi - out_lo + 1).max(0) as usize;
        if out_len == 0 || a.is_empty() {
            return vec![0.0; out_len];
        }
        // full convolution index t corresponds to absolute a_lo + lo + t
        let t0 = out_lo - a_lo - self.lo;
        let work = out_len.saturating_mul(self.values.len().min(a.len()));
        if work <= DIRECT_LIMIT {
            direct(a, &self.values, t0, out_len)
        } else {
            self.spectral(a, t0, out_len)
        }
    }

    fn spectral(&mut self, a: &[f64], t0: i64, out_len: usize) -> Vec<f64> {
        let full = a.len() + self.values.len() - 1;
        let n = full.next_power_of_two();
        let fwd = self.planner.plan_fft_forward(n);
        let inv = self.planner.plan_fft_inverse(n);
        let spectrum = match self.spectra.get(&n) {
            Some(s) => Arc::clone(s),
            None => {
                let mut buf = vec![0.0; n];
                buf[..self.values.len()].copy_from_slice(&self.values);
                let mut out = fwd.make_output_vec();
                fwd.process(&mut buf, &mut out).expect("fft length matches plan");
                let s = Arc::new(out);
                self.spectra.insert(n, Arc::clone(&s));
                s
            }
        };
        let mut buf = vec![0.0; n];
        buf[..a.len()].copy_from_slice(a);
        let mut spec_a = fwd.make_output_vec();
        fwd.process(&mut buf, &mut spec_a).expect("fft length matches plan");
        let scale = 1.0 / n as f64;
        for (x, k) in spec_a.iter_mut().zip(spectrum.iter()) {
            *x = *x * *k * scale;
        }
        // realfft requires purely real DC/Nyquist bins
        spec_a[0].im = 0.0;
        if let Some(last) = spec_a.last_mut() {
            last.im = 0.0;
        }
        inv.process(&mut spec_a, &mut buf).expect("fft length matches plan");
        (0..out_len)
            .map(|k| {
                let t = t0 + k as i64;
                if t < 0 || t as usize >= full {
                    0.0
                } else {
                    buf[t as usize].max(0.0)
                }
            })
            .collect()
    }
}

/// Direct summation of the full-convolution entries `t0 .. t0 + out_len`.
pub fn direct(a: &[f64], b: &[f64], t0: i64, out_len: usize) -> Vec<f64> {
    let na = a.len() as i64;
    let nb = b.len() as i64;
    let one = |t: i64| -> f64 {
        let i_lo = (t - nb + 1).max(0);
        let i_hi = t.min(na - 1);
        let mut s = 0.0;
        let mut i = i_lo;
        while i <= i_hi {
            s += a[i as usize] * b[(t - i) as usize];
            i += 1;
        }
        s
    };
    let mut out = vec![0.0; out_len];
    if out_len * (nb.min(na) as usize) < DIRECT_LIMIT / 8 {
        for (k, o) in out.iter_mut().enumerate() {
            *o = one(t0 + k as i64);
        }
    } else {
        out.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(c, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = one(t0 + (c * PAR_CHUNK + k) as i64);
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn direct_matches_naive_on_subrange() {
        let a = [0.1, 0.2, 0.3, 0.4];
        let b = [0.5, 0.25, 0.25];
        let full = naive(&a, &b);
        let mut k = Kernel::new(-1, b.to_vec());
        // a on [10, 13], kernel lags [-1, 1] → output [9, 14]
        let out = k.apply(&a, 10, 8, 15);
        assert_eq!(out[0], 0.0);
        for t in 0..full.len() {
            assert!((out[t + 1] - full[t]).abs() < 1e-15);
        }
        assert_eq!(out[7], 0.0);
    }

    #[test]
    fn spectral_matches_direct() {
        let n = 3000;
        let a: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64).powi(2)).collect();
        let b: Vec<f64> = (0..2 * n).map(|i| 1.0 / (1.0 + (i as f64 - n as f64).abs()).powf(1.8)).collect();
        let mut k = Kernel::new(-(n as i64), b.clone());
        let out_fft = k.apply(&a, 0, -100, 500);
        let out_dir = direct(&a, &b, -100 + n as i64, 601);
        for (x, y) in out_fft.iter().zip(&out_dir) {
            assert!((x - y).abs() < 1e-14, "{x} vs {y}");
        }
    }
}

/// Full linear convolution of two vectors, direct or spectral by size.
pub fn linear(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let full = a.len() + b.len() - 1;
    if a.len().saturating_mul(b.len()) <= DIRECT_LIMIT {
        return direct(a, b, 0, full);
    }
    let n = full.next_power_of_two();
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = vec![0.0; n];
    buf[..a.len()].copy_from_slice(a);
    let mut sa = fwd.make_output_vec();
    fwd.process(&mut buf, &mut sa).expect("fft length matches plan");
    buf.iter_mut().for_each(|v| *v = 0.0);
    buf[..b.len()].copy_from_slice(b);
    let mut sb = fwd.make_output_vec();
    fwd.process(&mut buf, &mut sb).expect("fft length matches plan");
    let scale = 1.0 / n as f64;
    for (x, y) in sa.iter_mut().zip(&sb) {
        *x = *x * *y * scale;
    }
    sa[0].im = 0.0;
    if let Some(last) = sa.last_mut() {
        last.im = 0.0;
    }
    inv.process(&mut sa, &mut buf).expect("fft length matches plan");
    buf.truncate(full);
    buf.iter_mut().for_each(|v| *v = v.max(0.0));
    buf
}

#[cfg(test)]
mod linear_tests {
    use super::*;

    #[test]
    fn linear_paths_agree() {
        let a: Vec<f64> = (0..1500).map(|i| ((i * 7 % 13) as f64) / 13.0).collect();
        let b: Vec<f64> = (0..1200).map(|i| ((i * 5 % 11) as f64) / 11.0).collect();
        let fast = linear(&a, &b);
        let slow = direct(&a, &b, 0, a.len() + b.len() - 1);
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
