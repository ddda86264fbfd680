//! FFT plumbing: chirp-z sums, 2-D transforms and linear convolution.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized in-place FFT (`e^{-2πi jk/n}` forward, `e^{+2πi jk/n}` inverse).
pub(crate) fn fft_in_place(buf: &mut [C64], inverse: bool) {
    if buf.len() > 1 {
        plan(buf.len(), inverse).process(buf);
    }
}

#[inline]
pub(crate) fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Phase `e^{-iπ·α·k²}` with the argument reduced before the trig call.
#[inline]
fn chirp(alpha: f64, k: f64) -> C64 {
    let t = (alpha * k * k).rem_euclid(2.0);
    cis(-PI * t)
}

/// `Y_j = Σ_k a_k e^{−2πi·α·k·j}` for `j = 0..m`.
///
/// Uses a plain FFT when `α = ±1/L` for an integer `L ≥ max(n, m)`, otherwise
/// Bluestein's identity `kj = (k² + j² − (j−k)²)/2`.
#[cfg(test)]
pub(crate) fn czt(a: &[C64], alpha: f64, m: usize) -> Vec<C64> {
    SumPlan::new(Lin::new(0.0, 1.0, a.len()), Lin::new(0.0, 1.0, m), alpha).apply(a)
}

/// Affine sample positions `start + k·step`; `step` may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lin {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Lin {
    pub fn new(start: f64, step: f64, count: usize) -> Self {
        Self { start, step, count }
    }

    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn scaled(&self, s: f64) -> Lin {
        Lin::new(self.start * s, self.step * s, self.count)
    }

    /// Linear interpolation of `values` (sampled on `self`) at `x`, zero outside.
    #[inline]
    pub fn interp(&self, values: &[C64], x: f64) -> C64 {
        let t = (x - self.start) / self.step;
        let last = (self.count - 1) as f64;
        if !(t >= -1e-9 && t <= last + 1e-9) {
            return C64::new(0.0, 0.0);
        }
        let t = t.clamp(0.0, last);
        let i = t.floor() as usize;
        if i + 1 >= self.count {
            return values[self.count - 1];
        }
        let fr = t - i as f64;
        if fr == 0.0 {
            return values[i];
        }
        values[i] * (1.0 - fr) + values[i + 1] * fr
    }
}

/// `out_j = Σ_k v_k e^{−2πi·κ·x_k·u_j}` for affine `x` and `u`.
pub(crate) fn fourier_sum(values: &[C64], x: Lin, u: Lin, kappa: f64) -> Vec<C64> {
    debug_assert_eq!(values.len(), x.count);
    SumPlan::new(x, u, kappa).apply(values)
}

enum SumKind {
    /// Plain FFT of length `l`.
    Fft { l: usize, inverse: bool },
    /// Bluestein with padded length `p` and the spectrum of the chirp filter.
    Bluestein { p: usize, w: Vec<C64> },
}

/// Precomputed [`fourier_sum`] for fixed grids, with optional extra
/// diagonal factors on the input and output side. Reused across the rows of
/// separable 2-D transforms.
pub(crate) struct SumPlan {
    pre: Vec<C64>,
    post: Vec<C64>,
    kind: SumKind,
}

impl SumPlan {
    pub fn new(x: Lin, u: Lin, kappa: f64) -> Self {
        // x_k u_j = x0 u0 + x0 du j + u0 dx k + dx du k j
        let (n, m) = (x.count, u.count);
        let mut pre: Vec<C64> = (0..n).map(|k| cis(-2.0 * PI * kappa * u.start * x.step * k as f64)).collect();
        let mut post: Vec<C64> = (0..m).map(|j| cis(-2.0 * PI * kappa * x.start * u.at(j))).collect();
        let alpha = kappa * x.step * u.step;
        if alpha != 0.0 {
            let l = (1.0 / alpha.abs()).round();
            if l >= n.max(m) as f64 && l < 1e7 && ((alpha.abs() * l) - 1.0).abs() < 1e-12 {
                return Self { pre, post, kind: SumKind::Fft { l: l as usize, inverse: alpha < 0.0 } };
            }
        }
        let p = (n + m - 1).next_power_of_two().max(1);
        let mut w = vec![C64::new(0.0, 0.0); p];
        for d in 0..m {
            w[d] = chirp(alpha, d as f64).conj();
        }
        for d in 1..n {
            w[p - d] = chirp(alpha, d as f64).conj();
        }
        fft_in_place(&mut w, false);
        let scale = 1.0 / p as f64;
        pre.iter_mut().enumerate().for_each(|(k, v)| *v *= chirp(alpha, k as f64));
        post.iter_mut().enumerate().for_each(|(j, v)| *v *= chirp(alpha, j as f64) * scale);
        Self { pre, post, kind: SumKind::Bluestein { p, w } }
    }

    pub fn scale_pre(&mut self, f: impl Fn(usize) -> C64) {
        self.pre.iter_mut().enumerate().for_each(|(k, v)| *v *= f(k));
    }

    pub fn scale_post(&mut self, f: impl Fn(usize) -> C64) {
        self.post.iter_mut().enumerate().for_each(|(j, v)| *v *= f(j));
    }

    pub fn apply(&self, values: &[C64]) -> Vec<C64> {
        let (n, m) = (self.pre.len(), self.post.len());
        if n == 0 || m == 0 {
            return vec![C64::new(0.0, 0.0); m];
        }
        let len = match &self.kind {
            SumKind::Fft { l, .. } => *l,
            SumKind::Bluestein { p, .. } => *p,
        };
        let mut buf = vec![C64::new(0.0, 0.0); len];
        for k in 0..n {
            buf[k] = values[k] * self.pre[k];
        }
        match &self.kind {
            SumKind::Fft { inverse, .. } => fft_in_place(&mut buf, *inverse),
            SumKind::Bluestein { w, .. } => {
                fft_in_place(&mut buf, false);
                buf.iter_mut().zip(w).for_each(|(x, y)| *x *= y);
                fft_in_place(&mut buf, true);
            }
        }
        (0..m).map(|j| buf[j] * self.post[j]).collect()
    }
}

/// Direct evaluation of [`fourier_sum`], used as a reference.
pub(crate) fn fourier_sum_direct(values: &[C64], x: Lin, u: Lin, kappa: f64) -> Vec<C64> {
    (0..u.count)
        .map(|j| {
            let uj = u.at(j);
            values
                .iter()
                .enumerate()
                .map(|(k, v)| v * cis(-2.0 * PI * kappa * x.at(k) * uj))
                .sum()
        })
        .collect()
}

/// Row-major 2-D FFT, unnormalized.
pub(crate) fn fft2(data: &mut [C64], rows: usize, cols: usize, inverse: bool) {
    let fr = plan(cols, inverse);
    for r in data.chunks_mut(cols) {
        fr.process(r);
    }
    let fc = plan(rows, inverse);
    let mut col = vec![C64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = data[r * cols + c];
        }
        fc.process(&mut col);
        for r in 0..rows {
            data[r * cols + c] = col[r];
        }
    }
}

pub(crate) fn good_size(n: usize) -> usize {
    // Smallest 2^a·3^b·5^c at least n.
    let mut best = n.next_power_of_two();
    let mut p2 = 1usize;
    while p2 < best {
        let mut p3 = p2;
        while p3 < best {
            let mut p5 = p3;
            while p5 < best {
                if p5 >= n {
                    best = p5;
                }
                p5 *= 5;
            }
            p3 *= 3;
        }
        p2 *= 2;
    }
    best
}

/// Row-major array with its shape.
#[derive(Debug, Clone)]
pub(crate) struct Array2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl Array2 {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    fn padded(&self, rows: usize, cols: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); rows * cols];
        for r in 0..self.rows {
            out[r * cols..r * cols + self.cols]
                .copy_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        out
    }
}

/// Spectrum of `b` zero-padded to a fixed FFT shape, reusable across many `a`.
pub(crate) struct PaddedSpectrum {
    pub rows: usize,
    pub cols: usize,
    pub spec: Vec<C64>,
}

impl PaddedSpectrum {
    pub fn new(b: &Array2, rows: usize, cols: usize) -> Self {
        let mut spec = b.padded(rows, cols);
        fft2(&mut spec, rows, cols, false);
        Self { rows, cols, spec }
    }
}

pub(crate) fn conv_shape(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
    (good_size(a.0 + b.0 - 1), good_size(a.1 + b.1 - 1))
}

/// Window of the full linear convolution `a ∗ b`: entry `(i, j)` of the result
/// is `full[i + off.0][j + off.1]` for `i < out.0`, `j < out.1`.
pub(crate) fn linear_convolve_window(
    a: &Array2,
    b: &PaddedSpectrum,
    off: (usize, usize),
    out: (usize, usize),
) -> Vec<C64> {
    let (rows, cols) = (b.rows, b.cols);
    let mut sa = a.padded(rows, cols);
    fft2(&mut sa, rows, cols, false);
    for (x, y) in sa.iter_mut().zip(&b.spec) {
        *x *= y;
    }
    fft2(&mut sa, rows, cols, true);
    let scale = 1.0 / (rows * cols) as f64;
    let mut res = Vec::with_capacity(out.0 * out.1);
    for i in 0..out.0 {
        for j in 0..out.1 {
            res.push(sa[(i + off.0) * cols + j + off.1] * scale);
        }
    }
    res
}

pub(crate) fn linear_convolve(a: &Array2, b: &Array2, off: (usize, usize), out: (usize, usize)) -> Vec<C64> {
    let (r, c) = conv_shape((a.rows, a.cols), (b.rows, b.cols));
    let sb = PaddedSpectrum::new(b, r, c);
    linear_convolve_window(a, &sb, off, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(n: usize) -> Vec<C64> {
        (0..n).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect()
    }

    fn max_err(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn czt_matches_direct_for_irrational_alpha() {
        let a = signal(37);
        let alpha = 0.0123456;
        let fast = czt(&a, alpha, 53);
        let slow: Vec<C64> = (0..53)
            .map(|j| (0..37).map(|k| a[k] * cis(-2.0 * PI * alpha * (k * j) as f64)).sum())
            .collect();
        assert!(max_err(&fast, &slow) < 1e-10);
    }

    #[test]
    fn czt_plain_fft_path() {
        let a = signal(16);
        for alpha in [1.0 / 32.0, -1.0 / 32.0] {
            let fast = czt(&a, alpha, 20);
            let slow: Vec<C64> = (0..20)
                .map(|j| (0..16).map(|k| a[k] * cis(-2.0 * PI * alpha * (k * j) as f64)).sum())
                .collect();
            assert!(max_err(&fast, &slow) < 1e-11);
        }
    }

    #[test]
    fn fourier_sum_matches_direct() {
        let v = signal(40);
        let x = Lin::new(-2.0, 0.1, 40);
        let u = Lin::new(3.0, -0.07, 31);
        let a = fourier_sum(&v, x, u, 0.7);
        let b = fourier_sum_direct(&v, x, u, 0.7);
        assert!(max_err(&a, &b) < 1e-10);
    }

    #[test]
    fn interp_hits_nodes_and_midpoints() {
        let g = Lin::new(-1.0, 0.5, 5);
        let v: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 0.0)).collect();
        assert_eq!(g.interp(&v, 0.0), C64::new(2.0, 0.0));
        assert!((g.interp(&v, 0.25) - C64::new(2.5, 0.0)).norm() < 1e-12);
        assert_eq!(g.interp(&v, 1.5), C64::new(0.0, 0.0));
        let r = Lin::new(1.0, -0.5, 5);
        assert!((r.interp(&v, 0.25) - C64::new(1.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn convolution_matches_direct() {
        let a = Array2::new(3, 4, signal(12));
        let b = Array2::new(5, 2, signal(10));
        let full = linear_convolve(&a, &b, (0, 0), (7, 5));
        for i in 0..7 {
            for j in 0..5 {
                let mut s = C64::new(0.0, 0.0);
                for p in 0..3 {
                    for q in 0..4 {
                        if i >= p && j >= q && i - p < 5 && j - q < 2 {
                            s += a.data[p * 4 + q] * b.data[(i - p) * 2 + j - q];
                        }
                    }
                }
                assert!((full[i * 5 + j] - s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn good_sizes() {
        assert_eq!(good_size(7), 8);
        assert_eq!(good_size(599), 600);
        assert_eq!(good_size(1001), 1024);
        assert_eq!(good_size(97), 100);
    }
}
